//! Running methods with trace recording, and verification suites.

pub mod report;
pub mod run;
pub mod suites;

pub use report::{Check, VerificationReport};
pub use run::{
    metrics, run, run_from, AlphaPolicy, IterationTrace, Metrics, RunConfig, RunOutcome, RunStatus,
};
pub use suites::{
    check_all_rates, check_correspondence, check_correspondence_one_avg,
    check_correspondence_three_avg, check_correspondence_two_avg, check_identities, check_rates,
    check_soundness, check_three_points, three_points_slack, wolfe_gaps, CorrespondenceOptions,
};
