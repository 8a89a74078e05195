use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acp::{certificate_gap, AcpAggregator};
use crate::algorithms::{Algorithm, AlgorithmState};
use crate::oracle::ProblemOracles;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPolicy {
    Explicit(f64),
    /// `alpha = epsilon / (2 M)`.
    FromEpsilon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub alpha_policy: AlphaPolicy,
    pub max_iters: usize,
    /// Keep every `record_every`-th iteration (plus the first and last).
    pub record_every: usize,
    pub seed: u64,
    /// When false, `wall_ns` is written as 0 so traces are reproducible.
    pub record_wall_time: bool,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, epsilon: f64) -> Self {
        Self {
            algorithm,
            epsilon,
            alpha_policy: AlphaPolicy::FromEpsilon,
            max_iters: 100_000,
            record_every: 1,
            seed: 0,
            record_wall_time: true,
        }
    }

    /// The regularization weight this config prescribes for `problem`.
    ///
    /// With `M = 0` the regularizer vanishes on the domain and every weight
    /// is admissible, so the instance's own weight is kept.
    pub fn resolve_alpha(&self, problem: &ProblemOracles) -> Result<f64> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        match self.alpha_policy {
            AlphaPolicy::Explicit(a) if a > 0.0 && a.is_finite() => Ok(a),
            AlphaPolicy::Explicit(a) => Err(Error::invalid(
                "alpha",
                format!("must be positive, got {a}"),
            )),
            AlphaPolicy::FromEpsilon => {
                let m = problem.w_bound();
                if !m.is_finite() {
                    return Err(Error::invalid(
                        "alpha",
                        "epsilon policy needs a finite bound M",
                    ));
                }
                Ok(if m > 0.0 {
                    self.epsilon / (2.0 * m)
                } else {
                    problem.alpha()
                })
            }
        }
    }

    pub fn policy_label(&self, alpha: f64) -> String {
        match self.alpha_policy {
            AlphaPolicy::Explicit(_) => format!("explicit alpha={alpha:.16e}"),
            AlphaPolicy::FromEpsilon => format!("from_epsilon alpha=epsilon/(2M)={alpha:.16e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iter: usize,
    pub phi_at_test: f64,
    pub psi_at_dual: Option<f64>,
    pub cert_gap: Option<f64>,
    pub pd_gap: Option<f64>,
    pub wall_ns: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Certified,
    PdConverged,
    BudgetExhausted,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Certified => "certified",
            RunStatus::PdConverged => "pd_converged",
            RunStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub traces: Vec<IterationTrace>,
    pub status: RunStatus,
    pub alpha: f64,
    /// Metrics at the final iterate, recorded or not.
    pub last: IterationTrace,
    pub final_state: AlgorithmState,
}

impl RunOutcome {
    pub fn iterations(&self) -> usize {
        self.last.iter
    }
}

/// Objective and gap values at the current iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// Primal test point.
    pub test_point: Vec<f64>,
    pub phi: f64,
    pub psi: Option<f64>,
    pub cert_gap: Option<f64>,
    pub pd_gap: Option<f64>,
}

fn primal_gap(problem: &ProblemOracles, model: &AcpAggregator, u: &[f64]) -> Result<f64> {
    Ok(certificate_gap(model, problem, u, 0.0)?.gap)
}

fn maybe_psi(problem: &ProblemOracles, z: &[f64]) -> Result<Option<f64>> {
    if problem.supports_f_conj() {
        problem.psi_alpha(z).map(Some)
    } else {
        Ok(None)
    }
}

/// Test point, objectives and gaps of `state`.
///
/// Primal-certificate methods test `y_k` against their model; GCG tests
/// `x_k` with the single-cut dual model at `z_k`; GEM tests `-s` of its
/// aggregated dual model. Two-average methods report their model gap only as
/// a diagnostic.
pub fn metrics(state: &AlgorithmState, problem: &ProblemOracles) -> Result<Metrics> {
    let (test_point, dual_point, cert_gap) = match state {
        AlgorithmState::Mda(s) => (
            s.y.clone(),
            s.s.clone(),
            Some(primal_gap(problem, &s.acp, &s.y)?),
        ),
        AlgorithmState::Taa(s) => (
            s.y.clone(),
            s.s.clone(),
            Some(primal_gap(problem, &s.acp, &s.y)?),
        ),
        AlgorithmState::AggGcgPrimal(s) => {
            let gap = match &s.acp {
                Some(m) => Some(primal_gap(problem, m, &s.y)?),
                None => None,
            };
            (s.y.clone(), s.s.clone(), gap)
        }
        AlgorithmState::Gcg(s) => {
            let gap = certificate_gap(&s.model(problem), problem, &s.z, 0.0)?.gap;
            (s.x.clone(), s.z.clone(), Some(gap))
        }
        AlgorithmState::AggGcgDual(s) => {
            let gap = match &s.acp {
                Some(m) => Some(certificate_gap(m, problem, &s.z, 0.0)?.gap),
                None => None,
            };
            (s.v.clone(), s.z.clone(), gap)
        }
        AlgorithmState::Gem(s) => {
            let gap = certificate_gap(&s.dual_acp, problem, &s.z, 0.0)?.gap;
            (s.dual_acp.primal_point(problem), s.z.clone(), Some(gap))
        }
    };
    let phi = problem.phi_alpha(&test_point)?;
    let psi = maybe_psi(problem, &dual_point)?;
    Ok(Metrics {
        test_point,
        phi,
        pd_gap: psi.map(|p| phi + p),
        psi,
        cert_gap,
    })
}

/// Runs from the instance's default start.
pub fn run(problem: &ProblemOracles, config: &RunConfig) -> Result<RunOutcome> {
    run_from(problem, &problem.default_start(), config)
}

/// Iterates until the stopping rule of `config.algorithm` holds at
/// `epsilon / 2` or the budget runs out.
pub fn run_from(problem: &ProblemOracles, y0: &[f64], config: &RunConfig) -> Result<RunOutcome> {
    let alpha = config.resolve_alpha(problem)?;
    let problem = problem.with_alpha(alpha)?;
    let algorithm = config.algorithm;
    algorithm.check_compatible(&problem).map_err(|e| match e {
        Error::Unsupported(_) => e,
        other => Error::Incompatible {
            algorithm: algorithm.to_string(),
            reason: other.to_string(),
        },
    })?;
    if config.record_every == 0 {
        return Err(Error::invalid("record_every", "must be at least 1"));
    }
    let start = Instant::now();
    let target = 0.5 * config.epsilon;
    let mut state = AlgorithmState::init(algorithm, &problem, y0)?;
    let mut traces = Vec::new();
    loop {
        let k = state.iteration();
        let m = metrics(&state, &problem)?;
        let status = if algorithm.has_certificate() {
            m.cert_gap
                .filter(|g| *g <= target)
                .map(|_| RunStatus::Certified)
        } else {
            m.pd_gap
                .filter(|g| *g <= target)
                .map(|_| RunStatus::PdConverged)
        };
        let status = status.or((k >= config.max_iters).then_some(RunStatus::BudgetExhausted));
        let row = IterationTrace {
            iter: k,
            phi_at_test: m.phi,
            psi_at_dual: m.psi,
            cert_gap: m.cert_gap,
            pd_gap: m.pd_gap,
            wall_ns: if config.record_wall_time {
                start.elapsed().as_nanos() as u64
            } else {
                0
            },
        };
        if let Some(status) = status {
            traces.push(row.clone());
            return Ok(RunOutcome {
                traces,
                status,
                alpha,
                last: row,
                final_state: state,
            });
        }
        if k % config.record_every == 0 {
            traces.push(row);
        }
        state = state.step(&problem)?;
    }
}
