//! Concrete problem families and a grid-search reference minimizer.

pub mod brute;
pub mod fisher;
pub mod game;
pub mod quadbox;
pub mod spec;

pub use brute::{brute_force_min, GridMinimum, GridObjective};
pub use fisher::{fisher_smoothness, FisherData, FisherMarketInstance};
pub use game::MatrixGameInstance;
pub use quadbox::QuadBoxToy;
pub use spec::{BuiltInstance, InstanceKind, InstanceSpec};
