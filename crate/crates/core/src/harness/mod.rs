//! Experiment orchestration: TOML configs, convergence tables, distribution
//! metrics and the pipelines that tie the other modules together.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind, Initial, Io, Numerics, Physics};
pub use experiment::{run_and_persist, run_experiment, DIFFUSIVE_COLUMNS, ITEM3_TIMES};
pub use metrics::{compare_distributions, histogram_error, Bootstrap, Distance, Distribution, Metric};
pub use table::{ConvergenceTable, NONDETERMINISTIC_COLUMNS};
