//! Error type shared by every module.

use thiserror::Error;

use crate::medium::TrajectoryLog;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scattering model: {0}")]
    InvalidModel(String),

    #[error(
        "quadrature did not reach the error target: estimate {estimate:e} with error {error:e} \
         after {subdivisions} subdivisions"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("expected obstacle count {expected:.0} exceeds the memory cap of {cap} obstacles")]
    MemoryCap { expected: f64, cap: usize },

    #[error("event cap of {cap} events exceeded at t = {time}")]
    EventCap {
        cap: usize,
        time: f64,
        partial: Box<TrajectoryLog>,
    },

    #[error("trajectory left the sampled domain at t = {time}")]
    OutOfDomain { time: f64 },

    #[error("time step violates the stability bound: {0}")]
    Cfl(String),

    #[error("solvability condition violated: residual {residual:e} exceeds {tolerance:e}")]
    Solvability { residual: f64, tolerance: f64 },

    #[error(
        "Green-Kubo estimates disagree: spectral {spectral}, autocorrelation {autocorrelation} \
         (standard error {mc_error})"
    )]
    GreenKubo {
        spectral: f64,
        autocorrelation: f64,
        mc_error: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config hash mismatch: table was produced by {table}, replay config hashes to {config}")]
    HashMismatch { table: String, config: String },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Annotates an error with the pipeline stage it came from.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
