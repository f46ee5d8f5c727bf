//! The microscopic model: a Poisson field of small repulsive disks and the
//! exact Hamiltonian flow through it.

mod dynamics;
mod field;
mod pathology;
mod tube;

pub use dynamics::{
    evolve, evolve_with, EventKind, EvolveOptions, ParticleState, Pathologies, TrajectoryEvent, TrajectoryLog,
    DEFAULT_EVENT_CAP, TANGENCY_TOL,
};
pub use field::{
    cell_size, obstacle_intensity, sample_field, FieldConfig, Grid, LazyPoissonField, ObstacleField, ObstacleSource,
    DEFAULT_MEMORY_CAP,
};
pub use pathology::{
    fit_decay_slopes, markov_construction_flags, pathology_rates, DecaySlopes, HorizonMode, PathologyConfig,
    PathologyRow, PathologySource,
};
pub use tube::{polyline_tube_area, tube_area, TubeCaps};
