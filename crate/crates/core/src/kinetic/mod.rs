//! Deterministic solvers on a periodic box: the kinetic equation with a
//! rotation-invariant collision operator, the heat equation, and the
//! Hilbert-expansion and relaxation diagnostics.

mod evolve;
mod field;
mod grid;
mod heat;
mod hilbert;
mod relaxation;
mod snapshot;
mod spectrum;

pub use evolve::{advection, apply_collision, evolve_kinetic, evolve_scaled, max_stable_dt, Scaling};
pub use field::AngularField;
pub use grid::{GridSpec, SpatialField};
pub use heat::heat_solve;
pub use hilbert::{hilbert_check, HilbertReport, SOLVABILITY_TOL};
pub use relaxation::{relaxation_check, RelaxationReport, PROBE_EXPONENT};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, MAGIC, VERSION};
pub use spectrum::{
    boltzmann_spectrum, landau_spectrum, law_spectrum, renormalized_boltzmann_spectrum, renormalized_landau_spectrum,
    CollisionSpectrum, SpectrumKind,
};
