//! Numerical laboratory for a test particle moving through a Poisson field of
//! soft circular barriers in the plane.
//!
//! The crate is organised by physical layer:
//!
//! * [`scattering`]: exact single-barrier scattering (refractive index, deflection
//!   map, cross section, local Snell step).
//! * [`medium`]: Poisson obstacle fields, the exact event-driven Hamiltonian flow
//!   and statistics of pathological configurations.
//! * [`markov`]: the velocity-jump process obtained when collisions are treated as
//!   instantaneous and independent.
//! * [`coefficients`]: the diffusion coefficient of the collision operator and the
//!   Green–Kubo spatial diffusivity.
//! * [`kinetic`]: Fourier-spectral solvers for the Boltzmann, Landau and heat
//!   equations on a periodic box.
//! * [`harness`]: configuration, experiment pipelines, distances and tables.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kinetic;
pub mod markov;
pub mod medium;
pub mod quadrature;
pub mod rng;
pub mod scattering;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::Vec2;
pub use scattering::{Deflection, Mode, ScatteringLaw, ScatteringModel};
