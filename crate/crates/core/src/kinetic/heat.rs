//! Exact spectral solution of ∂ₜρ = DΔρ on the periodic box.

use super::grid::SpatialField;
use crate::{Error, Result};

pub fn heat_solve(rho0: &SpatialField, d: f64, t: f64) -> Result<SpatialField> {
    if !(d > 0.0) || !(t >= 0.0) {
        return Err(Error::domain(format!(
            "heat flow needs D > 0 and t >= 0, got D={d}, t={t}"
        )));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    Ok(rho0.apply_multiplier(|a, b| (-d * (a * a + b * b) * t).exp()))
}
