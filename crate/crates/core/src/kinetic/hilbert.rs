//! The first terms of the Hilbert expansion g = g⁽⁰⁾ + g⁽¹⁾/η + g⁽²⁾/η² of the
//! rescaled equation ∂ₜg + ηv·∇g = η²ℒg, and the diffusion coefficient its
//! solvability condition forces.

use serde::Serialize;

use super::evolve::{advection, apply_collision};
use super::field::AngularField;
use super::grid::SpatialField;
use super::spectrum::CollisionSpectrum;
use crate::coefficients::AngularGenerator;
use crate::{Error, Result};

/// Tolerance on the relative solvability residual.
pub const SOLVABILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HilbertReport {
    pub eta: f64,
    /// ‖v·∇g⁽⁰⁾ − ℒg⁽¹⁾‖.
    pub first_order_residual: f64,
    /// D such that ⟨v·∇g⁽¹⁾⟩ = −DΔg⁽⁰⁾, by least squares; `None` when Δg⁽⁰⁾ = 0.
    pub d_extracted: Option<f64>,
    /// D of the generator, |v|²/(2|λ₁|).
    pub d_generator: f64,
    /// ‖∂ₜg⁽⁰⁾ + ⟨v·∇g⁽¹⁾⟩‖/‖∂ₜg⁽⁰⁾‖ with ∂ₜg⁽⁰⁾ = D_generator·Δg⁽⁰⁾.
    pub solvability_residual: f64,
    pub g1_norm: f64,
    pub g2_norm: f64,
    #[serde(skip)]
    pub g1: AngularField,
    #[serde(skip)]
    pub g2: AngularField,
}

/// Inverts the collision operator on the k ≠ 0 harmonics; the k = 0 part of
/// the input is discarded.
fn invert_collision(f: &AngularField, spectrum: &CollisionSpectrum) -> AngularField {
    let mut out = f.clone();
    let kk = f.harmonics as i64;
    for s in 0..f.grid.len() {
        for k in -kk..=kk {
            let i = out.index(s, k);
            out.coeffs[i] = if k == 0 {
                Default::default()
            } else {
                out.coeffs[i] / spectrum.lambda(k)
            };
        }
    }
    out
}

pub fn hilbert_check(g0: &SpatialField, eta: f64, speed: f64, spectrum: &CollisionSpectrum) -> Result<HilbertReport> {
    if spectrum.harmonics() < 3 {
        return Err(Error::Shape("the expansion needs harmonics up to |k| = 3".into()));
    }
    if !(spectrum.gap() > 0.0) {
        return Err(Error::domain("collision operator has no spectral gap"));
    }
    let spectrum = spectrum.truncated(3)?;
    let f0 = AngularField::from_spatial(g0, 3, speed);

    let drift0 = advection(&f0);
    let g1 = invert_collision(&drift0, &spectrum);
    let first_order_residual = drift0.difference(&apply_collision(&g1, &spectrum))?.l2_norm();

    let d_generator = AngularGenerator {
        coefficient: spectrum.gap(),
    }
    .spectral_d(speed);
    let drift1 = advection(&g1);
    let mean_drift = drift1.spatial_marginal();
    let lap = g0.laplacian();
    let lap_norm2: f64 = lap.values.iter().map(|v| v * v).sum();
    let d_extracted = (lap_norm2 > 0.0).then(|| {
        -mean_drift
            .values
            .iter()
            .zip(&lap.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / lap_norm2
    });

    let dt_g0 = SpatialField {
        grid: g0.grid,
        values: lap.values.iter().map(|v| d_generator * v).collect(),
    };
    let source = SpatialField {
        grid: g0.grid,
        values: dt_g0
            .values
            .iter()
            .zip(&mean_drift.values)
            .map(|(a, b)| a + b)
            .collect(),
    };
    let scale = dt_g0.l2_norm();
    let solvability_residual = if scale > 0.0 {
        source.l2_norm() / scale
    } else {
        source.l2_norm()
    };
    if solvability_residual > SOLVABILITY_TOL {
        return Err(Error::Solvability {
            residual: solvability_residual,
            tolerance: SOLVABILITY_TOL,
        });
    }

    // ℒg⁽²⁾ = ∂ₜg⁽⁰⁾ + v·∇g⁽¹⁾; the k = 0 part vanishes by solvability.
    let g2 = invert_collision(&drift1, &spectrum);
    Ok(HilbertReport {
        eta,
        first_order_residual,
        d_extracted,
        d_generator,
        solvability_residual,
        g1_norm: g1.l2_norm(),
        g2_norm: g2.l2_norm(),
        g1,
        g2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::spectrum::landau_spectrum;
    use crate::kinetic::GridSpec;
    use num_complex::Complex64;
    use std::f64::consts::TAU;

    #[test]
    fn constant_density_is_trivial() {
        let g = GridSpec::new(4.0, 8).unwrap();
        let rho = SpatialField::from_fn(g, |_| 2.0);
        let r = hilbert_check(&rho, 10.0, 1.0, &landau_spectrum(1.0, 1.0, 3).unwrap()).unwrap();
        assert_eq!(r.g1_norm, 0.0);
        assert_eq!(r.g2_norm, 0.0);
        assert_eq!(r.first_order_residual, 0.0);
        assert!(r.d_extracted.is_none());
    }

    #[test]
    fn cosine_density_closed_form() {
        let (mu, v, l) = (1.5, 1.2, 4.0);
        let g = GridSpec::new(l, 16).unwrap();
        let k = TAU / l;
        let rho = SpatialField::from_fn(g, |p| (k * p.x).cos());
        let r = hilbert_check(&rho, 10.0, v, &landau_spectrum(mu, v, 3).unwrap()).unwrap();
        assert!(r.first_order_residual < 1e-10);
        // g⁽¹⁾ on harmonic ±1 is −(|v|⁴/μ)(∂₁ ∓ i∂₂)g⁽⁰⁾.
        let c = rho.modes()[1];
        let expect = -(v.powi(4) / mu) * Complex64::new(0.0, k) * c;
        assert!((r.g1.get(1, 1) - expect).norm() < 1e-12);
        assert!((r.g1.get(1, -1) - expect).norm() < 1e-12);
        assert!((r.d_extracted.unwrap() - v.powi(5) / mu).abs() < 1e-10 * v.powi(5) / mu);
    }
}
