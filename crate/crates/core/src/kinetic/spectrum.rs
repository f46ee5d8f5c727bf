//! Eigenvalues of rotation-invariant collision operators on the circle.
//!
//! Both the linear Boltzmann operator and the Landau operator commute with
//! rotations, so each angular harmonic e^{ikθ} is an eigenfunction.

use serde::{Deserialize, Serialize};

use crate::coefficients::branch_integrals;
use crate::quadrature::{integrate, QuadOptions};
use crate::scattering::{ScatteringLaw, ScatteringModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    BoltzmannEps,
    Landau,
    RenormalizedLandau,
    /// Boltzmann operator of an arbitrary deflection law.
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionSpectrum {
    pub kind: SpectrumKind,
    /// λ_k for k = 0…K.
    pub eigenvalues: Vec<f64>,
}

impl CollisionSpectrum {
    pub fn harmonics(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    /// λ_k with λ_{−k} = λ_k.
    pub fn lambda(&self, k: i64) -> f64 {
        self.eigenvalues[k.unsigned_abs() as usize]
    }

    /// −λ₁, the spectral gap.
    pub fn gap(&self) -> f64 {
        -self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    /// Same operator multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        CollisionSpectrum {
            kind: self.kind,
            eigenvalues: self.eigenvalues.iter().map(|l| l * factor).collect(),
        }
    }

    /// Green–Kubo coefficient D = |v|²/(2|λ₁|) of the angular process this
    /// operator generates.
    pub fn diffusion_coefficient(&self, speed: f64) -> f64 {
        speed * speed / (2.0 * self.gap())
    }

    /// The first `harmonics + 1` eigenvalues.
    pub fn truncated(&self, harmonics: usize) -> Result<Self> {
        if harmonics > self.harmonics() {
            return Err(Error::Shape(format!(
                "spectrum resolves {} harmonics, {harmonics} requested",
                self.harmonics()
            )));
        }
        Ok(CollisionSpectrum {
            kind: self.kind,
            eigenvalues: self.eigenvalues[..=harmonics].to_vec(),
        })
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("at least one harmonic is required"));
    }
    Ok(())
}

/// λ_k = μ|v|ε^{−2α}∫_{−1}^{1}(cos kθ(ρ) − 1)dρ.
pub fn boltzmann_spectrum(model: &ScatteringModel, mu: f64, harmonics: usize) -> Result<CollisionSpectrum> {
    check_k(harmonics)?;
    let scale = mu * model.speed * model.coupling_scale();
    let mut eigenvalues = vec![0.0];
    for k in 1..=harmonics {
        let kf = k as f64;
        // cos kθ − 1 = −2sin²(kθ/2) avoids cancellation at small θ.
        let b = branch_integrals(model, |t| -2.0 * (0.5 * kf * t).sin().powi(2))
            .map_err(|e| e.at_stage("boltzmann_spectrum"))?;
        eigenvalues.push(2.0 * scale * b.total());
    }
    Ok(CollisionSpectrum {
        kind: SpectrumKind::BoltzmannEps,
        eigenvalues,
    })
}

/// λ_k = rate·∫_{−1}^{1}(cos kθ(ρ) − 1)dρ for any odd deflection law, where
/// `rate` is the collision frequency per unit impact parameter.
pub fn law_spectrum<L: ScatteringLaw>(law: &L, rate: f64, harmonics: usize) -> Result<CollisionSpectrum> {
    check_k(harmonics)?;
    let mut points = vec![0.0];
    points.extend(law.breakpoints());
    points.push(1.0);
    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-10,
        max_subdivisions: 5000,
    };
    let mut eigenvalues = vec![0.0];
    for k in 1..=harmonics {
        let kf = k as f64;
        let q = integrate(
            |r| -2.0 * (0.5 * kf * law.deflection_angle(r)).sin().powi(2),
            &points,
            opts,
        )
        .map_err(|e| e.at_stage("law_spectrum"))?;
        eigenvalues.push(2.0 * rate * q.value);
    }
    Ok(CollisionSpectrum {
        kind: SpectrumKind::Tabulated,
        eigenvalues,
    })
}

/// The operator with the extra 1/|log ε|.
pub fn renormalized_boltzmann_spectrum(
    model: &ScatteringModel,
    mu: f64,
    harmonics: usize,
) -> Result<CollisionSpectrum> {
    Ok(boltzmann_spectrum(model, mu, harmonics)?.scaled(1.0 / model.log_scale()))
}

/// (μ/2|v|)Δ on the circle of radius |v|: λ_k = −μk²/(2|v|³).
pub fn landau_spectrum(mu: f64, speed: f64, harmonics: usize) -> Result<CollisionSpectrum> {
    check_k(harmonics)?;
    Ok(CollisionSpectrum {
        kind: SpectrumKind::Landau,
        eigenvalues: (0..=harmonics)
            .map(|k| -0.5 * mu / speed * (k * k) as f64 / (speed * speed))
            .collect(),
    })
}

/// B·Δ on the circle of radius |v|: λ_k = −Bk²/|v|².
pub fn renormalized_landau_spectrum(b: f64, speed: f64, harmonics: usize) -> Result<CollisionSpectrum> {
    check_k(harmonics)?;
    Ok(CollisionSpectrum {
        kind: SpectrumKind::RenormalizedLandau,
        eigenvalues: (0..=harmonics).map(|k| -b * (k * k) as f64 / (speed * speed)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn law_spectrum_matches_model_spectrum() {
        let m = ScatteringModel::from_refractive_index(0.8, 1.0).unwrap();
        let direct = boltzmann_spectrum(&m, 1.0, 3).unwrap();
        let generic = law_spectrum(&m, m.speed * m.coupling_scale(), 3).unwrap();
        for k in 1..=3 {
            assert!((direct.lambda(k) / generic.lambda(k) - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn landau_k_squared_law() {
        let s = landau_spectrum(1.3, 0.7, 4).unwrap();
        assert_eq!(s.lambda(0), 0.0);
        assert!((s.lambda(2) / s.lambda(1) - 4.0).abs() < 1e-15);
        assert_eq!(s.lambda(-3), s.lambda(3));
    }

    #[test]
    fn transparent_model_has_zero_spectrum() {
        let m = ScatteringModel::new(1e-3, 0.1, 0.0, 1.0).unwrap();
        let s = boltzmann_spectrum(&m, 1.0, 3).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| l == 0.0));
    }
}
