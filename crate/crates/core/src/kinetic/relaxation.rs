//! Relaxation of g_η towards its angular average under the rescaled equation
//! ∂ₜg + ηv·∇g = η²ℒg.

use serde::{Deserialize, Serialize};

use super::evolve::evolve_kinetic;
use super::field::AngularField;
use super::spectrum::CollisionSpectrum;
use crate::{Error, Result};

/// Exponent ω of the probe time t_η = η^{−ω}.
pub const PROBE_EXPONENT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub eta: f64,
    /// −λ₁.
    pub gap: f64,
    pub times: Vec<f64>,
    /// ‖g_η(t) − ⟨g_η(t)⟩‖ at each time.
    pub distances: Vec<f64>,
    pub initial_distance: f64,
    /// e^{−η²λt}‖R(0)‖ at each time.
    pub free_decay: Vec<f64>,
    /// Smallest C with ‖R(t)‖ ≤ e^{−η²λt}‖R(0)‖ + (C/η)(1 − e^{−η²λt}) on the grid.
    pub envelope_constant: f64,
    pub probe_time: f64,
    /// ‖g_η(t_η) − ⟨f₀⟩‖.
    pub probe_distance: f64,
}

pub fn relaxation_check(
    f0: &AngularField,
    eta: f64,
    spectrum: &CollisionSpectrum,
    t_grid: &[f64],
    dt: f64,
) -> Result<RelaxationReport> {
    if !(eta > 0.0) {
        return Err(Error::domain("eta must be positive"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::domain("time grid must be nonnegative and strictly increasing"));
    }
    let (ts, cs) = (eta, eta * eta);
    let gap = spectrum.gap();
    let r0 = f0.anisotropic_norm();

    let mut g = f0.clone();
    let mut now = 0.0;
    let mut distances = Vec::with_capacity(t_grid.len());
    let mut free_decay = Vec::with_capacity(t_grid.len());
    let mut envelope: f64 = 0.0;
    for &t in t_grid {
        if t > now {
            g = evolve_kinetic(&g, spectrum, ts, cs, t - now, dt.min(t - now))?;
            now = t;
        }
        let d = g.anisotropic_norm();
        let decay = (-cs * gap * t).exp();
        distances.push(d);
        free_decay.push(decay * r0);
        if t > 0.0 {
            envelope = envelope.max(eta * (d - decay * r0) / (1.0 - decay));
        }
    }

    let probe_time = eta.powf(-PROBE_EXPONENT);
    let probe_dt = dt.min(probe_time / 16.0);
    let probe = evolve_kinetic(f0, spectrum, ts, cs, probe_time, probe_dt)?;
    let probe_distance = probe.difference(&f0.angular_average())?.l2_norm();

    Ok(RelaxationReport {
        eta,
        gap,
        times: t_grid.to_vec(),
        distances,
        initial_distance: r0,
        free_decay,
        envelope_constant: envelope.max(0.0),
        probe_time,
        probe_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::spectrum::landau_spectrum;
    use crate::kinetic::GridSpec;

    #[test]
    fn angle_independent_data_stays_isotropic() {
        let g = GridSpec::new(4.0, 8).unwrap();
        let flat = AngularField::from_fn(g, 4, 1.0, |_, _| 3.0);
        let spec = landau_spectrum(1.0, 1.0, 4).unwrap();
        let r = relaxation_check(&flat, 4.0, &spec, &[0.0, 0.01, 0.02], 1e-3).unwrap();
        assert!(r.distances.iter().all(|&d| d < 1e-14));
    }

    #[test]
    fn single_mode_decays_at_eta_squared_rate() {
        let g = GridSpec::new(4.0, 8).unwrap();
        let f = AngularField::from_fn(g, 4, 1.0, |_, t| 1.0 + t.cos());
        let spec = landau_spectrum(1.0, 1.0, 4).unwrap();
        let eta = 3.0;
        let r = relaxation_check(&f, eta, &spec, &[0.05, 0.1], 1e-3).unwrap();
        for (&t, &d) in r.times.iter().zip(&r.distances) {
            let expect = r.initial_distance * (-eta * eta * 0.5 * t).exp();
            assert!((d - expect).abs() < 1e-12 * expect);
        }
    }
}
