//! Strang splitting of free transport and collisions, each solved exactly.
//!
//! For a spatial mode with wave vector κ = |κ|(cos ψ, sin ψ), transport acts on
//! the harmonics through v·κ = |v||κ|cos(θ − ψ), which couples k to k ± 1.
//! After the gauge change g_k = e^{ikψ}f_k the coupling matrix is the
//! tridiagonal T with unit off-diagonals; truncating at |k| = K leaves it
//! diagonalised by the discrete sine transform, so the sub-flow is exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::AngularField;
use super::grid::GridSpec;
use super::spectrum::CollisionSpectrum;
use crate::{Error, Result};

/// Which time and collision scaling a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scaling {
    /// ∂ₜf + v·∇f = η²Lf. With L the unrenormalized operator, η² plays the
    /// role of |log ε|.
    Item1 {
        eta: f64,
    },
    /// ∂ₜf + v·∇f = Lf.
    Item2,
    /// ∂ₜf + ηv·∇f = η²Lf.
    Item3 {
        eta: f64,
    },
    Custom {
        transport: f64,
        collision: f64,
    },
}

impl Scaling {
    /// (transport scale, collision scale).
    pub fn scales(&self) -> (f64, f64) {
        match *self {
            Scaling::Item1 { eta } => (1.0, eta * eta),
            Scaling::Item2 => (1.0, 1.0),
            Scaling::Item3 { eta } => (eta, eta * eta),
            Scaling::Custom { transport, collision } => (transport, collision),
        }
    }
}

/// Largest admissible step for the given scales.
pub fn max_stable_dt(
    grid: &GridSpec,
    speed: f64,
    spectrum: &CollisionSpectrum,
    harmonics: usize,
    transport: f64,
    collision: f64,
) -> f64 {
    let a = transport.abs() * speed * grid.max_wavenumber();
    let b = collision.abs() * spectrum.lambda(harmonics as i64).abs();
    0.5 / a.max(b).max(f64::MIN_POSITIVE)
}

struct Transport {
    n: usize,
    sine: Vec<f64>,
    eig: Vec<f64>,
}

impl Transport {
    fn new(harmonics: usize) -> Self {
        let n = 2 * harmonics + 1;
        let h = PI / (n + 1) as f64;
        let norm = (2.0 / (n + 1) as f64).sqrt();
        let sine = (0..n * n)
            .map(|i| norm * (((i / n + 1) * (i % n + 1)) as f64 * h).sin())
            .collect();
        let eig = (0..n).map(|m| 2.0 * ((m + 1) as f64 * h).cos()).collect();
        Transport { n, sine, eig }
    }

    fn apply_sine(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.n;
        for (i, d) in dst.iter_mut().enumerate() {
            let row = &self.sine[i * n..(i + 1) * n];
            *d = row.iter().zip(src).map(|(&s, &c)| c * s).sum();
        }
    }

    /// Advances every spatial mode of `field` by e^{−τ·s·v·∇}.
    fn step(&self, field: &mut AngularField, tau: f64, scale: f64) {
        let grid = field.grid;
        let speed = field.speed;
        let kk = field.harmonics as i64;
        let w = field.width();
        field.coeffs.par_chunks_mut(w).enumerate().for_each(|(s, f)| {
            let (k1, k2) = grid.derivative_wave_vector(s);
            let kappa = k1.hypot(k2);
            if kappa == 0.0 {
                return;
            }
            let psi = k2.atan2(k1);
            let a = 0.5 * scale * speed * kappa * tau;
            let mut g: Vec<Complex64> = (0..w)
                .map(|j| f[j] * Complex64::from_polar(1.0, (j as i64 - kk) as f64 * psi))
                .collect();
            let mut h = vec![Complex64::default(); w];
            self.apply_sine(&g, &mut h);
            for (m, x) in h.iter_mut().enumerate() {
                *x *= Complex64::from_polar(1.0, -a * self.eig[m]);
            }
            self.apply_sine(&h, &mut g);
            for j in 0..w {
                f[j] = g[j] * Complex64::from_polar(1.0, -((j as i64 - kk) as f64) * psi);
            }
        });
    }
}

fn collide(field: &mut AngularField, factors: &[f64]) {
    let w = field.width();
    field.coeffs.par_chunks_mut(w).for_each(|f| {
        for (c, &m) in f.iter_mut().zip(factors) {
            *c *= m;
        }
    });
}

/// Advances f by time `t` with steps no longer than `dt`.
///
/// Refuses to step when dt·|s_T|·|v|·κ_max ≥ ½ or dt·|s_C|·|λ_K| ≥ ½.
pub fn evolve_kinetic(
    field: &AngularField,
    spectrum: &CollisionSpectrum,
    transport_scale: f64,
    collision_scale: f64,
    t: f64,
    dt: f64,
) -> Result<AngularField> {
    if !(t >= 0.0) || !(dt > 0.0) {
        return Err(Error::domain(format!("need t >= 0 and dt > 0, got t={t}, dt={dt}")));
    }
    if spectrum.harmonics() < field.harmonics {
        return Err(Error::Shape(format!(
            "spectrum resolves {} harmonics but the field has {}",
            spectrum.harmonics(),
            field.harmonics
        )));
    }
    let mut out = field.clone();
    if t == 0.0 {
        return Ok(out);
    }
    let steps = (t / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let cfl_t = h * transport_scale.abs() * field.speed * field.grid.max_wavenumber();
    if cfl_t >= 0.5 {
        return Err(Error::Cfl(format!("transport number {cfl_t:.3} >= 0.5 (dt = {h})")));
    }
    let cfl_c = h * collision_scale.abs() * spectrum.lambda(field.harmonics as i64).abs();
    if cfl_c >= 0.5 {
        return Err(Error::Cfl(format!("collision number {cfl_c:.3} >= 0.5 (dt = {h})")));
    }

    let kk = field.harmonics as i64;
    let factors: Vec<f64> = (-kk..=kk)
        .map(|k| (collision_scale * spectrum.lambda(k) * h).exp())
        .collect();
    let transport = Transport::new(field.harmonics);
    let moving = transport_scale != 0.0;
    if moving {
        transport.step(&mut out, 0.5 * h, transport_scale);
    }
    for i in 0..steps {
        collide(&mut out, &factors);
        if moving {
            let tau = if i + 1 == steps { 0.5 * h } else { h };
            transport.step(&mut out, tau, transport_scale);
        }
    }
    Ok(out)
}

/// `evolve_kinetic` with the scales of `scaling`.
pub fn evolve_scaled(
    field: &AngularField,
    spectrum: &CollisionSpectrum,
    scaling: Scaling,
    t: f64,
    dt: f64,
) -> Result<AngularField> {
    let (a, b) = scaling.scales();
    evolve_kinetic(field, spectrum, a, b, t, dt)
}

/// v·∇f, truncated to the harmonics of `f`.
pub fn advection(f: &AngularField) -> AngularField {
    let mut out = AngularField::zeros(f.grid, f.harmonics, f.speed);
    let kk = f.harmonics as i64;
    let half = 0.5 * f.speed;
    for s in 0..f.grid.len() {
        let (k1, k2) = f.grid.derivative_wave_vector(s);
        // (∂₁ ∓ i∂₂) on e^{iκ·x}.
        let minus = Complex64::new(k2, k1);
        let plus = Complex64::new(-k2, k1);
        for k in -kk..=kk {
            let v = half * (minus * f.get(s, k - 1) + plus * f.get(s, k + 1));
            let i = out.index(s, k);
            out.coeffs[i] = v;
        }
    }
    out
}

/// Applies the collision operator: harmonic k is multiplied by λ_k.
pub fn apply_collision(f: &AngularField, spectrum: &CollisionSpectrum) -> AngularField {
    let mut out = f.clone();
    let kk = f.harmonics as i64;
    for s in 0..f.grid.len() {
        for k in -kk..=kk {
            let i = out.index(s, k);
            out.coeffs[i] *= spectrum.lambda(k);
        }
    }
    out
}
