//! Transport coefficients: the Landau coefficient B̃(ε) by branch-split
//! adaptive quadrature, its decomposition into the dominant logarithmic part
//! and the boundary-layer remainders, and the spatial diffusion coefficient D
//! by two independent routes.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quadrature::{graded_towards, integrate, QuadOptions};
use crate::rng::stream_rng;
use crate::scattering::ScatteringModel;
use crate::stats::{fit_line, Moments};
use crate::{Error, Result};

const GRADING_LEVELS: usize = 12;

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-12,
        max_subdivisions: 5000,
    }
}

/// ∫ g(θ(ρ)) dρ over [0, n_ε] and [n_ε, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchIntegrals {
    pub transmitted: f64,
    pub reflected: f64,
    pub abs_error: f64,
}

impl BranchIntegrals {
    pub fn total(&self) -> f64 {
        self.transmitted + self.reflected
    }
}

fn theta(model: &ScatteringModel, rho: f64) -> f64 {
    model
        .scattering_angle(rho.clamp(0.0, 1.0))
        .map(|d| d.theta)
        .unwrap_or(0.0)
}

fn boundary_hint(model: &ScatteringModel) -> f64 {
    let n = model.n_eps();
    let d = default_delta(model.epsilon, model.alpha, model.alpha / 4.0);
    (n * d).max(1e-3 * (1.0 - n))
}

/// Integrates g∘θ over both branches, grading the mesh into the boundary
/// layer just below ρ = n_ε where θ has an infinite slope.
pub fn branch_integrals<G: Fn(f64) -> f64>(model: &ScatteringModel, g: G) -> Result<BranchIntegrals> {
    let n = model.n_eps().min(1.0);
    let t = integrate(
        |r| g(theta(model, r)),
        &graded_towards(0.0, n, boundary_hint(model), GRADING_LEVELS),
        quad_opts(),
    )?;
    let r = integrate(|r| g(theta(model, r)), &[n, 1.0], quad_opts())?;
    Ok(BranchIntegrals {
        transmitted: t.value,
        reflected: r.value,
        abs_error: t.abs_error + r.abs_error,
    })
}

/// δ = ε^α/|log ε|^γ.
pub fn default_delta(epsilon: f64, alpha: f64, gamma: f64) -> f64 {
    epsilon.powf(alpha) / epsilon.ln().abs().powf(gamma)
}

/// The pieces of ε^{−2α}∫₀¹θ²dρ, split at ρ = n_ε(1 − δ) and ρ = n_ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixTerms {
    pub gamma: f64,
    pub delta: f64,
    /// Closed form of ε^{−2α}(1−n)²/n²∫₀^{n(1−δ)}ρ²/(1−ρ²)dρ.
    pub a1: f64,
    /// The same integral by quadrature.
    pub a1_quadrature: f64,
    /// A₁·2|v|⁴/(α|log ε|), which tends to 1.
    pub a1_ratio: f64,
    /// The remainder bound (ε^{−2α}/4)∫₀^{n(1−δ)}(ρ/n)²(1−ρ²/n²)^{−3}(ρ/n − ρ)⁴dρ.
    pub a2: f64,
    /// A₂δ²/ε^{2α}.
    pub a2_scaled: f64,
    /// ε^{−2α}∫₀^{n(1−δ)}θ²dρ.
    pub a_exact: f64,
    /// ε^{−2α}∫_{n(1−δ)}^{n}θ²dρ.
    pub b_term: f64,
    /// ε^{−2α}∫_{n}^{1}θ²dρ.
    pub reflected: f64,
    pub a2_over_a1: f64,
    pub b_over_a1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub epsilon: f64,
    pub alpha: f64,
    pub mu: f64,
    pub speed: f64,
    pub phi0: f64,
    /// με^{−2α}|v|∫₀¹θ²dρ.
    pub b_tilde: f64,
    pub b_renormalized: f64,
    pub quadrature_error: f64,
    pub split_point: f64,
    pub integrals: BranchIntegrals,
    /// Absent for a transparent or attractive barrier.
    pub appendix_terms: Option<AppendixTerms>,
}

/// B̃(ε) for the unit barrier φ₀ = 1.
pub fn compute_b(epsilon: f64, alpha: f64, mu: f64, speed: f64) -> Result<CoefficientReport> {
    let model = ScatteringModel::new(epsilon, alpha, 1.0, speed)?;
    compute_b_for(&model, mu, alpha / 4.0)
}

pub fn compute_b_for(model: &ScatteringModel, mu: f64, gamma: f64) -> Result<CoefficientReport> {
    let integrals = branch_integrals(model, |t| t * t).map_err(|e| e.at_stage("b_tilde"))?;
    let scale = mu * model.coupling_scale() * model.speed;
    let b_tilde = scale * integrals.total();
    let quadrature_error = scale * integrals.abs_error;
    if quadrature_error > 1e-8 * b_tilde.abs() && b_tilde != 0.0 {
        return Err(Error::Quadrature {
            estimate: b_tilde,
            error: quadrature_error,
            subdivisions: 0,
        });
    }
    Ok(CoefficientReport {
        epsilon: model.epsilon,
        alpha: model.alpha,
        mu,
        speed: model.speed,
        phi0: model.phi0,
        b_tilde,
        b_renormalized: b_tilde / model.log_scale(),
        quadrature_error,
        split_point: model.n_eps(),
        integrals,
        appendix_terms: if model.n_eps() < 1.0 {
            Some(appendix_terms(model, gamma)?)
        } else {
            None
        },
    })
}

/// Term decomposition for the unit barrier.
pub fn compute_b_terms(epsilon: f64, alpha: f64, speed: f64, gamma: f64) -> Result<AppendixTerms> {
    let model = ScatteringModel::new(epsilon, alpha, 1.0, speed)?;
    appendix_terms(&model, gamma)
}

pub fn appendix_terms(model: &ScatteringModel, gamma: f64) -> Result<AppendixTerms> {
    let alpha = model.alpha;
    if !(gamma > 0.0 && gamma < alpha / 2.0) {
        return Err(Error::domain(format!(
            "gamma must lie in (0, alpha/2) = (0, {}), got {gamma}",
            alpha / 2.0
        )));
    }
    let n = model.n_eps();
    if !(n < 1.0) {
        return Err(Error::domain("term decomposition needs a repulsive barrier (n < 1)"));
    }
    let s = model.coupling_scale();
    let delta = default_delta(model.epsilon, alpha, gamma);
    let r = n * (1.0 - delta);
    let pref = s * (1.0 - n).powi(2) / (n * n);
    let a1 = -0.5 * pref * (2.0 * r + (-r).ln_1p() - r.ln_1p());
    let a1_quadrature = pref * integrate(|x| x * x / ((1.0 - x) * (1.0 + x)), &[0.0, r], quad_opts())?.value;
    let a2_int = integrate(
        |x| {
            let u = x / n;
            let w = (1.0 - u) * (1.0 + u);
            u * u / (w * w * w) * (u - x).powi(4)
        },
        &graded_towards(0.0, r, 0.1 * r * delta, 6),
        quad_opts(),
    )?;
    let a2 = 0.25 * s * a2_int.value;
    let th2 = |x: f64| theta(model, x).powi(2);
    let a_exact = s * integrate(th2, &[0.0, 0.5 * r, r], quad_opts())?.value;
    let b_term = s * integrate(th2, &graded_towards(r, n, 1e-2 * (n - r), GRADING_LEVELS), quad_opts())?.value;
    let reflected = s * integrate(th2, &[n, 1.0], quad_opts())?.value;
    let log = model.log_scale();
    Ok(AppendixTerms {
        gamma,
        delta,
        a1,
        a1_quadrature,
        a1_ratio: a1 * 2.0 * model.speed.powi(4) / (alpha * log),
        a2,
        a2_scaled: a2 * delta * delta / model.epsilon.powf(2.0 * alpha),
        a_exact,
        b_term,
        reflected,
        a2_over_a1: a2 / a1,
        b_over_a1: b_term / a1,
    })
}

/// Velocity-jump moments per collision, integrated over ρ ∈ [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityMoments {
    /// ∫_{−1}^{1}|v′ − v|²dρ.
    pub second: f64,
    /// ∫_{−1}^{1}|v′ − v|⁴dρ.
    pub fourth: f64,
    /// (ε^{−2α}/|log ε|)·second.
    pub normalized_second: f64,
    /// (ε^{−2α}/|log ε|)·fourth.
    pub normalized_fourth: f64,
    pub abs_error: f64,
}

pub fn velocity_moments(model: &ScatteringModel) -> Result<VelocityMoments> {
    let v2 = model.speed * model.speed;
    let jump2 = |t: f64| 4.0 * v2 * (0.5 * t).sin().powi(2);
    let m2 = branch_integrals(model, jump2)?;
    let m4 = branch_integrals(model, |t| jump2(t).powi(2))?;
    let norm = model.coupling_scale() / model.log_scale();
    Ok(VelocityMoments {
        second: 2.0 * m2.total(),
        fourth: 2.0 * m4.total(),
        normalized_second: 2.0 * norm * m2.total(),
        normalized_fourth: 2.0 * norm * m4.total(),
        abs_error: 2.0 * (m2.abs_error + m4.abs_error),
    })
}

/// Diffusion on the speed circle, dθ = √(2a)dW, i.e. the operator a∂²_θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularGenerator {
    pub coefficient: f64,
}

impl AngularGenerator {
    /// (μ/2|v|)Δ on the circle of radius |v|, so a = μ/(2|v|³).
    pub fn landau(mu: f64, speed: f64) -> Self {
        AngularGenerator {
            coefficient: mu / (2.0 * speed.powi(3)),
        }
    }

    /// B·Δ on the circle of radius |v|, so a = B/|v|².
    pub fn renormalized(b: f64, speed: f64) -> Self {
        AngularGenerator {
            coefficient: b / (speed * speed),
        }
    }

    /// Eigenvalue on e^{ikθ}.
    pub fn eigenvalue(&self, k: i64) -> f64 {
        -self.coefficient * (k * k) as f64
    }

    /// D = ½⟨v·(−ℒ)⁻¹v⟩ under the normalised angular measure; v is a pure
    /// first harmonic, so this is |v|²/(2a).
    pub fn spectral_d(&self, speed: f64) -> f64 {
        speed * speed / (2.0 * -self.eigenvalue(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenKuboReport {
    pub speed: f64,
    pub mu: f64,
    pub generator: AngularGenerator,
    pub d_spectral: f64,
    /// ½∫₀^∞E[v·v(t)]dt by simulation.
    pub d_autocorrelation: f64,
    pub mc_error: f64,
    /// Decay rate fitted to E[cos(θ_t − θ₀)] on t ≤ 1/a.
    pub fitted_rate: f64,
    pub eigenvalue: f64,
    /// E[v·v(0)], exactly |v|².
    pub autocorrelation_at_zero: f64,
    pub samples: usize,
    pub dt: f64,
    pub horizon: f64,
}

/// Time horizon in units of 1/a; e^{−18.4} ≈ 10⁻⁸.
const HORIZON: f64 = 18.4;
const MIN_SAMPLES: usize = 10_000;
const GK_CHUNK: usize = 1024;

/// D for the Landau generator (μ/2|v|)Δ.
pub fn compute_d(mu: f64, speed: f64, samples: usize, dt: f64, seed: u64) -> Result<GreenKuboReport> {
    if !(mu > 0.0 && speed > 0.0) {
        return Err(Error::domain("mu and speed must be positive"));
    }
    let mut r = compute_d_with(AngularGenerator::landau(mu, speed), speed, samples, dt, seed)?;
    r.mu = mu;
    Ok(r)
}

pub fn compute_d_with(
    generator: AngularGenerator,
    speed: f64,
    samples: usize,
    dt: f64,
    seed: u64,
) -> Result<GreenKuboReport> {
    let a = generator.coefficient;
    if samples < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "Green-Kubo needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if !(dt > 0.0 && dt * a < 1e-2) {
        return Err(Error::domain(format!("dt·rate = {} must lie in (0, 0.01)", dt * a)));
    }
    let horizon = HORIZON / a;
    let steps = (horizon / dt).ceil() as usize;
    let fit_steps = ((1.0 / a) / dt).floor() as usize;
    let sd = (2.0 * a * dt).sqrt();

    let chunks = samples.div_ceil(GK_CHUNK);
    let parts: Vec<(Moments, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut integral = Moments::new();
            let mut curve = vec![0.0; fit_steps + 1];
            let mut rng = stream_rng(seed, c as u64);
            for _ in c * GK_CHUNK..((c + 1) * GK_CHUNK).min(samples) {
                // Only the increment θ_t − θ₀ matters.
                let mut phase = 0.0f64;
                let mut prev = 1.0;
                let mut acc = 0.0;
                curve[0] += 1.0;
                #[allow(clippy::needless_range_loop)]
                for k in 1..=steps {
                    phase += sd * rng.sample::<f64, _>(StandardNormal);
                    let cur = phase.cos();
                    acc += 0.5 * (prev + cur) * dt;
                    prev = cur;
                    if k <= fit_steps {
                        curve[k] += cur;
                    }
                }
                integral.push(acc);
            }
            (integral, curve)
        })
        .collect();
    let mut integral = Moments::new();
    let mut curve = vec![0.0; fit_steps + 1];
    for (m, c) in &parts {
        integral.merge(m);
        for (a, b) in curve.iter_mut().zip(c) {
            *a += b;
        }
    }
    let half_v2 = 0.5 * speed * speed;
    let d_autocorrelation = half_v2 * integral.mean();
    let mc_error = half_v2 * integral.std_error();

    let (ts, logs): (Vec<f64>, Vec<f64>) = curve
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(k, &s)| (k as f64 * dt, (s / samples as f64).ln()))
        .unzip();
    let fitted_rate = fit_line(&ts, &logs, None).map(|f| -f.slope).unwrap_or(f64::NAN);

    let d_spectral = generator.spectral_d(speed);
    if (d_spectral - d_autocorrelation).abs() > 5.0 * mc_error {
        return Err(Error::GreenKubo {
            spectral: d_spectral,
            autocorrelation: d_autocorrelation,
            mc_error,
        });
    }
    Ok(GreenKuboReport {
        speed,
        mu: f64::NAN,
        generator,
        d_spectral,
        d_autocorrelation,
        mc_error,
        fitted_rate,
        eigenvalue: generator.eigenvalue(1),
        autocorrelation_at_zero: speed * speed * curve[0] / samples as f64,
        samples,
        dt,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transparent_barrier_has_no_coefficient() {
        let m = ScatteringModel::new(1e-3, 0.1, 0.0, 1.0).unwrap();
        let r = compute_b_for(&m, 1.0, 0.025).unwrap();
        assert_eq!(r.b_tilde, 0.0);
    }

    #[test]
    fn gamma_range_enforced() {
        assert!(compute_b_terms(1e-5, 0.1, 1.0, 0.05).is_err());
        assert!(compute_b_terms(1e-5, 0.1, 1.0, 0.0).is_err());
        assert!(compute_b_terms(1e-5, 0.1, 1.0, 0.049).is_ok());
    }

    #[test]
    fn spectral_d_convention() {
        let g = AngularGenerator::landau(2.0, 1.5);
        assert!((g.spectral_d(1.5) - 1.5f64.powi(5) / 2.0).abs() < 1e-12);
    }
}
