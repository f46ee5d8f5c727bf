//! The velocity-jump process obtained by treating collisions as instantaneous.
//!
//! Collisions arrive as a Poisson process of rate 2μ|v|ε^{−2α}; each draws an
//! impact parameter uniformly on [−1, 1] and rotates the velocity by θ(ρ).
//! Speed is conserved exactly because the velocity is stored as an angle.
//!
//! Paths are reported in backward time, matching the representation
//! h(x, v, t) = E[f₀(ξ(−t), η(−t))]: the particle starts at x and retraces its
//! history with velocity −v.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::rng::{stream_rng, StreamRng};
use crate::scattering::{ScatteringLaw, ScatteringModel};
use crate::stats::{Estimate, Moments};
use crate::{Error, Result};

const CHUNK: usize = 4096;

/// Whether the collision rate carries the extra 1/|log ε| factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateScale {
    #[default]
    Standard,
    LogRenormalized,
}

/// 2μ|v|ε^{−2α}, optionally divided by |log ε|.
pub fn collision_rate(model: &ScatteringModel, mu: f64, scale: RateScale) -> f64 {
    let r = 2.0 * mu * model.speed * model.coupling_scale();
    match scale {
        RateScale::Standard => r,
        RateScale::LogRenormalized => r / model.log_scale(),
    }
}

/// One realisation of the backward jump process on [0, t].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovPath {
    pub duration: f64,
    pub start_position: Vec2,
    pub start_velocity: Vec2,
    /// t ≥ t₁ > t₂ > … > t_Q ≥ 0; the i-th collision happens a time t − tᵢ
    /// into the backward history.
    pub collision_times: Vec<f64>,
    pub impact_params: Vec<f64>,
    /// v₀ = v, v₁, …, v_Q.
    pub velocities: Vec<Vec2>,
    pub endpoint_position: Vec2,
    pub endpoint_velocity: Vec2,
}

impl MarkovPath {
    pub fn collisions(&self) -> usize {
        self.collision_times.len()
    }
}

/// Mirror image of a law, θ ↦ −θ.
#[derive(Debug, Clone, Copy)]
pub struct Mirrored<L>(pub L);

impl<L: ScatteringLaw> ScatteringLaw for Mirrored<L> {
    fn deflection_angle(&self, rho: f64) -> f64 {
        -self.0.deflection_angle(rho)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.0.breakpoints()
    }
}

/// A jump process: deflection law, collision rate and speed.
#[derive(Debug, Clone, Copy)]
pub struct JumpProcess<L> {
    pub law: L,
    pub rate: f64,
    pub speed: f64,
}

impl JumpProcess<ScatteringModel> {
    pub fn from_model(model: ScatteringModel, mu: f64, scale: RateScale) -> Self {
        JumpProcess {
            rate: collision_rate(&model, mu, scale),
            speed: model.speed,
            law: model,
        }
    }
}

/// End of a run: position, velocity angle, number of collisions, and the sum
/// of |Δv|² over collisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightEnd {
    pub position: Vec2,
    pub angle: f64,
    pub collisions: usize,
    pub sum_dv2: f64,
}

impl<L: ScatteringLaw> JumpProcess<L> {
    pub fn new(law: L, rate: f64, speed: f64) -> Self {
        JumpProcess { law, rate, speed }
    }

    /// Moves from `x` with heading `angle` for time `t`, returning where it ends.
    pub fn fly<R: Rng + ?Sized>(&self, x: Vec2, angle: f64, t: f64, rng: &mut R) -> FlightEnd {
        let mut pos = x;
        let mut phi = angle;
        let mut s = 0.0;
        let mut q = 0;
        let mut sum_dv2 = 0.0;
        loop {
            let gap = if self.rate > 0.0 {
                -(1.0 - rng.random::<f64>()).ln() / self.rate
            } else {
                f64::INFINITY
            };
            if s + gap >= t {
                pos += Vec2::polar(self.speed * (t - s), phi);
                break;
            }
            pos += Vec2::polar(self.speed * gap, phi);
            s += gap;
            let rho = 2.0 * rng.random::<f64>() - 1.0;
            let theta = self.law.deflection_angle(rho);
            let h = (0.5 * theta).sin();
            sum_dv2 += 4.0 * self.speed * self.speed * h * h;
            phi += theta;
            q += 1;
        }
        FlightEnd {
            position: pos,
            angle: phi.rem_euclid(TAU),
            collisions: q,
            sum_dv2,
        }
    }

    /// Backward endpoint (ξ(−t), η(−t)) from (x, v).
    pub fn backward_endpoint<R: Rng + ?Sized>(&self, x: Vec2, v_angle: f64, t: f64, rng: &mut R) -> (Vec2, f64, usize) {
        let end = self.fly(x, v_angle + PI, t, rng);
        (end.position, (end.angle + PI).rem_euclid(TAU), end.collisions)
    }

    pub fn sample_path<R: Rng + ?Sized>(&self, x: Vec2, v: Vec2, duration: f64, rng: &mut R) -> Result<MarkovPath> {
        if !(duration >= 0.0) {
            return Err(Error::domain(format!("duration must be nonnegative, got {duration}")));
        }
        let speed = v.norm();
        if speed == 0.0 {
            return Err(Error::domain("particle at rest"));
        }
        let mut phi = v.angle();
        let mut pos = x;
        let mut s = 0.0;
        let mut times = Vec::new();
        let mut rhos = Vec::new();
        let mut velocities = vec![v];
        loop {
            let gap = if self.rate > 0.0 {
                -(1.0 - rng.random::<f64>()).ln() / self.rate
            } else {
                f64::INFINITY
            };
            let cur = *velocities.last().expect("nonempty");
            if s + gap >= duration {
                pos -= cur * (duration - s);
                break;
            }
            pos -= cur * gap;
            s += gap;
            let rho = 2.0 * rng.random::<f64>() - 1.0;
            phi += self.law.deflection_angle(rho);
            times.push(duration - s);
            rhos.push(rho);
            velocities.push(Vec2::polar(speed, phi));
        }
        let endpoint_velocity = *velocities.last().expect("nonempty");
        Ok(MarkovPath {
            duration,
            start_position: x,
            start_velocity: v,
            collision_times: times,
            impact_params: rhos,
            velocities,
            endpoint_position: pos,
            endpoint_velocity,
        })
    }
}

/// Samples one backward path of the process attached to `model`.
pub fn sample_path<R: Rng + ?Sized>(
    model: &ScatteringModel,
    mu: f64,
    start: (Vec2, Vec2),
    duration: f64,
    rng: &mut R,
) -> Result<MarkovPath> {
    let mut p = JumpProcess::from_model(*model, mu, RateScale::Standard);
    p.speed = start.1.norm();
    p.sample_path(start.0, start.1, duration, rng)
}

/// Initial density f₀(x, θ), normalised so that ∫∫ f₀ dx dθ/2π = 1 when it is
/// a probability density.
pub trait InitialDensity: Sync {
    fn value(&self, x: Vec2, theta: f64) -> f64;

    /// Angular average ⟨f₀⟩(x).
    fn spatial(&self, x: Vec2) -> f64;

    /// Draws (x, θ) from f₀ viewed as a probability density.
    fn sample(&self, rng: &mut StreamRng) -> (Vec2, f64);

    /// Angular Fourier coefficient of order 1: f₀ = ⟨f₀⟩(x)(1 + 2Re(c₁e^{iθ}) + …).
    fn first_harmonic(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Truncated isotropic Gaussian in x times (1 + a·cos(θ − θ₀)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub center: Vec2,
    pub sigma: f64,
    /// Support radius in units of σ.
    pub cutoff: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl Default for GaussianProfile {
    fn default() -> Self {
        GaussianProfile {
            center: Vec2::ZERO,
            sigma: 0.5,
            cutoff: 6.0,
            amplitude: 0.5,
            phase: 0.0,
        }
    }
}

impl GaussianProfile {
    fn norm(&self) -> f64 {
        let mass = 1.0 - (-0.5 * self.cutoff * self.cutoff).exp();
        1.0 / (TAU * self.sigma * self.sigma * mass)
    }

    pub fn isotropic(mut self) -> Self {
        self.amplitude = 0.0;
        self
    }
}

impl InitialDensity for GaussianProfile {
    fn value(&self, x: Vec2, theta: f64) -> f64 {
        self.spatial(x) * (1.0 + self.amplitude * (theta - self.phase).cos())
    }

    fn spatial(&self, x: Vec2) -> f64 {
        let r2 = (x - self.center).norm_sq() / (self.sigma * self.sigma);
        if r2 > self.cutoff * self.cutoff {
            0.0
        } else {
            self.norm() * (-0.5 * r2).exp()
        }
    }

    fn sample(&self, rng: &mut StreamRng) -> (Vec2, f64) {
        let x = loop {
            let r = self.sigma * (-2.0 * (1.0 - rng.random::<f64>()).ln()).sqrt();
            if r <= self.cutoff * self.sigma {
                break self.center + Vec2::polar(r, TAU * rng.random::<f64>());
            }
        };
        let a = self.amplitude.abs();
        let theta = loop {
            let th = TAU * rng.random::<f64>();
            if rng.random::<f64>() * (1.0 + a) <= 1.0 + self.amplitude * (th - self.phase).cos() {
                break th;
            }
        };
        (x, theta)
    }

    fn first_harmonic(&self) -> (f64, f64) {
        let c = 0.5 * self.amplitude;
        (c * self.phase.cos(), -c * self.phase.sin())
    }
}

/// f₀ ≡ c; sampling draws uniformly on the square of half-width `half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantDensity {
    pub value: f64,
    pub half: f64,
}

impl InitialDensity for ConstantDensity {
    fn value(&self, _x: Vec2, _theta: f64) -> f64 {
        self.value
    }
    fn spatial(&self, _x: Vec2) -> f64 {
        self.value
    }
    fn sample(&self, rng: &mut StreamRng) -> (Vec2, f64) {
        let x = Vec2::new(
            (2.0 * rng.random::<f64>() - 1.0) * self.half,
            (2.0 * rng.random::<f64>() - 1.0) * self.half,
        );
        (x, TAU * rng.random::<f64>())
    }
}

/// Pointwise estimates of h(x, θ, t) = E[f₀(ξ(−t), η(−t))].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimates {
    pub points: Vec<(Vec2, f64)>,
    pub values: Vec<Estimate>,
}

/// Uniform bins on the square [−L/2, L/2)² times [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub side: f64,
    pub bins_x: usize,
    pub bins_theta: usize,
    /// Wrap positions onto the torus instead of discarding escapes.
    pub periodic: bool,
}

impl HistogramSpec {
    pub fn new(side: f64, bins_x: usize, bins_theta: usize) -> Self {
        HistogramSpec {
            side,
            bins_x,
            bins_theta,
            periodic: true,
        }
    }

    fn bin(&self, x: Vec2, theta: f64) -> Option<usize> {
        let half = 0.5 * self.side;
        let (mut px, mut py) = (x.x + half, x.y + half);
        if self.periodic {
            px = px.rem_euclid(self.side);
            py = py.rem_euclid(self.side);
        }
        if !(0.0..self.side).contains(&px) || !(0.0..self.side).contains(&py) {
            return None;
        }
        let n = self.bins_x;
        let ix = ((px / self.side * n as f64) as usize).min(n - 1);
        let iy = ((py / self.side * n as f64) as usize).min(n - 1);
        let it = ((theta.rem_euclid(TAU) / TAU * self.bins_theta as f64) as usize).min(self.bins_theta - 1);
        Some((iy * n + ix) * self.bins_theta + it)
    }

    pub fn cell_area(&self) -> f64 {
        (self.side / self.bins_x as f64).powi(2)
    }
}

/// Forward-particle histogram of the solution at time t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub spec: HistogramSpec,
    /// Layout `[iy][ix][itheta]`.
    pub counts: Vec<u64>,
    pub samples: u64,
    pub escaped: u64,
}

impl DensityHistogram {
    fn empty(spec: HistogramSpec) -> Self {
        DensityHistogram {
            spec,
            counts: vec![0; spec.bins_x * spec.bins_x * spec.bins_theta],
            samples: 0,
            escaped: 0,
        }
    }

    fn merge(&mut self, o: &DensityHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
        self.samples += o.samples;
        self.escaped += o.escaped;
    }

    /// Counts per spatial bin, layout `[iy][ix]`.
    pub fn spatial_counts(&self) -> Vec<u64> {
        self.counts
            .chunks(self.spec.bins_theta)
            .map(|c| c.iter().sum())
            .collect()
    }

    /// Angular average ⟨h⟩ per spatial bin.
    pub fn spatial_density(&self) -> Vec<f64> {
        let scale = 1.0 / (self.samples as f64 * self.spec.cell_area());
        self.spatial_counts().iter().map(|&c| c as f64 * scale).collect()
    }

    /// h per (x, θ) bin, relative to the normalised angular measure.
    pub fn joint_density(&self) -> Vec<f64> {
        let scale = self.spec.bins_theta as f64 / (self.samples as f64 * self.spec.cell_area());
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }

    /// Binomial standard errors of `spatial_density`.
    pub fn spatial_std_error(&self) -> Vec<f64> {
        let m = self.samples as f64;
        let scale = 1.0 / (m * self.spec.cell_area());
        self.spatial_counts()
            .iter()
            .map(|&c| {
                let p = c as f64 / m;
                (p * (1.0 - p) * m).sqrt() * scale
            })
            .collect()
    }
}

impl<L: ScatteringLaw> JumpProcess<L> {
    pub fn estimate_points<F: InitialDensity>(
        &self,
        f0: &F,
        points: &[(Vec2, f64)],
        t: f64,
        samples: usize,
        seed: u64,
    ) -> PointEstimates {
        let values = points
            .par_iter()
            .enumerate()
            .map(|(i, &(x, theta))| {
                let mut m = Moments::new();
                let mut rng = stream_rng(seed, i as u64);
                for _ in 0..samples {
                    let (xi, eta, _) = self.backward_endpoint(x, theta, t, &mut rng);
                    m.push(f0.value(xi, eta));
                }
                m.estimate()
            })
            .collect();
        PointEstimates {
            points: points.to_vec(),
            values,
        }
    }

    /// Samples f₀ and pushes particles forward; valid because the collision
    /// kernel is symmetric, so the forward and backward equations coincide.
    pub fn estimate_histogram<F: InitialDensity>(
        &self,
        f0: &F,
        spec: HistogramSpec,
        t: f64,
        samples: usize,
        seed: u64,
    ) -> DensityHistogram {
        let chunks = samples.div_ceil(CHUNK);
        let parts: Vec<DensityHistogram> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut h = DensityHistogram::empty(spec);
                for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                    let mut rng = stream_rng(seed, i as u64);
                    let (x, theta) = f0.sample(&mut rng);
                    let end = self.fly(x, theta, t, &mut rng);
                    h.samples += 1;
                    match spec.bin(end.position, end.angle) {
                        Some(b) => h.counts[b] += 1,
                        None => h.escaped += 1,
                    }
                }
                h
            })
            .collect();
        let mut out = DensityHistogram::empty(spec);
        for p in &parts {
            out.merge(p);
        }
        out
    }

    /// Final heading relative to the initial one, wrapped to (−π, π], for
    /// `samples` independent forward runs.
    pub fn final_angles(&self, t: f64, samples: usize, seed: u64) -> Vec<(f64, usize)> {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64);
                let heading = TAU * rng.random::<f64>();
                let end = self.fly(Vec2::ZERO, heading, t, &mut rng);
                (crate::stats::wrap_angle(end.angle - heading), end.collisions)
            })
            .collect()
    }
}

/// Monte Carlo collision moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionMoments {
    /// E|v′ − v|² per collision, ρ ~ U[−1, 1].
    pub second: Estimate,
    /// E|v′ − v|⁴ per collision.
    pub fourth: Estimate,
    /// (ε^{−2α}/|log ε|)·∫_{−1}^{1}|v′ − v|²dρ from single collisions.
    pub normalized_second: Estimate,
    /// (ε^{−2α}/|log ε|)·∫_{−1}^{1}|v′ − v|⁴dρ.
    pub normalized_fourth: Estimate,
    /// The normalised second moment recovered from whole paths:
    /// Σ|Δv|²/(μ|v|t|log ε|).
    pub path_normalized_second: Estimate,
    pub mean_collisions: f64,
}

pub fn collision_statistics(
    model: &ScatteringModel,
    mu: f64,
    duration: f64,
    samples: usize,
    seed: u64,
) -> CollisionMoments {
    let speed = model.speed;
    let norm = 2.0 * model.coupling_scale() / model.log_scale();
    let chunks = samples.div_ceil(CHUNK);
    let per: Vec<(Moments, Moments)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m2 = Moments::new();
            let mut m4 = Moments::new();
            let mut rng = stream_rng(seed, c as u64);
            for _ in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let rho = 2.0 * rng.random::<f64>() - 1.0;
                let h = (0.5 * model.deflection_angle(rho)).sin();
                let d2 = 4.0 * speed * speed * h * h;
                m2.push(d2);
                m4.push(d2 * d2);
            }
            (m2, m4)
        })
        .collect();
    let (mut m2, mut m4) = (Moments::new(), Moments::new());
    for (a, b) in &per {
        m2.merge(a);
        m4.merge(b);
    }

    let process = JumpProcess::from_model(*model, mu, RateScale::Standard);
    let path_scale = 1.0 / (mu * speed * duration * model.log_scale());
    let per_path: Vec<(Moments, Moments)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = Moments::new();
            let mut q = Moments::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut rng = stream_rng(seed ^ 0x5e_ed0f_a7a5, i as u64);
                let end = process.fly(Vec2::ZERO, 0.0, duration, &mut rng);
                s.push(end.sum_dv2 * path_scale);
                q.push(end.collisions as f64);
            }
            (s, q)
        })
        .collect();
    let (mut sp, mut qp) = (Moments::new(), Moments::new());
    for (a, b) in &per_path {
        sp.merge(a);
        qp.merge(b);
    }
    let scaled = |e: Estimate, k: f64| Estimate {
        value: e.value * k,
        std_error: e.std_error * k,
    };
    CollisionMoments {
        second: m2.estimate(),
        fourth: m4.estimate(),
        normalized_second: scaled(m2.estimate(), norm),
        normalized_fourth: scaled(m4.estimate(), norm),
        path_normalized_second: sp.estimate(),
        mean_collisions: qp.mean(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_free_flight() {
        let m = ScatteringModel::from_refractive_index(0.8, 1.0).unwrap();
        let v = Vec2::new(0.6, 0.8);
        let p = sample_path(&m, 0.0, (Vec2::new(1.0, 2.0), v), 3.0, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(p.collisions(), 0);
        let expect = Vec2::new(1.0, 2.0) - v * 3.0;
        assert!((p.endpoint_position - expect).norm() < 1e-15);
        assert_eq!(p.endpoint_velocity, v);
    }

    #[test]
    fn telescoping_endpoint_and_speed() {
        let m = ScatteringModel::new(1e-4, 0.1, 1.0, 1.3).unwrap();
        let v = Vec2::polar(1.3, 0.4);
        let x = Vec2::new(-0.2, 0.1);
        let t = 2.0;
        let p = sample_path(&m, 1.0, (x, v), t, &mut stream_rng(5, 3)).unwrap();
        assert!(p.collisions() > 3);
        let mut xi = x;
        let mut prev = t;
        for (i, &ti) in p.collision_times.iter().enumerate() {
            assert!(ti < prev);
            xi -= p.velocities[i] * (prev - ti);
            prev = ti;
        }
        xi -= p.velocities[p.collisions()] * prev;
        assert!((xi - p.endpoint_position).norm() < 1e-12);
        for w in &p.velocities {
            assert!((w.norm() / 1.3 - 1.0).abs() < 1e-12);
        }
        for (i, &rho) in p.impact_params.iter().enumerate() {
            let th = m.deflection_angle(rho);
            let turn = p.velocities[i].angle_to(p.velocities[i + 1]);
            assert!((crate::stats::wrap_angle(turn - th)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_density_is_preserved() {
        let m = ScatteringModel::new(1e-3, 0.05, 0.25, 1.0).unwrap();
        let p = JumpProcess::from_model(m, 1.0, RateScale::Standard);
        let f0 = ConstantDensity { value: 1.0, half: 1.0 };
        let est = p.estimate_points(&f0, &[(Vec2::ZERO, 0.0), (Vec2::new(3.0, 1.0), 2.0)], 1.0, 200, 4);
        for e in &est.values {
            assert_eq!(e.value, 1.0);
            assert_eq!(e.std_error, 0.0);
        }
    }

    #[test]
    fn histogram_normalisation() {
        let m = ScatteringModel::new(1e-3, 0.05, 0.25, 1.0).unwrap();
        let p = JumpProcess::from_model(m, 1.0, RateScale::Standard);
        let spec = HistogramSpec::new(8.0, 16, 8);
        let h = p.estimate_histogram(&GaussianProfile::default(), spec, 0.5, 20_000, 2);
        let mass: f64 = h.spatial_density().iter().sum::<f64>() * spec.cell_area();
        assert!((mass - 1.0).abs() < 1e-12);
        let joint: f64 = h.joint_density().iter().sum::<f64>() * spec.cell_area() / spec.bins_theta as f64;
        assert!((joint - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_profile_is_normalised() {
        let g = GaussianProfile::default();
        // Radial integral of the truncated density.
        let n = 4000;
        let rmax = g.cutoff * g.sigma;
        let dr = rmax / n as f64;
        let mass: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                TAU * r * g.spatial(Vec2::new(r, 0.0)) * dr
            })
            .sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }
}
