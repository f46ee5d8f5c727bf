//! Exact scattering of a point particle by one circular potential barrier.
//!
//! A disk of radius ε carries the constant potential U = ε^α φ₀. A particle of
//! speed |v| hitting it with normalised impact parameter ρ either crosses it
//! (refracting twice, with refractive index n = √(1 − 2U/|v|²)) or, when
//! |ρ| > n, bounces off elastically.
//!
//! Sign convention: ρ = (v̂ × (x_entry − c))/ε, and the deflection θ is the
//! signed rotation from incoming to outgoing velocity, counterclockwise
//! positive. A repulsive barrier therefore gives θ > 0 for ρ > 0.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::{Error, Result};

/// Branch of the scattering map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Transmitted,
    Reflected,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Transmitted => "transmitted",
            Mode::Reflected => "reflected",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deflection {
    pub theta: f64,
    pub mode: Mode,
}

/// Any odd deflection law ρ ↦ θ(ρ) usable by the collision operators.
pub trait ScatteringLaw: Sync {
    /// Signed deflection for |ρ| ≤ 1. No domain checking.
    fn deflection_angle(&self, rho: f64) -> f64;

    /// Points of (0, 1) where θ is not smooth; quadratures split there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Width of the layer below each breakpoint where θ varies fastest.
    fn boundary_layer(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringModel {
    pub epsilon: f64,
    pub alpha: f64,
    pub phi0: f64,
    pub speed: f64,
    n_eps: f64,
    /// 1 − n² = 2ε^αφ₀/|v|², kept separately to avoid cancellation.
    kappa: f64,
}

impl ScatteringModel {
    pub fn new(epsilon: f64, alpha: f64, phi0: f64, speed: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidModel(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidModel(format!("alpha must lie in (0, 1/2), got {alpha}")));
        }
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::InvalidModel(format!("speed must be positive, got {speed}")));
        }
        if !phi0.is_finite() || (phi0 < 0.0 && !cfg!(feature = "attractive")) {
            return Err(Error::InvalidModel(format!(
                "barrier height must be nonnegative, got {phi0} (wells need the `attractive` feature)"
            )));
        }
        let kappa = 2.0 * epsilon.powf(alpha) * phi0 / (speed * speed);
        if kappa >= 1.0 {
            return Err(Error::InvalidModel(format!(
                "2 eps^alpha phi0 = {:.6} is not below |v|^2 = {:.6}; the barrier would reflect every particle",
                kappa * speed * speed,
                speed * speed
            )));
        }
        Ok(ScatteringModel {
            epsilon,
            alpha,
            phi0,
            speed,
            n_eps: (1.0 - kappa).sqrt(),
            kappa,
        })
    }

    /// Model with a prescribed refractive index `n ∈ (0, 1]`, using φ₀ = 1,
    /// α = 0.1 and the ε that produces `n` at the given speed.
    pub fn from_refractive_index(n: f64, speed: f64) -> Result<Self> {
        if !(n > 0.0 && n <= 1.0) {
            return Err(Error::InvalidModel(format!(
                "refractive index must lie in (0, 1], got {n}"
            )));
        }
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::InvalidModel(format!("speed must be positive, got {speed}")));
        }
        let alpha = 0.1;
        let kappa = (1.0 - n) * (1.0 + n);
        let (epsilon, phi0) = if kappa == 0.0 {
            (0.5, 0.0)
        } else {
            ((0.5 * kappa * speed * speed).powf(1.0 / alpha), 1.0)
        };
        Ok(ScatteringModel {
            epsilon,
            alpha,
            phi0,
            speed,
            n_eps: n,
            kappa,
        })
    }

    pub fn n_eps(&self) -> f64 {
        self.n_eps
    }

    /// 1 − n_ε².
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Potential height U = ε^α φ₀ of one disk.
    pub fn barrier(&self) -> f64 {
        0.5 * self.kappa * self.speed * self.speed
    }

    /// ε^{−2α}.
    pub fn coupling_scale(&self) -> f64 {
        self.epsilon.powf(-2.0 * self.alpha)
    }

    /// |log ε|.
    pub fn log_scale(&self) -> f64 {
        self.epsilon.ln().abs()
    }

    fn transmitted_angle(&self, r: f64) -> f64 {
        // 2(asin(r/n) − asin r) via sin of the difference, free of cancellation
        // for small deflections.
        let n = self.n_eps;
        let q = r / n;
        let outer = ((1.0 - r) * (1.0 + r)).max(0.0).sqrt();
        let inner = ((1.0 - q) * (1.0 + q)).max(0.0).sqrt();
        let denom = outer / n + inner;
        if denom == 0.0 {
            return 0.0;
        }
        let s = r * (self.kappa / (n * n)) / denom;
        2.0 * s.clamp(-1.0, 1.0).asin()
    }

    fn reflected_angle(r: f64) -> f64 {
        4.0 * (0.5 * (1.0 - r)).max(0.0).sqrt().asin()
    }

    /// Deflection for impact parameter ρ ∈ [−1, 1].
    pub fn scattering_angle(&self, rho: f64) -> Result<Deflection> {
        if !(rho.abs() <= 1.0) {
            return Err(Error::domain(format!(
                "impact parameter must lie in [-1, 1], got {rho}"
            )));
        }
        let r = rho.abs();
        let (theta, mode) = if r <= self.n_eps {
            (self.transmitted_angle(r), Mode::Transmitted)
        } else {
            (Self::reflected_angle(r), Mode::Reflected)
        };
        Ok(Deflection {
            theta: theta.copysign(rho),
            mode,
        })
    }

    /// Supremum of |θ| over the transmitted branch, 2·arccos(n_ε).
    pub fn max_scattering_angle(&self) -> f64 {
        if self.n_eps > 1.0 {
            // Attractive well: the grazing ray is the most deflected.
            return self.transmitted_angle(1.0).abs();
        }
        4.0 * (0.5 * self.kappa / (1.0 + self.n_eps)).sqrt().asin()
    }

    /// Differential cross section Ψ(θ) with branch chosen by θ: the transmitted
    /// formula for θ ≤ θ_max, sin(θ/2) above.
    ///
    /// Ψ is the density of impact parameters ρ ∈ [−1, 1] per unit unsigned
    /// deflection, both signs of ρ counted.
    pub fn cross_section(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta <= std::f64::consts::PI) {
            return Err(Error::domain(format!("deflection must lie in (0, pi], got {theta}")));
        }
        let mode = if theta <= self.max_scattering_angle() {
            Mode::Transmitted
        } else {
            Mode::Reflected
        };
        Ok(self.branch_density(theta, mode))
    }

    /// Cross section of a single branch at θ ∈ (0, θ_max].
    pub fn cross_section_branch(&self, theta: f64, mode: Mode) -> Result<f64> {
        if !(theta > 0.0 && theta <= self.max_scattering_angle()) {
            return Err(Error::domain(format!(
                "deflection {theta} outside the branch range (0, {}]",
                self.max_scattering_angle()
            )));
        }
        Ok(self.branch_density(theta, mode))
    }

    fn branch_density(&self, theta: f64, mode: Mode) -> f64 {
        let h = 0.5 * theta;
        match mode {
            Mode::Reflected => h.sin(),
            Mode::Transmitted => {
                let n = self.n_eps;
                let c = h.cos();
                let s4 = (0.5 * h).sin();
                let d = (1.0 - n).powi(2) + 4.0 * n * s4 * s4;
                n * (c - n) * (1.0 - n * c) / d.powf(1.5)
            }
        }
    }

    /// Nonnegative impact parameter producing deflection θ on the given branch.
    pub fn impact_parameter(&self, theta: f64, mode: Mode) -> Result<f64> {
        if !(theta >= 0.0 && theta <= self.max_scattering_angle()) {
            return Err(Error::domain(format!(
                "deflection {theta} outside the branch range [0, {}]",
                self.max_scattering_angle()
            )));
        }
        let h = 0.5 * theta;
        Ok(match mode {
            Mode::Reflected => h.cos(),
            Mode::Transmitted => {
                let n = self.n_eps;
                let s4 = (0.5 * h).sin();
                n * h.sin() / ((1.0 - n).powi(2) + 4.0 * n * s4 * s4).sqrt()
            }
        })
    }
}

impl ScatteringLaw for ScatteringModel {
    fn deflection_angle(&self, rho: f64) -> f64 {
        let r = rho.abs().min(1.0);
        let t = if r <= self.n_eps {
            self.transmitted_angle(r)
        } else {
            Self::reflected_angle(r)
        };
        t.copysign(rho)
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.n_eps < 1.0 {
            vec![self.n_eps]
        } else {
            Vec::new()
        }
    }

    fn boundary_layer(&self) -> f64 {
        let gamma = self.alpha / 4.0;
        let delta = self.epsilon.powf(self.alpha) / self.log_scale().powf(gamma);
        delta.min(1.0) * self.n_eps
    }
}

/// Outcome of the local Snell step at a barrier boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refraction {
    Transmitted(Vec2),
    Reflected(Vec2),
}

impl Refraction {
    pub fn velocity(self) -> Vec2 {
        match self {
            Refraction::Transmitted(v) | Refraction::Reflected(v) => v,
        }
    }

    pub fn is_reflected(self) -> bool {
        matches!(self, Refraction::Reflected(_))
    }
}

/// Crosses a potential step of height `delta_phi` across the line with unit
/// normal `normal`: the tangential velocity is kept and the normal component
/// becomes √(v_n² − 2Δφ) with its sign; if that is not real the particle is
/// reflected.
pub fn refract_velocity(v_in: Vec2, normal: Vec2, delta_phi: f64) -> Result<Refraction> {
    if v_in.x == 0.0 && v_in.y == 0.0 {
        return Err(Error::domain("refraction of a particle at rest"));
    }
    let vn = v_in.dot(normal);
    let tangential = v_in - normal * vn;
    let disc = vn * vn - 2.0 * delta_phi;
    if delta_phi == 0.0 {
        return Ok(Refraction::Transmitted(v_in));
    }
    if disc > 0.0 {
        let vn_out = disc.sqrt().copysign(vn);
        Ok(Refraction::Transmitted(tangential + normal * vn_out))
    } else {
        Ok(Refraction::Reflected(v_in - normal * (2.0 * vn)))
    }
}

/// Result of pushing a particle through one isolated barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traversal {
    pub incoming: Vec2,
    pub outgoing: Vec2,
    pub mode: Mode,
    /// Signed rotation from incoming to outgoing velocity.
    pub deflection: f64,
    /// Time spent inside the disk for a disk of the given radius.
    pub chord_time: f64,
}

/// Geometric traversal of a disk of radius `radius` centred at the origin by a
/// particle arriving along +x with impact parameter ρ: refraction at entry,
/// straight chord, refraction at exit.
pub fn traverse_disk(model: &ScatteringModel, rho: f64, radius: f64) -> Result<Traversal> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!("traversal needs |rho| < 1, got {rho}")));
    }
    let v = Vec2::new(model.speed, 0.0);
    let entry = Vec2::new(-((1.0 - rho) * (1.0 + rho)).sqrt(), rho);
    let u = barrier_step(v, -entry, model.barrier())?;
    let (outgoing, mode, chord) = match u {
        Refraction::Reflected(w) => (w, Mode::Reflected, 0.0),
        Refraction::Transmitted(w) => {
            let s = -2.0 * entry.dot(w) / w.norm_sq();
            let exit = entry + w * s;
            let out = barrier_step(w, exit.normalized(), -model.barrier())?;
            (out.velocity(), Mode::Transmitted, s * radius)
        }
    };
    Ok(Traversal {
        incoming: v,
        outgoing,
        mode,
        deflection: v.angle_to(outgoing),
        chord_time: chord,
    })
}

fn barrier_step(v: Vec2, normal: Vec2, dphi: f64) -> Result<Refraction> {
    refract_velocity(v, normal, dphi)
}

/// Deflection law given by samples (ρ_i, θ_i) on [0, 1], extended oddly and
/// interpolated linearly. Used for user-supplied smooth potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedScattering {
    rho: Vec<f64>,
    theta: Vec<f64>,
}

impl TabulatedScattering {
    pub fn new(rho: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if rho.len() != theta.len() || rho.len() < 2 {
            return Err(Error::Shape(
                "scattering table needs at least two (rho, theta) pairs".into(),
            ));
        }
        if rho[0] != 0.0 || *rho.last().expect("nonempty") != 1.0 {
            return Err(Error::domain("scattering table must span rho = 0 to rho = 1"));
        }
        if rho.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("scattering table rho values must increase strictly"));
        }
        if theta.iter().any(|t| !(t.abs() <= std::f64::consts::PI)) {
            return Err(Error::domain("scattering table angles must lie in [-pi, pi]"));
        }
        Ok(TabulatedScattering { rho, theta })
    }

    /// Reads a headed CSV with columns `rho,theta`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut rho = Vec::new();
        let mut theta = Vec::new();
        for record in reader.deserialize::<(f64, f64)>() {
            let (r, t) = record?;
            rho.push(r);
            theta.push(t);
        }
        Self::new(rho, theta)
    }
}

impl ScatteringLaw for TabulatedScattering {
    fn deflection_angle(&self, rho: f64) -> f64 {
        let r = rho.abs().min(1.0);
        let i = self.rho.partition_point(|&x| x <= r).clamp(1, self.rho.len() - 1);
        let (r0, r1) = (self.rho[i - 1], self.rho[i]);
        let w = (r - r0) / (r1 - r0);
        let t = self.theta[i - 1] + w * (self.theta[i] - self.theta[i - 1]);
        t.copysign(rho)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.rho[1..self.rho.len() - 1].to_vec()
    }
}
