//! Monte Carlo frequencies of the events that separate the mechanical
//! trajectory from the Markov process: overlapping obstacles, recollisions,
//! interferences, and obstacles covering either end of the path.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::{evolve, ParticleState, Pathologies};
use super::field::{obstacle_intensity, LazyPoissonField};
use crate::geometry::Vec2;
use crate::markov::{JumpProcess, MarkovPath, RateScale};
use crate::rng::{derive_seed, stream_rng};
use crate::scattering::ScatteringModel;
use crate::stats::{fit_line, Estimate, LineFit};
use crate::{Error, Result};

const MIN_SAMPLES: usize = 1000;
const CHUNK: usize = 256;

/// Horizon of each trajectory: t, or t·|log ε|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonMode {
    #[default]
    Fixed,
    Log,
}

/// Where the trajectories come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathologySource {
    /// Mechanical flow through a sampled Poisson field.
    #[default]
    Microscopic,
    /// Obstacles placed along a Markov path, one per collision.
    MarkovConstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathologyConfig {
    pub alpha: f64,
    pub mu: f64,
    pub phi0: f64,
    pub speed: f64,
    pub t: f64,
    pub horizon: HorizonMode,
    pub source: PathologySource,
    pub seed: u64,
}

impl Default for PathologyConfig {
    fn default() -> Self {
        PathologyConfig {
            alpha: 0.05,
            mu: 1.0,
            phi0: 0.25,
            speed: 1.0,
            t: 0.5,
            horizon: HorizonMode::Fixed,
            source: PathologySource::Microscopic,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathologyRow {
    pub epsilon: f64,
    pub horizon: f64,
    pub samples: usize,
    pub overlap: Estimate,
    pub recollision: Estimate,
    pub interference: Estimate,
    pub chi1: Estimate,
    pub any: Estimate,
    /// Mean number of logged events (microscopic) or collisions (Markov).
    pub mean_events: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    overlap: u64,
    recollision: u64,
    interference: u64,
    chi1: u64,
    any: u64,
    events: u64,
}

impl Tally {
    fn add(&mut self, p: Pathologies, events: usize) {
        self.overlap += p.overlap as u64;
        self.recollision += p.recollision as u64;
        self.interference += p.interference as u64;
        self.chi1 += p.chi1_violation as u64;
        self.any += p.any() as u64;
        self.events += events as u64;
    }

    fn merge(&mut self, o: &Tally) {
        self.overlap += o.overlap;
        self.recollision += o.recollision;
        self.interference += o.interference;
        self.chi1 += o.chi1;
        self.any += o.any;
        self.events += o.events;
    }
}

/// Flags for the obstacle configuration implied by a backward Markov path.
///
/// Collision i places a disk b_i tangent-on-entry to the path with the sampled
/// impact parameter. Path segment k runs from collision k−1 to collision k
/// (segment 0 starts at x, the last ends at ξ(−t)). Then disk i
/// - recollides if a segment k ≥ i + 2 passes through it,
/// - interferes if a segment k < i passes through it,
/// - overlaps if another disk is within 2ε,
/// - violates χ₁ if it contains x or ξ(−t).
pub fn markov_construction_flags(path: &MarkovPath, radius: f64) -> Pathologies {
    let q = path.collisions();
    let mut pts = Vec::with_capacity(q + 2);
    pts.push(path.start_position);
    let mut pos = path.start_position;
    let mut prev = path.duration;
    let mut centers = Vec::with_capacity(q);
    for i in 0..q {
        let w = path.velocities[i];
        pos -= w * (prev - path.collision_times[i]);
        prev = path.collision_times[i];
        pts.push(pos);
        // Backward direction of travel at the collision.
        let dir = (-w).normalized();
        let rho = path.impact_params[i];
        centers.push(pos + (dir * (1.0 - rho * rho).sqrt() - dir.perp() * rho) * radius);
    }
    pts.push(path.endpoint_position);

    let inside = radius * (1.0 - 1e-9);
    let hits = |c: Vec2, k: usize| segment_distance(pts[k], pts[k + 1], c) < inside;
    let mut flags = Pathologies::default();
    for (i, &c) in centers.iter().enumerate() {
        // Segment i arrives at disk i, segment i + 1 leaves it.
        if !flags.recollision && (i + 2..=q).any(|k| hits(c, k)) {
            flags.recollision = true;
        }
        if !flags.interference && (0..i).any(|k| hits(c, k)) {
            flags.interference = true;
        }
        if !flags.chi1_violation
            && (c.distance(path.start_position) < radius || c.distance(path.endpoint_position) < radius)
        {
            flags.chi1_violation = true;
        }
        if !flags.overlap && centers[i + 1..].iter().any(|&d| c.distance(d) < 2.0 * radius) {
            flags.overlap = true;
        }
    }
    flags
}

fn segment_distance(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_sq();
    let s = if len2 > 0.0 {
        ((c - a).dot(d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + d * s).distance(c)
}

/// Pathology fractions with binomial standard errors, one row per ε.
///
/// Each trajectory starts at the origin with a uniformly random heading.
/// Microscopic trajectories see a fresh field generated lazily around the
/// path, so no bounding box has to be sized by hand.
pub fn pathology_rates(config: &PathologyConfig, epsilons: &[f64], samples: usize) -> Result<Vec<PathologyRow>> {
    if samples < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "pathology rates need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    epsilons
        .iter()
        .enumerate()
        .map(|(j, &eps)| {
            let model = ScatteringModel::new(eps, config.alpha, config.phi0, config.speed)?;
            let horizon = match config.horizon {
                HorizonMode::Fixed => config.t,
                HorizonMode::Log => config.t * model.log_scale(),
            };
            let seed = derive_seed(config.seed, j as u64);
            let tally = match config.source {
                PathologySource::Microscopic => microscopic_tally(config, &model, horizon, samples, seed)?,
                PathologySource::MarkovConstruction => markov_tally(config, &model, horizon, samples, seed)?,
            };
            let n = samples as u64;
            Ok(PathologyRow {
                epsilon: eps,
                horizon,
                samples,
                overlap: Estimate::proportion(tally.overlap, n),
                recollision: Estimate::proportion(tally.recollision, n),
                interference: Estimate::proportion(tally.interference, n),
                chi1: Estimate::proportion(tally.chi1, n),
                any: Estimate::proportion(tally.any, n),
                mean_events: tally.events as f64 / n as f64,
            })
        })
        .collect()
}

fn microscopic_tally(
    config: &PathologyConfig,
    model: &ScatteringModel,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<Tally> {
    let intensity = obstacle_intensity(config.mu, model.epsilon, model.alpha);
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut rng = stream_rng(seed, i as u64);
                let heading = TAU * rng.random::<f64>();
                let field = LazyPoissonField::new(intensity, model.epsilon, derive_seed(seed, i as u64))?;
                let start = ParticleState::new(Vec2::ZERO, Vec2::polar(model.speed, heading));
                let (_, log) = evolve(&field, model, start, horizon).map_err(|e| e.at_stage("pathology"))?;
                t.add(log.pathologies, log.events.len());
            }
            Ok(t)
        })
        .collect();
    let mut total = Tally::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(total)
}

fn markov_tally(
    config: &PathologyConfig,
    model: &ScatteringModel,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<Tally> {
    let process = JumpProcess::from_model(*model, config.mu, RateScale::Standard);
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut rng = stream_rng(seed, i as u64);
                let v = Vec2::polar(model.speed, TAU * rng.random::<f64>());
                let path = process.sample_path(Vec2::ZERO, v, horizon, &mut rng)?;
                t.add(markov_construction_flags(&path, model.epsilon), path.collisions());
            }
            Ok(t)
        })
        .collect();
    let mut total = Tally::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(total)
}

/// Log-log fits of each fraction against ε; `None` when fewer than two rows
/// have a nonzero count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySlopes {
    pub overlap: Option<LineFit>,
    pub recollision: Option<LineFit>,
    pub interference: Option<LineFit>,
    pub chi1: Option<LineFit>,
}

/// Weighted fit of log p against log ε with σ_log = se/p.
pub fn fit_decay_slopes(rows: &[PathologyRow]) -> DecaySlopes {
    let fit = |pick: fn(&PathologyRow) -> Estimate| {
        let (mut x, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            let e = pick(r);
            if e.value > 0.0 {
                x.push(r.epsilon.ln());
                y.push(e.value.ln());
                s.push(e.std_error / e.value);
            }
        }
        if x.len() < 2 {
            return None;
        }
        fit_line(&x, &y, Some(&s))
    };
    DecaySlopes {
        overlap: fit(|r| r.overlap),
        recollision: fit(|r| r.recollision),
        interference: fit(|r| r.interference),
        chi1: fit(|r| r.chi1),
    }
}
