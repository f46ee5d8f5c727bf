//! TOML experiment configuration with validation and a stable content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::markov::GaussianProfile;
use crate::medium::PathologySource;
use crate::scattering::ScatteringModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Item1,
    Item2,
    Item3,
    PathologyDecay,
    CoefficientSweep,
    Theorem51,
}

impl ExperimentKind {
    /// Whether the experiment exercises the kinetic-limit statements, which
    /// assume α ∈ (0, 1/8).
    pub fn needs_small_alpha(self) -> bool {
        matches!(self, Self::Item1 | Self::Item2 | Self::Item3 | Self::Theorem51)
    }

    /// Whether the ladder holds ε values (otherwise η values).
    pub fn ladder_is_epsilon(self) -> bool {
        !matches!(self, Self::Item1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub alpha: f64,
    pub mu: f64,
    pub phi0: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(rename = "L")]
    pub side: f64,
    pub nx: usize,
    #[serde(rename = "K")]
    pub harmonics: usize,
    pub dt: f64,
    /// Macroscopic evaluation time.
    #[serde(default = "default_t")]
    pub t: f64,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_bins_x")]
    pub bins_x: usize,
    #[serde(default = "default_bins_theta")]
    pub bins_theta: usize,
}

fn default_t() -> f64 {
    0.5
}
fn default_bins_x() -> usize {
    16
}
fn default_bins_theta() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Io {
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    #[serde(default)]
    pub snapshots: bool,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into()]
}

impl Default for Io {
    fn default() -> Self {
        Io {
            output_dir: PathBuf::from("out"),
            formats: default_formats(),
            snapshots: false,
        }
    }
}

/// The initial density: a truncated Gaussian in x times 1 + a·cos(θ − θ₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub sigma: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_cutoff() -> f64 {
    6.0
}

impl Default for Initial {
    fn default() -> Self {
        let g = GaussianProfile::default();
        Initial {
            sigma: g.sigma,
            amplitude: g.amplitude,
            phase: g.phase,
            cutoff: g.cutoff,
        }
    }
}

impl Initial {
    pub fn profile(&self) -> GaussianProfile {
        GaussianProfile {
            center: crate::Vec2::ZERO,
            sigma: self.sigma,
            cutoff: self.cutoff,
            amplitude: self.amplitude,
            phase: self.phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// ε values, or η values for `item1`.
    pub ladder: Vec<f64>,
    /// Exponent λ of the `theorem51` time scaling η = ε^{−λ}.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_exp: Option<f64>,
    /// Pass/fail threshold for the final rung, where the experiment has one.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Trajectory source for `pathology_decay`.
    #[serde(default)]
    pub pathology_source: PathologySource,
    /// CSV of (rho, theta) replacing the barrier law in `theorem51`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scattering_table: Option<PathBuf>,
    pub physics: Physics,
    pub numerics: Numerics,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub io: Io,
}

fn default_tolerance() -> f64 {
    0.05
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    /// Upper bound (1 − 8α)/11 on the time-scaling exponent.
    pub fn lambda_bound(&self) -> f64 {
        (1.0 - 8.0 * self.physics.alpha) / 11.0
    }

    pub fn model(&self, epsilon: f64) -> Result<ScatteringModel> {
        let p = &self.physics;
        ScatteringModel::new(epsilon, p.alpha, p.phi0, p.speed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let p = &self.physics;
        let n = &self.numerics;
        if self.experiment.needs_small_alpha() && !(p.alpha > 0.0 && p.alpha < 0.125) {
            return bad(format!(
                "alpha must lie in (0, 1/8) for {:?}, got {}",
                self.experiment, p.alpha
            ));
        }
        if !(p.alpha > 0.0 && p.alpha < 0.5) {
            return bad(format!("alpha must lie in (0, 1/2), got {}", p.alpha));
        }
        if !(p.mu > 0.0 && p.speed > 0.0) {
            return bad("mu and speed must be positive".into());
        }
        if self.ladder.is_empty() {
            return bad("ladder is empty".into());
        }
        let inc = self.ladder.windows(2).all(|w| w[1] > w[0]);
        let dec = self.ladder.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return bad("ladder must be strictly monotone".into());
        }
        if self.experiment.ladder_is_epsilon() {
            if self.ladder.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                return bad("epsilon ladder values must lie in (0, 1)".into());
            }
            if self.scattering_table.is_none() {
                for &e in &self.ladder {
                    self.model(e)
                        .map_err(|err| Error::Config(format!("epsilon = {e}: {err}")))?;
                }
            }
        } else if self.ladder.iter().any(|&e| !(e > 0.0)) {
            return bad("eta ladder values must be positive".into());
        }
        if self.experiment == ExperimentKind::Theorem51 {
            match self.lambda_exp {
                Some(l) if l > 0.0 && l < self.lambda_bound() => {}
                Some(l) => {
                    return bad(format!(
                        "lambda_exp = {l} violates 0 < lambda < (1 - 8 alpha)/11 = {}",
                        self.lambda_bound()
                    ))
                }
                None => return bad("theorem51 needs lambda_exp".into()),
            }
        }
        if !(n.side > 0.0) || n.nx < 2 || n.nx % 2 != 0 {
            return bad(format!("need L > 0 and an even nx >= 2, got L={}, nx={}", n.side, n.nx));
        }
        if n.harmonics == 0 || !(n.dt > 0.0) || !(n.t > 0.0) {
            return bad("K, dt and t must be positive".into());
        }
        if n.bins_x == 0 || n.bins_theta == 0 {
            return bad("histogram bins must be positive".into());
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "item3"
ladder = [1e-3, 1e-4]

[physics]
alpha = 0.1
mu = 1.0
phi0 = 0.5
speed = 1.0

[numerics]
L = 12.0
nx = 32
K = 8
dt = 0.01
samples = 1000
seed = 7
"#;

    #[test]
    fn round_trip_and_hash() {
        let c = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.numerics.t, 0.5);
        let again = ExperimentConfig::from_toml_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash().unwrap(), again.hash().unwrap());
        let mut d = c.clone();
        d.numerics.seed = 8;
        assert_ne!(c.hash().unwrap(), d.hash().unwrap());
    }

    #[test]
    fn invariants_are_checked() {
        let bad_alpha = BASE.replace("alpha = 0.1", "alpha = 0.2");
        assert!(ExperimentConfig::from_toml_str(&bad_alpha).is_err());
        let bad_ladder = BASE.replace("[1e-3, 1e-4]", "[1e-3, 1e-4, 1e-3]");
        assert!(ExperimentConfig::from_toml_str(&bad_ladder).is_err());
        let t51 = BASE.replace("\"item3\"", "\"theorem51\"");
        assert!(ExperimentConfig::from_toml_str(&t51).is_err());
        let ok = t51.replace("ladder =", "lambda_exp = 0.01\nladder =");
        assert!(ExperimentConfig::from_toml_str(&ok).is_ok());
        let too_big = t51.replace("ladder =", "lambda_exp = 0.02\nladder =");
        assert!(ExperimentConfig::from_toml_str(&too_big).is_err());
        let unknown = BASE.replace("seed = 7", "seed = 7\nbogus = 1");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
    }
}
