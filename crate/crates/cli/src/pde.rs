//! The `pde` subcommand.

use std::f64::consts::TAU;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use lorentz_core::coefficients::compute_b_for;
use lorentz_core::kinetic::{
    boltzmann_spectrum, evolve_scaled, landau_spectrum, load_snapshot, max_stable_dt, renormalized_boltzmann_spectrum,
    renormalized_landau_spectrum, save_snapshot, AngularField, GridSpec, Scaling,
};
use lorentz_core::markov::GaussianProfile;
use lorentz_core::ScatteringModel;

use crate::{output, Outcome};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Boltzmann,
    Landau,
    Renorm,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingArg {
    Item1,
    Item2,
    Item3,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Gaussian,
    Cosine,
    File,
}

#[derive(Args, Debug)]
pub struct PdeArgs {
    #[arg(long, value_enum, default_value_t = Kind::Landau)]
    kind: Kind,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    phi0: f64,
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    #[arg(long = "L", default_value_t = 12.0)]
    side: f64,
    #[arg(long, default_value_t = 48)]
    nx: usize,
    #[arg(long = "K", default_value_t = 8)]
    harmonics: usize,
    #[arg(long, default_value_t = 0.5)]
    t: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, value_enum, default_value_t = ScalingArg::Item2)]
    scaling: ScalingArg,
    /// η for item1/item3; defaults to √|log ε| and |log ε| respectively.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Init::Gaussian)]
    init: Init,
    /// Snapshot to start from with `--init file`.
    #[arg(long)]
    init_file: Option<PathBuf>,
    /// Write the final field as a snapshot.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the spatial marginal as CSV (x, y, rho) to stdout.
    #[arg(long)]
    marginal: bool,
}

pub fn run(a: PdeArgs) -> Result<Outcome> {
    let model = || ScatteringModel::new(a.epsilon, a.alpha, a.phi0, a.speed);
    let log_eps = a.epsilon.ln().abs();
    let item3 = a.scaling == ScalingArg::Item3;
    let spectrum = match a.kind {
        Kind::Landau => landau_spectrum(a.mu, a.speed, a.harmonics)?,
        Kind::Renorm => {
            let b = compute_b_for(&model()?, a.mu, a.alpha / 4.0)?.b_renormalized;
            renormalized_landau_spectrum(b, a.speed, a.harmonics)?
        }
        // Item 3 runs the operator divided by |log ε|.
        Kind::Boltzmann if item3 => renormalized_boltzmann_spectrum(&model()?, a.mu, a.harmonics)?,
        Kind::Boltzmann => boltzmann_spectrum(&model()?, a.mu, a.harmonics)?,
    };
    let scaling = match a.scaling {
        ScalingArg::Item1 => Scaling::Item1 {
            eta: a.eta.unwrap_or(log_eps.sqrt()),
        },
        ScalingArg::Item2 => Scaling::Item2,
        ScalingArg::Item3 => Scaling::Item3 {
            eta: a.eta.unwrap_or(log_eps),
        },
    };
    let grid = GridSpec::new(a.side, a.nx)?;
    let f0 = match a.init {
        Init::Gaussian => AngularField::from_density(grid, a.harmonics, a.speed, &GaussianProfile::default()),
        Init::Cosine => {
            let k = TAU / a.side;
            let norm = 1.0 / (a.side * a.side);
            AngularField::from_fn(grid, a.harmonics, a.speed, |x, th| {
                norm * (1.0 + 0.5 * (k * x.x).cos()) * (1.0 + 0.5 * th.cos())
            })
        }
        Init::File => {
            let Some(path) = &a.init_file else {
                bail!("--init file needs --init-file");
            };
            let f = load_snapshot(path).with_context(|| format!("loading {}", path.display()))?;
            if f.grid != grid || f.harmonics != a.harmonics {
                bail!(
                    "snapshot grid (L={}, nx={}, K={}) does not match the arguments",
                    f.grid.side,
                    f.grid.nx,
                    f.harmonics
                );
            }
            f
        }
    };
    let (ts, cs) = scaling.scales();
    let limit = max_stable_dt(&grid, a.speed, &spectrum, a.harmonics, ts, cs);
    let f = evolve_scaled(&f0, &spectrum, scaling, a.t, a.dt)
        .with_context(|| format!("the largest stable step for these scales is {limit:.3e}"))?;
    if let Some(path) = &a.out {
        save_snapshot(&f, path)?;
    }
    if a.marginal {
        let rho = f.spatial_marginal();
        output::csv(
            &["x", "y", "rho"],
            (0..grid.len()).map(|i| {
                let p = grid.point(i % a.nx, i / a.nx);
                vec![p.x, p.y, rho.values[i]]
            }),
        )?;
    } else {
        output::jsonl([json!({
            "kind": format!("{:?}", a.kind).to_lowercase(),
            "scaling": scaling,
            "t": a.t,
            "mass": f.mass(),
            "initial_mass": f0.mass(),
            "l2_norm": f.l2_norm(),
            "anisotropic_norm": f.anisotropic_norm(),
            "gap": spectrum.gap(),
            "max_stable_dt": limit,
        })])?;
    }
    Ok(Outcome::Done)
}
