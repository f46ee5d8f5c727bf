//! Subcommands other than `pde`.

use std::f64::consts::TAU;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use lorentz_core::coefficients::{compute_b_for, compute_d, velocity_moments};
use lorentz_core::harness::{run_and_persist, ConvergenceTable, ExperimentConfig};
use lorentz_core::markov::{collision_statistics, GaussianProfile, HistogramSpec, JumpProcess, RateScale};
use lorentz_core::medium::{evolve, obstacle_intensity, LazyPoissonField, ParticleState, Pathologies};
use lorentz_core::rng::{derive_seed, stream_rng};
use lorentz_core::stats::Estimate;
use lorentz_core::{Error, ScatteringModel, Vec2};
use rand::Rng;

use crate::output;
use crate::{Format, HorizonArg, Outcome, PhysicsArgs};

fn model(p: PhysicsArgs) -> Result<ScatteringModel> {
    Ok(ScatteringModel::new(p.epsilon, p.alpha, p.phi0, p.speed)?)
}

pub fn scatter(
    p: PhysicsArgs,
    n_eps: Option<f64>,
    rho: Vec<f64>,
    samples: usize,
    table: Option<usize>,
    format: Format,
    seed: u64,
) -> Result<Outcome> {
    let m = match n_eps {
        Some(n) => ScatteringModel::from_refractive_index(n, p.speed)?,
        None => model(p)?,
    };
    let (rho, format) = if let Some(n) = table {
        if n < 2 {
            bail!("--table needs at least two rows");
        }
        (
            (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
            Format::Csv,
        )
    } else if rho.is_empty() {
        let mut rng = stream_rng(seed, 0);
        ((0..samples).map(|_| rng.random_range(-1.0..=1.0)).collect(), format)
    } else {
        (rho, format)
    };
    let mut rows = Vec::with_capacity(rho.len());
    for &r in &rho {
        let d = m.scattering_angle(r)?;
        // Ψ is undefined at θ = 0 (ρ = 0 or a grazing reflection).
        let psi = m.cross_section_branch(d.theta.abs(), d.mode).ok();
        rows.push((r, d, psi));
    }
    match format {
        Format::Jsonl => output::jsonl(rows.iter().map(|(r, d, psi)| {
            json!({"rho": r, "theta": d.theta, "mode": d.mode.to_string(), "cross_section": psi, "n_eps": m.n_eps()})
        })),
        Format::Csv => output::csv_records(
            &["rho", "theta", "mode", "psi"],
            rows.iter().map(|(r, d, psi)| {
                vec![r.to_string(), d.theta.to_string(), d.mode.to_string(), psi.unwrap_or(f64::NAN).to_string()]
            }),
        ),
    }?;
    Ok(Outcome::Done)
}

pub fn simulate(
    p: PhysicsArgs,
    t: f64,
    samples: usize,
    horizon: HorizonArg,
    events: bool,
    table: Option<PathBuf>,
    seed: u64,
) -> Result<Outcome> {
    let m = model(p)?;
    let intensity = obstacle_intensity(p.mu, p.epsilon, p.alpha);
    let duration = match horizon {
        HorizonArg::Fixed => t,
        HorizonArg::Log => t * m.log_scale(),
    };
    let runs: Vec<(Value, Pathologies)> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(Value, Pathologies)> {
            let mut rng = stream_rng(seed, i as u64);
            let heading = TAU * rng.random::<f64>();
            let field = LazyPoissonField::new(intensity, p.epsilon, derive_seed(seed, i as u64))?;
            let start = ParticleState::new(Vec2::ZERO, Vec2::polar(p.speed, heading));
            let (end, log) = evolve(&field, &m, start, duration).with_context(|| format!("trajectory {i}"))?;
            let mut row = json!({
                "index": i,
                "heading": heading,
                "deflection": Vec2::polar(1.0, heading).angle_to(end.velocity),
                "position": [end.position.x, end.position.y],
                "velocity": [end.velocity.x, end.velocity.y],
                "events": log.events.len(),
                "pathologies": log.pathologies,
            });
            if events {
                row["log"] = serde_json::to_value(&log.events)?;
            }
            Ok((row, log.pathologies))
        })
        .collect::<Result<_>>()?;
    if let Some(path) = table {
        let n = samples as u64;
        let count =
            |f: fn(&Pathologies) -> bool| Estimate::proportion(runs.iter().filter(|(_, p)| f(p)).count() as u64, n);
        let mut w = ::csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(["flag", "fraction", "std_error", "samples", "epsilon", "horizon"])?;
        for (name, e) in [
            ("overlap", count(|p| p.overlap)),
            ("recollision", count(|p| p.recollision)),
            ("interference", count(|p| p.interference)),
            ("chi1", count(|p| p.chi1_violation)),
            ("any", count(|p| p.any())),
        ] {
            w.write_record([
                name.to_string(),
                e.value.to_string(),
                e.std_error.to_string(),
                n.to_string(),
                p.epsilon.to_string(),
                duration.to_string(),
            ])?;
        }
        w.flush()?;
    }
    output::jsonl(runs.into_iter().map(|(row, _)| row))?;
    Ok(Outcome::Done)
}

pub struct MarkovArgs {
    pub physics: PhysicsArgs,
    pub t: f64,
    pub samples: usize,
    pub log_density: bool,
    pub bins_x: Option<usize>,
    pub bins_theta: usize,
    pub side: f64,
    pub paths: bool,
}

pub fn markov(a: MarkovArgs, seed: u64) -> Result<Outcome> {
    let p = a.physics;
    let scale = if a.log_density {
        RateScale::LogRenormalized
    } else {
        RateScale::Standard
    };
    let m = model(p)?;
    let process = JumpProcess::from_model(m, p.mu, scale);
    if let Some(bins_x) = a.bins_x {
        if bins_x == 0 || a.bins_theta == 0 {
            bail!("histogram bins must be positive");
        }
        let spec = HistogramSpec::new(a.side, bins_x, a.bins_theta);
        let h = process.estimate_histogram(&GaussianProfile::default(), spec, a.t, a.samples, seed);
        let density = h.joint_density();
        let w = a.side / bins_x as f64;
        let dth = TAU / a.bins_theta as f64;
        let scale = a.bins_theta as f64 / (h.samples as f64 * spec.cell_area());
        output::csv(
            &["x", "y", "theta", "density", "std_error"],
            (0..density.len()).map(|i| {
                let it = i % a.bins_theta;
                let ix = (i / a.bins_theta) % bins_x;
                let iy = i / (a.bins_theta * bins_x);
                let p = h.counts[i] as f64 / h.samples as f64;
                vec![
                    -0.5 * a.side + (ix as f64 + 0.5) * w,
                    -0.5 * a.side + (iy as f64 + 0.5) * w,
                    (it as f64 + 0.5) * dth,
                    density[i],
                    (p * (1.0 - p) * h.samples as f64).sqrt() * scale,
                ]
            }),
        )?;
    } else if a.paths {
        let paths = (0..a.samples)
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64);
                let v = Vec2::polar(p.speed, TAU * rng.random::<f64>());
                process.sample_path(Vec2::ZERO, v, a.t, &mut rng)
            })
            .collect::<lorentz_core::Result<Vec<_>>>()?;
        output::jsonl(paths.iter().map(|path| serde_json::to_value(path).expect("plain data")))?;
    } else {
        let moments = collision_statistics(&m, p.mu, a.t, a.samples, seed);
        let exact = velocity_moments(&m)?;
        output::jsonl([json!({
            "epsilon": p.epsilon,
            "rate": process.rate,
            "monte_carlo": moments,
            "quadrature": exact,
        })])?;
    }
    Ok(Outcome::Done)
}

pub fn coeff(p: PhysicsArgs, eps_list: Vec<f64>, gamma: Option<f64>, emit_terms: bool) -> Result<Outcome> {
    let eps_list = if eps_list.is_empty() { vec![p.epsilon] } else { eps_list };
    let gamma = gamma.unwrap_or(p.alpha / 4.0);
    let mut header = vec![
        "epsilon",
        "b_tilde",
        "b_renorm",
        "A1",
        "A2",
        "Bterm",
        "reflected",
        "quad_err",
    ];
    if emit_terms {
        header.extend([
            "delta",
            "A1_quadrature",
            "A2_over_A1",
            "B_over_A1",
            "normalized_second_moment",
        ]);
    }
    let mut rows = Vec::new();
    for eps in eps_list {
        let m = model(PhysicsArgs { epsilon: eps, ..p })?;
        let r = compute_b_for(&m, p.mu, gamma)?;
        let nan = f64::NAN;
        let t = r.appendix_terms;
        let pick = |f: fn(&lorentz_core::coefficients::AppendixTerms) -> f64| t.as_ref().map_or(nan, f);
        let mut row = vec![
            eps,
            r.b_tilde,
            r.b_renormalized,
            pick(|t| t.a1),
            pick(|t| t.a2),
            pick(|t| t.b_term),
            pick(|t| t.reflected),
            r.quadrature_error,
        ];
        if emit_terms {
            row.extend([
                pick(|t| t.delta),
                pick(|t| t.a1_quadrature),
                pick(|t| t.a2_over_a1),
                pick(|t| t.b_over_a1),
                velocity_moments(&m)?.normalized_second,
            ]);
        }
        rows.push(row);
    }
    output::csv(&header, rows)?;
    Ok(Outcome::Done)
}

pub fn greenkubo(mu: f64, speed: f64, samples: usize, dt: f64, seed: u64) -> Result<Outcome> {
    match compute_d(mu, speed, samples, dt, seed) {
        Ok(r) => {
            output::jsonl([serde_json::to_value(r)?])?;
            Ok(Outcome::Done)
        }
        Err(e @ Error::GreenKubo { .. }) => {
            eprintln!("{e}");
            Ok(Outcome::ToleranceMissed)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn experiment(
    config: PathBuf,
    out: Option<PathBuf>,
    replay: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(s) = seed {
        cfg.numerics.seed = s;
    }
    if let Some(dir) = out {
        cfg.io.output_dir = dir;
    }
    if !cfg.io.formats.iter().all(|f| f == "csv") {
        bail!("only the csv output format is supported, got {:?}", cfg.io.formats);
    }
    let previous = match &replay {
        Some(path) => {
            let t = ConvergenceTable::load(path).with_context(|| format!("loading {}", path.display()))?;
            t.check_config(&cfg)?;
            Some(t)
        }
        None => None,
    };
    let dir = cfg.io.output_dir.clone();
    let table = run_and_persist(&cfg, &dir)?;
    eprintln!(
        "{}: {} rows in {:.1} s, written to {}",
        table.experiment,
        table.rows.len(),
        table.wall_clock,
        dir.join("table.csv").display()
    );
    if let Some(prev) = previous {
        let same = prev.deterministic_rows() == table.deterministic_rows();
        eprintln!(
            "replay: deterministic columns {}",
            if same { "identical" } else { "differ" }
        );
    }
    Ok(match table.passed {
        Some(false) => {
            eprintln!("tolerance check failed");
            Outcome::ToleranceMissed
        }
        _ => Outcome::Done,
    })
}
