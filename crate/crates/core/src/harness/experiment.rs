//! The experiment pipelines behind `run_experiment`.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::coefficients::{compute_b_for, velocity_moments};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::metrics::{compare_distributions, histogram_error, Bootstrap, Distribution, Metric};
use crate::harness::table::{write_atomic, ConvergenceTable};
use crate::kinetic::{
    boltzmann_spectrum, evolve_kinetic, heat_solve, landau_spectrum, law_spectrum, max_stable_dt,
    renormalized_boltzmann_spectrum, renormalized_landau_spectrum, save_snapshot, AngularField, CollisionSpectrum,
    GridSpec, SpatialField,
};
use crate::markov::{collision_rate, HistogramSpec, JumpProcess, RateScale};
use crate::medium::{fit_decay_slopes, pathology_rates, HorizonMode, PathologyConfig};
use crate::rng::derive_seed;
use crate::scattering::{ScatteringLaw, TabulatedScattering};
use crate::{Error, Result};

/// Evaluation times of the item-3 style pipelines besides the configured t.
pub const ITEM3_TIMES: [f64; 3] = [0.25, 0.5, 1.0];

/// Runs the configured pipeline over the whole ladder.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    config.validate()?;
    let start = Instant::now();
    let mut table = match config.experiment {
        ExperimentKind::Item1 => item1(config).map(|(t, _)| t),
        ExperimentKind::Item2 => item2(config).map(|(t, _)| t),
        ExperimentKind::Item3 | ExperimentKind::Theorem51 => diffusive(config).map(|(t, _)| t),
        ExperimentKind::PathologyDecay => pathology(config),
        ExperimentKind::CoefficientSweep => coefficient_sweep(config),
    }?;
    table.wall_clock = start.elapsed().as_secs_f64();
    Ok(table)
}

/// Runs the experiment and writes `table.csv`, `config.echo.toml` and, when
/// enabled, one `field_<i>.llkf` snapshot per rung into `out_dir`.
pub fn run_and_persist(config: &ExperimentConfig, out_dir: &Path) -> Result<ConvergenceTable> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let (mut table, fields) = match config.experiment {
        ExperimentKind::Item1 => item1(config)?,
        ExperimentKind::Item2 => item2(config)?,
        ExperimentKind::Item3 | ExperimentKind::Theorem51 => diffusive(config)?,
        ExperimentKind::PathologyDecay => (pathology(config)?, Vec::new()),
        ExperimentKind::CoefficientSweep => (coefficient_sweep(config)?, Vec::new()),
    };
    table.wall_clock = start.elapsed().as_secs_f64();
    write_atomic(&out_dir.join("config.echo.toml"), config.to_toml()?.as_bytes())?;
    table.save(&out_dir.join("table.csv"))?;
    if config.io.snapshots {
        for (i, f) in fields.iter().enumerate() {
            save_snapshot(f, &out_dir.join(format!("field_{i}.llkf")))?;
        }
    }
    Ok(table)
}

fn grid(config: &ExperimentConfig) -> Result<GridSpec> {
    GridSpec::new(config.numerics.side, config.numerics.nx)
}

fn initial_field(config: &ExperimentConfig) -> Result<AngularField> {
    Ok(AngularField::from_density(
        grid(config)?,
        config.numerics.harmonics,
        config.physics.speed,
        &config.initial.profile(),
    ))
}

/// The configured step, shrunk to 90% of the stability limit when needed.
fn stable_dt(config: &ExperimentConfig, spectrum: &CollisionSpectrum, transport: f64, collision: f64) -> Result<f64> {
    let limit = max_stable_dt(
        &grid(config)?,
        config.physics.speed,
        spectrum,
        config.numerics.harmonics,
        transport,
        collision,
    );
    Ok(config.numerics.dt.min(0.9 * limit))
}

fn elapsed(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Kinetic η-ladder: ∂ₜf + v·∇f = η²ℒf against ⟨f₀⟩.
fn item1(config: &ExperimentConfig) -> Result<(ConvergenceTable, Vec<AngularField>)> {
    let n = &config.numerics;
    let p = &config.physics;
    let spectrum = landau_spectrum(p.mu, p.speed, n.harmonics).map_err(|e| e.at_stage("item1.spectrum"))?;
    let f0 = initial_field(config).map_err(|e| e.at_stage("item1.initial"))?;
    let target = f0.angular_average();
    let mut table = ConvergenceTable::new(
        "item1",
        config,
        &["eta", "dt_used", "l2_distance", "mode1_error", "runtime_s"],
    )?;
    let rungs: Vec<(Vec<f64>, AngularField)> = config
        .ladder
        .par_iter()
        .map(|&eta| {
            let clock = Instant::now();
            let dt = stable_dt(config, &spectrum, 1.0, eta * eta)?;
            let f = evolve_kinetic(&f0, &spectrum, 1.0, eta * eta, n.t, dt)?;
            let dist = f.difference(&target)?.l2_norm();
            // Spatially flat first harmonic: transport is idle and the decay is exact.
            let single = AngularField::from_fn(f0.grid, n.harmonics, p.speed, |_, th| 1.0 + th.cos());
            let out = evolve_kinetic(&single, &spectrum, 1.0, eta * eta, n.t, dt)?;
            let expect = 0.5 * (eta * eta * spectrum.lambda(1) * n.t).exp();
            let mode1 = (out.get(0, 1).re - expect).abs().max(out.get(0, 1).im.abs());
            Ok((vec![eta, dt, dist, mode1, elapsed(clock)], f))
        })
        .collect::<Result<_>>()
        .map_err(|e: Error| e.at_stage("item1.evolve"))?;
    let mut fields = Vec::new();
    for (row, f) in rungs {
        table.push_row(row)?;
        fields.push(f);
    }
    let d = table.column("l2_distance").unwrap_or_default();
    table.passed = Some(strictly_decreasing(&d));
    Ok((table, fields))
}

/// Markov process with rate/|log ε| against the renormalized Landau solver,
/// compared on the full (x, θ) histogram.
fn item2(config: &ExperimentConfig) -> Result<(ConvergenceTable, Vec<AngularField>)> {
    let n = &config.numerics;
    let p = &config.physics;
    let f0 = initial_field(config).map_err(|e| e.at_stage("item2.initial"))?;
    let profile = config.initial.profile();
    let spec = HistogramSpec::new(n.side, n.bins_x, n.bins_theta);
    let cell = spec.cell_area() / n.bins_theta as f64;
    let mut table = ConvergenceTable::new(
        "item2",
        config,
        &[
            "epsilon",
            "b_eps",
            "dt_used",
            "l1_distance",
            "l1_error",
            "mc_noise_l1",
            "runtime_s",
        ],
    )?;
    let mut fields = Vec::new();
    for (i, &eps) in config.ladder.iter().enumerate() {
        let clock = Instant::now();
        let model = config.model(eps).map_err(|e| e.at_stage("item2.model"))?;
        let b = compute_b_for(&model, p.mu, p.alpha / 4.0)
            .map_err(|e| e.at_stage("item2.coefficient"))?
            .b_renormalized;
        let spectrum = renormalized_landau_spectrum(b, p.speed, n.harmonics)?;
        let dt = stable_dt(config, &spectrum, 1.0, 1.0)?;
        let f = evolve_kinetic(&f0, &spectrum, 1.0, 1.0, n.t, dt).map_err(|e| e.at_stage("item2.evolve"))?;
        let seed = derive_seed(n.seed, i as u64);
        let mc = JumpProcess::from_model(model, p.mu, RateScale::LogRenormalized)
            .estimate_histogram(&profile, spec, n.t, n.samples, seed);
        let hist = Distribution::Histogram {
            counts: mc.counts.clone(),
            total: mc.samples,
            cell,
        };
        let exact = Distribution::Density {
            values: f.joint_cell_averages(n.bins_x, n.bins_theta),
            cell,
        };
        let boot = Bootstrap { replicates: 200, seed };
        let d = compare_distributions(&hist, &exact, Metric::L1, boot).map_err(|e| e.at_stage("item2.compare"))?;
        let noise = histogram_error(&hist, Metric::L1, boot)?;
        table.push_row(vec![eps, b, dt, d.value, d.std_error, noise, elapsed(clock)])?;
        fields.push(f);
    }
    Ok((table, fields))
}

/// One rung of the diffusive pipelines.
struct DiffusiveRung {
    row: Vec<f64>,
    field: AngularField,
}

/// Shared item-3 machinery: kinetic run with scales (η, η²) on `spectrum`,
/// Monte Carlo flight of `process` for time η·t, both against the heat flow
/// of ⟨f₀⟩ with the Green–Kubo D of `spectrum`.
#[allow(clippy::too_many_arguments)]
fn diffusive_rung<L: ScatteringLaw>(
    config: &ExperimentConfig,
    index: usize,
    epsilon: f64,
    eta: f64,
    spectrum: &CollisionSpectrum,
    process: &JumpProcess<L>,
    d_limit: f64,
) -> Result<DiffusiveRung> {
    let clock = Instant::now();
    let n = &config.numerics;
    let p = &config.physics;
    let f0 = initial_field(config)?;
    let rho0 = f0.spatial_marginal();
    let d_eps = spectrum.diffusion_coefficient(p.speed);
    let dt = stable_dt(config, spectrum, eta, eta * eta)?;

    let mut times: Vec<f64> = ITEM3_TIMES.to_vec();
    times.push(n.t);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut f = f0.clone();
    let mut now = 0.0;
    let mut at_t = None;
    let mut sup: f64 = 0.0;
    for &t in &times {
        f = evolve_kinetic(&f, spectrum, eta, eta * eta, t - now, dt).map_err(|e| e.at_stage("item3.evolve"))?;
        now = t;
        let heat = heat_solve(&rho0, d_eps, t)?;
        let rel = f.spatial_marginal().relative_l2(&heat)?;
        sup = sup.max(rel);
        if t == n.t {
            at_t = Some(f.clone());
        }
    }
    let f_t = at_t.expect("t is on the time grid");
    let marginal = f_t.spatial_marginal();
    let heat = heat_solve(&rho0, d_eps, n.t)?;
    let rel = marginal.relative_l2(&heat)?;
    let rel_limit = marginal.relative_l2(&heat_solve(&rho0, d_limit, n.t)?)?;

    // Richardson on dt for a second-order scheme: |u_h − u_{h/2}|/3.
    let half =
        evolve_kinetic(&f0, spectrum, eta, eta * eta, n.t, 0.5 * dt).map_err(|e| e.at_stage("item3.richardson"))?;
    let cells = |s: &SpatialField| s.cell_averages(n.bins_x);
    let area = (n.side / n.bins_x as f64).powi(2);
    let fine = cells(&half.spatial_marginal());
    let coarse = cells(&marginal);
    let richardson = fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).sum::<f64>() * area / 3.0;

    let seed = derive_seed(n.seed, index as u64);
    let spec = HistogramSpec::new(n.side, n.bins_x, 1);
    let mc = process.estimate_histogram(&config.initial.profile(), spec, eta * n.t, n.samples, seed);
    let hist = Distribution::Histogram {
        counts: mc.spatial_counts(),
        total: mc.samples,
        cell: area,
    };
    let boot = Bootstrap { replicates: 200, seed };
    let kin = compare_distributions(
        &hist,
        &Distribution::Density {
            values: fine,
            cell: area,
        },
        Metric::L1,
        boot,
    )?;
    let heat_cells = Distribution::Density {
        values: cells(&heat),
        cell: area,
    };
    let mc_heat = compare_distributions(&hist, &heat_cells, Metric::L1, boot)?;
    let noise = histogram_error(&hist, Metric::L1, boot)?;

    Ok(DiffusiveRung {
        row: vec![
            epsilon,
            eta,
            dt,
            d_eps,
            rel,
            sup,
            rel_limit,
            kin.value,
            kin.std_error,
            noise,
            richardson,
            mc_heat.value,
            elapsed(clock),
        ],
        field: f_t,
    })
}

pub const DIFFUSIVE_COLUMNS: [&str; 13] = [
    "epsilon",
    "eta",
    "dt_used",
    "d_eps",
    "kinetic_heat_rel_l2",
    "kinetic_heat_rel_l2_sup",
    "limit_d_rel_l2",
    "mc_kinetic_l1",
    "mc_kinetic_l1_error",
    "mc_noise_l1",
    "richardson_l1",
    "mc_heat_l1",
    "runtime_s",
];

/// Item 3 (η = |log ε|, operator L/|log ε|) and the window with η = ε^{−λ}
/// and the unrenormalized operator.
fn diffusive(config: &ExperimentConfig) -> Result<(ConvergenceTable, Vec<AngularField>)> {
    let n = &config.numerics;
    let p = &config.physics;
    let name = if config.experiment == ExperimentKind::Theorem51 {
        "theorem51"
    } else {
        "item3"
    };
    let mut table = ConvergenceTable::new(name, config, &DIFFUSIVE_COLUMNS)?;
    let b_limit = 2.0 * p.alpha * p.mu / p.speed.powi(3);
    let d_limit = renormalized_landau_spectrum(b_limit, p.speed, 1)?.diffusion_coefficient(p.speed);
    let table_law = match &config.scattering_table {
        Some(path) => Some(TabulatedScattering::from_csv(path).map_err(|e| e.at_stage("theorem51.table"))?),
        None => None,
    };
    let mut fields = Vec::new();
    for (i, &eps) in config.ladder.iter().enumerate() {
        let rung = if config.experiment == ExperimentKind::Item3 {
            let model = config.model(eps).map_err(|e| e.at_stage("item3.model"))?;
            let spectrum =
                renormalized_boltzmann_spectrum(&model, p.mu, n.harmonics).map_err(|e| e.at_stage("item3.spectrum"))?;
            let process = JumpProcess::from_model(model, p.mu, RateScale::Standard);
            diffusive_rung(config, i, eps, model.log_scale(), &spectrum, &process, d_limit)
        } else {
            let lambda = config.lambda_exp.expect("validated");
            let eta = eps.powf(-lambda);
            // ∂ₜf + ηv·∇f = η²L_εf is the process with rate η·r run for time ηt.
            let rate = 2.0 * p.mu * p.speed * eps.powf(-2.0 * p.alpha);
            match &table_law {
                Some(law) => {
                    let spectrum =
                        law_spectrum(law, 0.5 * rate, n.harmonics).map_err(|e| e.at_stage("theorem51.spectrum"))?;
                    let process = JumpProcess::new(law.clone(), eta * rate, p.speed);
                    diffusive_rung(config, i, eps, eta, &spectrum, &process, d_limit)
                }
                None => {
                    let model = config.model(eps).map_err(|e| e.at_stage("theorem51.model"))?;
                    let spectrum =
                        boltzmann_spectrum(&model, p.mu, n.harmonics).map_err(|e| e.at_stage("theorem51.spectrum"))?;
                    let process =
                        JumpProcess::new(model, eta * collision_rate(&model, p.mu, RateScale::Standard), p.speed);
                    diffusive_rung(config, i, eps, eta, &spectrum, &process, d_limit)
                }
            }
        }?;
        table.push_row(rung.row)?;
        fields.push(rung.field);
    }
    let d = table.column("kinetic_heat_rel_l2").unwrap_or_default();
    table.passed = Some(strictly_decreasing(&d) && d.last().is_some_and(|&x| x < config.tolerance));
    Ok((table, fields))
}

fn pathology(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    let p = &config.physics;
    let n = &config.numerics;
    let mut table = ConvergenceTable::new(
        "pathology_decay",
        config,
        &[
            "epsilon",
            "log_horizon",
            "horizon",
            "samples",
            "overlap",
            "overlap_error",
            "recollision",
            "recollision_error",
            "interference",
            "interference_error",
            "chi1",
            "chi1_error",
            "any",
            "any_error",
            "mean_events",
            "runtime_s",
        ],
    )?;
    let mut passed = true;
    for (flag, horizon) in [(0.0, HorizonMode::Fixed), (1.0, HorizonMode::Log)] {
        let clock = Instant::now();
        let pc = PathologyConfig {
            alpha: p.alpha,
            mu: p.mu,
            phi0: p.phi0,
            speed: p.speed,
            t: n.t,
            horizon,
            source: config.pathology_source,
            seed: derive_seed(n.seed, flag as u64),
        };
        let rows = pathology_rates(&pc, &config.ladder, n.samples).map_err(|e| e.at_stage("pathology.rates"))?;
        let per_row = elapsed(clock) / rows.len() as f64;
        for r in &rows {
            table.push_row(vec![
                r.epsilon,
                flag,
                r.horizon,
                r.samples as f64,
                r.overlap.value,
                r.overlap.std_error,
                r.recollision.value,
                r.recollision.std_error,
                r.interference.value,
                r.interference.std_error,
                r.chi1.value,
                r.chi1.std_error,
                r.any.value,
                r.any.std_error,
                r.mean_events,
                per_row,
            ])?;
        }
        let slopes = fit_decay_slopes(&rows);
        let prefix = if flag == 0.0 { "fixed" } else { "log" };
        for (name, fit) in [
            ("overlap", slopes.overlap),
            ("recollision", slopes.recollision),
            ("interference", slopes.interference),
            ("chi1", slopes.chi1),
        ] {
            let (s, se) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.slope_se));
            table.summary.insert(format!("{prefix}.{name}.slope"), s);
            table.summary.insert(format!("{prefix}.{name}.slope_error"), se);
            if flag == 0.0 {
                passed &= s - 2.0 * se > 0.0;
            }
        }
    }
    table.passed = Some(passed);
    Ok(table)
}

fn coefficient_sweep(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    let p = &config.physics;
    let target = 2.0 * p.alpha * p.mu / p.speed.powi(3);
    let mut table = ConvergenceTable::new(
        "coefficient_sweep",
        config,
        &[
            "epsilon",
            "b_tilde",
            "b_renorm",
            "relative_gap",
            "quadrature_error",
            "normalized_second_moment",
            "a1",
            "a2_over_a1",
            "b_over_a1",
            "runtime_s",
        ],
    )?;
    let rows: Vec<Vec<f64>> = config
        .ladder
        .par_iter()
        .map(|&eps| {
            let clock = Instant::now();
            let model = config.model(eps)?;
            let r = compute_b_for(&model, p.mu, p.alpha / 4.0)?;
            let m = velocity_moments(&model)?;
            let (a1, a2, b) = r
                .appendix_terms
                .map_or((f64::NAN, f64::NAN, f64::NAN), |t| (t.a1, t.a2_over_a1, t.b_over_a1));
            Ok(vec![
                eps,
                r.b_tilde,
                r.b_renormalized,
                r.b_renormalized / target - 1.0,
                r.quadrature_error,
                m.normalized_second,
                a1,
                a2,
                b,
                elapsed(clock),
            ])
        })
        .collect::<Result<_>>()
        .map_err(|e: Error| e.at_stage("coefficient_sweep"))?;
    for r in rows {
        table.push_row(r)?;
    }
    table.summary.insert("target".into(), target);
    let gap = table.column("relative_gap").unwrap_or_default();
    table.passed = Some(gap.last().is_some_and(|g| g.abs() < 0.1));
    Ok(table)
}
