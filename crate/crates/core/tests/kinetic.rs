//! Spectral kinetic solver against exact solutions.

use std::f64::consts::TAU;

use lorentz_core::kinetic::{
    evolve_kinetic, evolve_scaled, heat_solve, hilbert_check, landau_spectrum, law_spectrum, read_snapshot,
    relaxation_check, renormalized_landau_spectrum, write_snapshot, AngularField, GridSpec, Scaling, SpatialField,
};
use lorentz_core::{Error, ScatteringModel};
use proptest::prelude::*;

/// J₀ by its power series; plenty for arguments below 10.
fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let (mut term, mut sum) = (1.0, 1.0);
    for m in 1..60 {
        term *= q / (m * m) as f64;
        sum += term;
    }
    sum
}

#[test]
fn free_transport_of_an_isotropic_wave_gives_bessel_decay() {
    // f₀ = cos(κx) ⇒ ⟨f⟩(t) = J₀(κ|v|t)cos(κx).
    let grid = GridSpec::new(TAU, 16).unwrap();
    let (kappa, speed, t) = (2.0, 1.3, 0.9);
    let f0 = AngularField::from_fn(grid, 24, speed, |x, _| (kappa * x.x).cos());
    let spectrum = landau_spectrum(1.0, speed, 24).unwrap();
    let f = evolve_kinetic(&f0, &spectrum, 1.0, 0.0, t, 1e-3).unwrap();
    let rho = f.spatial_marginal();
    let j0 = bessel_j0(kappa * speed * t);
    for ix in 0..16 {
        let expect = j0 * (kappa * grid.coordinate(ix)).cos();
        assert!((rho.values[ix] - expect).abs() < 1e-9, "{} vs {expect}", rho.values[ix]);
    }
    assert!(f.reality_defect() < 1e-12);
}

#[test]
fn strang_splitting_is_second_order() {
    let grid = GridSpec::new(8.0, 16).unwrap();
    let spectrum = landau_spectrum(1.0, 1.0, 3).unwrap();
    let f0 = AngularField::from_fn(grid, 3, 1.0, |x, th| {
        1.0 + (TAU * x.x / 8.0).sin() * (1.0 + th.cos()) + 0.3 * (TAU * x.y / 4.0).cos() * (2.0 * th).sin()
    });
    let run = |dt: f64| evolve_kinetic(&f0, &spectrum, 1.0, 4.0, 1.0, dt).unwrap();
    let reference = run(1e-4);
    let e1 = run(0.02).difference(&reference).unwrap().l2_norm();
    let e2 = run(0.01).difference(&reference).unwrap().l2_norm();
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.15, "observed order {order}");
}

#[test]
fn flat_harmonics_decay_with_their_eigenvalues() {
    let grid = GridSpec::new(4.0, 8).unwrap();
    let spectrum = renormalized_landau_spectrum(0.3, 1.5, 4).unwrap();
    let f0 = AngularField::from_fn(grid, 4, 1.5, |_, th| 1.0 + th.cos() + (3.0 * th).sin());
    let f = evolve_scaled(&f0, &spectrum, Scaling::Item1 { eta: 2.0 }, 0.7, 0.01).unwrap();
    for k in [1i64, 3] {
        let expect = (4.0 * spectrum.lambda(k) * 0.7).exp() * f0.get(0, k).norm();
        assert!((f.get(0, k).norm() - expect).abs() < 1e-12);
    }
    // −Bk²/|v|².
    assert!((spectrum.lambda(3) + 0.3 * 9.0 / 2.25).abs() < 1e-15);
}

#[test]
fn oversized_steps_are_refused() {
    let grid = GridSpec::new(4.0, 32).unwrap();
    let spectrum = landau_spectrum(1.0, 1.0, 4).unwrap();
    let f0 = AngularField::from_fn(grid, 4, 1.0, |x, _| x.x.cos());
    let err = evolve_kinetic(&f0, &spectrum, 1.0, 1.0, 1.0, 0.5).unwrap_err();
    assert!(matches!(err, Error::Cfl(_)));
}

#[test]
fn law_spectrum_of_the_barrier_matches_the_boltzmann_operator() {
    let m = ScatteringModel::new(1e-6, 0.1, 0.5, 1.0).unwrap();
    let direct = lorentz_core::kinetic::boltzmann_spectrum(&m, 1.0, 4).unwrap();
    let rate = m.speed * m.coupling_scale();
    let via_law = law_spectrum(&m, rate, 4).unwrap();
    for k in 0..=4 {
        let (a, b) = (direct.lambda(k), via_law.lambda(k));
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300), "k {k}: {a} vs {b}");
    }
}

#[test]
fn hilbert_expansion_recovers_the_generator_diffusivity() {
    let grid = GridSpec::new(20.0, 64).unwrap();
    let g0 = SpatialField::from_fn(grid, |x| (-0.5 * x.norm_sq()).exp() * (1.0 + 0.2 * x.x));
    for (mu, speed) in [(1.0, 1.0), (0.5, 1.7)] {
        let spectrum = landau_spectrum(mu, speed, 4).unwrap();
        let r = hilbert_check(&g0, 50.0, speed, &spectrum).unwrap();
        let d = r.d_extracted.unwrap();
        assert!((d - r.d_generator).abs() < 1e-10 * r.d_generator);
        assert!((r.d_generator - spectrum.diffusion_coefficient(speed)).abs() < 1e-15);
        assert!(r.first_order_residual < 1e-10);
    }
}

#[test]
fn relaxation_distance_stays_under_its_envelope() {
    let grid = GridSpec::new(8.0, 16).unwrap();
    let spectrum = landau_spectrum(1.0, 1.0, 6).unwrap();
    let f0 = AngularField::from_fn(grid, 6, 1.0, |x, th| 1.0 + 0.5 * (TAU * x.x / 8.0).cos() * th.cos());
    let times = [0.0, 0.05, 0.1, 0.2, 0.4];
    let r = relaxation_check(&f0, 6.0, &spectrum, &times, 5e-4).unwrap();
    assert!((r.distances[0] - r.initial_distance).abs() < 1e-14);
    for (d, e) in r.distances.iter().zip(&r.free_decay) {
        assert!(*d <= e + r.envelope_constant / 6.0 + 1e-14);
    }
    assert!(r.distances.last().unwrap() < &(0.2 * r.initial_distance));
}

#[test]
fn heat_flow_is_a_semigroup() {
    let grid = GridSpec::new(10.0, 32).unwrap();
    let rho = SpatialField::from_fn(grid, |x| (-x.norm_sq()).exp() + 0.1 * (TAU * x.y / 10.0).sin());
    let two_steps = heat_solve(&heat_solve(&rho, 0.7, 0.3).unwrap(), 0.7, 0.5).unwrap();
    let one_step = heat_solve(&rho, 0.7, 0.8).unwrap();
    assert!(two_steps.difference(&one_step).unwrap().max_abs() < 1e-14);
    assert!((one_step.mass() - rho.mass()).abs() < 1e-12);
    assert!(heat_solve(&rho, -1.0, 1.0).is_err());
}

#[test]
fn snapshots_round_trip_and_reject_garbage() {
    let grid = GridSpec::new(6.0, 8).unwrap();
    let f = AngularField::from_fn(grid, 3, 1.2, |x, th| (x.x + 2.0 * th).sin() + 1.0);
    let mut buf = Vec::new();
    write_snapshot(&f, &mut buf).unwrap();
    let g = read_snapshot(buf.as_slice()).unwrap();
    assert_eq!(f, g);
    buf[0] = b'X';
    assert!(read_snapshot(buf.as_slice()).is_err());
    assert!(read_snapshot(&buf[..10]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_is_conserved(seed in 0u64..1000, ts in 0.1f64..3.0, cs in 0.0f64..5.0) {
        let grid = GridSpec::new(6.0, 8).unwrap();
        let s = seed as f64;
        let f0 = AngularField::from_fn(grid, 4, 1.0, |x, th| 2.0 + (x.x * 0.9 + s).sin() * (th + s).cos() + 0.2 * (x.y + th).cos());
        let spectrum = landau_spectrum(1.0, 1.0, 4).unwrap();
        let limit = lorentz_core::kinetic::max_stable_dt(&grid, 1.0, &spectrum, 4, ts, cs);
        let f = evolve_kinetic(&f0, &spectrum, ts, cs, 0.5, 0.9 * limit).unwrap();
        prop_assert!((f.mass() - f0.mass()).abs() < 1e-12 * f0.mass().abs());
        prop_assert!(f.l2_norm() <= f0.l2_norm() * (1.0 + 1e-12));
    }
}
