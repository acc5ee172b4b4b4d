//! Acceptance suite: ten end-to-end checks of the laboratory, one test and
//! one final pass line each. Every check builds its own twin data from
//! first principles so the verdicts are independent of the unit tests.

use std::f64::consts::PI;

use num_complex::Complex64;

use obslab_core::damped_wave::{solve_wave_boundary_damped, EdgeDamping};
use obslab_core::eigen::{dirichlet_eigenpairs, mixed_square_eigenpair};
use obslab_core::heat::solve_heat;
use obslab_core::inequality;
use obslab_core::recovery::boundary_damping::{
    per_edge_basis, recover_boundary_damping, GaussNewtonOptions,
};
use obslab_core::recovery::config::{epsilon_from_s, level_from_s, modes_from_epsilon};
use obslab_core::recovery::potential_damping_wave::{
    recover_potential_damping_wave, ComplexTrace,
};
use obslab_core::recovery::potential_heat::recover_potential_heat;
use obslab_core::recovery::source_wave::recover_source_wave;
use obslab_core::recovery::RecoveryConfig;
use obslab_core::rng::Rng;
use obslab_core::solution::neumann_trace;
use obslab_core::stability::{certify, rate_fit, RateFamily, StabilityModulus, SweepPoint};
use obslab_core::sweep::{
    run_sweep, PerturbationProfile, SweepConfig, SweepPipeline,
};
use obslab_core::volterra;
use obslab_core::wave::solve_wave;
use obslab_core::{norm, Boundary, BoundaryTrace, Field, Grid, Kernel, NormKind};

fn l2_diff(a: &Field, b: &Field) -> f64 {
    norm(&a.sub(b).unwrap(), NormKind::L2).unwrap()
}

fn max_abs_rows(t: &BoundaryTrace) -> f64 {
    t.rows.iter().flatten().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

fn add_noise(trace: &mut BoundaryTrace, level: f64, scale: f64, seed: u64) {
    let mut rng = Rng::new(seed);
    for row in trace.rows.iter_mut().skip(1) {
        for v in row.iter_mut() {
            *v += level * scale * rng.standard_normal();
        }
    }
}

fn restrict(t: BoundaryTrace, fine: &Grid, coarse: &Grid) -> BoundaryTrace {
    t.subsample_time(2).unwrap().subsample_nodes(fine, coarse).unwrap()
}

#[test]
fn acceptance_01_forward_fidelity() {
    // Standing wave mode on the interval.
    let grid = Grid::interval(401).unwrap();
    let zero = Field::zeros(&grid);
    let u0 = Field::from_fn(&grid, |x, _| 2f64.sqrt() * (PI * x).sin());
    let tau = 2.0;
    let dt = grid.hx() / 2.0;
    let sol = solve_wave(&grid, &zero, &zero, &u0, &zero, None, tau, dt).unwrap();
    let exact = u0.scaled((PI * sol.tau()).cos());
    let wave_err = l2_diff(&sol.final_field(), &exact);
    assert!(wave_err <= 1e-3, "wave mode error {wave_err}");

    // Decaying heat mode.
    let tau_h = 0.1;
    let sol = solve_heat(&grid, &zero, &u0, None, tau_h, 1e-4).unwrap();
    let exact = u0.scaled((-PI * PI * sol.tau()).exp());
    let heat_err = l2_diff(&sol.final_field(), &exact);
    assert!(heat_err <= 1e-3, "heat mode error {heat_err}");

    // Undamped mode of the mixed square problem, frequency sqrt(pi^2 / 2).
    let square = Grid::square(101, 101).unwrap();
    let (lambda, phi) = mixed_square_eigenpair(&square, 0, 0).unwrap();
    assert!((lambda - PI * PI / 2.0).abs() <= 1e-12);
    let damping = EdgeDamping::constant(&square, 0.0).unwrap();
    let zero2 = Field::zeros(&square);
    let sol =
        solve_wave_boundary_damped(&square, &damping, &phi, &zero2, None, 2.0, 0.004).unwrap();
    let exact = phi.scaled((lambda.sqrt() * sol.tau()).cos());
    let square_err = l2_diff(&sol.final_field(), &exact);
    assert!(square_err <= 5e-3, "square mode error {square_err}");

    // Second-order convergence of the wave solver on three grids.
    let mut errors = Vec::new();
    for n in [51, 101, 201] {
        let g = Grid::interval(n).unwrap();
        let z = Field::zeros(&g);
        let u0 = Field::from_fn(&g, |x, _| 2f64.sqrt() * (PI * x).sin());
        let dt = g.hx() / 2.0;
        let sol = solve_wave(&g, &z, &z, &u0, &z, None, 0.7, dt).unwrap();
        let exact = u0.scaled((PI * sol.tau()).cos());
        errors.push(l2_diff(&sol.final_field(), &exact));
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() <= 0.3, "observed order {order}, errors {errors:?}");
    }
    println!(
        "ACCEPTANCE 01 forward fidelity: PASS (wave {wave_err:.2e}, heat {heat_err:.2e}, \
         square {square_err:.2e})"
    );
}

#[test]
fn acceptance_02_volterra_round_trip_and_gronwall() {
    let tau = 1.0;
    let dt = 1e-3;
    let kernels: Vec<(&str, Kernel)> = vec![
        ("1", Kernel::from_real_fn(tau, dt, |_| 1.0).unwrap()),
        ("exp(-t)", Kernel::from_real_fn(tau, dt, |t| (-t).exp()).unwrap()),
        ("cos(3t)", Kernel::from_real_fn(tau, dt, |t| (3.0 * t).cos()).unwrap()),
        (
            "exp(it)",
            Kernel::from_complex_fn(tau, dt, |t| Complex64::new(t.cos(), t.sin())).unwrap(),
        ),
    ];
    let n = kernels[0].1.len();
    let truth: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.5 * (2.0 * i as f64 * dt).sin(), 0.0))
        .collect();
    let truth_norm = volterra::series_l2_norm(dt, &truth);
    for (name, kernel) in &kernels {
        let data = volterra::convolve(kernel, &truth).unwrap();
        let recovered = volterra::deconvolve(kernel, &data).unwrap();
        let diff: Vec<Complex64> =
            recovered.iter().zip(&truth).map(|(a, b)| a - b).collect();
        let rel = volterra::series_l2_norm(dt, &diff) / truth_norm;
        assert!(rel <= 1e-3, "kernel {name}: round trip error {rel}");
        let amp = volterra::amplification_constant(kernel, tau, 1.0).unwrap();
        let h_l2 = volterra::series_l2_norm(dt, &recovered);
        let y_h1 = volterra::series_h1_norm(dt, &data);
        assert!(
            h_l2 <= amp * y_h1,
            "kernel {name}: bound {:.4e} below energy {h_l2:.4e}",
            amp * y_h1
        );
    }
    println!("ACCEPTANCE 02 Volterra round trip and Gronwall bound: PASS");
}

#[test]
fn acceptance_03_duhamel_identity() {
    // The source-driven run must equal the kernel convolved with the run
    // that carries the source profile as initial velocity.
    let grid = Grid::interval(201).unwrap();
    let zero = Field::zeros(&grid);
    let f = Field::from_fn(&grid, |x, _| (PI * x).sin() + 0.5 * (3.0 * PI * x).sin());
    let dt = grid.hx() / 2.0;
    let tau = 1.5;
    let kernel = Kernel::from_real_fn(tau, dt, |t| (2.0 * t).cos() * (1.0 + t)).unwrap();
    let driven =
        solve_wave(&grid, &zero, &zero, &zero, &zero, Some((&kernel, &f)), tau, dt).unwrap();
    let homo = solve_wave(&grid, &zero, &zero, &zero, &f, None, tau, dt).unwrap();
    let steps = homo.time_steps();
    let mut num = 0.0;
    let mut den = 0.0;
    for idx in 0..grid.node_count() {
        let hist: Vec<f64> = (0..steps).map(|l| homo.raw(l)[idx]).collect();
        let conv = volterra::convolve_real(&kernel, &hist).unwrap();
        let w = grid.quad_weight(idx);
        for (l, &c) in conv.iter().enumerate() {
            num += w * (driven.raw(l)[idx] - c).powi(2);
            den += w * c * c;
        }
    }
    let rel = (num / den.max(1e-300)).sqrt();
    assert!(rel <= 1e-3, "Duhamel identity relative error {rel}");
    println!("ACCEPTANCE 03 Duhamel identity: PASS (relative error {rel:.2e})");
}

fn source_twin_run(noise: f64, seed: u64) -> (Vec<f64>, f64, f64) {
    let coarse = Grid::interval(101).unwrap();
    let fine = Grid::interval(201).unwrap();
    let tau = 1.0;
    let dt = 5e-3;
    let truth = [1.0, 0.5];
    let kernel_fine = Kernel::from_real_fn(tau, dt / 2.0, |t| (-t).exp()).unwrap();
    let kernel = Kernel::from_real_fn(tau, dt, |t| (-t).exp()).unwrap();
    let zero_f = Field::zeros(&fine);
    let fine_basis = dirichlet_eigenpairs(&fine, &zero_f, 2).unwrap();
    let mut f_true = Field::zeros(&fine);
    for (i, &c) in truth.iter().enumerate() {
        f_true = f_true.axpy(c, &fine_basis.eigenfunctions[i]).unwrap();
    }
    let sol = solve_wave(
        &fine,
        &zero_f,
        &zero_f,
        &zero_f,
        &zero_f,
        Some((&kernel_fine, &f_true)),
        tau,
        dt / 2.0,
    )
    .unwrap();
    let mut trace = restrict(neumann_trace(&sol, Boundary::Both).unwrap(), &fine, &coarse);
    let scale = max_abs_rows(&trace);
    if noise > 0.0 {
        add_noise(&mut trace, noise, scale, seed);
    }
    let zero_c = Field::zeros(&coarse);
    let basis = dirichlet_eigenpairs(&coarse, &zero_c, 4).unwrap();
    let mut rc = RecoveryConfig::from_s(4, 2.0, 1).unwrap();
    rc.noise_level = noise;
    let result = recover_source_wave(&coarse, &kernel, &trace, &basis, &rc).unwrap();
    let err = result
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, &m)| (m - truth.get(i).copied().unwrap_or(0.0)).powi(2))
        .sum::<f64>()
        .sqrt();
    (result.coefficients, err, result.bound)
}

#[test]
fn acceptance_04_inverse_wave_source() {
    let (coeffs, err, _) = source_twin_run(0.0, 0);
    assert!(err <= 2e-2, "noiseless coefficient error {err}, coefficients {coeffs:?}");
    for (i, noise) in [1e-4, 1e-3, 1e-2].into_iter().enumerate() {
        let (_, noisy_err, bound) = source_twin_run(noise, 1000 + i as u64);
        assert!(
            bound >= noisy_err,
            "noise {noise}: certified bound {bound:.4e} below error {noisy_err:.4e}"
        );
    }
    println!("ACCEPTANCE 04 inverse wave source: PASS (noiseless error {err:.2e})");
}

#[test]
fn acceptance_05_inverse_heat_potential() {
    // Truncation bookkeeping at s = 3, n = 1: epsilon = s^4, level = 3,
    // retained modes = floor(epsilon^{1/2}) = 9.
    assert_eq!(epsilon_from_s(3.0, 1), 81.0);
    assert_eq!(level_from_s(3.0), 3);
    assert_eq!(modes_from_epsilon(81.0, 1), 9);

    let coarse = Grid::interval(101).unwrap();
    let fine = Grid::interval(201).unwrap();
    let tau = 0.2;
    let dt = 1e-3;
    let zero_f = Field::zeros(&fine);
    let fine_basis = dirichlet_eigenpairs(&fine, &zero_f, 10).unwrap();
    let dq_fine = fine_basis.eigenfunctions[0].scaled(0.3);
    let responses: Vec<BoundaryTrace> = (0..10)
        .map(|k| {
            let phi = &fine_basis.eigenfunctions[k];
            let a = solve_heat(&fine, &dq_fine, phi, None, tau, dt / 2.0).unwrap();
            let b = solve_heat(&fine, &zero_f, phi, None, tau, dt / 2.0).unwrap();
            restrict(
                neumann_trace(&a, Boundary::Both)
                    .unwrap()
                    .sub(&neumann_trace(&b, Boundary::Both).unwrap())
                    .unwrap(),
                &fine,
                &coarse,
            )
        })
        .collect();
    let zero_c = Field::zeros(&coarse);
    let basis = dirichlet_eigenpairs(&coarse, &zero_c, 10).unwrap();
    let rc = RecoveryConfig::from_s(10, 3.0, 1).unwrap();
    let result = recover_potential_heat(&coarse, &zero_c, &responses, &basis, &rc).unwrap();
    let truth = basis.eigenfunctions[0].scaled(0.3);
    let rel = l2_diff(&result.fields[0], &truth) / norm(&truth, NormKind::L2).unwrap();
    assert!(rel <= 0.10, "relative error {rel}");
    println!("ACCEPTANCE 05 inverse heat potential: PASS (relative error {rel:.2e})");
}

#[test]
fn acceptance_06_inverse_wave_potential_damping() {
    let coarse = Grid::interval(101).unwrap();
    let fine = Grid::interval(201).unwrap();
    let tau = 1.0;
    let dt = 5e-3;
    let a_true = Field::from_fn(&fine, |x, _| 0.2 * x * (1.0 - x));
    let zero_f = Field::zeros(&fine);
    let fine_basis = dirichlet_eigenpairs(&fine, &zero_f, 3).unwrap();
    let responses: Vec<ComplexTrace> = (0..3)
        .map(|k| {
            let phi = &fine_basis.eigenfunctions[k];
            let vel = phi.scaled(fine_basis.eigenvalues[k].sqrt());
            let runs: Vec<BoundaryTrace> = [
                (phi.clone(), zero_f.clone(), &a_true),
                (phi.clone(), zero_f.clone(), &zero_f),
                (zero_f.clone(), vel.clone(), &a_true),
                (zero_f.clone(), vel, &zero_f),
            ]
            .into_iter()
            .map(|(u0, u1, a)| {
                let sol =
                    solve_wave(&fine, &zero_f, a, &u0, &u1, None, tau, dt / 2.0).unwrap();
                restrict(neumann_trace(&sol, Boundary::Both).unwrap(), &fine, &coarse)
            })
            .collect();
            ComplexTrace::new(runs[0].sub(&runs[1]).unwrap(), runs[2].sub(&runs[3]).unwrap())
                .unwrap()
        })
        .collect();
    let zero_c = Field::zeros(&coarse);
    let basis = dirichlet_eigenpairs(&coarse, &zero_c, 9).unwrap();
    let rc = RecoveryConfig::from_s(3, 3.0, 1).unwrap();
    let result =
        recover_potential_damping_wave(&coarse, &zero_c, &responses, &basis, &rc).unwrap();
    let a_ref = Field::from_fn(&coarse, |x, _| 0.2 * x * (1.0 - x));
    let rel = l2_diff(&result.fields[1], &a_ref) / norm(&a_ref, NormKind::L2).unwrap();
    assert!(rel <= 0.15, "damping relative error {rel}");

    // Purely real (potential-only) linearized responses must leave the
    // damping channel empty to discretization accuracy.
    let grid = Grid::interval(201).unwrap();
    let q0 = Field::zeros(&grid);
    let basis = dirichlet_eigenpairs(&grid, &q0, 6).unwrap();
    let dq = basis.eigenfunctions[0].scaled(0.1);
    let dt = 2.5e-3;
    let zero = Field::zeros(&grid);
    let linear: Vec<ComplexTrace> = (0..2)
        .map(|k| {
            let omega = basis.eigenvalues[k].sqrt();
            let f_k = dq.scaled(-1.0).mul(&basis.eigenfunctions[k]).unwrap();
            let ker_re = Kernel::from_real_fn(tau, dt, |t| (omega * t).cos()).unwrap();
            let ker_im = Kernel::from_real_fn(tau, dt, |t| (omega * t).sin()).unwrap();
            let re =
                solve_wave(&grid, &q0, &zero, &zero, &zero, Some((&ker_re, &f_k)), tau, dt)
                    .unwrap();
            let im =
                solve_wave(&grid, &q0, &zero, &zero, &zero, Some((&ker_im, &f_k)), tau, dt)
                    .unwrap();
            ComplexTrace::new(
                neumann_trace(&re, Boundary::Both).unwrap(),
                neumann_trace(&im, Boundary::Both).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let rc = RecoveryConfig::from_s(2, 2.0, 1).unwrap();
    let result = recover_potential_damping_wave(&grid, &q0, &linear, &basis, &rc).unwrap();
    let q_scale = result.fields[0].max_abs();
    let leak = result.fields[1].max_abs();
    assert!(q_scale >= 0.05, "potential channel lost the signal: {q_scale}");
    // Relative to the planted perturbation amplitude 0.1.
    let leak_rel = leak / (q_scale / 0.1);
    assert!(leak_rel <= 1e-3, "imaginary-channel leak {leak_rel}");
    println!(
        "ACCEPTANCE 06 inverse wave potential and damping: PASS (damping error {rel:.2e}, \
         leak {leak_rel:.2e})"
    );
}

#[test]
fn acceptance_07_boundary_damping() {
    // Constant damping 0.5 from 4 probes over tau = 8.
    let coarse = Grid::square(17, 17).unwrap();
    let fine = Grid::square(33, 33).unwrap();
    let tau = 8.0;
    let dt = 0.04;
    let a_true = 0.5;
    let truth = EdgeDamping::constant(&fine, a_true).unwrap();
    let probe_pairs = [(0usize, 0usize), (1, 0), (0, 1), (1, 1)];
    let mut probes = Vec::new();
    let mut data = Vec::new();
    for &(k, l) in &probe_pairs {
        let (_, phi_f) = mixed_square_eigenpair(&fine, k, l).unwrap();
        let zero_f = Field::zeros(&fine);
        let sol =
            solve_wave_boundary_damped(&fine, &truth, &phi_f, &zero_f, None, tau, dt / 2.0)
                .unwrap();
        data.push(restrict(
            neumann_trace(&sol, Boundary::Gamma0).unwrap(),
            &fine,
            &coarse,
        ));
        let (_, phi_c) = mixed_square_eigenpair(&coarse, k, l).unwrap();
        probes.push((phi_c, Field::zeros(&coarse)));
    }
    let initial = EdgeDamping::constant(&coarse, 0.0).unwrap();
    let opts = GaussNewtonOptions {
        basis: Some(per_edge_basis(&coarse).unwrap()),
        ..GaussNewtonOptions::default()
    };
    let fit = recover_boundary_damping(
        &coarse, &probes, &data, tau, dt, &initial, 1.0, 0.5, &opts,
    )
    .unwrap();
    let nx = 17;
    let values = fit.damping.values();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let bottom = (mean(&values[..nx - 1]) - a_true).abs() / a_true;
    let left = (mean(&values[nx - 1..]) - a_true).abs() / a_true;
    assert!(bottom <= 0.05, "bottom edge relative error {bottom}");
    assert!(left <= 0.05, "left edge relative error {left}");

    // Amplitude sweep certified against the Hoelder-0.1 modulus.
    let sc = SweepConfig {
        pipeline: SweepPipeline::BoundaryDamping,
        profile: PerturbationProfile::Constant,
        nodes: 13,
        probes: 2,
        s: 2.0,
        tau: 2.0,
        dt: 0.05,
        noise_level: 0.0,
        seed: 9,
    };
    let records = run_sweep(&sc, &[0.4, 0.2, 0.1, 0.05], 2).unwrap();
    let points: Vec<SweepPoint> = records.iter().filter_map(|r| r.point()).collect();
    assert_eq!(points.len(), 4, "sweep rows failed: {records:?}");
    let constant = certify(&points, &StabilityModulus::Hoelder { exponent: 0.1 }).unwrap();
    assert!(constant.is_finite() && constant > 0.0, "certified constant {constant}");
    println!(
        "ACCEPTANCE 07 boundary damping: PASS (edges {bottom:.2e}/{left:.2e}, C = {constant:.3e})"
    );
}

#[test]
fn acceptance_08_inequality_lab() {
    let grid = Grid::interval(801).unwrap();
    let h = grid.hx();
    let square = Grid::square(101, 101).unwrap();
    let hs = square.hx();
    let convex_samples: Vec<(f64, f64)> = vec![
        (
            inequality::hardy_ratio(&Field::from_fn(&grid, |x, _| (PI * x).sin())).unwrap(),
            h,
        ),
        (
            inequality::hardy_ratio(&Field::from_fn(&grid, |x, _| x * (1.0 - x))).unwrap(),
            h,
        ),
        (
            inequality::hardy_ratio(&Field::from_fn(&square, |x, y| {
                (PI * x).sin() * (PI * y).sin()
            }))
            .unwrap(),
            hs,
        ),
        (
            inequality::hardy_ratio(&Field::from_fn(&square, |x, y| {
                x * (1.0 - x) * y * (1.0 - y)
            }))
            .unwrap(),
            hs,
        ),
    ];
    for (i, &(c, step)) in convex_samples.iter().enumerate() {
        assert!(c >= 0.25 - 5.0 * step, "sample {i}: Hardy ratio {c}");
    }

    let u = Field::from_fn(&grid, |x, _| 2f64.sqrt() * (PI * x).sin());
    let hopf = inequality::hopf_constant(&u).unwrap();
    let claimed = 2.0 * 2f64.sqrt();
    assert!((hopf - claimed).abs() <= 1e-3, "Hopf constant {hopf} vs {claimed}");

    let phi = Field::from_fn(&grid, |x, _| (2.0 * PI * x).sin());
    let candidates = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
    let (delta_hat, _) = inequality::negative_power_delta(&phi, &candidates).unwrap();
    assert!(delta_hat < 1.5, "delta = 1.5 must be rejected, got {delta_hat}");
    assert!(delta_hat < 1.0, "simple zero admits only delta < 1, got {delta_hat}");
    println!(
        "ACCEPTANCE 08 inequality lab: PASS (Hopf {hopf:.4}, delta_hat {delta_hat})"
    );
}

#[test]
fn acceptance_09_stability_moduli() {
    // Planted rates are recovered to 1e-3.
    let distances: Vec<f64> = (1..=8).map(|i| (-1.0_f64).exp() * 0.5_f64.powi(i)).collect();
    let hoelder_points: Vec<SweepPoint> = distances
        .iter()
        .map(|&d| SweepPoint { distance: d, error: 0.7 * d.powf(0.37) })
        .collect();
    let fit = rate_fit(&hoelder_points, RateFamily::Hoelder).unwrap();
    assert!((fit.exponent - 0.37).abs() <= 1e-3, "fitted exponent {}", fit.exponent);
    let log_points: Vec<SweepPoint> = distances
        .iter()
        .map(|&d| SweepPoint { distance: d, error: 1.3 * d.ln().abs().powf(-0.4) })
        .collect();
    let fit = rate_fit(&log_points, RateFamily::LogPower).unwrap();
    assert!((fit.exponent - 0.4).abs() <= 1e-3, "fitted power {}", fit.exponent);

    // Heat-potential sweep certified against the logarithmic modulus.
    let sc = SweepConfig {
        pipeline: SweepPipeline::HeatPotential,
        profile: PerturbationProfile::FirstMode,
        nodes: 51,
        probes: 6,
        s: 3.0,
        tau: 0.2,
        dt: 2e-3,
        noise_level: 0.0,
        seed: 5,
    };
    let records = run_sweep(&sc, &[0.3, 0.15, 0.075], 2).unwrap();
    let points: Vec<SweepPoint> = records.iter().filter_map(|r| r.point()).collect();
    assert_eq!(points.len(), 3, "heat sweep rows failed: {records:?}");
    let c_heat = certify(&points, &StabilityModulus::LogPower { power: 0.2 }).unwrap();
    assert!(c_heat.is_finite() && c_heat > 0.0, "heat constant {c_heat}");

    // Wave sweep certified against the Hoelder-1/2 modulus.
    let sc = SweepConfig {
        pipeline: SweepPipeline::WavePotentialDamping,
        profile: PerturbationProfile::Parabola,
        nodes: 51,
        probes: 3,
        s: 3.0,
        tau: 1.0,
        dt: 0.01,
        noise_level: 0.0,
        seed: 5,
    };
    let records = run_sweep(&sc, &[0.2, 0.1, 0.05], 2).unwrap();
    let points: Vec<SweepPoint> = records.iter().filter_map(|r| r.point()).collect();
    assert_eq!(points.len(), 3, "wave sweep rows failed: {records:?}");
    let c_wave = certify(&points, &StabilityModulus::Hoelder { exponent: 0.5 }).unwrap();
    assert!(c_wave.is_finite() && c_wave > 0.0, "wave constant {c_wave}");
    println!(
        "ACCEPTANCE 09 stability moduli: PASS (C_heat = {c_heat:.3e}, C_wave = {c_wave:.3e})"
    );
}

#[test]
fn acceptance_10_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("experiment.toml");
    std::fs::write(
        &config_path,
        "problem = \"wave-source\"\ninversion_nodes = 21\nforward_nodes = 41\n\
         tau = 0.5\ndt = 0.01\nseed = 11\nprobes = 3\nnoise_level = 0.001\n\
         source_coefficients = [1.0, 0.5]\n",
    )
    .unwrap();
    let mut artifacts = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_obslab"))
            .args([
                "forward",
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        artifacts.push(std::fs::read(dir.join("trace.csv")).unwrap());
    }
    assert_eq!(artifacts[0], artifacts[1], "CSV outputs differ between identical runs");
    println!("ACCEPTANCE 10 reproducibility: PASS (byte-identical CSV outputs)");
}
