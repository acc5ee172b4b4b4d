//! Subcommand implementations: each one synthesizes its data on the fine
//! grid, runs the matching pipeline from the core library on the inversion
//! grid, writes CSV artifacts, and returns the JSON report sections.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use obslab_core::eigen::{dirichlet_eigenpairs, mixed_square_eigenpair};
use obslab_core::damped_wave::{solve_wave_boundary_damped, EdgeDamping};
use obslab_core::heat::solve_heat;
use obslab_core::inequality;
use obslab_core::recovery::boundary_damping::{
    damping_hoelder_exponent, per_edge_basis, recover_boundary_damping, GaussNewtonOptions,
};
use obslab_core::recovery::potential_damping_wave::{
    recover_potential_damping_wave, ComplexTrace,
};
use obslab_core::recovery::potential_heat::recover_potential_heat;
use obslab_core::recovery::source_wave::recover_source_wave;
use obslab_core::recovery::RecoveryConfig;
use obslab_core::rng::Rng;
use obslab_core::solution::neumann_trace;
use obslab_core::stability::{certify, modulus_eval, rate_fit, RateFamily, StabilityModulus};
use obslab_core::sweep::{run_sweep, PerturbationProfile, SweepConfig, SweepPipeline, SweepRecord};
use obslab_core::volterra;
use obslab_core::wave::solve_wave;
use obslab_core::{norm, Boundary, BoundaryTrace, Field, Grid, Kernel, NormKind};

use crate::config::{ExperimentConfig, KernelKind, ModulusKind, Problem, ProfileKind};
use crate::output::{CsvCell, OutputDir};

/// Failure class of a subcommand; selects the process exit code.
#[derive(Debug)]
pub enum CommandError {
    /// Invalid configuration or unusable request: exit code 1.
    Config(String),
    /// The pipeline ran and failed numerically: exit code 2.
    Numerical(String),
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(m) => write!(f, "configuration error: {m}"),
            CommandError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<obslab_core::Error> for CommandError {
    fn from(e: obslab_core::Error) -> Self {
        CommandError::Numerical(e.to_string())
    }
}

/// JSON report sections produced by a subcommand.
pub struct CommandOutput {
    pub results: Value,
    pub certificates: Value,
    pub diagnostics: Value,
}

/// The eight experiment actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Forward,
    Deconvolve,
    InvertSource,
    InvertPotential,
    InvertDamping,
    VerifyInequalities,
    StabilitySweep,
    Certify,
}

pub fn run(
    action: Action,
    config: &ExperimentConfig,
    out: &mut OutputDir,
    threads: usize,
) -> Result<CommandOutput, CommandError> {
    match action {
        Action::Forward => forward(config, out),
        Action::Deconvolve => deconvolve(config, out),
        Action::InvertSource => invert_source(config, out),
        Action::InvertPotential => invert_potential(config, out),
        Action::InvertDamping => invert_damping(config, out),
        Action::VerifyInequalities => verify_inequalities(config, out),
        Action::StabilitySweep => stability_sweep(config, out, threads, false),
        Action::Certify => stability_sweep(config, out, threads, true),
    }
}

fn kernel_of(kind: KernelKind, tau: f64, dt: f64) -> Result<Kernel, CommandError> {
    let k = match kind {
        KernelKind::One => Kernel::from_real_fn(tau, dt, |_| 1.0),
        KernelKind::ExpDecay => Kernel::from_real_fn(tau, dt, |t| (-t).exp()),
        KernelKind::CosThree => Kernel::from_real_fn(tau, dt, |t| (3.0 * t).cos()),
        KernelKind::ExpImaginary => {
            Kernel::from_complex_fn(tau, dt, |t| Complex64::new(t.cos(), t.sin()))
        }
    };
    Ok(k?)
}

fn profile_of(kind: ProfileKind) -> PerturbationProfile {
    match kind {
        ProfileKind::Parabola => PerturbationProfile::Parabola,
        ProfileKind::FirstMode => PerturbationProfile::FirstMode,
        ProfileKind::Constant => PerturbationProfile::Constant,
    }
}

/// Additive Gaussian noise on every row past t = 0 (the deconvolution
/// requires exact zero-start data), scaled by `level * scale`.
fn add_noise(trace: &mut BoundaryTrace, level: f64, scale: f64, seed: u64) {
    if level <= 0.0 || scale <= 0.0 {
        return;
    }
    let mut rng = Rng::new(seed);
    for row in trace.rows.iter_mut().skip(1) {
        for v in row.iter_mut() {
            *v += level * scale * rng.standard_normal();
        }
    }
}

fn diagnostics_json(map: &BTreeMap<String, f64>) -> Value {
    Value::Object(map.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
}

fn relative_l2(grid_field: &Field, truth: &Field) -> Result<f64, CommandError> {
    let err = norm(&grid_field.sub(truth)?, NormKind::L2)?;
    let den = norm(truth, NormKind::L2)?.max(1e-300);
    Ok(err / den)
}

/// Difference trace between a perturbed and a reference fine-grid run,
/// restricted to the inversion grid in time (stride 2) and space.
fn restrict(trace: BoundaryTrace, fine: &Grid, coarse: &Grid) -> Result<BoundaryTrace, CommandError> {
    Ok(trace.subsample_time(2)?.subsample_nodes(fine, coarse)?)
}

fn trace_csv_rows(trace: &BoundaryTrace) -> Vec<Vec<CsvCell>> {
    trace
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut cells = vec![CsvCell::Float(i as f64 * trace.dt)];
            cells.extend(row.iter().map(|&v| CsvCell::Float(v)));
            cells
        })
        .collect()
}

fn trace_header(trace: &BoundaryTrace) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    header.extend((0..trace.node_count()).map(|i| format!("node_{i}")));
    header
}

// ---------------------------------------------------------------- forward

fn forward(config: &ExperimentConfig, out: &mut OutputDir) -> Result<CommandOutput, CommandError> {
    let tau = config.tau;
    let dt = config.dt / 2.0;
    let amplitude = config.amplitude;
    let profile = profile_of(config.profile);
    let (grid, label, mut trace) = match config.problem {
        Problem::HeatPotential => {
            let grid = Grid::interval(config.forward_nodes)?;
            let q = profile.field(&grid)?.scaled(amplitude);
            let basis = dirichlet_eigenpairs(&grid, &q, 1)?;
            let sol = solve_heat(&grid, &q, &basis.eigenfunctions[0], None, tau, dt)?;
            (grid.clone(), Boundary::Both, neumann_trace(&sol, Boundary::Both)?)
        }
        Problem::WaveSource => {
            let grid = Grid::interval(config.forward_nodes)?;
            let zero = Field::zeros(&grid);
            let count = config.source_coefficients.len().max(1);
            let basis = dirichlet_eigenpairs(&grid, &zero, count)?;
            let mut f = Field::zeros(&grid);
            for (i, &c) in config.source_coefficients.iter().enumerate() {
                f = f.axpy(c, &basis.eigenfunctions[i])?;
            }
            let kernel = kernel_of(config.kernel, tau, dt)?;
            if !kernel.is_real() {
                return Err(CommandError::Config(
                    "kernel: the wave source run needs a real kernel".into(),
                ));
            }
            let sol =
                solve_wave(&grid, &zero, &zero, &zero, &zero, Some((&kernel, &f)), tau, dt)?;
            (grid.clone(), Boundary::Both, neumann_trace(&sol, Boundary::Both)?)
        }
        Problem::WavePotentialDamping => {
            let grid = Grid::interval(config.forward_nodes)?;
            let zero = Field::zeros(&grid);
            let a = profile.field(&grid)?.scaled(amplitude);
            let basis = dirichlet_eigenpairs(&grid, &zero, 1)?;
            let sol =
                solve_wave(&grid, &zero, &a, &basis.eigenfunctions[0], &zero, None, tau, dt)?;
            (grid.clone(), Boundary::Both, neumann_trace(&sol, Boundary::Both)?)
        }
        Problem::BoundaryDamping => {
            let n = config.forward_nodes;
            let grid = Grid::square(n, n)?;
            let damping = EdgeDamping::constant(&grid, amplitude)?;
            let (_, phi) = mixed_square_eigenpair(&grid, 0, 0)?;
            let zero = Field::zeros(&grid);
            let sol = solve_wave_boundary_damped(&grid, &damping, &phi, &zero, None, tau, dt)?;
            (grid.clone(), Boundary::Gamma0, neumann_trace(&sol, Boundary::Gamma0)?)
        }
    };
    let scale = trace.rows.iter().flatten().fold(0.0_f64, |m, &v| m.max(v.abs()));
    add_noise(&mut trace, config.noise_level, scale, config.seed);
    let header = trace_header(&trace);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("trace.csv", &header_refs, &trace_csv_rows(&trace))
        .map_err(CommandError::Config)?;
    out.mark("forward");
    Ok(CommandOutput {
        results: json!({
            "problem": config.problem.name(),
            "boundary": label.name(),
            "time_steps": trace.time_steps(),
            "trace_l2_norm": trace.l2_norm(&grid)?,
        }),
        certificates: json!({}),
        diagnostics: json!({
            "forward_nodes": config.forward_nodes,
            "forward_dt": dt,
            "noise_scale": scale,
        }),
    })
}

// ------------------------------------------------------------- deconvolve

fn deconvolve(
    config: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<CommandOutput, CommandError> {
    let dt = config.dt;
    let kernel = kernel_of(config.kernel, config.tau, dt)?;
    let n = kernel.len();
    let truth: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            Complex64::new(1.0 + 0.5 * (2.0 * t).sin(), 0.0)
        })
        .collect();
    let data = volterra::convolve(&kernel, &truth)?;
    let recovered = volterra::deconvolve(&kernel, &data)?;
    let diff: Vec<Complex64> = recovered.iter().zip(&truth).map(|(a, b)| a - b).collect();
    let rel = volterra::series_l2_norm(dt, &diff)
        / volterra::series_l2_norm(dt, &truth).max(1e-300);
    let amplification = volterra::amplification_constant(&kernel, config.tau, config.kappa)?;
    let h_l2 = volterra::series_l2_norm(dt, &recovered);
    let y_h1 = volterra::series_h1_norm(dt, &data);
    let bound = amplification * y_h1;
    let bound_holds = h_l2 <= bound;
    let rows: Vec<Vec<CsvCell>> = (0..n)
        .map(|i| {
            vec![
                CsvCell::Float(i as f64 * dt),
                CsvCell::Float(truth[i].re),
                CsvCell::Float(recovered[i].re),
                CsvCell::Float(recovered[i].im),
            ]
        })
        .collect();
    out.write_csv(
        "deconvolved.csv",
        &["t", "truth", "recovered_re", "recovered_im"],
        &rows,
    )
    .map_err(CommandError::Config)?;
    out.mark("deconvolve");
    if !bound_holds {
        return Err(CommandError::Numerical(format!(
            "deconvolution energy {h_l2:.6e} exceeds the certified bound {bound:.6e}"
        )));
    }
    Ok(CommandOutput {
        results: json!({
            "kernel": format!("{:?}", config.kernel),
            "round_trip_relative_error": rel,
            "recovered_l2": h_l2,
        }),
        certificates: json!({
            "amplification_constant": amplification,
            "data_h1_norm": y_h1,
            "l2_bound": bound,
            "bound_holds": bound_holds,
        }),
        diagnostics: json!({ "steps": n, "dt": dt }),
    })
}

// ----------------------------------------------------------- invert-source

fn invert_source(
    config: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<CommandOutput, CommandError> {
    let coarse = Grid::interval(config.inversion_nodes)?;
    let fine = Grid::interval(config.forward_nodes)?;
    let kernel_fine = kernel_of(config.kernel, config.tau, config.dt / 2.0)?;
    let kernel = kernel_of(config.kernel, config.tau, config.dt)?;
    if !kernel.is_real() {
        return Err(CommandError::Config(
            "kernel: the wave source inversion needs a real kernel".into(),
        ));
    }
    let zero_f = Field::zeros(&fine);
    let count = config.probes.max(config.source_coefficients.len());
    let fine_basis = dirichlet_eigenpairs(&fine, &zero_f, count)?;
    let mut f_true = Field::zeros(&fine);
    for (i, &c) in config.source_coefficients.iter().enumerate() {
        f_true = f_true.axpy(c, &fine_basis.eigenfunctions[i])?;
    }
    let sol = solve_wave(
        &fine,
        &zero_f,
        &zero_f,
        &zero_f,
        &zero_f,
        Some((&kernel_fine, &f_true)),
        config.tau,
        config.dt / 2.0,
    )?;
    let mut trace = restrict(neumann_trace(&sol, Boundary::Both)?, &fine, &coarse)?;
    let scale = trace.rows.iter().flatten().fold(0.0_f64, |m, &v| m.max(v.abs()));
    add_noise(&mut trace, config.noise_level, scale, config.seed);

    let zero_c = Field::zeros(&coarse);
    let basis = dirichlet_eigenpairs(&coarse, &zero_c, config.probes)?;
    let mut rc = RecoveryConfig::from_s(config.probes, config.s, 1)?;
    rc.noise_level = config.noise_level;
    let result = recover_source_wave(&coarse, &kernel, &trace, &basis, &rc)?;

    let mut truth_c = Field::zeros(&coarse);
    for (i, &c) in config.source_coefficients.iter().enumerate() {
        if i < basis.len() {
            truth_c = truth_c.axpy(c, &basis.eigenfunctions[i])?;
        }
    }
    let rel = relative_l2(&result.fields[0], &truth_c)?;
    let coeff_err: f64 = result
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let c = config.source_coefficients.get(i).copied().unwrap_or(0.0);
            (m - c).powi(2)
        })
        .sum::<f64>()
        .sqrt();

    let rows: Vec<Vec<CsvCell>> = (0..coarse.node_count())
        .map(|i| {
            vec![
                CsvCell::Float(coarse.coords(i).0),
                CsvCell::Float(result.fields[0].values()[i]),
                CsvCell::Float(truth_c.values()[i]),
            ]
        })
        .collect();
    out.write_csv("source.csv", &["x", "f_hat", "f_true"], &rows)
        .map_err(CommandError::Config)?;
    out.mark("invert-source");
    Ok(CommandOutput {
        results: json!({
            "coefficients": result.coefficients,
            "coefficient_error": coeff_err,
            "relative_l2_error": rel,
        }),
        certificates: json!({
            "bound": result.bound,
            "bound_dominates_error": result.bound >= coeff_err,
        }),
        diagnostics: merge_diag(&result.diagnostics, &[("condition", result.condition)]),
    })
}

fn merge_diag(map: &BTreeMap<String, f64>, extra: &[(&str, f64)]) -> Value {
    let mut obj: Map<String, Value> =
        map.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    for (k, v) in extra {
        obj.insert((*k).into(), json!(v));
    }
    Value::Object(obj)
}

// -------------------------------------------------------- invert-potential

fn invert_potential(
    config: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<CommandOutput, CommandError> {
    if config.problem != Problem::HeatPotential {
        return Err(CommandError::Config(
            "problem: invert-potential needs problem = \"heat-potential\"".into(),
        ));
    }
    let coarse = Grid::interval(config.inversion_nodes)?;
    let fine = Grid::interval(config.forward_nodes)?;
    let profile = profile_of(config.profile);
    let dq_fine = profile.field(&fine)?.scaled(config.amplitude);
    let zero_f = Field::zeros(&fine);
    let fine_basis = dirichlet_eigenpairs(&fine, &zero_f, config.probes)?;
    let dtf = config.dt / 2.0;
    let mut responses = Vec::with_capacity(config.probes);
    for k in 0..config.probes {
        let phi = &fine_basis.eigenfunctions[k];
        let a = solve_heat(&fine, &dq_fine, phi, None, config.tau, dtf)?;
        let b = solve_heat(&fine, &zero_f, phi, None, config.tau, dtf)?;
        let diff = neumann_trace(&a, Boundary::Both)?.sub(&neumann_trace(&b, Boundary::Both)?)?;
        let mut resp = restrict(diff, &fine, &coarse)?;
        let scale = resp.rows.iter().flatten().fold(0.0_f64, |m, &v| m.max(v.abs()));
        add_noise(&mut resp, config.noise_level, scale, config.seed.wrapping_add(k as u64));
        responses.push(resp);
    }
    let zero_c = Field::zeros(&coarse);
    let basis = dirichlet_eigenpairs(&coarse, &zero_c, config.probes)?;
    let mut rc = RecoveryConfig::from_s(config.probes, config.s, 1)?;
    rc.noise_level = config.noise_level;
    let result = recover_potential_heat(&coarse, &zero_c, &responses, &basis, &rc)?;

    let truth_c = profile.field(&coarse)?.scaled(config.amplitude);
    let rel = relative_l2(&result.fields[0], &truth_c)?;
    let rows: Vec<Vec<CsvCell>> = (0..coarse.node_count())
        .map(|i| {
            vec![
                CsvCell::Float(coarse.coords(i).0),
                CsvCell::Float(result.fields[0].values()[i]),
                CsvCell::Float(truth_c.values()[i]),
            ]
        })
        .collect();
    out.write_csv("potential.csv", &["x", "q_hat", "q_true"], &rows)
        .map_err(CommandError::Config)?;
    out.mark("invert-potential");
    Ok(CommandOutput {
        results: json!({
            "coefficients": result.coefficients,
            "relative_l2_error": rel,
        }),
        certificates: json!({
            "modulus": "log-power",
            "power": 0.2,
            "bound": result.bound,
        }),
        diagnostics: merge_diag(&result.diagnostics, &[("condition", result.condition)]),
    })
}

// ---------------------------------------------------------- invert-damping

fn invert_damping(
    config: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<CommandOutput, CommandError> {
    match config.problem {
        Problem::WavePotentialDamping => invert_volume_damping(config, out),
        Problem::BoundaryDamping => invert_boundary_damping(config, out),
        _ => Err(CommandError::Config(
            "problem: invert-damping needs problem = \"wave-potential-damping\" or \
             \"boundary-damping\""
                .into(),
        )),
    }
}

fn invert_volume_damping(
    config: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<CommandOutput, CommandError> {
    let coarse = Grid::interval(config.inversion_nodes)?;
    let fine = Grid::interval(config.forward_nodes)?;
    let profile = profile_of(config.profile);
    let a_true = profile.field(&fine)?.scaled(config.amplitude);
    let zero_f = Field::zeros(&fine);
    let fine_basis = dirichlet_eigenpairs(&fine, &zero_f, config.probes)?;
    let dtf = config.dt / 2.0;
    let mut responses = Vec::with_capacity(config.probes);
    for k in 0..config.probes {
        let phi = &fine_basis.eigenfunctions[k];
        let omega = fine_basis.eigenvalues[k].sqrt();
        let vel = phi.scaled(omega);
        let mut runs = Vec::with_capacity(4);
        for (u0, u1, a) in [
            (phi.clone(), zero_f.clone(), &a_true),
            (phi.clone(), zero_f.clone(), &zero_f),
            (zero_f.clone(), vel.clone(), &a_true),
            (zero_f.clone(), vel.clone(), &zero_f),
        ] {
            let sol = solve_wave(&fine, &zero_f, a, &u0, &u1, None, config.tau, dtf)?;
            runs.push(restrict(neumann_trace(&sol, Boundary::Both)?, &fine, &coarse)?);
        }
        let mut re = runs[0].sub(&runs[1])?;
        let mut im = runs[2].sub(&runs[3])?;
        let scale = re
            .rows
            .iter()
            .chain(im.rows.iter())
            .flatten()
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        add_noise(&mut re, config.noise_level, scale, config.seed.wrapping_add(2 * k as u64));
        add_noise(
            &mut im,
            config.noise_level,
            scale,
            config.seed.wrapping_add(2 * k as u64 + 1),
        );
        responses.push(ComplexTrace::new(re, im)?);
    }
    let zero_c = Field::zeros(&coarse);
    let basis = dirichlet_eigenpairs(&coarse, &zero_c, 3 * config.probes)?;
    let mut rc = RecoveryConfig::from_s(config.probes, config.s, 1)?;
    rc.noise_level = config.noise_level;
    let result = recover_potential_damping_wave(&coarse, &zero_c, &responses, &basis, &rc)?;

    let a_truth_c = profile.field(&coarse)?.scaled(config.amplitude);
    let rel = relative_l2(&result.fields[1], &a_truth_c)?;
    let rows: Vec<Vec<CsvCell>> = (0..coarse.node_count())
        .map(|i| {
            vec![
                CsvCell::Float(coarse.coords(i).0),
                CsvCell::Float(result.fields[1].values()[i]),
                CsvCell::Float(a_truth_c.values()[i]),
                CsvCell::Float(result.fields[0].values()[i]),
            ]
        })
        .collect();
    out.write_csv("damping.csv", &["x", "a_hat", "a_true", "q_hat"], &rows)
        .map_err(CommandError::Config)?;
    out.mark("invert-damping");
    Ok(CommandOutput {
        results: json!({
            "relative_l2_error": rel,
            "potential_max_abs": result.fields[0].max_abs(),
        }),
        certificates: json!({
            "modulus": "hoelder",
            "exponent": 1.0,
            "bound": result.bound,
        }),
        diagnostics: merge_diag(&result.diagnostics, &[("condition", result.condition)]),
    })
}

fn boundary_probe_set(grid: &Grid, count: usize) -> Result<Vec<(Field, Field)>, CommandError> {
    let indices = [(0, 0), (1, 0), (0, 1), (1, 1)];
    if count == 0 || count > indices.len() {
        return Err(CommandError::Config(format!(
            "probes: boundary damping supports 1..={} probes, got {count}",
            indices.len()
        )));
    }
    let zero = Field::zeros(grid);
    indices[..count]
        .iter()
        .map(|&(k, l)| {
            let (_, phi) = mixed_square_eigenpair(grid, k, l)?;
            Ok((phi, zero.clone()))
        })
        .collect()
}

fn invert_boundary_damping(
    config: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<CommandOutput, CommandError> {
    let n = config.inversion_nodes;
    let coarse = Grid::square(n, n)?;
    let fine = Grid::square(config.forward_nodes, config.forward_nodes)?;
    let a_true = config.amplitude;
    let damping_true = EdgeDamping::constant(&fine, a_true)?;
    let damping_zero_f = EdgeDamping::constant(&fine, 0.0)?;
    let fine_probes = boundary_probe_set(&fine, config.probes)?;
    let probes = boundary_probe_set(&coarse, config.probes)?;
    let dtf = config.dt / 2.0;
    let mut data = Vec::with_capacity(config.probes);
    for (k, (u0, u1)) in fine_probes.iter().enumerate() {
        let obs = solve_wave_boundary_damped(&fine, &damping_true, u0, u1, None, config.tau, dtf)?;
        let reference =
            solve_wave_boundary_damped(&fine, &damping_zero_f, u0, u1, None, config.tau, dtf)?;
        let mut trace = restrict(neumann_trace(&obs, Boundary::Gamma0)?, &fine, &coarse)?;
        let diff = restrict(
            neumann_trace(&reference, Boundary::Gamma0)?
                .sub(&neumann_trace(&obs, Boundary::Gamma0)?)?,
            &fine,
            &coarse,
        )?;
        let scale = diff.rows.iter().flatten().fold(0.0_f64, |m, &v| m.max(v.abs()));
        add_noise(&mut trace, config.noise_level, scale, config.seed.wrapping_add(k as u64));
        data.push(trace);
    }
    let initial = EdgeDamping::constant(&coarse, 0.0)?;
    let opts = GaussNewtonOptions {
        basis: Some(per_edge_basis(&coarse).map_err(CommandError::from)?),
        ..GaussNewtonOptions::default()
    };
    let fit = recover_boundary_damping(
        &coarse,
        &probes,
        &data,
        config.tau,
        config.dt,
        &initial,
        config.kappa,
        config.delta,
        &opts,
    )?;
    let (nx, _) = match coarse {
        Grid::Square { nx, ny } => (nx, ny),
        _ => unreachable!(),
    };
    let values = fit.damping.values();
    let bottom = &values[..nx - 1];
    let left = &values[nx - 1..];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let rows: Vec<Vec<CsvCell>> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let edge = if i < nx - 1 { "bottom" } else { "left" };
            vec![
                CsvCell::Int(i as i64),
                CsvCell::Text(edge.into()),
                CsvCell::Float(v),
                CsvCell::Float(a_true),
            ]
        })
        .collect();
    out.write_csv("damping.csv", &["index", "edge", "a_hat", "a_true"], &rows)
        .map_err(CommandError::Config)?;
    out.mark("invert-damping");
    let exponent = damping_hoelder_exponent(config.delta)?;
    Ok(CommandOutput {
        results: json!({
            "bottom_mean": mean(bottom),
            "left_mean": mean(left),
            "bottom_relative_error": (mean(bottom) - a_true).abs() / a_true.abs().max(1e-300),
            "left_relative_error": (mean(left) - a_true).abs() / a_true.abs().max(1e-300),
            "objective": fit.objective,
            "iterations": fit.iterations,
        }),
        certificates: json!({
            "modulus": "hoelder",
            "exponent": exponent,
            "dual_distance": fit.dual_distance,
            "bound": fit.bound,
        }),
        diagnostics: diagnostics_json(&fit.diagnostics),
    })
}

// ---------------------------------------------------- verify-inequalities

fn verify_inequalities(
    config: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<CommandOutput, CommandError> {
    let n = config.inversion_nodes;
    let grid = Grid::interval(n)?;
    let h = grid.hx();
    let square = Grid::square(n.min(61), n.min(61))?;
    let hs = square.hx();
    let mut ledger: Vec<(String, f64, f64, usize, bool)> = Vec::new();

    let sine = Field::from_fn(&grid, |x, _| (std::f64::consts::PI * x).sin());
    let c = inequality::hardy_ratio(&sine)?;
    ledger.push(("hardy-sine".into(), c, 0.25, n, c >= 0.25 - 5.0 * h));

    let parabola = Field::from_fn(&grid, |x, _| x * (1.0 - x));
    let c = inequality::hardy_ratio(&parabola)?;
    ledger.push(("hardy-parabola".into(), c, 0.25, n, c >= 0.25 - 5.0 * h));

    let pi = std::f64::consts::PI;
    let mode2 = Field::from_fn(&square, |x, y| (pi * x).sin() * (pi * y).sin());
    let c = inequality::hardy_ratio(&mode2)?;
    ledger.push((
        "hardy-square-mode".into(),
        c,
        0.25,
        square.node_count(),
        c >= 0.25 - 5.0 * hs,
    ));

    let dist = Field::from_fn(&grid, |x, _| x.min(1.0 - x));
    let c = inequality::hopf_constant(&dist)?;
    ledger.push(("hopf-distance".into(), c, 1.0, n, (c - 1.0).abs() <= 1e-10));

    let scaled_sine = sine.scaled(2.0_f64.sqrt());
    let c = inequality::hopf_constant(&scaled_sine)?;
    let claimed = 2.0 * 2.0_f64.sqrt();
    ledger.push(("hopf-sine".into(), c, claimed, n, (c - claimed).abs() <= 1e-3));

    let c = inequality::interpolation_constant(&parabola, &sine)?;
    ledger.push(("interpolation-parabola-sine".into(), c, c, n, c.is_finite() && c > 0.0));

    let half_cosine = Field::from_fn(&grid, |x, _| (0.5 * pi * x).cos());
    let candidates = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
    let (delta_hat, _) = inequality::negative_power_delta(&half_cosine, &candidates)?;
    ledger.push((
        "negative-power-boundary-zero".into(),
        delta_hat,
        0.5,
        n,
        (delta_hat - 0.5).abs() <= 0.26,
    ));

    let interior_zero = Field::from_fn(&grid, |x, _| (2.0 * pi * x).sin());
    let (delta_hat, _) = inequality::negative_power_delta(&interior_zero, &candidates)?;
    ledger.push((
        "negative-power-simple-zero".into(),
        delta_hat,
        1.0,
        n,
        delta_hat < 1.0,
    ));

    let report = inequality::weighted_l2_bound_check(&parabola, &sine, config.delta)?;
    ledger.push((
        report.id.clone(),
        report.constant,
        report.claimed.unwrap_or(report.constant),
        n,
        report.pass,
    ));

    let rows: Vec<Vec<CsvCell>> = ledger
        .iter()
        .map(|(id, constant, claimed, resolution, pass)| {
            vec![
                CsvCell::Text(id.clone()),
                CsvCell::Float(*constant),
                CsvCell::Float(*claimed),
                CsvCell::Int(*resolution as i64),
                CsvCell::Text(if *pass { "pass".into() } else { "fail".into() }),
            ]
        })
        .collect();
    out.write_csv(
        "inequalities.csv",
        &["id", "constant", "claimed", "resolution", "status"],
        &rows,
    )
    .map_err(CommandError::Config)?;
    out.mark("verify-inequalities");
    let failed: Vec<&str> = ledger
        .iter()
        .filter(|r| !r.4)
        .map(|r| r.0.as_str())
        .collect();
    let output = CommandOutput {
        results: json!({
            "checks": ledger.len(),
            "passed": ledger.len() - failed.len(),
            "failed": failed,
        }),
        certificates: json!({
            "all_pass": failed.is_empty(),
        }),
        diagnostics: json!({ "interval_nodes": n, "square_nodes": square.node_count() }),
    };
    if !failed.is_empty() {
        return Err(CommandError::Numerical(format!(
            "inequality checks failed: {}",
            failed.join(", ")
        )));
    }
    Ok(output)
}

// ------------------------------------------------ stability-sweep, certify

fn sweep_pipeline(problem: Problem) -> Result<SweepPipeline, CommandError> {
    match problem {
        Problem::HeatPotential => Ok(SweepPipeline::HeatPotential),
        Problem::WavePotentialDamping => Ok(SweepPipeline::WavePotentialDamping),
        Problem::BoundaryDamping => Ok(SweepPipeline::BoundaryDamping),
        Problem::WaveSource => Err(CommandError::Config(
            "problem: sweeps support heat-potential, wave-potential-damping, and \
             boundary-damping"
                .into(),
        )),
    }
}

fn default_modulus(config: &ExperimentConfig) -> Result<StabilityModulus, CommandError> {
    Ok(match config.problem {
        Problem::HeatPotential => StabilityModulus::LogPower { power: 0.2 },
        Problem::WavePotentialDamping => StabilityModulus::Hoelder { exponent: 0.5 },
        Problem::BoundaryDamping => StabilityModulus::Hoelder {
            exponent: damping_hoelder_exponent(config.delta)?,
        },
        Problem::WaveSource => {
            return Err(CommandError::Config(
                "problem: no certification modulus for wave-source".into(),
            ))
        }
    })
}

fn chosen_modulus(config: &ExperimentConfig) -> Result<StabilityModulus, CommandError> {
    match (config.modulus, config.modulus_parameter) {
        (None, _) => default_modulus(config),
        (Some(ModulusKind::Hoelder), p) => Ok(StabilityModulus::Hoelder {
            exponent: p.unwrap_or(0.5),
        }),
        (Some(ModulusKind::LogPower), p) => Ok(StabilityModulus::LogPower {
            power: p.unwrap_or(0.2),
        }),
    }
}

fn sweep_records(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<Vec<SweepRecord>, CommandError> {
    if config.amplitudes.is_empty() {
        return Err(CommandError::Config(
            "amplitudes: a sweep needs a nonempty, strictly decreasing list".into(),
        ));
    }
    let sc = SweepConfig {
        pipeline: sweep_pipeline(config.problem)?,
        profile: profile_of(config.profile),
        nodes: config.inversion_nodes,
        probes: config.probes,
        s: config.s,
        tau: config.tau,
        dt: config.dt,
        noise_level: config.noise_level,
        seed: config.seed,
    };
    Ok(run_sweep(&sc, &config.amplitudes, threads)?)
}

fn write_sweep_csv(out: &mut OutputDir, records: &[SweepRecord]) -> Result<(), CommandError> {
    let rows: Vec<Vec<CsvCell>> = records
        .iter()
        .map(|r| {
            vec![
                CsvCell::Float(r.amplitude),
                CsvCell::Float(r.distance),
                CsvCell::Float(r.error),
                CsvCell::Int(r.seed as i64),
                CsvCell::Text(if r.failure.is_some() { "failed".into() } else { "ok".into() }),
            ]
        })
        .collect();
    out.write_csv(
        "sweep.csv",
        &["amplitude", "distance", "error", "seed", "status"],
        &rows,
    )
    .map_err(CommandError::Config)?;
    Ok(())
}

fn sweep_failures(records: &[SweepRecord]) -> Vec<Value> {
    records
        .iter()
        .filter_map(|r| {
            r.failure
                .as_ref()
                .map(|m| json!({ "amplitude": r.amplitude, "message": m }))
        })
        .collect()
}

fn stability_sweep(
    config: &ExperimentConfig,
    out: &mut OutputDir,
    threads: usize,
    with_certificate: bool,
) -> Result<CommandOutput, CommandError> {
    let records = sweep_records(config, threads)?;
    write_sweep_csv(out, &records)?;
    out.mark("sweep");
    let failures = sweep_failures(&records);
    let points: Vec<_> = records.iter().filter_map(|r| r.point()).collect();
    let results = json!({
        "rows": records.len(),
        "completed": points.len(),
        "pipeline": sweep_pipeline(config.problem)?.name(),
    });
    if !with_certificate {
        if points.is_empty() {
            return Err(CommandError::Numerical("every sweep row failed".into()));
        }
        return Ok(CommandOutput {
            results,
            certificates: json!({}),
            diagnostics: json!({ "failures": failures }),
        });
    }

    let positive: Vec<_> = points.iter().copied().filter(|p| p.distance > 0.0).collect();
    if positive.len() < 2 {
        return Err(CommandError::Numerical(
            "certification needs at least two completed rows with positive distance".into(),
        ));
    }
    let modulus = chosen_modulus(config)?;
    let family = match modulus {
        StabilityModulus::Hoelder { .. } => RateFamily::Hoelder,
        StabilityModulus::LogPower { .. } => RateFamily::LogPower,
    };
    let fit = rate_fit(&positive, family)?;
    let constant = certify(&points, &modulus)?;
    let rows: Vec<Vec<CsvCell>> = positive
        .iter()
        .map(|p| {
            vec![
                CsvCell::Float(p.distance),
                CsvCell::Float(p.error),
                CsvCell::Float(constant * modulus_eval(&modulus, p.distance).unwrap_or(f64::NAN)),
            ]
        })
        .collect();
    out.write_csv("certificate.csv", &["distance", "error", "certified_bound"], &rows)
        .map_err(CommandError::Config)?;
    out.mark("certify");
    let (family_name, parameter) = match modulus {
        StabilityModulus::Hoelder { exponent } => ("hoelder", exponent),
        StabilityModulus::LogPower { power } => ("log-power", power),
    };
    if !constant.is_finite() {
        return Err(CommandError::Numerical(
            "certification constant is not finite".into(),
        ));
    }
    Ok(CommandOutput {
        results,
        certificates: json!({
            "modulus": family_name,
            "parameter": parameter,
            "constant": constant,
            "fitted_exponent": fit.exponent,
            "fit_prefactor": fit.prefactor,
            "fit_r_squared": fit.r_squared,
            "narrow_range": fit.narrow_range,
        }),
        diagnostics: json!({ "failures": failures }),
    })
}
