//! Twin-experiment perturbation sweeps: for a family of perturbation
//! amplitudes, synthesize data on a finer forward grid, run the matching
//! inverse pipeline on the coarse grid, and record (distance, error) pairs
//! for rate fitting and certification.

use crate::damped_wave::EdgeDamping;
use crate::eigen::{dirichlet_eigenpairs, mixed_square_eigenpair};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Boundary, Grid};
use crate::heat::solve_heat;
use crate::recovery::boundary_damping::{
    per_edge_basis, recover_boundary_damping, GaussNewtonOptions,
};
use crate::recovery::potential_damping_wave::{recover_potential_damping_wave, ComplexTrace};
use crate::recovery::potential_heat::recover_potential_heat;
use crate::recovery::RecoveryConfig;
use crate::rng::Rng;
use crate::solution::neumann_trace;
use crate::stability::SweepPoint;
use crate::trace::BoundaryTrace;
use crate::wave::solve_wave;

/// Inverse pipeline exercised by a sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPipeline {
    /// 1D potential from heat probes.
    HeatPotential,
    /// 1D volume damping (and potential channel) from wave probes.
    WavePotentialDamping,
    /// 2D edge damping from boundary observation.
    BoundaryDamping,
}

impl SweepPipeline {
    pub fn name(&self) -> &'static str {
        match self {
            SweepPipeline::HeatPotential => "heat-potential",
            SweepPipeline::WavePotentialDamping => "wave-potential-damping",
            SweepPipeline::BoundaryDamping => "boundary-damping",
        }
    }
}

/// Shape of the perturbation that the amplitude scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationProfile {
    /// x (1 - x) per direction.
    Parabola,
    /// First reference eigenfunction (constant on Gamma1 for edge damping).
    FirstMode,
    /// Constant one.
    Constant,
}

impl PerturbationProfile {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationProfile::Parabola => "parabola",
            PerturbationProfile::FirstMode => "first-mode",
            PerturbationProfile::Constant => "constant",
        }
    }

    pub fn field(&self, grid: &Grid) -> Result<Field> {
        match self {
            PerturbationProfile::Parabola => Ok(Field::from_fn(grid, |x, y| {
                if grid.dimension() == 1 {
                    4.0 * x * (1.0 - x)
                } else {
                    16.0 * x * (1.0 - x) * y * (1.0 - y)
                }
            })),
            PerturbationProfile::FirstMode => {
                let basis = dirichlet_eigenpairs(grid, &Field::zeros(grid), 1)?;
                Ok(basis.eigenfunctions[0].clone())
            }
            PerturbationProfile::Constant => Ok(Field::constant(grid, 1.0)),
        }
    }
}

/// Static description of one sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub pipeline: SweepPipeline,
    pub profile: PerturbationProfile,
    /// Inversion grid nodes per direction; the forward grid is twice finer.
    pub nodes: usize,
    pub probes: usize,
    /// Resolution parameter of the spectral recovery configuration.
    pub s: f64,
    pub tau: f64,
    /// Time step of the inversion grid; the forward run uses dt / 2.
    pub dt: f64,
    /// Noise amplitude relative to the trace perturbation norm.
    pub noise_level: f64,
    pub seed: u64,
}

/// One sweep row; `failure` carries a pipeline error message when the
/// inversion did not complete, with the numeric fields left as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub amplitude: f64,
    pub distance: f64,
    pub error: f64,
    pub seed: u64,
    pub failure: Option<String>,
}

impl SweepRecord {
    pub fn point(&self) -> Option<SweepPoint> {
        if self.failure.is_none() {
            Some(SweepPoint { distance: self.distance, error: self.error })
        } else {
            None
        }
    }
}

fn fine_nodes(nodes: usize) -> usize {
    2 * nodes - 1
}

/// Add centered Gaussian noise of standard deviation `level * scale` to a
/// trace, in place.
fn perturb_trace(trace: &mut BoundaryTrace, level: f64, scale: f64, rng: &mut Rng) {
    if level <= 0.0 || scale <= 0.0 {
        return;
    }
    // The t = 0 row stays exact: the initial state is prescribed, and the
    // deconvolution step requires data vanishing at time zero.
    for row in trace.rows.iter_mut().skip(1) {
        for v in row.iter_mut() {
            *v += level * scale * rng.standard_normal();
        }
    }
}

fn trace_scale(trace: &BoundaryTrace) -> f64 {
    trace
        .rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |a, &b| a.max(b.abs()))
}

fn heat_potential_row(
    config: &SweepConfig,
    amplitude: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let coarse = Grid::interval(config.nodes)?;
    let fine = Grid::interval(fine_nodes(config.nodes))?;
    let q0c = Field::zeros(&coarse);
    let q0f = Field::zeros(&fine);
    let dq_fine = config.profile.field(&fine)?.scaled(amplitude);
    let dq_coarse = config.profile.field(&coarse)?.scaled(amplitude);
    let basis = dirichlet_eigenpairs(&coarse, &q0c, config.probes)?;
    let fine_basis = dirichlet_eigenpairs(&fine, &q0f, config.probes)?;
    let dtf = config.dt / 2.0;
    let mut rng = Rng::new(seed);
    let mut distance = 0.0f64;
    let mut responses = Vec::with_capacity(config.probes);
    for k in 0..config.probes {
        let phi = &fine_basis.eigenfunctions[k];
        let a = solve_heat(&fine, &dq_fine, phi, None, config.tau, dtf)?;
        let b = solve_heat(&fine, &q0f, phi, None, config.tau, dtf)?;
        let mut resp = neumann_trace(&a, Boundary::Both)?
            .sub(&neumann_trace(&b, Boundary::Both)?)?
            .subsample_time(2)?
            .subsample_nodes(&fine, &coarse)?;
        let scale = trace_scale(&resp);
        perturb_trace(&mut resp, config.noise_level, scale, &mut rng);
        distance = distance.max(resp.l2_norm(&coarse)?);
        responses.push(resp);
    }
    let mut rc = RecoveryConfig::from_s(config.probes, config.s, 1)?;
    rc.noise_level = config.noise_level;
    let result = recover_potential_heat(&coarse, &q0c, &responses, &basis, &rc)?;
    let err_field = result.fields[0].sub(&dq_coarse)?;
    Ok((distance, crate::norms::l2_norm(&err_field)))
}

fn wave_potential_damping_row(
    config: &SweepConfig,
    amplitude: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let coarse = Grid::interval(config.nodes)?;
    let fine = Grid::interval(fine_nodes(config.nodes))?;
    let q0c = Field::zeros(&coarse);
    let q0f = Field::zeros(&fine);
    let a_fine = config.profile.field(&fine)?.scaled(amplitude);
    let a_coarse = config.profile.field(&coarse)?.scaled(amplitude);
    let basis = dirichlet_eigenpairs(&coarse, &q0c, config.probes)?;
    let fine_basis = dirichlet_eigenpairs(&fine, &q0f, config.probes)?;
    let dtf = config.dt / 2.0;
    let mut rng = Rng::new(seed);
    let mut distance = 0.0f64;
    let mut responses = Vec::with_capacity(config.probes);
    for k in 0..config.probes {
        let phi = &fine_basis.eigenfunctions[k];
        let omega = fine_basis.eigenvalues[k].sqrt();
        let zero = Field::zeros(&fine);
        let vel = phi.scaled(omega);
        let mut parts = Vec::with_capacity(2);
        for (u0, u1) in [(phi.clone(), zero.clone()), (zero.clone(), vel)] {
            let pert = solve_wave(&fine, &q0f, &a_fine, &u0, &u1, None, config.tau, dtf)?;
            let reference = solve_wave(&fine, &q0f, &q0f, &u0, &u1, None, config.tau, dtf)?;
            let mut resp = neumann_trace(&pert, Boundary::Both)?
                .sub(&neumann_trace(&reference, Boundary::Both)?)?
                .subsample_time(2)?
                .subsample_nodes(&fine, &coarse)?;
            let scale = trace_scale(&resp);
            perturb_trace(&mut resp, config.noise_level, scale, &mut rng);
            distance = distance.max(resp.l2_norm(&coarse)?);
            parts.push(resp);
        }
        let im = parts.pop().expect("two parts");
        let re = parts.pop().expect("two parts");
        responses.push(ComplexTrace::new(re, im)?);
    }
    let mut rc = RecoveryConfig::from_s(config.probes, config.s, 1)?;
    rc.noise_level = config.noise_level;
    let result = recover_potential_damping_wave(&coarse, &q0c, &responses, &basis, &rc)?;
    let err_field = result.fields[1].sub(&a_coarse)?;
    Ok((distance, crate::norms::l2_norm(&err_field)))
}

/// Edge profile on the Gamma1 nodes of a square grid.
fn edge_profile(grid: &Grid, profile: PerturbationProfile, amplitude: f64) -> Result<Vec<f64>> {
    let nodes = grid.boundary_nodes(Boundary::Gamma1)?;
    nodes
        .iter()
        .map(|&idx| {
            let (x, y) = grid.coords(idx);
            let s = if y == 0.0 { x } else { y };
            let v = match profile {
                PerturbationProfile::Constant | PerturbationProfile::FirstMode => 1.0,
                PerturbationProfile::Parabola => 1.0 - s * s,
            };
            Ok(amplitude * v)
        })
        .collect()
}

fn boundary_damping_row(
    config: &SweepConfig,
    amplitude: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let coarse = Grid::square(config.nodes, config.nodes)?;
    let fine = Grid::square(fine_nodes(config.nodes), fine_nodes(config.nodes))?;
    let dtf = config.dt / 2.0;
    let truth_fine = EdgeDamping::from_values(&fine, edge_profile(&fine, config.profile, amplitude)?)?;
    let zero_fine = EdgeDamping::constant(&fine, 0.0)?;
    let pairs = [(0usize, 0usize), (1, 0), (0, 1), (1, 1)];
    if config.probes == 0 || config.probes > pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "boundary damping sweep supports 1..=4 probes, got {}",
            config.probes
        )));
    }
    let mut rng = Rng::new(seed);
    let mut distance = 0.0f64;
    let mut data = Vec::with_capacity(config.probes);
    let mut probes = Vec::with_capacity(config.probes);
    for &(k, l) in pairs.iter().take(config.probes) {
        let (_, phi_f) = mixed_square_eigenpair(&fine, k, l)?;
        let zero_f = Field::zeros(&fine);
        let observed = crate::damped_wave::solve_wave_boundary_damped(
            &fine, &truth_fine, &phi_f, &zero_f, None, config.tau, dtf,
        )?;
        let reference = crate::damped_wave::solve_wave_boundary_damped(
            &fine, &zero_fine, &phi_f, &zero_f, None, config.tau, dtf,
        )?;
        let obs = neumann_trace(&observed, Boundary::Gamma0)?
            .subsample_time(2)?
            .subsample_nodes(&fine, &coarse)?;
        let refr = neumann_trace(&reference, Boundary::Gamma0)?
            .subsample_time(2)?
            .subsample_nodes(&fine, &coarse)?;
        let diff = obs.sub(&refr)?;
        distance = distance.max(diff.l2_norm(&coarse)?);
        let mut noisy = obs;
        let scale = trace_scale(&diff);
        perturb_trace(&mut noisy, config.noise_level, scale, &mut rng);
        data.push(noisy);
        let (_, phi_c) = mixed_square_eigenpair(&coarse, k, l)?;
        probes.push((phi_c, Field::zeros(&coarse)));
    }
    let initial = EdgeDamping::constant(&coarse, 0.0)?;
    let opts = GaussNewtonOptions {
        max_iterations: 12,
        basis: Some(per_edge_basis(&coarse)?),
        ..Default::default()
    };
    let fit = recover_boundary_damping(
        &coarse, &probes, &data, config.tau, config.dt, &initial, 1.0, 0.5, &opts,
    )?;
    let truth_coarse = edge_profile(&coarse, config.profile, amplitude)?;
    let err = fit
        .damping
        .values()
        .iter()
        .zip(&truth_coarse)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        * coarse.h_min().sqrt();
    Ok((distance, err))
}

fn run_row(config: &SweepConfig, amplitude: f64, seed: u64) -> SweepRecord {
    if amplitude < 0.0 {
        return SweepRecord {
            amplitude,
            distance: f64::NAN,
            error: f64::NAN,
            seed,
            failure: Some("negative amplitude".into()),
        };
    }
    let outcome = match config.pipeline {
        SweepPipeline::HeatPotential => heat_potential_row(config, amplitude, seed),
        SweepPipeline::WavePotentialDamping => wave_potential_damping_row(config, amplitude, seed),
        SweepPipeline::BoundaryDamping => boundary_damping_row(config, amplitude, seed),
    };
    match outcome {
        Ok((distance, error)) => SweepRecord { amplitude, distance, error, seed, failure: None },
        Err(e) => SweepRecord {
            amplitude,
            distance: f64::NAN,
            error: f64::NAN,
            seed,
            failure: Some(e.to_string()),
        },
    }
}

/// Execute one sweep row per amplitude; rows run concurrently and each row
/// draws its noise from an independent stream seeded by `seed + index`, so
/// results are deterministic and independent of `threads`.
pub fn run_sweep(config: &SweepConfig, amplitudes: &[f64], threads: usize) -> Result<Vec<SweepRecord>> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one amplitude".into()));
    }
    let jobs: Vec<(usize, f64, u64)> = amplitudes
        .iter()
        .enumerate()
        .map(|(i, &a)| (i, a, config.seed.wrapping_add(i as u64)))
        .collect();
    let workers = threads.max(1).min(jobs.len());
    let mut records: Vec<Option<SweepRecord>> = vec![None; jobs.len()];
    if workers == 1 {
        for &(i, a, s) in &jobs {
            records[i] = Some(run_row(config, a, s));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let done: Vec<std::sync::Mutex<Option<SweepRecord>>> =
            jobs.iter().map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= jobs.len() {
                        break;
                    }
                    let (idx, a, s) = jobs[i];
                    let record = run_row(config, a, s);
                    *done[idx].lock().expect("row mutex") = Some(record);
                });
            }
        });
        for (slot, cell) in records.iter_mut().zip(done) {
            *slot = cell.into_inner().expect("row mutex");
        }
    }
    Ok(records.into_iter().map(|r| r.expect("row computed")).collect())
}
