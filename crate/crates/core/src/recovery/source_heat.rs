//! Inverse source problem for the heat equation. Same deconvolve-then-fit
//! route as the wave case, but the dictionary decays like e^{-lambda_k t},
//! so per-mode conditioning degrades exponentially; the truncation
//! parameter epsilon prunes the dictionary and every retained mode reports
//! its sensitivity e^{lambda_k tau}.

use super::config::{modes_from_epsilon, RecoveryConfig};
use super::source_wave::deconvolve_trace;
use super::{fit_trace_dictionary, RecoveryResult, SpectralColumn};
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::kernel::Kernel;
use crate::trace::BoundaryTrace;
use crate::volterra;

/// Sensitivity above which a mode's coefficient is numerically
/// untrustworthy at double precision.
const CREDIBLE_SENSITIVITY: f64 = 1e12;

pub(crate) fn heat_dictionary(
    basis: &EigenBasis,
    trace: &BoundaryTrace,
    count: usize,
) -> Result<Vec<SpectralColumn>> {
    let nt = trace.time_steps();
    let dt = trace.dt;
    (0..count)
        .map(|k| {
            let lam = basis.eigenvalues[k];
            let time_profile = (0..nt).map(|t| (-lam * t as f64 * dt).exp()).collect();
            let node_profile =
                crate::trace::normal_derivative(&basis.eigenfunctions[k], trace.label)?;
            Ok(SpectralColumn { time_profile, node_profile })
        })
        .collect()
}

pub fn recover_source_heat(
    grid: &Grid,
    kernel: &Kernel,
    trace: &BoundaryTrace,
    basis: &EigenBasis,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    config.validate()?;
    let dimension = grid.dimension();
    let retained = modes_from_epsilon(config.epsilon, dimension)
        .min(config.probes)
        .min(basis.len());
    if retained == 0 {
        return Err(Error::InvalidArgument("epsilon rule retains no modes".into()));
    }
    let deconvolved = deconvolve_trace(kernel, trace)?;
    let columns = heat_dictionary(basis, trace, retained)?;
    let fit =
        fit_trace_dictionary(grid, &deconvolved, &columns, config.effective_tikhonov(), None)?;

    let tau = kernel.tau();
    let mut diagnostics = std::collections::BTreeMap::new();
    let mut flagged = 0usize;
    for k in 0..retained {
        let sens = (basis.eigenvalues[k] * tau).exp();
        diagnostics.insert(format!("sensitivity_mode_{}", k + 1), sens);
        if sens > CREDIBLE_SENSITIVITY {
            flagged += 1;
        }
    }
    diagnostics.insert("modes_flagged".into(), flagged as f64);
    diagnostics.insert("modes_retained".into(), retained as f64);

    let level = config.level.min(retained);
    let mut field = Field::zeros(grid);
    let coefficients: Vec<f64> = fit.coefficients[..level].to_vec();
    for (k, &c) in coefficients.iter().enumerate() {
        field = field.axpy(c, &basis.eigenfunctions[k])?;
    }

    let amp = volterra::amplification_constant(kernel, tau, config.kappa)?;
    let model = super::synthesize_trace(&deconvolved, &columns, &fit.coefficients);
    let mut misfit_rows = vec![vec![0.0; trace.node_count()]; trace.time_steps()];
    for b in 0..trace.node_count() {
        let col: Vec<num_complex::Complex64> = model
            .rows
            .iter()
            .map(|r| num_complex::Complex64::new(r[b], 0.0))
            .collect();
        let forward = volterra::convolve(kernel, &col)?;
        for t in 0..trace.time_steps() {
            misfit_rows[t][b] = trace.rows[t][b] - forward[t].re;
        }
    }
    let misfit = BoundaryTrace::new(trace.label, trace.dt, misfit_rows)?.h1_norm(grid)?;
    diagnostics.insert("data_misfit_h1".into(), misfit);

    Ok(RecoveryResult {
        fields: vec![field],
        coefficients,
        bound: amp * misfit,
        condition: fit.condition,
        diagnostics,
    })
}
