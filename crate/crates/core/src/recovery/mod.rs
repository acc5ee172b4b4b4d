//! Inverse source and inverse coefficient pipelines: columnwise
//! deconvolution, spectral least squares against eigen-dictionaries,
//! truncation bookkeeping, reconstruction, and certified bounds.

pub mod boundary_damping;
pub mod config;
pub mod potential_damping_wave;
pub mod potential_heat;
pub mod source_heat;
pub mod source_wave;

pub use config::RecoveryConfig;

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use ndarray_linalg::Eigh;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::trace::BoundaryTrace;

/// Output of one recovery pipeline. `fields` holds one reconstruction for
/// the source/potential routes and two (potential, damping) for the damped
/// wave route.
#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub fields: Vec<Field>,
    /// retained spectral coefficients, one per truncation level slot
    pub coefficients: Vec<f64>,
    /// certified error bound attached by the pipeline; >= 0
    pub bound: f64,
    /// condition number of the spectral fit
    pub condition: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

/// One dictionary column: a separable space-time profile
/// g(t) * psi(boundary node).
#[derive(Clone, Debug)]
pub(crate) struct SpectralColumn {
    pub time_profile: Vec<f64>,
    pub node_profile: Vec<f64>,
}

pub(crate) struct FitOutcome {
    pub coefficients: Vec<f64>,
    pub condition: f64,
}

fn time_weight(t: usize, nt: usize) -> f64 {
    if t == 0 || t == nt - 1 { 0.5 } else { 1.0 }
}

/// Tikhonov least squares of trace-shaped data against separable columns.
/// The Gram matrix factorizes into (time Gram) .* (boundary Gram). The
/// condition number reported is that of the unregularized Gram.
pub(crate) fn fit_trace_dictionary(
    grid: &Grid,
    data: &BoundaryTrace,
    columns: &[SpectralColumn],
    alpha_rel: f64,
    max_condition: Option<f64>,
) -> Result<FitOutcome> {
    let k = columns.len();
    if k == 0 {
        return Err(Error::InvalidArgument("empty dictionary".into()));
    }
    let nt = data.time_steps();
    let nodes = grid.boundary_nodes(data.label)?;
    if nodes.len() != data.node_count() {
        return Err(Error::GridMismatch("trace width does not match grid boundary".into()));
    }
    for col in columns {
        if col.time_profile.len() != nt || col.node_profile.len() != nodes.len() {
            return Err(Error::GridMismatch("dictionary column shape mismatch".into()));
        }
    }
    let wb: Vec<f64> =
        nodes.iter().map(|&idx| grid.boundary_quad_weight(data.label, idx)).collect();
    let dt = data.dt;

    let mut gram = Array2::<f64>::zeros((k, k));
    let mut rhs = Array1::<f64>::zeros(k);
    for i in 0..k {
        for j in i..k {
            let tg: f64 = (0..nt)
                .map(|t| {
                    time_weight(t, nt)
                        * dt
                        * columns[i].time_profile[t]
                        * columns[j].time_profile[t]
                })
                .sum();
            let bg: f64 = (0..nodes.len())
                .map(|b| wb[b] * columns[i].node_profile[b] * columns[j].node_profile[b])
                .sum();
            gram[[i, j]] = tg * bg;
            gram[[j, i]] = tg * bg;
        }
        let mut acc = 0.0;
        for (t, row) in data.rows.iter().enumerate() {
            let wt = time_weight(t, nt) * dt * columns[i].time_profile[t];
            for b in 0..nodes.len() {
                acc += wt * wb[b] * columns[i].node_profile[b] * row[b];
            }
        }
        rhs[i] = acc;
    }

    let (eigs, vecs) = gram
        .eigh(ndarray_linalg::UPLO::Lower)
        .map_err(|e| Error::EigenFailure(format!("gram eigensolve: {e}")))?;
    let emax = eigs.iter().cloned().fold(f64::MIN, f64::max);
    let emin = eigs.iter().cloned().fold(f64::MAX, f64::min);
    if emax <= 0.0 {
        return Err(Error::Degenerate("dictionary Gram matrix is zero".into()));
    }
    let condition = if emin <= 0.0 { f64::INFINITY } else { emax / emin };
    if let Some(limit) = max_condition {
        if condition > limit {
            return Err(Error::RankDeficient { cond: condition });
        }
    }
    let alpha = alpha_rel * emax;
    // solve (G + alpha I) c = rhs in the eigenbasis
    let mut coeffs = vec![0.0; k];
    for m in 0..k {
        let proj: f64 = (0..k).map(|i| vecs[[i, m]] * rhs[i]).sum();
        let scale = proj / (eigs[m] + alpha);
        for i in 0..k {
            coeffs[i] += vecs[[i, m]] * scale;
        }
    }
    Ok(FitOutcome { coefficients: coeffs, condition })
}

/// Complex variant: real dictionary, complex data, fitted separately on the
/// real and imaginary parts (the Gram matrix is shared).
pub(crate) fn fit_trace_dictionary_complex(
    grid: &Grid,
    data_re: &BoundaryTrace,
    data_im: &BoundaryTrace,
    columns: &[SpectralColumn],
    alpha_rel: f64,
    max_condition: Option<f64>,
) -> Result<(Vec<Complex64>, f64)> {
    let re = fit_trace_dictionary(grid, data_re, columns, alpha_rel, max_condition)?;
    let im = fit_trace_dictionary(grid, data_im, columns, alpha_rel, max_condition)?;
    let coeffs = re
        .coefficients
        .iter()
        .zip(&im.coefficients)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect();
    Ok((coeffs, re.condition))
}

/// Model trace synthesized from fitted coefficients over separable columns.
pub(crate) fn synthesize_trace(
    template: &BoundaryTrace,
    columns: &[SpectralColumn],
    coeffs: &[f64],
) -> BoundaryTrace {
    let nt = template.time_steps();
    let nb = template.node_count();
    let mut rows = vec![vec![0.0; nb]; nt];
    for (col, &c) in columns.iter().zip(coeffs) {
        for t in 0..nt {
            let s = c * col.time_profile[t];
            for b in 0..nb {
                rows[t][b] += s * col.node_profile[b];
            }
        }
    }
    BoundaryTrace { label: template.label, dt: template.dt, rows }
}
