//! Recover a potential perturbation from differences of the heat
//! initial-to-boundary operator sampled on eigenfunction probes.
//!
//! Probing with phi_k makes the unperturbed flow e^{-lambda_k t} phi_k, so
//! the first-order response solves the heat equation with separable source
//! -(dq) phi_k e^{-lambda_k t}. Deconvolving each probe trace with
//! g_k(t) = e^{-lambda_k t} exposes the heat flow of F_k = -(dq) phi_k; its
//! spectral coefficients d_{k,i} = (F_k, phi_i) relate to the expansion
//! dq = sum_m m_m phi_m through the triple products
//! T_{k,i,m} = int phi_k phi_i phi_m:  d_{k,i} = -sum_m T_{k,i,m} m_m.
//! Estimating m through this tensor system (rather than reading single
//! integrals off the truncated F_k reconstructions) keeps mode isolation
//! intact under truncation.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eigh;

use super::config::{modes_from_epsilon, RecoveryConfig};
use super::source_heat::heat_dictionary;
use super::source_wave::deconvolve_trace;
use super::{fit_trace_dictionary, synthesize_trace, RecoveryResult};
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::kernel::Kernel;
use crate::stability::{modulus_eval, StabilityModulus};
use crate::trace::BoundaryTrace;

/// Triple product int phi_a phi_b phi_c by trapezoid quadrature.
fn triple_product(grid: &Grid, a: &Field, b: &Field, c: &Field) -> f64 {
    (0..grid.node_count())
        .map(|i| grid.quad_weight(i) * a.values()[i] * b.values()[i] * c.values()[i])
        .sum()
}

/// `responses[k]` is the Neumann trace of u(q_tilde, phi_k) - u(q_ref, phi_k)
/// on the observation boundary, for probes phi_k from `basis`.
pub fn recover_potential_heat(
    grid: &Grid,
    q_ref: &Field,
    responses: &[BoundaryTrace],
    basis: &EigenBasis,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    config.validate()?;
    q_ref.check_on_grid(grid)?;
    let probes = responses.len().min(config.probes).min(basis.len());
    if probes == 0 {
        return Err(Error::InvalidArgument("no probe responses supplied".into()));
    }
    let dimension = grid.dimension();
    let retained = modes_from_epsilon(config.epsilon, dimension).min(basis.len());
    let level = config.level.min(basis.len());

    // Per-probe deconvolution and spectral fit of F_k = -(dq) phi_k.
    let mut rows: Vec<(usize, usize, f64)> = Vec::new(); // (probe k, mode i, d_{k,i})
    let mut skipped = 0usize;
    let mut worst_condition = 1.0f64;
    let mut response_norm = 0.0f64;
    for (k, trace) in responses.iter().take(probes).enumerate() {
        response_norm = response_norm.max(trace.h1_norm(grid)?);
        let lam = basis.eigenvalues[k];
        let tau = (trace.time_steps() - 1) as f64 * trace.dt;
        let kernel = Kernel::from_real_fn(tau, trace.dt, |t| (-lam * t).exp())?;
        let deconvolved = match deconvolve_trace(&kernel, trace) {
            Ok(d) => d,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let columns = heat_dictionary(basis, trace, retained)?;
        let fit = fit_trace_dictionary(
            grid,
            &deconvolved,
            &columns,
            config.effective_tikhonov(),
            None,
        )?;
        // Probe credibility: a fast-decaying kernel (lambda_k dt near 1)
        // makes the deconvolution step inaccurate and the deconvolved data
        // then falls outside the span of the dictionary. Reject probes
        // whose own fit cannot explain their data.
        let synth = synthesize_trace(&deconvolved, &columns, &fit.coefficients);
        let den = deconvolved.l2_norm(grid)?;
        let misfit = if den > 0.0 {
            deconvolved.sub(&synth)?.l2_norm(grid)? / den
        } else {
            0.0
        };
        if misfit > 0.25 {
            skipped += 1;
            continue;
        }
        worst_condition = worst_condition.max(fit.condition);
        for (i, &d) in fit.coefficients.iter().enumerate() {
            rows.push((k, i, d));
        }
    }
    if rows.is_empty() {
        return Err(Error::Degenerate("every probe deconvolution failed".into()));
    }

    // Weighted tensor least squares for m: rows d_{k,i} = -sum_m T_{k,i,m} m_m,
    // each row downweighted by the per-mode sensitivity of the heat fit so
    // exponentially untrustworthy coefficients do not pollute the solve.
    let tau = (responses[0].time_steps() - 1) as f64 * responses[0].dt;
    let mut ata = Array2::<f64>::zeros((level, level));
    let mut atb = Array1::<f64>::zeros(level);
    for &(k, i, d) in &rows {
        let w = (-basis.eigenvalues[i] * tau).exp();
        let t_row: Vec<f64> = (0..level)
            .map(|m| {
                -triple_product(
                    grid,
                    &basis.eigenfunctions[k],
                    &basis.eigenfunctions[i],
                    &basis.eigenfunctions[m],
                )
            })
            .collect();
        for a in 0..level {
            for b in 0..level {
                ata[[a, b]] += w * t_row[a] * t_row[b];
            }
            atb[a] += w * t_row[a] * d;
        }
    }
    let (eigs, vecs) = ata
        .eigh(ndarray_linalg::UPLO::Lower)
        .map_err(|e| Error::EigenFailure(format!("tensor normal equations: {e}")))?;
    let emax = eigs.iter().cloned().fold(f64::MIN, f64::max);
    if emax <= 0.0 {
        return Err(Error::Degenerate("tensor system is zero".into()));
    }
    let alpha = config.effective_tikhonov() * emax;
    let mut m = vec![0.0; level];
    for e in 0..level {
        let proj: f64 = (0..level).map(|i| vecs[[i, e]] * atb[i]).sum();
        let scale = proj / (eigs[e] + alpha);
        for i in 0..level {
            m[i] += vecs[[i, e]] * scale;
        }
    }

    let mut field = q_ref.clone();
    for (i, &c) in m.iter().enumerate() {
        field = field.axpy(c, &basis.eigenfunctions[i])?;
    }

    // Theta-modulus certificate: rho is the (dictionary-limited) operator
    // distance estimate; kappa scales the empirical constant.
    let theta = StabilityModulus::LogPower { power: 1.0 / (1.0 + 4.0 * dimension as f64) };
    let rho = response_norm.min((-1.0f64).exp()).max(f64::MIN_POSITIVE);
    let bound = if response_norm == 0.0 { 0.0 } else { config.kappa * modulus_eval(&theta, rho)? };

    let mut diagnostics = std::collections::BTreeMap::new();
    diagnostics.insert("probes_used".into(), (probes - skipped) as f64);
    diagnostics.insert("probes_skipped".into(), skipped as f64);
    diagnostics.insert("modes_retained".into(), retained as f64);
    diagnostics.insert("response_norm".into(), response_norm);
    diagnostics.insert("theta_rho".into(), rho);
    Ok(RecoveryResult {
        fields: vec![field],
        coefficients: m,
        bound,
        condition: worst_condition,
        diagnostics,
    })
}
