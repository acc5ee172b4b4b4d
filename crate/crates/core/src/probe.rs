//! Initial-to-boundary operators sampled on probe dictionaries, and the
//! empirical observability constant derived from them.

use crate::damped_wave::{solve_wave_boundary_damped, EdgeDamping};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Field};
use crate::grid::{Boundary, Grid};
use crate::heat::solve_heat;
use crate::norms::{self, h10_seminorm_sq, NormKind};
use crate::solution::neumann_trace;
use crate::trace::BoundaryTrace;
use crate::wave::solve_wave;

/// One probe of the operator: initial data for the relevant evolution.
/// Complex probes run as two real solves and recombine by linearity.
#[derive(Clone, Debug)]
pub enum Probe {
    Wave { u0: Field, u1: Field },
    WaveComplex { u0: ComplexField, u1: ComplexField },
    Heat { u0: Field },
}

/// Boundary response of one probe; the imaginary part is present exactly for
/// complex probes.
#[derive(Clone, Debug)]
pub struct ProbeResponse {
    pub id: usize,
    pub re: BoundaryTrace,
    pub im: Option<BoundaryTrace>,
}

/// Responses of a probe dictionary, ordered by probe index.
#[derive(Clone, Debug)]
pub struct ProbeResponseSet {
    pub label: Boundary,
    pub dt: f64,
    pub responses: Vec<ProbeResponse>,
}

/// Which initial-to-boundary operator to sample.
#[derive(Clone, Debug)]
pub enum OperatorKind<'a> {
    /// Dirichlet wave with potential q and volume damping a.
    Wave { q: &'a Field, a: &'a Field },
    /// Dirichlet heat with potential q.
    Heat { q: &'a Field },
    /// Square wave with boundary damping on Gamma1.
    SquareDamped { a: &'a EdgeDamping },
}

fn annotate(id: usize, e: Error) -> Error {
    Error::InvalidArgument(format!("probe {id}: {e}"))
}

fn solve_one(
    kind: &OperatorKind,
    grid: &Grid,
    u0: &Field,
    u1: &Field,
    tau: f64,
    dt: f64,
    label: Boundary,
) -> Result<BoundaryTrace> {
    let sol = match kind {
        OperatorKind::Wave { q, a } => solve_wave(grid, q, a, u0, u1, None, tau, dt)?,
        OperatorKind::Heat { q } => solve_heat(grid, q, u0, None, tau, dt)?,
        OperatorKind::SquareDamped { a } => {
            solve_wave_boundary_damped(grid, a, u0, u1, None, tau, dt)?
        }
    };
    neumann_trace(&sol, label)
}

/// Sample the operator over the dictionary: one forward solve and trace per
/// probe (two for complex probes), in probe order.
pub fn initial_to_boundary(
    kind: OperatorKind,
    grid: &Grid,
    probes: &[Probe],
    tau: f64,
    dt: f64,
    label: Boundary,
) -> Result<ProbeResponseSet> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument("empty probe dictionary".into()));
    }
    let mut responses = Vec::with_capacity(probes.len());
    for (id, probe) in probes.iter().enumerate() {
        let response = match probe {
            Probe::Wave { u0, u1 } => ProbeResponse {
                id,
                re: solve_one(&kind, grid, u0, u1, tau, dt, label)
                    .map_err(|e| annotate(id, e))?,
                im: None,
            },
            Probe::Heat { u0 } => {
                let zero = Field::zeros(grid);
                ProbeResponse {
                    id,
                    re: solve_one(&kind, grid, u0, &zero, tau, dt, label)
                        .map_err(|e| annotate(id, e))?,
                    im: None,
                }
            }
            Probe::WaveComplex { u0, u1 } => {
                let re = solve_one(&kind, grid, &u0.re, &u1.re, tau, dt, label)
                    .map_err(|e| annotate(id, e))?;
                let im = solve_one(&kind, grid, &u0.im, &u1.im, tau, dt, label)
                    .map_err(|e| annotate(id, e))?;
                ProbeResponse { id, re, im: Some(im) }
            }
        };
        responses.push(response);
    }
    Ok(ProbeResponseSet { label, dt, responses })
}

fn probe_state_norm(kind: &OperatorKind, probe: &Probe, grid: &Grid, tau: f64, dt: f64) -> Result<f64> {
    match (kind, probe) {
        (OperatorKind::Wave { .. } | OperatorKind::SquareDamped { .. }, Probe::Wave { u0, u1 }) => {
            let e = h10_seminorm_sq(u0) + norms::norm(u1, NormKind::L2)?.powi(2);
            Ok(e.sqrt())
        }
        (OperatorKind::Heat { q }, Probe::Heat { u0 }) => {
            // final-time form: the denominator is ||u(tau)||
            let sol = solve_heat(grid, q, u0, None, tau, dt)?;
            norms::norm(&sol.final_field(), NormKind::L2)
        }
        _ => Err(Error::InvalidArgument("probe kind does not match operator kind".into())),
    }
}

/// Empirical LOWER estimate of the observability constant: the minimum over
/// the dictionary of trace norm over state norm. Not a proof — larger
/// dictionaries can only shrink it.
pub fn estimate_observability_constant(
    kind: OperatorKind,
    grid: &Grid,
    probes: &[Probe],
    label: Boundary,
    tau: f64,
    dt: f64,
) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument("empty probe dictionary".into()));
    }
    let mut best = f64::INFINITY;
    for (id, probe) in probes.iter().enumerate() {
        let denom = probe_state_norm(&kind, probe, grid, tau, dt).map_err(|e| annotate(id, e))?;
        let scale = match probe {
            Probe::Wave { u0, u1 } => u0.max_abs().max(u1.max_abs()),
            Probe::Heat { u0 } => u0.max_abs(),
            Probe::WaveComplex { .. } => 1.0,
        };
        // relative threshold: strong heat decay shrinks the state norm by
        // many orders of magnitude without making the ratio meaningless
        if denom <= f64::MIN_POSITIVE.sqrt() * scale.max(1.0) || scale == 0.0 {
            return Err(Error::Degenerate(format!("probe {id} has zero state norm")));
        }
        let (u0, u1) = match probe {
            Probe::Wave { u0, u1 } => (u0.clone(), u1.clone()),
            Probe::Heat { u0 } => (u0.clone(), Field::zeros(grid)),
            Probe::WaveComplex { .. } => {
                return Err(Error::InvalidArgument(
                    "observability estimate expects real probes".into(),
                ))
            }
        };
        let trace = solve_one(&kind, grid, &u0, &u1, tau, dt, label).map_err(|e| annotate(id, e))?;
        best = best.min(trace.l2_norm(grid)? / denom);
    }
    Ok(best)
}
