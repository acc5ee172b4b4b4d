//! Time histories produced by the forward solvers.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Boundary, Grid};
use crate::norms::{self, h10_seminorm_sq};
use crate::trace::{self, BoundaryTrace};

/// Full history of a forward solve: displacement snapshots at every time
/// level, and velocity snapshots for wave problems.
#[derive(Clone, Debug)]
pub struct SpaceTimeSolution {
    grid: Grid,
    dt: f64,
    u: Vec<Vec<f64>>,
    v: Option<Vec<Vec<f64>>>,
}

impl SpaceTimeSolution {
    pub fn new(grid: Grid, dt: f64, u: Vec<Vec<f64>>, v: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::InvalidArgument("solution needs at least one snapshot".into()));
        }
        let n = grid.node_count();
        if u.iter().any(|s| s.len() != n) {
            return Err(Error::GridMismatch("snapshot length != node count".into()));
        }
        if let Some(v) = &v {
            if v.len() != u.len() || v.iter().any(|s| s.len() != n) {
                return Err(Error::GridMismatch("velocity history shape mismatch".into()));
            }
        }
        Ok(SpaceTimeSolution { grid, dt, u, v })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time_steps(&self) -> usize {
        self.u.len()
    }

    pub fn tau(&self) -> f64 {
        (self.u.len() - 1) as f64 * self.dt
    }

    pub fn snapshot(&self, level: usize) -> Field {
        Field::new(self.grid.clone(), self.u[level].clone()).expect("stored snapshot is valid")
    }

    pub fn velocity(&self, level: usize) -> Option<Field> {
        self.v
            .as_ref()
            .map(|v| Field::new(self.grid.clone(), v[level].clone()).expect("stored snapshot"))
    }

    pub fn final_field(&self) -> Field {
        self.snapshot(self.u.len() - 1)
    }

    pub fn raw(&self, level: usize) -> &[f64] {
        &self.u[level]
    }

    /// Discrete wave energy ||v||^2 + |u|_{H10}^2 + <q u, u> at a time level.
    pub fn wave_energy(&self, q: &Field, level: usize) -> Result<f64> {
        let u = self.snapshot(level);
        let v = self
            .velocity(level)
            .ok_or_else(|| Error::InvalidArgument("no velocity history stored".into()))?;
        let qu = q.mul(&u)?;
        Ok(norms::inner(&v, &v)? + h10_seminorm_sq(&u) + norms::inner(&qu, &u)?)
    }
}

/// Outward Neumann data of the history on a labeled boundary part.
pub fn neumann_trace(solution: &SpaceTimeSolution, label: Boundary) -> Result<BoundaryTrace> {
    if !solution.grid().supports(label) {
        return Err(Error::UnknownBoundary { label: label.name().into() });
    }
    let mut rows = Vec::with_capacity(solution.time_steps());
    for level in 0..solution.time_steps() {
        rows.push(trace::normal_derivative(&solution.snapshot(level), label)?);
    }
    BoundaryTrace::new(label, solution.dt(), rows)
}
