//! Leapfrog solver for the wave equation on the unit square with a damping
//! boundary condition on Gamma1 (bottom and left edges) and a Dirichlet
//! condition on Gamma0 (top and right edges):
//!
//!   u_tt = Laplace(u),   u = 0 on Gamma0,   d_nu u + a d_t u = s on Gamma1.
//!
//! Gamma1 nodes are closed by ghost nodes eliminating the damping condition
//! to second order; d_t u there uses the centered difference
//! (u^{n+1} - u^{n-1}) / (2 dt), which keeps each step an explicit scalar
//! solve per node. The corner (0,0) carries both ghost closures.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Boundary, Grid};
use crate::kernel::Kernel;
use crate::solution::SpaceTimeSolution;

/// Damping coefficient sampled on the Gamma1 nodes, in `boundary_nodes`
/// order (bottom edge by increasing x, then left edge by increasing y).
#[derive(Clone, Debug)]
pub struct EdgeDamping {
    values: Vec<f64>,
}

impl EdgeDamping {
    /// Nodal values directly; must be nonnegative and match the Gamma1 node
    /// count of the grid.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        let nodes = grid.boundary_nodes(Boundary::Gamma1)?;
        if values.len() != nodes.len() {
            return Err(Error::GridMismatch(format!(
                "damping has {} values, Gamma1 has {} nodes",
                values.len(),
                nodes.len()
            )));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("damping must be nonnegative".into()));
        }
        Ok(EdgeDamping { values })
    }

    /// Sample edge profiles a1(x) on the bottom and a2(y) on the left, which
    /// must agree at the shared corner.
    pub fn from_profiles(
        grid: &Grid,
        a1: impl Fn(f64) -> f64,
        a2: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if (a1(0.0) - a2(0.0)).abs() > 1e-12 * (1.0 + a1(0.0).abs()) {
            return Err(Error::InvalidArgument(
                "edge profiles must agree at the corner: a1(0) != a2(0)".into(),
            ));
        }
        let nodes = grid.boundary_nodes(Boundary::Gamma1)?;
        let values = nodes
            .iter()
            .map(|&idx| {
                let (x, y) = grid.coords(idx);
                if y == 0.0 { a1(x) } else { a2(y) }
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::from_profiles(grid, |_| c, |_| c)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Inhomogeneous boundary datum s(t, x) = lambda(t) w(x) on Gamma1, with w
/// sampled nodally in `boundary_nodes` order.
pub type BoundarySource<'a> = (&'a Kernel, &'a [f64]);

struct Gamma1Node {
    idx: usize,
    /// reciprocal relaxation rate: sum over incident edges of a / (h dt)
    gamma: f64,
    /// source scale: sum over incident edges of 2 / h
    src: f64,
    on_bottom: bool,
    on_left: bool,
}

pub fn solve_wave_boundary_damped(
    grid: &Grid,
    damping: &EdgeDamping,
    u0: &Field,
    u1: &Field,
    source: Option<BoundarySource>,
    tau: f64,
    dt: f64,
) -> Result<SpaceTimeSolution> {
    let (nx, ny) = match grid {
        Grid::Square { nx, ny } => (*nx, *ny),
        Grid::Interval { .. } => {
            return Err(Error::InvalidArgument("boundary damping needs the square grid".into()))
        }
    };
    u0.check_on_grid(grid)?;
    u1.check_on_grid(grid)?;
    if tau <= 0.0 || dt <= 0.0 {
        return Err(Error::InvalidArgument("tau and dt must be positive".into()));
    }
    let limit = grid.h_min() / 2f64.sqrt();
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    let g0_nodes = grid.boundary_nodes(Boundary::Gamma0)?;
    for &idx in &g0_nodes {
        if u0.values()[idx].abs() > 1e-12 || u1.values()[idx].abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "initial data must vanish on the Dirichlet part Gamma0".into(),
            ));
        }
    }
    let g1_nodes = grid.boundary_nodes(Boundary::Gamma1)?;
    if let Some((kernel, w)) = source {
        if (kernel.dt() - dt).abs() > 1e-12 * dt {
            return Err(Error::GridMismatch("source kernel dt differs from solver dt".into()));
        }
        if w.len() != g1_nodes.len() {
            return Err(Error::GridMismatch("boundary source length != Gamma1 node count".into()));
        }
    }

    let hx = grid.hx();
    let hy = grid.hy();
    let hx2 = hx * hx;
    let hy2 = hy * hy;
    let nodes: Vec<Gamma1Node> = g1_nodes
        .iter()
        .zip(damping.values())
        .map(|(&idx, &a)| {
            let i = idx % nx;
            let j = idx / nx;
            let on_bottom = j == 0;
            let on_left = i == 0;
            let mut gamma = 0.0;
            let mut src = 0.0;
            if on_bottom {
                gamma += a / (hy * dt);
                src += 2.0 / hy;
            }
            if on_left {
                gamma += a / (hx * dt);
                src += 2.0 / hx;
            }
            Gamma1Node { idx, gamma, src, on_bottom, on_left }
        })
        .collect();

    let n = grid.node_count();
    let steps = (tau / dt + 1e-9).floor() as usize;
    let dt2 = dt * dt;
    let sample = |level: usize| -> f64 {
        source.map_or(0.0, |(k, _)| if level < k.len() { k.values()[level].re } else { 0.0 })
    };

    // Spatial operator: interior 5-point Laplacian plus the ghost-closed
    // rows on Gamma1. The velocity argument supplies d_t u in the ghosts.
    let laplace_rows = |u: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let c = i + j * nx;
                out[c] = (u[c - 1] - 2.0 * u[c] + u[c + 1]) / hx2
                    + (u[c - nx] - 2.0 * u[c] + u[c + nx]) / hy2;
            }
        }
    };
    // Ghost-closed row at a Gamma1 node: mirror term 2(u_in - u)/h^2 per
    // incident edge, with the damping and source parts handled by the caller.
    let gamma1_stiffness = |u: &[f64], node: &Gamma1Node| -> f64 {
        let idx = node.idx;
        let i = idx % nx;
        let j = idx / nx;
        let mut acc = 0.0;
        if node.on_bottom {
            acc += 2.0 * (u[idx + nx] - u[idx]) / hy2;
            if node.on_left {
                acc += 2.0 * (u[idx + 1] - u[idx]) / hx2;
            } else {
                acc += (u[idx - 1] - 2.0 * u[idx] + u[idx + 1]) / hx2;
            }
        } else {
            // left edge, j in 1..ny-1
            acc += 2.0 * (u[idx + 1] - u[idx]) / hx2;
            acc += (u[idx - nx] - 2.0 * u[idx] + u[idx + nx]) / hy2;
        }
        let _ = (i, j);
        acc
    };

    let mut u = Vec::with_capacity(steps + 1);
    u.push(u0.values().to_vec());

    if steps >= 1 {
        // Taylor start with d_t u = u1 substituted in the ghost closure
        let mut lap = vec![0.0; n];
        laplace_rows(&u[0], &mut lap);
        let s0 = sample(0);
        let mut next = vec![0.0; n];
        for c in 0..n {
            if !grid.is_boundary(c) {
                next[c] = u[0][c] + dt * u1.values()[c] + 0.5 * dt2 * lap[c];
            }
        }
        for (b, node) in nodes.iter().enumerate() {
            let c = node.idx;
            let w = source.map_or(0.0, |(_, w)| w[b]);
            let accel = gamma1_stiffness(&u[0], node) - 2.0 * node.gamma * dt * u1.values()[c]
                + node.src * s0 * w;
            next[c] = u[0][c] + dt * u1.values()[c] + 0.5 * dt2 * accel;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: 1 });
        }
        u.push(next);
    }

    let mut lap = vec![0.0; n];
    for step in 2..=steps {
        laplace_rows(&u[step - 1], &mut lap);
        let s = sample(step - 1);
        let mut next = vec![0.0; n];
        for c in 0..n {
            if !grid.is_boundary(c) {
                next[c] = 2.0 * u[step - 1][c] - u[step - 2][c] + dt2 * lap[c];
            }
        }
        for (b, node) in nodes.iter().enumerate() {
            let c = node.idx;
            let w = source.map_or(0.0, |(_, w)| w[b]);
            let stiff = gamma1_stiffness(&u[step - 1], node) + node.src * s * w;
            // (u+ - 2u + u-)/dt^2 = stiff - gamma (u+ - u-)
            let denom = 1.0 / dt2 + node.gamma;
            let rhs = (2.0 * u[step - 1][c] - u[step - 2][c]) / dt2
                + stiff
                + node.gamma * u[step - 2][c];
            next[c] = rhs / denom;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        u.push(next);
    }

    // centered velocity history, one-sided at the ends
    let m = u.len();
    let mut v = Vec::with_capacity(m);
    for level in 0..m {
        let mut w = vec![0.0; n];
        for c in 0..n {
            w[c] = if m == 1 {
                0.0
            } else if level == 0 {
                if m >= 3 {
                    (-1.5 * u[0][c] + 2.0 * u[1][c] - 0.5 * u[2][c]) / dt
                } else {
                    (u[1][c] - u[0][c]) / dt
                }
            } else if level == m - 1 {
                if m >= 3 {
                    (1.5 * u[m - 1][c] - 2.0 * u[m - 2][c] + 0.5 * u[m - 3][c]) / dt
                } else {
                    (u[1][c] - u[0][c]) / dt
                }
            } else {
                (u[level + 1][c] - u[level - 1][c]) / (2.0 * dt)
            };
        }
        v.push(w);
    }

    SpaceTimeSolution::new(grid.clone(), dt, u, Some(v))
}

#[cfg(test)]
mod tests {
    use super::*;
     
    use crate::norms::{self, NormKind};
    use std::f64::consts::PI;

    fn mixed_mode(grid: &Grid, k: usize, l: usize) -> (f64, Field) {
        let lam = ((k as f64 + 0.5).powi(2) + (l as f64 + 0.5).powi(2)) * PI * PI;
        let phi = Field::from_fn(grid, |x, y| {
            2.0 * ((k as f64 + 0.5) * PI * x).cos() * ((l as f64 + 0.5) * PI * y).cos()
        });
        (lam, phi)
    }

    #[test]
    fn undamped_mode_oscillates() {
        let grid = Grid::square(201, 201).unwrap();
        let (lam, phi) = mixed_mode(&grid, 0, 0);
        let a = EdgeDamping::constant(&grid, 0.0).unwrap();
        let zero = Field::zeros(&grid);
        let dt = 0.4 * grid.h_min();
        let sol = solve_wave_boundary_damped(&grid, &a, &phi, &zero, None, 1.0, dt).unwrap();
        let m = sol.time_steps() - 1;
        let t = m as f64 * dt;
        let truth = phi.scaled((lam.sqrt() * t).cos());
        let diff = sol.snapshot(m).sub(&truth).unwrap();
        assert!(norms::norm(&diff, NormKind::L2).unwrap() <= 5e-3);
    }

    #[test]
    fn undamped_energy_conserved() {
        let grid = Grid::square(81, 81).unwrap();
        let (_, phi) = mixed_mode(&grid, 0, 0);
        let a = EdgeDamping::constant(&grid, 0.0).unwrap();
        let zero = Field::zeros(&grid);
        let dt = 0.4 * grid.h_min();
        let sol = solve_wave_boundary_damped(&grid, &a, &phi, &zero, None, 4.0, dt).unwrap();
        let e0 = sol.wave_energy(&zero, 1).unwrap();
        let mut drift = 0.0f64;
        for l in 1..sol.time_steps() - 1 {
            drift = drift.max((sol.wave_energy(&zero, l).unwrap() - e0).abs() / e0);
        }
        assert!(drift <= 1e-4, "drift {drift}");
    }

    #[test]
    fn damped_energy_decays() {
        let grid = Grid::square(81, 81).unwrap();
        let (_, phi) = mixed_mode(&grid, 0, 0);
        let a = EdgeDamping::constant(&grid, 0.5).unwrap();
        let zero = Field::zeros(&grid);
        let dt = 0.4 * grid.h_min();
        let sol = solve_wave_boundary_damped(&grid, &a, &phi, &zero, None, 2.0, dt).unwrap();
        let e0 = sol.wave_energy(&zero, 1).unwrap();
        let e1 = sol.wave_energy(&zero, sol.time_steps() - 2).unwrap();
        assert!(e1 < 0.9 * e0, "no visible decay: {e0} -> {e1}");
        let mut prev = f64::INFINITY;
        for l in 1..sol.time_steps() - 1 {
            let e = sol.wave_energy(&zero, l).unwrap();
            assert!(e <= prev * (1.0 + 1e-10), "energy rose at level {l}");
            prev = e;
        }
    }

    #[test]
    fn mismatched_corner_profiles_rejected() {
        let grid = Grid::square(21, 21).unwrap();
        assert!(EdgeDamping::from_profiles(&grid, |_| 1.0, |y| 2.0 + y).is_err());
        assert!(EdgeDamping::from_values(&grid, vec![-1.0; 39]).is_err());
    }

    #[test]
    fn superposition_exact() {
        let grid = Grid::square(31, 31).unwrap();
        let a = EdgeDamping::constant(&grid, 0.3).unwrap();
        let zero = Field::zeros(&grid);
        let (_, pa) = mixed_mode(&grid, 0, 0);
        let (_, pb) = mixed_mode(&grid, 1, 0);
        let dt = 0.4 * grid.h_min();
        let sa = solve_wave_boundary_damped(&grid, &a, &pa, &zero, None, 1.0, dt).unwrap();
        let sb = solve_wave_boundary_damped(&grid, &a, &zero, &pb, None, 1.0, dt).unwrap();
        let sum_data = pa.clone();
        let sum =
            solve_wave_boundary_damped(&grid, &a, &sum_data, &pb, None, 1.0, dt).unwrap();
        for l in 0..sum.time_steps() {
            for c in 0..grid.node_count() {
                assert!((sa.raw(l)[c] + sb.raw(l)[c] - sum.raw(l)[c]).abs() < 1e-12);
            }
        }
    }
}
