//! Crank-Nicolson solver for the heat equation u_t = Laplace(u) - q u + g(t) f(x)
//! with homogeneous Dirichlet conditions. Unconditionally stable; the 1D
//! implicit system is solved by the Thomas algorithm, the 2D one by
//! conjugate gradients on the symmetric positive definite operator.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::kernel::Kernel;
use crate::solution::SpaceTimeSolution;
use crate::wave::apply_laplacian;

/// Thomas solve of (I + c (-Lap + q)) x = b on the interior of the interval;
/// boundary entries of x are zero.
struct Tridiag {
    // factored: diag after elimination, and the subdiagonal multipliers
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiag {
    fn factor(grid: &Grid, q: &[f64], c: f64) -> Result<Self> {
        let n = grid.node_count();
        let h2 = grid.hx() * grid.hx();
        let m = n - 2;
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let off = -c / h2;
        for k in 0..m {
            diag[k] = 1.0 + c * (2.0 / h2 + q[k + 1]);
            upper[k] = off;
        }
        // forward elimination with constant off-diagonals
        for k in 1..m {
            let w = off / diag[k - 1];
            diag[k] -= w * upper[k - 1];
            if diag[k].abs() < 1e-14 {
                return Err(Error::LinearSolveFailure("tridiagonal pivot vanished".into()));
            }
        }
        Ok(Tridiag { diag, upper })
    }

    fn solve(&self, grid: &Grid, b: &[f64], x: &mut [f64]) {
        let n = grid.node_count();
        let m = n - 2;
        // the sub-diagonal equals the (constant) upper entries, so the
        // multipliers reuse self.upper directly
        let mut y = vec![0.0; m];
        y[0] = b[1];
        for k in 1..m {
            y[k] = b[k + 1] - self.upper[k - 1] / self.diag[k - 1] * y[k - 1];
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut prev = y[m - 1] / self.diag[m - 1];
        x[n - 2] = prev;
        for k in (0..m - 1).rev() {
            prev = (y[k] - self.upper[k] * prev) / self.diag[k];
            x[k + 1] = prev;
        }
    }
}

/// Apply (I + c (-Lap + q)) on interior nodes; boundary rows give zero.
fn apply_cn_operator(grid: &Grid, q: &[f64], c: f64, u: &[f64], out: &mut [f64], lap: &mut [f64]) {
    apply_laplacian(grid, u, lap);
    for i in 0..u.len() {
        out[i] = if grid.is_boundary(i) {
            0.0
        } else {
            u[i] + c * (-lap[i] + q[i] * u[i])
        };
    }
}

fn cg_solve(grid: &Grid, q: &[f64], c: f64, b: &[f64], x: &mut [f64]) -> Result<()> {
    let n = b.len();
    let mut lap = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply_cn_operator(grid, q, c, x, &mut ap, &mut lap);
    for i in 0..n {
        r[i] = if grid.is_boundary(i) { 0.0 } else { b[i] - ap[i] };
    }
    let mut p = r.clone();
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    let b_norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-13 * b_norm;
    for _ in 0..20 * n {
        if rs.sqrt() <= tol {
            return Ok(());
        }
        apply_cn_operator(grid, q, c, &p, &mut ap, &mut lap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::LinearSolveFailure("CN operator lost definiteness".into()));
        }
        let alpha = rs / pap;
        for i in 0..n {
            if grid.is_boundary(i) {
                continue;
            }
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolveFailure("CG did not converge".into()))
}

/// Crank-Nicolson time stepping. Either initial data or a separable source
/// (or both, by superposition) drive the flow.
pub fn solve_heat(
    grid: &Grid,
    q: &Field,
    u0: &Field,
    source: Option<(&Kernel, &Field)>,
    tau: f64,
    dt: f64,
) -> Result<SpaceTimeSolution> {
    q.check_on_grid(grid)?;
    u0.check_on_grid(grid)?;
    if let Some((g, f)) = source {
        f.check_on_grid(grid)?;
        if (g.dt() - dt).abs() > 1e-12 * dt {
            return Err(Error::GridMismatch("source kernel dt differs from solver dt".into()));
        }
    }
    if tau <= 0.0 || dt <= 0.0 {
        return Err(Error::InvalidArgument("tau and dt must be positive".into()));
    }
    let n = grid.node_count();
    let steps = (tau / dt + 1e-9).floor() as usize;
    let c = 0.5 * dt;
    let qv = q.values();

    let tri = match grid {
        Grid::Interval { .. } => Some(Tridiag::factor(grid, qv, c)?),
        Grid::Square { .. } => None,
    };

    let mut u = Vec::with_capacity(steps + 1);
    let mut first = u0.values().to_vec();
    for i in 0..n {
        if grid.is_boundary(i) {
            first[i] = 0.0;
        }
    }
    u.push(first);

    let mut lap = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for step in 1..=steps {
        let prev = &u[step - 1];
        apply_laplacian(grid, prev, &mut lap);
        let g_mid = source.map_or(0.0, |(g, _)| {
            let g0 = if step - 1 < g.len() { g.values()[step - 1].re } else { 0.0 };
            let g1 = if step < g.len() { g.values()[step].re } else { 0.0 };
            0.5 * (g0 + g1)
        });
        let fv = source.map(|(_, f)| f.values());
        for i in 0..n {
            rhs[i] = if grid.is_boundary(i) {
                0.0
            } else {
                prev[i] + c * (lap[i] - qv[i] * prev[i]) + dt * g_mid * fv.map_or(0.0, |f| f[i])
            };
        }
        let mut next = vec![0.0; n];
        match &tri {
            Some(t) => t.solve(grid, &rhs, &mut next),
            None => {
                next.copy_from_slice(prev);
                for i in 0..n {
                    if grid.is_boundary(i) {
                        next[i] = 0.0;
                    }
                }
                cg_solve(grid, qv, c, &rhs, &mut next)?;
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        u.push(next);
    }
    SpaceTimeSolution::new(grid.clone(), dt, u, None)
}
