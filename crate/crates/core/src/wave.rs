//! Leapfrog solver for the wave equation with potential, volume damping, and
//! a separable source g(t) f(x), under homogeneous Dirichlet conditions.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::kernel::Kernel;
use crate::solution::SpaceTimeSolution;

/// Interior 3-point / 5-point Laplacian; boundary entries of `out` are left
/// at zero.
pub(crate) fn apply_laplacian(grid: &Grid, u: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    match grid {
        Grid::Interval { n } => {
            let h2 = grid.hx() * grid.hx();
            for i in 1..n - 1 {
                out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
            }
        }
        Grid::Square { nx, ny } => {
            let hx2 = grid.hx() * grid.hx();
            let hy2 = grid.hy() * grid.hy();
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    let c = i + j * nx;
                    out[c] = (u[c - 1] - 2.0 * u[c] + u[c + 1]) / hx2
                        + (u[c - nx] - 2.0 * u[c] + u[c + nx]) / hy2;
                }
            }
        }
    }
}

pub(crate) fn cfl_limit(grid: &Grid) -> f64 {
    match grid {
        Grid::Interval { .. } => grid.h_min(),
        Grid::Square { .. } => grid.h_min() / 2f64.sqrt(),
    }
}

/// Conservative default step: 0.8h in 1D, 0.4h in 2D.
pub fn default_wave_dt(grid: &Grid) -> f64 {
    match grid {
        Grid::Interval { .. } => 0.8 * grid.h_min(),
        Grid::Square { .. } => 0.4 * grid.h_min(),
    }
}

fn check_finite(step: usize, u: &[f64]) -> Result<()> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step });
    }
    Ok(())
}

fn source_sample(source: Option<(&Kernel, &Field)>, level: usize) -> f64 {
    match source {
        Some((g, _)) if level < g.len() => g.values()[level].re,
        _ => 0.0,
    }
}

/// Second-order leapfrog for u_tt + a u_t - Laplace(u) + q u = g(t) f(x),
/// u = 0 on the boundary. The damping term uses the centered average
/// (u^{n+1} - u^{n-1}) / (2 dt), so each step stays an explicit nodal solve.
pub fn solve_wave(
    grid: &Grid,
    q: &Field,
    a: &Field,
    u0: &Field,
    u1: &Field,
    source: Option<(&Kernel, &Field)>,
    tau: f64,
    dt: f64,
) -> Result<SpaceTimeSolution> {
    for f in [q, a, u0, u1] {
        f.check_on_grid(grid)?;
    }
    if let Some((g, f)) = source {
        f.check_on_grid(grid)?;
        if (g.dt() - dt).abs() > 1e-12 * dt {
            return Err(Error::GridMismatch("source kernel dt differs from solver dt".into()));
        }
    }
    if tau <= 0.0 || dt <= 0.0 {
        return Err(Error::InvalidArgument("tau and dt must be positive".into()));
    }
    let limit = cfl_limit(grid);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    if !u0.is_zero_on_boundary(1e-12) {
        return Err(Error::InvalidArgument(
            "u0 must vanish on the boundary (Dirichlet compatibility)".into(),
        ));
    }

    let n = grid.node_count();
    let steps = (tau / dt + 1e-9).floor() as usize;
    let mut u = Vec::with_capacity(steps + 1);
    let dt2 = dt * dt;
    let av = a.values();
    let qv = q.values();
    let fv = source.map(|(_, f)| f.values());

    let mut lap = vec![0.0; n];
    u.push(u0.values().to_vec());

    if steps >= 1 {
        // Taylor start: u^1 = u0 + dt u1 + dt^2/2 (Lap u0 - q u0 - a u1 + g(0) f)
        apply_laplacian(grid, &u[0], &mut lap);
        let g0 = source_sample(source, 0);
        let mut next = vec![0.0; n];
        for c in 0..n {
            if grid.is_boundary(c) {
                continue;
            }
            let accel = lap[c] - qv[c] * u[0][c] - av[c] * u1.values()[c]
                + g0 * fv.map_or(0.0, |f| f[c]);
            next[c] = u[0][c] + dt * u1.values()[c] + 0.5 * dt2 * accel;
        }
        check_finite(1, &next)?;
        u.push(next);
    }

    for step in 2..=steps {
        apply_laplacian(grid, &u[step - 1], &mut lap);
        let g = source_sample(source, step - 1);
        let mut next = vec![0.0; n];
        for c in 0..n {
            if grid.is_boundary(c) {
                continue;
            }
            let rhs = 2.0 * u[step - 1][c] - u[step - 2][c]
                + dt2 * (lap[c] - qv[c] * u[step - 1][c] + g * fv.map_or(0.0, |f| f[c]))
                + 0.5 * dt * av[c] * u[step - 2][c];
            next[c] = rhs / (1.0 + 0.5 * dt * av[c]);
        }
        check_finite(step, &next)?;
        u.push(next);
    }

    // Velocity history by centered differences, second-order one-sided ends.
    let mut v = Vec::with_capacity(u.len());
    let m = u.len();
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
    use crate::solution::neumann_trace;
    use crate::trace::BoundaryTrace;
    use crate::{volterra, Boundary};
    use std::f64::consts::PI;

    fn l2_err(sol: &SpaceTimeSolution, level: usize, truth: &Field) -> f64 {
        let diff = sol.snapshot(level).sub(truth).unwrap();
        norms::norm(&diff, NormKind::L2).unwrap()
    }

    #[test]
    fn standing_mode_1d() {
        let grid = Grid::interval(401).unwrap();
        let zero = Field::zeros(&grid);
        let u0 = Field::from_fn(&grid, |x, _| 2f64.sqrt() * (PI * x).sin());
        let dt = default_wave_dt(&grid);
        let tau = 2.0;
        let sol = solve_wave(&grid, &zero, &zero, &u0, &zero, None, tau, dt).unwrap();
        let m = sol.time_steps() - 1;
        let t = m as f64 * dt;
        let truth = u0.scaled((PI * t).cos());
        assert!(l2_err(&sol, m, &truth) <= 1e-3);
    }

    #[test]
    fn cfl_violation_rejected() {
        let grid = Grid::interval(101).unwrap();
        let zero = Field::zeros(&grid);
        let r = solve_wave(&grid, &zero, &zero, &zero, &zero, None, 1.0, 2.0 * grid.h_min());
        assert!(matches!(r, Err(Error::CflViolation { .. })));
    }

    #[test]
    fn duhamel_identity() {
        // Source solution equals g convolved with the initial-data solution.
        let grid = Grid::interval(201).unwrap();
        let zero = Field::zeros(&grid);
        let f = Field::from_fn(&grid, |x, _| (PI * x).sin() + 0.5 * (3.0 * PI * x).sin());
        let dt = default_wave_dt(&grid);
        let tau = 1.5;
        let kernel = Kernel::from_real_fn(tau, dt, |t| (2.0 * t).cos() * (1.0 + t)).unwrap();
        let with_source =
            solve_wave(&grid, &zero, &zero, &zero, &zero, Some((&kernel, &f)), tau, dt).unwrap();
        // the homogeneous run carries f as initial velocity so that the
        // convolution picks up the source through w'(0)
        let homo = solve_wave(&grid, &zero, &zero, &zero, &f, None, tau, dt).unwrap();
        // one node's history: v(x, t) = int_0^t g(t-s) w(x, s) ds
        let idx = grid.node_count() / 3;
        let w_hist: Vec<f64> = (0..homo.time_steps()).map(|l| homo.raw(l)[idx]).collect();
        let kern = kernel.truncated((w_hist.len() - 1) as f64 * dt).unwrap();
        let conv = volterra::convolve_real(&kern, &w_hist).unwrap();
        let scale = conv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (l, &c) in conv.iter().enumerate() {
            assert!(
                (with_source.raw(l)[idx] - c).abs() <= 1e-3 * scale,
                "level {l}: {} vs {c}",
                with_source.raw(l)[idx]
            );
        }
    }

    #[test]
    fn damped_energy_nonincreasing() {
        let grid = Grid::interval(151).unwrap();
        let zero = Field::zeros(&grid);
        let damp = Field::constant(&grid, 0.1);
        let u0 = Field::from_fn(&grid, |x, _| (PI * x).sin() + 0.3 * (2.0 * PI * x).sin());
        let dt = default_wave_dt(&grid);
        let sol = solve_wave(&grid, &zero, &damp, &u0, &zero, None, 4.0, dt).unwrap();
        let mut prev = f64::INFINITY;
        // skip the one-sided velocity levels at the two ends
        for l in 1..sol.time_steps() - 1 {
            let e = sol.wave_energy(&zero, l).unwrap();
            assert!(e <= prev + 1e-10, "energy rose at level {l}");
            prev = e;
        }
    }

    #[test]
    fn undamped_energy_drift_small() {
        let grid = Grid::interval(201).unwrap();
        let zero = Field::zeros(&grid);
        let q = Field::from_fn(&grid, |x, _| 1.0 + x);
        let u0 = Field::from_fn(&grid, |x, _| (PI * x).sin());
        let dt = 0.5 * cfl_limit(&grid);
        let sol = solve_wave(&grid, &q, &zero, &u0, &zero, None, 4.0, dt).unwrap();
        let e0 = sol.wave_energy(&q, 1).unwrap();
        let mut max_drift = 0.0f64;
        for l in 1..sol.time_steps() - 1 {
            let e = sol.wave_energy(&q, l).unwrap();
            max_drift = max_drift.max((e - e0).abs() / e0);
        }
        assert!(max_drift <= 1e-4, "drift {max_drift}");
    }

    #[test]
    fn superposition_exact() {
        let grid = Grid::interval(101).unwrap();
        let zero = Field::zeros(&grid);
        let q = Field::constant(&grid, 2.0);
        let ua = Field::from_fn(&grid, |x, _| (PI * x).sin());
        let ub = Field::from_fn(&grid, |x, _| x * (1.0 - x));
        let dt = default_wave_dt(&grid);
        let sa = solve_wave(&grid, &q, &zero, &ua, &zero, None, 1.0, dt).unwrap();
        let sb = solve_wave(&grid, &q, &zero, &zero, &ub, None, 1.0, dt).unwrap();
        let sum = solve_wave(&grid, &q, &zero, &ua, &ub, None, 1.0, dt).unwrap();
        for l in 0..sum.time_steps() {
            for c in 0..grid.node_count() {
                assert!((sa.raw(l)[c] + sb.raw(l)[c] - sum.raw(l)[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_of_standing_mode_matches_sign() {
        let grid = Grid::interval(201).unwrap();
        let zero = Field::zeros(&grid);
        let u0 = Field::from_fn(&grid, |x, _| 2f64.sqrt() * (PI * x).sin());
        let dt = default_wave_dt(&grid);
        let sol = solve_wave(&grid, &zero, &zero, &u0, &zero, None, 0.5, dt).unwrap();
        let tr: BoundaryTrace = neumann_trace(&sol, Boundary::Left).unwrap();
        // outward derivative at x=0 of sqrt(2) sin(pi x) is -sqrt(2) pi
        assert!((tr.rows[0][0] + 2f64.sqrt() * PI).abs() < 1e-3);
    }

    #[test]
    fn order_two_in_space() {
        let mut errs = Vec::new();
        for &n in &[51usize, 101, 201] {
            let grid = Grid::interval(n).unwrap();
            let zero = Field::zeros(&grid);
            let u0 = Field::from_fn(&grid, |x, _| (PI * x).sin());
            // sample away from extrema of cos so phase error stays first order
            let dt = 0.5 * grid.h_min();
            let sol = solve_wave(&grid, &zero, &zero, &u0, &zero, None, 0.7, dt).unwrap();
            let m = sol.time_steps() - 1;
            let t = m as f64 * dt;
            let truth = u0.scaled((PI * t).cos());
            errs.push(l2_err(&sol, m, &truth));
        }
        let slope = (errs[0] / errs[2]).ln() / 4f64.ln();
        assert!((slope - 2.0).abs() <= 0.3, "order {slope}");
    }
}
