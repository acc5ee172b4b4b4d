use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Boundary, Grid};

/// Discrete norm families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Trapezoid-rule L2 norm.
    L2,
    /// H1_0 seminorm (gradient only, one-sided differences).
    H10,
    /// Full H2 norm: L2 + gradient + second-difference stencil.
    H2,
    /// V-norm on the square: gradient seminorm with Gamma0-Dirichlet.
    V,
    /// Dual V' norm: V-norm of the Riesz representer of the field viewed as
    /// an L2 density against V.
    DualV,
}

/// Trapezoid-rule inner product.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    Ok(f
        .values()
        .iter()
        .zip(g.values())
        .enumerate()
        .map(|(i, (a, b))| grid.quad_weight(i) * a * b)
        .sum())
}

pub fn l2_norm(f: &Field) -> f64 {
    inner(f, f).expect("same grid").max(0.0).sqrt()
}

/// Square of the gradient seminorm, by one-sided differences on each cell.
pub fn h10_seminorm_sq(f: &Field) -> f64 {
    let grid = f.grid();
    let v = f.values();
    match grid {
        Grid::Interval { n } => {
            let h = grid.hx();
            (0..n - 1).map(|i| (v[i + 1] - v[i]).powi(2) / h).sum()
        }
        Grid::Square { nx, ny } => {
            let hx = grid.hx();
            let hy = grid.hy();
            let mut acc = 0.0;
            for j in 0..*ny {
                let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
                for i in 0..nx - 1 {
                    let d = v[grid.flat(i + 1, j)] - v[grid.flat(i, j)];
                    acc += wy * hy * d * d / hx;
                }
            }
            for i in 0..*nx {
                let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
                for j in 0..ny - 1 {
                    let d = v[grid.flat(i, j + 1)] - v[grid.flat(i, j)];
                    acc += wx * hx * d * d / hy;
                }
            }
            acc
        }
    }
}

/// Second-difference stencil values (3-point in 1D, 5-point Laplacian in 2D)
/// with one-sided closures at the boundary.
fn second_difference(f: &Field) -> Field {
    let grid = f.grid();
    let v = f.values();
    match grid {
        Grid::Interval { n } => {
            let h2 = grid.hx() * grid.hx();
            let mut out = vec![0.0; *n];
            for i in 1..n - 1 {
                out[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2;
            }
            out[0] = (v[0] - 2.0 * v[1] + v[2]) / h2;
            out[n - 1] = (v[n - 1] - 2.0 * v[n - 2] + v[n - 3]) / h2;
            Field::new(grid.clone(), out).expect("size matches")
        }
        Grid::Square { nx, ny } => {
            let hx2 = grid.hx() * grid.hx();
            let hy2 = grid.hy() * grid.hy();
            let mut out = vec![0.0; nx * ny];
            let dxx = |i: usize, j: usize| {
                let row = |k: usize| v[grid.flat(k, j)];
                if i == 0 {
                    (row(0) - 2.0 * row(1) + row(2)) / hx2
                } else if i == nx - 1 {
                    (row(nx - 1) - 2.0 * row(nx - 2) + row(nx - 3)) / hx2
                } else {
                    (row(i - 1) - 2.0 * row(i) + row(i + 1)) / hx2
                }
            };
            let dyy = |i: usize, j: usize| {
                let col = |k: usize| v[grid.flat(i, k)];
                if j == 0 {
                    (col(0) - 2.0 * col(1) + col(2)) / hy2
                } else if j == ny - 1 {
                    (col(ny - 1) - 2.0 * col(ny - 2) + col(ny - 3)) / hy2
                } else {
                    (col(j - 1) - 2.0 * col(j) + col(j + 1)) / hy2
                }
            };
            for j in 0..*ny {
                for i in 0..*nx {
                    out[grid.flat(i, j)] = dxx(i, j) + dyy(i, j);
                }
            }
            Field::new(grid.clone(), out).expect("size matches")
        }
    }
}

/// Evaluate a discrete norm of the field.
pub fn norm(f: &Field, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::L2 => Ok(l2_norm(f)),
        NormKind::H10 => Ok(h10_seminorm_sq(f).max(0.0).sqrt()),
        NormKind::H2 => {
            let min_axis = match f.grid() {
                Grid::Interval { n } => *n,
                Grid::Square { nx, ny } => *nx.min(ny),
            };
            if min_axis < 4 {
                return Err(Error::InvalidArgument(
                    "H2 norm needs at least 4 nodes per axis (stencil underdetermined)".into(),
                ));
            }
            let d2 = second_difference(f);
            let sq = inner(f, f)? + h10_seminorm_sq(f) + inner(&d2, &d2)?;
            Ok(sq.max(0.0).sqrt())
        }
        NormKind::V => Ok(h10_seminorm_sq(f).max(0.0).sqrt()),
        NormKind::DualV => dual_v_norm_density(f),
    }
}

/// Apply the mixed-boundary Laplacian (Gamma0-Dirichlet, Gamma1-Neumann by
/// ghost reflection) used by the V' Riesz problem. Dirichlet nodes pass
/// through unchanged, pinning them in the solve.
fn apply_mixed_laplacian(grid: &Grid, dirichlet: &[bool], u: &[f64], out: &mut [f64]) {
    match grid {
        Grid::Interval { n } => {
            // Interval variant: right endpoint Dirichlet, left Neumann.
            let h2 = grid.hx() * grid.hx();
            for i in 0..*n {
                if dirichlet[i] {
                    out[i] = u[i];
                    continue;
                }
                let left = if i == 0 { u[1] } else { u[i - 1] };
                let right = if i == n - 1 { u[n - 2] } else { u[i + 1] };
                out[i] = (2.0 * u[i] - left - right) / h2;
            }
        }
        Grid::Square { nx, ny } => {
            let hx2 = grid.hx() * grid.hx();
            let hy2 = grid.hy() * grid.hy();
            for j in 0..*ny {
                for i in 0..*nx {
                    let idx = grid.flat(i, j);
                    if dirichlet[idx] {
                        out[idx] = u[idx];
                        continue;
                    }
                    let xm = if i == 0 { u[grid.flat(1, j)] } else { u[grid.flat(i - 1, j)] };
                    let xp = if i == nx - 1 {
                        u[grid.flat(nx - 2, j)]
                    } else {
                        u[grid.flat(i + 1, j)]
                    };
                    let ym = if j == 0 { u[grid.flat(i, 1)] } else { u[grid.flat(i, j - 1)] };
                    let yp = if j == ny - 1 {
                        u[grid.flat(i, ny - 2)]
                    } else {
                        u[grid.flat(i, j + 1)]
                    };
                    out[idx] = (2.0 * u[idx] - xm - xp) / hx2 + (2.0 * u[idx] - ym - yp) / hy2;
                }
            }
        }
    }
}

fn dirichlet_mask(grid: &Grid) -> Vec<bool> {
    let mut mask = vec![false; grid.node_count()];
    match grid {
        Grid::Interval { n } => {
            // Match the square convention: "Gamma0" is the far end.
            mask[n - 1] = true;
        }
        Grid::Square { .. } => {
            for idx in grid.boundary_nodes(Boundary::Gamma0).expect("square grid") {
                mask[idx] = true;
            }
        }
    }
    mask
}

/// Solve the discrete Riesz problem -Lap r = load (Gamma0-Dirichlet,
/// Gamma1-Neumann) by conjugate gradients in the quadrature inner product.
pub fn riesz_representer(grid: &Grid, load: &[f64]) -> Result<Vec<f64>> {
    let n = grid.node_count();
    if load.len() != n {
        return Err(Error::GridMismatch("load vector size mismatch".into()));
    }
    let dirichlet = dirichlet_mask(grid);
    let w: Vec<f64> = (0..n).map(|i| grid.quad_weight(i)).collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(&w).map(|((x, y), wi)| wi * x * y).sum()
    };

    let mut b = load.to_vec();
    for i in 0..n {
        if dirichlet[i] {
            b[i] = 0.0;
        }
    }
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);
    let b_norm = rs.sqrt().max(1e-300);
    let tol = 1e-12 * b_norm;
    let max_iter = 20 * n;
    for _ in 0..max_iter {
        if rs.sqrt() <= tol {
            return Ok(x);
        }
        apply_mixed_laplacian(grid, &dirichlet, &p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::LinearSolveFailure("CG lost positive-definiteness".into()));
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rs.sqrt() <= 1e-8 * b_norm {
        Ok(x)
    } else {
        Err(Error::LinearSolveFailure(format!(
            "CG did not converge: residual {:.3e}",
            rs.sqrt() / b_norm
        )))
    }
}

/// V' norm of an L2 density: solve the Riesz problem and return the V-norm of
/// the representer, computed as sqrt(<load, r>).
pub fn dual_v_norm_density(f: &Field) -> Result<f64> {
    let grid = f.grid();
    let r = riesz_representer(grid, f.values())?;
    let w_dot: f64 = (0..grid.node_count())
        .map(|i| grid.quad_weight(i) * f.values()[i] * r[i])
        .sum();
    Ok(w_dot.max(0.0).sqrt())
}

/// V' norm of a functional given by point coefficients: F(v) = sum c_b v(b).
pub fn dual_v_norm_functional(grid: &Grid, point_coeffs: &[(usize, f64)]) -> Result<f64> {
    // Convert to an equivalent density: F(v) = sum_i w_i (c_i / w_i) v_i.
    let mut load = vec![0.0; grid.node_count()];
    for &(idx, c) in point_coeffs {
        load[idx] += c / grid.quad_weight(idx);
    }
    let r = riesz_representer(grid, &load)?;
    let action: f64 = point_coeffs.iter().map(|&(idx, c)| c * r[idx]).sum();
    Ok(action.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn normalized_eigenfunction_has_unit_l2() {
        let grid = Grid::interval(201).unwrap();
        let f = Field::from_fn(&grid, |x, _| 2f64.sqrt() * (PI * x).sin());
        let h = grid.hx();
        assert!((l2_norm(&f) - 1.0).abs() <= 2.0 * h * h);
    }

    #[test]
    fn zero_field_all_norms_zero() {
        let grid = Grid::interval(11).unwrap();
        let f = Field::zeros(&grid);
        for kind in [NormKind::L2, NormKind::H10, NormKind::H2, NormKind::V, NormKind::DualV] {
            assert_eq!(norm(&f, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn parabola_h10_matches_closed_form() {
        // f = x(1-x): int (1-2x)^2 = 1/3.
        let grid = Grid::interval(401).unwrap();
        let f = Field::from_fn(&grid, |x, _| x * (1.0 - x));
        let h = grid.hx();
        let expected = (1.0f64 / 3.0).sqrt();
        assert!((norm(&f, NormKind::H10).unwrap() - expected).abs() <= 2.0 * h * h + 1e-4);
    }

    #[test]
    fn h2_on_three_node_axis_rejected() {
        let grid = Grid::interval(3).unwrap();
        let f = Field::constant(&grid, 1.0);
        assert!(norm(&f, NormKind::H2).is_err());
    }

    #[test]
    fn square_l2_of_mixed_mode_is_one() {
        let grid = Grid::square(81, 81).unwrap();
        let f = Field::from_fn(&grid, |x, y| {
            2.0 * (0.5 * PI * x).cos() * (0.5 * PI * y).cos()
        });
        let h = grid.hx();
        assert!((l2_norm(&f) - 1.0).abs() <= 4.0 * h * h);
    }

    #[test]
    fn dual_v_norm_matches_manufactured_representer() {
        // On the interval variant (Dirichlet at x=1, Neumann at x=0):
        // r(x) = cos(pi x / 2) satisfies -r'' = (pi/2)^2 r, r'(0)=0, r(1)=0.
        // With density f = (pi/2)^2 cos(pi x/2), the V' norm is ||r||_V =
        // (pi/2) * sqrt(1/2).
        let grid = Grid::interval(401).unwrap();
        let f = Field::from_fn(&grid, |x, _| (0.5 * PI).powi(2) * (0.5 * PI * x).cos());
        let got = dual_v_norm_density(&f).unwrap();
        let expected = 0.5 * PI * 0.5f64.sqrt();
        assert_relative_eq!(got, expected, max_relative = 1e-3);
    }
}
