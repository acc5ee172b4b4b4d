use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Boundary, Grid};

/// Outward normal derivative at a labeled boundary node by the second-order
/// one-sided 3-point stencil.
///
/// The artifact fixes the OUTWARD normal everywhere; traces differ by sign
/// from inward-normal formulas, which leaves every stability statement
/// unchanged.
pub fn normal_derivative(f: &Field, label: Boundary) -> Result<Vec<f64>> {
    let grid = f.grid();
    let nodes = grid.boundary_nodes(label)?;
    let v = f.values();
    let mut out = Vec::with_capacity(nodes.len());
    match grid {
        Grid::Interval { n } => {
            let h = grid.hx();
            for &idx in &nodes {
                let d = if idx == 0 {
                    // outward normal is -x: -(df/dx)(0)
                    -(-1.5 * v[0] + 2.0 * v[1] - 0.5 * v[2]) / h
                } else {
                    (1.5 * v[n - 1] - 2.0 * v[n - 2] + 0.5 * v[n - 3]) / h
                };
                out.push(d);
            }
        }
        Grid::Square { nx, ny } => {
            let hx = grid.hx();
            let hy = grid.hy();
            // Edge tags follow the listing order of boundary_nodes; at
            // corners the normal is taken along the edge the node was listed
            // under (the normal itself is undefined at vertices).
            let edges = edge_tags(label, *nx, *ny);
            debug_assert_eq!(edges.len(), nodes.len());
            for (&idx, edge) in nodes.iter().zip(&edges) {
                let i = idx % nx;
                let j = idx / nx;
                let d = match edge {
                    Edge::Top => {
                        (1.5 * v[grid.flat(i, ny - 1)] - 2.0 * v[grid.flat(i, ny - 2)]
                            + 0.5 * v[grid.flat(i, ny - 3)])
                            / hy
                    }
                    Edge::Right => {
                        (1.5 * v[grid.flat(nx - 1, j)] - 2.0 * v[grid.flat(nx - 2, j)]
                            + 0.5 * v[grid.flat(nx - 3, j)])
                            / hx
                    }
                    Edge::Bottom => {
                        -(-1.5 * v[grid.flat(i, 0)] + 2.0 * v[grid.flat(i, 1)]
                            - 0.5 * v[grid.flat(i, 2)])
                            / hy
                    }
                    Edge::Left => {
                        -(-1.5 * v[grid.flat(0, j)] + 2.0 * v[grid.flat(1, j)]
                            - 0.5 * v[grid.flat(2, j)])
                            / hx
                    }
                };
                out.push(d);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
enum Edge {
    Top,
    Right,
    Bottom,
    Left,
}

fn edge_tags(label: Boundary, nx: usize, ny: usize) -> Vec<Edge> {
    match label {
        Boundary::Gamma0 => {
            let mut tags = vec![Edge::Top; nx];
            tags.extend(vec![Edge::Right; ny - 1]);
            tags
        }
        Boundary::Gamma1 => {
            let mut tags = vec![Edge::Bottom; nx - 1];
            tags.extend(vec![Edge::Left; ny - 2]);
            tags
        }
        Boundary::All => {
            let mut tags = edge_tags(Boundary::Gamma1, nx, ny);
            tags.extend(edge_tags(Boundary::Gamma0, nx, ny));
            tags
        }
        _ => Vec::new(),
    }
}

/// Time-sampled Neumann data on a labeled boundary subset.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub label: Boundary,
    pub dt: f64,
    /// rows[t][b]: time level t, boundary node b (in `boundary_nodes` order).
    pub rows: Vec<Vec<f64>>,
}

impl BoundaryTrace {
    pub fn new(label: Boundary, dt: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::InvalidArgument("trace dt must be positive".into()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidArgument("trace needs at least one time row".into()));
        }
        let w = rows[0].len();
        if rows.iter().any(|r| r.len() != w) {
            return Err(Error::InvalidArgument("ragged trace rows".into()));
        }
        Ok(BoundaryTrace { label, dt, rows })
    }

    pub fn time_steps(&self) -> usize {
        self.rows.len()
    }

    pub fn node_count(&self) -> usize {
        self.rows[0].len()
    }

    pub fn tau(&self) -> f64 {
        (self.rows.len() - 1) as f64 * self.dt
    }

    pub fn sub(&self, other: &BoundaryTrace) -> Result<BoundaryTrace> {
        if self.label != other.label
            || self.rows.len() != other.rows.len()
            || self.node_count() != other.node_count()
            || (self.dt - other.dt).abs() > 1e-14 * self.dt
        {
            return Err(Error::GridMismatch("traces are not comparable".into()));
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        BoundaryTrace::new(self.label, self.dt, rows)
    }

    pub fn scaled(&self, c: f64) -> BoundaryTrace {
        BoundaryTrace {
            label: self.label,
            dt: self.dt,
            rows: self.rows.iter().map(|r| r.iter().map(|v| c * v).collect()).collect(),
        }
    }

    /// Keep every `stride`-th time row and every node (used to restrict fine
    /// forward data onto a coarser inversion clock).
    pub fn subsample_time(&self, stride: usize) -> Result<BoundaryTrace> {
        if stride == 0 || (self.rows.len() - 1) % stride != 0 {
            return Err(Error::InvalidArgument(format!(
                "stride {stride} incompatible with {} rows",
                self.rows.len()
            )));
        }
        let rows = self.rows.iter().step_by(stride).cloned().collect();
        BoundaryTrace::new(self.label, self.dt * stride as f64, rows)
    }

    /// Restrict the boundary columns of a fine-grid trace onto the coarse
    /// grid's labeled nodes (fine per-axis nodes = 2*coarse - 1).
    pub fn subsample_nodes(&self, fine: &Grid, coarse: &Grid) -> Result<BoundaryTrace> {
        let fine_nodes = fine.boundary_nodes(self.label)?;
        let coarse_nodes = coarse.boundary_nodes(self.label)?;
        if fine_nodes.len() != self.node_count() {
            return Err(Error::GridMismatch("trace width does not match fine grid".into()));
        }
        let mut pick = Vec::with_capacity(coarse_nodes.len());
        for &cn in &coarse_nodes {
            let (x, y) = coarse.coords(cn);
            let pos = fine_nodes
                .iter()
                .position(|&fnode| {
                    let (fx, fy) = fine.coords(fnode);
                    (fx - x).abs() < 1e-12 && (fy - y).abs() < 1e-12
                })
                .ok_or_else(|| {
                    Error::GridMismatch("coarse boundary node missing on fine grid".into())
                })?;
            pick.push(pos);
        }
        let rows = self
            .rows
            .iter()
            .map(|r| pick.iter().map(|&p| r[p]).collect())
            .collect();
        BoundaryTrace::new(self.label, self.dt, rows)
    }

    /// Squared L2(Gamma) norm of one time row under the boundary quadrature
    /// of `grid`.
    pub fn row_norm_sq(&self, grid: &Grid, t: usize) -> Result<f64> {
        let nodes = grid.boundary_nodes(self.label)?;
        if nodes.len() != self.node_count() {
            return Err(Error::GridMismatch("trace width does not match grid".into()));
        }
        Ok(self.rows[t]
            .iter()
            .zip(&nodes)
            .map(|(v, &idx)| grid.boundary_quad_weight(self.label, idx) * v * v)
            .sum())
    }

    /// L2(Gamma x (0,tau)) norm.
    pub fn l2_norm(&self, grid: &Grid) -> Result<f64> {
        let nt = self.rows.len();
        let mut acc = 0.0;
        for t in 0..nt {
            let w = if t == 0 || t == nt - 1 { 0.5 } else { 1.0 };
            acc += w * self.dt * self.row_norm_sq(grid, t)?;
        }
        Ok(acc.max(0.0).sqrt())
    }

    /// H1((0,tau), L2(Gamma)) norm with centered time differences (one-sided
    /// second-order at the ends).
    pub fn h1_norm(&self, grid: &Grid) -> Result<f64> {
        let deriv = self.time_derivative();
        let a = self.l2_norm(grid)?;
        let b = deriv.l2_norm(grid)?;
        Ok(a.hypot(b))
    }

    pub fn time_derivative(&self) -> BoundaryTrace {
        let nt = self.rows.len();
        let w = self.node_count();
        let dt = self.dt;
        let mut rows = vec![vec![0.0; w]; nt];
        for b in 0..w {
            for t in 0..nt {
                rows[t][b] = if t == 0 {
                    (-1.5 * self.rows[0][b] + 2.0 * self.rows[1][b] - 0.5 * self.rows[2][b]) / dt
                } else if t == nt - 1 {
                    (1.5 * self.rows[nt - 1][b] - 2.0 * self.rows[nt - 2][b]
                        + 0.5 * self.rows[nt - 3][b])
                        / dt
                } else {
                    (self.rows[t + 1][b] - self.rows[t - 1][b]) / (2.0 * dt)
                };
            }
        }
        BoundaryTrace { label: self.label, dt, rows }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_field_outward_trace() {
        let grid = Grid::interval(101).unwrap();
        let f = Field::from_fn(&grid, |x, _| x);
        let d = normal_derivative(&f, Boundary::Both).unwrap();
        assert!((d[0] + 1.0).abs() < 1e-12);
        assert!((d[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sine_mode_outward_trace() {
        let grid = Grid::interval(401).unwrap();
        let f = Field::from_fn(&grid, |x, _| 2f64.sqrt() * (PI * x).sin());
        let d = normal_derivative(&f, Boundary::Left).unwrap();
        let expected = -2f64.sqrt() * PI;
        let h = grid.hx();
        assert!((d[0] - expected).abs() < 20.0 * h * h, "{} vs {expected}", d[0]);
    }

    #[test]
    fn trace_order_two_convergence() {
        let mut errs = Vec::new();
        for &n in &[51usize, 101, 201] {
            let grid = Grid::interval(n).unwrap();
            let f = Field::from_fn(&grid, |x, _| (PI * x).sin());
            let d = normal_derivative(&f, Boundary::Right).unwrap();
            errs.push((d[0] + PI).abs());
        }
        let slope = ((errs[0] / errs[2]).ln()) / (4.0f64).ln();
        assert!((slope - 2.0).abs() <= 0.3, "slope {slope}");
    }

    #[test]
    fn square_gamma1_outward_trace_of_plane() {
        let grid = Grid::square(21, 21).unwrap();
        // u = y: outward derivative on the bottom edge is -1.
        let f = Field::from_fn(&grid, |_, y| y);
        let d = normal_derivative(&f, Boundary::Gamma1).unwrap();
        let nodes = grid.boundary_nodes(Boundary::Gamma1).unwrap();
        for (k, &idx) in nodes.iter().enumerate() {
            let j = idx / 21;
            if j == 0 {
                assert!((d[k] + 1.0).abs() < 1e-12, "bottom node {k}");
            }
        }
    }
}
