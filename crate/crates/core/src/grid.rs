use crate::error::{Error, Result};

/// Named parts of the boundary.
///
/// For the unit square, `Gamma0` is the union of the top and right edges and
/// `Gamma1` the union of the bottom and left edges. Corner nodes touching
/// `Gamma0` belong to `Gamma0` (the normal is undefined at vertices, so the
/// Dirichlet part wins there).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Whole boundary.
    All,
    /// Left endpoint of the interval (x = 0).
    Left,
    /// Right endpoint of the interval (x = 1).
    Right,
    /// Both endpoints of the interval.
    Both,
    /// Top and right edges of the square.
    Gamma0,
    /// Bottom and left edges of the square.
    Gamma1,
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::All => "all",
            Boundary::Left => "left",
            Boundary::Right => "right",
            Boundary::Both => "both",
            Boundary::Gamma0 => "gamma0",
            Boundary::Gamma1 => "gamma1",
        }
    }
}

/// Uniform grid on the unit interval or the unit square.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Interval { n: usize },
    Square { nx: usize, ny: usize },
}

impl Grid {
    pub fn interval(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "interval grid needs at least 3 nodes per axis, got {n}"
            )));
        }
        Ok(Grid::Interval { n })
    }

    pub fn square(nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidArgument(format!(
                "square grid needs at least 3 nodes per axis, got {nx}x{ny}"
            )));
        }
        Ok(Grid::Square { nx, ny })
    }

    pub fn dimension(&self) -> usize {
        match self {
            Grid::Interval { .. } => 1,
            Grid::Square { .. } => 2,
        }
    }

    /// Total node count.
    pub fn node_count(&self) -> usize {
        match self {
            Grid::Interval { n } => *n,
            Grid::Square { nx, ny } => nx * ny,
        }
    }

    pub fn interior_count(&self) -> usize {
        match self {
            Grid::Interval { n } => n - 2,
            Grid::Square { nx, ny } => (nx - 2) * (ny - 2),
        }
    }

    /// Spacing along the x axis; equals 1/(nodes-1).
    pub fn hx(&self) -> f64 {
        match self {
            Grid::Interval { n } => 1.0 / (*n as f64 - 1.0),
            Grid::Square { nx, .. } => 1.0 / (*nx as f64 - 1.0),
        }
    }

    pub fn hy(&self) -> f64 {
        match self {
            Grid::Interval { .. } => 0.0,
            Grid::Square { ny, .. } => 1.0 / (*ny as f64 - 1.0),
        }
    }

    /// Smallest spacing, used by CFL checks.
    pub fn h_min(&self) -> f64 {
        match self {
            Grid::Interval { .. } => self.hx(),
            Grid::Square { .. } => self.hx().min(self.hy()),
        }
    }

    /// Coordinates of a flat-indexed node.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        match self {
            Grid::Interval { .. } => (idx as f64 * self.hx(), 0.0),
            Grid::Square { nx, .. } => {
                let i = idx % nx;
                let j = idx / nx;
                (i as f64 * self.hx(), j as f64 * self.hy())
            }
        }
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        match self {
            Grid::Interval { .. } => i,
            Grid::Square { nx, .. } => i + j * nx,
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        match self {
            Grid::Interval { n } => idx == 0 || idx == n - 1,
            Grid::Square { nx, ny } => {
                let i = idx % nx;
                let j = idx / nx;
                i == 0 || i == nx - 1 || j == 0 || j == ny - 1
            }
        }
    }

    /// Exact distance to the boundary (minimum over edges).
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        let (x, y) = self.coords(idx);
        match self {
            Grid::Interval { .. } => x.min(1.0 - x),
            Grid::Square { .. } => x.min(1.0 - x).min(y).min(1.0 - y),
        }
    }

    pub fn supports(&self, label: Boundary) -> bool {
        match (self, label) {
            (Grid::Interval { .. }, Boundary::Left | Boundary::Right | Boundary::Both | Boundary::All) => true,
            (Grid::Square { .. }, Boundary::Gamma0 | Boundary::Gamma1 | Boundary::All) => true,
            _ => false,
        }
    }

    /// Flat indices of the nodes carrying the label, in a fixed deterministic
    /// order. Corner nodes of the square touching `Gamma0` are listed under
    /// `Gamma0` only.
    pub fn boundary_nodes(&self, label: Boundary) -> Result<Vec<usize>> {
        if !self.supports(label) {
            return Err(Error::UnknownBoundary { label: label.name().into() });
        }
        match self {
            Grid::Interval { n } => Ok(match label {
                Boundary::Left => vec![0],
                Boundary::Right => vec![n - 1],
                Boundary::Both | Boundary::All => vec![0, n - 1],
                _ => unreachable!(),
            }),
            Grid::Square { nx, ny } => {
                let mut nodes = Vec::new();
                match label {
                    Boundary::Gamma0 => {
                        // top edge (y = 1), then right edge (x = 1); corners
                        // (0, ny-1), (nx-1, ny-1) and (nx-1, 0) included here.
                        for i in 0..*nx {
                            nodes.push(self.flat(i, ny - 1));
                        }
                        for j in (0..ny - 1).rev() {
                            nodes.push(self.flat(nx - 1, j));
                        }
                    }
                    Boundary::Gamma1 => {
                        // bottom edge (y = 0) without the right corner, then
                        // left edge (x = 0) without the top corner.
                        for i in 0..nx - 1 {
                            nodes.push(self.flat(i, 0));
                        }
                        for j in 1..ny - 1 {
                            nodes.push(self.flat(0, j));
                        }
                    }
                    Boundary::All => {
                        nodes.extend(self.boundary_nodes(Boundary::Gamma1)?);
                        nodes.extend(self.boundary_nodes(Boundary::Gamma0)?);
                    }
                    _ => unreachable!(),
                }
                Ok(nodes)
            }
        }
    }

    /// Trapezoid quadrature weight of a node (boundary nodes weighted 1/2,
    /// corner nodes 1/4 on the square).
    pub fn quad_weight(&self, idx: usize) -> f64 {
        match self {
            Grid::Interval { n } => {
                let h = self.hx();
                if idx == 0 || idx == n - 1 {
                    0.5 * h
                } else {
                    h
                }
            }
            Grid::Square { nx, ny } => {
                let i = idx % nx;
                let j = idx / nx;
                let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
                let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
                wx * wy * self.hx() * self.hy()
            }
        }
    }

    /// Trapezoid weight of a boundary node within the 1D boundary measure of
    /// the labeled segment (arc-length weight along edges; endpoints of an
    /// edge weighted 1/2). For interval endpoints the boundary measure is
    /// counting measure, weight 1.
    pub fn boundary_quad_weight(&self, label: Boundary, idx: usize) -> f64 {
        match self {
            Grid::Interval { .. } => 1.0,
            Grid::Square { nx, ny } => {
                let i = idx % nx;
                let j = idx / nx;
                let mut w = 0.0;
                let on_bottom = j == 0;
                let on_top = j == ny - 1;
                let on_left = i == 0;
                let on_right = i == nx - 1;
                let edge_w_x = |i: usize| if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
                let edge_w_y = |j: usize| if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
                let in_label = |horiz: bool| match (label, horiz) {
                    (Boundary::All, _) => true,
                    (Boundary::Gamma0, true) => on_top,
                    (Boundary::Gamma0, false) => on_right,
                    (Boundary::Gamma1, true) => on_bottom,
                    (Boundary::Gamma1, false) => on_left,
                    _ => false,
                };
                if (on_bottom || on_top) && in_label(true) {
                    w += edge_w_x(i) * self.hx();
                }
                if (on_left || on_right) && in_label(false) {
                    w += edge_w_y(j) * self.hy();
                }
                w
            }
        }
    }
}
