use ndarray::Array2;
use ndarray_linalg::{Eig, Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Field};
use crate::grid::Grid;
use crate::norms::{inner, l2_norm};

/// Sorted eigenpairs of -Lap + q with Dirichlet boundary, discretely
/// orthonormal in the trapezoid inner product.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Field>,
    pub potential: Field,
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }
}

/// Complex eigenpair of the damped wave generator; psi = mu * phi.
#[derive(Clone, Debug)]
pub struct DampedEigenPair {
    pub mu: Complex64,
    pub phi: ComplexField,
    pub psi: ComplexField,
}

/// Flat indices of the interior nodes in row-major order.
pub fn interior_nodes(grid: &Grid) -> Vec<usize> {
    (0..grid.node_count()).filter(|&i| !grid.is_boundary(i)).collect()
}

/// Dense symmetric finite-difference matrix of -Lap + q on interior nodes.
pub fn assemble_operator(grid: &Grid, q: &Field) -> Result<Array2<f64>> {
    q.check_same_grid(&Field::zeros(grid))?;
    let interior = interior_nodes(grid);
    let m = interior.len();
    let mut pos = vec![usize::MAX; grid.node_count()];
    for (k, &idx) in interior.iter().enumerate() {
        pos[idx] = k;
    }
    let mut a = Array2::<f64>::zeros((m, m));
    match grid {
        Grid::Interval { .. } => {
            let h2 = grid.hx() * grid.hx();
            for (k, &idx) in interior.iter().enumerate() {
                a[[k, k]] = 2.0 / h2 + q.values()[idx];
                for nb in [idx - 1, idx + 1] {
                    if pos[nb] != usize::MAX {
                        a[[k, pos[nb]]] = -1.0 / h2;
                    }
                }
            }
        }
        Grid::Square { nx, .. } => {
            let hx2 = grid.hx() * grid.hx();
            let hy2 = grid.hy() * grid.hy();
            for (k, &idx) in interior.iter().enumerate() {
                a[[k, k]] = 2.0 / hx2 + 2.0 / hy2 + q.values()[idx];
                for (nb, c) in [
                    (idx - 1, -1.0 / hx2),
                    (idx + 1, -1.0 / hx2),
                    (idx - nx, -1.0 / hy2),
                    (idx + nx, -1.0 / hy2),
                ] {
                    if pos[nb] != usize::MAX {
                        a[[k, pos[nb]]] = c;
                    }
                }
            }
        }
    }
    Ok(a)
}

fn embed_interior(grid: &Grid, interior: &[usize], column: &[f64]) -> Field {
    let mut f = Field::zeros(grid);
    for (k, &idx) in interior.iter().enumerate() {
        f.values_mut()[idx] = column[k];
    }
    f
}

/// Sign convention: first nonzero interior value positive.
fn fix_sign(f: &mut Field) {
    let flip = f
        .values()
        .iter()
        .enumerate()
        .find(|(i, v)| !f.grid().is_boundary(*i) && v.abs() > 1e-12)
        .map(|(_, v)| *v < 0.0)
        .unwrap_or(false);
    if flip {
        for v in f.values_mut() {
            *v = -*v;
        }
    }
}

/// First `count` Dirichlet eigenpairs of -Lap + q.
pub fn dirichlet_eigenpairs(grid: &Grid, q: &Field, count: usize) -> Result<EigenBasis> {
    let interior = interior_nodes(grid);
    if count == 0 || count > interior.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs, interior has {} nodes",
            interior.len()
        )));
    }
    let a = assemble_operator(grid, q)?;
    let (vals, vecs) = a
        .eigh(UPLO::Lower)
        .map_err(|e| Error::EigenFailure(format!("symmetric eigensolve: {e}")))?;
    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenfunctions = Vec::with_capacity(count);
    for k in 0..count {
        eigenvalues.push(vals[k]);
        let col: Vec<f64> = vecs.column(k).to_vec();
        let mut f = embed_interior(grid, &interior, &col);
        let nrm = l2_norm(&f);
        if nrm <= 0.0 {
            return Err(Error::EigenFailure(format!("zero eigenvector at index {k}")));
        }
        f = f.scaled(1.0 / nrm);
        fix_sign(&mut f);
        eigenfunctions.push(f);
    }
    Ok(EigenBasis { eigenvalues, eigenfunctions, potential: q.clone() })
}

/// Analytic mixed Dirichlet (Gamma0) / Neumann (Gamma1) eigenpair of the
/// square: lambda_{kl} = [(k+1/2)^2 + (l+1/2)^2] pi^2 with eigenfunction
/// 2 cos((k+1/2) pi x) cos((l+1/2) pi y).
pub fn mixed_square_eigenpair(grid: &Grid, k: usize, l: usize) -> Result<(f64, Field)> {
    if grid.dimension() != 2 {
        return Err(Error::InvalidArgument("mixed eigenpairs live on the square".into()));
    }
    let pi = std::f64::consts::PI;
    let kk = k as f64 + 0.5;
    let ll = l as f64 + 0.5;
    let lambda = (kk * kk + ll * ll) * pi * pi;
    let field = Field::from_fn(grid, |x, y| 2.0 * (kk * pi * x).cos() * (ll * pi * y).cos());
    Ok((lambda, field))
}

/// Edge profile sqrt(2) cos((k+1/2) pi s) entering the boundary damping
/// stability estimate.
pub fn edge_mode(n: usize, k: usize) -> Result<Field> {
    let grid = Grid::interval(n)?;
    let pi = std::f64::consts::PI;
    let kk = k as f64 + 0.5;
    Ok(Field::from_fn(&grid, |x, _| 2f64.sqrt() * (kk * pi * x).cos()))
}

/// Eigenpairs of the quadratic problem (-Lap + q + a mu + mu^2) phi = 0 via
/// companion linearization, sorted by modulus of mu.
pub fn damped_quadratic_eigenpairs(
    grid: &Grid,
    q: &Field,
    a: &Field,
    count: usize,
) -> Result<Vec<DampedEigenPair>> {
    let interior = interior_nodes(grid);
    let m = interior.len();
    if count == 0 || count > m {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs, interior has {m} nodes"
        )));
    }
    let k_mat = assemble_operator(grid, q)?;
    // Companion form of mu^2 phi + mu a phi + K phi = 0:
    //   [ 0   I ] [phi]        [phi]
    //   [-K  -D ] [psi]  = mu  [psi],  psi = mu phi, D = diag(a).
    let mut c = Array2::<f64>::zeros((2 * m, 2 * m));
    for i in 0..m {
        c[[i, m + i]] = 1.0;
        c[[m + i, m + i]] = -a.values()[interior[i]];
        for j in 0..m {
            c[[m + i, j]] = -k_mat[[i, j]];
        }
    }
    let (vals, vecs) = c
        .eig()
        .map_err(|e| Error::EigenFailure(format!("companion eigensolve: {e}")))?;
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&i, &j| {
        vals[i]
            .norm()
            .partial_cmp(&vals[j].norm())
            .unwrap()
            .then(vals[j].im.partial_cmp(&vals[i].im).unwrap())
    });
    let mut out = Vec::with_capacity(count);
    for &col in order.iter().take(count) {
        let mu = vals[col];
        let phi_int: Vec<Complex64> = (0..m).map(|i| vecs[[i, col]]).collect();
        // Normalize: unit discrete L2 norm, first sizable entry real positive.
        let lead = phi_int
            .iter()
            .cloned()
            .max_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap())
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = if lead.norm() > 0.0 { lead / lead.norm() } else { Complex64::new(1.0, 0.0) };
        let re = embed_interior(grid, &interior, &phi_int.iter().map(|z| (z / phase).re).collect::<Vec<_>>());
        let im = embed_interior(grid, &interior, &phi_int.iter().map(|z| (z / phase).im).collect::<Vec<_>>());
        let nrm = (inner(&re, &re)? + inner(&im, &im)?).sqrt();
        if nrm <= 0.0 {
            return Err(Error::EigenFailure("zero quadratic eigenvector".into()));
        }
        let phi = ComplexField::new(re.scaled(1.0 / nrm), im.scaled(1.0 / nrm))?;
        let psi = phi.scaled(mu);
        // Residual check: ||(K + a mu + mu^2) phi|| <= 1e-6 ||phi||.
        let mut res_sq = 0.0;
        for (i, &idx) in interior.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &jdx) in interior.iter().enumerate() {
                let kij = k_mat[[i, j]];
                if kij != 0.0 {
                    acc += kij * phi.value(jdx);
                }
            }
            acc += (a.values()[idx] * mu + mu * mu) * phi.value(idx);
            res_sq += acc.norm_sqr() * grid.quad_weight(idx);
        }
        if res_sq.sqrt() > 1e-6 {
            return Err(Error::EigenFailure(format!(
                "quadratic eigenpair residual {:.3e} exceeds tolerance",
                res_sq.sqrt()
            )));
        }
        out.push(DampedEigenPair { mu, phi, psi });
    }
    Ok(out)
}
