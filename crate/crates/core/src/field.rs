use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A spatial function sampled at the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Field { grid: grid.clone(), values: vec![0.0; grid.node_count()] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field { grid: grid.clone(), values: vec![c; grid.node_count()] }
    }

    /// Sample a closed form `f(x, y)` at the nodes (`y` is 0 on the interval).
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|i| {
                let (x, y) = grid.coords(i);
                f(x, y)
            })
            .collect();
        Field { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Set boundary nodes to exactly zero (Dirichlet).
    pub fn zero_boundary(&mut self) {
        for i in 0..self.values.len() {
            if self.grid.is_boundary(i) {
                self.values[i] = 0.0;
            }
        }
    }

    pub fn is_zero_on_boundary(&self, tol: f64) -> bool {
        (0..self.values.len())
            .filter(|&i| self.grid.is_boundary(i))
            .all(|i| self.values[i].abs() <= tol)
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values =
            self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn check_on_grid(&self, grid: &Grid) -> Result<()> {
        if &self.grid != grid {
            return Err(Error::GridMismatch("field does not live on the expected grid".into()));
        }
        Ok(())
    }

    /// Restrict to a coarser grid with half the resolution per axis.
    ///
    /// Requires fine node counts of the form 2m-1 for coarse count m, so that
    /// coarse nodes are a subset of fine nodes.
    pub fn restrict_to(&self, coarse: &Grid) -> Result<Field> {
        let compatible = |nf: usize, nc: usize| nf == 2 * nc - 1;
        match (&self.grid, coarse) {
            (Grid::Interval { n: nf }, Grid::Interval { n: nc }) if compatible(*nf, *nc) => {
                let values = (0..*nc).map(|i| self.values[2 * i]).collect();
                Field::new(coarse.clone(), values)
            }
            (Grid::Square { nx: fx, ny: fy }, Grid::Square { nx: cx, ny: cy })
                if compatible(*fx, *cx) && compatible(*fy, *cy) =>
            {
                let mut values = Vec::with_capacity(cx * cy);
                for j in 0..*cy {
                    for i in 0..*cx {
                        values.push(self.values[self.grid.flat(2 * i, 2 * j)]);
                    }
                }
                Field::new(coarse.clone(), values)
            }
            _ => Err(Error::GridMismatch(
                "restriction requires fine nodes = 2*coarse - 1 per axis".into(),
            )),
        }
    }
}

/// Complex-valued field stored as a pair of real fields.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub re: Field,
    pub im: Field,
}

impl ComplexField {
    pub fn new(re: Field, im: Field) -> Result<Self> {
        re.check_same_grid(&im)?;
        Ok(ComplexField { re, im })
    }

    pub fn from_real(re: Field) -> Self {
        let im = Field::zeros(re.grid());
        ComplexField { re, im }
    }

    pub fn zeros(grid: &Grid) -> Self {
        ComplexField { re: Field::zeros(grid), im: Field::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid {
        self.re.grid()
    }

    pub fn value(&self, idx: usize) -> Complex64 {
        Complex64::new(self.re.values()[idx], self.im.values()[idx])
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        let re = self
            .re
            .scaled(c.re)
            .axpy(-c.im, &self.im)
            .expect("same grid");
        let im = self.im.scaled(c.re).axpy(c.im, &self.re).expect("same grid");
        ComplexField { re, im }
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        Ok(ComplexField { re: self.re.sub(&other.re)?, im: self.im.sub(&other.im)? })
    }
}
