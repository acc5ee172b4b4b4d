use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniformly sampled time kernel lambda(t) on [0, tau].
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    dt: f64,
    values: Vec<Complex64>,
    real: bool,
}

impl Kernel {
    pub fn from_complex_samples(dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::InvalidArgument("kernel dt must be positive".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidArgument("kernel needs at least 2 samples".into()));
        }
        let real = values.iter().all(|z| z.im == 0.0);
        Ok(Kernel { dt, values, real })
    }

    pub fn from_real_samples(dt: f64, values: Vec<f64>) -> Result<Self> {
        Self::from_complex_samples(dt, values.into_iter().map(|v| v.into()).collect())
    }

    pub fn from_real_fn(tau: f64, dt: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_complex_fn(tau, dt, |t| Complex64::new(f(t), 0.0))
    }

    pub fn from_complex_fn(tau: f64, dt: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if dt <= 0.0 || tau <= 0.0 {
            return Err(Error::InvalidArgument("kernel tau and dt must be positive".into()));
        }
        let steps = (tau / dt).floor() as usize;
        let values = (0..=steps).map(|k| f(k as f64 * dt)).collect();
        Self::from_complex_samples(dt, values)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn tau(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at_zero(&self) -> Complex64 {
        self.values[0]
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn scaled(&self, c: Complex64) -> Kernel {
        let values: Vec<Complex64> = self.values.iter().map(|z| c * z).collect();
        let real = values.iter().all(|z| z.im == 0.0);
        Kernel { dt: self.dt, values, real }
    }

    /// Keep samples up to and including floor(tau/dt).
    pub fn truncated(&self, tau: f64) -> Result<Kernel> {
        let steps = (tau / self.dt).floor() as usize;
        if steps + 1 > self.values.len() || steps < 1 {
            return Err(Error::InvalidArgument("truncation length out of range".into()));
        }
        Kernel::from_complex_samples(self.dt, self.values[..=steps].to_vec())
    }
}
