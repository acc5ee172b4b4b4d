//! Shared knobs of the recovery pipelines and the truncation bookkeeping.

use crate::error::{Error, Result};

/// Parameters shared by the recovery pipelines.
#[derive(Clone, Debug)]
pub struct RecoveryConfig {
    /// dictionary size K (number of probes / candidate modes)
    pub probes: usize,
    /// truncation level l of the reconstruction, 1 <= l <= K
    pub level: usize,
    /// dimensionless Tikhonov weight, relative to the largest Gram diagonal;
    /// floored at 1e-12 for noiseless data
    pub tikhonov: f64,
    /// heat truncation parameter, >= 1
    pub epsilon: f64,
    /// truncation driver s >= 1; level and epsilon derive from it
    pub s: f64,
    /// declared noise level of the data (0 for noiseless twins)
    pub noise_level: f64,
    /// empirical lower estimate of the observability constant entering the
    /// certified bounds
    pub kappa: f64,
    /// pointwise eigenfunction-division threshold, relative to max |phi|
    pub division_threshold: f64,
}

impl RecoveryConfig {
    /// Derive the truncation bookkeeping from s for dimension n, keeping K
    /// probes in the dictionary.
    pub fn from_s(probes: usize, s: f64, dimension: usize) -> Result<Self> {
        if s < 1.0 {
            return Err(Error::InvalidArgument(format!("s must be >= 1, got {s}")));
        }
        let level = level_from_s(s);
        let epsilon = epsilon_from_s(s, dimension);
        let cfg = RecoveryConfig {
            probes,
            level,
            tikhonov: 1e-12,
            epsilon,
            s,
            noise_level: 0.0,
            kappa: 1.0,
            division_threshold: 0.1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.level < 1 || self.probes < self.level {
            return Err(Error::InvalidArgument(format!(
                "need K >= l >= 1, got K = {}, l = {}",
                self.probes, self.level
            )));
        }
        if self.epsilon < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be >= 1, got {}",
                self.epsilon
            )));
        }
        if self.s < 1.0 {
            return Err(Error::InvalidArgument(format!("s must be >= 1, got {}", self.s)));
        }
        if !(0.0..1.0).contains(&self.division_threshold) {
            return Err(Error::InvalidArgument("division threshold must be in [0,1)".into()));
        }
        if self.noise_level < 0.0 || self.tikhonov < 0.0 || self.kappa <= 0.0 {
            return Err(Error::InvalidArgument(
                "noise level and Tikhonov weight must be nonnegative and kappa positive".into(),
            ));
        }
        Ok(())
    }

    /// Effective Tikhonov weight by the discrepancy heuristic: the declared
    /// noise level squared, floored for noiseless data.
    pub fn effective_tikhonov(&self) -> f64 {
        (self.noise_level * self.noise_level).max(self.tikhonov).max(1e-12)
    }
}

/// The unique integer l with l <= s < l + 1.
pub fn level_from_s(s: f64) -> usize {
    s.floor() as usize
}

/// epsilon = s^(3/n + 1).
pub fn epsilon_from_s(s: f64, dimension: usize) -> f64 {
    s.powf(3.0 / dimension as f64 + 1.0)
}

/// The unique integer k with k <= epsilon^(n/2) < k + 1.
pub fn modes_from_epsilon(epsilon: f64, dimension: usize) -> usize {
    epsilon.powf(dimension as f64 / 2.0).floor() as usize
}

/// Tail energy bound for a W^{1,inf}-bounded perturbation truncated at
/// level l: N^2 / (l+1)^(2/n).
pub fn tail_energy_bound(n_bound: f64, level: usize, dimension: usize) -> f64 {
    n_bound * n_bound / ((level as f64 + 1.0)).powf(2.0 / dimension as f64)
}
