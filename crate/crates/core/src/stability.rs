//! Stability moduli, log-log rate fitting, and empirical-constant
//! certification for the inverse pipelines.
//!
//! A modulus omega maps an operator-level data distance rho to an admissible
//! reconstruction error omega(rho). Two families appear here: pure Hoelder
//! powers rho^theta and logarithmic powers |ln rho|^{-p} (with an additive
//! rho term so the modulus stays an upper bound near rho = e^{-1}).

use crate::error::{Error, Result};

/// Parametric stability modulus evaluated on rho in (0, e^{-1}].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityModulus {
    /// omega(rho) = rho^exponent with exponent in (0, 1].
    Hoelder { exponent: f64 },
    /// omega(rho) = |ln rho|^{-power} + rho with power > 0.
    LogPower { power: f64 },
}

/// Evaluate the modulus; `rho` must lie in (0, e^{-1}] where both families
/// are increasing and the log power is well defined.
pub fn modulus_eval(modulus: &StabilityModulus, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= (-1.0f64).exp()) {
        return Err(Error::InvalidArgument(format!(
            "modulus argument {rho} outside (0, e^-1]"
        )));
    }
    match *modulus {
        StabilityModulus::Hoelder { exponent } => {
            if !(exponent > 0.0 && exponent <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "Hoelder exponent {exponent} outside (0, 1]"
                )));
            }
            Ok(rho.powf(exponent))
        }
        StabilityModulus::LogPower { power } => {
            if power <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "log power {power} must be positive"
                )));
            }
            Ok((-rho.ln()).powf(-power) + rho)
        }
    }
}

/// One sample of a stability sweep: data distance versus observed error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub distance: f64,
    pub error: f64,
}

/// Outcome of fitting a modulus family to sweep samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Fitted exponent (Hoelder) or power (log family).
    pub exponent: f64,
    /// Multiplicative prefactor exp(intercept).
    pub prefactor: f64,
    /// Coefficient of determination of the regression.
    pub r_squared: f64,
    /// True when the abscissa spans less than one decade, making the
    /// fitted exponent unreliable.
    pub narrow_range: bool,
}

/// Which modulus family `rate_fit` regresses against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFamily {
    Hoelder,
    LogPower,
}

fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// Regress observed errors against the chosen modulus family.
///
/// Hoelder fits ln err = theta ln d + ln C; the log family fits
/// ln err = -p ln|ln d| + ln C (the returned exponent is p > 0 when the
/// errors decay as the distances shrink).
pub fn rate_fit(points: &[SweepPoint], family: RateFamily) -> Result<RateFit> {
    let usable: Vec<&SweepPoint> = points
        .iter()
        .filter(|p| p.distance > 0.0 && p.error > 0.0)
        .collect();
    if usable.len() < 2 {
        return Err(Error::InvalidArgument(
            "rate fit needs at least two positive samples".into(),
        ));
    }
    let xs: Vec<f64> = usable
        .iter()
        .map(|p| match family {
            RateFamily::Hoelder => p.distance.ln(),
            RateFamily::LogPower => (-p.distance.ln()).ln(),
        })
        .collect();
    let spread = xs.iter().cloned().fold(f64::MIN, f64::max)
        - xs.iter().cloned().fold(f64::MAX, f64::min);
    if spread == 0.0 {
        return Err(Error::InvalidArgument(
            "rate fit needs distinct abscissae".into(),
        ));
    }
    let ys: Vec<f64> = usable.iter().map(|p| p.error.ln()).collect();
    let (slope, intercept, r2) = linear_regression(&xs, &ys);
    let exponent = match family {
        RateFamily::Hoelder => slope,
        RateFamily::LogPower => -slope,
    };
    // One decade in the native abscissa; for the log family the transformed
    // axis is already compressed, so measure the decade on the distances.
    let narrow = match family {
        RateFamily::Hoelder => spread < std::f64::consts::LN_10,
        RateFamily::LogPower => {
            let ds: Vec<f64> = usable.iter().map(|p| p.distance.ln()).collect();
            ds.iter().cloned().fold(f64::MIN, f64::max)
                - ds.iter().cloned().fold(f64::MAX, f64::min)
                < std::f64::consts::LN_10
        }
    };
    Ok(RateFit {
        exponent,
        prefactor: intercept.exp(),
        r_squared: r2,
        narrow_range: narrow,
    })
}

/// Smallest constant C with error_i <= C * modulus(distance_i) over all
/// samples; zero-distance samples must have zero error.
pub fn certify(points: &[SweepPoint], modulus: &StabilityModulus) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("certify needs samples".into()));
    }
    let mut c = 0.0f64;
    for p in points {
        if p.distance == 0.0 {
            if p.error != 0.0 {
                return Err(Error::Degenerate(format!(
                    "nonzero error {} at zero distance",
                    p.error
                )));
            }
            continue;
        }
        let omega = modulus_eval(modulus, p.distance.min((-1.0f64).exp()))?;
        c = c.max(p.error / omega);
    }
    Ok(c)
}
