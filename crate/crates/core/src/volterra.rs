//! Forward time convolution and its inversion through a Volterra equation of
//! the second kind.
//!
//! The forward operator is (S h)(t) = int_0^t lambda(t-s) h(s) ds. When
//! lambda(0) != 0, differentiating in t turns S h = y into
//!   lambda(0) h(t) + int_0^t lambda'(t-s) h(s) ds = y'(t),
//! which is solved by sequential product-trapezoid substitution. The output
//! obeys the discrete Gronwall bound
//!   ||h||_L2 <= sqrt(2)/|lambda(0)| * exp(tau ||lambda'||^2 / lambda(0)^2) * ||y||_H1.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::Kernel;

const KERNEL_ZERO_TOL: f64 = 1e-12;
const START_TOL: f64 = 1e-8;

fn check_lengths(kernel: &Kernel, series_len: usize) -> Result<()> {
    if series_len != kernel.len() {
        return Err(Error::GridMismatch(format!(
            "kernel has {} samples, series has {series_len}",
            kernel.len()
        )));
    }
    Ok(())
}

/// Centered time derivative with second-order one-sided closures.
fn differentiate(dt: f64, y: &[Complex64]) -> Vec<Complex64> {
    let n = y.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n == 2 {
        let d = (y[1] - y[0]) / dt;
        out[0] = d;
        out[1] = d;
        return out;
    }
    out[0] = (-1.5 * y[0] + 2.0 * y[1] - 0.5 * y[2]) / dt;
    out[n - 1] = (1.5 * y[n - 1] - 2.0 * y[n - 2] + 0.5 * y[n - 3]) / dt;
    for t in 1..n - 1 {
        out[t] = (y[t + 1] - y[t - 1]) / (2.0 * dt);
    }
    out
}

/// Product-trapezoid forward convolution; the output vanishes at t = 0.
pub fn convolve(kernel: &Kernel, series: &[Complex64]) -> Result<Vec<Complex64>> {
    check_lengths(kernel, series.len())?;
    let lam = kernel.values();
    let dt = kernel.dt();
    let n = series.len();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for t in 1..n {
        let mut acc = 0.5 * (lam[t] * series[0] + lam[0] * series[t]);
        for s in 1..t {
            acc += lam[t - s] * series[s];
        }
        y[t] = dt * acc;
    }
    Ok(y)
}

pub fn convolve_real(kernel: &Kernel, series: &[f64]) -> Result<Vec<f64>> {
    let cx: Vec<Complex64> = series.iter().map(|&v| v.into()).collect();
    Ok(convolve(kernel, &cx)?.into_iter().map(|z| z.re).collect())
}

/// Invert the convolution: differentiate, then solve the second-kind
/// Volterra equation by forward substitution.
pub fn deconvolve(kernel: &Kernel, series: &[Complex64]) -> Result<Vec<Complex64>> {
    check_lengths(kernel, series.len())?;
    let lam0 = kernel.at_zero();
    if lam0.norm() < KERNEL_ZERO_TOL {
        return Err(Error::SingularKernel { value: lam0.norm() });
    }
    let scale = series.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if series[0].norm() > START_TOL * scale.max(1.0) {
        return Err(Error::NonZeroStart { value: series[0].norm() });
    }
    let dt = kernel.dt();
    let lam_deriv = differentiate(dt, kernel.values());
    let y_deriv = differentiate(dt, series);
    let n = series.len();
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    // Diagonal weight dt/2 * lambda'(0) folds into the solve denominator.
    let denom = lam0 + 0.5 * dt * lam_deriv[0];
    h[0] = y_deriv[0] / lam0;
    for t in 1..n {
        let mut acc = 0.5 * lam_deriv[t] * h[0];
        for s in 1..t {
            acc += lam_deriv[t - s] * h[s];
        }
        h[t] = (y_deriv[t] - dt * acc) / denom;
    }
    Ok(h)
}

pub fn deconvolve_real(kernel: &Kernel, series: &[f64]) -> Result<Vec<f64>> {
    let cx: Vec<Complex64> = series.iter().map(|&v| v.into()).collect();
    Ok(deconvolve(kernel, &cx)?.into_iter().map(|z| z.re).collect())
}

/// Deconvolve each column of a trace-valued series independently.
/// `columns[b][t]` holds the series of boundary node b.
pub fn deconvolve_columns(
    kernel: &Kernel,
    columns: &[Vec<Complex64>],
) -> Result<Vec<Vec<Complex64>>> {
    columns.iter().map(|col| deconvolve(kernel, col)).collect()
}

/// Trapezoid L2(0,tau) norm of a sampled time series.
pub fn series_l2_norm(dt: f64, series: &[Complex64]) -> f64 {
    let n = series.len();
    let sq: f64 = series
        .iter()
        .enumerate()
        .map(|(t, z)| {
            let w = if t == 0 || t == n - 1 { 0.5 } else { 1.0 };
            w * dt * z.norm_sqr()
        })
        .sum();
    sq.max(0.0).sqrt()
}

/// H1(0,tau) norm: sqrt(||y||^2 + ||y'||^2).
pub fn series_h1_norm(dt: f64, series: &[Complex64]) -> f64 {
    let d = differentiate(dt, series);
    series_l2_norm(dt, series).hypot(series_l2_norm(dt, &d))
}

/// Squared L2 norm of the kernel's derivative, by trapezoid quadrature of
/// centered differences.
pub fn kernel_derivative_norm_sq(kernel: &Kernel) -> f64 {
    let d = differentiate(kernel.dt(), kernel.values());
    let n = series_l2_norm(kernel.dt(), &d);
    n * n
}

/// Amplification constant of the inverted convolution:
/// sqrt(2)/(kappa |lambda(0)|) * exp(tau ||lambda'||^2 / |lambda(0)|^2).
pub fn amplification_constant(kernel: &Kernel, tau: f64, kappa: f64) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::InvalidArgument("kappa must be positive".into()));
    }
    let lam0 = kernel.at_zero().norm();
    if lam0 < KERNEL_ZERO_TOL {
        return Err(Error::SingularKernel { value: lam0 });
    }
    let dsq = kernel_derivative_norm_sq(kernel);
    Ok(2f64.sqrt() / (kappa * lam0) * (tau * dsq / (lam0 * lam0)).exp())
}

/// Dual-norm amplification constant:
/// kappa_tilde * |lambda(0)| * exp((||lambda'||^2 / |lambda(0)|^2) tau).
pub fn dual_norm_amplification(kernel: &Kernel, tau: f64, kappa_tilde: f64) -> Result<f64> {
    if kappa_tilde <= 0.0 {
        return Err(Error::InvalidArgument("kappa_tilde must be positive".into()));
    }
    let lam0 = kernel.at_zero().norm();
    if lam0 < KERNEL_ZERO_TOL {
        return Err(Error::SingularKernel { value: lam0 });
    }
    let dsq = kernel_derivative_norm_sq(kernel);
    Ok(kappa_tilde * lam0 * (dsq / (lam0 * lam0) * tau).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn real_series(dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|k| f(k as f64 * dt)).collect()
    }

    #[test]
    fn unit_kernel_integrates() {
        let dt = 1e-3;
        let kernel = Kernel::from_real_fn(1.0, dt, |_| 1.0).unwrap();
        let h = real_series(dt, kernel.len(), |_| 1.0);
        let y = convolve_real(&kernel, &h).unwrap();
        for (k, &v) in y.iter().enumerate() {
            assert_relative_eq!(v, k as f64 * dt, epsilon = 1e-12);
        }
    }

    #[test]
    fn exponential_kernel_closed_form() {
        let dt = 1e-3;
        let kernel = Kernel::from_real_fn(1.0, dt, |t| (-t).exp()).unwrap();
        let h = real_series(dt, kernel.len(), |_| 1.0);
        let y = convolve_real(&kernel, &h).unwrap();
        for (k, &v) in y.iter().enumerate() {
            let t = k as f64 * dt;
            assert!((v - (1.0 - (-t).exp())).abs() < 5.0 * dt * dt);
        }
    }

    #[test]
    fn quadrature_is_second_order() {
        // Halving dt reduces the convolution error by about 4.
        let truth = |t: f64| 1.0 - (-t).exp();
        let mut errs = Vec::new();
        for &dt in &[2e-3, 1e-3] {
            let kernel = Kernel::from_real_fn(1.0, dt, |t| (-t).exp()).unwrap();
            let h = real_series(dt, kernel.len(), |_| 1.0);
            let y = convolve_real(&kernel, &h).unwrap();
            let err = y
                .iter()
                .enumerate()
                .map(|(k, &v)| (v - truth(k as f64 * dt)).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn pure_differentiation_when_kernel_is_constant() {
        let dt = 1e-3;
        let kernel = Kernel::from_real_fn(1.0, dt, |_| 1.0).unwrap();
        let y = real_series(dt, kernel.len(), |t| t);
        let h = deconvolve_real(&kernel, &y).unwrap();
        for &v in &h {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn inverts_exponential_closed_form() {
        let dt = 1e-3;
        let kernel = Kernel::from_real_fn(1.0, dt, |t| (-t).exp()).unwrap();
        let y = real_series(dt, kernel.len(), |t| 1.0 - (-t).exp());
        let h = deconvolve_real(&kernel, &y).unwrap();
        for &v in &h {
            assert!((v - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn round_trip_on_smooth_series() {
        let dt = 1e-3;
        let kernel = Kernel::from_real_fn(1.0, dt, |t| (3.0 * t).cos()).unwrap();
        let h: Vec<Complex64> = (0..kernel.len())
            .map(|k| Complex64::new((2.0 * (k as f64 * dt)).sin() + 0.3, 0.0))
            .collect();
        let y = convolve(&kernel, &h).unwrap();
        let back = deconvolve(&kernel, &y).unwrap();
        let err = series_l2_norm(dt, &back.iter().zip(&h).map(|(a, b)| a - b).collect::<Vec<_>>());
        let scale = series_l2_norm(dt, &h);
        assert!(err / scale < 1e-3, "relative error {}", err / scale);
    }

    #[test]
    fn round_trip_order_at_least_1_7() {
        let mut errs = Vec::new();
        let dts = [4e-3, 2e-3, 1e-3];
        for &dt in &dts {
            let kernel = Kernel::from_real_fn(1.0, dt, |t| (3.0 * t).cos()).unwrap();
            let h: Vec<Complex64> = (0..kernel.len())
                .map(|k| Complex64::new((2.0 * (k as f64 * dt)).sin() + 0.3, 0.0))
                .collect();
            let y = convolve(&kernel, &h).unwrap();
            let back = deconvolve(&kernel, &y).unwrap();
            let err = series_l2_norm(
                dt,
                &back.iter().zip(&h).map(|(a, b)| a - b).collect::<Vec<_>>(),
            );
            errs.push(err);
        }
        let slope = (errs[0] / errs[2]).ln() / (4.0f64).ln();
        assert!(slope >= 1.7, "measured order {slope}");
    }

    #[test]
    fn degenerate_kernel_rejected() {
        let dt = 1e-2;
        let kernel = Kernel::from_real_fn(0.5, dt, |t| t).unwrap();
        let y = real_series(dt, kernel.len(), |t| t * t);
        assert!(matches!(
            deconvolve_real(&kernel, &y),
            Err(Error::SingularKernel { .. })
        ));
    }

    #[test]
    fn nonvanishing_start_rejected() {
        let dt = 1e-2;
        let kernel = Kernel::from_real_fn(0.5, dt, |_| 1.0).unwrap();
        let y = real_series(dt, kernel.len(), |t| 1.0 + t);
        assert!(matches!(deconvolve_real(&kernel, &y), Err(Error::NonZeroStart { .. })));
    }

    #[test]
    fn kernel_scaling_is_exact() {
        let dt = 1e-3;
        let kernel = Kernel::from_real_fn(0.5, dt, |t| (t).cos()).unwrap();
        let scaled = kernel.scaled(Complex64::new(2.5, 0.0));
        let y: Vec<Complex64> = (0..kernel.len())
            .map(|k| {
                let t = k as f64 * dt;
                Complex64::new(t * (1.0 - t), 0.0)
            })
            .collect();
        let h1 = deconvolve(&kernel, &y).unwrap();
        let h2 = deconvolve(&scaled, &y).unwrap();
        for (a, b) in h1.iter().zip(&h2) {
            assert_relative_eq!(a.re, 2.5 * b.re, epsilon = 1e-13);
        }
    }

    #[test]
    fn amplification_constant_closed_forms() {
        let dt = 1e-4;
        let tau = 1.0;
        let unit = Kernel::from_real_fn(tau, dt, |_| 1.0).unwrap();
        assert_relative_eq!(
            amplification_constant(&unit, tau, 1.0).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            amplification_constant(&unit, tau, 2.0).unwrap(),
            2f64.sqrt() / 2.0,
            max_relative = 1e-10
        );
        let exp = Kernel::from_real_fn(tau, dt, |t| (-t).exp()).unwrap();
        let dsq = (1.0 - (-2.0 * tau).exp()) / 2.0;
        assert_relative_eq!(
            amplification_constant(&exp, tau, 1.0).unwrap(),
            2f64.sqrt() * (tau * dsq).exp(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn dual_norm_amplification_closed_forms() {
        let dt = 1e-4;
        let tau = 4.0;
        let unit = Kernel::from_real_fn(tau, dt, |_| 1.0).unwrap();
        assert_relative_eq!(
            dual_norm_amplification(&unit, tau, 3.0).unwrap(),
            3.0,
            max_relative = 1e-10
        );
        let om = (0.5 * std::f64::consts::PI * std::f64::consts::PI).sqrt();
        let cosk = Kernel::from_real_fn(tau, dt, |t| (om * t).cos()).unwrap();
        let dsq = om * om * (tau / 2.0 - (2.0 * om * tau).sin() / (4.0 * om));
        let expected = (dsq * tau).exp();
        assert_relative_eq!(
            dual_norm_amplification(&cosk, tau, 1.0).unwrap(),
            expected,
            max_relative = 1e-4
        );
        // doubling tau never decreases the constant
        let half = cosk.truncated(2.0).unwrap();
        let short = dual_norm_amplification(&half, 2.0, 1.0).unwrap();
        assert!(dual_norm_amplification(&cosk, tau, 1.0).unwrap() >= short);
    }

    #[test]
    fn gronwall_bound_holds_on_complex_kernel() {
        let dt = 1e-3;
        let tau = 1.0;
        let kernel =
            Kernel::from_complex_fn(tau, dt, |t| Complex64::new(t.cos(), t.sin())).unwrap();
        let h: Vec<Complex64> = (0..kernel.len())
            .map(|k| {
                let t = k as f64 * dt;
                Complex64::new((5.0 * t).sin(), t)
            })
            .collect();
        let y = convolve(&kernel, &h).unwrap();
        let back = deconvolve(&kernel, &y).unwrap();
        let bound = amplification_constant(&kernel, tau, 1.0).unwrap()
            * series_h1_norm(dt, &y);
        assert!(series_l2_norm(dt, &back) <= bound);
    }
}
