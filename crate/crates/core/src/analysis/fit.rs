use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::math::{self, log, sqrt};

/// Ordinary least-squares line y = intercept + slope * x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn ols(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    let n = xs.len();
    if n != ys.len() {
        bail!(InvalidParameter, "x and y lengths differ");
    }
    if n < 3 {
        bail!(InsufficientData, "need at least 3 points, got {n}");
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        bail!(InvalidParameter, "non-finite data");
    }
    let nf = n as f64;
    let mx = math::sum(xs.iter().copied()) / nf;
    let my = math::sum(ys.iter().copied()) / nf;
    let sxx = math::sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = math::sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let syy = math::sum(ys.iter().map(|y| (y - my) * (y - my)));
    if sxx == 0.0 {
        bail!(InsufficientData, "all x values coincide");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = math::sum(xs.iter().zip(ys).map(|(x, y)| {
        let e = y - intercept - slope * x;
        e * e
    }));
    let s2 = sse / (nf - 2.0);
    let slope_stderr = sqrt(s2 / sxx);
    let intercept_stderr = sqrt(s2 * (1.0 / nf + mx * mx / sxx));
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(Fit { slope, intercept, slope_stderr, intercept_stderr, r2, n })
}

/// Fit y = C x^slope by regressing log y on log x.
pub fn fit_power(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        bail!(InvalidParameter, "power-law fit needs positive data");
    }
    let lx: Vec<f64> = xs.iter().map(|&x| log(x)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| log(y)).collect();
    ols(&lx, &ly)
}

/// Fit y = a + slope * log x.
pub fn fit_log(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    if xs.iter().any(|&v| !(v > 0.0)) {
        bail!(InvalidParameter, "log fit needs positive x");
    }
    let lx: Vec<f64> = xs.iter().map(|&x| log(x)).collect();
    ols(&lx, ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_power_law_is_recovered() {
        let xs: Vec<f64> = (1..10).map(|i| (i * i) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * libm::pow(*x, 0.75)).collect();
        let f = fit_power(&xs, &ys).unwrap();
        assert!((f.slope - 0.75).abs() < 1e-12);
        assert!((libm::exp(f.intercept) - 3.0).abs() < 1e-10);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-10);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(ols(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_power(&[1.0, 2.0, 0.0], &[1.0, 2.0, 3.0]).is_err());
        let f = fit_log(&[1.0, 2.0, 4.0, 8.0], &vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!((f.slope - 1.0 / core::f64::consts::LN_2).abs() < 1e-12);
    }
}
