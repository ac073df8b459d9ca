use crate::error::{bail, Result};
use crate::math::{exp, sqrt};

/// Probability that a simple random walk from 0 hits x > 0 before -a.
pub fn gr_prob(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && x > 0.0) {
        bail!(InvalidParameter, "gambler's ruin needs a, x > 0");
    }
    Ok(a / (a + x))
}

/// Bound `2a/(a+x) exp(-x^2 / 12t)` on hitting x before -a and by time t,
/// valid for `3 sqrt(t) <= x <= 2t`.
pub fn gr_time_bound(a: f64, x: f64, t: f64) -> Result<f64> {
    if !(a > 0.0 && t > 0.0) {
        bail!(InvalidParameter, "need a, t > 0");
    }
    if x < 3.0 * sqrt(t) || x > 2.0 * t {
        bail!(InvalidParameter, "bound holds only for 3 sqrt(t) <= x <= 2t (x = {x}, t = {t})");
    }
    Ok(2.0 * a / (a + x) * exp(-x * x / (12.0 * t)))
}

/// Bound `exp(-x^2 / 4t)` on P(max_{s<=t} S_s >= x) for the rate-1
/// continuous-time walk on Z, valid for `0 <= x <= 2t`.
pub fn srw_max_bound(x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || x < 0.0 || x > 2.0 * t {
        bail!(InvalidParameter, "bound holds only for 0 <= x <= 2t");
    }
    Ok(exp(-x * x / (4.0 * t)))
}

/// Bound `exp(-k^2 / (2(t + k)))` on P(Poisson(t) >= t + k), k >= 0.
pub fn poisson_tail_bound(k: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || k < 0.0 {
        bail!(InvalidParameter, "need t > 0 and k >= 0");
    }
    Ok(exp(-k * k / (2.0 * (t + k))))
}

/// Bound `sqrt(t)` on the expected time a rate-1 walk on Z spends at its
/// starting point up to time t (t >= 1).
pub fn local_time_bound(t: f64) -> Result<f64> {
    if !(t >= 1.0) {
        bail!(InvalidParameter, "local time bound needs t >= 1");
    }
    Ok(sqrt(t))
}

/// `C k^{-1/2} exp(-k^2 / 12t)`: bound shape for the probability that the
/// k-th particle of the sequential process reaches the root by time t.
pub fn seq_bound(k: u64, t: f64, c: f64) -> Result<f64> {
    if k == 0 || !(t > 0.0) {
        bail!(InvalidParameter, "need k >= 1 and t > 0");
    }
    let k = k as f64;
    Ok(c / sqrt(k) * exp(-k * k / (12.0 * t)))
}

/// Expected number of distinct walkers visiting the root by time t when one
/// non-interacting rate-1 walker starts on each site of Z is at most t (t >= 1).
pub fn visits_bound(t: f64) -> Result<f64> {
    if !(t >= 1.0) {
        bail!(InvalidParameter, "bound needs t >= 1");
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamblers_ruin_values() {
        assert_eq!(gr_prob(2.0, 3.0).unwrap(), 0.4);
        assert!(gr_time_bound(5.0, 29.0, 100.0).is_err());
        let b = gr_time_bound(5.0, 30.0, 100.0).unwrap();
        assert!((b - 2.0 * 5.0 / 35.0 * (-0.75f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn ranges_are_enforced() {
        assert!(srw_max_bound(21.0, 10.0).is_err());
        assert!(poisson_tail_bound(-1.0, 1.0).is_err());
        assert!(local_time_bound(0.5).is_err());
        assert!(seq_bound(0, 1.0, 1.0).is_err());
    }
}
