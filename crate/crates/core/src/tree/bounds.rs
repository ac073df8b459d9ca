use alloc::vec::Vec;

use super::{convolve, size_bias, st_gap, Pmf};
use crate::error::{bail, Result};
use crate::math::{self, exp, expm1, log, log1p, pow};

/// `prod_{i >= 1} (1 - 2^-i)^2`.
pub fn q_constant() -> f64 {
    let mut lp = 0.0;
    let mut i = 1;
    loop {
        let term = pow(2.0, -(i as f64));
        if term < 1e-18 {
            break;
        }
        lp += 2.0 * log1p(-term);
        i += 1;
    }
    exp(lp)
}

/// `h(x) = (1 + x) log(1 + x) - x` for x >= -1.
pub fn h(x: f64) -> f64 {
    if x == -1.0 {
        return 1.0;
    }
    (1.0 + x) * log1p(x) - x
}

/// Lower-tail bound `exp(-(p mu / c) h(-x / (p mu)))` on P(X <= mu - x) for
/// X with mean mu admitting a (c, p)-bounded size-bias coupling, 0 <= x <= p mu.
pub fn concentration_lower_tail_bound(mu: f64, c: f64, pq: f64, x: f64) -> Result<f64> {
    if !(mu > 0.0 && c > 0.0 && pq > 0.0) || x < 0.0 || x > pq * mu {
        bail!(InvalidParameter, "need mu, c, p > 0 and 0 <= x <= p mu");
    }
    Ok(exp(-(pq * mu / c) * h(-x / (pq * mu))))
}

/// Quadratic relaxation `exp(-x^2 / (2 p c mu))`.
pub fn concentration_quadratic_bound(mu: f64, c: f64, pq: f64, x: f64) -> Result<f64> {
    if !(mu > 0.0 && c > 0.0 && pq > 0.0) || x < 0.0 {
        bail!(InvalidParameter, "need mu, c, p > 0 and x >= 0");
    }
    Ok(exp(-x * x / (2.0 * pq * c * mu)))
}

/// Law of `1 + sum_{i=1}^n Bin(2, d^-i) + U`.
pub fn size_bias_envelope(u: &Pmf, n: usize, d: u32) -> Pmf {
    let mut acc = Pmf::delta(1);
    for i in 1..=n {
        let q = pow(d as f64, -(i as f64));
        if q < 1e-300 {
            break;
        }
        let b = Pmf { mass: alloc::vec![(1.0 - q) * (1.0 - q), 2.0 * q * (1.0 - q), q * q], dropped_tail: 0.0 };
        acc = convolve(&acc, &b);
    }
    convolve(&acc, u)
}

/// Gap of the size-bias coupling check: largest `P(U^s <= k) - P(R <= k)`
/// where R is the envelope; the coupling `U^s <= R` exists iff it is <= 0.
pub fn size_bias_gap(u: &Pmf, n: usize, d: u32) -> Result<f64> {
    let us = size_bias(u)?;
    let r = size_bias_envelope(u, n, d);
    // U^s must be dominated by R, i.e. P(R <= k) <= P(U^s <= k).
    Ok(st_gap(&r, &us))
}

/// `mu_{n+1} = mu_n / (1 - exp(-q mu_n))`, n = 0..=n_max.
pub fn recursion_upper_iterate(q: f64, mu0: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(q > 0.0 && mu0 > 0.0) {
        bail!(InvalidParameter, "need q > 0 and mu0 > 0");
    }
    let mut out = Vec::with_capacity(n_max + 1);
    let mut mu = mu0;
    out.push(mu);
    for _ in 0..n_max {
        mu = mu / -expm1(-q * mu);
        out.push(mu);
    }
    Ok(out)
}

/// Solution of `x / (1 - exp(-q x)) - 2 eps = x`, found by bisection to 1e-12.
pub fn subcritical_fixed_point(q: f64, eps: f64) -> Result<f64> {
    if !(q > 0.0) || !(eps > 0.0 && eps < 0.5) {
        bail!(InvalidParameter, "need q > 0 and 0 < eps < 1/2");
    }
    // g(x) = x / (e^{qx} - 1) - 2 eps decreases from 1/q - 2 eps to -2 eps.
    let g = |x: f64| x / expm1(q * x) - 2.0 * eps;
    if g(1e-300) <= 0.0 {
        bail!(InvalidParameter, "no positive fixed point (1/q <= 2 eps)");
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `-1 + log((eps + 1/2) / (2 eps)) / log 4`, the lower fixed point.
pub fn lower_fixed_point(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        bail!(InvalidParameter, "need 0 < eps < 1/2");
    }
    Ok(-1.0 + log((eps + 0.5) / (2.0 * eps)) / math::log(4.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_value() {
        let q = q_constant();
        assert!((q - 0.083_4).abs() < 1e-4, "{q}");
    }

    #[test]
    fn fixed_points() {
        let x = subcritical_fixed_point(0.083, 0.01).unwrap();
        assert!(x < 110.9);
        assert!((x / expm1(0.083 * x) - 0.02).abs() < 1e-9);
        let y = lower_fixed_point(0.01).unwrap();
        assert!((y - (-1.0 + (25.5f64).ln() / 4f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn quadratic_relaxation_dominates() {
        for &x in &[0.0, 0.5, 1.0, 2.0, 2.9] {
            let e = concentration_lower_tail_bound(10.0, 2.0, 0.3, x).unwrap();
            let q = concentration_quadratic_bound(10.0, 2.0, 0.3, x).unwrap();
            assert!(e <= q + 1e-15, "{x}: {e} > {q}");
        }
    }
}
