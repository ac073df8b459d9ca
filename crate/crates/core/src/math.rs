//! Small numeric helpers on top of `libm`.

use alloc::vec::Vec;

pub use libm::{exp, expm1, fabs, floor, lgamma, log, log1p, pow, sqrt};

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if fabs(self.s) >= fabs(x) {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = Sum::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// ln C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if n <= 60 {
        let mut acc = 0.0;
        for i in 0..k {
            acc += log((n - i) as f64) - log((i + 1) as f64);
        }
        return acc;
    }
    lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
}

/// Binomial(n, q) probabilities for k = 0..=n.
///
/// Exact products for n <= 60, log space above.
pub fn binomial_row(n: u64, q: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(n as usize + 1);
    if q <= 0.0 {
        row.resize(n as usize + 1, 0.0);
        row[0] = 1.0;
        return row;
    }
    if q >= 1.0 {
        row.resize(n as usize + 1, 0.0);
        row[n as usize] = 1.0;
        return row;
    }
    if n <= 60 {
        let mut c = 1.0f64;
        for k in 0..=n {
            if k > 0 {
                c = c * (n - k + 1) as f64 / k as f64;
            }
            row.push(c * libm::pow(q, k as f64) * libm::pow(1.0 - q, (n - k) as f64));
        }
        return row;
    }
    let lq = log(q);
    let lp = log1p(-q);
    for k in 0..=n {
        let l = ln_choose(n, k) + k as f64 * lq + (n - k) as f64 * lp;
        row.push(exp(l));
    }
    row
}

/// log(exp(a) + exp(b)).
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + log1p(exp(lo - hi))
}

/// Standard normal upper tail P(Z >= z).
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_rows_sum_to_one() {
        for &n in &[0u64, 1, 5, 60, 61, 200] {
            let r = binomial_row(n, 0.3);
            assert!((sum(r.iter().copied()) - 1.0).abs() < 1e-12, "n={n}");
        }
        let r = binomial_row(4, 0.5);
        assert_eq!(r, [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0]);
    }

    #[test]
    fn ln_choose_matches_small_cases() {
        assert!((exp(ln_choose(10, 3)) - 120.0).abs() < 1e-9);
        assert!((exp(ln_choose(100, 2)) - 4950.0).abs() < 1e-7);
        assert_eq!(ln_choose(3, 5), f64::NEG_INFINITY);
    }

    #[test]
    fn compensated_sum() {
        let mut s = Sum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }
}
