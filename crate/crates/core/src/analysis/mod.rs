//! Closed-form quantities for the one-dimensional subcritical bounds,
//! random-walk tail bounds, and regression helpers.

mod bounds;
mod fit;

pub use bounds::*;
pub use fit::*;

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::math::{self, exp, ln_choose, log, log1p, sqrt};

/// Sample mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanStderr {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = math::sum(xs.iter().copied()) / n as f64;
        if n == 1 {
            return Self { mean, stderr: f64::NAN, n };
        }
        let ss = math::sum(xs.iter().map(|x| (x - mean) * (x - mean)));
        Self { mean, stderr: sqrt(ss / (n - 1) as f64 / n as f64), n }
    }
}

/// Law of the discrepancy D over k sites, D = 2 Bin(k, p) - k.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyPmf {
    pub k: u64,
    /// `mass[j] = P(D = 2j - k)`.
    pub mass: Vec<f64>,
}

impl DiscrepancyPmf {
    pub fn value(&self, j: usize) -> i64 {
        2 * j as i64 - self.k as i64
    }

    pub fn prob(&self, d: i64) -> f64 {
        let j2 = d + self.k as i64;
        if j2 < 0 || j2 % 2 != 0 || j2 / 2 > self.k as i64 {
            return 0.0;
        }
        self.mass[(j2 / 2) as usize]
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        bail!(InvalidParameter, "p must lie in (0, 1), got {p}");
    }
    Ok(())
}

pub fn discrepancy_pmf(k: u64, p: f64) -> Result<DiscrepancyPmf> {
    check_p(p)?;
    Ok(DiscrepancyPmf { k, mass: math::binomial_row(k, p) })
}

/// `(P(D >= 0), E[D 1{D >= 0}])` for D over k sites, summed from the
/// smallest non-negative value upwards in log space.
fn nonneg_moments(k: u64, p: f64) -> (f64, f64) {
    let j0 = k.div_ceil(2);
    let lp = log(p);
    let lq = log1p(-p);
    let ratio = p / (1.0 - p);
    let mode = (k as f64 + 1.0) * p;
    let mut term = exp(ln_choose(k, j0) + j0 as f64 * lp + (k - j0) as f64 * lq);
    let mut prob = math::Sum::new();
    let mut mean = math::Sum::new();
    let mut j = j0;
    loop {
        prob.add(term);
        mean.add(term * (2 * j as i64 - k as i64) as f64);
        if j == k {
            break;
        }
        term *= (k - j) as f64 / (j + 1) as f64 * ratio;
        j += 1;
        if (j as f64) > mode && term <= 1e-18 * prob.value() {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    (prob.value(), mean.value())
}

/// E[D 1{D >= 0}] for D over k sites.
pub fn positive_part_mean(k: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(nonneg_moments(k, p).1)
}

/// 2 sqrt(p(1-p)).
pub fn chernoff_base(p: f64) -> f64 {
    2.0 * sqrt(p * (1.0 - p))
}

/// Envelope `(1-2p)^-2 k^-1/2 (2 sqrt(p(1-p)))^k` for the positive-part mean.
pub fn positive_part_envelope(k: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    if p >= 0.5 || k == 0 {
        bail!(InvalidParameter, "envelope needs p < 1/2 and k >= 1");
    }
    let e = 1.0 - 2.0 * p;
    Ok(exp(k as f64 * log(chernoff_base(p))) / (e * e * sqrt(k as f64)))
}

/// Expected root occupation of the k-th particle of the one-sided sequential
/// process, `2p/(1-p) E[1{D >= 0}(1 + D)]` with D over k sites.
pub fn expected_uk(k: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    let (prob, mean) = nonneg_moments(k, p);
    Ok(2.0 * p / (1.0 - p) * (prob + mean))
}

/// Truncated series for E U+.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplusSeries {
    pub value: f64,
    /// Last index included.
    pub k_cap: u64,
    /// Certified bound on the omitted terms.
    pub tail_bound: f64,
}

/// Bound on `sum_{k > cap} E U_k` for p < 1/2.
pub fn uplus_tail_bound(p: f64, cap: u64) -> f64 {
    let a = chernoff_base(p);
    let c = 2.0 * p / (1.0 - p);
    // P(D >= 0) <= a^k and E[D 1{D>=0}] <= k a^k, so the terms after `cap`
    // sum to at most c * sum_{k > cap} (k + 1) a^k.
    let k1 = (cap + 1) as f64;
    c * exp(k1 * log(a)) * ((k1 + 1.0) / (1.0 - a) + a / ((1.0 - a) * (1.0 - a)))
}

/// `sum_{k >= 0} E U_k`, truncated at `k_cap` (default: first k whose
/// certified tail bound is below 1e-14). Needs p < 1/2.
pub fn expected_uplus(p: f64, k_cap: Option<u64>) -> Result<UplusSeries> {
    check_p(p)?;
    if p >= 0.5 {
        bail!(InvalidParameter, "the series diverges for p >= 1/2");
    }
    let c = 2.0 * p / (1.0 - p);
    let tail_after = |cap: u64| uplus_tail_bound(p, cap);
    let cap = match k_cap {
        Some(k) => k,
        None => {
            let mut k = math::ceil(log(1e-14) / log(chernoff_base(p))) as u64;
            while tail_after(k) >= 1e-14 {
                k += 16;
            }
            k
        }
    };
    let mut s = math::Sum::new();
    for k in 0..=cap {
        let (prob, mean) = nonneg_moments(k, p);
        s.add(c * (prob + mean));
    }
    Ok(UplusSeries { value: s.value(), k_cap: cap, tail_bound: tail_after(cap) })
}

/// Normal-approximation switch for very large site counts.
pub const DEVR_EXACT_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevrTail {
    pub probability: f64,
    pub sites: u64,
    pub threshold: f64,
    /// Whether `r <= (c1/(1-2p))^{2/d}` holds.
    pub in_range: bool,
    pub normal_approximation: bool,
}

/// P(D >= c1 r^{d/2}) for the discrepancy over the box of half-width r in Z^d.
pub fn devr_tail(r: u64, d: u32, p: f64, c1: f64) -> Result<DevrTail> {
    check_p(p)?;
    if d == 0 || !(c1 >= 0.0) {
        bail!(InvalidParameter, "need d >= 1 and c1 >= 0");
    }
    let n = (2 * r + 1)
        .checked_pow(d)
        .ok_or_else(|| crate::error::Error::InvalidParameter("box too large".into()))?;
    let thr = c1 * math::pow(r as f64, d as f64 / 2.0);
    let in_range = p < 0.5 && (r as f64) <= math::pow(c1 / (1.0 - 2.0 * p), 2.0 / d as f64);
    // D >= thr  <=>  S >= (n + thr) / 2 with S ~ Bin(n, p).
    let j0 = math::ceil((n as f64 + thr) / 2.0 - 1e-9).max(0.0) as u64;
    if n > DEVR_EXACT_LIMIT {
        let mu = n as f64 * p;
        let sd = sqrt(n as f64 * p * (1.0 - p));
        let z = (j0 as f64 - 0.5 - mu) / sd;
        return Ok(DevrTail { probability: math::normal_sf(z), sites: n, threshold: thr, in_range, normal_approximation: true });
    }
    Ok(DevrTail { probability: binomial_upper_tail(n, p, j0), sites: n, threshold: thr, in_range, normal_approximation: false })
}

/// P(Bin(n, p) >= j0), accumulated in log space away from the mode.
pub fn binomial_upper_tail(n: u64, p: f64, j0: u64) -> f64 {
    if j0 == 0 {
        return 1.0;
    }
    if j0 > n {
        return 0.0;
    }
    let lp = log(p);
    let lq = log1p(-p);
    let lpmf = |j: u64| ln_choose(n, j) + j as f64 * lp + (n - j) as f64 * lq;
    let mode = (n as f64 + 1.0) * p;
    if j0 as f64 >= mode {
        // Sum the upper tail directly, log-sum-exp style around the first term.
        let l0 = lpmf(j0);
        let ratio = p / (1.0 - p);
        let mut rel = 1.0;
        let mut acc = math::Sum::new();
        let mut j = j0;
        loop {
            acc.add(rel);
            if j == n {
                break;
            }
            rel *= (n - j) as f64 / (j + 1) as f64 * ratio;
            j += 1;
            if rel < 1e-18 * acc.value() {
                break;
            }
        }
        exp(l0 + log(acc.value())).min(1.0)
    } else {
        // 1 - P(S <= j0 - 1), lower tail summed downwards.
        let top = j0 - 1;
        let l0 = lpmf(top);
        let ratio = (1.0 - p) / p;
        let mut rel = 1.0;
        let mut acc = math::Sum::new();
        let mut j = top;
        loop {
            acc.add(rel);
            if j == 0 {
                break;
            }
            rel *= j as f64 / (n - j + 1) as f64 * ratio;
            j -= 1;
            if rel < 1e-18 * acc.value() {
                break;
            }
        }
        (1.0 - exp(l0 + log(acc.value()))).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uk_at_zero_and_one() {
        assert!((expected_uk(0, 0.4).unwrap() - 0.8 / 0.6).abs() < 1e-15);
        // k = 1, p = 1/2: D = +-1, E[1{D>=0}(1+D)] = 1.
        assert!((expected_uk(1, 0.5).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tail_helpers_agree_with_direct_sums() {
        for &(n, p, j0) in &[(20u64, 0.3, 7u64), (20, 0.3, 2), (100, 0.45, 60), (1, 0.5, 1)] {
            let direct: f64 = math::binomial_row(n, p)[j0 as usize..].iter().sum();
            let t = binomial_upper_tail(n, p, j0);
            assert!((t - direct).abs() < 1e-13, "{n} {p} {j0}: {t} vs {direct}");
        }
    }

    #[test]
    fn mean_stderr_basic() {
        let s = MeanStderr::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (1.666_666_666_666_666_7f64 / 4.0).sqrt()).abs() < 1e-12);
    }
}
