//! Inequality suite for the exact sequences.

use alloc::vec::Vec;

use super::bounds::{q_constant, size_bias_gap};
use super::pmf::{log_concavity_violation, st_dominates, Pmf};
use super::{u_sequence, w_sequence};
use crate::error::Result;
use crate::math::{expm1, pow};

/// Relative tolerance for log-concavity and ratio comparisons.
pub const LC_TOL: f64 = 1e-12;
/// Masses below this are treated as zero in log-concavity checks.
pub const LC_FLOOR: f64 = 1e-15;

/// Law of X + k.
pub fn shift(x: &Pmf, k: usize) -> Pmf {
    let mut mass = alloc::vec![0.0; k];
    mass.extend_from_slice(&x.mass);
    Pmf { mass, dropped_tail: x.dropped_tail }
}

pub fn is_log_concave(x: &Pmf, tol: f64) -> bool {
    log_concavity_violation(x, tol, LC_FLOOR).is_none()
}

/// Whether Y dominates X in likelihood ratio: P(Y = k) / P(X = k) is
/// nondecreasing over the union of the supports.
pub fn lr_dominates(x: &Pmf, y: &Pmf) -> bool {
    let n = x.len().max(y.len());
    let pts: Vec<usize> = (0..n).filter(|&k| x.prob(k) > 0.0 || y.prob(k) > 0.0).collect();
    pts.windows(2).all(|w| {
        let (i, j) = (w[0], w[1]);
        let lhs = y.prob(j) * x.prob(i);
        let rhs = y.prob(i) * x.prob(j);
        lhs >= rhs * (1.0 - LC_TOL)
    })
}

/// Outcome of the inequality suite for one (d, p).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TreeChecks {
    pub d: u32,
    pub p: f64,
    pub n_max: usize,
    /// E W_n and P(W_n = 0), n = 0..=n_max.
    pub means: Vec<f64>,
    pub zero_mass: Vec<f64>,
    pub dropped_tail: Vec<f64>,
    /// Values of n at which a check fails beyond the tail budget.
    pub u_not_log_concave: Vec<usize>,
    pub w_not_below_u: Vec<usize>,
    pub anticoncentration: Vec<usize>,
    pub size_bias: Vec<usize>,
    pub growth: Vec<usize>,
    /// Largest size-bias coupling gap seen (<= 0 when the coupling exists).
    pub max_size_bias_gap: f64,
    /// n at which W_n itself fails log-concavity (reported, not a failure).
    pub w_not_log_concave: Vec<usize>,
}

impl TreeChecks {
    pub fn violations(&self) -> usize {
        self.u_not_log_concave.len()
            + self.w_not_below_u.len()
            + self.anticoncentration.len()
            + self.size_bias.len()
            + self.growth.len()
    }
}

/// Run the suite on W_n and U_n for n <= n_max. Log-concavity and the
/// size-bias coupling are only claimed for p >= 4/9, anticoncentration and
/// growth for p <= 1/2; outside those ranges the checks are skipped.
pub fn tree_checks(d: u32, p: f64, n_max: usize, eps: f64) -> Result<TreeChecks> {
    let w = w_sequence(d, p, n_max, eps)?;
    let u = u_sequence(d, p, n_max, eps)?;
    let q = q_constant();
    let lc_regime = p >= 4.0 / 9.0 - 1e-15;
    let sub = p <= 0.5;
    let mut r = TreeChecks { d, p, n_max, max_size_bias_gap: f64::NEG_INFINITY, ..Default::default() };
    r.means = w.iter().map(Pmf::mean).collect();
    r.zero_mass = w.iter().map(|x| x.prob(0)).collect();
    r.dropped_tail = w.iter().map(|x| x.dropped_tail).collect();
    for n in 0..=n_max {
        let (wn, un) = (&w[n], &u[n]);
        if !st_dominates(un, wn, 1e-12) {
            r.w_not_below_u.push(n);
        }
        if log_concavity_violation(wn, LC_TOL, LC_FLOOR).is_some() {
            r.w_not_log_concave.push(n);
        }
        if lc_regime {
            if log_concavity_violation(un, LC_TOL, LC_FLOOR).is_some() {
                r.u_not_log_concave.push(n);
            }
            let gap = size_bias_gap(un, n, d)?;
            r.max_size_bias_gap = r.max_size_bias_gap.max(gap);
            if gap > 1e-12 + un.dropped_tail {
                r.size_bias.push(n);
            }
        }
        if sub && n < n_max {
            let bound = pow(4.0, -r.means[n] - 1.0);
            if w[n + 1].prob(0) < bound - 1e-12 - w[n + 1].dropped_tail {
                r.anticoncentration.push(n);
            }
            let mu = r.means[n];
            if n >= 1 && mu > 0.0 && r.means[n + 1] > mu / -expm1(-q * mu) + 1e-10 {
                r.growth.push(n);
            }
            if p == 0.5 && n + 2 <= n_max {
                let lower = pow(4.0, -mu - 1.0) / 2.0;
                if r.means[n + 2] - mu < lower - 1e-10 {
                    r.growth.push(n);
                }
            }
        }
    }
    r.growth.dedup();
    Ok(r)
}
