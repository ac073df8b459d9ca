//! Exact law of root visits on the directed d-ary tree with stationary
//! B-particles, via the recursion `W_{n+1} = A W_n`, where
//! `A X = sum_{i=1}^d Bin((X_i + Y_i)^+, 1/d)` for i.i.d. copies X_i of X and
//! i.i.d. signs Y_i with P(Y_i = 1) = p.

mod bounds;
mod checks;
mod pmf;

pub use bounds::*;
pub use checks::*;
pub use pmf::*;

use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::math::{self, pow};

/// Default per-step truncation threshold for a single application of A.
pub const EPS_STEP: f64 = 1e-14;

/// Smallest per-step threshold used by the sequence builders.
pub const EPS_FLOOR: f64 = 1e-280;

fn check_dp(d: u32, p: f64) -> Result<()> {
    if d < 2 {
        bail!(InvalidParameter, "branching number must be at least 2, got {d}");
    }
    if !(0.0..=1.0).contains(&p) {
        bail!(InvalidParameter, "p must lie in [0, 1], got {p}");
    }
    Ok(())
}

/// One application of the operator A, trimming upper-tail mass below `eps_step`.
pub fn apply_a_with(x: &Pmf, d: u32, p: f64, eps_step: f64) -> Result<Pmf> {
    check_dp(d, p)?;
    let y = thin(&step_plus(x, p), 1.0 / d as f64);
    Ok(convolve_power(&y, d).correct_drift().trim(eps_step))
}

/// One application of A where tail mass below `eps_step` is lumped onto the
/// largest kept value (law of min(A X, K)).
pub fn apply_a_lumped(x: &Pmf, d: u32, p: f64, eps_step: f64) -> Result<Pmf> {
    check_dp(d, p)?;
    let y = thin(&step_plus(x, p), 1.0 / d as f64);
    Ok(convolve_power(&y, d).correct_drift().trim_lumped(eps_step))
}

/// One application of A with the default threshold.
pub fn apply_a(x: &Pmf, d: u32, p: f64) -> Result<Pmf> {
    apply_a_with(x, d, p, EPS_STEP)
}

/// `E X + 2p - 1 + (1 - p) P(X = 0)`, the mean of A X.
pub fn predicted_mean(x: &Pmf, p: f64) -> f64 {
    x.mean() + 2.0 * p - 1.0 + (1.0 - p) * x.prob(0)
}

/// Per-step threshold for an n-step sequence: dropped mass is multiplied by
/// at most d at each later step, so steps are trimmed at `eps / d^n`.
fn sequence_threshold(d: u32, n_max: usize, eps: f64) -> f64 {
    let scale = pow(d as f64, n_max as f64);
    (eps / scale).max(EPS_FLOOR)
}

fn check_budget(x: &Pmf, eps: f64, n_max: usize) -> Result<()> {
    let budget = eps * (n_max.max(1)) as f64;
    if x.dropped_tail > budget {
        return Err(Error::TailBudget { dropped: x.dropped_tail, budget });
    }
    Ok(())
}

/// `W_0 = delta_0, W_{n+1} = A W_n` for n = 0..=n_max. Aborts if the
/// truncated mass exceeds `eps * n_max`.
pub fn w_sequence(d: u32, p: f64, n_max: usize, eps: f64) -> Result<Vec<Pmf>> {
    check_dp(d, p)?;
    let thr = sequence_threshold(d, n_max, eps);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(Pmf::delta(0));
    for n in 0..n_max {
        let next = apply_a_with(&out[n], d, p, thr)?;
        check_budget(&next, eps, n_max)?;
        out.push(next);
    }
    Ok(out)
}

/// `U_0 = delta_1, U_{n+1} = A (U_n | U_n > 0)` for n = 0..=n_max.
pub fn u_sequence(d: u32, p: f64, n_max: usize, eps: f64) -> Result<Vec<Pmf>> {
    check_dp(d, p)?;
    let thr = sequence_threshold(d, n_max, eps);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(Pmf::delta(1));
    for n in 0..n_max {
        let next = apply_a_with(&positive_conditioned(&out[n])?, d, p, thr)?;
        check_budget(&next, eps, n_max)?;
        out.push(next);
    }
    Ok(out)
}

/// Means of W_n, n = 0..=n_max, without keeping the laws.
pub fn w_means(d: u32, p: f64, n_max: usize, eps: f64) -> Result<Vec<f64>> {
    check_dp(d, p)?;
    let thr = sequence_threshold(d, n_max, eps);
    let mut x = Pmf::delta(0);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(0.0);
    for _ in 0..n_max {
        x = apply_a_with(&x, d, p, thr)?;
        check_budget(&x, eps, n_max)?;
        out.push(x.mean());
    }
    Ok(out)
}

/// Limit of E W_n for p < 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WLimit {
    pub mean: f64,
    pub steps: usize,
    /// Last increment of the mean.
    pub last_increment: f64,
    pub dropped_tail: f64,
}

/// Iterate W_n until the mean moves by less than `tol` in one step. The
/// sequence of means is increasing, so the last value is a lower estimate.
///
/// Runs can be long, so the tail is lumped (see [`apply_a_lumped`]) rather
/// than dropped: dropped mass would be compounded by d at every step. Lumping
/// keeps each iterate stochastically below the exact W_n.
pub fn w_mean_limit(d: u32, p: f64, tol: f64, max_steps: usize) -> Result<WLimit> {
    check_dp(d, p)?;
    if p >= 0.5 {
        bail!(InvalidParameter, "E W_n diverges for p >= 1/2");
    }
    let mut x = Pmf::delta(0);
    let mut mean = 0.0;
    for n in 1..=max_steps {
        x = apply_a_lumped(&x, d, p, EPS_STEP)?;
        let m = x.mean();
        let inc = m - mean;
        mean = m;
        if n > 1 && math::fabs(inc) < tol {
            return Ok(WLimit { mean, steps: n, last_increment: inc, dropped_tail: x.dropped_tail });
        }
    }
    Err(Error::InsufficientData(alloc::format!("no convergence within {max_steps} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn one_step_from_zero() {
        let w1 = apply_a(&Pmf::delta(0), 2, 0.5).unwrap();
        let want = [9.0 / 16.0, 6.0 / 16.0, 1.0 / 16.0];
        assert_eq!(w1.len(), 3);
        for (a, b) in w1.mass.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_identity_small_case() {
        let x = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        for d in 2..5 {
            let y = apply_a(&x, d, 0.3).unwrap();
            assert!((y.mean() - predicted_mean(&x, 0.3)).abs() < 1e-13);
        }
    }

    #[test]
    fn sequences_start_correctly() {
        let w = w_sequence(2, 0.5, 3, 1e-14).unwrap();
        assert_eq!(w[0], Pmf::delta(0));
        let u = u_sequence(2, 0.5, 3, 1e-14).unwrap();
        assert_eq!(u[0], Pmf::delta(1));
        assert!(w.iter().zip(&u).all(|(a, b)| st_dominates(b, a, 1e-12)));
    }
}
