use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::math::{self, Sum};

/// Law of a non-negative integer random variable, possibly truncated.
///
/// `mass[k] = P(X = k)` for the kept support. `dropped_tail` is the mass that
/// is no longer represented (always upper-tail mass of some ancestor law);
/// the kept masses sum to `1 - dropped_tail`. Nothing is ever renormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    pub mass: Vec<f64>,
    pub dropped_tail: f64,
}

impl Pmf {
    /// Point mass at k.
    pub fn delta(k: usize) -> Self {
        let mut mass = alloc::vec![0.0; k + 1];
        mass[k] = 1.0;
        Pmf { mass, dropped_tail: 0.0 }
    }

    /// From explicit masses summing to one (within 1e-12).
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() || mass.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            bail!(InvalidParameter, "masses must be finite and non-negative");
        }
        let total = math::sum(mass.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            bail!(InvalidParameter, "masses sum to {total}, not 1");
        }
        Ok(Pmf { mass, dropped_tail: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        math::sum(self.mass.iter().copied())
    }

    /// Mean of the kept part.
    pub fn mean(&self) -> f64 {
        math::sum(self.mass.iter().enumerate().map(|(k, &m)| k as f64 * m))
    }

    /// Partial sums P(X <= k) of the kept part.
    pub fn cdf(&self) -> Vec<f64> {
        let mut s = Sum::new();
        self.mass
            .iter()
            .map(|&m| {
                s.add(m);
                s.value()
            })
            .collect()
    }

    /// Strip trailing zeros.
    fn settle(mut self) -> Self {
        while self.mass.len() > 1 && self.mass.last() == Some(&0.0) {
            self.mass.pop();
        }
        self
    }

    /// Rescale the kept masses so they sum to `1 - dropped_tail`. This only
    /// removes floating-point drift: total mass evolves as m -> m^d under the
    /// recursion, which amplifies rounding errors by d per step.
    pub fn correct_drift(mut self) -> Self {
        let total = self.total();
        if total > 0.0 {
            let f = (1.0 - self.dropped_tail) / total;
            for m in &mut self.mass {
                *m *= f;
            }
        }
        self
    }

    /// Like [`Pmf::trim`], but the removed mass is moved onto the largest
    /// kept value instead of being dropped: the result is the law of
    /// min(X, K), stochastically below X, with no mass lost.
    pub fn trim_lumped(mut self, eps: f64) -> Self {
        let mut tail = 0.0;
        while self.mass.len() > 1 {
            let last = *self.mass.last().unwrap_or(&0.0);
            if tail + last < eps {
                tail += last;
                self.mass.pop();
            } else {
                break;
            }
        }
        if let Some(m) = self.mass.last_mut() {
            *m += tail;
        }
        self
    }

    /// Drop the largest values while their total mass stays below `eps`.
    pub fn trim(mut self, eps: f64) -> Self {
        let mut tail = 0.0;
        while self.mass.len() > 1 {
            let last = *self.mass.last().unwrap_or(&0.0);
            if tail + last < eps {
                tail += last;
                self.mass.pop();
            } else {
                break;
            }
        }
        self.dropped_tail += tail;
        self
    }
}

/// Law of (X + Y)^+ with P(Y = 1) = p, P(Y = -1) = 1 - p.
pub fn step_plus(x: &Pmf, p: f64) -> Pmf {
    let k = x.mass.len();
    let mut y = alloc::vec![0.0; k + 1];
    for (i, &m) in x.mass.iter().enumerate() {
        y[i + 1] += p * m;
        let down = if i == 0 { 0 } else { i - 1 };
        y[down] += (1.0 - p) * m;
    }
    Pmf { mass: y, dropped_tail: x.dropped_tail }.settle()
}

/// Binomial thinning: law of Bin(X, q).
pub fn thin(x: &Pmf, q: f64) -> Pmf {
    let k = x.mass.len();
    let mut acc = alloc::vec![Sum::new(); k];
    for (n, &m) in x.mass.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        for (j, b) in math::binomial_row(n as u64, q).into_iter().enumerate() {
            acc[j].add(m * b);
        }
    }
    Pmf { mass: acc.iter().map(Sum::value).collect(), dropped_tail: x.dropped_tail }.settle()
}

/// Law of X + Y for independent X, Y.
pub fn convolve(x: &Pmf, y: &Pmf) -> Pmf {
    let n = x.mass.len() + y.mass.len() - 1;
    let mut acc = alloc::vec![Sum::new(); n];
    for (i, &a) in x.mass.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (j, &b) in y.mass.iter().enumerate() {
            acc[i + j].add(a * b);
        }
    }
    let dropped = 1.0 - (1.0 - x.dropped_tail) * (1.0 - y.dropped_tail);
    Pmf { mass: acc.iter().map(Sum::value).collect(), dropped_tail: dropped }.settle()
}

/// Law of the sum of d independent copies of X (d >= 1), by repeated squaring.
pub fn convolve_power(x: &Pmf, d: u32) -> Pmf {
    assert!(d >= 1, "convolution power needs d >= 1");
    let mut result: Option<Pmf> = None;
    let mut base = x.clone();
    let mut e = d;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => convolve(&r, &base),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = convolve(&base, &base);
    }
    result.unwrap_or_else(|| Pmf::delta(0))
}

/// Law of X conditioned on X > 0.
pub fn positive_conditioned(x: &Pmf) -> Result<Pmf> {
    let z = 1.0 - x.prob(0);
    if !(z > 0.0) {
        bail!(InvalidParameter, "X is zero almost surely");
    }
    let mut mass: Vec<f64> = x.mass.iter().map(|m| m / z).collect();
    mass[0] = 0.0;
    Ok(Pmf { mass, dropped_tail: x.dropped_tail / z }.settle())
}

/// Size-biased law: P(X^s = k) = k P(X = k) / E X.
pub fn size_bias(x: &Pmf) -> Result<Pmf> {
    let m = x.mean();
    if !(m > 0.0) {
        bail!(InvalidParameter, "size bias needs a positive mean");
    }
    let mass: Vec<f64> = x.mass.iter().enumerate().map(|(k, &p)| k as f64 * p / m).collect();
    // Kept mass of the size-biased law may exceed 1 - dropped_tail by the
    // tail's contribution to the mean; keep the pessimistic figure.
    Ok(Pmf { mass, dropped_tail: x.dropped_tail }.settle())
}

/// Largest `P(X <= k) - P(Y <= k)` over k, from the kept masses. X dominates
/// Y stochastically iff this is <= 0.
pub fn st_gap(x: &Pmf, y: &Pmf) -> f64 {
    let cx = x.cdf();
    let cy = y.cdf();
    let n = cx.len().max(cy.len());
    let at = |c: &[f64], k: usize| if k < c.len() { c[k] } else { *c.last().unwrap_or(&0.0) };
    (0..n).map(|k| at(&cx, k) - at(&cy, k)).fold(f64::NEG_INFINITY, f64::max)
}

/// Whether X dominates Y stochastically, allowing `tol` plus Y's dropped mass.
pub fn st_dominates(x: &Pmf, y: &Pmf, tol: f64) -> bool {
    st_gap(x, y) <= tol + y.dropped_tail
}

/// Index k of the first violation of `P_k^2 >= P_{k-1} P_{k+1}` (relative
/// tolerance `tol`), treating masses below `floor` as zero; `None` if
/// log-concave. Internal zeros count as violations.
pub fn log_concavity_violation(x: &Pmf, tol: f64, floor: f64) -> Option<usize> {
    let m: Vec<f64> = x.mass.iter().map(|&v| if v < floor { 0.0 } else { v }).collect();
    let first = m.iter().position(|&v| v > 0.0)?;
    let last = m.iter().rposition(|&v| v > 0.0)?;
    if let Some(k) = (first..=last).find(|&k| m[k] == 0.0) {
        return Some(k);
    }
    (first + 1..last).find(|&k| {
        let lhs = m[k] * m[k];
        let rhs = m[k - 1] * m[k + 1];
        lhs < rhs * (1.0 - tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn step_plus_clamps_at_zero() {
        let x = Pmf::new(vec![0.5, 0.5]).unwrap();
        let y = step_plus(&x, 0.25);
        assert_eq!(y.mass, vec![0.75, 0.125, 0.125]);
    }

    #[test]
    fn thinning_and_convolution() {
        let x = Pmf::delta(2);
        assert_eq!(thin(&x, 0.5).mass, vec![0.25, 0.5, 0.25]);
        let c = convolve_power(&Pmf::new(vec![0.5, 0.5]).unwrap(), 3);
        assert_eq!(c.mass, vec![0.125, 0.375, 0.375, 0.125]);
    }

    #[test]
    fn conditioning_and_size_bias() {
        let x = Pmf::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(positive_conditioned(&x).unwrap().mass, vec![0.0, 0.5, 0.5]);
        let s = size_bias(&x).unwrap();
        assert_eq!(s.mass, vec![0.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert!(positive_conditioned(&Pmf::delta(0)).is_err());
    }

    #[test]
    fn stochastic_order() {
        let a = Pmf::delta(1);
        let b = Pmf::new(vec![0.5, 0.5]).unwrap();
        assert!(st_dominates(&a, &b, 0.0));
        assert!(!st_dominates(&b, &a, 0.0));
    }

    #[test]
    fn log_concavity() {
        assert_eq!(log_concavity_violation(&Pmf::new(vec![0.25, 0.5, 0.25]).unwrap(), 1e-12, 0.0), None);
        assert_eq!(log_concavity_violation(&Pmf::new(vec![0.5, 0.0, 0.5]).unwrap(), 1e-12, 0.0), Some(1));
        assert_eq!(log_concavity_violation(&Pmf::new(vec![0.4, 0.1, 0.5]).unwrap(), 1e-12, 0.0), Some(1));
    }

    #[test]
    fn trim_records_dropped_mass() {
        let x = Pmf::new(vec![0.5, 0.5 - 1e-15, 1e-15]).unwrap().trim(1e-14);
        assert_eq!(x.len(), 2);
        assert_eq!(x.dropped_tail, 1e-15);
    }
}
