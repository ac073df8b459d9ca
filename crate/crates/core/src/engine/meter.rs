use alloc::vec::Vec;

use super::RootVisit;

/// Tracks A-particles at the root and integrates V exactly.
#[derive(Debug, Clone)]
pub(crate) struct Meter {
    count: u32,
    last: f64,
    v: f64,
    entered: Vec<f64>,
    first: Vec<f64>,
    occupancy: Vec<f64>,
}

impl Meter {
    pub fn new(n: usize) -> Self {
        Self {
            count: 0,
            last: 0.0,
            v: 0.0,
            entered: alloc::vec![f64::NAN; n],
            first: alloc::vec![f64::NAN; n],
            occupancy: alloc::vec![0.0; n],
        }
    }

    #[inline]
    pub fn advance(&mut self, t: f64) {
        if t > self.last {
            self.v += self.count as f64 * (t - self.last);
            self.last = t;
        }
    }

    /// Particle `id` lands on the root (possibly dying there at once).
    pub fn touch(&mut self, id: u32, t: f64) {
        if self.first[id as usize].is_nan() {
            self.first[id as usize] = t;
        }
    }

    pub fn enter(&mut self, id: u32, t: f64) {
        self.advance(t);
        self.touch(id, t);
        self.entered[id as usize] = t;
        self.count += 1;
    }

    pub fn leave(&mut self, id: u32, t: f64) {
        self.advance(t);
        let e = self.entered[id as usize];
        debug_assert!(!e.is_nan());
        self.occupancy[id as usize] += t - e;
        self.entered[id as usize] = f64::NAN;
        self.count -= 1;
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// Close open occupation intervals at `t` and return the visit log.
    pub fn finish(&mut self, t: f64) -> Vec<RootVisit> {
        self.advance(t);
        let mut out = Vec::new();
        for id in 0..self.first.len() {
            if !self.entered[id].is_nan() {
                self.occupancy[id] += t - self.entered[id];
                self.entered[id] = f64::NAN;
            }
            if !self.first[id].is_nan() {
                out.push(RootVisit { particle: id as u32, first_visit: self.first[id], occupancy: self.occupancy[id] });
            }
        }
        out
    }
}
