//! Indexed binary min-heap of `(time, id)` pairs. Each id is present at most
//! once and can be removed in O(log n).

use alloc::vec::Vec;
use core::cmp::Ordering;

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: Vec<(f64, u32)>,
    pos: Vec<u32>,
}

#[inline]
fn less(a: &(f64, u32), b: &(f64, u32)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.1 < b.1,
    }
}

impl EventQueue {
    pub fn with_capacity(n: usize) -> Self {
        Self { heap: Vec::with_capacity(n), pos: Vec::with_capacity(n) }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.pos.get(id as usize).is_some_and(|&p| p != ABSENT)
    }

    /// Insert; returns false if `id` is already scheduled.
    pub fn push(&mut self, id: u32, time: f64) -> bool {
        if self.pos.len() <= id as usize {
            self.pos.resize(id as usize + 1, ABSENT);
        }
        if self.pos[id as usize] != ABSENT {
            return false;
        }
        let i = self.heap.len();
        self.heap.push((time, id));
        self.pos[id as usize] = i as u32;
        self.sift_up(i);
        true
    }

    pub fn peek(&self) -> Option<(f64, u32)> {
        self.heap.first().copied()
    }

    pub fn pop(&mut self) -> Option<(f64, u32)> {
        let top = *self.heap.first()?;
        self.remove_at(0);
        Some(top)
    }

    /// Remove `id`; returns its time if it was present.
    pub fn remove(&mut self, id: u32) -> Option<f64> {
        let p = *self.pos.get(id as usize)?;
        if p == ABSENT {
            return None;
        }
        let t = self.heap[p as usize].0;
        self.remove_at(p as usize);
        Some(t)
    }

    /// Time at which `id` is scheduled.
    pub fn time_of(&self, id: u32) -> Option<f64> {
        let p = *self.pos.get(id as usize)?;
        (p != ABSENT).then(|| self.heap[p as usize].0)
    }

    fn remove_at(&mut self, i: usize) {
        let last = self.heap.len() - 1;
        let id = self.heap[i].1;
        self.heap.swap(i, last);
        self.heap.pop();
        self.pos[id as usize] = ABSENT;
        if i < self.heap.len() {
            self.pos[self.heap[i].1 as usize] = i as u32;
            self.sift_down(i);
            self.sift_up(i);
        }
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if less(&self.heap[i], &self.heap[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let m = if r < n && less(&self.heap[r], &self.heap[l]) { r } else { l };
            if less(&self.heap[m], &self.heap[i]) {
                self.swap(i, m);
                i = m;
            } else {
                break;
            }
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a].1 as usize] = a as u32;
        self.pos[self.heap[b].1 as usize] = b as u32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn pops_in_order_after_removals(times in proptest::collection::vec(0.0f64..100.0, 1..200), drop_mask in any::<u64>()) {
            let mut q = EventQueue::default();
            for (i, &t) in times.iter().enumerate() {
                prop_assert!(q.push(i as u32, t));
            }
            prop_assert!(!q.push(0, 1.0));
            let mut kept: std::vec::Vec<(f64, u32)> = std::vec::Vec::new();
            for (i, &t) in times.iter().enumerate() {
                if i < 64 && drop_mask >> i & 1 == 1 {
                    prop_assert_eq!(q.remove(i as u32), Some(t));
                } else {
                    kept.push((t, i as u32));
                }
            }
            kept.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut got = std::vec::Vec::new();
            while let Some(e) = q.pop() {
                got.push(e);
            }
            prop_assert_eq!(got, kept);
        }
    }
}
