//! Per-site storage: a dense array over a window around the root plus a
//! sparse map for everything outside it.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::graph::{Graph, Layout, Site};

#[derive(Debug, Clone)]
pub struct SiteTable<T> {
    layout: Layout,
    dense: Vec<T>,
    sparse: BTreeMap<Site, T>,
}

impl<T: Default + Clone> SiteTable<T> {
    /// Table for `graph` with a dense window of half-width `reach` around the root.
    pub fn new(graph: &Graph, reach: u64) -> Self {
        let layout = graph.layout(reach);
        Self { layout, dense: alloc::vec![T::default(); layout.len()], sparse: BTreeMap::new() }
    }

    #[inline]
    pub fn get(&self, s: Site) -> Option<&T> {
        match self.layout.index(s) {
            Some(i) => Some(&self.dense[i]),
            None => self.sparse.get(&s),
        }
    }

    #[inline]
    pub fn get_mut(&mut self, s: Site) -> &mut T {
        match self.layout.index(s) {
            Some(i) => &mut self.dense[i],
            None => self.sparse.entry(s).or_default(),
        }
    }
}
