//! Graphs: the line, Z^d, the torus (Z/2rZ)^d and the root-directed d-ary
//! subtree of the bidirected regular tree.
//!
//! Sites are compact `u64` keys. Lattice and torus sites pack each coordinate
//! as an offset-binary field of `64 / d` bits; torus coordinates use the
//! representatives in (-r, r], so a torus site and the lattice site with the
//! same coordinates share a key. Tree sites use level-order indices with the
//! root at 0 and the children of `i` at `d*i + 1 ..= d*i + d`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{bail, Error, Result};
use crate::math;
use crate::rng::Path;

pub const MAX_LATTICE_DIM: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphSpec {
    Line,
    Lattice { d: u32 },
    Torus { d: u32, r: u32 },
    BiTree { d: u32, n: u32 },
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Line => write!(f, "line"),
            GraphSpec::Lattice { d } => write!(f, "lattice:{d}"),
            GraphSpec::Torus { d, r } => write!(f, "torus:{d}:{r}"),
            GraphSpec::BiTree { d, n } => write!(f, "bitree:{d}:{n}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<u32> {
            parts
                .get(i)
                .and_then(|x| x.parse::<u32>().ok())
                .ok_or_else(|| Error::InvalidGraph(format!("bad graph string {s:?}")))
        };
        let spec = match (parts[0], parts.len()) {
            ("line", 1) => GraphSpec::Line,
            ("lattice", 2) => GraphSpec::Lattice { d: num(1)? },
            ("torus", 3) => GraphSpec::Torus { d: num(1)?, r: num(2)? },
            ("bitree", 3) => GraphSpec::BiTree { d: num(1)?, n: num(2)? },
            _ => bail!(InvalidGraph, "bad graph string {s:?} (expected line | lattice:d | torus:d:r | bitree:d:n)"),
        };
        Graph::new(spec)?;
        Ok(spec)
    }
}

/// Compact site key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site(pub u64);

/// Result of one random-walk step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    To(Site),
    Escaped,
}

#[derive(Debug, Clone)]
enum Shape {
    Lattice {
        d: u32,
        bits: u32,
        /// Torus half-width, if periodic.
        torus: Option<i64>,
    },
    Tree {
        d: u32,
        n: u32,
        /// `starts[k]` is the index of the first site on level k; has n + 2 entries.
        starts: Vec<u64>,
    },
}

#[derive(Debug, Clone)]
pub struct Graph {
    spec: GraphSpec,
    shape: Shape,
}

impl Graph {
    pub fn new(spec: GraphSpec) -> Result<Self> {
        let shape = match spec {
            GraphSpec::Line => Shape::Lattice { d: 1, bits: 64, torus: None },
            GraphSpec::Lattice { d } | GraphSpec::Torus { d, .. } => {
                if d == 0 || d > MAX_LATTICE_DIM {
                    bail!(InvalidGraph, "lattice dimension must be in 1..={MAX_LATTICE_DIM}, got {d}");
                }
                let bits = 64 / d;
                let torus = match spec {
                    GraphSpec::Torus { r, .. } => {
                        if r == 0 {
                            bail!(InvalidGraph, "torus half-width must be positive");
                        }
                        if bits < 64 && (r as u64) >= (1u64 << (bits - 1)) {
                            bail!(InvalidGraph, "torus half-width {r} too large for dimension {d}");
                        }
                        Some(r as i64)
                    }
                    _ => None,
                };
                Shape::Lattice { d, bits, torus }
            }
            GraphSpec::BiTree { d, n } => {
                if d < 2 {
                    bail!(InvalidGraph, "tree branching must be at least 2, got {d}");
                }
                let mut starts = Vec::with_capacity(n as usize + 2);
                let mut start: u64 = 0;
                let mut width: u64 = 1;
                for _ in 0..=n {
                    starts.push(start);
                    start = start
                        .checked_add(width)
                        .ok_or_else(|| Error::InvalidGraph(format!("tree bitree:{d}:{n} too large")))?;
                    width = width.checked_mul(d as u64).unwrap_or(u64::MAX);
                }
                starts.push(start);
                Shape::Tree { d, n, starts }
            }
        };
        Ok(Self { spec, shape })
    }

    pub fn spec(&self) -> GraphSpec {
        self.spec
    }

    pub fn is_tree(&self) -> bool {
        matches!(self.shape, Shape::Tree { .. })
    }

    /// Lattice dimension or tree branching number.
    pub fn dim(&self) -> u32 {
        match self.shape {
            Shape::Lattice { d, .. } | Shape::Tree { d, .. } => d,
        }
    }

    /// Number of step choices: 2d on lattices, d on the tree.
    pub fn degree(&self) -> u32 {
        match self.shape {
            Shape::Lattice { d, .. } => 2 * d,
            Shape::Tree { d, .. } => d,
        }
    }

    pub fn root(&self) -> Site {
        match self.shape {
            Shape::Lattice { .. } => self.encode(&[0; MAX_LATTICE_DIM as usize][..self.dim() as usize]),
            Shape::Tree { .. } => Site(0),
        }
    }

    /// Number of sites of a finite graph.
    pub fn num_sites(&self) -> Option<u64> {
        match &self.shape {
            Shape::Lattice { d, torus: Some(r), .. } => (2 * *r as u64).checked_pow(*d),
            Shape::Lattice { .. } => None,
            Shape::Tree { starts, .. } => starts.last().copied(),
        }
    }

    fn encode(&self, coords: &[i64]) -> Site {
        match self.shape {
            Shape::Lattice { bits, .. } => {
                let mut key = 0u64;
                for (i, &c) in coords.iter().enumerate() {
                    key |= field(c, bits) << (bits * i as u32);
                }
                Site(key)
            }
            Shape::Tree { .. } => unreachable!(),
        }
    }

    /// Site at the given lattice coordinates (torus coordinates are reduced).
    pub fn site_at(&self, coords: &[i64]) -> Result<Site> {
        match self.shape {
            Shape::Lattice { d, bits, torus } => {
                if coords.len() != d as usize {
                    bail!(InvalidParameter, "expected {d} coordinates, got {}", coords.len());
                }
                let mut reduced = [0i64; MAX_LATTICE_DIM as usize];
                for (i, &c) in coords.iter().enumerate() {
                    let c = match torus {
                        Some(r) => wrap(c, r),
                        None => c,
                    };
                    if bits < 64 {
                        let lim = 1i64 << (bits - 1);
                        if c < -lim || c >= lim {
                            return Err(Error::CoordinateOverflow);
                        }
                    }
                    reduced[i] = c;
                }
                Ok(self.encode(&reduced[..d as usize]))
            }
            Shape::Tree { .. } => bail!(InvalidParameter, "coordinates given for a tree site"),
        }
    }

    /// Lattice coordinates of a site.
    pub fn coords(&self, s: Site) -> Vec<i64> {
        match self.shape {
            Shape::Lattice { d, bits, .. } => (0..d).map(|i| coord(s.0, i, bits)).collect(),
            Shape::Tree { .. } => Vec::new(),
        }
    }

    /// Path word from the root (letters in `0..d`) of a tree site.
    pub fn word(&self, s: Site) -> Vec<u32> {
        match &self.shape {
            Shape::Tree { d, starts, .. } => {
                let k = self.level(s) as usize;
                let mut off = s.0 - starts[k];
                let mut w = alloc::vec![0u32; k];
                for slot in w.iter_mut().rev() {
                    *slot = (off % *d as u64) as u32;
                    off /= *d as u64;
                }
                w
            }
            Shape::Lattice { .. } => Vec::new(),
        }
    }

    pub fn site_of_word(&self, w: &[u32]) -> Result<Site> {
        match &self.shape {
            Shape::Tree { d, n, starts } => {
                if w.len() > *n as usize {
                    bail!(InvalidParameter, "word of length {} exceeds depth {n}", w.len());
                }
                let mut off = 0u64;
                for &x in w {
                    if x >= *d {
                        bail!(InvalidParameter, "letter {x} out of range for branching {d}");
                    }
                    off = off * *d as u64 + x as u64;
                }
                Ok(Site(starts[w.len()] + off))
            }
            Shape::Lattice { .. } => bail!(InvalidParameter, "word given for a lattice site"),
        }
    }

    /// Tree level of a site (0 for the root); 0 on lattices.
    pub fn level(&self, s: Site) -> u32 {
        match &self.shape {
            Shape::Tree { starts, .. } => match starts.binary_search(&s.0) {
                Ok(k) => k as u32,
                Err(k) => k as u32 - 1,
            },
            Shape::Lattice { .. } => 0,
        }
    }

    /// Graph distance to the root (l1 norm on lattices, wrapped on the torus).
    pub fn distance_to_root(&self, s: Site) -> u64 {
        match self.shape {
            Shape::Lattice { d, bits, .. } => (0..d).map(|i| coord(s.0, i, bits).unsigned_abs()).sum(),
            Shape::Tree { .. } => self.level(s) as u64,
        }
    }

    /// Apply step choice `c in 0..degree()` at `s`.
    ///
    /// Lattice: choice `2i` increments coordinate i, `2i + 1` decrements it.
    /// Tree: choice 0 moves to the parent, anything else escapes; every step
    /// from the root escapes.
    #[inline]
    pub fn apply(&self, s: Site, c: u32) -> Result<Move> {
        match self.shape {
            Shape::Lattice { bits, torus, .. } => {
                let axis = c / 2;
                let up = c % 2 == 0;
                let x = coord(s.0, axis, bits);
                let mut y = if up { x + 1 } else { x - 1 };
                if let Some(r) = torus {
                    y = wrap(y, r);
                } else if bits < 64 {
                    let lim = 1i64 << (bits - 1);
                    if y < -lim || y >= lim {
                        return Err(Error::CoordinateOverflow);
                    }
                } else if (up && x == i64::MAX) || (!up && x == i64::MIN) {
                    return Err(Error::CoordinateOverflow);
                }
                let shift = bits * axis;
                let mask = if bits == 64 { u64::MAX } else { ((1u64 << bits) - 1) << shift };
                Ok(Move::To(Site((s.0 & !mask) | (field(y, bits) << shift))))
            }
            Shape::Tree { d, .. } => {
                if c != 0 || s.0 == 0 {
                    Ok(Move::Escaped)
                } else {
                    Ok(Move::To(Site((s.0 - 1) / d as u64)))
                }
            }
        }
    }

    /// One step along a path.
    #[inline]
    pub fn sample_step(&self, s: Site, path: &mut Path) -> Result<Move> {
        let c = path.choice(self.degree());
        self.apply(s, c)
    }

    /// Out-neighbours inside the graph.
    pub fn neighbors(&self, s: Site) -> Result<Vec<Site>> {
        let mut out = Vec::new();
        for c in 0..self.degree() {
            if let Move::To(t) = self.apply(s, c)? {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        Ok(out)
    }

    /// Canonical vertex order: by distance to the root, then lexicographically
    /// by coordinates (lattice) or root-path word (tree).
    pub fn cmp_sites(&self, a: Site, b: Site) -> Ordering {
        match self.shape {
            Shape::Lattice { d, bits, .. } => self.distance_to_root(a).cmp(&self.distance_to_root(b)).then_with(|| {
                for i in 0..d {
                    let o = coord(a.0, i, bits).cmp(&coord(b.0, i, bits));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            }),
            // Level-order indices already sort by level, then word.
            Shape::Tree { .. } => a.0.cmp(&b.0),
        }
    }

    pub fn sort_sites(&self, sites: &mut [Site]) {
        sites.sort_by(|a, b| self.cmp_sites(*a, *b));
    }

    /// All sites of the l-infinity box of half-width `radius` (lattice, torus)
    /// or all levels `0..=radius` (tree), in canonical order.
    pub fn ball(&self, radius: u64) -> Result<Vec<Site>> {
        match &self.shape {
            Shape::Lattice { d, torus, .. } => {
                let (lo, hi) = match torus {
                    Some(r) if radius >= *r as u64 => (-*r + 1, *r),
                    _ => (-(radius as i64), radius as i64),
                };
                self.boxed(*d, lo, hi)
            }
            Shape::Tree { n, .. } => self.levels(0, (radius as u32).min(*n)),
        }
    }

    fn boxed(&self, d: u32, lo: i64, hi: i64) -> Result<Vec<Site>> {
        let side = (hi - lo + 1) as u64;
        let count = side
            .checked_pow(d)
            .filter(|&c| c <= 1 << 28)
            .ok_or_else(|| Error::InvalidParameter("region too large".to_string()))?;
        let mut out = Vec::with_capacity(count as usize);
        let mut c = alloc::vec![lo; d as usize];
        for _ in 0..count {
            out.push(self.site_at(&c)?);
            for x in c.iter_mut() {
                *x += 1;
                if *x <= hi {
                    break;
                }
                *x = lo;
            }
        }
        self.sort_sites(&mut out);
        Ok(out)
    }

    /// Sites `lo..=hi` of a one-dimensional lattice, in canonical order.
    pub fn segment(&self, lo: i64, hi: i64) -> Result<Vec<Site>> {
        if self.dim() != 1 || self.is_tree() {
            bail!(InvalidParameter, "segments need a one-dimensional lattice");
        }
        if lo > hi {
            bail!(InvalidParameter, "empty segment {lo}..={hi}");
        }
        self.boxed(1, lo, hi)
    }

    /// Tree levels `lo..=hi`, in canonical order.
    pub fn levels(&self, lo: u32, hi: u32) -> Result<Vec<Site>> {
        match &self.shape {
            Shape::Tree { n, starts, .. } => {
                if lo > hi || hi > *n {
                    bail!(InvalidParameter, "levels {lo}..={hi} outside 0..={n}");
                }
                let a = starts[lo as usize];
                let b = starts[hi as usize + 1];
                if b - a > 1 << 28 {
                    bail!(InvalidParameter, "region too large");
                }
                Ok((a..b).map(Site).collect())
            }
            Shape::Lattice { .. } => bail!(InvalidParameter, "levels need a tree"),
        }
    }

    /// Human-readable site label.
    pub fn label(&self, s: Site) -> String {
        match self.shape {
            Shape::Lattice { .. } => {
                let c = self.coords(s);
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                parts.join(" ")
            }
            Shape::Tree { .. } => {
                let w = self.word(s);
                if w.is_empty() {
                    return "root".to_string();
                }
                w.iter().map(|x| char::from_digit(*x, 36).unwrap_or('?')).collect()
            }
        }
    }

    /// Dense-index layout covering a neighbourhood of the root, used by the
    /// engines' site tables. `reach` is the half-width for lattices.
    pub(crate) fn layout(&self, reach: u64) -> Layout {
        match &self.shape {
            Shape::Lattice { d, bits, torus } => {
                let w = match torus {
                    Some(r) => *r as u64,
                    None => reach,
                };
                let side = 2 * w + 1;
                match side.checked_pow(*d).filter(|&n| n <= 1 << 24) {
                    Some(len) => Layout::Box { d: *d, bits: *bits, w: w as i64, side, len: len as usize },
                    None => Layout::Sparse,
                }
            }
            Shape::Tree { starts, .. } => {
                let len = *starts.last().unwrap_or(&0);
                if len <= 1 << 26 {
                    Layout::Dense { len: len as usize }
                } else {
                    Layout::Sparse
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Layout {
    Sparse,
    Dense { len: usize },
    Box { d: u32, bits: u32, w: i64, side: u64, len: usize },
}

impl Layout {
    pub(crate) fn len(&self) -> usize {
        match *self {
            Layout::Sparse => 0,
            Layout::Dense { len } | Layout::Box { len, .. } => len,
        }
    }

    #[inline]
    pub(crate) fn index(&self, s: Site) -> Option<usize> {
        match *self {
            Layout::Sparse => None,
            Layout::Dense { len } => ((s.0 as usize) < len).then_some(s.0 as usize),
            Layout::Box { d, bits, w, side, .. } => {
                let mut idx = 0u64;
                for i in (0..d).rev() {
                    let c = coord(s.0, i, bits);
                    if c < -w || c > w {
                        return None;
                    }
                    idx = idx * side + (c + w) as u64;
                }
                Some(idx as usize)
            }
        }
    }
}

#[inline]
fn field(c: i64, bits: u32) -> u64 {
    if bits == 64 {
        (c as u64) ^ (1u64 << 63)
    } else {
        ((c + (1i64 << (bits - 1))) as u64) & ((1u64 << bits) - 1)
    }
}

#[inline]
fn coord(key: u64, axis: u32, bits: u32) -> i64 {
    if bits == 64 {
        (key ^ (1u64 << 63)) as i64
    } else {
        let f = (key >> (bits * axis)) & ((1u64 << bits) - 1);
        f as i64 - (1i64 << (bits - 1))
    }
}

/// Representative of `c` modulo 2r in (-r, r].
#[inline]
fn wrap(c: i64, r: i64) -> i64 {
    let m = 2 * r;
    let x = (c + r - 1).rem_euclid(m);
    x - r + 1
}

/// Truncation radius for horizon `t`: `ceil(C sqrt(t ln t))` on lattices and
/// tori, `ceil(C t)` levels on the tree.
pub fn truncation_radius(spec: GraphSpec, t: f64, c: f64) -> Result<u64> {
    if !(t >= 2.0) || !t.is_finite() {
        bail!(InvalidParameter, "truncation radius needs a finite horizon t >= 2, got {t}");
    }
    if !(c > 0.0) {
        bail!(InvalidParameter, "truncation constant must be positive");
    }
    let r = match spec {
        GraphSpec::BiTree { .. } => math::ceil(c * t),
        _ => math::ceil(c * math::sqrt(t * math::log(t))),
    };
    Ok(r as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn parse_round_trip() {
        for s in ["line", "lattice:2", "torus:1:10", "bitree:2:8"] {
            let g: GraphSpec = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("torus:1".parse::<GraphSpec>().is_err());
        assert!("bitree:1:4".parse::<GraphSpec>().is_err());
        assert!("lattice:0".parse::<GraphSpec>().is_err());
    }

    #[test]
    fn lattice_steps() {
        let g = Graph::new(GraphSpec::Lattice { d: 2 }).unwrap();
        let o = g.root();
        assert_eq!(g.coords(o), vec![0, 0]);
        let Move::To(s) = g.apply(o, 0).unwrap() else { panic!() };
        assert_eq!(g.coords(s), vec![1, 0]);
        let Move::To(s) = g.apply(s, 3).unwrap() else { panic!() };
        assert_eq!(g.coords(s), vec![1, -1]);
        assert_eq!(g.distance_to_root(s), 2);
        assert_eq!(g.neighbors(o).unwrap().len(), 4);
    }

    #[test]
    fn line_uses_full_width() {
        let g = Graph::new(GraphSpec::Line).unwrap();
        let s = g.site_at(&[-5]).unwrap();
        assert_eq!(g.coords(s), vec![-5]);
        let Move::To(t) = g.apply(s, 1).unwrap() else { panic!() };
        assert_eq!(g.coords(t), vec![-6]);
    }

    #[test]
    fn torus_wraps() {
        let g = Graph::new(GraphSpec::Torus { d: 1, r: 3 }).unwrap();
        let s = g.site_at(&[3]).unwrap();
        let Move::To(t) = g.apply(s, 0).unwrap() else { panic!() };
        assert_eq!(g.coords(t), vec![-2]);
        assert_eq!(g.site_at(&[-3]).unwrap(), s);
        assert_eq!(g.ball(10).unwrap().len(), 6);
        assert_eq!(g.num_sites(), Some(6));
    }

    #[test]
    fn tree_structure() {
        let g = Graph::new(GraphSpec::BiTree { d: 3, n: 4 }).unwrap();
        assert_eq!(g.num_sites(), Some(1 + 3 + 9 + 27 + 81));
        let s = g.site_of_word(&[2, 0, 1]).unwrap();
        assert_eq!(g.level(s), 3);
        assert_eq!(g.word(s), vec![2, 0, 1]);
        let Move::To(p) = g.apply(s, 0).unwrap() else { panic!() };
        assert_eq!(g.word(p), vec![2, 0]);
        assert_eq!(g.apply(s, 1).unwrap(), Move::Escaped);
        assert_eq!(g.apply(g.root(), 0).unwrap(), Move::Escaped);
        assert_eq!(g.levels(2, 2).unwrap().len(), 9);
    }

    #[test]
    fn canonical_order_on_line() {
        let g = Graph::new(GraphSpec::Line).unwrap();
        let s = g.ball(2).unwrap();
        let c: std::vec::Vec<i64> = s.iter().map(|x| g.coords(*x)[0]).collect();
        assert_eq!(c, vec![0, -1, 1, -2, 2]);
    }

    #[test]
    fn truncation_radius_rules() {
        assert!(truncation_radius(GraphSpec::Line, 1.5, 2.0).is_err());
        assert_eq!(truncation_radius(GraphSpec::BiTree { d: 2, n: 9 }, 2.0, 4.0).unwrap(), 8);
        let r = truncation_radius(GraphSpec::Line, 100.0, 2.0).unwrap();
        assert_eq!(r, 43);
    }

    #[test]
    fn layout_indices_are_injective() {
        let g = Graph::new(GraphSpec::Lattice { d: 2 }).unwrap();
        let l = g.layout(3);
        let mut seen = std::collections::BTreeSet::new();
        for s in g.ball(3).unwrap() {
            assert!(seen.insert(l.index(s).unwrap()));
        }
        assert_eq!(seen.len(), 49);
        assert_eq!(l.index(g.site_at(&[4, 0]).unwrap()), None);
    }
}
