//! Event-driven simulation of two-type DLAS with site-keyed randomness.

mod crs;
mod meter;

pub use crs::{run_crs, run_crs_with_arrivals, Arrivals};
pub(crate) use meter::Meter;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::graph::{Graph, GraphSpec, Site};
use crate::rng::{StreamKey, Streams, Tag};

pub const DEFAULT_MAX_EVENTS: u64 = 2_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    A,
    B,
}

impl Kind {
    pub fn opposite(self) -> Kind {
        match self {
            Kind::A => Kind::B,
            Kind::B => Kind::A,
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            Kind::A => 1,
            Kind::B => -1,
        }
    }
}

/// Initial sites of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// l-infinity box of this half-width (lattice, torus) or levels `0..=r` (tree).
    Ball(u64),
    /// Sites `lo..=hi` of the line.
    Segment(i64, i64),
    /// Tree levels `lo..=hi`.
    Levels(u32, u32),
    Sites(Vec<Site>),
}

impl Region {
    /// Region sites in canonical order.
    pub fn sites(&self, g: &Graph) -> Result<Vec<Site>> {
        match self {
            Region::Ball(r) => g.ball(*r),
            Region::Segment(lo, hi) => g.segment(*lo, *hi),
            Region::Levels(lo, hi) => g.levels(*lo, *hi),
            Region::Sites(s) => {
                let mut s = s.clone();
                g.sort_sites(&mut s);
                s.dedup();
                Ok(s)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub graph: GraphSpec,
    /// Probability that a region site starts with an A-particle (B otherwise).
    pub p: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// May be infinite; the run then ends when no particle can move.
    pub horizon: f64,
    pub region: Region,
    pub seed: u64,
    /// Increasing, finite, at most `horizon`.
    pub sample_times: Vec<f64>,
    /// Record the full field at every sample time.
    pub record_field: bool,
    /// Half-width of a central box whose A-density is recorded at sample times.
    pub window: Option<u64>,
    pub max_events: u64,
}

impl SimParams {
    pub fn new(graph: GraphSpec, p: f64, horizon: f64, region: Region, seed: u64) -> Self {
        Self {
            graph,
            p,
            lambda_a: 1.0,
            lambda_b: 0.0,
            horizon,
            region,
            seed,
            sample_times: Vec::new(),
            record_field: false,
            window: None,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            bail!(InvalidParameter, "p must lie in [0, 1], got {}", self.p);
        }
        for (name, l) in [("lambda_a", self.lambda_a), ("lambda_b", self.lambda_b)] {
            if !(l >= 0.0) || !l.is_finite() {
                bail!(InvalidParameter, "{name} must be finite and non-negative, got {l}");
            }
        }
        if self.lambda_a == 0.0 && self.lambda_b == 0.0 {
            bail!(InvalidParameter, "at least one rate must be positive");
        }
        if !(self.horizon > 0.0) {
            bail!(InvalidParameter, "horizon must be positive, got {}", self.horizon);
        }
        let mut last = f64::NEG_INFINITY;
        for &s in &self.sample_times {
            if !s.is_finite() || s < 0.0 || s < last || s > self.horizon {
                bail!(InvalidParameter, "sample times must be increasing, finite and within [0, horizon]");
            }
            last = s;
        }
        Ok(())
    }

    pub fn rate(&self, kind: Kind) -> f64 {
        match kind {
            Kind::A => self.lambda_a,
            Kind::B => self.lambda_b,
        }
    }
}

/// One initial particle and the randomness it owns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitParticle {
    pub site: Site,
    pub kind: Kind,
    pub braveness: f64,
    pub path: StreamKey,
}

/// Initial particles in canonical site order.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub particles: Vec<InitParticle>,
}

impl InitialConfig {
    /// #A - #B over the sites selected by `keep`.
    pub fn discrepancy(&self, mut keep: impl FnMut(Site) -> bool) -> i64 {
        self.particles.iter().filter(|q| keep(q.site)).map(|q| q.kind.sign()).sum()
    }

    pub fn field(&self) -> Configuration {
        Configuration::from_counts(self.particles.iter().map(|q| (q.site, q.kind.sign())))
    }

    /// Canonical numbering of A-particles: indices into `particles`.
    pub fn a_indices(&self) -> Vec<usize> {
        (0..self.particles.len()).filter(|&i| self.particles[i].kind == Kind::A).collect()
    }

    pub(crate) fn check(&self) -> Result<()> {
        let mut seen: BTreeMap<Site, Kind> = BTreeMap::new();
        for q in &self.particles {
            if !(0.0..=1.0).contains(&q.braveness) {
                bail!(InvalidConfig, "braveness outside [0, 1]");
            }
            if let Some(k) = seen.insert(q.site, q.kind) {
                if k != q.kind {
                    bail!(InvalidConfig, "A- and B-particles share site {:?}", q.site);
                }
            }
        }
        if self.particles.len() >= u32::MAX as usize / 2 {
            bail!(InvalidConfig, "too many particles");
        }
        Ok(())
    }
}

/// Draw the initial configuration: each region site independently holds an A
/// with probability p and a B otherwise. Types, bravenesses and paths come
/// from streams keyed by the site.
pub fn init_configuration(params: &SimParams) -> Result<(Graph, InitialConfig)> {
    params.validate()?;
    let g = Graph::new(params.graph)?;
    let streams = Streams::new(params.seed);
    let sites = params.region.sites(&g)?;
    let particles = sites
        .into_iter()
        .map(|s| {
            let u = streams.uniform(StreamKey::new(s.0, Tag::Type));
            let kind = if u < params.p { Kind::A } else { Kind::B };
            InitParticle {
                site: s,
                kind,
                braveness: streams.uniform(StreamKey::new(s.0, Tag::Braveness)),
                path: StreamKey::new(s.0, Tag::Path),
            }
        })
        .collect();
    Ok((g, InitialConfig { particles }))
}

/// A field zeta: site -> (#A - #B), zero entries omitted, sorted by site key.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Configuration(pub Vec<(Site, i64)>);

impl Configuration {
    pub fn from_counts(it: impl IntoIterator<Item = (Site, i64)>) -> Self {
        let mut m: BTreeMap<Site, i64> = BTreeMap::new();
        for (s, c) in it {
            *m.entry(s).or_insert(0) += c;
        }
        Configuration(m.into_iter().filter(|&(_, c)| c != 0).collect())
    }

    pub fn get(&self, s: Site) -> i64 {
        match self.0.binary_search_by_key(&s, |e| e.0) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    /// Union of the supports of two fields.
    pub fn joint_support(&self, other: &Configuration) -> Vec<Site> {
        let mut v: Vec<Site> = self.0.iter().chain(other.0.iter()).map(|e| e.0).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Fate of one initial particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fate {
    /// Annihilation time, infinite if it never happened.
    pub death: f64,
    /// Escape time (tree only), infinite if it never happened.
    pub escape: f64,
    pub jumps: u64,
    /// Position at the end of the run, if still present.
    pub site: Option<Site>,
}

/// Root visit record of an A-particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootVisit {
    pub particle: u32,
    pub first_visit: f64,
    pub occupancy: f64,
}

/// Observables of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub seed: u64,
    pub sample_times: Vec<f64>,
    /// A-count at the root at each sample time.
    pub n_root: Vec<u32>,
    /// Cumulative root occupation V at each sample time.
    pub v_root: Vec<f64>,
    /// V at the horizon (or at the end of an infinite-horizon run).
    pub v_horizon: f64,
    /// A-density in the central window at each sample time.
    pub window_density: Vec<f64>,
    /// Fields at sample times, if requested.
    pub fields: Vec<Configuration>,
    pub fates: Vec<Fate>,
    /// A-particles that reached the root, by particle index.
    pub visits: Vec<RootVisit>,
    pub events: u64,
    /// Time of the last processed event.
    pub end_time: f64,
}

pub(crate) fn window_sites(g: &Graph, w: Option<u64>) -> Result<Option<(u64, f64)>> {
    match w {
        None => Ok(None),
        Some(w) => {
            if g.is_tree() {
                return Err(Error::InvalidParameter("spatial window needs a lattice".into()));
            }
            Ok(Some((w, g.ball(w)?.len() as f64)))
        }
    }
}

pub(crate) fn in_window(g: &Graph, s: Site, w: u64) -> bool {
    g.coords(s).iter().all(|c| c.unsigned_abs() <= w)
}

/// Half-width of the dense site table: generous around the region.
pub(crate) fn table_reach(g: &Graph, init: &InitialConfig) -> u64 {
    if g.is_tree() {
        return 0;
    }
    let extent = init
        .particles
        .iter()
        .flat_map(|q| g.coords(q.site))
        .map(|c| c.unsigned_abs())
        .max()
        .unwrap_or(0);
    2 * extent + 16
}

/// Per-sample-time mean and standard error of the root A-count.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationEstimate {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicas: usize,
}

/// Estimate rho_t = E N_t from replica traces, optionally from the spatially
/// averaged window density instead of the root count.
pub fn occupation_estimator(traces: &[Trace], use_window: bool) -> Result<OccupationEstimate> {
    let first = traces.first().ok_or_else(|| Error::InsufficientData("no replicas".into()))?;
    let times = first.sample_times.clone();
    let mut mean = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let xs: Vec<f64> = traces
            .iter()
            .map(|t| if use_window { t.window_density[i] } else { t.n_root[i] as f64 })
            .collect();
        let s = crate::analysis::MeanStderr::of(&xs);
        mean.push(s.mean);
        stderr.push(s.stderr);
    }
    Ok(OccupationEstimate { times, mean, stderr, replicas: traces.len() })
}
