//! Alternative constructions of the DLAS on shared randomness, and
//! executable checks of the couplings between them.

mod path_swap;
mod polarized;
mod sequential;

pub use path_swap::{run_path_swapping, AState, PathSwapSim, Segment, SwapTrace};
pub use polarized::{draw_polarity, run_polarized, PolarTrace};
pub use sequential::{half_line_sequential, run_sequential, run_sequential_in_order, sequential_dominance, DominanceReport, HalfLineRun, SeqFate, SeqParticle, SeqTrace, DEFAULT_STEP_CAP, EXTENSION};

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::engine::{init_configuration, run_crs, Configuration, InitParticle, InitialConfig, Kind, SimParams};
use crate::error::{bail, Error, Result};
use crate::graph::{Graph, Site};
use crate::rng::{StreamKey, Streams, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    PathSwap,
    ChangeTrack,
    Sequential,
    Polarized,
    Monotone,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::PathSwap, Check::ChangeTrack, Check::Sequential, Check::Polarized, Check::Monotone];

    pub fn name(self) -> &'static str {
        match self {
            Check::PathSwap => "path-swap",
            Check::ChangeTrack => "change-track",
            Check::Sequential => "sequential",
            Check::Polarized => "polarized",
            Check::Monotone => "monotone",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown check {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    /// Change tracking: number of A-particles kept (default: half).
    pub keep_a: Option<usize>,
    /// Monotonicity: A-particles added at B sites.
    pub added_a: usize,
    /// Monotonicity: B-particles removed.
    pub removed_b: usize,
    /// Polarized: probability that a particle is positive.
    pub plus_prob: f64,
    /// Number of evenly spaced sample times used when none are given.
    pub samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { keep_a: None, added_a: 3, removed_b: 0, plus_prob: 0.5, samples: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: Check,
    pub trials: usize,
    pub failures: usize,
    pub first_counterexample: Option<Counterexample>,
}

impl CheckReport {
    pub fn new(check: Check) -> Self {
        CheckReport { check, trials: 0, failures: 0, first_counterexample: None }
    }

    /// Fold in one trial's violations (trials must be added in seed order).
    pub fn add(&mut self, seed: u64, violations: &[String]) {
        self.trials += 1;
        if !violations.is_empty() {
            self.failures += 1;
            if self.first_counterexample.is_none() {
                self.first_counterexample = Some(Counterexample { seed, detail: violations[0].clone() });
            }
        }
    }
}

/// `n` evenly spaced times in (0, t].
pub fn even_times(t: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| t * i as f64 / n as f64).collect()
}

fn with_samples(params: &SimParams, opts: &CheckOptions) -> SimParams {
    let mut p = params.clone();
    if p.sample_times.is_empty() && p.horizon.is_finite() {
        p.sample_times = even_times(p.horizon, opts.samples.max(1));
    }
    p.record_field = true;
    p
}

/// Run one trial of `check` with the initial configuration drawn from `params`.
/// Returns the violations found (empty on success).
pub fn run_check(check: Check, params: &SimParams, opts: &CheckOptions) -> Result<Vec<String>> {
    let p = with_samples(params, opts);
    let (g, init) = init_configuration(&p)?;
    match check {
        Check::PathSwap => check_path_swap(&g, &p, &init),
        Check::ChangeTrack => {
            let n = opts.keep_a.unwrap_or(init.a_indices().len() / 2);
            check_change_tracking(&g, &p, &init, n)
        }
        Check::Sequential => Ok(sequential_dominance(&g, &p, &init)?.violations),
        Check::Polarized => {
            let pol = draw_polarity(&p, &init, opts.plus_prob);
            let r = run_polarized(&g, &p, &init, &pol)?;
            let mut v = r.violations.clone();
            if !r.subadditive() {
                v.push(alloc::format!("V = {} exceeds V+ + V- = {} + {}", r.v, r.v_plus, r.v_minus));
            }
            Ok(v)
        }
        Check::Monotone => {
            let (add, remove) = pick_monotone_changes(&g, &p, &init, opts.added_a, opts.removed_b);
            check_monotonicity(&g, &p, &init, &add, &remove)
        }
    }
}

fn compare_fields(what: &str, t: f64, x: &Configuration, y: &Configuration, out: &mut Vec<String>) {
    if x != y {
        let site = x.joint_support(y).into_iter().find(|&s| x.get(s) != y.get(s));
        out.push(alloc::format!("{what} differ at time {t} (site {site:?})"));
    }
}

/// CRS and path-swapping visible traces agree at every sample time.
pub fn check_path_swap(g: &Graph, params: &SimParams, init: &InitialConfig) -> Result<Vec<String>> {
    let mut p = params.clone();
    p.record_field = true;
    let crs = run_crs(g, &p, init)?;
    let psc = run_path_swapping(g, &p, init)?;
    let mut out = Vec::new();
    for (i, &t) in p.sample_times.iter().enumerate() {
        compare_fields("fields", t, &crs.fields[i], &psc.trace.fields[i], &mut out);
        if crs.n_root[i] != psc.trace.n_root[i] {
            out.push(alloc::format!("root counts differ at time {t}"));
        }
        let (a, b) = (crs.v_root[i], psc.trace.v_root[i]);
        if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
            out.push(alloc::format!("root occupations differ at time {t}: {a} vs {b}"));
        }
        if !out.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Keep B-particles and the first `n` A-particles (in number order).
pub fn truncate_a(init: &InitialConfig, n: usize) -> InitialConfig {
    let mut seen = 0;
    InitialConfig {
        particles: init
            .particles
            .iter()
            .filter(|q| {
                if q.kind == Kind::B {
                    return true;
                }
                seen += 1;
                seen <= n
            })
            .copied()
            .collect(),
    }
}

/// Deleting a_{n+1}, ... changes the field exactly by the high-numbered
/// particles, and leaves a_1..a_n untouched.
pub fn check_change_tracking(g: &Graph, params: &SimParams, init: &InitialConfig, n: usize) -> Result<Vec<String>> {
    let mut p = params.clone();
    p.record_field = true;
    let full = run_path_swapping(g, &p, init)?;
    let cut = run_path_swapping(g, &p, &truncate_a(init, n))?;
    let mut out = Vec::new();
    for (i, &t) in p.sample_times.iter().enumerate() {
        let states = &full.a_states[i];
        let (lo, hi) = states.split_at(n.min(states.len()));
        if lo != cut.a_states[i].as_slice() {
            out.push(alloc::format!("low-numbered particles differ at time {t}"));
            break;
        }
        let mut vis: BTreeMap<Site, i64> = BTreeMap::new();
        let mut inv: BTreeMap<Site, i64> = BTreeMap::new();
        for s in hi {
            if let Some(x) = s.site {
                *if s.visible { vis.entry(x) } else { inv.entry(x) }.or_insert(0) += 1;
            }
        }
        let (z, zb) = (&full.trace.fields[i], &cut.trace.fields[i]);
        let mut sites = z.joint_support(zb);
        sites.extend(vis.keys().chain(inv.keys()));
        sites.sort_unstable();
        sites.dedup();
        for v in sites {
            let (a, b) = (z.get(v), zb.get(v));
            let (hv, hi_) = (vis.get(&v).copied().unwrap_or(0), inv.get(&v).copied().unwrap_or(0));
            let ok = a.max(0) - b.max(0) == hv && (-b).max(0) - (-a).max(0) == hi_ && a - b == hv + hi_;
            if !ok {
                out.push(alloc::format!(
                    "identity fails at time {t}, site {}: fields {a} vs {b}, high visible {hv}, high invisible {hi_}",
                    g.label(v)
                ));
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// Pick B sites to turn into A sites and B sites to clear, from an auxiliary stream.
pub fn pick_monotone_changes(
    g: &Graph,
    params: &SimParams,
    init: &InitialConfig,
    added_a: usize,
    removed_b: usize,
) -> (Vec<Site>, Vec<Site>) {
    use rand::seq::SliceRandom;
    let mut bs: Vec<Site> = init.particles.iter().filter(|q| q.kind == Kind::B).map(|q| q.site).collect();
    g.sort_sites(&mut bs);
    bs.dedup();
    let mut rng = Streams::new(params.seed).rng(StreamKey::new(0, Tag::Aux));
    bs.shuffle(&mut rng);
    let k = added_a.min(bs.len());
    let add = bs[..k].to_vec();
    let remove = bs[k..(k + removed_b).min(bs.len())].to_vec();
    (add, remove)
}

/// Build the larger configuration: B-particles at `remove_b` and `add_a` are
/// removed and an A-particle with its own streams is added at each site of
/// `add_a`. Returns it with, per new particle, the index of the same
/// particle in `init` (`None` for added ones).
pub fn enlarge(g: &Graph, seed: u64, init: &InitialConfig, add_a: &[Site], remove_b: &[Site]) -> (InitialConfig, Vec<Option<usize>>) {
    let streams = Streams::new(seed);
    let mut items: Vec<(InitParticle, Option<usize>)> = init
        .particles
        .iter()
        .enumerate()
        .filter(|(_, q)| !(q.kind == Kind::B && (remove_b.contains(&q.site) || add_a.contains(&q.site))))
        .map(|(i, q)| (*q, Some(i)))
        .collect();
    for &s in add_a {
        let q = InitParticle {
            site: s,
            kind: Kind::A,
            braveness: streams.uniform(StreamKey::new(s.0, Tag::AddedBraveness)),
            path: StreamKey::new(s.0, Tag::AddedPath),
        };
        items.push((q, None));
    }
    items.sort_by(|a, b| g.cmp_sites(a.0.site, b.0.site));
    let map = items.iter().map(|e| e.1).collect();
    (InitialConfig { particles: items.into_iter().map(|e| e.0).collect() }, map)
}

/// zeta <= zeta' pointwise at every sample time, A-particles live at least as
/// long and B-particles at most as long in the larger system.
pub fn check_monotonicity(
    g: &Graph,
    params: &SimParams,
    init: &InitialConfig,
    add_a: &[Site],
    remove_b: &[Site],
) -> Result<Vec<String>> {
    let mut p = params.clone();
    p.record_field = true;
    let (big, map) = enlarge(g, p.seed, init, add_a, remove_b);
    let a = run_crs(g, &p, init)?;
    let b = run_crs(g, &p, &big)?;
    let mut out = Vec::new();
    for (i, &t) in p.sample_times.iter().enumerate() {
        let (x, y) = (&a.fields[i], &b.fields[i]);
        if let Some(v) = x.joint_support(y).into_iter().find(|&v| x.get(v) > y.get(v)) {
            out.push(alloc::format!("field decreases at time {t}, site {}: {} > {}", g.label(v), x.get(v), y.get(v)));
            return Ok(out);
        }
    }
    let life = |f: &crate::engine::Fate| f.death.min(f.escape).min(p.horizon);
    for (j, src) in map.iter().enumerate() {
        let Some(i) = *src else { continue };
        let (l, l2) = (life(&a.fates[i]), life(&b.fates[j]));
        let bad = match init.particles[i].kind {
            Kind::A => l2 < l,
            Kind::B => l2 > l,
        };
        if bad {
            out.push(alloc::format!(
                "{:?}-particle from {} lives {l} and {l2} in the larger system",
                init.particles[i].kind,
                g.label(init.particles[i].site)
            ));
            return Ok(out);
        }
    }
    Ok(out)
}

/// Fold per-seed outcomes into a report, rejecting errors.
pub fn fold_report(check: Check, outcomes: impl IntoIterator<Item = (u64, Result<Vec<String>>)>) -> Result<CheckReport> {
    let mut r = CheckReport::new(check);
    for (seed, o) in outcomes {
        match o {
            Ok(v) => r.add(seed, &v),
            Err(e) => {
                let msg = e.to_string();
                bail!(Invariant, "seed {seed}: {msg}")
            }
        }
    }
    Ok(r)
}
