//! Sequential release (stationary B-particles): A-particles are released one
//! at a time in number order; each walks until it lands on a surviving
//! B-particle (both are destroyed), its own clock reaches the horizon, it
//! escapes, or it exceeds the step cap.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::path_swap::{PathSwapSim, Segment};
use crate::engine::{InitialConfig, Kind, SimParams};
use crate::error::{bail, Error, Result};
use crate::graph::{Graph, Move, Site};
use crate::rng::Streams;

pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

/// How far (as a multiple of the horizon) the path-swapping run is extended
/// while waiting for further visible pieces.
pub const EXTENSION: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeqFate {
    /// Destroyed together with a B-particle at this site and own time.
    HitB { site: Site, time: f64 },
    /// Own clock reached the horizon.
    TimeUp,
    Escaped { time: f64 },
    /// Step cap exceeded; the particle is frozen where it stands.
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqParticle {
    /// Index into the initial configuration.
    pub particle: u32,
    pub visited_root: bool,
    pub first_visit: f64,
    /// Own time spent at the root before the horizon.
    pub occupancy: f64,
    pub fate: SeqFate,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeqTrace {
    pub particles: Vec<SeqParticle>,
    /// Sum of root occupations.
    pub v: f64,
    pub censored: usize,
}

fn b_landscape(init: &InitialConfig) -> BTreeMap<Site, u32> {
    let mut m = BTreeMap::new();
    for q in init.particles.iter().filter(|q| q.kind == Kind::B) {
        *m.entry(q.site).or_insert(0) += 1;
    }
    m
}

fn kill_b(b: &mut BTreeMap<Site, u32>, s: Site) -> bool {
    match b.get_mut(&s) {
        Some(c) if *c > 0 => {
            *c -= 1;
            true
        }
        _ => false,
    }
}

/// Sequential process with each A following its own path stream, released
/// in canonical order.
pub fn run_sequential(g: &Graph, params: &SimParams, init: &InitialConfig, step_cap: u64) -> Result<SeqTrace> {
    run_sequential_in_order(g, params, init, &init.a_indices(), step_cap)
}

/// Sequential process releasing the A-particles `order` (indices into `init`) in that order.
pub fn run_sequential_in_order(
    g: &Graph,
    params: &SimParams,
    init: &InitialConfig,
    order: &[usize],
    step_cap: u64,
) -> Result<SeqTrace> {
    params.validate()?;
    if params.lambda_b != 0.0 {
        bail!(InvalidParameter, "sequential release needs stationary B-particles");
    }
    if !(params.lambda_a > 0.0) {
        bail!(InvalidParameter, "sequential release needs lambda_a > 0");
    }
    let streams = Streams::new(params.seed);
    let root = g.root();
    let mut bs = b_landscape(init);
    let mut out = SeqTrace::default();
    for &i in order {
        let Some(&q) = init.particles.get(i).filter(|q| q.kind == Kind::A) else {
            bail!(InvalidParameter, "order entry {i} is not an A-particle");
        };
        let mut path = streams.path(q.path, params.lambda_a);
        let mut site = q.site;
        let mut t = 0.0;
        let mut rec = SeqParticle {
            particle: i as u32,
            visited_root: site == root,
            first_visit: if site == root { 0.0 } else { f64::NAN },
            occupancy: 0.0,
            fate: SeqFate::TimeUp,
        };
        let mut steps = 0u64;
        loop {
            let h = path.hold();
            if t + h >= params.horizon {
                if site == root {
                    rec.occupancy += params.horizon - t;
                }
                rec.fate = SeqFate::TimeUp;
                break;
            }
            if site == root {
                rec.occupancy += h;
            }
            t += h;
            steps += 1;
            if steps > step_cap {
                rec.fate = SeqFate::Censored;
                out.censored += 1;
                break;
            }
            match g.sample_step(site, &mut path)? {
                Move::Escaped => {
                    rec.fate = SeqFate::Escaped { time: t };
                    break;
                }
                Move::To(s) => {
                    site = s;
                    if s == root && !rec.visited_root {
                        rec.visited_root = true;
                        rec.first_visit = t;
                    }
                    if kill_b(&mut bs, s) {
                        rec.fate = SeqFate::HitB { site: s, time: t };
                        break;
                    }
                }
            }
        }
        out.v += rec.occupancy;
        out.particles.push(rec);
    }
    Ok(out)
}

/// Outcome of the sequential dominance construction for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    /// Root occupation of the DLAS up to the horizon.
    pub v: f64,
    /// Root occupation of the sequential process built from visible pieces.
    pub v_seq: f64,
    /// Number of visible pieces used across all particles.
    pub chunks: usize,
    /// Copies stopped by a surviving B inside a chunk after real time t.
    pub late_hits: usize,
    /// Copies still waiting for their next piece when the run reached
    /// `EXTENSION * t`; they keep what they have.
    pub censored: usize,
    /// Violations of the structural claims, if any.
    pub violations: Vec<String>,
}

/// Build the sequential process a'_1, a'_2, ... from the visible pieces of
/// the path-swapping trajectories and compare root occupations.
///
/// a'_n follows the concatenated visible pieces of a_n (in own time). It
/// stops on reaching a B-particle that none of a'_1..a'_{n-1} destroyed, when
/// its own clock reaches the horizon, or when a_n has no further pieces.
/// The path-swapping run is extended past the horizon as needed.
pub fn sequential_dominance(g: &Graph, params: &SimParams, init: &InitialConfig) -> Result<DominanceReport> {
    params.validate()?;
    if params.lambda_b != 0.0 {
        bail!(InvalidParameter, "sequential dominance needs stationary B-particles");
    }
    let t = params.horizon;
    if !t.is_finite() {
        bail!(InvalidParameter, "sequential dominance needs a finite horizon");
    }
    let root = g.root();
    let mut run_params = params.clone();
    run_params.horizon = f64::INFINITY;
    run_params.sample_times.clear();
    let mut sim = PathSwapSim::new(g, &run_params, init, true)?;
    sim.advance_to(t)?;
    let (_, v) = sim.root_count(t);

    let mut bs = b_landscape(init);
    let mut violations = Vec::new();
    let mut v_seq = 0.0;
    let mut chunks = 0usize;
    let mut late_hits = 0usize;
    let mut censored = 0usize;
    let cap = t * EXTENSION;
    let budget = params.max_events;

    for k in 0..sim.a_count() {
        // Walk the log of a_k; `own` is the own time used so far.
        let mut own = 0.0;
        let mut i = 0usize;
        let mut in_piece = false;
        loop {
            // Make sure segment i exists and, if it is the last one, that the
            // simulation has run far enough to decide what we need.
            let log = sim.trajectory(k).ok_or_else(|| Error::Invariant("trajectory log missing".into()))?;
            let Some(&seg) = log.get(i) else {
                // a_k is invisible at a chunk end; wait for it to reappear.
                if sim.next_time().is_infinite() || sim.events() > budget {
                    violations.push(alloc::format!("a_{} never becomes visible again", k + 1));
                    break;
                }
                sim.step()?;
                continue;
            };
            let next: Option<Segment> = log.get(i + 1).copied();
            let Some(site) = seg.site else {
                // Escaped while visible.
                break;
            };
            if !seg.visible {
                // Chunk end at `site`.
                if in_piece {
                    in_piece = false;
                    if kill_b(&mut bs, site) {
                        if log[i + 1..].iter().any(|s| s.visible && s.time < t) {
                            violations.push(alloc::format!("a_{} is visible again before t after its sequential copy died", k + 1));
                        }
                        break;
                    }
                }
                match next {
                    None => {
                        if sim.next_time() > cap {
                            censored += 1;
                            break;
                        }
                        if sim.next_time().is_infinite() || sim.events() > budget {
                            violations.push(alloc::format!("a_{} has no further chunk after an annihilated B", k + 1));
                            break;
                        }
                        sim.step()?;
                    }
                    Some(n) => {
                        if n.site != Some(site) {
                            violations.push(alloc::format!("a_{} reappears at a different site", k + 1));
                            break;
                        }
                        i += 1;
                    }
                }
                continue;
            }
            // Visible segment at `site` starting at real time seg.time.
            if !in_piece {
                in_piece = true;
                chunks += 1;
            } else if bs.get(&site).is_some_and(|&c| c > 0) {
                // The sequential copy stops on any surviving B. Inside a chunk
                // this can only happen after real time t.
                kill_b(&mut bs, site);
                if seg.time <= t {
                    violations.push(alloc::format!("a_{} meets a surviving B inside a chunk at time {}", k + 1, seg.time));
                } else {
                    late_hits += 1;
                }
                break;
            }
            let remaining = t - own;
            let dur = match next {
                Some(n) => n.time - seg.time,
                // Open segment: run until it closes or the own clock runs out.
                None if sim.now() >= seg.time + remaining || sim.next_time().is_infinite() => remaining,
                None => {
                    sim.step()?;
                    continue;
                }
            };
            if dur >= remaining {
                if site == root {
                    v_seq += remaining;
                }
                break;
            }
            if site == root {
                v_seq += dur;
            }
            own += dur;
            i += 1;
        }
    }
    if !(v <= v_seq + 1e-9 * v_seq.max(1.0)) {
        violations.push(alloc::format!("V = {v} exceeds sequential V' = {v_seq}"));
    }
    Ok(DominanceReport { v, v_seq, chunks, late_hits, censored, violations })
}

/// One run of the one-sided sequential process used for E U+.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HalfLineRun {
    /// `u[k]`: root occupation of the A started at site k (0 for a B).
    pub u: Vec<f64>,
    pub total: f64,
    /// A-particles released.
    pub released: usize,
    pub censored: usize,
    pub steps: u64,
}

/// Sequential process on the line with initial particles on the sites
/// `0, 1, 2, ...`, released left to right and run without a time limit. Only
/// the A-particles on `0..=k_max` are released; types further right are
/// drawn as walkers reach them, so every released walker sees the full
/// B-landscape.
///
/// Nothing ever sits on the negative sites, so an excursion below the root
/// returns to it without touching anything; such excursions are skipped and
/// count only as a fresh visit to the root. Holding times away from the root
/// are not drawn. Both shortcuts leave the law of the root occupations intact.
pub fn half_line_sequential(p: f64, k_max: u64, seed: u64, step_cap: u64) -> Result<HalfLineRun> {
    if !(0.0..=1.0).contains(&p) {
        bail!(InvalidParameter, "p must lie in [0, 1], got {p}");
    }
    let params = SimParams::new(crate::graph::GraphSpec::Line, p, f64::INFINITY, crate::engine::Region::Segment(0, k_max as i64), seed);
    let (g, init) = crate::engine::init_configuration(&params)?;
    let streams = Streams::new(seed);
    let n = k_max as usize + 1;
    let mut b: Vec<bool> = init.particles.iter().map(|q| q.kind == Kind::B).collect();
    let is_b = |x: i64| -> Result<bool> {
        let s = g.site_at(&[x])?;
        Ok(streams.uniform(crate::rng::StreamKey::new(s.0, crate::rng::Tag::Type)) >= p)
    };
    let mut out = HalfLineRun { u: alloc::vec![0.0; n], ..Default::default() };
    for (k, q) in init.particles.iter().enumerate() {
        if q.kind != Kind::A {
            continue;
        }
        debug_assert_eq!(g.coords(q.site)[0], k as i64);
        out.released += 1;
        let mut path = streams.path(q.path, 1.0);
        let mut x = k as i64;
        let mut steps = 0u64;
        let mut occ = 0.0;
        loop {
            if x == 0 {
                occ += path.hold();
            }
            steps += 1;
            if steps > step_cap {
                out.censored += 1;
                break;
            }
            let right = path.choice(2) == 1;
            if x == 0 && !right {
                continue;
            }
            x += if right { 1 } else { -1 };
            while b.len() <= x as usize {
                b.push(is_b(b.len() as i64)?);
            }
            if let Some(hit) = b.get_mut(x as usize).filter(|h| **h) {
                *hit = false;
                break;
            }
        }
        out.steps += steps;
        out.u[k] = occ;
        out.total += occ;
    }
    Ok(out)
}
