//! Polarized construction (stationary B-particles): every particle carries a
//! polarity; A-particles pause while invisible and trade visibility instead
//! of paths.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::engine::{run_crs_with_arrivals, Arrivals, InitialConfig, Kind, Meter, SimParams};
use crate::error::{bail, Result};
use crate::graph::{Graph, Move, Site};
use crate::queue::EventQueue;
use crate::rng::{mix64, Path, StreamKey, Streams, Tag};

/// Polarity of each particle (`true` = positive), drawn from streams keyed
/// by the particle's path key.
pub fn draw_polarity(params: &SimParams, init: &InitialConfig, plus_prob: f64) -> Vec<bool> {
    let streams = Streams::new(params.seed);
    init.particles
        .iter()
        .map(|q| {
            let key = StreamKey::new(q.path.site ^ mix64(q.path.tag as u64), Tag::Polarity);
            streams.uniform(key) < plus_prob
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarTrace {
    /// Root occupation of the visible particles up to the horizon.
    pub v: f64,
    /// Root occupations of the positive-only and negative-only DLAS.
    pub v_plus: f64,
    pub v_minus: f64,
    /// Own (visible) time of each A-particle, indexed like the initial configuration.
    pub own_time: Vec<f64>,
    /// Lifetime of each A-particle in the DLAS of its own polarity, capped at the horizon.
    pub polar_lifetime: Vec<f64>,
    pub events: u64,
    pub violations: Vec<String>,
}

impl PolarTrace {
    pub fn subadditive(&self) -> bool {
        self.v <= self.v_plus + self.v_minus + 1e-9 * (self.v_plus + self.v_minus).max(1.0)
    }
}

struct Sub {
    v: f64,
    arrivals: BTreeMap<(Site, u32), f64>,
    lifetime: BTreeMap<u32, f64>,
}

fn sub_run(g: &Graph, params: &SimParams, init: &InitialConfig, polarity: &[bool], sign: bool, watch: &BTreeSet<Site>) -> Result<Sub> {
    let idx: Vec<usize> = (0..init.particles.len()).filter(|&i| polarity[i] == sign).collect();
    let sub = InitialConfig { particles: idx.iter().map(|&i| init.particles[i]).collect() };
    let mut p = params.clone();
    p.sample_times.clear();
    p.record_field = false;
    p.window = None;
    let (trace, arr): (_, Arrivals) = run_crs_with_arrivals(g, &p, &sub, watch.clone())?;
    let arrivals = arr.into_iter().map(|((s, j), t)| ((s, idx[j as usize] as u32), t)).collect();
    let lifetime = trace
        .fates
        .iter()
        .enumerate()
        .filter(|(j, _)| sub.particles[*j].kind == Kind::A)
        .map(|(j, f)| (idx[j] as u32, f.death.min(f.escape).min(params.horizon)))
        .collect();
    Ok(Sub { v: trace.v_horizon, arrivals, lifetime })
}

/// Run the polarized construction together with the positive-only and
/// negative-only DLAS on the same paths, up to a finite horizon.
pub fn run_polarized(g: &Graph, params: &SimParams, init: &InitialConfig, polarity: &[bool]) -> Result<PolarTrace> {
    params.validate()?;
    if params.lambda_b != 0.0 {
        bail!(InvalidParameter, "the polarized construction needs stationary B-particles");
    }
    if !params.horizon.is_finite() {
        bail!(InvalidParameter, "the polarized construction needs a finite horizon");
    }
    if polarity.len() != init.particles.len() {
        bail!(InvalidParameter, "one polarity per particle required");
    }
    let horizon = params.horizon;
    let b_pol: BTreeMap<Site, bool> =
        init.particles.iter().zip(polarity).filter(|(q, _)| q.kind == Kind::B).map(|(q, &s)| (q.site, s)).collect();
    let watch: BTreeSet<Site> = b_pol.keys().copied().collect();
    let plus = sub_run(g, params, init, polarity, true, &watch)?;
    let minus = sub_run(g, params, init, polarity, false, &watch)?;

    let n = init.particles.len();
    let streams = Streams::new(params.seed);
    let root = g.root();
    let mut site: Vec<Site> = init.particles.iter().map(|q| q.site).collect();
    let mut visible = alloc::vec![true; n];
    let mut since = alloc::vec![0.0f64; n];
    let mut own_time = alloc::vec![0.0f64; n];
    let mut paths: Vec<Option<Path>> = init
        .particles
        .iter()
        .map(|q| (q.kind == Kind::A).then(|| streams.path(q.path, params.lambda_a)))
        .collect();
    let mut b_alive: BTreeSet<Site> = watch.clone();
    let mut invisible: BTreeMap<Site, u32> = BTreeMap::new();
    let mut queue = EventQueue::with_capacity(n);
    let mut meter = Meter::new(n);
    let mut violations = Vec::new();
    for i in init.a_indices() {
        if site[i] == root {
            meter.enter(i as u32, 0.0);
        }
        let h = paths[i].as_mut().map_or(f64::INFINITY, |p| p.hold());
        if h.is_finite() {
            queue.push(i as u32, h);
        }
    }
    let first = |s: bool, x: Site, a: u32| {
        let m = if s { &plus.arrivals } else { &minus.arrivals };
        m.get(&(x, a)).copied().unwrap_or(f64::INFINITY)
    };
    let mut events = 0u64;
    while let Some((t, id)) = queue.peek() {
        if t > horizon {
            break;
        }
        queue.pop();
        events += 1;
        if events > params.max_events {
            return Err(crate::Error::EventBudget(params.max_events));
        }
        meter.advance(t);
        let a = id as usize;
        let from = site[a];
        if from == root {
            meter.leave(id, t);
        }
        let mv = g.sample_step(from, paths[a].as_mut().expect("A-particle path"))?;
        let x = match mv {
            Move::Escaped => {
                own_time[a] += t - since[a];
                visible[a] = false;
                continue;
            }
            Move::To(x) => x,
        };
        site[a] = x;
        if x == root {
            meter.touch(id, t);
        }
        // Which A (if any) ends up invisible at x, and which is released.
        let (hide, release) = if b_alive.remove(&x) {
            (Some(id), None)
        } else if let Some(&b) = invisible.get(&x) {
            let (pa, pb) = (polarity[a], polarity[b as usize]);
            let a_hides = if pa != pb {
                pa == b_pol[&x]
            } else {
                first(pa, x, id) < first(pa, x, b)
            };
            if a_hides {
                (Some(id), Some(b))
            } else {
                (None, None)
            }
        } else {
            if watch.contains(&x) {
                violations.push(alloc::format!("site {:?} lost both its B and its invisible A", x));
            }
            (None, None)
        };
        if hide == Some(id) {
            visible[a] = false;
            own_time[a] += t - since[a];
            invisible.insert(x, id);
        } else {
            if x == root {
                meter.enter(id, t);
            }
            let h = paths[a].as_mut().expect("A-particle path").hold();
            queue.push(id, t + h);
        }
        if let Some(b) = release {
            let bi = b as usize;
            visible[bi] = true;
            since[bi] = t;
            if x == root {
                meter.enter(b, t);
            }
            let h = paths[bi].as_mut().expect("A-particle path").hold();
            queue.push(b, t + h);
        }
    }
    meter.advance(horizon);
    let v = meter.v();
    let mut polar_lifetime = alloc::vec![f64::NAN; n];
    for i in init.a_indices() {
        if visible[i] {
            own_time[i] += horizon - since[i];
        }
        let life = if polarity[i] { plus.lifetime[&(i as u32)] } else { minus.lifetime[&(i as u32)] };
        polar_lifetime[i] = life;
        if own_time[i] > life + 1e-9 * life.max(1.0) {
            violations.push(alloc::format!(
                "particle {i} is visible for {} but lives {} in its own polarity",
                own_time[i],
                life
            ));
        }
    }
    let out = PolarTrace { v, v_plus: plus.v, v_minus: minus.v, own_time, polar_lifetime, events, violations };
    Ok(out)
}
