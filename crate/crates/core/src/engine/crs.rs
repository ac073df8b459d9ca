//! Construction with bravenesses: an arriving particle annihilates with the
//! bravest particle of the opposite type at its new site.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::{in_window, table_reach, window_sites, Configuration, Fate, InitialConfig, Kind, Meter, SimParams, Trace};
use crate::error::{bail, Error, Result};
use crate::graph::{Graph, Move, Site};
use crate::queue::EventQueue;
use crate::rng::{Path, Streams};
use crate::table::SiteTable;

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Cell {
    head: u32,
}

impl Default for Cell {
    fn default() -> Self {
        Cell { head: NIL }
    }
}

#[derive(Clone, Copy)]
struct Part {
    site: Site,
    kind: Kind,
    brave: f64,
    next: u32,
    prev: u32,
    present: bool,
}

struct Crs<'a> {
    g: &'a Graph,
    root: Site,
    parts: Vec<Part>,
    paths: Vec<Path>,
    cells: SiteTable<Cell>,
    queue: EventQueue,
    meter: Meter,
    fates: Vec<Fate>,
    arrivals: Option<(BTreeSet<Site>, BTreeMap<(Site, u32), f64>)>,
}

impl Crs<'_> {
    fn link(&mut self, id: u32) {
        let s = self.parts[id as usize].site;
        let cell = self.cells.get_mut(s);
        let old = cell.head;
        cell.head = id;
        self.parts[id as usize].next = old;
        self.parts[id as usize].prev = NIL;
        if old != NIL {
            self.parts[old as usize].prev = id;
        }
    }

    fn unlink(&mut self, id: u32) {
        let Part { site, next, prev, .. } = self.parts[id as usize];
        if prev == NIL {
            self.cells.get_mut(site).head = next;
        } else {
            self.parts[prev as usize].next = next;
        }
        if next != NIL {
            self.parts[next as usize].prev = prev;
        }
    }

    /// Bravest particle at `s` if the site holds the type opposite to `kind`.
    fn opponent(&self, s: Site, kind: Kind) -> Option<u32> {
        let mut cur = self.cells.get(s).map_or(NIL, |c| c.head);
        if cur == NIL || self.parts[cur as usize].kind == kind {
            return None;
        }
        let mut best = cur;
        while cur != NIL {
            let p = &self.parts[cur as usize];
            let b = &self.parts[best as usize];
            if p.brave > b.brave || (p.brave == b.brave && cur < best) {
                best = cur;
            }
            cur = p.next;
        }
        Some(best)
    }

    fn jump(&mut self, id: u32, t: f64) -> Result<()> {
        let i = id as usize;
        let from = self.parts[i].site;
        let kind = self.parts[i].kind;
        let mv = self.g.sample_step(from, &mut self.paths[i])?;
        self.fates[i].jumps += 1;
        self.unlink(id);
        if kind == Kind::A && from == self.root {
            self.meter.leave(id, t);
        }
        match mv {
            Move::Escaped => {
                self.parts[i].present = false;
                self.fates[i].escape = t;
            }
            Move::To(s) => {
                self.parts[i].site = s;
                if let Some((watch, log)) = &mut self.arrivals {
                    if kind == Kind::A && watch.contains(&s) {
                        log.entry((s, id)).or_insert(t);
                    }
                }
                if let Some(v) = self.opponent(s, kind) {
                    self.unlink(v);
                    if self.queue.remove(v).is_none() && self.paths[v as usize].rate() > 0.0 {
                        bail!(Invariant, "live particle {v} missing from the event queue");
                    }
                    if s == self.root {
                        if kind == Kind::A {
                            self.meter.touch(id, t);
                        } else {
                            self.meter.leave(v, t);
                        }
                    }
                    for x in [i, v as usize] {
                        self.parts[x].present = false;
                        self.fates[x].death = t;
                    }
                } else {
                    self.link(id);
                    if kind == Kind::A && s == self.root {
                        self.meter.enter(id, t);
                    }
                    let h = self.paths[i].hold();
                    if !self.queue.push(id, t + h) {
                        bail!(Invariant, "particle {id} scheduled twice");
                    }
                }
            }
        }
        Ok(())
    }

    fn field(&self) -> Configuration {
        Configuration::from_counts(self.parts.iter().filter(|p| p.present).map(|p| (p.site, p.kind.sign())))
    }
}

/// Run the DLAS from `init` up to `params.horizon`.
pub fn run_crs(g: &Graph, params: &SimParams, init: &InitialConfig) -> Result<Trace> {
    run(g, params, init, None).map(|r| r.0)
}

/// First arrival time of each A-particle (by index into `init`) at each
/// watched site, alongside the trace.
pub type Arrivals = BTreeMap<(Site, u32), f64>;

pub fn run_crs_with_arrivals(
    g: &Graph,
    params: &SimParams,
    init: &InitialConfig,
    watch: BTreeSet<Site>,
) -> Result<(Trace, Arrivals)> {
    run(g, params, init, Some(watch))
}

fn run(g: &Graph, params: &SimParams, init: &InitialConfig, watch: Option<BTreeSet<Site>>) -> Result<(Trace, Arrivals)> {
    params.validate()?;
    init.check()?;
    if g.spec() != params.graph {
        bail!(InvalidParameter, "graph does not match parameters");
    }
    let n = init.particles.len();
    let streams = Streams::new(params.seed);
    let window = window_sites(g, params.window)?;
    let mut sim = Crs {
        g,
        root: g.root(),
        parts: Vec::with_capacity(n),
        paths: Vec::with_capacity(n),
        cells: SiteTable::new(g, table_reach(g, init)),
        queue: EventQueue::with_capacity(n),
        meter: Meter::new(n),
        fates: alloc::vec![Fate { death: f64::INFINITY, escape: f64::INFINITY, jumps: 0, site: None }; n],
        arrivals: watch.map(|w| (w, BTreeMap::new())),
    };
    for (i, q) in init.particles.iter().enumerate() {
        let id = i as u32;
        sim.parts.push(Part { site: q.site, kind: q.kind, brave: q.braveness, next: NIL, prev: NIL, present: true });
        let mut path = streams.path(q.path, params.rate(q.kind));
        let h = path.hold();
        sim.paths.push(path);
        sim.link(id);
        if q.kind == Kind::A && q.site == sim.root {
            sim.meter.enter(id, 0.0);
        }
        if h.is_finite() {
            sim.queue.push(id, h);
        }
    }

    let mut trace = Trace { seed: params.seed, sample_times: params.sample_times.clone(), ..Default::default() };
    let mut si = 0;
    let mut events = 0u64;
    let mut last = 0.0;
    loop {
        let tnext = sim.queue.peek().map_or(f64::INFINITY, |e| e.0);
        while si < params.sample_times.len() && params.sample_times[si] < tnext {
            let s = params.sample_times[si];
            sim.meter.advance(s);
            trace.n_root.push(sim.meter.count());
            trace.v_root.push(sim.meter.v());
            if let Some((w, size)) = window {
                let c = sim.parts.iter().filter(|p| p.present && p.kind == Kind::A && in_window(g, p.site, w)).count();
                trace.window_density.push(c as f64 / size);
            }
            if params.record_field {
                trace.fields.push(sim.field());
            }
            si += 1;
        }
        if tnext > params.horizon || tnext == f64::INFINITY {
            break;
        }
        let (t, id) = sim.queue.pop().ok_or_else(|| Error::Invariant("empty queue".into()))?;
        events += 1;
        if events > params.max_events {
            return Err(Error::EventBudget(params.max_events));
        }
        sim.jump(id, t)?;
        last = t;
    }
    let end = if params.horizon.is_finite() { params.horizon } else { last };
    trace.visits = sim.meter.finish(end);
    trace.v_horizon = sim.meter.v();
    trace.events = events;
    trace.end_time = end;
    for (f, p) in sim.fates.iter_mut().zip(&sim.parts) {
        f.site = p.present.then_some(p.site);
    }
    trace.fates = sim.fates;
    Ok((trace, sim.arrivals.map(|a| a.1).unwrap_or_default()))
}
