//! Path-swapping construction: A-particles carry numbers, become invisible
//! when they annihilate a B-particle (taking over its braveness and path),
//! and swap visibility, braveness and path remainder with lower-numbered
//! visible A-particles. Ignoring invisible particles gives the DLAS.

use alloc::vec::Vec;

use crate::engine::{table_reach, Configuration, Fate, InitialConfig, Kind, Meter, SimParams, Trace};
use crate::error::{bail, Error, Result};
use crate::graph::{Graph, Move, Site};
use crate::queue::EventQueue;
use crate::rng::{Path, Streams};
use crate::table::SiteTable;

#[derive(Debug, Clone, Default)]
struct Cell {
    visible: Vec<u32>,
    invisible: Vec<u32>,
    b: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
struct Part {
    kind: Kind,
    site: Site,
    visible: bool,
    present: bool,
    path: u32,
}

/// Where an A-particle is and whether it is visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AState {
    pub site: Option<Site>,
    pub visible: bool,
}

/// One entry of an A-particle's trajectory log: from `time` on, the particle
/// is at `site` with the given visibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub time: f64,
    pub site: Option<Site>,
    pub visible: bool,
}

/// Output of a path-swapping run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SwapTrace {
    /// Visible field observables (same layout as a CRS trace).
    pub trace: Trace,
    /// Particle index of each A-number, in number order.
    pub a_particles: Vec<u32>,
    /// Per sample time, the state of every A-particle in number order.
    pub a_states: Vec<Vec<AState>>,
    pub swaps: u64,
    pub annihilations: u64,
}

/// Resumable path-swapping simulation.
pub struct PathSwapSim<'a> {
    g: &'a Graph,
    root: Site,
    parts: Vec<Part>,
    paths: Vec<Path>,
    brave: Vec<f64>,
    carrier: Vec<u32>,
    cells: SiteTable<Cell>,
    queue: EventQueue,
    meter: Meter,
    fates: Vec<Fate>,
    a_particles: Vec<u32>,
    log: Option<Vec<Vec<Segment>>>,
    number: Vec<u32>,
    now: f64,
    events: u64,
    max_events: u64,
    swaps: u64,
    annihilations: u64,
}

const NONE: u32 = u32::MAX;

fn remove_from(v: &mut Vec<u32>, id: u32) -> Result<()> {
    match v.iter().position(|&x| x == id) {
        Some(i) => {
            v.swap_remove(i);
            Ok(())
        }
        None => Err(Error::Invariant(alloc::format!("particle {id} missing from its site"))),
    }
}

impl<'a> PathSwapSim<'a> {
    /// Set up the construction. With `log_trajectories`, every change of
    /// site or visibility of an A-particle is recorded.
    pub fn new(g: &'a Graph, params: &SimParams, init: &InitialConfig, log_trajectories: bool) -> Result<Self> {
        params.validate()?;
        init.check()?;
        if g.spec() != params.graph {
            bail!(InvalidParameter, "graph does not match parameters");
        }
        let n = init.particles.len();
        let streams = Streams::new(params.seed);
        let a_particles: Vec<u32> = init.a_indices().into_iter().map(|i| i as u32).collect();
        let mut number = alloc::vec![NONE; n];
        for (k, &i) in a_particles.iter().enumerate() {
            number[i as usize] = k as u32;
        }
        let mut sim = PathSwapSim {
            g,
            root: g.root(),
            parts: Vec::with_capacity(n),
            paths: Vec::with_capacity(n),
            brave: Vec::with_capacity(n),
            carrier: (0..n as u32).collect(),
            cells: SiteTable::new(g, table_reach(g, init)),
            queue: EventQueue::with_capacity(n),
            meter: Meter::new(n),
            fates: alloc::vec![Fate { death: f64::INFINITY, escape: f64::INFINITY, jumps: 0, site: None }; n],
            log: log_trajectories.then(|| alloc::vec![Vec::new(); a_particles.len()]),
            a_particles,
            number,
            now: 0.0,
            events: 0,
            max_events: params.max_events,
            swaps: 0,
            annihilations: 0,
        };
        for (i, q) in init.particles.iter().enumerate() {
            let id = i as u32;
            sim.parts.push(Part { kind: q.kind, site: q.site, visible: q.kind == Kind::A, present: true, path: id });
            let mut path = streams.path(q.path, params.rate(q.kind));
            let h = path.hold();
            sim.paths.push(path);
            sim.brave.push(q.braveness);
            let cell = sim.cells.get_mut(q.site);
            match q.kind {
                Kind::A => cell.visible.push(id),
                Kind::B => cell.b.push(id),
            }
            if q.kind == Kind::A {
                if q.site == sim.root {
                    sim.meter.enter(id, 0.0);
                }
                sim.record(id);
            }
            if h.is_finite() {
                sim.queue.push(id, h);
            }
        }
        Ok(sim)
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn next_time(&self) -> f64 {
        self.queue.peek().map_or(f64::INFINITY, |e| e.0)
    }

    /// Trajectory log of A-number `k` (requires logging).
    pub fn trajectory(&self, k: usize) -> Option<&[Segment]> {
        self.log.as_ref().map(|l| l[k].as_slice())
    }

    pub fn a_count(&self) -> usize {
        self.a_particles.len()
    }

    fn record(&mut self, id: u32) {
        if let Some(log) = &mut self.log {
            let p = self.parts[id as usize];
            let k = self.number[id as usize] as usize;
            let seg = Segment { time: self.now, site: p.present.then_some(p.site), visible: p.visible };
            let l = &mut log[k];
            if let Some(last) = l.last_mut() {
                if last.time == seg.time {
                    *last = seg;
                    if l.len() >= 2 && l[l.len() - 2].site == seg.site && l[l.len() - 2].visible == seg.visible {
                        l.pop();
                    }
                    return;
                }
                if last.site == seg.site && last.visible == seg.visible {
                    return;
                }
            }
            l.push(seg);
        }
    }

    fn set_visible(&mut self, id: u32, visible: bool) {
        let i = id as usize;
        if self.parts[i].visible == visible {
            return;
        }
        self.parts[i].visible = visible;
        if self.parts[i].site == self.root && self.parts[i].present {
            if visible {
                self.meter.enter(id, self.now);
            } else {
                self.meter.leave(id, self.now);
            }
        }
    }

    /// Exchange the paths (and with them bravenesses and remainders) of two particles.
    fn swap_paths(&mut self, x: u32, y: u32) {
        let px = self.parts[x as usize].path;
        let py = self.parts[y as usize].path;
        self.parts[x as usize].path = py;
        self.parts[y as usize].path = px;
        self.carrier[px as usize] = y;
        self.carrier[py as usize] = x;
    }

    fn bravest(&self, ids: impl Iterator<Item = u32>) -> Option<u32> {
        let mut best: Option<(f64, u32)> = None;
        for id in ids {
            let b = self.brave[self.parts[id as usize].path as usize];
            let better = match best {
                None => true,
                Some((bb, bid)) => b > bb || (b == bb && id < bid),
            };
            if better {
                best = Some((b, id));
            }
        }
        best.map(|e| e.1)
    }

    /// Visible `a` has just arrived at `x`.
    fn visible_arrives(&mut self, mut a: u32, x: Site) -> Result<()> {
        loop {
            let cell = self.cells.get(x).cloned().unwrap_or_default();
            let candidates = cell.b.iter().copied().chain(cell.invisible.iter().copied().filter(|&j| j > a));
            let Some(p) = self.bravest(candidates) else {
                self.cells.get_mut(x).visible.push(a);
                self.set_visible(a, true);
                self.record(a);
                return Ok(());
            };
            if self.parts[p as usize].kind == Kind::B {
                // Annihilation: the A retires its own path and takes the B's.
                let old = self.parts[a as usize].path;
                self.queue.remove(old);
                self.parts[a as usize].path = NONE;
                self.carrier[old as usize] = NONE;
                let pb = self.parts[p as usize].path;
                self.parts[a as usize].path = pb;
                self.carrier[pb as usize] = a;
                remove_from(&mut self.cells.get_mut(x).b, p)?;
                self.parts[p as usize].present = false;
                self.parts[p as usize].path = NONE;
                self.fates[p as usize].death = self.now;
                self.cells.get_mut(x).invisible.push(a);
                self.set_visible(a, false);
                self.record(a);
                self.annihilations += 1;
                return Ok(());
            }
            // Swap with a higher-numbered invisible particle.
            remove_from(&mut self.cells.get_mut(x).invisible, p)?;
            self.swap_paths(a, p);
            self.cells.get_mut(x).invisible.push(a);
            self.set_visible(a, false);
            self.record(a);
            self.set_visible(p, true);
            self.swaps += 1;
            a = p;
        }
    }

    /// Invisible `a` has just arrived at (or become invisible at) `x`.
    fn invisible_arrives(&mut self, mut a: u32, x: Site) -> Result<()> {
        loop {
            let cell = self.cells.get(x).cloned().unwrap_or_default();
            let Some(j) = self.bravest(cell.visible.iter().copied().filter(|&j| j < a)) else {
                self.cells.get_mut(x).invisible.push(a);
                self.set_visible(a, false);
                self.record(a);
                return Ok(());
            };
            remove_from(&mut self.cells.get_mut(x).visible, j)?;
            self.swap_paths(a, j);
            self.cells.get_mut(x).visible.push(a);
            self.set_visible(a, true);
            self.record(a);
            self.set_visible(j, false);
            self.swaps += 1;
            a = j;
        }
    }

    fn b_arrives(&mut self, b: u32, x: Site) -> Result<()> {
        let cell = self.cells.get(x).cloned().unwrap_or_default();
        let Some(a) = self.bravest(cell.visible.iter().copied()) else {
            self.cells.get_mut(x).b.push(b);
            return Ok(());
        };
        remove_from(&mut self.cells.get_mut(x).visible, a)?;
        let old = self.parts[a as usize].path;
        self.queue.remove(old);
        self.carrier[old as usize] = NONE;
        let pb = self.parts[b as usize].path;
        self.parts[a as usize].path = pb;
        self.carrier[pb as usize] = a;
        self.parts[b as usize].present = false;
        self.parts[b as usize].path = NONE;
        self.fates[b as usize].death = self.now;
        self.annihilations += 1;
        self.set_visible(a, false);
        self.invisible_arrives(a, x)
    }

    /// Process the next event. Returns its time, or `None` if nothing moves.
    pub fn step(&mut self) -> Result<Option<f64>> {
        let Some((t, path)) = self.queue.pop() else {
            return Ok(None);
        };
        self.events += 1;
        if self.events > self.max_events {
            return Err(Error::EventBudget(self.max_events));
        }
        self.meter.advance(t);
        self.now = t;
        let c = self.carrier[path as usize];
        if c == NONE {
            bail!(Invariant, "path {path} scheduled without a carrier");
        }
        let ci = c as usize;
        let from = self.parts[ci].site;
        let mv = self.g.sample_step(from, &mut self.paths[path as usize])?;
        self.fates[ci].jumps += 1;
        let kind = self.parts[ci].kind;
        let visible = self.parts[ci].visible;
        {
            let cell = self.cells.get_mut(from);
            match (kind, visible) {
                (Kind::B, _) => remove_from(&mut cell.b, c)?,
                (Kind::A, true) => remove_from(&mut cell.visible, c)?,
                (Kind::A, false) => remove_from(&mut cell.invisible, c)?,
            }
        }
        if kind == Kind::A && visible && from == self.root {
            self.meter.leave(c, t);
        }
        match mv {
            Move::Escaped => {
                self.parts[ci].present = false;
                self.parts[ci].path = NONE;
                self.carrier[path as usize] = NONE;
                self.fates[ci].escape = t;
                if kind == Kind::A {
                    self.record(c);
                }
            }
            Move::To(x) => {
                self.parts[ci].site = x;
                let h = self.paths[path as usize].hold();
                self.queue.push(path, t + h);
                match (kind, visible) {
                    (Kind::B, _) => self.b_arrives(c, x)?,
                    (Kind::A, true) => {
                        // Arrival is a visit even if the particle turns invisible at once.
                        if x == self.root {
                            self.meter.touch(c, t);
                        }
                        self.parts[ci].visible = false;
                        self.visible_arrives(c, x)?
                    }
                    (Kind::A, false) => self.invisible_arrives(c, x)?,
                }
            }
        }
        Ok(Some(t))
    }

    /// Visible field.
    pub fn field(&self) -> Configuration {
        Configuration::from_counts(
            self.parts
                .iter()
                .filter(|p| p.present && (p.kind == Kind::B || p.visible))
                .map(|p| (p.site, p.kind.sign())),
        )
    }

    pub fn a_states(&self) -> Vec<AState> {
        self.a_particles
            .iter()
            .map(|&i| {
                let p = self.parts[i as usize];
                AState { site: p.present.then_some(p.site), visible: p.visible }
            })
            .collect()
    }

    pub fn root_count(&mut self, t: f64) -> (u32, f64) {
        self.meter.advance(t);
        (self.meter.count(), self.meter.v())
    }

    /// Process all events up to time `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        while self.next_time() <= t {
            self.step()?;
        }
        if t.is_finite() && t > self.now {
            self.now = t;
        }
        self.meter.advance(t);
        Ok(())
    }
}

/// Run the path-swapping construction up to `params.horizon` (finite).
pub fn run_path_swapping(g: &Graph, params: &SimParams, init: &InitialConfig) -> Result<SwapTrace> {
    if !params.horizon.is_finite() {
        bail!(InvalidParameter, "path swapping needs a finite horizon");
    }
    let mut sim = PathSwapSim::new(g, params, init, false)?;
    let mut out = SwapTrace { a_particles: sim.a_particles.clone(), ..Default::default() };
    out.trace.seed = params.seed;
    out.trace.sample_times = params.sample_times.clone();
    for &s in &params.sample_times {
        while sim.next_time() < s {
            sim.step()?;
        }
        let (n, v) = sim.root_count(s);
        out.trace.n_root.push(n);
        out.trace.v_root.push(v);
        if params.record_field {
            out.trace.fields.push(sim.field());
        }
        out.a_states.push(sim.a_states());
    }
    sim.advance_to(params.horizon)?;
    out.trace.visits = sim.meter.finish(params.horizon);
    out.trace.v_horizon = sim.meter.v();
    out.trace.events = sim.events;
    out.trace.end_time = params.horizon;
    for (f, p) in sim.fates.iter_mut().zip(&sim.parts) {
        f.site = p.present.then_some(p.site);
    }
    out.trace.fates = sim.fates;
    out.swaps = sim.swaps;
    out.annihilations = sim.annihilations;
    Ok(out)
}
