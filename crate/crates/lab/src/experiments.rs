//! The headline experiments. Each one produces `replicas.csv`,
//! `summary.csv` and `fit.json` in memory; the caller writes them and the
//! manifest.

use anyhow::{bail, ensure, Result};
use dlas_core::analysis::{expected_uplus, fit_log, fit_power, uplus_tail_bound, Fit, MeanStderr};
use dlas_core::couplings::{half_line_sequential, DEFAULT_STEP_CAP};
use dlas_core::engine::{init_configuration, run_crs, Kind, Region, SimParams};
use dlas_core::graph::truncation_radius;
use dlas_core::rng::split;
use dlas_core::tree::{w_mean_limit, w_means};
use dlas_core::GraphSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::{num, FileSet, Table};
use crate::pool::run_indexed;

/// Truncation budget for the exact tree means.
pub const TREE_EPS: f64 = 1e-9;
/// Default largest p for the subcritical Monte Carlo.
pub const MC_P_MAX: f64 = 0.45;
/// Largest tree used for Monte Carlo of V_t.
pub const MAX_TREE_SITES: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `power` (log y on log x) or `log` (y on log x).
    pub form: String,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl FitResult {
    fn from_fit(form: &str, xs: &[f64], f: Fit) -> Self {
        FitResult {
            form: form.to_string(),
            slope: f.slope,
            intercept: f.intercept,
            stderr: f.slope_stderr,
            r_squared: f.r2.clamp(0.0, 1.0),
            points: f.n,
            x_min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            x_max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn power(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Ok(Self::from_fit("power", xs, fit_power(xs, ys)?))
    }

    pub fn log(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Ok(Self::from_fit("log", xs, fit_log(xs, ys)?))
    }
}

/// What an experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: FileSet,
    pub seeds: Vec<u64>,
    pub censored: u64,
    /// Warnings worth a look (weak statistics, censoring, disagreements).
    pub flags: Vec<String>,
    pub fit: serde_json::Value,
}

impl Outcome {
    fn new(replicas: Table, summary: Table, fit: serde_json::Value, seeds: Vec<u64>) -> Result<Self> {
        let mut files = FileSet::default();
        files.insert("replicas.csv", replicas.to_bytes()?);
        files.insert("summary.csv", summary.to_bytes()?);
        let mut j = serde_json::to_vec_pretty(&fit)?;
        j.push(b'\n');
        files.insert("fit.json", j);
        Ok(Outcome { files, seeds, censored: 0, flags: Vec::new(), fit })
    }
}

pub fn replica_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.replicas as u64).map(|i| split(cfg.seed, i)).collect()
}

pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::CriticalLine => critical_line(cfg, workers),
        ExperimentKind::SubcriticalLine => subcritical_line(cfg, workers),
        ExperimentKind::TorusCompare => torus_compare(cfg, workers),
        ExperimentKind::Tree => tree(cfg, workers),
    }
}

fn base_params(cfg: &ExperimentConfig, graph: GraphSpec, p: f64, horizon: f64, region: Region, seed: u64) -> SimParams {
    let mut sp = SimParams::new(graph, p, horizon, region, seed);
    sp.lambda_a = cfg.lambda_a;
    sp.lambda_b = cfg.lambda_b;
    sp
}

struct Series {
    n: Vec<u32>,
    v: Vec<f64>,
    window: Vec<f64>,
}

fn critical_line(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome> {
    let spec = cfg.graph_spec()?;
    let p = cfg.p()?;
    let times = &cfg.t_grid;
    let t_max = *times.last().unwrap_or(&2.0);
    let r = truncation_radius(spec, t_max, cfg.truncation_c()?)?;
    let seeds = replica_seeds(cfg);
    let series = run_indexed(workers, seeds.len(), |i| {
        let mut sp = base_params(cfg, spec, p, t_max, Region::Ball(r), seeds[i]);
        sp.sample_times = times.clone();
        sp.window = cfg.window.then_some(r / 2);
        let (g, init) = init_configuration(&sp)?;
        let tr = run_crs(&g, &sp, &init)?;
        Ok(Series { n: tr.n_root, v: tr.v_root, window: tr.window_density })
    })?;

    let mut head = vec!["replica", "seed", "t", "N_t", "V_t"];
    if cfg.window {
        head.push("window_density");
    }
    let mut reps = Table::new(&head);
    for (i, s) in series.iter().enumerate() {
        for (j, &t) in times.iter().enumerate() {
            let mut row = vec![i.to_string(), seeds[i].to_string(), num(t), s.n[j].to_string(), num(s.v[j])];
            if cfg.window {
                row.push(num(s.window[j]));
            }
            reps.push(row);
        }
    }

    let mut head = vec!["t", "replicas", "mean_V", "stderr_V", "mean_N", "stderr_N", "rho_from_V"];
    if cfg.window {
        head.extend(["mean_window", "stderr_window"]);
    }
    let mut summary = Table::new(&head);
    let mut flags = Vec::new();
    let mut mean_v = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        let v = MeanStderr::of(&series.iter().map(|s| s.v[j]).collect::<Vec<_>>());
        let n = MeanStderr::of(&series.iter().map(|s| s.n[j] as f64).collect::<Vec<_>>());
        let (t0, v0) = if j == 0 { (0.0, 0.0) } else { (times[j - 1], mean_v[j - 1]) };
        let rho = (v.mean - v0) / (t - t0);
        mean_v.push(v.mean);
        if v.mean > 0.0 && v.stderr / v.mean > 0.05 {
            flags.push(format!("relative stderr of E V_t is {:.3} at t = {t}; more replicas needed", v.stderr / v.mean));
        }
        let mut row = vec![num(t), series.len().to_string(), num(v.mean), num(v.stderr), num(n.mean), num(n.stderr), num(rho)];
        if cfg.window {
            let w = MeanStderr::of(&series.iter().map(|s| s.window[j]).collect::<Vec<_>>());
            row.extend([num(w.mean), num(w.stderr)]);
        }
        summary.push(row);
    }
    let fit = if times.len() >= 3 && mean_v.iter().all(|&v| v > 0.0) {
        Some(FitResult::power(times, &mean_v)?)
    } else {
        flags.push("not enough positive points for a power fit".into());
        None
    };
    let fit = json!({ "experiment": cfg.experiment.name(), "radius": r, "V_vs_t": fit });
    let mut out = Outcome::new(reps, summary, fit, seeds)?;
    out.flags = flags;
    Ok(out)
}

/// Released range for the half-line Monte Carlo: the omitted terms of the
/// series are below 1e-4 of its value.
pub fn half_line_range(p: f64, value: f64) -> u64 {
    let mut k = 64;
    while uplus_tail_bound(p, k) > 1e-4 * value {
        k += 64;
    }
    k
}

fn subcritical_line(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome> {
    let seeds = replica_seeds(cfg);
    let cap = cfg.step_cap.unwrap_or(DEFAULT_STEP_CAP);
    let p_max = cfg.mc_p_max.unwrap_or(MC_P_MAX);
    let mut reps = Table::new(&["replica", "seed", "p", "U_plus", "released", "censored"]);
    let mut summary = Table::new(&[
        "p",
        "exact_U_plus",
        "tail_bound",
        "scaled",
        "k_max",
        "mc_replicas",
        "mc_mean",
        "mc_stderr",
        "mc_ratio",
        "mc_z",
        "censored_fraction",
    ]);
    let mut flags = Vec::new();
    let mut censored = 0u64;
    let mut exact = Vec::new();
    let mut mc = Vec::new();
    for &p in &cfg.p_grid {
        let s = expected_uplus(p, None)?;
        let scaled = (1.0 - 2.0 * p).powi(3) * s.value;
        exact.push(s.value);
        if p > p_max {
            summary.push(vec![num(p), num(s.value), num(s.tail_bound), num(scaled), String::new(), "0".into(), String::new(), String::new(), String::new(), String::new(), String::new()]);
            continue;
        }
        let k_max = half_line_range(p, s.value);
        let runs = run_indexed(workers, seeds.len(), |i| Ok(half_line_sequential(p, k_max, seeds[i], cap)?))?;
        for (i, r) in runs.iter().enumerate() {
            reps.push(vec![i.to_string(), seeds[i].to_string(), num(p), num(r.total), r.released.to_string(), r.censored.to_string()]);
        }
        let m = MeanStderr::of(&runs.iter().map(|r| r.total).collect::<Vec<_>>());
        let cens: usize = runs.iter().map(|r| r.censored).sum();
        let released: usize = runs.iter().map(|r| r.released).sum();
        censored += cens as u64;
        let frac = cens as f64 / released.max(1) as f64;
        if frac > 1e-3 {
            flags.push(format!("censoring fraction {frac:.2e} at p = {p}"));
        }
        let z = (m.mean - s.value) / m.stderr;
        if z.abs() > 3.0 {
            flags.push(format!("Monte Carlo E U+ is {z:.2} stderr from the series at p = {p}"));
        }
        mc.push(json!({ "p": p, "mean": m.mean, "stderr": m.stderr, "exact": s.value, "ratio": m.mean / s.value, "z": z }));
        summary.push(vec![
            num(p),
            num(s.value),
            num(s.tail_bound),
            num(scaled),
            k_max.to_string(),
            runs.len().to_string(),
            num(m.mean),
            num(m.stderr),
            num(m.mean / s.value),
            num(z),
            num(frac),
        ]);
    }
    let gaps: Vec<f64> = cfg.p_grid.iter().map(|p| 1.0 - 2.0 * p).collect();
    let scaled: Vec<f64> = exact.iter().zip(&gaps).map(|(v, g)| v * g.powi(3)).collect();
    let spread = scaled.iter().copied().fold(0.0, f64::max) / scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let fit = if gaps.len() >= 3 { Some(FitResult::power(&gaps, &exact)?) } else { None };
    let fit = json!({
        "experiment": cfg.experiment.name(),
        "U_plus_vs_gap": fit,
        "scaled_spread": spread,
        "monte_carlo": mc,
    });
    let mut out = Outcome::new(reps, summary, fit, seeds)?;
    out.flags = flags;
    out.censored = censored;
    Ok(out)
}

struct Pair {
    lat: Series,
    tor: Series,
    surplus_ok: bool,
}

fn torus_compare(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome> {
    let spec = cfg.graph_spec()?;
    let p = cfg.p()?;
    let times = &cfg.t_grid;
    let t_max = *times.last().unwrap_or(&2.0);
    let r = truncation_radius(spec, t_max, cfg.truncation_c()?)?;
    let d = match spec {
        GraphSpec::Line => 1,
        GraphSpec::Lattice { d } => d,
        _ => bail!("torus-compare needs a lattice"),
    };
    ensure!(r <= u32::MAX as u64, "radius too large");
    let torus = GraphSpec::Torus { d, r: r as u32 };
    let seeds = replica_seeds(cfg);
    let pairs = run_indexed(workers, seeds.len(), |i| {
        let run = |g: GraphSpec| -> Result<(Series, bool)> {
            let mut sp = base_params(cfg, g, p, t_max, Region::Ball(r), seeds[i]);
            sp.sample_times = times.clone();
            let (graph, init) = init_configuration(&sp)?;
            let tr = run_crs(&graph, &sp, &init)?;
            // Surplus A-particles are never annihilated on the torus.
            let alive = init.particles.iter().zip(&tr.fates).filter(|(q, f)| q.kind == Kind::A && f.death.is_infinite()).count() as i64;
            let ok = alive >= init.discrepancy(|_| true).max(0);
            Ok((Series { n: tr.n_root, v: tr.v_root, window: Vec::new() }, ok))
        };
        let (lat, _) = run(spec)?;
        let (tor, surplus_ok) = run(torus)?;
        Ok(Pair { lat, tor, surplus_ok })
    })?;
    let mut reps = Table::new(&["replica", "seed", "t", "N_lattice", "N_torus", "V_lattice", "V_torus"]);
    for (i, s) in pairs.iter().enumerate() {
        for (j, &t) in times.iter().enumerate() {
            reps.push(vec![
                i.to_string(),
                seeds[i].to_string(),
                num(t),
                s.lat.n[j].to_string(),
                s.tor.n[j].to_string(),
                num(s.lat.v[j]),
                num(s.tor.v[j]),
            ]);
        }
    }
    let mut summary = Table::new(&[
        "t",
        "mean_N_lattice",
        "stderr_N_lattice",
        "mean_N_torus",
        "stderr_N_torus",
        "z_N",
        "mean_V_lattice",
        "stderr_V_lattice",
        "mean_V_torus",
        "stderr_V_torus",
        "z_V",
    ]);
    let (mut zn_max, mut zv_max) = (0.0f64, 0.0f64);
    let z = |a: MeanStderr, b: MeanStderr| {
        let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        if se > 0.0 {
            (a.mean - b.mean) / se
        } else {
            0.0
        }
    };
    for (j, &t) in times.iter().enumerate() {
        let col = |f: &dyn Fn(&Pair) -> f64| MeanStderr::of(&pairs.iter().map(f).collect::<Vec<_>>());
        let nl = col(&|s| s.lat.n[j] as f64);
        let nt = col(&|s| s.tor.n[j] as f64);
        let vl = col(&|s| s.lat.v[j]);
        let vt = col(&|s| s.tor.v[j]);
        let (zn, zv) = (z(nl, nt), z(vl, vt));
        zn_max = zn_max.max(zn.abs());
        zv_max = zv_max.max(zv.abs());
        summary.push(vec![
            num(t),
            num(nl.mean),
            num(nl.stderr),
            num(nt.mean),
            num(nt.stderr),
            num(zn),
            num(vl.mean),
            num(vl.stderr),
            num(vt.mean),
            num(vt.stderr),
            num(zv),
        ]);
    }
    let surplus_violations = pairs.iter().filter(|s| !s.surplus_ok).count();
    let fit = json!({
        "experiment": cfg.experiment.name(),
        "radius": r,
        "max_abs_z_N": zn_max,
        "max_abs_z_V": zv_max,
        "surplus_violations": surplus_violations,
    });
    let mut out = Outcome::new(reps, summary, fit, seeds)?;
    if zn_max > 4.0 || zv_max > 4.0 {
        out.flags.push(format!("torus and window differ by {:.2} stderr", zn_max.max(zv_max)));
    }
    if surplus_violations > 0 {
        out.flags.push(format!("{surplus_violations} replicas lost surplus A-particles"));
    }
    Ok(out)
}

fn tree(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome> {
    let spec = cfg.graph_spec()?;
    let GraphSpec::BiTree { d, n } = spec else { bail!("tree experiment needs graph bitree:d:n") };
    let p = cfg.p()?;
    let seeds = replica_seeds(cfg);
    let mut reps = Table::new(&["replica", "seed", "quantity", "x", "value"]);
    let mut summary = Table::new(&["quantity", "x", "value", "stderr"]);
    let mut flags = Vec::new();
    let c = cfg.truncation_c()?;
    let mut depths = Vec::new();
    for &t in &cfg.t_grid {
        let depth = truncation_radius(spec, t, c)?;
        let sites = (d as f64).powi(depth as i32 + 1);
        ensure!(sites <= MAX_TREE_SITES as f64, "tree of depth {depth} is too large for Monte Carlo at t = {t}");
        depths.push(depth);
    }

    // W_n: A-particles from levels 1..=n that reach the root.
    let w = run_indexed(workers, seeds.len(), |i| {
        let sp = base_params(cfg, spec, p, f64::INFINITY, Region::Levels(1, n), seeds[i]);
        let (g, init) = init_configuration(&sp)?;
        Ok(run_crs(&g, &sp, &init)?.visits.len() as f64)
    })?;
    for (i, x) in w.iter().enumerate() {
        reps.push(vec![i.to_string(), seeds[i].to_string(), "W".into(), n.to_string(), num(*x)]);
    }
    let mc = MeanStderr::of(&w);
    let n_top = cfg.n_grid.last().copied().unwrap_or(0).max(n) as usize;
    let means = w_means(d, p, n_top, TREE_EPS)?;
    let exact = means[n as usize];
    let z = (mc.mean - exact) / mc.stderr;
    if z.abs() > 3.0 {
        flags.push(format!("Monte Carlo E W_{n} is {z:.2} stderr from the exact mean"));
    }
    summary.push(vec!["mc_mean_W".into(), n.to_string(), num(mc.mean), num(mc.stderr)]);
    summary.push(vec!["exact_mean_W".into(), n.to_string(), num(exact), "0".into()]);
    for &k in &cfg.n_grid {
        summary.push(vec!["exact_mean_W".into(), k.to_string(), num(means[k as usize]), "0".into()]);
    }
    let mu_fit = if cfg.n_grid.len() >= 3 {
        let xs: Vec<f64> = cfg.n_grid.iter().map(|&k| k as f64).collect();
        let ys: Vec<f64> = cfg.n_grid.iter().map(|&k| means[k as usize]).collect();
        Some(FitResult::log(&xs, &ys)?)
    } else {
        None
    };

    let mut limits = Vec::new();
    for &e in &cfg.eps_grid {
        let l = w_mean_limit(d, 0.5 - e, 1e-10, 1_000_000)?;
        summary.push(vec!["limit_mean_W".into(), num(e), num(l.mean), num(l.last_increment)]);
        limits.push(l.mean);
    }
    let limit_fit = if cfg.eps_grid.len() >= 3 {
        let xs: Vec<f64> = cfg.eps_grid.iter().map(|e| 1.0 / e).collect();
        Some(FitResult::log(&xs, &limits)?)
    } else {
        None
    };

    let mut vt = Vec::new();
    for (&t, &depth) in cfg.t_grid.iter().zip(&depths) {
        let g = GraphSpec::BiTree { d, n: depth as u32 };
        let v = run_indexed(workers, seeds.len(), |i| {
            let sp = base_params(cfg, g, p, t, Region::Levels(0, depth as u32), seeds[i]);
            let (graph, init) = init_configuration(&sp)?;
            Ok(run_crs(&graph, &sp, &init)?.v_horizon)
        })?;
        for (i, x) in v.iter().enumerate() {
            reps.push(vec![i.to_string(), seeds[i].to_string(), "V".into(), num(t), num(*x)]);
        }
        let m = MeanStderr::of(&v);
        summary.push(vec!["mc_mean_V".into(), num(t), num(m.mean), num(m.stderr)]);
        vt.push(m.mean);
    }
    let v_fit = if vt.len() >= 3 { Some(FitResult::log(&cfg.t_grid, &vt)?) } else { None };

    let fit = json!({
        "experiment": cfg.experiment.name(),
        "W_monte_carlo": { "n": n, "mean": mc.mean, "stderr": mc.stderr, "exact": exact, "z": z },
        "mean_W_vs_log_n": mu_fit,
        "limit_vs_log_inverse_eps": limit_fit,
        "V_vs_log_t": v_fit,
        "limit_means": cfg.eps_grid.iter().zip(&limits).map(|(e, m)| json!({ "eps": e, "mean": m })).collect::<Vec<_>>(),
    });
    let mut out = Outcome::new(reps, summary, fit, seeds)?;
    out.flags = flags;
    Ok(out)
}
