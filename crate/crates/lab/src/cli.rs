//! Command-line interface.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dlas_core::analysis::{
    devr_tail, discrepancy_pmf, expected_uk, expected_uplus, gr_prob, gr_time_bound, local_time_bound, poisson_tail_bound, positive_part_envelope,
    positive_part_mean, seq_bound, srw_max_bound, visits_bound,
};
use dlas_core::couplings::{fold_report, run_check, Check, CheckOptions, CheckReport};
use dlas_core::engine::{Region, SimParams};
use dlas_core::rng::split;
use dlas_core::tree::{q_constant, tree_checks, TreeChecks};
use dlas_core::GraphSpec;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::experiments::FitResult;
use crate::manifest::{execute, replay};
use crate::output::{num, Table};
use crate::pool::{run_indexed, worker_count};

#[derive(Debug, Parser)]
#[command(name = "annihilate-lab", version, about = "Two-type diffusion-limited annihilation: simulations, coupling checks and exact recursions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a coupling over many seeds.
    VerifyCouplings(VerifyArgs),
    /// Exact W_n sequence and inequality checks on the tree.
    TreeExact(TreeArgs),
    /// Closed-form quantities as CSV.
    ExactFormulas(FormulaArgs),
    /// Least-squares fit of two CSV columns.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_enum, default_value_t = FitForm::Power)]
        form: FitForm,
        /// Keep only rows with COLUMN=VALUE.
        #[arg(long = "where")]
        filter: Option<String>,
    },
    /// Re-run a manifest and compare output checksums.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Also write the regenerated outputs here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitForm {
    Power,
    Log,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub check: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "line")]
    pub graph: String,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_a: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda_b: f64,
    /// Line: sites -R..R-1; lattice and torus: box of half-width R. Trees use all levels.
    #[arg(long)]
    pub radius: Option<u64>,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Change tracking: A-particles kept (default half).
    #[arg(long)]
    pub keep_a: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub added_a: usize,
    #[arg(long, default_value_t = 0)]
    pub removed_b: usize,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct TreeArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tail_eps: f64,
    /// Comma list of logconcave, sizebias, dominance, anticoncentration, growth.
    #[arg(long, default_value = "logconcave,sizebias,dominance,anticoncentration,growth")]
    pub checks: String,
    /// Write the JSON check report here (default: stderr).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Discrepancy,
    Uk,
    Uplus,
    Devr,
    Gr,
    Rw,
}

#[derive(Debug, clap::Args)]
pub struct FormulaArgs {
    #[arg(long, value_enum)]
    pub what: What,
    #[arg(long, default_value_t = 0.45)]
    pub p: f64,
    /// Comma list of p values (uplus).
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub k: u64,
    #[arg(long, default_value_t = 50)]
    pub k_max: u64,
    #[arg(long, default_value_t = 12)]
    pub r: u64,
    #[arg(long, default_value_t = 1)]
    pub d: u32,
    #[arg(long, default_value_t = 0.2)]
    pub c1: f64,
    #[arg(long, default_value_t = 5.0)]
    pub a: f64,
    #[arg(long, default_value_t = 30.0)]
    pub x: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t: f64,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)?;
    out.flush()?;
    Ok(())
}

fn emit_json<T: Serialize>(v: &T) -> Result<()> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    emit(&s)
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, out, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let r = execute(&cfg, workers)?;
            let path = r.write(&dir)?;
            for f in &r.manifest.flags {
                eprintln!("warning: {f}");
            }
            eprintln!("wrote {}", path.display());
            emit(&r.outcome.files.0["fit.json"])?;
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyCouplings(a) => {
            let r = verify(&a)?;
            emit_json(&report_json(&r))?;
            Ok(status(r.failures == 0))
        }
        Command::TreeExact(a) => tree_exact(&a),
        Command::ExactFormulas(a) => {
            emit(&formulas(&a)?.to_bytes()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit { input, x, y, form, filter } => {
            let t = Table::read(&input)?;
            let filter = match &filter {
                Some(f) => Some(f.split_once('=').context("--where takes COLUMN=VALUE")?),
                None => None,
            };
            let xs = t.floats(&x, filter)?;
            let ys = t.floats(&y, filter)?;
            let fit = match form {
                FitForm::Power => FitResult::power(&xs, &ys)?,
                FitForm::Log => FitResult::log(&xs, &ys)?,
            };
            emit_json(&fit)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { manifest, workers, out } => {
            let r = replay(&manifest, workers, out.as_deref())?;
            emit_json(&json!({ "manifest": r.manifest, "workers": r.workers, "files": r.files, "identical": r.ok() }))?;
            Ok(status(r.ok()))
        }
    }
}

fn report_json(r: &CheckReport) -> serde_json::Value {
    json!({
        "check": r.check.name(),
        "trials": r.trials,
        "failures": r.failures,
        "first_counterexample": r.first_counterexample.as_ref().map(|c| json!({ "seed": c.seed, "detail": c.detail })),
    })
}

/// Initial region for coupling checks on `graph`.
pub fn check_region(graph: GraphSpec, radius: Option<u64>) -> Region {
    match graph {
        GraphSpec::Line => {
            let r = radius.unwrap_or(25) as i64;
            Region::Segment(-r, r - 1)
        }
        GraphSpec::Lattice { .. } | GraphSpec::Torus { .. } => Region::Ball(radius.unwrap_or(4)),
        GraphSpec::BiTree { n, .. } => Region::Levels(0, n),
    }
}

pub fn verify(a: &VerifyArgs) -> Result<CheckReport> {
    let check: Check = a.check.parse()?;
    let graph: GraphSpec = a.graph.parse()?;
    let region = check_region(graph, a.radius);
    let opts = CheckOptions { keep_a: a.keep_a, added_a: a.added_a, removed_b: a.removed_b, samples: a.samples, ..CheckOptions::default() };
    let workers = worker_count(a.workers)?;
    let outcomes = run_indexed(workers, a.trials, |i| {
        let seed = split(a.seed, i as u64);
        let mut sp = SimParams::new(graph, a.p, a.t, region.clone(), seed);
        sp.lambda_a = a.lambda_a;
        sp.lambda_b = a.lambda_b;
        Ok((seed, run_check(check, &sp, &opts)))
    })?;
    Ok(fold_report(check, outcomes)?)
}

const TREE_CHECKS: [&str; 5] = ["logconcave", "sizebias", "dominance", "anticoncentration", "growth"];

fn tree_failures<'a>(r: &'a TreeChecks, name: &str) -> &'a [usize] {
    match name {
        "logconcave" => &r.u_not_log_concave,
        "sizebias" => &r.size_bias,
        "dominance" => &r.w_not_below_u,
        "anticoncentration" => &r.anticoncentration,
        _ => &r.growth,
    }
}

fn tree_exact(a: &TreeArgs) -> Result<ExitCode> {
    let names: Vec<&str> = a.checks.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    for n in &names {
        if !TREE_CHECKS.contains(n) {
            bail!("unknown check {n:?} (expected one of {})", TREE_CHECKS.join(", "));
        }
    }
    let r = tree_checks(a.d, a.p, a.n_max, a.tail_eps)?;
    let mut t = Table::new(&["n", "mean", "zero_mass", "dropped_tail"]);
    for n in 0..=a.n_max {
        t.push(vec![n.to_string(), num(r.means[n]), num(r.zero_mass[n]), num(r.dropped_tail[n])]);
    }
    emit(&t.to_bytes()?)?;
    let failures: serde_json::Map<String, serde_json::Value> = names.iter().map(|n| (n.to_string(), json!(tree_failures(&r, n)))).collect();
    let total: usize = names.iter().map(|n| tree_failures(&r, n).len()).sum();
    let report = json!({
        "d": a.d,
        "p": a.p,
        "n_max": a.n_max,
        "tail_eps": a.tail_eps,
        "q": q_constant(),
        "failures": failures,
        "violations": total,
        "max_size_bias_gap": r.max_size_bias_gap.is_finite().then_some(r.max_size_bias_gap),
        "w_not_log_concave": r.w_not_log_concave,
    });
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    match &a.report {
        Some(p) => std::fs::write(p, &bytes).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stderr().write_all(&bytes)?,
    }
    Ok(status(total == 0))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().with_context(|| format!("{x:?} is not a number"))).collect()
}

pub fn formulas(a: &FormulaArgs) -> Result<Table> {
    Ok(match a.what {
        What::Discrepancy => {
            let law = discrepancy_pmf(a.k, a.p)?;
            let mut t = Table::new(&["k", "p", "D", "probability"]);
            for j in 0..law.mass.len() {
                t.push(vec![a.k.to_string(), num(a.p), law.value(j).to_string(), num(law.mass[j])]);
            }
            t
        }
        What::Uk => {
            let mut t = Table::new(&["k", "p", "expected_Uk", "positive_part_mean", "envelope"]);
            for k in 0..=a.k_max {
                let env = if k >= 1 && a.p < 0.5 { num(positive_part_envelope(k, a.p)?) } else { String::new() };
                t.push(vec![k.to_string(), num(a.p), num(expected_uk(k, a.p)?), num(positive_part_mean(k, a.p)?), env]);
            }
            t
        }
        What::Uplus => {
            let ps = match &a.p_grid {
                Some(s) => parse_list(s)?,
                None => vec![a.p],
            };
            let mut t = Table::new(&["p", "U_plus", "k_cap", "tail_bound", "scaled"]);
            for p in ps {
                let s = expected_uplus(p, None)?;
                t.push(vec![num(p), num(s.value), s.k_cap.to_string(), num(s.tail_bound), num((1.0 - 2.0 * p).powi(3) * s.value)]);
            }
            t
        }
        What::Devr => {
            let r = devr_tail(a.r, a.d, a.p, a.c1)?;
            let mut t = Table::new(&["r", "d", "p", "c1", "sites", "threshold", "probability", "in_range", "normal_approximation"]);
            t.push(vec![
                a.r.to_string(),
                a.d.to_string(),
                num(a.p),
                num(a.c1),
                r.sites.to_string(),
                num(r.threshold),
                num(r.probability),
                r.in_range.to_string(),
                r.normal_approximation.to_string(),
            ]);
            t
        }
        What::Gr => {
            let mut t = Table::new(&["a", "x", "t", "probability", "time_bound"]);
            let bound = gr_time_bound(a.a, a.x, a.t).ok().map(num).unwrap_or_default();
            t.push(vec![num(a.a), num(a.x), num(a.t), num(gr_prob(a.a, a.x)?), bound]);
            t
        }
        What::Rw => {
            let mut t = Table::new(&["t", "x", "k", "srw_max", "poisson_tail", "local_time", "root_visitors", "seq_shape"]);
            let ok = |r: dlas_core::Result<f64>| r.ok().map(num).unwrap_or_default();
            t.push(vec![
                num(a.t),
                num(a.x),
                a.k.to_string(),
                ok(srw_max_bound(a.x, a.t)),
                ok(poisson_tail_bound(a.k as f64, a.t)),
                ok(local_time_bound(a.t)),
                ok(visits_bound(a.t)),
                ok(seq_bound(a.k, a.t, 1.0)),
            ]);
            t
        }
    })
}
