//! Command-line front end.
//!
//! Each subcommand writes its tables and a JSON summary into `--out`, plus a
//! `manifest.json` with the digest of every file. The terminal only echoes
//! the summary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde_json::json;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::experiment::{run_baseline, run_experiment, sweep, trace_frame};
use crate::optics::{homodyne_error_prob, simulate_phase_readout, ReflectionEntry};
use crate::report::{self, OutputDir, RunManifest};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Parser)]
#[command(name = "qkd-trojan", version, about = "Trojan-horse attack simulator for a plug-and-play SARG04 link")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML); the clavis2 preset when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `run.seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; `out/<command>` by default.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Unattacked reference run: expected click rate and QBER.
    Baseline,
    /// One attacked run with the configured triad.
    Simulate {
        /// Also dump the slot-level trace of this frame (0-based).
        #[arg(long)]
        trace: Option<usize>,
    },
    /// Evaluate the whole attack grid and rank the points.
    Sweep,
    /// Mean photon number returned by reflections and the best
    /// discrimination probability.
    Budget {
        #[arg(long)]
        mu_in: Option<f64>,
        #[arg(long, conflicts_with = "map", allow_hyphen_values = true)]
        level_db: Option<f64>,
        /// Reflection map CSV: delay_ns,level_db,label,wavelength_nm.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Monte Carlo of Eve's homodyne readout of Bob's modulator.
    Readout {
        #[arg(long)]
        mu_sig: Option<f64>,
        #[arg(long)]
        slots: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Baseline => "baseline",
            Command::Simulate { .. } => "simulate",
            Command::Sweep => "sweep",
            Command::Budget { .. } => "budget",
            Command::Readout { .. } => "readout",
        }
    }
}

/// What a successful command produced.
#[derive(Debug)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub summary: serde_json::Value,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Run `cli`. A baseline without conclusive slots still writes its summary
/// and then reports [`Error::NoData`].
pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut cfg = match &cli.common.config {
        Some(path) => Config::load(path)?,
        None => Config::preset("clavis2")?,
    };
    if let Some(seed) = cli.common.seed {
        cfg.scenario.seed = seed;
    }
    let seed = cfg.scenario.seed;
    let workers = cli.common.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let out_root = cli
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(cli.command.name()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut out = OutputDir::create(&out_root)?;
    let mut no_data = None;
    let summary = match &cli.command {
        Command::Baseline => {
            let b = pool.install(|| run_baseline(&cfg.scenario, seed))?;
            if b.qber.is_none() {
                no_data = Some("baseline produced no conclusive slots".to_string());
            }
            report::baseline_summary(&cfg.scenario, seed, &b)
        }
        Command::Simulate { trace } => {
            let r = pool.install(|| run_experiment(&cfg.scenario, seed))?;
            out.write("results.csv", &report::results_csv([&r])?)?;
            if let Some(index) = *trace {
                let t = pool.install(|| trace_frame(&cfg.scenario, seed, index))?;
                out.write(&format!("trace_frame_{index}.csv"), &report::trace_csv(&t)?)?;
            }
            report::run_summary(&cfg.scenario, seed, &r)
        }
        Command::Sweep => {
            let rep = sweep(&cfg.sweep_spec(), workers)?;
            out.write("sweep.csv", &report::results_csv(rep.entries.iter().filter_map(|e| e.result()))?)?;
            report::sweep_summary(&cfg.scenario, seed, &rep)
        }
        Command::Budget { mu_in, level_db, map } => {
            if let Some(mu) = mu_in {
                cfg.budget.mu_in = *mu;
            }
            if let Some(level_db) = level_db {
                let e = ReflectionEntry {
                    delay_ns: 0.0,
                    level_db: *level_db,
                    label: "command line".into(),
                    wavelength_nm: 1550.0,
                };
                e.validate()?;
                cfg.budget.reflections = vec![e];
            }
            if let Some(map) = map {
                cfg.budget.reflections = crate::optics::load_reflection_map(map)?;
            }
            let rows = report::budget_rows(&cfg.budget)?;
            out.write("budget.csv", &report::budget_csv(&rows)?)?;
            json!({ "command": "budget", "seed": seed, "rows": rows })
        }
        Command::Readout { mu_sig, slots } => {
            if let Some(m) = mu_sig {
                cfg.readout.mu_sig = *m;
            }
            if let Some(n) = slots {
                cfg.readout.slots = *n;
            }
            let spec = &cfg.readout;
            let mut rng = rng::stream(seed, &[tag::READOUT]);
            let bits: Vec<u8> = (0..spec.slots).map(|_| rng.random_range(0..2)).collect();
            let readout = simulate_phase_readout(&bits, spec.mu_sig, &spec.model, &mut rng)?;
            let err = homodyne_error_prob(spec.mu_sig, &spec.model);
            let se = (err * (1.0 - err) / spec.slots as f64).sqrt();
            let deviation = readout.correlation - (1.0 - err);
            json!({
                "command": "readout",
                "seed": seed,
                "readout": spec,
                "correlation": readout.correlation,
                "analytic_error": err,
                "analytic_correlation": 1.0 - err,
                "standard_error": se,
                "within_3_sigma": deviation.abs() <= 3.0 * se.max(f64::MIN_POSITIVE),
            })
        }
    };
    out.write_json("summary.json", &summary)?;
    let manifest = out.finish(cli.command.name(), cli.common.config.as_deref(), seed)?;
    if let Some(msg) = no_data {
        return Err(Error::NoData(format!("{msg}; summary written to {}", out_root.display())));
    }
    Ok(Outcome { manifest, summary })
}

/// Parse `args`, run, print, and return the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            let brief = report::select(
                &report::round_json(outcome.summary),
                &[
                    "status", "gamma_exp", "gamma_se", "qber", "qber_se", "result", "criteria", "feasible",
                    "combinations", "feasible_count", "correlation", "analytic_correlation",
                ],
            );
            let text = report::key_values(&brief);
            if !text.is_empty() {
                println!("{text}");
            }
            for f in &outcome.manifest.files {
                println!("wrote {}", outcome.manifest.out_dir.join(&f.file).display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::UnsupportedScenario { .. } | Error::Parse(_) => 2,
                _ => 1,
            }
        }
    }
}
