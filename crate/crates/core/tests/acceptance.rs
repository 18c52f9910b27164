//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use qkd_trojan::attack::{build_pattern, AttackTriad};
use qkd_trojan::cli::{self, Cli};
use qkd_trojan::config::Config;
use qkd_trojan::detector::{
    afterpulse_prob, cumulative_afterpulse, noise_prob, photonic_prob, total_detection_prob, BrightPulseLedger,
    DetectorParams, DetectorProfile, SLOT_PERIOD_US,
};
use qkd_trojan::experiment::{run_baseline, sweep, Scenario};
use qkd_trojan::frame::{optimal_mu, FrameConfig};
use qkd_trojan::optics::{back_reflection_mu, homodyne_error_prob, max_discrimination_prob, simulate_phase_readout, HomodyneModel};
use qkd_trojan::rng::stream;
use qkd_trojan::sarg04::{sift, Basis, Detector, SiftOutcome, SiftingSet, StateLabel};
use rand::Rng;

type Check = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).max(4)
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn baseline_qber() -> Check {
    let cfg = Config::load(&configs().join("clavis2.toml")).map_err(|e| e.to_string())?;
    let s = &cfg.scenario;
    if s.frame.mu != 1.0 || s.frame.t_channel != 0.25 || s.n_sim != 10_000 {
        return Err(format!("config drifted: mu {} T {} n_sim {}", s.frame.mu, s.frame.t_channel, s.n_sim));
    }
    let b = run_baseline(s, s.seed).map_err(|e| e.to_string())?;
    let q = b.qber.ok_or("no conclusive slots")?;
    ensure(
        (q - 0.0252).abs() <= 0.004,
        format!("q = {q:.5} (se {:.5}), target 0.0252 +- 0.004", b.qber_se.unwrap_or(0.0)),
    )
}

fn optimal_photon_number() -> Check {
    let mu = FrameConfig::for_transmission(0.25).mu;
    let preset = Scenario::preset("clavis2").map_err(|e| e.to_string())?.frame.mu;
    ensure(
        mu == 1.0 && optimal_mu(0.25) == 1.0 && preset == 1.0,
        format!("mu = {mu}, preset mu = {preset}"),
    )
}

fn photon_budget() -> Check {
    let mu_out = back_reflection_mu(2e6, -57.0).map_err(|e| e.to_string())?;
    let p = max_discrimination_prob(mu_out);
    ensure(
        (3.9..=4.1).contains(&mu_out) && (p - 0.9817).abs() <= 0.0005,
        format!("mu_out = {mu_out:.4}, bound = {p:.5}"),
    )
}

fn tiler() -> Check {
    let n_f = 1075;
    for n_ab in 1..=231 {
        for n_el in 0..=231 - n_ab {
            let t = AttackTriad::new(n_ab, n_el, 231 - n_ab - n_el);
            let p = build_pattern(&t, n_f).map_err(|e| e.to_string())?;
            if (p.k, p.n_u) != (4, 151) {
                return Err(format!("{t:?} gave k = {}, N_u = {}", p.k, p.n_u));
            }
        }
    }
    let mut rng = stream(2024, &[4]);
    let mut checked = 0;
    while checked < 1000 {
        let t = AttackTriad::new(rng.random_range(1..300), rng.random_range(0..400), rng.random_range(0..400));
        let n_f = rng.random_range(1..1500);
        let Ok(p) = build_pattern(&t, n_f) else {
            if t.len() <= n_f {
                return Err(format!("{t:?} rejected on {n_f} slots"));
            }
            continue;
        };
        if p.classes() != common::tile_backwards(&t, n_f).as_slice() {
            return Err(format!("{t:?} on {n_f} slots differs from the backward walk"));
        }
        checked += 1;
    }
    Ok("all 231-slot triads give k = 4, N_u = 151; 1000 random triads match".into())
}

fn scenario_sweep(file: &str) -> Result<(usize, usize, f64), String> {
    let cfg = Config::load(&configs().join(file)).map_err(|e| e.to_string())?;
    let rep = sweep(&cfg.sweep_spec(), workers()).map_err(|e| e.to_string())?;
    let failed = rep.entries.iter().filter(|e| e.result().is_none()).count();
    if failed > 0 {
        return Err(format!("{failed} combinations failed"));
    }
    let margin = rep.best().map_or(f64::NEG_INFINITY, |r| r.i_act - r.i_est);
    Ok((rep.feasible_count(), rep.entries.len(), margin))
}

fn scenario_a() -> Check {
    let (feasible, total, _) = scenario_sweep("clavis2.toml")?;
    ensure(feasible == 0, format!("{feasible} of {total} combinations feasible"))
}

fn scenario_b() -> Check {
    let (feasible, total, margin) = scenario_sweep("d0-both.toml")?;
    ensure(feasible >= 1, format!("{feasible} of {total} feasible, best I_act - I_est = {margin:.4}"))
}

fn scenario_c() -> Check {
    let (feasible, total, margin) = scenario_sweep("improved.toml")?;
    ensure(
        feasible >= 1 && margin > 0.0,
        format!("{feasible} of {total} feasible, best I_act - I_est = {margin:.4}"),
    )
}

fn label(s: &str) -> StateLabel {
    StateLabel::ALL.into_iter().find(|l| l.to_string() == s).expect("state label")
}

fn ideal() -> DetectorProfile {
    let p = DetectorParams {
        eta: 1.0,
        dark: 0.0,
        ap_amp1: 0.0,
        ap_tau1: 1.0,
        ap_amp2: 0.0,
        ap_tau2: 1.0,
    };
    DetectorProfile::new("ideal", p, p).unwrap()
}

fn sarg04_suite() -> Check {
    for (a, b, basis, det, want) in common::SIFT_TABLE {
        let set = SiftingSet::ALL
            .into_iter()
            .find(|s| s.members().contains(&label(a)) && s.members().contains(&label(b)))
            .ok_or("announced set")?;
        let basis = if basis == 'Z' { Basis::Z } else { Basis::X };
        let det = if det == 0 { Detector::D0 } else { Detector::D1 };
        let want = want.map_or(SiftOutcome::Inconclusive, |s| SiftOutcome::Conclusive(label(s)));
        if sift(set, basis, det) != want {
            return Err(format!("sift {{{a},{b}}} {basis:?} {det:?} disagrees with the table"));
        }
    }

    let mut s = Scenario::preset("clavis2").map_err(|e| e.to_string())?;
    s.profile = ideal();
    s.frame.mu = 0.02;
    s.frame.t_channel = 1.0;
    s.frame.t_bob = 1.0;
    s.frame.deadtime_gates = 0;
    s.n_sim = 2000;
    let t = run_baseline(&s, 4).map_err(|e| e.to_string())?.tally;
    if t.errors != 0 || !common::within_3_sigma(t.conclusive, t.clicks, 0.25) {
        return Err(format!("noiseless: {} errors, {} of {} conclusive", t.errors, t.conclusive, t.clicks));
    }
    let noiseless_frac = t.conclusive as f64 / t.clicks as f64;

    let mut s = Scenario::preset("clavis2").map_err(|e| e.to_string())?;
    s.frame.mu = 0.0;
    let d = run_baseline(&s, 8).map_err(|e| e.to_string())?.tally;
    if !common::within_3_sigma(d.errors, d.conclusive, 0.5) {
        return Err(format!("dark-only: {} errors of {} conclusive", d.errors, d.conclusive));
    }
    Ok(format!(
        "16-row table ok; noiseless q = 0, conclusive {noiseless_frac:.4}; dark-only q = {:.4}",
        d.errors as f64 / d.conclusive as f64
    ))
}

fn detector_numerics() -> Check {
    let d1 = DetectorParams::CLAVIS2_D1;
    let mut rng = stream(9, &[9]);
    let mut worst: f64 = 0.0;
    for case in 0..2000 {
        let n = rng.random_range(1..=1075);
        let pulses: Vec<usize> = if case == 0 {
            (1..=20).collect()
        } else {
            (1..=n).filter(|_| rng.random_bool(0.1)).collect()
        };
        let ledger = BrightPulseLedger::new(pulses.clone(), SLOT_PERIOD_US, 1075).map_err(|e| e.to_string())?;
        let slot = if case == 0 { 21 } else { rng.random_range(1..=1075) };
        for p in [&d1, &DetectorParams::CLAVIS2_D0] {
            let got = cumulative_afterpulse(p, &ledger, slot);
            worst = worst.max((got - common::afterpulse_brute(p, &pulses, slot, SLOT_PERIOD_US)).abs());
        }
    }
    if worst > 1e-12 {
        return Err(format!("cumulative afterpulse off the brute-force sum by {worst:e}"));
    }

    let mut runner = TestRunner::new(PropConfig {
        cases: 100_000,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let unit = 0.0..=1.0f64;
    let inputs = (
        unit.clone(),
        unit.clone(),
        0.0..2.0f64,
        0.01..10.0f64,
        0.0..2.0f64,
        0.01..10.0f64,
        1e-6..50.0f64,
        0u32..200,
        (unit.clone(), unit),
    );
    runner
        .run(&inputs, |(eta, dark, a1, t1, a2, t2, dt, m, (x, y))| {
            let p = DetectorParams {
                eta,
                dark,
                ap_amp1: a1,
                ap_tau1: t1,
                ap_amp2: a2,
                ap_tau2: t2,
            };
            let ap = afterpulse_prob(&p, dt).unwrap();
            let ledger = BrightPulseLedger::new((1..=m as usize % 40 + 1).collect(), SLOT_PERIOD_US, 1075).unwrap();
            let cum = cumulative_afterpulse(&p, &ledger, 42);
            let s = photonic_prob(eta, m);
            let n = noise_prob(x, y);
            let total = total_detection_prob(s, n);
            for v in [ap, cum, s, n, total, noise_prob(dark, cum)] {
                prop_assert!((0.0..=1.0).contains(&v), "{v}");
            }
            Ok(())
        })
        .map_err(|e| format!("probability range: {e}"))?;

    let (clicks_z, _) = common::twenty_slot::worst_z(100_000, 1);
    ensure(
        clicks_z <= 3.0,
        format!("brute-force gap {worst:.1e}; 1e5 property cases in [0,1]; 20-slot worst click deviation {clicks_z:.2} sigma"),
    )
}

fn phase_readout() -> Check {
    let mut notes = Vec::new();
    for mu_sig in [100.0f64, 1.0] {
        let slots = 100_000;
        let mut rng = stream(10, &[mu_sig.to_bits()]);
        let bits: Vec<u8> = (0..slots).map(|_| rng.random_range(0..2)).collect();
        let r = simulate_phase_readout(&bits, mu_sig, &HomodyneModel::IDEAL, &mut rng).map_err(|e| e.to_string())?;
        let err = homodyne_error_prob(mu_sig, &HomodyneModel::IDEAL);
        let se = (err * (1.0 - err) / slots as f64).sqrt();
        let dev = (r.correlation - (1.0 - err)).abs();
        if dev > 3.0 * se + 1e-12 {
            return Err(format!("mu_sig {mu_sig}: correlation {} vs analytic {}", r.correlation, 1.0 - err));
        }
        if mu_sig == 100.0 && r.correlation < 0.99 {
            return Err(format!("mu_sig 100: correlation {} < 0.99", r.correlation));
        }
        notes.push(format!("mu_sig {mu_sig}: {:.5} vs {:.5}", r.correlation, 1.0 - err));
    }
    Ok(notes.join("; "))
}

fn cli_outputs(args: &[&str], out: &Path, workers: usize) -> Result<Vec<(String, Vec<u8>)>, String> {
    let w = workers.to_string();
    let mut full = vec!["qkd-trojan", "--out", out.to_str().unwrap(), "--workers", &w];
    full.extend_from_slice(args);
    let cli = <Cli as clap::Parser>::try_parse_from(&full).map_err(|e| e.to_string())?;
    let outcome = cli::run(&cli).map_err(|e| format!("{args:?}: {e}"))?;
    outcome
        .manifest
        .files
        .iter()
        .map(|f| {
            let bytes = std::fs::read(out.join(&f.file)).map_err(|e| e.to_string())?;
            Ok((f.file.clone(), bytes))
        })
        .collect()
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = |f: &str| configs().join(f).to_string_lossy().into_owned();
    let (clavis, quick, budget, readout) = (
        cfg("clavis2.toml"),
        cfg("quick-sweep.toml"),
        cfg("budget.toml"),
        cfg("readout.toml"),
    );
    let commands: Vec<Vec<&str>> = vec![
        vec!["--config", &clavis, "baseline"],
        vec!["--config", &clavis, "--seed", "5", "simulate", "--trace", "3"],
        vec!["--config", &quick, "sweep"],
        vec!["--config", &budget, "budget"],
        vec!["--config", &readout, "readout"],
    ];
    let mut files = 0;
    for (i, args) in commands.iter().enumerate() {
        let runs = [(1, "a"), (3, "b"), (1, "c")]
            .iter()
            .map(|&(w, tag)| cli_outputs(args, &dir.path().join(format!("{i}{tag}")), w))
            .collect::<Result<Vec<_>, _>>()?;
        for pair in runs.windows(2) {
            if pair[0] != pair[1] {
                return Err(format!("{args:?}: outputs differ between runs"));
            }
        }
        // The manifest embeds the output path; its digests are already
        // covered by comparing every other file.
        files += runs[0].iter().filter(|(f, _)| f != "manifest.json").count();
    }
    Ok(format!("{} commands, {files} files byte-identical across workers 1/3 and re-runs", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("baseline QBER", baseline_qber),
        ("optimal mean photon number", optimal_photon_number),
        ("photon budget", photon_budget),
        ("pattern tiler", tiler),
        ("scenario (a): clavis2 has no feasible attack", scenario_a),
        ("scenario (b): d0-both with preprocessing", scenario_b),
        ("scenario (c): improved detectors", scenario_c),
        ("SARG04 oracle suite", sarg04_suite),
        ("detector-model numerics", detector_numerics),
        ("phase readout", phase_readout),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n}: PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                println!("criterion {n}: FAIL  {name}: {detail} [{secs:.1}s]");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria pass");
    } else {
        println!("acceptance: {} of 11 failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
