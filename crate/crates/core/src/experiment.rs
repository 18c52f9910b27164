//! End-to-end runs, feasibility, and the attack-parameter sweep.
//!
//! A run simulates `n_sim` frames. Each frame is attacked with probability
//! `r`; attacked frames get the triad pattern, its transmission vector and
//! its bright-pulse ledger, the others pass untouched. Conclusive slots of
//! all frames are pooled before the QBER and Eve's known fraction are
//! computed.
//!
//! Randomness is keyed: frame `i` of a run seeded with `s` always draws from
//! the stream `(s, FRAME, i)`, so frames may be simulated in any order or in
//! parallel without changing the result.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{
    bright_ledger, build_pattern, select_attacked_frames, transmission_vector, AttackConfig, AttackPattern,
    AttackTriad, SlotClass,
};
use crate::detector::{DetectorProfile, NoiseProfile};
use crate::error::{Error, Result};
use crate::frame::{
    apply_channel, detection_probs, generate_frame, random_bases, route_photons, simulate_detection_with_noise, FrameConfig,
    SlotOutcome,
};
use crate::rng::{self, tag, SimRng};
use crate::sarg04::{eve_information_with, i_est_lookup, reconcile, EstTable, InfoCombiner, Qber, StateLabel};

/// Abort thresholds of the legitimate parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub q_abort: f64,
    pub delta_max: f64,
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("q_abort", self.q_abort), ("delta_max", self.delta_max)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("threshold {name} = {v} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Everything needed to run an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub profile: DetectorProfile,
    pub frame: FrameConfig,
    pub attack: AttackConfig,
    /// Alice's preprocessing.
    pub y: f64,
    pub thresholds: Thresholds,
    pub i_est: f64,
    pub combiner: InfoCombiner,
    pub n_sim: usize,
    pub seed: u64,
    /// Expected clicks per frame; measured by a baseline run when `None`.
    pub gamma_exp: Option<f64>,
}

/// Default number of frames per run.
pub const DEFAULT_N_SIM: usize = 10_000;

impl Scenario {
    /// One of the three reference scenarios: `clavis2`, `d0-both`, `improved`.
    ///
    /// All use `T = 0.25`, `T_LL = 0.9`, and `delta_max = 0.15`; the attack
    /// defaults to triad (20, 161, 50) on 80% of the frames.
    pub fn preset(name: &str) -> Result<Scenario> {
        let (y, q_abort) = match name {
            "clavis2" => (0.0, 0.08),
            "d0-both" => (0.4, 0.11),
            "improved" => (0.0, 0.08),
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario preset {other:?} (expected clavis2, d0-both, improved)"
                )))
            }
        };
        let profile = DetectorProfile::builtin(name)?;
        let t = 0.25;
        let i_est = i_est_lookup(&EstTable::default(), name, y, t)?;
        Ok(Scenario {
            profile,
            frame: FrameConfig::for_transmission(t),
            attack: AttackConfig::new(AttackTriad::new(20, 161, 50), 0.8),
            y,
            thresholds: Thresholds {
                q_abort,
                delta_max: 0.15,
            },
            i_est,
            combiner: InfoCombiner::default(),
            n_sim: DEFAULT_N_SIM,
            seed: 0,
            gamma_exp: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.d0.validate()?;
        self.profile.d1.validate()?;
        self.frame.validate()?;
        self.attack.validate(self.frame.n_slots)?;
        self.thresholds.validate()?;
        if !(0.0..=1.0).contains(&self.y) {
            return Err(Error::Config(format!("preprocessing y = {} outside [0, 1]", self.y)));
        }
        if !(0.0..=1.0).contains(&self.i_est) {
            return Err(Error::Config(format!("i_est = {} outside [0, 1]", self.i_est)));
        }
        if self.n_sim == 0 {
            return Err(Error::Config("n_sim must be at least 1".into()));
        }
        if let Some(g) = self.gamma_exp {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("supplied gamma_exp = {g} must be positive")));
            }
        }
        Ok(())
    }

    pub fn with_attack(&self, r: f64, triad: AttackTriad) -> Scenario {
        let mut s = self.clone();
        s.attack.r = r;
        s.attack.triad = triad;
        s
    }
}

/// Counters pooled over the frames of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub frames: u64,
    pub attacked_frames: u64,
    pub clicks: u64,
    pub double_clicks: u64,
    pub withdrawn: u64,
    pub conclusive: u64,
    pub errors: u64,
    pub known: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.frames += o.frames;
        self.attacked_frames += o.attacked_frames;
        self.clicks += o.clicks;
        self.double_clicks += o.double_clicks;
        self.withdrawn += o.withdrawn;
        self.conclusive += o.conclusive;
        self.errors += o.errors;
        self.known += o.known;
        self
    }

    pub fn qber(&self) -> Qber {
        Qber::from_counts(self.errors, self.conclusive)
    }

    /// Binomial standard error of the pooled QBER.
    pub fn qber_se(&self) -> Option<f64> {
        let q = self.qber().value()?;
        Some((q * (1.0 - q) / self.conclusive as f64).sqrt())
    }

    pub fn f_known(&self) -> f64 {
        if self.conclusive == 0 {
            0.0
        } else {
            self.known as f64 / self.conclusive as f64
        }
    }

    /// Mean resolved clicks per frame.
    pub fn gamma(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.clicks as f64 / self.frames as f64
        }
    }
}

/// Everything that happened in one frame, slot by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub attacked: bool,
    pub classes: Vec<SlotClass>,
    pub states: Vec<StateLabel>,
    pub photons_at_bob: Vec<u32>,
    pub m0: Vec<u32>,
    pub m1: Vec<u32>,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub outcomes: Vec<SlotOutcome>,
    pub conclusive: Vec<bool>,
    pub eve_knows: Vec<bool>,
}

/// Per-run precomputation shared by all frames.
struct RunPlan<'a> {
    scenario: &'a Scenario,
    pattern: AttackPattern,
    normal: AttackPattern,
    trans_attacked: Vec<f64>,
    trans_normal: Vec<f64>,
    noise_attacked: NoiseProfile,
    noise_normal: NoiseProfile,
    marks_attacked: Vec<bool>,
    marks_normal: Vec<bool>,
    attacked: Vec<bool>,
}

impl<'a> RunPlan<'a> {
    fn new(scenario: &'a Scenario, seed: u64, r: f64) -> Result<Self> {
        let n = scenario.frame.n_slots;
        let pattern = build_pattern(&scenario.attack.triad, n)?;
        let normal = AttackPattern::normal(n);
        let ledger = bright_ledger(&pattern, scenario.frame.slot_period_us);
        let attacked = select_attacked_frames(r, scenario.n_sim, &mut rng::stream(seed, &[tag::ATTACK_SELECT]))?;
        Ok(RunPlan {
            trans_attacked: transmission_vector(&pattern, scenario.frame.t_channel, scenario.attack.t_ll),
            trans_normal: transmission_vector(&normal, scenario.frame.t_channel, scenario.attack.t_ll),
            noise_attacked: NoiseProfile::new(&scenario.profile, &ledger, n),
            noise_normal: NoiseProfile::dark_only(&scenario.profile, n),
            marks_attacked: pattern.attack_marks(),
            marks_normal: vec![false; n],
            scenario,
            pattern,
            normal,
            attacked,
        })
    }

    fn frame(&self, index: usize, rng: &mut SimRng, want_trace: bool) -> Result<(Tally, Option<FrameTrace>)> {
        let s = self.scenario;
        let attacked = self.attacked[index];
        let (pattern, trans, noise) = if attacked {
            (&self.pattern, &self.trans_attacked, &self.noise_attacked)
        } else {
            (&self.normal, &self.trans_normal, &self.noise_normal)
        };
        let sent = generate_frame(&s.frame, rng)?;
        let at_bob = apply_channel(&sent, trans, rng)?;
        let bases = random_bases(s.frame.n_slots, rng);
        let (m0, m1) = route_photons(&at_bob, &bases, s.frame.t_bob, rng)?;
        let clicks = simulate_detection_with_noise(&m0, &m1, &s.profile, noise, &s.frame, rng)?;
        let marks = if attacked { &self.marks_attacked } else { &self.marks_normal };
        let misread;
        let marks = if s.attack.readout_error > 0.0 && attacked {
            misread = marks
                .iter()
                .map(|&m| m && !rng.random_bool(s.attack.readout_error))
                .collect::<Vec<bool>>();
            &misread
        } else {
            marks
        };
        let rec = reconcile(&sent.states, &clicks.detectors(), &bases, marks, rng)?;

        let tally = Tally {
            frames: 1,
            attacked_frames: u64::from(attacked),
            clicks: clicks.click_count() as u64,
            double_clicks: clicks.double_clicks() as u64,
            withdrawn: clicks.withdrawn() as u64,
            conclusive: rec.records.len() as u64,
            errors: rec.errors(),
            known: rec.records.iter().filter(|r| r.eve_knows).count() as u64,
        };
        if !want_trace {
            return Ok((tally, None));
        }
        let mut conclusive = vec![false; s.frame.n_slots];
        let mut eve_knows = vec![false; s.frame.n_slots];
        for r in &rec.records {
            conclusive[r.slot - 1] = true;
            eve_knows[r.slot - 1] = r.eve_knows;
        }
        let (p0, p1) = detection_probs(&m0, &m1, &s.profile, noise);
        let trace = FrameTrace {
            attacked,
            classes: pattern.classes().to_vec(),
            states: sent.states,
            photons_at_bob: at_bob.photons,
            m0,
            m1,
            p0,
            p1,
            outcomes: clicks.outcomes,
            conclusive,
            eve_knows,
        };
        Ok((tally, Some(trace)))
    }

    fn run(&self, seed: u64) -> Result<Tally> {
        (0..self.scenario.n_sim)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::frame_stream(seed, i as u64);
                self.frame(i, &mut rng, false).map(|(t, _)| t)
            })
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
    }
}

/// Result of an unattacked reference run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baseline {
    pub gamma_exp: f64,
    /// Standard error of `gamma_exp`.
    pub gamma_se: f64,
    pub qber: Option<f64>,
    pub qber_se: Option<f64>,
    pub tally: Tally,
}

impl Baseline {
    pub fn qber_status(&self) -> Qber {
        self.tally.qber()
    }
}

fn frame_click_variance(scenario: &Scenario, seed: u64, r: f64) -> Result<(Tally, f64)> {
    let plan = RunPlan::new(scenario, seed, r)?;
    // Second pass over click counts for the variance; the per-frame counts
    // are cheap to keep compared with the simulation itself.
    let per_frame: Vec<Tally> = (0..scenario.n_sim)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::frame_stream(seed, i as u64);
            plan.frame(i, &mut rng, false).map(|(t, _)| t)
        })
        .collect::<Result<_>>()?;
    let total = per_frame.iter().fold(Tally::default(), |a, &b| a.merge(b));
    let mean = total.gamma();
    let var = per_frame
        .iter()
        .map(|t| (t.clicks as f64 - mean).powi(2))
        .sum::<f64>()
        / (per_frame.len().max(2) - 1) as f64;
    Ok((total, var))
}

/// Simulate `scenario.n_sim` unattacked frames.
///
/// Uses a stream derived from `seed` that is disjoint from the one
/// [`run_experiment`] uses with the same seed.
pub fn run_baseline(scenario: &Scenario, seed: u64) -> Result<Baseline> {
    scenario.validate()?;
    let base_seed = rng::derive_seed(seed, &[tag::BASELINE]);
    let (tally, var) = frame_click_variance(scenario, base_seed, 0.0)?;
    Ok(Baseline {
        gamma_exp: tally.gamma(),
        gamma_se: (var / tally.frames as f64).sqrt(),
        qber: tally.qber().value(),
        qber_se: tally.qber_se(),
        tally,
    })
}

/// Observables and verdict of one attack configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub r: f64,
    pub triad: AttackTriad,
    pub q: f64,
    pub q_se: f64,
    pub gamma_obs: f64,
    pub gamma_exp: f64,
    pub delta_b: f64,
    pub f_known: f64,
    pub i_act: f64,
    pub i_est: f64,
    pub feasible: bool,
    pub diagnostics: Tally,
}

impl RunResult {
    /// Eve's advantage over the estimate; positive means leaked key.
    pub fn margin(&self) -> f64 {
        self.i_act - self.i_est
    }
}

/// The three attack-success conditions.
pub fn is_feasible(q: f64, delta_b: f64, i_act: f64, i_est: f64, thresholds: &Thresholds) -> bool {
    q < thresholds.q_abort && delta_b <= thresholds.delta_max && i_act > i_est
}

/// Run the attacked experiment described by `scenario` with `seed`.
pub fn run_experiment(scenario: &Scenario, seed: u64) -> Result<RunResult> {
    scenario.validate()?;
    let gamma_exp = match scenario.gamma_exp {
        Some(g) => g,
        None => run_baseline(scenario, seed)?.gamma_exp,
    };
    if !(gamma_exp > 0.0) {
        return Err(Error::NoData("expected detection rate is zero".into()));
    }
    let plan = RunPlan::new(scenario, seed, scenario.attack.r)?;
    let tally = plan.run(seed)?;
    finish(scenario, tally, gamma_exp)
}

fn finish(scenario: &Scenario, tally: Tally, gamma_exp: f64) -> Result<RunResult> {
    let q = tally
        .qber()
        .value()
        .ok_or_else(|| Error::NoData("no conclusive slots in the run".into()))?;
    let gamma_obs = tally.gamma();
    let delta_b = (1.0 - gamma_obs / gamma_exp).abs();
    let f_known = tally.f_known();
    let i_act = eve_information_with(scenario.combiner, f_known, q, scenario.y)?;
    Ok(RunResult {
        r: scenario.attack.r,
        triad: scenario.attack.triad,
        q,
        q_se: tally.qber_se().unwrap_or(0.0),
        gamma_obs,
        gamma_exp,
        delta_b,
        f_known,
        i_act,
        i_est: scenario.i_est,
        feasible: is_feasible(q, delta_b, i_act, scenario.i_est, &scenario.thresholds),
        diagnostics: tally,
    })
}

/// Slot-level record of frame `index` exactly as [`run_experiment`] with the
/// same seed simulates it.
pub fn trace_frame(scenario: &Scenario, seed: u64, index: usize) -> Result<FrameTrace> {
    scenario.validate()?;
    if index >= scenario.n_sim {
        return Err(Error::Config(format!(
            "trace frame {index} outside the run of {} frames",
            scenario.n_sim
        )));
    }
    let plan = RunPlan::new(scenario, seed, scenario.attack.r)?;
    let mut rng = rng::frame_stream(seed, index as u64);
    plan.frame(index, &mut rng, true).map(|(_, t)| t.expect("trace requested"))
}

/// Value lists spanning the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub r: Vec<f64>,
    pub n_ab: Vec<usize>,
    pub n_el: Vec<usize>,
    pub n_ss: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            r: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            n_ab: vec![5, 10, 20, 40],
            n_el: vec![0, 50, 100, 200],
            n_ss: vec![25, 50, 100, 200],
        }
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Combination {
    pub r: f64,
    pub triad: AttackTriad,
}

impl Combination {
    /// Seed of this combination's stream: a function of the master seed and
    /// the combination's own values, never of its position in the grid.
    pub fn seed(&self, master: u64) -> u64 {
        rng::derive_seed(
            master,
            &[
                tag::COMBINATION,
                self.r.to_bits(),
                self.triad.n_ab as u64,
                self.triad.n_el as u64,
                self.triad.n_ss as u64,
            ],
        )
    }

    fn sort_key(&self) -> (u64, usize, usize, usize) {
        (self.r.to_bits(), self.triad.n_ab, self.triad.n_el, self.triad.n_ss)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    pub template: Scenario,
}

impl SweepSpec {
    pub fn combinations(&self) -> Vec<Combination> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.r.len() * g.n_ab.len() * g.n_el.len() * g.n_ss.len());
        for &r in &g.r {
            for &n_ab in &g.n_ab {
                for &n_el in &g.n_el {
                    for &n_ss in &g.n_ss {
                        out.push(Combination {
                            r,
                            triad: AttackTriad::new(n_ab, n_el, n_ss),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        for (name, empty) in [
            ("r", g.r.is_empty()),
            ("n_ab", g.n_ab.is_empty()),
            ("n_el", g.n_el.is_empty()),
            ("n_ss", g.n_ss.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("sweep grid list {name} is empty")));
            }
        }
        self.template.validate()?;
        for c in self.combinations() {
            self.template
                .with_attack(c.r, c.triad)
                .attack
                .validate(self.template.frame.n_slots)?;
        }
        Ok(())
    }
}

/// Outcome of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SweepEntry {
    Ok(RunResult),
    Failed { combination: Combination, error: String },
}

impl SweepEntry {
    pub fn result(&self) -> Option<&RunResult> {
        match self {
            SweepEntry::Ok(r) => Some(r),
            SweepEntry::Failed { .. } => None,
        }
    }

    fn combination(&self) -> Combination {
        match self {
            SweepEntry::Ok(r) => Combination { r: r.r, triad: r.triad },
            SweepEntry::Failed { combination, .. } => *combination,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub baseline: Baseline,
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    pub fn feasible_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.result().is_some_and(|r| r.feasible))
            .count()
    }

    pub fn best(&self) -> Option<&RunResult> {
        self.entries.iter().find_map(|e| e.result())
    }
}

/// Evaluate every grid point against one shared baseline and rank the results:
/// feasible first, then by `i_act - i_est`, failures last.
///
/// `workers` bounds the number of threads; the output does not depend on it.
pub fn sweep(spec: &SweepSpec, workers: usize) -> Result<SweepReport> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let master = spec.template.seed;
        let baseline = match spec.template.gamma_exp {
            Some(g) => Baseline {
                gamma_exp: g,
                gamma_se: 0.0,
                qber: None,
                qber_se: None,
                tally: Tally::default(),
            },
            None => run_baseline(&spec.template, master)?,
        };
        let mut entries: Vec<SweepEntry> = spec
            .combinations()
            .into_par_iter()
            .map(|c| {
                let mut s = spec.template.with_attack(c.r, c.triad);
                s.gamma_exp = Some(baseline.gamma_exp);
                match run_experiment(&s, c.seed(master)) {
                    Ok(r) => SweepEntry::Ok(r),
                    Err(e) => SweepEntry::Failed {
                        combination: c,
                        error: e.to_string(),
                    },
                }
            })
            .collect();
        entries.sort_by(rank);
        Ok(SweepReport { baseline, entries })
    })
}

fn rank(a: &SweepEntry, b: &SweepEntry) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let primary = match (a.result(), b.result()) {
        (Some(x), Some(y)) => y
            .feasible
            .cmp(&x.feasible)
            .then_with(|| y.margin().total_cmp(&x.margin())),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    };
    primary.then_with(|| a.combination().sort_key().cmp(&b.combination().sort_key()))
}
