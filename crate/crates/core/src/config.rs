//! Scenario files.
//!
//! A config is a TOML document. Every section is optional; whatever is left
//! out comes from the preset named by the top-level `scenario` key
//! (`clavis2` when absent). Unknown keys are rejected so a misspelt
//! parameter can never silently fall back to its default.
//!
//! ```toml
//! scenario = "improved"
//!
//! [channel]
//! t = 0.25
//!
//! [attack]
//! r = 0.6
//! n_ab = 20
//! n_el = 100
//! n_ss = 200
//!
//! [run]
//! n_sim = 2000
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::AttackTriad;
use crate::detector::{DetectorParams, DetectorProfile};
use crate::error::{Error, Result};
use crate::experiment::{Scenario, SweepGrid, SweepSpec};
use crate::frame::optimal_mu;
use crate::optics::{default_reflection_map, load_reflection_map, HomodyneModel, ReflectionEntry};
use crate::sarg04::{i_est_lookup, EstEntry, EstTable, InfoCombiner};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    #[serde(default)]
    detector: DetectorSection,
    #[serde(default)]
    channel: ChannelSection,
    #[serde(default)]
    attack: AttackSection,
    #[serde(default)]
    protocol: ProtocolSection,
    #[serde(default)]
    thresholds: ThresholdSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    budget: BudgetSection,
    #[serde(default)]
    readout: ReadoutSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    profile: Option<String>,
    /// Name reported for a custom pair; also the est-table key.
    name: Option<String>,
    d0: Option<DetectorParams>,
    d1: Option<DetectorParams>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    t: Option<f64>,
    t_bob: Option<f64>,
    mu: Option<f64>,
    n_slots: Option<usize>,
    slot_period_us: Option<f64>,
    deadtime_gates: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackSection {
    r: Option<f64>,
    n_ab: Option<usize>,
    n_el: Option<usize>,
    n_ss: Option<usize>,
    t_ll: Option<f64>,
    mu_eb: Option<f64>,
    readout_error: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolSection {
    y: Option<f64>,
    i_est: Option<f64>,
    combiner: Option<InfoCombiner>,
    #[serde(default)]
    est_table: Vec<EstEntry>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdSection {
    q_abort: Option<f64>,
    delta_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    n_sim: Option<usize>,
    seed: Option<u64>,
    gamma_exp: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    r: Option<Vec<f64>>,
    n_ab: Option<Vec<usize>>,
    n_el: Option<Vec<usize>>,
    n_ss: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetSection {
    mu_in: Option<f64>,
    level_db: Option<f64>,
    map: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadoutSection {
    mu_sig: Option<f64>,
    slots: Option<usize>,
    visibility: Option<f64>,
    efficiency: Option<f64>,
    electronic_noise_var: Option<f64>,
}

/// Photon-budget request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSpec {
    pub mu_in: f64,
    pub reflections: Vec<ReflectionEntry>,
}

/// Phase-readout request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadoutSpec {
    pub mu_sig: f64,
    pub slots: usize,
    pub model: HomodyneModel,
}

/// Default brightness of Eve's probe in budget calculations.
pub const DEFAULT_BUDGET_MU_IN: f64 = 2e6;

impl Default for ReadoutSpec {
    fn default() -> Self {
        ReadoutSpec {
            mu_sig: 100.0,
            slots: 100_000,
            model: HomodyneModel::IDEAL,
        }
    }
}

/// A fully resolved config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    /// File the config was read from, if any.
    pub source: Option<PathBuf>,
    pub scenario: Scenario,
    pub grid: SweepGrid,
    pub budget: BudgetSpec,
    pub readout: ReadoutSpec,
}

impl Config {
    /// A preset with every other section at its default.
    pub fn preset(name: &str) -> Result<Config> {
        Config::parse(&format!("scenario = {name:?}"), None)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Config::parse(&text, path.parent())?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Parse config text; relative paths inside resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Config> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        resolve(raw, base_dir)
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            grid: self.grid.clone(),
            template: self.scenario.clone(),
        }
    }
}

fn resolve(raw: RawConfig, base_dir: Option<&Path>) -> Result<Config> {
    let preset = raw.scenario.as_deref().unwrap_or("clavis2");
    let mut s = Scenario::preset(preset)?;

    let det = raw.detector;
    match (det.profile, det.d0, det.d1) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(Error::Config(
                "detector: give either `profile` or custom `d0`/`d1` tables, not both".into(),
            ))
        }
        (Some(name), None, None) => {
            if det.name.is_some() {
                return Err(Error::Config("detector.name only applies to custom tables".into()));
            }
            s.profile = DetectorProfile::builtin(&name)?;
        }
        (None, Some(d0), Some(d1)) => {
            s.profile = DetectorProfile::new(det.name.unwrap_or_else(|| "custom".into()), d0, d1)?;
        }
        (None, Some(_), None) | (None, None, Some(_)) => {
            return Err(Error::Config("detector: custom tables need both d0 and d1".into()))
        }
        (None, None, None) => {
            if det.name.is_some() {
                return Err(Error::Config("detector.name only applies to custom tables".into()));
            }
        }
    }

    let ch = raw.channel;
    if let Some(t) = ch.t {
        s.frame.t_channel = t;
        s.frame.mu = optimal_mu(t);
    }
    if let Some(mu) = ch.mu {
        s.frame.mu = mu;
    }
    set(&mut s.frame.t_bob, ch.t_bob);
    set(&mut s.frame.n_slots, ch.n_slots);
    set(&mut s.frame.slot_period_us, ch.slot_period_us);
    set(&mut s.frame.deadtime_gates, ch.deadtime_gates);

    let at = raw.attack;
    let tr = s.attack.triad;
    s.attack.triad = AttackTriad::new(
        at.n_ab.unwrap_or(tr.n_ab),
        at.n_el.unwrap_or(tr.n_el),
        at.n_ss.unwrap_or(tr.n_ss),
    );
    set(&mut s.attack.r, at.r);
    set(&mut s.attack.t_ll, at.t_ll);
    set(&mut s.attack.mu_eb, at.mu_eb);
    set(&mut s.attack.readout_error, at.readout_error);

    let pr = raw.protocol;
    set(&mut s.y, pr.y);
    set(&mut s.combiner, pr.combiner);
    s.i_est = match pr.i_est {
        Some(v) => v,
        None => {
            let mut table = EstTable::default();
            table.extend_from(&pr.est_table)?;
            i_est_lookup(&table, &s.profile.name, s.y, s.frame.t_channel)?
        }
    };

    set(&mut s.thresholds.q_abort, raw.thresholds.q_abort);
    set(&mut s.thresholds.delta_max, raw.thresholds.delta_max);

    set(&mut s.n_sim, raw.run.n_sim);
    set(&mut s.seed, raw.run.seed);
    if raw.run.gamma_exp.is_some() {
        s.gamma_exp = raw.run.gamma_exp;
    }
    s.validate()?;

    let mut grid = SweepGrid::default();
    let sw = raw.sweep;
    set(&mut grid.r, sw.r);
    set(&mut grid.n_ab, sw.n_ab);
    set(&mut grid.n_el, sw.n_el);
    set(&mut grid.n_ss, sw.n_ss);

    let b = raw.budget;
    let reflections = match (b.level_db, b.map) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("budget: give either `level_db` or `map`, not both".into()))
        }
        (Some(level_db), None) => {
            let e = ReflectionEntry {
                delay_ns: 0.0,
                level_db,
                label: "configured".into(),
                wavelength_nm: 1550.0,
            };
            e.validate()?;
            vec![e]
        }
        (None, Some(map)) => {
            let path = match base_dir {
                Some(dir) if map.is_relative() => dir.join(map),
                _ => map,
            };
            load_reflection_map(&path)?
        }
        (None, None) => default_reflection_map(),
    };
    let mu_in = b.mu_in.unwrap_or(DEFAULT_BUDGET_MU_IN);
    if !(mu_in >= 0.0 && mu_in.is_finite()) {
        return Err(Error::Config(format!("budget.mu_in = {mu_in} must be non-negative")));
    }

    let ro = raw.readout;
    let mut readout = ReadoutSpec::default();
    set(&mut readout.mu_sig, ro.mu_sig);
    set(&mut readout.slots, ro.slots);
    set(&mut readout.model.visibility, ro.visibility);
    set(&mut readout.model.efficiency, ro.efficiency);
    set(&mut readout.model.electronic_noise_var, ro.electronic_noise_var);
    readout.model.validate()?;
    if !(readout.mu_sig >= 0.0 && readout.mu_sig.is_finite()) {
        return Err(Error::Config(format!("readout.mu_sig = {} must be non-negative", readout.mu_sig)));
    }
    if readout.slots == 0 {
        return Err(Error::Config("readout.slots must be at least 1".into()));
    }

    Ok(Config {
        source: None,
        scenario: s,
        grid,
        budget: BudgetSpec { mu_in, reflections },
        readout,
    })
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
