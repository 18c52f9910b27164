//! Eve's frame manipulation.
//!
//! An attacked frame is tiled from its last slot backwards with copies of a
//! triad: `n_ab` attacked slots, `n_el` extinguished slots, `n_ss`
//! substituted slots. Read forward in time, every attack burst is preceded by
//! an extinguished stretch and followed by a substitution sequence, and the
//! frame always ends on a burst. Whatever does not fit at the front of the
//! frame receives one more burst when there is room for it, and is
//! extinguished otherwise.
//!
//! Attacked and substituted slots travel over a low-loss line; extinguished
//! slots are blocked; Trojan pulses are sent only on attacked slots.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::BrightPulseLedger;
use crate::error::{Error, Result};
use crate::sarg04::SiftedRecord;

/// Brightest Trojan pulse that does not itself trigger a click.
pub const MAX_TROJAN_MU: f64 = 2e6;

/// Transmission of Eve's low-loss line.
pub const DEFAULT_LOW_LOSS_TRANSMISSION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttackTriad {
    pub n_ab: usize,
    pub n_el: usize,
    pub n_ss: usize,
}

impl AttackTriad {
    pub fn new(n_ab: usize, n_el: usize, n_ss: usize) -> Self {
        AttackTriad { n_ab, n_el, n_ss }
    }

    pub fn len(&self) -> usize {
        self.n_ab + self.n_el + self.n_ss
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, n_f: usize) -> Result<()> {
        if self.n_ab == 0 {
            return Err(Error::Config("attack burst length n_ab must be at least 1".into()));
        }
        if self.len() > n_f {
            return Err(Error::Config(format!(
                "triad ({}, {}, {}) spans {} slots, more than the {n_f}-slot frame",
                self.n_ab,
                self.n_el,
                self.n_ss,
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotClass {
    Attacked,
    Substituted,
    Extinguished,
    Normal,
}

impl SlotClass {
    pub fn label(self) -> &'static str {
        match self {
            SlotClass::Attacked => "attacked",
            SlotClass::Substituted => "substituted",
            SlotClass::Extinguished => "extinguished",
            SlotClass::Normal => "normal",
        }
    }
}

/// Per-slot classes of one frame plus the tiling bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackPattern {
    classes: Vec<SlotClass>,
    /// Whole triads that fit.
    pub k: usize,
    /// Slots left over at the front of the frame.
    pub n_u: usize,
    /// Extinguished slots at the very start of the frame.
    pub n_el0: usize,
    /// Whether the leftover received an additional burst.
    pub extra_burst: bool,
}

impl AttackPattern {
    /// A frame Eve leaves alone.
    pub fn normal(n_f: usize) -> Self {
        AttackPattern {
            classes: vec![SlotClass::Normal; n_f],
            k: 0,
            n_u: 0,
            n_el0: 0,
            extra_burst: false,
        }
    }

    pub fn classes(&self) -> &[SlotClass] {
        &self.classes
    }

    /// Class of 1-based `slot`.
    pub fn class(&self, slot: usize) -> SlotClass {
        self.classes[slot - 1]
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn count(&self, class: SlotClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn is_attacked(&self, slot: usize) -> bool {
        self.class(slot) == SlotClass::Attacked
    }

    /// `true` for every attacked slot, indexed from 0.
    pub fn attack_marks(&self) -> Vec<bool> {
        self.classes.iter().map(|&c| c == SlotClass::Attacked).collect()
    }
}

/// Tile a frame of `n_f` slots with `triad`.
pub fn build_pattern(triad: &AttackTriad, n_f: usize) -> Result<AttackPattern> {
    triad.validate(n_f)?;
    let cycle = triad.len();
    let k = n_f / cycle;
    let n_u = n_f - k * cycle;
    let extra_burst = n_u > triad.n_ab;
    let n_el0 = if extra_burst { n_u - triad.n_ab } else { n_u };

    let mut classes = Vec::with_capacity(n_f);
    let mut push = |class: SlotClass, n: usize| classes.extend(std::iter::repeat_n(class, n));
    push(SlotClass::Extinguished, n_el0);
    if extra_burst {
        push(SlotClass::Attacked, triad.n_ab);
    }
    for _ in 0..k {
        push(SlotClass::Substituted, triad.n_ss);
        push(SlotClass::Extinguished, triad.n_el);
        push(SlotClass::Attacked, triad.n_ab);
    }
    debug_assert_eq!(classes.len(), n_f);
    Ok(AttackPattern {
        classes,
        k,
        n_u,
        n_el0,
        extra_burst,
    })
}

/// Effective channel transmission per slot.
pub fn transmission_vector(pattern: &AttackPattern, t: f64, t_ll: f64) -> Vec<f64> {
    pattern
        .classes
        .iter()
        .map(|c| match c {
            SlotClass::Attacked | SlotClass::Substituted => t_ll,
            SlotClass::Extinguished => 0.0,
            SlotClass::Normal => t,
        })
        .collect()
}

/// Independently attack each frame with probability `r`.
pub fn select_attacked_frames<R: Rng + ?Sized>(r: f64, n_frames: usize, rng: &mut R) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Config(format!("attack rate r = {r} outside [0, 1]")));
    }
    Ok((0..n_frames).map(|_| rng.random::<f64>() < r).collect())
}

/// Bright pulses land on every attacked slot.
pub fn bright_ledger(pattern: &AttackPattern, slot_period_us: f64) -> BrightPulseLedger {
    let slots = pattern
        .classes
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == SlotClass::Attacked)
        .map(|(i, _)| i + 1)
        .collect();
    BrightPulseLedger::new(slots, slot_period_us, pattern.len()).expect("attacked slots are ascending and in range")
}

/// Running count of conclusive records and how many of them Eve knows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeTally {
    pub known: u64,
    pub total: u64,
}

impl KnowledgeTally {
    pub fn add(&mut self, other: KnowledgeTally) {
        self.known += other.known;
        self.total += other.total;
    }

    /// Fraction of records Eve knows; 0 without records.
    pub fn f_known(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.known as f64 / self.total as f64
        }
    }
}

/// Mark records whose slot Eve probed.
pub fn eve_known_slots(pattern: &AttackPattern, records: &[SiftedRecord]) -> (Vec<SiftedRecord>, KnowledgeTally) {
    let marked: Vec<SiftedRecord> = records
        .iter()
        .map(|r| SiftedRecord {
            eve_knows: pattern.is_attacked(r.slot),
            ..*r
        })
        .collect();
    let tally = KnowledgeTally {
        known: marked.iter().filter(|r| r.eve_knows).count() as u64,
        total: marked.len() as u64,
    };
    (marked, tally)
}

/// Everything Eve controls in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub triad: AttackTriad,
    /// Fraction of frames attacked.
    pub r: f64,
    /// Low-loss line transmission.
    pub t_ll: f64,
    /// Mean photon number of each Trojan pulse.
    pub mu_eb: f64,
    /// Probability that Eve misreads Bob's modulator on an attacked slot.
    pub readout_error: f64,
}

impl AttackConfig {
    pub fn new(triad: AttackTriad, r: f64) -> Self {
        AttackConfig {
            triad,
            r,
            t_ll: DEFAULT_LOW_LOSS_TRANSMISSION,
            mu_eb: MAX_TROJAN_MU,
            readout_error: 0.0,
        }
    }

    pub fn validate(&self, n_f: usize) -> Result<()> {
        self.triad.validate(n_f)?;
        for (name, v) in [("r", self.r), ("t_ll", self.t_ll), ("readout_error", self.readout_error)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(self.mu_eb >= 0.0 && self.mu_eb <= MAX_TROJAN_MU) {
            return Err(Error::Config(format!(
                "Trojan pulse brightness {} exceeds the no-click ceiling {MAX_TROJAN_MU}",
                self.mu_eb
            )));
        }
        Ok(())
    }
}
