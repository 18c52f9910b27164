//! SARG04 classical layer.
//!
//! Alice prepares one of four states, `Z0, Z1, X0, X1`. After the quantum
//! exchange she announces a pair of non-orthogonal states containing the one
//! she sent. Bob keeps the slot only if his outcome is orthogonal to exactly
//! one member of the pair; the remaining member is then his inference.
//!
//! Bit convention: Bob's key bit is his basis (`Z -> 0`, `X -> 1`). A
//! conclusive inference always lands in the basis opposite to the one Bob
//! measured in, so Alice's key bit is the complement of the sent state's
//! basis encoding.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }

    /// Key-bit encoding of a basis.
    pub fn bit(self) -> u8 {
        match self {
            Basis::Z => 0,
            Basis::X => 1,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Basis {
        if rng.random::<bool>() {
            Basis::X
        } else {
            Basis::Z
        }
    }
}

/// One of the four prepared states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateLabel {
    pub basis: Basis,
    pub bit: u8,
}

impl StateLabel {
    pub const Z0: StateLabel = StateLabel { basis: Basis::Z, bit: 0 };
    pub const Z1: StateLabel = StateLabel { basis: Basis::Z, bit: 1 };
    pub const X0: StateLabel = StateLabel { basis: Basis::X, bit: 0 };
    pub const X1: StateLabel = StateLabel { basis: Basis::X, bit: 1 };
    pub const ALL: [StateLabel; 4] = [Self::Z0, Self::Z1, Self::X0, Self::X1];

    /// Two states are orthogonal only within a basis.
    pub fn is_orthogonal(self, other: StateLabel) -> bool {
        self.basis == other.basis && self.bit != other.bit
    }

    /// Phase applied by Alice's modulator: `Z0 -> 0, X0 -> pi/2, Z1 -> pi, X1 -> 3pi/2`.
    pub fn phase(self) -> f64 {
        use std::f64::consts::FRAC_PI_2;
        let quarter = match (self.basis, self.bit) {
            (Basis::Z, 0) => 0.0,
            (Basis::X, 0) => 1.0,
            (Basis::Z, _) => 2.0,
            (Basis::X, _) => 3.0,
        };
        quarter * FRAC_PI_2
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> StateLabel {
        Self::ALL[rng.random_range(0..4)]
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.basis, self.bit)
    }
}

/// A pair of non-orthogonal states, one per basis, announced by Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SiftingSet {
    pub z: StateLabel,
    pub x: StateLabel,
}

impl SiftingSet {
    /// The four admissible sets `{Z0,X0}, {X0,Z1}, {Z1,X1}, {X1,Z0}`.
    pub const ALL: [SiftingSet; 4] = [
        SiftingSet { z: StateLabel::Z0, x: StateLabel::X0 },
        SiftingSet { z: StateLabel::Z1, x: StateLabel::X0 },
        SiftingSet { z: StateLabel::Z1, x: StateLabel::X1 },
        SiftingSet { z: StateLabel::Z0, x: StateLabel::X1 },
    ];

    pub fn contains(&self, s: StateLabel) -> bool {
        self.z == s || self.x == s
    }

    pub fn members(&self) -> [StateLabel; 2] {
        [self.z, self.x]
    }
}

/// Which detector registered the (resolved) click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detector {
    D0,
    D1,
}

impl Detector {
    pub fn index(self) -> u8 {
        match self {
            Detector::D0 => 0,
            Detector::D1 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiftOutcome {
    Conclusive(StateLabel),
    Inconclusive,
}

/// Announce uniformly one of the two admissible sets containing `sent`.
pub fn announce_set<R: Rng + ?Sized>(sent: StateLabel, rng: &mut R) -> SiftingSet {
    let other = if rng.random::<bool>() { 1 } else { 0 };
    let partner = StateLabel {
        basis: sent.basis.other(),
        bit: other,
    };
    match sent.basis {
        Basis::Z => SiftingSet { z: sent, x: partner },
        Basis::X => SiftingSet { z: partner, x: sent },
    }
}

/// Interpret a click of `detector` measured in `bob_basis` against `set`.
pub fn sift(set: SiftingSet, bob_basis: Basis, detector: Detector) -> SiftOutcome {
    let outcome = StateLabel {
        basis: bob_basis,
        bit: detector.index(),
    };
    match (outcome.is_orthogonal(set.z), outcome.is_orthogonal(set.x)) {
        (true, false) => SiftOutcome::Conclusive(set.x),
        (false, true) => SiftOutcome::Conclusive(set.z),
        _ => SiftOutcome::Inconclusive,
    }
}

/// One conclusive slot of the sifted key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedRecord {
    /// 1-based slot number within its frame.
    pub slot: usize,
    pub alice_bit: u8,
    pub bob_bit: u8,
    pub eve_knows: bool,
}

impl SiftedRecord {
    pub fn is_error(&self) -> bool {
        self.alice_bit != self.bob_bit
    }
}

/// Quantum bit error rate, or the explicit absence of data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Qber {
    Value(f64),
    NoData,
}

impl Qber {
    pub fn from_counts(errors: u64, total: u64) -> Qber {
        if total == 0 {
            Qber::NoData
        } else {
            Qber::Value(errors as f64 / total as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Qber::Value(v) => Some(v),
            Qber::NoData => None,
        }
    }
}

/// Sifted key of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconciliation {
    pub records: Vec<SiftedRecord>,
    pub qber: Qber,
}

impl Reconciliation {
    pub fn errors(&self) -> u64 {
        self.records.iter().filter(|r| r.is_error()).count() as u64
    }
}

/// Sift every clicked slot.
///
/// `clicks[l]` is the resolved detector of slot `l + 1`, `eve_marks[l]`
/// whether Eve read Bob's modulator there.
pub fn reconcile<R: Rng + ?Sized>(
    sent: &[StateLabel],
    clicks: &[Option<Detector>],
    bob_bases: &[Basis],
    eve_marks: &[bool],
    rng: &mut R,
) -> Result<Reconciliation> {
    let n = sent.len();
    if clicks.len() != n || bob_bases.len() != n || eve_marks.len() != n {
        return Err(Error::Config(format!(
            "reconcile: length mismatch (states {n}, clicks {}, bases {}, marks {})",
            clicks.len(),
            bob_bases.len(),
            eve_marks.len()
        )));
    }
    let mut records = Vec::new();
    for (l, click) in clicks.iter().enumerate() {
        let Some(detector) = click else { continue };
        let set = announce_set(sent[l], rng);
        if let SiftOutcome::Conclusive(_) = sift(set, bob_bases[l], *detector) {
            records.push(SiftedRecord {
                slot: l + 1,
                alice_bit: 1 - sent[l].basis.bit(),
                bob_bit: bob_bases[l].bit(),
                eve_knows: eve_marks[l],
            });
        }
    }
    let errors = records.iter().filter(|r| r.is_error()).count() as u64;
    let qber = Qber::from_counts(errors, records.len() as u64);
    Ok(Reconciliation { records, qber })
}

/// Binary entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy of {x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// How Eve's actual information is assembled from her known fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoCombiner {
    /// `f + (1 - f) h(q)`: the error-correction leak counts on bits she does not know.
    #[default]
    KnownPlusLeak,
    /// `f` alone.
    KnownOnly,
}

/// Eve's information on the error-corrected key, scaled by Alice's
/// preprocessing factor `1 - y`.
pub fn eve_information(f_known: f64, q: f64, y: f64) -> Result<f64> {
    eve_information_with(InfoCombiner::KnownPlusLeak, f_known, q, y)
}

pub fn eve_information_with(combiner: InfoCombiner, f_known: f64, q: f64, y: f64) -> Result<f64> {
    for (name, v) in [("f_known", f_known), ("q", q), ("y", y)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let raw = match combiner {
        InfoCombiner::KnownPlusLeak => f_known + (1.0 - f_known) * binary_entropy(q)?,
        InfoCombiner::KnownOnly => f_known,
    };
    Ok(((1.0 - y) * raw).clamp(0.0, 1.0))
}

/// Key of an [`EstTable`] entry. Floats are stored as bit patterns so the key
/// is exact; lookups must use the same literal values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct EstKey {
    profile: String,
    y_bits: u64,
    t_bits: u64,
}

impl EstKey {
    fn new(profile: &str, y: f64, t: f64) -> Self {
        // Normalise -0.0 so that it matches 0.0.
        EstKey {
            profile: profile.to_string(),
            y_bits: (y + 0.0).to_bits(),
            t_bits: (t + 0.0).to_bits(),
        }
    }
}

/// Tabulated estimates of Eve's information assumed by the legitimate parties.
#[derive(Debug, Clone, PartialEq)]
pub struct EstTable {
    entries: BTreeMap<EstKey, f64>,
}

/// One row of an [`EstTable`], as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstEntry {
    pub profile: String,
    pub y: f64,
    pub t: f64,
    pub value: f64,
}

impl Default for EstTable {
    fn default() -> Self {
        let mut table = EstTable {
            entries: BTreeMap::new(),
        };
        table.insert("clavis2", 0.0, 0.25, 0.4844);
        table.insert("clavis2", 0.5, 0.25, 0.1106);
        table.insert("d0-both", 0.4, 0.25, 0.1336);
        table.insert("improved", 0.0, 0.25, 0.5037);
        table
    }
}

impl EstTable {
    pub fn empty() -> Self {
        EstTable {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, profile: &str, y: f64, t: f64, value: f64) {
        self.entries.insert(EstKey::new(profile, y, t), value);
    }

    pub fn extend_from(&mut self, entries: &[EstEntry]) -> Result<()> {
        for e in entries {
            if !(0.0..=1.0).contains(&e.value) {
                return Err(Error::Config(format!("I_est entry value {} outside [0, 1]", e.value)));
            }
            self.insert(&e.profile, e.y, e.t, e.value);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Tabulated `I_est`; never interpolated.
pub fn i_est_lookup(table: &EstTable, profile: &str, y: f64, t: f64) -> Result<f64> {
    table
        .entries
        .get(&EstKey::new(profile, y, t))
        .copied()
        .ok_or_else(|| Error::UnsupportedScenario {
            profile: profile.to_string(),
            y,
            t,
        })
}
