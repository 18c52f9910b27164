//! Gated avalanche-photodiode model.
//!
//! A detector clicks in a gate either because one of the photons routed to it
//! is absorbed (`photonic_prob`) or because of noise. Noise is the union of a
//! constant dark-count probability and an afterpulse probability that builds
//! up after every bright Trojan pulse and decays as a double exponential:
//!
//! ```text
//! a(dt) = A1 exp(-dt / tau1) + A2 exp(-dt / tau2)
//! ```
//!
//! Contributions from several bright pulses are summed and clamped to 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate period of the reference receiver, in microseconds.
pub const SLOT_PERIOD_US: f64 = 0.2;

/// Gates withdrawn after every click.
pub const DEADTIME_GATES: usize = 50;

/// Upper bound on the cumulative afterpulse probability of the `improved` profile.
pub const IMPROVED_AFTERPULSE_BOUND: f64 = 0.10;

/// Efficiency, dark noise, and afterpulse constants of one gated detector.
///
/// Time constants are in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub eta: f64,
    pub dark: f64,
    pub ap_amp1: f64,
    pub ap_tau1: f64,
    pub ap_amp2: f64,
    pub ap_tau2: f64,
}

impl DetectorParams {
    /// D0 of the reference system.
    pub const CLAVIS2_D0: DetectorParams = DetectorParams {
        eta: 0.12,
        dark: 1.16e-4,
        ap_amp1: 3.572e-2,
        ap_tau1: 1.159,
        ap_amp2: 2.283e-2,
        ap_tau2: 4.277,
    };

    /// D1 of the reference system.
    pub const CLAVIS2_D1: DetectorParams = DetectorParams {
        eta: 0.10,
        dark: 3.63e-4,
        ap_amp1: 10.68e-2,
        ap_tau1: 0.705,
        ap_amp2: 5.054e-2,
        ap_tau2: 3.866,
    };

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} is not a probability")))
            }
        };
        prob("eta", self.eta)?;
        prob("dark", self.dark)?;
        for (name, v) in [("ap_amp1", self.ap_amp1), ("ap_amp2", self.ap_amp2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be non-negative")));
            }
        }
        for (name, v) in [("ap_tau1", self.ap_tau1), ("ap_tau2", self.ap_tau2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Copy with both afterpulse amplitudes multiplied by `factor`.
    pub fn with_afterpulse_scale(&self, factor: f64) -> Self {
        DetectorParams {
            ap_amp1: self.ap_amp1 * factor,
            ap_amp2: self.ap_amp2 * factor,
            ..*self
        }
    }

    /// Unclamped sum of `a(l * period)` over gates `first..=last`.
    fn afterpulse_sum(&self, first: usize, last: Option<usize>, period_us: f64) -> f64 {
        // Closed-form geometric series per exponential term.
        let term = |amp: f64, tau: f64| {
            let ratio = (-period_us / tau).exp();
            let head = amp * ratio.powi(first as i32);
            match last {
                Some(last) if last < first => 0.0,
                Some(last) => head * (1.0 - ratio.powi((last - first + 1) as i32)) / (1.0 - ratio),
                None => head / (1.0 - ratio),
            }
        };
        term(self.ap_amp1, self.ap_tau1) + term(self.ap_amp2, self.ap_tau2)
    }

    /// Total afterpulse probability mass that survives past the deadtime:
    /// `sum_{l > deadtime} a(l * period)`.
    pub fn afterpulse_tail(&self, deadtime_gates: usize, period_us: f64) -> f64 {
        self.afterpulse_sum(deadtime_gates + 1, None, period_us)
    }

    /// Afterpulse probability mass falling inside the deadtime window:
    /// `sum_{l = 1..=deadtime} a(l * period)`.
    pub fn afterpulse_window(&self, deadtime_gates: usize, period_us: f64) -> f64 {
        self.afterpulse_sum(1, Some(deadtime_gates), period_us)
    }
}

/// A named pair of detectors (D0, D1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorProfile {
    pub name: String,
    pub d0: DetectorParams,
    pub d1: DetectorParams,
    /// Afterpulse amplitude scale applied to (D0, D1) when the profile was
    /// derived from another one; `None` for profiles taken verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub afterpulse_scale: Option<[f64; 2]>,
}

impl DetectorProfile {
    pub fn new(name: impl Into<String>, d0: DetectorParams, d1: DetectorParams) -> Result<Self> {
        d0.validate()?;
        d1.validate()?;
        Ok(DetectorProfile {
            name: name.into(),
            d0,
            d1,
            afterpulse_scale: None,
        })
    }

    /// Table values of the reference receiver.
    pub fn clavis2() -> Self {
        DetectorProfile {
            name: "clavis2".into(),
            d0: DetectorParams::CLAVIS2_D0,
            d1: DetectorParams::CLAVIS2_D1,
            afterpulse_scale: None,
        }
    }

    /// Both detectors behave like the reference D0.
    pub fn d0_both() -> Self {
        DetectorProfile {
            name: "d0-both".into(),
            d0: DetectorParams::CLAVIS2_D0,
            d1: DetectorParams::CLAVIS2_D0,
            afterpulse_scale: None,
        }
    }

    /// High-efficiency, low-noise detectors: `eta = 0.25`, `dark = 1e-5`,
    /// reference time constants, and amplitudes scaled per detector so that
    /// the cumulative afterpulse probability stays below
    /// [`IMPROVED_AFTERPULSE_BOUND`].
    pub fn improved() -> Self {
        let derive = |base: DetectorParams| {
            let factor = improved_afterpulse_scale(&base);
            let p = DetectorParams {
                eta: 0.25,
                dark: 1e-5,
                ..base
            }
            .with_afterpulse_scale(factor);
            (p, factor)
        };
        let (d0, s0) = derive(DetectorParams::CLAVIS2_D0);
        let (d1, s1) = derive(DetectorParams::CLAVIS2_D1);
        DetectorProfile {
            name: "improved".into(),
            d0,
            d1,
            afterpulse_scale: Some([s0, s1]),
        }
    }

    /// Look up a built-in profile by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "clavis2" => Ok(Self::clavis2()),
            "d0-both" => Ok(Self::d0_both()),
            "improved" => Ok(Self::improved()),
            other => Err(Error::Config(format!(
                "unknown detector profile {other:?} (expected clavis2, d0-both, improved)"
            ))),
        }
    }

    pub fn detector(&self, index: usize) -> &DetectorParams {
        if index == 0 {
            &self.d0
        } else {
            &self.d1
        }
    }
}

/// Scale factor for the `improved` profile.
///
/// The afterpulse mass accumulated over the deadtime window plus everything
/// after it is brought to 99% of [`IMPROVED_AFTERPULSE_BOUND`]; profiles
/// already below the bound are left untouched.
pub fn improved_afterpulse_scale(base: &DetectorParams) -> f64 {
    let total = base.afterpulse_window(DEADTIME_GATES, SLOT_PERIOD_US)
        + base.afterpulse_tail(DEADTIME_GATES, SLOT_PERIOD_US);
    let target = 0.99 * IMPROVED_AFTERPULSE_BOUND;
    if total <= target {
        1.0
    } else {
        target / total
    }
}

/// Slots (1-based, strictly increasing) that received a bright Trojan pulse
/// in the current frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BrightPulseLedger {
    slots: Vec<usize>,
    slot_period_us: f64,
}

impl BrightPulseLedger {
    pub fn new(slots: Vec<usize>, slot_period_us: f64, n_slots: usize) -> Result<Self> {
        if !(slot_period_us > 0.0) {
            return Err(Error::Config(format!(
                "slot period must be positive, got {slot_period_us}"
            )));
        }
        if slots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("ledger slots must be strictly increasing".into()));
        }
        if let Some(&bad) = slots.iter().find(|&&s| s == 0 || s > n_slots) {
            return Err(Error::Config(format!(
                "ledger slot {bad} outside [1, {n_slots}]"
            )));
        }
        Ok(BrightPulseLedger {
            slots,
            slot_period_us,
        })
    }

    pub fn empty(slot_period_us: f64) -> Self {
        BrightPulseLedger {
            slots: Vec::new(),
            slot_period_us,
        }
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn slot_period_us(&self) -> f64 {
        self.slot_period_us
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }
}

/// Afterpulse probability `dt` microseconds after a bright pulse.
pub fn afterpulse_prob(params: &DetectorParams, dt_us: f64) -> Result<f64> {
    if !(dt_us > 0.0) {
        return Err(Error::Domain(format!(
            "afterpulse delay must be positive, got {dt_us}"
        )));
    }
    let a = params.ap_amp1 * (-dt_us / params.ap_tau1).exp()
        + params.ap_amp2 * (-dt_us / params.ap_tau2).exp();
    Ok(a.clamp(0.0, 1.0))
}

/// Accumulated afterpulse probability in `slot` (1-based) from every earlier
/// bright pulse in `ledger`, clamped to 1.
pub fn cumulative_afterpulse(params: &DetectorParams, ledger: &BrightPulseLedger, slot: usize) -> f64 {
    let mut sum = 0.0;
    for &k in ledger.slots.iter().take_while(|&&k| k < slot) {
        let dt = (slot - k) as f64 * ledger.slot_period_us;
        sum += params.ap_amp1 * (-dt / params.ap_tau1).exp()
            + params.ap_amp2 * (-dt / params.ap_tau2).exp();
    }
    sum.min(1.0)
}

/// `cumulative_afterpulse` for every slot `1..=n_slots`, computed with a
/// running recurrence instead of re-summing the ledger per slot.
pub fn afterpulse_profile(params: &DetectorParams, ledger: &BrightPulseLedger, n_slots: usize) -> Vec<f64> {
    let r1 = (-ledger.slot_period_us / params.ap_tau1).exp();
    let r2 = (-ledger.slot_period_us / params.ap_tau2).exp();
    let (mut s1, mut s2) = (0.0_f64, 0.0_f64);
    let mut pulses = ledger.slots.iter().peekable();
    let mut out = Vec::with_capacity(n_slots);
    for slot in 1..=n_slots {
        // s1, s2 hold the two exponential sums evaluated at the previous slot.
        s1 *= r1;
        s2 *= r2;
        out.push((s1 + s2).min(1.0));
        if pulses.next_if(|&&k| k == slot).is_some() {
            s1 += params.ap_amp1;
            s2 += params.ap_amp2;
        }
    }
    out
}

/// Union of independent dark-count and afterpulse events.
pub fn noise_prob(dark: f64, ap: f64) -> f64 {
    dark + ap - dark * ap
}

/// Probability that at least one of `m` photons is detected.
pub fn photonic_prob(eta: f64, m: u32) -> f64 {
    1.0 - (1.0 - eta).powi(m as i32)
}

/// Union of the photonic and noise click events.
pub fn total_detection_prob(s: f64, n: f64) -> f64 {
    s + n - s * n
}

/// Per-slot noise probabilities `n_j(l)` of both detectors for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub n0: Vec<f64>,
    pub n1: Vec<f64>,
}

impl NoiseProfile {
    pub fn new(profile: &DetectorProfile, ledger: &BrightPulseLedger, n_slots: usize) -> Self {
        let build = |p: &DetectorParams| {
            afterpulse_profile(p, ledger, n_slots)
                .into_iter()
                .map(|a| noise_prob(p.dark, a))
                .collect()
        };
        NoiseProfile {
            n0: build(&profile.d0),
            n1: build(&profile.d1),
        }
    }

    /// Dark counts only.
    pub fn dark_only(profile: &DetectorProfile, n_slots: usize) -> Self {
        NoiseProfile {
            n0: vec![profile.d0.dark; n_slots],
            n1: vec![profile.d1.dark; n_slots],
        }
    }

    pub fn len(&self) -> usize {
        self.n0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n0.is_empty()
    }

    pub fn detector(&self, index: usize) -> &[f64] {
        if index == 0 {
            &self.n0
        } else {
            &self.n1
        }
    }
}
