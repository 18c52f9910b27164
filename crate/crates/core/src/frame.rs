//! Photon-level Monte Carlo of one frame.
//!
//! Every photon is followed individually: it survives the channel, survives
//! Bob's internal loss, is routed to D0 or D1, and is absorbed, each step a
//! Bernoulli trial. Detector noise is drawn per gate from `n_j(l)`. After a
//! resolved click the next `deadtime_gates` gates are withdrawn.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::detector::{
    photonic_prob, total_detection_prob, BrightPulseLedger, DetectorProfile, NoiseProfile, DEADTIME_GATES,
    SLOT_PERIOD_US,
};
use crate::error::{Error, Result};
use crate::sarg04::{Basis, Detector, StateLabel};

/// Slots per frame of the reference system.
pub const FRAME_SLOTS: usize = 1075;

/// Transmission inside Bob.
pub const BOB_TRANSMISSION: f64 = 0.45;

/// Optimal SARG04 mean photon number for channel transmission `t`.
pub fn optimal_mu(t: f64) -> f64 {
    2.0 * t.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub n_slots: usize,
    pub slot_period_us: f64,
    pub deadtime_gates: usize,
    /// Mean photon number per slot at Alice's exit.
    pub mu: f64,
    /// Quantum-channel transmission `T`.
    pub t_channel: f64,
    /// Transmission inside Bob `T_B`.
    pub t_bob: f64,
}

impl FrameConfig {
    /// Reference frame at channel transmission `t`, with `mu = 2 sqrt(t)`.
    pub fn for_transmission(t: f64) -> Self {
        FrameConfig {
            n_slots: FRAME_SLOTS,
            slot_period_us: SLOT_PERIOD_US,
            deadtime_gates: DEADTIME_GATES,
            mu: optimal_mu(t),
            t_channel: t,
            t_bob: BOB_TRANSMISSION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_slots == 0 {
            return Err(Error::Config("n_slots must be at least 1".into()));
        }
        if !(self.slot_period_us > 0.0 && self.slot_period_us.is_finite()) {
            return Err(Error::Config(format!("slot period {} must be positive", self.slot_period_us)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("mu = {} must be non-negative", self.mu)));
        }
        for (name, v) in [("t_channel", self.t_channel), ("t_bob", self.t_bob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is not a transmission")));
            }
        }
        Ok(())
    }
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self::for_transmission(0.25)
    }
}

/// Alice's prepared states and the photon count of each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub states: Vec<StateLabel>,
    pub photons: Vec<u32>,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotOutcome {
    None,
    D0,
    D1,
    WithdrawnByDeadtime,
}

impl SlotOutcome {
    pub fn detector(self) -> Option<Detector> {
        match self {
            SlotOutcome::D0 => Some(Detector::D0),
            SlotOutcome::D1 => Some(Detector::D1),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SlotOutcome::None => "none",
            SlotOutcome::D0 => "D0",
            SlotOutcome::D1 => "D1",
            SlotOutcome::WithdrawnByDeadtime => "withdrawn",
        }
    }
}

/// Detector firings in a gate before double-click resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawClick {
    pub slot: usize,
    pub d0: bool,
    pub d1: bool,
}

impl RawClick {
    pub fn is_double(&self) -> bool {
        self.d0 && self.d1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClickPattern {
    pub outcomes: Vec<SlotOutcome>,
    pub raw: Vec<RawClick>,
}

impl ClickPattern {
    pub fn clicks(&self) -> impl Iterator<Item = (usize, Detector)> + '_ {
        self.outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.detector().map(|d| (i + 1, d)))
    }

    pub fn click_count(&self) -> usize {
        self.clicks().count()
    }

    pub fn double_clicks(&self) -> usize {
        self.raw.iter().filter(|r| r.is_double()).count()
    }

    pub fn withdrawn(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|&&o| o == SlotOutcome::WithdrawnByDeadtime)
            .count()
    }

    pub fn detectors(&self) -> Vec<Option<Detector>> {
        self.outcomes.iter().map(|o| o.detector()).collect()
    }

    /// Check the deadtime invariant: after a click, the next `deadtime`
    /// slots (truncated at the frame end) are withdrawn, and no other slot is.
    pub fn deadtime_consistent(&self, deadtime: usize) -> bool {
        let mut remaining = 0usize;
        for &o in &self.outcomes {
            if remaining > 0 {
                if o != SlotOutcome::WithdrawnByDeadtime {
                    return false;
                }
                remaining -= 1;
                continue;
            }
            match o {
                SlotOutcome::WithdrawnByDeadtime => return false,
                SlotOutcome::D0 | SlotOutcome::D1 => remaining = deadtime,
                SlotOutcome::None => {}
            }
        }
        true
    }
}

/// Draw Alice's states and Poisson photon numbers for one frame.
pub fn generate_frame<R: Rng + ?Sized>(cfg: &FrameConfig, rng: &mut R) -> Result<Frame> {
    cfg.validate()?;
    let poisson = if cfg.mu > 0.0 {
        Some(Poisson::new(cfg.mu).map_err(|e| Error::Config(format!("poisson mean {}: {e}", cfg.mu)))?)
    } else {
        None
    };
    let mut states = Vec::with_capacity(cfg.n_slots);
    let mut photons = Vec::with_capacity(cfg.n_slots);
    for _ in 0..cfg.n_slots {
        states.push(StateLabel::random(rng));
        photons.push(match &poisson {
            Some(p) => p.sample(rng) as u32,
            None => 0,
        });
    }
    Ok(Frame { states, photons })
}

fn survivors<R: Rng + ?Sized>(n: u32, p: f64, rng: &mut R) -> u32 {
    if p >= 1.0 {
        return n;
    }
    if p <= 0.0 {
        return 0;
    }
    (0..n).filter(|_| rng.random_bool(p)).count() as u32
}

/// Thin every photon of slot `l` with probability `trans[l]`.
pub fn apply_channel<R: Rng + ?Sized>(frame: &Frame, trans: &[f64], rng: &mut R) -> Result<Frame> {
    if trans.len() != frame.len() {
        return Err(Error::Config(format!(
            "transmission vector has {} entries for a frame of {} slots",
            trans.len(),
            frame.len()
        )));
    }
    if let Some(bad) = trans.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Config(format!("transmission {bad} outside [0, 1]")));
    }
    let photons = frame
        .photons
        .iter()
        .zip(trans)
        .map(|(&n, &t)| survivors(n, t, rng))
        .collect();
    Ok(Frame {
        states: frame.states.clone(),
        photons,
    })
}

/// Draw Bob's basis for every slot.
pub fn random_bases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Basis> {
    (0..n).map(|_| Basis::random(rng)).collect()
}

/// Photons reaching D0 and D1 in every slot.
pub fn route_photons<R: Rng + ?Sized>(
    frame: &Frame,
    bob_bases: &[Basis],
    t_bob: f64,
    rng: &mut R,
) -> Result<(Vec<u32>, Vec<u32>)> {
    if bob_bases.len() != frame.len() {
        return Err(Error::Config(format!(
            "{} bases for a frame of {} slots",
            bob_bases.len(),
            frame.len()
        )));
    }
    let mut m0 = Vec::with_capacity(frame.len());
    let mut m1 = Vec::with_capacity(frame.len());
    for ((&state, &n), &basis) in frame.states.iter().zip(&frame.photons).zip(bob_bases) {
        let inside = survivors(n, t_bob, rng);
        let (a, b) = if state.basis == basis {
            if state.bit == 0 {
                (inside, 0)
            } else {
                (0, inside)
            }
        } else {
            let to_d0 = (0..inside).filter(|_| rng.random::<bool>()).count() as u32;
            (to_d0, inside - to_d0)
        };
        m0.push(a);
        m1.push(b);
    }
    Ok((m0, m1))
}

/// Closed-form click probabilities `p_j(l)` given routed photon counts.
pub fn detection_probs(m0: &[u32], m1: &[u32], profile: &DetectorProfile, noise: &NoiseProfile) -> (Vec<f64>, Vec<f64>) {
    let p = |m: &[u32], eta: f64, n: &[f64]| -> Vec<f64> {
        m.iter()
            .zip(n)
            .map(|(&m, &n)| total_detection_prob(photonic_prob(eta, m), n))
            .collect()
    };
    (p(m0, profile.d0.eta, &noise.n0), p(m1, profile.d1.eta, &noise.n1))
}

/// Gate-by-gate detection with afterpulse noise derived from `ledger`.
pub fn simulate_detection<R: Rng + ?Sized>(
    m0: &[u32],
    m1: &[u32],
    profile: &DetectorProfile,
    ledger: &BrightPulseLedger,
    cfg: &FrameConfig,
    rng: &mut R,
) -> Result<ClickPattern> {
    let noise = NoiseProfile::new(profile, ledger, cfg.n_slots);
    simulate_detection_with_noise(m0, m1, profile, &noise, cfg, rng)
}

/// Same as [`simulate_detection`] with a precomputed noise profile.
pub fn simulate_detection_with_noise<R: Rng + ?Sized>(
    m0: &[u32],
    m1: &[u32],
    profile: &DetectorProfile,
    noise: &NoiseProfile,
    cfg: &FrameConfig,
    rng: &mut R,
) -> Result<ClickPattern> {
    let n = cfg.n_slots;
    if m0.len() != n || m1.len() != n || noise.len() != n {
        return Err(Error::Config(format!(
            "detection inputs ({}, {}, noise {}) do not match {n} slots",
            m0.len(),
            m1.len(),
            noise.len()
        )));
    }
    let fires = |m: u32, eta: f64, noise: f64, rng: &mut R| {
        // Draw every photon even after a success so that the stream position
        // depends only on the inputs.
        let photonic = (0..m).fold(false, |hit, _| rng.random_bool(eta) | hit);
        let noisy = rng.random_bool(noise);
        photonic || noisy
    };
    let mut outcomes = vec![SlotOutcome::None; n];
    let mut raw = Vec::new();
    let mut l = 0;
    while l < n {
        let c0 = fires(m0[l], profile.d0.eta, noise.n0[l], rng);
        let c1 = fires(m1[l], profile.d1.eta, noise.n1[l], rng);
        if !(c0 || c1) {
            l += 1;
            continue;
        }
        raw.push(RawClick { slot: l + 1, d0: c0, d1: c1 });
        let winner = match (c0, c1) {
            (true, true) => {
                if rng.random::<bool>() {
                    SlotOutcome::D1
                } else {
                    SlotOutcome::D0
                }
            }
            (true, false) => SlotOutcome::D0,
            _ => SlotOutcome::D1,
        };
        outcomes[l] = winner;
        let end = (l + 1 + cfg.deadtime_gates).min(n);
        for o in &mut outcomes[l + 1..end] {
            *o = SlotOutcome::WithdrawnByDeadtime;
        }
        l = end;
    }
    Ok(ClickPattern { outcomes, raw })
}
