//! Photon budget of the back-reflected Trojan pulse and Eve's phase readout.
//!
//! Quadratures are measured in shot-noise units with vacuum variance 1/4, so
//! a coherent state of mean photon number `mu` has quadrature mean
//! `sqrt(mu)`. Eve's homodyne detector sees a Gaussian sample with mean
//! `+-sqrt(eta_hd * V^2 * mu)` and thresholds it at zero.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// OTDR sensitivity floor at 1550 nm, dB.
pub const OTDR_FLOOR_1550_DB: f64 = -83.0;
/// OTDR sensitivity floor at 806 nm, dB.
pub const OTDR_FLOOR_806_DB: f64 = -96.0;

const VACUUM_VARIANCE: f64 = 0.25;

/// One back-reflection peak of the receiver's reflection map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionEntry {
    /// Exit time minus entry time of the probe, ns.
    pub delay_ns: f64,
    pub level_db: f64,
    pub label: String,
    pub wavelength_nm: f64,
}

impl ReflectionEntry {
    pub fn validate(&self) -> Result<()> {
        if !(self.level_db <= 0.0) {
            return Err(Error::Config(format!(
                "reflection {:?}: level {} dB must be <= 0",
                self.label, self.level_db
            )));
        }
        if !(self.delay_ns >= 0.0) {
            return Err(Error::Config(format!(
                "reflection {:?}: delay {} ns must be >= 0",
                self.label, self.delay_ns
            )));
        }
        Ok(())
    }
}

/// The phase-modulator connector reflection quoted for the reference receiver.
pub fn default_reflection_map() -> Vec<ReflectionEntry> {
    vec![ReflectionEntry {
        delay_ns: 43.0,
        level_db: -57.0,
        label: "PM input connector".into(),
        wavelength_nm: 1550.0,
    }]
}

/// Read a reflection map from CSV with header
/// `delay_ns,level_db,label,wavelength_nm`.
pub fn load_reflection_map(path: &Path) -> Result<Vec<ReflectionEntry>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let entry: ReflectionEntry = row?;
        entry.validate()?;
        out.push(entry);
    }
    Ok(out)
}

/// Mean photon number returning to Eve from a reflection at `level_db`.
pub fn back_reflection_mu(mu_in: f64, level_db: f64) -> Result<f64> {
    if !(level_db <= 0.0) {
        return Err(Error::Domain(format!("reflection level {level_db} dB must be <= 0")));
    }
    if !(mu_in >= 0.0) {
        return Err(Error::Domain(format!("input photon number {mu_in} must be >= 0")));
    }
    Ok(mu_in * 10f64.powf(level_db / 10.0))
}

/// Best possible success probability for telling `|alpha>` from `|-alpha>`.
pub fn max_discrimination_prob(mu: f64) -> f64 {
    1.0 - (-mu).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomodyneModel {
    pub visibility: f64,
    pub efficiency: f64,
    /// Added Gaussian noise, shot-noise units.
    pub electronic_noise_var: f64,
}

impl HomodyneModel {
    pub const IDEAL: HomodyneModel = HomodyneModel {
        visibility: 1.0,
        efficiency: 1.0,
        electronic_noise_var: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("visibility", self.visibility), ("efficiency", self.efficiency)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("homodyne {name} = {v} outside [0, 1]")));
            }
        }
        if !(self.electronic_noise_var >= 0.0 && self.electronic_noise_var.is_finite()) {
            return Err(Error::Config(format!(
                "electronic noise variance {} must be >= 0",
                self.electronic_noise_var
            )));
        }
        Ok(())
    }

    fn signal_mean(&self, mu_sig: f64) -> f64 {
        (self.efficiency * self.visibility * self.visibility * mu_sig.max(0.0)).sqrt()
    }

    fn sigma(&self) -> f64 {
        (VACUUM_VARIANCE + self.electronic_noise_var).sqrt()
    }
}

impl Default for HomodyneModel {
    fn default() -> Self {
        Self::IDEAL
    }
}

/// Probability that the sign of the quadrature sample disagrees with Bob's bit.
pub fn homodyne_error_prob(mu_sig: f64, model: &HomodyneModel) -> f64 {
    let z = model.signal_mean(mu_sig) / model.sigma();
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Electronic noise variance that degrades `base` to the given error
/// probability at `mu_sig`. Bisection on a monotone function.
pub fn solve_electronic_noise(mu_sig: f64, target_error: f64, base: &HomodyneModel) -> Result<f64> {
    let with = |var: f64| HomodyneModel {
        electronic_noise_var: var,
        ..*base
    };
    let err = |var: f64| homodyne_error_prob(mu_sig, &with(var));
    if !(target_error > err(0.0) && target_error < 0.5) {
        return Err(Error::Domain(format!(
            "target error {target_error} not reachable from {:.3e} by adding noise",
            err(0.0)
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while err(hi) < target_error {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if err(mid) < target_error {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of a sampled readout run.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub estimated_bits: Vec<u8>,
    /// Fraction of slots where Eve's estimate equals Bob's bit.
    pub correlation: f64,
}

/// One Gaussian quadrature sample per slot, thresholded at zero.
pub fn simulate_phase_readout<R: Rng + ?Sized>(
    bob_bits: &[u8],
    mu_sig: f64,
    model: &HomodyneModel,
    rng: &mut R,
) -> Result<Readout> {
    model.validate()?;
    let mean = model.signal_mean(mu_sig);
    let noise = Normal::new(0.0, model.sigma()).map_err(|e| Error::Config(e.to_string()))?;
    let mut correct = 0usize;
    let estimated_bits: Vec<u8> = bob_bits
        .iter()
        .map(|&bit| {
            // Bit 0 (phase 0) maps to +alpha, bit 1 (phase pi) to -alpha.
            let sign = if bit == 0 { 1.0 } else { -1.0 };
            let x = sign * mean + noise.sample(rng);
            let est = if x > 0.0 {
                0
            } else if x < 0.0 {
                1
            } else {
                rng.random_range(0..2)
            };
            if est == bit {
                correct += 1;
            }
            est
        })
        .collect();
    let correlation = if bob_bits.is_empty() {
        0.0
    } else {
        correct as f64 / bob_bits.len() as f64
    };
    Ok(Readout {
        estimated_bits,
        correlation,
    })
}
