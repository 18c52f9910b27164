//! Monte Carlo simulator of a Trojan-horse attack on the receiver of a
//! plug-and-play SARG04 quantum-key-distribution link.
//!
//! The crate follows the path of every photon from Alice's source to Bob's
//! gated detectors, lets an eavesdropper reshape the frame and probe Bob's
//! phase modulator with bright pulses, and accounts for the afterpulsing
//! those pulses cause. Pooled over many frames this yields the QBER, Bob's
//! detection rate, and the fraction of the sifted key Eve knows, from which
//! [`experiment`] decides whether an attack configuration goes unnoticed
//! while leaking key.
//!
//! | module | contents |
//! |---|---|
//! | [`detector`] | click, dark-count and afterpulse probabilities |
//! | [`frame`] | photon-level simulation of one frame |
//! | [`sarg04`] | sifting, QBER, entropy, Eve's information |
//! | [`attack`] | triad tiling, low-loss routing, bright-pulse ledger |
//! | [`optics`] | back-reflection budget and homodyne phase readout |
//! | [`experiment`] | end-to-end runs, feasibility, parameter sweep |
//! | [`config`] | TOML run configuration |
//! | [`report`] | CSV/JSON writers and run manifests |
//! | [`cli`] | the `qkd-trojan` command-line front end |

pub mod attack;
pub mod cli;
pub mod config;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod optics;
pub mod report;
pub mod rng;
pub mod sarg04;

pub use error::{Error, Result};
