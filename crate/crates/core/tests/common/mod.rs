//! Reference computations shared by the integration tests. Each one is written
//! from the physical description alone, without calling into the code it
//! checks.

#![allow(dead_code)]

use qkd_trojan::attack::{AttackTriad, SlotClass};
use qkd_trojan::detector::DetectorParams;

/// Hand-derived SARG04 sifting table.
///
/// Rows: announced set (as two labels), Bob's basis, detector, and the state
/// Bob concludes (`None` = inconclusive). A result is conclusive when it is
/// orthogonal to exactly one announced state; Bob then names the other one.
pub const SIFT_TABLE: [(&str, &str, char, usize, Option<&str>); 16] = [
    ("Z0", "X0", 'Z', 0, None),
    ("Z0", "X0", 'Z', 1, Some("X0")),
    ("Z0", "X0", 'X', 0, None),
    ("Z0", "X0", 'X', 1, Some("Z0")),
    ("Z1", "X0", 'Z', 0, Some("X0")),
    ("Z1", "X0", 'Z', 1, None),
    ("Z1", "X0", 'X', 0, None),
    ("Z1", "X0", 'X', 1, Some("Z1")),
    ("Z1", "X1", 'Z', 0, Some("X1")),
    ("Z1", "X1", 'Z', 1, None),
    ("Z1", "X1", 'X', 0, Some("Z1")),
    ("Z1", "X1", 'X', 1, None),
    ("Z0", "X1", 'Z', 0, None),
    ("Z0", "X1", 'Z', 1, Some("X1")),
    ("Z0", "X1", 'X', 0, Some("Z0")),
    ("Z0", "X1", 'X', 1, None),
];

/// Slot classes built by walking backwards from the frame end, one slot at a
/// time, exactly as the tiling is described.
pub fn tile_backwards(t: &AttackTriad, n_f: usize) -> Vec<SlotClass> {
    let sum = t.n_ab + t.n_el + t.n_ss;
    let k = n_f / sum;
    let mut rev = Vec::with_capacity(n_f);
    for _ in 0..k {
        rev.extend(std::iter::repeat(SlotClass::Attacked).take(t.n_ab));
        rev.extend(std::iter::repeat(SlotClass::Extinguished).take(t.n_el));
        rev.extend(std::iter::repeat(SlotClass::Substituted).take(t.n_ss));
    }
    let n_u = n_f - rev.len();
    if n_u > t.n_ab {
        rev.extend(std::iter::repeat(SlotClass::Attacked).take(t.n_ab));
    }
    while rev.len() < n_f {
        rev.push(SlotClass::Extinguished);
    }
    rev.reverse();
    rev
}

/// Sum of every earlier pulse's afterpulse contribution at `slot`, term by
/// term, clamped to one.
pub fn afterpulse_brute(p: &DetectorParams, pulses: &[usize], slot: usize, period_us: f64) -> f64 {
    let mut total = 0.0;
    for &s in pulses {
        if s < slot {
            let dt = (slot - s) as f64 * period_us;
            total += p.ap_amp1 * (-dt / p.ap_tau1).exp() + p.ap_amp2 * (-dt / p.ap_tau2).exp();
        }
    }
    total.min(1.0)
}

fn poisson_pmf(lambda: f64, n: u32) -> f64 {
    let mut p = (-lambda).exp();
    for i in 1..=n {
        p *= lambda / i as f64;
    }
    p
}

fn binom_pmf(n: u32, k: u32, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Probability that D0 and D1 fire in one gate, for a slot with random state
/// and basis, by exhaustive summation over photon numbers up to `cutoff`.
///
/// Returns `(P(D0 fires), P(D1 fires), P(both fire))`.
pub fn gate_fire_probs(
    mu: f64,
    trans: f64,
    eta: [f64; 2],
    noise: [f64; 2],
    cutoff: u32,
) -> (f64, f64, f64) {
    let (mut f0, mut f1, mut both) = (0.0, 0.0, 0.0);
    for n in 0..=cutoff {
        let pn = poisson_pmf(mu, n);
        for m in 0..=n {
            let pm = pn * binom_pmf(n, m, trans);
            // Matched basis (prob 1/2): all m photons on the detector of the
            // state's bit, which is 0 or 1 with prob 1/2 each.
            // Mismatched (prob 1/2): binomial split.
            let mut cases: Vec<(f64, u32, u32)> = vec![(0.25, m, 0), (0.25, 0, m)];
            for a in 0..=m {
                cases.push((0.5 * binom_pmf(m, a, 0.5), a, m - a));
            }
            for (w, a, b) in cases {
                let s0 = 1.0 - (1.0 - eta[0]).powi(a as i32);
                let s1 = 1.0 - (1.0 - eta[1]).powi(b as i32);
                let p0 = s0 + noise[0] - s0 * noise[0];
                let p1 = s1 + noise[1] - s1 * noise[1];
                f0 += pm * w * p0;
                f1 += pm * w * p1;
                both += pm * w * p0 * p1;
            }
        }
    }
    (f0, f1, both)
}

/// Exact per-slot outcome probabilities `(D0, D1, withdrawn)` of a frame with
/// independent slots, a fair coin on double clicks, and `dead` gates withdrawn
/// after each click. Forward recursion over the remaining deadtime.
pub fn outcome_probs(gates: &[(f64, f64, f64)], dead: usize) -> Vec<(f64, f64, f64)> {
    // state[d] = probability that d gates of deadtime remain before this slot.
    let mut state = vec![0.0; dead + 1];
    state[0] = 1.0;
    let mut out = Vec::with_capacity(gates.len());
    for &(f0, f1, both) in gates {
        let alive = state[0];
        let click = f0 + f1 - both;
        let d0 = alive * (f0 - both + 0.5 * both);
        let d1 = alive * (f1 - both + 0.5 * both);
        let withdrawn: f64 = state[1..].iter().sum();
        out.push((d0, d1, withdrawn));
        let mut next = vec![0.0; dead + 1];
        next[0] += alive * (1.0 - click);
        if dead > 0 {
            next[dead] += alive * click;
            for d in 1..=dead {
                next[d - 1] += state[d];
            }
        } else {
            next[0] += alive * click;
        }
        state = next;
    }
    out
}

/// Three-sigma check for an observed frequency against probability `p`.
pub fn within_3_sigma(hits: u64, trials: u64, p: f64) -> bool {
    let freq = hits as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    (freq - p).abs() <= 3.0 * sigma + 1e-12
}

/// The fixed 20-slot scenario: reference detectors, `mu = 1`, `T = 0.25`,
/// `T_B = 0.45`, bright pulses at slots 2-4, and a 3-gate deadtime.
pub mod twenty_slot {
    use qkd_trojan::detector::{cumulative_afterpulse, noise_prob, BrightPulseLedger, DetectorProfile, SLOT_PERIOD_US};
    use qkd_trojan::frame::{apply_channel, generate_frame, random_bases, route_photons, simulate_detection, FrameConfig, SlotOutcome};
    use qkd_trojan::rng::stream;

    pub const SLOTS: usize = 20;
    pub const PULSES: [usize; 3] = [2, 3, 4];
    pub const DEAD: usize = 3;

    pub fn config() -> FrameConfig {
        FrameConfig {
            n_slots: SLOTS,
            deadtime_gates: DEAD,
            ..FrameConfig::for_transmission(0.25)
        }
    }

    /// Closed-form `(D0, D1, withdrawn)` probability of every slot.
    pub fn oracle() -> Vec<(f64, f64, f64)> {
        let cfg = config();
        let profile = DetectorProfile::clavis2();
        let gates: Vec<(f64, f64, f64)> = (1..=SLOTS)
            .map(|l| {
                let noise = [0, 1].map(|j| {
                    let p = profile.detector(j);
                    let ap = super::afterpulse_brute(p, &PULSES, l, SLOT_PERIOD_US);
                    p.dark + ap - p.dark * ap
                });
                super::gate_fire_probs(
                    cfg.mu,
                    cfg.t_channel * cfg.t_bob,
                    [profile.d0.eta, profile.d1.eta],
                    noise,
                    30,
                )
            })
            .collect();
        super::outcome_probs(&gates, DEAD)
    }

    /// Outcome counts `[D0, D1, withdrawn]` per slot over `reps` simulated frames.
    pub fn simulate(reps: usize, seed: u64) -> Vec<[u64; 3]> {
        let cfg = config();
        let profile = DetectorProfile::clavis2();
        let ledger = BrightPulseLedger::new(PULSES.to_vec(), SLOT_PERIOD_US, SLOTS).unwrap();
        // Sanity: the library's own noise agrees with the brute force.
        for l in 1..=SLOTS {
            for j in 0..2 {
                let p = profile.detector(j);
                let lib = noise_prob(p.dark, cumulative_afterpulse(p, &ledger, l));
                let ap = super::afterpulse_brute(p, &PULSES, l, SLOT_PERIOD_US);
                assert!((lib - (p.dark + ap - p.dark * ap)).abs() < 1e-12);
            }
        }
        let trans = vec![cfg.t_channel; SLOTS];
        let mut rng = stream(seed, &[20]);
        let mut counts = vec![[0u64; 3]; SLOTS];
        for _ in 0..reps {
            let sent = generate_frame(&cfg, &mut rng).unwrap();
            let at_bob = apply_channel(&sent, &trans, &mut rng).unwrap();
            let bases = random_bases(SLOTS, &mut rng);
            let (m0, m1) = route_photons(&at_bob, &bases, cfg.t_bob, &mut rng).unwrap();
            let clicks = simulate_detection(&m0, &m1, &profile, &ledger, &cfg, &mut rng).unwrap();
            for (c, o) in counts.iter_mut().zip(&clicks.outcomes) {
                match o {
                    SlotOutcome::D0 => c[0] += 1,
                    SlotOutcome::D1 => c[1] += 1,
                    SlotOutcome::WithdrawnByDeadtime => c[2] += 1,
                    SlotOutcome::None => {}
                }
            }
        }
        counts
    }

    /// Largest deviations in units of the binomial standard error:
    /// `(over the D0/D1 click frequencies, over the withdrawn shares)`.
    pub fn worst_z(reps: usize, seed: u64) -> (f64, f64) {
        let want = oracle();
        let got = simulate(reps, seed);
        let z = |p: f64, hits: u64| {
            let sigma = (p * (1.0 - p) / reps as f64).sqrt();
            let dev = (hits as f64 / reps as f64 - p).abs();
            if sigma > 0.0 {
                dev / sigma
            } else if dev > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        let (mut clicks, mut withdrawn): (f64, f64) = (0.0, 0.0);
        for (w, g) in want.iter().zip(&got) {
            clicks = clicks.max(z(w.0, g[0])).max(z(w.1, g[1]));
            withdrawn = withdrawn.max(z(w.2, g[2]));
        }
        (clicks, withdrawn)
    }
}
