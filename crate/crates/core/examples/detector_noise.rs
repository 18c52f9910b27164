//! Afterpulse build-up behind a burst of Trojan pulses, per detector.
//!
//! cargo run --example detector_noise -- [profile] [burst_len]

use qkd_trojan::detector::{afterpulse_profile, noise_prob, BrightPulseLedger, DetectorProfile, DEADTIME_GATES, SLOT_PERIOD_US};

fn main() -> qkd_trojan::Result<()> {
    let mut args = std::env::args().skip(1);
    let profile = DetectorProfile::builtin(&args.next().unwrap_or_else(|| "clavis2".into()))?;
    let burst: usize = args.next().map_or(20, |s| s.parse().expect("burst length"));
    let n_slots = 200;

    // Burst at slots 11..=10+burst.
    let ledger = BrightPulseLedger::new((11..11 + burst).collect(), SLOT_PERIOD_US, n_slots)?;
    let ap: Vec<Vec<f64>> = (0..2).map(|j| afterpulse_profile(profile.detector(j), &ledger, n_slots)).collect();

    println!("profile {}, burst of {burst} pulses at slots 11..={}", profile.name, 10 + burst);
    println!("{:>5} {:>12} {:>12}", "slot", "n0", "n1");
    let end = 10 + burst;
    for slot in (end + 1..=n_slots).step_by(10).take(12) {
        let n: Vec<f64> = (0..2).map(|j| noise_prob(profile.detector(j).dark, ap[j][slot - 1])).collect();
        println!("{slot:>5} {:>12.6} {:>12.6}", n[0], n[1]);
    }

    // What a single click leaves behind once the deadtime is over.
    for j in 0..2 {
        let p = profile.detector(j);
        println!(
            "D{j}: afterpulse mass inside deadtime {:.4}, after it {:.4}",
            p.afterpulse_window(DEADTIME_GATES, SLOT_PERIOD_US),
            p.afterpulse_tail(DEADTIME_GATES, SLOT_PERIOD_US)
        );
    }
    Ok(())
}
