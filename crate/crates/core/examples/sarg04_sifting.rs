//! SARG04 sifting: the full truth table, then a pooled QBER from a batch of
//! noiseless single photons.

use qkd_trojan::frame::SlotOutcome;
use qkd_trojan::rng::stream;
use qkd_trojan::sarg04::{reconcile, sift, Basis, Detector, SiftOutcome, SiftingSet, StateLabel};

fn main() -> qkd_trojan::Result<()> {
    println!("{:<10} {:<6} {:<9} result", "set", "basis", "detector");
    for set in SiftingSet::ALL {
        for basis in [Basis::Z, Basis::X] {
            for det in [Detector::D0, Detector::D1] {
                let r = match sift(set, basis, det) {
                    SiftOutcome::Conclusive(s) => format!("conclusive {s}"),
                    SiftOutcome::Inconclusive => "inconclusive".into(),
                };
                let [a, b] = set.members();
                println!("{:<10} {:<6} {:<9} {r}", format!("{{{a},{b}}}"), format!("{basis:?}"), format!("{det:?}"));
            }
        }
    }

    // A single photon always lands on the detector its state dictates when the
    // bases match, and on either detector otherwise.
    let mut rng = stream(11, &[1]);
    let n = 200_000;
    let sent: Vec<StateLabel> = (0..n).map(|_| StateLabel::random(&mut rng)).collect();
    let bases: Vec<Basis> = (0..n).map(|_| Basis::random(&mut rng)).collect();
    let clicks: Vec<Option<Detector>> = sent
        .iter()
        .zip(&bases)
        .map(|(s, &b)| {
            let bit = if s.basis == b { s.bit } else { rand::Rng::random_range(&mut rng, 0..2u8) };
            Some(if bit == 0 { SlotOutcome::D0 } else { SlotOutcome::D1 }.detector().unwrap())
        })
        .collect();
    let rec = reconcile(&sent, &clicks, &bases, &vec![false; n], &mut rng)?;
    println!(
        "single photons: {} conclusive of {n} ({:.4}), QBER {:?}",
        rec.records.len(),
        rec.records.len() as f64 / n as f64,
        rec.qber
    );
    Ok(())
}
