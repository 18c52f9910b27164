//! Unattacked reference run: click rate and QBER for each detector profile.
//!
//! cargo run --release --example baseline_qber -- [n_sim] [seed]

use qkd_trojan::experiment::{run_baseline, Scenario};

fn main() -> qkd_trojan::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_sim: usize = args.next().map_or(2000, |s| s.parse().expect("frame count"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    for name in ["clavis2", "d0-both", "improved"] {
        let mut s = Scenario::preset(name)?;
        s.n_sim = n_sim;
        let b = run_baseline(&s, seed)?;
        println!(
            "{name:>9}: clicks/frame {:.3} +- {:.3}, QBER {:.4} +- {:.4} ({} conclusive)",
            b.gamma_exp,
            b.gamma_se,
            b.qber.unwrap_or(f64::NAN),
            b.qber_se.unwrap_or(f64::NAN),
            b.tally.conclusive
        );
    }
    Ok(())
}
