//! Grid search over attack parameters for one scenario, ranked by leakage.
//!
//! cargo run --release --example scenario_sweep -- [scenario] [n_sim] [workers]

use qkd_trojan::experiment::{sweep, Scenario, SweepGrid, SweepSpec};

fn main() -> qkd_trojan::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "improved".into());
    let n_sim: usize = args.next().map_or(1000, |s| s.parse().expect("frame count"));
    let workers: usize = args.next().map_or(4, |s| s.parse().expect("worker count"));
    let mut template = Scenario::preset(&name)?;
    template.n_sim = n_sim;
    template.seed = 1;
    let rep = sweep(&SweepSpec { grid: SweepGrid::default(), template }, workers)?;

    println!("{name}: baseline {:.3} clicks/frame, QBER {:?}", rep.baseline.gamma_exp, rep.baseline.qber);
    println!("{} of {} grid points feasible", rep.feasible_count(), rep.entries.len());
    println!("{:>4} {:>4} {:>4} {:>4} {:>7} {:>7} {:>7} {:>8} {:>8}", "r", "ab", "el", "ss", "q", "dB", "f", "I_act", "margin");
    for r in rep.entries.iter().filter_map(|e| e.result()).take(10) {
        println!(
            "{:>4} {:>4} {:>4} {:>4} {:>7.4} {:>7.4} {:>7.4} {:>8.4} {:>+8.4}{}",
            r.r, r.triad.n_ab, r.triad.n_el, r.triad.n_ss, r.q, r.delta_b, r.f_known, r.i_act, r.margin(),
            if r.feasible { "  feasible" } else { "" }
        );
    }
    Ok(())
}
