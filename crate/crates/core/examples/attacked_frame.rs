//! Slot-level view of one attacked frame: where the bursts go, the afterpulse
//! tail they leave, and which clicks Eve ends up knowing.
//!
//! cargo run --release --example attacked_frame -- [scenario] [seed]

use qkd_trojan::attack::SlotClass;
use qkd_trojan::experiment::{trace_frame, Scenario};

fn main() -> qkd_trojan::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut s = Scenario::preset(&args.next().unwrap_or_else(|| "clavis2".into()))?;
    let seed: u64 = args.next().map_or(5, |v| v.parse().expect("seed"));
    s.attack.r = 1.0;
    s.n_sim = 1;
    s.gamma_exp = Some(1.0);
    let t = trace_frame(&s, seed, 0)?;

    let count = |c: SlotClass| t.classes.iter().filter(|&&x| x == c).count();
    println!(
        "attacked {} / substituted {} / extinguished {}",
        count(SlotClass::Attacked),
        count(SlotClass::Substituted),
        count(SlotClass::Extinguished)
    );
    println!("{:>5} {:>13} {:>5} {:>3} {:>3} {:>9} {:>9} {:>8}", "slot", "class", "state", "m0", "m1", "p0", "p1", "outcome");
    for i in 0..t.classes.len() {
        if t.outcomes[i].detector().is_some() {
            let tag = match (t.conclusive[i], t.eve_knows[i]) {
                (true, true) => "conclusive, Eve knows",
                (true, false) => "conclusive",
                _ => "",
            };
            println!(
                "{:>5} {:>13} {:>5} {:>3} {:>3} {:>9.5} {:>9.5} {:>8}  {tag}",
                i + 1, t.classes[i].label(), t.states[i].to_string(), t.m0[i], t.m1[i], t.p0[i], t.p1[i], t.outcomes[i].label()
            );
        }
    }
    let peak = t.p1.iter().cloned().fold(0.0, f64::max);
    println!("highest D1 detection probability in the frame: {peak:.4}");
    Ok(())
}
