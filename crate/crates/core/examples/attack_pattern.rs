//! Tile a frame with Eve's (burst, extinguished, substitution) triad.
//!
//! cargo run --example attack_pattern -- [n_ab n_el n_ss]

use qkd_trojan::attack::{build_pattern, AttackTriad, SlotClass};
use qkd_trojan::frame::FRAME_SLOTS;

fn main() -> qkd_trojan::Result<()> {
    let v: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().expect("slot count")).collect();
    let triad = match v.as_slice() {
        [a, e, s] => AttackTriad::new(*a, *e, *s),
        _ => AttackTriad::new(20, 161, 50),
    };
    let p = build_pattern(&triad, FRAME_SLOTS)?;
    println!("triad {triad:?} over {FRAME_SLOTS} slots");
    println!("whole triads k = {}, unaccounted n_u = {}, leading extinguished {}, extra burst {}", p.k, p.n_u, p.n_el0, p.extra_burst);
    for c in [SlotClass::Attacked, SlotClass::Substituted, SlotClass::Extinguished] {
        println!("{:>13}: {}", c.label(), p.count(c));
    }

    // Run-length view in time order.
    let mut runs: Vec<(SlotClass, usize)> = Vec::new();
    for &c in p.classes() {
        match runs.last_mut() {
            Some((last, n)) if *last == c => *n += 1,
            _ => runs.push((c, 1)),
        }
    }
    let line: Vec<String> = runs.iter().map(|(c, n)| format!("{}{n}", c.label()[..1].to_uppercase())).collect();
    println!("{}", line.join(" "));
    Ok(())
}
