//! Photons returned to Eve by a back-reflection, and how well she can tell
//! the two modulator phases apart with them.
//!
//! cargo run --example photon_budget -- [mu_in]

use qkd_trojan::optics::{back_reflection_mu, default_reflection_map, max_discrimination_prob, OTDR_FLOOR_1550_DB};

fn main() -> qkd_trojan::Result<()> {
    let mu_in: f64 = std::env::args().nth(1).map_or(2e6, |s| s.parse().expect("photon number"));
    for e in default_reflection_map() {
        let mu = back_reflection_mu(mu_in, e.level_db)?;
        println!(
            "{} ({} dB at {} ns): mu_out = {mu:.4}, best success = {:.4}",
            e.label, e.level_db, e.delay_ns, max_discrimination_prob(mu)
        );
    }
    println!("\n{:>8} {:>12} {:>10}", "dB", "mu_out", "success");
    let mut db = -40.0;
    while db >= OTDR_FLOOR_1550_DB {
        let mu = back_reflection_mu(mu_in, db)?;
        println!("{db:>8.1} {mu:>12.5} {:>10.5}", max_discrimination_prob(mu));
        db -= 5.0;
    }
    Ok(())
}
