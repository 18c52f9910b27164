//! One unattacked frame end to end: photons, routing, detection probabilities,
//! and the resulting clicks.
//!
//! cargo run --example frame_trace -- [seed]

use qkd_trojan::detector::{DetectorProfile, NoiseProfile};
use qkd_trojan::frame::{
    apply_channel, detection_probs, generate_frame, random_bases, route_photons, simulate_detection_with_noise,
    FrameConfig, SlotOutcome,
};
use qkd_trojan::rng::frame_stream;

fn main() -> qkd_trojan::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(7, |s| s.parse().expect("seed"));
    let cfg = FrameConfig::for_transmission(0.25);
    let profile = DetectorProfile::clavis2();
    let noise = NoiseProfile::dark_only(&profile, cfg.n_slots);
    let mut rng = frame_stream(seed, 0);

    let sent = generate_frame(&cfg, &mut rng)?;
    let at_bob = apply_channel(&sent, &vec![cfg.t_channel; cfg.n_slots], &mut rng)?;
    let bases = random_bases(cfg.n_slots, &mut rng);
    let (m0, m1) = route_photons(&at_bob, &bases, cfg.t_bob, &mut rng)?;
    let (p0, p1) = detection_probs(&m0, &m1, &profile, &noise);
    let clicks = simulate_detection_with_noise(&m0, &m1, &profile, &noise, &cfg, &mut rng)?;

    println!("mu = {}, photons sent {}, reaching Bob {}", cfg.mu, sent.photons.iter().sum::<u32>(), at_bob.photons.iter().sum::<u32>());
    println!("{:>5} {:>5} {:>5} {:>3} {:>3} {:>9} {:>9}", "slot", "state", "basis", "m0", "m1", "p0", "p1");
    for (i, o) in clicks.outcomes.iter().enumerate() {
        if matches!(o, SlotOutcome::D0 | SlotOutcome::D1) {
            println!(
                "{:>5} {:>5} {:>5} {:>3} {:>3} {:>9.5} {:>9.5}  {}",
                i + 1, sent.states[i].to_string(), format!("{:?}", bases[i]), m0[i], m1[i], p0[i], p1[i], o.label()
            );
        }
    }
    println!(
        "{} clicks, {} double clicks, {} gates withdrawn",
        clicks.click_count(),
        clicks.double_clicks(),
        clicks.withdrawn()
    );
    Ok(())
}
