//! Homodyne readout of Bob's phase modulator: analytic error against a
//! sampled run, for a few signal strengths and noise levels.

use qkd_trojan::optics::{homodyne_error_prob, simulate_phase_readout, solve_electronic_noise, HomodyneModel};
use qkd_trojan::rng::stream;
use rand::Rng;

fn main() -> qkd_trojan::Result<()> {
    let mut rng = stream(2024, &[7]);
    let slots = 100_000;
    let bits: Vec<u8> = (0..slots).map(|_| rng.random_range(0..2)).collect();

    // Noise that brings mu_sig = 3 down to 90% correlation.
    let noisy = HomodyneModel {
        electronic_noise_var: solve_electronic_noise(3.0, 0.10, &HomodyneModel::IDEAL)?,
        ..HomodyneModel::IDEAL
    };
    println!("{:>7} {:>7} {:>10} {:>10}", "mu_sig", "model", "analytic", "sampled");
    for (name, model) in [("ideal", HomodyneModel::IDEAL), ("noisy", noisy)] {
        for mu in [0.1, 1.0, 3.0, 10.0, 100.0] {
            let r = simulate_phase_readout(&bits, mu, &model, &mut rng)?;
            println!("{mu:>7} {name:>7} {:>10.5} {:>10.5}", 1.0 - homodyne_error_prob(mu, &model), r.correlation);
        }
    }
    println!("electronic noise for 90% at mu_sig = 3: {:.4} shot-noise units", noisy.electronic_noise_var);
    Ok(())
}
