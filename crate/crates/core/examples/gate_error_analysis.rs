// Analysis of repeated-gate data: Bell fidelity from population and parity,
// parity-contrast fitting, and the gate error from fidelity against an odd
// number of gates.
//
// cargo run --example gate_error_analysis

use drumhead::dynamics::{bell_fidelity, fit_parity_contrast, parity_curve_from_contrast};
use drumhead::readout::{crosstalk_infidelity, fit_gate_error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> drumhead::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.01).expect("valid sigma");

    let phases: Vec<f64> = (0..24).map(|i| i as f64 * std::f64::consts::PI / 12.0).collect();
    let parity: Vec<f64> = parity_curve_from_contrast(0.97, 0.3, &phases).iter().map(|p| p + noise.sample(&mut rng)).collect();
    let (contrast, offset) = fit_parity_contrast(&phases, &parity)?;
    println!("parity contrast {contrast:.4}, phase offset {offset:.3} rad");
    println!("Bell fidelity from population 0.996 and contrast {contrast:.3}: {:.4}", bell_fidelity(0.996, contrast)?);

    let gates: Vec<u32> = vec![1, 3, 5, 7, 9, 11];
    let fidelity: Vec<f64> = gates.iter().map(|&n| 0.99 - 0.014 * n as f64 + noise.sample(&mut rng)).collect();
    let fit = fit_gate_error(&gates, &fidelity, &[0.01; 6])?;
    println!(
        "gate error {:.2}% +- {:.2}%, intercept {:.3}",
        fit.epsilon * 100.0,
        fit.epsilon_std_error * 100.0,
        fit.intercept
    );
    let omega = 2.0 * std::f64::consts::PI;
    println!("neighbor crosstalk error: {:.2e}", crosstalk_infidelity(omega * 1.04e6, omega * 2.7e3)?);
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
