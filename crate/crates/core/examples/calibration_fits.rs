// Calibration of the noise model: Ramsey and motional coherence decays and
// the sideband estimate of the mean phonon number.
//
// cargo run --example calibration_fits

use drumhead::noise::{fit_decay, intensity_error, nbar_from_sidebands, DecayKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> drumhead::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.01).expect("valid sigma");
    let times: Vec<f64> = (0..15).map(|i| i as f64 * 0.5e-3).collect();
    for (name, tau, kind) in [("laser", 4e-3, DecayKind::Exponential), ("motional", 3e-3, DecayKind::Exponential), ("laser (gaussian)", 4e-3, DecayKind::Gaussian)] {
        let y: Vec<f64> = times
            .iter()
            .map(|t| {
                let x = t / tau;
                let env = if kind == DecayKind::Gaussian { (-x * x).exp() } else { (-x).exp() };
                (0.98 * env + noise.sample(&mut rng)).clamp(0.0, 1.0)
            })
            .collect();
        let fit = fit_decay(&times, &y, kind)?;
        println!("{name}: tau = {:.2} +- {:.2} ms, contrast {:.3}", fit.tau * 1e3, fit.tau_std_error * 1e3, fit.contrast);
    }
    println!("nbar from sidebands (0.05, 0.55): {:.3}", nbar_from_sidebands(0.05, 0.55)?);
    println!("1% intensity noise: {:.3e} infidelity", intensity_error(0.01));
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
