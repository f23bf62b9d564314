// Amplitude-modulated gate in a larger 2D crystal: a short detuning scan for
// both drive styles, then the best alternating sequence.
//
// cargo run --release --example amplitude_optimization [n_ions]

use drumhead::cli::central_pair;
use drumhead::constants::khz;
use drumhead::crystal::{solve_equilibrium, transverse_modes, TrapConfig};
use drumhead::pulses::{free_parameter_count, optimize_amplitudes, scan_detuning, OptimizeOptions, Style};

pub fn run_with(n_ions: usize, offsets_khz: &[f64]) -> drumhead::Result<()> {
    let crystal = solve_equilibrium(&TrapConfig::large_crystal(), n_ions, 1)?;
    let spectrum = transverse_modes(&crystal)?;
    let pair = central_pair(&crystal)?;
    let com = spectrum.frequencies[0];
    let nbar = vec![0.5; spectrum.n_modes()];
    let detunings: Vec<f64> = offsets_khz.iter().map(|o| com + khz(*o)).collect();
    println!("{n_ions} ions, pair {pair:?}");
    for (style, n_seg) in [(Style::Alternating, 240), (Style::Simultaneous, 120)] {
        println!("{style:?}: {n_seg} segments, {} free amplitudes", free_parameter_count(n_seg, style));
        let template = OptimizeOptions::new(com, 300e-6, n_seg, style);
        for (p, o) in scan_detuning(&spectrum, pair, &nbar, &template, &detunings)?.iter().zip(offsets_khz) {
            println!("  COM + {o:5.1} kHz: infidelity {:.3e}", p.infidelity);
        }
    }
    let best = OptimizeOptions::new(com + khz(offsets_khz[0]), 300e-6, 240, Style::Alternating);
    let gate = optimize_amplitudes(&spectrum, pair, &nbar, &best)?;
    let peak = gate.amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    println!(
        "alternating gate at COM + {} kHz: infidelity {:.3e} after {} iterations, peak Rabi rate 2pi x {:.1} kHz",
        offsets_khz[0],
        gate.infidelity,
        gate.iterations,
        peak / (2.0 * std::f64::consts::PI) / 1e3
    );
    Ok(())
}

pub fn run_example() -> drumhead::Result<()> {
    run_with(20, &[15.0, 20.0, 30.0])
}

fn main() -> drumhead::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    run_with(n, &[15.5, 18.5, 19.4, 25.0, 35.0])
}
