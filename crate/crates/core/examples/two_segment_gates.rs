// Two-segment phase-modulated gates for the row (LR) and column (UD) pairs,
// scaled to a pi/4 two-qubit phase.
//
// cargo run --example two_segment_gates

use std::f64::consts::FRAC_PI_4;

use drumhead::constants::to_mhz;
use drumhead::crystal::{solve_equilibrium, transverse_modes, TrapConfig};
use drumhead::dynamics::{coherent_fidelity, final_displacements, two_qubit_phase};
use drumhead::pulses::{design_two_segment, scale_to_phase, TwoSegmentRule};

pub fn run_example() -> drumhead::Result<()> {
    let crystal = solve_equilibrium(&TrapConfig::four_ion_blade(), 4, 1)?;
    let spectrum = transverse_modes(&crystal)?;
    let l = crystal.four_ion_labels().expect("four ions");
    for (name, pair, rule) in [("LR", (l.left, l.right), TwoSegmentRule::LR), ("UD", (l.up, l.down), TwoSegmentRule::UD)] {
        let raw = design_two_segment(&spectrum, pair, rule)?;
        let gate = scale_to_phase(&raw, &spectrum, FRAC_PI_4)?;
        let alpha = final_displacements(&gate, &spectrum)?;
        let residual = (0..alpha.ncols()).map(|k| alpha.column(k).sum().norm()).fold(0.0, f64::max);
        println!(
            "{name}: mu = {:.4} MHz, T = {:.3} us, Omega = 2pi x {:.1} kHz",
            to_mhz(gate.detuning),
            gate.total_time * 1e6,
            gate.max_rabi_rate() / (2.0 * std::f64::consts::PI) / 1e3
        );
        for s in &gate.segments {
            println!(
                "  ion {} from {:7.3} us for {:6.3} us, motional phase {:+.4}",
                s.target_ion,
                s.start_time * 1e6,
                s.duration * 1e6,
                s.motional_phase
            );
        }
        println!(
            "  theta = {:.12}, closure residual {residual:.1e}, coherent fidelity at nbar 0.1: {:.9}",
            two_qubit_phase(&gate, &spectrum)?,
            coherent_fidelity(&gate, &spectrum, &[0.1; 4])?
        );
    }
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
