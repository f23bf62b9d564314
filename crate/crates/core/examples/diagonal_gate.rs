// Diagonal (LU) pair: the alternating single-ion sequence with a 2 us gap and
// the phase-space trajectory of every mode for the |++> spin state.
//
// cargo run --example diagonal_gate

use std::f64::consts::FRAC_PI_4;

use drumhead::crystal::{solve_equilibrium, transverse_modes, TrapConfig};
use drumhead::dynamics::{trajectory, DEFAULT_SAMPLES_PER_SEGMENT};
use drumhead::io::write_trajectory_csv;
use drumhead::pulses::{design_alternating_diagonal, scale_to_phase};

pub fn run_example() -> drumhead::Result<()> {
    let crystal = solve_equilibrium(&TrapConfig::four_ion_blade(), 4, 1)?;
    let spectrum = transverse_modes(&crystal)?;
    let l = crystal.four_ion_labels().expect("four ions");
    let raw = design_alternating_diagonal(&spectrum, (l.left, l.up), 2e-6)?;
    let gate = scale_to_phase(&raw, &spectrum, FRAC_PI_4)?;
    println!("LU gate: {} segments, T = {:.3} us", gate.segments.len(), gate.total_time * 1e6);
    let traj = trajectory(&gate, &spectrum, DEFAULT_SAMPLES_PER_SEGMENT)?;
    for k in 0..spectrum.n_modes() {
        let path = traj.plus_plus(k);
        let reach = path.iter().map(|(_, a)| a.norm()).fold(0.0, f64::max);
        let end = path.last().map(|(_, a)| a.norm()).unwrap_or(0.0);
        println!("mode {}: max |alpha| {reach:.3}, |alpha(T)| {end:.1e}", k + 1);
    }
    println!("theta = {:.12}, closure residual {:.1e}", traj.two_qubit_phase, traj.max_closure_residual());
    let path = std::env::temp_dir().join("drumhead_lu_trajectory.csv");
    write_trajectory_csv(&traj, std::fs::File::create(&path)?)?;
    println!("trajectory written to {}", path.display());
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
