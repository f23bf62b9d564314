// Error budget of the LR and UD gates under the calibrated four-ion noise
// model, plus the effect of treating qubit dephasing as independent.
//
// cargo run --release --example noise_budget

use std::f64::consts::FRAC_PI_4;

use drumhead::crystal::{solve_equilibrium, transverse_modes, TrapConfig};
use drumhead::noise::{error_budget, NoiseModel, OpenSystemOptions};
use drumhead::pulses::{design_two_segment, scale_to_phase, TwoSegmentRule};

pub fn run_example() -> drumhead::Result<()> {
    let crystal = solve_equilibrium(&TrapConfig::four_ion_blade(), 4, 1)?;
    let spectrum = transverse_modes(&crystal)?;
    let l = crystal.four_ion_labels().expect("four ions");
    let noise = NoiseModel::four_ion_measured(4);
    let opts = OpenSystemOptions::default();
    for (name, pair, rule) in [("LR", (l.left, l.right), TwoSegmentRule::LR), ("UD", (l.up, l.down), TwoSegmentRule::UD)] {
        let gate = scale_to_phase(&design_two_segment(&spectrum, pair, rule)?, &spectrum, FRAC_PI_4)?;
        let budget = error_budget(&gate, &spectrum, &noise, &opts)?;
        println!("{name} gate ({}):", budget.model);
        for (channel, v) in &budget.contributions {
            println!("  {channel:<20} {:.3}%", v * 100.0);
        }
        println!("  {:<20} {:.3}%  (noiseless baseline {:.1e})", "total", budget.total * 100.0, budget.baseline);
    }
    let gate = scale_to_phase(&design_two_segment(&spectrum, (l.left, l.right), TwoSegmentRule::LR)?, &spectrum, FRAC_PI_4)?;
    let independent = NoiseModel { independent_dephasing: true, ..noise };
    let b = error_budget(&gate, &spectrum, &independent, &opts)?;
    println!("LR with independent qubit dephasing: total {:.3}%", b.total * 100.0);
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
