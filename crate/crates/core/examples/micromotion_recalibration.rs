// Rabi-rate reduction from excess micromotion and the intensity
// recalibration that restores the designed two-qubit phase.
//
// cargo run --example micromotion_recalibration

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use drumhead::crystal::{solve_equilibrium, transverse_modes, TrapConfig};
use drumhead::dynamics::two_qubit_phase;
use drumhead::micromotion::{effective_sequence, rabi_reduction, recalibrate_intensity, recalibration_report, MicromotionContext, DEFAULT_RABI_FLOOR};
use drumhead::pulses::{design_two_segment, scale_to_phase, TwoSegmentRule};

pub fn run_example() -> drumhead::Result<()> {
    let waist = 1.5e-6;
    for x in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        println!("A/R = {x:.1}: r = {:.4}", rabi_reduction(x, 1.0));
    }
    let ctx = MicromotionContext::new(7e-6, 0.12, waist)?;
    println!("ion 7 um from the RF null: A = {:.0} nm, r = {:.4}", ctx.amplitude * 1e9, ctx.rabi_reduction());
    println!("A = 5 um: intensity must rise {:.2} times", 1.0 / rabi_reduction(5e-6, waist));

    let crystal = solve_equilibrium(&TrapConfig::four_ion_blade(), 4, 1)?;
    let spectrum = transverse_modes(&crystal)?;
    let l = crystal.four_ion_labels().expect("four ions");
    let gate = scale_to_phase(&design_two_segment(&spectrum, (l.up, l.down), TwoSegmentRule::UD)?, &spectrum, FRAC_PI_4)?;
    let amps = BTreeMap::from([(l.up, ctx.amplitude), (l.down, 0.5 * ctx.amplitude)]);
    let seen = effective_sequence(&gate, &amps, waist)?;
    println!("UD phase without compensation: {:.6} (target {FRAC_PI_4:.6})", two_qubit_phase(&seen, &spectrum)?);
    let fixed = effective_sequence(&recalibrate_intensity(&gate, &amps, waist)?, &amps, waist)?;
    println!("UD phase after recalibration: {:.12}", two_qubit_phase(&fixed, &spectrum)?);
    for e in recalibration_report(&gate, &amps, waist, DEFAULT_RABI_FLOOR)? {
        println!("  ion {}: A = {:.0} nm, r = {:.4}, intensity x{:.4}", e.ion, e.amplitude_nm, e.r, e.intensity_factor);
    }
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
