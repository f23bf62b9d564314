// Four-ion crystal in the blade trap: equilibrium positions, labels and the
// transverse mode table.
//
// cargo run --example crystal_modes

use drumhead::constants::to_mhz;
use drumhead::crystal::{solve_equilibrium, transverse_modes, TrapConfig};

pub fn run_example() -> drumhead::Result<()> {
    let crystal = solve_equilibrium(&TrapConfig::four_ion_blade(), 4, 1)?;
    let spectrum = transverse_modes(&crystal)?;
    let labels = crystal.four_ion_labels().expect("four ions");
    for (name, ion) in ["L", "R", "U", "D"].iter().zip(labels.ordered()) {
        let p = crystal.positions[ion];
        println!("{name}: ion {ion} at x = {:+.3} um, z = {:+.3} um", p[0] * 1e6, p[2] * 1e6);
    }
    println!("minimum spacing {:.3} um", crystal.min_spacing() * 1e6);
    for k in 0..spectrum.n_modes() {
        let b: Vec<String> = labels.ordered().iter().map(|&j| format!("{:+.3}", spectrum.mode_matrix[(j, k)])).collect();
        println!(
            "mode {}: {:.4} MHz  eta {:.4}  b(L,R,U,D) = {}",
            k + 1,
            to_mhz(spectrum.frequencies[k]),
            spectrum.lamb_dicke[k],
            b.join(" ")
        );
    }
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
