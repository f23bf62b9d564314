// Detection-error correction on four ions: synthetic confusion matrix,
// forward-sampled counts, maximum-likelihood populations and Monte Carlo
// error bars.
//
// cargo run --release --example readout_mitigation

use drumhead::readout::{bitstring, build_confusion, mle_recover, monte_carlo_errors, sample_multinomial, ConfusionSource, SyntheticReadout};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn run_example() -> drumhead::Result<()> {
    // ions ordered L, R, U, D; neighbors along the rhombus edges
    let model = SyntheticReadout { per_ion_flip: 0.07, neighbor_crosstalk: 0.01, adjacency: vec![(0, 2), (2, 1), (1, 3), (3, 0)] };
    let m = build_confusion(4, &ConfusionSource::Synthetic(model))?;
    // Bell state on L and R, the other two ions dark
    let mut p_true = vec![0.0; 16];
    p_true[0b0000] = 0.49;
    p_true[0b0011] = 0.49;
    p_true[0b0001] = 0.01;
    p_true[0b0010] = 0.01;
    let q = &m.matrix * DVector::from_column_slice(&p_true);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let shots = 2000;
    let counts = sample_multinomial(&mut rng, shots, q.as_slice());
    let mut est = mle_recover(&counts, &m)?;
    est.std_errors = monte_carlo_errors(&est, &m, shots, 500, 11)?;
    println!("state  raw      corrected        true");
    for i in 0..16 {
        if p_true[i] > 0.0 || est.probabilities[i] > 0.005 {
            println!(
                "{}   {:.4}   {:.4} +- {:.4}   {:.2}",
                bitstring(i, 4),
                counts[i] / shots as f64,
                est.probabilities[i],
                est.std_errors[i],
                p_true[i]
            );
        }
    }
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
