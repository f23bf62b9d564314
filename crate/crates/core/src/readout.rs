//! Detection-error correction and the analysis fits used on gate data.
//!
//! Basis states are indexed little-endian over ions: bit `i` of the index is
//! the state of ion `i` (1 = bright). The matching bitstring lists ions left
//! to right, so index 1 of a 4-ion register is "1000".

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `matrix[(measured, prepared)]`; columns sum to one.
    pub matrix: DMatrix<f64>,
    pub n_ions: usize,
    /// Shots per prepared state; zero for a synthetic model.
    pub calibration_shots: u64,
}

impl ConfusionMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn identity(n_ions: usize) -> Self {
        let d = 1 << n_ions;
        Self { matrix: DMatrix::identity(d, d), n_ions, calibration_shots: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let d = 1usize << self.n_ions;
        if self.matrix.nrows() != d || self.matrix.ncols() != d {
            return invalid(format!("confusion matrix must be {d}x{d} for {} ions", self.n_ions));
        }
        if self.matrix.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return invalid("confusion matrix entries must be non-negative");
        }
        for (j, col) in self.matrix.column_iter().enumerate() {
            let s: f64 = col.sum();
            if (s - 1.0).abs() > 1e-9 {
                return invalid(format!("column {j} sums to {s}"));
            }
        }
        Ok(())
    }
}

pub fn bitstring(index: usize, n_ions: usize) -> String {
    (0..n_ions).map(|i| if (index >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Result<usize> {
    let mut index = 0;
    for (i, ch) in s.trim().chars().enumerate() {
        match ch {
            '0' => {}
            '1' => index |= 1 << i,
            _ => return invalid(format!("bad bitstring {s:?}")),
        }
    }
    Ok(index)
}

/// Independent per-ion flips, plus a chance that a bright neighbor makes an
/// ion read bright.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticReadout {
    pub per_ion_flip: f64,
    pub neighbor_crosstalk: f64,
    pub adjacency: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfusionSource {
    Synthetic(SyntheticReadout),
    /// `counts[(measured, prepared)]` from calibration runs.
    Counts(DMatrix<f64>),
}

pub fn build_confusion(n_ions: usize, source: &ConfusionSource) -> Result<ConfusionMatrix> {
    if n_ions == 0 || n_ions > 16 {
        return invalid(format!("readout supports 1 to 16 ions, got {n_ions}"));
    }
    let d = 1usize << n_ions;
    match source {
        ConfusionSource::Synthetic(model) => {
            let SyntheticReadout { per_ion_flip: flip, neighbor_crosstalk: xt, adjacency } = model;
            if !(0.0..0.5).contains(flip) || !(0.0..0.5).contains(xt) {
                return invalid("flip and crosstalk probabilities must lie in [0, 0.5)");
            }
            if adjacency.iter().any(|&(a, b)| a >= n_ions || b >= n_ions || a == b) {
                return invalid("adjacency refers to unknown ions");
            }
            let mut m = DMatrix::zeros(d, d);
            for prepared in 0..d {
                let bright = |i: usize| (prepared >> i) & 1 == 1;
                let p_bright: Vec<f64> = (0..n_ions)
                    .map(|i| {
                        let mut p = if bright(i) { 1.0 - flip } else { *flip };
                        for &(a, b) in adjacency {
                            let other = if a == i { b } else if b == i { a } else { continue };
                            if bright(other) {
                                p += (1.0 - p) * xt;
                            }
                        }
                        p
                    })
                    .collect();
                for measured in 0..d {
                    m[(measured, prepared)] = (0..n_ions)
                        .map(|i| if (measured >> i) & 1 == 1 { p_bright[i] } else { 1.0 - p_bright[i] })
                        .product();
                }
            }
            Ok(ConfusionMatrix { matrix: m, n_ions, calibration_shots: 0 })
        }
        ConfusionSource::Counts(counts) => {
            if counts.nrows() != d || counts.ncols() != d {
                return invalid(format!("calibration counts must be {d}x{d}"));
            }
            if counts.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return invalid("calibration counts must be non-negative");
            }
            let mut m = counts.clone();
            let mut shots = 0u64;
            for j in 0..d {
                let total: f64 = counts.column(j).sum();
                if total == 0.0 {
                    return Err(Error::Calibration(format!("prepared state {} has no counts", bitstring(j, n_ions))));
                }
                shots = shots.max(total.round() as u64);
                m.column_mut(j).scale_mut(1.0 / total);
            }
            Ok(ConfusionMatrix { matrix: m, n_ions, calibration_shots: shots })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub probabilities: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub shots: u64,
    pub log_likelihood: f64,
}

fn log_likelihood(f: &[f64], m: &DMatrix<f64>, p: &DVector<f64>) -> f64 {
    let q = m * p;
    f.iter().zip(q.iter()).filter(|(fi, _)| **fi > 0.0).map(|(fi, qi)| fi * qi.ln()).sum()
}

/// Maximum-likelihood populations `p >= 0, sum p = 1` for observed counts `f`
/// under the multinomial model `f ~ Mult(T, M p)`.
pub fn mle_recover(counts: &[f64], confusion: &ConfusionMatrix) -> Result<PopulationEstimate> {
    confusion.validate()?;
    let d = confusion.dim();
    if counts.len() != d || counts.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return invalid(format!("need {d} non-negative counts"));
    }
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return invalid("no counts");
    }
    let m = &confusion.matrix;
    for (i, &fi) in counts.iter().enumerate() {
        if fi > 0.0 && m.row(i).iter().all(|v| *v == 0.0) {
            return Err(Error::Infeasible(format!("outcome {} was observed but has zero probability", bitstring(i, confusion.n_ions))));
        }
    }
    let freq = DVector::from_iterator(d, counts.iter().map(|c| c / total));
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let singular = svd.singular_values.min() <= 1e-12 * smax;

    if !singular {
        if let Some(p) = m.clone().lu().solve(&freq) {
            if p.iter().all(|v| *v >= 0.0) {
                return Ok(estimate(counts, m, p, total));
            }
        }
    }
    let mut p = em(counts, m, total);
    if !singular {
        p = polish(counts, m, p, total);
    } else {
        p = minimum_norm(m, &p);
    }
    Ok(estimate(counts, m, p, total))
}

fn estimate(counts: &[f64], m: &DMatrix<f64>, mut p: DVector<f64>, total: f64) -> PopulationEstimate {
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let s = p.sum();
    p /= s;
    PopulationEstimate {
        log_likelihood: log_likelihood(counts, m, &p),
        probabilities: p.iter().copied().collect(),
        std_errors: vec![0.0; p.len()],
        shots: total.round() as u64,
    }
}

fn em(counts: &[f64], m: &DMatrix<f64>, total: f64) -> DVector<f64> {
    let d = m.ncols();
    let mut p = DVector::from_element(d, 1.0 / d as f64);
    let mut ll = log_likelihood(counts, m, &p);
    for _ in 0..200_000 {
        let q = m * &p;
        let ratio = DVector::from_iterator(d, counts.iter().zip(q.iter()).map(|(f, q)| if *f > 0.0 { f / (total * q) } else { 0.0 }));
        let g = m.transpose() * ratio;
        p.component_mul_assign(&g);
        let s = p.sum();
        p /= s;
        let next = log_likelihood(counts, m, &p);
        if (next - ll).abs() <= 1e-10 * ll.abs().max(1e-300) * 1e-3 {
            break;
        }
        ll = next;
    }
    p
}

/// Newton steps on the support of `p` with the sum constraint, dropping
/// components that reach zero and re-adding those whose KKT condition fails.
fn polish(counts: &[f64], m: &DMatrix<f64>, mut p: DVector<f64>, total: f64) -> DVector<f64> {
    let d = m.ncols();
    let tiny = 1e-13;
    for _ in 0..100 {
        let q = m * &p;
        let w = DVector::from_iterator(d, counts.iter().zip(q.iter()).map(|(f, q)| if *f > 0.0 { f / q } else { 0.0 }));
        let grad = m.transpose() * &w;
        // KKT: grad_j = T on the support, <= T off it
        let mut support: Vec<usize> = (0..d).filter(|&j| p[j] > tiny).collect();
        for j in 0..d {
            if p[j] <= tiny && grad[j] > total * (1.0 + 1e-9) {
                support.push(j);
            }
        }
        support.sort_unstable();
        let k = support.len();
        let wh = DVector::from_iterator(d, counts.iter().zip(q.iter()).map(|(f, q)| if *f > 0.0 { f / (q * q) } else { 0.0 }));
        let ms = DMatrix::from_fn(d, k, |i, c| m[(i, support[c])]);
        let hess = ms.transpose() * DMatrix::from_diagonal(&wh) * &ms;
        let mut kkt = DMatrix::zeros(k + 1, k + 1);
        kkt.view_mut((0, 0), (k, k)).copy_from(&hess);
        for c in 0..k {
            kkt[(c, k)] = 1.0;
            kkt[(k, c)] = 1.0;
        }
        let mut rhs = DVector::zeros(k + 1);
        for c in 0..k {
            rhs[c] = grad[support[c]];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { break };
        let step = DVector::from_fn(d, |j, _| support.iter().position(|&s| s == j).map_or(0.0, |c| sol[c]));
        let mut alpha: f64 = 1.0;
        for j in 0..d {
            if step[j] < 0.0 {
                alpha = alpha.min(-p[j] / step[j]);
            }
        }
        let ll0 = log_likelihood(counts, m, &p);
        let mut accepted = false;
        while alpha > 1e-12 {
            let trial = &p + &step * alpha;
            let trial = trial.map(|v| if v < tiny { 0.0 } else { v });
            let trial = &trial / trial.sum();
            let ll = log_likelihood(counts, m, &trial);
            if ll.is_finite() && ll >= ll0 {
                let gain = ll - ll0;
                p = trial;
                accepted = true;
                if gain <= 1e-14 * ll0.abs() {
                    return p;
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    p
}

/// Point of the simplex closest to the origin among those with `M p = M p0`.
fn minimum_norm(m: &DMatrix<f64>, p0: &DVector<f64>) -> DVector<f64> {
    let target = m * p0;
    let pinv = m.clone().pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::zeros(m.ncols(), m.nrows()));
    let project_affine = |x: &DVector<f64>| x - &pinv * (m * x - &target);
    let d = p0.len();
    let mut x = DVector::zeros(d);
    let mut pa = DVector::zeros(d);
    let mut qa = DVector::zeros(d);
    for _ in 0..20_000 {
        let y = project_affine(&(&x + &pa));
        pa = &x + &pa - &y;
        let next = project_simplex(&(&y + &qa));
        qa = &y + &qa - &next;
        let change = (&next - &x).norm();
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    x
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Standard deviations of the recovered populations over `n_samples`
/// multinomial resamples of `T` shots from `M p`.
pub fn monte_carlo_errors(
    estimate: &PopulationEstimate,
    confusion: &ConfusionMatrix,
    shots: u64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_samples < 100 {
        return invalid("need at least 100 Monte Carlo samples");
    }
    if shots == 0 {
        return invalid("need a positive shot count");
    }
    let p = DVector::from_column_slice(&estimate.probabilities);
    let q = &confusion.matrix * p;
    let q: Vec<f64> = q.iter().map(|v| v.max(0.0)).collect();
    let d = q.len();
    let samples: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let counts = sample_multinomial(&mut rng, shots, &q);
            mle_recover(&counts, confusion).map(|e| e.probabilities)
        })
        .collect::<Result<_>>()?;
    let n = n_samples as f64;
    Ok((0..d)
        .map(|j| {
            let mean = samples.iter().map(|s| s[j]).sum::<f64>() / n;
            (samples.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect())
}

/// Multinomial draw as a chain of conditional binomials.
pub fn sample_multinomial<R: rand::Rng>(rng: &mut R, shots: u64, probabilities: &[f64]) -> Vec<f64> {
    let mut remaining = shots;
    let mut mass: f64 = probabilities.iter().sum();
    let mut out = vec![0.0; probabilities.len()];
    for (i, &pi) in probabilities.iter().enumerate() {
        if remaining == 0 || mass <= 0.0 {
            break;
        }
        let k = if i + 1 == probabilities.len() {
            remaining
        } else {
            let pr = (pi / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, pr).map(|b| b.sample(rng)).unwrap_or(0)
        };
        out[i] = k as f64;
        remaining -= k;
        mass -= pi;
    }
    out
}

/// Single-qubit pi-pulse error on a neighbor driven at `omega_neighbor`
/// while the target sees `omega_target`: `[(pi/2)(Omega_n / Omega_t)]^2`.
pub fn crosstalk_infidelity(omega_target: f64, omega_neighbor: f64) -> Result<f64> {
    if !(omega_target > 0.0) {
        return invalid("target Rabi rate must be positive");
    }
    Ok((std::f64::consts::FRAC_PI_2 * omega_neighbor / omega_target).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateErrorFit {
    pub epsilon: f64,
    pub epsilon_std_error: f64,
    pub intercept: f64,
    pub intercept_std_error: f64,
}

/// Weighted linear fit `F(N) = F0 - eps N` over odd repetition counts.
/// Zero uncertainties fall back to equal weights.
pub fn fit_gate_error(gate_counts: &[u32], fidelities: &[f64], errors: &[f64]) -> Result<GateErrorFit> {
    let n = gate_counts.len();
    if n < 3 || fidelities.len() != n || errors.len() != n {
        return Err(Error::Fit("gate-error fit needs at least three matching points".into()));
    }
    if gate_counts.iter().any(|c| c % 2 == 0) || gate_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Fit("gate counts must be odd and increasing".into()));
    }
    if errors.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::Fit("uncertainties must be non-negative".into()));
    }
    let weighted = errors.iter().all(|e| *e > 0.0);
    let w: Vec<f64> = errors.iter().map(|e| if weighted { 1.0 / (e * e) } else { 1.0 }).collect();
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let x = gate_counts[i] as f64;
        s += w[i];
        sx += w[i] * x;
        sy += w[i] * fidelities[i];
        sxx += w[i] * x * x;
        sxy += w[i] * x * fidelities[i];
    }
    let det = s * sxx - sx * sx;
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let scale = if weighted {
        1.0
    } else {
        let rss: f64 = (0..n).map(|i| (fidelities[i] - intercept - slope * gate_counts[i] as f64).powi(2)).sum();
        rss / (n - 2) as f64
    };
    Ok(GateErrorFit {
        epsilon: -slope,
        epsilon_std_error: (scale * s / det).sqrt(),
        intercept,
        intercept_std_error: (scale * sxx / det).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstrings_are_little_endian() {
        assert_eq!(bitstring(1, 4), "1000");
        assert_eq!(bitstring(6, 4), "0110");
        assert_eq!(parse_bitstring("0110").unwrap(), 6);
        assert!(parse_bitstring("01a").is_err());
    }

    #[test]
    fn noiseless_model_is_identity() {
        let m = build_confusion(3, &ConfusionSource::Synthetic(SyntheticReadout { per_ion_flip: 0.0, neighbor_crosstalk: 0.0, adjacency: vec![(0, 1)] })).unwrap();
        assert_eq!(m.matrix, DMatrix::identity(8, 8));
    }

    #[test]
    fn two_ion_flips_are_a_tensor_square() {
        let e = 0.07;
        let m = build_confusion(2, &ConfusionSource::Synthetic(SyntheticReadout { per_ion_flip: e, neighbor_crosstalk: 0.0, adjacency: vec![(0, 1)] })).unwrap();
        let one = nalgebra::Matrix2::new(1.0 - e, e, e, 1.0 - e);
        let k = one.kronecker(&one);
        // kronecker puts ion 0 in the high bit; ours is little-endian
        let perm = [0, 2, 1, 3];
        for r in 0..4 {
            for c in 0..4 {
                assert!((m.matrix[(r, c)] - k[(perm[r], perm[c])]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn counts_normalize() {
        let counts = DMatrix::from_row_slice(2, 2, &[90.0, 3.0, 10.0, 97.0]);
        let m = build_confusion(1, &ConfusionSource::Counts(counts)).unwrap();
        assert!((m.matrix[(0, 0)] - 0.9).abs() < 1e-15);
        assert_eq!(m.calibration_shots, 100);
        let zero = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 97.0]);
        assert!(matches!(build_confusion(1, &ConfusionSource::Counts(zero)), Err(Error::Calibration(_))));
    }

    #[test]
    fn identity_recovery_is_exact() {
        let m = ConfusionMatrix::identity(2);
        let est = mle_recover(&[10.0, 0.0, 30.0, 60.0], &m).unwrap();
        assert_eq!(est.probabilities, vec![0.1, 0.0, 0.3, 0.6]);
        let est = mle_recover(&[0.0, 0.0, 7.0, 0.0], &m).unwrap();
        assert_eq!(est.probabilities, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn boundary_solution_satisfies_kkt() {
        let e = 0.1;
        let m = build_confusion(1, &ConfusionSource::Synthetic(SyntheticReadout { per_ion_flip: e, neighbor_crosstalk: 0.0, adjacency: vec![] })).unwrap();
        // more dark counts than the model can explain: optimum at p = (1, 0)
        let est = mle_recover(&[95.0, 5.0], &m).unwrap();
        assert!((est.probabilities[0] - 1.0).abs() < 1e-9);
        assert!(est.probabilities.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn infeasible_outcome() {
        let mut m = ConfusionMatrix::identity(1);
        m.matrix = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(mle_recover(&[1.0, 1.0], &m), Err(Error::Infeasible(_))));
    }

    #[test]
    fn singular_matrix_gives_min_norm() {
        let mut m = ConfusionMatrix::identity(1);
        m.matrix = DMatrix::from_element(2, 2, 0.5);
        let est = mle_recover(&[3.0, 5.0], &m).unwrap();
        assert!((est.probabilities[0] - 0.5).abs() < 1e-9);
        assert!((est.probabilities[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn crosstalk_value() {
        let x = crosstalk_infidelity(1.04e6, 2.7e3).unwrap();
        assert!((x - 1.663e-5).abs() < 1e-8);
        assert_eq!(crosstalk_infidelity(1.0, 0.0).unwrap(), 0.0);
        assert!(crosstalk_infidelity(0.0, 1.0).is_err());
    }

    #[test]
    fn exact_line() {
        let n = [1, 3, 5, 7, 9];
        let f: Vec<f64> = n.iter().map(|&k| 1.0 - 0.014 * k as f64).collect();
        let fit = fit_gate_error(&n, &f, &[0.01; 5]).unwrap();
        assert!((fit.epsilon - 0.014).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit_gate_error(&n[..2], &f[..2], &[0.01; 2]).is_err());
        assert!(fit_gate_error(&[1, 2, 3], &f[..3], &[0.01; 3]).is_err());
    }
}
