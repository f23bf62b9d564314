//! Amplitude-modulated gates for large crystals.
//!
//! The drive is a piecewise-constant real amplitude vector `Omega = P x` where
//! `P` encodes the style and the time-reversal symmetry. Residual displacement
//! and the entangling phase are quadratic forms in `Omega`:
//! `alpha_jk = sum_s Omega_s A_s,jk`, `Theta = Omega^T Gamma Omega`. The cost
//! `Omega^T (M0 + w M1) Omega + w (Omega^T g Omega)^2` adds first-order
//! detuning sensitivity of both, each normalized by the gate time.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{scale_to_phase, PulseSequence, Segment};
use crate::crystal::ModeSpectrum;
use crate::dynamics::{
    coherent_fidelity, drive_coefficient, exprel2, moment_parabolic, phase_integral, phase_integral_derivative,
};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    /// Both ions driven together with the same amplitude; segments separated by a wait.
    Simultaneous,
    /// One ion at a time, `pair.0` on even segments, `pair.1` on odd ones,
    /// both following the same amplitude vector.
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    /// Symmetric detuning `mu`, rad/s.
    pub detuning: f64,
    pub total_time: f64,
    pub n_segments: usize,
    pub style: Style,
    pub robustness_weight: f64,
    /// Wait between segments. `None` picks the style default: zero for
    /// alternating, segment-length waits for simultaneous.
    pub gap: Option<f64>,
    pub min_segment_duration: f64,
    /// Magnitude of the entangling phase.
    pub target_phase: f64,
    pub max_iterations: usize,
    /// Number of generalized eigenvectors used as starting points.
    pub seeds: usize,
}

impl OptimizeOptions {
    pub fn new(detuning: f64, total_time: f64, n_segments: usize, style: Style) -> Self {
        Self {
            detuning,
            total_time,
            n_segments,
            style,
            robustness_weight: 0.01,
            gap: None,
            min_segment_duration: 0.5e-6,
            target_phase: FRAC_PI_4,
            max_iterations: 2000,
            seeds: 4,
        }
    }

    fn layout(&self) -> Result<(f64, f64)> {
        let n = self.n_segments as f64;
        let gap = match (self.gap, self.style) {
            (Some(g), _) => g,
            (None, Style::Alternating) => 0.0,
            (None, Style::Simultaneous) => self.total_time / (2.0 * n),
        };
        if !(gap >= 0.0 && gap.is_finite()) {
            return invalid(format!("gap must be non-negative, got {gap}"));
        }
        let duration = (self.total_time - (n - 1.0) * gap) / n;
        if !(duration >= self.min_segment_duration) {
            return invalid(format!(
                "segment duration {:.3e} s is below the minimum {:.3e} s",
                duration, self.min_segment_duration
            ));
        }
        Ok((duration, gap))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedGate {
    pub sequence: PulseSequence,
    /// Signed amplitude per segment, rad/s. A negative sign is realized as a
    /// motional phase of `pi`.
    pub amplitudes: Vec<f64>,
    pub free_parameters: Vec<f64>,
    pub cost: f64,
    /// `1 - coherent_fidelity` of the returned sequence.
    pub infidelity: f64,
    pub iterations: usize,
}

/// Number of independent amplitudes after imposing the style's symmetry.
pub fn free_parameter_count(n_segments: usize, style: Style) -> usize {
    match style {
        Style::Simultaneous => n_segments.div_ceil(2),
        Style::Alternating => n_segments / 4,
    }
}

/// Free-parameter index of each segment.
fn parameter_map(n_segments: usize, style: Style) -> Vec<usize> {
    match style {
        Style::Simultaneous => (0..n_segments).map(|s| s.min(n_segments - 1 - s)).collect(),
        Style::Alternating => {
            let half = n_segments / 2;
            (0..n_segments)
                .map(|s| {
                    let v = s / 2;
                    v.min(half - 1 - v)
                })
                .collect()
        }
    }
}

fn check_options(spectrum: &ModeSpectrum, pair: (usize, usize), nbar: &[f64], opts: &OptimizeOptions) -> Result<()> {
    let n = spectrum.n_ions();
    if pair.0 == pair.1 || pair.0 >= n || pair.1 >= n {
        return invalid(format!("pair {pair:?} is not two distinct ions of {n}"));
    }
    if nbar.len() != spectrum.n_modes() || nbar.iter().any(|v| !(*v >= 0.0)) {
        return invalid("nbar needs one non-negative entry per mode");
    }
    if opts.n_segments == 0 {
        return invalid("need at least one segment");
    }
    if opts.style == Style::Alternating && opts.n_segments % 4 != 0 {
        return invalid(format!("alternating style needs n_seg divisible by 4, got {}", opts.n_segments));
    }
    if !(opts.total_time > 0.0 && opts.robustness_weight >= 0.0 && opts.target_phase > 0.0) {
        return invalid("total time and target phase must be positive, robustness weight non-negative");
    }
    Ok(())
}

/// Drive slots: (segment index, ion slot 0/1, start, duration).
fn drives(opts: &OptimizeOptions, duration: f64, gap: f64) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    for s in 0..opts.n_segments {
        let start = s as f64 * (duration + gap);
        match opts.style {
            Style::Simultaneous => {
                out.push((s, 0, start, duration));
                out.push((s, 1, start, duration));
            }
            Style::Alternating => out.push((s, s % 2, start, duration)),
        }
    }
    out
}

/// Quadratic forms of the problem in free-parameter coordinates.
pub(crate) struct Forms {
    /// `M0 + w M1`
    pub m: DMatrix<f64>,
    /// `Theta = x^T gamma x`
    pub phase: DMatrix<f64>,
    /// detuning derivative of the phase form divided by T
    pub phase_slope: DMatrix<f64>,
}

pub(crate) fn build_forms(spectrum: &ModeSpectrum, pair: (usize, usize), nbar: &[f64], opts: &OptimizeOptions) -> Result<Forms> {
    let (duration, gap) = opts.layout()?;
    let map = parameter_map(opts.n_segments, opts.style);
    let p = free_parameter_count(opts.n_segments, opts.style);
    let drives = drives(opts, duration, gap);
    let ions = [pair.0, pair.1];
    let t_total = opts.total_time;
    let n_modes = spectrum.n_modes();

    let per_mode = |k: usize| -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let d = opts.detuning - spectrum.frequencies[k];
        let weight = 2.0 * nbar[k] + 1.0;
        let coupling = [spectrum.coupling(ions[0], k), spectrum.coupling(ions[1], k)];
        // unit-amplitude displacement and its detuning derivative per drive, folded into parameters, per ion slot
        let mut a = [vec![C64::new(0.0, 0.0); p], vec![C64::new(0.0, 0.0); p]];
        let mut da = [vec![C64::new(0.0, 0.0); p], vec![C64::new(0.0, 0.0); p]];
        let mut u = Vec::with_capacity(drives.len());
        let mut du = Vec::with_capacity(drives.len());
        let mut coef = Vec::with_capacity(drives.len());
        for &(s, slot, start, tau) in &drives {
            let c = drive_coefficient(coupling[slot], 1.0, 0.0);
            let g = c * phase_integral(start, tau, d);
            let dg = c * phase_integral_derivative(start, tau, d);
            a[slot][map[s]] += g;
            da[slot][map[s]] += dg;
            u.push(g);
            du.push(dg);
            coef.push(c);
        }
        let mut m = DMatrix::zeros(p, p);
        for slot in 0..2 {
            for r in 0..p {
                for c in 0..p {
                    let v0 = (a[slot][r] * a[slot][c].conj()).re;
                    let v1 = (da[slot][r] * da[slot][c].conj()).re / (t_total * t_total);
                    m[(r, c)] += weight * (v0 + opts.robustness_weight * v1);
                }
            }
        }
        // phase: for each ordered pair of drives on different ions
        let mut phase = DMatrix::zeros(p, p);
        let mut slope = DMatrix::zeros(p, p);
        let same = {
            let tau = duration;
            let z = C64::new(0.0, d * tau);
            (tau * tau * exprel2(z), C64::new(0.0, 1.0) * tau * tau * tau * moment_parabolic(z))
        };
        let first: Vec<usize> = (0..drives.len()).filter(|&i| drives[i].1 == 0).collect();
        let second: Vec<usize> = (0..drives.len()).filter(|&i| drives[i].1 == 1).collect();
        for &i in &first {
            for &j in &second {
                let (si, _, ti, _) = drives[i];
                let (sj, _, tj, _) = drives[j];
                let (val, dval) = if si == sj {
                    let cc = coef[i] * coef[j].conj() + coef[j] * coef[i].conj();
                    (cc * same.0, cc * same.1)
                } else if ti < tj {
                    (u[i] * u[j].conj(), du[i] * u[j].conj() + u[i] * du[j].conj())
                } else {
                    (u[j] * u[i].conj(), du[j] * u[i].conj() + u[j] * du[i].conj())
                };
                let (r, c) = (map[si], map[sj]);
                phase[(r, c)] -= 0.5 * val.im;
                phase[(c, r)] -= 0.5 * val.im;
                slope[(r, c)] -= 0.5 * dval.im / t_total;
                slope[(c, r)] -= 0.5 * dval.im / t_total;
            }
        }
        (m, phase, slope)
    };

    let (m, phase, slope) = (0..n_modes)
        .into_par_iter()
        .map(per_mode)
        .reduce(
            || (DMatrix::zeros(p, p), DMatrix::zeros(p, p), DMatrix::zeros(p, p)),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        );
    Ok(Forms { m, phase, phase_slope: slope })
}

struct Objective<'a> {
    forms: &'a Forms,
    theta: f64,
    weight: f64,
}

impl Objective<'_> {
    /// Cost of the direction `x` after scaling it onto `|Theta| = theta`.
    fn value_grad(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let mx = &self.forms.m * x;
        let gx = &self.forms.phase * x;
        let sx = &self.forms.phase_slope * x;
        let m = x.dot(&mx);
        let q = x.dot(&gx);
        let g = x.dot(&sx);
        let (t, w) = (self.theta, self.weight);
        let aq = q.abs();
        let f = t * m / aq + w * t * t * g * g / (q * q);
        let grad = (mx * (2.0 / aq) - &gx * (2.0 * m * q.signum() / (q * q))) * t
            + (sx * (4.0 * g / (q * q)) - gx * (4.0 * g * g / (q * q * q))) * (w * t * t);
        (f, grad)
    }
}

fn bfgs(obj: &Objective, x0: DVector<f64>, max_iter: usize) -> (DVector<f64>, f64, usize, f64) {
    let n = x0.len();
    let mut x = x0;
    let (mut f, mut g) = obj.value_grad(&x);
    let mut h = DMatrix::<f64>::identity(n, n) * (1.0 / g.norm().max(1e-300)) * x.norm() * 1e-2;
    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        let gnorm = g.norm() * x.norm();
        if !(gnorm > 1e-13 * f.abs()) {
            break;
        }
        let mut dir = -(&h * &g);
        if dir.dot(&g) >= 0.0 {
            h = DMatrix::identity(n, n) * (x.norm() * 1e-2 / g.norm());
            dir = -(&h * &g);
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &dir * step;
            let (fn_, gn) = obj.value_grad(&xn);
            if fn_.is_finite() && fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        // keep the direction normalized; the objective is scale invariant
        let scale = 1.0 / xn.norm();
        let xn = xn * scale;
        let gn = gn / scale;
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        let done = (f - fn_).abs() <= 1e-15 * f.abs();
        x = xn;
        g = gn;
        f = fn_;
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        if done {
            break;
        }
    }
    let gnorm = g.norm() * x.norm();
    (x, f, iter, gnorm)
}

/// Generalized-eigenvector starting points: directions maximizing
/// `|x^T Gamma x| / x^T M x`.
fn seed_directions(forms: &Forms, count: usize) -> Result<Vec<DVector<f64>>> {
    let p = forms.m.nrows();
    let diag_m = forms.m.diagonal().iter().map(|v| v.abs()).sum::<f64>() / p as f64;
    let diag_g = forms.phase.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let ridge = 1e-10 * diag_m.max(diag_g).max(f64::MIN_POSITIVE);
    let mut m = forms.m.clone();
    for i in 0..p {
        m[(i, i)] += ridge;
    }
    let m = (&m + m.transpose()) * 0.5;
    let chol = m.cholesky().ok_or_else(|| Error::Optimization { message: "displacement form is not positive".into(), cost: f64::NAN })?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Optimization { message: "singular Cholesky factor".into(), cost: f64::NAN })?;
    let b = &linv * &forms.phase * linv.transpose();
    let b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b);
    let max_nu = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(max_nu > 0.0) || forms.phase.iter().all(|v| *v == 0.0) {
        return Err(Error::Optimization { message: "no achievable two-qubit phase".into(), cost: f64::INFINITY });
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let lt_inv = linv.transpose();
    Ok(order
        .into_iter()
        .take(count.max(1))
        .filter(|&i| eig.eigenvalues[i].abs() > 1e-12 * max_nu)
        .map(|i| {
            let v = &lt_inv * eig.eigenvectors.column(i);
            let n = v.norm();
            v / n
        })
        .collect())
}

fn canonical_sign(mut x: DVector<f64>) -> DVector<f64> {
    if let Some(v) = x.iter().find(|v| v.abs() > 1e-12 * x.amax()) {
        if *v < 0.0 {
            x.neg_mut();
        }
    }
    x
}

/// Optimizes a piecewise-constant amplitude sequence for `pair` at the
/// detuning and gate time in `opts`, with the entangling phase fixed to
/// `+-opts.target_phase`.
pub fn optimize_amplitudes(
    spectrum: &ModeSpectrum,
    pair: (usize, usize),
    nbar: &[f64],
    opts: &OptimizeOptions,
) -> Result<OptimizedGate> {
    check_options(spectrum, pair, nbar, opts)?;
    let forms = build_forms(spectrum, pair, nbar, opts)?;
    let obj = Objective { forms: &forms, theta: opts.target_phase, weight: opts.robustness_weight };
    let mut best: Option<(DVector<f64>, f64, usize, f64)> = None;
    for seed in seed_directions(&forms, opts.seeds)? {
        let (x, f, it, gnorm) = bfgs(&obj, seed, opts.max_iterations);
        let q = x.dot(&(&forms.phase * &x));
        let omega = &x * (opts.target_phase / q.abs()).sqrt();
        let better = match &best {
            None => true,
            Some((bx, bf, _, _)) => {
                let tol = 1e-9 * bf.abs().max(f64::MIN_POSITIVE);
                f < bf - tol || ((f - bf).abs() <= tol && omega.norm() < bx.norm())
            }
        };
        if better {
            best = Some((omega, f, it, gnorm));
        }
    }
    let (omega, cost, iterations, gnorm) =
        best.ok_or_else(|| Error::Optimization { message: "no usable starting direction".into(), cost: f64::INFINITY })?;
    if iterations >= opts.max_iterations && gnorm > 1e-6 * cost.abs() {
        return Err(Error::Optimization { message: format!("no convergence after {iterations} iterations"), cost });
    }
    let omega = canonical_sign(omega);
    let sequence = build_sequence(pair, opts, &omega)?;
    let sequence = scale_to_phase(&sequence, spectrum, opts.target_phase * sign_of_phase(&forms, &omega))?;
    let map = parameter_map(opts.n_segments, opts.style);
    let amplitudes: Vec<f64> = sequence
        .segments
        .iter()
        .step_by(if opts.style == Style::Simultaneous { 2 } else { 1 })
        .map(|s| if s.motional_phase.abs() > 1.0 { -s.rabi_rate } else { s.rabi_rate })
        .collect();
    let mut free = vec![0.0; omega.len()];
    for (s, &k) in map.iter().enumerate() {
        free[k] = amplitudes[s];
    }
    let infidelity = 1.0 - coherent_fidelity(&sequence, spectrum, nbar)?;
    Ok(OptimizedGate { sequence, amplitudes, free_parameters: free, cost, infidelity, iterations })
}

fn sign_of_phase(forms: &Forms, x: &DVector<f64>) -> f64 {
    if x.dot(&(&forms.phase * x)) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn build_sequence(pair: (usize, usize), opts: &OptimizeOptions, x: &DVector<f64>) -> Result<PulseSequence> {
    let (duration, gap) = opts.layout()?;
    let map = parameter_map(opts.n_segments, opts.style);
    let ions = [pair.0, pair.1];
    let mut segments = Vec::new();
    for (s, start, slot) in drives(opts, duration, gap).into_iter().map(|(s, slot, start, _)| (s, start, slot)) {
        let amp = x[map[s]];
        segments.push(Segment {
            target_ion: ions[slot],
            start_time: start,
            duration,
            rabi_rate: amp.abs(),
            motional_phase: if amp < 0.0 { PI } else { 0.0 },
            spin_phase: 0.0,
        });
    }
    PulseSequence::new(segments, opts.detuning, gap, pair)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub detuning: f64,
    /// NaN when the optimization at this point failed.
    pub infidelity: f64,
}

/// Optimizes independently at every detuning; failures become NaN rows.
pub fn scan_detuning(
    spectrum: &ModeSpectrum,
    pair: (usize, usize),
    nbar: &[f64],
    template: &OptimizeOptions,
    detunings: &[f64],
) -> Result<Vec<ScanPoint>> {
    if detunings.is_empty() {
        return invalid("detuning scan window is empty");
    }
    check_options(spectrum, pair, nbar, template)?;
    Ok(detunings
        .par_iter()
        .map(|&mu| {
            let opts = OptimizeOptions { detuning: mu, ..template.clone() };
            let infidelity = match optimize_amplitudes(spectrum, pair, nbar, &opts) {
                Ok(g) => g.infidelity,
                Err(e) => {
                    log::warn!("scan point {mu:.6e} rad/s failed: {e}");
                    f64::NAN
                }
            };
            ScanPoint { detuning: mu, infidelity }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::two_qubit_phase;

    fn two_ion(freqs: [f64; 2]) -> ModeSpectrum {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let b = DMatrix::from_row_slice(2, 2, &[r, -r, r, r]);
        ModeSpectrum::from_parts(freqs.to_vec(), b, crate::constants::YB171_MASS, crate::constants::counter_propagating_delta_k(355e-9))
            .unwrap()
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(free_parameter_count(240, Style::Alternating), 60);
        assert_eq!(free_parameter_count(120, Style::Simultaneous), 60);
        assert_eq!(free_parameter_count(1, Style::Simultaneous), 1);
        let map = parameter_map(8, Style::Alternating);
        assert_eq!(map, vec![0, 0, 1, 1, 1, 1, 0, 0]);
        let map = parameter_map(5, Style::Simultaneous);
        assert_eq!(map, vec![0, 1, 2, 1, 0]);
    }

    #[test]
    fn segment_guard() {
        let spec = two_ion([crate::constants::mhz(3.0), crate::constants::mhz(2.9)]);
        let opts = OptimizeOptions::new(crate::constants::mhz(3.01), 10e-6, 40, Style::Alternating);
        assert!(optimize_amplitudes(&spec, (0, 1), &[0.0, 0.0], &opts).is_err());
        let opts = OptimizeOptions::new(crate::constants::mhz(3.01), 10e-6, 6, Style::Alternating);
        assert!(optimize_amplitudes(&spec, (0, 1), &[0.0, 0.0], &opts).is_err());
    }

    #[test]
    fn phase_form_matches_dynamics() {
        let spec = two_ion([crate::constants::mhz(3.0), crate::constants::mhz(2.95)]);
        for style in [Style::Simultaneous, Style::Alternating] {
            let opts = OptimizeOptions::new(crate::constants::mhz(3.02), 100e-6, 16, style);
            let forms = build_forms(&spec, (0, 1), &[0.1, 0.1], &opts).unwrap();
            let x = DVector::from_fn(forms.phase.nrows(), |i, _| 1e5 * (1.0 + 0.3 * i as f64).sin());
            let seq = build_sequence((0, 1), &opts, &x).unwrap();
            let theta = two_qubit_phase(&seq, &spec).unwrap();
            let q = x.dot(&(&forms.phase * &x));
            assert!((theta - q).abs() < 1e-10 * theta.abs(), "{style:?}: {theta} vs {q}");
        }
    }

    #[test]
    fn single_loop_closes_with_quarter_pi() {
        let w = crate::constants::mhz(2.0);
        let r = DMatrix::from_row_slice(2, 1, &[std::f64::consts::FRAC_1_SQRT_2; 2]);
        let spec = ModeSpectrum::from_parts(vec![w], r, crate::constants::YB171_MASS, 3.54e7).unwrap();
        let mu = w + crate::constants::khz(50.0);
        let t = 2.0 * PI / (mu - w);
        let mut opts = OptimizeOptions::new(mu, t, 1, Style::Simultaneous);
        opts.robustness_weight = 0.0;
        let g = optimize_amplitudes(&spec, (0, 1), &[0.0], &opts).unwrap();
        let theta = two_qubit_phase(&g.sequence, &spec).unwrap();
        assert!((theta.abs() - FRAC_PI_4).abs() < 1e-9);
        assert!(g.infidelity < 1e-9);
    }

    #[test]
    fn sign_flip_invariance() {
        let spec = two_ion([crate::constants::mhz(3.0), crate::constants::mhz(2.95)]);
        let opts = OptimizeOptions::new(crate::constants::mhz(3.02), 100e-6, 16, Style::Alternating);
        let forms = build_forms(&spec, (0, 1), &[0.1, 0.1], &opts).unwrap();
        let obj = Objective { forms: &forms, theta: FRAC_PI_4, weight: 1.0 };
        let x = DVector::from_fn(forms.m.nrows(), |i, _| (0.7 * i as f64).cos());
        let (fa, ga) = obj.value_grad(&x);
        let (fb, gb) = obj.value_grad(&(-&x));
        assert_eq!(fa, fb);
        assert!((&ga + &gb).norm() < 1e-12 * ga.norm());
        // gradient against finite differences
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (obj.value_grad(&xp).0 - obj.value_grad(&xm).0) / (2.0 * h);
            assert!((fd - ga[i]).abs() < 1e-5 * ga.amax().max(fa.abs()), "{i}: {fd} vs {}", ga[i]);
        }
    }
}
