//! Spin-dependent displacements, phase-space trajectories and two-qubit
//! phases of piecewise-constant pulse sequences.
//!
//! Everything is evaluated in the interaction picture of each mode, so a mode
//! only moves while one of the pair is driven and gaps are no-ops.
//! Displacements are in units of the zero-point width. Each ion's spin phase
//! is taken to be constant over the sequence; the full spin-phase dependence
//! is handled by the open-system solver in [`crate::noise`].

use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::crystal::ModeSpectrum;
use crate::error::{invalid, Result};
use crate::pulses::{PulseSequence, Segment};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERMS: usize = 28;

/// `(e^z - 1) / z`
pub fn exprel(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        series(z, |n| 1.0 / factorial(n + 1))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `(e^z - 1 - z) / z^2`
pub(crate) fn exprel2(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        series(z, |n| 1.0 / factorial(n + 2))
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// `int_0^1 v e^{z v} dv`
pub(crate) fn moment1(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        series(z, |n| 1.0 / (factorial(n) * (n as f64 + 2.0)))
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

/// `int_0^1 v (1 - v) e^{z v} dv`
pub(crate) fn moment_parabolic(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        series(z, |n| 1.0 / (factorial(n) * (n as f64 + 2.0) * (n as f64 + 3.0)))
    } else {
        (z.exp() * (z - 2.0) + z + 2.0) / (z * z * z)
    }
}

fn series(z: C64, coeff: impl Fn(usize) -> f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for n in (0..SERIES_TERMS).rev() {
        acc = acc * z + coeff(n);
    }
    acc
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// `int_{t0}^{t0+tau} e^{-i d t} dt`
pub fn phase_integral(t0: f64, tau: f64, d: f64) -> C64 {
    C64::from_polar(1.0, -d * t0) * tau * exprel(C64::new(0.0, -d * tau))
}

/// `d/dd int_{t0}^{t0+tau} e^{-i d t} dt = -i int t e^{-i d t} dt`
pub(crate) fn phase_integral_derivative(t0: f64, tau: f64, d: f64) -> C64 {
    let z = C64::new(0.0, -d * tau);
    -I * C64::from_polar(1.0, -d * t0) * (t0 * tau * exprel(z) + tau * tau * moment1(z))
}

/// Complex displacement of one mode produced by one segment:
/// `(coupling * Omega / 2i) int e^{-i[(mu - w_k) t + phi_m]} dt` over the segment,
/// with `coupling = eta_k b_jk`.
pub fn segment_displacement(segment: &Segment, mode_freq: f64, detuning: f64, coupling: f64) -> C64 {
    drive_coefficient(coupling, segment.rabi_rate, segment.motional_phase)
        * phase_integral(segment.start_time, segment.duration, detuning - mode_freq)
}

/// `c = coupling * Omega / (2i) * e^{-i phi}`, so that `d alpha / dt = c e^{-i d t}`.
pub(crate) fn drive_coefficient(coupling: f64, rabi: f64, phase: f64) -> C64 {
    C64::from_polar(0.5 * coupling * rabi, -phase) / I
}

/// An interval on which both ions of the pair have constant drive.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Interval {
    pub start: f64,
    pub end: f64,
    /// Index into `sequence.segments` of the active segment of each pair member.
    pub active: [Option<usize>; 2],
}

/// Splits a sequence into elementary intervals at every segment boundary.
pub(crate) fn elementary_intervals(sequence: &PulseSequence) -> Vec<Interval> {
    let mut times: Vec<f64> = sequence.segments.iter().flat_map(|s| [s.start_time, s.end_time()]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * a.abs().max(1e-9));
    let ions = [sequence.pair.0, sequence.pair.1];
    let mut out = Vec::new();
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        let mid = 0.5 * (t0 + t1);
        let mut active = [None, None];
        for (slot, ion) in ions.iter().enumerate() {
            active[slot] = sequence
                .segments
                .iter()
                .position(|s| s.target_ion == *ion && s.start_time <= mid && mid < s.end_time());
        }
        if active.iter().any(Option::is_some) {
            out.push(Interval { start: t0, end: t1, active });
        }
    }
    out
}

fn check_ions(sequence: &PulseSequence, spectrum: &ModeSpectrum) -> Result<()> {
    let n = spectrum.n_ions();
    if sequence.pair.0 >= n || sequence.pair.1 >= n {
        return invalid(format!("pair {:?} outside a {n}-ion spectrum", sequence.pair));
    }
    Ok(())
}

/// Final displacements `alpha_jk(T)` as a 2 x K matrix (rows follow `sequence.pair`).
pub fn final_displacements(sequence: &PulseSequence, spectrum: &ModeSpectrum) -> Result<DMatrix<C64>> {
    check_ions(sequence, spectrum)?;
    let ions = [sequence.pair.0, sequence.pair.1];
    let mut out = DMatrix::zeros(2, spectrum.n_modes());
    for s in &sequence.segments {
        let slot = if s.target_ion == ions[0] { 0 } else { 1 };
        for k in 0..spectrum.n_modes() {
            out[(slot, k)] +=
                segment_displacement(s, spectrum.frequencies[k], sequence.detuning, spectrum.coupling(s.target_ion, k));
        }
    }
    Ok(out)
}

/// Two-qubit phase `Theta_ij = -sum_k Im[int a_ik da*_jk + int a_jk da*_ik]`,
/// evaluated in closed form interval by interval.
pub fn two_qubit_phase(sequence: &PulseSequence, spectrum: &ModeSpectrum) -> Result<f64> {
    check_ions(sequence, spectrum)?;
    Ok(phase_contributions(sequence, spectrum, 0..spectrum.n_modes()).iter().sum())
}

/// Per-mode contributions to the two-qubit phase for the given modes.
pub(crate) fn phase_contributions(
    sequence: &PulseSequence,
    spectrum: &ModeSpectrum,
    modes: impl IntoIterator<Item = usize>,
) -> Vec<f64> {
    let ions = [sequence.pair.0, sequence.pair.1];
    let intervals = elementary_intervals(sequence);
    modes
        .into_iter()
        .map(|k| {
            let d = sequence.detuning - spectrum.frequencies[k];
            let couplings = [spectrum.coupling(ions[0], k), spectrum.coupling(ions[1], k)];
            let mut acc = [C64::new(0.0, 0.0); 2];
            let mut theta = 0.0;
            for iv in &intervals {
                let tau = iv.end - iv.start;
                let c: [C64; 2] = std::array::from_fn(|slot| match iv.active[slot] {
                    Some(idx) => {
                        let s = &sequence.segments[idx];
                        drive_coefficient(couplings[slot], s.rabi_rate, s.motional_phase)
                    }
                    None => C64::new(0.0, 0.0),
                });
                let g = phase_integral(iv.start, tau, d);
                let j = tau * tau * exprel2(C64::new(0.0, d * tau));
                let cross_ij = acc[0] * c[1].conj() * g.conj() + c[0] * c[1].conj() * j;
                let cross_ji = acc[1] * c[0].conj() * g.conj() + c[1] * c[0].conj() * j;
                theta -= (cross_ij + cross_ji).im;
                acc[0] += c[0] * g;
                acc[1] += c[1] * g;
            }
            theta
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    /// Index into `sequence.segments` of the segment this sample belongs to.
    pub segment: usize,
    /// 2 x K displacements at `time`.
    pub alpha: DMatrix<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateTrajectory {
    pub pair: (usize, usize),
    pub samples: Vec<TrajectorySample>,
    pub final_displacements: DMatrix<C64>,
    pub two_qubit_phase: f64,
}

impl GateTrajectory {
    /// Trajectory of mode `k` for the spin eigenstate |++>: `sum_j alpha_jk`.
    pub fn plus_plus(&self, k: usize) -> Vec<(f64, C64)> {
        self.samples.iter().map(|s| (s.time, s.alpha[(0, k)] + s.alpha[(1, k)])).collect()
    }

    /// `max_k |sum_j alpha_jk(T)|`.
    pub fn max_closure_residual(&self) -> f64 {
        (0..self.final_displacements.ncols())
            .map(|k| (self.final_displacements[(0, k)] + self.final_displacements[(1, k)]).norm())
            .fold(0.0, f64::max)
    }
}

pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 64;

pub fn trajectory(sequence: &PulseSequence, spectrum: &ModeSpectrum, samples_per_segment: usize) -> Result<GateTrajectory> {
    check_ions(sequence, spectrum)?;
    let samples_per_segment = samples_per_segment.max(1);
    let ions = [sequence.pair.0, sequence.pair.1];
    let n_modes = spectrum.n_modes();
    // accumulated displacement of each ion before each of its segments
    let mut before = vec![DMatrix::<C64>::zeros(1, n_modes); sequence.segments.len()];
    let mut running = [vec![C64::new(0.0, 0.0); n_modes], vec![C64::new(0.0, 0.0); n_modes]];
    for (idx, s) in sequence.segments.iter().enumerate() {
        let slot = if s.target_ion == ions[0] { 0 } else { 1 };
        for k in 0..n_modes {
            before[idx][(0, k)] = running[slot][k];
            running[slot][k] +=
                segment_displacement(s, spectrum.frequencies[k], sequence.detuning, spectrum.coupling(s.target_ion, k));
        }
    }
    let alpha_at = |t: f64| -> DMatrix<C64> {
        let mut a = DMatrix::zeros(2, n_modes);
        for (slot, ion) in ions.iter().enumerate() {
            let last = sequence
                .segments
                .iter()
                .enumerate()
                .filter(|(_, s)| s.target_ion == *ion && s.start_time <= t)
                .last();
            if let Some((idx, s)) = last {
                let tau = (t - s.start_time).min(s.duration);
                for k in 0..n_modes {
                    let partial = Segment { duration: tau, ..*s };
                    let inc = if tau > 0.0 {
                        segment_displacement(&partial, spectrum.frequencies[k], sequence.detuning, spectrum.coupling(*ion, k))
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    a[(slot, k)] = before[idx][(0, k)] + inc;
                }
            }
        }
        a
    };
    let mut samples = Vec::new();
    for (idx, s) in sequence.segments.iter().enumerate() {
        for n in 0..=samples_per_segment {
            let t = s.start_time + s.duration * n as f64 / samples_per_segment as f64;
            samples.push(TrajectorySample { time: t, segment: idx, alpha: alpha_at(t) });
        }
    }
    Ok(GateTrajectory {
        pair: sequence.pair,
        samples,
        final_displacements: final_displacements(sequence, spectrum)?,
        two_qubit_phase: two_qubit_phase(sequence, spectrum)?,
    })
}

/// Bell-state fidelity of the gate acting on |00> with thermal modes, against
/// the ideal target `exp(i theta_0 s_i s_j)|00>` with `theta_0 = +-pi/4`
/// chosen by the sign of the achieved phase.
pub fn coherent_fidelity(sequence: &PulseSequence, spectrum: &ModeSpectrum, nbar: &[f64]) -> Result<f64> {
    let alpha = final_displacements(sequence, spectrum)?;
    let theta = two_qubit_phase(sequence, spectrum)?;
    coherent_fidelity_from(&alpha, theta, nbar)
}

/// Exact average over thermal states of the residual displacements:
/// `F = 1/16 sum_{s,s'} e^{i (Theta - Theta_0)(p_s - p_s')} prod_k chi_k(s, s')`,
/// `chi = exp(-(n_k + 1/2)|b_s - b_s'|^2 + i Im(b_s conj b_s'))`,
/// where `s` runs over the four joint spin eigenstates and `b_s = sum_j s_j alpha_jk`.
pub fn coherent_fidelity_from(alpha: &DMatrix<C64>, theta: f64, nbar: &[f64]) -> Result<f64> {
    if nbar.len() != alpha.ncols() {
        return invalid(format!("nbar has {} entries for {} modes", nbar.len(), alpha.ncols()));
    }
    let target = if theta >= 0.0 { FRAC_PI_4 } else { -FRAC_PI_4 };
    let dtheta = theta - target;
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let mut total = C64::new(0.0, 0.0);
    for &(si, sj) in &signs {
        for &(ti, tj) in &signs {
            let mut log_chi = C64::new(0.0, (dtheta * (si * sj - ti * tj)) as f64);
            for k in 0..alpha.ncols() {
                let b = alpha[(0, k)] * si + alpha[(1, k)] * sj;
                let bp = alpha[(0, k)] * ti + alpha[(1, k)] * tj;
                log_chi += C64::new(-(nbar[k] + 0.5) * (b - bp).norm_sqr(), (b * bp.conj()).im);
            }
            total += log_chi.exp();
        }
    }
    Ok((total.re / 16.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellObservables {
    pub population_00_11: f64,
    pub parity_contrast: f64,
    pub fidelity: f64,
}

impl BellObservables {
    pub fn new(population_00_11: f64, parity_contrast: f64) -> Result<Self> {
        Ok(Self { population_00_11, parity_contrast, fidelity: bell_fidelity(population_00_11, parity_contrast)? })
    }

    /// Observables of a two-qubit density matrix in the |00>,|01>,|10>,|11> basis.
    pub fn from_density(rho: &Matrix4<C64>) -> Self {
        let pop = (rho[(0, 0)].re + rho[(3, 3)].re).clamp(0.0, 1.0);
        let contrast = (2.0 * rho[(0, 3)].norm()).clamp(0.0, 1.0);
        Self { population_00_11: pop, parity_contrast: contrast, fidelity: 0.5 * (pop + contrast) }
    }
}

/// `F = P(00, 11) / 2 + C / 2`.
pub fn bell_fidelity(population_00_11: f64, parity_contrast: f64) -> Result<f64> {
    for (name, v) in [("population", population_00_11), ("parity contrast", parity_contrast)] {
        if !(0.0..=1.0).contains(&v) {
            return invalid(format!("{name} must lie in [0, 1], got {v}"));
        }
    }
    Ok(0.5 * population_00_11 + 0.5 * parity_contrast)
}

fn analysis_rotation(phi: f64) -> Matrix2<C64> {
    let (c, s) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
    let off = |sign: f64| -I * s * C64::from_polar(1.0, sign * phi);
    Matrix2::new(C64::new(c, 0.0), off(-1.0), off(1.0), C64::new(c, 0.0))
}

/// Parity `<Z Z>` after a pi/2 analysis pulse of phase `phi` on both qubits.
pub fn parity_curve(rho: &Matrix4<C64>, phases: &[f64]) -> Vec<f64> {
    phases
        .iter()
        .map(|&phi| {
            let r = analysis_rotation(phi);
            let rr = r.kronecker(&r);
            let out = rr * rho * rr.adjoint();
            out[(0, 0)].re - out[(1, 1)].re - out[(2, 2)].re + out[(3, 3)].re
        })
        .collect()
}

/// Ideal parity oscillation `contrast * cos(2 phi + phi_0)`.
pub fn parity_curve_from_contrast(contrast: f64, phase_offset: f64, phases: &[f64]) -> Vec<f64> {
    phases.iter().map(|&phi| contrast * (2.0 * phi + phase_offset).cos()).collect()
}

/// Least-squares fit of `a cos 2phi + b sin 2phi + c`; returns `(contrast, offset)`
/// with contrast `sqrt(a^2 + b^2)`.
pub fn fit_parity_contrast(phases: &[f64], parity: &[f64]) -> Result<(f64, f64)> {
    if phases.len() != parity.len() || phases.len() < 3 {
        return invalid("parity fit needs at least three matching points");
    }
    let rows = phases.len();
    let a = DMatrix::from_fn(rows, 3, |r, c| match c {
        0 => (2.0 * phases[r]).cos(),
        1 => (2.0 * phases[r]).sin(),
        _ => 1.0,
    });
    let y = nalgebra::DVector::from_column_slice(parity);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| crate::Error::Fit(e.to_string()))?;
    Ok((coef[0].hypot(coef[1]), coef[2]))
}
