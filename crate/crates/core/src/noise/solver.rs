//! Density-matrix evolution of the two gate qubits and a few explicitly
//! simulated modes.
//!
//! Modes left out of the simulation ("far" modes) still act on the qubits:
//! their geometric phase enters as a spin-only Hamiltonian, their residual
//! displacement as the usual displaced-thermal overlap at the end, and heating
//! and dephasing of their displaced state as leading-order decay rates of the
//! spin coherences.

use std::f64::consts::FRAC_PI_4;

use log::warn;
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::NoiseModel;
use crate::crystal::ModeSpectrum;
use crate::dynamics::{drive_coefficient, elementary_intervals, phase_integral, BellObservables, Interval};
use crate::error::{invalid, Error, Result};
use crate::pulses::PulseSequence;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

pub const LEAKAGE_WARNING: f64 = 1e-4;
pub const LEAKAGE_LIMIT: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSystemOptions {
    /// Fock states kept per simulated mode.
    pub phonon_cutoff: usize,
    /// Explicit mode indices to simulate; `None` picks `n_active` modes
    /// closest to the detuning among those the pair couples to.
    pub active_modes: Option<Vec<usize>>,
    pub n_active: usize,
    /// Upper bound on the truncated Hilbert-space dimension.
    pub max_dimension: usize,
    /// Integrator steps per period of the fastest detuning.
    pub steps_per_period: f64,
    /// Initial two-qubit state in the |00>,|01>,|10>,|11> basis (`pair.0` is
    /// the high bit). Defaults to |00>.
    #[serde(skip)]
    pub initial_spin_state: Option<Matrix4<C64>>,
    /// Sign of the target phase; `None` follows the achieved phase.
    pub target_sign: Option<f64>,
}

impl Default for OpenSystemOptions {
    fn default() -> Self {
        Self {
            phonon_cutoff: 6,
            active_modes: None,
            n_active: 2,
            max_dimension: 40_000,
            steps_per_period: 50.0,
            initial_spin_state: None,
            target_sign: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenSystemResult {
    /// Two-qubit state after tracing out the modes.
    pub density: Matrix4<C64>,
    /// Overlap with `exp(i theta_0 S_i S_j)|00>`, `theta_0 = +-pi/4`.
    pub fidelity: f64,
    pub observables: BellObservables,
    /// Largest population seen in the top Fock level of any simulated mode.
    pub leakage: f64,
    pub active_modes: Vec<usize>,
    pub target_phase: f64,
}

/// Modes the pair couples to, sorted by |mu - w_k|.
pub fn nearest_modes(sequence: &PulseSequence, spectrum: &ModeSpectrum, count: usize) -> Vec<usize> {
    let mut modes: Vec<usize> = (0..spectrum.n_modes())
        .filter(|&k| {
            spectrum.coupling(sequence.pair.0, k).abs() > 1e-12 || spectrum.coupling(sequence.pair.1, k).abs() > 1e-12
        })
        .collect();
    modes.sort_by(|&a, &b| {
        let da = (sequence.detuning - spectrum.frequencies[a]).abs();
        let db = (sequence.detuning - spectrum.frequencies[b]).abs();
        da.total_cmp(&db).then(a.cmp(&b))
    });
    modes.truncate(count);
    modes
}

/// One nonzero of a spin-flip times ladder operator.
#[derive(Clone, Copy)]
struct Entry {
    row: usize,
    col: usize,
    amplitude: f64,
    /// bit of the flipped ion in the column state
    bit: u8,
}

struct Model<'a> {
    dim: usize,
    modes: usize,
    cutoff: usize,
    active: Vec<usize>,
    far: Vec<usize>,
    /// `[mode][slot][raise=0, lower=1]`
    ladders: Vec<[[Vec<Entry>; 2]; 2]>,
    /// Fock number of each active mode for each mode-block index.
    fock: Vec<Vec<usize>>,
    /// Constant diagonal decay `-1/2 sum (l_x - l_y)^2` split into its factors.
    qubit_rates: QubitDephasing,
    motional_rate: f64,
    heating: Vec<f64>,
    far_heating: Vec<f64>,
    far_nbar: Vec<f64>,
    spectrum: &'a ModeSpectrum,
    sequence: &'a PulseSequence,
    /// S_j eigenbasis transform, columns |+>,|-> per slot combined.
    basis: Matrix4<C64>,
    spin_phase: [f64; 2],
}

#[derive(Clone, Copy)]
enum QubitDephasing {
    Collective(f64),
    Independent(f64),
}

impl QubitDephasing {
    /// `-1/2 sum_L (l_x - l_y)^2` for spin indices.
    fn rate(&self, sx: usize, sy: usize) -> f64 {
        let z = |s: usize, bit: usize| if (s >> bit) & 1 == 0 { 1.0 } else { -1.0 };
        match *self {
            QubitDephasing::Collective(c2) => {
                let d = (z(sx, 1) + z(sx, 0)) - (z(sy, 1) + z(sy, 0));
                -0.5 * c2 * d * d
            }
            QubitDephasing::Independent(c2) => {
                let d1 = z(sx, 1) - z(sy, 1);
                let d0 = z(sx, 0) - z(sy, 0);
                -0.5 * c2 * (d1 * d1 + d0 * d0)
            }
        }
    }
}

/// Drive state during one elementary interval, as needed by the integrator.
struct Drive {
    start: f64,
    /// `c_jk` per slot for active modes and far modes (zero when the ion is idle).
    active_c: Vec<[C64; 2]>,
    far_c: Vec<[C64; 2]>,
    /// far-mode displacements at `start`
    far_alpha: Vec<[C64; 2]>,
    spin_phase: [f64; 2],
}

impl<'a> Model<'a> {
    fn new(sequence: &'a PulseSequence, spectrum: &'a ModeSpectrum, noise: &NoiseModel, opts: &OpenSystemOptions) -> Result<Self> {
        let n = spectrum.n_ions();
        if sequence.pair.0 >= n || sequence.pair.1 >= n {
            return invalid(format!("pair {:?} outside a {n}-ion spectrum", sequence.pair));
        }
        noise.validate(spectrum.n_modes())?;
        if opts.phonon_cutoff < 3 {
            return invalid("phonon cutoff must be at least 3");
        }
        let active = match &opts.active_modes {
            Some(m) => {
                let mut m = m.clone();
                m.sort_unstable();
                m.dedup();
                if m.iter().any(|&k| k >= spectrum.n_modes()) {
                    return invalid("active mode index out of range");
                }
                m
            }
            None => nearest_modes(sequence, spectrum, opts.n_active),
        };
        let cutoff = opts.phonon_cutoff;
        let modes = cutoff.checked_pow(active.len() as u32).unwrap_or(usize::MAX);
        let dim = modes.saturating_mul(4);
        if dim > opts.max_dimension {
            return invalid(format!("Hilbert dimension {dim} exceeds the bound {}", opts.max_dimension));
        }
        let far: Vec<usize> = (0..spectrum.n_modes()).filter(|k| !active.contains(k)).collect();
        let stride: Vec<usize> = (0..active.len()).map(|i| cutoff.pow((active.len() - 1 - i) as u32)).collect();
        let fock: Vec<Vec<usize>> =
            (0..modes).map(|m| stride.iter().map(|&s| (m / s) % cutoff).collect()).collect();
        let mut ladders = Vec::with_capacity(active.len());
        for (pos, _) in active.iter().enumerate() {
            let mut per_slot: [[Vec<Entry>; 2]; 2] = Default::default();
            for (slot, lists) in per_slot.iter_mut().enumerate() {
                let flip = if slot == 0 { 2 } else { 1 };
                for spin in 0..4 {
                    let bit = ((spin >> (1 - slot)) & 1) as u8;
                    for m in 0..modes {
                        let nk = fock[m][pos];
                        let col = spin * modes + m;
                        if nk + 1 < cutoff {
                            let row = (spin ^ flip) * modes + m + stride[pos];
                            lists[0].push(Entry { row, col, amplitude: ((nk + 1) as f64).sqrt(), bit });
                        }
                        if nk > 0 {
                            let row = (spin ^ flip) * modes + m - stride[pos];
                            lists[1].push(Entry { row, col, amplitude: (nk as f64).sqrt(), bit });
                        }
                    }
                }
            }
            ladders.push(per_slot);
        }
        let c2 = if noise.laser_dephasing_time.is_finite() { 1.0 / (2.0 * noise.laser_dephasing_time) } else { 0.0 };
        let qubit_rates =
            if noise.independent_dephasing { QubitDephasing::Independent(c2) } else { QubitDephasing::Collective(c2) };
        let motional_rate =
            if noise.motional_dephasing_time.is_finite() { 2.0 / noise.motional_dephasing_time } else { 0.0 };
        let first_phase = |ion: usize| sequence.segments_for(ion).next().map_or(0.0, |s| s.spin_phase);
        let spin_phase = [first_phase(sequence.pair.0), first_phase(sequence.pair.1)];
        Ok(Self {
            dim,
            modes,
            cutoff,
            heating: active.iter().map(|&k| noise.heating_rates[k]).collect(),
            far_heating: far.iter().map(|&k| noise.heating_rates[k]).collect(),
            far_nbar: far.iter().map(|&k| noise.nbar[k]).collect(),
            active,
            far,
            ladders,
            fock,
            qubit_rates,
            motional_rate,
            spectrum,
            sequence,
            basis: spin_basis(spin_phase),
            spin_phase,
        })
    }

    fn drives(&self) -> Vec<(f64, f64, Option<Drive>)> {
        let seq = self.sequence;
        let ions = [seq.pair.0, seq.pair.1];
        let mut far_alpha = vec![[ZERO; 2]; self.far.len()];
        let mut out = Vec::new();
        let mut t = 0.0;
        let coeffs = |iv: &Interval, modes: &[usize]| -> Vec<[C64; 2]> {
            modes
                .iter()
                .map(|&k| {
                    std::array::from_fn(|slot| match iv.active[slot] {
                        Some(idx) => {
                            let s = &seq.segments[idx];
                            drive_coefficient(self.spectrum.coupling(ions[slot], k), s.rabi_rate, s.motional_phase)
                        }
                        None => ZERO,
                    })
                })
                .collect()
        };
        for iv in elementary_intervals(seq) {
            if iv.start > t {
                out.push((t, iv.start, None));
            }
            let far_c = coeffs(&iv, &self.far);
            let phases: [f64; 2] = std::array::from_fn(|slot| {
                iv.active[slot].map_or(self.spin_phase[slot], |idx| seq.segments[idx].spin_phase)
            });
            let drive = Drive {
                start: iv.start,
                active_c: coeffs(&iv, &self.active),
                far_alpha: far_alpha.clone(),
                far_c: far_c.clone(),
                spin_phase: phases,
            };
            for (i, &k) in self.far.iter().enumerate() {
                let g = phase_integral(iv.start, iv.end - iv.start, seq.detuning - self.spectrum.frequencies[k]);
                for slot in 0..2 {
                    far_alpha[i][slot] += far_c[i][slot] * g;
                }
            }
            out.push((iv.start, iv.end, Some(drive)));
            t = iv.end;
        }
        if seq.total_time > t {
            out.push((t, seq.total_time, None));
        }
        out
    }

    /// Far-mode displacement per slot at time `t` within `drive`.
    fn far_alpha_at(&self, drive: &Drive, i: usize, t: f64) -> ([C64; 2], [C64; 2]) {
        let d = self.sequence.detuning - self.spectrum.frequencies[self.far[i]];
        let g = phase_integral(drive.start, t - drive.start, d);
        let e = C64::from_polar(1.0, -d * t);
        let a = [drive.far_alpha[i][0] + drive.far_c[i][0] * g, drive.far_alpha[i][1] + drive.far_c[i][1] * g];
        let da = [drive.far_c[i][0] * e, drive.far_c[i][1] * e];
        (a, da)
    }

    /// Spin-only generator in the S-eigenbasis: far-mode phase and decay.
    /// `idle_alpha` holds the far-mode displacements used while no ion is driven.
    fn far_rates(&self, drive: Option<&Drive>, idle_alpha: &[[C64; 2]], t: f64) -> Matrix4<C64> {
        let mut rates = Matrix4::zeros();
        if self.far.is_empty() {
            return rates;
        }
        let signs = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let mut theta_dot = 0.0;
        for i in 0..self.far.len() {
            let alpha = match drive {
                Some(d) => {
                    let (a, da) = self.far_alpha_at(d, i, t);
                    theta_dot -= (a[0] * da[1].conj() + a[1] * da[0].conj()).im;
                    a
                }
                None => idle_alpha[i],
            };
            let gamma = self.far_heating[i];
            let kappa = self.motional_rate;
            if gamma == 0.0 && kappa == 0.0 {
                continue;
            }
            let beta: [C64; 4] = std::array::from_fn(|s| alpha[0] * signs[s][0] + alpha[1] * signs[s][1]);
            for s in 0..4 {
                for sp in 0..4 {
                    let diff = (beta[s] - beta[sp]).norm_sqr();
                    let pop = beta[s].norm_sqr() - beta[sp].norm_sqr();
                    let re = -gamma * diff - 0.5 * kappa * ((2.0 * self.far_nbar[i] + 1.0) * diff + pop * pop);
                    let im = kappa * (beta[s] * beta[sp].conj()).im;
                    rates[(s, sp)] += C64::new(re, im);
                }
            }
        }
        for s in 0..4 {
            for sp in 0..4 {
                let p = signs[s][0] * signs[s][1] - signs[sp][0] * signs[sp][1];
                rates[(s, sp)] += I * theta_dot * p;
            }
        }
        rates
    }

    /// `d rho / dt` for a row-major density matrix.
    fn derivative(&self, rho: &[C64], out: &mut [C64], drive: Option<&Drive>, idle_alpha: &[[C64; 2]], t: f64, hrho: &mut [C64]) {
        let dim = self.dim;
        let modes = self.modes;
        // -i [H, rho] with H the active-mode coupling
        hrho.iter_mut().for_each(|v| *v = ZERO);
        if let Some(d) = drive {
            for (pos, &k) in self.active.iter().enumerate() {
                let w = self.sequence.detuning - self.spectrum.frequencies[k];
                let e = C64::from_polar(1.0, -w * t);
                for slot in 0..2 {
                    let c = d.active_c[pos][slot];
                    if c == ZERO {
                        continue;
                    }
                    let h = I * c * e;
                    let phase = [C64::from_polar(1.0, d.spin_phase[slot]), C64::from_polar(1.0, -d.spin_phase[slot])];
                    for (lad, coupling) in [(0usize, h), (1, h.conj())] {
                        for entry in &self.ladders[pos][slot][lad] {
                            let v = coupling * phase[entry.bit as usize] * entry.amplitude;
                            let (src, dst) = (entry.col * dim, entry.row * dim);
                            for c in 0..dim {
                                hrho[dst + c] += v * rho[src + c];
                            }
                        }
                    }
                }
            }
        }
        for r in 0..dim {
            for c in 0..dim {
                out[r * dim + c] = -I * (hrho[r * dim + c] - hrho[c * dim + r].conj());
            }
        }
        // diagonal Lindblad terms and heating anticommutators
        for r in 0..dim {
            let (sr, mr) = (r / modes, r % modes);
            for c in 0..dim {
                let (sc, mc) = (c / modes, c % modes);
                let mut rate = self.qubit_rates.rate(sr, sc);
                for (pos, gamma) in self.heating.iter().enumerate() {
                    let (nr, nc) = (self.fock[mr][pos] as f64, self.fock[mc][pos] as f64);
                    let dn = nr - nc;
                    rate -= 0.5 * self.motional_rate * dn * dn;
                    if *gamma > 0.0 {
                        let top = (self.cutoff - 1) as f64;
                        let up = |n: f64| if n < top { n + 1.0 } else { 0.0 };
                        rate -= 0.5 * gamma * (nr + nc + up(nr) + up(nc));
                    }
                }
                out[r * dim + c] += rho[r * dim + c] * rate;
            }
        }
        // heating jumps a rho a^dag + a^dag rho a
        for (pos, &gamma) in self.heating.iter().enumerate() {
            if gamma == 0.0 {
                continue;
            }
            let stride = self.cutoff.pow((self.active.len() - 1 - pos) as u32);
            for r in 0..dim {
                let nr = self.fock[r % modes][pos];
                for c in 0..dim {
                    let nc = self.fock[c % modes][pos];
                    let mut v = ZERO;
                    if nr + 1 < self.cutoff && nc + 1 < self.cutoff {
                        v += rho[(r + stride) * dim + c + stride] * (((nr + 1) * (nc + 1)) as f64).sqrt();
                    }
                    if nr > 0 && nc > 0 {
                        v += rho[(r - stride) * dim + c - stride] * ((nr * nc) as f64).sqrt();
                    }
                    out[r * dim + c] += v * gamma;
                }
            }
        }
        // far-mode generator, applied in the S eigenbasis of each mode block
        let rates = self.far_rates(drive, idle_alpha, t);
        if rates.iter().any(|v| *v != ZERO) {
            let v = &self.basis;
            let vh = v.adjoint();
            for mr in 0..modes {
                for mc in 0..modes {
                    let block = Matrix4::from_fn(|a, b| rho[(a * modes + mr) * dim + b * modes + mc]);
                    let tilde = vh * block * v;
                    let update = v * tilde.component_mul(&rates) * vh;
                    for a in 0..4 {
                        for b in 0..4 {
                            out[(a * modes + mr) * dim + b * modes + mc] += update[(a, b)];
                        }
                    }
                }
            }
        }
    }

    fn top_population(&self, rho: &[C64]) -> f64 {
        let top = self.cutoff - 1;
        (0..self.active.len())
            .map(|pos| {
                (0..self.dim)
                    .filter(|&x| self.fock[x % self.modes][pos] == top)
                    .map(|x| rho[x * self.dim + x].re)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Columns are the joint S-eigenstates `|s_i s_j>` with `s = +, -`, in the
/// order `++, +-, -+, --`.
fn spin_basis(phase: [f64; 2]) -> Matrix4<C64> {
    let one = |phi: f64| -> [[C64; 2]; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // column 0 = |+> = (|0> + e^{i phi}|1>)/sqrt2, column 1 = |->
        [[C64::new(r, 0.0), C64::new(r, 0.0)], [C64::from_polar(r, phi), -C64::from_polar(r, phi)]]
    };
    let (a, b) = (one(phase[0]), one(phase[1]));
    Matrix4::from_fn(|row, col| a[row >> 1][col >> 1] * b[row & 1][col & 1])
}

fn thermal_populations(nbar: f64, cutoff: usize) -> Vec<f64> {
    let mut p: Vec<f64> = if nbar == 0.0 {
        (0..cutoff).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect()
    } else {
        let x = nbar / (nbar + 1.0);
        (0..cutoff).map(|n| x.powi(n as i32)).collect()
    };
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Evolves `|00>` (or the configured initial state) times thermal modes
/// through the sequence with the noise channels in `noise`.
pub fn simulate_open_system(
    sequence: &PulseSequence,
    spectrum: &ModeSpectrum,
    noise: &NoiseModel,
    opts: &OpenSystemOptions,
) -> Result<OpenSystemResult> {
    let model = Model::new(sequence, spectrum, noise, opts)?;
    let dim = model.dim;
    let modes = model.modes;

    let mut rho = vec![ZERO; dim * dim];
    let spin0 = opts.initial_spin_state.unwrap_or_else(|| {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = C64::new(1.0, 0.0);
        m
    });
    let pops: Vec<Vec<f64>> = model.active.iter().map(|&k| thermal_populations(noise.nbar[k], model.cutoff)).collect();
    for m in 0..modes {
        let p: f64 = (0..model.active.len()).map(|pos| pops[pos][model.fock[m][pos]]).product();
        for a in 0..4 {
            for b in 0..4 {
                rho[(a * modes + m) * dim + b * modes + m] = spin0[(a, b)] * p;
            }
        }
    }

    let max_detuning = (0..spectrum.n_modes())
        .filter(|&k| spectrum.coupling(sequence.pair.0, k) != 0.0 || spectrum.coupling(sequence.pair.1, k) != 0.0)
        .map(|k| (sequence.detuning - spectrum.frequencies[k]).abs())
        .fold(0.0, f64::max);
    let h_max = if max_detuning > 0.0 {
        2.0 * std::f64::consts::PI / (opts.steps_per_period * max_detuning)
    } else {
        f64::INFINITY
    };

    let drives = model.drives();
    let end_alpha = final_far_alpha(&model);
    let mut k1 = vec![ZERO; dim * dim];
    let mut k2 = vec![ZERO; dim * dim];
    let mut k3 = vec![ZERO; dim * dim];
    let mut k4 = vec![ZERO; dim * dim];
    let mut tmp = vec![ZERO; dim * dim];
    let mut scratch = vec![ZERO; dim * dim];
    let mut leakage = model.top_population(&rho);
    // displacement of far modes during gaps
    let mut idle_alpha = vec![[ZERO; 2]; model.far.len()];
    for (t0, t1, drive) in &drives {
        let tau = t1 - t0;
        if tau <= 0.0 {
            continue;
        }
        let steps = (tau / h_max).ceil().max(1.0) as usize;
        let h = tau / steps as f64;
        let d = drive.as_ref();
        for n in 0..steps {
            let t = t0 + n as f64 * h;
            model.derivative(&rho, &mut k1, d, &idle_alpha, t, &mut scratch);
            axpy(&rho, &k1, 0.5 * h, &mut tmp);
            model.derivative(&tmp, &mut k2, d, &idle_alpha, t + 0.5 * h, &mut scratch);
            axpy(&rho, &k2, 0.5 * h, &mut tmp);
            model.derivative(&tmp, &mut k3, d, &idle_alpha, t + 0.5 * h, &mut scratch);
            axpy(&rho, &k3, h, &mut tmp);
            model.derivative(&tmp, &mut k4, d, &idle_alpha, t + h, &mut scratch);
            for i in 0..rho.len() {
                rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        if let Some(d) = d {
            for i in 0..model.far.len() {
                idle_alpha[i] = model.far_alpha_at(d, i, *t1).0;
            }
        }
        leakage = leakage.max(model.top_population(&rho));
    }
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::Truncation { leakage, limit: LEAKAGE_LIMIT });
    }
    if leakage > LEAKAGE_WARNING {
        warn!("top Fock level population {leakage:.2e} exceeds {LEAKAGE_WARNING:.0e}; raise the phonon cutoff");
    }

    // trace out the simulated modes
    let mut spin = Matrix4::<C64>::zeros();
    for a in 0..4 {
        for b in 0..4 {
            spin[(a, b)] = (0..modes).map(|m| rho[(a * modes + m) * dim + b * modes + m]).sum();
        }
    }
    // residual far-mode displacement
    let signs = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
    let mut chi = Matrix4::from_element(C64::new(1.0, 0.0));
    for (i, alpha) in end_alpha.iter().enumerate() {
        let beta: [C64; 4] = std::array::from_fn(|s| alpha[0] * signs[s][0] + alpha[1] * signs[s][1]);
        for s in 0..4 {
            for sp in 0..4 {
                let log = C64::new(
                    -(model.far_nbar[i] + 0.5) * (beta[s] - beta[sp]).norm_sqr(),
                    (beta[s] * beta[sp].conj()).im,
                );
                chi[(s, sp)] *= log.exp();
            }
        }
    }
    let v = model.basis;
    let spin = v * (v.adjoint() * spin * v).component_mul(&chi) * v.adjoint();
    let spin = (spin + spin.adjoint()) * C64::new(0.5, 0.0);

    let theta = crate::dynamics::two_qubit_phase(sequence, spectrum)?;
    let sign = opts.target_sign.unwrap_or(if theta >= 0.0 { 1.0 } else { -1.0 });
    let target_phase = sign.signum() * FRAC_PI_4;
    let psi = Vector4::new(
        C64::new(target_phase.cos(), 0.0),
        ZERO,
        ZERO,
        I * target_phase.sin() * C64::from_polar(1.0, model.spin_phase[0] + model.spin_phase[1]),
    );
    let fidelity = (psi.adjoint() * spin * psi)[(0, 0)].re.clamp(0.0, 1.0);
    Ok(OpenSystemResult {
        observables: BellObservables::from_density(&spin),
        density: spin,
        fidelity,
        leakage,
        active_modes: model.active.clone(),
        target_phase,
    })
}

fn final_far_alpha(model: &Model) -> Vec<[C64; 2]> {
    let seq = model.sequence;
    let ions = [seq.pair.0, seq.pair.1];
    model
        .far
        .iter()
        .map(|&k| {
            let mut a = [ZERO; 2];
            for s in &seq.segments {
                let slot = if s.target_ion == ions[0] { 0 } else { 1 };
                a[slot] += crate::dynamics::segment_displacement(
                    s,
                    model.spectrum.frequencies[k],
                    seq.detuning,
                    model.spectrum.coupling(s.target_ion, k),
                );
            }
            a
        })
        .collect()
}

fn axpy(x: &[C64], k: &[C64], h: f64, out: &mut [C64]) {
    for i in 0..x.len() {
        out[i] = x[i] + k[i] * h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{design_two_segment, scale_to_phase, TwoSegmentRule};
    use nalgebra::DMatrix;

    fn rhombus() -> ModeSpectrum {
        let h = 0.5;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let b = DMatrix::from_row_slice(4, 4, &[h, -r, -h, 0.0, h, r, -h, 0.0, h, 0.0, h, r, h, 0.0, h, -r]);
        let f = [2.284, 2.216, 2.167, 2.138].map(crate::constants::mhz).to_vec();
        ModeSpectrum::from_parts(f, b, crate::constants::YB171_MASS, crate::constants::counter_propagating_delta_k(355e-9))
            .unwrap()
    }

    fn lr_gate(spec: &ModeSpectrum) -> PulseSequence {
        let s = design_two_segment(spec, (0, 1), TwoSegmentRule::LR).unwrap();
        scale_to_phase(&s, spec, FRAC_PI_4).unwrap()
    }

    fn opts(cutoff: usize) -> OpenSystemOptions {
        OpenSystemOptions { phonon_cutoff: cutoff, ..Default::default() }
    }

    #[test]
    fn noiseless_matches_coherent_fidelity() {
        let spec = rhombus();
        let seq = lr_gate(&spec);
        let r = simulate_open_system(&seq, &spec, &NoiseModel::noiseless(4), &opts(6)).unwrap();
        let coherent = crate::dynamics::coherent_fidelity(&seq, &spec, &[0.0; 4]).unwrap();
        assert!((r.fidelity - coherent).abs() < 1e-4, "{} vs {coherent}", r.fidelity);
        assert!(r.leakage < LEAKAGE_WARNING);
    }

    #[test]
    fn noisy_density_is_physical() {
        let spec = rhombus();
        let seq = lr_gate(&spec);
        let r = simulate_open_system(&seq, &spec, &NoiseModel::four_ion_measured(4), &opts(5)).unwrap();
        let rho = r.density;
        assert!((rho.trace().re - 1.0).abs() < 1e-6);
        assert!((rho - rho.adjoint()).norm() < 1e-12);
        assert!(rho.symmetric_eigenvalues().iter().all(|v| *v > -1e-8));
        assert!(r.fidelity < 0.99 && r.fidelity > 0.9);
    }

    #[test]
    fn idle_qubit_dephases_at_tau_s() {
        let spec = rhombus();
        let seq = lr_gate(&spec).scaled(0.0);
        let tau = seq.total_time;
        let mut noise = NoiseModel::noiseless(4);
        noise.laser_dephasing_time = tau;
        let mut plus = Matrix4::zeros();
        for (a, b) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            plus[(a, b)] = C64::new(0.5, 0.0);
        }
        let o = OpenSystemOptions { initial_spin_state: Some(plus), ..opts(3) };
        let r = simulate_open_system(&seq, &spec, &noise, &o).unwrap();
        let coherence = r.density[(0, 2)].norm();
        assert!((coherence - 0.5 * (-1.0f64).exp()).abs() < 1e-8, "{coherence}");
        noise.independent_dephasing = true;
        let r = simulate_open_system(&seq, &spec, &noise, &o).unwrap();
        assert!((r.density[(0, 2)].norm() - 0.5 * (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn more_noise_lowers_fidelity() {
        let spec = rhombus();
        let seq = lr_gate(&spec);
        let mut prev = 1.0;
        for tau in [f64::INFINITY, 20e-3, 4e-3, 1e-3] {
            let mut noise = NoiseModel::noiseless(4);
            noise.motional_dephasing_time = tau;
            let f = simulate_open_system(&seq, &spec, &noise, &opts(5)).unwrap().fidelity;
            assert!(f <= prev + 1e-9);
            prev = f;
        }
    }

    #[test]
    fn truncation_is_converged() {
        let spec = rhombus();
        let seq = lr_gate(&spec);
        let noise = NoiseModel::four_ion_measured(4);
        let f6 = simulate_open_system(&seq, &spec, &noise, &opts(6)).unwrap().fidelity;
        let f8 = simulate_open_system(&seq, &spec, &noise, &opts(8)).unwrap().fidelity;
        assert!((f6 - f8).abs() < 1e-3, "{f6} vs {f8}");
    }

    #[test]
    fn dimension_bound_is_enforced() {
        let spec = rhombus();
        let seq = lr_gate(&spec);
        let o = OpenSystemOptions { max_dimension: 100, ..opts(6) };
        assert!(simulate_open_system(&seq, &spec, &NoiseModel::noiseless(4), &o).is_err());
    }
}
