//! Coulomb crystals in an anisotropic harmonic trap and their transverse
//! (drumhead) normal modes.
//!
//! Positions are solved in units of the two-ion length
//! `l = (k_e q^2 / (m w_z^2))^(1/3)` with energies in units of `m w_z^2 l^2`,
//! which keeps the minimizer well conditioned for any trap.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{
    counter_propagating_delta_k, mhz, COULOMB_CONSTANT, ELEMENTARY_CHARGE, HBAR, RAMAN_WAVELENGTH,
    YB171_MASS,
};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Angular trap frequencies, rad/s.
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    /// kg
    pub ion_mass: f64,
    /// C
    pub ion_charge: f64,
    /// Angular RF drive frequency, rad/s. Informational only.
    pub rf_frequency: f64,
    pub mathieu_q: f64,
}

impl TrapConfig {
    /// 171Yb+ trap with frequencies given in MHz (ordinary frequency).
    pub fn ytterbium_mhz(fx: f64, fy: f64, fz: f64) -> Self {
        Self {
            omega_x: mhz(fx),
            omega_y: mhz(fy),
            omega_z: mhz(fz),
            ion_mass: YB171_MASS,
            ion_charge: ELEMENTARY_CHARGE,
            rf_frequency: mhz(37.0),
            mathieu_q: 0.12,
        }
    }

    /// The four-ion blade-trap configuration (0.803, 2.284, 0.553) MHz.
    pub fn four_ion_blade() -> Self {
        Self::ytterbium_mhz(0.803, 2.284, 0.553)
    }

    /// The 100-ion design study trap (0.7, 3.0, 0.2) MHz.
    pub fn large_crystal() -> Self {
        Self::ytterbium_mhz(0.7, 3.0, 0.2)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("omega_x", self.omega_x), ("omega_y", self.omega_y), ("omega_z", self.omega_z)] {
            if !(w.is_finite() && w > 0.0) {
                return invalid(format!("{name} must be positive, got {w}"));
            }
        }
        if !(self.ion_mass > 0.0 && self.ion_charge != 0.0) {
            return invalid("ion mass must be positive and charge nonzero");
        }
        if !(0.0..=0.9).contains(&self.mathieu_q) {
            return invalid(format!("mathieu_q must lie in [0, 0.9], got {}", self.mathieu_q));
        }
        if !(self.omega_y > self.omega_x && self.omega_y > self.omega_z) {
            warn!("omega_y is not the stiffest axis; the crystal may not lie in the xz plane");
        }
        Ok(())
    }

    /// Two-ion length scale `(k_e q^2 / (m w_z^2))^(1/3)` in meters.
    pub fn length_scale(&self) -> f64 {
        (COULOMB_CONSTANT * self.ion_charge.powi(2) / (self.ion_mass * self.omega_z.powi(2))).cbrt()
    }

    fn stiffness_ratios(&self) -> [f64; 3] {
        let wz2 = self.omega_z.powi(2);
        [self.omega_x.powi(2) / wz2, self.omega_y.powi(2) / wz2, 1.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonCrystal {
    /// Equilibrium positions in meters, `[x, y, z]` per ion.
    pub positions: Vec<[f64; 3]>,
    pub trap: TrapConfig,
    /// Total trap plus Coulomb energy, joules.
    pub potential_energy: f64,
}

impl IonCrystal {
    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    /// Gradient of the total potential in newtons, `[dV/dx, dV/dy, dV/dz]` per ion.
    pub fn potential_gradient(&self) -> Vec<[f64; 3]> {
        let l = self.trap.length_scale();
        let force = self.trap.ion_mass * self.trap.omega_z.powi(2) * l;
        let u = to_scaled(&self.positions, l);
        let g = scaled_gradient(&u, self.trap.stiffness_ratios());
        g.as_slice().chunks(3).map(|c| [c[0] * force, c[1] * force, c[2] * force]).collect()
    }

    pub fn potential_at(&self, positions: &[[f64; 3]]) -> f64 {
        let l = self.trap.length_scale();
        let e0 = self.trap.ion_mass * self.trap.omega_z.powi(2) * l * l;
        scaled_energy(&to_scaled(positions, l), self.trap.stiffness_ratios()) * e0
    }

    /// Smallest distance between any two ions, meters.
    pub fn min_spacing(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.n_ions() {
            for j in i + 1..self.n_ions() {
                d = d.min(distance(&self.positions[i], &self.positions[j]));
            }
        }
        d
    }

    /// Indices of the left, right, up and down ions of a four-ion crystal:
    /// L and R are the extremes in z, U and D the upper and lower of the rest in x.
    pub fn four_ion_labels(&self) -> Option<IonLabels> {
        if self.n_ions() != 4 {
            return None;
        }
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&a, &b| self.positions[a][2].total_cmp(&self.positions[b][2]));
        let (left, right) = (idx[0], idx[3]);
        let (mut down, mut up) = (idx[1], idx[2]);
        if self.positions[down][0] > self.positions[up][0] {
            std::mem::swap(&mut down, &mut up);
        }
        Some(IonLabels { left, right, up, down })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IonLabels {
    pub left: usize,
    pub right: usize,
    pub up: usize,
    pub down: usize,
}

impl IonLabels {
    /// Looks up a label such as `"L"` or `"up"`.
    pub fn get(&self, name: &str) -> Option<usize> {
        match name.to_ascii_uppercase().as_str() {
            "L" | "LEFT" => Some(self.left),
            "R" | "RIGHT" => Some(self.right),
            "U" | "UP" => Some(self.up),
            "D" | "DOWN" => Some(self.down),
            _ => None,
        }
    }

    /// Ion indices ordered L, R, U, D.
    pub fn ordered(&self) -> [usize; 4] {
        [self.left, self.right, self.up, self.down]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    /// Angular mode frequencies, rad/s, sorted descending (COM first).
    pub frequencies: Vec<f64>,
    /// `mode_matrix[(j, k)]` is the participation `b_jk` of ion `j` in mode `k`.
    pub mode_matrix: DMatrix<f64>,
    pub lamb_dicke: Vec<f64>,
    pub direction: Axis,
    pub ion_mass: f64,
}

impl ModeSpectrum {
    /// Builds a spectrum from explicit values, computing Lamb-Dicke parameters
    /// for the given wavevector difference.
    pub fn from_parts(frequencies: Vec<f64>, mode_matrix: DMatrix<f64>, ion_mass: f64, delta_k: f64) -> Result<Self> {
        if mode_matrix.ncols() != frequencies.len() {
            return invalid("mode matrix must have one column per frequency");
        }
        if frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("mode frequencies must be positive");
        }
        let mut spectrum = Self {
            frequencies,
            mode_matrix,
            lamb_dicke: Vec::new(),
            direction: Axis::Y,
            ion_mass,
        };
        spectrum.lamb_dicke = lamb_dicke(&spectrum, delta_k)?;
        Ok(spectrum)
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn n_ions(&self) -> usize {
        self.mode_matrix.nrows()
    }

    pub fn participation(&self, ion: usize, mode: usize) -> f64 {
        self.mode_matrix[(ion, mode)]
    }

    /// `eta_k * b_jk`, the dimensionless coupling of ion `j` to mode `k`.
    pub fn coupling(&self, ion: usize, mode: usize) -> f64 {
        self.lamb_dicke[mode] * self.mode_matrix[(ion, mode)]
    }

    /// Same spectrum with recomputed Lamb-Dicke parameters.
    pub fn with_delta_k(mut self, delta_k: f64) -> Result<Self> {
        self.lamb_dicke = lamb_dicke(&self, delta_k)?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the max-norm of the scaled gradient.
    pub gradient_tolerance: f64,
    /// Relative jitter applied to the lattice guess.
    pub jitter: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 1000, gradient_tolerance: 1e-12, jitter: 0.05 }
    }
}

pub fn solve_equilibrium(trap: &TrapConfig, n_ions: usize, seed: u64) -> Result<IonCrystal> {
    solve_equilibrium_with(trap, n_ions, seed, SolverOptions::default())
}

pub fn solve_equilibrium_with(trap: &TrapConfig, n_ions: usize, seed: u64, opts: SolverOptions) -> Result<IonCrystal> {
    trap.validate()?;
    if n_ions == 0 {
        return invalid("n_ions must be at least 1");
    }
    let guess = lattice_guess(trap, n_ions, seed, opts.jitter);
    let l = trap.length_scale();
    let positions: Vec<[f64; 3]> = guess.iter().map(|p| [p[0] * l, p[1] * l, p[2] * l]).collect();
    refine_equilibrium_with(trap, &positions, opts)
}

/// Minimizes the potential starting from explicit positions (meters).
pub fn refine_equilibrium(trap: &TrapConfig, positions: &[[f64; 3]]) -> Result<IonCrystal> {
    refine_equilibrium_with(trap, positions, SolverOptions::default())
}

pub fn refine_equilibrium_with(trap: &TrapConfig, positions: &[[f64; 3]], opts: SolverOptions) -> Result<IonCrystal> {
    trap.validate()?;
    if positions.is_empty() {
        return invalid("at least one ion is required");
    }
    let l = trap.length_scale();
    let ratios = trap.stiffness_ratios();
    let u = minimize(DVector::from_vec(to_scaled(positions, l)), ratios, opts)?;
    let scaled: Vec<[f64; 3]> = u.as_slice().chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let e0 = trap.ion_mass * trap.omega_z.powi(2) * l * l;
    let flat: Vec<f64> = u.iter().copied().collect();
    Ok(IonCrystal {
        positions: scaled.iter().map(|p| [p[0] * l, p[1] * l, p[2] * l]).collect(),
        trap: *trap,
        potential_energy: scaled_energy(&flat, ratios) * e0,
    })
}

/// Transverse (y) normal modes with the default 355 nm counter-propagating
/// Lamb-Dicke parameters.
pub fn transverse_modes(crystal: &IonCrystal) -> Result<ModeSpectrum> {
    transverse_modes_with(crystal, counter_propagating_delta_k(RAMAN_WAVELENGTH))
}

pub fn transverse_modes_with(crystal: &IonCrystal, delta_k: f64) -> Result<ModeSpectrum> {
    let n = crystal.n_ions();
    let trap = &crystal.trap;
    let l = trap.length_scale();
    let u = to_scaled(&crystal.positions, l);
    let hess = scaled_hessian(&u, trap.stiffness_ratios());
    // yy block, scaled by m w_z^2
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = hess[(3 * i + 1, 3 * j + 1)];
        }
    }
    let eig = k.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = trap.stiffness_ratios()[1];
    let instability_tol = 1e-10 * scale;
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda < -instability_tol {
            return Err(Error::Instability { eigenvalue: lambda * trap.ion_mass * trap.omega_z.powi(2) });
        }
        values.push(lambda.max(0.0));
        vectors.set_column(col, &eig.eigenvectors.column(idx));
    }
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::Instability { eigenvalue: 0.0 });
    }
    canonicalize_modes(&values, &mut vectors);
    let frequencies = values.iter().map(|v| trap.omega_z * v.sqrt()).collect();
    ModeSpectrum::from_parts(frequencies, vectors, trap.ion_mass, delta_k)
}

/// `eta_k = delta_k * sqrt(hbar / (2 m w_k))` for each mode.
pub fn lamb_dicke(spectrum: &ModeSpectrum, delta_k: f64) -> Result<Vec<f64>> {
    if !(delta_k.is_finite() && delta_k >= 0.0) {
        return invalid(format!("delta_k must be non-negative, got {delta_k}"));
    }
    Ok(spectrum
        .frequencies
        .iter()
        .map(|w| delta_k * (HBAR / (2.0 * spectrum.ion_mass * w)).sqrt())
        .collect())
}

/// Fixes signs and degenerate-subspace bases so mode labels are reproducible.
fn canonicalize_modes(values: &[f64], vectors: &mut DMatrix<f64>) {
    let n = values.len();
    let tol = 1e-9 * values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() <= tol {
            end += 1;
        }
        if end - start == 1 {
            let mut col = vectors.column(start).clone_owned();
            if let Some(first) = col.iter().find(|v| v.abs() > 1e-9) {
                if *first < 0.0 {
                    col.neg_mut();
                }
            }
            vectors.set_column(start, &col);
        } else {
            // project unit vectors onto the degenerate subspace in ion order
            let basis = vectors.columns(start, end - start).clone_owned();
            let mut chosen: Vec<DVector<f64>> = Vec::new();
            for ion in 0..n {
                if chosen.len() == end - start {
                    break;
                }
                let mut v = &basis * basis.row(ion).transpose();
                for c in &chosen {
                    let overlap = c.dot(&v);
                    v -= c * overlap;
                }
                let norm = v.norm();
                if norm > 1e-6 {
                    chosen.push(v / norm);
                }
            }
            for (offset, v) in chosen.iter().enumerate() {
                vectors.set_column(start + offset, v);
            }
        }
        start = end;
    }
}

fn lattice_guess(trap: &TrapConfig, n: usize, seed: u64, jitter: f64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let aspect = trap.omega_z / trap.omega_x;
    let rows = ((n as f64 * aspect).sqrt().round() as usize).clamp(1, n);
    let cols = n.div_ceil(rows);
    let mut out = Vec::with_capacity(n);
    for idx in 0..n {
        let (r, c) = (idx / cols, idx % cols);
        let in_row = if r == rows - 1 { n - cols * (rows - 1) } else { cols };
        let x = r as f64 - (rows as f64 - 1.0) / 2.0;
        let z = c as f64 - (in_row as f64 - 1.0) / 2.0;
        out.push([
            x + jitter * rng.random_range(-1.0..1.0),
            1e-3 * jitter * rng.random_range(-1.0..1.0),
            z + jitter * rng.random_range(-1.0..1.0),
        ]);
    }
    if n == 1 {
        out[0] = [0.0; 3];
    }
    out
}

fn to_scaled(positions: &[[f64; 3]], l: f64) -> Vec<f64> {
    positions.iter().flat_map(|p| [p[0] / l, p[1] / l, p[2] / l]).collect()
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn scaled_energy(u: &[f64], ratios: [f64; 3]) -> f64 {
    let n = u.len() / 3;
    let mut e = 0.0;
    for i in 0..n {
        for a in 0..3 {
            e += 0.5 * ratios[a] * u[3 * i + a].powi(2);
        }
        for j in i + 1..n {
            let r = ((u[3 * i] - u[3 * j]).powi(2)
                + (u[3 * i + 1] - u[3 * j + 1]).powi(2)
                + (u[3 * i + 2] - u[3 * j + 2]).powi(2))
            .sqrt();
            e += 1.0 / r;
        }
    }
    e
}

fn scaled_gradient(u: &[f64], ratios: [f64; 3]) -> DVector<f64> {
    let n = u.len() / 3;
    let mut g = DVector::zeros(3 * n);
    for i in 0..n {
        for a in 0..3 {
            g[3 * i + a] += ratios[a] * u[3 * i + a];
        }
        for j in i + 1..n {
            let d = [u[3 * i] - u[3 * j], u[3 * i + 1] - u[3 * j + 1], u[3 * i + 2] - u[3 * j + 2]];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let inv_r3 = 1.0 / (r2 * r2.sqrt());
            for a in 0..3 {
                g[3 * i + a] -= d[a] * inv_r3;
                g[3 * j + a] += d[a] * inv_r3;
            }
        }
    }
    g
}

fn scaled_hessian(u: &[f64], ratios: [f64; 3]) -> DMatrix<f64> {
    let n = u.len() / 3;
    let mut h = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        for a in 0..3 {
            h[(3 * i + a, 3 * i + a)] += ratios[a];
        }
        for j in i + 1..n {
            let d = [u[3 * i] - u[3 * j], u[3 * i + 1] - u[3 * j + 1], u[3 * i + 2] - u[3 * j + 2]];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let r = r2.sqrt();
            let inv_r5 = 1.0 / (r2 * r2 * r);
            for a in 0..3 {
                for b in 0..3 {
                    let delta = if a == b { r2 } else { 0.0 };
                    let block = (3.0 * d[a] * d[b] - delta) * inv_r5;
                    h[(3 * i + a, 3 * i + b)] += block;
                    h[(3 * j + a, 3 * j + b)] += block;
                    h[(3 * i + a, 3 * j + b)] -= block;
                    h[(3 * j + a, 3 * i + b)] -= block;
                }
            }
        }
    }
    h
}

/// Eigenvalue-modified Newton iteration with backtracking line search.
/// Directions of negative curvature are followed downhill, so saddle points
/// are escaped rather than converged to.
fn minimize(mut u: DVector<f64>, ratios: [f64; 3], opts: SolverOptions) -> Result<DVector<f64>> {
    let dim = u.len();
    let mut energy = scaled_energy(u.as_slice(), ratios);
    let mut grad = scaled_gradient(u.as_slice(), ratios);
    for _ in 0..opts.max_iterations {
        let gmax = grad.amax();
        let hess = scaled_hessian(u.as_slice(), ratios);
        let eig = hess.symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if gmax < opts.gradient_tolerance {
            if min_eig > -1e-9 {
                return Ok(u);
            }
            // converged onto a saddle: step off along the unstable direction
            let idx = eig.eigenvalues.imin();
            u += eig.eigenvectors.column(idx) * 0.1;
            energy = scaled_energy(u.as_slice(), ratios);
            grad = scaled_gradient(u.as_slice(), ratios);
            continue;
        }
        let floor = 1e-8 * eig.eigenvalues.amax().max(1.0);
        let mut dir = DVector::zeros(dim);
        for k in 0..dim {
            let v = eig.eigenvectors.column(k);
            let lam = eig.eigenvalues[k].abs().max(floor);
            dir -= v * (v.dot(&grad) / lam);
        }
        let slope = grad.dot(&dir);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &u + &dir * step;
            let e = scaled_energy(trial.as_slice(), ratios);
            let slack = 1e-14 * energy.abs();
            if e <= energy + 1e-4 * step * slope + slack {
                let g = scaled_gradient(trial.as_slice(), ratios);
                if e < energy || g.amax() < gmax {
                    u = trial;
                    energy = e;
                    grad = g;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // no descent possible at working precision
            if gmax < 1e3 * opts.gradient_tolerance && min_eig > -1e-9 {
                return Ok(u);
            }
            let g = grad.clone();
            u -= g * (1e-3 / gmax.max(1.0));
            energy = scaled_energy(u.as_slice(), ratios);
            grad = scaled_gradient(u.as_slice(), ratios);
        }
    }
    Err(Error::Convergence { iterations: opts.max_iterations, gradient_norm: grad.amax() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ion_sits_at_origin() {
        let trap = TrapConfig::four_ion_blade();
        let c = solve_equilibrium(&trap, 1, 3).unwrap();
        for a in c.positions[0] {
            assert!(a.abs() < 1e-18);
        }
        let s = transverse_modes(&c).unwrap();
        assert_eq!(s.n_modes(), 1);
        assert!((s.frequencies[0] / trap.omega_y - 1.0).abs() < 1e-12);
        assert!((s.mode_matrix[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_ion_separation_matches_force_balance() {
        let trap = TrapConfig::four_ion_blade();
        let c = solve_equilibrium(&trap, 2, 0).unwrap();
        // k q^2 / d^2 = m w_z^2 d / 2
        let expected = (2.0 * COULOMB_CONSTANT * trap.ion_charge.powi(2) / (trap.ion_mass * trap.omega_z.powi(2))).cbrt();
        let d = c.min_spacing();
        assert!((d - expected).abs() < 1e-12 * expected, "{d} vs {expected}");
        assert!((expected - 5.1e-6).abs() < 0.1e-6);
        // separation along z
        let dz = (c.positions[0][2] - c.positions[1][2]).abs();
        assert!((dz - d).abs() < 1e-15);
    }

    #[test]
    fn four_ions_form_rhombus() {
        let trap = TrapConfig::four_ion_blade();
        let c = solve_equilibrium(&trap, 4, 7).unwrap();
        let labels = c.four_ion_labels().unwrap();
        let p = |i: usize| c.positions[i];
        assert!(p(labels.left)[0].abs() < 1e-12 && p(labels.right)[0].abs() < 1e-12);
        assert!(p(labels.up)[2].abs() < 1e-12 && p(labels.down)[2].abs() < 1e-12);
        assert!(p(labels.up)[0] > 0.0 && p(labels.down)[0] < 0.0);
        let side = distance(&p(labels.left), &p(labels.up));
        assert!((side - 5.0e-6).abs() < 0.5e-6, "adjacent spacing {side}");
        for q in &c.positions {
            assert!(q[1].abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_vanishes_at_equilibrium() {
        let trap = TrapConfig::four_ion_blade();
        let c = solve_equilibrium(&trap, 7, 1).unwrap();
        let scale = trap.ion_mass * trap.omega_z.powi(2) * c.min_spacing();
        let gmax = c.potential_gradient().iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(gmax < 1e-9 * scale, "{gmax} vs {scale}");
    }

    #[test]
    fn com_is_uniform() {
        let trap = TrapConfig::four_ion_blade();
        let c = solve_equilibrium(&trap, 4, 2).unwrap();
        let s = transverse_modes(&c).unwrap();
        for j in 0..4 {
            assert!((s.mode_matrix[(j, 0)] - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_subspace_is_canonical() {
        // two identical uncoupled blocks give a doubly degenerate pair
        let values = vec![2.0, 1.0, 1.0];
        let a = 0.6f64;
        let b = 0.8f64;
        let mut vecs = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, a, -b, 0.0, b, a]);
        canonicalize_modes(&values, &mut vecs);
        assert!((vecs[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(vecs[(2, 1)].abs() < 1e-12);
        assert!((vecs[(2, 2)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lamb_dicke_zero_wavevector() {
        let trap = TrapConfig::four_ion_blade();
        let c = solve_equilibrium(&trap, 4, 0).unwrap();
        let s = transverse_modes(&c).unwrap();
        assert!(lamb_dicke(&s, 0.0).unwrap().iter().all(|&e| e == 0.0));
        assert!(lamb_dicke(&s, -1.0).is_err());
    }

    #[test]
    fn soft_transverse_axis_is_unstable() {
        let trap = TrapConfig::four_ion_blade();
        let mut c = solve_equilibrium(&trap, 4, 0).unwrap();
        c.trap.omega_y = crate::constants::mhz(0.3);
        assert!(matches!(transverse_modes(&c), Err(Error::Instability { .. })));
    }
}
