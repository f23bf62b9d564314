//! Physical constants (CODATA 2018) and species data.

use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const COULOMB_CONSTANT: f64 = 8.987_551_792_3e9;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a 171Yb+ ion in kg.
pub const YB171_MASS: f64 = 170.936_323 * ATOMIC_MASS_UNIT;

/// Raman wavelength used for the counter-propagating gate beams.
pub const RAMAN_WAVELENGTH: f64 = 355e-9;

/// Wavevector difference of two counter-propagating beams at `wavelength`.
pub fn counter_propagating_delta_k(wavelength: f64) -> f64 {
    4.0 * PI / wavelength
}

/// Converts an ordinary frequency in MHz to angular frequency in rad/s.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f * 1e6
}

pub fn khz(f: f64) -> f64 {
    2.0 * PI * f * 1e3
}

/// Angular frequency (rad/s) back to MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}
