//! Excess micromotion of ions away from the RF null and the resulting drop of
//! the time-averaged addressing intensity.
//!
//! The beam is taken as Gaussian with 1/e^2 intensity radius `R` and the
//! micromotion as a harmonic oscillation of amplitude `A` across it, averaged
//! over one RF period.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pulses::PulseSequence;
use crate::special::scaled_bessel_i0;

pub const DEFAULT_RABI_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicromotionContext {
    /// distance from the RF null, meters
    pub displacement: f64,
    pub mathieu_q: f64,
    /// micromotion amplitude, meters
    pub amplitude: f64,
    /// 1/e^2 intensity radius, meters
    pub beam_waist: f64,
}

impl MicromotionContext {
    pub fn new(displacement: f64, mathieu_q: f64, beam_waist: f64) -> Result<Self> {
        if !(beam_waist > 0.0) {
            return invalid("beam waist must be positive");
        }
        Ok(Self { displacement, mathieu_q, amplitude: micromotion_amplitude(displacement, mathieu_q)?, beam_waist })
    }

    pub fn rabi_reduction(&self) -> f64 {
        rabi_reduction(self.amplitude, self.beam_waist)
    }
}

/// `A = q |x| / 2`
pub fn micromotion_amplitude(displacement: f64, mathieu_q: f64) -> Result<f64> {
    if !(0.0..=0.9).contains(&mathieu_q) {
        return invalid(format!("mathieu q must lie in [0, 0.9], got {mathieu_q}"));
    }
    Ok(mathieu_q * displacement.abs() / 2.0)
}

/// `r(A) = (1/2pi) int_0^2pi exp(-2 (A cos t / R)^2) dt = e^{-A^2/R^2} I0(A^2/R^2)`
pub fn rabi_reduction(amplitude: f64, beam_waist: f64) -> f64 {
    let x = (amplitude / beam_waist).powi(2);
    scaled_bessel_i0(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecalibrationEntry {
    pub ion: usize,
    #[serde(rename = "A_nm")]
    pub amplitude_nm: f64,
    pub r: f64,
    pub intensity_factor: f64,
}

fn reductions(
    sequence: &PulseSequence,
    amplitudes: &BTreeMap<usize, f64>,
    beam_waist: f64,
    floor: f64,
) -> Result<BTreeMap<usize, f64>> {
    if !(beam_waist > 0.0) {
        return invalid("beam waist must be positive");
    }
    let mut out = BTreeMap::new();
    for ion in sequence.addressed_ions() {
        let a = *amplitudes
            .get(&ion)
            .ok_or_else(|| Error::Invalid(format!("no micromotion amplitude given for ion {ion}")))?;
        if !(a >= 0.0 && a.is_finite()) {
            return invalid(format!("micromotion amplitude of ion {ion} must be non-negative"));
        }
        let r = rabi_reduction(a, beam_waist);
        if r < floor {
            return Err(Error::Micromotion { ion, ratio: r, floor });
        }
        out.insert(ion, r);
    }
    Ok(out)
}

/// Divides each segment's Rabi rate by the reduction of its ion so the
/// effective rates match the uncompensated design.
pub fn recalibrate_intensity(
    sequence: &PulseSequence,
    amplitudes: &BTreeMap<usize, f64>,
    beam_waist: f64,
) -> Result<PulseSequence> {
    recalibrate_intensity_with(sequence, amplitudes, beam_waist, DEFAULT_RABI_FLOOR)
}

pub fn recalibrate_intensity_with(
    sequence: &PulseSequence,
    amplitudes: &BTreeMap<usize, f64>,
    beam_waist: f64,
    floor: f64,
) -> Result<PulseSequence> {
    let r = reductions(sequence, amplitudes, beam_waist, floor)?;
    let mut out = sequence.clone();
    for s in &mut out.segments {
        s.rabi_rate /= r[&s.target_ion];
    }
    Ok(out)
}

/// Rabi rates the ions actually see: each segment's rate times `r(A_ion)`.
pub fn effective_sequence(
    sequence: &PulseSequence,
    amplitudes: &BTreeMap<usize, f64>,
    beam_waist: f64,
) -> Result<PulseSequence> {
    let r = reductions(sequence, amplitudes, beam_waist, 0.0)?;
    let mut out = sequence.clone();
    for s in &mut out.segments {
        s.rabi_rate *= r[&s.target_ion];
    }
    Ok(out)
}

pub fn recalibration_report(
    sequence: &PulseSequence,
    amplitudes: &BTreeMap<usize, f64>,
    beam_waist: f64,
    floor: f64,
) -> Result<Vec<RecalibrationEntry>> {
    Ok(reductions(sequence, amplitudes, beam_waist, floor)?
        .into_iter()
        .map(|(ion, r)| RecalibrationEntry { ion, amplitude_nm: amplitudes[&ion] * 1e9, r, intensity_factor: 1.0 / r })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::Segment;

    fn seq() -> PulseSequence {
        let seg = |ion, start| Segment { target_ion: ion, start_time: start, duration: 1e-6, rabi_rate: 1e5, motional_phase: 0.3, spin_phase: 0.1 };
        PulseSequence::new(vec![seg(0, 0.0), seg(3, 2e-6), seg(0, 4e-6)], 1.0, 1e-6, (0, 3)).unwrap()
    }

    #[test]
    fn amplitude_from_displacement() {
        assert!((micromotion_amplitude(7e-6, 0.12).unwrap() - 420e-9).abs() < 1e-15);
        assert_eq!(micromotion_amplitude(0.0, 0.12).unwrap(), 0.0);
        assert!(micromotion_amplitude(1e-6, 1.0).is_err());
    }

    #[test]
    fn reduction_values() {
        assert_eq!(rabi_reduction(0.0, 1.5e-6), 1.0);
        assert!((rabi_reduction(1.0, 1.0) - 0.465_759_607_593_640_3).abs() < 1e-13);
        let r = rabi_reduction(420e-9, 1.5e-6);
        assert!((r - 0.926).abs() < 1e-3);
    }

    #[test]
    fn large_amplitude_asymptote() {
        let r = rabi_reduction(4.0, 1.0);
        let approx = 1.0 / (4.0 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((r - approx).abs() / r < 0.02);
    }

    #[test]
    fn recalibration_round_trip() {
        let s = seq();
        let amps = BTreeMap::from([(0, 800e-9), (3, 0.0)]);
        let cal = recalibrate_intensity(&s, &amps, 1.5e-6).unwrap();
        let eff = effective_sequence(&cal, &amps, 1.5e-6).unwrap();
        for (a, b) in s.segments.iter().zip(&eff.segments) {
            assert!((a.rabi_rate - b.rabi_rate).abs() < 1e-12 * a.rabi_rate);
            assert_eq!((a.motional_phase, a.spin_phase, a.start_time), (b.motional_phase, b.spin_phase, b.start_time));
        }
        assert_eq!(cal.segments[1].rabi_rate, s.segments[1].rabi_rate);
    }

    #[test]
    fn floor_and_missing_ion() {
        let s = seq();
        let err = recalibrate_intensity(&s, &BTreeMap::from([(0, 10e-6), (3, 0.0)]), 1e-6).unwrap_err();
        assert!(matches!(err, Error::Micromotion { ion: 0, .. }));
        assert!(recalibrate_intensity(&s, &BTreeMap::from([(0, 0.0)]), 1e-6).is_err());
        let same = recalibrate_intensity(&s, &BTreeMap::from([(0, 0.0), (3, 0.0)]), 1e-6).unwrap();
        assert_eq!(same, s);
    }
}
