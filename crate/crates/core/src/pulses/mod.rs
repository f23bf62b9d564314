//! Gate pulse sequences: the two-segment phase-modulated gates for ion pairs
//! in a common row or column, the alternating single-ion-at-a-time sequence
//! for diagonal pairs, and amplitude-modulated sequences for large crystals.

mod design;
mod optimize;

pub use design::{design_alternating_diagonal, design_two_segment, TwoSegmentRule, PARTICIPATION_TOLERANCE};
pub use optimize::{free_parameter_count, optimize_amplitudes, scan_detuning, OptimizeOptions, OptimizedGate, ScanPoint, Style};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::two_qubit_phase;
use crate::crystal::ModeSpectrum;
use crate::error::{invalid, Error, Result};

/// One addressed drive window on a single ion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub target_ion: usize,
    /// seconds
    pub start_time: f64,
    /// seconds
    pub duration: f64,
    /// Raman Rabi rate, rad/s.
    pub rabi_rate: f64,
    pub motional_phase: f64,
    pub spin_phase: f64,
}

impl Segment {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    /// Time-ordered segments. Simultaneous drive on both ions appears as two
    /// segments with equal start time and duration.
    pub segments: Vec<Segment>,
    /// Symmetric detuning `mu`, rad/s.
    pub detuning: f64,
    /// Nominal off time between addressed segments, seconds.
    pub gap: f64,
    pub total_time: f64,
    pub pair: (usize, usize),
}

impl PulseSequence {
    /// Builds a sequence and checks its structural invariants.
    pub fn new(mut segments: Vec<Segment>, detuning: f64, gap: f64, pair: (usize, usize)) -> Result<Self> {
        segments.sort_by(|a, b| a.start_time.total_cmp(&b.start_time).then(a.target_ion.cmp(&b.target_ion)));
        let total_time = segments.iter().map(Segment::end_time).fold(0.0, f64::max);
        let seq = Self { segments, detuning, gap, total_time, pair };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pair.0 == self.pair.1 {
            return invalid("pair must name two distinct ions");
        }
        if !self.detuning.is_finite() || !(self.gap >= 0.0) {
            return invalid("detuning must be finite and gap non-negative");
        }
        for s in &self.segments {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return invalid(format!("segment duration must be positive, got {}", s.duration));
            }
            if !(s.rabi_rate >= 0.0 && s.rabi_rate.is_finite()) {
                return invalid(format!("rabi rate must be non-negative, got {}", s.rabi_rate));
            }
            if s.start_time < 0.0 {
                return invalid("segments must start at t >= 0");
            }
            if s.target_ion != self.pair.0 && s.target_ion != self.pair.1 {
                return invalid(format!("segment targets ion {} outside pair {:?}", s.target_ion, self.pair));
            }
        }
        for w in self.segments.windows(2) {
            if w[1].start_time < w[0].start_time {
                return invalid("segments must be time ordered");
            }
        }
        for ion in [self.pair.0, self.pair.1] {
            let mut last_end = f64::NEG_INFINITY;
            for s in self.segments_for(ion) {
                let tol = 1e-12 * s.duration.max(self.total_time);
                if s.start_time < last_end - tol {
                    return invalid(format!("segments on ion {ion} overlap"));
                }
                last_end = s.end_time();
            }
        }
        let end = self.segments.iter().map(Segment::end_time).fold(0.0, f64::max);
        if (end - self.total_time).abs() > 1e-12 * end.max(1e-12) {
            return invalid("total time must equal the last segment end");
        }
        Ok(())
    }

    pub fn segments_for(&self, ion: usize) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.target_ion == ion)
    }

    pub fn addressed_ions(&self) -> Vec<usize> {
        let mut ions: Vec<usize> = self.segments.iter().map(|s| s.target_ion).collect();
        ions.sort_unstable();
        ions.dedup();
        ions
    }

    /// Copy with every Rabi rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.rabi_rate *= factor;
        }
        out
    }

    pub fn max_rabi_rate(&self) -> f64 {
        self.segments.iter().map(|s| s.rabi_rate).fold(0.0, f64::max)
    }
}

/// Rescales all Rabi rates so the two-qubit phase equals `target`.
///
/// The phase is quadratic in the drive amplitude, so the scale factor is
/// `sqrt(|target| / |theta_0|)`. When the signs differ, every motional phase
/// of the second ion is shifted by `pi`, which negates its displacements and
/// hence the phase while leaving trajectory closure untouched.
pub fn scale_to_phase(sequence: &PulseSequence, spectrum: &ModeSpectrum, target: f64) -> Result<PulseSequence> {
    let theta0 = two_qubit_phase(sequence, spectrum)?;
    if theta0 == 0.0 || !theta0.is_finite() || target == 0.0 {
        return Err(Error::Scaling);
    }
    let mut out = sequence.scaled((target.abs() / theta0.abs()).sqrt());
    if theta0.signum() != target.signum() {
        let flip = sequence.pair.1;
        for s in out.segments.iter_mut().filter(|s| s.target_ion == flip) {
            s.motional_phase = wrap_phase(s.motional_phase + PI);
        }
    }
    Ok(out)
}

/// Compensates the frame change between the two addressed ions caused by the
/// differential AC Stark shift.
///
/// `stark_shifts[k]` is the rate (rad/s) at which the qubit of
/// `sequence.pair` member `k` drifts against the laser frame while the beam is
/// on the other ion. Each segment's spin phase is advanced by the drift
/// accumulated while its ion was unaddressed since its previous segment, and
/// the advance carries forward cumulatively.
pub fn stark_frame_offsets(sequence: &PulseSequence, stark_shifts: [f64; 2]) -> PulseSequence {
    let mut out = sequence.clone();
    for (k, ion) in [sequence.pair.0, sequence.pair.1].into_iter().enumerate() {
        let shift = stark_shifts[k];
        let mut offset = 0.0;
        let mut last_end: Option<f64> = None;
        for s in out.segments.iter_mut().filter(|s| s.target_ion == ion) {
            if let Some(end) = last_end {
                offset += shift * (s.start_time - end);
            }
            s.spin_phase += offset;
            last_end = Some(s.end_time());
        }
    }
    out
}

pub(crate) fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut p = phi % two_pi;
    if p <= -PI {
        p += two_pi;
    } else if p > PI {
        p -= two_pi;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ion: usize, start: f64, dur: f64) -> Segment {
        Segment { target_ion: ion, start_time: start, duration: dur, rabi_rate: 1.0, motional_phase: 0.0, spin_phase: 0.0 }
    }

    #[test]
    fn rejects_overlap_on_one_ion() {
        let r = PulseSequence::new(vec![seg(0, 0.0, 2.0), seg(0, 1.0, 2.0)], 0.0, 0.0, (0, 1));
        assert!(r.is_err());
        // simultaneous drive on two ions is fine
        assert!(PulseSequence::new(vec![seg(0, 0.0, 2.0), seg(1, 0.0, 2.0)], 0.0, 0.0, (0, 1)).is_ok());
    }

    #[test]
    fn rejects_bad_segments() {
        assert!(PulseSequence::new(vec![seg(0, 0.0, 0.0)], 0.0, 0.0, (0, 1)).is_err());
        assert!(PulseSequence::new(vec![seg(2, 0.0, 1.0)], 0.0, 0.0, (0, 1)).is_err());
        let mut s = seg(0, 0.0, 1.0);
        s.rabi_rate = -1.0;
        assert!(PulseSequence::new(vec![s], 0.0, 0.0, (0, 1)).is_err());
    }

    #[test]
    fn total_time_is_last_end() {
        let p = PulseSequence::new(vec![seg(1, 3.0, 1.0), seg(0, 0.0, 2.0)], 0.0, 1.0, (0, 1)).unwrap();
        assert_eq!(p.total_time, 4.0);
        assert_eq!(p.segments[0].target_ion, 0);
    }

    #[test]
    fn stark_zero_shift_is_identity() {
        let p = PulseSequence::new(vec![seg(0, 0.0, 1.0), seg(1, 1.5, 1.0), seg(0, 3.0, 1.0)], 0.0, 0.5, (0, 1)).unwrap();
        assert_eq!(stark_frame_offsets(&p, [0.0, 0.0]), p);
    }

    #[test]
    fn stark_shift_accumulates_over_gap() {
        let p = PulseSequence::new(vec![seg(0, 0.0, 1.0), seg(1, 1.5, 1.0), seg(0, 3.0, 1.0), seg(0, 5.0, 1.0)], 0.0, 0.5, (0, 1))
            .unwrap();
        let q = stark_frame_offsets(&p, [0.25, 7.0]);
        let phases: Vec<f64> = q.segments_for(0).map(|s| s.spin_phase).collect();
        assert_eq!(phases, vec![0.0, 0.25 * 2.0, 0.25 * 3.0]);
        assert_eq!(q.segments_for(1).next().unwrap().spin_phase, 0.0);
    }

    #[test]
    fn wrap_phase_range() {
        for x in [-10.0, -PI, 0.0, PI, 3.5, 100.0] {
            let w = wrap_phase(x);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((x - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
    }
}
