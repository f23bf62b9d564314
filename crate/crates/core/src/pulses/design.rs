use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{wrap_phase, PulseSequence, Segment};
use crate::crystal::ModeSpectrum;
use crate::error::{Error, Result};

/// Mode coefficients below this are treated as non-participating.
pub const PARTICIPATION_TOLERANCE: f64 = 1e-6;

/// Which pair of modes the single-segment loop is tuned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TwoSegmentRule {
    /// Pair on the weak axis: detune midway between modes 2 and 3; mode 4 must be dark.
    LR,
    /// Pair on the strong in-plane axis: `mu = 2 w4 - w3`; mode 2 must be dark.
    UD,
}

fn require_dark(spectrum: &ModeSpectrum, pair: (usize, usize), mode: usize) -> Result<()> {
    for ion in [pair.0, pair.1] {
        let b = spectrum.participation(ion, mode);
        if b.abs() >= PARTICIPATION_TOLERANCE {
            return Err(Error::Design(format!(
                "ion {ion} has mode coefficient b = {b:.3e} on mode {} which the rule requires to vanish",
                mode + 1
            )));
        }
    }
    Ok(())
}

fn check_pair(spectrum: &ModeSpectrum, pair: (usize, usize)) -> Result<()> {
    let n = spectrum.n_ions();
    if pair.0 == pair.1 || pair.0 >= n || pair.1 >= n {
        return Err(Error::Design(format!("pair {pair:?} is not two distinct ions of {n}")));
    }
    Ok(())
}

/// Two equal segments driving both ions at once.
///
/// Each segment is an integer number of loops for the two modes the rule
/// targets; the motional phase of the second segment, `pi - (mu - w1) t`,
/// returns the COM mode to the origin at the end. Rabi rates are 1 rad/s; use
/// [`super::scale_to_phase`] to set the entangling phase.
pub fn design_two_segment(spectrum: &ModeSpectrum, pair: (usize, usize), rule: TwoSegmentRule) -> Result<PulseSequence> {
    check_pair(spectrum, pair)?;
    if spectrum.n_modes() < 3 {
        return Err(Error::Design("two-segment rules need at least three modes".into()));
    }
    let w = &spectrum.frequencies;
    let (mu, t) = match rule {
        TwoSegmentRule::LR => {
            for k in 3..spectrum.n_modes() {
                require_dark(spectrum, pair, k)?;
            }
            ((w[1] + w[2]) / 2.0, 4.0 * PI / (w[1] - w[2]))
        }
        TwoSegmentRule::UD => {
            if spectrum.n_modes() < 4 {
                return Err(Error::Design("UD rule needs four modes".into()));
            }
            require_dark(spectrum, pair, 1)?;
            for k in 4..spectrum.n_modes() {
                require_dark(spectrum, pair, k)?;
            }
            (2.0 * w[3] - w[2], 2.0 * PI / (w[2] - w[3]))
        }
    };
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Design("targeted modes are degenerate".into()));
    }
    let dphi = com_decoupling_phase(mu - w[0], t);
    let mut segments = Vec::with_capacity(4);
    for (start, phase) in [(0.0, 0.0), (t, dphi)] {
        for ion in [pair.0, pair.1] {
            segments.push(Segment { target_ion: ion, start_time: start, duration: t, rabi_rate: 1.0, motional_phase: phase, spin_phase: 0.0 });
        }
    }
    PulseSequence::new(segments, mu, 0.0, pair)
}

/// `pi - delta * dt`: the phase offset that cancels a loop started `dt` earlier
/// on a mode detuned by `delta`.
pub fn com_decoupling_phase(delta: f64, dt: f64) -> f64 {
    wrap_phase(PI - delta * dt)
}

/// Four-segment phase pattern closing modes 1 and 3 for segments whose starts
/// are separated by `period`.
pub fn four_phase_pattern(delta1: f64, delta3: f64, period: f64) -> [f64; 4] {
    [
        0.0,
        PI - delta3 * period,
        PI - delta1 * 2.0 * period,
        -delta3 * period - delta1 * 2.0 * period,
    ]
    .map(wrap_phase)
}

/// Eight single-ion segments alternating `pair.0, pair.1, ...` separated by
/// `gap`. Each segment is one loop of modes 2 and 4; the four-phase pattern
/// applied to each ion's segments closes modes 1 and 3.
pub fn design_alternating_diagonal(spectrum: &ModeSpectrum, pair: (usize, usize), gap: f64) -> Result<PulseSequence> {
    check_pair(spectrum, pair)?;
    if spectrum.n_modes() != 4 {
        return Err(Error::Design(format!("alternating diagonal design needs 4 modes, got {}", spectrum.n_modes())));
    }
    if !(gap >= 0.0 && gap.is_finite()) {
        return Err(Error::Design(format!("gap must be non-negative, got {gap}")));
    }
    for ion in [pair.0, pair.1] {
        let (b2, b4) = (spectrum.participation(ion, 1), spectrum.participation(ion, 3));
        if b2.abs().min(b4.abs()) >= PARTICIPATION_TOLERANCE {
            return Err(Error::Design(format!(
                "ion {ion} participates in both mode 2 (b = {b2:.3e}) and mode 4 (b = {b4:.3e})"
            )));
        }
    }
    let w = &spectrum.frequencies;
    let mu = (w[1] + w[3]) / 2.0;
    let t = 4.0 * PI / (w[1] - w[3]);
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Design("modes 2 and 4 are degenerate".into()));
    }
    let period = 2.0 * (t + gap);
    let phases = four_phase_pattern(mu - w[0], mu - w[2], period);
    let mut segments = Vec::with_capacity(8);
    for (m, phase) in phases.iter().enumerate() {
        for (slot, ion) in [pair.0, pair.1].into_iter().enumerate() {
            segments.push(Segment {
                target_ion: ion,
                start_time: m as f64 * period + slot as f64 * (t + gap),
                duration: t,
                rabi_rate: 1.0,
                motional_phase: *phase,
                spin_phase: 0.0,
            });
        }
    }
    PulseSequence::new(segments, mu, gap, pair)
}
