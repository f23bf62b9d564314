//! Gate error sources: laser and motional dephasing, heating and intensity
//! noise, plus the calibration fits used to set their strengths.
//!
//! All dissipative channels are Markovian ("white-noise model"), which tends to
//! overestimate errors caused by slow drifts.

mod fit;
mod solver;

pub use fit::{fit_decay, DecayFit, DecayKind};
pub use solver::{nearest_modes, simulate_open_system, OpenSystemOptions, OpenSystemResult, LEAKAGE_LIMIT, LEAKAGE_WARNING};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crystal::ModeSpectrum;
use crate::error::{invalid, Error, Result};
use crate::pulses::PulseSequence;

pub const MODEL_LABEL: &str = "white-noise model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// `tau_s`, seconds. `f64::INFINITY` switches the channel off.
    pub laser_dephasing_time: f64,
    /// `tau_m`, seconds. `f64::INFINITY` switches the channel off.
    pub motional_dephasing_time: f64,
    /// quanta/s per mode
    pub heating_rates: Vec<f64>,
    /// relative shot-to-shot Rabi-rate spread
    pub intensity_sigma: f64,
    /// initial thermal occupation per mode
    pub nbar: Vec<f64>,
    /// Dephase each qubit independently instead of collectively.
    #[serde(default)]
    pub independent_dephasing: bool,
}

impl NoiseModel {
    /// No noise at all, ground-state modes.
    pub fn noiseless(n_modes: usize) -> Self {
        Self {
            laser_dephasing_time: f64::INFINITY,
            motional_dephasing_time: f64::INFINITY,
            heating_rates: vec![0.0; n_modes],
            intensity_sigma: 0.0,
            nbar: vec![0.0; n_modes],
            independent_dephasing: false,
        }
    }

    /// Calibrated four-ion values: `tau_s = 4 ms`, `tau_m = 3 ms`, COM heating
    /// 120/s and 10/s for the rest, 1% intensity noise, `nbar = 0.1`.
    pub fn four_ion_measured(n_modes: usize) -> Self {
        let mut heating = vec![10.0; n_modes];
        if let Some(com) = heating.first_mut() {
            *com = 120.0;
        }
        Self {
            laser_dephasing_time: 4e-3,
            motional_dephasing_time: 3e-3,
            heating_rates: heating,
            intensity_sigma: 0.01,
            nbar: vec![0.1; n_modes],
            independent_dephasing: false,
        }
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        if !(self.laser_dephasing_time > 0.0 && self.motional_dephasing_time > 0.0) {
            return invalid("dephasing times must be positive");
        }
        if self.heating_rates.len() != n_modes || self.nbar.len() != n_modes {
            return invalid(format!("heating rates and nbar need {n_modes} entries"));
        }
        if self.heating_rates.iter().chain(&self.nbar).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("heating rates and nbar must be finite and non-negative");
        }
        if !(self.intensity_sigma >= 0.0) {
            return invalid("intensity sigma must be non-negative");
        }
        Ok(())
    }

    fn only(&self, channel: Channel) -> Self {
        let mut m = Self { nbar: self.nbar.clone(), ..Self::noiseless(self.nbar.len()) };
        m.independent_dephasing = self.independent_dephasing;
        match channel {
            Channel::LaserDephasing => m.laser_dephasing_time = self.laser_dephasing_time,
            Channel::MotionalDephasing => m.motional_dephasing_time = self.motional_dephasing_time,
            Channel::Heating => m.heating_rates = self.heating_rates.clone(),
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    LaserDephasing,
    MotionalDephasing,
    Heating,
}

/// `(pi^2 / 4) sigma^2`
pub fn intensity_error(sigma: f64) -> f64 {
    PI * PI / 4.0 * sigma * sigma
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// laser_dephasing, motional_dephasing, heating, intensity
    pub contributions: BTreeMap<String, f64>,
    /// infidelity with every channel on, plus the intensity term
    pub total: f64,
    /// infidelity of the noiseless simulation, not included above
    pub baseline: f64,
    pub model: String,
}

impl ErrorBudget {
    pub fn sum_of_contributions(&self) -> f64 {
        self.contributions.values().sum()
    }
}

/// One simulation per channel and one with all channels, each reported
/// relative to the noiseless run.
pub fn error_budget(
    sequence: &PulseSequence,
    spectrum: &ModeSpectrum,
    noise: &NoiseModel,
    opts: &OpenSystemOptions,
) -> Result<ErrorBudget> {
    noise.validate(spectrum.n_modes())?;
    let ideal = NoiseModel { nbar: noise.nbar.clone(), ..NoiseModel::noiseless(spectrum.n_modes()) };
    let runs = [
        ideal,
        noise.only(Channel::LaserDephasing),
        noise.only(Channel::MotionalDephasing),
        noise.only(Channel::Heating),
        NoiseModel { intensity_sigma: 0.0, ..noise.clone() },
    ];
    let fidelities: Vec<f64> = runs
        .par_iter()
        .map(|m| simulate_open_system(sequence, spectrum, m, opts).map(|r| r.fidelity))
        .collect::<Result<_>>()?;
    let f0 = fidelities[0];
    let mut contributions = BTreeMap::new();
    for (name, f) in ["laser_dephasing", "motional_dephasing", "heating"].iter().zip(&fidelities[1..4]) {
        contributions.insert(name.to_string(), (f0 - f).max(0.0));
    }
    let intensity = intensity_error(noise.intensity_sigma);
    contributions.insert("intensity".into(), intensity);
    Ok(ErrorBudget {
        contributions,
        total: (f0 - fidelities[4]).max(0.0) + intensity,
        baseline: 1.0 - f0,
        model: MODEL_LABEL.into(),
    })
}

/// Mean phonon number from red/blue sideband excitation, `r / (1 - r)` with
/// `r = p_red / p_blue`.
pub fn nbar_from_sidebands(p_red: f64, p_blue: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_red) || !(p_blue > 0.0 && p_blue <= 1.0) {
        return invalid(format!("sideband probabilities out of range: red {p_red}, blue {p_blue}"));
    }
    let r = p_red / p_blue;
    if r >= 1.0 - 1e-9 {
        return Err(Error::NonThermal(r));
    }
    Ok(r / (1.0 - r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intensity_error_values() {
        assert!((intensity_error(0.01) - 2.467e-4).abs() < 1e-7);
        assert_eq!(intensity_error(0.0), 0.0);
        assert!((intensity_error(0.02) - 4.0 * intensity_error(0.01)).abs() < 1e-18);
    }

    #[test]
    fn sideband_ratio() {
        assert_eq!(nbar_from_sidebands(0.0, 0.3).unwrap(), 0.0);
        assert!((nbar_from_sidebands(0.2, 0.4).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(nbar_from_sidebands(0.4, 0.4), Err(Error::NonThermal(_))));
        assert!(nbar_from_sidebands(0.1, 0.0).is_err());
        assert!(nbar_from_sidebands(0.5, 0.5 + 1e-12).is_err());
    }

    #[test]
    fn validation() {
        let mut m = NoiseModel::four_ion_measured(4);
        assert!(m.validate(4).is_ok());
        assert!(m.validate(3).is_err());
        m.laser_dephasing_time = 0.0;
        assert!(m.validate(4).is_err());
    }
}
