//! Run configuration: a sectioned TOML file, or the same document as JSON.
//! Frequencies are given in MHz or kHz (ordinary frequency), times in
//! microseconds or milliseconds as the key suffix says.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::crystal::TrapConfig;
use crate::error::{Error, Result};
use crate::pulses::Style;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const OUT_ENV: &str = "DRUMHEAD_OUT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub trap: TrapSection,
    pub crystal: CrystalSection,
    pub gate: GateSection,
    pub noise: NoiseSection,
    pub micromotion: MicromotionSection,
    pub readout: ReadoutSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub fx_mhz: f64,
    pub fy_mhz: f64,
    pub fz_mhz: f64,
    pub rf_mhz: f64,
    pub mathieu_q: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        Self { fx_mhz: 0.803, fy_mhz: 2.284, fz_mhz: 0.553, rf_mhz: 37.0, mathieu_q: 0.12 }
    }
}

impl TrapSection {
    pub fn to_trap(&self) -> TrapConfig {
        let mut t = TrapConfig::ytterbium_mhz(self.fx_mhz, self.fy_mhz, self.fz_mhz);
        t.rf_frequency = crate::constants::mhz(self.rf_mhz);
        t.mathieu_q = self.mathieu_q;
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrystalSection {
    pub n_ions: usize,
    /// seed for the initial positions; falls back to `--seed`
    pub seed: Option<u64>,
}

impl Default for CrystalSection {
    fn default() -> Self {
        Self { n_ions: 4, seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// two-segment gate for a horizontal pair
    Lr,
    /// two-segment gate for a vertical pair
    Ud,
    /// alternating single-ion sequence for a diagonal pair
    Diagonal,
    /// amplitude-optimized segmented gate
    Optimized,
}

/// Ion indices, or the labels L, R, U, D of a four-ion crystal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairSpec {
    Indices([usize; 2]),
    Labels([String; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    pub kind: GateKind,
    /// defaults: LR -> (L, R), UD -> (U, D), diagonal -> (L, U), optimized ->
    /// the ion nearest the center and its nearest neighbor
    pub pair: Option<PairSpec>,
    pub style: Style,
    /// off time between segments (diagonal gate), microseconds
    pub gap_us: f64,
    pub n_seg: usize,
    pub total_time_us: f64,
    /// optimized gate detuning above the COM mode, kHz
    pub detuning_offset_khz: f64,
    pub robustness_weight: Option<f64>,
    /// scan window above the COM mode, kHz
    pub scan_start_khz: f64,
    pub scan_stop_khz: f64,
    pub scan_step_khz: f64,
    /// scale all Rabi rates to zero
    pub dry_run: bool,
    pub samples_per_segment: usize,
    pub nbar: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        Self {
            kind: GateKind::Lr,
            pair: None,
            style: Style::Alternating,
            gap_us: 2.0,
            n_seg: 240,
            total_time_us: 300.0,
            detuning_offset_khz: 18.5,
            robustness_weight: None,
            scan_start_khz: 5.0,
            scan_stop_khz: 40.0,
            scan_step_khz: 0.5,
            dry_run: false,
            samples_per_segment: crate::dynamics::DEFAULT_SAMPLES_PER_SEGMENT,
            nbar: 0.0,
        }
    }
}

impl GateSection {
    pub fn scan_grid(&self) -> Vec<f64> {
        if !(self.scan_step_khz > 0.0) || !(self.scan_stop_khz >= self.scan_start_khz) {
            return Vec::new();
        }
        let n = ((self.scan_stop_khz - self.scan_start_khz) / self.scan_step_khz + 1e-9).floor() as usize;
        (0..=n).map(|i| self.scan_start_khz + i as f64 * self.scan_step_khz).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub tau_s_ms: f64,
    pub tau_m_ms: f64,
    /// quanta/s per mode, COM first; overrides the two values below
    pub heating_per_mode: Option<Vec<f64>>,
    pub heating_com: f64,
    pub heating_other: f64,
    pub sigma_intensity: f64,
    pub nbar: f64,
    pub independent_dephasing: bool,
    pub phonon_cutoff: usize,
    pub n_active: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            tau_s_ms: 4.0,
            tau_m_ms: 3.0,
            heating_per_mode: None,
            heating_com: 120.0,
            heating_other: 10.0,
            sigma_intensity: 0.01,
            nbar: 0.1,
            independent_dephasing: false,
            phonon_cutoff: 6,
            n_active: 2,
        }
    }
}

impl NoiseSection {
    pub fn to_model(&self, n_modes: usize) -> Result<crate::noise::NoiseModel> {
        let heating = match &self.heating_per_mode {
            Some(h) if h.len() != n_modes => {
                return Err(Error::Config(format!("heating_per_mode needs {n_modes} entries, got {}", h.len())))
            }
            Some(h) => h.clone(),
            None => (0..n_modes).map(|k| if k == 0 { self.heating_com } else { self.heating_other }).collect(),
        };
        let ms = |v: f64| if v > 0.0 { v * 1e-3 } else { f64::INFINITY };
        let model = crate::noise::NoiseModel {
            laser_dephasing_time: ms(self.tau_s_ms),
            motional_dephasing_time: ms(self.tau_m_ms),
            heating_rates: heating,
            intensity_sigma: self.sigma_intensity,
            nbar: vec![self.nbar; n_modes],
            independent_dephasing: self.independent_dephasing,
        };
        model.validate(n_modes)?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicromotionSection {
    pub beam_waist_um: f64,
    /// largest A/R on the curve grid
    pub a_over_r_max: f64,
    pub grid_points: usize,
    /// per-ion amplitude overrides, nm; other ions use `q |x| / 2`
    pub amplitudes_nm: BTreeMap<String, f64>,
    pub floor: f64,
}

impl Default for MicromotionSection {
    fn default() -> Self {
        Self {
            beam_waist_um: 1.5,
            a_over_r_max: 3.0,
            grid_points: 100,
            amplitudes_nm: BTreeMap::new(),
            floor: crate::micromotion::DEFAULT_RABI_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSection {
    /// confusion CSV; without one a synthetic matrix is built
    pub matrix: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub mc_samples: usize,
    pub n_ions: usize,
    pub flip: f64,
    pub crosstalk: f64,
    pub adjacency: Vec<[usize; 2]>,
    pub seed: Option<u64>,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        Self {
            matrix: None,
            counts: None,
            mc_samples: 1000,
            n_ions: 4,
            flip: 0.07,
            crosstalk: 0.01,
            adjacency: vec![[0, 2], [2, 1], [1, 3], [3, 0]],
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: None, formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// `.json` files are read as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that does not need the crystal.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.trap.to_trap().validate()?;
        if self.crystal.n_ions == 0 {
            return cfg("crystal.n_ions must be positive".into());
        }
        let g = &self.gate;
        if let Some(PairSpec::Indices([a, b])) = &g.pair {
            if a == b || *a >= self.crystal.n_ions || *b >= self.crystal.n_ions {
                return cfg(format!("gate.pair [{a}, {b}] must name two ions below {}", self.crystal.n_ions));
            }
        }
        if let Some(PairSpec::Labels(l)) = &g.pair {
            if self.crystal.n_ions != 4 || l.iter().any(|s| !["L", "R", "U", "D"].contains(&s.as_str())) || l[0] == l[1] {
                return cfg("gate.pair labels need a four-ion crystal and two of L, R, U, D".into());
            }
        }
        if !(g.gap_us >= 0.0) || !(g.total_time_us > 0.0) || g.n_seg == 0 || !(g.nbar >= 0.0) {
            return cfg("gate timing values must be positive".into());
        }
        if let Some(w) = g.robustness_weight {
            if !(w >= 0.0) {
                return cfg("gate.robustness_weight must be non-negative".into());
            }
        }
        let n = &self.noise;
        if n.phonon_cutoff < 3 || n.n_active == 0 || !(n.nbar >= 0.0) || !(n.sigma_intensity >= 0.0) {
            return cfg("noise section out of range".into());
        }
        let m = &self.micromotion;
        if !(m.beam_waist_um > 0.0) || !(m.a_over_r_max > 0.0) || m.grid_points < 2 || !(0.0..1.0).contains(&m.floor) {
            return cfg("micromotion section out of range".into());
        }
        for (k, v) in &m.amplitudes_nm {
            match k.parse::<usize>() {
                Ok(i) if i < self.crystal.n_ions && *v >= 0.0 => {}
                _ => return cfg(format!("micromotion.amplitudes_nm entry {k:?} = {v} is invalid")),
            }
        }
        let r = &self.readout;
        if r.n_ions == 0 || r.n_ions > 16 || r.mc_samples < 100 {
            return cfg("readout.n_ions must be 1..16 and mc_samples at least 100".into());
        }
        if r.adjacency.iter().any(|[a, b]| a == b || *a >= r.n_ions || *b >= r.n_ions) {
            return cfg("readout.adjacency refers to unknown ions".into());
        }
        if self.output.formats.is_empty() {
            return cfg("output.formats is empty".into());
        }
        Ok(())
    }
}
