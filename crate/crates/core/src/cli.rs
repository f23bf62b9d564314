//! Command implementations behind the `drumhead` binary. Each command checks
//! the whole configuration and finishes every computation before it writes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, GateKind, PairSpec, RunConfig};
use crate::constants::khz;
use crate::crystal::{solve_equilibrium, transverse_modes, IonCrystal, ModeSpectrum};
use crate::dynamics::{coherent_fidelity, trajectory};
use crate::error::{Error, Result};
use crate::io;
use crate::micromotion::{micromotion_amplitude, rabi_reduction, recalibration_report};
use crate::noise::{error_budget, OpenSystemOptions, ErrorBudget};
use crate::pulses::{
    design_alternating_diagonal, design_two_segment, optimize_amplitudes, scale_to_phase, scan_detuning,
    OptimizeOptions, PulseSequence, TwoSegmentRule,
};
use crate::readout::{build_confusion, mle_recover, monte_carlo_errors, ConfusionSource, SyntheticReadout};

#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn new(config: RunConfig, out_dir: PathBuf, seed: u64) -> Self {
        Self { config, out_dir, seed }
    }
}

/// Files written by a command plus a short human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    fn add(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.add(name, |b| {
            serde_json::to_writer_pretty(&mut *b, value)?;
            b.push(b'\n');
            Ok(())
        })
    }

    fn commit(self, summary: Vec<String>) -> Result<Report> {
        std::fs::create_dir_all(&self.dir)?;
        let mut files = Vec::new();
        for (name, bytes) in self.files {
            let path = self.dir.join(name);
            let mut f = BufWriter::new(File::create(&path)?);
            f.write_all(&bytes)?;
            f.flush()?;
            files.push(path);
        }
        Ok(Report { files, summary })
    }
}

fn check_writable(dir: &Path) -> Result<()> {
    let mut p = Some(dir);
    while let Some(d) = p {
        if d.exists() {
            let meta = std::fs::metadata(d)?;
            if !meta.is_dir() || meta.permissions().readonly() {
                return Err(Error::Config(format!("output directory {} is not writable", d.display())));
            }
            return Ok(());
        }
        p = d.parent();
    }
    Ok(())
}

fn prepare(ctx: &Context) -> Result<()> {
    ctx.config.validate()?;
    check_writable(&ctx.out_dir)
}

pub fn build_crystal(config: &RunConfig, seed: u64) -> Result<(IonCrystal, ModeSpectrum)> {
    let seed = config.crystal.seed.unwrap_or(seed);
    let crystal = solve_equilibrium(&config.trap.to_trap(), config.crystal.n_ions, seed)?;
    let spectrum = transverse_modes(&crystal)?;
    Ok((crystal, spectrum))
}

/// The ion closest to the crystal center and its nearest neighbor.
pub fn central_pair(crystal: &IonCrystal) -> Result<(usize, usize)> {
    if crystal.n_ions() < 2 {
        return Err(Error::Config("a gate needs at least two ions".into()));
    }
    let norm = |p: &[f64; 3]| p.iter().map(|v| v * v).sum::<f64>();
    let dist = |a: &[f64; 3], b: &[f64; 3]| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>();
    let by = |f: &dyn Fn(usize) -> f64, skip: Option<usize>| {
        (0..crystal.n_ions()).filter(|i| Some(*i) != skip).min_by(|&a, &b| f(a).total_cmp(&f(b))).unwrap()
    };
    let c = by(&|i| norm(&crystal.positions[i]), None);
    let n = by(&|i| dist(&crystal.positions[i], &crystal.positions[c]), Some(c));
    Ok((c, n))
}

pub fn resolve_pair(config: &RunConfig, crystal: &IonCrystal) -> Result<(usize, usize)> {
    let labels = crystal.four_ion_labels();
    let label = |s: &str| {
        labels
            .and_then(|l| l.get(s))
            .ok_or_else(|| Error::Config(format!("ion label {s:?} needs a four-ion crystal")))
    };
    match (&config.gate.pair, config.gate.kind) {
        (Some(PairSpec::Indices([a, b])), _) => Ok((*a, *b)),
        (Some(PairSpec::Labels([a, b])), _) => Ok((label(a)?, label(b)?)),
        (None, GateKind::Lr) => Ok((label("L")?, label("R")?)),
        (None, GateKind::Ud) => Ok((label("U")?, label("D")?)),
        (None, GateKind::Diagonal) => Ok((label("L")?, label("U")?)),
        (None, GateKind::Optimized) => central_pair(crystal),
    }
}

fn optimize_options(config: &RunConfig, detuning: f64) -> OptimizeOptions {
    let g = &config.gate;
    let mut opts = OptimizeOptions::new(detuning, g.total_time_us * 1e-6, g.n_seg, g.style);
    if let Some(w) = g.robustness_weight {
        opts.robustness_weight = w;
    }
    opts
}

/// Designs the configured gate, scaled to a pi/4 two-qubit phase.
pub fn build_gate(config: &RunConfig, crystal: &IonCrystal, spectrum: &ModeSpectrum) -> Result<PulseSequence> {
    let pair = resolve_pair(config, crystal)?;
    let g = &config.gate;
    let seq = match g.kind {
        GateKind::Lr | GateKind::Ud | GateKind::Diagonal => {
            let raw = match g.kind {
                GateKind::Lr => design_two_segment(spectrum, pair, TwoSegmentRule::LR)?,
                GateKind::Ud => design_two_segment(spectrum, pair, TwoSegmentRule::UD)?,
                _ => design_alternating_diagonal(spectrum, pair, g.gap_us * 1e-6)?,
            };
            if g.dry_run {
                raw
            } else {
                scale_to_phase(&raw, spectrum, std::f64::consts::FRAC_PI_4)?
            }
        }
        GateKind::Optimized => {
            let mu = spectrum.frequencies[0] + khz(g.detuning_offset_khz);
            let nbar = vec![g.nbar; spectrum.n_modes()];
            optimize_amplitudes(spectrum, pair, &nbar, &optimize_options(config, mu))?.sequence
        }
    };
    Ok(if g.dry_run { seq.scaled(0.0) } else { seq })
}

pub fn cmd_crystal(ctx: &Context) -> Result<Report> {
    prepare(ctx)?;
    let (crystal, spectrum) = build_crystal(&ctx.config, ctx.seed)?;
    let out = &ctx.config.output;
    let mut files = Outputs::new(&ctx.out_dir);
    if out.wants(Format::Csv) {
        files.add("positions.csv", |b| io::write_positions_csv(&crystal, b))?;
        files.add("modes.csv", |b| io::write_modes_csv(&spectrum, b))?;
    }
    if out.wants(Format::Json) {
        files.json("crystal.json", &io::CrystalDocument::new(&crystal, &spectrum))?;
    }
    let freqs: Vec<String> =
        spectrum.frequencies.iter().take(8).map(|w| format!("{:.4}", w / (2.0 * std::f64::consts::PI) / 1e6)).collect();
    let more = if spectrum.n_modes() > 8 { " ..." } else { "" };
    files.commit(vec![format!("{} ions, transverse modes (MHz): {}{more}", crystal.n_ions(), freqs.join(", "))])
}

#[derive(Debug, Clone, Serialize)]
struct DesignReport {
    kind: GateKind,
    pair: (usize, usize),
    total_time_us: f64,
    detuning_hz: f64,
    n_segments: usize,
    theta_rad: f64,
    max_closure_residual: f64,
    coherent_fidelity: f64,
}

pub fn cmd_design(ctx: &Context) -> Result<Report> {
    prepare(ctx)?;
    let cfg = &ctx.config;
    let (crystal, spectrum) = build_crystal(cfg, ctx.seed)?;
    let seq = build_gate(cfg, &crystal, &spectrum)?;
    let traj = trajectory(&seq, &spectrum, cfg.gate.samples_per_segment)?;
    let fidelity = coherent_fidelity(&seq, &spectrum, &vec![cfg.gate.nbar; spectrum.n_modes()])?;
    let report = DesignReport {
        kind: cfg.gate.kind,
        pair: seq.pair,
        total_time_us: seq.total_time * 1e6,
        detuning_hz: seq.detuning / (2.0 * std::f64::consts::PI),
        n_segments: seq.segments.len(),
        theta_rad: traj.two_qubit_phase,
        max_closure_residual: traj.max_closure_residual(),
        coherent_fidelity: fidelity,
    };
    let mut files = Outputs::new(&ctx.out_dir);
    if cfg.output.wants(Format::Json) {
        files.add("sequence.json", |b| io::write_sequence_json(&seq, b))?;
        files.json("observables.json", &io::ObservablesDocument::new(&traj, fidelity))?;
        files.json("design_report.json", &report)?;
    }
    if cfg.output.wants(Format::Csv) {
        files.add("sequence.csv", |b| io::write_sequence_csv(&seq, b))?;
        files.add("trajectory.csv", |b| io::write_trajectory_csv(&traj, b))?;
    }
    files.commit(vec![format!(
        "pair {:?}: T = {:.3} us, theta = {:.9} rad, closure residual {:.1e}, coherent fidelity {:.6}",
        report.pair, report.total_time_us, report.theta_rad, report.max_closure_residual, report.coherent_fidelity
    )])
}

pub fn cmd_scan(ctx: &Context) -> Result<Report> {
    prepare(ctx)?;
    let cfg = &ctx.config;
    let grid = cfg.gate.scan_grid();
    if grid.is_empty() {
        return Err(Error::Config("scan window is empty".into()));
    }
    let (crystal, spectrum) = build_crystal(cfg, ctx.seed)?;
    let pair = resolve_pair(cfg, &crystal)?;
    let com = spectrum.frequencies[0];
    let detunings: Vec<f64> = grid.iter().map(|d| com + khz(*d)).collect();
    let nbar = vec![cfg.gate.nbar; spectrum.n_modes()];
    let points = scan_detuning(&spectrum, pair, &nbar, &optimize_options(cfg, com), &detunings)?;
    let best = points.iter().filter(|p| p.infidelity.is_finite()).min_by(|a, b| a.infidelity.total_cmp(&b.infidelity));
    let mut files = Outputs::new(&ctx.out_dir);
    files.add("scan.csv", |b| io::write_scan_csv(&points, b))?;
    let summary = match best {
        Some(p) => format!(
            "pair {pair:?}: best infidelity {:.3e} at {:.2} kHz above COM",
            p.infidelity,
            (p.detuning - com) / (2.0 * std::f64::consts::PI) / 1e3
        ),
        None => "every scan point failed".into(),
    };
    files.commit(vec![summary])
}

pub fn cmd_errors(ctx: &Context) -> Result<Report> {
    prepare(ctx)?;
    let cfg = &ctx.config;
    let (crystal, spectrum) = build_crystal(cfg, ctx.seed)?;
    let noise = cfg.noise.to_model(spectrum.n_modes())?;
    let seq = build_gate(cfg, &crystal, &spectrum)?;
    let opts = OpenSystemOptions { phonon_cutoff: cfg.noise.phonon_cutoff, n_active: cfg.noise.n_active, ..Default::default() };
    let budget: ErrorBudget = error_budget(&seq, &spectrum, &noise, &opts)?;
    let mut files = Outputs::new(&ctx.out_dir);
    if cfg.output.wants(Format::Json) {
        files.json("budget.json", &budget)?;
    }
    if cfg.output.wants(Format::Csv) {
        files.add("budget.csv", |b| io::write_budget_csv(&budget, b))?;
    }
    let mut summary: Vec<String> =
        budget.contributions.iter().map(|(k, v)| format!("{k}: {:.3}%", v * 100.0)).collect();
    summary.push(format!("total: {:.3}% ({})", budget.total * 100.0, budget.model));
    files.commit(summary)
}

pub fn cmd_micromotion(ctx: &Context) -> Result<Report> {
    prepare(ctx)?;
    let cfg = &ctx.config;
    let m = &cfg.micromotion;
    let curve: Vec<(f64, f64)> = (0..m.grid_points)
        .map(|i| {
            let x = m.a_over_r_max * i as f64 / (m.grid_points - 1) as f64;
            (x, rabi_reduction(x, 1.0))
        })
        .collect();
    let (crystal, spectrum) = build_crystal(cfg, ctx.seed)?;
    let seq = build_gate(cfg, &crystal, &spectrum)?;
    let q = cfg.trap.mathieu_q;
    let mut amplitudes = BTreeMap::new();
    for ion in seq.addressed_ions() {
        let a = match m.amplitudes_nm.get(&ion.to_string()) {
            Some(nm) => nm * 1e-9,
            // the RF null is the z axis
            None => micromotion_amplitude(crystal.positions[ion][0].hypot(crystal.positions[ion][1]), q)?,
        };
        amplitudes.insert(ion, a);
    }
    let report = recalibration_report(&seq, &amplitudes, m.beam_waist_um * 1e-6, m.floor)?;
    let mut files = Outputs::new(&ctx.out_dir);
    if cfg.output.wants(Format::Csv) {
        files.add("micromotion.csv", |b| io::write_micromotion_curve_csv(&curve, b))?;
    }
    if cfg.output.wants(Format::Json) {
        files.add("recalibration.json", |b| io::write_recalibration_json(&report, b))?;
    }
    files.commit(
        report
            .iter()
            .map(|e| format!("ion {}: A = {:.1} nm, r = {:.4}, intensity x{:.3}", e.ion, e.amplitude_nm, e.r, e.intensity_factor))
            .collect(),
    )
}

#[derive(Debug, Clone, Default)]
pub struct ReadoutOverrides {
    pub matrix: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub mc_samples: Option<usize>,
}

pub fn cmd_readout_correct(ctx: &Context, overrides: &ReadoutOverrides) -> Result<Report> {
    prepare(ctx)?;
    let r = &ctx.config.readout;
    let matrix_path = overrides.matrix.as_ref().or(r.matrix.as_ref());
    let counts_path = overrides
        .counts
        .as_ref()
        .or(r.counts.as_ref())
        .ok_or_else(|| Error::Config("readout-correct needs a counts file".into()))?;
    let samples = overrides.mc_samples.unwrap_or(r.mc_samples);
    if samples < 100 {
        return Err(Error::Config("need at least 100 Monte Carlo samples".into()));
    }
    let confusion = match matrix_path {
        Some(p) => io::read_confusion_csv(File::open(p)?)?,
        None => build_confusion(
            r.n_ions,
            &ConfusionSource::Synthetic(SyntheticReadout {
                per_ion_flip: r.flip,
                neighbor_crosstalk: r.crosstalk,
                adjacency: r.adjacency.iter().map(|[a, b]| (*a, *b)).collect(),
            }),
        )?,
    };
    let counts = io::read_counts_csv(File::open(counts_path)?, confusion.n_ions)?;
    let mut est = mle_recover(&counts, &confusion)?;
    let seed = r.seed.unwrap_or(ctx.seed);
    est.std_errors = monte_carlo_errors(&est, &confusion, est.shots, samples, seed)?;
    let doc = io::PopulationDocument::new(&est, confusion.n_ions);
    let mut files = Outputs::new(&ctx.out_dir);
    files.json("populations.json", &doc)?;
    let top = doc
        .probabilities
        .iter()
        .filter(|(_, p)| **p > 0.01)
        .map(|(k, p)| format!("{k}: {p:.4} +- {:.4}", doc.std_errors[k]))
        .collect();
    files.commit(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(cfg: RunConfig) -> (tempfile::TempDir, Context) {
        let dir = tempfile::tempdir().unwrap();
        let c = Context::new(cfg, dir.path().join("out"), crate::config::DEFAULT_SEED);
        (dir, c)
    }

    #[test]
    fn crystal_command_writes_tables() {
        let (_d, c) = ctx(RunConfig::default());
        let r = cmd_crystal(&c).unwrap();
        assert_eq!(r.files.len(), 3);
        let modes = std::fs::read_to_string(c.out_dir.join("modes.csv")).unwrap();
        let mut lines = modes.lines();
        assert_eq!(lines.next(), Some("mode,frequency_MHz,b_0,b_1,b_2,b_3,eta"));
        let com: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((com - 2.284).abs() < 1e-9);
    }

    #[test]
    fn single_ion_has_one_mode() {
        let mut cfg = RunConfig::default();
        cfg.crystal.n_ions = 1;
        let (_d, c) = ctx(cfg);
        cmd_crystal(&c).unwrap();
        let modes = std::fs::read_to_string(c.out_dir.join("modes.csv")).unwrap();
        assert_eq!(modes.lines().count(), 2);
    }

    #[test]
    fn dry_run_has_zero_phase() {
        let mut cfg = RunConfig::default();
        cfg.gate.dry_run = true;
        let (_d, c) = ctx(cfg);
        let r = cmd_design(&c).unwrap();
        assert!(r.summary[0].contains("theta = 0.000000000"), "{}", r.summary[0]);
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let mut cfg = RunConfig::default();
        cfg.gate.pair = Some(PairSpec::Indices([0, 7]));
        let (_d, c) = ctx(cfg);
        assert!(cmd_design(&c).is_err());
        assert!(!c.out_dir.exists());
    }

    #[test]
    fn empty_scan_window_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.gate.kind = GateKind::Optimized;
        cfg.gate.scan_start_khz = 10.0;
        cfg.gate.scan_stop_khz = 5.0;
        let (_d, c) = ctx(cfg);
        assert!(matches!(cmd_scan(&c), Err(Error::Config(_))));
    }

    #[test]
    fn identity_readout_echoes_frequencies() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.csv");
        let f = dir.path().join("f.csv");
        io::write_confusion_csv(&crate::readout::ConfusionMatrix::identity(2), File::create(&m).unwrap()).unwrap();
        std::fs::write(&f, "bitstring,count\n00,10\n10,30\n11,60\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.readout.n_ions = 2;
        cfg.readout.adjacency = vec![];
        let c = Context::new(cfg, dir.path().join("out"), 1);
        let o = ReadoutOverrides { matrix: Some(m), counts: Some(f), mc_samples: Some(200) };
        cmd_readout_correct(&c, &o).unwrap();
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(c.out_dir.join("populations.json")).unwrap()).unwrap();
        assert_eq!(doc["probabilities"]["10"], 0.3);
        assert_eq!(doc["probabilities"]["11"], 0.6);
    }
}
