//! File formats. Frequencies are written as ordinary frequency (Hz or MHz),
//! times in microseconds, positions in micrometres.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::crystal::{IonCrystal, ModeSpectrum};
use crate::dynamics::GateTrajectory;
use crate::error::{invalid, Error, Result};
use crate::micromotion::RecalibrationEntry;
use crate::noise::ErrorBudget;
use crate::pulses::{PulseSequence, ScanPoint, Segment};
use crate::readout::{bitstring, parse_bitstring, ConfusionMatrix, PopulationEstimate};

const TWO_PI: f64 = 2.0 * PI;

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

pub fn write_positions_csv<W: Write>(crystal: &IonCrystal, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["ion", "x_um", "y_um", "z_um"])?;
    for (i, p) in crystal.positions.iter().enumerate() {
        out.write_record([i.to_string(), num(p[0] * 1e6), num(p[1] * 1e6), num(p[2] * 1e6)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_modes_csv<W: Write>(spectrum: &ModeSpectrum, w: W) -> Result<()> {
    let n = spectrum.n_ions();
    let mut out = csv_writer(w);
    let mut header = vec!["mode".to_string(), "frequency_MHz".to_string()];
    header.extend((0..n).map(|j| format!("b_{j}")));
    header.push("eta".into());
    out.write_record(&header)?;
    for k in 0..spectrum.n_modes() {
        let mut row = vec![k.to_string(), num(spectrum.frequencies[k] / TWO_PI / 1e6)];
        row.extend((0..n).map(|j| num(spectrum.mode_matrix[(j, k)])));
        row.push(num(spectrum.lamb_dicke[k]));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonRow {
    pub ion: usize,
    pub x_um: f64,
    pub y_um: f64,
    pub z_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub mode: usize,
    #[serde(rename = "frequency_MHz")]
    pub frequency_mhz: f64,
    /// participation of each ion
    pub b: Vec<f64>,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalDocument {
    pub ions: Vec<IonRow>,
    pub modes: Vec<ModeRow>,
}

impl CrystalDocument {
    pub fn new(crystal: &IonCrystal, spectrum: &ModeSpectrum) -> Self {
        let ions = crystal
            .positions
            .iter()
            .enumerate()
            .map(|(ion, p)| IonRow { ion, x_um: p[0] * 1e6, y_um: p[1] * 1e6, z_um: p[2] * 1e6 })
            .collect();
        let modes = (0..spectrum.n_modes())
            .map(|k| ModeRow {
                mode: k,
                frequency_mhz: spectrum.frequencies[k] / TWO_PI / 1e6,
                b: spectrum.mode_matrix.column(k).iter().copied().collect(),
                eta: spectrum.lamb_dicke[k],
            })
            .collect();
        Self { ions, modes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub ion: usize,
    pub start_us: f64,
    pub duration_us: f64,
    pub rabi_hz: f64,
    pub motional_phase_rad: f64,
    pub spin_phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDocument {
    pub detuning_hz: f64,
    pub pair: (usize, usize),
    #[serde(default)]
    pub gap_us: f64,
    pub segments: Vec<SegmentRow>,
}

impl From<&PulseSequence> for SequenceDocument {
    fn from(seq: &PulseSequence) -> Self {
        Self {
            detuning_hz: seq.detuning / TWO_PI,
            pair: seq.pair,
            gap_us: seq.gap * 1e6,
            segments: seq
                .segments
                .iter()
                .map(|s| SegmentRow {
                    ion: s.target_ion,
                    start_us: s.start_time * 1e6,
                    duration_us: s.duration * 1e6,
                    rabi_hz: s.rabi_rate / TWO_PI,
                    motional_phase_rad: s.motional_phase,
                    spin_phase_rad: s.spin_phase,
                })
                .collect(),
        }
    }
}

impl SequenceDocument {
    pub fn to_sequence(&self) -> Result<PulseSequence> {
        let segments = self
            .segments
            .iter()
            .map(|r| Segment {
                target_ion: r.ion,
                start_time: r.start_us * 1e-6,
                duration: r.duration_us * 1e-6,
                rabi_rate: r.rabi_hz * TWO_PI,
                motional_phase: r.motional_phase_rad,
                spin_phase: r.spin_phase_rad,
            })
            .collect();
        PulseSequence::new(segments, self.detuning_hz * TWO_PI, self.gap_us * 1e-6, self.pair)
    }
}

pub fn write_sequence_json<W: Write>(seq: &PulseSequence, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &SequenceDocument::from(seq))?;
    Ok(())
}

pub fn read_sequence_json<R: Read>(r: R) -> Result<PulseSequence> {
    let doc: SequenceDocument = serde_json::from_reader(r)?;
    doc.to_sequence()
}

pub fn write_sequence_csv<W: Write>(seq: &PulseSequence, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in SequenceDocument::from(seq).segments {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Rows of the |++> trajectory: one per sample and mode.
pub fn write_trajectory_csv<W: Write>(traj: &GateTrajectory, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["time_us", "mode_index", "re_alpha", "im_alpha", "segment_index"])?;
    for s in &traj.samples {
        for k in 0..s.alpha.ncols() {
            let a = s.alpha[(0, k)] + s.alpha[(1, k)];
            out.write_record([num(s.time * 1e6), k.to_string(), num(a.re), num(a.im), s.segment.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementRow {
    pub ion: usize,
    pub mode: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservablesDocument {
    pub theta_rad: f64,
    pub final_displacements: Vec<DisplacementRow>,
    pub coherent_fidelity: f64,
}

impl ObservablesDocument {
    pub fn new(traj: &GateTrajectory, coherent_fidelity: f64) -> Self {
        let ions = [traj.pair.0, traj.pair.1];
        let a = &traj.final_displacements;
        let mut rows = Vec::new();
        for (slot, ion) in ions.iter().enumerate() {
            for k in 0..a.ncols() {
                rows.push(DisplacementRow { ion: *ion, mode: k, re: a[(slot, k)].re, im: a[(slot, k)].im });
            }
        }
        Self { theta_rad: traj.two_qubit_phase, final_displacements: rows, coherent_fidelity }
    }
}

pub fn write_budget_csv<W: Write>(budget: &ErrorBudget, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["channel", "infidelity"])?;
    for (name, v) in &budget.contributions {
        out.write_record([name.as_str(), &num(*v)])?;
    }
    out.write_record(["total", &num(budget.total)])?;
    out.flush()?;
    Ok(())
}

pub fn write_micromotion_curve_csv<W: Write>(points: &[(f64, f64)], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["a_over_r", "r"])?;
    for (x, r) in points {
        out.write_record([num(*x), num(*r)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_recalibration_json<W: Write>(entries: &[RecalibrationEntry], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, entries)?;
    Ok(())
}

pub fn write_scan_csv<W: Write>(points: &[ScanPoint], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["detuning_hz", "optimized_infidelity"])?;
    for p in points {
        out.write_record([num(p.detuning / TWO_PI), num(p.infidelity)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_confusion_csv<W: Write>(m: &ConfusionMatrix, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record((0..m.dim()).map(|j| bitstring(j, m.n_ions)))?;
    for row in m.matrix.row_iter() {
        out.write_record(row.iter().map(|v| num(*v)))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a confusion matrix, or raw calibration counts in the same layout,
/// which are normalized column by column.
pub fn read_confusion_csv<R: Read>(r: R) -> Result<ConfusionMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let d = header.len();
    if d < 2 || !d.is_power_of_two() {
        return invalid(format!("confusion header has {d} columns, need a power of two"));
    }
    let n_ions = d.trailing_zeros() as usize;
    let order: Vec<usize> = header.iter().map(|h| parse_bitstring(h)).collect::<Result<_>>()?;
    if header.iter().any(|h| h.len() != n_ions) {
        return invalid("bitstring length does not match the matrix size");
    }
    let mut raw = DMatrix::zeros(d, d);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rows >= d || rec.len() != d {
            return invalid(format!("confusion matrix must have {d} rows of {d} entries"));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Invalid(format!("bad number {field:?}")))?;
            raw[(order[rows], order[c])] = v;
        }
        rows += 1;
    }
    if rows != d {
        return invalid(format!("confusion matrix must have {d} rows, got {rows}"));
    }
    crate::readout::build_confusion(n_ions, &crate::readout::ConfusionSource::Counts(raw))
}

#[derive(Debug, Deserialize)]
struct CountRow {
    bitstring: String,
    count: f64,
}

pub fn read_counts_csv<R: Read>(r: R, n_ions: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut counts = vec![0.0; 1 << n_ions];
    for row in rdr.deserialize() {
        let row: CountRow = row?;
        if row.bitstring.len() != n_ions {
            return invalid(format!("bitstring {:?} does not have {n_ions} ions", row.bitstring));
        }
        if !(row.count >= 0.0) {
            return invalid("counts must be non-negative");
        }
        counts[parse_bitstring(&row.bitstring)?] += row.count;
    }
    Ok(counts)
}

pub fn write_counts_csv<W: Write>(counts: &[f64], n_ions: usize, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["bitstring", "count"])?;
    for (i, c) in counts.iter().enumerate() {
        out.write_record([bitstring(i, n_ions), num(*c)])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationDocument {
    pub probabilities: BTreeMap<String, f64>,
    pub std_errors: BTreeMap<String, f64>,
    pub shots: u64,
    pub log_likelihood: f64,
}

impl PopulationDocument {
    pub fn new(est: &PopulationEstimate, n_ions: usize) -> Self {
        let label = |i| bitstring(i, n_ions);
        Self {
            probabilities: est.probabilities.iter().enumerate().map(|(i, p)| (label(i), *p)).collect(),
            std_errors: est.std_errors.iter().enumerate().map(|(i, p)| (label(i), *p)).collect(),
            shots: est.shots,
            log_likelihood: est.log_likelihood,
        }
    }
}

pub const SCHEMA: &str = r#"positions.csv      ion,x_um,y_um,z_um
modes.csv          mode,frequency_MHz,b_0..b_{N-1},eta   (mode 0 is COM)
crystal.json       {"ions":[{ion,x_um,y_um,z_um}],"modes":[{mode,frequency_MHz,b:[...],eta}]}
sequence.json      {"detuning_hz","pair":[i,j],"gap_us","segments":[{ion,start_us,duration_us,rabi_hz,motional_phase_rad,spin_phase_rad}]}
sequence.csv       ion,start_us,duration_us,rabi_hz,motional_phase_rad,spin_phase_rad
trajectory.csv     time_us,mode_index,re_alpha,im_alpha,segment_index   (|++> displacement)
observables.json   {"theta_rad","final_displacements":[{ion,mode,re,im}],"coherent_fidelity"}
scan.csv           detuning_hz,optimized_infidelity   (NaN for failed points)
budget.json        {"contributions":{channel:infidelity},"total","baseline","model"}
budget.csv         channel,infidelity   (last row: total)
micromotion.csv    a_over_r,r
recalibration.json [{ion,A_nm,r,intensity_factor}]
confusion.csv      header of 2^N bitstrings; row i = measured state i; columns are prepared states
counts.csv         bitstring,count
populations.json   {"probabilities":{bitstring:p},"std_errors":{bitstring:s},"shots","log_likelihood"}
bitstrings         character i is ion i, 1 = bright; basis index = sum_i bit_i 2^i"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readout::{build_confusion, ConfusionSource, SyntheticReadout};

    #[test]
    fn sequence_round_trip() {
        let seg = |ion, start| Segment { target_ion: ion, start_time: start, duration: 2e-6, rabi_rate: 1e5, motional_phase: 0.4, spin_phase: -0.2 };
        let seq = PulseSequence::new(vec![seg(0, 0.0), seg(2, 3e-6)], 1.4e7, 1e-6, (0, 2)).unwrap();
        let mut buf = Vec::new();
        write_sequence_json(&seq, &mut buf).unwrap();
        let back = read_sequence_json(buf.as_slice()).unwrap();
        assert_eq!(back.pair, seq.pair);
        for (a, b) in seq.segments.iter().zip(&back.segments) {
            assert!((a.rabi_rate - b.rabi_rate).abs() < 1e-9 && (a.start_time - b.start_time).abs() < 1e-18);
        }
        assert!((back.detuning - seq.detuning).abs() < 1e-6);
    }

    #[test]
    fn confusion_round_trip() {
        let m = build_confusion(2, &ConfusionSource::Synthetic(SyntheticReadout { per_ion_flip: 0.05, neighbor_crosstalk: 0.01, adjacency: vec![(0, 1)] })).unwrap();
        let mut buf = Vec::new();
        write_confusion_csv(&m, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("00,10,01,11\n"));
        let back = read_confusion_csv(buf.as_slice()).unwrap();
        assert!((back.matrix - m.matrix).abs().max() < 1e-15);
    }

    #[test]
    fn counts_round_trip() {
        let counts = vec![1.0, 0.0, 5.0, 7.0];
        let mut buf = Vec::new();
        write_counts_csv(&counts, 2, &mut buf).unwrap();
        assert_eq!(read_counts_csv(buf.as_slice(), 2).unwrap(), counts);
        assert!(read_counts_csv("bitstring,count\n101,3\n".as_bytes(), 2).is_err());
    }

    #[test]
    fn scan_writes_nan() {
        let mut buf = Vec::new();
        write_scan_csv(&[ScanPoint { detuning: TWO_PI * 1e6, infidelity: f64::NAN }], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "detuning_hz,optimized_infidelity\n1000000,NaN\n");
    }
}
