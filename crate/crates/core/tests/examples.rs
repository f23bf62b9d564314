//! Runs the quick examples so they stay in sync with the library.

#[allow(dead_code)]
mod crystal_modes {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/crystal_modes.rs"));
}

#[test]
fn crystal_modes_runs() {
    crystal_modes::run_example().expect("crystal_modes example should run");
}

#[allow(dead_code)]
mod two_segment_gates {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/two_segment_gates.rs"));
}

#[test]
fn two_segment_gates_runs() {
    two_segment_gates::run_example().expect("two_segment_gates example should run");
}

#[allow(dead_code)]
mod diagonal_gate {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/diagonal_gate.rs"));
}

#[test]
fn diagonal_gate_runs() {
    diagonal_gate::run_example().expect("diagonal_gate example should run");
}

#[allow(dead_code)]
mod amplitude_optimization {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/amplitude_optimization.rs"));
}

#[test]
fn amplitude_optimization_runs() {
    amplitude_optimization::run_example().expect("amplitude_optimization example should run");
}

#[allow(dead_code)]
mod micromotion_recalibration {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/micromotion_recalibration.rs"));
}

#[test]
fn micromotion_recalibration_runs() {
    micromotion_recalibration::run_example().expect("micromotion_recalibration example should run");
}

#[allow(dead_code)]
mod readout_mitigation {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/readout_mitigation.rs"));
}

#[test]
fn readout_mitigation_runs() {
    readout_mitigation::run_example().expect("readout_mitigation example should run");
}

#[allow(dead_code)]
mod gate_error_analysis {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/gate_error_analysis.rs"));
}

#[test]
fn gate_error_analysis_runs() {
    gate_error_analysis::run_example().expect("gate_error_analysis example should run");
}

#[allow(dead_code)]
mod calibration_fits {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/calibration_fits.rs"));
}

#[test]
fn calibration_fits_runs() {
    calibration_fits::run_example().expect("calibration_fits example should run");
}

#[allow(dead_code)]
mod config_pipeline {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/config_pipeline.rs"));
}

#[test]
fn config_pipeline_runs() {
    config_pipeline::run_example().expect("config_pipeline example should run");
}
