// The command pipeline driven by a run configuration: crystal, gate design,
// micromotion report and readout correction, all written to a scratch
// directory.
//
// cargo run --example config_pipeline

use drumhead::cli::{cmd_crystal, cmd_design, cmd_micromotion, cmd_readout_correct, Context, ReadoutOverrides};
use drumhead::config::{RunConfig, DEFAULT_SEED};

const CONFIG: &str = r#"
[trap]
fx_mhz = 0.803
fy_mhz = 2.284
fz_mhz = 0.553

[crystal]
n_ions = 4

[gate]
kind = "diagonal"
pair = ["L", "U"]
gap_us = 2.0

[micromotion]
beam_waist_um = 1.5
amplitudes_nm = { "0" = 420.0 }

[readout]
n_ions = 2
adjacency = [[0, 1]]
"#;

pub fn run_example() -> drumhead::Result<()> {
    let dir = std::env::temp_dir().join("drumhead_pipeline");
    let mut config = RunConfig::from_toml(CONFIG)?;
    config.gate.samples_per_segment = 16;
    let ctx = Context::new(config, dir.clone(), DEFAULT_SEED);
    let counts = dir.join("counts.csv");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&counts, "bitstring,count\n00,470\n11,455\n10,40\n01,35\n")?;
    let reports = [
        cmd_crystal(&ctx)?,
        cmd_design(&ctx)?,
        cmd_micromotion(&ctx)?,
        cmd_readout_correct(&ctx, &ReadoutOverrides { counts: Some(counts), mc_samples: Some(200), ..Default::default() })?,
    ];
    for r in &reports {
        for line in &r.summary {
            println!("{line}");
        }
        for f in &r.files {
            println!("  wrote {}", f.display());
        }
    }
    Ok(())
}

fn main() -> drumhead::Result<()> {
    run_example()
}
