use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use drumhead::cli::{self, Context, ReadoutOverrides};
use drumhead::config::{RunConfig, DEFAULT_SEED, OUT_ENV};

#[derive(Parser)]
#[command(name = "drumhead", version, about = "Individually addressed MS gates on 2D ion crystals")]
struct Args {
    /// TOML or JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// worker threads; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// print every file format and exit
    #[arg(long)]
    schema: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// equilibrium positions and transverse modes
    Crystal,
    /// gate sequence, trajectory and phase report
    Design,
    /// optimized infidelity over a detuning window
    Scan,
    /// error budget under the configured noise
    Errors,
    /// Rabi reduction curve and intensity recalibration
    Micromotion,
    /// maximum-likelihood populations from raw counts
    ReadoutCorrect {
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long)]
        mc_samples: Option<usize>,
    },
}

fn run(args: Args) -> drumhead::Result<()> {
    if args.schema {
        println!("{}", drumhead::io::SCHEMA);
        return Ok(());
    }
    let Some(command) = args.command else {
        return Err(drumhead::Error::Config("no subcommand given; see --help".into()));
    };
    if args.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build_global()
            .map_err(|e| drumhead::Error::Config(e.to_string()))?;
    }
    let config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = args.out.or_else(|| config.output.directory.clone()).unwrap_or_else(|| PathBuf::from("drumhead_out"));
    let ctx = Context::new(config, out, args.seed);
    let report = match command {
        Command::Crystal => cli::cmd_crystal(&ctx)?,
        Command::Design => cli::cmd_design(&ctx)?,
        Command::Scan => cli::cmd_scan(&ctx)?,
        Command::Errors => cli::cmd_errors(&ctx)?,
        Command::Micromotion => cli::cmd_micromotion(&ctx)?,
        Command::ReadoutCorrect { matrix, counts, mc_samples } => {
            cli::cmd_readout_correct(&ctx, &ReadoutOverrides { matrix, counts, mc_samples })?
        }
    };
    for line in &report.summary {
        println!("{line}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
