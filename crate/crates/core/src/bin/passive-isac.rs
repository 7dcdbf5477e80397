use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use passive_isac::harness::{
    run_experiment_with, write_outputs, ExperimentConfig, ExperimentKind, Scale, ValidateOptions,
};
use passive_isac::Error;

#[derive(Parser)]
#[command(
    name = "passive-isac",
    version,
    about = "Passive target detection in multi-static ISAC networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo threshold calibration against the chi-square approximation.
    Calibrate(Common),
    /// Detection probability versus false-alarm probability.
    Roc(Common),
    /// Detection probability versus the communication SINR target.
    Tradeoff(Common),
    /// Iso-detection contours over (SNR_t, SNR_d).
    Contour(Common),
    /// Detection probability versus RCS or transmit power.
    Sweep(Common),
    /// Transmit beampattern of each design.
    Beampattern(Common),
    /// Spatial GLRT map with an OFDM waveform.
    Heatmap(Common),
    /// Numerical self-checks; exits 1 when any check fails.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Include the long Monte Carlo checks.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV tables and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Detection trials per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Target false-alarm probability.
    #[arg(long)]
    pfa: Option<f64>,
    #[arg(long, value_enum)]
    scale: Option<ScaleArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

fn build_config(kind: ExperimentKind, c: &Common) -> Result<ExperimentConfig, Error> {
    let mut config = match &c.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::new(kind),
    };
    config.experiment = kind;
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    if let Some(n) = c.trials {
        config.n_trials = Some(n);
    }
    if let Some(p) = c.pfa {
        config.pfa = Some(p);
    }
    if let Some(s) = c.scale {
        config.scale = match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        };
    }
    if let Some(out) = &c.out {
        config.output = Some(out.clone());
    }
    Ok(config)
}

fn run(command: Command) -> Result<bool, Error> {
    let (kind, common, options) = match command {
        Command::Calibrate(c) => (ExperimentKind::Calibrate, c, ValidateOptions::default()),
        Command::Roc(c) => (ExperimentKind::Roc, c, ValidateOptions::default()),
        Command::Tradeoff(c) => (ExperimentKind::Tradeoff, c, ValidateOptions::default()),
        Command::Contour(c) => (ExperimentKind::Contour, c, ValidateOptions::default()),
        Command::Sweep(c) => (ExperimentKind::Sweep, c, ValidateOptions::default()),
        Command::Beampattern(c) => (ExperimentKind::Beampattern, c, ValidateOptions::default()),
        Command::Heatmap(c) => (ExperimentKind::Heatmap, c, ValidateOptions::default()),
        Command::Validate { common, full } => (
            ExperimentKind::Validate,
            common,
            ValidateOptions {
                full,
                ..ValidateOptions::default()
            },
        ),
    };
    let config = build_config(kind, &common)?;
    let tables = run_experiment_with(&config, &options)?;
    let dir = config
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let manifest = write_outputs(&config, &tables, &dir)?;
    eprintln!(
        "run {} wrote {} table(s) to {}",
        manifest.run_id,
        manifest.tables.len(),
        dir.display()
    );

    let mut ok = true;
    if kind == ExperimentKind::Validate {
        for (_, t) in &tables {
            let passed = t.column("passed").unwrap_or_default();
            let labels = t.labels.clone().unwrap_or_default();
            for (k, p) in passed.iter().enumerate() {
                let mark = if *p > 0.5 { "PASS" } else { "FAIL" };
                println!("[{mark}] {}", labels.get(k).map(String::as_str).unwrap_or(""));
                ok &= *p > 0.5;
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
