//! `spnkit` command-line experiment runner.
//!
//! Exit codes: 0 success (or match), 1 no-match, 2 any error.

mod commands;
mod config;
mod simulate;

use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spnkit::{Decision, Error, FingerprintKind, Result, RotationMode, SuppressionConfig};

use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "spnkit", version, about = "Sensor pattern noise simulation, extraction and matching")]
struct Cli {
    /// Experiment seed; overrides the seed in --config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core). Outputs do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Prnu,
    Dark,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rotation {
    CfaTracking,
    ChannelFixed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the capture plans of --config into frames, sidecars and a manifest.
    Simulate {
        /// Overrides output_dir from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Build a fingerprint container from frames (files or directories of .pgm).
    Extract {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(short, long)]
        output: PathBuf,
        /// Disable hot-pixel suppression of dark frames.
        #[arg(long)]
        no_suppress: bool,
        /// Robust z-score above which a pixel counts as hot.
        #[arg(long)]
        hot_sigma: Option<f64>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Correlate a probe against a reference with rotation and half-swap controls.
    Match {
        reference: PathBuf,
        probe: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "cfa-tracking")]
        rotation: Rotation,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Append a `temp_c,rho_0,rho_90,rho_180,rho_270` row here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print one row of a frame as `column,dn` CSV.
    PlotRow {
        frame: PathBuf,
        #[arg(long)]
        row: usize,
        /// Second frame whose same row is emitted alongside.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render one fingerprint channel as an 8-bit PGM with a ±3σ stretch.
    ExportFpImage {
        container: PathBuf,
        /// R, G1, G2, B (G = G1) or 0-3.
        #[arg(long, default_value = "G1")]
        channel: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Simulate { output_dir } => {
            if cli.config.is_none() {
                return Err(Error::Config("simulate needs --config".into()));
            }
            let cfg = ExperimentConfig { output_dir: output_dir.unwrap_or(cfg.output_dir.clone()), ..cfg };
            let manifest = simulate::simulate(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&manifest)?);
        }
        Command::Extract { kind, output, no_suppress, hot_sigma, inputs } => {
            let paths = commands::expand_inputs(&inputs)?;
            let frames = commands::load_frames(&paths)?;
            let suppression = if no_suppress {
                None
            } else {
                let base = cfg.suppression.clone().unwrap_or_default();
                Some(SuppressionConfig { hot_sigma_threshold: hot_sigma.unwrap_or(base.hot_sigma_threshold), ..base })
            };
            let kind = match kind {
                Kind::Prnu => FingerprintKind::Prnu,
                Kind::Dark => FingerprintKind::Dark,
            };
            let fp = commands::extract(kind, &frames, &cfg.wavelet, suppression.as_ref())?;
            commands::write_fingerprint(&fp, &output)?;
            println!("frame_count {}", fp.frame_count);
            for line in commands::norm_diagnostics(&fp) {
                println!("{line}");
            }
        }
        Command::Match { reference, probe, threshold, rotation, json, csv } => {
            let mode = match rotation {
                Rotation::CfaTracking => RotationMode::CfaTracking,
                Rotation::ChannelFixed => RotationMode::ChannelFixed,
            };
            let report = commands::compare(&reference, &probe, threshold, mode)?;
            let text = serde_json::to_string_pretty(&report)?;
            match json {
                Some(path) => fs::write(path, text + "\n")?,
                None => println!("{text}"),
            }
            if let Some(path) = csv {
                commands::append_csv(&report, &path)?;
            }
            eprintln!("{}", report.csv_row());
            if report.decision == Decision::NoMatch {
                return Ok(ExitCode::from(1));
            }
        }
        Command::PlotRow { frame, row, compare, output } => match output {
            Some(path) => {
                let mut buf = Vec::new();
                commands::plot_row(&frame, row, compare.as_deref(), &mut buf)?;
                fs::write(path, buf)?;
            }
            None => commands::plot_row(&frame, row, compare.as_deref(), io::stdout().lock())?,
        },
        Command::ExportFpImage { container, channel, output } => {
            let fp = commands::read_fingerprint(&container)?;
            fs::write(output, commands::export_channel(&fp, &channel)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
