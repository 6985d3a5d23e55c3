//! `mfd`: space-time fractal signatures from the command line.

mod commands;
mod ranges;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfd_core::config::RunConfig;
use mfd_core::{Error, Result};

use crate::ranges::Range;

#[derive(Parser, Debug)]
#[command(
    name = "mfd",
    version,
    about = "Multi-scale fractal dimension signatures of space-time shapes"
)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Precedence, lowest first:
/// built-in defaults, `--preset`, `--config`, individual flags.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Flat key=value file with RunConfig fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Named parameter set: mocap or weizmann.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    r_max: Option<f64>,
    #[arg(long, global = true)]
    grid_len: Option<usize>,
    #[arg(long, global = true)]
    feature_len: Option<usize>,
    /// Gray level at or above which a pixel is foreground.
    #[arg(long, global = true, value_name = "LEVEL")]
    threshold: Option<u8>,
    #[arg(long, global = true, value_name = "C")]
    svm_c: Option<f64>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, or "auto".
    #[arg(long, global = true)]
    threads: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.preset {
            Some(name) => RunConfig::preset(name)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        let flags: [(&str, Option<String>); 10] = [
            ("sigma", self.sigma.map(|v| v.to_string())),
            ("r_max", self.r_max.map(|v| v.to_string())),
            ("grid_len", self.grid_len.map(|v| v.to_string())),
            ("feature_len", self.feature_len.map(|v| v.to_string())),
            ("binarize_threshold", self.threshold.map(|v| v.to_string())),
            ("svm_c", self.svm_c.map(|v| v.to_string())),
            ("folds", self.folds.map(|v| v.to_string())),
            ("runs", self.runs.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("threads", self.threads.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pack a frame directory (PGM/PNG) or MFV1 file into an MFV1 volume.
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Render a synthetic volume, or the labelled motion benchmark.
    Synth(SynthArgs),
    /// Compute per-scale fractal dimension signatures.
    Signature {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Directory for output files. Without it a single input's JSON goes to stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Also write the dilation and log-log curves as CSV.
        #[arg(long)]
        emit_curves: bool,
    },
    /// Repeated stratified cross-validation over a `path,label` manifest.
    Crossval {
        manifest: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Train a model on every manifest entry.
    Train {
        manifest: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Label inputs with a trained model; prints a `path,label` manifest.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cross-validate over a grid of sigma and r_max values.
    Sweep {
        manifest: PathBuf,
        /// Values as `a:b`, `a:b:step` or `a,b,c`.
        #[arg(long = "sigmas", value_parser = ranges::parse, default_value = "1:6")]
        sigmas: Range,
        #[arg(long = "r-maxes", value_parser = ranges::parse, default_value = "10")]
        r_maxes: Range,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check the fast distance transform against brute force on one input.
    EdtVerify {
        input: PathBuf,
        /// Write the field as an MFD1 dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Shape kind (point, line, plane, solid_block, moving_sphere,
    /// oscillating_bar, expanding_blob, zigzag_walker).
    #[arg(long, required_unless_present = "benchmark")]
    kind: Option<String>,
    /// Write the four-class benchmark instead of one volume.
    #[arg(long, conflicts_with = "kind")]
    benchmark: bool,
    /// WIDTHxHEIGHTxDEPTH.
    #[arg(long, value_parser = ranges::parse_extent, default_value = "48x48x32")]
    extent: (usize, usize, usize),
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long)]
    speed: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    period: Option<f64>,
    /// Instances per class for --benchmark.
    #[arg(long, default_value_t = 16)]
    per_class: usize,
    /// Output volume for a single shape.
    #[arg(short, long, required_unless_present = "benchmark")]
    output: Option<PathBuf>,
    /// Output directory for --benchmark (volumes plus manifest.csv).
    #[arg(long, required_if_eq("benchmark", "true"))]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = cli
        .config
        .resolve()
        .and_then(|cfg| mfd_core::par::install(cfg.threads, || commands::run(cli.command, &cfg)));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(2)
        }
    }
}
