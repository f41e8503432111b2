//! Command-line front end for the device-identification pipeline.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iotident::aggregate::GroupSize;
use iotident::tree::Hyperparams;

use crate::config::{Overrides, RunConfig};
use crate::error::{CmdError, IntoCmdError};

#[derive(Parser)]
#[command(
    name = "iotident",
    version,
    about = "IoT device identification from packet captures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct HyperparamArgs {
    /// Maximum tree depth (0 = unbounded).
    #[arg(long, default_value_t = 0)]
    max_depth: u32,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
}

impl HyperparamArgs {
    fn to_hyperparams(&self) -> Hyperparams {
        Hyperparams {
            max_depth: (self.max_depth > 0).then_some(self.max_depth),
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-packet fingerprints from pcap captures into CSVs.
    Extract {
        /// A pcap file, a directory of .pcap files, or (with --manifest)
        /// the captures root the manifest paths are relative to.
        #[arg(long)]
        captures: PathBuf,
        /// MAC-to-device label map CSV (`mac,label`).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Session manifest CSV; restricts extraction to its sessions.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Label every fingerprint with this class, bypassing the MAC map
        /// (for single-device captures with shared or absent MACs).
        #[arg(long)]
        force_label: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge per-session fingerprints into the four condition datasets.
    Build {
        /// Directory of per-session fingerprint CSVs (from `extract`).
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        adjustments: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the decision tree on a fingerprint CSV.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Canonical class order, one class per line (defaults to the
        /// sorted labels present in the data).
        #[arg(long)]
        classes: Option<PathBuf>,
        #[command(flatten)]
        hyperparams: HyperparamArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict per-packet labels with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply MAC-majority aggregation to a predictions CSV.
    Aggregate {
        #[arg(long)]
        predictions: PathBuf,
        /// `whole` or a positive integer chunk size.
        #[arg(long, default_value = "whole")]
        group_size: String,
        /// Use this exception list instead of detecting one.
        #[arg(long)]
        exceptions: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the applied exception list for audit.
        #[arg(long)]
        exceptions_out: Option<PathBuf>,
    },
    /// Score predictions against a labeled fingerprint CSV.
    Evaluate {
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Model file providing the canonical class order.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Score the raw per-packet column even if finals are present.
        #[arg(long)]
        individual: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline from a config file: extract, build, repeat runs,
    /// reports, and optionally the session sweep.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        group_size: Option<String>,
        #[arg(long)]
        repeats: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train/test every compatible session pair and emit heatmap grids.
    Sweep {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        hyperparams: HyperparamArgs,
        #[arg(long, default_value = "whole")]
        group_size: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic capture corpus for tests and demos.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        devices: usize,
        /// Packets per device per session.
        #[arg(long, default_value_t = 200)]
        packets: usize,
        #[arg(long, default_value_t = 2)]
        sessions_per_state: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn parse_group_size(s: &str) -> Result<GroupSize, CmdError> {
    s.parse::<GroupSize>()
        .map_err(|e| anyhow::anyhow!(e))
        .config_err()
}

fn init_workers() {
    if let Ok(value) = std::env::var("IOTIDENT_WORKERS") {
        if let Ok(n) = value.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Extract {
            captures,
            labels,
            manifest,
            force_label,
            out,
        } => commands::cmd_extract(
            &captures,
            labels.as_deref(),
            manifest.as_deref(),
            force_label.as_deref(),
            &out,
        ),
        Command::Build {
            features,
            manifest,
            labels,
            adjustments,
            fraction,
            seed,
            out,
        } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(anyhow::anyhow!("fraction must be in (0, 1]")).config_err();
            }
            commands::cmd_build(
                &features,
                &manifest,
                &labels,
                adjustments.as_deref(),
                fraction,
                seed,
                &out,
            )
        }
        Command::Train {
            data,
            classes,
            hyperparams,
            seed,
            out,
        } => commands::cmd_train(
            &data,
            classes.as_deref(),
            &hyperparams.to_hyperparams(),
            seed,
            &out,
        ),
        Command::Predict { model, data, out } => commands::cmd_predict(&model, &data, &out),
        Command::Aggregate {
            predictions,
            group_size,
            exceptions,
            out,
            exceptions_out,
        } => commands::cmd_aggregate(
            &predictions,
            parse_group_size(&group_size)?,
            exceptions.as_deref(),
            &out,
            exceptions_out.as_deref(),
        ),
        Command::Evaluate {
            test,
            predictions,
            model,
            individual,
            out,
        } => commands::cmd_evaluate(&test, &predictions, model.as_deref(), individual, &out),
        Command::Run {
            config,
            seed,
            fraction,
            group_size,
            repeats,
            out,
        } => {
            let overrides = Overrides {
                seed,
                fraction,
                group_size,
                repeats,
                out,
            };
            let cfg = RunConfig::load(&config, &overrides)?;
            commands::cmd_run(&cfg)
        }
        Command::Sweep {
            features,
            manifest,
            labels,
            hyperparams,
            group_size,
            out,
        } => commands::cmd_sweep(
            &features,
            &manifest,
            &labels,
            &hyperparams.to_hyperparams(),
            parse_group_size(&group_size)?,
            &out,
        ),
        Command::Synth {
            out,
            devices,
            packets,
            sessions_per_state,
            seed,
        } => commands::cmd_synth(&out, devices, packets, sessions_per_state, seed),
    }
}

fn main() -> ExitCode {
    init_workers();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("iotident: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
