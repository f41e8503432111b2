//! Run configuration: a flat TOML file plus CLI flag overrides.
//!
//! Precedence is flags > file > defaults. Relative paths in the file are
//! resolved against the file's own directory, so a config directory can be
//! checked in and run from anywhere.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Deserialize;

use iotident::aggregate::GroupSize;
use iotident::dataset::Condition;
use iotident::tree::Hyperparams;

use crate::error::{CmdError, IntoCmdError};

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    captures_root: Option<PathBuf>,
    label_map: Option<PathBuf>,
    session_manifest: Option<PathBuf>,
    adjustments: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    features_dir: Option<PathBuf>,
    fraction: Option<f64>,
    repeats: Option<u32>,
    base_seed: Option<u64>,
    group_size: Option<String>,
    max_depth: Option<u32>,
    min_samples_split: Option<usize>,
    min_samples_leaf: Option<usize>,
    conditions: Option<Vec<String>>,
    sweep: Option<bool>,
}

/// Flag-level overrides for `run`.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub fraction: Option<f64>,
    pub group_size: Option<String>,
    pub repeats: Option<u32>,
    pub out: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub captures_root: PathBuf,
    pub label_map: PathBuf,
    pub session_manifest: PathBuf,
    pub adjustments: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub features_dir: PathBuf,
    pub fraction: f64,
    pub repeats: u32,
    pub base_seed: u64,
    pub group_size: GroupSize,
    pub hyperparams: Hyperparams,
    pub conditions: Vec<Condition>,
    pub sweep: bool,
}

fn resolve(base: &Path, path: PathBuf) -> PathBuf {
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

impl RunConfig {
    pub fn load(config_path: &Path, overrides: &Overrides) -> Result<RunConfig, CmdError> {
        let text = std::fs::read_to_string(config_path)
            .with_context(|| format!("cannot read config {}", config_path.display()))
            .config_err()?;
        let file: RunConfigFile = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", config_path.display()))
            .config_err()?;
        let base = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();

        let require = |field: Option<PathBuf>, name: &str| -> Result<PathBuf, CmdError> {
            field
                .map(|p| resolve(&base, p))
                .ok_or_else(|| anyhow!("config is missing required key `{name}`"))
                .config_err()
        };

        let output_dir = match &overrides.out {
            Some(out) => out.clone(),
            None => require(file.output_dir, "output_dir")?,
        };
        let features_dir = file
            .features_dir
            .map(|p| resolve(&base, p))
            .unwrap_or_else(|| output_dir.join("features"));

        let group_size_text = overrides
            .group_size
            .clone()
            .or(file.group_size)
            .unwrap_or_else(|| "whole".to_string());
        let group_size: GroupSize = group_size_text
            .parse()
            .map_err(|e: String| anyhow!(e))
            .config_err()?;

        let conditions = match file.conditions {
            None => Condition::ALL.to_vec(),
            Some(list) => list
                .iter()
                .map(|s| s.parse::<Condition>().map_err(|e| anyhow!(e)))
                .collect::<Result<Vec<_>, _>>()
                .config_err()?,
        };

        let cfg = RunConfig {
            captures_root: file
                .captures_root
                .map(|p| resolve(&base, p))
                .unwrap_or_else(|| base.clone()),
            label_map: require(file.label_map, "label_map")?,
            session_manifest: require(file.session_manifest, "session_manifest")?,
            adjustments: file.adjustments.map(|p| resolve(&base, p)),
            output_dir,
            features_dir,
            fraction: overrides.fraction.or(file.fraction).unwrap_or(0.1),
            repeats: overrides.repeats.or(file.repeats).unwrap_or(10),
            base_seed: overrides.seed.or(file.base_seed).unwrap_or(42),
            group_size,
            hyperparams: Hyperparams {
                // 0 in the file means unbounded depth.
                max_depth: file.max_depth.filter(|&d| d > 0),
                min_samples_split: file.min_samples_split.unwrap_or(2),
                min_samples_leaf: file.min_samples_leaf.unwrap_or(1),
            },
            conditions,
            sweep: file.sweep.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CmdError> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(anyhow!("fraction must be in (0, 1], got {}", self.fraction)).config_err();
        }
        if self.repeats < 1 {
            return Err(anyhow!("repeats must be at least 1")).config_err();
        }
        if self.hyperparams.min_samples_split < 2 {
            return Err(anyhow!("min_samples_split must be at least 2")).config_err();
        }
        if self.hyperparams.min_samples_leaf < 1 {
            return Err(anyhow!("min_samples_leaf must be at least 1")).config_err();
        }
        if self.conditions.is_empty() {
            return Err(anyhow!("conditions must not be empty")).config_err();
        }
        for (path, name) in [
            (&self.label_map, "label_map"),
            (&self.session_manifest, "session_manifest"),
        ] {
            if !path.exists() {
                return Err(anyhow!("{name} `{}` does not exist", path.display())).config_err();
            }
        }
        if let Some(adj) = &self.adjustments {
            if !adj.exists() {
                return Err(anyhow!("adjustments `{}` does not exist", adj.display())).config_err();
            }
        }
        Ok(())
    }
}
