//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;

use iotident::aggregate::{
    aggregate_records, read_exceptions_csv, read_predictions_csv, write_exceptions_csv_path,
    write_predictions_csv, GroupSize, PredictionRecord,
};
use iotident::dataset::{
    apply_adjustments, build_condition_datasets, read_adjustments_csv_path, read_manifest_csv_path,
    Condition, DatasetKind, LabelMap, ManifestEntry, SessionRecord,
};
use iotident::decode::decode_record;
use iotident::evaluate::{
    confusion, metrics, run_condition, session_sweep, sweep_condition_means, EvaluationReport,
    MeanConfusion, Mode, RunSpec,
};
use iotident::features::{
    extract_fingerprint, read_fingerprints_csv_path, write_fingerprints_csv_path, ExtractError,
    Fingerprint, FingerprintCsvWriter, SCHEMA_VERSION,
};
use iotident::pcap::open_capture;
use iotident::report::{
    write_condition_summary_path, write_confusion_path, write_heatmap_files,
    write_per_class_report_path, write_sweep_path, write_timings_path, ReportMeta,
};
use iotident::synth::{generate_corpus, SynthConfig};
use iotident::tree::{fit, Hyperparams, TreeModel, MODEL_SCHEMA_VERSION};

use crate::config::RunConfig;
use crate::error::{CmdError, IntoCmdError};

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone)]
pub struct SessionStats {
    pub session_ref: String,
    pub packets: u64,
    pub extracted: u64,
    pub no_src_mac: u64,
    pub ignored: u64,
    pub unknown: u64,
    pub decode_warnings: u64,
}

enum LabelMode<'a> {
    Map(&'a LabelMap),
    Forced(&'a str),
}

fn extract_session(
    capture: &Path,
    session_ref: &str,
    labels: &LabelMode<'_>,
    out_csv: &Path,
) -> Result<SessionStats, CmdError> {
    let cap = open_capture(capture).data_err()?;
    // Stream into a partial file and rename on success, so an aborted
    // extraction is never mistaken for a finished one on resume.
    let partial = out_csv.with_extension("csv.partial");
    let file = File::create(&partial)
        .with_context(|| format!("cannot create {}", partial.display()))
        .internal_err()?;
    let mut writer = FingerprintCsvWriter::new(BufWriter::new(file)).internal_err()?;
    let mut stats = SessionStats {
        session_ref: session_ref.to_string(),
        ..SessionStats::default()
    };
    for record in cap.records().data_err()? {
        let record = record.data_err()?;
        stats.packets += 1;
        let pkt = decode_record(&record, cap.link_type);
        stats.decode_warnings += u64::from(pkt.warnings);
        let mut fp = match extract_fingerprint(&pkt, session_ref) {
            Ok(fp) => fp,
            Err(ExtractError::NoSourceMac) => {
                stats.no_src_mac += 1;
                continue;
            }
        };
        match labels {
            LabelMode::Forced(label) => fp.true_label = Some((*label).to_string()),
            LabelMode::Map(map) => {
                if map.is_ignored(&fp.src_mac) {
                    stats.ignored += 1;
                    continue;
                }
                match map.lookup(&fp.src_mac) {
                    Some(label) => fp.true_label = Some(label.to_string()),
                    None => {
                        stats.unknown += 1;
                        continue;
                    }
                }
            }
        }
        writer.write(&fp).internal_err()?;
        stats.extracted += 1;
    }
    writer.finish().internal_err()?;
    std::fs::rename(&partial, out_csv).internal_err()?;
    Ok(stats)
}

fn capture_list(
    captures: &Path,
    manifest: Option<&Path>,
) -> Result<Vec<(String, PathBuf)>, CmdError> {
    if let Some(manifest) = manifest {
        let entries = read_manifest_csv_path(manifest).data_err()?;
        return Ok(entries
            .into_iter()
            .map(|e| {
                let path = if e.path.is_absolute() {
                    e.path
                } else {
                    captures.join(e.path)
                };
                (e.session_ref, path)
            })
            .collect());
    }
    if captures.is_file() {
        let stem = captures
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "capture".to_string());
        return Ok(vec![(stem, captures.to_path_buf())]);
    }
    let mut found = Vec::new();
    for entry in std::fs::read_dir(captures)
        .with_context(|| format!("cannot list {}", captures.display()))
        .config_err()?
    {
        let path = entry.internal_err()?.path();
        if path.extension().is_some_and(|e| e == "pcap") {
            let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
            found.push((stem, path));
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(anyhow!("no .pcap files under {}", captures.display())).config_err();
    }
    Ok(found)
}

fn write_drop_report(path: &Path, stats: &[SessionStats]) -> Result<(), CmdError> {
    let mut out =
        String::from("session_ref,packets,extracted,no_src_mac,ignored,unknown,decode_warnings\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.session_ref,
            s.packets,
            s.extracted,
            s.no_src_mac,
            s.ignored,
            s.unknown,
            s.decode_warnings
        ));
    }
    std::fs::write(path, out).internal_err()
}

pub fn cmd_extract(
    captures: &Path,
    labels: Option<&Path>,
    manifest: Option<&Path>,
    force_label: Option<&str>,
    out: &Path,
) -> Result<(), CmdError> {
    let map = match (labels, force_label) {
        (_, Some(_)) => None,
        (Some(path), None) => Some(LabelMap::from_csv_path(path).data_err()?),
        (None, None) => {
            return Err(anyhow!("either --labels or --force-label is required")).config_err()
        }
    };
    std::fs::create_dir_all(out).internal_err()?;
    let jobs = capture_list(captures, manifest)?;

    let results: Vec<(String, Result<SessionStats, CmdError>)> = jobs
        .par_iter()
        .map(|(session_ref, path)| {
            let mode = match (&map, force_label) {
                (_, Some(label)) => LabelMode::Forced(label),
                (Some(map), None) => LabelMode::Map(map),
                (None, None) => unreachable!(),
            };
            let out_csv = out.join(format!("{session_ref}.csv"));
            (
                session_ref.clone(),
                extract_session(path, session_ref, &mode, &out_csv),
            )
        })
        .collect();

    let mut stats = Vec::new();
    let mut failures = 0usize;
    for (session_ref, result) in results {
        match result {
            Ok(s) => {
                eprintln!(
                    "extracted {}: {} packets -> {} fingerprints ({} dropped)",
                    s.session_ref,
                    s.packets,
                    s.extracted,
                    s.no_src_mac + s.ignored + s.unknown
                );
                stats.push(s);
            }
            Err(e) => {
                failures += 1;
                eprintln!("failed {session_ref}: {e}");
            }
        }
    }
    write_drop_report(&out.join("drop_report.csv"), &stats)?;
    if failures > 0 {
        return Err(anyhow!("{failures} capture(s) failed to extract")).data_err();
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

fn load_sessions(
    features_dir: &Path,
    entries: &[ManifestEntry],
) -> Result<Vec<SessionRecord>, CmdError> {
    entries
        .par_iter()
        .map(|entry| {
            let csv = features_dir.join(format!("{}.csv", entry.session_ref));
            let fingerprints = read_fingerprints_csv_path(&csv)
                .map_err(|e| anyhow!("loading {}: {e}", csv.display()))
                .data_err()?;
            Ok(SessionRecord {
                session_ref: entry.session_ref.clone(),
                state: entry.state,
                date: entry.date.clone(),
                fingerprints,
            })
        })
        .collect()
}

struct BuiltDatasets {
    classes: Vec<String>,
    set: iotident::dataset::ConditionSet,
}

/// Merge loaded sessions (consumed) into the four datasets and apply the
/// adjustment rules.
fn build_datasets(
    sessions: Vec<SessionRecord>,
    entries: &[ManifestEntry],
    map: &LabelMap,
    adjustments_path: Option<&Path>,
    fraction: f64,
    seed: u64,
) -> Result<BuiltDatasets, CmdError> {
    let mut classes = map.classes();
    let assignment: BTreeMap<String, DatasetKind> = entries
        .iter()
        .map(|e| (e.session_ref.clone(), e.dataset_kind()))
        .collect();
    let mut set = build_condition_datasets(sessions, &assignment, fraction, seed).data_err()?;
    if let Some(path) = adjustments_path {
        let rules = read_adjustments_csv_path(path).data_err()?;
        apply_adjustments(&mut set, &rules, &mut classes).data_err()?;
    }
    Ok(BuiltDatasets { classes, set })
}

pub fn cmd_build(
    features_dir: &Path,
    manifest_path: &Path,
    labels_path: &Path,
    adjustments_path: Option<&Path>,
    fraction: f64,
    seed: u64,
    out: &Path,
) -> Result<(), CmdError> {
    std::fs::create_dir_all(out).internal_err()?;
    let entries = read_manifest_csv_path(manifest_path).data_err()?;
    if entries.is_empty() {
        return Err(anyhow!("manifest has no sessions")).data_err();
    }
    let map = LabelMap::from_csv_path(labels_path).data_err()?;
    let sessions = load_sessions(features_dir, &entries)?;
    let built = build_datasets(sessions, &entries, &map, adjustments_path, fraction, seed)?;
    for kind in DatasetKind::ALL {
        let ds = built.set.get(kind);
        let path = out.join(format!("{kind}.csv"));
        write_fingerprints_csv_path(&path, &ds.fingerprints).internal_err()?;
        eprintln!(
            "built {kind}: {} fingerprints from {} sessions",
            ds.fingerprints.len(),
            ds.provenance.len()
        );
    }
    std::fs::write(out.join("classes.txt"), built.classes.join("\n") + "\n").internal_err()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// train / predict / aggregate / evaluate
// ---------------------------------------------------------------------------

fn classes_of(fps: &[Fingerprint]) -> Vec<String> {
    let set: std::collections::BTreeSet<String> =
        fps.iter().filter_map(|f| f.true_label.clone()).collect();
    set.into_iter().collect()
}

fn read_classes_file(path: &Path) -> Result<Vec<String>, CmdError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .config_err()?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn to_matrix(fps: &[Fingerprint]) -> Vec<f64> {
    let mut x = Vec::with_capacity(fps.len() * iotident::features::FEATURE_COUNT);
    for fp in fps {
        x.extend_from_slice(&fp.features);
    }
    x
}

pub fn cmd_train(
    data: &Path,
    classes_file: Option<&Path>,
    hp: &Hyperparams,
    seed: u64,
    out: &Path,
) -> Result<(), CmdError> {
    let fps = read_fingerprints_csv_path(data).data_err()?;
    if fps.is_empty() {
        return Err(anyhow!("training data is empty")).data_err();
    }
    let classes = match classes_file {
        Some(path) => read_classes_file(path)?,
        None => classes_of(&fps),
    };
    if classes.len() < 2 {
        eprintln!(
            "warning: training data has {} class(es); the tree degenerates to one leaf",
            classes.len()
        );
    }
    let index: BTreeMap<&str, u32> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i as u32))
        .collect();
    let y: Vec<u32> = fps
        .iter()
        .map(|f| {
            let label = f
                .true_label
                .as_deref()
                .ok_or_else(|| anyhow!("unlabeled fingerprint in training data"))?;
            index
                .get(label)
                .copied()
                .ok_or_else(|| anyhow!("label `{label}` not in class list"))
        })
        .collect::<Result<_, _>>()
        .data_err()?;
    let x = to_matrix(&fps);
    let model = fit(&x, iotident::features::FEATURE_COUNT, &y, classes, hp, seed).data_err()?;
    model.save(out).internal_err()?;
    eprintln!(
        "trained on {} fingerprints: depth {}, {} leaves, {} classes -> {}",
        fps.len(),
        model.depth(),
        model.n_leaves(),
        model.class_order.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_predict(model_path: &Path, data: &Path, out: &Path) -> Result<(), CmdError> {
    let model = TreeModel::load(model_path).data_err()?;
    let fps = read_fingerprints_csv_path(data).data_err()?;
    let x = to_matrix(&fps);
    let labels = model.predict_labels(&x).data_err()?;
    let records: Vec<PredictionRecord> = fps
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(i, (fp, label))| PredictionRecord {
            index: i as u64,
            mac: fp.src_mac,
            predicted: (*label).to_string(),
            final_label: None,
        })
        .collect();
    let file = File::create(out).internal_err()?;
    write_predictions_csv(BufWriter::new(file), &records).internal_err()?;
    eprintln!("predicted {} rows -> {}", records.len(), out.display());
    Ok(())
}

pub fn cmd_aggregate(
    predictions: &Path,
    group_size: GroupSize,
    exceptions_in: Option<&Path>,
    out: &Path,
    exceptions_out: Option<&Path>,
) -> Result<(), CmdError> {
    let mut records = read_predictions_csv(BufReader::new(
        File::open(predictions)
            .with_context(|| format!("cannot open {}", predictions.display()))
            .config_err()?,
    ))
    .data_err()?;
    let supplied = match exceptions_in {
        Some(path) => {
            Some(read_exceptions_csv(BufReader::new(File::open(path).config_err()?)).data_err()?)
        }
        None => None,
    };
    let exceptions = aggregate_records(&mut records, supplied, group_size);
    let file = File::create(out).internal_err()?;
    write_predictions_csv(BufWriter::new(file), &records).internal_err()?;
    if let Some(path) = exceptions_out {
        write_exceptions_csv_path(path, &exceptions).internal_err()?;
    }
    eprintln!(
        "aggregated {} rows (group size {group_size}), {} exception MAC(s)",
        records.len(),
        exceptions.len()
    );
    Ok(())
}

pub fn cmd_evaluate(
    test: &Path,
    predictions: &Path,
    model: Option<&Path>,
    individual: bool,
    out: &Path,
) -> Result<(), CmdError> {
    let fps = read_fingerprints_csv_path(test).data_err()?;
    let records =
        read_predictions_csv(BufReader::new(File::open(predictions).config_err()?)).data_err()?;
    if fps.len() != records.len() {
        return Err(anyhow!(
            "test set has {} rows but predictions have {}",
            fps.len(),
            records.len()
        ))
        .data_err();
    }
    let truth: Vec<String> = fps
        .iter()
        .map(|f| {
            f.true_label
                .clone()
                .ok_or_else(|| anyhow!("unlabeled fingerprint in test data"))
        })
        .collect::<Result<_, _>>()
        .data_err()?;
    let predicted: Vec<String> = records
        .iter()
        .map(|r| {
            if individual {
                r.predicted.clone()
            } else {
                r.final_label.clone().unwrap_or_else(|| r.predicted.clone())
            }
        })
        .collect();
    let classes = match model {
        Some(path) => TreeModel::load(path).data_err()?.class_order,
        None => {
            let mut set: std::collections::BTreeSet<String> = truth.iter().cloned().collect();
            set.extend(predicted.iter().cloned());
            set.into_iter().collect()
        }
    };
    let cm = confusion(&truth, &predicted, &classes).data_err()?;
    let summary = metrics(&cm).data_err()?;

    std::fs::create_dir_all(out).internal_err()?;
    let mode = if individual {
        Mode::Individual
    } else {
        Mode::Aggregated
    };
    let report = EvaluationReport::from_summary(Condition::AA, mode, &summary);
    let mut meta = ReportMeta::new();
    meta.push("feature_schema_version", SCHEMA_VERSION)
        .push("mode", mode);
    write_per_class_report_path(out.join("per_class.csv"), &report, &meta).internal_err()?;
    write_confusion_path(
        out.join("confusion.csv"),
        &MeanConfusion::from_single(&cm),
        &meta,
    )
    .internal_err()?;
    println!(
        "accuracy {:.4}  macro-F1 {:.4}  weighted-F1 {:.4}  ({} packets, {} classes)",
        summary.accuracy,
        summary.macro_f1,
        summary.weighted_f1,
        summary.total,
        classes.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

const FNV64_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;

fn fnv1a64_update(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

fn file_hash(path: &Path) -> Result<u64, CmdError> {
    let mut file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .internal_err()?;
    let mut hash = FNV64_OFFSET;
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).internal_err()?;
        if n == 0 {
            break;
        }
        hash = fnv1a64_update(hash, &buf[..n]);
    }
    Ok(hash)
}

fn run_meta(cfg: &RunConfig) -> ReportMeta {
    let mut meta = ReportMeta::new();
    meta.push("feature_schema_version", SCHEMA_VERSION)
        .push("model_schema_version", MODEL_SCHEMA_VERSION)
        .push("base_seed", cfg.base_seed)
        .push("repeats", cfg.repeats)
        .push(
            "seeds",
            format!(
                "{}..={}",
                cfg.base_seed,
                cfg.base_seed.wrapping_add(u64::from(cfg.repeats) - 1)
            ),
        )
        .push("fraction", cfg.fraction)
        .push("group_size", cfg.group_size)
        .push(
            "max_depth",
            cfg.hyperparams
                .max_depth
                .map_or("unbounded".to_string(), |d| d.to_string()),
        )
        .push("min_samples_split", cfg.hyperparams.min_samples_split)
        .push("min_samples_leaf", cfg.hyperparams.min_samples_leaf);
    meta
}

pub fn cmd_run(cfg: &RunConfig) -> Result<(), CmdError> {
    std::fs::create_dir_all(&cfg.output_dir).internal_err()?;
    std::fs::create_dir_all(&cfg.features_dir).internal_err()?;

    // Stage 1: extraction, for sessions whose feature CSV is missing.
    let entries = read_manifest_csv_path(&cfg.session_manifest).data_err()?;
    if entries.is_empty() {
        return Err(anyhow!("manifest has no sessions")).data_err();
    }
    let map = LabelMap::from_csv_path(&cfg.label_map).data_err()?;
    let missing: Vec<&ManifestEntry> = entries
        .iter()
        .filter(|e| {
            !cfg.features_dir
                .join(format!("{}.csv", e.session_ref))
                .exists()
        })
        .collect();
    if !missing.is_empty() {
        eprintln!("extracting {} session(s)", missing.len());
        let stats: Vec<SessionStats> = missing
            .par_iter()
            .map(|entry| {
                let capture = if entry.path.is_absolute() {
                    entry.path.clone()
                } else {
                    cfg.captures_root.join(&entry.path)
                };
                let out_csv = cfg.features_dir.join(format!("{}.csv", entry.session_ref));
                extract_session(
                    &capture,
                    &entry.session_ref,
                    &LabelMode::Map(&map),
                    &out_csv,
                )
            })
            .collect::<Result<_, _>>()?;
        write_drop_report(&cfg.features_dir.join("drop_report.csv"), &stats)?;
    }

    // Stage 2: the optional all-pairs sweep, over the raw (unadjusted)
    // sessions, before the merge consumes them.
    let sessions = load_sessions(&cfg.features_dir, &entries)?;
    let reports_dir = cfg.output_dir.join("reports");
    std::fs::create_dir_all(&reports_dir).internal_err()?;
    let meta = run_meta(cfg);
    if cfg.sweep {
        let sweep_classes = map.classes();
        let outcome = session_sweep(&sessions, &sweep_classes, &cfg.hyperparams, cfg.group_size)
            .data_err()?;
        write_sweep_path(reports_dir.join("sweep.csv"), &outcome.rows, &meta).internal_err()?;
        let means = sweep_condition_means(&outcome.rows);
        let mut out = String::from(
            "condition,pairs,individual_f1_mean,individual_f1_std,aggregated_f1_mean,aggregated_f1_std,accuracy_mean\n",
        );
        for (cond, m) in &means {
            out.push_str(&format!(
                "{cond},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                m.pairs,
                m.individual_f1.mean,
                m.individual_f1.std,
                m.aggregated_f1.mean,
                m.aggregated_f1.std,
                m.accuracy
            ));
        }
        std::fs::write(reports_dir.join("sweep_means.csv"), out).internal_err()?;
        let heatmap_dir = reports_dir.join("heatmaps");
        std::fs::create_dir_all(&heatmap_dir).internal_err()?;
        for grid in &outcome.heatmaps {
            write_heatmap_files(&heatmap_dir, grid, &meta).internal_err()?;
        }
        println!(
            "sweep: {} pairs over {} grids",
            outcome.rows.len(),
            outcome.heatmaps.len()
        );
    }

    // Stage 3: merge sessions (consumed) into the four condition datasets.
    // The merge itself is unsampled; the per-repeat subsample inside
    // run_condition realizes the configured fraction.
    let built = build_datasets(
        sessions,
        &entries,
        &map,
        cfg.adjustments.as_deref(),
        1.0,
        cfg.base_seed,
    )?;
    let datasets_dir = cfg.output_dir.join("datasets");
    std::fs::create_dir_all(&datasets_dir).internal_err()?;
    for kind in DatasetKind::ALL {
        write_fingerprints_csv_path(
            datasets_dir.join(format!("{kind}.csv")),
            &built.set.get(kind).fingerprints,
        )
        .internal_err()?;
    }
    std::fs::write(
        datasets_dir.join("classes.txt"),
        built.classes.join("\n") + "\n",
    )
    .internal_err()?;

    // Stage 4: repeat experiments per condition.
    let spec = RunSpec {
        hyperparams: cfg.hyperparams.clone(),
        repeats: cfg.repeats,
        base_seed: cfg.base_seed,
        fraction: cfg.fraction,
        group_size: cfg.group_size,
    };
    let mut all_reports: Vec<EvaluationReport> = Vec::new();
    for &condition in &cfg.conditions {
        let train = &built.set.get(condition.train_kind()).fingerprints;
        let test = &built.set.get(condition.test_kind()).fingerprints;
        let outcome = run_condition(condition, train, test, &built.classes, &spec).data_err()?;
        for (report, cm) in [
            (&outcome.individual, &outcome.confusion_individual),
            (&outcome.aggregated, &outcome.confusion_aggregated),
        ] {
            write_per_class_report_path(
                reports_dir.join(format!("per_class_{condition}_{}.csv", report.mode)),
                report,
                &meta,
            )
            .internal_err()?;
            write_confusion_path(
                reports_dir.join(format!("confusion_{condition}_{}.csv", report.mode)),
                cm,
                &meta,
            )
            .internal_err()?;
        }
        write_exceptions_csv_path(
            reports_dir.join(format!("exceptions_{condition}.csv")),
            &outcome.exceptions,
        )
        .internal_err()?;
        println!(
            "{condition}: individual F1 {:.3}±{:.3}, aggregated F1 {:.3}±{:.3}",
            outcome.individual.macro_f1.mean,
            outcome.individual.macro_f1.std,
            outcome.aggregated.macro_f1.mean,
            outcome.aggregated.macro_f1.std
        );
        all_reports.push(outcome.individual);
        all_reports.push(outcome.aggregated);
    }
    let refs: Vec<&EvaluationReport> = all_reports.iter().collect();
    write_condition_summary_path(reports_dir.join("conditions.csv"), &refs, &meta)
        .internal_err()?;
    write_timings_path(reports_dir.join("timings.csv"), &refs, &meta).internal_err()?;

    // Stage 5: the reproducibility manifest (inputs, seeds, versions).
    let mut manifest = String::new();
    manifest.push_str(&format!("tool_version={}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str(&format!("feature_schema_version={SCHEMA_VERSION}\n"));
    manifest.push_str(&format!("model_schema_version={MODEL_SCHEMA_VERSION}\n"));
    manifest.push_str(&format!("base_seed={}\n", cfg.base_seed));
    manifest.push_str(&format!("repeats={}\n", cfg.repeats));
    manifest.push_str(&format!("fraction={}\n", cfg.fraction));
    manifest.push_str(&format!("group_size={}\n", cfg.group_size));
    manifest.push_str(&format!(
        "max_depth={}\n",
        cfg.hyperparams
            .max_depth
            .map_or("unbounded".to_string(), |d| d.to_string())
    ));
    manifest.push_str(&format!(
        "min_samples_split={}\n",
        cfg.hyperparams.min_samples_split
    ));
    manifest.push_str(&format!(
        "min_samples_leaf={}\n",
        cfg.hyperparams.min_samples_leaf
    ));
    manifest.push_str(&format!(
        "conditions={}\n",
        cfg.conditions
            .iter()
            .map(Condition::to_string)
            .collect::<Vec<_>>()
            .join(",")
    ));
    manifest.push_str(&format!("sweep={}\n", cfg.sweep));
    manifest.push_str(&format!(
        "hash_label_map={:016x}\n",
        file_hash(&cfg.label_map)?
    ));
    manifest.push_str(&format!(
        "hash_session_manifest={:016x}\n",
        file_hash(&cfg.session_manifest)?
    ));
    if let Some(adj) = &cfg.adjustments {
        manifest.push_str(&format!("hash_adjustments={:016x}\n", file_hash(adj)?));
    }
    for entry in &entries {
        let csv = cfg.features_dir.join(format!("{}.csv", entry.session_ref));
        manifest.push_str(&format!(
            "hash_features_{}={:016x}\n",
            entry.session_ref,
            file_hash(&csv)?
        ));
    }
    std::fs::write(cfg.output_dir.join("run_manifest.txt"), manifest).internal_err()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep / synth
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
pub fn cmd_sweep(
    features_dir: &Path,
    manifest_path: &Path,
    labels_path: &Path,
    hp: &Hyperparams,
    group_size: GroupSize,
    out: &Path,
) -> Result<(), CmdError> {
    let entries = read_manifest_csv_path(manifest_path).data_err()?;
    let map = LabelMap::from_csv_path(labels_path).data_err()?;
    let sessions = load_sessions(features_dir, &entries)?;
    let classes = map.classes();
    let outcome = session_sweep(&sessions, &classes, hp, group_size).data_err()?;

    std::fs::create_dir_all(out).internal_err()?;
    let mut meta = ReportMeta::new();
    meta.push("feature_schema_version", SCHEMA_VERSION)
        .push("group_size", group_size);
    write_sweep_path(out.join("sweep.csv"), &outcome.rows, &meta).internal_err()?;
    let means = sweep_condition_means(&outcome.rows);
    let mut text = String::from(
        "condition,pairs,individual_f1_mean,individual_f1_std,aggregated_f1_mean,aggregated_f1_std,accuracy_mean\n",
    );
    for (cond, m) in &means {
        text.push_str(&format!(
            "{cond},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            m.pairs,
            m.individual_f1.mean,
            m.individual_f1.std,
            m.aggregated_f1.mean,
            m.aggregated_f1.std,
            m.accuracy
        ));
    }
    std::fs::write(out.join("sweep_means.csv"), text).internal_err()?;
    let heatmap_dir = out.join("heatmaps");
    std::fs::create_dir_all(&heatmap_dir).internal_err()?;
    for grid in &outcome.heatmaps {
        write_heatmap_files(&heatmap_dir, grid, &meta).internal_err()?;
    }
    println!(
        "sweep: {} compatible pairs, {} heatmap grids -> {}",
        outcome.rows.len(),
        outcome.heatmaps.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_synth(
    out: &Path,
    devices: usize,
    packets: usize,
    sessions_per_state: usize,
    seed: u64,
) -> Result<(), CmdError> {
    let cfg = SynthConfig {
        devices,
        packets_per_device: packets,
        sessions_per_state,
        seed,
    };
    let corpus = generate_corpus(out, &cfg).internal_err()?;
    println!(
        "synthesized {} devices x {} sessions -> {}",
        corpus.roster.len(),
        corpus.manifest.len(),
        out.display()
    );
    for entry in &corpus.manifest {
        println!("  {} ({})", entry.session_ref, entry.path.display());
    }
    Ok(())
}
