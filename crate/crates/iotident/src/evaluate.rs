//! Metrics, repeat experiments and the all-pairs session sweep.
//!
//! Scores follow the usual multi-class definitions: per-class precision,
//! recall and F1 with zero-denominator cases pinned to 0, unweighted
//! (macro) and support-weighted averages, and accuracy as the confusion
//! trace over the total. F1 is the primary headline metric since the
//! datasets are heavily unbalanced.
//!
//! Repeat experiments re-draw the per-class subsample each repeat from a
//! derived seed, fit, predict, aggregate and score; reported values are
//! means with sample standard deviations over the repeats. Repeats and
//! sweep pairs run on a worker pool and merge deterministically in job
//! order; wall-clock timings are measured inside each job.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;
use thiserror::Error;

use crate::aggregate::{aggregate_labels, build_exception_list, ExceptionList, GroupSize};
use crate::dataset::{compatible_pairs, subsample_indices_per_class, Condition, SessionRecord};
use crate::features::{Fingerprint, FEATURE_COUNT};
use crate::mac::MacAddr;
use crate::mix_seed;
use crate::tree::{fit, Hyperparams, TreeError};

const TRAIN_STREAM: u64 = 0x7452_4149;
const TEST_STREAM: u64 = 0x7445_5354;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("true and predicted label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("fingerprint without a label in a labeled dataset")]
    Unlabeled,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

// ---------------------------------------------------------------------------
// Confusion matrix and scalar metrics
// ---------------------------------------------------------------------------

/// Square count matrix; rows are true classes, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class_idx: usize) -> u64 {
        self.counts[class_idx].iter().sum()
    }

    /// Build from class indices (callers that already work in index space).
    pub fn from_indices(
        true_idx: &[u32],
        pred_idx: &[u32],
        classes: &[String],
    ) -> Result<ConfusionMatrix, EvalError> {
        if true_idx.len() != pred_idx.len() {
            return Err(EvalError::LengthMismatch(true_idx.len(), pred_idx.len()));
        }
        let n = classes.len();
        let mut counts = vec![vec![0u64; n]; n];
        for (&t, &p) in true_idx.iter().zip(pred_idx) {
            if t as usize >= n {
                return Err(EvalError::UnknownLabel(format!("#{t}")));
            }
            if p as usize >= n {
                return Err(EvalError::UnknownLabel(format!("#{p}")));
            }
            counts[t as usize][p as usize] += 1;
        }
        Ok(ConfusionMatrix {
            classes: classes.to_vec(),
            counts,
        })
    }
}

/// Tally a confusion matrix from string labels.
pub fn confusion(
    true_labels: &[String],
    predicted_labels: &[String],
    classes: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    if true_labels.len() != predicted_labels.len() {
        return Err(EvalError::LengthMismatch(
            true_labels.len(),
            predicted_labels.len(),
        ));
    }
    let index: BTreeMap<&str, u32> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i as u32))
        .collect();
    let resolve = |label: &String| {
        index
            .get(label.as_str())
            .copied()
            .ok_or_else(|| EvalError::UnknownLabel(label.clone()))
    };
    let t: Vec<u32> = true_labels.iter().map(resolve).collect::<Result<_, _>>()?;
    let p: Vec<u32> = predicted_labels
        .iter()
        .map(resolve)
        .collect::<Result<_, _>>()?;
    ConfusionMatrix::from_indices(&t, &p, classes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub total: u64,
}

/// Per-class and averaged scores from a confusion matrix.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsSummary, EvalError> {
    let n = cm.classes.len();
    let total = cm.total();
    if n == 0 || total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut per_class = Vec::with_capacity(n);
    let mut trace = 0u64;
    for i in 0..n {
        let tp = cm.counts[i][i];
        trace += tp;
        let support = cm.support(i);
        let predicted: u64 = (0..n).map(|r| cm.counts[r][i]).sum();
        let precision = if predicted > 0 {
            tp as f64 / predicted as f64
        } else {
            0.0
        };
        let recall = if support > 0 {
            tp as f64 / support as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            class: cm.classes[i].clone(),
            precision,
            recall,
            f1,
            support,
        });
    }
    let nf = n as f64;
    let totf = total as f64;
    let macro_precision = per_class.iter().map(|c| c.precision).sum::<f64>() / nf;
    let macro_recall = per_class.iter().map(|c| c.recall).sum::<f64>() / nf;
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / nf;
    let weighted = |f: fn(&ClassMetrics) -> f64, rows: &[ClassMetrics]| {
        rows.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / totf
    };
    let weighted_precision = weighted(|c| c.precision, &per_class);
    let weighted_recall = weighted(|c| c.recall, &per_class);
    let weighted_f1 = weighted(|c| c.f1, &per_class);
    Ok(MetricsSummary {
        accuracy: trace as f64 / totf,
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        weighted_precision,
        weighted_recall,
        weighted_f1,
        total,
    })
}

// ---------------------------------------------------------------------------
// Repeat experiments over one condition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Individual,
    Aggregated,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Individual => f.write_str("individual"),
            Mode::Aggregated => f.write_str("aggregated"),
        }
    }
}

/// Mean and sample standard deviation over repeats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn from_samples(samples: &[f64]) -> Stat {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            var.sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimings {
    pub train_s: f64,
    pub test_s: f64,
    pub aggregate_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReportRow {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean support across repeats.
    pub support: f64,
}

/// Means over the repeats of one condition in one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub condition: Condition,
    pub mode: Mode,
    pub accuracy: Stat,
    pub macro_f1: Stat,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub per_class: Vec<ClassReportRow>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub timings: PhaseTimings,
    pub repeats: u32,
    pub seeds: Vec<u64>,
}

impl EvaluationReport {
    /// Wrap a single run's metrics as a one-repeat report (std 0).
    pub fn from_summary(condition: Condition, mode: Mode, summary: &MetricsSummary) -> Self {
        EvaluationReport {
            condition,
            mode,
            accuracy: Stat {
                mean: summary.accuracy,
                std: 0.0,
            },
            macro_f1: Stat {
                mean: summary.macro_f1,
                std: 0.0,
            },
            macro_precision: summary.macro_precision,
            macro_recall: summary.macro_recall,
            per_class: summary
                .per_class
                .iter()
                .map(|c| ClassReportRow {
                    class: c.class.clone(),
                    precision: c.precision,
                    recall: c.recall,
                    f1: c.f1,
                    support: c.support as f64,
                })
                .collect(),
            weighted_precision: summary.weighted_precision,
            weighted_recall: summary.weighted_recall,
            weighted_f1: summary.weighted_f1,
            timings: PhaseTimings::default(),
            repeats: 1,
            seeds: Vec::new(),
        }
    }
}

/// Mean confusion counts across repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanConfusion {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<f64>>,
}

impl MeanConfusion {
    /// A single confusion matrix viewed as a (trivial) mean.
    pub fn from_single(cm: &ConfusionMatrix) -> Self {
        MeanConfusion {
            classes: cm.classes.clone(),
            counts: cm
                .counts
                .iter()
                .map(|row| row.iter().map(|&c| c as f64).collect())
                .collect(),
        }
    }
}

/// Everything run_condition measures for one condition.
#[derive(Debug, Clone)]
pub struct ConditionOutcome {
    pub individual: EvaluationReport,
    pub aggregated: EvaluationReport,
    pub confusion_individual: MeanConfusion,
    pub confusion_aggregated: MeanConfusion,
    /// Exception list observed in the first repeat, for audit output.
    pub exceptions: ExceptionList<String>,
}

/// Knobs shared by `run_condition` and the sweep.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub hyperparams: Hyperparams,
    pub repeats: u32,
    pub base_seed: u64,
    /// Per-repeat per-class subsample fraction of both datasets.
    pub fraction: f64,
    pub group_size: GroupSize,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            hyperparams: Hyperparams::default(),
            repeats: 1,
            base_seed: 0,
            fraction: 1.0,
            group_size: GroupSize::Whole,
        }
    }
}

fn flatten_rows(fps: &[Fingerprint], rows: &[usize]) -> Vec<f64> {
    let mut x = Vec::with_capacity(rows.len() * FEATURE_COUNT);
    for &i in rows {
        x.extend_from_slice(&fps[i].features);
    }
    x
}

fn label_indices(
    fps: &[Fingerprint],
    rows: &[usize],
    classes: &[String],
) -> Result<Vec<u32>, EvalError> {
    let index: BTreeMap<&str, u32> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i as u32))
        .collect();
    rows.iter()
        .map(|&i| {
            let label = fps[i].true_label.as_deref().ok_or(EvalError::Unlabeled)?;
            index
                .get(label)
                .copied()
                .ok_or_else(|| EvalError::UnknownLabel(label.to_string()))
        })
        .collect()
}

struct RepeatResult {
    individual: MetricsSummary,
    aggregated: MetricsSummary,
    cm_individual: ConfusionMatrix,
    cm_aggregated: ConfusionMatrix,
    exceptions: ExceptionList<String>,
    train_s: f64,
    test_s: f64,
    aggregate_s: f64,
}

fn run_one_repeat(
    train: &[Fingerprint],
    test: &[Fingerprint],
    classes: &[String],
    spec: &RunSpec,
    seed: u64,
) -> Result<RepeatResult, EvalError> {
    let mut rng_train = StdRng::seed_from_u64(mix_seed(seed, TRAIN_STREAM));
    let mut rng_test = StdRng::seed_from_u64(mix_seed(seed, TEST_STREAM));
    let train_rows = subsample_indices_per_class(train, spec.fraction, &mut rng_train);
    let test_rows = subsample_indices_per_class(test, spec.fraction, &mut rng_test);

    let y_train = label_indices(train, &train_rows, classes)?;
    let y_test = label_indices(test, &test_rows, classes)?;

    let t0 = Instant::now();
    let x_train = flatten_rows(train, &train_rows);
    let model = fit(
        &x_train,
        FEATURE_COUNT,
        &y_train,
        classes.to_vec(),
        &spec.hyperparams,
        seed,
    )?;
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let x_test = flatten_rows(test, &test_rows);
    let predicted = model.predict(&x_test)?;
    let test_s = t1.elapsed().as_secs_f64();

    let cm_individual = ConfusionMatrix::from_indices(&y_test, &predicted, classes)?;
    let individual = metrics(&cm_individual)?;

    let t2 = Instant::now();
    let pairs: Vec<(MacAddr, u32)> = test_rows
        .iter()
        .zip(&predicted)
        .map(|(&i, &p)| (test[i].src_mac, p))
        .collect();
    let exceptions_idx = build_exception_list(&pairs);
    let finals = aggregate_labels(&pairs, &exceptions_idx, spec.group_size);
    let aggregate_s = t2.elapsed().as_secs_f64();

    let cm_aggregated = ConfusionMatrix::from_indices(&y_test, &finals, classes)?;
    let aggregated = metrics(&cm_aggregated)?;

    // Re-key exception evidence by class name for the audit output.
    let mut named = BTreeMap::new();
    for (mac, labels) in exceptions_idx.evidence() {
        let names: std::collections::BTreeSet<String> = labels
            .iter()
            .map(|&i| classes[i as usize].clone())
            .collect();
        named.insert(*mac, names);
    }
    let mut exceptions = ExceptionList::default();
    for (mac, labels) in named {
        exceptions.insert_evidence(mac, labels);
    }

    Ok(RepeatResult {
        individual,
        aggregated,
        cm_individual,
        cm_aggregated,
        exceptions,
        train_s,
        test_s,
        aggregate_s,
    })
}

fn summarize(
    condition: Condition,
    mode: Mode,
    runs: &[&MetricsSummary],
    classes: &[String],
    timings: PhaseTimings,
    repeats: u32,
    seeds: Vec<u64>,
) -> EvaluationReport {
    let n = runs.len() as f64;
    let accuracy = Stat::from_samples(&runs.iter().map(|r| r.accuracy).collect::<Vec<_>>());
    let macro_f1 = Stat::from_samples(&runs.iter().map(|r| r.macro_f1).collect::<Vec<_>>());
    let per_class = classes
        .iter()
        .enumerate()
        .map(|(i, class)| ClassReportRow {
            class: class.clone(),
            precision: runs.iter().map(|r| r.per_class[i].precision).sum::<f64>() / n,
            recall: runs.iter().map(|r| r.per_class[i].recall).sum::<f64>() / n,
            f1: runs.iter().map(|r| r.per_class[i].f1).sum::<f64>() / n,
            support: runs
                .iter()
                .map(|r| r.per_class[i].support as f64)
                .sum::<f64>()
                / n,
        })
        .collect();
    EvaluationReport {
        condition,
        mode,
        accuracy,
        macro_f1,
        macro_precision: runs.iter().map(|r| r.macro_precision).sum::<f64>() / n,
        macro_recall: runs.iter().map(|r| r.macro_recall).sum::<f64>() / n,
        per_class,
        weighted_precision: runs.iter().map(|r| r.weighted_precision).sum::<f64>() / n,
        weighted_recall: runs.iter().map(|r| r.weighted_recall).sum::<f64>() / n,
        weighted_f1: runs.iter().map(|r| r.weighted_f1).sum::<f64>() / n,
        timings,
        repeats,
        seeds,
    }
}

fn mean_confusion(classes: &[String], matrices: Vec<&ConfusionMatrix>) -> MeanConfusion {
    let n = classes.len();
    let reps = matrices.len() as f64;
    let mut counts = vec![vec![0.0f64; n]; n];
    for cm in matrices {
        for (row_acc, row) in counts.iter_mut().zip(&cm.counts) {
            for (acc, &c) in row_acc.iter_mut().zip(row) {
                *acc += c as f64;
            }
        }
    }
    for row in &mut counts {
        for v in row.iter_mut() {
            *v /= reps;
        }
    }
    MeanConfusion {
        classes: classes.to_vec(),
        counts,
    }
}

/// Run `spec.repeats` independent repeats over one condition's train/test
/// datasets and report Individual and Aggregated results.
pub fn run_condition(
    condition: Condition,
    train: &[Fingerprint],
    test: &[Fingerprint],
    classes: &[String],
    spec: &RunSpec,
) -> Result<ConditionOutcome, EvalError> {
    let seeds: Vec<u64> = (0..spec.repeats)
        .map(|r| spec.base_seed.wrapping_add(u64::from(r)))
        .collect();
    let results: Vec<RepeatResult> = seeds
        .par_iter()
        .map(|&seed| run_one_repeat(train, test, classes, spec, seed))
        .collect::<Result<_, _>>()?;

    let ind: Vec<&MetricsSummary> = results.iter().map(|r| &r.individual).collect();
    let agg: Vec<&MetricsSummary> = results.iter().map(|r| &r.aggregated).collect();
    let n = results.len() as f64;
    let individual_timings = PhaseTimings {
        train_s: results.iter().map(|r| r.train_s).sum::<f64>() / n,
        test_s: results.iter().map(|r| r.test_s).sum::<f64>() / n,
        aggregate_s: 0.0,
    };
    let aggregated_timings = PhaseTimings {
        aggregate_s: results.iter().map(|r| r.aggregate_s).sum::<f64>() / n,
        ..individual_timings
    };

    Ok(ConditionOutcome {
        individual: summarize(
            condition,
            Mode::Individual,
            &ind,
            classes,
            individual_timings,
            spec.repeats,
            seeds.clone(),
        ),
        aggregated: summarize(
            condition,
            Mode::Aggregated,
            &agg,
            classes,
            aggregated_timings,
            spec.repeats,
            seeds,
        ),
        confusion_individual: mean_confusion(
            classes,
            results.iter().map(|r| &r.cm_individual).collect(),
        ),
        confusion_aggregated: mean_confusion(
            classes,
            results.iter().map(|r| &r.cm_aggregated).collect(),
        ),
        exceptions: results[0].exceptions.clone(),
    })
}

// ---------------------------------------------------------------------------
// All-pairs session sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub train_ref: String,
    pub test_ref: String,
    pub condition: Condition,
    pub individual_f1: f64,
    pub aggregated_f1: f64,
    pub accuracy: f64,
}

/// Square per-bitmask F1 grid for heatmap rendering. `cells[i][j]` holds
/// the individual macro F1 of training on session `i` and testing on
/// session `j`; the diagonal is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub bitmask: String,
    pub session_refs: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub heatmaps: Vec<HeatmapGrid>,
}

/// Train/evaluate every compatible ordered session pair once.
pub fn session_sweep(
    sessions: &[SessionRecord],
    class_order: &[String],
    hp: &Hyperparams,
    group_size: GroupSize,
) -> Result<SweepOutcome, EvalError> {
    let pairs = compatible_pairs(sessions, class_order);
    let by_ref: BTreeMap<&str, &SessionRecord> = sessions
        .iter()
        .map(|s| (s.session_ref.as_str(), s))
        .collect();

    let rows: Vec<SweepRow> = pairs
        .par_iter()
        .map(|pair| -> Result<SweepRow, EvalError> {
            // Classes present in this pair's shared bitmask.
            let classes: Vec<String> = class_order
                .iter()
                .zip(&pair.bitmask.0)
                .filter(|(_, &bit)| bit)
                .map(|(c, _)| c.clone())
                .collect();
            let train = &by_ref[pair.train_ref.as_str()].fingerprints;
            let test = &by_ref[pair.test_ref.as_str()].fingerprints;
            let spec = RunSpec {
                hyperparams: hp.clone(),
                repeats: 1,
                base_seed: 0,
                fraction: 1.0,
                group_size,
            };
            let outcome = run_condition(pair.condition, train, test, &classes, &spec)?;
            Ok(SweepRow {
                train_ref: pair.train_ref.clone(),
                test_ref: pair.test_ref.clone(),
                condition: pair.condition,
                individual_f1: outcome.individual.macro_f1.mean,
                aggregated_f1: outcome.aggregated.macro_f1.mean,
                accuracy: outcome.individual.accuracy.mean,
            })
        })
        .collect::<Result<_, _>>()?;

    // Group sessions by bitmask for the per-ID heatmap grids.
    let mut by_mask: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for s in sessions {
        let mask = crate::dataset::session_id(s, class_order).to_string();
        by_mask.entry(mask).or_default().push(s.session_ref.clone());
    }
    let f1_of: BTreeMap<(&str, &str), f64> = rows
        .iter()
        .map(|r| ((r.train_ref.as_str(), r.test_ref.as_str()), r.individual_f1))
        .collect();
    let heatmaps = by_mask
        .into_iter()
        .filter(|(_, refs)| refs.len() >= 2)
        .map(|(bitmask, mut refs)| {
            refs.sort();
            let cells = refs
                .iter()
                .map(|train| {
                    refs.iter()
                        .map(|test| f1_of.get(&(train.as_str(), test.as_str())).copied())
                        .collect()
                })
                .collect();
            HeatmapGrid {
                bitmask,
                session_refs: refs,
                cells,
            }
        })
        .collect();

    Ok(SweepOutcome { rows, heatmaps })
}

/// Grand means per condition over sweep rows (the Table-1-style view).
pub fn sweep_condition_means(rows: &[SweepRow]) -> BTreeMap<Condition, SweepMeans> {
    let mut acc: BTreeMap<Condition, Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        acc.entry(row.condition).or_default().push(row);
    }
    acc.into_iter()
        .map(|(cond, rows)| {
            let n = rows.len() as f64;
            (
                cond,
                SweepMeans {
                    pairs: rows.len(),
                    individual_f1: Stat::from_samples(
                        &rows.iter().map(|r| r.individual_f1).collect::<Vec<_>>(),
                    ),
                    aggregated_f1: Stat::from_samples(
                        &rows.iter().map(|r| r.aggregated_f1).collect::<Vec<_>>(),
                    ),
                    accuracy: rows.iter().map(|r| r.accuracy).sum::<f64>() / n,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMeans {
    pub pairs: usize,
    pub individual_f1: Stat,
    pub aggregated_f1: Stat,
    pub accuracy: f64,
}
