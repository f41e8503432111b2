//! CSV report emission.
//!
//! Every output starts with a `#`-prefixed metadata block (schema version,
//! seeds, hyperparameters, group size) so a report is traceable to the run
//! that produced it. Metric values are printed with six decimals; wall-clock
//! timings go to their own file because they are the one part of a run that
//! can never be byte-reproducible.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::evaluate::{EvaluationReport, HeatmapGrid, MeanConfusion, SweepRow};
use crate::features::write_csv_field;

/// Ordered key/value pairs written as `# key=value` lines ahead of the CSV
/// header.
#[derive(Debug, Clone, Default)]
pub struct ReportMeta {
    entries: Vec<(String, String)>,
}

impl ReportMeta {
    pub fn new() -> ReportMeta {
        ReportMeta::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }
}

fn open(path: impl AsRef<Path>) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Per-class table mirroring the classification-report layout:
/// `class,precision,recall,f1-score,support` plus accuracy/macro/weighted
/// footer rows.
pub fn write_per_class_report<W: Write>(
    mut w: W,
    report: &EvaluationReport,
    meta: &ReportMeta,
) -> io::Result<()> {
    let mut out = meta.render();
    out.push_str("class,precision,recall,f1-score,support\n");
    for row in &report.per_class {
        let mut line = String::new();
        write_csv_field(&mut line, &row.class);
        let _ = write!(
            line,
            ",{:.6},{:.6},{:.6},{:.1}",
            row.precision, row.recall, row.f1, row.support
        );
        out.push_str(&line);
        out.push('\n');
    }
    let _ = writeln!(out, "accuracy,,,{:.6},", report.accuracy.mean);
    let _ = writeln!(
        out,
        "macro avg,{:.6},{:.6},{:.6},",
        report.macro_precision, report.macro_recall, report.macro_f1.mean
    );
    let _ = writeln!(
        out,
        "weighted avg,{:.6},{:.6},{:.6},",
        report.weighted_precision, report.weighted_recall, report.weighted_f1
    );
    w.write_all(out.as_bytes())?;
    w.flush()
}

pub fn write_per_class_report_path(
    path: impl AsRef<Path>,
    report: &EvaluationReport,
    meta: &ReportMeta,
) -> io::Result<()> {
    write_per_class_report(open(path)?, report, meta)
}

/// Condition summary rows (the Table-style grid): one row per
/// (mode, condition) with accuracy and macro-F1 means ± std.
pub fn write_condition_summary<W: Write>(
    mut w: W,
    reports: &[&EvaluationReport],
    meta: &ReportMeta,
) -> io::Result<()> {
    let mut out = meta.render();
    out.push_str("mode,condition,accuracy_mean,accuracy_std,f1_mean,f1_std,repeats\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.mode,
            r.condition,
            r.accuracy.mean,
            r.accuracy.std,
            r.macro_f1.mean,
            r.macro_f1.std,
            r.repeats
        );
    }
    w.write_all(out.as_bytes())?;
    w.flush()
}

pub fn write_condition_summary_path(
    path: impl AsRef<Path>,
    reports: &[&EvaluationReport],
    meta: &ReportMeta,
) -> io::Result<()> {
    write_condition_summary(open(path)?, reports, meta)
}

/// Wall-clock phase timings, one row per (mode, condition). Kept separate
/// from the metric outputs, which must reproduce byte-identically.
pub fn write_timings<W: Write>(
    mut w: W,
    reports: &[&EvaluationReport],
    meta: &ReportMeta,
) -> io::Result<()> {
    let mut out = meta.render();
    out.push_str("mode,condition,train_s,test_s,aggregate_s\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            r.mode, r.condition, r.timings.train_s, r.timings.test_s, r.timings.aggregate_s
        );
    }
    w.write_all(out.as_bytes())?;
    w.flush()
}

pub fn write_timings_path(
    path: impl AsRef<Path>,
    reports: &[&EvaluationReport],
    meta: &ReportMeta,
) -> io::Result<()> {
    write_timings(open(path)?, reports, meta)
}

/// Mean confusion matrix: header row of predicted classes, then one row
/// per true class.
pub fn write_confusion<W: Write>(
    mut w: W,
    cm: &MeanConfusion,
    meta: &ReportMeta,
) -> io::Result<()> {
    let mut out = meta.render();
    out.push_str("true\\predicted");
    for class in &cm.classes {
        out.push(',');
        write_csv_field(&mut out, class);
    }
    out.push('\n');
    for (class, row) in cm.classes.iter().zip(&cm.counts) {
        write_csv_field(&mut out, class);
        for v in row {
            let _ = write!(out, ",{v:.2}");
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    w.flush()
}

pub fn write_confusion_path(
    path: impl AsRef<Path>,
    cm: &MeanConfusion,
    meta: &ReportMeta,
) -> io::Result<()> {
    write_confusion(open(path)?, cm, meta)
}

/// All-pairs sweep rows.
pub fn write_sweep<W: Write>(mut w: W, rows: &[SweepRow], meta: &ReportMeta) -> io::Result<()> {
    let mut out = meta.render();
    out.push_str("train_ref,test_ref,condition,individual_f1,aggregated_f1,accuracy\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6}",
            r.train_ref, r.test_ref, r.condition, r.individual_f1, r.aggregated_f1, r.accuracy
        );
    }
    w.write_all(out.as_bytes())?;
    w.flush()
}

pub fn write_sweep_path(
    path: impl AsRef<Path>,
    rows: &[SweepRow],
    meta: &ReportMeta,
) -> io::Result<()> {
    write_sweep(open(path)?, rows, meta)
}

/// One heatmap grid: labeled CSV plus a gnuplot script that renders the
/// matching `.dat` matrix.
pub fn write_heatmap_files(
    dir: impl AsRef<Path>,
    grid: &HeatmapGrid,
    meta: &ReportMeta,
) -> io::Result<()> {
    let dir = dir.as_ref();
    let stem = format!("heatmap_{}", grid.bitmask);

    let mut csv = meta.render();
    csv.push_str("train\\test");
    for s in &grid.session_refs {
        let _ = write!(csv, ",{s}");
    }
    csv.push('\n');
    let mut dat = String::new();
    for (train, row) in grid.session_refs.iter().zip(&grid.cells) {
        csv.push_str(train);
        for cell in row {
            match cell {
                Some(v) => {
                    let _ = write!(csv, ",{v:.6}");
                    let _ = write!(dat, "{v:.6} ");
                }
                None => {
                    csv.push(',');
                    dat.push_str("NaN ");
                }
            }
        }
        csv.push('\n');
        dat.pop();
        dat.push('\n');
    }
    std::fs::write(dir.join(format!("{stem}.csv")), csv)?;
    std::fs::write(dir.join(format!("{stem}.dat")), dat)?;

    let mut gp = String::new();
    let _ = writeln!(gp, "set title 'Session-pair F1, bitmask {}'", grid.bitmask);
    let _ = writeln!(gp, "set xlabel 'test session'");
    let _ = writeln!(gp, "set ylabel 'train session'");
    let _ = writeln!(gp, "set cbrange [0:1]");
    let _ = writeln!(gp, "set palette defined (0 'white', 1 'dark-red')");
    let _ = writeln!(gp, "set term pngcairo size 900,800");
    let _ = writeln!(gp, "set output '{stem}.png'");
    let _ = writeln!(gp, "plot '{stem}.dat' matrix with image notitle");
    std::fs::write(dir.join(format!("{stem}.gp")), gp)?;
    Ok(())
}
