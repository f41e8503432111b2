//! MAC-majority aggregation of per-packet predictions.
//!
//! Two steps. First, for every predicted label the predominant MAC address
//! is found; a MAC that is predominant for two or more labels goes on the
//! *exception list* — the telltale of several devices sharing one address
//! behind a gateway, where majority overwriting would destroy information.
//! Second, the predictions of every non-exception MAC are grouped (whole
//! MAC or fixed-size consecutive chunks) and each group is overwritten
//! with its majority label. Exception MACs keep their per-packet
//! predictions untouched.
//!
//! Aggregation assumes benign traffic: an adversary spoofing a busy MAC
//! could steer whole groups, so exception lists are emitted for audit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::num::NonZeroUsize;
use std::str::FromStr;

use crate::features::{split_csv_line, write_csv_field, CsvError};
use crate::mac::MacAddr;

/// How predictions of one MAC are grouped before majority voting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSize {
    /// One group per MAC address.
    Whole,
    /// Consecutive groups of this many records; the last may be smaller.
    Fixed(NonZeroUsize),
}

impl fmt::Display for GroupSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSize::Whole => write!(f, "whole"),
            GroupSize::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for GroupSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("whole") {
            return Ok(GroupSize::Whole);
        }
        let n: usize = s
            .parse()
            .map_err(|_| format!("group size must be `whole` or a positive integer, got `{s}`"))?;
        NonZeroUsize::new(n)
            .map(GroupSize::Fixed)
            .ok_or_else(|| "group size must be positive".to_string())
    }
}

/// MACs found predominant for more than one label, with the labels that
/// made them suspect.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExceptionList<L: Ord> {
    evidence: BTreeMap<MacAddr, BTreeSet<L>>,
}

impl<L: Ord + Clone> ExceptionList<L> {
    /// An externally supplied list (what-if analysis); no evidence recorded.
    pub fn from_macs(macs: impl IntoIterator<Item = MacAddr>) -> Self {
        ExceptionList {
            evidence: macs.into_iter().map(|m| (m, BTreeSet::new())).collect(),
        }
    }

    pub fn contains(&self, mac: &MacAddr) -> bool {
        self.evidence.contains_key(mac)
    }

    pub fn is_empty(&self) -> bool {
        self.evidence.is_empty()
    }

    pub fn len(&self) -> usize {
        self.evidence.len()
    }

    pub fn macs(&self) -> impl Iterator<Item = &MacAddr> {
        self.evidence.keys()
    }

    pub fn evidence(&self) -> &BTreeMap<MacAddr, BTreeSet<L>> {
        &self.evidence
    }

    /// Record a MAC with the labels it was dominant for.
    pub fn insert_evidence(&mut self, mac: MacAddr, labels: BTreeSet<L>) {
        self.evidence.insert(mac, labels);
    }
}

/// Step one: detect MACs that are predominant for two or more labels.
///
/// For each distinct predicted label, the dominant MAC is the one with the
/// most records carrying that prediction; count ties resolve to the
/// lexicographically smallest MAC.
pub fn build_exception_list<L>(predictions: &[(MacAddr, L)]) -> ExceptionList<L>
where
    L: Ord + Clone,
{
    let mut per_label: BTreeMap<&L, BTreeMap<MacAddr, u64>> = BTreeMap::new();
    for (mac, label) in predictions {
        *per_label.entry(label).or_default().entry(*mac).or_insert(0) += 1;
    }
    let mut dominant_labels: BTreeMap<MacAddr, BTreeSet<L>> = BTreeMap::new();
    for (label, mac_counts) in per_label {
        let mut best: Option<(MacAddr, u64)> = None;
        for (&mac, &count) in &mac_counts {
            // Strictly-greater keeps the smallest MAC on ties.
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((mac, count));
            }
        }
        if let Some((mac, _)) = best {
            dominant_labels
                .entry(mac)
                .or_default()
                .insert(label.clone());
        }
    }
    ExceptionList {
        evidence: dominant_labels
            .into_iter()
            .filter(|(_, labels)| labels.len() >= 2)
            .collect(),
    }
}

/// Step two: replace each non-exception MAC group's predictions with the
/// group majority.
///
/// Records of one MAC are taken in original order and chunked per
/// `group_size`. A clear majority overwrites the whole group; on a tie
/// every record keeps its own prediction. Exception MACs pass through
/// unchanged. The output is index-aligned with the input.
pub fn aggregate_labels<L>(
    predictions: &[(MacAddr, L)],
    exceptions: &ExceptionList<L>,
    group_size: GroupSize,
) -> Vec<L>
where
    L: Ord + Clone,
{
    let mut by_mac: BTreeMap<MacAddr, Vec<usize>> = BTreeMap::new();
    for (i, (mac, _)) in predictions.iter().enumerate() {
        by_mac.entry(*mac).or_default().push(i);
    }
    let mut finals: Vec<Option<L>> = vec![None; predictions.len()];
    for (mac, indices) in &by_mac {
        if exceptions.contains(mac) {
            for &i in indices {
                finals[i] = Some(predictions[i].1.clone());
            }
            continue;
        }
        let chunk_len = match group_size {
            GroupSize::Whole => indices.len().max(1),
            GroupSize::Fixed(n) => n.get(),
        };
        for chunk in indices.chunks(chunk_len) {
            let mut counts: BTreeMap<&L, u64> = BTreeMap::new();
            for &i in chunk {
                *counts.entry(&predictions[i].1).or_insert(0) += 1;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            let mut winners = counts.iter().filter(|(_, &c)| c == top);
            let winner = winners.next().map(|(l, _)| (*l).clone());
            let unique = winners.next().is_none();
            if unique {
                let majority = winner.expect("non-empty chunk");
                for &i in chunk {
                    finals[i] = Some(majority.clone());
                }
            } else {
                for &i in chunk {
                    finals[i] = Some(predictions[i].1.clone());
                }
            }
        }
    }
    finals
        .into_iter()
        .map(|f| f.expect("all indices covered"))
        .collect()
}

/// One prediction row as carried through the CSV tooling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub index: u64,
    pub mac: MacAddr,
    pub predicted: String,
    pub final_label: Option<String>,
}

/// Run both aggregation steps over prediction records, filling `final_label`.
///
/// Returns the exception list that was applied (built from these very
/// predictions unless one is supplied).
pub fn aggregate_records(
    records: &mut [PredictionRecord],
    supplied: Option<ExceptionList<String>>,
    group_size: GroupSize,
) -> ExceptionList<String> {
    let pairs: Vec<(MacAddr, String)> = records
        .iter()
        .map(|r| (r.mac, r.predicted.clone()))
        .collect();
    let exceptions = supplied.unwrap_or_else(|| build_exception_list(&pairs));
    let finals = aggregate_labels(&pairs, &exceptions, group_size);
    for (record, label) in records.iter_mut().zip(finals) {
        record.final_label = Some(label);
    }
    exceptions
}

// ---------------------------------------------------------------------------
// CSV formats: predictions (`index,mac,predicted,final`) and the exception
// audit list (`mac,labels`, labels |-joined).
// ---------------------------------------------------------------------------

pub fn write_predictions_csv<W: Write>(
    mut w: W,
    records: &[PredictionRecord],
) -> Result<(), CsvError> {
    let mut buf = String::from("index,mac,predicted,final\n");
    for r in records {
        buf.push_str(&r.index.to_string());
        buf.push(',');
        buf.push_str(&r.mac.to_string());
        buf.push(',');
        write_csv_field(&mut buf, &r.predicted);
        buf.push(',');
        if let Some(f) = &r.final_label {
            write_csv_field(&mut buf, f);
        }
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_predictions_csv<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>, CsvError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line.trim_end() != "index,mac,predicted,final" {
                return Err(CsvError::Malformed {
                    line: 1,
                    message: format!("unexpected header `{line}`"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields = split_csv_line(&line);
        if fields.len() != 4 {
            return Err(CsvError::Malformed {
                line: idx + 1,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        records.push(PredictionRecord {
            index: fields[0].parse().map_err(|_| CsvError::Malformed {
                line: idx + 1,
                message: format!("bad index `{}`", fields[0]),
            })?,
            mac: fields[1].parse().map_err(|_| CsvError::Malformed {
                line: idx + 1,
                message: format!("bad MAC `{}`", fields[1]),
            })?,
            predicted: fields[2].clone(),
            final_label: if fields[3].is_empty() {
                None
            } else {
                Some(fields[3].clone())
            },
        });
    }
    Ok(records)
}

pub fn write_exceptions_csv<W: Write>(
    mut w: W,
    exceptions: &ExceptionList<String>,
) -> Result<(), CsvError> {
    let mut buf = String::from("mac,labels\n");
    for (mac, labels) in exceptions.evidence() {
        buf.push_str(&mac.to_string());
        buf.push(',');
        let joined = labels.iter().cloned().collect::<Vec<_>>().join("|");
        write_csv_field(&mut buf, &joined);
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_exceptions_csv<R: BufRead>(reader: R) -> Result<ExceptionList<String>, CsvError> {
    let mut evidence = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.is_empty() {
            continue;
        }
        let fields = split_csv_line(&line);
        if fields.is_empty() {
            continue;
        }
        let mac: MacAddr = fields[0].parse().map_err(|_| CsvError::Malformed {
            line: idx + 1,
            message: format!("bad MAC `{}`", fields[0]),
        })?;
        let labels: BTreeSet<String> = fields
            .get(1)
            .map(|s| {
                s.split('|')
                    .filter(|p| !p.is_empty())
                    .map(str::to_string)
                    .collect()
            })
            .unwrap_or_default();
        evidence.insert(mac, labels);
    }
    Ok(ExceptionList { evidence })
}

/// Convenience: write the exception list to a file.
pub fn write_exceptions_csv_path(
    path: impl AsRef<std::path::Path>,
    exceptions: &ExceptionList<String>,
) -> Result<(), CsvError> {
    let file = std::fs::File::create(path)?;
    write_exceptions_csv(io::BufWriter::new(file), exceptions)
}
