//! Dataset curation: labeling, session registry, bitmask pairing and the
//! four merged condition datasets.
//!
//! Capture sessions are one file per day, named for their state and date
//! (`A211124` = active, 2021-11-24). Each session gets a device-presence
//! bitmask — one bit per device class in a canonical (lexicographic)
//! order — and only sessions with identical bitmasks are comparable in
//! train/test experiments. Merged datasets come in four kinds
//! (active/idle × train/test) with proportional per-class subsampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::path::PathBuf;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::SeedableRng;
use thiserror::Error;

use crate::features::{split_csv_line, CsvError, Fingerprint};
use crate::mac::MacAddr;
use crate::mix_seed;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("condition {0} received no sessions")]
    EmptyCondition(DatasetKind),
    #[error("unknown device class `{0}`")]
    UnknownClass(String),
    #[error("session `{0}` is missing from the assignment")]
    Unassigned(String),
}

// ---------------------------------------------------------------------------
// Label map
// ---------------------------------------------------------------------------

/// Mapping from source MAC to device-class name, plus MACs to drop outright
/// (infrastructure such as hubs, switches and the capture host).
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    entries: BTreeMap<MacAddr, String>,
    ignore: BTreeSet<MacAddr>,
}

/// Reserved label marking a MAC for the ignore list.
pub const IGNORE_LABEL: &str = "ignore";

impl LabelMap {
    pub fn insert(&mut self, mac: MacAddr, label: impl Into<String>) {
        self.entries.insert(mac, label.into());
    }

    pub fn insert_ignore(&mut self, mac: MacAddr) {
        self.ignore.insert(mac);
    }

    pub fn lookup(&self, mac: &MacAddr) -> Option<&str> {
        self.entries.get(mac).map(String::as_str)
    }

    pub fn is_ignored(&self, mac: &MacAddr) -> bool {
        self.ignore.contains(mac)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct class names in canonical (lexicographic) order.
    pub fn classes(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.values().collect();
        set.into_iter().cloned().collect()
    }

    /// Parse the `mac,label` CSV; the label `ignore` puts a MAC on the
    /// ignore list.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<LabelMap, CsvError> {
        let mut map = LabelMap::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 {
                if line.trim_end() != "mac,label" {
                    return Err(CsvError::Malformed {
                        line: 1,
                        message: format!("expected header `mac,label`, got `{line}`"),
                    });
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields = split_csv_line(&line);
            if fields.len() != 2 {
                return Err(CsvError::Malformed {
                    line: lineno,
                    message: format!("expected 2 fields, got {}", fields.len()),
                });
            }
            let mac: MacAddr = fields[0].parse().map_err(|_| CsvError::Malformed {
                line: lineno,
                message: format!("bad MAC `{}`", fields[0]),
            })?;
            let label = fields[1].trim();
            if map.entries.contains_key(&mac) || map.ignore.contains(&mac) {
                return Err(CsvError::Malformed {
                    line: lineno,
                    message: format!("duplicate MAC {mac}"),
                });
            }
            if label == IGNORE_LABEL {
                map.ignore.insert(mac);
            } else if label.is_empty() {
                return Err(CsvError::Malformed {
                    line: lineno,
                    message: "empty device-class name".into(),
                });
            } else {
                map.entries.insert(mac, label.to_string());
            }
        }
        Ok(map)
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<LabelMap, CsvError> {
        let file = std::fs::File::open(path)?;
        LabelMap::from_csv(std::io::BufReader::new(file))
    }
}

/// Counts of what labeling kept and dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropReport {
    pub labeled: u64,
    pub ignored: u64,
    pub unknown: u64,
    /// Per-MAC counts of dropped unknown-address fingerprints, for audit.
    pub unknown_macs: BTreeMap<MacAddr, u64>,
}

/// Attach class labels from the map; fingerprints whose MAC is ignored or
/// unknown are dropped and counted.
pub fn label_fingerprints(
    fingerprints: Vec<Fingerprint>,
    map: &LabelMap,
) -> (Vec<Fingerprint>, DropReport) {
    let mut report = DropReport::default();
    let mut kept = Vec::with_capacity(fingerprints.len());
    for mut fp in fingerprints {
        if map.is_ignored(&fp.src_mac) {
            report.ignored += 1;
        } else if let Some(label) = map.lookup(&fp.src_mac) {
            fp.true_label = Some(label.to_string());
            report.labeled += 1;
            kept.push(fp);
        } else {
            report.unknown += 1;
            *report.unknown_macs.entry(fp.src_mac).or_insert(0) += 1;
        }
    }
    (kept, report)
}

// ---------------------------------------------------------------------------
// Sessions and bitmasks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Active,
    Idle,
}

impl SessionState {
    pub fn prefix(&self) -> char {
        match self {
            SessionState::Active => 'A',
            SessionState::Idle => 'I',
        }
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionState::Active => write!(f, "active"),
            SessionState::Idle => write!(f, "idle"),
        }
    }
}

impl FromStr for SessionState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "active" | "a" => Ok(SessionState::Active),
            "idle" | "i" => Ok(SessionState::Idle),
            other => Err(format!("unknown session state `{other}`")),
        }
    }
}

/// One capture session: a day's worth of traffic in one state.
#[derive(Debug, Clone)]
pub struct SessionRecord {
    pub session_ref: String,
    pub state: SessionState,
    pub date: String,
    pub fingerprints: Vec<Fingerprint>,
}

/// Device-presence bitmask: bit *i* is set when the session contains at
/// least one labeled fingerprint of class *i* in the canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmask(pub Vec<bool>);

impl fmt::Display for Bitmask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &bit in &self.0 {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Compute a session's device-presence bitmask over the class order.
///
/// ```
/// use iotident::dataset::{session_id, SessionRecord, SessionState};
/// use iotident::features::{Fingerprint, FEATURE_COUNT};
/// use iotident::mac::MacAddr;
///
/// let fp = |label: &str| Fingerprint {
///     features: [0.0; FEATURE_COUNT],
///     src_mac: MacAddr::ZERO,
///     session_ref: "A211102".into(),
///     true_label: Some(label.into()),
/// };
/// let session = SessionRecord {
///     session_ref: "A211102".into(),
///     state: SessionState::Active,
///     date: "2021-11-02".into(),
///     fingerprints: vec![fp("alarm"), fp("camera"), fp("alarm")],
/// };
/// // Order (alarm, bulb, camera): present, absent, present.
/// let order: Vec<String> = ["alarm", "bulb", "camera"]
///     .iter().map(|s| s.to_string()).collect();
/// assert_eq!(session_id(&session, &order).to_string(), "101");
/// ```
pub fn session_id(session: &SessionRecord, class_order: &[String]) -> Bitmask {
    let present: BTreeSet<&str> = session
        .fingerprints
        .iter()
        .filter_map(|fp| fp.true_label.as_deref())
        .collect();
    Bitmask(
        class_order
            .iter()
            .map(|c| present.contains(c.as_str()))
            .collect(),
    )
}

/// Train-state × test-state combination of a session pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    AA,
    AI,
    IA,
    II,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::AA, Condition::AI, Condition::IA, Condition::II];

    pub fn from_states(train: SessionState, test: SessionState) -> Condition {
        match (train, test) {
            (SessionState::Active, SessionState::Active) => Condition::AA,
            (SessionState::Active, SessionState::Idle) => Condition::AI,
            (SessionState::Idle, SessionState::Active) => Condition::IA,
            (SessionState::Idle, SessionState::Idle) => Condition::II,
        }
    }

    pub fn train_kind(&self) -> DatasetKind {
        match self {
            Condition::AA | Condition::AI => DatasetKind::ActiveTrain,
            Condition::IA | Condition::II => DatasetKind::IdleTrain,
        }
    }

    pub fn test_kind(&self) -> DatasetKind {
        match self {
            Condition::AA | Condition::IA => DatasetKind::ActiveTest,
            Condition::AI | Condition::II => DatasetKind::IdleTest,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::AA => "AA",
            Condition::AI => "AI",
            Condition::IA => "IA",
            Condition::II => "II",
        };
        f.write_str(s)
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AA" => Ok(Condition::AA),
            "AI" => Ok(Condition::AI),
            "IA" => Ok(Condition::IA),
            "II" => Ok(Condition::II),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}

/// An ordered (train, test) pairing of two compatible sessions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionPair {
    pub train_ref: String,
    pub test_ref: String,
    pub condition: Condition,
    pub bitmask: Bitmask,
}

/// All ordered pairs of distinct sessions with identical bitmasks.
pub fn compatible_pairs(sessions: &[SessionRecord], class_order: &[String]) -> Vec<SessionPair> {
    let masks: Vec<Bitmask> = sessions
        .iter()
        .map(|s| session_id(s, class_order))
        .collect();
    let mut pairs = Vec::new();
    for (i, train) in sessions.iter().enumerate() {
        for (j, test) in sessions.iter().enumerate() {
            if i == j || masks[i] != masks[j] {
                continue;
            }
            pairs.push(SessionPair {
                train_ref: train.session_ref.clone(),
                test_ref: test.session_ref.clone(),
                condition: Condition::from_states(train.state, test.state),
                bitmask: masks[i].clone(),
            });
        }
    }
    pairs
}

// ---------------------------------------------------------------------------
// Condition datasets
// ---------------------------------------------------------------------------

/// The four merged dataset kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DatasetKind {
    ActiveTrain,
    ActiveTest,
    IdleTrain,
    IdleTest,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] = [
        DatasetKind::ActiveTrain,
        DatasetKind::ActiveTest,
        DatasetKind::IdleTrain,
        DatasetKind::IdleTest,
    ];

    pub fn new(state: SessionState, role: TrainTest) -> DatasetKind {
        match (state, role) {
            (SessionState::Active, TrainTest::Train) => DatasetKind::ActiveTrain,
            (SessionState::Active, TrainTest::Test) => DatasetKind::ActiveTest,
            (SessionState::Idle, TrainTest::Train) => DatasetKind::IdleTrain,
            (SessionState::Idle, TrainTest::Test) => DatasetKind::IdleTest,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DatasetKind::ActiveTrain => "active_train",
            DatasetKind::ActiveTest => "active_test",
            DatasetKind::IdleTrain => "idle_train",
            DatasetKind::IdleTest => "idle_test",
        };
        f.write_str(s)
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "active_train" => Ok(DatasetKind::ActiveTrain),
            "active_test" => Ok(DatasetKind::ActiveTest),
            "idle_train" => Ok(DatasetKind::IdleTrain),
            "idle_test" => Ok(DatasetKind::IdleTest),
            other => Err(format!("unknown dataset kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainTest {
    Train,
    Test,
}

impl FromStr for TrainTest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(TrainTest::Train),
            "test" => Ok(TrainTest::Test),
            other => Err(format!("unknown role `{other}` (want train/test)")),
        }
    }
}

/// One merged condition dataset.
#[derive(Debug, Clone)]
pub struct ConditionDataset {
    pub kind: DatasetKind,
    pub fingerprints: Vec<Fingerprint>,
    /// Session refs that contributed fingerprints.
    pub provenance: Vec<String>,
    pub sample_fraction: f64,
}

/// The four condition datasets together.
#[derive(Debug, Clone)]
pub struct ConditionSet {
    pub active_train: ConditionDataset,
    pub active_test: ConditionDataset,
    pub idle_train: ConditionDataset,
    pub idle_test: ConditionDataset,
}

impl ConditionSet {
    pub fn get(&self, kind: DatasetKind) -> &ConditionDataset {
        match kind {
            DatasetKind::ActiveTrain => &self.active_train,
            DatasetKind::ActiveTest => &self.active_test,
            DatasetKind::IdleTrain => &self.idle_train,
            DatasetKind::IdleTest => &self.idle_test,
        }
    }

    pub fn get_mut(&mut self, kind: DatasetKind) -> &mut ConditionDataset {
        match kind {
            DatasetKind::ActiveTrain => &mut self.active_train,
            DatasetKind::ActiveTest => &mut self.active_test,
            DatasetKind::IdleTrain => &mut self.idle_train,
            DatasetKind::IdleTest => &mut self.idle_test,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConditionDataset> {
        DatasetKind::ALL.iter().map(|&k| self.get(k))
    }
}

/// Uniform per-class sampling without replacement, returning the chosen
/// indices in ascending (original) order.
///
/// Each class keeps `floor(n · fraction)` fingerprints (at least one when
/// the class is non-empty), so per-class proportions survive within
/// rounding. Deterministic for a given RNG state.
pub fn subsample_indices_per_class(
    fingerprints: &[Fingerprint],
    fraction: f64,
    rng: &mut StdRng,
) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..fingerprints.len()).collect();
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, fp) in fingerprints.iter().enumerate() {
        by_class
            .entry(fp.true_label.as_deref().unwrap_or(""))
            .or_default()
            .push(i);
    }
    let mut chosen: Vec<usize> = Vec::new();
    for indices in by_class.values() {
        let n = indices.len();
        let keep = ((n as f64) * fraction).floor() as usize;
        let keep = keep.clamp(1, n);
        let picks = rand::seq::index::sample(rng, n, keep);
        chosen.extend(picks.iter().map(|p| indices[p]));
    }
    chosen.sort_unstable();
    chosen
}

/// Clone-producing convenience over [`subsample_indices_per_class`].
pub fn subsample_per_class(
    fingerprints: &[Fingerprint],
    fraction: f64,
    rng: &mut StdRng,
) -> Vec<Fingerprint> {
    subsample_indices_per_class(fingerprints, fraction, rng)
        .into_iter()
        .map(|i| fingerprints[i].clone())
        .collect()
}

/// Merge sessions into the four condition datasets and subsample each.
///
/// `assignment` maps every session ref to its dataset kind; sessions are
/// merged in session-ref order and sampled per class at `fraction` with a
/// per-kind RNG derived from `seed`. Sessions are consumed — fingerprints
/// move into the merged datasets rather than doubling in memory (idle-day
/// captures run to half a million packets each).
pub fn build_condition_datasets(
    sessions: Vec<SessionRecord>,
    assignment: &BTreeMap<String, DatasetKind>,
    fraction: f64,
    seed: u64,
) -> Result<ConditionSet, DatasetError> {
    let mut ordered = sessions;
    ordered.sort_by(|a, b| a.session_ref.cmp(&b.session_ref));

    let mut merged: BTreeMap<DatasetKind, (Vec<Fingerprint>, Vec<String>)> = BTreeMap::new();
    for session in ordered {
        let kind = assignment
            .get(&session.session_ref)
            .copied()
            .ok_or_else(|| DatasetError::Unassigned(session.session_ref.clone()))?;
        let slot = merged.entry(kind).or_default();
        slot.0.extend(session.fingerprints);
        slot.1.push(session.session_ref);
    }

    let mut build = |kind: DatasetKind| -> Result<ConditionDataset, DatasetError> {
        let (mut fps, provenance) = merged
            .remove(&kind)
            .ok_or(DatasetError::EmptyCondition(kind))?;
        if fraction < 1.0 {
            let mut rng = StdRng::seed_from_u64(mix_seed(seed, kind as u64));
            let chosen = subsample_indices_per_class(&fps, fraction, &mut rng);
            let mut keep = vec![false; fps.len()];
            for i in chosen {
                keep[i] = true;
            }
            let mut flags = keep.iter();
            fps.retain(|_| *flags.next().unwrap());
        }
        Ok(ConditionDataset {
            kind,
            fingerprints: fps,
            provenance,
            sample_fraction: fraction.min(1.0),
        })
    };

    Ok(ConditionSet {
        active_train: build(DatasetKind::ActiveTrain)?,
        active_test: build(DatasetKind::ActiveTest)?,
        idle_train: build(DatasetKind::IdleTrain)?,
        idle_test: build(DatasetKind::IdleTest)?,
    })
}

// ---------------------------------------------------------------------------
// Adjustments
// ---------------------------------------------------------------------------

/// Documented dataset fixes applied after merging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdjustmentRule {
    /// Duplicate a class's fingerprints from one condition into another
    /// (for devices absent from a whole state).
    CopyClass {
        class: String,
        from: DatasetKind,
        to: DatasetKind,
    },
    /// Remove a class everywhere, including the canonical class order.
    DropClass { class: String },
}

/// Parse adjustment rules from `kind,class,from,to` CSV.
pub fn read_adjustments_csv<R: BufRead>(reader: R) -> Result<Vec<AdjustmentRule>, CsvError> {
    let mut rules = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim_end() != "kind,class,from,to" {
                return Err(CsvError::Malformed {
                    line: 1,
                    message: format!("expected header `kind,class,from,to`, got `{line}`"),
                });
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_csv_line(&line);
        if fields.len() != 4 {
            return Err(CsvError::Malformed {
                line: lineno,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let rule = match fields[0].as_str() {
            "copy" => AdjustmentRule::CopyClass {
                class: fields[1].clone(),
                from: fields[2].parse().map_err(|e| CsvError::Malformed {
                    line: lineno,
                    message: e,
                })?,
                to: fields[3].parse().map_err(|e| CsvError::Malformed {
                    line: lineno,
                    message: e,
                })?,
            },
            "drop" => AdjustmentRule::DropClass {
                class: fields[1].clone(),
            },
            other => {
                return Err(CsvError::Malformed {
                    line: lineno,
                    message: format!("unknown adjustment kind `{other}`"),
                })
            }
        };
        rules.push(rule);
    }
    Ok(rules)
}

pub fn read_adjustments_csv_path(
    path: impl AsRef<std::path::Path>,
) -> Result<Vec<AdjustmentRule>, CsvError> {
    let file = std::fs::File::open(path)?;
    read_adjustments_csv(std::io::BufReader::new(file))
}

/// Apply adjustment rules in order. `DropClass` also removes the class
/// from `class_order`.
pub fn apply_adjustments(
    set: &mut ConditionSet,
    rules: &[AdjustmentRule],
    class_order: &mut Vec<String>,
) -> Result<(), DatasetError> {
    for rule in rules {
        match rule {
            AdjustmentRule::CopyClass { class, from, to } => {
                if !class_order.contains(class) {
                    return Err(DatasetError::UnknownClass(class.clone()));
                }
                let copied: Vec<Fingerprint> = set
                    .get(*from)
                    .fingerprints
                    .iter()
                    .filter(|fp| fp.true_label.as_deref() == Some(class.as_str()))
                    .cloned()
                    .collect();
                let sessions: BTreeSet<String> =
                    copied.iter().map(|fp| fp.session_ref.clone()).collect();
                let target = set.get_mut(*to);
                target.fingerprints.extend(copied);
                for s in sessions {
                    if !target.provenance.contains(&s) {
                        target.provenance.push(s);
                    }
                }
            }
            AdjustmentRule::DropClass { class } => {
                let Some(pos) = class_order.iter().position(|c| c == class) else {
                    return Err(DatasetError::UnknownClass(class.clone()));
                };
                class_order.remove(pos);
                for kind in DatasetKind::ALL {
                    set.get_mut(kind)
                        .fingerprints
                        .retain(|fp| fp.true_label.as_deref() != Some(class.as_str()));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Session manifest
// ---------------------------------------------------------------------------

/// One row of the session manifest
/// (`session_ref,state,date,condition,path`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub session_ref: String,
    pub state: SessionState,
    pub date: String,
    pub role: TrainTest,
    pub path: PathBuf,
}

impl ManifestEntry {
    pub fn dataset_kind(&self) -> DatasetKind {
        DatasetKind::new(self.state, self.role)
    }
}

pub fn read_manifest_csv<R: BufRead>(reader: R) -> Result<Vec<ManifestEntry>, CsvError> {
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim_end() != "session_ref,state,date,condition,path" {
                return Err(CsvError::Malformed {
                    line: 1,
                    message: format!(
                        "expected header `session_ref,state,date,condition,path`, got `{line}`"
                    ),
                });
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_csv_line(&line);
        if fields.len() != 5 {
            return Err(CsvError::Malformed {
                line: lineno,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let state: SessionState = fields[1].parse().map_err(|e| CsvError::Malformed {
            line: lineno,
            message: e,
        })?;
        let session_ref = fields[0].clone();
        if !session_ref.starts_with(state.prefix()) {
            return Err(CsvError::Malformed {
                line: lineno,
                message: format!(
                    "session ref `{session_ref}` does not match state `{state}` (expected prefix {})",
                    state.prefix()
                ),
            });
        }
        entries.push(ManifestEntry {
            session_ref,
            state,
            date: fields[2].clone(),
            role: fields[3].parse().map_err(|e| CsvError::Malformed {
                line: lineno,
                message: e,
            })?,
            path: PathBuf::from(&fields[4]),
        });
    }
    Ok(entries)
}

pub fn read_manifest_csv_path(
    path: impl AsRef<std::path::Path>,
) -> Result<Vec<ManifestEntry>, CsvError> {
    let file = std::fs::File::open(path)?;
    read_manifest_csv(std::io::BufReader::new(file))
}
