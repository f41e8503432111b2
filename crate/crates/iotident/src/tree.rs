//! Deterministic CART-style decision tree over fingerprint vectors.
//!
//! Fitting is greedy recursive partitioning on axis-aligned splits of the
//! form `feature ≤ threshold`, choosing the split that minimizes the
//! weighted Gini impurity of the children. Candidate thresholds sit at the
//! midpoints between consecutive distinct sorted feature values. Everything
//! is deterministic: equal-gain candidates resolve to the lowest feature
//! index and then the lowest threshold, and leaf-label ties resolve to the
//! earliest class in the canonical class order. The `MISSING` sentinel (−1)
//! takes part in ordinary threshold comparison, which lets the tree route
//! layer absence down its own branch without surrogate splits.
//!
//! Node layout is preorder (each split node is followed by its complete
//! left subtree, then its right subtree), so structurally equal trees
//! compare equal node-by-node.
//!
//! ```
//! use iotident::tree::{fit, Hyperparams};
//!
//! // Two one-feature points, two classes: the tree splits at the midpoint.
//! let x = [0.0, 1.0];
//! let y = [0, 1];
//! let classes = vec!["lamp".to_string(), "camera".to_string()];
//! let model = fit(&x, 1, &y, classes, &Hyperparams::default(), 0).unwrap();
//! assert_eq!(model.predict(&[0.2, 0.8]).unwrap(), vec![0, 1]);
//! assert_eq!(model.predict_labels(&[0.8]).unwrap(), vec!["camera"]);
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Model serialization format version.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Maximum tree depth in edges; `None` is unbounded.
    pub max_depth: Option<u32>,
    /// Minimum node size eligible for splitting.
    pub min_samples_split: usize,
    /// Minimum sample count each side of an accepted split must keep.
    pub min_samples_leaf: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: u32,
        /// Training sample count per class at this leaf.
        distribution: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub schema_version: u32,
    pub n_features: usize,
    pub hyperparams: Hyperparams,
    pub train_seed: u64,
    pub class_order: Vec<String>,
    pub nodes: Vec<Node>,
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("training set is empty")]
    Empty,
    #[error("feature matrix length is not a multiple of the feature count")]
    Shape,
    #[error("non-finite feature value in row {0}")]
    NonFinite(usize),
    #[error("label index {0} exceeds the class order")]
    UnknownClass(u32),
    #[error("input arity {got} does not match the model's {want} features")]
    SchemaMismatch { got: usize, want: usize },
    #[error("unsupported model schema version {0}")]
    SchemaVersion(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Gini impurity from integer class counts.
fn gini(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / n;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

/// Size-weighted mean impurity of a two-way split.
fn weighted_children_gini(left: &[u64], n_left: u64, right: &[u64], n_right: u64) -> f64 {
    let n = (n_left + n_right) as f64;
    (n_left as f64 * gini(left, n_left) + n_right as f64 * gini(right, n_right)) / n
}

/// Majority class index; ties go to the earliest class in the order.
fn majority_class(counts: &[u64]) -> u32 {
    let mut best = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

struct FitContext<'a> {
    x: &'a [f64],
    y: &'a [u32],
    n_features: usize,
    n_classes: usize,
    hp: &'a Hyperparams,
    nodes: Vec<Node>,
}

impl FitContext<'_> {
    fn value(&self, row: usize, feature: usize) -> f64 {
        self.x[row * self.n_features + feature]
    }

    fn class_counts(&self, rows: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &r in rows {
            counts[self.y[r] as usize] += 1;
        }
        counts
    }

    /// Best split for this node, or `None` when no candidate has positive
    /// gain. Candidates are scanned feature-ascending, threshold-ascending,
    /// and only a strictly greater gain displaces the incumbent.
    fn best_split(&self, rows: &[usize], counts: &[u64]) -> Option<(usize, f64)> {
        let n = rows.len() as u64;
        let parent = gini(counts, n);
        let msl = self.hp.min_samples_leaf as u64;
        let mut best_gain = 0.0;
        let mut best: Option<(usize, f64)> = None;
        let mut sorted: Vec<(f64, u32)> = Vec::with_capacity(rows.len());
        for feature in 0..self.n_features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.value(r, feature), self.y[r])));
            sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut left_counts = vec![0u64; self.n_classes];
            let mut n_left = 0u64;
            for i in 0..sorted.len() - 1 {
                left_counts[sorted[i].1 as usize] += 1;
                n_left += 1;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let n_right = n - n_left;
                if n_left < msl || n_right < msl {
                    continue;
                }
                let mut right_counts = counts.to_vec();
                for (rc, lc) in right_counts.iter_mut().zip(&left_counts) {
                    *rc -= lc;
                }
                let children = weighted_children_gini(&left_counts, n_left, &right_counts, n_right);
                let gain = parent - children;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((feature, (sorted[i].0 + sorted[i + 1].0) / 2.0));
                }
            }
        }
        best
    }

    fn build(&mut self, rows: &[usize], depth: u32) -> usize {
        let counts = self.class_counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.hp.max_depth.is_some_and(|d| depth >= d);
        let too_small = rows.len() < self.hp.min_samples_split;
        let split = if pure || depth_capped || too_small {
            None
        } else {
            self.best_split(rows, &counts)
        };
        let Some((feature, threshold)) = split else {
            let idx = self.nodes.len();
            self.nodes.push(Node::Leaf {
                class: majority_class(&counts),
                distribution: counts,
            });
            return idx;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.value(r, feature) <= threshold);
        if left_rows.is_empty() || right_rows.is_empty() {
            // Degenerate midpoint rounding; fall back to a leaf.
            let idx = self.nodes.len();
            self.nodes.push(Node::Leaf {
                class: majority_class(&counts),
                distribution: counts,
            });
            return idx;
        }
        let idx = self.nodes.len();
        self.nodes.push(Node::Split {
            feature,
            threshold,
            left: 0,
            right: 0,
        });
        let left = self.build(&left_rows, depth + 1);
        let right = self.build(&right_rows, depth + 1);
        match &mut self.nodes[idx] {
            Node::Split {
                left: l, right: r, ..
            } => {
                *l = left;
                *r = right;
            }
            Node::Leaf { .. } => unreachable!(),
        }
        idx
    }
}

/// Fit a tree on a flat row-major feature matrix.
///
/// `x` holds `y.len()` rows of `n_features` values each. Labels are indices
/// into `class_order`. A single-class input yields a one-leaf tree rather
/// than an error; callers that care can check [`TreeModel::is_single_leaf`].
pub fn fit(
    x: &[f64],
    n_features: usize,
    y: &[u32],
    class_order: Vec<String>,
    hp: &Hyperparams,
    seed: u64,
) -> Result<TreeModel, TreeError> {
    if y.is_empty() {
        return Err(TreeError::Empty);
    }
    if n_features == 0 || x.len() != y.len() * n_features {
        return Err(TreeError::Shape);
    }
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(TreeError::NonFinite(pos / n_features));
    }
    if let Some(&bad) = y.iter().find(|&&c| c as usize >= class_order.len()) {
        return Err(TreeError::UnknownClass(bad));
    }
    let mut ctx = FitContext {
        x,
        y,
        n_features,
        n_classes: class_order.len(),
        hp,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..y.len()).collect();
    ctx.build(&rows, 0);
    Ok(TreeModel {
        schema_version: MODEL_SCHEMA_VERSION,
        n_features,
        hyperparams: hp.clone(),
        train_seed: seed,
        class_order,
        nodes: ctx.nodes,
    })
}

impl TreeModel {
    /// Route one row to a leaf and return its class index.
    pub fn predict_one(&self, row: &[f64]) -> Result<u32, TreeError> {
        if row.len() != self.n_features {
            return Err(TreeError::SchemaMismatch {
                got: row.len(),
                want: self.n_features,
            });
        }
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class, .. } => return Ok(*class),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Predict class indices for a flat row-major matrix, in input order.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<u32>, TreeError> {
        if self.n_features == 0 || !x.len().is_multiple_of(self.n_features) {
            return Err(TreeError::SchemaMismatch {
                got: x.len(),
                want: self.n_features,
            });
        }
        x.chunks_exact(self.n_features)
            .map(|row| self.predict_one(row))
            .collect()
    }

    /// Predict class names instead of indices.
    pub fn predict_labels(&self, x: &[f64]) -> Result<Vec<&str>, TreeError> {
        Ok(self
            .predict(x)?
            .into_iter()
            .map(|c| self.class_order[c as usize].as_str())
            .collect())
    }

    pub fn is_single_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn depth(&self) -> u32 {
        fn walk(nodes: &[Node], at: usize) -> u32 {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn to_json(&self) -> Result<String, TreeError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<TreeModel, TreeError> {
        let model: TreeModel = serde_json::from_str(json)?;
        if model.schema_version != MODEL_SCHEMA_VERSION {
            return Err(TreeError::SchemaVersion(model.schema_version));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TreeError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.to_json()?.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TreeModel, TreeError> {
        let reader = BufReader::new(File::open(path)?);
        let model: TreeModel = serde_json::from_reader(reader)?;
        if model.schema_version != MODEL_SCHEMA_VERSION {
            return Err(TreeError::SchemaVersion(model.schema_version));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("C{i}")).collect()
    }

    #[test]
    fn separable_pair_splits_at_midpoint() {
        let x = [0.0, 1.0];
        let y = [0u32, 1];
        let model = fit(&x, 1, &y, classes(2), &Hyperparams::default(), 0).unwrap();
        assert_eq!(model.nodes.len(), 3);
        match &model.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(model.predict(&x).unwrap(), vec![0, 1]);
    }

    #[test]
    fn single_class_input_yields_one_leaf() {
        let x = [1.0, 2.0, 3.0];
        let y = [0u32, 0, 0];
        let model = fit(&x, 1, &y, classes(1), &Hyperparams::default(), 0).unwrap();
        assert!(model.is_single_leaf());
        assert_eq!(model.predict(&[5.0]).unwrap(), vec![0]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            fit(&[], 1, &[], classes(2), &Hyperparams::default(), 0),
            Err(TreeError::Empty)
        ));
    }

    #[test]
    fn nan_feature_is_an_error() {
        let x = [0.0, f64::NAN];
        let y = [0u32, 1];
        assert!(matches!(
            fit(&x, 1, &y, classes(2), &Hyperparams::default(), 0),
            Err(TreeError::NonFinite(1))
        ));
    }

    #[test]
    fn training_set_is_memorized_without_label_conflicts() {
        // 3 features, 12 rows, no duplicate vectors with different labels.
        let rows: Vec<[f64; 3]> = (0..12)
            .map(|i| [(i % 4) as f64, (i / 4) as f64, (i % 3) as f64])
            .collect();
        let y: Vec<u32> = (0..12).map(|i| (i % 3) as u32).collect();
        let x: Vec<f64> = rows.iter().flatten().copied().collect();
        let model = fit(&x, 3, &y, classes(3), &Hyperparams::default(), 0).unwrap();
        assert_eq!(model.predict(&x).unwrap(), y);
    }

    #[test]
    fn all_missing_row_routes_to_some_label() {
        let x = [
            -1.0, 5.0, //
            2.0, 7.0, //
            3.0, 9.0,
        ];
        let y = [0u32, 1, 1];
        let model = fit(&x, 2, &y, classes(2), &Hyperparams::default(), 0).unwrap();
        let pred = model.predict(&[-1.0, -1.0]).unwrap();
        assert_eq!(pred.len(), 1);
        assert!(pred[0] < 2);
    }

    #[test]
    fn depth_bound_is_respected() {
        let x: Vec<f64> = (0..32).map(f64::from).collect();
        let y: Vec<u32> = (0..32u32).map(|i| i % 4).collect();
        let hp = Hyperparams {
            max_depth: Some(2),
            ..Hyperparams::default()
        };
        let model = fit(&x, 1, &y, classes(4), &hp, 0).unwrap();
        assert!(model.depth() <= 2);
    }

    #[test]
    fn min_samples_leaf_blocks_thin_splits() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0u32, 0, 0, 1];
        let hp = Hyperparams {
            min_samples_leaf: 2,
            ..Hyperparams::default()
        };
        let model = fit(&x, 1, &y, classes(2), &hp, 0).unwrap();
        // The only separating split (2.5) would leave one sample on the
        // right, so it is rejected and the 2|2 split wins or none at all.
        for node in &model.nodes {
            if let Node::Leaf { distribution, .. } = node {
                assert!(distribution.iter().sum::<u64>() >= 2);
            }
        }
    }

    #[test]
    fn leaf_tie_breaks_by_class_order() {
        let x = [0.0, 0.0];
        let y = [1u32, 0];
        let model = fit(&x, 1, &y, classes(2), &Hyperparams::default(), 0).unwrap();
        // 1-1 tie at the root leaf: class 0 wins.
        assert_eq!(model.predict(&[0.0]).unwrap(), vec![0]);
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let model = fit(
            &[0.0, 1.0],
            1,
            &[0, 1],
            classes(2),
            &Hyperparams::default(),
            0,
        )
        .unwrap();
        assert!(matches!(
            model.predict_one(&[0.0, 1.0]),
            Err(TreeError::SchemaMismatch { got: 2, want: 1 })
        ));
    }

    // Two classes separated by a margin of 10 in one feature, half held
    // out: the tree must generalize nearly perfectly.
    #[test]
    fn held_out_separable_classes_score_high() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};

        let mut rng = StdRng::seed_from_u64(0x5EED);
        let sample = |class: u32, rng: &mut StdRng| {
            let center = if class == 0 { 0.0 } else { 10.0 };
            [
                center + rng.random_range(-2.0..2.0),
                rng.random_range(-5.0..5.0), // pure noise feature
            ]
        };
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100u32 {
            let class = i % 2;
            rows.push(sample(class, &mut rng));
            labels.push(class);
        }
        let (train_rows, test_rows) = rows.split_at(50);
        let (train_y, test_y) = labels.split_at(50);
        let x_train: Vec<f64> = train_rows.iter().flatten().copied().collect();
        let x_test: Vec<f64> = test_rows.iter().flatten().copied().collect();
        let model = fit(&x_train, 2, train_y, classes(2), &Hyperparams::default(), 0).unwrap();
        let predicted = model.predict(&x_test).unwrap();
        let correct = predicted.iter().zip(test_y).filter(|(p, t)| p == t).count();
        assert!(
            correct as f64 / test_y.len() as f64 >= 0.9,
            "held-out accuracy {correct}/50 below 0.9"
        );
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let x: Vec<f64> = vec![
            0.1, 7.3, -1.0, 2.5, 9.25, 4.0, 0.1, 8.0, 1.0, 3.5, 6.125, 2.0,
        ];
        let y = [0u32, 1, 2, 0];
        let model = fit(&x, 3, &y, classes(3), &Hyperparams::default(), 7).unwrap();
        let json = model.to_json().unwrap();
        let back = TreeModel::from_json(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let model = fit(
            &[0.0, 1.0],
            1,
            &[0, 1],
            classes(2),
            &Hyperparams::default(),
            0,
        )
        .unwrap();
        let json = model
            .to_json()
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 99");
        assert!(matches!(
            TreeModel::from_json(&json),
            Err(TreeError::SchemaVersion(99))
        ));
    }
}
