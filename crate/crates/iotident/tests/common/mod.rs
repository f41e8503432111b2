//! Independent reference implementations used as oracles.
//!
//! Nothing here calls into the library's algorithm code paths: the tree
//! oracle enumerates every split by full re-scan, the aggregation oracle
//! recomputes each record's group membership from scratch, and the entropy
//! oracle uses an algebraically different formulation.

use std::collections::BTreeSet;

use iotident::mac::MacAddr;
use iotident::tree::{Hyperparams, Node};

/// Shannon entropy via `log2(n) − (1/n) Σ c·log2(c)`, a different
/// expression from the library's `−Σ p·log2(p)`.
pub fn entropy_oracle(payload: &[u8]) -> f64 {
    if payload.is_empty() {
        return 0.0;
    }
    let mut counts = [0u64; 256];
    for &b in payload {
        counts[b as usize] += 1;
    }
    let n = payload.len() as f64;
    let mut acc = 0.0;
    for &c in counts.iter() {
        if c > 0 {
            acc += c as f64 * (c as f64).log2();
        }
    }
    n.log2() - acc / n
}

// ---------------------------------------------------------------------------
// Exhaustive-split decision-tree oracle
// ---------------------------------------------------------------------------

fn gini_of(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / n;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

fn counts_of(rows: &[usize], y: &[u32], n_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_classes];
    for &r in rows {
        counts[y[r] as usize] += 1;
    }
    counts
}

fn majority_of(counts: &[u64]) -> u32 {
    let mut best = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

/// Fit by enumerating every (feature, midpoint) candidate with a full
/// partition re-scan, replaying the same tie-break contract: strictly
/// higher gain wins, scanned feature-ascending then threshold-ascending.
/// Emits nodes in preorder, matching the library's layout.
pub fn fit_oracle(rows_x: &[Vec<f64>], y: &[u32], n_classes: usize, hp: &Hyperparams) -> Vec<Node> {
    let n_features = rows_x[0].len();
    let mut nodes = Vec::new();
    let all: Vec<usize> = (0..y.len()).collect();
    build(rows_x, y, n_classes, n_features, hp, &all, 0, &mut nodes);
    nodes
}

#[allow(clippy::too_many_arguments)]
fn build(
    rows_x: &[Vec<f64>],
    y: &[u32],
    n_classes: usize,
    n_features: usize,
    hp: &Hyperparams,
    rows: &[usize],
    depth: u32,
    nodes: &mut Vec<Node>,
) -> usize {
    let counts = counts_of(rows, y, n_classes);
    let n = rows.len() as u64;
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let stop =
        pure || hp.max_depth.is_some_and(|d| depth >= d) || rows.len() < hp.min_samples_split;

    let mut best: Option<(usize, f64)> = None;
    if !stop {
        let parent = gini_of(&counts, n);
        let mut best_gain = 0.0;
        #[allow(clippy::needless_range_loop)]
        for feature in 0..n_features {
            let mut values: Vec<f64> = rows.iter().map(|&r| rows_x[r][feature]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for pair in values.windows(2) {
                let threshold = (pair[0] + pair[1]) / 2.0;
                let left: Vec<usize> = rows
                    .iter()
                    .copied()
                    .filter(|&r| rows_x[r][feature] <= threshold)
                    .collect();
                let right: Vec<usize> = rows
                    .iter()
                    .copied()
                    .filter(|&r| rows_x[r][feature] > threshold)
                    .collect();
                if left.len() < hp.min_samples_leaf || right.len() < hp.min_samples_leaf {
                    continue;
                }
                let lc = counts_of(&left, y, n_classes);
                let rc = counts_of(&right, y, n_classes);
                let nl = left.len() as u64;
                let nr = right.len() as u64;
                let children =
                    (nl as f64 * gini_of(&lc, nl) + nr as f64 * gini_of(&rc, nr)) / n as f64;
                let gain = parent - children;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((feature, threshold));
                }
            }
        }
    }

    let Some((feature, threshold)) = best else {
        let idx = nodes.len();
        nodes.push(Node::Leaf {
            class: majority_of(&counts),
            distribution: counts,
        });
        return idx;
    };
    let left_rows: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| rows_x[r][feature] <= threshold)
        .collect();
    let right_rows: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| rows_x[r][feature] > threshold)
        .collect();
    if left_rows.is_empty() || right_rows.is_empty() {
        let idx = nodes.len();
        nodes.push(Node::Leaf {
            class: majority_of(&counts),
            distribution: counts,
        });
        return idx;
    }
    let idx = nodes.len();
    nodes.push(Node::Split {
        feature,
        threshold,
        left: 0,
        right: 0,
    });
    let left = build(
        rows_x,
        y,
        n_classes,
        n_features,
        hp,
        &left_rows,
        depth + 1,
        nodes,
    );
    let right = build(
        rows_x,
        y,
        n_classes,
        n_features,
        hp,
        &right_rows,
        depth + 1,
        nodes,
    );
    if let Node::Split {
        left: l, right: r, ..
    } = &mut nodes[idx]
    {
        *l = left;
        *r = right;
    }
    idx
}

/// Route one row through an oracle node list.
pub fn predict_oracle(nodes: &[Node], row: &[f64]) -> u32 {
    let mut at = 0usize;
    loop {
        match &nodes[at] {
            Node::Leaf { class, .. } => return *class,
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

// ---------------------------------------------------------------------------
// Brute-force aggregation oracle
// ---------------------------------------------------------------------------

/// Recompute each record's final label from first principles: locate the
/// record's chunk among its MAC's records, count the chunk's labels, and
/// apply the majority unless it is tied or the MAC is excepted.
pub fn aggregate_oracle(
    records: &[(MacAddr, u32)],
    exceptions: &BTreeSet<MacAddr>,
    group: Option<usize>,
) -> Vec<u32> {
    let mut finals = Vec::with_capacity(records.len());
    for (i, &(mac, label)) in records.iter().enumerate() {
        if exceptions.contains(&mac) {
            finals.push(label);
            continue;
        }
        let mine: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, &(m, _))| m == mac)
            .map(|(j, _)| j)
            .collect();
        let rank = mine.iter().position(|&j| j == i).unwrap();
        let members: Vec<usize> = match group {
            None => mine,
            Some(g) => mine
                .iter()
                .copied()
                .enumerate()
                .filter(|(r, _)| r / g == rank / g)
                .map(|(_, j)| j)
                .collect(),
        };
        let mut label_counts: Vec<(u32, usize)> = Vec::new();
        for &j in &members {
            let l = records[j].1;
            match label_counts.iter_mut().find(|(x, _)| *x == l) {
                Some((_, c)) => *c += 1,
                None => label_counts.push((l, 1)),
            }
        }
        let top = label_counts.iter().map(|&(_, c)| c).max().unwrap();
        let winners: Vec<u32> = label_counts
            .iter()
            .filter(|&&(_, c)| c == top)
            .map(|&(l, _)| l)
            .collect();
        finals.push(if winners.len() == 1 {
            winners[0]
        } else {
            label
        });
    }
    finals
}

/// Exception detection from first principles: per label, the MAC with the
/// most records (smallest MAC on ties); listed when dominant twice.
pub fn exception_oracle(records: &[(MacAddr, u32)]) -> BTreeSet<MacAddr> {
    let labels: BTreeSet<u32> = records.iter().map(|&(_, l)| l).collect();
    let mut dominated: Vec<(MacAddr, u32)> = Vec::new();
    for &label in &labels {
        let macs: BTreeSet<MacAddr> = records
            .iter()
            .filter(|&&(_, l)| l == label)
            .map(|&(m, _)| m)
            .collect();
        let mut best: Option<(MacAddr, usize)> = None;
        for &mac in &macs {
            let count = records
                .iter()
                .filter(|&&(m, l)| m == mac && l == label)
                .count();
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((mac, count));
            }
        }
        dominated.push((best.unwrap().0, label));
    }
    let macs: BTreeSet<MacAddr> = dominated.iter().map(|&(m, _)| m).collect();
    macs.into_iter()
        .filter(|&m| dominated.iter().filter(|&&(dm, _)| dm == m).count() >= 2)
        .collect()
}
