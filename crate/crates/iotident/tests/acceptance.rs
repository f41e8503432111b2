//! Dataset-free acceptance suite.
//!
//! Each test is one criterion, checked at its stated tolerance against an
//! independent oracle or closed-form value, and prints a PASS line. The
//! CLI-level criteria (byte-identical run bundles and the full-dataset
//! reproduction suite) live in the CLI crate's acceptance target.

mod common;

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use iotident::aggregate::{aggregate_labels, build_exception_list, GroupSize};
use iotident::evaluate::{confusion, metrics};
use iotident::features::payload_entropy;
use iotident::mac::MacAddr;
use iotident::tree::{fit, Hyperparams};

fn mac(last: u8) -> MacAddr {
    MacAddr([0x02, 0, 0, 0, 0, last])
}

// Criterion 1: entropy against a direct histogram computation, 1e-12,
// with the 0.0 and 8.0 boundary cases exact.
#[test]
fn c01_entropy_matches_histogram_oracle() {
    let mut rng = StdRng::seed_from_u64(0xE47);
    for _ in 0..1000 {
        let len = rng.random_range(0..2048usize);
        let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let got = payload_entropy(&payload);
        let want = common::entropy_oracle(&payload);
        assert!(
            (got - want).abs() <= 1e-12,
            "len {len}: {got} vs oracle {want}"
        );
        assert!((0.0..=8.0 + 1e-12).contains(&got));
    }
    assert_eq!(payload_entropy(&[]), 0.0);
    assert_eq!(payload_entropy(&[7u8; 333]), 0.0);
    let uniform: Vec<u8> = (0..=255).collect();
    assert_eq!(payload_entropy(&uniform), 8.0);
    let doubled: Vec<u8> = uniform.iter().chain(&uniform).copied().collect();
    assert_eq!(payload_entropy(&doubled), 8.0);
    println!("PASS criterion 1: entropy oracle (1000 payloads, 1e-12; boundaries exact)");
}

// Criterion 2: the fitted tree is node-identical to the exhaustive-split
// oracle on 200 random datasets, and predictions agree exactly.
#[test]
fn c02_tree_matches_bruteforce_oracle() {
    let mut rng = StdRng::seed_from_u64(0x7EE);
    for case in 0..200 {
        let n_samples = rng.random_range(1..=25usize);
        let n_features = rng.random_range(1..=4usize);
        let n_classes = rng.random_range(1..=3usize);
        let rows: Vec<Vec<f64>> = (0..n_samples)
            .map(|_| {
                (0..n_features)
                    .map(|_| f64::from(rng.random_range(0..=12u8)))
                    .collect()
            })
            .collect();
        let y: Vec<u32> = (0..n_samples)
            .map(|_| rng.random_range(0..n_classes as u32))
            .collect();
        let hp = if case % 4 == 3 {
            Hyperparams {
                max_depth: Some(rng.random_range(1..=3)),
                min_samples_split: rng.random_range(2..=4),
                min_samples_leaf: rng.random_range(1..=2),
            }
        } else {
            Hyperparams::default()
        };

        let x: Vec<f64> = rows.iter().flatten().copied().collect();
        let classes: Vec<String> = (0..n_classes).map(|c| format!("c{c}")).collect();
        let model = fit(&x, n_features, &y, classes, &hp, 0).unwrap();
        let oracle_nodes = common::fit_oracle(&rows, &y, n_classes, &hp);
        assert_eq!(
            model.nodes, oracle_nodes,
            "case {case}: tree differs from oracle (n={n_samples}, f={n_features}, k={n_classes}, hp={hp:?})"
        );

        for _ in 0..20 {
            let probe: Vec<f64> = (0..n_features)
                .map(|_| f64::from(rng.random_range(0..=12u8)) - 0.5)
                .collect();
            assert_eq!(
                model.predict_one(&probe).unwrap(),
                common::predict_oracle(&oracle_nodes, &probe)
            );
        }
    }
    println!("PASS criterion 2: decision-tree oracle (200 datasets node-identical)");
}

// Criterion 3: aggregation equals the brute-force majority oracle on 500
// random prediction lists; exception MACs pass through; Whole grouping is
// idempotent.
#[test]
fn c03_aggregation_matches_bruteforce_oracle() {
    let mut rng = StdRng::seed_from_u64(0xA66);
    for case in 0..500 {
        let len = rng.random_range(1..=50usize);
        let n_macs = rng.random_range(1..=5u8);
        let n_labels = rng.random_range(1..=4u32);
        let records: Vec<(MacAddr, u32)> = (0..len)
            .map(|_| {
                (
                    mac(rng.random_range(1..=n_macs)),
                    rng.random_range(0..n_labels),
                )
            })
            .collect();
        let group = if rng.random_bool(0.5) {
            GroupSize::Whole
        } else {
            GroupSize::Fixed(std::num::NonZeroUsize::new(rng.random_range(1..=7)).unwrap())
        };
        let group_opt = match group {
            GroupSize::Whole => None,
            GroupSize::Fixed(n) => Some(n.get()),
        };

        let exceptions = build_exception_list(&records);
        let oracle_exceptions = common::exception_oracle(&records);
        let got_macs: BTreeSet<MacAddr> = exceptions.macs().copied().collect();
        assert_eq!(
            got_macs, oracle_exceptions,
            "case {case}: exception sets differ"
        );

        let finals = aggregate_labels(&records, &exceptions, group);
        let oracle_finals = common::aggregate_oracle(&records, &oracle_exceptions, group_opt);
        assert_eq!(
            finals, oracle_finals,
            "case {case}: finals differ ({group:?})"
        );

        for (i, &(m, predicted)) in records.iter().enumerate() {
            if exceptions.contains(&m) {
                assert_eq!(finals[i], predicted, "case {case}: exception MAC rewritten");
            }
        }

        if group == GroupSize::Whole {
            let re_records: Vec<(MacAddr, u32)> = records
                .iter()
                .map(|&(m, _)| m)
                .zip(finals.iter().copied())
                .collect();
            let twice = aggregate_labels(&re_records, &exceptions, GroupSize::Whole);
            assert_eq!(twice, finals, "case {case}: Whole grouping not idempotent");
        }
    }
    println!("PASS criterion 3: aggregation oracle (500 lists; pass-through; idempotence)");
}

// Criterion 4: five devices, 30% per-packet noise, 10k packets. Whole
// grouping must lift ~0.70 individual accuracy to ≥ 0.99.
#[test]
fn c04_noisy_majority_gain() {
    let mut rng = StdRng::seed_from_u64(0x904);
    let n_devices = 5u32;
    let per_device = 2000usize;
    let mut records: Vec<(MacAddr, u32)> = Vec::new();
    let mut truth: Vec<u32> = Vec::new();
    for step in 0..per_device {
        for device in 0..n_devices {
            let _ = step;
            let predicted = if rng.random_bool(0.70) {
                device
            } else {
                // Uniform over the other four labels.
                let mut other = rng.random_range(0..n_devices - 1);
                if other >= device {
                    other += 1;
                }
                other
            };
            records.push((mac(device as u8 + 1), predicted));
            truth.push(device);
        }
    }
    let individual_acc = records
        .iter()
        .zip(&truth)
        .filter(|((_, p), t)| p == *t)
        .count() as f64
        / records.len() as f64;
    assert!(
        (individual_acc - 0.70).abs() <= 0.02,
        "individual accuracy {individual_acc} out of 0.70±0.02"
    );

    let exceptions = build_exception_list(&records);
    assert!(
        exceptions.is_empty(),
        "clean per-device MACs must not be excepted"
    );
    let finals = aggregate_labels(&records, &exceptions, GroupSize::Whole);
    let accuracy_of = |finals: &[u32]| {
        finals.iter().zip(&truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
    };
    let aggregated_acc = accuracy_of(&finals);
    assert!(
        aggregated_acc >= 0.99,
        "aggregated accuracy {aggregated_acc} below 0.99"
    );
    // Small fixed groups already beat the per-packet rate (p > 0.5).
    for size in [3usize, 5, 9] {
        let grouped = aggregate_labels(
            &records,
            &exceptions,
            GroupSize::Fixed(std::num::NonZeroUsize::new(size).unwrap()),
        );
        let acc = accuracy_of(&grouped);
        assert!(
            acc > individual_acc,
            "group size {size}: accuracy {acc} did not beat individual {individual_acc}"
        );
    }
    println!(
        "PASS criterion 4: noisy-majority gain (individual {individual_acc:.3} -> aggregated {aggregated_acc:.3})"
    );
}

// Criterion 5: a uniform random predictor over 32 classes scores accuracy
// 1/32 ≈ 0.031 within ±0.01.
#[test]
fn c05_random_baseline_sanity() {
    let mut rng = StdRng::seed_from_u64(0xBA5E);
    let classes: Vec<String> = (0..32).map(|i| format!("device-{i:02}")).collect();
    let n = 20_000;
    let t: Vec<String> = (0..n)
        .map(|_| classes[rng.random_range(0..32usize)].clone())
        .collect();
    let p: Vec<String> = (0..n)
        .map(|_| classes[rng.random_range(0..32usize)].clone())
        .collect();
    let cm = confusion(&t, &p, &classes).unwrap();
    let m = metrics(&cm).unwrap();
    assert!(
        (m.accuracy - 0.031).abs() <= 0.01,
        "random baseline accuracy {} out of 0.031±0.01",
        m.accuracy
    );
    println!(
        "PASS criterion 5: random baseline (accuracy {:.4} ~ 1/32)",
        m.accuracy
    );
}

// Criterion 6: the transfer problem. Two device classes re-encapsulated
// behind one gateway MAC: that MAC must be excepted and its per-packet
// predictions preserved.
#[test]
fn c06_transfer_problem_scenario() {
    let mut rng = StdRng::seed_from_u64(0x7AA);
    let gateway = mac(9);
    const DOOR: u32 = 0;
    const HUB: u32 = 1;
    const CAM: u32 = 2;
    const PLUG: u32 = 3;
    let mut records: Vec<(MacAddr, u32)> = Vec::new();
    // Door sensor and home hub both emit through the gateway's address.
    for i in 0..400 {
        let true_class = if i % 2 == 0 { DOOR } else { HUB };
        let predicted = if rng.random_bool(0.9) {
            true_class
        } else {
            rng.random_range(0..4u32)
        };
        records.push((gateway, predicted));
    }
    // Two ordinary devices with their own MACs.
    for i in 0..400 {
        let (m, class) = if i % 2 == 0 {
            (mac(1), CAM)
        } else {
            (mac(2), PLUG)
        };
        let predicted = if rng.random_bool(0.9) {
            class
        } else {
            rng.random_range(0..4u32)
        };
        records.push((m, predicted));
    }

    let exceptions = build_exception_list(&records);
    assert!(
        exceptions.contains(&gateway),
        "gateway MAC must land on the exception list"
    );
    assert!(!exceptions.contains(&mac(1)));
    assert!(!exceptions.contains(&mac(2)));

    let finals = aggregate_labels(&records, &exceptions, GroupSize::Whole);
    for (i, &(m, predicted)) in records.iter().enumerate() {
        if m == gateway {
            assert_eq!(
                finals[i], predicted,
                "gateway predictions must be preserved"
            );
        }
    }
    // The ordinary devices collapse onto their majority label.
    assert!(finals
        .iter()
        .zip(&records)
        .filter(|(_, (m, _))| *m == mac(1))
        .all(|(f, _)| *f == CAM));
    println!("PASS criterion 6: transfer problem (gateway excepted, predictions preserved)");
}
