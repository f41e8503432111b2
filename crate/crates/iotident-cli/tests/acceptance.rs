//! CLI-level acceptance suite.
//!
//! The determinism criterion always runs. The dataset-conditional
//! reproduction criteria need the CIC-IoT-22 captures prepared locally and
//! are `#[ignore]`d by default; see the book's reproduction chapter for the
//! directory contract. Run them with:
//!
//! ```text
//! CIC_IOT22_DIR=/data/cic-iot-22 cargo test -p iotident-cli --test acceptance -- --ignored
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iotident"))
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("spawn iotident");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Every regular file under `dir`, relative paths, sorted.
fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                found.push(path.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    found.sort();
    found
}

// Criterion 7: identical config and seed produce a byte-identical report
// bundle. Wall-clock timings are the documented exception and live in
// their own file.
#[test]
fn c07_identical_config_and_seed_reproduce_bundle_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    run_ok(bin().args([
        "synth",
        "--out",
        corpus.to_str().unwrap(),
        "--devices",
        "5",
        "--packets",
        "80",
        "--sessions-per-state",
        "2",
        "--seed",
        "3",
    ]));

    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "captures_root = \"corpus\"\n\
         label_map = \"corpus/labels.csv\"\n\
         session_manifest = \"corpus/manifest.csv\"\n\
         output_dir = \"out\"\n\
         fraction = 0.5\n\
         repeats = 3\n\
         base_seed = 42\n\
         sweep = true\n",
    )
    .unwrap();

    let out_a = dir.path().join("bundle_a");
    let out_b = dir.path().join("bundle_b");
    for out in [&out_a, &out_b] {
        run_ok(bin().args([
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
    }

    let files_a = files_under(&out_a);
    let files_b = files_under(&out_b);
    assert_eq!(files_a, files_b, "bundle file sets differ");
    assert!(files_a.iter().any(|f| f.ends_with("conditions.csv")));
    assert!(files_a.iter().any(|f| f.ends_with("run_manifest.txt")));
    assert!(files_a.iter().any(|f| f.ends_with("sweep.csv")));

    let mut compared = 0usize;
    for rel in &files_a {
        if rel.file_name().is_some_and(|n| n == "timings.csv") {
            continue;
        }
        let a = std::fs::read(out_a.join(rel)).unwrap();
        let b = std::fs::read(out_b.join(rel)).unwrap();
        assert_eq!(a, b, "file {} differs between runs", rel.display());
        compared += 1;
    }
    assert!(
        compared > 10,
        "expected a real bundle, compared {compared} files"
    );
    println!("PASS criterion 7: determinism ({compared} files byte-identical)");
}

// ---------------------------------------------------------------------------
// Dataset-conditional criteria (CIC-IoT-22 required)
// ---------------------------------------------------------------------------
//
// Directory contract for $CIC_IOT22_DIR:
//   labels.csv        mac,label map for the 40 IP devices (32 classes),
//                     infrastructure MACs marked `ignore`
//   manifest.csv      the session manifest (data/cic-iot-22-manifest.csv
//                     with the path column pointing at the local pcaps)
//   adjustments.csv   data/cic-iot-22-adjustments.csv
//   <pcaps>           wherever manifest.csv points
// Optionally, for criterion 11, $CIC_IOT22_ZIGBEE with
//   interactions/<Device Name>.pcap and power/<Device Name>.pcap
// (file stem = device class label).

fn dataset_dir() -> Option<PathBuf> {
    match std::env::var_os("CIC_IOT22_DIR") {
        Some(dir) => Some(PathBuf::from(dir)),
        None => {
            eprintln!("SKIP: CIC_IOT22_DIR not set");
            None
        }
    }
}

struct DatasetRun {
    out: PathBuf,
    _keep: Option<tempfile::TempDir>,
}

/// One shared 10-repeat run over the prepared dataset; reused by criteria
/// 8 and 10. `CIC_IOT22_OUT` pins the output dir so repeated test
/// invocations reuse extraction and reports.
fn dataset_run(data: &Path) -> DatasetRun {
    let (out, keep) = match std::env::var_os("CIC_IOT22_OUT") {
        Some(dir) => (PathBuf::from(dir), None),
        None => {
            let tmp = tempfile::tempdir().unwrap();
            (tmp.path().join("out"), Some(tmp))
        }
    };
    let config = out.join("acceptance-run.toml");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(
        &config,
        format!(
            "captures_root = \"{0}\"\n\
             label_map = \"{0}/labels.csv\"\n\
             session_manifest = \"{0}/manifest.csv\"\n\
             adjustments = \"{0}/adjustments.csv\"\n\
             output_dir = \"{1}\"\n\
             fraction = 0.1\n\
             repeats = 10\n\
             base_seed = 42\n\
             group_size = \"whole\"\n",
            data.display(),
            out.display()
        ),
    )
    .unwrap();
    if !out.join("reports/conditions.csv").exists() {
        run_ok(bin().args(["run", "--config", config.to_str().unwrap()]));
    }
    DatasetRun { out, _keep: keep }
}

fn parse_conditions_csv(path: &Path) -> BTreeMap<(String, String), (f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut rows = BTreeMap::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("mode,") || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        rows.insert(
            (f[0].to_string(), f[1].to_string()),
            (f[4].parse().unwrap(), f[5].parse().unwrap()),
        );
    }
    rows
}

fn parse_per_class_csv(path: &Path) -> BTreeMap<String, f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut rows = BTreeMap::new();
    for line in text.lines() {
        if line.starts_with('#')
            || line.starts_with("class,")
            || line.starts_with("accuracy,")
            || line.starts_with("macro avg,")
            || line.starts_with("weighted avg,")
            || line.is_empty()
        {
            continue;
        }
        // Class names may be quoted; split from the right.
        let mut f: Vec<&str> = line.rsplitn(5, ',').collect();
        f.reverse();
        let class = f[0].trim_matches('"').to_string();
        let f1: f64 = f[3].parse().unwrap();
        rows.insert(class, f1);
    }
    rows
}

// Criterion 8: Table-level reproduction at 10 repeats.
#[test]
#[ignore = "requires the CIC-IoT-22 dataset (hours-scale)"]
fn c08_condition_grid_reproduces_reported_f1() {
    let Some(data) = dataset_dir() else { return };
    let run = dataset_run(&data);
    let rows = parse_conditions_csv(&run.out.join("reports/conditions.csv"));

    let checks = [
        (("individual", "AA"), 0.842, 0.03),
        (("aggregated", "AA"), 0.925, 0.03),
        (("aggregated", "AI"), 0.999, 0.005),
        (("individual", "II"), 0.814, 0.03),
    ];
    for ((mode, cond), expected, tolerance) in checks {
        let (f1, _std) = rows[&(mode.to_string(), cond.to_string())];
        assert!(
            (f1 - expected).abs() <= tolerance,
            "{mode} {cond}: macro F1 {f1} not within {expected}±{tolerance}"
        );
        println!("PASS criterion 8 [{mode} {cond}]: F1 {f1:.3} within {expected}±{tolerance}");
    }
}

// Criterion 9: the sweep finds exactly 1036 compatible ordered pairs and
// reproduces the II grand mean.
#[test]
#[ignore = "requires the CIC-IoT-22 dataset (hours-scale)"]
fn c09_session_sweep_pair_count_and_grand_means() {
    let Some(data) = dataset_dir() else { return };
    let run = dataset_run(&data);
    let sweep_out = run.out.join("sweep");
    if !sweep_out.join("sweep.csv").exists() {
        run_ok(bin().args([
            "sweep",
            "--features",
            run.out.join("features").to_str().unwrap(),
            "--manifest",
            data.join("manifest.csv").to_str().unwrap(),
            "--labels",
            data.join("labels.csv").to_str().unwrap(),
            "--out",
            sweep_out.to_str().unwrap(),
        ]));
    }
    let text = std::fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    let pairs = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("train_ref,") && !l.is_empty())
        .count();
    assert_eq!(
        pairs, 1036,
        "expected exactly 1036 compatible ordered pairs"
    );

    let means = std::fs::read_to_string(sweep_out.join("sweep_means.csv")).unwrap();
    let ii = means
        .lines()
        .find(|l| l.starts_with("II,"))
        .expect("II row in sweep means");
    let f: Vec<&str> = ii.split(',').collect();
    let ii_f1: f64 = f[2].parse().unwrap();
    assert!(
        (ii_f1 - 0.720).abs() <= 0.04,
        "II individual grand-mean F1 {ii_f1} not within 0.720±0.04"
    );
    println!("PASS criterion 9: 1036 pairs; II grand-mean F1 {ii_f1:.3}");
}

// Criterion 10: class-level spot checks in the AA aggregated report.
#[test]
#[ignore = "requires the CIC-IoT-22 dataset (hours-scale)"]
fn c10_class_level_spot_checks() {
    let Some(data) = dataset_dir() else { return };
    let run = dataset_run(&data);
    let per_class = parse_per_class_csv(&run.out.join("reports/per_class_AA_aggregated.csv"));
    assert_eq!(per_class.len(), 31, "expected 31 classes after adjustments");

    let near_perfect = per_class.values().filter(|&&f1| f1 >= 0.99).count();
    assert!(
        near_perfect >= 20,
        "only {near_perfect}/31 classes reach F1 >= 0.99"
    );
    let smart_board = per_class
        .iter()
        .find(|(c, _)| c.contains("Smart Board"))
        .map(|(_, &f1)| f1)
        .expect("Smart Board row");
    assert!(smart_board <= 0.3, "Smart Board F1 {smart_board} > 0.3");
    let ring = per_class
        .iter()
        .find(|(c, _)| c.contains("Ring Base Station"))
        .map(|(_, &f1)| f1)
        .expect("Ring Base Station row");
    assert!(ring <= 0.5, "Ring Base Station F1 {ring} > 0.5");
    println!(
        "PASS criterion 10: {near_perfect}/31 near-perfect; Smart Board {smart_board:.3}; Ring {ring:.3}"
    );
}

// Criterion 11: the Zigbee split. All Zigbee fingerprints carry the
// all-zero MAC, that MAC is excepted, and aggregation leaves the Zigbee
// classes' scores essentially unchanged.
#[test]
#[ignore = "requires the CIC-IoT-22 Zigbee captures"]
fn c11_zigbee_shared_mac_bypasses_aggregation() {
    use iotident::aggregate::{aggregate_labels, build_exception_list, GroupSize};
    use iotident::decode::decode_record;
    use iotident::evaluate::metrics;
    use iotident::features::{extract_fingerprint, Fingerprint, FEATURE_COUNT};
    use iotident::mac::MacAddr;
    use iotident::pcap::open_capture;
    use iotident::tree::{fit, Hyperparams};

    let Some(data) = dataset_dir() else { return };
    let Some(zigbee) = std::env::var_os("CIC_IOT22_ZIGBEE").map(PathBuf::from) else {
        eprintln!("SKIP: CIC_IOT22_ZIGBEE not set");
        return;
    };

    // Per-device captures: the file stem is the class label.
    let load_state = |state: &str| -> Vec<Fingerprint> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(zigbee.join(state)).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_none_or(|e| e != "pcap") {
                continue;
            }
            let label = path.file_stem().unwrap().to_string_lossy().into_owned();
            let cap = open_capture(&path).unwrap();
            for record in cap.records().unwrap() {
                let rec = record.unwrap();
                let pkt = decode_record(&rec, cap.link_type);
                if let Ok(mut fp) = extract_fingerprint(&pkt, state) {
                    fp.true_label = Some(label.clone());
                    out.push(fp);
                }
            }
        }
        out
    };
    let zigbee_train = load_state("interactions");
    let zigbee_test = load_state("power");
    assert!(!zigbee_test.is_empty(), "no Zigbee power captures found");
    for fp in zigbee_train.iter().chain(&zigbee_test) {
        assert_eq!(fp.src_mac, MacAddr::ZERO, "Zigbee record with non-zero MAC");
    }

    // AA condition data plus the Zigbee split.
    let run = dataset_run(&data);
    let read = |name: &str| {
        iotident::features::read_fingerprints_csv_path(run.out.join("datasets").join(name)).unwrap()
    };
    let mut train = read("active_train.csv");
    let mut test = read("active_test.csv");
    train.extend(zigbee_train.iter().cloned());
    test.extend(zigbee_test.iter().cloned());

    let classes: std::collections::BTreeSet<String> = train
        .iter()
        .chain(&test)
        .filter_map(|f| f.true_label.clone())
        .collect();
    let classes: Vec<String> = classes.iter().cloned().collect();
    let index: BTreeMap<&str, u32> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i as u32))
        .collect();
    let to_xy = |fps: &[Fingerprint]| {
        let mut x = Vec::with_capacity(fps.len() * FEATURE_COUNT);
        let mut y = Vec::with_capacity(fps.len());
        for fp in fps {
            x.extend_from_slice(&fp.features);
            y.push(index[fp.true_label.as_deref().unwrap()]);
        }
        (x, y)
    };
    let (x_train, y_train) = to_xy(&train);
    let (x_test, y_test) = to_xy(&test);
    let model = fit(
        &x_train,
        FEATURE_COUNT,
        &y_train,
        classes.clone(),
        &Hyperparams::default(),
        42,
    )
    .unwrap();
    let predicted = model.predict(&x_test).unwrap();

    let pairs: Vec<(MacAddr, u32)> = test
        .iter()
        .zip(&predicted)
        .map(|(fp, &p)| (fp.src_mac, p))
        .collect();
    let exceptions = build_exception_list(&pairs);
    assert!(
        exceptions.contains(&MacAddr::ZERO),
        "the shared all-zero MAC must be on the exception list"
    );
    let finals = aggregate_labels(&pairs, &exceptions, GroupSize::Whole);

    let cm_ind =
        iotident::evaluate::ConfusionMatrix::from_indices(&y_test, &predicted, &classes).unwrap();
    let cm_agg =
        iotident::evaluate::ConfusionMatrix::from_indices(&y_test, &finals, &classes).unwrap();
    let m_ind = metrics(&cm_ind).unwrap();
    let m_agg = metrics(&cm_agg).unwrap();
    let zigbee_labels: std::collections::BTreeSet<&str> = zigbee_test
        .iter()
        .filter_map(|f| f.true_label.as_deref())
        .collect();
    for (ind, agg) in m_ind.per_class.iter().zip(&m_agg.per_class) {
        if zigbee_labels.contains(ind.class.as_str()) {
            assert!(
                (ind.f1 - agg.f1).abs() <= 0.05,
                "{}: aggregation changed a Zigbee class (ind {:.3} vs agg {:.3})",
                ind.class,
                ind.f1,
                agg.f1
            );
        }
    }
    println!(
        "PASS criterion 11: zero-MAC excepted; {} Zigbee classes unchanged by aggregation",
        zigbee_labels.len()
    );
}
