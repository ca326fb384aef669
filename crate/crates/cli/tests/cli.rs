//! End-to-end tests of the `redfeat` binary: artifact shapes, determinism,
//! config precedence, exit codes, and the JSON report schema.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::LazyLock;

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_redfeat"))
}

fn iris_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("binary runs").status.code().unwrap_or(-1)
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// One small augmentation run shared by the read-only tests.
struct Fixture {
    _dir: TempDir,
    csv: PathBuf,
}

static FIXTURE: LazyLock<Fixture> = LazyLock::new(|| {
    let dir = tempfile::tempdir().expect("tempdir");
    let stem = dir.path().join("aug");
    run_ok(bin().args([
        "augment",
        "--input",
        iris_path().to_str().unwrap(),
        "--out",
        stem.to_str().unwrap(),
        "--seed",
        "5",
        "--trees",
        "2",
        "--pop",
        "32",
        "--gens",
        "3",
    ]));
    Fixture {
        csv: stem.with_extension("csv"),
        _dir: dir,
    }
});

#[test]
fn augment_writes_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut stems = Vec::new();
    for name in ["a", "b"] {
        let stem = dir.path().join(name);
        let out = run_ok(bin().args([
            "augment",
            "--input",
            iris_path().to_str().unwrap(),
            "--out",
            stem.to_str().unwrap(),
            "--seed",
            "42",
            "--trees",
            "3",
            "--pop",
            "32",
            "--gens",
            "3",
            "--json",
        ]));
        let report = stdout_json(&out);
        assert_eq!(report["schema_version"], 1);
        assert_eq!(report["command"], "augment");
        assert_eq!(report["features"].as_array().unwrap().len(), 4);
        stems.push(stem);
    }
    let csv_a = fs::read(stems[0].with_extension("csv")).unwrap();
    let csv_b = fs::read(stems[1].with_extension("csv")).unwrap();
    assert_eq!(csv_a, csv_b, "same seed must give byte-identical CSVs");
    let prov_a = fs::read(stems[0].with_extension("provenance.json")).unwrap();
    let prov_b = fs::read(stems[1].with_extension("provenance.json")).unwrap();
    assert_eq!(prov_a, prov_b, "same seed must give byte-identical provenance");

    // --trees 3 on 4 sources: 4 + 12 feature columns + the label column.
    let header = String::from_utf8(csv_a)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header.split(',').count(), 17);
    assert!(header.starts_with("F0,F1,F2,F3,F0a,F0b,F0c,"));
    assert!(header.ends_with(",class"));

    let prov: Value = serde_json::from_slice(&prov_a).unwrap();
    assert_eq!(prov["schema_version"], 1);
    assert_eq!(prov["sources"].as_array().unwrap().len(), 4);
    assert_eq!(prov["runs"].as_array().unwrap().len(), 4);
    assert_eq!(prov["rfs"].as_object().unwrap().len(), 12);
    assert_eq!(prov["label_name"], "class");
    // Wall-clock timings are zeroed so artifacts stay reproducible.
    for run in prov["runs"].as_array().unwrap() {
        assert_eq!(run["elapsed_secs"], 0.0);
    }
    // The echoed config carries the derived component seeds.
    let noise = prov["config"]["evolution"]["fitness"]["estimator"]["noise_seed"]
        .as_u64()
        .unwrap();
    assert_eq!(noise, redfeat::seed::derive(42, 1));
}

#[test]
fn mi_reports_unit_diagonal_and_psi() {
    let f = &*FIXTURE;
    let out = run_ok(bin().args([
        "mi",
        "--input",
        f.csv.to_str().unwrap(),
        "--cols",
        "F2,F2a,F2b",
        "--json",
    ]));
    let report = stdout_json(&out);
    assert_eq!(report["command"], "mi");
    assert_eq!(report["columns"].as_array().unwrap().len(), 3);
    let matrix = report["matrix"].as_array().unwrap();
    for (i, row) in matrix.iter().enumerate() {
        assert_eq!(row[i], 1.0, "self-pair must be exactly 1");
    }
    for psi in report["psi"].as_array().unwrap() {
        assert!(psi.as_f64().unwrap() > 0.0);
    }
    assert_eq!(report["rows_used"], 150);

    // Subsampling keeps the shape and stays deterministic.
    let sub = |args: &mut Command| stdout_json(&run_ok(args));
    let a = sub(bin().args([
        "mi",
        "--input",
        f.csv.to_str().unwrap(),
        "--cols",
        "F2,F2a",
        "--mi-subsample",
        "60",
        "--json",
    ]));
    let b = sub(bin().args([
        "mi",
        "--input",
        f.csv.to_str().unwrap(),
        "--cols",
        "F2,F2a",
        "--mi-subsample",
        "60",
        "--json",
    ]));
    assert_eq!(a["rows_used"], 60);
    assert_eq!(a["matrix"], b["matrix"]);
}

#[test]
fn rank_select_classify_cluster_report_shapes() {
    let f = &*FIXTURE;
    let rank = stdout_json(&run_ok(bin().args([
        "rank",
        "--input",
        f.csv.to_str().unwrap(),
        "--json",
    ])));
    let entries = rank["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 12);
    let gains: Vec<f64> = entries
        .iter()
        .map(|e| e["info_gain"].as_f64().unwrap())
        .collect();
    assert!(gains.windows(2).all(|w| w[0] >= w[1]), "sorted descending");

    let select = stdout_json(&run_ok(bin().args([
        "select",
        "--input",
        iris_path().to_str().unwrap(),
        "--json",
    ])));
    assert_eq!(select["report"]["method"], "sffs");
    assert_eq!(select["report"]["wrapper"], "knn(k=3)");
    let selected = select["report"]["selected"].as_array().unwrap();
    assert!(!selected.is_empty() && selected.len() <= 2);
    assert!(select["report"]["test_accuracy"].as_f64().unwrap() >= 0.9);

    let classify = stdout_json(&run_ok(bin().args([
        "classify",
        "--input",
        iris_path().to_str().unwrap(),
        "--json",
    ])));
    let knn = classify["report"]["knn_accuracy"].as_f64().unwrap();
    let nb = classify["report"]["nb_accuracy"].as_f64().unwrap();
    assert!((0.8..=1.0).contains(&knn));
    assert!((0.8..=1.0).contains(&nb));

    let cluster = stdout_json(&run_ok(bin().args([
        "cluster",
        "--input",
        iris_path().to_str().unwrap(),
        "--restarts",
        "5",
        "--json",
    ])));
    assert_eq!(cluster["report"]["k"], 3, "defaults to the class count");
    assert_eq!(cluster["report"]["runs"].as_array().unwrap().len(), 5);
    assert!(cluster["report"]["ari"].as_f64().unwrap() > 0.4);
}

#[test]
fn plot_writes_scatter_files_per_pair() {
    let f = &*FIXTURE;
    let dir = tempfile::tempdir().unwrap();
    let plots = dir.path().join("plots");
    let out = run_ok(bin().args([
        "plot",
        "--input",
        f.csv.to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
        "--dump-trees",
    ]));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout.lines().filter(|l| l.contains(": (")).count(),
        8,
        "one s-expression per r.f"
    );

    let mut csvs = 0;
    let mut svgs = 0;
    for entry in fs::read_dir(&plots).unwrap() {
        let path = entry.unwrap().path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => {
                csvs += 1;
                let text = fs::read_to_string(&path).unwrap();
                assert_eq!(text.lines().count(), 151, "header + one row per instance");
                assert!(text.lines().next().unwrap().ends_with(",class"));
            }
            Some("svg") => {
                svgs += 1;
                let text = fs::read_to_string(&path).unwrap();
                assert_well_formed_markup(&text);
                assert!(text.contains("(MI="));
                assert_eq!(text.matches("<circle").count(), 150);
            }
            other => panic!("unexpected plot file type: {other:?}"),
        }
    }
    assert_eq!((csvs, svgs), (8, 8));

    // Jitter only affects the rendered SVG, never the data files.
    let jit = dir.path().join("jit");
    run_ok(bin().args([
        "plot",
        "--input",
        f.csv.to_str().unwrap(),
        "--out",
        jit.to_str().unwrap(),
        "--jitter",
    ]));
    let pair = "F2_F2a";
    assert_eq!(
        fs::read(plots.join(format!("{pair}.csv"))).unwrap(),
        fs::read(jit.join(format!("{pair}.csv"))).unwrap()
    );
    assert_ne!(
        fs::read(plots.join(format!("{pair}.svg"))).unwrap(),
        fs::read(jit.join(format!("{pair}.svg"))).unwrap()
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 7, "restarts": 4}"#).unwrap();
    let report = stdout_json(&run_ok(bin().args([
        "cluster",
        "--input",
        iris_path().to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--json",
    ])));
    assert_eq!(report["report"]["restarts"], 4);
    assert_eq!(report["config"]["seed"], 7);

    let overridden = stdout_json(&run_ok(bin().args([
        "cluster",
        "--input",
        iris_path().to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--restarts",
        "2",
        "--json",
    ])));
    assert_eq!(overridden["report"]["restarts"], 2);
}

#[test]
fn arff_input_detects_its_label_attribute() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.arff");
    fs::write(
        &path,
        "@relation toy\n\
         @attribute a numeric\n\
         @attribute b numeric\n\
         @attribute class {x,y}\n\
         @data\n\
         1.0,2.0,x\n1.5,1.0,x\n2.0,2.5,x\n7.0,8.0,y\n8.0,7.5,y\n9.0,8.5,y\n\
         1.2,2.2,x\n8.2,7.2,y\n",
    )
    .unwrap();
    let report = stdout_json(&run_ok(bin().args([
        "rank",
        "--input",
        path.to_str().unwrap(),
        "--json",
    ])));
    assert_eq!(report["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes_distinguish_usage_data_and_run_errors() {
    let f = &*FIXTURE;
    // 1: usage errors
    assert_eq!(exit_code(bin().args(["rank"])), 1, "missing --input");
    assert_eq!(
        exit_code(bin().args([
            "augment",
            "--input",
            iris_path().to_str().unwrap(),
        ])),
        1,
        "augment without --out"
    );
    assert_eq!(
        exit_code(bin().args([
            "select",
            "--input",
            iris_path().to_str().unwrap(),
            "--split",
            "60,40",
        ])),
        1,
        "malformed --split"
    );
    assert_eq!(exit_code(bin().args(["frobnicate"])), 1, "unknown subcommand");

    // 2: data errors
    assert_eq!(
        exit_code(bin().args(["rank", "--input", "/nonexistent/x.csv"])),
        2,
        "unreadable input"
    );
    assert_eq!(
        exit_code(bin().args([
            "mi",
            "--input",
            f.csv.to_str().unwrap(),
            "--cols",
            "F2,NOPE",
        ])),
        2,
        "unknown column"
    );
    assert_eq!(
        exit_code(bin().args([
            "rank",
            "--input",
            iris_path().to_str().unwrap(),
            "--no-labels",
        ])),
        2,
        "label column forced numeric"
    );
    let dir = tempfile::tempdir().unwrap();
    let lonely = dir.path().join("lonely.csv");
    fs::copy(&f.csv, &lonely).unwrap();
    assert_eq!(
        exit_code(bin().args(["plot", "--input", lonely.to_str().unwrap()])),
        2,
        "augmented CSV without its provenance sidecar"
    );

    // 0: help and version are not errors
    assert_eq!(exit_code(bin().arg("--help")), 0);
    assert_eq!(exit_code(bin().arg("--version")), 0);
}

/// Minimal well-formedness check for the generated SVG: every opened tag is
/// closed in order, attributes are quote-balanced, `&` only starts entities.
fn assert_well_formed_markup(text: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let tail = &rest[start + 1..];
        let end = tail.find('>').expect("unterminated tag");
        let tag = &tail[..end];
        assert_eq!(tag.matches('"').count() % 2, 0, "unbalanced quotes in <{tag}>");
        if let Some(name) = tag.strip_prefix('/') {
            assert_eq!(stack.pop().as_deref(), Some(name), "mismatched </{name}>");
        } else if !tag.ends_with('/') {
            let name: String = tag
                .chars()
                .take_while(|c| !c.is_whitespace() && *c != '/')
                .collect();
            stack.push(name);
        }
        rest = &tail[end + 1..];
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    for (i, _) in text.match_indices('&') {
        let entity = &text[i..text[i..].find(';').map(|j| i + j + 1).unwrap_or(text.len())];
        assert!(
            ["&amp;", "&lt;", "&gt;", "&quot;", "&apos;"].contains(&entity),
            "stray ampersand: {entity:?}"
        );
    }
}
