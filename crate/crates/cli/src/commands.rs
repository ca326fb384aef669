//! Implementations of the subcommands (except `plot`, which has its own
//! module). Each takes the loaded dataset plus the resolved [`RunConfig`]
//! and prints either an aligned text report or a `schema_version`-tagged
//! JSON object.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use redfeat::dataset::{self, augment, Dataset, Format, RfProvenance};
use redfeat::eval::{classify_report, kmeans_ari, rank_features, sffs};
use redfeat::evolution::{run, RunReport, RunResult};
use redfeat::mi::{baseline_psi, estimate_mi, FeatureVector};
use redfeat::seed::derive;
use redfeat::{Error, Result};

use crate::config::{RunConfig, CLUSTER_INDEX, SUBSAMPLE_INDEX};

/// Version stamp carried by every JSON output and artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// How the input dataset's label column was requested on the command line.
pub struct InputSpec<'a> {
    pub path: &'a Path,
    /// Explicit `--label-col`, if given.
    pub label_col: Option<&'a str>,
    pub no_labels: bool,
}

/// Loads the input dataset. CSV files default to a label column named
/// `class` when one exists (silently falling back to all-features when it
/// does not); an explicit `--label-col` must exist. ARFF files carry their
/// own label attribute, so the flags do not apply.
pub fn load_input(spec: &InputSpec) -> Result<Dataset> {
    let format = dataset::format_for_path(spec.path);
    let label: Option<String> = match format {
        Format::Arff => None,
        Format::Csv => {
            if spec.no_labels {
                None
            } else if let Some(name) = spec.label_col {
                Some(name.to_string())
            } else {
                csv_header(spec.path)?
                    .into_iter()
                    .find(|name| name == "class")
            }
        }
    };
    dataset::load(spec.path, format, label.as_deref()).map_err(|e| match e {
        Error::Io(io) => Error::DatasetFormat {
            path: spec.path.display().to_string(),
            msg: io.to_string(),
        },
        other => other,
    })
}

fn csv_header(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::DatasetFormat {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut line = String::new();
    BufReader::new(file).read_line(&mut line)?;
    Ok(line
        .trim_end_matches(['\n', '\r'])
        .split(',')
        .map(|s| s.trim().to_string())
        .collect())
}

pub(crate) fn print_json_value(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

// ---------------------------------------------------------------------------
// augment

/// The sidecar written next to every augmented CSV: enough to audit and to
/// regenerate each r.f column exactly. `elapsed_secs` is zeroed in the
/// embedded run reports so that identical seeds give byte-identical files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvenanceFile {
    pub schema_version: u32,
    pub input: String,
    pub label_name: Option<String>,
    pub config: RunConfig,
    /// Source feature names, in dataset order.
    pub sources: Vec<String>,
    /// One evolution report per source, same order as `sources`.
    pub runs: Vec<RunReport>,
    /// r.f column name → provenance (source, tree, fitness).
    pub rfs: BTreeMap<String, RfProvenance>,
}

pub fn cmd_augment(
    data: &Dataset,
    cfg: &RunConfig,
    input: &Path,
    out: &Path,
    json: bool,
) -> Result<()> {
    let mut results: Vec<RunResult> = Vec::with_capacity(data.n_features());
    let mut failures: Vec<(String, Error)> = Vec::new();
    for (f, (name, column)) in data
        .feature_names()
        .iter()
        .zip(data.columns())
        .enumerate()
    {
        let evolution = cfg.evolution_for(f);
        match run(column, &evolution) {
            Ok(result) => {
                if !json {
                    println!("{name}: {}", describe_run(&result));
                }
                results.push(result);
            }
            Err(e) => failures.push((name.clone(), e)),
        }
    }
    if !failures.is_empty() {
        for (name, e) in &failures {
            eprintln!("{name}: evolution failed: {e}");
        }
        return Err(failures.remove(0).1);
    }

    let augmented = augment(data, &results, cfg.conditioning())?;
    let csv_path = out.with_extension("csv");
    augmented.data.save_csv(&csv_path)?;

    let runs: Vec<RunReport> = results
        .iter()
        .map(|r| {
            let mut report = r.report();
            report.elapsed_secs = 0.0;
            report
        })
        .collect();
    let provenance = ProvenanceFile {
        schema_version: SCHEMA_VERSION,
        input: input.display().to_string(),
        label_name: data.labels().map(|_| data.label_name().to_string()),
        config: cfg.clone(),
        sources: data.feature_names().to_vec(),
        runs,
        rfs: augmented.provenance.clone(),
    };
    let prov_path = out.with_extension("provenance.json");
    let mut text = serde_json::to_string_pretty(&provenance)?;
    text.push('\n');
    fs::write(&prov_path, text)?;

    if json {
        let features: Vec<serde_json::Value> = data
            .feature_names()
            .iter()
            .zip(&results)
            .map(|(name, r)| {
                let record = r.best.fitness.as_ref().and_then(|o| o.record());
                json!({
                    "source": name,
                    "fitness": record.map(|x| x.fitness),
                    "feasible": record.map(|x| x.feasible),
                    "psi": r.psi,
                })
            })
            .collect();
        print_json_value(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "augment",
            "csv": csv_path.display().to_string(),
            "provenance": prov_path.display().to_string(),
            "features": features,
            "config": cfg,
        }));
    } else {
        println!(
            "wrote {} ({} features x {} instances) and {}",
            csv_path.display(),
            augmented.data.n_features(),
            augmented.data.n_instances(),
            prov_path.display()
        );
    }
    Ok(())
}

fn describe_run(result: &RunResult) -> String {
    match result.best.fitness.as_ref().and_then(|o| o.record()) {
        Some(r) => {
            let shared = r
                .max_shared_mi
                .map_or("-".to_string(), |v| format!("{v:.3}"));
            format!(
                "fitness {:.4} ({}), minSource {:.3}, maxShared {}, {:.1}s",
                r.fitness,
                if r.feasible { "feasible" } else { "infeasible" },
                r.min_source_mi,
                shared,
                result.elapsed_secs
            )
        }
        None => "invalid individual".to_string(),
    }
}

// ---------------------------------------------------------------------------
// mi

pub fn cmd_mi(data: &Dataset, cfg: &RunConfig, cols: Option<&[String]>, json: bool) -> Result<()> {
    let names: Vec<String> = match cols {
        Some(c) if !c.is_empty() => c.to_vec(),
        _ => data.feature_names().to_vec(),
    };
    let mut vectors: Vec<FeatureVector> = Vec::with_capacity(names.len());
    for name in &names {
        vectors.push(data.column(name)?.clone());
    }

    let total_rows = data.n_instances();
    let mut rows_used = total_rows;
    if let Some(m) = cfg.mi_subsample {
        if m == 0 {
            return Err(Error::InvalidConfig("--mi-subsample must be at least 1".into()));
        }
        if m < total_rows {
            let keep = sample_rows(total_rows, m, derive(cfg.seed, SUBSAMPLE_INDEX));
            for v in &mut vectors {
                let values = v.values();
                *v = FeatureVector::new(keep.iter().map(|&r| values[r]).collect())?;
            }
            rows_used = m;
        }
    }

    let est = cfg.estimator();
    let mut psi = Vec::with_capacity(vectors.len());
    for v in &vectors {
        psi.push(baseline_psi(v, est)?);
    }
    let mut matrix = vec![vec![0.0f64; vectors.len()]; vectors.len()];
    for i in 0..vectors.len() {
        for j in 0..vectors.len() {
            matrix[i][j] = if i == j {
                1.0
            } else {
                estimate_mi(&vectors[i], &vectors[j], est)? / psi[i]
            };
        }
    }

    if json {
        print_json_value(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "mi",
            "columns": names,
            "psi": psi,
            "matrix": matrix,
            "rows_used": rows_used,
            "config": cfg,
        }));
        return Ok(());
    }

    println!(
        "normalized MI: cell (row, col) = MI(row, col) / psi(row); n = {rows_used}, k = {}, seed = {}",
        est.k_neighbors, cfg.seed
    );
    let name_w = names.iter().map(|n| n.len()).max().unwrap_or(4).max(4);
    let mut header = format!("{:<name_w$}", "");
    for n in &names {
        header.push_str(&format!(" {n:>8}"));
    }
    header.push_str(&format!(" {:>10}", "psi"));
    println!("{header}");
    for (i, n) in names.iter().enumerate() {
        let mut line = format!("{n:<name_w$}");
        for j in 0..names.len() {
            line.push_str(&format!(" {:>8.3}", matrix[i][j]));
        }
        line.push_str(&format!(" {:>10.4}", psi[i]));
        println!("{line}");
    }
    Ok(())
}

/// Seeded uniform sample of `m` distinct row indices out of `n`, ascending.
fn sample_rows(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + (derive(seed, i as u64) as usize) % (n - i);
        indices.swap(i, j);
    }
    let mut keep = indices[..m].to_vec();
    keep.sort_unstable();
    keep
}

// ---------------------------------------------------------------------------
// rank / select / classify / cluster

pub fn cmd_rank(data: &Dataset, cfg: &RunConfig, json: bool) -> Result<()> {
    let report = rank_features(data)?;
    if json {
        print_json_value(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "rank",
            "entries": report.entries,
            "config": cfg,
        }));
        return Ok(());
    }
    let name_w = report
        .entries
        .iter()
        .map(|e| e.feature.len())
        .max()
        .unwrap_or(7)
        .max(7);
    println!("{:<name_w$}  {:>9}", "feature", "info_gain");
    for entry in &report.entries {
        println!("{:<name_w$}  {:>9.4}", entry.feature, entry.info_gain);
    }
    Ok(())
}

pub fn cmd_select(data: &Dataset, cfg: &RunConfig, json: bool) -> Result<()> {
    let report = sffs(data, &cfg.split, cfg.wrapper_spec())?;
    if json {
        print_json_value(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "select",
            "report": report,
            "config": cfg,
        }));
        return Ok(());
    }
    println!("method      {}", report.method);
    println!("wrapper     {}", report.wrapper);
    println!(
        "selected    {} ({} of {} features)",
        report.selected.join(", "),
        report.selected.len(),
        data.n_features()
    );
    let trace: Vec<String> = report
        .accuracy_trace
        .iter()
        .map(|a| format!("{a:.4}"))
        .collect();
    println!("trace       {}", trace.join(" -> "));
    println!("validation  {:.4}", report.validation_accuracy);
    println!("test        {:.4}", report.test_accuracy);
    Ok(())
}

pub fn cmd_classify(data: &Dataset, cfg: &RunConfig, json: bool) -> Result<()> {
    let report = classify_report(data, &cfg.split, cfg.knn_k)?;
    if json {
        print_json_value(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "classify",
            "report": report,
            "config": cfg,
        }));
        return Ok(());
    }
    println!("knn(k={}) test accuracy  {:.4}", report.knn_k, report.knn_accuracy);
    println!("nb       test accuracy  {:.4}", report.nb_accuracy);
    println!("train/test sizes        {}/{}", report.n_train, report.n_test);
    Ok(())
}

pub fn cmd_cluster(data: &Dataset, cfg: &RunConfig, json: bool) -> Result<()> {
    let k = match cfg.cluster_k {
        Some(k) => k,
        None => data.classes()?.len(),
    };
    let report = kmeans_ari(data, k, cfg.restarts, derive(cfg.seed, CLUSTER_INDEX))?;
    if json {
        print_json_value(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "cluster",
            "report": report,
            "config": cfg,
        }));
        return Ok(());
    }
    println!(
        "k = {}, restarts = {}, best restart {} (inertia {:.4})",
        report.k, report.restarts, report.best_restart, report.inertia
    );
    println!("adjusted rand index  {:.4}", report.ari);
    for run in &report.runs {
        println!(
            "  restart {:>3}: inertia {:>12.4}  ari {:.4}",
            run.restart, run.inertia, run.ari
        );
    }
    Ok(())
}
