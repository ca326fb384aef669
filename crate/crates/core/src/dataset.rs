//! Dataset ingestion, input conditioning, redundant-feature post-processing,
//! and augmented-dataset assembly.
//!
//! The conditioning pipeline prepares a source feature for tree evaluation:
//! min-max scale to [0, 1], add a small seeded per-instance jitter δ (so
//! duplicate values separate and the feature becomes effectively
//! continuous), then add ε so every value is strictly positive — log and
//! pow never see zero.
//! Redundant features coming back out of trees are scaled to [0, 1] and
//! rounded to a fixed number of decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::RunResult;
use crate::fitness::FitnessRecord;
use crate::mi::FeatureVector;
use crate::seed::splitmix64;

/// File format accepted by [`load`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Arff,
}

/// A numeric dataset: named feature columns of equal length, with optional
/// per-instance class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    columns: Vec<FeatureVector>,
    labels: Option<Vec<String>>,
    label_name: String,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        columns: Vec<FeatureVector>,
        labels: Option<Vec<String>>,
        label_name: impl Into<String>,
    ) -> Result<Self> {
        if feature_names.len() != columns.len() {
            return Err(Error::InvalidConfig(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate feature name {name}")));
            }
        }
        let n = columns.first().map(|c| c.len()).unwrap_or(0);
        for (name, col) in feature_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: col.len(),
                });
            }
            let _ = name;
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: labels.len(),
                });
            }
        }
        Ok(Dataset {
            feature_names,
            columns,
            labels,
            label_name: label_name.into(),
        })
    }

    pub fn n_instances(&self) -> usize {
        self.columns.first().map(|c| c.len()).unwrap_or(0)
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn columns(&self) -> &[FeatureVector] {
        &self.columns
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&FeatureVector> {
        Ok(&self.columns[self.feature_index(name)?])
    }

    /// The distinct labels in ascending order — the canonical "label order"
    /// used for deterministic tie-breaking across the evaluation harness.
    pub fn classes(&self) -> Result<Vec<String>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::MissingLabels("dataset has no label column".into()))?;
        let mut classes: Vec<String> = labels.to_vec();
        classes.sort();
        classes.dedup();
        Ok(classes)
    }

    /// Instance `rows` restricted to the `feature_idx` columns, as row-major
    /// vectors — the layout the classifiers consume.
    pub fn row_matrix(&self, feature_idx: &[usize], rows: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&r| feature_idx.iter().map(|&f| self.columns[f].values()[r]).collect())
            .collect()
    }

    /// Serialises to CSV: header row, one instance per row, label column
    /// last. Floats use the shortest representation that round-trips.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = self.feature_names.iter().map(|s| s.as_str()).collect();
        if self.labels.is_some() {
            header.push(&self.label_name);
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for row in 0..self.n_instances() {
            let mut first = true;
            for col in &self.columns {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{}", col.values()[row]);
            }
            if let Some(labels) = &self.labels {
                if !first {
                    out.push(',');
                }
                out.push_str(&labels[row]);
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Loads a dataset. For CSV, `label_col` names the column to treat as class
/// labels (`None` reads every column as a numeric feature). ARFF derives the
/// label from its single nominal attribute and ignores `label_col`.
pub fn load(path: &Path, format: Format, label_col: Option<&str>) -> Result<Dataset> {
    match format {
        Format::Csv => load_csv(path, label_col),
        Format::Arff => load_arff(path),
    }
}

/// Infers [`Format`] from a file extension (`.arff` or anything else = CSV).
pub fn format_for_path(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("arff") => Format::Arff,
        _ => Format::Csv,
    }
}

fn load_csv(path: &Path, label_col: Option<&str>) -> Result<Dataset> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::DatasetFormat {
            path: display.clone(),
            msg: e.to_string(),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::DatasetFormat {
            path: display.clone(),
            msg: format!("missing header row: {e}"),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::DatasetFormat {
            path: display,
            msg: "empty file (no header row)".into(),
        });
    }
    let label_idx = match label_col {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::UnknownColumn(name.to_string()))?,
        ),
        None => None,
    };
    let mut feature_names = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if Some(i) != label_idx {
            feature_names.push(h.clone());
        }
    }
    let mut raw_columns: Vec<Vec<f64>> = vec![Vec::new(); feature_names.len()];
    let mut labels: Vec<String> = Vec::new();
    for (row_num, record) in reader.records().enumerate() {
        // +2: one for the header, one for 1-based numbering
        let row_display = row_num + 2;
        let record = record.map_err(|e| Error::DatasetParse {
            path: display.clone(),
            row: row_display,
            msg: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::DatasetParse {
                path: display.clone(),
                row: row_display,
                msg: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        let mut feature_pos = 0;
        for (i, cell) in record.iter().enumerate() {
            if Some(i) == label_idx {
                labels.push(cell.to_string());
            } else {
                let value: f64 = cell.parse().map_err(|_| Error::DatasetParse {
                    path: display.clone(),
                    row: row_display,
                    msg: format!("column '{}': non-numeric value '{}'", headers[i], cell),
                })?;
                raw_columns[feature_pos].push(value);
                feature_pos += 1;
            }
        }
    }
    if raw_columns.first().map(|c| c.is_empty()).unwrap_or(true) {
        return Err(Error::DatasetFormat {
            path: display,
            msg: "no data rows".into(),
        });
    }
    let columns = raw_columns
        .into_iter()
        .map(FeatureVector::new)
        .collect::<Result<Vec<_>>>()?;
    let label_name = label_idx
        .map(|i| headers[i].clone())
        .unwrap_or_else(|| "class".to_string());
    Dataset::new(
        feature_names,
        columns,
        label_idx.map(|_| labels),
        label_name,
    )
}

fn strip_quotes(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2
        && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"')))
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// ARFF subset: numeric attributes plus at most one nominal attribute (the
/// class). Relational, string, date, and sparse data are rejected.
fn load_arff(path: &Path) -> Result<Dataset> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    #[derive(Clone)]
    enum Attr {
        Numeric(String),
        Nominal(String, Vec<String>),
    }
    let mut attrs: Vec<Attr> = Vec::new();
    let mut in_data = false;
    let mut feature_names = Vec::new();
    let mut raw_columns: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut nominal: Option<(usize, String, Vec<String>)> = None; // attr index, name, values

    for (line_num, raw_line) in text.lines().enumerate() {
        let row = line_num + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                continue;
            }
            if lower.starts_with("@attribute") {
                let rest = line["@attribute".len()..].trim();
                // name may be quoted; the type is everything after it
                let (name, ty) = if rest.starts_with('\'') || rest.starts_with('"') {
                    let quote = rest.chars().next().unwrap();
                    let end = rest[1..].find(quote).ok_or_else(|| Error::DatasetParse {
                        path: display.clone(),
                        row,
                        msg: "unterminated quoted attribute name".into(),
                    })? + 1;
                    (rest[1..end].to_string(), rest[end + 1..].trim())
                } else {
                    let mut parts = rest.splitn(2, char::is_whitespace);
                    let name = parts.next().unwrap_or("").to_string();
                    (name, parts.next().unwrap_or("").trim())
                };
                let ty_lower = ty.to_ascii_lowercase();
                if ty.starts_with('{') {
                    let inner = ty.trim_start_matches('{').trim_end_matches('}');
                    let values: Vec<String> = inner
                        .split(',')
                        .map(|v| strip_quotes(v).to_string())
                        .collect();
                    if nominal.is_some() {
                        return Err(Error::DatasetFormat {
                            path: display,
                            msg: "multiple nominal attributes; only one class attribute is supported"
                                .into(),
                        });
                    }
                    nominal = Some((attrs.len(), name.clone(), values.clone()));
                    attrs.push(Attr::Nominal(name, values));
                } else if ty_lower == "numeric" || ty_lower == "real" || ty_lower == "integer" {
                    feature_names.push(name.clone());
                    raw_columns.push(Vec::new());
                    attrs.push(Attr::Numeric(name));
                } else {
                    return Err(Error::DatasetParse {
                        path: display,
                        row,
                        msg: format!("unsupported attribute type '{ty}'"),
                    });
                }
                continue;
            }
            if lower.starts_with("@data") {
                if attrs.is_empty() {
                    return Err(Error::DatasetFormat {
                        path: display,
                        msg: "@data before any @attribute".into(),
                    });
                }
                in_data = true;
                continue;
            }
            return Err(Error::DatasetParse {
                path: display,
                row,
                msg: format!("unrecognised header line '{line}'"),
            });
        }
        // data section
        if line.starts_with('{') {
            return Err(Error::DatasetParse {
                path: display,
                row,
                msg: "sparse ARFF rows are not supported".into(),
            });
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != attrs.len() {
            return Err(Error::DatasetParse {
                path: display,
                row,
                msg: format!("expected {} values, found {}", attrs.len(), cells.len()),
            });
        }
        let mut feature_pos = 0;
        for (attr, cell) in attrs.iter().zip(&cells) {
            match attr {
                Attr::Numeric(name) => {
                    let value: f64 = cell.parse().map_err(|_| Error::DatasetParse {
                        path: display.clone(),
                        row,
                        msg: format!("attribute '{name}': non-numeric value '{cell}'"),
                    })?;
                    raw_columns[feature_pos].push(value);
                    feature_pos += 1;
                }
                Attr::Nominal(name, values) => {
                    let cell = strip_quotes(cell);
                    if !values.iter().any(|v| v == cell) {
                        return Err(Error::DatasetParse {
                            path: display.clone(),
                            row,
                            msg: format!("attribute '{name}': undeclared nominal value '{cell}'"),
                        });
                    }
                    labels.push(cell.to_string());
                }
            }
        }
    }
    if !in_data || raw_columns.first().map(|c| c.is_empty()).unwrap_or(true) {
        return Err(Error::DatasetFormat {
            path: display,
            msg: "no data rows".into(),
        });
    }
    let columns = raw_columns
        .into_iter()
        .map(FeatureVector::new)
        .collect::<Result<Vec<_>>>()?;
    let (labels, label_name) = match nominal {
        Some((_, name, _)) => (Some(labels), name),
        None => (None, "class".to_string()),
    };
    Dataset::new(feature_names, columns, labels, label_name)
}

/// Conditioning knobs: the ε offset, the δ jitter seed, and the post-process
/// rounding precision.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConditioningConfig {
    pub epsilon: f64,
    pub delta_seed: u64,
    pub rounding_places: usize,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        ConditioningConfig {
            epsilon: 1e-3,
            delta_seed: 0,
            rounding_places: 5,
        }
    }
}

impl ConditioningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be > 0".into()));
        }
        if self.rounding_places < 1 {
            return Err(Error::InvalidConfig("rounding_places must be >= 1".into()));
        }
        Ok(())
    }
}

/// The per-instance jitter δ ∈ [0.001ε, ε] for instance `index`, derived
/// from (seed, index) so the whole δ sequence is fixed by the seed.
fn instance_delta(index: usize, cfg: &ConditioningConfig) -> f64 {
    let key = splitmix64(cfg.delta_seed ^ splitmix64(index as u64 + 1));
    // 53 high bits → uniform in [0, 1)
    let unit = (key >> 11) as f64 / (1u64 << 53) as f64;
    let lo = 0.001 * cfg.epsilon;
    lo + unit * (cfg.epsilon - lo)
}

/// Prepares a source feature for tree evaluation: scale to [0, 1], add the
/// seeded per-instance jitter δ, add ε. Every output is strictly positive,
/// and duplicate input values are almost surely separated — without the
/// jitter a feature with v distinct values could only ever produce v
/// distinct r.f values, however elaborate the tree.
///
/// δ depends on (delta_seed, instance index), not on the value, so
/// conditioning is deterministic for a fixed dataset ordering; regenerating
/// an r.f from provenance reproduces it bit-for-bit.
pub fn condition_source(x: &FeatureVector, cfg: &ConditioningConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let (min, max) = x.range();
    if min == max {
        return Err(Error::ConstantFeature);
    }
    let span = max - min;
    let out: Vec<f64> = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - min) / span + instance_delta(i, cfg) + cfg.epsilon)
        .collect();
    FeatureVector::new(out)
}

/// Normalises a raw tree output into a redundant-feature column: min-max
/// scale to [0, 1], then round half-up to `rounding_places` decimals.
pub fn postprocess_rf(y: &[f64], cfg: &ConditioningConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (index, &v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index, value: v });
        }
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    if y.is_empty() {
        return Err(Error::EmptyFeature);
    }
    if min == max {
        return Err(Error::DegenerateRf);
    }
    let span = max - min;
    let scale = 10f64.powi(cfg.rounding_places as i32);
    let out: Vec<f64> = y
        .iter()
        .map(|&v| (((v - min) / span) * scale).round() / scale)
        .collect();
    FeatureVector::new(out)
}

/// The linear baseline generator y = α·x + β — the naive redundancy the
/// evolved features are measured against.
pub fn linear_rf(x: &FeatureVector, alpha: f64, beta: f64) -> Result<FeatureVector> {
    if alpha == 0.0 {
        return Err(Error::InvalidConfig(
            "alpha must be nonzero (constant output)".into(),
        ));
    }
    FeatureVector::new(x.values().iter().map(|&v| alpha * v + beta).collect())
}

/// Provenance of one generated redundant feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RfProvenance {
    /// Name of the source feature the tree maps from.
    pub source: String,
    /// The tree, serialised as an s-expression.
    pub sexpr: String,
    /// Fitness record of the individual this tree belongs to.
    pub fitness: FitnessRecord,
}

/// An augmented dataset: the original columns followed by `n_trees` r.fs per
/// original, plus enough provenance to regenerate every r.f column exactly.
#[derive(Debug, Clone)]
pub struct AugmentedDataset {
    pub data: Dataset,
    /// r.f column name → provenance, ordered by name.
    pub provenance: BTreeMap<String, RfProvenance>,
    /// The conditioning used when the r.fs were generated (regeneration
    /// needs the same δ seed, ε, and rounding).
    pub conditioning: ConditioningConfig,
}

/// r.f naming: source name + suffix letter (F2 → F2a, F2b, …).
pub fn rf_name(source: &str, index: usize) -> String {
    let letter = (b'a' + index as u8) as char;
    format!("{source}{letter}")
}

/// Assembles the augmented dataset from one evolution result per source
/// feature (in feature order).
pub fn augment(
    data: &Dataset,
    results: &[RunResult],
    conditioning: &ConditioningConfig,
) -> Result<AugmentedDataset> {
    if results.len() != data.n_features() {
        return Err(Error::InvalidConfig(format!(
            "{} evolution results for {} source features",
            results.len(),
            data.n_features()
        )));
    }
    let mut names: Vec<String> = data.feature_names().to_vec();
    let mut columns: Vec<FeatureVector> = data.columns().to_vec();
    let mut provenance = BTreeMap::new();
    for (f, result) in results.iter().enumerate() {
        let source_name = &data.feature_names()[f];
        let record = result
            .best
            .fitness
            .as_ref()
            .and_then(|o| o.record())
            .ok_or_else(|| Error::RunFailure {
                feature: source_name.clone(),
                msg: "best individual has no valid fitness record".into(),
            })?;
        let n_trees = result.best.trees.len();
        if n_trees > 26 {
            return Err(Error::InvalidConfig(
                "more than 26 trees per source; r.f suffix letters exhausted".into(),
            ));
        }
        let conditioned = condition_source(&data.columns()[f], conditioning)?;
        for (t, tree) in result.best.trees.iter().enumerate() {
            let raw = tree.evaluate(conditioned.values()).ok_or_else(|| {
                Error::RunFailure {
                    feature: source_name.clone(),
                    msg: format!("best tree {t} is invalid on the conditioned source"),
                }
            })?;
            let rf = postprocess_rf(&raw, conditioning)?;
            let name = rf_name(source_name, t);
            names.push(name.clone());
            columns.push(rf);
            provenance.insert(
                name,
                RfProvenance {
                    source: source_name.clone(),
                    sexpr: tree.to_sexpr(),
                    fitness: record.clone(),
                },
            );
        }
    }
    let data = Dataset::new(
        names,
        columns,
        data.labels().map(|l| l.to_vec()),
        data.label_name(),
    )?;
    Ok(AugmentedDataset {
        data,
        provenance,
        conditioning: conditioning.clone(),
    })
}

impl AugmentedDataset {
    /// Recomputes an r.f column from its provenance: re-evaluate the parsed
    /// tree on the conditioned source and post-process. Bit-equal to the
    /// stored column by construction.
    pub fn regenerate(&self, rf: &str) -> Result<FeatureVector> {
        let prov = self
            .provenance
            .get(rf)
            .ok_or_else(|| Error::UnknownColumn(rf.to_string()))?;
        let source = self.data.column(&prov.source)?;
        let conditioned = condition_source(source, &self.conditioning)?;
        let tree = crate::gp::parse_sexpr(&prov.sexpr)?;
        let raw = tree
            .evaluate(conditioned.values())
            .ok_or_else(|| Error::RunFailure {
                feature: prov.source.clone(),
                msg: format!("provenance tree for {rf} is invalid on the conditioned source"),
            })?;
        postprocess_rf(&raw, &self.conditioning)
    }
}
