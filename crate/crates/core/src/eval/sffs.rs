//! Sequential Floating Forward Search over wrapper validation accuracy.
//!
//! Forward steps add the unselected feature whose addition maximizes
//! validation accuracy; after each accepted add, floating steps repeatedly
//! remove the feature whose removal maximizes validation accuracy, as long
//! as removal *strictly* improves on the best accuracy so far. The wrapper
//! trains on the train partition and scores on the validation partition;
//! the final subset is retrained on the train partition to report test
//! accuracy. Accuracy ties break by the feature's information-gain rank on
//! the train partition, then by name.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mi::FeatureVector;

use super::discretize::info_gain;
use super::knn::knn_predict;
use super::nb::nb_predict;
use super::split::{stratified_split, SplitSpec};
use super::{accuracy, encode_labels};

/// The classifier wrapped by the selection search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wrapper {
    Knn { k: usize },
    NaiveBayes,
}

impl Wrapper {
    pub fn describe(&self) -> String {
        match self {
            Wrapper::Knn { k } => format!("knn(k={k})"),
            Wrapper::NaiveBayes => "naive_bayes".to_string(),
        }
    }

    fn predict(
        &self,
        train: &[Vec<f64>],
        train_labels: &[usize],
        n_classes: usize,
        test: &[Vec<f64>],
    ) -> Result<Vec<usize>> {
        match self {
            Wrapper::Knn { k } => knn_predict(train, train_labels, n_classes, test, *k),
            Wrapper::NaiveBayes => nb_predict(train, train_labels, n_classes, test),
        }
    }
}

/// Result of a feature-selection search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Search method ("sffs" or "greedy_forward").
    pub method: String,
    /// Wrapper classifier used for every evaluation.
    pub wrapper: String,
    /// Selected feature names, in selection order.
    pub selected: Vec<String>,
    /// Validation accuracy after each accepted step; strictly increasing.
    pub accuracy_trace: Vec<f64>,
    /// Final validation accuracy (= last trace entry).
    pub validation_accuracy: f64,
    /// Test accuracy of the final subset.
    pub test_accuracy: f64,
}

struct Search<'a> {
    data: &'a Dataset,
    wrapper: Wrapper,
    n_classes: usize,
    train_rows: Vec<usize>,
    val_rows: Vec<usize>,
    test_rows: Vec<usize>,
    train_y: Vec<usize>,
    val_y: Vec<usize>,
    test_y: Vec<usize>,
    /// strict total order per feature: better (lower) = higher IG, ties by name
    ig_rank: Vec<usize>,
    cache: HashMap<Vec<usize>, f64>,
}

impl<'a> Search<'a> {
    fn new(data: &'a Dataset, split: &SplitSpec, wrapper: Wrapper) -> Result<Self> {
        let labels = data
            .labels()
            .ok_or_else(|| Error::MissingLabels("feature selection needs labels".into()))?;
        let (classes, encoded) = encode_labels(labels);
        let parts = stratified_split(labels, split)?;
        if parts.train.is_empty() || parts.validation.is_empty() || parts.test.is_empty() {
            return Err(Error::InvalidConfig(
                "selection needs non-empty train, validation, and test partitions".into(),
            ));
        }
        // IG rank on the train partition only (no validation/test leakage)
        let train_labels: Vec<String> = parts
            .train
            .iter()
            .map(|&i| labels[i].clone())
            .collect();
        let mut ranked: Vec<(f64, &String, usize)> = Vec::with_capacity(data.n_features());
        for (f, (name, col)) in data
            .feature_names()
            .iter()
            .zip(data.columns())
            .enumerate()
        {
            let train_vals: Vec<f64> = parts.train.iter().map(|&i| col.values()[i]).collect();
            let ig = info_gain(&FeatureVector::new(train_vals)?, &train_labels)?;
            ranked.push((ig, name, f));
        }
        ranked.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("IG is finite")
                .then_with(|| a.1.cmp(b.1))
        });
        let mut ig_rank = vec![0usize; data.n_features()];
        for (pos, &(_, _, f)) in ranked.iter().enumerate() {
            ig_rank[f] = pos;
        }
        let pick = |rows: &[usize]| rows.iter().map(|&i| encoded[i]).collect::<Vec<_>>();
        Ok(Search {
            data,
            wrapper,
            n_classes: classes.len(),
            train_y: pick(&parts.train),
            val_y: pick(&parts.validation),
            test_y: pick(&parts.test),
            train_rows: parts.train,
            val_rows: parts.validation,
            test_rows: parts.test,
            ig_rank,
            cache: HashMap::new(),
        })
    }

    /// Validation accuracy of a feature subset (memoized).
    fn validation_accuracy(&mut self, subset: &[usize]) -> Result<f64> {
        let mut key = subset.to_vec();
        key.sort_unstable();
        if let Some(&hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let train_x = self.data.row_matrix(&key, &self.train_rows);
        let val_x = self.data.row_matrix(&key, &self.val_rows);
        let pred = self
            .wrapper
            .predict(&train_x, &self.train_y, self.n_classes, &val_x)?;
        let acc = accuracy(&pred, &self.val_y);
        self.cache.insert(key, acc);
        Ok(acc)
    }

    fn test_accuracy(&self, subset: &[usize]) -> Result<f64> {
        let mut key = subset.to_vec();
        key.sort_unstable();
        let train_x = self.data.row_matrix(&key, &self.train_rows);
        let test_x = self.data.row_matrix(&key, &self.test_rows);
        let pred = self
            .wrapper
            .predict(&train_x, &self.train_y, self.n_classes, &test_x)?;
        Ok(accuracy(&pred, &self.test_y))
    }

    /// Best forward addition: (feature, accuracy). Ties prefer the feature
    /// with the better IG rank.
    fn best_addition(&mut self, selected: &[usize]) -> Result<Option<(usize, f64)>> {
        let mut best: Option<(usize, f64)> = None;
        for f in 0..self.data.n_features() {
            if selected.contains(&f) {
                continue;
            }
            let mut candidate = selected.to_vec();
            candidate.push(f);
            let acc = self.validation_accuracy(&candidate)?;
            best = Some(match best {
                None => (f, acc),
                Some((bf, bacc)) => {
                    if acc > bacc || (acc == bacc && self.ig_rank[f] < self.ig_rank[bf]) {
                        (f, acc)
                    } else {
                        (bf, bacc)
                    }
                }
            });
        }
        Ok(best)
    }

    /// Best floating removal: (feature to drop, accuracy of the remainder).
    /// Ties prefer dropping the feature with the worse IG rank.
    fn best_removal(&mut self, selected: &[usize]) -> Result<Option<(usize, f64)>> {
        if selected.len() < 2 {
            return Ok(None);
        }
        let mut best: Option<(usize, f64)> = None;
        for &f in selected {
            let remainder: Vec<usize> = selected.iter().copied().filter(|&x| x != f).collect();
            let acc = self.validation_accuracy(&remainder)?;
            best = Some(match best {
                None => (f, acc),
                Some((bf, bacc)) => {
                    if acc > bacc || (acc == bacc && self.ig_rank[f] > self.ig_rank[bf]) {
                        (f, acc)
                    } else {
                        (bf, bacc)
                    }
                }
            });
        }
        Ok(best)
    }

    fn into_report(
        mut self,
        method: &str,
        selected: Vec<usize>,
        trace: Vec<f64>,
    ) -> Result<SelectionReport> {
        let validation_accuracy = *trace.last().expect("at least one accepted step");
        let test_accuracy = self.test_accuracy(&selected)?;
        self.cache.clear();
        Ok(SelectionReport {
            method: method.to_string(),
            wrapper: self.wrapper.describe(),
            selected: selected
                .iter()
                .map(|&f| self.data.feature_names()[f].clone())
                .collect(),
            accuracy_trace: trace,
            validation_accuracy,
            test_accuracy,
        })
    }
}

fn run_search(
    data: &Dataset,
    split: &SplitSpec,
    wrapper: Wrapper,
    floating: bool,
) -> Result<SelectionReport> {
    let mut search = Search::new(data, split, wrapper)?;
    let mut selected: Vec<usize> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    let mut best_acc = f64::NEG_INFINITY;

    while let Some((f, acc)) = search.best_addition(&selected)? {
        if acc <= best_acc {
            break;
        }
        selected.push(f);
        best_acc = acc;
        trace.push(acc);
        if !floating {
            continue;
        }
        while let Some((drop, acc)) = search.best_removal(&selected)? {
            if acc <= best_acc {
                break;
            }
            selected.retain(|&x| x != drop);
            best_acc = acc;
            trace.push(acc);
        }
    }
    let method = if floating { "sffs" } else { "greedy_forward" };
    search.into_report(method, selected, trace)
}

/// Sequential floating forward selection.
pub fn sffs(data: &Dataset, split: &SplitSpec, wrapper: Wrapper) -> Result<SelectionReport> {
    run_search(data, split, wrapper, true)
}

/// Plain greedy forward selection (no floating removals) — the reference
/// the floating variant is measured against.
pub fn greedy_forward(
    data: &Dataset,
    split: &SplitSpec,
    wrapper: Wrapper,
) -> Result<SelectionReport> {
    run_search(data, split, wrapper, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load, Format};
    use std::path::Path;

    fn fv(values: Vec<f64>) -> FeatureVector {
        FeatureVector::new(values).unwrap()
    }

    /// 40 instances, 2 classes. f1 separates classes in region A (i < 20),
    /// f3 in region B (i ≥ 20), f2 is noise; only {f1, f3} is perfect.
    fn two_region_toy() -> Dataset {
        let n = 40;
        let mut f1 = Vec::new();
        let mut f2 = Vec::new();
        let mut f3 = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let class = i % 2;
            let wiggle = ((i * 13) % 7) as f64 / 70.0; // deterministic 0..0.086
            if i < 20 {
                f1.push(class as f64 + wiggle * 0.1);
                f3.push(0.45 + wiggle);
            } else {
                f1.push(0.45 + wiggle);
                f3.push(class as f64 + wiggle * 0.1);
            }
            f2.push(((i * 7) % 11) as f64 / 11.0);
            labels.push(if class == 0 { "neg".to_string() } else { "pos".to_string() });
        }
        Dataset::new(
            vec!["f1".into(), "f2".into(), "f3".into()],
            vec![fv(f1), fv(f2), fv(f3)],
            Some(labels),
            "class",
        )
        .unwrap()
    }

    fn toy_split() -> SplitSpec {
        SplitSpec {
            fractions: (0.6, 0.2, 0.2),
            shuffle_seed: 0,
        }
    }

    /// Exhaustive subset oracle: best by (validation accuracy, then smaller,
    /// then lexicographic names), evaluated exactly as the search does.
    fn exhaustive_best(data: &Dataset, split: &SplitSpec, wrapper: Wrapper) -> Vec<String> {
        let n = data.n_features();
        let mut search = Search::new(data, split, wrapper).unwrap();
        let mut best: Option<(f64, Vec<String>)> = None;
        for mask in 1u32..(1 << n) {
            let subset: Vec<usize> = (0..n).filter(|f| mask & (1 << f) != 0).collect();
            let acc = search.validation_accuracy(&subset).unwrap();
            let mut names: Vec<String> = subset
                .iter()
                .map(|&f| data.feature_names()[f].clone())
                .collect();
            names.sort();
            let better = match &best {
                None => true,
                Some((bacc, bnames)) => {
                    acc > *bacc
                        || (acc == *bacc
                            && (names.len() < bnames.len()
                                || (names.len() == bnames.len() && names < *bnames)))
                }
            };
            if better {
                best = Some((acc, names));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn sffs_finds_the_exhaustive_optimum_on_the_toy() {
        let data = two_region_toy();
        let split = toy_split();
        let wrapper = Wrapper::Knn { k: 3 };
        let oracle = exhaustive_best(&data, &split, wrapper);
        assert_eq!(oracle, ["f1", "f3"], "toy construction drifted");
        let report = sffs(&data, &split, wrapper).unwrap();
        let mut selected = report.selected.clone();
        selected.sort();
        assert_eq!(selected, oracle);
        assert_eq!(report.validation_accuracy, 1.0);
    }

    #[test]
    fn perfect_predictor_is_selected_alone() {
        let n = 30;
        let labels: Vec<String> = (0..n)
            .map(|i| if i % 2 == 0 { "a".into() } else { "b".into() })
            .collect();
        let perfect: Vec<f64> = (0..n).map(|i| (i % 2) as f64 + (i as f64) * 1e-4).collect();
        let noise: Vec<f64> = (0..n).map(|i| ((i * 17) % 13) as f64 / 13.0).collect();
        let data = Dataset::new(
            vec!["noise".into(), "perfect".into()],
            vec![fv(noise), fv(perfect)],
            Some(labels),
            "class",
        )
        .unwrap();
        let report = sffs(&data, &toy_split(), Wrapper::Knn { k: 1 }).unwrap();
        assert_eq!(report.selected, ["perfect"]);
        assert_eq!(report.validation_accuracy, 1.0);
    }

    #[test]
    fn trace_is_strictly_increasing() {
        let data = two_region_toy();
        for wrapper in [Wrapper::Knn { k: 3 }, Wrapper::NaiveBayes] {
            let report = sffs(&data, &toy_split(), wrapper).unwrap();
            assert!(!report.accuracy_trace.is_empty());
            assert!(!report.selected.is_empty());
            for w in report.accuracy_trace.windows(2) {
                assert!(w[1] > w[0], "trace not strictly increasing: {w:?}");
            }
            assert_eq!(
                report.validation_accuracy,
                *report.accuracy_trace.last().unwrap()
            );
        }
    }

    #[test]
    fn sffs_never_loses_to_greedy_on_random_data() {
        use rand::{Rng, SeedableRng};
        for seed in 0..5u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 80;
            let labels: Vec<String> = (0..n)
                .map(|_| format!("c{}", rng.gen_range(0..3)))
                .collect();
            let (_, encoded) = encode_labels(&labels);
            let columns: Vec<FeatureVector> = (0..6)
                .map(|f| {
                    fv((0..n)
                        .map(|i| {
                            // half the features carry class signal, half are noise
                            let signal = if f % 2 == 0 { encoded[i] as f64 } else { 0.0 };
                            signal + rng.gen::<f64>() * 1.5
                        })
                        .collect())
                })
                .collect();
            let names = (0..6).map(|f| format!("g{f}")).collect();
            let data = Dataset::new(names, columns, Some(labels), "class").unwrap();
            let split = SplitSpec {
                fractions: (0.6, 0.2, 0.2),
                shuffle_seed: seed,
            };
            let s = sffs(&data, &split, Wrapper::Knn { k: 3 }).unwrap();
            let g = greedy_forward(&data, &split, Wrapper::Knn { k: 3 }).unwrap();
            assert!(
                s.validation_accuracy >= g.validation_accuracy,
                "seed {seed}: sffs {} < greedy {}",
                s.validation_accuracy,
                g.validation_accuracy
            );
        }
    }

    #[test]
    fn iris_selects_a_small_accurate_subset() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv");
        let data = load(&path, Format::Csv, Some("class")).unwrap();
        let report = sffs(&data, &SplitSpec::default(), Wrapper::Knn { k: 3 }).unwrap();
        assert!(
            report.selected.len() <= 2,
            "selected {:?}",
            report.selected
        );
        assert!(
            report.test_accuracy >= 0.90,
            "test accuracy {}",
            report.test_accuracy
        );
    }

    #[test]
    fn selection_requires_labels_and_a_validation_partition() {
        let data = Dataset::new(
            vec!["f".into()],
            vec![fv((0..20).map(|i| i as f64).collect())],
            None,
            "class",
        )
        .unwrap();
        assert!(matches!(
            sffs(&data, &SplitSpec::default(), Wrapper::NaiveBayes),
            Err(Error::MissingLabels(_))
        ));

        let labeled = two_region_toy();
        let no_val = SplitSpec {
            fractions: (0.7, 0.0, 0.3),
            shuffle_seed: 0,
        };
        assert!(matches!(
            sffs(&labeled, &no_val, Wrapper::NaiveBayes),
            Err(Error::InvalidConfig(_))
        ));
    }
}
