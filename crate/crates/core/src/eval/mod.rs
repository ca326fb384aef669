//! Benchmark-difficulty evaluation of (augmented) datasets: information-gain
//! ranking, SFFS wrapper selection, KNN and Gaussian Naive Bayes
//! classification, k-means++ clustering with ARI, and deterministic
//! stratified splitting.
//!
//! Every operation here is pure given (data, seed): splits, classifiers,
//! discretization, and clustering all run on fixed tie-breaking rules so
//! reports reproduce bit-for-bit.

pub mod discretize;
pub mod kmeans;
pub mod knn;
pub mod nb;
pub mod sffs;
pub mod split;

pub use discretize::{info_gain, mdl_cut_points, rank_features, RankEntry, RankingReport};
pub use kmeans::{adjusted_rand_index, kmeans_ari, ClusterReport, ClusterRun};
pub use knn::knn_predict;
pub use nb::nb_predict;
pub use sffs::{sffs, greedy_forward, SelectionReport, Wrapper};
pub use split::{stratified_split, Split, SplitSpec};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Maps labels to dense class indices. Classes are the distinct labels in
/// ascending order — the canonical tie-breaking order everywhere.
pub fn encode_labels(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let encoded = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();
    (classes, encoded)
}

/// Fraction of positions where the prediction matches the truth.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    hits as f64 / truth.len() as f64
}

/// Test accuracies of KNN and Gaussian NB trained on the same split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub knn_accuracy: f64,
    pub nb_accuracy: f64,
    pub knn_k: usize,
    pub n_train: usize,
    pub n_test: usize,
}

/// Trains KNN (with `knn_k` neighbours) and Gaussian NB on the split's train
/// partition and scores both on its test partition. The validation partition
/// is unused here (it exists for the wrapper search).
pub fn classify_report(data: &Dataset, split: &SplitSpec, knn_k: usize) -> Result<ClassifyReport> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::MissingLabels("classification needs a label column".into()))?;
    let (classes, encoded) = encode_labels(labels);
    let parts = stratified_split(labels, split)?;
    if parts.train.is_empty() || parts.test.is_empty() {
        return Err(Error::InvalidConfig(
            "classify needs non-empty train and test partitions".into(),
        ));
    }
    let all: Vec<usize> = (0..data.n_features()).collect();
    let train_x = data.row_matrix(&all, &parts.train);
    let test_x = data.row_matrix(&all, &parts.test);
    let train_y: Vec<usize> = parts.train.iter().map(|&i| encoded[i]).collect();
    let test_y: Vec<usize> = parts.test.iter().map(|&i| encoded[i]).collect();

    let knn_pred = knn_predict(&train_x, &train_y, classes.len(), &test_x, knn_k)?;
    let nb_pred = nb_predict(&train_x, &train_y, classes.len(), &test_x)?;
    Ok(ClassifyReport {
        knn_accuracy: accuracy(&knn_pred, &test_y),
        nb_accuracy: accuracy(&nb_pred, &test_y),
        knn_k,
        n_train: parts.train.len(),
        n_test: parts.test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load, Format};
    use std::path::Path;

    fn iris() -> Dataset {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv");
        load(&path, Format::Csv, Some("class")).unwrap()
    }

    #[test]
    fn encode_labels_is_sorted_and_dense() {
        let labels: Vec<String> = ["b", "a", "c", "a"].iter().map(|s| s.to_string()).collect();
        let (classes, encoded) = encode_labels(&labels);
        assert_eq!(classes, ["a", "b", "c"]);
        assert_eq!(encoded, [1, 0, 2, 0]);
    }

    #[test]
    fn iris_seventy_thirty_accuracies_are_high() {
        let data = iris();
        let spec = SplitSpec {
            fractions: (0.7, 0.0, 0.3),
            shuffle_seed: 0,
        };
        let report = classify_report(&data, &spec, 3).unwrap();
        assert!(
            report.knn_accuracy >= 0.90,
            "KNN accuracy {}",
            report.knn_accuracy
        );
        assert!(
            report.nb_accuracy >= 0.90,
            "NB accuracy {}",
            report.nb_accuracy
        );
        assert_eq!(report.n_train + report.n_test, 150);
    }

    #[test]
    fn single_class_dataset_is_trivially_accurate() {
        use crate::mi::FeatureVector;
        let data = Dataset::new(
            vec!["f".into()],
            vec![FeatureVector::new((0..30).map(|i| i as f64).collect()).unwrap()],
            Some(vec!["only".into(); 30]),
            "class",
        )
        .unwrap();
        let spec = SplitSpec {
            fractions: (0.7, 0.0, 0.3),
            shuffle_seed: 1,
        };
        let report = classify_report(&data, &spec, 3).unwrap();
        assert_eq!(report.knn_accuracy, 1.0);
        assert_eq!(report.nb_accuracy, 1.0);
    }

    #[test]
    fn classify_requires_labels() {
        use crate::mi::FeatureVector;
        let data = Dataset::new(
            vec!["f".into()],
            vec![FeatureVector::new(vec![1.0, 2.0, 3.0]).unwrap()],
            None,
            "class",
        )
        .unwrap();
        assert!(matches!(
            classify_report(&data, &SplitSpec::default(), 3),
            Err(Error::MissingLabels(_))
        ));
    }
}
