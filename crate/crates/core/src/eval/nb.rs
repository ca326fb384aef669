//! Gaussian Naive Bayes in log space.

use crate::error::{Error, Result};

/// Variance floor added to every class-conditional variance so that
/// zero-variance features cannot produce singular likelihoods.
const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian Naive Bayes: class priors from training frequencies, per-class
/// per-feature Gaussian likelihoods, argmax of the log posterior. Tied
/// posteriors prefer the lower class index. Every class in `0..n_classes`
/// must appear in the training labels.
pub fn nb_predict(
    train: &[Vec<f64>],
    train_labels: &[usize],
    n_classes: usize,
    test: &[Vec<f64>],
) -> Result<Vec<usize>> {
    if train.is_empty() {
        return Err(Error::InvalidConfig("NB needs a non-empty training set".into()));
    }
    if train.len() != train_labels.len() {
        return Err(Error::LengthMismatch {
            left: train.len(),
            right: train_labels.len(),
        });
    }
    let n_features = train[0].len();
    let mut counts = vec![0usize; n_classes];
    for &c in train_labels {
        counts[c] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(format!("index {missing}")));
    }

    // per-class per-feature mean and (population) variance
    let mut means = vec![vec![0.0; n_features]; n_classes];
    for (row, &c) in train.iter().zip(train_labels) {
        for (f, &v) in row.iter().enumerate() {
            means[c][f] += v;
        }
    }
    for c in 0..n_classes {
        for f in 0..n_features {
            means[c][f] /= counts[c] as f64;
        }
    }
    let mut vars = vec![vec![0.0; n_features]; n_classes];
    for (row, &c) in train.iter().zip(train_labels) {
        for (f, &v) in row.iter().enumerate() {
            let d = v - means[c][f];
            vars[c][f] += d * d;
        }
    }
    for c in 0..n_classes {
        for f in 0..n_features {
            vars[c][f] = vars[c][f] / counts[c] as f64 + VARIANCE_FLOOR;
        }
    }
    let ln_priors: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 / train.len() as f64).ln())
        .collect();

    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let predictions = test
        .iter()
        .map(|row| {
            let mut best = 0;
            let mut best_lp = f64::NEG_INFINITY;
            for c in 0..n_classes {
                let mut lp = ln_priors[c];
                for (f, &v) in row.iter().enumerate() {
                    let var = vars[c][f];
                    let d = v - means[c][f];
                    lp += -0.5 * (ln_2pi + var.ln()) - d * d / (2.0 * var);
                }
                if lp > best_lp {
                    best_lp = lp;
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(predictions)
}
