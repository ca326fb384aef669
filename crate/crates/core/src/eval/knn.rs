//! k-nearest-neighbour classification with fully deterministic tie-breaking.

use crate::error::{Error, Result};

/// Predicts a class index for each test row by majority vote among the `k`
/// nearest training rows (Euclidean distance).
///
/// Tie rules, in order: equal distances prefer the lower training-row index;
/// tied votes prefer the class most frequent in the whole training set, then
/// the lower class index (= ascending label order). `k` larger than the
/// training set uses every training row.
pub fn knn_predict(
    train: &[Vec<f64>],
    train_labels: &[usize],
    n_classes: usize,
    test: &[Vec<f64>],
    k: usize,
) -> Result<Vec<usize>> {
    if train.is_empty() {
        return Err(Error::InvalidConfig("KNN needs a non-empty training set".into()));
    }
    if k < 1 {
        return Err(Error::InvalidConfig("KNN needs k >= 1".into()));
    }
    if train.len() != train_labels.len() {
        return Err(Error::LengthMismatch {
            left: train.len(),
            right: train_labels.len(),
        });
    }
    let mut train_freq = vec![0usize; n_classes];
    for &c in train_labels {
        train_freq[c] += 1;
    }
    let k = k.min(train.len());

    let mut predictions = Vec::with_capacity(test.len());
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(train.len());
    for row in test {
        dists.clear();
        dists.extend(train.iter().enumerate().map(|(i, t)| (sq_dist(row, t), i)));
        dists.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then_with(|| a.1.cmp(&b.1))
        });
        let mut votes = vec![0usize; n_classes];
        for &(_, i) in &dists[..k] {
            votes[train_labels[i]] += 1;
        }
        let mut best = 0;
        for c in 1..n_classes {
            if votes[c] > votes[best]
                || (votes[c] == votes[best] && train_freq[c] > train_freq[best])
            {
                best = c;
            }
        }
        predictions.push(best);
    }
    Ok(predictions)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::accuracy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_match_wins_at_k1() {
        let train = vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![9.0, 1.0]];
        let labels = vec![0, 1, 2];
        let pred = knn_predict(&train, &labels, 3, &[vec![5.0, 5.0]], 1).unwrap();
        assert_eq!(pred, [1]);
    }

    #[test]
    fn separated_blobs_classify_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut train = Vec::new();
        let mut labels = Vec::new();
        let mut test = Vec::new();
        let mut truth = Vec::new();
        for i in 0..60 {
            let class = i % 2;
            let center = if class == 0 { 0.0 } else { 20.0 };
            let p = vec![center + rng.gen::<f64>(), center + rng.gen::<f64>()];
            if i < 40 {
                train.push(p);
                labels.push(class);
            } else {
                test.push(p);
                truth.push(class);
            }
        }
        let pred = knn_predict(&train, &labels, 2, &test, 3).unwrap();
        assert_eq!(accuracy(&pred, &truth), 1.0);
    }

    #[test]
    fn distance_ties_prefer_lower_train_index() {
        // the test point sits exactly between two train points; k = 1 must
        // take the earlier row's label
        let train = vec![vec![-1.0], vec![1.0]];
        let labels = vec![1, 0];
        let pred = knn_predict(&train, &labels, 2, &[vec![0.0]], 1).unwrap();
        assert_eq!(pred, [1]);
    }

    #[test]
    fn vote_ties_prefer_the_commoner_class() {
        // k = 2 picks one neighbour of each class; class 1 dominates the
        // training set, so it wins the tied vote
        let train = vec![vec![-1.0], vec![1.0], vec![50.0], vec![60.0], vec![70.0]];
        let labels = vec![0, 1, 1, 1, 0];
        let pred = knn_predict(&train, &labels, 2, &[vec![0.0]], 2).unwrap();
        assert_eq!(pred, [1]);
    }

    #[test]
    fn vote_ties_fall_back_to_label_order() {
        // both classes equally frequent overall and tied in votes → class 0
        let train = vec![vec![-1.0], vec![1.0], vec![50.0], vec![60.0]];
        let labels = vec![1, 0, 1, 0];
        let pred = knn_predict(&train, &labels, 2, &[vec![0.0]], 2).unwrap();
        assert_eq!(pred, [0]);
    }

    #[test]
    fn oversized_k_uses_whole_training_set() {
        let train = vec![vec![0.0], vec![1.0], vec![2.0]];
        let labels = vec![0, 0, 1];
        let pred = knn_predict(&train, &labels, 2, &[vec![9.0]], 99).unwrap();
        assert_eq!(pred, [0]); // majority of all three
    }

    #[test]
    fn rejects_empty_train_and_zero_k() {
        assert!(knn_predict(&[], &[], 2, &[vec![0.0]], 3).is_err());
        let train = vec![vec![0.0]];
        assert!(knn_predict(&train, &[0], 1, &[vec![0.0]], 0).is_err());
    }
}
