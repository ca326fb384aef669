//! Deterministic stratified train/validation/test splitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Split fractions and the shuffle seed. Defaults to 60/20/20.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    /// (train, validation, test); each ≥ 0, summing to 1.
    pub fractions: (f64, f64, f64),
    pub shuffle_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            fractions: (0.6, 0.2, 0.2),
            shuffle_seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.fractions;
        if !(a >= 0.0 && b >= 0.0 && c >= 0.0) {
            return Err(Error::InvalidConfig(
                "split fractions must be non-negative".into(),
            ));
        }
        if (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split fractions must sum to 1, got {}",
                a + b + c
            )));
        }
        Ok(())
    }
}

/// Instance indices of each partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each class is shuffled and allocated to the three
/// partitions by cumulative rounding, so the partitions exactly cover the
/// instance set and per-class proportions track the fractions as closely as
/// rounding allows. Classes are processed in ascending label order on one
/// seeded RNG stream, making the result a pure function of (labels, spec).
pub fn stratified_split(labels: &[String], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if labels.is_empty() {
        return Err(Error::EmptyFeature);
    }
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.shuffle_seed);
    let (f_train, f_val, _) = spec.fractions;
    let mut split = Split {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for class in classes {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| *l == class)
            .map(|(i, _)| i)
            .collect();
        // Fisher–Yates
        for i in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        let n = idx.len();
        let c_train = ((f_train * n as f64).round() as usize).min(n);
        let c_val = (((f_train + f_val) * n as f64).round() as usize)
            .clamp(c_train, n)
            - c_train;
        split.train.extend(&idx[..c_train]);
        split.validation.extend(&idx[c_train..c_train + c_val]);
        split.test.extend(&idx[c_train + c_val..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
