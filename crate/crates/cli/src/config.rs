//! Run configuration: defaults, JSON config files, flag overrides, and the
//! master-seed derivation scheme.
//!
//! Precedence is defaults < config file < command-line flags. The master
//! `seed` is the single source of randomness: every component seed (jitter,
//! δ conditioning, split shuffling, clustering, per-feature evolution) is
//! derived from it, so one integer reproduces an entire run. Component seeds
//! written in a config file are therefore ignored; the resolved values are
//! echoed into every artifact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use redfeat::dataset::ConditioningConfig;
use redfeat::eval::{SplitSpec, Wrapper};
use redfeat::evolution::EvolutionConfig;
use redfeat::mi::EstimatorConfig;
use redfeat::seed::derive;
use redfeat::{Error, Result};

/// Sub-seed indices of the master seed. Evolution runs use
/// `derive(seed, EVOLUTION_BASE + feature_index)`.
pub const NOISE_INDEX: u64 = 1;
pub const DELTA_INDEX: u64 = 2;
pub const SPLIT_INDEX: u64 = 3;
pub const CLUSTER_INDEX: u64 = 4;
pub const SUBSAMPLE_INDEX: u64 = 5;
pub const PLOT_JITTER_INDEX: u64 = 6;
pub const EVOLUTION_BASE: u64 = 16;

/// Wrapper classifier selector for the feature-selection search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum WrapperKind {
    Knn,
    Nb,
}

/// Everything a command needs, resolved. Serialized into every artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed; see the module docs for the derivation scheme.
    pub seed: u64,
    /// Evolution settings, including fitness, estimator, and conditioning.
    pub evolution: EvolutionConfig,
    /// Train/validation/test split for the evaluation commands.
    pub split: SplitSpec,
    /// Neighbour count for the KNN classifier and wrapper.
    pub knn_k: usize,
    /// Wrapper classifier used by `select`.
    pub wrapper: WrapperKind,
    /// Cluster count for `cluster`; defaults to the number of classes.
    pub cluster_k: Option<usize>,
    /// k-means restarts.
    pub restarts: usize,
    /// Optional row subsample size for `mi` on large datasets.
    pub mi_subsample: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            evolution: EvolutionConfig::default(),
            split: SplitSpec::default(),
            knn_k: 3,
            wrapper: WrapperKind::Knn,
            cluster_k: None,
            restarts: 30,
            mi_subsample: None,
        }
    }
}

/// Flag-level overrides collected from the command line; `None` = not given.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trees: Option<usize>,
    pub theta: Option<f64>,
    pub pop: Option<usize>,
    pub gens: Option<usize>,
    pub k_neighbors: Option<usize>,
    pub epsilon: Option<f64>,
    pub split: Option<String>,
    pub wrapper: Option<WrapperKind>,
    pub cluster_k: Option<usize>,
    pub restarts: Option<usize>,
    pub mi_subsample: Option<usize>,
}

impl RunConfig {
    /// Builds the effective config: defaults, then the JSON file (if any),
    /// then flags, then seed derivation and validation.
    pub fn resolve(config_file: Option<&Path>, over: &Overrides) -> Result<RunConfig> {
        let mut cfg = match config_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::InvalidConfig(format!("config file {}: {e}", path.display()))
                })?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                    Error::InvalidConfig(format!("config file {}: {e}", path.display()))
                })?
            }
            None => RunConfig::default(),
        };

        if let Some(v) = over.seed {
            cfg.seed = v;
        }
        if let Some(v) = over.trees {
            cfg.evolution.fitness.n_trees = v;
        }
        if let Some(v) = over.theta {
            cfg.evolution.fitness.theta = v;
        }
        if let Some(v) = over.pop {
            cfg.evolution.population_size = v;
        }
        if let Some(v) = over.gens {
            cfg.evolution.generations = v;
        }
        if let Some(v) = over.k_neighbors {
            cfg.evolution.fitness.estimator.k_neighbors = v;
        }
        if let Some(v) = over.epsilon {
            cfg.evolution.fitness.conditioning.epsilon = v;
        }
        if let Some(ref v) = over.split {
            cfg.split.fractions = parse_split(v)?;
        }
        if let Some(v) = over.wrapper {
            cfg.wrapper = v;
        }
        if let Some(v) = over.cluster_k {
            cfg.cluster_k = Some(v);
        }
        if let Some(v) = over.restarts {
            cfg.restarts = v;
        }
        if let Some(v) = over.mi_subsample {
            cfg.mi_subsample = Some(v);
        }

        cfg.evolution.fitness.estimator.noise_seed = derive(cfg.seed, NOISE_INDEX);
        cfg.evolution.fitness.conditioning.delta_seed = derive(cfg.seed, DELTA_INDEX);
        cfg.split.shuffle_seed = derive(cfg.seed, SPLIT_INDEX);

        cfg.evolution.validate()?;
        cfg.split.validate()?;
        if cfg.knn_k == 0 {
            return Err(Error::InvalidConfig("knn_k must be at least 1".into()));
        }
        if cfg.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        Ok(cfg)
    }

    /// Evolution config for one source feature: same settings, its own seed.
    pub fn evolution_for(&self, feature_index: usize) -> EvolutionConfig {
        EvolutionConfig {
            seed: derive(self.seed, EVOLUTION_BASE + feature_index as u64),
            ..self.evolution.clone()
        }
    }

    pub fn estimator(&self) -> &EstimatorConfig {
        &self.evolution.fitness.estimator
    }

    pub fn conditioning(&self) -> &ConditioningConfig {
        &self.evolution.fitness.conditioning
    }

    /// The wrapper as the evaluation layer understands it.
    pub fn wrapper_spec(&self) -> Wrapper {
        match self.wrapper {
            WrapperKind::Knn => Wrapper::Knn { k: self.knn_k },
            WrapperKind::Nb => Wrapper::NaiveBayes,
        }
    }
}

/// Parses `--split A,B,C` (percentages like `60,20,20` or fractions like
/// `0.6,0.2,0.2`; any positive-sum triple is normalized).
fn parse_split(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidConfig(format!(
            "--split needs three comma-separated parts, got {text:?}"
        )));
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|_| {
            Error::InvalidConfig(format!("--split part {part:?} is not a number"))
        })?;
        if !slot.is_finite() || *slot < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "--split parts must be finite and non-negative, got {part}"
            )));
        }
    }
    let total: f64 = vals.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidConfig("--split parts sum to zero".into()));
    }
    Ok((vals[0] / total, vals[1] / total, vals[2] / total))
}
