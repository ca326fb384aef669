//! redfeat: evolving redundant features for feature-selection benchmarks.
//!
//! The library generates *redundant features* (r.fs) from the source features
//! of a dataset by evolving populations of multi-tree GP individuals whose
//! fitness rewards high mutual information with the source feature and low
//! mutual information among the created features. The augmented datasets it
//! produces are harder benchmarks for feature selection, ranking, and
//! redundancy-aware learning than naive linear copies.
//!
//! Module map:
//! - [`mi`] — Kraskov k-NN mutual-information estimator and the Ψ baseline.
//! - [`gp`] — expression trees: construction, evaluation, s-expressions.
//! - [`dataset`] — CSV/ARFF ingestion, input conditioning, augmentation.
//! - [`fitness`] — the two-regime MI fitness over multi-tree individuals.
//! - [`evolution`] — the generational GP loop.
//! - [`eval`] — benchmark harness: IG ranking, SFFS, KNN/NB, k-means + ARI.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod evolution;
pub mod fitness;
pub mod gp;
pub mod mi;
pub mod seed;

pub use dataset::{AugmentedDataset, ConditioningConfig, Dataset};
pub use error::{Error, Result};
pub use eval::{
    ClassifyReport, ClusterReport, RankingReport, SelectionReport, Split, SplitSpec, Wrapper,
};
pub use evolution::{EvolutionConfig, RunResult};
pub use fitness::{FitnessConfig, FitnessOutcome, FitnessRecord};
pub use gp::{GpTree, Individual};
pub use mi::{EstimatorConfig, FeatureVector, MiEstimate};
