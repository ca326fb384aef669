//! The multi-tree fitness function.
//!
//! Each individual holds `n_trees` trees mapped from one conditioned source
//! feature. Its fitness balances two normalized-MI statistics over the
//! post-processed tree outputs:
//!
//! * `min_source_mi` — the weakest source↔r.f association (all trees must
//!   clear the redundancy threshold Θ against the *original* source values);
//! * `max_shared_mi` — the strongest average association between one r.f and
//!   the rest (diversity pressure: r.fs should not copy each other).
//!
//! Feasible individuals (min_source_mi ≥ Θ) score
//! `min_source_mi − max_shared_mi`; infeasible ones score `−1 /
//! mean_source_mi`, floored at −100 once the mean drops to ≤ 0.01 so
//! near-zero associations cannot produce unbounded penalties. Individuals
//! whose trees produce non-finite or constant outputs are invalid outright
//! and rank below every scored individual. Ties break toward fewer total
//! nodes, then toward the earlier individual.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::{postprocess_rf, ConditioningConfig};
use crate::error::{Error, Result};
use crate::gp::Individual;
use crate::mi::{estimate_mi, EstimatorConfig, FeatureVector};

/// Penalty floor: infeasible individuals with mean source MI ≤ this score
/// a flat −100 instead of −1/mean.
const PENALTY_MEAN_FLOOR: f64 = 0.01;
const PENALTY_FLOOR: f64 = -100.0;

/// The scored statistics of one individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    /// min over trees of normalized MI(source, r.f).
    pub min_source_mi: f64,
    /// max over trees of the mean normalized MI to the other trees' r.fs.
    /// `None` for infeasible individuals — the pairwise sweep is skipped.
    pub max_shared_mi: Option<f64>,
    /// mean over trees of normalized MI(source, r.f).
    pub mean_source_mi: f64,
    /// Whether min_source_mi cleared Θ.
    pub feasible: bool,
    /// The scalar the search optimises.
    pub fitness: f64,
}

/// Fitness of an individual: invalid (some tree failed) or a full record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FitnessOutcome {
    Invalid,
    Valid(FitnessRecord),
}

impl FitnessOutcome {
    /// Scalar view: invalid individuals sit at −∞, below every valid score.
    pub fn fitness_value(&self) -> f64 {
        match self {
            FitnessOutcome::Invalid => f64::NEG_INFINITY,
            FitnessOutcome::Valid(r) => r.fitness,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, FitnessOutcome::Valid(_))
    }

    pub fn record(&self) -> Option<&FitnessRecord> {
        match self {
            FitnessOutcome::Invalid => None,
            FitnessOutcome::Valid(r) => Some(r),
        }
    }
}

/// Fitness-function configuration. `conditioning` controls the post-process
/// rounding applied to raw tree outputs before any MI is measured.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitnessConfig {
    /// Redundancy threshold Θ on the weakest source↔r.f normalized MI.
    pub theta: f64,
    /// Trees per individual (= r.fs generated per source feature).
    pub n_trees: usize,
    pub estimator: EstimatorConfig,
    pub conditioning: ConditioningConfig,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig {
            theta: 0.7,
            n_trees: 5,
            estimator: EstimatorConfig::default(),
            conditioning: ConditioningConfig::default(),
        }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta must be in (0, 1], got {}",
                self.theta
            )));
        }
        if self.n_trees < 2 {
            return Err(Error::InvalidConfig(
                "n_trees must be >= 2 (shared-MI needs at least one pair)".into(),
            ));
        }
        self.estimator.validate()?;
        self.conditioning.validate()
    }
}

/// Assembles a [`FitnessRecord`] from already-measured statistics. Pure —
/// the numeric contract of the fitness function lives here.
pub fn assemble(
    min_source_mi: f64,
    max_shared_mi: Option<f64>,
    mean_source_mi: f64,
    theta: f64,
) -> FitnessRecord {
    let feasible = min_source_mi >= theta;
    let fitness = if feasible {
        let max_shared = max_shared_mi
            .expect("feasible individuals must carry a shared-MI statistic");
        min_source_mi - max_shared
    } else if mean_source_mi <= PENALTY_MEAN_FLOOR {
        PENALTY_FLOOR
    } else {
        -1.0 / mean_source_mi
    };
    FitnessRecord {
        min_source_mi,
        max_shared_mi: if feasible { max_shared_mi } else { None },
        mean_source_mi,
        feasible,
        fitness,
    }
}

/// Total order on outcomes for selection: higher fitness wins; invalid sits
/// at the bottom; ties prefer fewer total nodes; remaining ties are equal
/// (callers keep the earlier individual).
pub fn compare_fitness(
    a: &FitnessOutcome,
    a_nodes: usize,
    b: &FitnessOutcome,
    b_nodes: usize,
) -> Ordering {
    let primary = match (a, b) {
        (FitnessOutcome::Invalid, FitnessOutcome::Invalid) => Ordering::Equal,
        (FitnessOutcome::Invalid, FitnessOutcome::Valid(_)) => Ordering::Less,
        (FitnessOutcome::Valid(_), FitnessOutcome::Invalid) => Ordering::Greater,
        (FitnessOutcome::Valid(ra), FitnessOutcome::Valid(rb)) => ra
            .fitness
            .partial_cmp(&rb.fitness)
            .expect("fitness values are never NaN"),
    };
    // fewer nodes is better, so a wins the tie when a_nodes < b_nodes
    primary.then_with(|| b_nodes.cmp(&a_nodes))
}

/// Orders a pair of columns canonically (lexicographic on value bits) so
/// MI(a, b) and MI(b, a) run through the estimator identically regardless of
/// tree order.
fn canonical_pair<'a>(
    a: &'a FeatureVector,
    b: &'a FeatureVector,
) -> (&'a FeatureVector, &'a FeatureVector) {
    for (x, y) in a.values().iter().zip(b.values()) {
        match x.to_bits().cmp(&y.to_bits()) {
            Ordering::Less => return (a, b),
            Ordering::Greater => return (b, a),
            Ordering::Equal => {}
        }
    }
    (a, b)
}

/// Runs each tree on the conditioned source, post-processes the outputs,
/// and scores the individual. `psi` is the self-MI normaliser Ψ of the
/// source feature. Source↔r.f MI is measured against the *original* source
/// values; r.f↔r.f MI only runs for feasible individuals.
pub fn evaluate_individual(
    individual: &Individual,
    source_original: &FeatureVector,
    source_conditioned: &FeatureVector,
    psi: f64,
    cfg: &FitnessConfig,
) -> Result<FitnessOutcome> {
    if individual.trees.len() != cfg.n_trees {
        return Err(Error::InvalidConfig(format!(
            "individual has {} trees, fitness expects {}",
            individual.trees.len(),
            cfg.n_trees
        )));
    }
    if !(psi > 0.0) {
        return Err(Error::NonPositivePsi(psi));
    }

    let mut rfs: Vec<FeatureVector> = Vec::with_capacity(cfg.n_trees);
    for tree in &individual.trees {
        let raw = match tree.evaluate(source_conditioned.values()) {
            Some(raw) => raw,
            None => return Ok(FitnessOutcome::Invalid),
        };
        match postprocess_rf(&raw, &cfg.conditioning) {
            Ok(rf) => rfs.push(rf),
            Err(Error::DegenerateRf) => return Ok(FitnessOutcome::Invalid),
            Err(e) => return Err(e),
        }
    }

    let mut source_mis = Vec::with_capacity(cfg.n_trees);
    for rf in &rfs {
        let (a, b) = canonical_pair(source_original, rf);
        source_mis.push(estimate_mi(a, b, &cfg.estimator)? / psi);
    }
    let min_source_mi = source_mis.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_source_mi = source_mis.iter().sum::<f64>() / source_mis.len() as f64;

    if min_source_mi < cfg.theta {
        return Ok(FitnessOutcome::Valid(assemble(
            min_source_mi,
            None,
            mean_source_mi,
            cfg.theta,
        )));
    }

    // pairwise shared MI, computed once per unordered pair
    let n = rfs.len();
    let mut pair = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = canonical_pair(&rfs[i], &rfs[j]);
            let mi = estimate_mi(a, b, &cfg.estimator)? / psi;
            pair[i][j] = mi;
            pair[j][i] = mi;
        }
    }
    let max_shared_mi = (0..n)
        .map(|t| {
            let sum: f64 = (0..n).filter(|&y| y != t).map(|y| pair[t][y]).sum();
            sum / (n - 1) as f64
        })
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(FitnessOutcome::Valid(assemble(
        min_source_mi,
        Some(max_shared_mi),
        mean_source_mi,
        cfg.theta,
    )))
}
