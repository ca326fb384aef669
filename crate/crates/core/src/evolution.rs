//! The generational GP loop: ramped half-and-half initialization, tournament
//! selection, single-tree-index subtree crossover and mutation with a depth
//! guard, top-k elitism.
//!
//! Reproducibility contract: all genetic-operator RNG draws happen on one
//! sequential stream seeded from `EvolutionConfig::seed`. Fitness evaluation
//! is a parallel map over the generation's distinct genotypes with read-only
//! inputs, so thread scheduling cannot perturb results; repeated genotypes
//! are scored once per run via a memo table.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::condition_source;
use crate::error::{Error, Result};
use crate::fitness::{compare_fitness, evaluate_individual, FitnessConfig, FitnessOutcome};
use crate::gp::{random_tree, GpTree, GrowMethod, Individual};
use crate::mi::{baseline_psi, FeatureVector};

/// Fresh subtrees spliced in by mutation are grown to at most this depth.
const MUTATION_SUBTREE_DEPTH: usize = 4;

/// Ramped half-and-half initialization sweeps tree depths over this range.
const INIT_DEPTHS: std::ops::RangeInclusive<usize> = 2..=6;

/// Evolution knobs. Defaults: population 1024, 50 generations, 60/40
/// crossover/mutation, top-10 elitism, depth cap 15, tournament size 7.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism_count: usize,
    pub max_depth: usize,
    pub tournament_size: usize,
    pub seed: u64,
    pub fitness: FitnessConfig,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 1024,
            generations: 50,
            crossover_rate: 0.6,
            mutation_rate: 0.4,
            elitism_count: 10,
            max_depth: 15,
            tournament_size: 7,
            seed: 0,
            fitness: FitnessConfig::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidConfig("population_size must be >= 2".into()));
        }
        if !(self.crossover_rate >= 0.0 && self.mutation_rate >= 0.0) {
            return Err(Error::InvalidConfig("operator rates must be >= 0".into()));
        }
        if (self.crossover_rate + self.mutation_rate - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "crossover_rate + mutation_rate must equal 1.0, got {}",
                self.crossover_rate + self.mutation_rate
            )));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::InvalidConfig(
                "elitism_count must be < population_size".into(),
            ));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.tournament_size < 1 {
            return Err(Error::InvalidConfig("tournament_size must be >= 1".into()));
        }
        self.fitness.validate()
    }
}

/// Outcome of one evolution run over one source feature.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Best individual of the final generation (= best ever, by elitism).
    pub best: Individual,
    /// Best fitness per generation, index 0 = the initial population;
    /// length generations + 1. Non-decreasing.
    pub fitness_history: Vec<f64>,
    /// Echo of the configuration that produced this result.
    pub config: EvolutionConfig,
    /// The source feature's self-MI normaliser Ψ.
    pub psi: f64,
    pub elapsed_secs: f64,
}

/// Serialisable view of a [`RunResult`]: trees as s-expressions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub trees: Vec<String>,
    pub fitness: FitnessOutcome,
    pub fitness_history: Vec<f64>,
    pub psi: f64,
    pub elapsed_secs: f64,
    pub config: EvolutionConfig,
}

impl RunResult {
    pub fn report(&self) -> RunReport {
        RunReport {
            trees: self.best.trees.iter().map(GpTree::to_sexpr).collect(),
            fitness: self
                .best
                .fitness
                .clone()
                .unwrap_or(FitnessOutcome::Invalid),
            fitness_history: self.fitness_history.clone(),
            psi: self.psi,
            elapsed_secs: self.elapsed_secs,
            config: self.config.clone(),
        }
    }
}

/// Ramped half-and-half: depths cycle over [`INIT_DEPTHS`], alternating grow
/// and full at each depth.
pub fn initialize<R: Rng>(cfg: &EvolutionConfig, rng: &mut R) -> Vec<Individual> {
    let (lo, hi) = (*INIT_DEPTHS.start(), *INIT_DEPTHS.end());
    let n_depths = hi - lo + 1;
    (0..cfg.population_size)
        .map(|i| {
            let depth = (lo + (i / 2) % n_depths).min(cfg.max_depth);
            let method = if i % 2 == 0 {
                GrowMethod::Grow
            } else {
                GrowMethod::Full
            };
            Individual::new(
                (0..cfg.fitness.n_trees)
                    .map(|_| random_tree(depth, method, rng))
                    .collect(),
            )
        })
        .collect()
}

/// Subtree crossover primitive: swap the subtrees rooted at preorder nodes
/// `ia` of `a` and `ib` of `b`.
fn crossover_trees(a: &GpTree, b: &GpTree, ia: usize, ib: usize) -> (GpTree, GpTree) {
    let sub_a = a.node_at(ia).expect("crossover point in range").clone();
    let sub_b = b.node_at(ib).expect("crossover point in range").clone();
    (a.with_replaced(ia, sub_b), b.with_replaced(ib, sub_a))
}

/// Multi-tree crossover: one tree index (shared by both parents), one
/// uniformly chosen node in each parent's tree, subtrees swapped. Offspring
/// trees that bust `max_depth` revert to the corresponding parent tree.
pub fn crossover<R: Rng>(
    a: &Individual,
    b: &Individual,
    max_depth: usize,
    rng: &mut R,
) -> (Individual, Individual) {
    assert_eq!(a.trees.len(), b.trees.len(), "parents must have equal arity");
    let t = rng.gen_range(0..a.trees.len());
    let (ta, tb) = (&a.trees[t], &b.trees[t]);
    let ia = rng.gen_range(0..ta.node_count());
    let mut ib = rng.gen_range(0..tb.node_count());
    if ta == tb {
        // Align the cut points on structurally equal trees so crossover of
        // identical parents reproduces them instead of shuffling material
        // between two positions of the same tree.
        ib = ia;
    }
    let (ca, cb) = crossover_trees(ta, tb, ia, ib);
    let mut trees_a = a.trees.clone();
    let mut trees_b = b.trees.clone();
    trees_a[t] = if ca.depth() > max_depth { ta.clone() } else { ca };
    trees_b[t] = if cb.depth() > max_depth { tb.clone() } else { cb };
    (Individual::new(trees_a), Individual::new(trees_b))
}

/// Subtree mutation: one tree index, one uniformly chosen node, replaced by
/// a fresh grow-method subtree of depth ≤ 4, with depth-guard reversion.
pub fn mutate<R: Rng>(parent: &Individual, max_depth: usize, rng: &mut R) -> Individual {
    let t = rng.gen_range(0..parent.trees.len());
    let tree = &parent.trees[t];
    let i = rng.gen_range(0..tree.node_count());
    let fresh = random_tree(
        MUTATION_SUBTREE_DEPTH.min(max_depth),
        GrowMethod::Grow,
        rng,
    );
    let cand = tree.with_replaced(i, fresh.root().clone());
    let mut trees = parent.trees.clone();
    trees[t] = if cand.depth() > max_depth {
        tree.clone()
    } else {
        cand
    };
    Individual::new(trees)
}

/// Tournament selection with replacement; ties keep the earliest-drawn
/// contestant.
fn tournament<R: Rng>(pop: &[Individual], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..size {
        let c = rng.gen_range(0..pop.len());
        if outcome_of(&pop[c])
            .map(|oc| {
                compare_fitness(
                    oc,
                    pop[c].total_nodes(),
                    outcome_of(&pop[best]).unwrap(),
                    pop[best].total_nodes(),
                )
            })
            .map_or(false, |ord| ord == std::cmp::Ordering::Greater)
        {
            best = c;
        }
    }
    best
}

fn outcome_of(ind: &Individual) -> Option<&FitnessOutcome> {
    ind.fitness.as_ref()
}

/// Index of the best individual; ties go to the earlier index.
fn best_index(pop: &[Individual]) -> usize {
    let mut best = 0;
    for i in 1..pop.len() {
        if compare_fitness(
            outcome_of(&pop[i]).expect("population is evaluated"),
            pop[i].total_nodes(),
            outcome_of(&pop[best]).unwrap(),
            pop[best].total_nodes(),
        ) == std::cmp::Ordering::Greater
        {
            best = i;
        }
    }
    best
}

/// The `count` best individuals (fitness kept), stable under ties.
fn elites(pop: &[Individual], count: usize) -> Vec<Individual> {
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&i, &j| {
        compare_fitness(
            outcome_of(&pop[j]).expect("population is evaluated"),
            pop[j].total_nodes(),
            outcome_of(&pop[i]).unwrap(),
            pop[i].total_nodes(),
        )
    });
    idx.truncate(count);
    idx.into_iter().map(|i| pop[i].clone()).collect()
}

/// Scores every unevaluated individual: cache hits are reused, distinct new
/// genotypes are evaluated once each, in parallel.
fn evaluate_population(
    pop: &mut [Individual],
    source_original: &FeatureVector,
    source_conditioned: &FeatureVector,
    psi: f64,
    cfg: &FitnessConfig,
    cache: &mut HashMap<Vec<GpTree>, FitnessOutcome>,
) -> Result<()> {
    for ind in pop.iter_mut() {
        if ind.fitness.is_none() {
            if let Some(hit) = cache.get(&ind.trees) {
                ind.fitness = Some(hit.clone());
            }
        }
    }
    let mut groups: HashMap<Vec<GpTree>, Vec<usize>> = HashMap::new();
    for (i, ind) in pop.iter().enumerate() {
        if ind.fitness.is_none() {
            groups.entry(ind.trees.clone()).or_default().push(i);
        }
    }
    let keys: Vec<Vec<GpTree>> = groups.keys().cloned().collect();
    let outcomes: Vec<FitnessOutcome> = keys
        .par_iter()
        .map(|trees| {
            evaluate_individual(
                &Individual::new(trees.clone()),
                source_original,
                source_conditioned,
                psi,
                cfg,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    for (trees, outcome) in keys.into_iter().zip(outcomes) {
        for &i in &groups[&trees] {
            pop[i].fitness = Some(outcome.clone());
        }
        cache.insert(trees, outcome);
    }
    Ok(())
}

/// Evolves redundant-feature trees for one source feature.
pub fn run(source_original: &FeatureVector, cfg: &EvolutionConfig) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let source_conditioned = condition_source(source_original, &cfg.fitness.conditioning)?;
    let psi = baseline_psi(source_original, &cfg.fitness.estimator)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache: HashMap<Vec<GpTree>, FitnessOutcome> = HashMap::new();

    let mut pop = initialize(cfg, &mut rng);
    evaluate_population(
        &mut pop,
        source_original,
        &source_conditioned,
        psi,
        &cfg.fitness,
        &mut cache,
    )?;
    let mut history = Vec::with_capacity(cfg.generations + 1);
    history.push(pop[best_index(&pop)].fitness.as_ref().unwrap().fitness_value());

    for _ in 0..cfg.generations {
        let mut next = elites(&pop, cfg.elitism_count);
        while next.len() < cfg.population_size {
            if rng.gen::<f64>() < cfg.crossover_rate {
                let pa = tournament(&pop, cfg.tournament_size, &mut rng);
                let pb = tournament(&pop, cfg.tournament_size, &mut rng);
                let (c1, c2) = crossover(&pop[pa], &pop[pb], cfg.max_depth, &mut rng);
                next.push(c1);
                if next.len() < cfg.population_size {
                    next.push(c2);
                }
            } else {
                let p = tournament(&pop, cfg.tournament_size, &mut rng);
                next.push(mutate(&pop[p], cfg.max_depth, &mut rng));
            }
        }
        pop = next;
        evaluate_population(
            &mut pop,
            source_original,
            &source_conditioned,
            psi,
            &cfg.fitness,
            &mut cache,
        )?;
        history.push(pop[best_index(&pop)].fitness.as_ref().unwrap().fitness_value());
    }

    let best = pop[best_index(&pop)].clone();
    Ok(RunResult {
        best,
        fitness_history: history,
        config: cfg.clone(),
        psi,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}
