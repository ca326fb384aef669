//! k-means++ clustering and the Adjusted Rand Index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::derive;

/// Lloyd iterations stop when the largest centroid shift drops below this.
const SHIFT_TOLERANCE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 300;

/// One restart's outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterRun {
    pub restart: usize,
    pub inertia: f64,
    pub ari: f64,
}

/// Clustering report: the best-inertia restart's assignment and ARI, plus
/// per-restart detail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub restarts: usize,
    pub best_restart: usize,
    pub inertia: f64,
    pub ari: f64,
    pub assignment: Vec<usize>,
    pub runs: Vec<ClusterRun>,
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

/// k-means++ seeding: first centroid uniform, then each next centroid drawn
/// with probability proportional to the squared distance to the nearest
/// already-chosen centroid.
fn seed_centroids(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(rows[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // every point coincides with a centroid; fall back to uniform
            rng.gen_range(0..n)
        };
        let c = rows[pick].clone();
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd iterations. Returns (assignment, inertia, per-iteration inertia
/// history). Ties in assignment go to the lower centroid index; clusters
/// that empty out keep their previous centroid.
fn lloyd(
    rows: &[Vec<f64>],
    mut centroids: Vec<Vec<f64>>,
) -> (Vec<usize>, f64, Vec<f64>) {
    let n = rows.len();
    let k = centroids.len();
    let dims = rows[0].len();
    let mut assignment = vec![0usize; n];
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        // assignment step
        let mut inertia = 0.0;
        for (i, r) in rows.iter().enumerate() {
            let mut best = 0;
            let mut best_d = sq_dist(r, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = sq_dist(r, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
            inertia += best_d;
        }
        history.push(inertia);
        // update step
        let mut sums = vec![vec![0.0; dims]; k];
        let mut counts = vec![0usize; k];
        for (i, r) in rows.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (d, &v) in r.iter().enumerate() {
                sums[assignment[i]][d] += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue; // keep the old centroid
            }
            let mut moved = 0.0;
            for d in 0..dims {
                let new = sums[c][d] / counts[c] as f64;
                let delta = new - centroids[c][d];
                moved += delta * delta;
                centroids[c][d] = new;
            }
            shift = shift.max(moved.sqrt());
        }
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }
    // final assignment against the converged centroids
    let mut inertia = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let mut best = 0;
        let mut best_d = sq_dist(r, &centroids[0]);
        for (c, centroid) in centroids.iter().enumerate().skip(1) {
            let d = sq_dist(r, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignment[i] = best;
        inertia += best_d;
    }
    history.push(inertia);
    (assignment, inertia, history)
}

fn kmeans_once(rows: &[Vec<f64>], k: usize, seed: u64) -> (Vec<usize>, f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids = seed_centroids(rows, k, &mut rng);
    lloyd(rows, centroids)
}

/// Adjusted Rand Index between two cluster assignments of the same points,
/// by pair counting with expected-index correction. 1 = identical up to
/// relabeling, ≈0 = chance-level agreement.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyFeature);
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let comb2 = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let index: f64 = table
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| comb2(c))
        .sum();
    let sum_a: f64 = table
        .iter()
        .map(|row| comb2(row.iter().sum::<u64>()))
        .sum();
    let sum_b: f64 = (0..kb)
        .map(|j| comb2(table.iter().map(|row| row[j]).sum::<u64>()))
        .sum();
    let total = comb2(a.len() as u64);
    let expected = sum_a * sum_b / total;
    let max = (sum_a + sum_b) / 2.0;
    if (max - expected).abs() < 1e-12 {
        // both partitions trivial (all-one-cluster or all-singletons) and
        // therefore in complete agreement
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// k-means++ with `restarts` seeded restarts; the lowest-inertia run is
/// reported, with its ARI against the dataset labels.
pub fn kmeans_ari(data: &Dataset, k: usize, restarts: usize, seed: u64) -> Result<ClusterReport> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::MissingLabels("ARI needs ground-truth labels".into()))?;
    let n = data.n_instances();
    if k < 2 {
        return Err(Error::InvalidConfig("k must be >= 2".into()));
    }
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "k = {k} exceeds the {n} instances"
        )));
    }
    if restarts < 1 {
        return Err(Error::InvalidConfig("restarts must be >= 1".into()));
    }
    let all: Vec<usize> = (0..data.n_features()).collect();
    let rows_idx: Vec<usize> = (0..n).collect();
    let rows = data.row_matrix(&all, &rows_idx);
    let (_, encoded) = super::encode_labels(labels);

    let mut runs = Vec::with_capacity(restarts);
    let mut best: Option<(usize, Vec<usize>, f64)> = None; // restart, assignment, inertia
    for r in 0..restarts {
        let (assignment, inertia, _) = kmeans_once(&rows, k, derive(seed, r as u64));
        let ari = adjusted_rand_index(&assignment, &encoded)?;
        runs.push(ClusterRun {
            restart: r,
            inertia,
            ari,
        });
        let is_better = best
            .as_ref()
            .map_or(true, |(_, _, best_inertia)| inertia < *best_inertia);
        if is_better {
            best = Some((r, assignment, inertia));
        }
    }
    let (best_restart, assignment, inertia) = best.expect("restarts >= 1");
    let ari = adjusted_rand_index(&assignment, &encoded)?;
    Ok(ClusterReport {
        k,
        restarts,
        best_restart,
        inertia,
        ari,
        assignment,
        runs,
    })
}
