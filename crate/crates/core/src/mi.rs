//! Mutual-information estimation between two feature vectors.
//!
//! Implements the Kraskov–Stögbauer–Grassberger (KSG) algorithm-1 estimator:
//! for each instance, find the Chebyshev distance `d_i` to its k-th nearest
//! neighbour in the joint (x, y) space, count how many marginal neighbours
//! fall strictly inside `d_i` in each dimension, and combine the counts with
//! digamma terms. Estimates are in nats.
//!
//! All MI quantities downstream are normalised by the *baseline* Ψ, the
//! estimator's value for MI(X, X), which puts them on a roughly [0, 1] scale.
//!
//! Each marginal is standardised (z-scored) before the neighbour search.
//! The finite-sample KSG statistic is not scale-invariant — without this,
//! MI(x, a·x + b) collapses toward 0 as |a| leaves 1 — and the Chebyshev
//! joint metric only makes sense when both dimensions are on a common scale.
//!
//! Ties are broken by adding seeded uniform jitter to each coordinate after
//! standardisation; the jitter stream is consumed first for the x argument
//! and then for the y argument, so `estimate_mi(x, x, cfg)` jitters the two
//! copies independently (exactly what the Ψ baseline needs).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A column of instance values. Construction validates finiteness; estimator
/// length requirements (N > k) are checked at the estimator boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyFeature);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
        }
        Ok(FeatureVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// (min, max) of the values. The vector is never empty.
    pub fn range(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.values {
            if v < min {
                min = v;
            }
            if v > max {
                max = v;
            }
        }
        (min, max)
    }
}

/// Knobs for the KSG estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// k for the k-th nearest neighbour statistic.
    pub k_neighbors: usize,
    /// Amplitude of the additive tie-breaking jitter.
    pub tie_noise_amplitude: f64,
    /// Seed for the jitter stream.
    pub noise_seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            k_neighbors: 4,
            tie_noise_amplitude: 1e-8,
            noise_seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors < 1 {
            return Err(Error::InvalidConfig("k_neighbors must be >= 1".into()));
        }
        if !(self.tie_noise_amplitude > 0.0) {
            return Err(Error::InvalidConfig(
                "tie_noise_amplitude must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// A raw estimate together with the baseline it is normalised by.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiEstimate {
    /// Raw KSG estimate, nats. May be slightly negative (estimator noise).
    pub raw: f64,
    /// Baseline Ψ of the reference feature, nats. Always > 0.
    pub baseline_psi: f64,
    /// raw / baseline_psi.
    pub normalized: f64,
}

/// Digamma ψ(x) for x > 0.
///
/// Small arguments are shifted up with ψ(x) = ψ(x + 1) − 1/x until x ≥ 12,
/// then the asymptotic series is applied. Absolute error ≤ 1e-10 for x ≥ 1.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::DigammaDomain(x));
    }
    let mut x = x;
    let mut result = 0.0;
    while x < 12.0 {
        result -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / (x * x);
    // ψ(x) ~ ln x − 1/(2x) − 1/(12x²) + 1/(120x⁴) − 1/(252x⁶) + 1/(240x⁸) − 1/(132x¹⁰)
    let series = inv
        * (1.0 / 12.0
            - inv * (1.0 / 120.0 - inv * (1.0 / 252.0 - inv * (1.0 / 240.0 - inv * (1.0 / 132.0)))));
    Ok(result + x.ln() - 0.5 / x - series)
}

/// ψ(1..=n) via the recurrence, for integer-argument lookups in the KSG sum.
fn digamma_table(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    // ψ(1) = −γ
    table[1] = digamma(1.0).expect("digamma(1)");
    for m in 1..n {
        table[m + 1] = table[m] + 1.0 / m as f64;
    }
    table
}

fn check_pair(x: &FeatureVector, y: &FeatureVector, k: usize) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n <= k {
        return Err(Error::TooFewInstances { n, k });
    }
    Ok(n)
}

/// Z-scores a marginal. A zero-variance marginal maps to all zeros (the
/// jitter still separates the points; baseline_psi rejects constants earlier).
fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd > 0.0 {
        v.iter().map(|&x| (x - mean) / sd).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Standardises both marginals, then adds the seeded tie-breaking jitter:
/// the first N uniforms go to x, the next N to y, so the two arguments get
/// independent streams even when they alias the same data.
fn standardize_and_jitter(
    x: &[f64],
    y: &[f64],
    cfg: &EstimatorConfig,
) -> (Vec<f64>, Vec<f64>) {
    let mut xj = standardize(x);
    let mut yj = standardize(y);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
    let amp = cfg.tie_noise_amplitude;
    for v in xj.iter_mut() {
        *v += amp * rng.gen::<f64>();
    }
    for v in yj.iter_mut() {
        *v += amp * rng.gen::<f64>();
    }
    (xj, yj)
}

/// KSG estimate of MI(x, y) in nats.
///
/// Uses the exact windowed neighbour search (identical results to
/// [`estimate_mi_brute`], just faster); see the module docs for the
/// estimator definition.
pub fn estimate_mi(x: &FeatureVector, y: &FeatureVector, cfg: &EstimatorConfig) -> Result<f64> {
    cfg.validate()?;
    let _ = check_pair(x, y, cfg.k_neighbors)?;
    let (xj, yj) = standardize_and_jitter(x.values(), y.values(), cfg);
    ksg_windowed(&xj, &yj, cfg.k_neighbors)
}

/// Brute-force O(N²) reference implementation of the same estimator.
/// The windowed search must produce bit-identical results; a property test
/// holds the two together.
pub fn estimate_mi_brute(
    x: &FeatureVector,
    y: &FeatureVector,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    cfg.validate()?;
    let _ = check_pair(x, y, cfg.k_neighbors)?;
    let (xj, yj) = standardize_and_jitter(x.values(), y.values(), cfg);
    ksg_brute(&xj, &yj, cfg.k_neighbors)
}

/// KSG estimate on pre-jittered (general-position) data: no noise is added
/// and no standardisation is applied — the values go to the neighbour search
/// as they are.
///
/// This is the hook for exactness tests — with per-position values held
/// fixed, the estimate is bit-exactly symmetric in (x, y) — and for callers
/// that manage scaling and tie-breaking themselves. Duplicate joint points
/// are tolerated (they produce d_i = 0 with empty strict counts) but degrade
/// the estimate.
pub fn estimate_mi_prejittered(x: &FeatureVector, y: &FeatureVector, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidConfig("k_neighbors must be >= 1".into()));
    }
    let _ = check_pair(x, y, k)?;
    ksg_windowed(x.values(), y.values(), k)
}

/// The baseline Ψ = MI(x, x), with the two copies jittered independently.
/// Errors if the feature is constant or the estimate comes out non-positive.
pub fn baseline_psi(x: &FeatureVector, cfg: &EstimatorConfig) -> Result<f64> {
    let (min, max) = x.range();
    if min == max {
        return Err(Error::ConstantFeature);
    }
    let psi = estimate_mi(x, x, cfg)?;
    if psi <= 0.0 {
        return Err(Error::DegenerateBaseline(psi));
    }
    Ok(psi)
}

/// Estimates MI(x, y) and normalises it by a precomputed baseline.
pub fn normalized_mi(
    x: &FeatureVector,
    y: &FeatureVector,
    psi: f64,
    cfg: &EstimatorConfig,
) -> Result<MiEstimate> {
    if !(psi > 0.0) {
        return Err(Error::NonPositivePsi(psi));
    }
    let raw = estimate_mi(x, y, cfg)?;
    Ok(MiEstimate {
        raw,
        baseline_psi: psi,
        normalized: raw / psi,
    })
}

/// Brute-force search: all pairwise Chebyshev distances per instance, k-th
/// smallest by selection, strict marginal counts by linear scan.
fn ksg_brute(xj: &[f64], yj: &[f64], k: usize) -> Result<f64> {
    let n = xj.len();
    let table = digamma_table(n);
    let mut dist = vec![0.0f64; n];
    let mut scratch = vec![0.0f64; n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dx = (xj[j] - xj[i]).abs();
            let dy = (yj[j] - yj[i]).abs();
            dist[j] = if dx > dy { dx } else { dy };
        }
        dist[i] = f64::INFINITY; // exclude self
        scratch.copy_from_slice(&dist);
        let (_, kth, _) =
            scratch.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("finite"));
        let d_i = *kth;
        let mut nx = 0usize;
        let mut ny = 0usize;
        for j in 0..n {
            if j == i {
                continue;
            }
            if (xj[j] - xj[i]).abs() < d_i {
                nx += 1;
            }
            if (yj[j] - yj[i]).abs() < d_i {
                ny += 1;
            }
        }
        sum += table[nx + 1] + table[ny + 1];
    }
    Ok(table[k] + psi_of(n, &table) - sum / n as f64)
}

fn psi_of(n: usize, table: &[f64]) -> f64 {
    table[n]
}

/// Exact accelerated search: instances sorted by each marginal; per instance,
/// expand a window outward in x-order, pruning once the x-gap alone exceeds
/// the current k-th best Chebyshev distance (the Chebyshev distance of any
/// farther candidate is at least its x-gap, so the prune is exact). Marginal
/// counts scan outward from the instance with the same |difference| < d_i
/// comparison the brute force uses, so counts are identical too.
fn ksg_windowed(xj: &[f64], yj: &[f64], k: usize) -> Result<f64> {
    let n = xj.len();
    let table = digamma_table(n);

    let mut order_x: Vec<u32> = (0..n as u32).collect();
    order_x.sort_unstable_by(|&a, &b| {
        xj[a as usize]
            .partial_cmp(&xj[b as usize])
            .expect("finite")
    });
    let mut rank_x = vec![0u32; n];
    let mut sx = vec![0.0f64; n];
    for (r, &i) in order_x.iter().enumerate() {
        rank_x[i as usize] = r as u32;
        sx[r] = xj[i as usize];
    }
    let mut order_y: Vec<u32> = (0..n as u32).collect();
    order_y.sort_unstable_by(|&a, &b| {
        yj[a as usize]
            .partial_cmp(&yj[b as usize])
            .expect("finite")
    });
    let mut rank_y = vec![0u32; n];
    let mut sy = vec![0.0f64; n];
    for (r, &i) in order_y.iter().enumerate() {
        rank_y[i as usize] = r as u32;
        sy[r] = yj[i as usize];
    }

    let mut best = vec![0.0f64; k]; // k smallest Chebyshev distances, ascending
    let mut sum = 0.0;
    for i in 0..n {
        let xi = xj[i];
        let yi = yj[i];
        let r = rank_x[i] as usize;

        // k-th nearest joint neighbour via window expansion in x-order.
        let mut filled = 0usize;
        let mut lo = r as isize - 1;
        let mut hi = r + 1;
        loop {
            let dl = if lo >= 0 { xi - sx[lo as usize] } else { f64::INFINITY };
            let dr = if hi < n { sx[hi] - xi } else { f64::INFINITY };
            let take_left = dl <= dr;
            let dx = if take_left { dl } else { dr };
            if dx == f64::INFINITY {
                break; // both sides exhausted
            }
            if filled == k && dx >= best[k - 1] {
                break; // no farther candidate can improve the k-th best
            }
            let j = if take_left {
                let j = order_x[lo as usize] as usize;
                lo -= 1;
                j
            } else {
                let j = order_x[hi] as usize;
                hi += 1;
                j
            };
            let dy = (yj[j] - yi).abs();
            let d = if dx > dy { dx } else { dy };
            if filled < k {
                // insertion sort into the prefix
                let mut p = filled;
                while p > 0 && best[p - 1] > d {
                    best[p] = best[p - 1];
                    p -= 1;
                }
                best[p] = d;
                filled += 1;
            } else if d < best[k - 1] {
                let mut p = k - 1;
                while p > 0 && best[p - 1] > d {
                    best[p] = best[p - 1];
                    p -= 1;
                }
                best[p] = d;
            }
        }
        let d_i = best[k - 1];

        sum += table[count_within(&sx, rank_x[i] as usize, d_i) + 1]
            + table[count_within(&sy, rank_y[i] as usize, d_i) + 1];
    }
    Ok(table[k] + psi_of(n, &table) - sum / n as f64)
}

/// #{j ≠ i : |v_j − v_i| < d} over a sorted marginal, scanning outward from
/// the instance's own rank. |fl(a − b)| is monotone in the real difference,
/// so stopping at the first failure is exact.
fn count_within(sorted: &[f64], rank: usize, d: f64) -> usize {
    let vi = sorted[rank];
    let mut count = 0usize;
    let mut p = rank;
    while p > 0 {
        p -= 1;
        if (sorted[p] - vi).abs() < d {
            count += 1;
        } else {
            break;
        }
    }
    let mut q = rank + 1;
    while q < sorted.len() {
        if (sorted[q] - vi).abs() < d {
            count += 1;
        } else {
            break;
        }
        q += 1;
    }
    count
}
