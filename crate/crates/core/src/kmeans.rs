//! k-means++ seeding and Lloyd iterations.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Above this dimension, assignment distances go through a matrix product.
const GEMM_DIM_THRESHOLD: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub objective: f64,
    pub iterations: usize,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iter: 300,
            tol: 1e-6,
            restarts: 10,
        }
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_points(points: ArrayView2<f64>, k: usize) -> Result<()> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::param(format!("k must be in 1..={n}, got {k}")));
    }
    if points.ncols() == 0 {
        return Err(Error::param("points have zero dimensions"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("points contain non-finite values"));
    }
    Ok(())
}

/// k-means++ seeding: the first centroid is a uniformly chosen point, each
/// further one is drawn with probability proportional to its squared distance
/// from the nearest centroid chosen so far.
pub fn kmeanspp_init(points: ArrayView2<f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    check_points(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));

    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // Every point coincides with a chosen centroid.
            rng.random_range(0..n)
        };
        chosen.push(next);
        let c = points.row(next);
        let update = par::map_range(n, |i| nearest[i].min(sq_dist(points.row(i), c)));
        nearest = update;
    }
    Ok(points.select(Axis(0), &chosen))
}

/// Nearest-centroid labels (ties to the lowest index) and the resulting
/// objective.
pub fn assign(points: ArrayView2<f64>, centroids: ArrayView2<f64>) -> (Vec<usize>, f64) {
    let k = centroids.nrows();
    let labels: Vec<usize> = if points.ncols() > GEMM_DIM_THRESHOLD && k > 1 {
        // ‖x‖² is common to every centroid, so only ‖c‖² − 2x·c is compared.
        let cross = points.dot(&centroids.t());
        let c_norms: Array1<f64> = centroids.rows().into_iter().map(|c| c.dot(&c)).collect();
        par::map_range(points.nrows(), |i| {
            argmin((0..k).map(|j| c_norms[j] - 2.0 * cross[[i, j]]))
        })
    } else {
        par::map_range(points.nrows(), |i| {
            let x = points.row(i);
            argmin(centroids.rows().into_iter().map(|c| sq_dist(x, c)))
        })
    };
    let objective = objective(points, &labels, centroids);
    (labels, objective)
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (j, v) in values.enumerate() {
        if v < best.1 {
            best = (j, v);
        }
    }
    best.0
}

/// Sum of squared distances of points to their assigned centroids.
pub fn objective(points: ArrayView2<f64>, labels: &[usize], centroids: ArrayView2<f64>) -> f64 {
    par::map_range(points.nrows(), |i| {
        sq_dist(points.row(i), centroids.row(labels[i]))
    })
    .into_iter()
    .sum()
}

fn update_centroids(
    points: ArrayView2<f64>,
    labels: &[usize],
    previous: &Array2<f64>,
) -> Array2<f64> {
    let (k, m) = previous.dim();
    let mut sums = Array2::<f64>::zeros((k, m));
    let mut counts = vec![0usize; k];
    for (row, &l) in points.rows().into_iter().zip(labels) {
        sums.row_mut(l).scaled_add(1.0, &row);
        counts[l] += 1;
    }
    let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
    for (j, mut row) in sums.rows_mut().into_iter().enumerate() {
        if counts[j] > 0 {
            row /= counts[j] as f64;
        }
    }
    if !empty.is_empty() {
        // Re-seed each empty cluster with the point farthest from its current
        // centroid, taking points only from clusters that can spare one.
        let mut dist: Vec<(f64, usize)> = points
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, x)| (sq_dist(x, previous.row(labels[i])), i))
            .collect();
        dist.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut candidates = dist.into_iter();
        for j in empty {
            for (_, i) in candidates.by_ref() {
                if counts[labels[i]] > 1 {
                    counts[labels[i]] -= 1;
                    counts[j] += 1;
                    sums.row_mut(j).assign(&points.row(i));
                    break;
                }
            }
        }
    }
    sums
}

/// Lloyd iterations from `init`, recording the objective after every
/// assignment step.
pub fn lloyd_traced(
    points: ArrayView2<f64>,
    init: ArrayView2<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<(ClusterAssignment, Vec<f64>)> {
    let k = init.nrows();
    check_points(points, k)?;
    if init.ncols() != points.ncols() {
        return Err(Error::param(format!(
            "centroid dimension {} does not match point dimension {}",
            init.ncols(),
            points.ncols()
        )));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("initial centroids contain non-finite values"));
    }
    if max_iter == 0 || tol.is_nan() || tol < 0.0 {
        return Err(Error::param(
            "max_iter must be positive and tol nonnegative",
        ));
    }

    let mut centroids = init.to_owned();
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let (labels, obj) = assign(points, centroids.view());
        trace.push(obj);
        iterations += 1;
        let converged = trace.len() >= 2 && {
            let prev = trace[trace.len() - 2];
            prev - obj <= tol * prev
        };
        if converged || iterations >= max_iter || obj == 0.0 {
            return Ok((
                ClusterAssignment {
                    labels,
                    centroids,
                    objective: obj,
                    iterations,
                },
                trace,
            ));
        }
        centroids = update_centroids(points, &labels, &centroids);
    }
}

pub fn lloyd(
    points: ArrayView2<f64>,
    init: ArrayView2<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterAssignment> {
    lloyd_traced(points, init, max_iter, tol).map(|(a, _)| a)
}

/// k-means++ plus Lloyd, restarted `config.restarts` times; the lowest
/// objective wins (earliest restart on ties).
pub fn kmeans(
    points: ArrayView2<f64>,
    k: usize,
    seed: u64,
    config: &KMeansConfig,
) -> Result<ClusterAssignment> {
    check_points(points, k)?;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusterAssignment> = None;
    for _ in 0..config.restarts.max(1) {
        let init = kmeanspp_init(points, k, seeds.next_u64())?;
        let run = lloyd(points, init.view(), config.max_iter, config.tol)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
