#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scal::autoencoder::{Activation, NetworkParams};
use scal::kmeans::ClusterAssignment;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((rows, cols), |_| r.random_range(lo..hi))
}

/// Column sums of the explicitly formed `M = WᵀW`.
pub fn materialized_degrees(w: &Array2<f64>) -> Array1<f64> {
    let n = w.ncols();
    let mut d = Array1::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut m = 0.0;
            for k in 0..w.nrows() {
                m += w[[k, i]] * w[[k, j]];
            }
            d[i] += m;
        }
    }
    d
}

/// `D^{-1/2} WᵀW D^{-1/2}` formed entry by entry.
pub fn materialized_laplacian(w: &Array2<f64>) -> Array2<f64> {
    let d = materialized_degrees(w);
    let n = w.ncols();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let mut m = 0.0;
        for k in 0..w.nrows() {
            m += w[[k, i]] * w[[k, j]];
        }
        m / (d[i].sqrt() * d[j].sqrt())
    })
}

/// Result of comparing backprop to central differences on every parameter.
#[derive(Debug, Default)]
pub struct GradCheck {
    pub checked: usize,
    pub skipped: usize,
    pub worst: f64,
}

fn loss(net: &NetworkParams, batch: &Array2<f64>, target: &Array2<f64>) -> f64 {
    let cache = net.forward(batch.view()).unwrap();
    let out = cache.reconstruction();
    let mut total = 0.0;
    for (a, b) in out.iter().zip(target.iter()) {
        total += (a - b) * (a - b);
    }
    total / batch.ncols() as f64
}

/// Sign pattern (-1, 0, 1) of every ReLU pre-activation.
fn relu_signs(net: &NetworkParams, batch: &Array2<f64>) -> Vec<i8> {
    let cache = net.forward(batch.view()).unwrap();
    (0..net.weights.len())
        .filter(|&l| net.activations[l] == Activation::Relu)
        .flat_map(|l| {
            cache.pre_activations[l]
                .iter()
                .map(|&z| {
                    if z > 0.0 {
                        1
                    } else if z < 0.0 {
                        -1
                    } else {
                        0
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Central differences with step `h`, relative error
/// `|g − fd| / max(|g|, |fd|, floor)`. Coordinates whose perturbation flips a
/// ReLU pre-activation across zero in either direction are skipped.
pub fn finite_difference_check(
    net: &NetworkParams,
    batch: &Array2<f64>,
    target: &Array2<f64>,
    h: f64,
) -> GradCheck {
    let grads = net.backward(batch.view(), target.view()).unwrap();
    let base_signs = relu_signs(net, batch);
    let mut report = GradCheck::default();
    let floor = 1e-7;

    let mut probe = |analytic: f64, set: &dyn Fn(&mut NetworkParams, f64)| {
        let mut plus = net.clone();
        set(&mut plus, h);
        let mut minus = net.clone();
        set(&mut minus, -h);
        if relu_signs(&plus, batch) != base_signs || relu_signs(&minus, batch) != base_signs {
            report.skipped += 1;
            return;
        }
        let fd = (loss(&plus, batch, target) - loss(&minus, batch, target)) / (2.0 * h);
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(floor);
        report.checked += 1;
        report.worst = report.worst.max(rel);
    };

    for l in 0..net.weights.len() {
        let (rows, cols) = net.weights[l].dim();
        for r in 0..rows {
            for c in 0..cols {
                probe(grads.weights[l][[r, c]], &|n: &mut NetworkParams, d| {
                    n.weights[l][[r, c]] += d
                });
            }
            probe(grads.biases[l][r], &|n: &mut NetworkParams, d| {
                n.biases[l][r] += d
            });
        }
    }
    report
}

/// Minimum 2-means objective over every bipartition of the points.
pub fn brute_force_two_means(points: &Array2<f64>) -> f64 {
    let n = points.nrows();
    let mut best = f64::INFINITY;
    // fix point 0 in the first group to skip mirrored partitions
    for mask in 0u32..(1 << (n - 1)) {
        let groups: Vec<usize> = (0..n)
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    ((mask >> (i - 1)) & 1) as usize
                }
            })
            .collect();
        if groups.iter().all(|&g| g == 0) {
            continue;
        }
        let mut cost = 0.0;
        for g in 0..2 {
            let members: Vec<usize> = (0..n).filter(|&i| groups[i] == g).collect();
            let mean: Vec<f64> = (0..points.ncols())
                .map(|c| {
                    members.iter().map(|&i| points[[i, c]]).sum::<f64>() / members.len() as f64
                })
                .collect();
            for &i in &members {
                for c in 0..points.ncols() {
                    cost += (points[[i, c]] - mean[c]).powi(2);
                }
            }
        }
        best = best.min(cost);
    }
    best
}

/// Purity by scanning every (cluster, class) pair against the raw arrays.
pub fn recount_purity(clusters: &[usize], classes: &[usize]) -> f64 {
    let k = clusters.iter().max().map_or(0, |m| m + 1);
    let l = classes.iter().max().map_or(0, |m| m + 1);
    let mut hits = 0;
    for j in 0..k {
        let mut best = 0;
        for i in 0..l {
            let count = clusters
                .iter()
                .zip(classes)
                .filter(|(&c, &y)| c == j && y == i)
                .count();
            best = best.max(count);
        }
        hits += best;
    }
    hits as f64 / clusters.len() as f64
}

pub fn recomputed_objective(points: &Array2<f64>, a: &ClusterAssignment) -> f64 {
    let mut total = 0.0;
    for (i, &l) in a.labels.iter().enumerate() {
        for c in 0..points.ncols() {
            total += (points[[i, c]] - a.centroids[[l, c]]).powi(2);
        }
    }
    total
}
