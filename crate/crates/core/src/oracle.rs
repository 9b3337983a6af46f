//! Exact spectral clustering for small `n`: dense affinity, normalized
//! similarity `D^{-1/2} W D^{-1/2}`, cyclic Jacobi eigensolver, row-normalized
//! top-`k` eigenvectors, k-means.

use ndarray::{Array1, Array2, Axis};

use crate::affinity::median;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, ClusterAssignment, KMeansConfig};

pub const DEFAULT_ORACLE_CAP: usize = 3000;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    a: Array2<f64>,
}

impl SymmetricMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols || rows == 0 {
            return Err(Error::param(format!(
                "expected a non-empty square matrix, got {rows}x{cols}"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("matrix has non-finite entries"));
        }
        for i in 0..rows {
            for j in 0..i {
                if (a[[i, j]] - a[[j, i]]).abs() > 1e-12 {
                    return Err(Error::param(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymmetricMatrix { a })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Eigenvalues in descending order with matching orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// `w_ij = exp(-‖x_i − x_j‖² / σ)` over all pairs; each pair is computed once
/// and mirrored.
pub fn full_affinity(dataset: &Dataset, sigma: f64, cap: usize) -> Result<SymmetricMatrix> {
    let n = dataset.n();
    if n > cap {
        return Err(Error::OracleScale { n, cap });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    let d2 = pairwise_sq_distances(dataset);
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        w[[i, i]] = 1.0;
        for j in 0..i {
            let v = (-d2[[i, j]] / sigma).exp();
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }
    Ok(SymmetricMatrix { a: w })
}

fn pairwise_sq_distances(dataset: &Dataset) -> Array2<f64> {
    let x = dataset.features();
    let n = x.nrows();
    let mut d2 = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            let v: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2[[i, j]] = v;
            d2[[j, i]] = v;
        }
    }
    d2
}

/// Median of the squared distances over all unordered pairs of points.
pub fn pairwise_median_bandwidth(dataset: &Dataset) -> Result<f64> {
    let d2 = pairwise_sq_distances(dataset);
    let n = dataset.n();
    let mut pairs: Vec<f64> = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| d2[[i, j]])
        .collect();
    match median(&mut pairs) {
        Some(m) if m > 0.0 => Ok(m),
        _ => Err(Error::Degenerate(
            "median pairwise squared distance is 0".into(),
        )),
    }
}

/// Top-`r` eigenpairs by algebraic value, from cyclic Jacobi rotations run
/// until the off-diagonal Frobenius norm drops below `1e-10 · ‖A‖_F`.
pub fn symmetric_eigs(matrix: &SymmetricMatrix, r: usize) -> Result<EigenPairs> {
    let n = matrix.n();
    if r == 0 || r > n {
        return Err(Error::param(format!(
            "requested {r} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let norm = matrix.frobenius();
    let mut a = matrix
        .a
        .as_standard_layout()
        .into_owned()
        .into_raw_vec_and_offset()
        .0;
    // eigenvectors are kept as rows of `vt` so every rotation touches contiguous memory
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let threshold = 1e-10 * norm;
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let rotate_rows = |m: &mut [f64], p: usize, q: usize, c: f64, s: f64| {
        let (head, tail) = m.split_at_mut(q * n);
        let row_p = &mut head[p * n..p * n + n];
        let row_q = &mut tail[..n];
        for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
            let (xp, xq) = (*x, *y);
            *x = c * xp - s * xq;
            *y = s * xp + c * xq;
        }
    };

    let mut sweeps = 0;
    while off_norm(&a) >= threshold && norm > 0.0 {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {:e})",
                off_norm(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // rows p and q of Jᵀ A, then mirror them into the columns
                rotate_rows(&mut a, p, q, c, s);
                for k in 0..n {
                    a[k * n + p] = a[p * n + k];
                    a[k * n + q] = a[q * n + k];
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    order.truncate(r);
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = Array2::from_shape_fn((n, r), |(row, c)| vt[order[c] * n + row]);
    Ok(EigenPairs { values, vectors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOptions {
    pub cap: usize,
    pub kmeans: KMeansConfig,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            cap: DEFAULT_ORACLE_CAP,
            kmeans: KMeansConfig::default(),
        }
    }
}

/// Normalized spectral clustering on the full `n × n` affinity.
/// `sigma` defaults to [`pairwise_median_bandwidth`].
pub fn spectral_cluster_exact(
    dataset: &Dataset,
    k: usize,
    sigma: Option<f64>,
    seed: u64,
    options: &ExactOptions,
) -> Result<ClusterAssignment> {
    let n = dataset.n();
    if n > options.cap {
        return Err(Error::OracleScale {
            n,
            cap: options.cap,
        });
    }
    if k == 0 || k > n {
        return Err(Error::param(format!("k must be in 1..={n}, got {k}")));
    }
    let sigma = match sigma {
        Some(s) => s,
        None if n == 1 => 1.0,
        None => pairwise_median_bandwidth(dataset)?,
    };
    let w = full_affinity(dataset, sigma, options.cap)?;
    let inv_sqrt = w.a.sum_axis(Axis(1)).mapv(|d| d.sqrt().recip());
    let normalized =
        &w.a * &inv_sqrt.view().insert_axis(Axis(1)) * inv_sqrt.view().insert_axis(Axis(0));
    // restore exact symmetry lost to the two-sided product
    let normalized = (&normalized + &normalized.t()) * 0.5;
    let eig = symmetric_eigs(&SymmetricMatrix::new(normalized)?, k)?;

    let mut embedding = eig.vectors;
    for (i, mut row) in embedding.rows_mut().into_iter().enumerate() {
        let len = row.dot(&row).sqrt();
        if len <= f64::EPSILON {
            return Err(Error::Degenerate(format!(
                "spectral embedding row {i} has zero length"
            )));
        }
        row /= len;
    }
    kmeans(embedding.view(), k, seed, &options.kmeans)
}
