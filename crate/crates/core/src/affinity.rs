//! Landmark affinity `W`, its degree vector, and the scaled input `S`.
//!
//! `W` is `p × n` with `w_ij = exp(-‖ℓ_i − x_j‖² / σ)`. The implicit point
//! similarity `M = WᵀW` is never formed: its column sums are `Wᵀ wˢ`, where
//! `wˢ` holds the row sums of `W`, which costs `O(np)`. Scaling column `i` of
//! `W` by `d_i^{-1/2}` gives `S` with `SᵀS = D^{-1/2} M D^{-1/2}`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::landmarks::LandmarkSet;
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    /// `p × n`, one column per data point.
    pub w: Array2<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector {
    /// Degree of each point, length `n`.
    pub d: Array1<f64>,
    /// Row sums of `W`, length `p`.
    pub ws: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMatrix {
    /// `p × n`, column `i` is `w_i / √d_i`.
    pub s: Array2<f64>,
}

impl AffinityMatrix {
    /// Wraps an existing matrix, e.g. one read back from disk.
    pub fn new(w: Array2<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be positive, got {sigma}")));
        }
        if w.is_empty() {
            return Err(Error::param("affinity matrix is empty"));
        }
        if let Some(v) = w.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(Error::param(format!("affinity entry {v} outside [0, 1]")));
        }
        Ok(AffinityMatrix { w, sigma })
    }

    pub fn landmarks(&self) -> usize {
        self.w.nrows()
    }

    pub fn points(&self) -> usize {
        self.w.ncols()
    }
}

impl ScaledMatrix {
    pub fn rows(&self) -> usize {
        self.s.nrows()
    }

    pub fn cols(&self) -> usize {
        self.s.ncols()
    }
}

fn check_dims(dataset: &Dataset, landmarks: &LandmarkSet) -> Result<()> {
    if landmarks.is_empty() {
        return Err(Error::param("no landmarks"));
    }
    if landmarks.points.ncols() != dataset.dim() {
        return Err(Error::param(format!(
            "landmark dimension {} does not match data dimension {}",
            landmarks.points.ncols(),
            dataset.dim()
        )));
    }
    Ok(())
}

/// `p × n` matrix of squared Euclidean landmark–point distances.
pub fn squared_distances(dataset: &Dataset, landmarks: &LandmarkSet) -> Result<Array2<f64>> {
    check_dims(dataset, landmarks)?;
    let x = dataset.features();
    let l = &landmarks.points;
    let (p, n) = (l.nrows(), x.nrows());
    let mut out = vec![0.0; p * n];
    par::for_each_row(&mut out, n, |i, row| {
        let li = l.row(i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = li
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
    });
    Ok(Array2::from_shape_vec((p, n), out).expect("shape matches buffer"))
}

/// Median of `values`; the mean of the two middle elements for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    let len = values.len();
    if len == 0 {
        return None;
    }
    let mid = len / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if len % 2 == 1 {
        Some(upper)
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (below + upper))
    }
}

fn median_of_matrix(dist: &Array2<f64>) -> Result<f64> {
    let mut all = dist.iter().copied().collect::<Vec<_>>();
    let sigma = median(&mut all).ok_or_else(|| Error::param("no distances"))?;
    if sigma <= 0.0 {
        return Err(Error::Degenerate(
            "median squared landmark distance is 0 (points coincide with landmarks)".into(),
        ));
    }
    Ok(sigma)
}

/// Bandwidth σ: median of all `p·n` squared landmark–point distances.
pub fn median_bandwidth(dataset: &Dataset, landmarks: &LandmarkSet) -> Result<f64> {
    median_of_matrix(&squared_distances(dataset, landmarks)?)
}

/// Gaussian affinities of every point to every landmark for a given σ.
pub fn build_affinity(
    dataset: &Dataset,
    landmarks: &LandmarkSet,
    sigma: f64,
) -> Result<AffinityMatrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    let dist = squared_distances(dataset, landmarks)?;
    Ok(kernel_in_place(dist, sigma))
}

/// [`build_affinity`] with the median bandwidth, sharing one distance pass.
pub fn build_affinity_median(dataset: &Dataset, landmarks: &LandmarkSet) -> Result<AffinityMatrix> {
    let dist = squared_distances(dataset, landmarks)?;
    let sigma = median_of_matrix(&dist)?;
    Ok(kernel_in_place(dist, sigma))
}

fn kernel_in_place(mut dist: Array2<f64>, sigma: f64) -> AffinityMatrix {
    let n = dist.ncols();
    let buf = dist.as_slice_mut().expect("standard layout");
    par::for_each_row(buf, n, |_, row| {
        for v in row {
            *v = (-*v / sigma).exp();
        }
    });
    AffinityMatrix { w: dist, sigma }
}

/// Row sums `wˢ` and degrees `d = Wᵀ wˢ`.
pub fn degree_vector(affinity: &AffinityMatrix) -> Result<DegreeVector> {
    let w = &affinity.w;
    let ws = w.sum_axis(Axis(1));
    let d = w.t().dot(&ws);
    if let Some(i) = d.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Degenerate(format!(
            "degree of point {i} is {}",
            d[i]
        )));
    }
    if let Some(k) = ws.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Degenerate(format!(
            "row sum of landmark {k} is {}",
            ws[k]
        )));
    }
    Ok(DegreeVector { d, ws })
}

/// `S = W D^{-1/2}`, column by column.
///
/// For `n ≥ 2` every entry is strictly below 1 in exact arithmetic; an entry
/// at or above 1 is reported as a degenerate-input error, not clipped.
pub fn scaled_input(affinity: &AffinityMatrix, degrees: &DegreeVector) -> Result<ScaledMatrix> {
    let n = affinity.points();
    if degrees.d.len() != n {
        return Err(Error::param(format!(
            "degree vector has {} entries for {n} points",
            degrees.d.len()
        )));
    }
    if let Some(i) = degrees.d.iter().position(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::Degenerate(format!(
            "degree of point {i} is {}",
            degrees.d[i]
        )));
    }
    let inv_sqrt = degrees.d.mapv(|v| v.sqrt().recip());
    let s = &affinity.w * &inv_sqrt.insert_axis(Axis(0));
    if n >= 2 {
        if let Some(v) = s.iter().find(|v| !(**v >= 0.0 && **v < 1.0)) {
            return Err(Error::Degenerate(format!(
                "scaled entry {v} outside [0, 1)"
            )));
        }
    }
    Ok(ScaledMatrix { s })
}

const MATRIX_MAGIC: &[u8; 4] = b"LSPC";

/// Row-major little-endian `f64` dump behind a 16-byte header: `LSPC`,
/// `u32` rows, `u32` cols, `u32` reserved (zero).
pub fn write_matrix(matrix: &Array2<f64>, mut out: impl Write) -> std::io::Result<()> {
    let (rows, cols) = matrix.dim();
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| std::io::Error::other(format!("dimension {v} exceeds u32")))
    };
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&to_u32(rows)?.to_le_bytes())?;
    out.write_all(&to_u32(cols)?.to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    let mut buf = Vec::with_capacity(rows * cols * 8);
    for v in matrix.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)
}

pub fn read_matrix(mut input: impl Read) -> Result<Array2<f64>> {
    let mut header = [0u8; 16];
    input
        .read_exact(&mut header)
        .map_err(|e| Error::format(format!("matrix header: {e}")))?;
    if &header[..4] != MATRIX_MAGIC {
        return Err(Error::format("matrix file does not start with LSPC"));
    }
    let word = |at: usize| u32::from_le_bytes(header[at..at + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (word(4), word(8));
    let mut body = Vec::new();
    input
        .read_to_end(&mut body)
        .map_err(|e| Error::format(format!("matrix body: {e}")))?;
    if body.len() != rows * cols * 8 {
        return Err(Error::format(format!(
            "matrix body has {} bytes, expected {} for {rows}x{cols}",
            body.len(),
            rows * cols * 8
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked"))
}

pub fn save_matrix(matrix: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_matrix(matrix, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(std::io::BufReader::new(file))
}
