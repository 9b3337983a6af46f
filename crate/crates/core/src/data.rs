//! Datasets: the 2-D toy generators, CSV and IDX loaders, and feature scaling.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n × d` feature matrix (one row per point) with optional dense class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Option<Vec<usize>>,
    name: String,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Option<Vec<usize>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::param(format!(
                "dataset must be non-empty, got {n}x{d}"
            )));
        }
        if let Some((row, _)) = features
            .rows()
            .into_iter()
            .enumerate()
            .find(|(_, r)| r.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::param(format!("row {row} has a non-finite feature")));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::param(format!(
                    "label count {} does not match row count {n}",
                    labels.len()
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Number of distinct classes (`max id + 1`), if labelled.
    pub fn class_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// Rows at `indices`, labels carried along.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            name: self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    TwoMoons,
    TwoCircles,
    MoonCircle,
    #[serde(alias = "rings")]
    ConcentricRings,
}

// Shape constants. The moons are unit half-circles, the lower one reflected
// and centred at (1, 0.5) so the two interlock.
const MOON_RADIUS: f64 = 1.0;
const LOWER_MOON_CENTER: (f64, f64) = (1.0, 0.5);
const CIRCLE_RADII: [f64; 2] = [1.0, 2.0];
// moon_circle: a unit circle at the origin cupped by a lower half-arc.
const CUP_RADIUS: f64 = 2.0;
const CUP_CENTER: (f64, f64) = (0.0, 0.5);
pub const RING_RADII: [f64; 3] = [1.0, 2.0, 3.0];

impl Shape {
    pub const ALL: [Shape; 4] = [
        Shape::TwoMoons,
        Shape::TwoCircles,
        Shape::MoonCircle,
        Shape::ConcentricRings,
    ];

    pub fn cluster_count(self) -> usize {
        match self {
            Shape::ConcentricRings => RING_RADII.len(),
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Shape::TwoMoons => "two_moons",
            Shape::TwoCircles => "two_circles",
            Shape::MoonCircle => "moon_circle",
            Shape::ConcentricRings => "concentric_rings",
        }
    }

    /// Point on component `component` at curve parameter `u ∈ [0, 1)`.
    fn point(self, component: usize, u: f64) -> (f64, f64) {
        match (self, component) {
            (Shape::TwoMoons, 0) => {
                let t = PI * u;
                (MOON_RADIUS * t.cos(), MOON_RADIUS * t.sin())
            }
            (Shape::TwoMoons, _) => {
                let t = PI * u;
                (
                    LOWER_MOON_CENTER.0 - MOON_RADIUS * t.cos(),
                    LOWER_MOON_CENTER.1 - MOON_RADIUS * t.sin(),
                )
            }
            (Shape::TwoCircles, c) => {
                let t = 2.0 * PI * u;
                (CIRCLE_RADII[c] * t.cos(), CIRCLE_RADII[c] * t.sin())
            }
            (Shape::MoonCircle, 0) => {
                let t = 2.0 * PI * u;
                (t.cos(), t.sin())
            }
            (Shape::MoonCircle, _) => {
                let t = PI * u;
                (
                    CUP_CENTER.0 + CUP_RADIUS * t.cos(),
                    CUP_CENTER.1 - CUP_RADIUS * t.sin(),
                )
            }
            (Shape::ConcentricRings, c) => {
                let t = 2.0 * PI * u;
                (RING_RADII[c] * t.cos(), RING_RADII[c] * t.sin())
            }
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_moons" | "moons" => Ok(Shape::TwoMoons),
            "two_circles" | "circles" => Ok(Shape::TwoCircles),
            "moon_circle" => Ok(Shape::MoonCircle),
            "concentric_rings" | "rings" => Ok(Shape::ConcentricRings),
            other => Err(Error::param(format!("unknown shape `{other}`"))),
        }
    }
}

/// Samples `n` points uniformly in curve parameter along each component of
/// `shape`, adding isotropic Gaussian jitter with standard deviation `noise`.
///
/// Components get `n / c` points each, the remainder going to the first ones.
/// Rows are ordered by component.
pub fn generate_synthetic(shape: Shape, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let components = shape.cluster_count();
    if n < components {
        return Err(Error::param(format!(
            "{shape} needs at least {components} points, got {n}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::param(format!(
            "noise must be a finite value >= 0, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::param(e.to_string()))?;

    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for c in 0..components {
        let count = n / components + usize::from(c < n % components);
        for _ in 0..count {
            let (mut x, mut y) = shape.point(c, rng.random::<f64>());
            if noise > 0.0 {
                x += jitter.sample(&mut rng);
                y += jitter.sample(&mut rng);
            }
            features[[row, 0]] = x;
            features[[row, 1]] = y;
            labels.push(c);
            row += 1;
        }
    }
    Dataset::new(features, Some(labels), shape.as_str())
}

/// Reads a comma-separated file of reals.
///
/// A first row containing any non-numeric feature cell is treated as a header.
/// When `label_column` is given, that column's values become dense class ids
/// assigned in first-appearance order and the remaining columns are features.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_owned());
    parse_csv(&text, label_column, name)
}

pub fn parse_csv(
    text: &str,
    label_column: Option<usize>,
    name: impl Into<String>,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(format!("row {line}: {e}")))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::format(format!(
                    "row {line}: expected {w} columns, found {}",
                    record.len()
                )))
            }
            _ => {}
        }
        if let Some(lc) = label_column {
            if lc >= record.len() {
                return Err(Error::format(format!(
                    "row {line}: label column {lc} out of range for {} columns",
                    record.len()
                )));
            }
        }
        let is_feature = |col: usize| Some(col) != label_column;
        let parsed: Vec<Option<f64>> = record
            .iter()
            .enumerate()
            .filter(|(c, _)| is_feature(*c))
            .map(|(_, cell)| cell.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();

        // A header is a first row where no feature cell is numeric.
        if line == 0 && parsed.iter().all(Option::is_none) {
            continue;
        }
        if let Some(col) = parsed.iter().position(Option::is_none) {
            let actual = (0..record.len())
                .filter(|c| is_feature(*c))
                .nth(col)
                .unwrap_or(col);
            return Err(Error::format(format!(
                "row {line}, column {actual}: `{}` is not a finite number",
                &record[actual]
            )));
        }
        values.extend(parsed.into_iter().flatten());
        if let Some(lc) = label_column {
            raw_labels.push(record[lc].to_owned());
        }
        rows += 1;
    }

    let width = width.ok_or_else(|| Error::format("file has no rows"))?;
    let d = width - usize::from(label_column.is_some());
    if rows == 0 || d == 0 {
        return Err(Error::format(format!(
            "no numeric data ({rows} rows, {d} feature columns)"
        )));
    }
    let features =
        Array2::from_shape_vec((rows, d), values).map_err(|e| Error::format(e.to_string()))?;
    let labels = label_column.map(|_| dense_ids(&raw_labels));
    Dataset::new(features, labels, name)
}

fn dense_ids(raw: &[String]) -> Vec<usize> {
    let mut ids = HashMap::new();
    raw.iter()
        .map(|v| {
            let next = ids.len();
            *ids.entry(v.as_str()).or_insert(next)
        })
        .collect()
}

/// Writes features (and labels as a final column, if any) without a header.
/// Values use the shortest representation that round-trips exactly.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (i, row) in dataset.features.rows().into_iter().enumerate() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&v.to_string());
        }
        if let Some(labels) = &dataset.labels {
            out.push(',');
            out.push_str(&labels[i].to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = fs::read(ip).map_err(|e| Error::io(ip, e))?;
    let labels = fs::read(lp).map_err(|e| Error::io(lp, e))?;
    let name = ip
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_owned());
    decode_idx(&images, &labels, name)
}

/// Decodes an IDX image file (unsigned bytes, 3 dimensions) and its label
/// file. Pixels are flattened row-major and divided by 255.
pub fn decode_idx(images: &[u8], labels: &[u8], name: impl Into<String>) -> Result<Dataset> {
    let mut img = ByteCursor::new(images, "images");
    let magic = img.u32()?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(format!(
            "images: magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )));
    }
    let count = img.u32()? as usize;
    let rows = img.u32()? as usize;
    let cols = img.u32()? as usize;

    let mut lab = ByteCursor::new(labels, "labels");
    let magic = lab.u32()?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(format!(
            "labels: magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"
        )));
    }
    let label_count = lab.u32()? as usize;
    if label_count != count {
        return Err(Error::format(format!(
            "image count {count} does not match label count {label_count}"
        )));
    }

    let d = rows * cols;
    let pixels = img.take(count * d)?;
    let features = Array2::from_shape_vec(
        (count, d),
        pixels.iter().map(|&b| f64::from(b) / 255.0).collect(),
    )
    .map_err(|e| Error::format(e.to_string()))?;
    let ids = lab.take(count)?.iter().map(|&b| usize::from(b)).collect();
    Dataset::new(features, Some(ids), name)
}

/// Encodes images (`count × rows·cols` bytes) and labels in IDX layout.
pub fn encode_idx(rows: u32, cols: u32, pixels: &[u8], labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let count = labels.len() as u32;
    let mut images = Vec::with_capacity(16 + pixels.len());
    for v in [IDX_IMAGES_MAGIC, count, rows, cols] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend_from_slice(pixels);
    let mut lab = Vec::with_capacity(8 + labels.len());
    for v in [IDX_LABELS_MAGIC, count] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    lab.extend_from_slice(labels);
    (images, lab)
}

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteCursor<'a> {
    fn new(bytes: &'a [u8], what: &'static str) -> Self {
        ByteCursor {
            bytes,
            pos: 0,
            what,
        }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(Error::format(format!(
                "{}: truncated at byte {} (needed {len} more, {} available)",
                self.what,
                self.pos,
                self.bytes.len() - self.pos
            ))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Maps each feature column affinely onto `[0, 1]`; constant columns become 0.
pub fn min_max_scale(dataset: &Dataset) -> Dataset {
    let mut features = dataset.features.clone();
    for mut col in features.columns_mut() {
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        if range > 0.0 {
            col.mapv_inplace(|v| ((v - lo) / range).clamp(0.0, 1.0));
        } else {
            col.fill(0.0);
        }
    }
    Dataset {
        features,
        labels: dataset.labels.clone(),
        name: dataset.name.clone(),
    }
}
