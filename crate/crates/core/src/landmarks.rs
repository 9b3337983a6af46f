//! Landmark selection: uniform sampling of data rows, or k-means centroids.

use ndarray::{Array2, Axis};
use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, KMeansConfig};

/// k-means landmarks are fitted on at most this many uniformly drawn rows.
pub const KMEANS_SUBSAMPLE: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkMethod {
    Random,
    Kmeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub points: Array2<f64>,
    pub method: LandmarkMethod,
    pub seed: u64,
    /// Source rows for random landmarks.
    pub indices: Option<Vec<usize>>,
}

impl LandmarkSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }
}

fn check_count(dataset: &Dataset, p: usize) -> Result<()> {
    if p == 0 || p > dataset.n() {
        return Err(Error::param(format!(
            "landmark count must be in 1..={}, got {p}",
            dataset.n()
        )));
    }
    Ok(())
}

/// `p` distinct rows drawn uniformly without replacement.
pub fn select_random(dataset: &Dataset, p: usize, seed: u64) -> Result<LandmarkSet> {
    check_count(dataset, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = index::sample(&mut rng, dataset.n(), p).into_vec();
    Ok(LandmarkSet {
        points: dataset.features().select(Axis(0), &indices),
        method: LandmarkMethod::Random,
        seed,
        indices: Some(indices),
    })
}

/// Centroids of a `p`-cluster k-means run (single k-means++ start, relative
/// tolerance 1e-4), fitted on a subsample when `n > KMEANS_SUBSAMPLE`.
pub fn select_kmeans(
    dataset: &Dataset,
    p: usize,
    seed: u64,
    max_iter: usize,
) -> Result<LandmarkSet> {
    check_count(dataset, p)?;
    let config = KMeansConfig {
        max_iter,
        tol: 1e-4,
        restarts: 1,
    };
    let features = dataset.features();
    let fitted = if dataset.n() > KMEANS_SUBSAMPLE {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a4d);
        let mut rows = index::sample(&mut rng, dataset.n(), KMEANS_SUBSAMPLE).into_vec();
        rows.sort_unstable();
        let sub = features.select(Axis(0), &rows);
        kmeans(sub.view(), p, seed, &config)?
    } else {
        kmeans(features.view(), p, seed, &config)?
    };
    Ok(LandmarkSet {
        points: fitted.centroids,
        method: LandmarkMethod::Kmeans,
        seed,
        indices: None,
    })
}

pub fn select(
    dataset: &Dataset,
    p: usize,
    method: LandmarkMethod,
    seed: u64,
) -> Result<LandmarkSet> {
    match method {
        LandmarkMethod::Random => select_random(dataset, p, seed),
        LandmarkMethod::Kmeans => select_kmeans(dataset, p, seed, 100),
    }
}
