//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export is a thin wrapper over a plain Rust function so the logic can
//! be tested natively.

use scal::affinity::{build_affinity, degree_vector, median_bandwidth, scaled_input};
use scal::autoencoder::{encode, init_network, train, TrainConfig};
use scal::data::{generate_synthetic, Dataset, Shape};
use scal::kmeans::{kmeans, KMeansConfig};
use scal::landmarks::{select, LandmarkMethod};
use scal::metrics::{nmi, purity};
use scal::oracle::{pairwise_median_bandwidth, spectral_cluster_exact, ExactOptions};
use scal::pipeline::Architecture;
use wasm_bindgen::prelude::*;

/// Largest `n` the exact method accepts in the page.
pub const EXACT_CAP: usize = 600;

/// Generated points, flattened as `x0, y0, x1, y1, ...`.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Points {
    coords: Vec<f64>,
    labels: Vec<u32>,
    clusters: usize,
}

#[wasm_bindgen]
impl Points {
    #[wasm_bindgen(getter)]
    pub fn coords(&self) -> Vec<f64> {
        self.coords.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn labels(&self) -> Vec<u32> {
        self.labels.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn clusters(&self) -> usize {
        self.clusters
    }
}

/// Result of one clustering run.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Clustering {
    assignment: Vec<u32>,
    latent: Vec<f64>,
    latent_dim: usize,
    loss: Vec<f64>,
    purity: f64,
    nmi: f64,
    sigma: f64,
    landmarks: Vec<f64>,
}

#[wasm_bindgen]
impl Clustering {
    #[wasm_bindgen(getter)]
    pub fn assignment(&self) -> Vec<u32> {
        self.assignment.clone()
    }

    /// Latent codes, point-major; empty for the exact method.
    #[wasm_bindgen(getter)]
    pub fn latent(&self) -> Vec<f64> {
        self.latent.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// Mean training loss per epoch.
    #[wasm_bindgen(getter)]
    pub fn loss(&self) -> Vec<f64> {
        self.loss.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn purity(&self) -> f64 {
        self.purity
    }

    #[wasm_bindgen(getter)]
    pub fn nmi(&self) -> f64 {
        self.nmi
    }

    #[wasm_bindgen(getter)]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Landmark coordinates, flattened like [`Points::coords`].
    #[wasm_bindgen(getter)]
    pub fn landmarks(&self) -> Vec<f64> {
        self.landmarks.clone()
    }
}

/// Settings for [`scal_run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalSettings {
    pub landmarks: usize,
    pub kmeans_landmarks: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub bandwidth_scale: f64,
    pub seed: u64,
}

fn shape(name: &str) -> Result<Shape, String> {
    name.parse::<Shape>().map_err(|e| e.to_string())
}

fn dataset(name: &str, n: usize, noise: f64, seed: u64) -> Result<Dataset, String> {
    generate_synthetic(shape(name)?, n, noise, seed).map_err(|e| e.to_string())
}

fn scores(ds: &Dataset, assignment: &[usize]) -> Result<(f64, f64), String> {
    let classes = ds.labels().ok_or("dataset has no labels")?;
    Ok((
        purity(assignment, classes).map_err(|e| e.to_string())?,
        nmi(assignment, classes).map_err(|e| e.to_string())?,
    ))
}

pub fn points(name: &str, n: usize, noise: f64, seed: u64) -> Result<Points, String> {
    let s = shape(name)?;
    let ds = dataset(name, n, noise, seed)?;
    Ok(Points {
        coords: ds.features().iter().copied().collect(),
        labels: ds
            .labels()
            .unwrap_or_default()
            .iter()
            .map(|&l| l as u32)
            .collect(),
        clusters: s.cluster_count(),
    })
}

pub fn scal_run(
    name: &str,
    n: usize,
    noise: f64,
    data_seed: u64,
    settings: &ScalSettings,
) -> Result<Clustering, String> {
    let ds = dataset(name, n, noise, data_seed)?;
    let k = shape(name)?.cluster_count();
    let err = |e: scal::Error| e.to_string();
    let method = if settings.kmeans_landmarks {
        LandmarkMethod::Kmeans
    } else {
        LandmarkMethod::Random
    };
    if settings.landmarks == 0 || settings.landmarks > n {
        return Err(format!("landmarks must be in 1..={n}"));
    }
    if settings.bandwidth_scale.is_nan() || settings.bandwidth_scale <= 0.0 {
        return Err("bandwidth scale must be positive".into());
    }
    let lm = select(&ds, settings.landmarks, method, settings.seed).map_err(err)?;
    let sigma = median_bandwidth(&ds, &lm).map_err(err)? * settings.bandwidth_scale;
    let w = build_affinity(&ds, &lm, sigma).map_err(err)?;
    let s = scaled_input(&w, &degree_vector(&w).map_err(err)?).map_err(err)?;
    let sizes = Architecture::toy()
        .layer_sizes(settings.landmarks, k)
        .map_err(err)?;
    let net = init_network(&sizes, settings.seed).map_err(err)?;
    let config = TrainConfig {
        batch_size: TrainConfig::default().batch_size.min(n),
        epochs: settings.epochs,
        learning_rate: settings.learning_rate,
        seed: settings.seed,
        shuffle: true,
    };
    let (net, loss) = train(net, &s, &config).map_err(err)?;
    let z = encode(&net, &s).map_err(err)?.z.reversed_axes();
    let codes = z.as_standard_layout();
    let assignment =
        kmeans(codes.view(), k, settings.seed, &KMeansConfig::default()).map_err(err)?;
    let (p, q) = scores(&ds, &assignment.labels)?;
    Ok(Clustering {
        assignment: assignment.labels.iter().map(|&l| l as u32).collect(),
        latent_dim: codes.ncols(),
        latent: codes.iter().copied().collect(),
        loss,
        purity: p,
        nmi: q,
        sigma,
        landmarks: lm.points.iter().copied().collect(),
    })
}

pub fn exact_run(
    name: &str,
    n: usize,
    noise: f64,
    data_seed: u64,
    bandwidth_scale: f64,
    seed: u64,
) -> Result<Clustering, String> {
    if n > EXACT_CAP {
        return Err(format!(
            "the exact method is limited to n ≤ {EXACT_CAP} here"
        ));
    }
    if bandwidth_scale.is_nan() || bandwidth_scale <= 0.0 {
        return Err("bandwidth scale must be positive".into());
    }
    let ds = dataset(name, n, noise, data_seed)?;
    let k = shape(name)?.cluster_count();
    let err = |e: scal::Error| e.to_string();
    let sigma = pairwise_median_bandwidth(&ds).map_err(err)? * bandwidth_scale;
    let assignment =
        spectral_cluster_exact(&ds, k, Some(sigma), seed, &ExactOptions::default()).map_err(err)?;
    let (p, q) = scores(&ds, &assignment.labels)?;
    Ok(Clustering {
        assignment: assignment.labels.iter().map(|&l| l as u32).collect(),
        latent: Vec::new(),
        latent_dim: 0,
        loss: Vec::new(),
        purity: p,
        nmi: q,
        sigma,
        landmarks: Vec::new(),
    })
}

/// Generates one of `two_moons`, `two_circles`, `moon_circle`, `rings`.
#[wasm_bindgen]
pub fn generate(shape: &str, n: usize, noise: f64, seed: u64) -> Result<Points, JsError> {
    points(shape, n, noise, seed).map_err(|e| JsError::new(&e))
}

/// Landmark affinity, autoencoder on the 64-32-2-32-64 network, then k-means
/// on the codes.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn run_scal(
    shape: &str,
    n: usize,
    noise: f64,
    data_seed: u64,
    landmarks: usize,
    kmeans_landmarks: bool,
    epochs: usize,
    learning_rate: f64,
    bandwidth_scale: f64,
    seed: u64,
) -> Result<Clustering, JsError> {
    let settings = ScalSettings {
        landmarks,
        kmeans_landmarks,
        epochs,
        learning_rate,
        bandwidth_scale,
        seed,
    };
    scal_run(shape, n, noise, data_seed, &settings).map_err(|e| JsError::new(&e))
}

/// Dense spectral clustering on the full affinity matrix.
#[wasm_bindgen]
pub fn run_exact(
    shape: &str,
    n: usize,
    noise: f64,
    data_seed: u64,
    bandwidth_scale: f64,
    seed: u64,
) -> Result<Clustering, JsError> {
    exact_run(shape, n, noise, data_seed, bandwidth_scale, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> ScalSettings {
        ScalSettings {
            landmarks: 40,
            kmeans_landmarks: false,
            epochs: 3,
            learning_rate: 0.05,
            bandwidth_scale: 1.0,
            seed: 1,
        }
    }

    #[test]
    fn points_are_flattened_pairs() {
        let p = points("rings", 90, 0.0, 3).unwrap();
        assert_eq!(p.coords.len(), 180);
        assert_eq!(p.labels.len(), 90);
        assert_eq!(p.clusters, 3);
        assert!(points("spiral", 10, 0.0, 0).is_err());
    }

    #[test]
    fn scal_run_returns_codes_and_history() {
        let c = scal_run("two_moons", 200, 0.05, 0, &settings()).unwrap();
        assert_eq!(c.assignment.len(), 200);
        assert_eq!(c.latent_dim, 2);
        assert_eq!(c.latent.len(), 400);
        assert_eq!(c.loss.len(), 3);
        assert_eq!(c.landmarks.len(), 80);
        assert!((0.5..=1.0).contains(&c.purity));
        let again = scal_run("two_moons", 200, 0.05, 0, &settings()).unwrap();
        assert_eq!(c.assignment, again.assignment);
    }

    #[test]
    fn bandwidth_scale_multiplies_sigma() {
        let a = scal_run("two_circles", 100, 0.05, 0, &settings()).unwrap();
        let b = scal_run(
            "two_circles",
            100,
            0.05,
            0,
            &ScalSettings {
                bandwidth_scale: 0.1,
                ..settings()
            },
        )
        .unwrap();
        assert!((b.sigma - 0.1 * a.sigma).abs() < 1e-12 * a.sigma);
    }

    #[test]
    fn exact_run_separates_rings_with_a_narrow_kernel() {
        let c = exact_run("rings", 600, 0.05, 0, 0.01, 0).unwrap();
        assert_eq!(c.purity, 1.0);
        assert!(exact_run("rings", EXACT_CAP + 1, 0.05, 0, 1.0, 0).is_err());
    }

    #[test]
    fn bad_settings_are_reported() {
        assert!(scal_run(
            "two_moons",
            50,
            0.05,
            0,
            &ScalSettings {
                landmarks: 60,
                ..settings()
            }
        )
        .is_err());
        assert!(scal_run(
            "two_moons",
            50,
            0.05,
            0,
            &ScalSettings {
                bandwidth_scale: 0.0,
                ..settings()
            }
        )
        .is_err());
    }
}
