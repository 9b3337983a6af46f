//! End-to-end runs: landmarks → affinity → degrees → `S` → autoencoder →
//! k-means on the bottleneck, plus the baselines, file outputs and sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::affinity::{self, AffinityMatrix, ScaledMatrix};
use crate::autoencoder::{self, NetworkParams, TrainConfig};
use crate::data::{self, Dataset, Shape};
use crate::error::{Error, Result};
use crate::kmeans::{self, ClusterAssignment, KMeansConfig};
use crate::landmarks::{self, LandmarkMethod};
use crate::metrics;
use crate::oracle::{self, ExactOptions, DEFAULT_ORACLE_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic {
        shape: Shape,
        n: usize,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        label_column: Option<usize>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

fn default_noise() -> f64 {
    0.05
}

impl DatasetSpec {
    /// Loads or generates the dataset. CSV features are min-max scaled; IDX
    /// pixels are already in `[0, 1]`.
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::Synthetic { shape, n, noise } => {
                data::generate_synthetic(*shape, *n, *noise, seed)
            }
            DatasetSpec::Csv { path, label_column } => {
                data::load_csv(path, *label_column).map(|d| data::min_max_scale(&d))
            }
            DatasetSpec::Idx { images, labels } => data::load_idx(images, labels),
        }
    }

    /// Upper bound on `n` when it is known without loading.
    pub fn known_size(&self) -> Option<usize> {
        match self {
            DatasetSpec::Synthetic { n, .. } => Some(*n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ScalR,
    ScalK,
    #[serde(alias = "kmeans")]
    KmeansBaseline,
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ScalR => "scal_r",
            Method::ScalK => "scal_k",
            Method::KmeansBaseline => "kmeans",
            Method::Exact => "exact",
        }
    }

    pub fn uses_landmarks(self) -> bool {
        matches!(self, Method::ScalR | Method::ScalK)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scal_r" | "scal-r" => Ok(Method::ScalR),
            "scal_k" | "scal-k" => Ok(Method::ScalK),
            "kmeans" | "kmeans_baseline" => Ok(Method::KmeansBaseline),
            "exact" => Ok(Method::Exact),
            other => Err(Error::param(format!("unknown method `{other}`"))),
        }
    }
}

/// Hidden layer sizes, either given or derived from `p` and `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Architecture {
    Hidden(Vec<usize>),
    Named(AutoArchitecture),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoArchitecture {
    Auto,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture::Named(AutoArchitecture::Auto)
    }
}

impl Architecture {
    pub fn auto() -> Self {
        Architecture::default()
    }

    /// The toy-data network: 64-32-2-32-64.
    pub fn toy() -> Self {
        Architecture::Hidden(vec![64, 32, 2, 32, 64])
    }

    /// Full layer sizes `[p, h1, h2, m, h2', h1', p]`.
    pub fn layer_sizes(&self, p: usize, k: usize) -> Result<Vec<usize>> {
        let hidden = match self {
            Architecture::Hidden(h) => h.clone(),
            Architecture::Named(AutoArchitecture::Auto) => {
                let wide = (2 * p).min(512);
                let mid = p.min(256);
                vec![wide, mid, k.max(2), mid, wide]
            }
        };
        if hidden.len() != 5 {
            return Err(Error::param(format!(
                "architecture needs 5 hidden sizes, got {}",
                hidden.len()
            )));
        }
        let mut sizes = Vec::with_capacity(7);
        sizes.push(p);
        sizes.extend(hidden);
        sizes.push(p);
        Ok(sizes)
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Architecture::auto());
        }
        s.split(['-', ','])
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::param(format!("bad layer size `{v}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Architecture::Hidden)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: DatasetSpec,
    pub method: Method,
    /// Number of landmarks `p`.
    pub landmarks: usize,
    /// Number of clusters `k`.
    pub clusters: usize,
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub kmeans: KMeansConfig,
    /// σ is this multiple of the median squared landmark distance.
    pub bandwidth_scale: f64,
    pub seed: u64,
    pub oracle_cap: usize,
    pub out_dir: Option<PathBuf>,
    /// Also write `W`, `S` and the trained network.
    pub dump_matrices: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: DatasetSpec::Synthetic {
                shape: Shape::TwoMoons,
                n: 4000,
                noise: default_noise(),
            },
            method: Method::ScalR,
            landmarks: 200,
            clusters: 2,
            architecture: Architecture::auto(),
            train: TrainConfig::default(),
            kmeans: KMeansConfig::default(),
            bandwidth_scale: 1.0,
            seed: 0,
            oracle_cap: DEFAULT_ORACLE_CAP,
            out_dir: None,
            dump_matrices: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.clusters == 0 || self.clusters > n {
            return Err(Error::param(format!(
                "clusters must be in 1..={n}, got {}",
                self.clusters
            )));
        }
        if self.method.uses_landmarks() && (self.landmarks == 0 || self.landmarks > n) {
            return Err(Error::param(format!(
                "landmarks must be in 1..={n}, got {}",
                self.landmarks
            )));
        }
        if self.method == Method::Exact && n > self.oracle_cap {
            return Err(Error::OracleScale {
                n,
                cap: self.oracle_cap,
            });
        }
        if !(self.bandwidth_scale > 0.0 && self.bandwidth_scale.is_finite()) {
            return Err(Error::param(format!(
                "bandwidth scale must be positive, got {}",
                self.bandwidth_scale
            )));
        }
        Ok(())
    }

    fn stage_seed(&self, stage: u64) -> u64 {
        // splitmix64 step keeps per-stage streams apart
        let mut z = self
            .seed
            .wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Wall-clock seconds per stage; `None` for stages a method skips.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WallTimes {
    pub landmarks: Option<f64>,
    pub affinity: Option<f64>,
    pub train: Option<f64>,
    pub cluster: Option<f64>,
    pub total: f64,
}

impl WallTimes {
    pub fn stage_sum(&self) -> f64 {
        [self.landmarks, self.affinity, self.train, self.cluster]
            .iter()
            .flatten()
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub method: String,
    pub n: usize,
    pub p: Option<usize>,
    pub k: usize,
    pub seed: u64,
    pub purity: Option<f64>,
    pub nmi: Option<f64>,
    pub sigma: Option<f64>,
    pub loss_history: Vec<f64>,
    pub wall_times: WallTimes,
}

impl RunReport {
    /// Same report with timings zeroed, for determinism checks.
    pub fn without_timings(&self) -> RunReport {
        RunReport {
            wall_times: WallTimes::default(),
            ..self.clone()
        }
    }
}

/// Everything a run produced, kept in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub assignment: ClusterAssignment,
    pub affinity: Option<AffinityMatrix>,
    pub scaled: Option<ScaledMatrix>,
    pub network: Option<NetworkParams>,
    /// Bottleneck codes, `m × n`.
    pub latent: Option<Array2<f64>>,
}

fn timed<T>(stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage))?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Runs the configured method on an already loaded dataset.
pub fn run_on(dataset: &Dataset, config: &PipelineConfig) -> Result<RunOutcome> {
    let started = Instant::now();
    let n = dataset.n();
    config.validate(n)?;
    let k = config.clusters;
    let mut times = WallTimes::default();
    let mut sigma = None;
    let mut loss_history = Vec::new();
    let mut affinity_out = None;
    let mut scaled_out = None;
    let mut network = None;
    let mut latent = None;

    let assignment = match config.method {
        Method::KmeansBaseline => {
            let (a, t) = timed("cluster", || {
                kmeans::kmeans(
                    dataset.features().view(),
                    k,
                    config.stage_seed(4),
                    &config.kmeans,
                )
            })?;
            times.cluster = Some(t);
            a
        }
        Method::Exact => {
            let options = ExactOptions {
                cap: config.oracle_cap,
                kmeans: config.kmeans,
            };
            let explicit = if config.bandwidth_scale == 1.0 {
                None
            } else {
                Some(oracle::pairwise_median_bandwidth(dataset)? * config.bandwidth_scale)
            };
            let (a, t) = timed("cluster", || {
                oracle::spectral_cluster_exact(dataset, k, explicit, config.stage_seed(4), &options)
            })?;
            sigma = explicit;
            times.cluster = Some(t);
            a
        }
        Method::ScalR | Method::ScalK => {
            let method = if config.method == Method::ScalR {
                LandmarkMethod::Random
            } else {
                LandmarkMethod::Kmeans
            };
            let (lm, t) = timed("landmarks", || {
                landmarks::select(dataset, config.landmarks, method, config.stage_seed(1))
            })?;
            times.landmarks = Some(t);

            let ((w, s), t) = timed("affinity", || {
                let w = if config.bandwidth_scale == 1.0 {
                    affinity::build_affinity_median(dataset, &lm)?
                } else {
                    let sigma = affinity::median_bandwidth(dataset, &lm)? * config.bandwidth_scale;
                    affinity::build_affinity(dataset, &lm, sigma)?
                };
                let deg = affinity::degree_vector(&w)?;
                let s = affinity::scaled_input(&w, &deg)?;
                Ok((w, s))
            })?;
            times.affinity = Some(t);
            sigma = Some(w.sigma);

            let ((net, history), t) = timed("train", || {
                let sizes = config.architecture.layer_sizes(lm.len(), k)?;
                let net = autoencoder::init_network(&sizes, config.stage_seed(2))?;
                let train = TrainConfig {
                    batch_size: config.train.batch_size.min(n),
                    seed: config.stage_seed(3),
                    ..config.train
                };
                autoencoder::train(net, &s, &train)
            })?;
            times.train = Some(t);
            loss_history = history;

            let ((z, a), t) = timed("cluster", || {
                let z = autoencoder::encode(&net, &s)?.z;
                let a = kmeans::kmeans(z.t(), k, config.stage_seed(4), &config.kmeans)?;
                Ok((z, a))
            })?;
            times.cluster = Some(t);
            affinity_out = Some(w);
            scaled_out = Some(s);
            network = Some(net);
            latent = Some(z);
            a
        }
    };

    let (purity, nmi) = match dataset.labels() {
        Some(labels) => (
            Some(metrics::purity(&assignment.labels, labels)?),
            Some(metrics::nmi(&assignment.labels, labels)?),
        ),
        None => (None, None),
    };
    times.total = started.elapsed().as_secs_f64();
    let report = RunReport {
        dataset: dataset.name().to_owned(),
        method: config.method.as_str().to_owned(),
        n,
        p: config.method.uses_landmarks().then_some(config.landmarks),
        k,
        seed: config.seed,
        purity,
        nmi,
        sigma,
        loss_history,
        wall_times: times,
    };
    Ok(RunOutcome {
        report,
        assignment,
        affinity: affinity_out,
        scaled: scaled_out,
        network,
        latent,
    })
}

/// Loads the dataset, runs, and writes the outputs to `config.out_dir` (if
/// set): `labels.csv`, `metrics.json`, `points.csv` for 2-D data, and the
/// matrix and model dumps when requested. On any failure the files written
/// so far are removed.
pub fn run_pipeline(config: &PipelineConfig) -> Result<(Dataset, RunOutcome)> {
    let dataset = config
        .dataset
        .load(config.seed)
        .map_err(|e| e.in_stage("load"))?;
    let outcome = run_on(&dataset, config)?;
    if let Some(dir) = &config.out_dir {
        write_outputs(dir, &dataset, &outcome, config.dump_matrices)
            .map_err(|e| e.in_stage("write"))?;
    }
    Ok((dataset, outcome))
}

pub fn write_outputs(
    dir: &Path,
    dataset: &Dataset,
    outcome: &RunOutcome,
    dump: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let result = write_all(dir, dataset, outcome, dump, &mut written);
    if result.is_err() {
        for path in &written {
            let _ = fs::remove_file(path);
        }
    }
    result.map(|_| written)
}

fn write_all(
    dir: &Path,
    dataset: &Dataset,
    outcome: &RunOutcome,
    dump: bool,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut put = |name: &str, contents: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        written.push(path.clone());
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    };

    let mut labels = String::from("point_index,cluster\n");
    for (i, c) in outcome.assignment.labels.iter().enumerate() {
        labels.push_str(&format!("{i},{c}\n"));
    }
    put("labels.csv", labels.into_bytes())?;

    let json =
        serde_json::to_vec_pretty(&outcome.report).map_err(|e| Error::format(e.to_string()))?;
    put("metrics.json", json)?;

    if dataset.dim() == 2 {
        let mut pts = String::from("x,y,label,cluster\n");
        for (i, row) in dataset.features().rows().into_iter().enumerate() {
            let label = dataset
                .labels()
                .map(|l| l[i].to_string())
                .unwrap_or_default();
            pts.push_str(&format!(
                "{},{},{label},{}\n",
                row[0], row[1], outcome.assignment.labels[i]
            ));
        }
        put("points.csv", pts.into_bytes())?;
    }

    if dump {
        let mut buf = Vec::new();
        if let Some(w) = &outcome.affinity {
            affinity::write_matrix(&w.w, &mut buf).map_err(|e| Error::io(dir.join("w.lspc"), e))?;
            put("w.lspc", std::mem::take(&mut buf))?;
        }
        if let Some(s) = &outcome.scaled {
            affinity::write_matrix(&s.s, &mut buf).map_err(|e| Error::io(dir.join("s.lspc"), e))?;
            put("s.lspc", std::mem::take(&mut buf))?;
        }
        if let Some(net) = &outcome.network {
            autoencoder::write_checkpoint(net, &mut buf)
                .map_err(|e| Error::io(dir.join("model.laen"), e))?;
            put("model.laen", std::mem::take(&mut buf))?;
        }
    }
    Ok(())
}

/// One cell of a landmark sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: usize,
    pub repeat: usize,
    pub seed: u64,
    /// `ok`, or the error message of a failed cell.
    pub status: String,
    pub purity: Option<f64>,
    pub nmi: Option<f64>,
    pub t_landmarks: Option<f64>,
    pub t_affinity: Option<f64>,
    pub t_train: Option<f64>,
    pub t_cluster: Option<f64>,
    pub t_total: Option<f64>,
    /// Total time divided by the median total of the largest-`p` cells.
    pub normalized_time: Option<f64>,
}

/// Runs the pipeline for every `p` in `p_values` and every repeat, with seed
/// `config.seed + repeat`. A failing cell is recorded and the sweep goes on.
pub fn sweep(
    dataset: &Dataset,
    config: &PipelineConfig,
    p_values: &[usize],
    repeats: usize,
) -> Result<Vec<SweepRow>> {
    if p_values.is_empty() || repeats == 0 {
        return Err(Error::param(
            "sweep needs at least one p value and one repeat",
        ));
    }
    if let Some(&p) = p_values.iter().find(|&&p| p > dataset.n()) {
        return Err(Error::param(format!(
            "sweep p = {p} exceeds n = {}",
            dataset.n()
        )));
    }
    let mut rows = Vec::with_capacity(p_values.len() * repeats);
    for &p in p_values {
        for repeat in 0..repeats {
            let cell = PipelineConfig {
                landmarks: p,
                seed: config.seed.wrapping_add(repeat as u64),
                out_dir: None,
                ..config.clone()
            };
            let row = match run_on(dataset, &cell) {
                Ok(out) => {
                    let t = out.report.wall_times;
                    SweepRow {
                        p,
                        repeat,
                        seed: cell.seed,
                        status: "ok".into(),
                        purity: out.report.purity,
                        nmi: out.report.nmi,
                        t_landmarks: t.landmarks,
                        t_affinity: t.affinity,
                        t_train: t.train,
                        t_cluster: t.cluster,
                        t_total: Some(t.total),
                        normalized_time: None,
                    }
                }
                Err(e) => SweepRow {
                    p,
                    repeat,
                    seed: cell.seed,
                    status: format!("failed: {e}"),
                    purity: None,
                    nmi: None,
                    t_landmarks: None,
                    t_affinity: None,
                    t_train: None,
                    t_cluster: None,
                    t_total: None,
                    normalized_time: None,
                },
            };
            rows.push(row);
        }
    }
    let largest = *p_values.iter().max().expect("non-empty");
    let mut reference: Vec<f64> = rows
        .iter()
        .filter(|r| r.p == largest)
        .filter_map(|r| r.t_total)
        .collect();
    if let Some(base) = affinity::median(&mut reference).filter(|b| *b > 0.0) {
        for row in &mut rows {
            row.normalized_time = row.t_total.map(|t| t / base);
        }
    }
    Ok(rows)
}

pub fn write_sweep(rows: &[SweepRow], out: impl std::io::Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::format(e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::format(e.to_string()))
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_sweep(rows, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Format(msg) => Error::format(format!("{}: {msg}", path.display())),
        other => other,
    })
}
