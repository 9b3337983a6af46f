use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use scal::bench::{decomposition_timings, linear_fit};
use scal::data::Shape;
use scal::pipeline::{self, Architecture, DatasetSpec, Method, PipelineConfig};

const DEFAULT_SWEEP: &str = "100,200,500,1000";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum DatasetKind {
    TwoMoons,
    TwoCircles,
    MoonCircle,
    #[value(alias = "concentric_rings")]
    Rings,
    Csv,
    Idx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    ScalR,
    ScalK,
    #[value(alias = "kmeans_baseline")]
    Kmeans,
    Exact,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::ScalR => Method::ScalR,
            MethodArg::ScalK => Method::ScalK,
            MethodArg::Kmeans => Method::KmeansBaseline,
            MethodArg::Exact => Method::Exact,
        }
    }
}

/// Landmark spectral clustering with an autoencoder in place of the
/// eigendecomposition.
#[derive(Debug, Parser)]
#[command(name = "scal", version)]
struct Cli {
    /// JSON file with a full or partial run configuration; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    #[arg(long, value_enum)]
    dataset: Option<DatasetKind>,
    /// Number of generated points.
    #[arg(long)]
    n: Option<usize>,
    /// Standard deviation of the Gaussian jitter on generated points.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_name = "FILE")]
    csv_path: Option<PathBuf>,
    /// Zero-based column holding class labels in the CSV file.
    #[arg(long)]
    label_column: Option<usize>,
    #[arg(long, value_name = "FILE")]
    idx_images: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    idx_labels: Option<PathBuf>,

    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Number of landmarks p.
    #[arg(long)]
    landmarks: Option<usize>,
    /// Number of clusters k.
    #[arg(long)]
    clusters: Option<usize>,
    /// Hidden layer sizes such as 64-32-2-32-64, or `auto`.
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Multiplier on the median squared distance used as kernel width.
    #[arg(long)]
    bandwidth_scale: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Also write W, S and the trained network to the output directory.
    #[arg(long)]
    dump_matrices: bool,

    /// Run once per landmark count instead of a single run.
    #[arg(long, value_name = "P1,P2,..", num_args = 0..=1, default_missing_value = DEFAULT_SWEEP)]
    sweep: Option<String>,
    /// Repeats per sweep or scaling cell.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Time the degree, scaling and one-epoch stages on two-moons data of
    /// these sizes and fit a line in n.
    #[arg(long, value_name = "N1,N2,..", conflicts_with = "sweep")]
    scaling: Option<String>,
}

fn parse_list(text: &str, what: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("bad {what} value `{v}`"))
        })
        .collect()
}

fn shape_of(kind: DatasetKind) -> Option<Shape> {
    match kind {
        DatasetKind::TwoMoons => Some(Shape::TwoMoons),
        DatasetKind::TwoCircles => Some(Shape::TwoCircles),
        DatasetKind::MoonCircle => Some(Shape::MoonCircle),
        DatasetKind::Rings => Some(Shape::ConcentricRings),
        DatasetKind::Csv | DatasetKind::Idx => None,
    }
}

fn dataset_spec(cli: &Cli, base: &DatasetSpec) -> Result<DatasetSpec> {
    let spec = match cli.dataset {
        None => base.clone(),
        Some(DatasetKind::Csv) => {
            let (path, label_column) = match base {
                DatasetSpec::Csv { path, label_column } => (Some(path.clone()), *label_column),
                _ => (None, None),
            };
            let Some(path) = cli.csv_path.clone().or(path) else {
                bail!("--dataset csv needs --csv-path");
            };
            DatasetSpec::Csv { path, label_column }
        }
        Some(DatasetKind::Idx) => {
            let (images, labels) = match base {
                DatasetSpec::Idx { images, labels } => (Some(images.clone()), Some(labels.clone())),
                _ => (None, None),
            };
            let (Some(images), Some(labels)) = (
                cli.idx_images.clone().or(images),
                cli.idx_labels.clone().or(labels),
            ) else {
                bail!("--dataset idx needs --idx-images and --idx-labels");
            };
            DatasetSpec::Idx { images, labels }
        }
        Some(kind) => {
            let shape = shape_of(kind).expect("generator kind");
            match base {
                DatasetSpec::Synthetic { n, noise, .. } => DatasetSpec::Synthetic {
                    shape,
                    n: *n,
                    noise: *noise,
                },
                _ => DatasetSpec::Synthetic {
                    shape,
                    n: 4000,
                    noise: 0.05,
                },
            }
        }
    };
    Ok(match spec {
        DatasetSpec::Synthetic { shape, n, noise } => DatasetSpec::Synthetic {
            shape,
            n: cli.n.unwrap_or(n),
            noise: cli.noise.unwrap_or(noise),
        },
        DatasetSpec::Csv { path, label_column } => DatasetSpec::Csv {
            path: cli.csv_path.clone().unwrap_or(path),
            label_column: cli.label_column.or(label_column),
        },
        DatasetSpec::Idx { images, labels } => DatasetSpec::Idx {
            images: cli.idx_images.clone().unwrap_or(images),
            labels: cli.idx_labels.clone().unwrap_or(labels),
        },
    })
}

fn build_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_json_file(path)?,
        None => PipelineConfig::default(),
    };
    cfg.dataset = dataset_spec(cli, &cfg.dataset)?;
    if let Some(m) = cli.method {
        cfg.method = m.into();
    }
    if let Some(k) = cli.clusters {
        cfg.clusters = k;
    } else if cli.config.is_none() {
        if let DatasetSpec::Synthetic { shape, .. } = cfg.dataset {
            cfg.clusters = shape.cluster_count();
        }
    }
    if let Some(arch) = &cli.arch {
        cfg.architecture = arch.parse::<Architecture>()?;
    }
    cfg.landmarks = cli.landmarks.unwrap_or(cfg.landmarks);
    cfg.train.epochs = cli.epochs.unwrap_or(cfg.train.epochs);
    cfg.train.batch_size = cli.batch_size.unwrap_or(cfg.train.batch_size);
    cfg.train.learning_rate = cli.lr.unwrap_or(cfg.train.learning_rate);
    cfg.bandwidth_scale = cli.bandwidth_scale.unwrap_or(cfg.bandwidth_scale);
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    if cli.out_dir.is_some() {
        cfg.out_dir = cli.out_dir.clone();
    }
    cfg.dump_matrices |= cli.dump_matrices;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if cli.repeats == 0 {
        bail!("--repeats must be positive");
    }
    let cfg = build_config(&cli)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();

    if let Some(sizes) = &cli.scaling {
        let sizes = parse_list(sizes, "--scaling")?;
        let timings = decomposition_timings(
            &sizes,
            cfg.landmarks,
            cli.repeats,
            cfg.seed,
            &cfg.architecture,
            &cfg.train,
        )?;
        writeln!(out, "n,p,repeat,degree,scale,epoch,total")?;
        for t in &timings {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                t.n,
                t.p,
                t.repeat,
                t.degree,
                t.scale,
                t.epoch,
                t.total()
            )?;
        }
        let xs: Vec<f64> = timings.iter().map(|t| t.n as f64).collect();
        let ys: Vec<f64> = timings.iter().map(|t| t.total()).collect();
        if let Some(fit) = linear_fit(&xs, &ys) {
            eprintln!(
                "linear fit in n: slope {:.3e} s/point, intercept {:.3e} s, r^2 {:.4}",
                fit.slope, fit.intercept, fit.r_squared
            );
        }
        return Ok(());
    }

    if let Some(grid) = &cli.sweep {
        let p_values = parse_list(grid, "--sweep")?;
        let dataset = cfg.dataset.load(cfg.seed)?;
        let rows = pipeline::sweep(&dataset, &cfg, &p_values, cli.repeats)?;
        match &cfg.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join("sweep.csv");
                pipeline::write_sweep_csv(&rows, &path)?;
                eprintln!("wrote {} rows to {}", rows.len(), path.display());
            }
            None => pipeline::write_sweep(&rows, &mut out)?,
        }
        return Ok(());
    }

    let (_, outcome) = pipeline::run_pipeline(&cfg)?;
    serde_json::to_writer_pretty(&mut out, &outcome.report)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
