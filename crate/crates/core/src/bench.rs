//! Timing harness for the `O(np)` decomposition stages: degree vector,
//! scaled input, and one training epoch.

use std::time::Instant;

use serde::Serialize;

use crate::affinity;
use crate::autoencoder::{self, TrainConfig};
use crate::data::{generate_synthetic, Shape};
use crate::error::Result;
use crate::landmarks::select_random;
use crate::pipeline::Architecture;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageTiming {
    pub n: usize,
    pub p: usize,
    pub repeat: usize,
    pub degree: f64,
    pub scale: f64,
    pub epoch: f64,
}

impl StageTiming {
    pub fn total(&self) -> f64 {
        self.degree + self.scale + self.epoch
    }
}

/// Times the decomposition stages on two-moons data for each `n`.
pub fn decomposition_timings(
    sizes: &[usize],
    p: usize,
    repeats: usize,
    seed: u64,
    architecture: &Architecture,
    train: &TrainConfig,
) -> Result<Vec<StageTiming>> {
    let mut out = Vec::with_capacity(sizes.len() * repeats);
    for &n in sizes {
        for repeat in 0..repeats {
            let run_seed = seed.wrapping_add(repeat as u64);
            let ds = generate_synthetic(Shape::TwoMoons, n, 0.05, run_seed)?;
            let lm = select_random(&ds, p, run_seed)?;
            let w = affinity::build_affinity_median(&ds, &lm)?;
            let net = autoencoder::init_network(&architecture.layer_sizes(p, 2)?, run_seed)?;

            let t = Instant::now();
            let deg = affinity::degree_vector(&w)?;
            let degree = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let s = affinity::scaled_input(&w, &deg)?;
            let scale = t.elapsed().as_secs_f64();

            let cfg = TrainConfig {
                batch_size: train.batch_size.min(n),
                seed: run_seed,
                ..*train
            };
            let t = Instant::now();
            let net = autoencoder::train_epoch(net, &s, &cfg)?;
            let epoch = t.elapsed().as_secs_f64();
            drop(net);

            out.push(StageTiming {
                n,
                p,
                repeat,
                degree,
                scale,
                epoch,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let fit = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn timings_have_one_row_per_cell() {
        let rows = decomposition_timings(
            &[300, 600],
            20,
            2,
            0,
            &Architecture::Hidden(vec![8, 4, 2, 4, 8]),
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.total() >= 0.0 && r.p == 20));
    }
}
