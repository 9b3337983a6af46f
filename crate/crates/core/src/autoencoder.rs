//! Fully connected autoencoder with five hidden layers, trained by plain
//! mini-batch gradient descent to reconstruct the columns of `S`.
//!
//! Layout is `[p, h1, h2, m, h2', h1', p]`. Hidden layers use ReLU except the
//! bottleneck, which is linear; the output layer is a sigmoid. Matrices are
//! column-per-sample: a batch is `p × b`, weights are `fan_out × fan_in`.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affinity::ScaledMatrix;
use crate::error::{Error, Result};

pub const LAYER_SIZES: usize = 7;
pub const BOTTLENECK_LAYER: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            // NaN passes through so divergence is not masked
            Activation::Relu => z.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v }),
            Activation::Linear => {}
            Activation::Sigmoid => z.mapv_inplace(sigmoid),
        }
    }

    /// Derivative in terms of the pre-activation `z` and output `a`.
    /// ReLU's derivative at exactly 0 is taken as 0.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Activation of layer `l` (0-based over the six weight layers).
pub fn layer_activation(l: usize) -> Activation {
    match l {
        BOTTLENECK_LAYER => Activation::Linear,
        5 => Activation::Sigmoid,
        _ => Activation::Relu,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub sizes: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub activations: Vec<Activation>,
}

/// Gradients with the same shapes as the parameters they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Inputs to every layer (`inputs[0]` is the batch, `inputs[6]` the
/// reconstruction) and the pre-activations of every layer.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
    pub pre_activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn reconstruction(&self) -> &Array2<f64> {
        self.inputs.last().expect("cache holds the batch at least")
    }

    pub fn bottleneck(&self) -> &Array2<f64> {
        &self.inputs[BOTTLENECK_LAYER + 1]
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() != LAYER_SIZES {
        return Err(Error::param(format!(
            "autoencoder needs {LAYER_SIZES} layer sizes (input, 5 hidden, output), got {}",
            sizes.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::param("layer sizes must be positive"));
    }
    if sizes[0] != sizes[LAYER_SIZES - 1] {
        return Err(Error::param(format!(
            "output size {} must equal input size {}",
            sizes[LAYER_SIZES - 1],
            sizes[0]
        )));
    }
    Ok(())
}

/// Weights uniform in `±√(6 / (fan_in + fan_out))`, biases zero.
pub fn init_network(sizes: &[usize], seed: u64) -> Result<NetworkParams> {
    check_sizes(sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(LAYER_SIZES - 1);
    let mut biases = Vec::with_capacity(LAYER_SIZES - 1);
    for pair in sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
            rng.random_range(-limit..=limit)
        }));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(NetworkParams {
        sizes: sizes.to_vec(),
        weights,
        biases,
        activations: (0..LAYER_SIZES - 1).map(layer_activation).collect(),
    })
}

impl NetworkParams {
    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn latent_size(&self) -> usize {
        self.sizes[BOTTLENECK_LAYER + 1]
    }

    /// An all-zero network with the standard activations.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        let mut net = init_network(sizes, 0)?;
        net.weights.iter_mut().for_each(|w| w.fill(0.0));
        Ok(net)
    }

    fn check_batch(&self, batch: ArrayView2<f64>) -> Result<()> {
        if batch.nrows() != self.input_size() {
            return Err(Error::param(format!(
                "batch has {} rows, network expects {}",
                batch.nrows(),
                self.input_size()
            )));
        }
        Ok(())
    }

    fn layer(&self, l: usize, input: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
        let mut z = self.weights[l].dot(&input);
        z += &self.biases[l].view().insert_axis(Axis(1));
        let mut a = z.clone();
        self.activations[l].apply(&mut a);
        (z, a)
    }

    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_batch(batch)?;
        let layers = self.weights.len();
        let mut inputs = Vec::with_capacity(layers + 1);
        let mut pre_activations = Vec::with_capacity(layers);
        inputs.push(batch.to_owned());
        for l in 0..layers {
            let (z, a) = self.layer(l, inputs[l].view());
            pre_activations.push(z);
            inputs.push(a);
        }
        Ok(ForwardCache {
            inputs,
            pre_activations,
        })
    }

    /// Exact gradient of [`reconstruction_loss`] by reverse accumulation,
    /// together with the loss itself.
    pub fn loss_and_gradients(
        &self,
        batch: ArrayView2<f64>,
        target: ArrayView2<f64>,
    ) -> Result<(f64, Gradients)> {
        if batch.dim() != target.dim() {
            return Err(Error::param(format!(
                "batch shape {:?} differs from target shape {:?}",
                batch.dim(),
                target.dim()
            )));
        }
        let cache = self.forward(batch)?;
        let out = cache.reconstruction();
        let b = batch.ncols() as f64;
        let loss = reconstruction_loss(out.view(), target)?;

        let layers = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); layers];
        let mut gb = vec![Array1::zeros(0); layers];
        // dL/da at the output
        let mut delta = (out - &target) * (2.0 / b);
        for l in (0..layers).rev() {
            let act = self.activations[l];
            ndarray::Zip::from(&mut delta)
                .and(&cache.pre_activations[l])
                .and(&cache.inputs[l + 1])
                .for_each(|g, &z, &a| *g *= act.derivative(z, a));
            gw[l] = delta.dot(&cache.inputs[l].t());
            gb[l] = delta.sum_axis(Axis(1));
            if l > 0 {
                delta = self.weights[l].t().dot(&delta);
            }
        }
        Ok((
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        ))
    }

    pub fn backward(&self, batch: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<Gradients> {
        self.loss_and_gradients(batch, target).map(|(_, g)| g)
    }

    fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.scaled_add(-learning_rate, g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.scaled_add(-learning_rate, g);
        }
    }

    /// Bottleneck codes for the columns of `input` (`m × n`).
    pub fn encode_matrix(&self, input: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_batch(input)?;
        const CHUNK: usize = 4096;
        let n = input.ncols();
        let mut codes = Array2::zeros((self.latent_size(), n));
        let mut start = 0;
        while start < n {
            let end = (start + CHUNK).min(n);
            let mut a = input.slice(s![.., start..end]).to_owned();
            for l in 0..=BOTTLENECK_LAYER {
                a = self.layer(l, a.view()).1;
            }
            codes.slice_mut(s![.., start..end]).assign(&a);
            start = end;
        }
        Ok(codes)
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }
}

/// Mean over columns of the squared Euclidean reconstruction error.
pub fn reconstruction_loss(
    reconstruction: ArrayView2<f64>,
    target: ArrayView2<f64>,
) -> Result<f64> {
    if reconstruction.dim() != target.dim() {
        return Err(Error::param(format!(
            "reconstruction shape {:?} differs from target shape {:?}",
            reconstruction.dim(),
            target.dim()
        )));
    }
    let cols = reconstruction.ncols().max(1) as f64;
    let total: f64 = ndarray::Zip::from(reconstruction)
        .and(target)
        .fold(0.0, |acc, &r, &t| acc + (r - t) * (r - t));
    Ok(total / cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            epochs: 10,
            learning_rate: 0.05,
            seed: 0,
            shuffle: true,
        }
    }
}

/// Latent codes, one column per data point.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub z: Array2<f64>,
}

/// Runs `epochs × ⌈n / batch_size⌉` gradient steps on the columns of `S` and
/// returns the trained parameters with the mean per-column loss of each epoch
/// (measured on each batch before its update).
pub fn train(
    mut params: NetworkParams,
    s: &ScaledMatrix,
    config: &TrainConfig,
) -> Result<(NetworkParams, Vec<f64>)> {
    let data = s.s.view();
    let n = data.ncols();
    if config.batch_size == 0 || config.batch_size > n {
        return Err(Error::param(format!(
            "batch size must be in 1..={n}, got {}",
            config.batch_size
        )));
    }
    if config.epochs == 0 {
        return Err(Error::param("epochs must be at least 1"));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::param(format!(
            "bad learning rate {}",
            config.learning_rate
        )));
    }
    params.check_batch(data)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_total = 0.0;
        for (step, idx) in order.chunks(config.batch_size).enumerate() {
            let batch = data.select(Axis(1), idx);
            let (loss, grads) = params.loss_and_gradients(batch.view(), batch.view())?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, step, loss });
            }
            epoch_total += loss * idx.len() as f64;
            params.apply_gradients(&grads, config.learning_rate);
        }
        history.push(epoch_total / n as f64);
    }
    Ok((params, history))
}

/// Run one epoch of [`train`]; used for timing the training stage.
pub fn train_epoch(
    params: NetworkParams,
    s: &ScaledMatrix,
    config: &TrainConfig,
) -> Result<NetworkParams> {
    let one = TrainConfig {
        epochs: 1,
        ..*config
    };
    train(params, s, &one).map(|(p, _)| p)
}

pub fn encode(params: &NetworkParams, s: &ScaledMatrix) -> Result<Embedding> {
    params.encode_matrix(s.s.view()).map(|z| Embedding { z })
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"LAEN";
const CHECKPOINT_VERSION: u32 = 1;

/// Checkpoint layout (little-endian): `LAEN`, `u32` version, `u32` size
/// count, the `u32` sizes, then for each layer its weights (row-major) and
/// biases as `f64`.
pub fn write_checkpoint(params: &NetworkParams, mut out: impl Write) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(16 + params.parameter_count() * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(params.sizes.len() as u32).to_le_bytes());
    for &s in &params.sizes {
        buf.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for (w, b) in params.weights.iter().zip(&params.biases) {
        for v in w.iter().chain(b.iter()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)
}

pub fn read_checkpoint(mut input: impl Read) -> Result<NetworkParams> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::format(format!("checkpoint: {e}")))?;
    let mut pos = 0usize;
    let mut take = |len: usize| -> Result<&[u8]> {
        let end = pos + len;
        if end > bytes.len() {
            return Err(Error::format(format!("checkpoint truncated at byte {pos}")));
        }
        let slice = &bytes[pos..end];
        pos = end;
        Ok(slice)
    };
    if take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint does not start with LAEN"));
    }
    let word = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let version = word(take(4)?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = word(take(4)?) as usize;
    if count != LAYER_SIZES {
        return Err(Error::format(format!("checkpoint has {count} layer sizes")));
    }
    let mut sizes = Vec::with_capacity(count);
    for _ in 0..count {
        sizes.push(word(take(4)?) as usize);
    }
    let mut params = NetworkParams::zeros(&sizes).map_err(|e| Error::format(e.to_string()))?;
    let mut read_f64s = |dst: &mut dyn Iterator<Item = &mut f64>| -> Result<()> {
        for v in dst {
            *v = f64::from_le_bytes(take(8)?.try_into().unwrap());
        }
        Ok(())
    };
    for l in 0..params.weights.len() {
        read_f64s(&mut params.weights[l].iter_mut())?;
        read_f64s(&mut params.biases[l].iter_mut())?;
    }
    if pos != bytes.len() {
        return Err(Error::format(format!(
            "checkpoint has {} trailing bytes",
            bytes.len() - pos
        )));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &NetworkParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_checkpoint(params, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<NetworkParams> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random_batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(0.0..1.0))
    }

    /// Independent evaluator: explicit loops, no matrix products.
    fn straight_line_forward(params: &NetworkParams, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in 0..params.weights.len() {
            let w = &params.weights[l];
            let mut next = vec![0.0; w.nrows()];
            for (o, slot) in next.iter_mut().enumerate() {
                let mut z = params.biases[l][o];
                for (i, ai) in a.iter().enumerate() {
                    z += w[[o, i]] * ai;
                }
                *slot = match l {
                    2 => z,
                    5 => 1.0 / (1.0 + (-z).exp()),
                    _ => z.max(0.0),
                };
            }
            a = next;
        }
        a
    }

    #[test]
    fn toy_architecture_shapes() {
        let net = init_network(&[200, 64, 32, 2, 32, 64, 200], 1).unwrap();
        let shapes: Vec<_> = net.weights.iter().map(|w| w.dim()).collect();
        assert_eq!(
            shapes,
            vec![(64, 200), (32, 64), (2, 32), (32, 2), (64, 32), (200, 64)]
        );
        assert_eq!(
            net.activations,
            vec![
                Activation::Relu,
                Activation::Relu,
                Activation::Linear,
                Activation::Relu,
                Activation::Relu,
                Activation::Sigmoid
            ]
        );
        assert!(net.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert_eq!(
            net,
            init_network(&[200, 64, 32, 2, 32, 64, 200], 1).unwrap()
        );
        assert_ne!(
            net,
            init_network(&[200, 64, 32, 2, 32, 64, 200], 2).unwrap()
        );
    }

    #[test]
    fn bad_layer_counts() {
        assert!(matches!(
            init_network(&[4, 3, 2, 3, 4], 0),
            Err(Error::Parameter(_))
        ));
        assert!(init_network(&[4, 3, 2, 2, 3, 4, 5], 0).is_err());
    }

    #[test]
    fn init_spread_matches_uniform_law() {
        let net = init_network(&[300, 200, 100, 10, 100, 200, 300], 5).unwrap();
        for w in net.weights.iter().filter(|w| w.len() >= 1000) {
            let (fan_out, fan_in) = w.dim();
            let mean = w.mean().unwrap();
            let sd = (w.mapv(|v| (v - mean) * (v - mean)).sum() / (w.len() - 1) as f64).sqrt();
            let expected = (2.0 / (fan_in + fan_out) as f64).sqrt();
            assert!((sd / expected - 1.0).abs() < 0.15, "{sd} vs {expected}");
        }
    }

    #[test]
    fn zero_network_outputs_half() {
        let net = NetworkParams::zeros(&[5, 4, 3, 2, 3, 4, 5]).unwrap();
        let cache = net.forward(random_batch(5, 3, 0).view()).unwrap();
        assert!(cache.reconstruction().iter().all(|&v| v == 0.5));
        let codes = net.encode_matrix(random_batch(5, 3, 0).view()).unwrap();
        assert!(codes.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relu_gates_negative_input() {
        let mut net = NetworkParams::zeros(&[1, 1, 1, 1, 1, 1, 1]).unwrap();
        net.weights[0][[0, 0]] = 1.0;
        let cache = net.forward(array![[-3.0]].view()).unwrap();
        assert_eq!(cache.inputs[1][[0, 0]], 0.0);
        assert_eq!(cache.pre_activations[0][[0, 0]], -3.0);
    }

    #[test]
    fn forward_matches_straight_line_evaluator() {
        let mut net = init_network(&[6, 5, 4, 2, 4, 5, 6], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for b in &mut net.biases {
            b.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        }
        let batch = random_batch(6, 7, 5);
        let cache = net.forward(batch.view()).unwrap();
        for c in 0..7 {
            let expect = straight_line_forward(&net, &batch.column(c).to_vec());
            for (r, e) in expect.iter().enumerate() {
                assert!((cache.reconstruction()[[r, c]] - e).abs() < 1e-12);
            }
        }
        // bottleneck cached by forward equals encode
        let codes = net.encode_matrix(batch.view()).unwrap();
        assert_eq!(&codes, cache.bottleneck());
        assert!(net.forward(random_batch(5, 2, 0).view()).is_err());
    }

    #[test]
    fn loss_examples() {
        let a = random_batch(4, 3, 1);
        assert_eq!(reconstruction_loss(a.view(), a.view()).unwrap(), 0.0);
        let half = Array2::from_elem((4, 1), 0.5);
        let zero = Array2::zeros((4, 1));
        assert_eq!(reconstruction_loss(half.view(), zero.view()).unwrap(), 1.0);
        assert!(reconstruction_loss(half.view(), a.view()).is_err());

        let b = random_batch(4, 3, 2);
        let mut naive = 0.0;
        for i in 0..4 {
            for j in 0..3 {
                naive += (a[[i, j]] - b[[i, j]]).powi(2);
            }
        }
        assert!((reconstruction_loss(a.view(), b.view()).unwrap() - naive / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_network_at_half_target_is_stationary() {
        let net = NetworkParams::zeros(&[5, 4, 3, 2, 3, 4, 5]).unwrap();
        let batch = random_batch(5, 3, 0);
        let target = Array2::from_elem((5, 3), 0.5);
        let g = net.backward(batch.view(), target.view()).unwrap();
        assert!(g
            .weights
            .iter()
            .chain([].iter())
            .all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(g.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn output_bias_gradient_closed_form() {
        let net = init_network(&[5, 4, 3, 2, 3, 4, 5], 9).unwrap();
        let batch = random_batch(5, 4, 10);
        let target = random_batch(5, 4, 11);
        let g = net.backward(batch.view(), target.view()).unwrap();
        let cache = net.forward(batch.view()).unwrap();
        let out = cache.reconstruction();
        for r in 0..5 {
            let mut acc = 0.0;
            for c in 0..4 {
                let y = out[[r, c]];
                acc += 2.0 * (y - target[[r, c]]) * y * (1.0 - y);
            }
            assert!((g.biases[5][r] - acc / 4.0).abs() < 1e-14);
        }
    }

    fn scaled(s: Array2<f64>) -> ScaledMatrix {
        ScaledMatrix { s }
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let net = init_network(&[6, 5, 4, 2, 4, 5, 6], 1).unwrap();
        let s = scaled(random_batch(6, 20, 2));
        let cfg = TrainConfig {
            learning_rate: 0.0,
            batch_size: 7,
            epochs: 4,
            ..TrainConfig::default()
        };
        let (trained, hist) = train(net.clone(), &s, &cfg).unwrap();
        assert_eq!(trained, net);
        assert!(hist.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));
    }

    #[test]
    fn training_is_deterministic() {
        let net = init_network(&[6, 5, 4, 2, 4, 5, 6], 1).unwrap();
        let s = scaled(random_batch(6, 40, 2));
        let cfg = TrainConfig {
            batch_size: 8,
            epochs: 3,
            ..TrainConfig::default()
        };
        let a = train(net.clone(), &s, &cfg).unwrap();
        let b = train(net, &s, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn train_rejects_bad_config() {
        let net = init_network(&[6, 5, 4, 2, 4, 5, 6], 1).unwrap();
        let s = scaled(random_batch(6, 10, 2));
        let big = TrainConfig {
            batch_size: 11,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(net.clone(), &s, &big),
            Err(Error::Parameter(_))
        ));
        let zero = TrainConfig {
            epochs: 0,
            batch_size: 5,
            ..TrainConfig::default()
        };
        assert!(train(net, &s, &zero).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let mut net = init_network(&[3, 3, 3, 2, 3, 3, 3], 1).unwrap();
        net.weights[0][[0, 0]] = f64::NAN;
        let s = scaled(random_batch(3, 4, 0));
        let cfg = TrainConfig {
            batch_size: 2,
            ..TrainConfig::default()
        };
        match train(net, &s, &cfg) {
            Err(Error::Divergence {
                epoch: 0, step: 0, ..
            }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn encode_is_batch_independent() {
        let net = init_network(&[6, 5, 4, 2, 4, 5, 6], 7).unwrap();
        let batch = random_batch(6, 9, 8);
        let all = net.encode_matrix(batch.view()).unwrap();
        let single = net.encode_matrix(batch.slice(s![.., 0..1])).unwrap();
        for r in 0..2 {
            assert!((all[[r, 0]] - single[[r, 0]]).abs() < 1e-12);
        }
        let toy = init_network(&[10, 64, 32, 2, 32, 64, 10], 0).unwrap();
        let codes = encode(&toy, &scaled(random_batch(10, 5, 1))).unwrap();
        assert_eq!(codes.z.dim(), (2, 5));
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = init_network(&[6, 5, 4, 2, 4, 5, 6], 3).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"LAEN");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 7);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 6);
        let first_weight = f64::from_le_bytes(buf[40..48].try_into().unwrap());
        assert_eq!(first_weight, net.weights[0][[0, 0]]);
        assert_eq!(read_checkpoint(&buf[..]).unwrap(), net);
        assert!(read_checkpoint(&buf[..buf.len() - 8]).is_err());
        buf[0] = b'X';
        assert!(read_checkpoint(&buf[..]).is_err());
    }
}
