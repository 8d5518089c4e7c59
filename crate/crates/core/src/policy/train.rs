//! Minibatch gradient descent on mean squared error.
//!
//! The loss is always a mean: batch gradients are averaged over the batch,
//! and the per-epoch trace reports the mean squared error over the whole
//! dataset, summed in dataset index order. Batch gradients are reduced over
//! fixed-size sample chunks in chunk order, so the trained model is
//! bit-identical whether the chunks run on rayon or sequentially.

use super::{Activation, PolicyModel, Scratch};
use crate::exec;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Fixed sample-chunk size for gradient reduction. A constant (never derived
/// from thread count) so reduction order is stable across execution modes.
const GRAD_CHUNK: usize = 16;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("feature dimension {found} does not match model input dim {expected}")]
    DimMismatch { found: usize, expected: usize },
    #[error("inputs ({inputs}) and targets ({targets}) disagree in length")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("loss became non-finite at epoch {epoch}")]
    NanLoss { epoch: usize },
}

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    /// L2 penalty on weights (biases are not decayed).
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 32,
            shuffle_seed: 0,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err("learning_rate must be finite and >= 0".to_string());
        }
        if self.epochs == 0 {
            return Err("epochs must be >= 1".to_string());
        }
        if self.batch_size == 0 {
            return Err("batch_size must be >= 1".to_string());
        }
        if self.l2 < 0.0 {
            return Err("l2 must be >= 0".to_string());
        }
        Ok(())
    }
}

/// Parameter-gradient accumulator shaped like a model.
pub(crate) struct GradBuf {
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) biases: Vec<Vec<f64>>,
}

impl GradBuf {
    pub(crate) fn zeros(model: &PolicyModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn add(&mut self, other: &GradBuf) {
        for (dst, src) in self.weights.iter_mut().zip(&other.weights) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        for (dst, src) in self.biases.iter_mut().zip(&other.biases) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
}

/// Backpropagate the squared error `(raw - target)^2` for one sample,
/// accumulating parameter gradients into `grad`. Returns the squared error.
pub(crate) fn backprop_sample(
    model: &PolicyModel,
    input: &[f64],
    target: f64,
    grad: &mut GradBuf,
    scratch: &mut Scratch,
) -> f64 {
    let raw = model.forward_into(input, scratch);
    let residual = raw - target;
    let sq_err = residual * residual;

    // dL/d(raw) for L = (raw - target)^2.
    let mut delta = vec![2.0 * residual];
    for k in (0..model.n_layers()).rev() {
        let fan_in = model.layer_sizes[k];
        let prev: &[f64] = if k == 0 { input } else { &scratch.acts[k - 1] };
        let act: &[f64] = &scratch.acts[k];
        // Fold the activation derivative into delta (output layer is linear).
        if model.activations[k] == Activation::Relu {
            for (d, &a) in delta.iter_mut().zip(act) {
                *d *= Activation::Relu.grad_from_output(a);
            }
        }
        let mut prev_delta = vec![0.0; fan_in];
        for (o, &d) in delta.iter().enumerate() {
            grad.biases[k][o] += d;
            let row = &model.weights[k][o * fan_in..(o + 1) * fan_in];
            let grow = &mut grad.weights[k][o * fan_in..(o + 1) * fan_in];
            for i in 0..fan_in {
                grow[i] += d * prev[i];
                prev_delta[i] += d * row[i];
            }
        }
        delta = prev_delta;
    }
    sq_err
}

/// Sum of per-sample gradients over `batch` (indices into the dataset),
/// reduced over fixed chunks in order. Also returns `(index, sq_err)` pairs.
fn batch_gradient(
    model: &PolicyModel,
    inputs: &[Vec<f64>],
    targets: &[f64],
    batch: &[usize],
) -> (GradBuf, Vec<(usize, f64)>) {
    let parts = exec::map_chunks(batch.len(), GRAD_CHUNK, |a, b| {
        let mut grad = GradBuf::zeros(model);
        let mut scratch = Scratch::new(model);
        let mut errs = Vec::with_capacity(b - a);
        for &idx in &batch[a..b] {
            let e2 = backprop_sample(model, &inputs[idx], targets[idx], &mut grad, &mut scratch);
            errs.push((idx, e2));
        }
        (grad, errs)
    });
    let mut total = GradBuf::zeros(model);
    let mut all_errs = Vec::with_capacity(batch.len());
    for (grad, errs) in parts {
        total.add(&grad);
        all_errs.extend(errs);
    }
    (total, all_errs)
}

fn apply_update(model: &mut PolicyModel, grad: &GradBuf, batch_len: usize, cfg: &TrainConfig) {
    let inv = 1.0 / batch_len as f64;
    let lr = cfg.learning_rate;
    for k in 0..model.n_layers() {
        for (w, g) in model.weights[k].iter_mut().zip(&grad.weights[k]) {
            *w -= lr * (g * inv + cfg.l2 * *w);
        }
        for (b, g) in model.biases[k].iter_mut().zip(&grad.biases[k]) {
            *b -= lr * g * inv;
        }
    }
}

/// Train in place; returns the per-epoch mean squared error trace.
///
/// Deterministic in `cfg.shuffle_seed`: sample order is shuffled once per
/// epoch from a dedicated stream, and every reduction runs in a fixed order.
pub fn train(
    model: &mut PolicyModel,
    inputs: &[Vec<f64>],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<Vec<f64>, TrainError> {
    if inputs.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if inputs.len() != targets.len() {
        return Err(TrainError::LengthMismatch {
            inputs: inputs.len(),
            targets: targets.len(),
        });
    }
    for x in inputs {
        if x.len() != model.input_dim() {
            return Err(TrainError::DimMismatch {
                found: x.len(),
                expected: model.input_dim(),
            });
        }
    }

    let n = inputs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sq_errs = vec![0.0; n];
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (grad, errs) = batch_gradient(model, inputs, targets, batch);
            for (idx, e2) in errs {
                sq_errs[idx] = e2;
            }
            apply_update(model, &grad, batch.len(), cfg);
        }
        // Mean over the dataset in index order, independent of the shuffle.
        let loss = sq_errs.iter().sum::<f64>() / n as f64;
        if !loss.is_finite() {
            return Err(TrainError::NanLoss { epoch });
        }
        trace.push(loss);
    }
    Ok(trace)
}

/// Mean squared error of the raw output over a dataset. Chunked reduction in
/// fixed order; parallel when the `parallel` feature is enabled.
pub fn dataset_mse(model: &PolicyModel, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
    assert_eq!(inputs.len(), targets.len());
    if inputs.is_empty() {
        return 0.0;
    }
    let parts = exec::map_chunks(inputs.len(), 256, |a, b| {
        let mut scratch = Scratch::new(model);
        let mut sum = 0.0;
        for i in a..b {
            let r = model.forward_into(&inputs[i], &mut scratch) - targets[i];
            sum += r * r;
        }
        sum
    });
    parts.iter().sum::<f64>() / inputs.len() as f64
}

/// Always-sequential twin of [`dataset_mse`], for benchmarking both modes.
pub fn dataset_mse_seq(model: &PolicyModel, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
    assert_eq!(inputs.len(), targets.len());
    if inputs.is_empty() {
        return 0.0;
    }
    let bounds: Vec<(usize, usize)> = (0..inputs.len().div_ceil(256))
        .map(|i| (i * 256, ((i + 1) * 256).min(inputs.len())))
        .collect();
    let parts = exec::map_ordered_seq(&bounds, |&(a, b)| {
        let mut scratch = Scratch::new(model);
        let mut sum = 0.0;
        for i in a..b {
            let r = model.forward_into(&inputs[i], &mut scratch) - targets[i];
            sum += r * r;
        }
        sum
    });
    parts.iter().sum::<f64>() / inputs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::init_model;
    use approx::assert_relative_eq;

    fn toy_dataset() -> (Vec<Vec<f64>>, Vec<f64>) {
        // Linearly generated targets with mild nonlinearity.
        let inputs: Vec<Vec<f64>> = (0..64)
            .map(|i| {
                let t = i as f64 / 64.0;
                vec![t, (3.0 * t).sin(), 1.0 - t]
            })
            .collect();
        let targets: Vec<f64> = inputs
            .iter()
            .map(|x| (0.7 * x[0] - 0.4 * x[1] + 0.2 * x[2]).clamp(-1.0, 1.0))
            .collect();
        (inputs, targets)
    }

    #[test]
    fn single_sample_linear_matches_least_squares() {
        // One sample, single linear layer: gradient descent converges to an
        // interpolating solution; loss goes to ~0 and the normal equations
        // (here: exact fit) hold.
        let input = vec![vec![0.5, -1.0, 2.0]];
        let target = vec![0.3];
        let mut model = init_model(&[3, 1], 5).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 2000,
            batch_size: 1,
            shuffle_seed: 0,
            l2: 0.0,
        };
        let trace = train(&mut model, &input, &target, &cfg).unwrap();
        assert!(trace.last().unwrap() < &1e-10, "loss {:?}", trace.last());
        assert_relative_eq!(model.forward_raw(&input[0]), 0.3, epsilon = 1e-5);

        // Oracle: closed-form least squares for a single sample starting
        // from the same init. GD for one sample converges to the minimum-norm
        // correction w* = w0 + x * (y - w0.x - b0) / (|x|^2 + 1) (bias acts as
        // an always-1 feature), so just verify the fit residual instead of
        // the full trajectory: prediction equals target within 1e-5.
        let residual = model.forward_raw(&input[0]) - target[0];
        assert!(residual.abs() < 1e-5);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let (inputs, targets) = toy_dataset();
        let mut model = init_model(&[3, 8, 1], 7).unwrap();
        let before = model.clone();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 5,
            batch_size: 4,
            shuffle_seed: 3,
            l2: 0.0,
        };
        let trace = train(&mut model, &inputs, &targets, &cfg).unwrap();
        assert!(model.params_bits_eq(&before));
        for pair in trace.windows(2) {
            assert_eq!(pair[0].to_bits(), pair[1].to_bits());
        }
    }

    #[test]
    fn duplicated_dataset_same_model() {
        // Doubling every sample and the batch size leaves the update
        // sequence unchanged because gradients are batch means, up to
        // floating-point reassociation of the larger sums.
        let (inputs, targets) = toy_dataset();
        let mut doubled_inputs = inputs.clone();
        doubled_inputs.extend(inputs.iter().cloned());
        let mut doubled_targets = targets.clone();
        doubled_targets.extend(targets.iter().cloned());

        let cfg = TrainConfig {
            learning_rate: 1e-2,
            epochs: 20,
            batch_size: inputs.len(),
            shuffle_seed: 0,
            l2: 0.0,
        };
        let cfg2 = TrainConfig {
            batch_size: doubled_inputs.len(),
            ..cfg.clone()
        };

        let mut a = init_model(&[3, 8, 1], 42).unwrap();
        train(&mut a, &inputs, &targets, &cfg).unwrap();
        let mut b = init_model(&[3, 8, 1], 42).unwrap();
        train(&mut b, &doubled_inputs, &doubled_targets, &cfg2).unwrap();

        for i in 0..a.param_count() {
            assert_relative_eq!(a.param(i), b.param(i), epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let (inputs, targets) = toy_dataset();
        let cfg = TrainConfig::default();
        let mut a = init_model(&[3, 8, 1], 1).unwrap();
        train(&mut a, &inputs, &targets, &cfg).unwrap();
        let mut b = init_model(&[3, 8, 1], 1).unwrap();
        train(&mut b, &inputs, &targets, &cfg).unwrap();
        assert!(a.params_bits_eq(&b));
    }

    #[test]
    fn convex_loss_non_increasing() {
        // Linear model on a fixed dataset with a small learning rate: the
        // epoch trace must be non-increasing.
        let (inputs, targets) = toy_dataset();
        let mut model = init_model(&[3, 1], 9).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: inputs.len(),
            shuffle_seed: 0,
            l2: 0.0,
        };
        let trace = train(&mut model, &inputs, &targets, &cfg).unwrap();
        for pair in trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15, "loss increased: {pair:?}");
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        let mut model = init_model(&[3, 1], 0).unwrap();
        assert!(matches!(
            train(&mut model, &[], &[], &TrainConfig::default()),
            Err(TrainError::EmptyDataset)
        ));
    }

    #[test]
    fn dim_mismatch_rejected() {
        let mut model = init_model(&[3, 1], 0).unwrap();
        let result = train(
            &mut model,
            &[vec![1.0, 2.0]],
            &[0.0],
            &TrainConfig::default(),
        );
        assert!(matches!(result, Err(TrainError::DimMismatch { .. })));
    }

    #[test]
    fn mse_parallel_and_sequential_agree_bitwise() {
        let (inputs, targets) = toy_dataset();
        let model = init_model(&[3, 8, 1], 3).unwrap();
        let a = dataset_mse(&model, &inputs, &targets);
        let b = dataset_mse_seq(&model, &inputs, &targets);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
