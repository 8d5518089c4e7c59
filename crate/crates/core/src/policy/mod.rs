//! Learnable steering policy: a small fully connected regression network.
//!
//! Hidden layers use ReLU, the scalar output is linear, weights start from
//! Xavier-uniform initialization, and training is plain minibatch gradient
//! descent on mean squared error. Both the meta and low learners are plain
//! values of [`PolicyModel`]; the weight hand-off between them is `clone()`.

mod grad;
mod io;
mod train;

pub use grad::{gradient_check, input_gradient, saliency};
pub use io::{load_model, model_to_string, save_model};
pub use train::{dataset_mse, dataset_mse_seq, train, TrainConfig, TrainError};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid layer sizes {0:?}: need >= 2 layers, all positive, output size 1")]
    BadLayerSizes(Vec<usize>),
    #[error("unsupported model file version {0:?} (expected policy-v1)")]
    VersionMismatch(String),
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the post-activation value.
    fn grad_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Layered weights of the regression policy.
///
/// `weights[k]` is row-major `layer_sizes[k+1] x layer_sizes[k]`;
/// `biases[k]` has length `layer_sizes[k+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    activations: Vec<Activation>,
    init_seed: u64,
}

/// Xavier-uniform initialization: weights drawn from
/// `U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))`, biases zero.
/// Deterministic in `seed`.
pub fn init_model(layer_sizes: &[usize], seed: u64) -> Result<PolicyModel, PolicyError> {
    if layer_sizes.len() < 2
        || layer_sizes.iter().any(|&s| s == 0)
        || *layer_sizes.last().unwrap() != 1
    {
        return Err(PolicyError::BadLayerSizes(layer_sizes.to_vec()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    let mut activations = Vec::with_capacity(layer_sizes.len() - 1);
    for k in 0..layer_sizes.len() - 1 {
        let fan_in = layer_sizes[k];
        let fan_out = layer_sizes[k + 1];
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut w = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in * fan_out {
            w.push(rng.random_range(-bound..bound));
        }
        weights.push(w);
        biases.push(vec![0.0; fan_out]);
        activations.push(if k + 1 == layer_sizes.len() - 1 {
            Activation::Linear
        } else {
            Activation::Relu
        });
    }
    Ok(PolicyModel {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
        activations,
        init_seed: seed,
    })
}

impl PolicyModel {
    /// Build directly from parameters (used by the file loader and tests).
    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        init_seed: u64,
    ) -> Result<Self, PolicyError> {
        if layer_sizes.len() < 2
            || layer_sizes.iter().any(|&s| s == 0)
            || *layer_sizes.last().unwrap() != 1
        {
            return Err(PolicyError::BadLayerSizes(layer_sizes));
        }
        let n_layers = layer_sizes.len() - 1;
        if weights.len() != n_layers || biases.len() != n_layers {
            return Err(PolicyError::Malformed(format!(
                "expected {n_layers} weight/bias layers, got {}/{}",
                weights.len(),
                biases.len()
            )));
        }
        for k in 0..n_layers {
            if weights[k].len() != layer_sizes[k] * layer_sizes[k + 1]
                || biases[k].len() != layer_sizes[k + 1]
            {
                return Err(PolicyError::Malformed(format!(
                    "layer {k} shape mismatch against sizes {layer_sizes:?}"
                )));
            }
            if weights[k].iter().chain(biases[k].iter()).any(|v| !v.is_finite()) {
                return Err(PolicyError::Malformed(format!(
                    "non-finite parameter in layer {k}"
                )));
            }
        }
        let activations = (0..n_layers)
            .map(|k| {
                if k + 1 == n_layers {
                    Activation::Linear
                } else {
                    Activation::Relu
                }
            })
            .collect();
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            activations,
            init_seed,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Raw (unclamped) network output. Panics on input length mismatch.
    pub fn forward_raw(&self, input: &[f64]) -> f64 {
        let mut scratch = Scratch::new(self);
        self.forward_into(input, &mut scratch)
    }

    /// Raw output plus retained activations, for backprop.
    fn forward_into(&self, input: &[f64], scratch: &mut Scratch) -> f64 {
        assert_eq!(
            input.len(),
            self.input_dim(),
            "input length {} does not match model input dim {}",
            input.len(),
            self.input_dim()
        );
        for k in 0..self.n_layers() {
            let (prev, out) = scratch.layer_pair(k);
            let prev: &[f64] = if k == 0 { input } else { prev };
            let fan_in = self.layer_sizes[k];
            let act = self.activations[k];
            for (o, out_v) in out.iter_mut().enumerate() {
                let row = &self.weights[k][o * fan_in..(o + 1) * fan_in];
                let mut z = self.biases[k][o];
                for (w, x) in row.iter().zip(prev.iter()) {
                    z += w * x;
                }
                *out_v = act.apply(z);
            }
        }
        scratch.output()
    }

    /// Steering action: raw output clamped to the environment's [-1, 1].
    pub fn act(&self, input: &[f64]) -> f64 {
        self.forward_raw(input).clamp(-1.0, 1.0)
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        (0..self.n_layers())
            .map(|k| self.layer_sizes[k] * self.layer_sizes[k + 1] + self.layer_sizes[k + 1])
            .sum()
    }

    /// Flat parameter accessor in file order: per layer, weights row-major
    /// then biases.
    pub fn param(&self, mut idx: usize) -> f64 {
        for k in 0..self.n_layers() {
            if idx < self.weights[k].len() {
                return self.weights[k][idx];
            }
            idx -= self.weights[k].len();
            if idx < self.biases[k].len() {
                return self.biases[k][idx];
            }
            idx -= self.biases[k].len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut idx: usize, value: f64) {
        for k in 0..self.n_layers() {
            if idx < self.weights[k].len() {
                self.weights[k][idx] = value;
                return;
            }
            idx -= self.weights[k].len();
            if idx < self.biases[k].len() {
                self.biases[k][idx] = value;
                return;
            }
            idx -= self.biases[k].len();
        }
        panic!("parameter index out of range");
    }

    /// Bitwise parameter equality (exact f64 bit patterns).
    pub fn params_bits_eq(&self, other: &PolicyModel) -> bool {
        if self.layer_sizes != other.layer_sizes {
            return false;
        }
        let eq_bits = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        self.weights
            .iter()
            .zip(&other.weights)
            .all(|(a, b)| eq_bits(a, b))
            && self
                .biases
                .iter()
                .zip(&other.biases)
                .all(|(a, b)| eq_bits(a, b))
    }

    /// FNV-1a fingerprint of all parameter bits, for hand-off auditing.
    pub fn params_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut mix = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for k in 0..self.n_layers() {
            for &w in &self.weights[k] {
                mix(w);
            }
            for &b in &self.biases[k] {
                mix(b);
            }
        }
        h
    }
}

/// Reusable post-activation buffers for one forward pass.
pub(crate) struct Scratch {
    acts: Vec<Vec<f64>>,
}

impl Scratch {
    pub(crate) fn new(model: &PolicyModel) -> Self {
        Self {
            acts: model.layer_sizes[1..]
                .iter()
                .map(|&s| vec![0.0; s])
                .collect(),
        }
    }

    /// Previous layer's output (immutable) and current layer's buffer
    /// (mutable). For `k == 0` the caller substitutes the input slice.
    fn layer_pair(&mut self, k: usize) -> (&[f64], &mut [f64]) {
        if k == 0 {
            (&[], &mut self.acts[0])
        } else {
            let (left, right) = self.acts.split_at_mut(k);
            (&left[k - 1], &mut right[0])
        }
    }

    fn output(&self) -> f64 {
        self.acts.last().expect("model has layers")[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_model_outputs_zero() {
        let mut model = init_model(&[3, 4, 1], 0).unwrap();
        for i in 0..model.param_count() {
            model.set_param(i, 0.0);
        }
        assert_eq!(model.forward_raw(&[1.0, -2.0, 3.0]), 0.0);
    }

    #[test]
    fn single_linear_layer_arithmetic() {
        let model = PolicyModel::from_parts(
            vec![2, 1],
            vec![vec![1.0, -1.0]],
            vec![vec![0.5]],
            0,
        )
        .unwrap();
        assert_eq!(model.forward_raw(&[2.0, 1.0]), 1.5);
        assert_eq!(model.act(&[2.0, 1.0]), 1.0);
    }

    #[test]
    fn clamp_transparent_inside_unit_interval() {
        let model = init_model(&[5, 8, 1], 11).unwrap();
        let input = [0.2, 0.4, 0.6, 0.8, 1.0];
        let raw = model.forward_raw(&input);
        if raw.abs() <= 1.0 {
            assert_eq!(model.act(&input), raw);
        }
    }

    #[test]
    fn forward_matches_independent_matrix_oracle() {
        // Plain nested-loop re-implementation, kept deliberately separate
        // from the Scratch-based forward path.
        fn oracle(model: &PolicyModel, input: &[f64]) -> f64 {
            let sizes = model.layer_sizes();
            let mut cur = input.to_vec();
            for k in 0..sizes.len() - 1 {
                let mut next = vec![0.0; sizes[k + 1]];
                for (o, next_v) in next.iter_mut().enumerate() {
                    let mut z = model.biases(k)[o];
                    for (i, x) in cur.iter().enumerate() {
                        z += model.weights(k)[o * sizes[k] + i] * x;
                    }
                    *next_v = if k + 1 == sizes.len() - 1 { z } else { z.max(0.0) };
                }
                cur = next;
            }
            cur[0]
        }

        let model = init_model(&[7, 16, 8, 1], 99).unwrap();
        for trial in 0..20 {
            let input: Vec<f64> = (0..7).map(|i| ((trial * 7 + i) as f64).sin()).collect();
            assert_relative_eq!(
                model.forward_raw(&input),
                oracle(&model, &input),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn init_deterministic_and_biases_zero() {
        let a = init_model(&[19, 32, 16, 1], 123).unwrap();
        let b = init_model(&[19, 32, 16, 1], 123).unwrap();
        assert!(a.params_bits_eq(&b));
        for k in 0..a.n_layers() {
            assert!(a.biases(k).iter().all(|&v| v == 0.0));
        }
        let c = init_model(&[19, 32, 16, 1], 124).unwrap();
        assert!(!a.params_bits_eq(&c));
    }

    #[test]
    fn xavier_variance_monte_carlo() {
        // Sample variance of first-layer weights over many re-draws matches
        // the 2/(fan_in+fan_out) Xavier target within 10%.
        let (fan_in, fan_out) = (19usize, 32usize);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for seed in 0..10_000u64 {
            let model = init_model(&[fan_in, fan_out, 1], seed).unwrap();
            for &w in model.weights(0) {
                sum += w;
                sum_sq += w * w;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let var = sum_sq / count as f64 - mean * mean;
        let target = 2.0 / (fan_in + fan_out) as f64;
        assert!(
            (var - target).abs() / target < 0.10,
            "variance {var} vs Xavier target {target}"
        );
    }

    #[test]
    fn rejects_bad_layer_sizes() {
        assert!(init_model(&[5], 0).is_err());
        assert!(init_model(&[5, 3, 2], 0).is_err());
        assert!(init_model(&[5, 0, 1], 0).is_err());
    }

    #[test]
    #[should_panic(expected = "input length")]
    fn forward_panics_on_dim_mismatch() {
        let model = init_model(&[3, 2, 1], 0).unwrap();
        model.forward_raw(&[1.0, 2.0]);
    }
}
