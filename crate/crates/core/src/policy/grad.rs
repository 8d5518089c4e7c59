//! Gradient checking and input-gradient saliency.

use super::train::GradBuf;
use super::{PolicyModel, Scratch};

/// Compare every analytic parameter gradient of the squared-error loss
/// `(raw(x) - target)^2` against central finite differences with step
/// `epsilon`. Returns the largest relative error.
pub fn gradient_check(model: &PolicyModel, input: &[f64], target: f64, epsilon: f64) -> f64 {
    assert!(
        (1e-7..=1e-3).contains(&epsilon),
        "epsilon {epsilon} outside [1e-7, 1e-3]"
    );

    let mut grad = GradBuf::zeros(model);
    let mut scratch = Scratch::new(model);
    super::train::backprop_sample(model, input, target, &mut grad, &mut scratch);
    let analytic = flatten(model, &grad);

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (idx, &a) in analytic.iter().enumerate() {
        let original = probe.param(idx);
        probe.set_param(idx, original + epsilon);
        let plus = loss(&probe, input, target, &mut scratch);
        probe.set_param(idx, original - epsilon);
        let minus = loss(&probe, input, target, &mut scratch);
        probe.set_param(idx, original);
        let numeric = (plus - minus) / (2.0 * epsilon);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

fn loss(model: &PolicyModel, input: &[f64], target: f64, scratch: &mut Scratch) -> f64 {
    let r = model.forward_into(input, scratch) - target;
    r * r
}

fn flatten(model: &PolicyModel, grad: &GradBuf) -> Vec<f64> {
    let mut out = Vec::with_capacity(model.param_count());
    for k in 0..grad.weights.len() {
        out.extend_from_slice(&grad.weights[k]);
        out.extend_from_slice(&grad.biases[k]);
    }
    out
}

/// Gradient of the raw scalar output with respect to each input component.
pub fn input_gradient(model: &PolicyModel, input: &[f64]) -> Vec<f64> {
    let mut scratch = Scratch::new(model);
    model.forward_into(input, &mut scratch);

    // Seed with d(raw)/d(raw) = 1 and backpropagate to the input only.
    let mut delta = vec![1.0];
    for k in (0..model.layer_sizes().len() - 1).rev() {
        let fan_in = model.layer_sizes()[k];
        if model.activations[k] == super::Activation::Relu {
            for (d, &a) in delta.iter_mut().zip(&scratch.acts[k]) {
                *d *= super::Activation::Relu.grad_from_output(a);
            }
        }
        let mut prev_delta = vec![0.0; fan_in];
        for (o, &d) in delta.iter().enumerate() {
            let row = &model.weights(k)[o * fan_in..(o + 1) * fan_in];
            for (p, &w) in prev_delta.iter_mut().zip(row) {
                *p += d * w;
            }
        }
        delta = prev_delta;
    }
    delta
}

/// Per-input attribution: `|d raw / d x_i|` normalized to sum to 1. An
/// all-zero gradient degenerates to the uniform distribution.
pub fn saliency(model: &PolicyModel, input: &[f64]) -> Vec<f64> {
    let grad = input_gradient(model, input);
    let total: f64 = grad.iter().map(|g| g.abs()).sum();
    if total <= 0.0 {
        vec![1.0 / grad.len() as f64; grad.len()]
    } else {
        grad.iter().map(|g| g.abs() / total).collect()
    }
}
