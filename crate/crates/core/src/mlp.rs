//! Small fully connected network with sigmoid hidden layers and a rectified
//! scalar output, trained on mean squared error with Adam.
//!
//! Parameters live in one flat vector. Layer `l` stores its weights row-major
//! (`n_out x n_in`) followed by its biases.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::augment::AugmentationFunction;
use crate::error::MlpError;
use crate::features::{FeatureMatrix, NormalizationBounds, NUM_FEATURES};
use crate::math::{exp, sqrt};

/// Layer sizes of the augmentation network.
pub const AUGMENTATION_LAYERS: [usize; 4] = [NUM_FEATURES, 7, 7, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + exp(-z)),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative in terms of the pre-activation `z` and output `a`. The
    /// rectifier's subgradient at 0 is 0.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    sizes: Vec<usize>,
    params: Vec<f64>,
    pub bounds: NormalizationBounds,
    /// Seed of the initial weights.
    pub seed: u64,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

impl MlpModel {
    /// Glorot-uniform weights, zero hidden biases and an output bias of 1.
    /// The output-layer weights start at zero, so the fresh network predicts
    /// exactly 1 everywhere.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self, MlpError> {
        if sizes.len() < 2 || sizes.contains(&0) || sizes[sizes.len() - 1] != 1 {
            return Err(MlpError::Layout(sizes.to_vec()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        let last = sizes.len() - 2;
        for (l, pair) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (pair[0], pair[1]);
            let r = sqrt(6.0 / (n_in + n_out) as f64);
            for _ in 0..n_in * n_out {
                let w = (2.0 * uniform(&mut rng) - 1.0) * r;
                params.push(if l == last { 0.0 } else { w });
            }
            params.extend(core::iter::repeat_n(if l == last { 1.0 } else { 0.0 }, n_out));
        }
        Ok(Self { sizes: sizes.to_vec(), params, bounds: NormalizationBounds::default(), seed })
    }

    /// The 8-7-7-1 augmentation network.
    pub fn augmentation(seed: u64) -> Self {
        Self::new(&AUGMENTATION_LAYERS, seed).expect("fixed layout is valid")
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>, bounds: NormalizationBounds, seed: u64) -> Result<Self, MlpError> {
        let mut m = Self::new(&sizes, 0)?;
        if params.len() != m.params.len() {
            return Err(MlpError::ParameterCount { expected: m.params.len(), got: params.len() });
        }
        m.params = params;
        m.bounds = bounds;
        m.seed = seed;
        Ok(m)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.sizes.len() {
            Activation::Relu
        } else {
            Activation::Sigmoid
        }
    }

    /// Offset of layer `l`'s weights in the parameter vector.
    fn offset(&self, l: usize) -> usize {
        self.sizes.windows(2).take(l).map(|p| p[0] * p[1] + p[1]).sum()
    }

    pub fn weight(&self, l: usize, out: usize, inp: usize) -> f64 {
        self.params[self.offset(l) + out * self.sizes[l] + inp]
    }

    pub fn bias(&self, l: usize, out: usize) -> f64 {
        let n_in = self.sizes[l];
        self.params[self.offset(l) + self.sizes[l + 1] * n_in + out]
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Network output for an already scaled input row.
    pub fn forward(&self, x: &[f64]) -> Result<f64, MlpError> {
        if x.len() != self.n_inputs() {
            return Err(MlpError::InputWidth { expected: self.n_inputs(), got: x.len() });
        }
        let mut a = x.to_vec();
        let mut off = 0;
        for l in 0..self.sizes.len() - 1 {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let act = self.activation(l);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            a = (0..n_out)
                .map(|o| act.apply(b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&a).map(|(w, x)| w * x).sum::<f64>()))
                .collect();
            off += n_in * n_out + n_out;
        }
        Ok(a[0])
    }

    /// Predictions for raw (unscaled) feature rows. Returns the predictions
    /// and the number of scaled entries clamped to the extrapolation box.
    pub fn predict_features(&self, features: &FeatureMatrix) -> (Vec<f64>, usize) {
        let mut clamped = 0;
        let out = features
            .rows()
            .iter()
            .map(|row| {
                let (x, c) = self.bounds.apply_clamped(row);
                clamped += c;
                self.forward(&x).expect("feature width matches the network")
            })
            .collect();
        (out, clamped)
    }

    /// Mean squared error over `data` and its gradient with respect to every
    /// parameter.
    pub fn loss_and_grad(&self, data: &Dataset) -> Result<(f64, Vec<f64>), MlpError> {
        if data.is_empty() {
            return Err(MlpError::EmptyDataset);
        }
        if data.n_inputs != self.n_inputs() {
            return Err(MlpError::InputWidth { expected: self.n_inputs(), got: data.n_inputs });
        }
        let n_layers = self.sizes.len() - 1;
        let offsets: Vec<usize> = (0..n_layers).map(|l| self.offset(l)).collect();
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        // pre-activations and activations per layer, reused across samples
        let mut zs: Vec<Vec<f64>> = self.sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        let mut acts: Vec<Vec<f64>> = self.sizes.iter().map(|&n| vec![0.0; n]).collect();
        let scale = 2.0 / data.len() as f64;
        for (x, &y) in data.rows().zip(&data.y) {
            acts[0].copy_from_slice(x);
            for l in 0..n_layers {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let act = self.activation(l);
                let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
                let b = &self.params[offsets[l] + n_in * n_out..offsets[l] + n_in * n_out + n_out];
                for o in 0..n_out {
                    let z = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&acts[l]).map(|(w, x)| w * x).sum::<f64>();
                    zs[l][o] = z;
                    acts[l + 1][o] = act.apply(z);
                }
            }
            let err = acts[n_layers][0] - y;
            loss += err * err;
            let mut delta = vec![scale * err];
            for l in (0..n_layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let act = self.activation(l);
                for (o, d) in delta.iter_mut().enumerate() {
                    *d *= act.derivative(zs[l][o], acts[l + 1][o]);
                }
                let off = offsets[l];
                for o in 0..n_out {
                    for i in 0..n_in {
                        grad[off + o * n_in + i] += delta[o] * acts[l][i];
                    }
                    grad[off + n_in * n_out + o] += delta[o];
                }
                if l > 0 {
                    let w = &self.params[off..off + n_in * n_out];
                    delta = (0..n_in).map(|i| (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum()).collect();
                }
            }
        }
        Ok((loss / data.len() as f64, grad))
    }
}

impl AugmentationFunction for MlpModel {
    fn predict(&self, features: &FeatureMatrix) -> Vec<f64> {
        self.predict_features(features).0
    }
}

/// Row-major inputs with one scalar target per row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub n_inputs: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(n_inputs: usize) -> Self {
        Self { n_inputs, x: Vec::new(), y: Vec::new() }
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        assert_eq!(x.len(), self.n_inputs);
        self.x.extend_from_slice(x);
        self.y.push(y);
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.x.chunks_exact(self.n_inputs.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamSettings {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        Self { lr: 1.0e-3, beta1: 0.9, beta2: 0.999, eps: 1.0e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub settings: AdamSettings,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n_params: usize, settings: AdamSettings) -> Self {
        Self { settings, m: vec![0.0; n_params], v: vec![0.0; n_params], step: 0 }
    }
}

/// One bias-corrected Adam update of `params`.
pub fn adam_update(params: &mut [f64], state: &mut AdamState, grad: &[f64]) -> Result<(), MlpError> {
    if grad.len() != params.len() || state.m.len() != params.len() {
        return Err(MlpError::ParameterCount { expected: params.len(), got: grad.len().min(state.m.len()) });
    }
    let s = state.settings;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - libm::pow(s.beta1, t as f64);
    let c2 = 1.0 - libm::pow(s.beta2, t as f64);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = s.beta1 * state.m[i] + (1.0 - s.beta1) * g;
        state.v[i] = s.beta2 * state.v[i] + (1.0 - s.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= s.lr * m_hat / (sqrt(v_hat) + s.eps);
    }
    Ok(())
}

pub fn adam_step(model: &mut MlpModel, state: &mut AdamState, grad: &[f64]) -> Result<(), MlpError> {
    adam_update(&mut model.params, state, grad)
}

/// Full-batch training for `epochs` epochs with a fresh optimiser state.
/// Entry `k` of the returned history is the loss before update `k`.
pub fn train(model: &mut MlpModel, data: &Dataset, epochs: usize, adam: AdamSettings) -> Result<Vec<f64>, MlpError> {
    if data.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    let mut state = AdamState::new(model.n_params(), adam);
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grad) = model.loss_and_grad(data)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(MlpError::NonFiniteLoss { epoch });
        }
        history.push(loss);
        adam_step(model, &mut state, &grad)?;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_augmentation_network_is_neutral() {
        let m = MlpModel::augmentation(3);
        for x in [[0.0; 8], [1.0; 8], [0.3; 8]] {
            assert_eq!(m.forward(&x).unwrap(), 1.0);
        }
        assert_eq!(m.n_params(), 8 * 7 + 7 + 7 * 7 + 7 + 7 + 1);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut m = MlpModel::augmentation(3);
        m.params_mut().fill(0.0);
        assert_eq!(m.forward(&[0.5; 8]).unwrap(), 0.0);
        let n = m.n_params();
        m.params_mut()[n - 1] = -2.0;
        assert_eq!(m.forward(&[0.5; 8]).unwrap(), 0.0);
        m.params_mut()[n - 1] = 0.7;
        assert_eq!(m.forward(&[0.5; 8]).unwrap(), 0.7);
    }

    #[test]
    fn bad_layouts_are_rejected() {
        assert!(MlpModel::new(&[3], 0).is_err());
        assert!(MlpModel::new(&[3, 2], 0).is_err());
        assert!(MlpModel::new(&[3, 0, 1], 0).is_err());
        assert!(MlpModel::augmentation(0).forward(&[0.0; 3]).is_err());
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = MlpModel::augmentation(1);
        let before = m.clone();
        let mut s = AdamState::new(m.n_params(), AdamSettings::default());
        adam_step(&mut m, &mut s, &vec![0.0; before.n_params()]).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn first_adam_step_moves_by_learning_rate() {
        let mut p = [1.0, -2.0];
        let mut s = AdamState::new(2, AdamSettings::default());
        adam_update(&mut p, &mut s, &[0.3, -5.0]).unwrap();
        assert!((p[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p[1] - (-2.0 + 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn adam_minimises_scalar_quadratic() {
        let mut w = [0.0];
        let mut s = AdamState::new(1, AdamSettings { lr: 0.1, ..AdamSettings::default() });
        for _ in 0..500 {
            let g = [2.0 * (w[0] - 3.0)];
            adam_update(&mut w, &mut s, &g).unwrap();
        }
        // reference run of the same recursion written out by hand
        let (mut x, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=500 {
            let g = 2.0 * (x - 3.0);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - libm::pow(0.9, t as f64));
            let vh = v / (1.0 - libm::pow(0.999, t as f64));
            x -= 0.1 * mh / (libm::sqrt(vh) + 1e-8);
        }
        assert!((w[0] - x).abs() < 1e-12);
        assert!((w[0] - 3.0).abs() < 1e-2, "{}", w[0]);
    }

    #[test]
    fn zero_epochs_leave_model_unchanged() {
        let mut m = MlpModel::augmentation(5);
        let before = m.clone();
        let mut d = Dataset::new(8);
        d.push(&[0.1; 8], 2.0);
        assert!(train(&mut m, &d, 0, AdamSettings::default()).unwrap().is_empty());
        assert_eq!(m, before);
        assert_eq!(train(&mut m, &Dataset::new(8), 3, AdamSettings::default()).unwrap_err(), MlpError::EmptyDataset);
    }
}
