//! Two-hidden-layer perceptron with a softmax head, trained by mini-batch
//! SGD with momentum on mean cross-entropy (plus optional L2).

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_training, softmax_in_place};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn grad_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => f64::from(u8::from(a > 0.0)),
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden: [usize; 2],
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub l2: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: [64, 32],
            activation: Activation::Relu,
            epochs: 100,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            l2: 1e-4,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::Config("mlp: layer sizes must be at least 1".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("mlp: epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!("mlp: learning_rate must lie in (0, 1], got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) || self.l2 < 0.0 {
            return Err(Error::Config("mlp: momentum must lie in [0, 1) and l2 be non-negative".into()));
        }
        Ok(())
    }
}

/// Dense layer, `w` row-major `[out × in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, w: vec![0.0; inputs * outputs], b: vec![0.0; outputs] }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
                row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b[o]
            })
            .collect()
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub class_count: usize,
    /// Full-batch training loss after each epoch.
    pub loss_history: Vec<f64>,
}

impl MlpModel {
    /// Network of the given shape with every weight and bias zero.
    pub fn zeros(inputs: usize, hidden: [usize; 2], classes: usize, activation: Activation) -> Self {
        Self {
            layers: vec![
                Layer::zeros(inputs, hidden[0]),
                Layer::zeros(hidden[0], hidden[1]),
                Layer::zeros(hidden[1], classes),
            ],
            activation,
            class_count: classes,
            loss_history: Vec::new(),
        }
    }

    pub fn initialized(inputs: usize, hidden: [usize; 2], classes: usize, activation: Activation, seed: u64) -> Self {
        let mut m = Self::zeros(inputs, hidden, classes, activation);
        let mut rng = rng_from_seed(derive_seed(seed, "mlp-init", 0));
        for layer in &mut m.layers {
            let gain = if activation == Activation::Relu { 2.0 } else { 1.0 };
            let dist = Normal::new(0.0, (gain / layer.inputs as f64).sqrt()).expect("positive std");
            layer.w.iter_mut().for_each(|v| *v = dist.sample(&mut rng));
        }
        m
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters in layer order, each layer as `w` then `b`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            v.extend_from_slice(&l.w);
            v.extend_from_slice(&l.b);
        }
        v
    }

    pub fn set_flat_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::LengthMismatch { expected: self.param_count(), actual: p.len() });
        }
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&p[k..k + nw]);
            k += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&p[k..k + nb]);
            k += nb;
        }
        Ok(())
    }

    fn forward_all(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let act = self.activation;
        let h1: Vec<f64> = self.layers[0].forward(x).into_iter().map(|z| act.apply(z)).collect();
        let h2: Vec<f64> = self.layers[1].forward(&h1).into_iter().map(|z| act.apply(z)).collect();
        let mut out = self.layers[2].forward(&h2);
        softmax_in_place(&mut out);
        (h1, h2, out)
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        self.forward_all(row).2
    }

    /// Mean cross-entropy over `idx` plus `l2/2 |W|²` (biases excluded),
    /// and its gradient in [`flat_params`](Self::flat_params) order.
    pub fn loss_and_grad(&self, x: &FeatureMatrix, y: &[usize], idx: &[usize], l2: f64) -> (f64, Vec<f64>) {
        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
        let mut loss = 0.0;
        let act = self.activation;
        for &i in idx {
            let xi = x.row(i);
            let (h1, h2, p) = self.forward_all(xi);
            loss -= p[y[i]].max(f64::MIN_POSITIVE).ln();
            let mut d3 = p;
            d3[y[i]] -= 1.0;
            let inputs: [&[f64]; 3] = [xi, &h1, &h2];
            let mut delta = d3;
            for li in (0..3).rev() {
                let layer = &self.layers[li];
                let gl = &mut grads[li];
                let a_in = inputs[li];
                for o in 0..layer.outputs {
                    gl.b[o] += delta[o];
                    let row = &mut gl.w[o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, a) in row.iter_mut().zip(a_in) {
                        *g += delta[o] * a;
                    }
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for o in 0..layer.outputs {
                        let row = &layer.w[o * layer.inputs..(o + 1) * layer.inputs];
                        for (pv, w) in prev.iter_mut().zip(row) {
                            *pv += delta[o] * w;
                        }
                    }
                    for (pv, a) in prev.iter_mut().zip(a_in) {
                        *pv *= act.grad_from_output(*a);
                    }
                    delta = prev;
                }
            }
        }
        let n = idx.len().max(1) as f64;
        loss /= n;
        let mut flat = Vec::with_capacity(self.param_count());
        for (g, l) in grads.iter().zip(&self.layers) {
            flat.extend(g.w.iter().zip(&l.w).map(|(gw, w)| gw / n + l2 * w));
            flat.extend(g.b.iter().map(|gb| gb / n));
        }
        if l2 > 0.0 {
            loss += 0.5 * l2 * self.layers.iter().flat_map(|l| &l.w).map(|w| w * w).sum::<f64>();
        }
        (loss, flat)
    }

    pub fn fit(p: &MlpParams, x: &FeatureMatrix, y: &[usize], class_count: usize, seed: u64) -> Result<Self> {
        p.validate()?;
        check_training(x, y, class_count)?;
        let mut m = Self::initialized(x.cols(), p.hidden, class_count, p.activation, seed);
        let mut theta = m.flat_params();
        let mut velocity = vec![0.0; theta.len()];
        let all: Vec<usize> = (0..x.rows()).collect();
        for epoch in 0..p.epochs {
            let mut order = all.clone();
            order.shuffle(&mut rng_from_seed(derive_seed(seed, "mlp-epoch", epoch as u64)));
            for batch in order.chunks(p.batch_size) {
                let (_, g) = m.loss_and_grad(x, y, batch, p.l2);
                for ((t, v), gi) in theta.iter_mut().zip(velocity.iter_mut()).zip(&g) {
                    *v = p.momentum * *v - p.learning_rate * gi;
                    *t += *v;
                }
                m.set_flat_params(&theta)?;
            }
            let (loss, _) = m.loss_and_grad(x, y, &all, p.l2);
            if !loss.is_finite() || theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::Divergence(format!(
                    "mlp: loss became {loss} at epoch {epoch} (learning_rate {}, last finite loss {:?})",
                    p.learning_rate,
                    m.loss_history.last()
                )));
            }
            m.loss_history.push(loss);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use rand::Rng as _;

    #[test]
    fn zero_weights_give_uniform_output() {
        let m = MlpModel::zeros(4, [3, 2], 5, Activation::Relu);
        for v in m.predict_proba(&[1.0, -2.0, 3.0, 0.5]) {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn outputs_are_normalized_for_random_weights() {
        let mut rng = rng_from_seed(4);
        for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
            let mut m = MlpModel::zeros(6, [5, 4], 3, act);
            let theta: Vec<f64> = (0..m.param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
            m.set_flat_params(&theta).unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
                assert_valid_probs(&m.predict_proba(&x), 3);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let x = FeatureMatrix::from_rows(vec![vec![0.3, -1.2, 0.8], vec![-0.5, 0.4, 1.1], vec![1.5, 0.2, -0.7]], 3).unwrap();
        let y = [0, 2, 1];
        let idx = [0, 1, 2];
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Relu] {
            let m = MlpModel::initialized(3, [4, 3], 3, act, 17);
            let (_, g) = m.loss_and_grad(&x, &y, &idx, 1e-3);
            let theta = m.flat_params();
            let eps = 1e-6;
            let mut probe = m.clone();
            for k in 0..theta.len() {
                let mut t = theta.clone();
                t[k] += eps;
                probe.set_flat_params(&t).unwrap();
                let up = probe.loss_and_grad(&x, &y, &idx, 1e-3).0;
                t[k] -= 2.0 * eps;
                probe.set_flat_params(&t).unwrap();
                let down = probe.loss_and_grad(&x, &y, &idx, 1e-3).0;
                let fd = (up - down) / (2.0 * eps);
                let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-6);
                assert!(rel < 1e-4, "{act:?} param {k}: analytic {} vs numeric {fd}", g[k]);
            }
        }
    }

    #[test]
    fn learns_blobs() {
        let (x, y) = blobs(30, 3, 5, 0.7, 12);
        let p = MlpParams { epochs: 40, ..Default::default() };
        let m = MlpModel::fit(&p, &x, &y, 3, 0).unwrap();
        let pred: Vec<usize> = x.iter_rows().map(|r| super::super::argmax(&m.predict_proba(r))).collect();
        assert!(accuracy(&pred, &y) > 0.95);
        assert!(m.loss_history.last().unwrap() < &m.loss_history[0]);
        assert_eq!(m, MlpModel::fit(&p, &x, &y, 3, 0).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        // lr * l2 far above 2 makes every weight oscillate with growing amplitude
        let (x, y) = blobs(10, 2, 3, 0.5, 1);
        let p = MlpParams { learning_rate: 1.0, l2: 1e3, epochs: 200, ..Default::default() };
        assert!(matches!(MlpModel::fit(&p, &x, &y, 2, 0), Err(Error::Divergence(_))));
    }
}
