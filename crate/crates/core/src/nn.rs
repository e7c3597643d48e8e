//! Dense layers with hand-written reverse passes.
//!
//! Everything is `f64` and row-major. A layer's forward pass returns the values
//! its backward pass needs, so a recursive network can keep one cache per tree
//! node while sharing the weights.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self::zeros(&other.shape)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill_gaussian<R: Rng + ?Sized>(&mut self, rng: &mut R, std: f64) {
        for v in &mut self.data {
            let z: f64 = StandardNormal.sample(rng);
            *v = z * std;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative expressed through the activation's output.
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// `y = act(W x + b)` with `W` of shape `[out, in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: Tensor::zeros(&[outputs, inputs]),
            b: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.w.shape[0]
    }

    /// Gaussian weights with standard deviation `1/sqrt(fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let std = 1.0 / libm::sqrt(self.inputs() as f64);
        self.w.fill_gaussian(rng, std);
        self.b.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn forward(&self, x: &[f64], act: Activation) -> Vec<f64> {
        let n_in = self.inputs();
        debug_assert_eq!(x.len(), n_in);
        self.w
            .data
            .chunks_exact(n_in)
            .zip(&self.b.data)
            .map(|(row, b)| act.apply(dot(row, x) + b))
            .collect()
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    ///
    /// `y` is this layer's output for input `x`; `dy` is `dL/dy`.
    pub fn backward(
        &self,
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        act: Activation,
        grad: &mut Dense,
    ) -> Vec<f64> {
        let n_in = self.inputs();
        let mut dx = vec![0.0; n_in];
        for (o, ((&yo, &dyo), row)) in y
            .iter()
            .zip(dy)
            .zip(self.w.data.chunks_exact(n_in))
            .enumerate()
        {
            let dpre = dyo * act.grad_from_output(yo);
            if dpre == 0.0 {
                continue;
            }
            grad.b.data[o] += dpre;
            let grow = &mut grad.w.data[o * n_in..(o + 1) * n_in];
            for ((g, &xi), (d, &wi)) in grow.iter_mut().zip(x).zip(dx.iter_mut().zip(row)) {
                *g += dpre * xi;
                *d += dpre * wi;
            }
        }
        dx
    }
}

// Four independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One hidden tanh layer followed by an output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub hidden: Dense,
    pub output: Dense,
}

/// Intermediate values of one [`Mlp::forward`] call.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl Mlp {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self {
            hidden: Dense::zeros(inputs, hidden),
            output: Dense::zeros(hidden, outputs),
        }
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.hidden.init(rng);
        self.output.init(rng);
    }

    pub fn forward(&self, input: Vec<f64>, out_act: Activation) -> MlpCache {
        let hidden = self.hidden.forward(&input, Activation::Tanh);
        let output = self.output.forward(&hidden, out_act);
        MlpCache {
            input,
            hidden,
            output,
        }
    }

    pub fn backward(
        &self,
        cache: &MlpCache,
        dy: &[f64],
        out_act: Activation,
        grad: &mut Mlp,
    ) -> Vec<f64> {
        let dh = self
            .output
            .backward(&cache.hidden, &cache.output, dy, out_act, &mut grad.output);
        self.hidden
            .backward(&cache.input, &cache.hidden, &dh, Activation::Tanh, &mut grad.hidden)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Numerically stable `log(softmax(logits))`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(logits.iter().map(|&l| libm::exp(l - max)).sum::<f64>());
    logits.iter().map(|&l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(libm::exp).collect()
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(mlp: &Mlp, x: &[f64]) -> f64 {
        let c = mlp.forward(x.to_vec(), Activation::Tanh);
        c.output.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v).sum()
    }

    #[test]
    fn mlp_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut mlp = Mlp::zeros(4, 5, 3);
        mlp.init(&mut rng);
        mlp.hidden.b.fill_gaussian(&mut rng, 0.3);
        let x = [0.3, -0.2, 0.7, 0.1];
        let cache = mlp.forward(x.to_vec(), Activation::Tanh);
        let dy = [1.0, 2.0, 3.0];
        let mut grad = Mlp::zeros(4, 5, 3);
        let dx = mlp.backward(&cache, &dy, Activation::Tanh, &mut grad);

        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (loss(&mlp, &xp) - loss(&mlp, &xm)) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-8, "input {i}: {fd} vs {}", dx[i]);
        }
        for k in 0..mlp.hidden.w.len() {
            let mut p = mlp.clone();
            p.hidden.w.data[k] += h;
            let mut m = mlp.clone();
            m.hidden.w.data[k] -= h;
            let fd = (loss(&p, &x) - loss(&m, &x)) / (2.0 * h);
            assert!((fd - grad.hidden.w.data[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_layer_gives_zero() {
        let d = Dense::zeros(3, 2);
        assert_eq!(d.forward(&[1.0, 2.0, 3.0], Activation::Tanh), vec![0.0, 0.0]);
    }

    #[test]
    fn softmax_normalizes() {
        let p = softmax(&[1000.0, -3.0, 2.5, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(argmax(&[0.1, 0.5, 0.5, -1.0]), 1);
    }
}
