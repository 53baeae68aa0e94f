//! Small dense networks with hand-written backpropagation.
//!
//! Parameters live in one flat `Vec<f64>` per network so that optimiser
//! steps, soft updates, checkpoints and finite-difference checks all work on
//! plain slices. A [`MlpLayout`] knows how to read a parameter slice as a
//! stack of fully connected layers.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Mish,
    Tanh,
}

/// `tanh(softplus(x))` from a single exponential, with `e = exp(x)`.
fn tanh_softplus(e: f64) -> f64 {
    let n = e * (2.0 + e);
    n / (n + 2.0)
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Mish => {
                if x > 20.0 {
                    x
                } else {
                    x * tanh_softplus(x.exp())
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative with respect to the pre-activation.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Mish => {
                if x > 20.0 {
                    return 1.0;
                }
                let e = x.exp();
                let t = tanh_softplus(e);
                t + x * (1.0 - t * t) * e / (1.0 + e)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Shape of a fully connected stack: `sizes[0]` inputs, then one layer per
/// following entry, each with its own activation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpLayout {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

impl MlpLayout {
    pub fn new(sizes: Vec<usize>, activations: Vec<Activation>) -> Self {
        assert_eq!(
            sizes.len(),
            activations.len() + 1,
            "one activation per layer"
        );
        Self { sizes, activations }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty layout")
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    /// (weight offset, bias offset, fan_in, fan_out) of layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize, usize, usize) {
        let mut off = 0;
        for i in 0..l {
            off += self.sizes[i] * self.sizes[i + 1] + self.sizes[i + 1];
        }
        let (fi, fo) = (self.sizes[l], self.sizes[l + 1]);
        (off, off + fi * fo, fi, fo)
    }

    pub fn num_params(&self) -> usize {
        (0..self.num_layers())
            .map(|l| self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1])
            .sum()
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    pub fn init(&self, rng: &mut Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params()];
        for l in 0..self.num_layers() {
            let (w, b, fi, fo) = self.offsets(l);
            let bound = 1.0 / (fi as f64).sqrt();
            for v in &mut p[w..b + fo] {
                *v = rng.gen_range(-bound..bound);
            }
        }
        p
    }

    /// Named (weight, bias) views for serialisation: `(name, shape, range)`.
    pub fn tensors(&self, prefix: &str) -> Vec<(String, Vec<usize>, std::ops::Range<usize>)> {
        let mut out = Vec::new();
        for l in 0..self.num_layers() {
            let (w, b, fi, fo) = self.offsets(l);
            out.push((format!("{prefix}.{l}.weight"), vec![fo, fi], w..b));
            out.push((format!("{prefix}.{l}.bias"), vec![fo], b..b + fo));
        }
        out
    }

    fn check(&self, params: &[f64], x: &ArrayView2<'_, f64>) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Shape {
                expected: self.num_params(),
                actual: params.len(),
            });
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    fn affine(&self, l: usize, params: &[f64], a: &ArrayView2<'_, f64>) -> Array2<f64> {
        let (w, b, fi, fo) = self.offsets(l);
        let weight = ArrayView2::from_shape((fo, fi), &params[w..b]).expect("layout shape");
        let mut z = Array2::zeros((a.nrows(), fo));
        general_mat_mul(1.0, a, &weight.t(), 0.0, &mut z);
        let bias = &params[b..b + fo];
        for mut row in z.rows_mut() {
            for (v, bi) in row.iter_mut().zip(bias) {
                *v += bi;
            }
        }
        z
    }

    /// Batched forward pass, rows are samples.
    pub fn forward(&self, params: &[f64], x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(params, &x)?;
        let mut a = x.to_owned();
        for l in 0..self.num_layers() {
            let act = self.activations[l];
            a = self.affine(l, params, &a.view());
            a.mapv_inplace(|v| act.apply(v));
        }
        Ok(a)
    }

    pub fn forward_cached(
        &self,
        params: &[f64],
        x: ArrayView2<'_, f64>,
    ) -> Result<(Array2<f64>, MlpCache)> {
        self.check(params, &x)?;
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.num_layers()),
            pre: Vec::with_capacity(self.num_layers()),
        };
        let mut a = x.to_owned();
        for l in 0..self.num_layers() {
            let act = self.activations[l];
            let z = self.affine(l, params, &a.view());
            let next = z.mapv(|v| act.apply(v));
            cache.inputs.push(a);
            cache.pre.push(z);
            a = next;
        }
        Ok((a, cache))
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the network input.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &MlpCache,
        d_out: Array2<f64>,
        grad: &mut [f64],
    ) -> Array2<f64> {
        let mut d = d_out;
        for l in (0..self.num_layers()).rev() {
            let act = self.activations[l];
            let z = &cache.pre[l];
            if act != Activation::Identity {
                d.zip_mut_with(z, |g, &zv| *g *= act.derivative(zv));
            }
            let (w, b, fi, fo) = self.offsets(l);
            {
                let (gw, rest) = grad[w..].split_at_mut(b - w);
                let mut gw = ArrayViewMut2::from_shape((fo, fi), gw).expect("layout shape");
                general_mat_mul(1.0, &d.t(), &cache.inputs[l], 1.0, &mut gw);
                let col_sums = d.sum_axis(Axis(0));
                for (g, s) in rest[..fo].iter_mut().zip(col_sums.iter()) {
                    *g += s;
                }
            }
            let weight = ArrayView2::from_shape((fo, fi), &params[w..b]).expect("layout shape");
            let mut d_in = Array2::zeros((d.nrows(), fi));
            general_mat_mul(1.0, &d, &weight, 0.0, &mut d_in);
            d = d_in;
        }
        d
    }
}

/// A layout together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layout: MlpLayout,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn new(layout: MlpLayout, rng: &mut Rng) -> Self {
        let params = layout.init(rng);
        Self { layout, params }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.layout.forward(&self.params, x)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, MlpCache)> {
        self.layout.forward_cached(&self.params, x)
    }

    pub fn backward(&self, cache: &MlpCache, d_out: Array2<f64>, grad: &mut [f64]) -> Array2<f64> {
        self.layout.backward(&self.params, cache, d_out, grad)
    }
}

/// Adam with decoupled weight decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * self.weight_decay * params[i];
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// `target <- tau * online + (1 - tau) * target`, elementwise.
pub fn soft_update(target: &mut [f64], online: &[f64], tau: f64) -> Result<()> {
    if target.len() != online.len() {
        return Err(Error::Shape {
            expected: target.len(),
            actual: online.len(),
        });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::pre(format!("tau must lie in (0, 1], got {tau}")));
    }
    if tau == 1.0 {
        target.copy_from_slice(online);
        return Ok(());
    }
    for (t, o) in target.iter_mut().zip(online) {
        *t += tau * (o - *t);
    }
    Ok(())
}

/// Row-wise softmax of `x / temperature`.
pub fn softmax_rows(x: &Array2<f64>, temperature: f64) -> Array2<f64> {
    let mut out = x / temperature;
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

pub fn softmax(x: &[f64], temperature: f64) -> Vec<f64> {
    let max = x
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v / temperature));
    let e: Vec<f64> = x.iter().map(|&v| (v / temperature - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
