//! Diffusion machinery of the actor.
//!
//! The reverse chain starts from `x_K ~ N(0, I)` and applies `K` denoising
//! steps conditioned on the observation. The noise network's prediction is
//! squashed with `tanh` before it enters the posterior mean, and the chain's
//! output `x_0` is turned into action probabilities with a softmax.

use ndarray::{s, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{softmax, softmax_rows, Activation, MlpCache, MlpLayout};
use crate::rng::Rng;

/// Variance schedule and its derived sequences, indexed by step `k = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    k: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    beta_tilde: Vec<f64>,
}

/// `beta_k = 1 - exp(-beta_min/K - (2k-1)/(2K^2) (beta_max - beta_min))`.
pub fn build_schedule(k: usize, beta_min: f64, beta_max: f64) -> Result<DiffusionSchedule> {
    if k < 1 {
        return Err(Error::pre("diffusion needs at least one step"));
    }
    if !(beta_min > 0.0 && beta_min < beta_max) {
        return Err(Error::pre(format!(
            "need 0 < beta_min < beta_max, got {beta_min}, {beta_max}"
        )));
    }
    let kf = k as f64;
    let beta: Vec<f64> = (1..=k)
        .map(|i| {
            let e =
                beta_min / kf + (2.0 * i as f64 - 1.0) / (2.0 * kf * kf) * (beta_max - beta_min);
            -(-e).exp_m1()
        })
        .collect();
    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bar = Vec::with_capacity(k);
    let mut acc = 1.0;
    for a in &alpha {
        acc *= a;
        alpha_bar.push(acc);
    }
    let beta_tilde = (0..k)
        .map(|i| {
            let prev = if i == 0 { 1.0 } else { alpha_bar[i - 1] };
            beta[i] * (1.0 - prev) / (1.0 - alpha_bar[i])
        })
        .collect();
    Ok(DiffusionSchedule {
        k,
        beta_min,
        beta_max,
        beta,
        alpha,
        alpha_bar,
        beta_tilde,
    })
}

impl DiffusionSchedule {
    pub fn steps(&self) -> usize {
        self.k
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.beta[k - 1]
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha[k - 1]
    }

    /// Cumulative product; `alpha_bar(0) = 1`.
    pub fn alpha_bar(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.alpha_bar[k - 1]
        }
    }

    pub fn beta_tilde(&self, k: usize) -> f64 {
        self.beta_tilde[k - 1]
    }

    fn check_step(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.k {
            Err(Error::pre(format!("step {k} outside 1..={}", self.k)))
        } else {
            Ok(())
        }
    }

    /// Coefficient on `tanh(eps)` in the reverse mean.
    fn eps_coef(&self, k: usize) -> f64 {
        self.beta(k) / ((1.0 - self.alpha_bar(k)).sqrt() * self.alpha(k).sqrt())
    }
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}

/// Closed-form forward noising `x_k = sqrt(abar_k) x0 + sqrt(1 - abar_k) eps`.
pub fn forward_sample(
    x0: &[f64],
    k: usize,
    eps: &[f64],
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    schedule.check_step(k)?;
    check_dims(x0.len(), eps.len())?;
    let ab = schedule.alpha_bar(k);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

/// One step of the single-step forward kernel `q(x_k | x_{k-1})`.
pub fn forward_step(
    x_prev: &[f64],
    k: usize,
    eps: &[f64],
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    schedule.check_step(k)?;
    check_dims(x_prev.len(), eps.len())?;
    let b = schedule.beta(k);
    let (a, s) = ((1.0 - b).sqrt(), b.sqrt());
    Ok(x_prev.iter().zip(eps).map(|(x, e)| a * x + s * e).collect())
}

/// Mean and variance of `q(x_{k-1} | x_k, x_0)`.
pub fn posterior_params(
    x_k: &[f64],
    x0: &[f64],
    k: usize,
    schedule: &DiffusionSchedule,
) -> Result<(Vec<f64>, f64)> {
    schedule.check_step(k)?;
    check_dims(x_k.len(), x0.len())?;
    let ab = schedule.alpha_bar(k);
    let ab_prev = schedule.alpha_bar(k - 1);
    let c_xk = schedule.alpha(k).sqrt() * (1.0 - ab_prev) / (1.0 - ab);
    let c_x0 = ab_prev.sqrt() * schedule.beta(k) / (1.0 - ab);
    let mu = x_k
        .iter()
        .zip(x0)
        .map(|(xk, x0)| c_xk * xk + c_x0 * x0)
        .collect();
    Ok((mu, schedule.beta_tilde(k)))
}

/// Interleaved sinusoidal embedding of a diffusion step.
pub fn sinusoidal_embed(k: usize, dim: usize) -> Result<Vec<f64>> {
    if dim < 2 || dim % 2 == 1 {
        return Err(Error::pre(format!(
            "embedding dimension must be even and >= 2, got {dim}"
        )));
    }
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim / 2 {
        let freq = 10000f64.powf(2.0 * i as f64 / dim as f64);
        let arg = k as f64 / freq;
        out.push(arg.sin());
        out.push(arg.cos());
    }
    Ok(out)
}

/// Sizes of the noise-prediction network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseNetSpec {
    pub action_dim: usize,
    pub obs_dim: usize,
    pub time_dim: usize,
    pub time_hidden: usize,
    pub hidden: usize,
}

impl Default for NoiseNetSpec {
    fn default() -> Self {
        Self {
            action_dim: 45,
            obs_dim: 4,
            time_dim: 16,
            time_hidden: 32,
            hidden: 128,
        }
    }
}

impl NoiseNetSpec {
    /// Time-embedding branch: `time_dim -> time_hidden -> time_dim`, mish.
    pub fn time_layout(&self) -> MlpLayout {
        MlpLayout::new(
            vec![self.time_dim, self.time_hidden, self.time_dim],
            vec![Activation::Mish, Activation::Mish],
        )
    }

    /// Trunk over `[x_k, time embedding, state]`. Its last layer is linear
    /// here; the `tanh` head is applied by the denoising step.
    pub fn trunk_layout(&self) -> MlpLayout {
        MlpLayout::new(
            vec![
                self.action_dim + self.time_dim + self.obs_dim,
                self.hidden,
                self.hidden,
                self.action_dim,
            ],
            vec![Activation::Mish, Activation::Mish, Activation::Identity],
        )
    }
}

/// Noise network `eps_theta(x_k, k, s)` with its flat parameter vector:
/// time-branch parameters first, then the trunk.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseNet {
    pub spec: NoiseNetSpec,
    time: MlpLayout,
    trunk: MlpLayout,
    pub params: Vec<f64>,
}

impl NoiseNet {
    pub fn new(spec: NoiseNetSpec, rng: &mut Rng) -> Self {
        let time = spec.time_layout();
        let trunk = spec.trunk_layout();
        let mut params = time.init(rng);
        params.extend(trunk.init(rng));
        Self {
            spec,
            time,
            trunk,
            params,
        }
    }

    pub fn from_params(spec: NoiseNetSpec, params: Vec<f64>) -> Result<Self> {
        let time = spec.time_layout();
        let trunk = spec.trunk_layout();
        check_dims(time.num_params() + trunk.num_params(), params.len())?;
        Ok(Self {
            spec,
            time,
            trunk,
            params,
        })
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn split(&self) -> (&[f64], &[f64]) {
        self.params.split_at(self.time.num_params())
    }

    /// Named tensors for checkpoints.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, std::ops::Range<usize>)> {
        let off = self.time.num_params();
        let mut out = self.time.tensors("time");
        out.extend(
            self.trunk
                .tensors("trunk")
                .into_iter()
                .map(|(n, s, r)| (n, s, r.start + off..r.end + off)),
        );
        out
    }

    fn time_embedding(&self, k: usize) -> Result<(Array2<f64>, MlpCache)> {
        let e = sinusoidal_embed(k, self.spec.time_dim)?;
        let e = Array2::from_shape_vec((1, e.len()), e).expect("row vector");
        self.time.forward_cached(self.split().0, e.view())
    }

    fn trunk_input(
        &self,
        x_k: ArrayView2<'_, f64>,
        temb: &Array2<f64>,
        states: ArrayView2<'_, f64>,
    ) -> Array2<f64> {
        let (a, t) = (self.spec.action_dim, self.spec.time_dim);
        let n = x_k.nrows();
        let mut input = Array2::zeros((n, a + t + self.spec.obs_dim));
        input.slice_mut(s![.., ..a]).assign(&x_k);
        input
            .slice_mut(s![.., a..a + t])
            .assign(&temb.broadcast((n, t)).expect("broadcast row"));
        input.slice_mut(s![.., a + t..]).assign(&states);
        input
    }

    /// Raw (pre-`tanh`) noise prediction for a batch at step `k`.
    pub fn predict_batch(
        &self,
        x_k: ArrayView2<'_, f64>,
        k: usize,
        states: ArrayView2<'_, f64>,
    ) -> Result<Array2<f64>> {
        check_dims(self.spec.action_dim, x_k.ncols())?;
        check_dims(self.spec.obs_dim, states.ncols())?;
        check_dims(x_k.nrows(), states.nrows())?;
        let (temb, _) = self.time_embedding(k)?;
        let input = self.trunk_input(x_k, &temb, states);
        self.trunk.forward(self.split().1, input.view())
    }
}

/// Deterministic forward pass of the noise network for one sample.
pub fn predict_noise(x_k: &[f64], k: usize, s: &[f64], net: &NoiseNet) -> Result<Vec<f64>> {
    let xk = ArrayView2::from_shape((1, x_k.len()), x_k).expect("row");
    let st = ArrayView2::from_shape((1, s.len()), s).expect("row");
    Ok(net.predict_batch(xk, k, st)?.into_raw_vec_and_offset().0)
}

/// One reverse step: posterior mean from the `tanh`-squashed noise
/// prediction plus `sqrt(beta_tilde_k) * noise`. At `k = 1` the variance is
/// zero and the output is the mean.
pub fn denoise_step(
    x_k: &[f64],
    k: usize,
    s: &[f64],
    net: &NoiseNet,
    schedule: &DiffusionSchedule,
    noise: &[f64],
) -> Result<Vec<f64>> {
    schedule.check_step(k)?;
    check_dims(x_k.len(), noise.len())?;
    let eps = predict_noise(x_k, k, s, net)?;
    let inv_sqrt_alpha = 1.0 / schedule.alpha(k).sqrt();
    let c = schedule.beta(k) / (1.0 - schedule.alpha_bar(k)).sqrt();
    let sigma = schedule.beta_tilde(k).sqrt();
    Ok(x_k
        .iter()
        .zip(&eps)
        .zip(noise)
        .map(|((x, e), z)| inv_sqrt_alpha * (x - c * e.tanh()) + sigma * z)
        .collect())
}

/// Action distribution produced by the reverse chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    pub probs: Vec<f64>,
    pub x0: Vec<f64>,
}

impl PolicyDistribution {
    pub fn from_x0(x0: Vec<f64>, temperature: f64) -> Self {
        Self {
            probs: softmax(&x0, temperature),
            x0,
        }
    }
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// How the reverse mean is formed from the noise prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReverseMean {
    /// `(x_k - beta_k tanh(eps) / sqrt(1 - abar_k)) / sqrt(alpha_k)`.
    #[default]
    Direct,
    /// Reconstructs `x0_hat = (x_k - sqrt(1 - abar_k) tanh(eps)) / sqrt(abar_k)`,
    /// squashes it to `bound * tanh(x0_hat / bound)` and takes the posterior
    /// mean. As `bound` grows this tends to `Direct`.
    SquashedX0 { bound: f64 },
}

/// Draws `x_K`, runs the chain down to `x_0` and softmaxes it.
pub fn sample_policy(
    s: &[f64],
    net: &NoiseNet,
    schedule: &DiffusionSchedule,
    rng: &mut Rng,
    temperature: f64,
) -> Result<PolicyDistribution> {
    let st = ArrayView2::from_shape((1, s.len()), s).expect("row");
    let (probs, x0) =
        sample_policy_batch(st, net, schedule, ReverseMean::Direct, rng, temperature)?;
    Ok(PolicyDistribution {
        probs: probs.row(0).to_vec(),
        x0: x0.row(0).to_vec(),
    })
}

/// Batched sampler; returns `(probs, x0)` with one row per state.
pub fn sample_policy_batch(
    states: ArrayView2<'_, f64>,
    net: &NoiseNet,
    schedule: &DiffusionSchedule,
    mean: ReverseMean,
    rng: &mut Rng,
    temperature: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if !(temperature > 0.0) {
        return Err(Error::pre(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let noise = ChainNoise::draw(states.nrows(), net.spec.action_dim, schedule.steps(), rng);
    let x0 = run_chain(states, net, schedule, mean, &noise)?;
    Ok((softmax_rows(&x0, temperature), x0))
}

/// Pre-drawn Gaussian inputs of one reverse chain: the start point and the
/// per-step noise for `k = 2..=K` (step 1 adds none).
#[derive(Debug, Clone)]
pub struct ChainNoise {
    pub x_k: Array2<f64>,
    /// `steps[k - 2]` is the noise added when going from `x_k` to `x_{k-1}`.
    pub steps: Vec<Array2<f64>>,
}

impl ChainNoise {
    /// Draws `x_K` first, then the step noises in the order they are used.
    pub fn draw(rows: usize, dim: usize, k: usize, rng: &mut Rng) -> Self {
        let x_k = normal_matrix(rows, dim, rng);
        let mut steps: Vec<_> = (2..=k)
            .rev()
            .map(|_| normal_matrix(rows, dim, rng))
            .collect();
        steps.reverse();
        Self { x_k, steps }
    }

    pub fn zeros(rows: usize, dim: usize, k: usize) -> Self {
        Self {
            x_k: Array2::zeros((rows, dim)),
            steps: (2..=k).map(|_| Array2::zeros((rows, dim))).collect(),
        }
    }

    fn at(&self, k: usize) -> Option<&Array2<f64>> {
        (k >= 2).then(|| &self.steps[k - 2])
    }
}

/// Forward pass of the whole chain without recording a tape.
pub fn run_chain(
    states: ArrayView2<'_, f64>,
    net: &NoiseNet,
    schedule: &DiffusionSchedule,
    mean: ReverseMean,
    noise: &ChainNoise,
) -> Result<Array2<f64>> {
    let mut x = noise.x_k.clone();
    for k in (1..=schedule.steps()).rev() {
        let eps = net.predict_batch(x.view(), k, states)?;
        x = reverse_update(&x, &eps.mapv(f64::tanh), k, schedule, mean, noise.at(k)).0;
    }
    Ok(x)
}

/// Coefficients `(a, b)` of `mu = a x_k + b x0` in the posterior mean.
fn posterior_coefs(k: usize, schedule: &DiffusionSchedule) -> (f64, f64) {
    let ab = schedule.alpha_bar(k);
    let ab_prev = schedule.alpha_bar(k - 1);
    (
        schedule.alpha(k).sqrt() * (1.0 - ab_prev) / (1.0 - ab),
        ab_prev.sqrt() * schedule.beta(k) / (1.0 - ab),
    )
}

/// One reverse step on a batch given `tanh(eps)`. For the squashed form it
/// also returns `d squash / d x0_hat`.
fn reverse_update(
    x: &Array2<f64>,
    tanh_eps: &Array2<f64>,
    k: usize,
    schedule: &DiffusionSchedule,
    mean: ReverseMean,
    z: Option<&Array2<f64>>,
) -> (Array2<f64>, Option<Array2<f64>>) {
    let (mut out, slope) = match mean {
        ReverseMean::Direct => {
            let c = schedule.eps_coef(k);
            let mut out = x * (1.0 / schedule.alpha(k).sqrt());
            out.zip_mut_with(tanh_eps, |o, t| *o -= c * t);
            (out, None)
        }
        ReverseMean::SquashedX0 { bound } => {
            let ab = schedule.alpha_bar(k);
            let (s0, s1) = (ab.sqrt(), (1.0 - ab).sqrt());
            let (ca, cb) = posterior_coefs(k, schedule);
            let mut x0 = x - &(tanh_eps * s1);
            x0.mapv_inplace(|v| (v / (s0 * bound)).tanh());
            let slope = x0.mapv(|t| 1.0 - t * t);
            x0 *= bound;
            let mut out = x * ca;
            out.scaled_add(cb, &x0);
            (out, Some(slope))
        }
    };
    if let Some(z) = z {
        out.scaled_add(schedule.beta_tilde(k).sqrt(), z);
    }
    (out, slope)
}

struct StepTape {
    k: usize,
    time_cache: MlpCache,
    trunk_cache: MlpCache,
    tanh_eps: Array2<f64>,
    squash_slope: Option<Array2<f64>>,
}

/// Recorded chain for reverse-mode differentiation with respect to the
/// network parameters.
pub struct ChainTape {
    mean: ReverseMean,
    steps: Vec<StepTape>,
}

/// Runs the chain and records everything needed by [`chain_backward`].
pub fn chain_forward(
    states: ArrayView2<'_, f64>,
    net: &NoiseNet,
    schedule: &DiffusionSchedule,
    mean: ReverseMean,
    noise: &ChainNoise,
) -> Result<(Array2<f64>, ChainTape)> {
    check_dims(net.spec.obs_dim, states.ncols())?;
    let trunk_p = net.split().1;
    let mut x = noise.x_k.clone();
    let mut steps = Vec::with_capacity(schedule.steps());
    for k in (1..=schedule.steps()).rev() {
        let (temb, time_cache) = net.time_embedding(k)?;
        let input = net.trunk_input(x.view(), &temb, states);
        let (eps, trunk_cache) = net.trunk.forward_cached(trunk_p, input.view())?;
        let tanh_eps = eps.mapv(f64::tanh);
        let (next, squash_slope) = reverse_update(&x, &tanh_eps, k, schedule, mean, noise.at(k));
        x = next;
        steps.push(StepTape {
            k,
            time_cache,
            trunk_cache,
            tanh_eps,
            squash_slope,
        });
    }
    Ok((x, ChainTape { mean, steps }))
}

/// Backpropagates `d_x0` through the recorded chain; returns the gradient
/// with respect to `net.params`.
pub fn chain_backward(
    net: &NoiseNet,
    schedule: &DiffusionSchedule,
    tape: &ChainTape,
    d_x0: Array2<f64>,
) -> Vec<f64> {
    let (time_p, trunk_p) = net.split();
    let n_time = time_p.len();
    let mut grad = vec![0.0; net.params.len()];
    let (a, t) = (net.spec.action_dim, net.spec.time_dim);
    let mut d_x = d_x0;
    // the tape runs k = K..1, so walk it backwards
    for st in tape.steps.iter().rev() {
        let k = st.k;
        // gradients w.r.t. tanh(eps) and the direct x_k path
        let (mut d_eps, mut d_prev) = match tape.mean {
            ReverseMean::Direct => (
                &d_x * (-schedule.eps_coef(k)),
                &d_x * (1.0 / schedule.alpha(k).sqrt()),
            ),
            ReverseMean::SquashedX0 { .. } => {
                let ab = schedule.alpha_bar(k);
                let (s0, s1) = (ab.sqrt(), (1.0 - ab).sqrt());
                let (ca, cb) = posterior_coefs(k, schedule);
                let mut d_x0hat = &d_x * cb;
                if let Some(slope) = &st.squash_slope {
                    d_x0hat *= slope;
                }
                let mut d_prev = &d_x * ca;
                d_prev.scaled_add(1.0 / s0, &d_x0hat);
                (d_x0hat * (-s1 / s0), d_prev)
            }
        };
        d_eps.zip_mut_with(&st.tanh_eps, |g, th| *g *= 1.0 - th * th);
        let d_input = net
            .trunk
            .backward(trunk_p, &st.trunk_cache, d_eps, &mut grad[n_time..]);
        d_prev += &d_input.slice(s![.., ..a]);
        let d_temb = d_input
            .slice(s![.., a..a + t])
            .sum_axis(Axis(0))
            .insert_axis(Axis(0));
        net.time
            .backward(time_p, &st.time_cache, d_temb, &mut grad[..n_time]);
        d_x = d_prev;
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn first_beta_value() {
        let s = build_schedule(10, 0.1, 10.0).unwrap();
        let expect = 1.0 - (-0.01f64 - 0.0495).exp();
        assert!((s.beta(1) - expect).abs() < 1e-15);
        assert!((s.beta(1) - 0.05777).abs() < 1e-5);
        assert!(s.alpha_bar(10) < 0.01);
    }

    #[test]
    fn schedule_preconditions() {
        assert!(build_schedule(0, 0.1, 1.0).is_err());
        assert!(build_schedule(3, 1.0, 0.5).is_err());
        assert!(build_schedule(3, 0.0, 0.5).is_err());
    }

    #[test]
    fn k1_posterior_is_x0() {
        let s = build_schedule(10, 0.1, 10.0).unwrap();
        let (mu, bt) = posterior_params(&[0.3, -2.0], &[1.5, 0.25], 1, &s).unwrap();
        assert_eq!(bt, 0.0);
        assert!((mu[0] - 1.5).abs() < 1e-12 && (mu[1] - 0.25).abs() < 1e-12);
        assert!(posterior_params(&[0.0], &[0.0], 11, &s).is_err());
    }

    #[test]
    fn embedding_at_zero_alternates() {
        let e = sinusoidal_embed(0, 8).unwrap();
        assert_eq!(e, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(sinusoidal_embed(3, 7).is_err());
    }

    #[test]
    fn forward_sample_edge_cases() {
        let s = build_schedule(5, 0.1, 10.0).unwrap();
        let x = forward_sample(&[2.0, -1.0], 3, &[0.0, 0.0], &s).unwrap();
        assert!((x[0] - 2.0 * s.alpha_bar(3).sqrt()).abs() < 1e-15);
        let x = forward_sample(&[0.0], 3, &[1.0], &s).unwrap();
        assert!((x[0] - (1.0 - s.alpha_bar(3)).sqrt()).abs() < 1e-15);
        assert!(forward_sample(&[0.0], 3, &[1.0, 2.0], &s).is_err());
    }

    #[test]
    fn step_one_ignores_noise() {
        let mut rng = seeded(1);
        let spec = NoiseNetSpec {
            action_dim: 3,
            obs_dim: 2,
            time_dim: 4,
            time_hidden: 6,
            hidden: 8,
        };
        let net = NoiseNet::new(spec, &mut rng);
        let s = build_schedule(4, 0.1, 10.0).unwrap();
        let a = denoise_step(
            &[0.1, 0.2, 0.3],
            1,
            &[1.0, -1.0],
            &net,
            &s,
            &[5.0, 5.0, 5.0],
        )
        .unwrap();
        let b = denoise_step(
            &[0.1, 0.2, 0.3],
            1,
            &[1.0, -1.0],
            &net,
            &s,
            &[-3.0, 0.0, 9.0],
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_chain_matches_single_steps() {
        let mut rng = seeded(2);
        let spec = NoiseNetSpec {
            action_dim: 3,
            obs_dim: 2,
            time_dim: 4,
            time_hidden: 6,
            hidden: 8,
        };
        let net = NoiseNet::new(spec, &mut rng);
        let sched = build_schedule(3, 0.1, 10.0).unwrap();
        let states = ndarray::array![[0.5, -0.2]];
        let noise = ChainNoise::draw(1, 3, 3, &mut rng);
        let x0 = run_chain(states.view(), &net, &sched, ReverseMean::Direct, &noise).unwrap();
        let mut x = noise.x_k.row(0).to_vec();
        for k in (1..=3).rev() {
            let z = if k >= 2 {
                noise.steps[k - 2].row(0).to_vec()
            } else {
                vec![0.0; 3]
            };
            x = denoise_step(&x, k, &[0.5, -0.2], &net, &sched, &z).unwrap();
        }
        for (a, b) in x.iter().zip(x0.row(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn toy_net(seed: u64) -> NoiseNet {
        let spec = NoiseNetSpec {
            action_dim: 3,
            obs_dim: 2,
            time_dim: 4,
            time_hidden: 5,
            hidden: 6,
        };
        NoiseNet::new(spec, &mut seeded(seed))
    }

    fn check_chain_gradient(mean: ReverseMean) {
        let mut net = toy_net(3);
        let mut rng = seeded(4);
        let sched = build_schedule(3, 0.1, 10.0).unwrap();
        let states = ndarray::array![[0.5, -0.2], [1.0, 0.3]];
        let noise = ChainNoise::draw(2, 3, 3, &mut rng);
        let weights = ndarray::array![[0.3, -1.0, 0.7], [1.2, 0.1, -0.4]];
        let loss = |net: &NoiseNet| {
            let x0 = run_chain(states.view(), net, &sched, mean, &noise).unwrap();
            (&x0 * &weights).sum()
        };
        let (x0, tape) = chain_forward(states.view(), &net, &sched, mean, &noise).unwrap();
        assert!(((&x0 * &weights).sum() - loss(&net)).abs() < 1e-12);
        let grad = chain_backward(&net, &sched, &tape, weights.clone());
        let h = 1e-6;
        for i in 0..net.params.len() {
            let orig = net.params[i];
            net.params[i] = orig + h;
            let up = loss(&net);
            net.params[i] = orig - h;
            let down = loss(&net);
            net.params[i] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!(
                (fd - grad[i]).abs() < 1e-6 * (1.0 + fd.abs()),
                "param {i}: {fd} vs {}",
                grad[i]
            );
        }
    }

    #[test]
    fn chain_gradient_matches_finite_differences() {
        check_chain_gradient(ReverseMean::Direct);
        check_chain_gradient(ReverseMean::SquashedX0 { bound: 1.0 });
    }

    #[test]
    fn squashed_mean_tends_to_direct() {
        let net = toy_net(5);
        let mut rng = seeded(6);
        let sched = build_schedule(4, 0.1, 10.0).unwrap();
        let states = ndarray::array![[0.1, 0.2]];
        let noise = ChainNoise::draw(1, 3, 4, &mut rng);
        let a = run_chain(states.view(), &net, &sched, ReverseMean::Direct, &noise).unwrap();
        let b = run_chain(
            states.view(),
            &net,
            &sched,
            ReverseMean::SquashedX0 { bound: 1e6 },
            &noise,
        )
        .unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()));
        }
        let c = run_chain(
            states.view(),
            &net,
            &sched,
            ReverseMean::SquashedX0 { bound: 1.0 },
            &noise,
        )
        .unwrap();
        assert!(c.iter().all(|v| v.abs() < 1.0));
    }
}
