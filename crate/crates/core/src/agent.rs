//! DiffCarl: a diffusion actor with twin risk-sensitive critics.
//!
//! Each microgrid is controlled by the same actor and critics on its own
//! observation. Critic targets blend the soft expected next value with its
//! CVaR tail according to `lambda_risk`.

use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::codec::ActionCodec;
use crate::diffusion::{
    build_schedule, chain_backward, chain_forward, run_chain, ChainNoise, DiffusionSchedule,
    NoiseNet, NoiseNetSpec, ReverseMean,
};
use crate::env::{MicrogridConfig, Setpoint, OBS_PER_MG};
use crate::error::{Error, Result};
use crate::nn::{soft_update, softmax_rows, Activation, Adam, Mlp, MlpLayout};
use crate::rng::{self, Rng};
use crate::training::{
    train_loop, Cadence, GreedyController, Learner, Obs, ObsScaler, TrainingData, TrainingLog,
    Transition, UpdateStats,
};

/// Floor inside every logarithm of a probability.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub weight_decay: f64,
    pub alpha_ent: f64,
    pub lambda_risk: f64,
    pub alpha_cvar: f64,
    pub gamma: f64,
    pub diffusion_steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub temperature: f64,
    pub reverse_mean: ReverseMean,
    /// Chain draws averaged before the greedy argmax.
    pub greedy_samples: usize,
    pub hidden: usize,
    pub time_dim: usize,
    pub time_hidden: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub updates_per_episode: usize,
    pub eval_interval: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            tau: 5e-3,
            weight_decay: 1e-4,
            alpha_ent: 0.05,
            lambda_risk: 0.1,
            alpha_cvar: 0.95,
            gamma: 0.95,
            diffusion_steps: 10,
            beta_min: 0.1,
            beta_max: 10.0,
            temperature: 1.0,
            reverse_mean: ReverseMean::SquashedX0 { bound: 1.0 },
            greedy_samples: 16,
            hidden: 128,
            time_dim: 16,
            time_hidden: 32,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            episodes: 2000,
            steps_per_episode: 1000,
            updates_per_episode: 1,
            eval_interval: 5,
        }
    }
}

impl Hyperparams {
    /// Reduced budget that trains on one CPU core in minutes.
    pub fn desk() -> Self {
        Self {
            episodes: 200,
            steps_per_episode: 240,
            updates_per_episode: 60,
            batch_size: 64,
            actor_lr: 1e-3,
            temperature: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid hyperparameter: {what}")));
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.alpha_cvar > 0.0 && self.alpha_cvar < 1.0) {
            return bad("alpha_cvar must lie in (0, 1)");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) || self.weight_decay < 0.0 {
            return bad("learning rates must be positive and weight decay non-negative");
        }
        if self.alpha_ent < 0.0 || !self.lambda_risk.is_finite() {
            return bad("alpha_ent must be non-negative and lambda_risk finite");
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        if self.hidden == 0 || self.time_hidden == 0 || self.greedy_samples == 0 {
            return bad("layer widths and greedy_samples must be positive");
        }
        if let ReverseMean::SquashedX0 { bound } = self.reverse_mean {
            if !(bound > 0.0) {
                return bad("squash bound must be positive");
            }
        }
        build_schedule(self.diffusion_steps, self.beta_min, self.beta_max)?;
        sinusoidal_dim_ok(self.time_dim)?;
        self.cadence().validate()
    }

    pub fn cadence(&self) -> Cadence {
        Cadence {
            episodes: self.episodes,
            steps_per_episode: self.steps_per_episode,
            updates_per_episode: self.updates_per_episode,
            eval_interval: self.eval_interval,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
        }
    }

    pub fn schedule(&self) -> Result<DiffusionSchedule> {
        build_schedule(self.diffusion_steps, self.beta_min, self.beta_max)
    }
}

fn sinusoidal_dim_ok(dim: usize) -> Result<()> {
    if dim < 2 || dim % 2 == 1 {
        return Err(Error::Config(format!(
            "time_dim must be even and >= 2, got {dim}"
        )));
    }
    Ok(())
}

/// Observation -> per-action value network.
pub fn critic_layout(obs_dim: usize, hidden: usize, actions: usize) -> MlpLayout {
    MlpLayout::new(
        vec![obs_dim, hidden, hidden, actions],
        vec![Activation::Mish, Activation::Mish, Activation::Identity],
    )
}

/// Online and target networks plus the observation scaler.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub actor: NoiseNet,
    pub critics: [Mlp; 2],
    pub target_actor: NoiseNet,
    pub target_critics: [Mlp; 2],
    pub scaler: ObsScaler,
}

impl AgentParams {
    /// Fresh networks; targets start as copies of the online networks.
    pub fn init(hp: &Hyperparams, actions: usize, scaler: ObsScaler, rng: &mut Rng) -> Self {
        let spec = NoiseNetSpec {
            action_dim: actions,
            obs_dim: OBS_PER_MG,
            time_dim: hp.time_dim,
            time_hidden: hp.time_hidden,
            hidden: hp.hidden,
        };
        let actor = NoiseNet::new(spec, rng);
        let layout = critic_layout(OBS_PER_MG, hp.hidden, actions);
        let critics = [Mlp::new(layout.clone(), rng), Mlp::new(layout, rng)];
        Self {
            target_actor: actor.clone(),
            target_critics: critics.clone(),
            actor,
            critics,
            scaler,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    hyperparams: Hyperparams,
    noise_net: NoiseNetSpec,
    critic_sizes: Vec<usize>,
    codec: ActionCodec,
    scaler: ObsScaler,
}

/// Argmax with lowest-index ties when `greedy`, otherwise a categorical draw.
pub fn select_action(probs: &[f64], greedy: bool, rng: &mut Rng) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::pre("empty probability vector"));
    }
    if greedy {
        let mut best = 0;
        for (j, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = j;
            }
        }
        return Ok(best);
    }
    let dist =
        WeightedIndex::new(probs).map_err(|e| Error::pre(format!("invalid probabilities: {e}")))?;
    Ok(dist.sample(rng))
}

fn check_distribution(values: &[f64], probs: &[f64]) -> Result<()> {
    if values.len() != probs.len() || values.is_empty() {
        return Err(Error::Shape {
            expected: values.len(),
            actual: probs.len(),
        });
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-6 {
        return Err(Error::pre(format!(
            "probabilities must be non-negative and sum to 1, got {total}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::pre("values must be finite"));
    }
    Ok(())
}

fn tail_mean(values: &[f64], probs: &[f64], tail: f64, lowest: bool) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    if !lowest {
        order.reverse();
    }
    // accumulate offsets from the most extreme atom to limit rounding
    let base = values[order[0]];
    let (mut remaining, mut acc, mut mass) = (tail, 0.0, 0.0);
    for j in order {
        if remaining <= tail * 1e-12 {
            break;
        }
        let take = probs[j].min(remaining);
        acc += take * (values[j] - base);
        mass += take;
        remaining -= take;
    }
    base + acc / mass
}

/// Mean of the worst `1 - alpha` probability mass (lowest values).
pub fn cvar_lower(values: &[f64], probs: &[f64], alpha: f64) -> Result<f64> {
    check_distribution(values, probs)?;
    check_alpha(alpha)?;
    Ok(tail_mean(values, probs, 1.0 - alpha, true))
}

/// Mean of the best `1 - alpha` probability mass (highest values).
pub fn cvar_upper(values: &[f64], probs: &[f64], alpha: f64) -> Result<f64> {
    check_distribution(values, probs)?;
    check_alpha(alpha)?;
    Ok(tail_mean(values, probs, 1.0 - alpha, false))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha < 1.0) {
        return Err(Error::pre(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(())
}

/// `y = r + (1 - done) * gamma * V` with `V` shifted from the mean towards
/// the lower tail (`lambda_risk > 0`) or the upper tail (`lambda_risk < 0`).
pub fn risk_adjusted_target(
    reward: f64,
    done: bool,
    values: &[f64],
    probs: &[f64],
    hp: &Hyperparams,
) -> Result<f64> {
    check_distribution(values, probs)?;
    let m: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
    let lam = hp.lambda_risk;
    let v = if lam > 0.0 {
        m - lam * (m - cvar_lower(values, probs, hp.alpha_cvar)?)
    } else if lam < 0.0 {
        m + lam.abs() * (cvar_upper(values, probs, hp.alpha_cvar)? - m)
    } else {
        m
    };
    Ok(reward + if done { 0.0 } else { hp.gamma * v })
}

pub(crate) fn obs_matrix<'a>(rows: impl ExactSizeIterator<Item = &'a Obs>) -> Array2<f64> {
    let n = rows.len();
    let mut m = Array2::zeros((n, OBS_PER_MG));
    for (i, r) in rows.enumerate() {
        for j in 0..OBS_PER_MG {
            m[[i, j]] = r[j];
        }
    }
    m
}

pub(crate) fn elementwise_min(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    out.zip_mut_with(b, |x, y| *x = x.min(*y));
    out
}

/// Mean squared TD error of one critic on `(obs, action, target)` and its
/// parameter gradient.
pub fn critic_objective(
    critic: &Mlp,
    obs: ArrayView2<'_, f64>,
    actions: &[usize],
    targets: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if obs.nrows() == 0 {
        return Err(Error::pre("empty batch"));
    }
    let (q, cache) = critic.forward_cached(obs)?;
    let n = obs.nrows() as f64;
    let mut d_q = Array2::zeros(q.raw_dim());
    let mut loss = 0.0;
    for (i, (&a, &y)) in actions.iter().zip(targets).enumerate() {
        let r = q[[i, a]] - y;
        loss += r * r / n;
        d_q[[i, a]] = 2.0 * r / n;
    }
    let mut grad = vec![0.0; critic.params.len()];
    critic.backward(&cache, d_q, &mut grad);
    Ok((loss, grad))
}

/// Loss `-mean(pi^T q + alpha_ent * H(pi))` with `pi = softmax(logits / T)`
/// and its gradient with respect to the logits.
pub fn soft_policy_gradient(
    logits: &Array2<f64>,
    q: &Array2<f64>,
    alpha_ent: f64,
    temperature: f64,
) -> (f64, Array2<f64>) {
    let probs = softmax_rows(logits, temperature);
    let n = logits.nrows() as f64;
    let mut loss = 0.0;
    let mut d_logits = Array2::zeros(logits.raw_dim());
    for ((p, q), mut dx) in probs
        .axis_iter(Axis(0))
        .zip(q.axis_iter(Axis(0)))
        .zip(d_logits.axis_iter_mut(Axis(0)))
    {
        let mut obj = 0.0;
        let g: Vec<f64> = p
            .iter()
            .zip(q.iter())
            .map(|(&pj, &qj)| {
                let lp = (pj + LOG_FLOOR).ln();
                obj += pj * qj - alpha_ent * pj * lp;
                -(qj - alpha_ent * (lp + pj / (pj + LOG_FLOOR))) / n
            })
            .collect();
        loss -= obj / n;
        let pg: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        for ((d, &pj), gj) in dx.iter_mut().zip(p.iter()).zip(&g) {
            *d = pj * (gj - pg) / temperature;
        }
    }
    (loss, d_logits)
}

/// [`soft_policy_gradient`] of the policy produced by the
/// chain on pre-drawn noise, and its gradient with respect to the actor.
#[allow(clippy::too_many_arguments)]
pub fn actor_objective(
    actor: &NoiseNet,
    schedule: &DiffusionSchedule,
    mean: ReverseMean,
    states: ArrayView2<'_, f64>,
    noise: &ChainNoise,
    q_risk: &Array2<f64>,
    alpha_ent: f64,
    temperature: f64,
) -> Result<(f64, Vec<f64>)> {
    let (x0, tape) = chain_forward(states, actor, schedule, mean, noise)?;
    let (loss, d_x0) = soft_policy_gradient(&x0, q_risk, alpha_ent, temperature);
    let grad = chain_backward(actor, schedule, &tape, d_x0);
    Ok((loss, grad))
}

/// DiffCarl trainer state.
#[derive(Debug, Clone)]
pub struct DiffCarl {
    pub hp: Hyperparams,
    pub codec: ActionCodec,
    pub schedule: DiffusionSchedule,
    pub params: AgentParams,
    actor_opt: Adam,
    critic_opts: [Adam; 2],
}

impl DiffCarl {
    pub fn new(hp: Hyperparams, codec: ActionCodec, scaler: ObsScaler, seed: u64) -> Result<Self> {
        hp.validate()?;
        codec.validate()?;
        let mut rng = rng::seeded(rng::derive(seed, 0));
        let params = AgentParams::init(&hp, codec.len(), scaler, &mut rng);
        Self::from_params(hp, codec, params)
    }

    fn from_params(hp: Hyperparams, codec: ActionCodec, params: AgentParams) -> Result<Self> {
        let schedule = hp.schedule()?;
        let actor_opt = Adam::new(params.actor.num_params(), hp.actor_lr, hp.weight_decay);
        let critic_opts = [0, 1].map(|i| {
            Adam::new(
                params.critics[i].params.len(),
                hp.critic_lr,
                hp.weight_decay,
            )
        });
        Ok(Self {
            hp,
            codec,
            schedule,
            params,
            actor_opt,
            critic_opts,
        })
    }

    /// Policy probabilities for a batch of scaled observations.
    pub fn policy(
        &self,
        states: ArrayView2<'_, f64>,
        target: bool,
        rng: &mut Rng,
    ) -> Result<Array2<f64>> {
        let net = if target {
            &self.params.target_actor
        } else {
            &self.params.actor
        };
        let noise = ChainNoise::draw(states.nrows(), self.codec.len(), self.schedule.steps(), rng);
        let x0 = run_chain(states, net, &self.schedule, self.hp.reverse_mean, &noise)?;
        Ok(softmax_rows(&x0, self.hp.temperature))
    }

    /// Policy probabilities averaged over `greedy_samples` chain draws.
    pub fn mean_policy(&self, obs: &[Obs], rng: &mut Rng) -> Result<Array2<f64>> {
        let n = self.hp.greedy_samples;
        let repeated: Vec<&Obs> = obs
            .iter()
            .flat_map(|o| std::iter::repeat(o).take(n))
            .collect();
        let states = obs_matrix(repeated.into_iter());
        let probs = self.policy(states.view(), false, rng)?;
        let mut out = Array2::zeros((obs.len(), self.codec.len()));
        for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            row.assign(
                &probs
                    .slice(ndarray::s![i * n..(i + 1) * n, ..])
                    .mean_axis(Axis(0))
                    .expect("rows"),
            );
        }
        Ok(out)
    }

    /// Soft values of every next action under the target networks and the
    /// target policy's probabilities.
    pub fn value_atoms(
        &self,
        next_states: ArrayView2<'_, f64>,
        rng: &mut Rng,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        let probs = self.policy(next_states, true, rng)?;
        let q1 = self.params.target_critics[0].forward(next_states)?;
        let q2 = self.params.target_critics[1].forward(next_states)?;
        let mut values = elementwise_min(&q1, &q2);
        values.zip_mut_with(&probs, |v, p| {
            *v -= self.hp.alpha_ent * (p + LOG_FLOOR).ln()
        });
        Ok((values, probs))
    }

    /// Risk-adjusted targets for a batch.
    pub fn targets(&self, batch: &[&Transition<usize>], rng: &mut Rng) -> Result<Vec<f64>> {
        let next = obs_matrix(batch.iter().map(|t| &t.next_obs));
        let (values, probs) = self.value_atoms(next.view(), rng)?;
        batch
            .iter()
            .zip(values.axis_iter(Axis(0)).zip(probs.axis_iter(Axis(0))))
            .map(|(t, (v, p))| {
                risk_adjusted_target(
                    t.reward,
                    t.done,
                    v.as_slice().expect("row"),
                    p.as_slice().expect("row"),
                    &self.hp,
                )
            })
            .collect()
    }

    /// One Adam step on both critics; returns the loss averaged over the
    /// batch and the two critics.
    pub fn critic_update(&mut self, batch: &[&Transition<usize>], rng: &mut Rng) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::pre("empty batch"));
        }
        let y = self.targets(batch, rng)?;
        let obs = obs_matrix(batch.iter().map(|t| &t.obs));
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let mut total = 0.0;
        for i in 0..2 {
            let (loss, mut grad) =
                critic_objective(&self.params.critics[i], obs.view(), &actions, &y)?;
            grad.iter_mut().for_each(|g| *g *= 0.5);
            self.critic_opts[i].step(&mut self.params.critics[i].params, &grad);
            total += 0.5 * loss;
        }
        Ok(total)
    }

    /// One Adam step on the actor through the reparameterised chain.
    pub fn actor_update(&mut self, batch: &[&Transition<usize>], rng: &mut Rng) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::pre("empty batch"));
        }
        let states = obs_matrix(batch.iter().map(|t| &t.obs));
        let q_risk = elementwise_min(
            &self.params.critics[0].forward(states.view())?,
            &self.params.critics[1].forward(states.view())?,
        );
        let noise = ChainNoise::draw(states.nrows(), self.codec.len(), self.schedule.steps(), rng);
        let (loss, grad) = actor_objective(
            &self.params.actor,
            &self.schedule,
            self.hp.reverse_mean,
            states.view(),
            &noise,
            &q_risk,
            self.hp.alpha_ent,
            self.hp.temperature,
        )?;
        self.actor_opt.step(&mut self.params.actor.params, &grad);
        Ok(loss)
    }

    /// Blends every online network into its target.
    pub fn soft_update(&mut self) -> Result<()> {
        let p = &mut self.params;
        soft_update(&mut p.target_actor.params, &p.actor.params, self.hp.tau)?;
        for i in 0..2 {
            soft_update(
                &mut p.target_critics[i].params,
                &p.critics[i].params,
                self.hp.tau,
            )?;
        }
        Ok(())
    }

    pub fn greedy(&self) -> GreedyController<'_, Self> {
        GreedyController {
            learner: self,
            scaler: self.params.scaler,
        }
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let p = &self.params;
        let manifest = Manifest {
            hyperparams: self.hp.clone(),
            noise_net: p.actor.spec.clone(),
            critic_sizes: p.critics[0].layout.sizes.clone(),
            codec: self.codec.clone(),
            scaler: p.scaler,
        };
        let mut ck = Checkpoint::new("diffcarl", &manifest)?;
        let prefixed = |net: &NoiseNet, prefix: &str| {
            net.tensors()
                .into_iter()
                .map(|(n, s, r)| (format!("{prefix}/{n}"), s, r))
                .collect::<Vec<_>>()
        };
        ck.push_tensors(prefixed(&p.actor, "actor"), &p.actor.params);
        ck.push_tensors(
            prefixed(&p.target_actor, "target_actor"),
            &p.target_actor.params,
        );
        for (i, c) in p.critics.iter().enumerate() {
            ck.push_layout(&format!("critic{}", i + 1), &c.layout, &c.params);
        }
        for (i, c) in p.target_critics.iter().enumerate() {
            ck.push_layout(&format!("target_critic{}", i + 1), &c.layout, &c.params);
        }
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.kind != "diffcarl" {
            return Err(Error::Config(format!(
                "expected a diffcarl checkpoint, got {}",
                ck.kind
            )));
        }
        let m: Manifest = ck.manifest()?;
        let spec = m.noise_net.clone();
        let template = NoiseNet::from_params(spec.clone(), vec![0.0; net_len(&spec)])?;
        let read_net = |prefix: &str| -> Result<NoiseNet> {
            let tensors = template
                .tensors()
                .into_iter()
                .map(|(n, s, r)| (format!("{prefix}/{n}"), s, r))
                .collect();
            NoiseNet::from_params(
                spec.clone(),
                ck.read_tensors(tensors, template.num_params())?,
            )
        };
        let layout = MlpLayout::new(
            m.critic_sizes.clone(),
            vec![Activation::Mish, Activation::Mish, Activation::Identity],
        );
        let read_critic = |prefix: String| -> Result<Mlp> {
            Ok(Mlp {
                layout: layout.clone(),
                params: ck.read_layout(&prefix, &layout)?,
            })
        };
        let params = AgentParams {
            actor: read_net("actor")?,
            target_actor: read_net("target_actor")?,
            critics: [
                read_critic("critic1".into())?,
                read_critic("critic2".into())?,
            ],
            target_critics: [
                read_critic("target_critic1".into())?,
                read_critic("target_critic2".into())?,
            ],
            scaler: m.scaler,
        };
        Self::from_params(m.hyperparams, m.codec, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint()?.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

fn net_len(spec: &NoiseNetSpec) -> usize {
    spec.time_layout().num_params() + spec.trunk_layout().num_params()
}

impl Learner for DiffCarl {
    type Action = usize;

    fn act(&self, obs: &[Obs], greedy: bool, rng: &mut Rng, _progress: f64) -> Result<Vec<usize>> {
        let probs = if greedy {
            self.mean_policy(obs, rng)?
        } else {
            self.policy(obs_matrix(obs.iter()).view(), false, rng)?
        };
        probs
            .axis_iter(Axis(0))
            .map(|p| select_action(p.as_slice().expect("row"), greedy, rng))
            .collect()
    }

    fn setpoint(&self, action: usize, mg: &MicrogridConfig, load_kw: f64) -> Result<Setpoint> {
        self.codec.decode(action, mg, load_kw)
    }

    fn update(&mut self, batch: &[&Transition<usize>], rng: &mut Rng) -> Result<UpdateStats> {
        let critic_loss = self.critic_update(batch, rng)?;
        let actor_loss = self.actor_update(batch, rng)?;
        self.soft_update()?;
        Ok(UpdateStats {
            critic_loss,
            actor_loss,
        })
    }
}

/// Trains DiffCarl on `data`; returns the agent and its training log.
pub fn train(
    data: &TrainingData,
    hp: &Hyperparams,
    codec: &ActionCodec,
    seed: u64,
) -> Result<(DiffCarl, TrainingLog)> {
    let mut agent = DiffCarl::new(hp.clone(), codec.clone(), data.scaler, seed)?;
    let log = train_loop(&mut agent, data, &hp.cadence(), seed)?;
    Ok((agent, log))
}
