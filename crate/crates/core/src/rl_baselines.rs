//! Reference learners on the same environment, buffer and cadence as
//! DiffCarl: DQN and discrete SAC on the shared action codec, and DDPG on
//! a continuous per-microgrid action in `[-1, 1]^3`.

use std::path::Path;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::agent::{
    critic_layout, critic_objective, elementwise_min, obs_matrix, select_action,
    soft_policy_gradient, Hyperparams, LOG_FLOOR,
};
use crate::checkpoint::Checkpoint;
use crate::codec::ActionCodec;
use crate::env::{Controller, MicrogridConfig, Setpoint, OBS_PER_MG};
use crate::error::{Error, Result};
use crate::nn::{soft_update, softmax_rows, Activation, Adam, Mlp, MlpLayout};
use crate::rng::{self, Rng};
use crate::training::{
    train_loop, GreedyController, Learner, ObsScaler, TrainingData, TrainingLog, Transition,
    UpdateStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineAlgo {
    Dqn,
    Sac,
    Ddpg,
}

impl BaselineAlgo {
    pub const ALL: [BaselineAlgo; 3] = [Self::Dqn, Self::Sac, Self::Ddpg];

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "dqn" => Ok(Self::Dqn),
            "sac" => Ok(Self::Sac),
            "ddpg" => Ok(Self::Ddpg),
            other => Err(Error::Config(format!("unknown baseline {other:?}"))),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Dqn => "dqn",
            Self::Sac => "sac",
            Self::Ddpg => "ddpg",
        }
    }
}

/// Algorithm-specific settings. Learning rates, discount, soft-update rate
/// and the training cadence come from the shared [`Hyperparams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    pub algo: BaselineAlgo,
    pub hidden: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of the collection budget over which epsilon decays linearly.
    pub epsilon_decay_frac: f64,
    pub sac_alpha: f64,
    pub ddpg_noise_std: f64,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        Self {
            algo: BaselineAlgo::Dqn,
            hidden: 128,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_frac: 0.3,
            sac_alpha: 0.05,
            ddpg_noise_std: 0.2,
        }
    }
}

impl BaselineSpec {
    pub fn new(algo: BaselineAlgo) -> Self {
        Self {
            algo,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        if !unit(self.epsilon_start)
            || !unit(self.epsilon_end)
            || self.epsilon_end > self.epsilon_start
        {
            return Err(Error::Config(
                "epsilon schedule must satisfy 0 <= end <= start <= 1".into(),
            ));
        }
        if !(self.epsilon_decay_frac > 0.0 && self.epsilon_decay_frac <= 1.0) {
            return Err(Error::Config(
                "epsilon_decay_frac must lie in (0, 1]".into(),
            ));
        }
        if !(self.sac_alpha >= 0.0 && self.ddpg_noise_std >= 0.0) {
            return Err(Error::Config(
                "sac_alpha and ddpg_noise_std must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Exploration rate after `progress` of the collection budget.
    pub fn epsilon(&self, progress: f64) -> f64 {
        let t = (progress / self.epsilon_decay_frac).clamp(0.0, 1.0);
        self.epsilon_start + t * (self.epsilon_end - self.epsilon_start)
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn new_adam(net: &Mlp, lr: f64, hp: &Hyperparams) -> Adam {
    Adam::new(net.params.len(), lr, hp.weight_decay)
}

fn mse_step(
    net: &mut Mlp,
    opt: &mut Adam,
    obs: ArrayView2<'_, f64>,
    actions: &[usize],
    y: &[f64],
) -> Result<f64> {
    let (loss, grad) = critic_objective(net, obs, actions, y)?;
    opt.step(&mut net.params, &grad);
    Ok(loss)
}

/// Deep Q-network with a soft-updated target and linearly decaying
/// epsilon-greedy exploration.
#[derive(Debug, Clone)]
pub struct Dqn {
    pub spec: BaselineSpec,
    pub hp: Hyperparams,
    pub codec: ActionCodec,
    pub scaler: ObsScaler,
    pub q: Mlp,
    pub target_q: Mlp,
    opt: Adam,
}

impl Dqn {
    pub fn new(
        spec: BaselineSpec,
        hp: Hyperparams,
        codec: ActionCodec,
        scaler: ObsScaler,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = rng::seeded(rng::derive(seed, 0));
        let q = Mlp::new(
            critic_layout(OBS_PER_MG, spec.hidden, codec.len()),
            &mut rng,
        );
        Self::from_nets(spec, hp, codec, scaler, q.clone(), q)
    }

    fn from_nets(
        spec: BaselineSpec,
        hp: Hyperparams,
        codec: ActionCodec,
        scaler: ObsScaler,
        q: Mlp,
        target_q: Mlp,
    ) -> Result<Self> {
        spec.validate()?;
        hp.validate()?;
        codec.validate()?;
        let opt = new_adam(&q, hp.critic_lr, &hp);
        Ok(Self {
            spec,
            hp,
            codec,
            scaler,
            q,
            target_q,
            opt,
        })
    }

    pub fn targets(&self, batch: &[&Transition<usize>]) -> Result<Vec<f64>> {
        let next = obs_matrix(batch.iter().map(|t| &t.next_obs));
        let q = self.target_q.forward(next.view())?;
        Ok(batch
            .iter()
            .zip(q.rows())
            .map(|(t, row)| {
                let best = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                t.reward + if t.done { 0.0 } else { self.hp.gamma * best }
            })
            .collect())
    }
}

impl Learner for Dqn {
    type Action = usize;

    fn act(
        &self,
        obs: &[[f64; OBS_PER_MG]],
        greedy: bool,
        rng: &mut Rng,
        progress: f64,
    ) -> Result<Vec<usize>> {
        let q = self.q.forward(obs_matrix(obs.iter()).view())?;
        let eps = self.spec.epsilon(progress);
        Ok(q.rows()
            .into_iter()
            .map(|row| {
                if !greedy && rng.gen::<f64>() < eps {
                    rng.gen_range(0..self.codec.len())
                } else {
                    argmax(row.as_slice().expect("row"))
                }
            })
            .collect())
    }

    fn setpoint(&self, action: usize, mg: &MicrogridConfig, load_kw: f64) -> Result<Setpoint> {
        self.codec.decode(action, mg, load_kw)
    }

    fn update(&mut self, batch: &[&Transition<usize>], _rng: &mut Rng) -> Result<UpdateStats> {
        let y = self.targets(batch)?;
        let obs = obs_matrix(batch.iter().map(|t| &t.obs));
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let critic_loss = mse_step(&mut self.q, &mut self.opt, obs.view(), &actions, &y)?;
        soft_update(&mut self.target_q.params, &self.q.params, self.hp.tau)?;
        Ok(UpdateStats {
            critic_loss,
            actor_loss: 0.0,
        })
    }
}

/// Discrete soft actor-critic: a categorical softmax actor with twin
/// critics. Next-state probabilities come from the target actor.
#[derive(Debug, Clone)]
pub struct Sac {
    pub spec: BaselineSpec,
    pub hp: Hyperparams,
    pub codec: ActionCodec,
    pub scaler: ObsScaler,
    pub actor: Mlp,
    pub target_actor: Mlp,
    pub critics: [Mlp; 2],
    pub target_critics: [Mlp; 2],
    actor_opt: Adam,
    critic_opts: [Adam; 2],
}

impl Sac {
    pub fn new(
        spec: BaselineSpec,
        hp: Hyperparams,
        codec: ActionCodec,
        scaler: ObsScaler,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = rng::seeded(rng::derive(seed, 0));
        let layout = critic_layout(OBS_PER_MG, spec.hidden, codec.len());
        let actor = Mlp::new(layout.clone(), &mut rng);
        let critics = [
            Mlp::new(layout.clone(), &mut rng),
            Mlp::new(layout, &mut rng),
        ];
        Self::from_nets(
            spec,
            hp,
            codec,
            scaler,
            [actor.clone(), actor],
            [critics.clone(), critics],
        )
    }

    fn from_nets(
        spec: BaselineSpec,
        hp: Hyperparams,
        codec: ActionCodec,
        scaler: ObsScaler,
        [actor, target_actor]: [Mlp; 2],
        [critics, target_critics]: [[Mlp; 2]; 2],
    ) -> Result<Self> {
        spec.validate()?;
        hp.validate()?;
        codec.validate()?;
        let actor_opt = new_adam(&actor, hp.actor_lr, &hp);
        let critic_opts = [
            new_adam(&critics[0], hp.critic_lr, &hp),
            new_adam(&critics[1], hp.critic_lr, &hp),
        ];
        Ok(Self {
            spec,
            hp,
            codec,
            scaler,
            actor,
            target_actor,
            critics,
            target_critics,
            actor_opt,
            critic_opts,
        })
    }

    pub fn policy(&self, states: ArrayView2<'_, f64>, target: bool) -> Result<Array2<f64>> {
        let net = if target {
            &self.target_actor
        } else {
            &self.actor
        };
        Ok(softmax_rows(&net.forward(states)?, 1.0))
    }

    /// Soft expected next values `r + gamma * sum_a p(a) (min Q(a) - alpha ln p(a))`.
    pub fn targets(&self, batch: &[&Transition<usize>]) -> Result<Vec<f64>> {
        let next = obs_matrix(batch.iter().map(|t| &t.next_obs));
        let probs = self.policy(next.view(), true)?;
        let q = elementwise_min(
            &self.target_critics[0].forward(next.view())?,
            &self.target_critics[1].forward(next.view())?,
        );
        Ok(batch
            .iter()
            .zip(probs.rows().into_iter().zip(q.rows()))
            .map(|(t, (p, q))| {
                let v: f64 = p
                    .iter()
                    .zip(q.iter())
                    .map(|(&pj, &qj)| pj * (qj - self.spec.sac_alpha * (pj + LOG_FLOOR).ln()))
                    .sum();
                t.reward + if t.done { 0.0 } else { self.hp.gamma * v }
            })
            .collect())
    }
}

impl Learner for Sac {
    type Action = usize;

    fn act(
        &self,
        obs: &[[f64; OBS_PER_MG]],
        greedy: bool,
        rng: &mut Rng,
        _progress: f64,
    ) -> Result<Vec<usize>> {
        let probs = self.policy(obs_matrix(obs.iter()).view(), false)?;
        probs
            .rows()
            .into_iter()
            .map(|p| select_action(p.as_slice().expect("row"), greedy, rng))
            .collect()
    }

    fn setpoint(&self, action: usize, mg: &MicrogridConfig, load_kw: f64) -> Result<Setpoint> {
        self.codec.decode(action, mg, load_kw)
    }

    fn update(&mut self, batch: &[&Transition<usize>], _rng: &mut Rng) -> Result<UpdateStats> {
        let y = self.targets(batch)?;
        let obs = obs_matrix(batch.iter().map(|t| &t.obs));
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let mut critic_loss = 0.0;
        for i in 0..2 {
            critic_loss += 0.5
                * mse_step(
                    &mut self.critics[i],
                    &mut self.critic_opts[i],
                    obs.view(),
                    &actions,
                    &y,
                )?;
        }
        let q = elementwise_min(
            &self.critics[0].forward(obs.view())?,
            &self.critics[1].forward(obs.view())?,
        );
        let (logits, cache) = self.actor.forward_cached(obs.view())?;
        let (actor_loss, d_logits) = soft_policy_gradient(&logits, &q, self.spec.sac_alpha, 1.0);
        let mut grad = vec![0.0; self.actor.params.len()];
        self.actor.backward(&cache, d_logits, &mut grad);
        self.actor_opt.step(&mut self.actor.params, &grad);
        soft_update(
            &mut self.target_actor.params,
            &self.actor.params,
            self.hp.tau,
        )?;
        for i in 0..2 {
            soft_update(
                &mut self.target_critics[i].params,
                &self.critics[i].params,
                self.hp.tau,
            )?;
        }
        Ok(UpdateStats {
            critic_loss,
            actor_loss,
        })
    }
}

/// Continuous per-microgrid action: ESS, CDG and shedding commands in
/// `[-1, 1]`, each mapped linearly onto its device range.
pub type ContinuousAction = [f64; 3];

pub fn continuous_setpoint(a: &ContinuousAction, mg: &MicrogridConfig, load_kw: f64) -> Setpoint {
    let frac = |u: f64| 0.5 * (u.clamp(-1.0, 1.0) + 1.0);
    let ess = &mg.ess;
    let cdg = &mg.cdg;
    Setpoint {
        p_ess_kw: -ess.p_ch_max_kw + frac(a[0]) * (ess.p_ch_max_kw + ess.p_dis_max_kw),
        p_cdg_kw: cdg.p_min_kw + frac(a[1]) * (cdg.p_max_kw - cdg.p_min_kw),
        p_ls_kw: frac(a[2]) * mg.shed_max_frac * load_kw.max(0.0),
    }
}

fn ddpg_actor_layout(hidden: usize) -> MlpLayout {
    MlpLayout::new(
        vec![OBS_PER_MG, hidden, hidden, 3],
        vec![Activation::Mish, Activation::Mish, Activation::Tanh],
    )
}

fn ddpg_critic_layout(hidden: usize) -> MlpLayout {
    critic_layout(OBS_PER_MG + 3, hidden, 1)
}

/// Deterministic actor-critic with Gaussian exploration noise.
#[derive(Debug, Clone)]
pub struct Ddpg {
    pub spec: BaselineSpec,
    pub hp: Hyperparams,
    pub scaler: ObsScaler,
    pub actor: Mlp,
    pub target_actor: Mlp,
    pub critic: Mlp,
    pub target_critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl Ddpg {
    pub fn new(spec: BaselineSpec, hp: Hyperparams, scaler: ObsScaler, seed: u64) -> Result<Self> {
        let mut rng = rng::seeded(rng::derive(seed, 0));
        let actor = Mlp::new(ddpg_actor_layout(spec.hidden), &mut rng);
        let critic = Mlp::new(ddpg_critic_layout(spec.hidden), &mut rng);
        Self::from_nets(
            spec,
            hp,
            scaler,
            [actor.clone(), actor],
            [critic.clone(), critic],
        )
    }

    fn from_nets(
        spec: BaselineSpec,
        hp: Hyperparams,
        scaler: ObsScaler,
        [actor, target_actor]: [Mlp; 2],
        [critic, target_critic]: [Mlp; 2],
    ) -> Result<Self> {
        spec.validate()?;
        hp.validate()?;
        let actor_opt = new_adam(&actor, hp.actor_lr, &hp);
        let critic_opt = new_adam(&critic, hp.critic_lr, &hp);
        Ok(Self {
            spec,
            hp,
            scaler,
            actor,
            target_actor,
            critic,
            target_critic,
            actor_opt,
            critic_opt,
        })
    }

    fn joint(obs: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
        concatenate(Axis(1), &[obs.view(), actions.view()]).expect("matching rows")
    }
}

impl Learner for Ddpg {
    type Action = ContinuousAction;

    fn act(
        &self,
        obs: &[[f64; OBS_PER_MG]],
        greedy: bool,
        rng: &mut Rng,
        _progress: f64,
    ) -> Result<Vec<ContinuousAction>> {
        let a = self.actor.forward(obs_matrix(obs.iter()).view())?;
        let noise = Normal::new(0.0, self.spec.ddpg_noise_std.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(a.rows()
            .into_iter()
            .map(|row| {
                let mut out = [row[0], row[1], row[2]];
                if !greedy && self.spec.ddpg_noise_std > 0.0 {
                    for v in &mut out {
                        *v = (*v + noise.sample(rng)).clamp(-1.0, 1.0);
                    }
                }
                out
            })
            .collect())
    }

    fn setpoint(
        &self,
        action: ContinuousAction,
        mg: &MicrogridConfig,
        load_kw: f64,
    ) -> Result<Setpoint> {
        Ok(continuous_setpoint(&action, mg, load_kw))
    }

    fn update(
        &mut self,
        batch: &[&Transition<ContinuousAction>],
        _rng: &mut Rng,
    ) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::pre("empty batch"));
        }
        let n = batch.len();
        let obs = obs_matrix(batch.iter().map(|t| &t.obs));
        let next = obs_matrix(batch.iter().map(|t| &t.next_obs));
        let taken = Array2::from_shape_fn((n, 3), |(i, j)| batch[i].action[j]);
        let next_a = self.target_actor.forward(next.view())?;
        let q_next = self
            .target_critic
            .forward(Self::joint(&next, &next_a).view())?;
        let y: Vec<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.reward
                    + if t.done {
                        0.0
                    } else {
                        self.hp.gamma * q_next[[i, 0]]
                    }
            })
            .collect();
        let critic_loss = mse_step(
            &mut self.critic,
            &mut self.critic_opt,
            Self::joint(&obs, &taken).view(),
            &vec![0; n],
            &y,
        )?;

        let (a, actor_cache) = self.actor.forward_cached(obs.view())?;
        let (q, critic_cache) = self.critic.forward_cached(Self::joint(&obs, &a).view())?;
        let actor_loss = -q.mean().expect("non-empty");
        let mut scratch = vec![0.0; self.critic.params.len()];
        let d_in = self.critic.backward(
            &critic_cache,
            Array2::from_elem((n, 1), -1.0 / n as f64),
            &mut scratch,
        );
        let d_a = d_in.slice(s![.., OBS_PER_MG..]).to_owned();
        let mut grad = vec![0.0; self.actor.params.len()];
        self.actor.backward(&actor_cache, d_a, &mut grad);
        self.actor_opt.step(&mut self.actor.params, &grad);

        soft_update(
            &mut self.target_actor.params,
            &self.actor.params,
            self.hp.tau,
        )?;
        soft_update(
            &mut self.target_critic.params,
            &self.critic.params,
            self.hp.tau,
        )?;
        Ok(UpdateStats {
            critic_loss,
            actor_loss,
        })
    }
}

/// A trained baseline of any kind.
#[derive(Debug, Clone)]
pub enum BaselineAgent {
    Dqn(Dqn),
    Sac(Sac),
    Ddpg(Ddpg),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    spec: BaselineSpec,
    hyperparams: Hyperparams,
    codec: ActionCodec,
    scaler: ObsScaler,
}

impl BaselineAgent {
    pub fn new(
        spec: &BaselineSpec,
        hp: &Hyperparams,
        codec: &ActionCodec,
        scaler: ObsScaler,
        seed: u64,
    ) -> Result<Self> {
        let (spec, hp, codec) = (spec.clone(), hp.clone(), codec.clone());
        Ok(match spec.algo {
            BaselineAlgo::Dqn => Self::Dqn(Dqn::new(spec, hp, codec, scaler, seed)?),
            BaselineAlgo::Sac => Self::Sac(Sac::new(spec, hp, codec, scaler, seed)?),
            BaselineAlgo::Ddpg => Self::Ddpg(Ddpg::new(spec, hp, scaler, seed)?),
        })
    }

    pub fn algo(&self) -> BaselineAlgo {
        match self {
            Self::Dqn(_) => BaselineAlgo::Dqn,
            Self::Sac(_) => BaselineAlgo::Sac,
            Self::Ddpg(_) => BaselineAlgo::Ddpg,
        }
    }

    fn scaler(&self) -> ObsScaler {
        match self {
            Self::Dqn(a) => a.scaler,
            Self::Sac(a) => a.scaler,
            Self::Ddpg(a) => a.scaler,
        }
    }

    /// Greedy controller over the trained networks.
    pub fn controller(&self) -> Box<dyn Controller + '_> {
        let scaler = self.scaler();
        match self {
            Self::Dqn(a) => Box::new(GreedyController { learner: a, scaler }),
            Self::Sac(a) => Box::new(GreedyController { learner: a, scaler }),
            Self::Ddpg(a) => Box::new(GreedyController { learner: a, scaler }),
        }
    }

    fn named_nets(&self) -> Vec<(&'static str, &Mlp)> {
        match self {
            Self::Dqn(a) => vec![("q", &a.q), ("target_q", &a.target_q)],
            Self::Sac(a) => vec![
                ("actor", &a.actor),
                ("target_actor", &a.target_actor),
                ("critic1", &a.critics[0]),
                ("critic2", &a.critics[1]),
                ("target_critic1", &a.target_critics[0]),
                ("target_critic2", &a.target_critics[1]),
            ],
            Self::Ddpg(a) => vec![
                ("actor", &a.actor),
                ("target_actor", &a.target_actor),
                ("critic", &a.critic),
                ("target_critic", &a.target_critic),
            ],
        }
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let manifest = match self {
            Self::Dqn(a) => Manifest {
                spec: a.spec.clone(),
                hyperparams: a.hp.clone(),
                codec: a.codec.clone(),
                scaler: a.scaler,
            },
            Self::Sac(a) => Manifest {
                spec: a.spec.clone(),
                hyperparams: a.hp.clone(),
                codec: a.codec.clone(),
                scaler: a.scaler,
            },
            Self::Ddpg(a) => Manifest {
                spec: a.spec.clone(),
                hyperparams: a.hp.clone(),
                codec: ActionCodec::default(),
                scaler: a.scaler,
            },
        };
        let mut ck = Checkpoint::new(self.algo().tag(), &manifest)?;
        for (name, net) in self.named_nets() {
            ck.push_layout(name, &net.layout, &net.params);
        }
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let algo = BaselineAlgo::parse(&ck.kind)?;
        let m: Manifest = ck.manifest()?;
        if m.spec.algo != algo {
            return Err(Error::Config(
                "checkpoint kind disagrees with its manifest".into(),
            ));
        }
        let read = |name: &str, layout: &MlpLayout| -> Result<Mlp> {
            Ok(Mlp {
                layout: layout.clone(),
                params: ck.read_layout(name, layout)?,
            })
        };
        let h = m.spec.hidden;
        Ok(match algo {
            BaselineAlgo::Dqn => {
                let l = critic_layout(OBS_PER_MG, h, m.codec.len());
                Self::Dqn(Dqn::from_nets(
                    m.spec,
                    m.hyperparams,
                    m.codec,
                    m.scaler,
                    read("q", &l)?,
                    read("target_q", &l)?,
                )?)
            }
            BaselineAlgo::Sac => {
                let l = critic_layout(OBS_PER_MG, h, m.codec.len());
                Self::Sac(Sac::from_nets(
                    m.spec,
                    m.hyperparams,
                    m.codec,
                    m.scaler,
                    [read("actor", &l)?, read("target_actor", &l)?],
                    [
                        [read("critic1", &l)?, read("critic2", &l)?],
                        [read("target_critic1", &l)?, read("target_critic2", &l)?],
                    ],
                )?)
            }
            BaselineAlgo::Ddpg => {
                let (la, lc) = (ddpg_actor_layout(h), ddpg_critic_layout(h));
                Self::Ddpg(Ddpg::from_nets(
                    m.spec,
                    m.hyperparams,
                    m.scaler,
                    [read("actor", &la)?, read("target_actor", &la)?],
                    [read("critic", &lc)?, read("target_critic", &lc)?],
                )?)
            }
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint()?.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

/// Trains a baseline with the cadence, discount, soft-update rate, buffer
/// and batch settings of `hp`.
pub fn train_baseline(
    data: &TrainingData,
    spec: &BaselineSpec,
    hp: &Hyperparams,
    codec: &ActionCodec,
    seed: u64,
) -> Result<(BaselineAgent, TrainingLog)> {
    let mut agent = BaselineAgent::new(spec, hp, codec, data.scaler, seed)?;
    let cadence = hp.cadence();
    let log = match &mut agent {
        BaselineAgent::Dqn(a) => train_loop(a, data, &cadence, seed)?,
        BaselineAgent::Sac(a) => train_loop(a, data, &cadence, seed)?,
        BaselineAgent::Ddpg(a) => train_loop(a, data, &cadence, seed)?,
    };
    Ok((agent, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::default_microgrid;

    fn toy_codec() -> ActionCodec {
        ActionCodec {
            ess_levels: vec![0.0, 1.0],
            cdg_levels: vec![0.0],
            ls_levels: vec![0.0],
        }
    }

    #[test]
    fn epsilon_decays_then_holds() {
        let s = BaselineSpec::default();
        assert_eq!(s.epsilon(0.0), 1.0);
        assert!((s.epsilon(0.15) - 0.525).abs() < 1e-12);
        assert!((s.epsilon(0.3) - 0.05).abs() < 1e-12);
        assert!((s.epsilon(0.9) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn dqn_learns_two_state_bandit() {
        let hp = Hyperparams {
            hidden: 16,
            ..Hyperparams::desk()
        };
        let spec = BaselineSpec {
            hidden: 16,
            ..BaselineSpec::default()
        };
        let mut dqn = Dqn::new(spec, hp, toy_codec(), ObsScaler::identity(), 3).unwrap();
        let states = [[1.0, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]];
        let mut rng = rng::seeded(11);
        let mut buffer = Vec::new();
        for step in 0..1000 {
            let s = step % 2;
            let a = dqn
                .act(&[states[s]], false, &mut rng, step as f64 / 1000.0)
                .unwrap()[0];
            let reward = if a == s { 1.0 } else { 0.0 };
            buffer.push(Transition {
                obs: states[s],
                action: a,
                reward,
                next_obs: states[s],
                done: true,
            });
            let start = buffer.len().saturating_sub(32);
            let batch: Vec<&Transition<usize>> = buffer[start..].iter().collect();
            dqn.update(&batch, &mut rng).unwrap();
        }
        let greedy = dqn.act(&states, true, &mut rng, 1.0).unwrap();
        assert_eq!(greedy, vec![0, 1]);
    }

    #[test]
    fn continuous_extremes_hit_device_limits() {
        let mg = default_microgrid(0);
        let lo = continuous_setpoint(&[-1.0, -1.0, -1.0], &mg, 200.0);
        let hi = continuous_setpoint(&[1.0, 1.0, 1.0], &mg, 200.0);
        assert_eq!(lo.p_ess_kw, -mg.ess.p_ch_max_kw);
        assert_eq!(hi.p_ess_kw, mg.ess.p_dis_max_kw);
        assert_eq!(
            (lo.p_cdg_kw, hi.p_cdg_kw),
            (mg.cdg.p_min_kw, mg.cdg.p_max_kw)
        );
        assert_eq!((lo.p_ls_kw, hi.p_ls_kw), (0.0, mg.shed_max_frac * 200.0));
    }

    #[test]
    fn checkpoints_round_trip() {
        let hp = Hyperparams {
            hidden: 8,
            ..Hyperparams::desk()
        };
        for algo in BaselineAlgo::ALL {
            let spec = BaselineSpec {
                hidden: 8,
                ..BaselineSpec::new(algo)
            };
            let a = BaselineAgent::new(
                &spec,
                &hp,
                &ActionCodec::default(),
                ObsScaler::identity(),
                1,
            )
            .unwrap();
            let b = BaselineAgent::from_checkpoint(&a.to_checkpoint().unwrap()).unwrap();
            assert_eq!(a.to_checkpoint().unwrap(), b.to_checkpoint().unwrap());
        }
    }
}
