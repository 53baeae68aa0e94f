//! Episode collection, update cadence and greedy evaluation shared by every
//! learning agent.

use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::{
    self, observe_microgrid, ActionSetpoints, Controller, Decision, EnvState, EpisodeMetrics,
    MgcConfig, MicrogridConfig, Setpoint, OBS_PER_MG,
};
use crate::error::{Error, Result};
use crate::profiles::DaySet;
use crate::replay::ReplayBuffer;
use crate::rng::{self, Rng};

pub type Obs = [f64; OBS_PER_MG];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<A> {
    pub obs: Obs,
    pub action: A,
    pub reward: f64,
    pub next_obs: Obs,
    pub done: bool,
}

/// Affine observation normaliser, `(x - mean) / std` per feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsScaler {
    pub mean: Obs,
    pub std: Obs,
}

impl ObsScaler {
    pub fn identity() -> Self {
        Self {
            mean: [0.0; OBS_PER_MG],
            std: [1.0; OBS_PER_MG],
        }
    }

    /// Fits load, renewable and price statistics over every hour and
    /// microgrid of `days`. SoC is mapped from [0, 1] to roughly unit scale.
    pub fn fit(days: &DaySet, config: &MgcConfig) -> Self {
        let mut sums = [0.0; 3];
        let mut sq = [0.0; 3];
        let mut n = 0.0;
        for d in days.iter() {
            for mg in &config.microgrids {
                for h in 0..d[0].len() {
                    let i = mg.inputs(d, h);
                    for (j, v) in [i.load_kw, i.rdg_kw, i.price].into_iter().enumerate() {
                        sums[j] += v;
                        sq[j] += v * v;
                    }
                    n += 1.0;
                }
            }
        }
        let mut s = Self::identity();
        s.mean[3] = 0.5;
        s.std[3] = 0.5;
        if n > 0.0 {
            for j in 0..3 {
                let m = sums[j] / n;
                let var = (sq[j] / n - m * m).max(0.0);
                s.mean[j] = m;
                s.std[j] = if var.sqrt() > 1e-9 { var.sqrt() } else { 1.0 };
            }
        }
        s
    }

    pub fn apply(&self, raw: &Obs) -> Obs {
        let mut out = [0.0; OBS_PER_MG];
        for j in 0..OBS_PER_MG {
            out[j] = (raw[j] - self.mean[j]) / self.std[j];
        }
        out
    }
}

/// Episode, collection and update counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cadence {
    pub episodes: usize,
    /// Environment steps collected per episode.
    pub steps_per_episode: usize,
    /// Gradient updates run after each episode's collection.
    pub updates_per_episode: usize,
    pub eval_interval: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
}

impl Cadence {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_episode == 0 || self.eval_interval == 0 || self.updates_per_episode == 0 {
            return Err(Error::Config(
                "steps_per_episode, updates_per_episode and eval_interval must be positive".into(),
            ));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err(Error::Config(format!(
                "batch size {} must lie in 1..={}",
                self.batch_size, self.buffer_capacity
            )));
        }
        Ok(())
    }
}

/// Environment and day sets for training.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub config: MgcConfig,
    pub train: DaySet,
    /// Held-out days for the learning curve.
    pub eval: DaySet,
    pub scaler: ObsScaler,
}

impl TrainingData {
    pub fn new(config: MgcConfig, train: DaySet, eval: DaySet) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::pre("training needs at least one day"));
        }
        let scaler = ObsScaler::fit(&train, &config);
        Ok(Self {
            config,
            train,
            eval,
            scaler,
        })
    }
}

/// A per-microgrid policy trained on shared transitions.
pub trait Learner {
    type Action: Copy;

    /// One action per scaled observation. `progress` is the fraction of
    /// the training budget already spent.
    fn act(
        &self,
        obs: &[Obs],
        greedy: bool,
        rng: &mut Rng,
        progress: f64,
    ) -> Result<Vec<Self::Action>>;

    fn setpoint(
        &self,
        action: Self::Action,
        mg: &MicrogridConfig,
        load_kw: f64,
    ) -> Result<Setpoint>;

    fn update(&mut self, batch: &[&Transition<Self::Action>], rng: &mut Rng)
        -> Result<UpdateStats>;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

/// One learning-curve point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub episode: usize,
    pub steps: usize,
    pub mean_test_reward: f64,
    pub mean_test_cost: f64,
    pub mean_test_carbon: f64,
}

pub fn write_training_log<W: Write>(curve: &[EvalPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "episode",
        "steps",
        "mean_test_reward",
        "mean_test_cost",
        "mean_test_carbon",
    ])?;
    for p in curve {
        w.write_record([
            p.episode.to_string(),
            p.steps.to_string(),
            format!("{:.6}", p.mean_test_reward),
            format!("{:.6}", p.mean_test_cost),
            format!("{:.6}", p.mean_test_carbon),
        ])?;
    }
    w.flush().map_err(|e| Error::io("training log", e))?;
    Ok(())
}

/// Greedy controller over a learner.
pub struct GreedyController<'a, L: Learner> {
    pub learner: &'a L,
    pub scaler: ObsScaler,
}

impl<L: Learner> Controller for GreedyController<'_, L> {
    fn decide(&mut self, ctx: &Decision<'_>, rng: &mut Rng) -> Result<ActionSetpoints> {
        let obs: Vec<Obs> = ctx
            .observation
            .chunks_exact(OBS_PER_MG)
            .map(|c| self.scaler.apply(&c.try_into().expect("chunk size")))
            .collect();
        let actions = self.learner.act(&obs, true, rng, 1.0)?;
        let microgrids = actions
            .into_iter()
            .zip(&ctx.config.microgrids)
            .zip(ctx.observation.chunks_exact(OBS_PER_MG))
            .map(|((a, mg), raw)| self.learner.setpoint(a, mg, raw[0]))
            .collect::<Result<_>>()?;
        Ok(ActionSetpoints { microgrids })
    }
}

/// Runs `controller` on every day; day `d` uses seed `derive(seed, d)`.
pub fn evaluate_days<C: Controller + ?Sized>(
    controller: &mut C,
    days: &DaySet,
    config: &MgcConfig,
    seed: u64,
) -> Result<Vec<EpisodeMetrics>> {
    days.iter()
        .enumerate()
        .map(|(d, day)| env::run_episode(controller, day, config, rng::derive(seed, d as u64)))
        .collect()
}

fn mean_of(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

struct Collector {
    day: usize,
    state: EnvState,
}

impl Collector {
    fn start(data: &TrainingData, rng: &mut Rng) -> Self {
        Self {
            day: rng.gen_range(0..data.train.len()),
            state: EnvState::initial(&data.config),
        }
    }

    fn step<L: Learner>(
        &mut self,
        learner: &L,
        data: &TrainingData,
        rng: &mut Rng,
        progress: f64,
        buffer: &mut ReplayBuffer<Transition<L::Action>>,
    ) -> Result<()> {
        let day = data.train.day(self.day);
        let cfg = &data.config;
        let hour = self.state.hour;
        let inputs: Vec<_> = cfg
            .microgrids
            .iter()
            .map(|mg| mg.inputs(day, hour))
            .collect();
        let raw: Vec<Obs> = cfg
            .microgrids
            .iter()
            .zip(&self.state.microgrids)
            .zip(&inputs)
            .map(|((mg, st), inp)| observe_microgrid(st, inp, mg))
            .collect();
        let obs: Vec<Obs> = raw.iter().map(|o| data.scaler.apply(o)).collect();
        let actions = learner.act(&obs, false, rng, progress)?;
        let microgrids = actions
            .iter()
            .zip(&cfg.microgrids)
            .zip(&inputs)
            .map(|((&a, mg), inp)| learner.setpoint(a, mg, inp.load_kw))
            .collect::<Result<_>>()?;
        let r = env::step(&self.state, &ActionSetpoints { microgrids }, day, cfg)?;
        for (m, (&a, o)) in actions.iter().zip(&obs).enumerate() {
            let next: Obs = r.observation[m * OBS_PER_MG..(m + 1) * OBS_PER_MG]
                .try_into()
                .expect("observation width");
            buffer.push(Transition {
                obs: *o,
                action: a,
                reward: r.microgrid_reward(m, cfg),
                next_obs: data.scaler.apply(&next),
                done: r.done,
            });
        }
        if r.done {
            *self = Self::start(data, rng);
        } else {
            self.state = r.next_state;
        }
        Ok(())
    }
}

/// Output of [`train_loop`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub curve: Vec<EvalPoint>,
    pub updates: usize,
    pub last_update: UpdateStats,
}

/// Collects `steps_per_episode` transitions per episode with the stochastic
/// policy, then runs `updates_per_episode` updates once the buffer holds a
/// full batch. Every `eval_interval` episodes the greedy policy is scored on
/// the held-out days.
pub fn train_loop<L: Learner>(
    learner: &mut L,
    data: &TrainingData,
    cadence: &Cadence,
    seed: u64,
) -> Result<TrainingLog> {
    cadence.validate()?;
    let mut collect_rng = rng::seeded(rng::derive(seed, 1));
    let mut update_rng = rng::seeded(rng::derive(seed, 2));
    let eval_seed = rng::derive(seed, 3);
    let mut buffer = ReplayBuffer::new(cadence.buffer_capacity)?;
    let mut collector = Collector::start(data, &mut collect_rng);
    let total = (cadence.episodes * cadence.steps_per_episode).max(1) as f64;
    let mut log = TrainingLog::default();
    let mut steps = 0usize;
    for episode in 1..=cadence.episodes {
        for _ in 0..cadence.steps_per_episode {
            collector.step(
                learner,
                data,
                &mut collect_rng,
                steps as f64 / total,
                &mut buffer,
            )?;
            steps += 1;
        }
        if buffer.len() >= cadence.batch_size {
            for _ in 0..cadence.updates_per_episode {
                let batch = buffer.sample(cadence.batch_size, &mut update_rng)?;
                log.last_update = learner.update(&batch, &mut update_rng)?;
                log.updates += 1;
            }
        }
        if episode % cadence.eval_interval == 0 && !data.eval.is_empty() {
            let mut ctl = GreedyController {
                learner: &*learner,
                scaler: data.scaler,
            };
            let runs = evaluate_days(&mut ctl, &data.eval, &data.config, eval_seed)?;
            log.curve.push(EvalPoint {
                episode,
                steps,
                mean_test_reward: mean_of(runs.iter().map(|r| r.total_reward)),
                mean_test_cost: mean_of(runs.iter().map(|r| r.total_cost)),
                mean_test_carbon: mean_of(runs.iter().map(|r| r.total_carbon_kg)),
            });
        }
    }
    Ok(log)
}
