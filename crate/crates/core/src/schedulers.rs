//! Non-learning baselines: myopic greedy, day-ahead open loop, receding
//! horizon MPC and the full-knowledge dynamic-programming oracle.
//!
//! Costs are separable across microgrids, so every planner works on one
//! microgrid at a time with the shared action codec.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codec::ActionCodec;
use crate::env::{
    self, step_microgrid, ActionSetpoints, Controller, Decision, EpisodeMetrics, MgInputs, MgState,
    MgcConfig, MicrogridConfig,
};
use crate::error::{Error, Result};
use crate::profiles::{Series, TimeSeriesProfile, HOURS_PER_DAY};
use crate::rng::Rng;

/// Multiplicative forecast error whose std grows linearly with lead time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub sigma0: f64,
    pub slope: f64,
    pub seed: u64,
}

impl Default for ForecastModel {
    fn default() -> Self {
        Self {
            sigma0: 0.05,
            slope: (0.20 - 0.05) / 7.0,
            seed: 0,
        }
    }
}

impl ForecastModel {
    pub fn perfect() -> Self {
        Self {
            sigma0: 0.0,
            slope: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 >= 0.0 && self.slope >= 0.0) {
            return Err(Error::Config(
                "forecast sigma0 and slope must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Relative error std at `lead` hours.
    pub fn sigma(&self, lead: usize) -> f64 {
        self.sigma0 + self.slope * lead as f64
    }

    pub fn is_perfect(&self) -> bool {
        self.sigma0 == 0.0 && self.slope == 0.0
    }
}

/// Perturbs every value of `future`; row `i` is treated as lead
/// `first_lead + i`. All series are clamped at zero.
pub fn forecast(
    future: &TimeSeriesProfile,
    first_lead: usize,
    model: &ForecastModel,
    rng: &mut Rng,
) -> Result<TimeSeriesProfile> {
    if first_lead < 1 {
        return Err(Error::pre("forecast lead must be at least one hour"));
    }
    model.validate()?;
    if model.is_perfect() {
        return Ok(future.clone());
    }
    let mut out = future.clone();
    for s in Series::ALL {
        out = out.map_series(s, |i, v| {
            let z: f64 = StandardNormal.sample(rng);
            (v * (1.0 + model.sigma(first_lead + i) * z)).max(0.0)
        });
    }
    Ok(out)
}

/// Like [`forecast`] but only rows `from..to` are perturbed, row `from`
/// at lead 1. Other rows are returned unchanged.
pub fn forecast_window(
    profile: &TimeSeriesProfile,
    from: usize,
    to: usize,
    model: &ForecastModel,
    rng: &mut Rng,
) -> Result<TimeSeriesProfile> {
    if from > to || to > profile.len() {
        return Err(Error::pre(format!(
            "forecast window {from}..{to} outside the profile"
        )));
    }
    model.validate()?;
    if model.is_perfect() {
        return Ok(profile.clone());
    }
    let mut out = profile.clone();
    for s in Series::ALL {
        out = out.map_series(s, |i, v| {
            if (from..to).contains(&i) {
                let z: f64 = StandardNormal.sample(rng);
                (v * (1.0 + model.sigma(i - from + 1) * z)).max(0.0)
            } else {
                v
            }
        });
    }
    Ok(out)
}

/// Index of the action with the lowest one-step cost; ties go to the lower
/// index.
fn best_immediate(
    state: &MgState,
    inputs: &MgInputs,
    mg: &MicrogridConfig,
    config: &MgcConfig,
    codec: &ActionCodec,
) -> Result<usize> {
    let mut best = (0, f64::INFINITY);
    for a in 0..codec.len() {
        let req = codec.decode(a, mg, inputs.load_kw)?;
        let c = step_microgrid(state, req, inputs, mg, config).cost;
        if c < best.1 {
            best = (a, c);
        }
    }
    Ok(best.0)
}

/// Per-microgrid action indices minimising the immediate cost.
pub fn myopic(
    state: &env::EnvState,
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    codec: &ActionCodec,
) -> Result<Vec<usize>> {
    config
        .microgrids
        .iter()
        .zip(&state.microgrids)
        .map(|(mg, st)| best_immediate(st, &mg.inputs(profiles, state.hour), mg, config, codec))
        .collect()
}

fn decode_all(
    codec: &ActionCodec,
    indices: &[usize],
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    hour: usize,
) -> Result<ActionSetpoints> {
    let inputs: Vec<_> = config
        .microgrids
        .iter()
        .map(|mg| mg.inputs(profiles, hour))
        .collect();
    codec.decode_joint(indices, config, &inputs)
}

#[derive(Debug, Clone)]
pub struct MyopicController {
    pub codec: ActionCodec,
}

impl Controller for MyopicController {
    fn decide(&mut self, ctx: &Decision<'_>, _rng: &mut Rng) -> Result<ActionSetpoints> {
        let idx = myopic(ctx.state, ctx.profiles, ctx.config, &self.codec)?;
        decode_all(&self.codec, &idx, ctx.profiles, ctx.config, ctx.hour)
    }
}

/// Discretisation used by the dynamic program. The CDG memory is gridded
/// at the ramp limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpGrid {
    pub soc_levels: usize,
    /// Restricts the search to these codec indices.
    pub actions: Option<Vec<usize>>,
}

impl Default for DpGrid {
    fn default() -> Self {
        Self {
            soc_levels: 161,
            actions: None,
        }
    }
}

struct Axis1 {
    lo: f64,
    step: f64,
    n: usize,
}

impl Axis1 {
    fn value(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }

    fn nearest(&self, v: f64) -> usize {
        if self.n == 1 {
            return 0;
        }
        (((v - self.lo) / self.step).round().max(0.0) as usize).min(self.n - 1)
    }
}

/// Backward-induction tables for one microgrid.
struct MgPlanner<'a> {
    mg: &'a MicrogridConfig,
    config: &'a MgcConfig,
    actions: Vec<usize>,
    codec: &'a ActionCodec,
    soc: Axis1,
    cdg: Axis1,
    /// `values[h]` is the cost-to-go before hour `h`; the last entry is 0.
    values: Vec<Vec<f64>>,
    inputs: Vec<MgInputs>,
}

impl<'a> MgPlanner<'a> {
    fn new(
        mg: &'a MicrogridConfig,
        config: &'a MgcConfig,
        codec: &'a ActionCodec,
        grid: &DpGrid,
    ) -> Result<Self> {
        if grid.soc_levels < 3 {
            return Err(Error::pre("the SoC grid needs at least 3 levels"));
        }
        let actions = match &grid.actions {
            Some(a) if a.is_empty() || a.iter().any(|&i| i >= codec.len()) => {
                return Err(Error::pre(
                    "action subset must be non-empty and inside the codec",
                ));
            }
            Some(a) => a.clone(),
            None => (0..codec.len()).collect(),
        };
        let ess = &mg.ess;
        let soc = Axis1 {
            lo: ess.e_min_kwh,
            step: (ess.e_max_kwh - ess.e_min_kwh) / (grid.soc_levels - 1) as f64,
            n: grid.soc_levels,
        };
        let i0 = soc.nearest(ess.e_init_kwh);
        if (soc.value(i0) - ess.e_init_kwh).abs() > 1e-9 * ess.e_max_kwh.max(1.0) {
            return Err(Error::pre(format!(
                "SoC grid with {} levels cannot represent the initial {} kWh",
                grid.soc_levels, ess.e_init_kwh
            )));
        }
        let c = &mg.cdg;
        let span = c.p_max_kw - c.p_min_kw;
        let cdg = if span <= 0.0 || c.ramp_max_kw_per_h <= 0.0 {
            Axis1 {
                lo: c.p_min_kw,
                step: 1.0,
                n: 1,
            }
        } else {
            let n = (span / c.ramp_max_kw_per_h).ceil() as usize + 1;
            Axis1 {
                lo: c.p_min_kw,
                step: span / (n - 1) as f64,
                n,
            }
        };
        Ok(Self {
            mg,
            config,
            actions,
            codec,
            soc,
            cdg,
            values: Vec::new(),
            inputs: Vec::new(),
        })
    }

    fn state_index(&self, s: &MgState) -> usize {
        self.soc.nearest(s.soc_kwh) * self.cdg.n + self.cdg.nearest(s.prev_cdg_kw)
    }

    fn grid_state(&self, idx: usize) -> MgState {
        MgState {
            soc_kwh: self.soc.value(idx / self.cdg.n),
            prev_cdg_kw: self.cdg.value(idx % self.cdg.n),
        }
    }

    /// Fills the value tables for `inputs[0..]` with zero terminal value.
    fn solve(&mut self, inputs: Vec<MgInputs>) -> Result<()> {
        let n_states = self.soc.n * self.cdg.n;
        let t = inputs.len();
        let mut values = vec![vec![0.0; n_states]; t + 1];
        for h in (0..t).rev() {
            let reqs = self
                .actions
                .iter()
                .map(|&a| self.codec.decode(a, self.mg, inputs[h].load_kw))
                .collect::<Result<Vec<_>>>()?;
            for s in 0..n_states {
                let st = self.grid_state(s);
                let mut best = f64::INFINITY;
                for req in &reqs {
                    let o = step_microgrid(&st, *req, &inputs[h], self.mg, self.config);
                    let v = o.cost + values[h + 1][self.state_index(&o.next)];
                    if v < best {
                        best = v;
                    }
                }
                values[h][s] = best;
            }
        }
        self.values = values;
        self.inputs = inputs;
        Ok(())
    }

    /// Best action at hour `h` from an exact state using the solved tables.
    fn act(&self, h: usize, state: &MgState, inputs: &MgInputs) -> Result<usize> {
        let mut best = (self.actions[0], f64::INFINITY);
        for &a in &self.actions {
            let req = self.codec.decode(a, self.mg, inputs.load_kw)?;
            let o = step_microgrid(state, req, inputs, self.mg, self.config);
            let v = o.cost + self.values[h + 1][self.state_index(&o.next)];
            if v < best.1 {
                best = (a, v);
            }
        }
        Ok(best.0)
    }

    fn value_at(&self, h: usize, state: &MgState) -> f64 {
        self.values[h][self.state_index(state)]
    }

    /// Schedule obtained by following the tables on the planner's own
    /// inputs from `start`.
    fn rollout(&self, start: MgState) -> Result<Vec<usize>> {
        let mut st = start;
        let mut out = Vec::with_capacity(self.inputs.len());
        for (h, inp) in self.inputs.iter().enumerate() {
            let a = self.act(h, &st, inp)?;
            let req = self.codec.decode(a, self.mg, inp.load_kw)?;
            st = step_microgrid(&st, req, inp, self.mg, self.config).next;
            out.push(a);
        }
        Ok(out)
    }
}

fn check_day(profiles: &[TimeSeriesProfile], config: &MgcConfig) -> Result<()> {
    if profiles.is_empty() {
        return Err(Error::pre("at least one profile is required"));
    }
    let h = env::horizon(profiles, config);
    if h != HOURS_PER_DAY {
        return Err(Error::pre(format!(
            "a day needs {HOURS_PER_DAY} rows, got {h}"
        )));
    }
    Ok(())
}

/// Result of planning with the dynamic program.
#[derive(Debug, Clone, PartialEq)]
pub struct DpPlan {
    /// `schedule[m][h]` is microgrid `m`'s action at hour `h`.
    pub schedule: Vec<Vec<usize>>,
    /// Cost-to-go of the grid model from the initial state.
    pub planned_cost: f64,
}

/// Plans a whole day for every microgrid from the initial state.
pub fn plan_day(
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    codec: &ActionCodec,
    grid: &DpGrid,
) -> Result<DpPlan> {
    plan_hours(
        profiles,
        config,
        codec,
        grid,
        env::horizon(profiles, config),
    )
}

/// Plans the first `hours` rows from the initial state with zero terminal
/// value.
pub fn plan_hours(
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    codec: &ActionCodec,
    grid: &DpGrid,
    hours: usize,
) -> Result<DpPlan> {
    if hours == 0 || hours > env::horizon(profiles, config) {
        return Err(Error::pre(format!(
            "cannot plan {hours} hours on these profiles"
        )));
    }
    let start = env::EnvState::initial(config);
    let mut schedule = Vec::new();
    let mut planned_cost = 0.0;
    for (mg, st) in config.microgrids.iter().zip(&start.microgrids) {
        let mut p = MgPlanner::new(mg, config, codec, grid)?;
        p.solve((0..hours).map(|h| mg.inputs(profiles, h)).collect())?;
        planned_cost += p.value_at(0, st);
        schedule.push(p.rollout(*st)?);
    }
    Ok(DpPlan {
        schedule,
        planned_cost,
    })
}

/// Plays a fixed per-microgrid schedule.
#[derive(Debug, Clone)]
pub struct ScheduleController {
    pub codec: ActionCodec,
    pub schedule: Vec<Vec<usize>>,
}

impl Controller for ScheduleController {
    fn decide(&mut self, ctx: &Decision<'_>, _rng: &mut Rng) -> Result<ActionSetpoints> {
        let idx: Vec<usize> = self
            .schedule
            .iter()
            .map(|s| {
                s.get(ctx.hour).copied().ok_or_else(|| {
                    Error::pre(format!("schedule has no entry for hour {}", ctx.hour))
                })
            })
            .collect::<Result<_>>()?;
        decode_all(&self.codec, &idx, ctx.profiles, ctx.config, ctx.hour)
    }
}

/// Full-knowledge optimum on the grid; the returned metrics come from
/// replaying the schedule through the environment.
pub fn offline_dp(
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    codec: &ActionCodec,
    grid: &DpGrid,
) -> Result<(DpPlan, EpisodeMetrics)> {
    check_day(profiles, config)?;
    let plan = plan_day(profiles, config, codec, grid)?;
    let mut ctl = ScheduleController {
        codec: codec.clone(),
        schedule: plan.schedule.clone(),
    };
    let metrics = env::run_episode(&mut ctl, profiles, config, 0)?;
    Ok((plan, metrics))
}

/// Plans each day at hour 0 with full knowledge of the true profiles.
#[derive(Debug, Clone)]
pub struct OfflineController {
    pub codec: ActionCodec,
    pub grid: DpGrid,
    schedule: Option<ScheduleController>,
}

impl OfflineController {
    pub fn new(codec: ActionCodec, grid: DpGrid) -> Self {
        Self {
            codec,
            grid,
            schedule: None,
        }
    }
}

impl Controller for OfflineController {
    fn decide(&mut self, ctx: &Decision<'_>, rng: &mut Rng) -> Result<ActionSetpoints> {
        if ctx.hour == 0 || self.schedule.is_none() {
            let plan = plan_day(ctx.profiles, ctx.config, &self.codec, &self.grid)?;
            self.schedule = Some(ScheduleController {
                codec: self.codec.clone(),
                schedule: plan.schedule,
            });
        }
        self.schedule.as_mut().expect("planned").decide(ctx, rng)
    }
}

/// Plans on a day forecast made before hour 0, then plays the plan open
/// loop.
#[derive(Debug, Clone)]
pub struct DayAheadController {
    pub codec: ActionCodec,
    pub model: ForecastModel,
    pub grid: DpGrid,
    schedule: Option<ScheduleController>,
}

impl DayAheadController {
    pub fn new(codec: ActionCodec, model: ForecastModel, grid: DpGrid) -> Self {
        Self {
            codec,
            model,
            grid,
            schedule: None,
        }
    }
}

impl Controller for DayAheadController {
    fn decide(&mut self, ctx: &Decision<'_>, rng: &mut Rng) -> Result<ActionSetpoints> {
        if ctx.hour == 0 || self.schedule.is_none() {
            let predicted = ctx
                .profiles
                .iter()
                .map(|p| forecast(p, 1, &self.model, rng))
                .collect::<Result<Vec<_>>>()?;
            let plan = plan_day(&predicted, ctx.config, &self.codec, &self.grid)?;
            self.schedule = Some(ScheduleController {
                codec: self.codec.clone(),
                schedule: plan.schedule,
            });
        }
        self.schedule.as_mut().expect("planned").decide(ctx, rng)
    }
}

pub fn day_ahead(
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    codec: &ActionCodec,
    model: &ForecastModel,
    grid: &DpGrid,
    seed: u64,
) -> Result<EpisodeMetrics> {
    check_day(profiles, config)?;
    let mut ctl = DayAheadController::new(codec.clone(), *model, grid.clone());
    env::run_episode(&mut ctl, profiles, config, seed)
}

/// Receding-horizon controller: each hour it plans `horizon` hours on the
/// true current row plus forecasts, with zero terminal value, and applies
/// the first action.
#[derive(Debug, Clone)]
pub struct MpcController {
    pub codec: ActionCodec,
    pub model: ForecastModel,
    pub grid: DpGrid,
    pub horizon: usize,
}

impl Controller for MpcController {
    fn decide(&mut self, ctx: &Decision<'_>, rng: &mut Rng) -> Result<ActionSetpoints> {
        if self.horizon == 0 {
            return Err(Error::pre("MPC horizon must be at least 1"));
        }
        let total = env::horizon(ctx.profiles, ctx.config);
        let t = ctx.hour;
        let end = (t + self.horizon).min(total);
        let predicted = ctx
            .profiles
            .iter()
            .map(|p| forecast_window(p, t + 1, end, &self.model, rng))
            .collect::<Result<Vec<_>>>()?;
        let mut idx = Vec::with_capacity(ctx.config.num_microgrids());
        for (mg, st) in ctx.config.microgrids.iter().zip(&ctx.state.microgrids) {
            let now = mg.inputs(ctx.profiles, t);
            let mut inputs = vec![now];
            inputs.extend((t + 1..end).map(|h| mg.inputs(&predicted, h)));
            let mut p = MgPlanner::new(mg, ctx.config, &self.codec, &self.grid)?;
            p.solve(inputs)?;
            idx.push(p.act(0, st, &now)?);
        }
        decode_all(&self.codec, &idx, ctx.profiles, ctx.config, t)
    }
}

pub fn mpc(
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    codec: &ActionCodec,
    model: &ForecastModel,
    grid: &DpGrid,
    horizon: usize,
    seed: u64,
) -> Result<EpisodeMetrics> {
    if horizon == 0 {
        return Err(Error::pre("MPC horizon must be at least 1"));
    }
    let mut ctl = MpcController {
        codec: codec.clone(),
        model: *model,
        grid: grid.clone(),
        horizon,
    };
    env::run_episode(&mut ctl, profiles, config, seed)
}

pub fn myopic_rollout(
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    codec: &ActionCodec,
) -> Result<EpisodeMetrics> {
    let mut ctl = MyopicController {
        codec: codec.clone(),
    };
    env::run_episode(&mut ctl, profiles, config, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::default_config_2mg;
    use crate::profiles::nominal_profile;
    use crate::rng::seeded;
    use chrono::NaiveDate;

    fn day() -> Vec<TimeSeriesProfile> {
        let p = nominal_profile(NaiveDate::from_ymd_opt(2023, 1, 2).unwrap(), 1).unwrap();
        vec![p.clone(), p]
    }

    #[test]
    fn perfect_forecast_is_truth() {
        let d = day();
        let f = forecast(&d[0], 1, &ForecastModel::perfect(), &mut seeded(0)).unwrap();
        assert_eq!(f, d[0]);
        assert!(forecast(&d[0], 0, &ForecastModel::default(), &mut seeded(0)).is_err());
    }

    #[test]
    fn window_leaves_outside_rows() {
        let d = day();
        let f = forecast_window(&d[0], 20, 24, &ForecastModel::default(), &mut seeded(3)).unwrap();
        for h in 0..20 {
            assert_eq!(f.row(h), d[0].row(h));
        }
        assert_ne!(f.row(21), d[0].row(21));
        assert!(forecast_window(&d[0], 20, 25, &ForecastModel::default(), &mut seeded(3)).is_err());
    }

    #[test]
    fn noisy_mpc_runs_to_the_end_of_the_day() {
        let d = day();
        let cfg = default_config_2mg();
        let m = mpc(
            &d,
            &cfg,
            &ActionCodec::default(),
            &ForecastModel::default(),
            &DpGrid::default(),
            8,
            1,
        )
        .unwrap();
        assert_eq!(m.hours.len(), 24);
    }

    #[test]
    fn lead_eight_sigma() {
        let m = ForecastModel::default();
        assert!((m.sigma(8) - 0.2214).abs() < 1e-3);
    }

    #[test]
    fn offline_not_worse_than_myopic() {
        let d = day();
        let cfg = default_config_2mg();
        let codec = ActionCodec::default();
        let (_, off) = offline_dp(&d, &cfg, &codec, &DpGrid::default()).unwrap();
        let my = myopic_rollout(&d, &cfg, &codec).unwrap();
        assert!(
            off.total_cost <= my.total_cost * 1.01,
            "{} vs {}",
            off.total_cost,
            my.total_cost
        );
    }

    #[test]
    fn grid_must_hit_initial_soc() {
        let d = day();
        let cfg = default_config_2mg();
        let grid = DpGrid {
            soc_levels: 4,
            actions: None,
        };
        assert!(offline_dp(&d, &cfg, &ActionCodec::default(), &grid).is_err());
    }

    #[test]
    fn mpc_one_is_myopic() {
        let d = day();
        let cfg = default_config_2mg();
        let codec = ActionCodec::default();
        let my = myopic_rollout(&d, &cfg, &codec).unwrap();
        let m1 = mpc(
            &d,
            &cfg,
            &codec,
            &ForecastModel::perfect(),
            &DpGrid::default(),
            1,
            0,
        )
        .unwrap();
        assert_eq!(my.total_cost, m1.total_cost);
    }
}
