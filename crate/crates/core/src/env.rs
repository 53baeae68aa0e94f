//! Grid-connected microgrid-community simulator.
//!
//! Each microgrid owns one storage unit (ESS), one controllable generator
//! (CDG), a load and a renewable feed. The utility-grid exchange closes the
//! hourly power balance. Requested setpoints are projected onto the feasible
//! set and every kWh removed by the projection is charged a violation
//! penalty. Microgrids do not interact, so costs add up across them.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::TimeSeriesProfile;
use crate::rng::{self, Rng};

/// Hour length used by all energy conversions.
pub const DT_H: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssParams {
    pub capacity_kwh: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
    pub p_ch_max_kw: f64,
    pub p_dis_max_kw: f64,
    pub cost_ch: f64,
    pub cost_dis: f64,
    pub e_min_kwh: f64,
    pub e_max_kwh: f64,
    pub e_init_kwh: f64,
}

impl EssParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta_ch > 0.0
            && self.eta_ch <= 1.0
            && self.eta_dis > 0.0
            && self.eta_dis <= 1.0
            && self.e_min_kwh >= 0.0
            && self.e_min_kwh < self.e_max_kwh
            && self.e_max_kwh <= self.capacity_kwh
            && self.e_init_kwh >= self.e_min_kwh
            && self.e_init_kwh <= self.e_max_kwh
            && self.p_ch_max_kw > 0.0
            && self.p_dis_max_kw > 0.0
            && self.cost_ch >= 0.0
            && self.cost_dis >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid ESS parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdgParams {
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_c: f64,
    pub p_min_kw: f64,
    pub p_max_kw: f64,
    pub ramp_max_kw_per_h: f64,
}

impl CdgParams {
    pub fn validate(&self) -> Result<()> {
        if self.p_min_kw >= 0.0
            && self.p_min_kw <= self.p_max_kw
            && self.ramp_max_kw_per_h > 0.0
            && self.cost_a >= 0.0
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid CDG parameters: {self:?}")))
        }
    }

    /// Quadratic fuel cost for one hour at output `p`; the constant term is
    /// only charged while the unit runs.
    pub fn fuel_cost(&self, p: f64) -> f64 {
        let on = if p > 0.0 { self.cost_c } else { 0.0 };
        self.cost_a * p * p + self.cost_b * p + on
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrogridConfig {
    pub ess: EssParams,
    pub cdg: CdgParams,
    pub shed_max_frac: f64,
    pub shed_penalty: f64,
    /// Index into the profile set feeding this microgrid.
    pub profile_index: usize,
    #[serde(default = "one")]
    pub load_scale: f64,
    #[serde(default = "one")]
    pub pv_scale: f64,
    #[serde(default = "one")]
    pub wt_scale: f64,
}

impl MicrogridConfig {
    pub fn validate(&self) -> Result<()> {
        self.ess.validate()?;
        self.cdg.validate()?;
        if !(0.0..=1.0).contains(&self.shed_max_frac) || self.shed_penalty < 0.0 {
            return Err(Error::Config(format!(
                "shed_max_frac must lie in [0, 1] and shed_penalty be non-negative (got {}, {})",
                self.shed_max_frac, self.shed_penalty
            )));
        }
        if self.load_scale < 0.0 || self.pv_scale < 0.0 || self.wt_scale < 0.0 {
            return Err(Error::Config("device scales must be non-negative".into()));
        }
        Ok(())
    }

    /// Exogenous inputs of this microgrid at `hour`.
    pub fn inputs(&self, profiles: &[TimeSeriesProfile], hour: usize) -> MgInputs {
        let p = &profiles[self.profile_index % profiles.len()];
        let row = p.row(hour);
        MgInputs {
            load_kw: self.load_scale * row.load_kw,
            rdg_kw: self.pv_scale * row.pv_kw + self.wt_scale * row.wt_kw,
            price: row.price,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgcConfig {
    pub microgrids: Vec<MicrogridConfig>,
    pub carbon_price: f64,
    pub carbon_cdg: f64,
    pub carbon_grid: f64,
    pub sell_ratio: f64,
    pub violation_penalty: f64,
    pub reward_scale: f64,
}

impl MgcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.microgrids.is_empty() {
            return Err(Error::Config("at least one microgrid is required".into()));
        }
        for mg in &self.microgrids {
            mg.validate()?;
        }
        if self.carbon_price < 0.0 || self.carbon_cdg < 0.0 || self.carbon_grid < 0.0 {
            return Err(Error::Config(
                "carbon price and densities must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.sell_ratio) {
            return Err(Error::Config("sell_ratio must lie in [0, 1]".into()));
        }
        if self.violation_penalty < 0.0 || !(self.reward_scale > 0.0) {
            return Err(Error::Config(
                "violation_penalty must be non-negative and reward_scale positive".into(),
            ));
        }
        Ok(())
    }

    pub fn num_microgrids(&self) -> usize {
        self.microgrids.len()
    }

    /// Number of distinct profiles referenced by the microgrids.
    pub fn profiles_needed(&self) -> usize {
        self.microgrids
            .iter()
            .map(|m| m.profile_index + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}

/// Table-I storage unit with a 2000 kWh nameplate, so the [200, 1800] kWh
/// operating band is the 10-90 % SoC window.
pub fn default_ess() -> EssParams {
    EssParams {
        capacity_kwh: 2000.0,
        eta_ch: 0.9,
        eta_dis: 0.95,
        p_ch_max_kw: 200.0,
        p_dis_max_kw: 200.0,
        cost_ch: 0.005,
        cost_dis: 0.005,
        e_min_kwh: 200.0,
        e_max_kwh: 1800.0,
        e_init_kwh: 1000.0,
    }
}

pub fn default_cdg() -> CdgParams {
    CdgParams {
        cost_a: 0.004,
        cost_b: 0.066,
        cost_c: 0.7,
        p_min_kw: 0.0,
        p_max_kw: 200.0,
        ramp_max_kw_per_h: 20.0,
    }
}

pub fn default_microgrid(profile_index: usize) -> MicrogridConfig {
    MicrogridConfig {
        ess: default_ess(),
        cdg: default_cdg(),
        shed_max_frac: 0.5,
        shed_penalty: 1.0,
        profile_index,
        load_scale: 1.0,
        pv_scale: 1.0,
        wt_scale: 1.0,
    }
}

/// Community-level settings around the given microgrids.
pub fn community(microgrids: Vec<MicrogridConfig>) -> MgcConfig {
    MgcConfig {
        microgrids,
        carbon_price: 0.025,
        carbon_cdg: 0.9,
        carbon_grid: 0.412,
        sell_ratio: 1.0,
        violation_penalty: 1.0,
        reward_scale: 100.0,
    }
}

/// Two microgrids with the reference device parameters, each fed by its own
/// profile.
pub fn default_config_2mg() -> MgcConfig {
    community(vec![default_microgrid(0), default_microgrid(1)])
}

/// Exogenous inputs of one microgrid for one hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgInputs {
    pub load_kw: f64,
    pub rdg_kw: f64,
    pub price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgState {
    pub soc_kwh: f64,
    pub prev_cdg_kw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub hour: usize,
    pub microgrids: Vec<MgState>,
}

impl EnvState {
    /// Start-of-day state: initial storage, generators off (at `p_min`).
    pub fn initial(config: &MgcConfig) -> Self {
        Self {
            hour: 0,
            microgrids: config
                .microgrids
                .iter()
                .map(|m| MgState {
                    soc_kwh: m.ess.e_init_kwh,
                    prev_cdg_kw: m.cdg.p_min_kw,
                })
                .collect(),
        }
    }
}

/// Setpoints of one microgrid. `p_ess_kw > 0` discharges, `< 0` charges.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoint {
    pub p_ess_kw: f64,
    pub p_cdg_kw: f64,
    pub p_ls_kw: f64,
}

impl Setpoint {
    pub fn is_finite(&self) -> bool {
        self.p_ess_kw.is_finite() && self.p_cdg_kw.is_finite() && self.p_ls_kw.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionSetpoints {
    pub microgrids: Vec<Setpoint>,
}

impl ActionSetpoints {
    pub fn idle(n: usize) -> Self {
        Self {
            microgrids: vec![Setpoint::default(); n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub cdg_fuel: f64,
    pub ess_degradation: f64,
    pub grid_buy: f64,
    pub grid_sell_revenue: f64,
    pub shed_penalty: f64,
    pub carbon_cost: f64,
    pub violation_penalty: f64,
}

impl CostBreakdown {
    /// Sum of all terms, with sales revenue subtracted.
    pub fn total(&self) -> f64 {
        self.cdg_fuel + self.ess_degradation + self.grid_buy - self.grid_sell_revenue
            + self.shed_penalty
            + self.carbon_cost
            + self.violation_penalty
    }

    pub fn add(&mut self, o: &CostBreakdown) {
        self.cdg_fuel += o.cdg_fuel;
        self.ess_degradation += o.ess_degradation;
        self.grid_buy += o.grid_buy;
        self.grid_sell_revenue += o.grid_sell_revenue;
        self.shed_penalty += o.shed_penalty;
        self.carbon_cost += o.carbon_cost;
        self.violation_penalty += o.violation_penalty;
    }
}

/// Everything that happened in one microgrid during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgOutcome {
    pub next: MgState,
    pub applied: Setpoint,
    pub clipped_kwh: f64,
    /// Signed exchange with the utility grid, positive when buying.
    pub grid_kw: f64,
    pub breakdown: CostBreakdown,
    pub carbon_kg: f64,
    pub cost: f64,
}

/// Clamps one microgrid's request onto its feasible set, in the order CDG,
/// load shedding, ESS. Returns the projected setpoint and the clipped energy.
pub fn project_microgrid(
    req: Setpoint,
    state: &MgState,
    inputs: &MgInputs,
    mg: &MicrogridConfig,
) -> (Setpoint, f64) {
    let cdg = &mg.cdg;
    let lo = cdg.p_min_kw.max(state.prev_cdg_kw - cdg.ramp_max_kw_per_h);
    let hi = cdg.p_max_kw.min(state.prev_cdg_kw + cdg.ramp_max_kw_per_h);
    let p_cdg = req.p_cdg_kw.max(lo).min(hi);

    let shed_hi = mg.shed_max_frac * inputs.load_kw.max(0.0);
    let p_ls = req.p_ls_kw.max(0.0).min(shed_hi);

    let ess = &mg.ess;
    let charge_room = ((ess.e_max_kwh - state.soc_kwh) / (ess.eta_ch * DT_H)).max(0.0);
    let discharge_room = ((state.soc_kwh - ess.e_min_kwh) * ess.eta_dis / DT_H).max(0.0);
    let p_ess = req
        .p_ess_kw
        .max(-ess.p_ch_max_kw.min(charge_room))
        .min(ess.p_dis_max_kw.min(discharge_room));

    let applied = Setpoint {
        p_ess_kw: p_ess,
        p_cdg_kw: p_cdg,
        p_ls_kw: p_ls,
    };
    let clipped =
        ((req.p_ess_kw - p_ess).abs() + (req.p_cdg_kw - p_cdg).abs() + (req.p_ls_kw - p_ls).abs())
            * DT_H;
    (applied, clipped)
}

/// Projects, then advances one microgrid by one hour.
pub fn step_microgrid(
    state: &MgState,
    req: Setpoint,
    inputs: &MgInputs,
    mg: &MicrogridConfig,
    cfg: &MgcConfig,
) -> MgOutcome {
    let (a, clipped_kwh) = project_microgrid(req, state, inputs, mg);
    let ess = &mg.ess;

    let (charge_kwh, discharge_kwh) = if a.p_ess_kw < 0.0 {
        (-a.p_ess_kw * DT_H, 0.0)
    } else {
        (0.0, a.p_ess_kw * DT_H)
    };
    let soc = (state.soc_kwh + ess.eta_ch * charge_kwh - discharge_kwh / ess.eta_dis)
        .clamp(ess.e_min_kwh, ess.e_max_kwh);

    let grid_kw = (inputs.load_kw - a.p_ls_kw) - inputs.rdg_kw - a.p_cdg_kw - a.p_ess_kw;
    let buy_kwh = grid_kw.max(0.0) * DT_H;
    let sell_kwh = (-grid_kw).max(0.0) * DT_H;
    let carbon_kg = cfg.carbon_cdg * a.p_cdg_kw * DT_H + cfg.carbon_grid * buy_kwh;

    let breakdown = CostBreakdown {
        cdg_fuel: mg.cdg.fuel_cost(a.p_cdg_kw) * DT_H,
        ess_degradation: ess.cost_ch * charge_kwh + ess.cost_dis * discharge_kwh,
        grid_buy: inputs.price * buy_kwh,
        grid_sell_revenue: cfg.sell_ratio * inputs.price * sell_kwh,
        shed_penalty: mg.shed_penalty * a.p_ls_kw * DT_H,
        carbon_cost: cfg.carbon_price * carbon_kg,
        violation_penalty: cfg.violation_penalty * clipped_kwh,
    };
    MgOutcome {
        next: MgState {
            soc_kwh: soc,
            prev_cdg_kw: a.p_cdg_kw,
        },
        applied: a,
        clipped_kwh,
        grid_kw,
        breakdown,
        carbon_kg,
        cost: breakdown.total(),
    }
}

/// Number of hours the profile set can drive.
pub fn horizon(profiles: &[TimeSeriesProfile], config: &MgcConfig) -> usize {
    config
        .microgrids
        .iter()
        .map(|m| profiles[m.profile_index % profiles.len()].len())
        .min()
        .unwrap_or(0)
}

fn check_profiles(profiles: &[TimeSeriesProfile]) -> Result<()> {
    if profiles.is_empty() {
        return Err(Error::pre("at least one profile is required"));
    }
    Ok(())
}

/// Normalised SoC in [0, 1] over the operating band.
pub fn soc_normalized(soc_kwh: f64, ess: &EssParams) -> f64 {
    (soc_kwh - ess.e_min_kwh) / (ess.e_max_kwh - ess.e_min_kwh)
}

/// `[load, rdg, price, soc_normalized]` for one microgrid.
pub fn observe_microgrid(
    state: &MgState,
    inputs: &MgInputs,
    mg: &MicrogridConfig,
) -> [f64; OBS_PER_MG] {
    [
        inputs.load_kw,
        inputs.rdg_kw,
        inputs.price,
        soc_normalized(state.soc_kwh, &mg.ess),
    ]
}

pub const OBS_PER_MG: usize = 4;

/// Concatenated per-microgrid observations at the state's hour.
pub fn observe(
    state: &EnvState,
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
) -> Result<Vec<f64>> {
    check_profiles(profiles)?;
    let h = horizon(profiles, config);
    if state.hour >= h {
        return Err(Error::pre(format!(
            "hour {} outside horizon {h}",
            state.hour
        )));
    }
    Ok(observe_at(state, state.hour, profiles, config))
}

fn observe_at(
    state: &EnvState,
    hour: usize,
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
) -> Vec<f64> {
    let mut obs = Vec::with_capacity(OBS_PER_MG * config.num_microgrids());
    for (mg, st) in config.microgrids.iter().zip(&state.microgrids) {
        obs.extend(observe_microgrid(st, &mg.inputs(profiles, hour), mg));
    }
    obs
}

/// Projects every microgrid's request; returns the feasible setpoints and
/// the total clipped energy.
pub fn project_feasible(
    requested: &ActionSetpoints,
    state: &EnvState,
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
) -> Result<(ActionSetpoints, f64)> {
    check_profiles(profiles)?;
    check_action(requested, config)?;
    let mut out = Vec::with_capacity(config.num_microgrids());
    let mut clipped = 0.0;
    for ((mg, st), req) in config
        .microgrids
        .iter()
        .zip(&state.microgrids)
        .zip(&requested.microgrids)
    {
        let (a, c) = project_microgrid(*req, st, &mg.inputs(profiles, state.hour), mg);
        out.push(a);
        clipped += c;
    }
    Ok((ActionSetpoints { microgrids: out }, clipped))
}

fn check_action(action: &ActionSetpoints, config: &MgcConfig) -> Result<()> {
    if action.microgrids.len() != config.num_microgrids() {
        return Err(Error::Shape {
            expected: config.num_microgrids(),
            actual: action.microgrids.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: EnvState,
    /// Observation of `next_state`. At the end of the horizon the last
    /// hour's exogenous row is reused with the post-step SoC.
    pub observation: Vec<f64>,
    pub reward: f64,
    pub cost_total: f64,
    pub breakdown: CostBreakdown,
    pub carbon_kg: f64,
    pub grid_exchange_kw: Vec<f64>,
    pub clipped: bool,
    pub clipped_kwh: f64,
    pub applied: ActionSetpoints,
    pub microgrids: Vec<MgOutcome>,
    pub done: bool,
}

impl StepResult {
    /// Per-microgrid reward, used by factorised learners.
    pub fn microgrid_reward(&self, m: usize, config: &MgcConfig) -> f64 {
        -self.microgrids[m].cost / config.reward_scale
    }
}

pub fn step(
    state: &EnvState,
    action: &ActionSetpoints,
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
) -> Result<StepResult> {
    check_profiles(profiles)?;
    check_action(action, config)?;
    let h = horizon(profiles, config);
    if state.hour >= h {
        return Err(Error::pre(format!(
            "hour {} outside horizon {h}",
            state.hour
        )));
    }
    let mut outcomes = Vec::with_capacity(config.num_microgrids());
    let mut breakdown = CostBreakdown::default();
    let mut carbon = 0.0;
    let mut clipped_kwh = 0.0;
    for ((mg, st), req) in config
        .microgrids
        .iter()
        .zip(&state.microgrids)
        .zip(&action.microgrids)
    {
        let o = step_microgrid(st, *req, &mg.inputs(profiles, state.hour), mg, config);
        breakdown.add(&o.breakdown);
        carbon += o.carbon_kg;
        clipped_kwh += o.clipped_kwh;
        outcomes.push(o);
    }
    let next_state = EnvState {
        hour: state.hour + 1,
        microgrids: outcomes.iter().map(|o| o.next).collect(),
    };
    let done = next_state.hour >= h;
    let obs_hour = next_state.hour.min(h - 1);
    let cost_total = breakdown.total();
    Ok(StepResult {
        observation: observe_at(&next_state, obs_hour, profiles, config),
        next_state,
        reward: -cost_total / config.reward_scale,
        cost_total,
        breakdown,
        carbon_kg: carbon,
        grid_exchange_kw: outcomes.iter().map(|o| o.grid_kw).collect(),
        clipped: clipped_kwh > 0.0,
        clipped_kwh,
        applied: ActionSetpoints {
            microgrids: outcomes.iter().map(|o| o.applied).collect(),
        },
        microgrids: outcomes,
        done,
    })
}

/// What a controller sees when asked for a decision.
pub struct Decision<'a> {
    pub hour: usize,
    pub state: &'a EnvState,
    pub observation: &'a [f64],
    pub profiles: &'a [TimeSeriesProfile],
    pub config: &'a MgcConfig,
}

/// Anything that maps the current situation to setpoints.
pub trait Controller {
    fn decide(&mut self, ctx: &Decision<'_>, rng: &mut Rng) -> Result<ActionSetpoints>;
}

impl<F> Controller for F
where
    F: FnMut(&Decision<'_>, &mut Rng) -> ActionSetpoints,
{
    fn decide(&mut self, ctx: &Decision<'_>, rng: &mut Rng) -> Result<ActionSetpoints> {
        Ok(self(ctx, rng))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgHourRecord {
    pub p_ess_kw: f64,
    pub p_cdg_kw: f64,
    pub p_ls_kw: f64,
    pub soc_kwh: f64,
    pub grid_kw: f64,
    pub cost: f64,
    pub carbon_kg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourRecord {
    pub hour: usize,
    pub cost_total: f64,
    pub breakdown: CostBreakdown,
    pub carbon_kg: f64,
    pub reward: f64,
    pub clipped_kwh: f64,
    pub microgrids: Vec<MgHourRecord>,
}

impl HourRecord {
    pub fn from_step(hour: usize, r: &StepResult) -> Self {
        Self {
            hour,
            cost_total: r.cost_total,
            breakdown: r.breakdown,
            carbon_kg: r.carbon_kg,
            reward: r.reward,
            clipped_kwh: r.clipped_kwh,
            microgrids: r
                .microgrids
                .iter()
                .map(|o| MgHourRecord {
                    p_ess_kw: o.applied.p_ess_kw,
                    p_cdg_kw: o.applied.p_cdg_kw,
                    p_ls_kw: o.applied.p_ls_kw,
                    soc_kwh: o.next.soc_kwh,
                    grid_kw: o.grid_kw,
                    cost: o.cost,
                    carbon_kg: o.carbon_kg,
                })
                .collect(),
        }
    }
}

/// Per-hour traces and totals of one rollout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeMetrics {
    pub hours: Vec<HourRecord>,
    pub breakdown: CostBreakdown,
    pub total_cost: f64,
    pub total_carbon_kg: f64,
    pub total_violation_kwh: f64,
    pub total_reward: f64,
}

impl EpisodeMetrics {
    pub fn push(&mut self, rec: HourRecord) {
        self.breakdown.add(&rec.breakdown);
        self.total_cost += rec.cost_total;
        self.total_carbon_kg += rec.carbon_kg;
        self.total_violation_kwh += rec.clipped_kwh;
        self.total_reward += rec.reward;
        self.hours.push(rec);
    }

    /// One row per hour plus a `total` footer row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n_mg = self.hours.first().map_or(0, |h| h.microgrids.len());
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = [
            "hour",
            "cost_total",
            "cdg_fuel",
            "ess_degradation",
            "grid_buy",
            "grid_sell_revenue",
            "shed_penalty",
            "carbon_cost",
            "violation_penalty",
            "carbon_kg",
            "reward",
            "clipped_kwh",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for m in 0..n_mg {
            for f in ["p_ess_kw", "p_cdg_kw", "p_ls_kw", "soc_kwh", "grid_kw"] {
                header.push(format!("mg{m}_{f}"));
            }
        }
        w.write_record(&header)?;
        let fmt = |v: f64| format!("{v:.6}");
        let fixed = |label: String, cost: f64, b: &CostBreakdown, c: f64, r: f64, k: f64| {
            vec![
                label,
                fmt(cost),
                fmt(b.cdg_fuel),
                fmt(b.ess_degradation),
                fmt(b.grid_buy),
                fmt(b.grid_sell_revenue),
                fmt(b.shed_penalty),
                fmt(b.carbon_cost),
                fmt(b.violation_penalty),
                fmt(c),
                fmt(r),
                fmt(k),
            ]
        };
        for h in &self.hours {
            let mut row = fixed(
                h.hour.to_string(),
                h.cost_total,
                &h.breakdown,
                h.carbon_kg,
                h.reward,
                h.clipped_kwh,
            );
            for m in &h.microgrids {
                row.extend([m.p_ess_kw, m.p_cdg_kw, m.p_ls_kw, m.soc_kwh, m.grid_kw].map(fmt));
            }
            w.write_record(&row)?;
        }
        let mut footer = fixed(
            "total".into(),
            self.total_cost,
            &self.breakdown,
            self.total_carbon_kg,
            self.total_reward,
            self.total_violation_kwh,
        );
        footer.extend(std::iter::repeat(String::new()).take(5 * n_mg));
        w.write_record(&footer)?;
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Rolls the environment over the whole profile horizon from the initial
/// state. `seed` drives the controller's random stream.
pub fn run_episode<C: Controller + ?Sized>(
    controller: &mut C,
    profiles: &[TimeSeriesProfile],
    config: &MgcConfig,
    seed: u64,
) -> Result<EpisodeMetrics> {
    check_profiles(profiles)?;
    let mut rng = rng::seeded(seed);
    let mut state = EnvState::initial(config);
    let mut metrics = EpisodeMetrics::default();
    let h = horizon(profiles, config);
    for hour in 0..h {
        let obs = observe(&state, profiles, config)?;
        let ctx = Decision {
            hour,
            state: &state,
            observation: &obs,
            profiles,
            config,
        };
        let action = controller.decide(&ctx, &mut rng)?;
        if action.microgrids.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite { hour });
        }
        let r = step(&state, &action, profiles, config)?;
        metrics.push(HourRecord::from_step(hour, &r));
        state = r.next_state;
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate};

    fn flat_day(load: f64, rdg: f64, price: f64) -> TimeSeriesProfile {
        let t0 = NaiveDate::from_ymd_opt(2023, 1, 2)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        TimeSeriesProfile::new(
            (0..24).map(|i| t0 + Duration::hours(i)).collect(),
            vec![rdg; 24],
            vec![0.0; 24],
            vec![load; 24],
            vec![price; 24],
        )
        .unwrap()
    }

    fn one_mg() -> MgcConfig {
        community(vec![default_microgrid(0)])
    }

    #[test]
    fn default_config_matches_table_values() {
        let c = default_config_2mg();
        c.validate().unwrap();
        assert_eq!(c.carbon_grid, 0.412);
        assert_eq!(c.carbon_cdg, 0.9);
        assert_eq!(c.carbon_price, 0.025);
        let mg = &c.microgrids[0];
        assert_eq!((mg.ess.e_min_kwh, mg.ess.e_max_kwh), (200.0, 1800.0));
        assert_eq!((mg.ess.eta_ch, mg.ess.eta_dis), (0.9, 0.95));
        assert_eq!(mg.ess.e_init_kwh, 1000.0);
        assert_eq!(
            (mg.cdg.cost_a, mg.cdg.cost_b, mg.cdg.cost_c),
            (0.004, 0.066, 0.7)
        );
        assert_eq!(mg.cdg.ramp_max_kw_per_h, 20.0);
        assert_eq!((mg.shed_max_frac, mg.shed_penalty), (0.5, 1.0));
        assert_eq!(default_config_2mg(), c);
    }

    #[test]
    fn config_toml_round_trip() {
        let c = default_config_2mg();
        assert_eq!(MgcConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn observation_layout() {
        let c = default_config_2mg();
        let p = [flat_day(100.0, 40.0, 0.1), flat_day(80.0, 10.0, 0.2)];
        let mut s = EnvState::initial(&c);
        let obs = observe(&s, &p, &c).unwrap();
        assert_eq!(obs.len(), 8);
        assert_eq!(&obs[..4], &[100.0, 40.0, 0.1, 0.5]);
        s.microgrids[1].soc_kwh = 200.0;
        assert_eq!(observe(&s, &p, &c).unwrap()[7], 0.0);
        s.hour = 24;
        assert!(observe(&s, &p, &c).is_err());
    }

    #[test]
    fn interior_request_is_unchanged() {
        let c = one_mg();
        let p = [flat_day(100.0, 0.0, 0.1)];
        let s = EnvState::initial(&c);
        let req = ActionSetpoints {
            microgrids: vec![Setpoint {
                p_ess_kw: -50.0,
                p_cdg_kw: 10.0,
                p_ls_kw: 20.0,
            }],
        };
        let (a, clipped) = project_feasible(&req, &s, &p, &c).unwrap();
        assert_eq!(a, req);
        assert_eq!(clipped, 0.0);
    }

    #[test]
    fn ramp_and_soc_clamps() {
        let c = one_mg();
        let p = [flat_day(100.0, 0.0, 0.1)];
        let mut s = EnvState::initial(&c);
        let req = ActionSetpoints {
            microgrids: vec![Setpoint {
                p_cdg_kw: 100.0,
                ..Default::default()
            }],
        };
        let (a, clipped) = project_feasible(&req, &s, &p, &c).unwrap();
        assert_eq!(a.microgrids[0].p_cdg_kw, 20.0);
        assert_eq!(clipped, 80.0);

        s.microgrids[0].soc_kwh = 1800.0;
        let req = ActionSetpoints {
            microgrids: vec![Setpoint {
                p_ess_kw: -100.0,
                ..Default::default()
            }],
        };
        let (a, clipped) = project_feasible(&req, &s, &p, &c).unwrap();
        assert_eq!(a.microgrids[0].p_ess_kw, 0.0);
        assert_eq!(clipped, 100.0);
    }

    #[test]
    fn balance_fuel_and_carbon_hand_values() {
        let c = one_mg();
        let p = [flat_day(100.0, 40.0, 0.1)];
        let mut s = EnvState::initial(&c);
        s.microgrids[0].prev_cdg_kw = 30.0;
        let a = ActionSetpoints {
            microgrids: vec![Setpoint {
                p_ess_kw: 20.0,
                p_cdg_kw: 30.0,
                p_ls_kw: 0.0,
            }],
        };
        let r = step(&s, &a, &p, &c).unwrap();
        assert!((r.grid_exchange_kw[0] - 10.0).abs() < 1e-12);
        assert!((r.breakdown.cdg_fuel - 6.28).abs() < 1e-12);
        assert!((r.carbon_kg - 31.12).abs() < 1e-12);
        assert!((r.breakdown.carbon_cost - 0.778).abs() < 1e-12);
        assert!((r.cost_total - r.breakdown.total()).abs() < 1e-12);
        assert!((r.reward + r.cost_total / 100.0).abs() < 1e-15);
    }

    #[test]
    fn charging_soc_update() {
        let c = one_mg();
        let p = [flat_day(100.0, 0.0, 0.1)];
        let s = EnvState::initial(&c);
        let a = ActionSetpoints {
            microgrids: vec![Setpoint {
                p_ess_kw: -100.0,
                ..Default::default()
            }],
        };
        let r = step(&s, &a, &p, &c).unwrap();
        assert!((r.next_state.microgrids[0].soc_kwh - 1090.0).abs() < 1e-9);
        assert_eq!(r.next_state.hour, 1);
    }

    #[test]
    fn zero_controller_closed_form() {
        let c = one_mg();
        let mut idle = |_: &Decision<'_>, _: &mut Rng| ActionSetpoints::idle(1);
        let m = run_episode(&mut idle, &[flat_day(0.0, 0.0, 0.0)], &c, 1).unwrap();
        assert_eq!((m.total_cost, m.total_carbon_kg), (0.0, 0.0));

        let m = run_episode(&mut idle, &[flat_day(100.0, 0.0, 0.1)], &c, 1).unwrap();
        assert!((m.total_cost - 264.72).abs() < 1e-9, "{}", m.total_cost);
        let again = run_episode(&mut idle, &[flat_day(100.0, 0.0, 0.1)], &c, 1).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn non_finite_controller_output_names_hour() {
        let c = one_mg();
        let mut bad = |d: &Decision<'_>, _: &mut Rng| {
            let mut a = ActionSetpoints::idle(1);
            if d.hour == 5 {
                a.microgrids[0].p_ess_kw = f64::NAN;
            }
            a
        };
        match run_episode(&mut bad, &[flat_day(1.0, 0.0, 0.1)], &c, 0) {
            Err(Error::NonFinite { hour }) => assert_eq!(hour, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn metrics_csv_has_footer() {
        let c = one_mg();
        let mut idle = |_: &Decision<'_>, _: &mut Rng| ActionSetpoints::idle(1);
        let m = run_episode(&mut idle, &[flat_day(10.0, 0.0, 0.1)], &c, 1).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 26);
        assert!(lines[25].starts_with("total,"));
        assert!(lines[0].ends_with("mg0_grid_kw"));
    }
}
