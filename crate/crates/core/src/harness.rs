//! Experiment configuration, orchestration and output files.
//!
//! An experiment trains or plans every listed algorithm for every seed,
//! evaluates each on the same test days and writes CSV tables plus a TOML
//! manifest into the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{self, Hyperparams};
use crate::codec::ActionCodec;
use crate::env::{Controller, MgcConfig};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_policy, PolicyEvaluation};
use crate::profiles::{load_csv, TimeSeriesProfile};
use crate::rl_baselines::{train_baseline, BaselineAlgo, BaselineSpec};
use crate::scenario::{synthetic_profiles, Dataset, DeviceCounts, Scenario, SyntheticSpec};
use crate::schedulers::{
    DayAheadController, DpGrid, ForecastModel, MpcController, MyopicController, OfflineController,
};
use crate::training::{write_training_log, EvalPoint, TrainingData};

/// Percentage by which `c_comp` differs from `c_diffcarl`, relative to
/// DiffCarl's cost. Negative means DiffCarl is cheaper.
pub fn relative_improvement(c_diffcarl: f64, c_comp: f64) -> Result<f64> {
    if !(c_diffcarl > 0.0 && c_diffcarl.is_finite()) || !c_comp.is_finite() {
        return Err(Error::pre(format!(
            "reference cost must be positive and finite, got {c_diffcarl}"
        )));
    }
    Ok((c_diffcarl - c_comp) / c_diffcarl * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    /// `2mg`, `ieee15`, `ieee33` or `custom`.
    pub scenario: String,
    /// Device counts of a `custom` scenario.
    pub devices: Option<DeviceCounts>,
    /// A full community configuration file; replaces the scenario.
    pub config: Option<PathBuf>,
    pub carbon_price: Option<f64>,
    pub scenario_seed: u64,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            scenario: "2mg".into(),
            devices: None,
            config: None,
            carbon_price: None,
            scenario_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    /// One CSV per profile index; synthetic profiles are used when empty.
    pub csv: Vec<PathBuf>,
    pub synthetic: SyntheticSpec,
    pub synthetic_seed: u64,
    /// Leading test days used for evaluation; 0 keeps all.
    pub eval_days: usize,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            csv: Vec::new(),
            synthetic: SyntheticSpec::default(),
            synthetic_seed: 0,
            eval_days: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    /// 200 episodes of 240 steps.
    #[default]
    Desk,
    /// 2000 episodes of 1000 steps.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub budget: Budget,
    pub risk_lambdas: Vec<f64>,
    pub carbon_prices: Vec<f64>,
    pub save_checkpoints: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            out_dir: PathBuf::from("runs"),
            budget: Budget::Desk,
            risk_lambdas: vec![-1.0, -0.1, 0.0, 0.1, 1.0],
            carbon_prices: vec![0.0, 0.025],
            save_checkpoints: false,
        }
    }
}

/// The TOML experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSection,
    pub profiles: ProfileSection,
    /// Per-algorithm settings keyed by tag: `diffcarl`, `dqn`, `sac`,
    /// `ddpg`, `myopic`, `day_ahead`, `mpc`, `offline`.
    pub algorithms: BTreeMap<String, toml::Table>,
    pub run: RunSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let algorithms = ["diffcarl", "myopic", "offline"]
            .into_iter()
            .map(|t| (t.to_string(), toml::Table::new()))
            .collect();
        Self {
            env: EnvSection::default(),
            profiles: ProfileSection::default(),
            algorithms,
            run: RunSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validates every section and fills in defaults.
    pub fn resolve(&self) -> Result<Experiment> {
        if self.run.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let scenario = match self.env.scenario.as_str() {
            "custom" => {
                let d = self
                    .env
                    .devices
                    .ok_or_else(|| Error::Config("custom scenario needs [env.devices]".into()))?;
                if d.loads == 0 || d.pvs == 0 || d.ess == 0 || d.cdgs == 0 {
                    return Err(Error::Config(
                        "custom device counts must be positive".into(),
                    ));
                }
                Scenario::Custom(d)
            }
            tag => Scenario::parse(tag)?,
        };
        let mut env = match &self.env.config {
            Some(path) => MgcConfig::load(path)?,
            None => scenario.build(self.env.scenario_seed)?,
        };
        if let Some(p) = self.env.carbon_price {
            env.carbon_price = p;
        }
        env.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms listed".into()));
        }
        let base = match self.run.budget {
            Budget::Desk => Hyperparams::desk(),
            Budget::Full => Hyperparams::default(),
        };
        let diffcarl_hp = match self.algorithms.get("diffcarl") {
            Some(t) => merge(&base, t)?,
            None => base,
        };
        diffcarl_hp.validate()?;
        let algorithms = self
            .algorithms
            .iter()
            .map(|(tag, table)| Ok((tag.clone(), AlgorithmSpec::parse(tag, table, &diffcarl_hp)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let profiles = if self.profiles.csv.is_empty() {
            ProfileSource::Synthetic {
                spec: self.profiles.synthetic.clone(),
                seed: self.profiles.synthetic_seed,
            }
        } else {
            ProfileSource::Csv(self.profiles.csv.clone())
        };
        if self
            .run
            .risk_lambdas
            .iter()
            .chain(&self.run.carbon_prices)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        Ok(Experiment {
            scenario: scenario.tag().to_string(),
            env,
            profiles,
            eval_days: self.profiles.eval_days,
            algorithms,
            seeds: self.run.seeds.clone(),
            risk_lambdas: self.run.risk_lambdas.clone(),
            carbon_prices: self.run.carbon_prices.clone(),
            out_dir: self.run.out_dir.clone(),
            save_checkpoints: self.run.save_checkpoints,
        })
    }
}

/// Overlays a TOML table on a serializable default.
pub fn merge<T: Serialize + serde::de::DeserializeOwned>(
    base: &T,
    overrides: &toml::Table,
) -> Result<T> {
    let mut table = toml::Table::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    pub soc_levels: usize,
    pub horizon: usize,
    pub forecast: ForecastModel,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self {
            soc_levels: DpGrid::default().soc_levels,
            horizon: 8,
            forecast: ForecastModel::default(),
        }
    }
}

/// Fully resolved settings of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmSpec {
    DiffCarl(Hyperparams),
    Baseline {
        spec: BaselineSpec,
        shared: Hyperparams,
    },
    Myopic,
    DayAhead(PlannerSettings),
    Mpc(PlannerSettings),
    Offline(PlannerSettings),
}

impl AlgorithmSpec {
    /// Baselines share the DiffCarl learning rates, discount, soft-update
    /// rate, buffer, batch and cadence.
    pub fn parse(tag: &str, table: &toml::Table, diffcarl: &Hyperparams) -> Result<Self> {
        let planner = || -> Result<PlannerSettings> {
            let p: PlannerSettings = merge(&PlannerSettings::default(), table)?;
            p.forecast.validate()?;
            if p.soc_levels < 2 || p.horizon == 0 {
                return Err(Error::Config(
                    "soc_levels must be >= 2 and horizon >= 1".into(),
                ));
            }
            Ok(p)
        };
        Ok(match tag {
            "diffcarl" => Self::DiffCarl(diffcarl.clone()),
            "dqn" | "sac" | "ddpg" => {
                let spec: BaselineSpec =
                    merge(&BaselineSpec::new(BaselineAlgo::parse(tag)?), table)?;
                if spec.algo.tag() != tag {
                    return Err(Error::Config(format!(
                        "[algorithms.{tag}] sets a different algo"
                    )));
                }
                spec.validate()?;
                Self::Baseline {
                    spec,
                    shared: diffcarl.clone(),
                }
            }
            "myopic" => {
                if !table.is_empty() {
                    return Err(Error::Config("myopic takes no settings".into()));
                }
                Self::Myopic
            }
            "day_ahead" => Self::DayAhead(planner()?),
            "mpc" => Self::Mpc(planner()?),
            "offline" => Self::Offline(planner()?),
            other => return Err(Error::Config(format!("unknown algorithm {other:?}"))),
        })
    }

    pub fn is_learner(&self) -> bool {
        matches!(self, Self::DiffCarl(_) | Self::Baseline { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    Synthetic { spec: SyntheticSpec, seed: u64 },
    Csv(Vec<PathBuf>),
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub scenario: String,
    pub env: MgcConfig,
    pub profiles: ProfileSource,
    pub eval_days: usize,
    pub algorithms: BTreeMap<String, AlgorithmSpec>,
    pub seeds: Vec<u64>,
    pub risk_lambdas: Vec<f64>,
    pub carbon_prices: Vec<f64>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub save_checkpoints: bool,
}

impl Experiment {
    /// SHA-256 of the resolved settings; the output directory is excluded.
    pub fn config_hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(bytes)))
    }

    pub fn load_profiles(&self) -> Result<Vec<TimeSeriesProfile>> {
        let needed = self.env.profiles_needed();
        match &self.profiles {
            ProfileSource::Synthetic { spec, seed } => synthetic_profiles(spec, needed, *seed),
            ProfileSource::Csv(paths) => {
                if paths.len() < needed {
                    return Err(Error::Config(format!(
                        "{} profile CSVs given, the community needs {needed}",
                        paths.len()
                    )));
                }
                paths.iter().map(load_csv).collect()
            }
        }
    }

    /// Train days and the evaluated test days.
    pub fn dataset(&self) -> Result<Dataset> {
        let mut d = Dataset::from_profiles(&self.load_profiles()?)?;
        if self.eval_days > 0 {
            d.test = d.test.take(self.eval_days);
        }
        if d.test.is_empty() {
            return Err(Error::Config("no test days".into()));
        }
        Ok(d)
    }
}

/// Result of one (algorithm, seed) cell.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub evaluation: PolicyEvaluation,
    pub curve: Option<Vec<EvalPoint>>,
    pub checkpoint: Option<crate::checkpoint::Checkpoint>,
}

/// Trains or instantiates `algo` and evaluates it greedily on `test`.
/// Evaluation day `d` uses seed `derive(seed, d)`.
pub fn run_cell(
    algo: &AlgorithmSpec,
    config: &MgcConfig,
    data: &Dataset,
    seed: u64,
) -> Result<CellOutput> {
    let codec = ActionCodec::default();
    let eval = |ctl: &mut dyn Controller, alpha: f64| {
        evaluate_policy(ctl, &data.test, config, seed, alpha)
    };
    let training = || TrainingData::new(config.clone(), data.train.clone(), data.test.clone());
    let grid = |p: &PlannerSettings| DpGrid {
        soc_levels: p.soc_levels,
        actions: None,
    };
    let alpha = match algo {
        AlgorithmSpec::DiffCarl(hp) | AlgorithmSpec::Baseline { shared: hp, .. } => hp.alpha_cvar,
        _ => Hyperparams::default().alpha_cvar,
    };
    Ok(match algo {
        AlgorithmSpec::DiffCarl(hp) => {
            let (agent, log) = agent::train(&training()?, hp, &codec, seed)?;
            CellOutput {
                evaluation: eval(&mut agent.greedy(), alpha)?,
                curve: Some(log.curve),
                checkpoint: Some(agent.to_checkpoint()?),
            }
        }
        AlgorithmSpec::Baseline { spec, shared } => {
            let (agent, log) = train_baseline(&training()?, spec, shared, &codec, seed)?;
            let evaluation = eval(agent.controller().as_mut(), alpha)?;
            CellOutput {
                evaluation,
                curve: Some(log.curve),
                checkpoint: Some(agent.to_checkpoint()?),
            }
        }
        AlgorithmSpec::Myopic => CellOutput {
            evaluation: eval(&mut MyopicController { codec }, alpha)?,
            curve: None,
            checkpoint: None,
        },
        AlgorithmSpec::DayAhead(p) => CellOutput {
            evaluation: eval(
                &mut DayAheadController::new(codec, p.forecast, grid(p)),
                alpha,
            )?,
            curve: None,
            checkpoint: None,
        },
        AlgorithmSpec::Mpc(p) => CellOutput {
            evaluation: eval(
                &mut MpcController {
                    codec,
                    model: p.forecast,
                    grid: grid(p),
                    horizon: p.horizon,
                },
                alpha,
            )?,
            curve: None,
            checkpoint: None,
        },
        AlgorithmSpec::Offline(p) => CellOutput {
            evaluation: eval(&mut OfflineController::new(codec, grid(p)), alpha)?,
            curve: None,
            checkpoint: None,
        },
    })
}

/// One row of `comparison.csv`; totals are summed over test days and
/// averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: String,
    pub total_cost: f64,
    pub total_carbon_kg: f64,
    /// Relative to DiffCarl; absent when DiffCarl was not run.
    pub improvement_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub name: String,
    pub seed: u64,
    pub status: String,
}

/// Contents of `manifest.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub scenario: String,
    pub crate_version: String,
    pub created_unix: u64,
    pub cells: Vec<CellRecord>,
    pub outputs: Vec<String>,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub manifest: Manifest,
    pub rows: Vec<ComparisonRow>,
    /// Per named run and seed.
    pub evaluations: BTreeMap<String, Vec<(u64, PolicyEvaluation)>>,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.manifest
            .cells
            .iter()
            .filter(|c| c.status != "ok")
            .count()
    }
}

struct Writer {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(rel.to_string());
        Ok(())
    }
}

/// `seed,day,cost,carbon_kg,violation_kwh` across seeds.
pub fn distribution_csv(runs: &[(u64, PolicyEvaluation)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "day", "cost", "carbon_kg", "violation_kwh"])?;
    for (seed, ev) in runs {
        for (d, ((c, e), v)) in ev
            .costs
            .iter()
            .zip(&ev.carbon_kg)
            .zip(&ev.violation_kwh)
            .enumerate()
        {
            w.write_record([
                seed.to_string(),
                d.to_string(),
                format!("{c:.6}"),
                format!("{e:.6}"),
                format!("{v:.6}"),
            ])?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::io("distribution csv", e.into_error()))
}

/// `name,seed,mean,median,std,max,cvar,carbon_mean` per named run and seed.
pub fn summary_csv(
    evaluations: &BTreeMap<String, Vec<(u64, PolicyEvaluation)>>,
    order: &[String],
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "name",
        "seed",
        "cost_mean",
        "cost_median",
        "cost_std",
        "cost_max",
        "cost_cvar",
        "carbon_mean",
    ])?;
    for name in order {
        for (seed, ev) in evaluations.get(name).into_iter().flatten() {
            let c = &ev.cost;
            w.write_record([
                name.clone(),
                seed.to_string(),
                format!("{:.6}", c.mean),
                format!("{:.6}", c.median),
                format!("{:.6}", c.std),
                format!("{:.6}", c.max),
                format!("{:.6}", c.cvar),
                format!("{:.6}", ev.carbon.mean),
            ])?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::io("summary csv", e.into_error()))
}

pub fn comparison_rows(
    evaluations: &BTreeMap<String, Vec<(u64, PolicyEvaluation)>>,
    order: &[String],
) -> Result<Vec<ComparisonRow>> {
    let totals = |name: &str| -> Option<(f64, f64)> {
        let runs = evaluations.get(name).filter(|r| !r.is_empty())?;
        let n = runs.len() as f64;
        let cost = runs
            .iter()
            .map(|(_, e)| e.costs.iter().sum::<f64>())
            .sum::<f64>()
            / n;
        let carbon = runs
            .iter()
            .map(|(_, e)| e.carbon_kg.iter().sum::<f64>())
            .sum::<f64>()
            / n;
        Some((cost, carbon))
    };
    let reference = totals("diffcarl").map(|(c, _)| c);
    order
        .iter()
        .filter_map(|name| totals(name).map(|t| (name, t)))
        .map(|(name, (cost, carbon))| {
            Ok(ComparisonRow {
                algorithm: name.clone(),
                total_cost: cost,
                total_carbon_kg: carbon,
                improvement_pct: reference
                    .map(|r| relative_improvement(r, cost))
                    .transpose()?,
            })
        })
        .collect()
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "algorithm",
        "total_cost",
        "total_carbon_kg",
        "improvement_pct",
    ])?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            format!("{:.6}", r.total_cost),
            format!("{:.6}", r.total_carbon_kg),
            r.improvement_pct
                .map(|v| format!("{v:.6}"))
                .unwrap_or_default(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::io("comparison csv", e.into_error()))
}

/// A named (algorithm, community config) pair run for every seed.
struct Job {
    name: String,
    algo: AlgorithmSpec,
    config: MgcConfig,
}

fn execute(exp: &Experiment, command: &str, jobs: Vec<Job>, compare: bool) -> Result<RunReport> {
    let hash = exp.config_hash()?;
    let data = exp.dataset()?;
    let mut out = Writer::new(&exp.out_dir)?;
    let mut cells = Vec::new();
    let mut evaluations: BTreeMap<String, Vec<(u64, PolicyEvaluation)>> = BTreeMap::new();
    let order: Vec<String> = jobs.iter().map(|j| j.name.clone()).collect();
    for job in &jobs {
        let mut runs = Vec::new();
        for &seed in &exp.seeds {
            let status = match run_cell(&job.algo, &job.config, &data, seed) {
                Ok(cell) => {
                    if let Some(curve) = &cell.curve {
                        let mut buf = Vec::new();
                        write_training_log(curve, &mut buf)?;
                        out.write(&format!("curves/{}_seed{seed}.csv", job.name), &buf)?;
                    }
                    if let (true, Some(ck)) = (exp.save_checkpoints, &cell.checkpoint) {
                        out.write(
                            &format!("checkpoints/{}_seed{seed}.json", job.name),
                            &serde_json::to_vec(ck)?,
                        )?;
                    }
                    runs.push((seed, cell.evaluation));
                    "ok".to_string()
                }
                Err(e) => format!("failed: {e}"),
            };
            cells.push(CellRecord {
                name: job.name.clone(),
                seed,
                status,
            });
        }
        out.write(
            &format!("distributions/{}.csv", job.name),
            &distribution_csv(&runs)?,
        )?;
        evaluations.insert(job.name.clone(), runs);
    }
    let rows = if compare {
        let rows = comparison_rows(&evaluations, &order)?;
        out.write("comparison.csv", &comparison_csv(&rows)?)?;
        rows
    } else {
        Vec::new()
    };
    out.write("summary.csv", &summary_csv(&evaluations, &order)?)?;
    let created_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut outputs = out.outputs.clone();
    outputs.push("manifest.toml".into());
    let manifest = Manifest {
        command: command.to_string(),
        config_hash: hash,
        seeds: exp.seeds.clone(),
        scenario: exp.scenario.clone(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix,
        cells,
        outputs,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    out.write("manifest.toml", text.as_bytes())?;
    Ok(RunReport {
        manifest,
        rows,
        evaluations,
    })
}

/// Every listed algorithm on the configured community.
pub fn run_comparison(exp: &Experiment) -> Result<RunReport> {
    let jobs = exp
        .algorithms
        .iter()
        .map(|(name, algo)| Job {
            name: name.clone(),
            algo: algo.clone(),
            config: exp.env.clone(),
        })
        .collect();
    execute(exp, "compare", jobs, true)
}

fn diffcarl_hp(exp: &Experiment) -> Hyperparams {
    match exp.algorithms.get("diffcarl") {
        Some(AlgorithmSpec::DiffCarl(hp)) => hp.clone(),
        _ => Hyperparams::desk(),
    }
}

/// DiffCarl for each `lambda_risk` in the sweep list, one distribution
/// file per value.
pub fn run_risk_sweep(exp: &Experiment) -> Result<RunReport> {
    let base = diffcarl_hp(exp);
    let jobs = exp
        .risk_lambdas
        .iter()
        .map(|&lambda| Job {
            name: format!("risk_lambda_{lambda}"),
            algo: AlgorithmSpec::DiffCarl(Hyperparams {
                lambda_risk: lambda,
                ..base.clone()
            }),
            config: exp.env.clone(),
        })
        .collect();
    execute(exp, "sweep-risk", jobs, false)
}

/// DiffCarl trained and evaluated under each carbon price; emissions are
/// recorded whatever the price.
pub fn run_carbon_sweep(exp: &Experiment) -> Result<RunReport> {
    let base = diffcarl_hp(exp);
    let jobs = exp
        .carbon_prices
        .iter()
        .map(|&price| Job {
            name: format!("carbon_price_{price}"),
            algo: AlgorithmSpec::DiffCarl(base.clone()),
            config: MgcConfig {
                carbon_price: price,
                ..exp.env.clone()
            },
        })
        .collect();
    execute(exp, "sweep-carbon", jobs, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improvement_examples() {
        assert!((relative_improvement(741.86, 965.30).unwrap() + 30.12).abs() < 0.01);
        assert!((relative_improvement(741.86, 724.84).unwrap() - 2.29).abs() < 0.01);
        assert_eq!(relative_improvement(5.0, 5.0).unwrap(), 0.0);
        assert!(relative_improvement(0.0, 1.0).is_err());
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let cfg = ExperimentConfig::default();
        let h = cfg.resolve().unwrap().config_hash().unwrap();
        let mut same = cfg.clone();
        same.run.out_dir = "elsewhere".into();
        same.algorithms
            .get_mut("diffcarl")
            .unwrap()
            .insert("gamma".into(), toml::Value::Float(0.95));
        assert_eq!(same.resolve().unwrap().config_hash().unwrap(), h);
        let mut diff = cfg;
        diff.env.carbon_price = Some(0.5);
        assert_ne!(diff.resolve().unwrap().config_hash().unwrap(), h);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("[run]\nseeds = []")
            .unwrap()
            .resolve()
            .is_err());
        assert!(ExperimentConfig::from_toml("[algorithms.ppo]")
            .unwrap()
            .resolve()
            .is_err());
        assert!(ExperimentConfig::from_toml(
            "[env]\nscenario = \"custom\"\n[env.devices]\nloads = 0\npvs = 1\ness = 1\ncdgs = 1"
        )
        .unwrap()
        .resolve()
        .is_err());
        assert!(ExperimentConfig::from_toml("[run]\nbogus = 1").is_err());
    }
}
