//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::agent::{self, DiffCarl};
use crate::checkpoint::Checkpoint;
use crate::codec::ActionCodec;
use crate::error::{Error, Result};
use crate::harness::{
    distribution_csv, run_carbon_sweep, run_cell, run_comparison, run_risk_sweep, AlgorithmSpec,
    Experiment, ExperimentConfig, RunReport,
};
use crate::metrics::evaluate_policy;
use crate::profiles::write_csv;
use crate::rl_baselines::{train_baseline, BaselineAgent};
use crate::training::{write_training_log, TrainingData};

#[derive(Debug, Parser)]
#[command(
    name = "diffcarl",
    version,
    about = "Microgrid community scheduling experiments"
)]
pub struct Cli {
    /// Experiment TOML file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Restricts the run to this seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `run.out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Algorithm tag (diffcarl, dqn, sac, ddpg, myopic, day_ahead, mpc, offline).
    #[arg(long, global = true)]
    pub algo: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic profile CSVs.
    Synth,
    /// Train one learner and save its checkpoint and learning curve.
    Train,
    /// Evaluate a scheduler or a saved checkpoint on the test days.
    Evaluate,
    /// Run every configured algorithm and write the comparison table.
    Compare,
    /// DiffCarl over the configured risk-sensitivity values.
    SweepRisk,
    /// DiffCarl over the configured carbon prices.
    SweepCarbon,
}

/// Exit codes: configuration problems are 2, runtime failures 1.
#[derive(Debug)]
enum Failure {
    Config(Error),
    Runtime(Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("configuration error: {e}"),
                Failure::Runtime(e) => eprintln!("error: {e}"),
            }
            f.code()
        }
    }
}

fn experiment(cli: &Cli) -> Result<Experiment, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(Failure::Config)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        cfg.run.out_dir = out.clone();
    }
    if let Some(tag) = &cli.algo {
        let table = cfg.algorithms.remove(tag).unwrap_or_default();
        let diffcarl = cfg.algorithms.remove("diffcarl");
        cfg.algorithms.clear();
        if let Some(d) = diffcarl {
            cfg.algorithms.insert("diffcarl".into(), d);
        }
        cfg.algorithms.insert(tag.clone(), table);
    }
    let mut exp = cfg.resolve().map_err(Failure::Config)?;
    if let Some(tag) = &cli.algo {
        exp.algorithms.retain(|k, _| k == tag);
    }
    Ok(exp)
}

fn selected(exp: &Experiment) -> Result<(&String, &AlgorithmSpec), Failure> {
    match exp.algorithms.len() {
        1 => Ok(exp.algorithms.iter().next().expect("one algorithm")),
        _ => Err(Failure::Config(Error::Config(
            "choose one algorithm with --algo".into(),
        ))),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| runtime(Error::io(dir, e)))
}

fn checkpoint_path(exp: &Experiment, tag: &str, seed: u64) -> PathBuf {
    exp.out_dir.join(format!("{tag}_seed{seed}.json"))
}

fn report(r: &RunReport) -> Result<(), Failure> {
    for row in &r.rows {
        let imp = row
            .improvement_pct
            .map(|v| format!("{v:+.2}%"))
            .unwrap_or_default();
        println!(
            "{:<12} cost {:>12.2}  carbon {:>12.1} kg  {imp}",
            row.algorithm, row.total_cost, row.total_carbon_kg
        );
    }
    for (name, runs) in &r.evaluations {
        for (seed, ev) in runs {
            println!(
                "{name} seed {seed}: mean cost {:.2}, std {:.2}, carbon {:.1}",
                ev.cost.mean, ev.cost.std, ev.carbon.mean
            );
        }
    }
    println!(
        "outputs in {} files, manifest hash {}",
        r.manifest.outputs.len(),
        r.manifest.config_hash
    );
    match r.failures() {
        0 => Ok(()),
        n => Err(runtime(Error::pre(format!(
            "{n} run(s) failed; see manifest.toml"
        )))),
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let exp = experiment(cli)?;
    let seed = exp.seeds[0];
    match cli.command {
        Command::Synth => {
            ensure_dir(&exp.out_dir)?;
            let profiles = exp.load_profiles().map_err(runtime)?;
            for (i, p) in profiles.iter().enumerate() {
                let path = exp.out_dir.join(format!("profile_{i}.csv"));
                write_csv(p, &path).map_err(runtime)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Train => {
            let (tag, algo) = selected(&exp)?;
            ensure_dir(&exp.out_dir)?;
            let data = exp.dataset().map_err(runtime)?;
            let training =
                TrainingData::new(exp.env.clone(), data.train, data.test).map_err(runtime)?;
            let codec = ActionCodec::default();
            let (ck, curve) = match algo {
                AlgorithmSpec::DiffCarl(hp) => {
                    let (a, log) = agent::train(&training, hp, &codec, seed).map_err(runtime)?;
                    (a.to_checkpoint().map_err(runtime)?, log.curve)
                }
                AlgorithmSpec::Baseline { spec, shared } => {
                    let (a, log) =
                        train_baseline(&training, spec, shared, &codec, seed).map_err(runtime)?;
                    (a.to_checkpoint().map_err(runtime)?, log.curve)
                }
                _ => {
                    return Err(Failure::Config(Error::Config(format!(
                        "{tag} is not a learner"
                    ))))
                }
            };
            let path = checkpoint_path(&exp, tag, seed);
            ck.save(&path).map_err(runtime)?;
            let curve_path = exp.out_dir.join(format!("{tag}_seed{seed}_curve.csv"));
            let f = std::fs::File::create(&curve_path)
                .map_err(|e| runtime(Error::io(&curve_path, e)))?;
            write_training_log(&curve, f).map_err(runtime)?;
            if let Some(last) = curve.last() {
                println!(
                    "episode {} mean test cost {:.2}",
                    last.episode, last.mean_test_cost
                );
            }
            println!("saved {}", path.display());
            Ok(())
        }
        Command::Evaluate => {
            let (tag, algo) = selected(&exp)?;
            ensure_dir(&exp.out_dir)?;
            let data = exp.dataset().map_err(runtime)?;
            let evaluation = if let AlgorithmSpec::DiffCarl(hp)
            | AlgorithmSpec::Baseline { shared: hp, .. } = algo
            {
                let path = checkpoint_path(&exp, tag, seed);
                let ck = Checkpoint::load(&path).map_err(runtime)?;
                let alpha = hp.alpha_cvar;
                if ck.kind == "diffcarl" {
                    let a = DiffCarl::from_checkpoint(&ck).map_err(runtime)?;
                    evaluate_policy(&mut a.greedy(), &data.test, &exp.env, seed, alpha)
                } else {
                    let a = BaselineAgent::from_checkpoint(&ck).map_err(runtime)?;
                    let mut ctl = a.controller();
                    evaluate_policy(ctl.as_mut(), &data.test, &exp.env, seed, alpha)
                }
                .map_err(runtime)?
            } else {
                run_cell(algo, &exp.env, &data, seed)
                    .map_err(runtime)?
                    .evaluation
            };
            let path = exp.out_dir.join(format!("{tag}_seed{seed}_eval.csv"));
            let bytes = distribution_csv(&[(seed, evaluation.clone())]).map_err(runtime)?;
            std::fs::write(&path, bytes).map_err(|e| runtime(Error::io(&path, e)))?;
            let c = &evaluation.cost;
            println!(
                "{tag}: mean {:.2} median {:.2} std {:.2} max {:.2} cvar {:.2}; carbon mean {:.1} kg",
                c.mean, c.median, c.std, c.max, c.cvar, evaluation.carbon.mean
            );
            Ok(())
        }
        Command::Compare => report(&run_comparison(&exp).map_err(runtime)?),
        Command::SweepRisk => report(&run_risk_sweep(&exp).map_err(runtime)?),
        Command::SweepCarbon => report(&run_carbon_sweep(&exp).map_err(runtime)?),
    }
}
