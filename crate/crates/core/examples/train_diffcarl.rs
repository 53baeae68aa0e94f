//! Trains DiffCarl on the synthetic two-microgrid community and compares
//! its greedy test cost with the myopic and offline schedulers.
//!
//! `cargo run --release --example train_diffcarl -- seed=1 episodes=100 lambda_risk=0.5`
//!
//! Any hyperparameter name can be overridden with `name=value`; `seed`
//! selects the data, initialisation and training seed.

use diffcarl::agent::{train, Hyperparams};
use diffcarl::codec::ActionCodec;
use diffcarl::scenario::{synthetic_profiles, Dataset, Scenario, SyntheticSpec};
use diffcarl::schedulers::{myopic_rollout, offline_dp, DpGrid};
use diffcarl::training::{evaluate_days, TrainingData};
use std::time::Instant;

fn main() -> diffcarl::Result<()> {
    let mut seed = 0u64;
    let mut table = toml::Value::try_from(Hyperparams::desk()).expect("serialisable");
    for arg in std::env::args().skip(1) {
        let (key, value) = arg.split_once('=').expect("arguments look like name=value");
        if key == "seed" {
            seed = value.parse().expect("integer seed");
            continue;
        }
        let parsed: toml::Value = toml::from_str(&format!("v = {value}"))
            .map(|t: toml::Table| t["v"].clone())
            .expect("TOML value");
        table
            .as_table_mut()
            .expect("table")
            .insert(key.to_string(), parsed);
    }
    let hp: Hyperparams = table.try_into().expect("valid hyperparameters");

    let config = Scenario::TwoMg.build(seed)?;
    let profiles = synthetic_profiles(&SyntheticSpec::default(), config.profiles_needed(), seed)?;
    let data = Dataset::from_profiles(&profiles)?;
    let test = data.test.take(7);
    let training = TrainingData::new(config.clone(), data.train, test.clone())?;
    let codec = ActionCodec::default();

    let t0 = Instant::now();
    let (agent, log) = train(&training, &hp, &codec, seed)?;
    println!(
        "trained {} updates in {:.1}s",
        log.updates,
        t0.elapsed().as_secs_f64()
    );
    for p in log.curve.iter().step_by(4) {
        println!(
            "episode {:4}  reward {:8.3}  cost {:9.2}  carbon {:9.1}",
            p.episode, p.mean_test_reward, p.mean_test_cost, p.mean_test_carbon
        );
    }

    let runs = evaluate_days(&mut agent.greedy(), &test, &config, seed)?;
    let diffcarl: f64 = runs.iter().map(|r| r.total_cost).sum();
    let carbon: f64 = runs.iter().map(|r| r.total_carbon_kg).sum();
    let violation: f64 = runs.iter().map(|r| r.total_violation_kwh).sum();
    let mut myopic = 0.0;
    let mut offline = 0.0;
    for day in test.iter() {
        myopic += myopic_rollout(day, &config, &codec)?.total_cost;
        offline += offline_dp(day, &config, &codec, &DpGrid::default())?
            .1
            .total_cost;
    }
    println!("test cost over {} days", test.len());
    println!("  diffcarl {diffcarl:10.2}  (carbon {carbon:.1} kg, violation {violation:.1} kWh)");
    println!("  myopic   {myopic:10.2}");
    println!("  offline  {offline:10.2}");
    Ok(())
}
