//! Short DQN, SAC and DDPG training runs on the two-microgrid community.
//!
//! `cargo run --release --example rl_baselines -- [episodes]`

use diffcarl::agent::Hyperparams;
use diffcarl::codec::ActionCodec;
use diffcarl::env::default_config_2mg;
use diffcarl::metrics::evaluate_policy;
use diffcarl::rl_baselines::{train_baseline, BaselineAlgo, BaselineSpec};
use diffcarl::scenario::{synthetic_profiles, Dataset, SyntheticSpec};
use diffcarl::training::TrainingData;

fn main() -> diffcarl::Result<()> {
    let episodes = std::env::args()
        .nth(1)
        .map_or(20, |s| s.parse().expect("episode count"));
    let config = default_config_2mg();
    let data = Dataset::from_profiles(&synthetic_profiles(&SyntheticSpec::default(), 2, 0)?)?;
    let test = data.test.take(7);
    let training = TrainingData::new(config.clone(), data.train, test.clone())?;
    let hp = Hyperparams {
        episodes,
        ..Hyperparams::desk()
    };
    let codec = ActionCodec::default();
    for algo in BaselineAlgo::ALL {
        let (agent, log) = train_baseline(&training, &BaselineSpec::new(algo), &hp, &codec, 0)?;
        let mut ctl = agent.controller();
        let ev = evaluate_policy(ctl.as_mut(), &test, &config, 0, hp.alpha_cvar)?;
        println!(
            "{:>5}: {} updates, test cost mean {:.2} std {:.2} cvar {:.2}",
            algo.tag(),
            log.updates,
            ev.cost.mean,
            ev.cost.std,
            ev.cost.cvar
        );
    }
    Ok(())
}
