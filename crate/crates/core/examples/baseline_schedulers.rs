//! Myopic, day-ahead, MPC and offline schedulers on a week of test days.
//!
//! `cargo run --release --example baseline_schedulers`

use diffcarl::codec::ActionCodec;
use diffcarl::env::default_config_2mg;
use diffcarl::scenario::{synthetic_profiles, Dataset, SyntheticSpec};
use diffcarl::schedulers::{day_ahead, mpc, myopic_rollout, offline_dp, DpGrid, ForecastModel};

fn main() -> diffcarl::Result<()> {
    let config = default_config_2mg();
    let codec = ActionCodec::default();
    let grid = DpGrid::default();
    let model = ForecastModel::default();
    let data = Dataset::from_profiles(&synthetic_profiles(&SyntheticSpec::default(), 2, 0)?)?;

    let mut totals = [0.0; 5];
    for (d, day) in data.test.take(7).iter().enumerate() {
        let seed = d as u64;
        let costs = [
            myopic_rollout(day, &config, &codec)?.total_cost,
            day_ahead(day, &config, &codec, &model, &grid, seed)?.total_cost,
            mpc(day, &config, &codec, &model, &grid, 8, seed)?.total_cost,
            mpc(
                day,
                &config,
                &codec,
                &ForecastModel::perfect(),
                &grid,
                8,
                seed,
            )?
            .total_cost,
            offline_dp(day, &config, &codec, &grid)?.1.total_cost,
        ];
        println!("day {d}: {costs:9.2?}");
        for (t, c) in totals.iter_mut().zip(costs) {
            *t += c;
        }
    }
    for (name, t) in ["myopic", "day-ahead", "mpc-8", "mpc-8 (exact)", "offline"]
        .iter()
        .zip(totals)
    {
        println!("{name:>14} {t:10.2}");
    }
    Ok(())
}
