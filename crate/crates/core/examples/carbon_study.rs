//! Trains DiffCarl with and without a carbon price and compares daily
//! emissions and cost.
//!
//! `cargo run --release --example carbon_study -- [episodes]`

use diffcarl::harness::{run_carbon_sweep, ExperimentConfig};

fn main() -> diffcarl::Result<()> {
    let episodes: usize = std::env::args()
        .nth(1)
        .map_or(40, |s| s.parse().expect("episode count"));
    let mut cfg = ExperimentConfig::from_toml(&format!(
        "[algorithms.diffcarl]\nepisodes = {episodes}\n[run]\nseeds = [0]\ncarbon_prices = [0.0, 0.025, 0.1]\n"
    ))?;
    cfg.run.out_dir = std::env::temp_dir().join("diffcarl_carbon");
    let report = run_carbon_sweep(&cfg.resolve()?)?;
    for (name, runs) in &report.evaluations {
        for (seed, ev) in runs {
            println!(
                "{name:<22} seed {seed}: daily carbon {:8.1} kg, daily cost {:8.2}",
                ev.carbon.mean, ev.cost.mean
            );
        }
    }
    Ok(())
}
