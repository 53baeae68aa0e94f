//! Trains DiffCarl across risk-sensitivity values and reports the spread
//! of per-day test costs.
//!
//! `cargo run --release --example risk_study -- [episodes]`

use diffcarl::harness::{run_risk_sweep, ExperimentConfig};

fn main() -> diffcarl::Result<()> {
    let episodes: usize = std::env::args()
        .nth(1)
        .map_or(40, |s| s.parse().expect("episode count"));
    let mut cfg = ExperimentConfig::from_toml(&format!(
        "[profiles]\neval_days = 20\n[algorithms.diffcarl]\nepisodes = {episodes}\n[run]\nseeds = [0]\nrisk_lambdas = [-1.0, 0.0, 1.0]\n"
    ))?;
    cfg.run.out_dir = std::env::temp_dir().join("diffcarl_risk");
    let report = run_risk_sweep(&cfg.resolve()?)?;
    for (name, runs) in &report.evaluations {
        for (seed, ev) in runs {
            let c = &ev.cost;
            println!(
                "{name:<18} seed {seed}: mean {:8.2} std {:7.2} max {:8.2} cvar {:8.2}",
                c.mean, c.std, c.max, c.cvar
            );
        }
    }
    Ok(())
}
