//! Runs a small comparison experiment from an inline TOML config and prints
//! the comparison table. Outputs land in the system temp directory.
//!
//! `cargo run --release --example compare`

use diffcarl::harness::{run_comparison, ExperimentConfig};

const CONFIG: &str = r#"
[profiles]
eval_days = 7

[algorithms.diffcarl]
episodes = 20
updates_per_episode = 10
eval_interval = 5

[algorithms.dqn]
[algorithms.myopic]
[algorithms.day_ahead]
[algorithms.mpc]
horizon = 8
[algorithms.offline]

[run]
seeds = [0]
"#;

fn main() -> diffcarl::Result<()> {
    let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
    cfg.run.out_dir = std::env::temp_dir().join("diffcarl_compare");
    let exp = cfg.resolve()?;
    let report = run_comparison(&exp)?;
    println!(
        "{:<10} {:>12} {:>12} {:>10}",
        "algorithm", "cost", "carbon_kg", "vs diffcarl"
    );
    for row in &report.rows {
        let imp = row
            .improvement_pct
            .map_or_else(String::new, |v| format!("{v:+.2}%"));
        println!(
            "{:<10} {:>12.2} {:>12.1} {imp:>10}",
            row.algorithm, row.total_cost, row.total_carbon_kg
        );
    }
    println!("config hash {}", report.manifest.config_hash);
    println!("outputs in {}", exp.out_dir.display());
    Ok(())
}
