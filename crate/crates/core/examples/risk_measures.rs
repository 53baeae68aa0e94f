//! Tail risk of a discrete return distribution and the risk-adjusted
//! bootstrap target for several sensitivities.
//!
//! `cargo run --example risk_measures`

use diffcarl::agent::{cvar_lower, cvar_upper, risk_adjusted_target, Hyperparams};

fn main() -> diffcarl::Result<()> {
    let values: Vec<f64> = (1..=100).map(f64::from).collect();
    let probs = vec![0.01; 100];
    println!("lower tail 5%: {}", cvar_lower(&values, &probs, 0.95)?);
    println!("upper tail 5%: {}", cvar_upper(&values, &probs, 0.95)?);

    let q = [-3.0, -1.0, -0.5, 2.0];
    let pi = [0.1, 0.2, 0.5, 0.2];
    for lambda_risk in [-1.0, -0.1, 0.0, 0.1, 1.0] {
        let hp = Hyperparams {
            lambda_risk,
            ..Hyperparams::default()
        };
        let y = risk_adjusted_target(-0.4, false, &q, &pi, &hp)?;
        println!("lambda {lambda_risk:5.1}: target {y:.4}");
    }
    Ok(())
}
