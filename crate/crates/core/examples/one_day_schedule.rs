//! Hour-by-hour trace of the offline optimum on one synthetic day.
//!
//! `cargo run --release --example one_day_schedule`

use diffcarl::codec::ActionCodec;
use diffcarl::env::default_config_2mg;
use diffcarl::scenario::{synthetic_profiles, SyntheticSpec};
use diffcarl::schedulers::{myopic_rollout, offline_dp, DpGrid};

fn main() -> diffcarl::Result<()> {
    let config = default_config_2mg();
    let codec = ActionCodec::default();
    let profiles = synthetic_profiles(&SyntheticSpec::default(), 2, 0)?;
    let day: Vec<_> = profiles.iter().map(|p| p.days()[0].clone()).collect();

    let (plan, run) = offline_dp(&day, &config, &codec, &DpGrid::default())?;
    println!("hour | mg  ess_kw  cdg_kw  shed_kw   soc_kwh   grid_kw |  cost");
    for rec in &run.hours {
        for (m, mg) in rec.microgrids.iter().enumerate() {
            println!(
                "{:4} | {m:2} {:7.1} {:7.1} {:8.1} {:9.1} {:9.1} | {:6.2}  action {}",
                rec.hour,
                mg.p_ess_kw,
                mg.p_cdg_kw,
                mg.p_ls_kw,
                mg.soc_kwh,
                mg.grid_kw,
                mg.cost,
                plan.schedule[m][rec.hour]
            );
        }
    }
    let myopic = myopic_rollout(&day, &config, &codec)?;
    println!(
        "offline {:.2} $ ({:.1} kg)",
        run.total_cost, run.total_carbon_kg
    );
    println!(
        "myopic  {:.2} $ ({:.1} kg)",
        myopic.total_cost, myopic.total_carbon_kg
    );
    println!("breakdown {:?}", run.breakdown);
    Ok(())
}
