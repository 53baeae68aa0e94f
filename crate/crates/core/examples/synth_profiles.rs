//! Synthesises profiles for the two-microgrid community, writes them as CSV
//! and shows the monthly train/test split.
//!
//! `cargo run --example synth_profiles -- [out_dir]`

use std::path::PathBuf;

use diffcarl::profiles::{load_csv, split_train_test, write_csv};
use diffcarl::scenario::{synthetic_profiles, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out)?;
    let profiles = synthetic_profiles(&SyntheticSpec::default(), 2, 7)?;
    for (i, p) in profiles.iter().enumerate() {
        let path = out.join(format!("profile_{i}.csv"));
        write_csv(p, &path)?;
        let back = load_csv(&path)?;
        assert_eq!(&back, p);
        let split = split_train_test(p)?;
        println!(
            "{}: {} hours, {} train / {} test",
            path.display(),
            p.len(),
            split.train.len(),
            split.test.len()
        );
        for day in p.days().iter().take(2) {
            let load: f64 = (0..day.len()).map(|h| day.row(h).load_kw).sum();
            let pv: f64 = (0..day.len()).map(|h| day.row(h).pv_kw).sum();
            let peak = (0..day.len())
                .map(|h| day.row(h).price)
                .fold(f64::MIN, f64::max);
            println!("  day load {load:8.1} kWh, pv {pv:7.1} kWh, peak price {peak:.3} $/kWh");
        }
    }
    Ok(())
}
