//! Community layouts and synthetic profile sets.

use chrono::NaiveDate;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::{community, default_config_2mg, default_microgrid, MgcConfig};
use crate::error::{Error, Result};
use crate::profiles::{nominal_profile, split_train_test, synthesize, DaySet, TimeSeriesProfile};
use crate::rng;

/// Device inventory of a community. Each renewable unit is one nominal
/// PV + wind output; each load unit is one nominal load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceCounts {
    pub loads: usize,
    pub pvs: usize,
    pub ess: usize,
    pub cdgs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    #[default]
    #[serde(rename = "2mg")]
    TwoMg,
    Ieee15,
    Ieee33,
    Custom(DeviceCounts),
}

impl Scenario {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "2mg" => Ok(Self::TwoMg),
            "ieee15" => Ok(Self::Ieee15),
            "ieee33" => Ok(Self::Ieee33),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::TwoMg => "2mg",
            Self::Ieee15 => "ieee15",
            Self::Ieee33 => "ieee33",
            Self::Custom(_) => "custom",
        }
    }

    pub fn devices(&self) -> DeviceCounts {
        match self {
            Self::TwoMg => DeviceCounts {
                loads: 2,
                pvs: 2,
                ess: 2,
                cdgs: 2,
            },
            Self::Ieee15 => DeviceCounts {
                loads: 10,
                pvs: 2,
                ess: 3,
                cdgs: 2,
            },
            Self::Ieee33 => DeviceCounts {
                loads: 26,
                pvs: 5,
                ess: 7,
                cdgs: 5,
            },
            Self::Custom(c) => *c,
        }
    }

    /// Community configuration. The two-microgrid case uses the reference
    /// devices unchanged; other inventories get one microgrid per storage
    /// unit, round-robin device assignment and per-device rating factors
    /// drawn from [0.8, 1.2].
    pub fn build(&self, seed: u64) -> Result<MgcConfig> {
        if let Self::TwoMg = self {
            return Ok(default_config_2mg());
        }
        let d = self.devices();
        if d.loads == 0 || d.ess == 0 {
            return Err(Error::Config(
                "a scenario needs at least one load and one ESS".into(),
            ));
        }
        let n = d.ess.max(d.cdgs);
        let mut rng = rng::seeded(rng::derive(seed, 7));
        let mut factor = || rng.gen_range(0.8..=1.2);
        let mut mgs: Vec<_> = (0..n).map(default_microgrid).collect();
        for mg in &mut mgs {
            mg.load_scale = 0.0;
            mg.pv_scale = 0.0;
            mg.wt_scale = 0.0;
        }
        for (m, mg) in mgs.iter_mut().enumerate() {
            if m < d.ess {
                let f = factor();
                let e = &mut mg.ess;
                e.capacity_kwh *= f;
                e.e_min_kwh *= f;
                e.e_max_kwh *= f;
                e.e_init_kwh *= f;
                e.p_ch_max_kw *= f;
                e.p_dis_max_kw *= f;
            }
            if m < d.cdgs {
                let f = factor();
                mg.cdg.p_max_kw *= f;
                mg.cdg.ramp_max_kw_per_h *= f;
            } else {
                mg.cdg.p_max_kw = mg.cdg.p_min_kw;
            }
        }
        for i in 0..d.loads {
            mgs[i % n].load_scale += factor();
        }
        for i in 0..d.pvs {
            let f = factor();
            let mg = &mut mgs[i % n];
            mg.pv_scale += f;
            mg.wt_scale += f;
        }
        let cfg = community(mgs);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Noisy copies of the nominal shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub start: NaiveDate,
    pub days: usize,
    pub noise_frac: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date"),
            days: 90,
            noise_frac: 0.2,
        }
    }
}

/// `count` independent noisy profiles; profile `i` uses seed
/// `derive(seed, 100 + i)`.
pub fn synthetic_profiles(
    spec: &SyntheticSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<TimeSeriesProfile>> {
    let nominal = nominal_profile(spec.start, spec.days)?;
    (0..count)
        .map(|i| synthesize(&nominal, spec.noise_frac, rng::derive(seed, 100 + i as u64)))
        .collect()
}

/// Train and test days of a profile set.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: DaySet,
    pub test: DaySet,
}

impl Dataset {
    /// Splits every profile per calendar month (days 1-21 train, 22-28
    /// test) and aligns the days.
    pub fn from_profiles(profiles: &[TimeSeriesProfile]) -> Result<Self> {
        let splits = profiles
            .iter()
            .map(split_train_test)
            .collect::<Result<Vec<_>>>()?;
        let train: Vec<_> = splits.iter().map(|s| s.train.clone()).collect();
        let test: Vec<_> = splits.into_iter().map(|s| s.test).collect();
        Ok(Self {
            train: DaySet::new(&train)?,
            test: DaySet::new(&test)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventories_match_counts() {
        let c = Scenario::Ieee33.build(1).unwrap();
        assert_eq!(c.num_microgrids(), 7);
        let with_cdg = c.microgrids.iter().filter(|m| m.cdg.p_max_kw > 0.0).count();
        assert_eq!(with_cdg, 5);
        let loads: f64 = c.microgrids.iter().map(|m| m.load_scale).sum();
        assert!(loads >= 26.0 * 0.8 && loads <= 26.0 * 1.2);
        assert_eq!(Scenario::TwoMg.build(3).unwrap(), default_config_2mg());
        assert_eq!(
            Scenario::Ieee15.build(5).unwrap(),
            Scenario::Ieee15.build(5).unwrap()
        );
    }

    #[test]
    fn three_months_split() {
        let spec = SyntheticSpec::default();
        let p = synthetic_profiles(&spec, 2, 0).unwrap();
        let d = Dataset::from_profiles(&p).unwrap();
        assert_eq!(d.train.len(), 63);
        assert_eq!(d.test.len(), 21);
        assert_eq!(d.test.day(0).len(), 2);
    }
}
