//! Discrete action set shared by the learning agents and the schedulers.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{ActionSetpoints, MgInputs, MgcConfig, MicrogridConfig, Setpoint};
use crate::error::{Error, Result};

/// Per-device level sets. A joint index enumerates ESS levels slowest and
/// load-shedding levels fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCodec {
    /// Fractions of rated power; negative charges, positive discharges.
    pub ess_levels: Vec<f64>,
    /// Fractions of the CDG operating range above `p_min`.
    pub cdg_levels: Vec<f64>,
    /// Fractions of the current load.
    pub ls_levels: Vec<f64>,
}

impl Default for ActionCodec {
    fn default() -> Self {
        Self {
            ess_levels: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            cdg_levels: vec![0.0, 0.5, 1.0],
            ls_levels: vec![0.0, 0.25, 0.5],
        }
    }
}

/// Level indices of one decoded action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionLevels {
    pub ess: usize,
    pub cdg: usize,
    pub ls: usize,
}

impl ActionCodec {
    pub fn validate(&self) -> Result<()> {
        if self.ess_levels.is_empty() || self.cdg_levels.is_empty() || self.ls_levels.is_empty() {
            return Err(Error::Config(
                "every codec level set must be non-empty".into(),
            ));
        }
        if self.len() < 2 {
            return Err(Error::Config(
                "codec needs at least two joint actions".into(),
            ));
        }
        let bad = |v: &[f64], lo: f64| v.iter().any(|x| !(x.is_finite() && *x >= lo && *x <= 1.0));
        if bad(&self.ess_levels, -1.0) || bad(&self.cdg_levels, 0.0) || bad(&self.ls_levels, 0.0) {
            return Err(Error::Config("codec levels outside their ranges".into()));
        }
        Ok(())
    }

    /// Number of joint actions per microgrid.
    pub fn len(&self) -> usize {
        self.ess_levels.len() * self.cdg_levels.len() * self.ls_levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encode(&self, levels: ActionLevels) -> Result<usize> {
        if levels.ess >= self.ess_levels.len()
            || levels.cdg >= self.cdg_levels.len()
            || levels.ls >= self.ls_levels.len()
        {
            return Err(Error::pre(format!("levels {levels:?} outside the codec")));
        }
        Ok((levels.ess * self.cdg_levels.len() + levels.cdg) * self.ls_levels.len() + levels.ls)
    }

    pub fn levels(&self, index: usize) -> Result<ActionLevels> {
        if index >= self.len() {
            return Err(Error::pre(format!(
                "action {index} outside 0..{}",
                self.len()
            )));
        }
        let ls = index % self.ls_levels.len();
        let rest = index / self.ls_levels.len();
        Ok(ActionLevels {
            ess: rest / self.cdg_levels.len(),
            cdg: rest % self.cdg_levels.len(),
            ls,
        })
    }

    /// Setpoint requested by action `index` for one microgrid at `load_kw`.
    pub fn decode(&self, index: usize, mg: &MicrogridConfig, load_kw: f64) -> Result<Setpoint> {
        let l = self.levels(index)?;
        let e = self.ess_levels[l.ess];
        let p_ess_kw = if e < 0.0 {
            e * mg.ess.p_ch_max_kw
        } else {
            e * mg.ess.p_dis_max_kw
        };
        let cdg = &mg.cdg;
        let p_cdg_kw = cdg.p_min_kw + self.cdg_levels[l.cdg] * (cdg.p_max_kw - cdg.p_min_kw);
        let p_ls_kw = self.ls_levels[l.ls].min(mg.shed_max_frac) * load_kw.max(0.0);
        Ok(Setpoint {
            p_ess_kw,
            p_cdg_kw,
            p_ls_kw,
        })
    }

    /// Decodes one index per microgrid.
    pub fn decode_joint(
        &self,
        indices: &[usize],
        config: &MgcConfig,
        inputs: &[MgInputs],
    ) -> Result<ActionSetpoints> {
        if indices.len() != config.num_microgrids() || inputs.len() != indices.len() {
            return Err(Error::Shape {
                expected: config.num_microgrids(),
                actual: indices.len(),
            });
        }
        let microgrids = indices
            .iter()
            .zip(&config.microgrids)
            .zip(inputs)
            .map(|((&i, mg), inp)| self.decode(i, mg, inp.load_kw))
            .collect::<Result<_>>()?;
        Ok(ActionSetpoints { microgrids })
    }

    /// SHA-256 over the decoded setpoint table of every microgrid at unit
    /// load, hex encoded.
    pub fn table_digest(&self, config: &MgcConfig) -> String {
        let mut h = Sha256::new();
        for mg in &config.microgrids {
            for i in 0..self.len() {
                let s = self.decode(i, mg, 1.0).expect("index in range");
                for v in [s.p_ess_kw, s.p_cdg_kw, s.p_ls_kw] {
                    h.update(v.to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{default_config_2mg, default_microgrid};

    #[test]
    fn default_has_45_actions_and_round_trips() {
        let c = ActionCodec::default();
        assert_eq!(c.len(), 45);
        for i in 0..45 {
            assert_eq!(c.encode(c.levels(i).unwrap()).unwrap(), i);
        }
        assert!(c.levels(45).is_err());
    }

    #[test]
    fn decoded_setpoints_respect_static_limits() {
        let c = ActionCodec::default();
        let mg = default_microgrid(0);
        for i in 0..c.len() {
            let s = c.decode(i, &mg, 300.0).unwrap();
            assert!(s.p_ess_kw >= -mg.ess.p_ch_max_kw && s.p_ess_kw <= mg.ess.p_dis_max_kw);
            assert!(s.p_cdg_kw >= mg.cdg.p_min_kw && s.p_cdg_kw <= mg.cdg.p_max_kw);
            assert!(s.p_ls_kw >= 0.0 && s.p_ls_kw <= mg.shed_max_frac * 300.0);
        }
        let idle = c
            .encode(ActionLevels {
                ess: 2,
                cdg: 0,
                ls: 0,
            })
            .unwrap();
        assert_eq!(idle, 18);
        assert_eq!(
            c.decode(idle, &mg, 300.0).unwrap(),
            Setpoint {
                p_ess_kw: 0.0,
                p_cdg_kw: 0.0,
                p_ls_kw: 0.0
            }
        );
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let cfg = default_config_2mg();
        let c = ActionCodec::default();
        assert_eq!(c.table_digest(&cfg), c.table_digest(&cfg));
        let mut d = c.clone();
        d.ls_levels[2] = 0.4;
        assert_ne!(c.table_digest(&cfg), d.table_digest(&cfg));
    }
}
