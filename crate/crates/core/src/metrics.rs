//! Per-day cost and carbon distributions of a controller.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::agent::cvar_upper;
use crate::env::{Controller, MgcConfig};
use crate::error::{Error, Result};
use crate::profiles::DaySet;
use crate::training::evaluate_days;

/// Summary of a sample of per-day values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionMetrics {
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: f64,
    /// Mean of the worst `1 - alpha` share of days.
    pub cvar: f64,
}

impl DistributionMetrics {
    pub fn from_samples(samples: &[f64], alpha: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::pre("no samples"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::pre("non-finite sample"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        };
        let probs = vec![1.0 / n; k];
        Ok(Self {
            mean,
            median,
            std: var.sqrt(),
            max: sorted[k - 1],
            cvar: cvar_upper(samples, &probs, alpha)?,
        })
    }
}

/// Per-day samples and their summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub costs: Vec<f64>,
    pub carbon_kg: Vec<f64>,
    pub violation_kwh: Vec<f64>,
    pub cost: DistributionMetrics,
    pub carbon: DistributionMetrics,
}

impl PolicyEvaluation {
    /// `day,cost,carbon_kg,violation_kwh`, one row per day.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["day", "cost", "carbon_kg", "violation_kwh"])?;
        for (d, ((c, e), v)) in self
            .costs
            .iter()
            .zip(&self.carbon_kg)
            .zip(&self.violation_kwh)
            .enumerate()
        {
            w.write_record([
                d.to_string(),
                format!("{c:.6}"),
                format!("{e:.6}"),
                format!("{v:.6}"),
            ])?;
        }
        w.flush().map_err(|e| Error::io("distribution csv", e))?;
        Ok(())
    }
}

/// Greedy rollouts of `controller` on every day of `days`.
pub fn evaluate_policy<C: Controller + ?Sized>(
    controller: &mut C,
    days: &DaySet,
    config: &MgcConfig,
    seed: u64,
    alpha_cvar: f64,
) -> Result<PolicyEvaluation> {
    if days.is_empty() {
        return Err(Error::pre("evaluation needs at least one day"));
    }
    let runs = evaluate_days(controller, days, config, seed)?;
    let costs: Vec<f64> = runs.iter().map(|r| r.total_cost).collect();
    let carbon_kg: Vec<f64> = runs.iter().map(|r| r.total_carbon_kg).collect();
    let violation_kwh = runs.iter().map(|r| r.total_violation_kwh).collect();
    Ok(PolicyEvaluation {
        cost: DistributionMetrics::from_samples(&costs, alpha_cvar)?,
        carbon: DistributionMetrics::from_samples(&carbon_kg, alpha_cvar)?,
        costs,
        carbon_kg,
        violation_kwh,
    })
}
