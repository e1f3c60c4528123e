//! Power-law fits over report cells.

use serde::{Deserialize, Serialize};

use super::{CellSummary, ExperimentReport};
use crate::error::{Error, Result};

/// Per-cell quantity usable as either axis of a scaling fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingField {
    /// Median per-trial channel queries.
    Samples,
    Qubits,
    /// `4^n`.
    DomainSize,
    Epsilon,
    MedianError,
    MeanError,
    SuccessRate,
}

impl ScalingField {
    fn value(self, s: &CellSummary) -> Option<f64> {
        match self {
            ScalingField::Samples => s.queries_median,
            ScalingField::Qubits => Some(s.cell.n as f64),
            ScalingField::DomainSize => Some(4f64.powi(s.cell.n as i32)),
            ScalingField::Epsilon => s.cell.epsilon,
            ScalingField::MedianError => s.error_median,
            ScalingField::MeanError => s.error_mean,
            ScalingField::SuccessRate => s.success_rate,
        }
    }
}

/// `log y ≈ slope · log x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least squares on `(ln x, ln y)`. Needs at least three points with
/// positive finite coordinates and two distinct `x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 points with positive coordinates, got {}",
            logs.len()
        )));
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-24 * m {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    // A constant response is fitted perfectly by a flat line.
    let r2 = if syy <= 1e-24 * m { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ScalingFit {
        slope,
        intercept,
        r2,
        points: logs.len(),
    })
}

pub fn fit_scaling(report: &ExperimentReport, x: ScalingField, y: ScalingField) -> Result<ScalingFit> {
    let points: Vec<(f64, f64)> = report
        .cells
        .iter()
        .filter_map(|s| Some((x.value(s)?, y.value(s)?)))
        .collect();
    fit_power_law(&points)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| {
            let x = 2f64.powi(8 + 2 * i);
            (x, x.powf(-0.5))
        }).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-9);
        assert!(f.intercept.abs() < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response_has_zero_slope() {
        let f = fit_power_law(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_data_is_rejected() {
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]), Err(Error::Fit(_))));
        assert!(matches!(fit_power_law(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)]), Err(Error::Fit(_))));
        // Non-positive points are dropped before counting.
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (4.0, 3.0)]), Err(Error::Fit(_))));
    }

    #[test]
    fn learning_sweep_slope() {
        let cfg = ExperimentConfig {
            task: Task::Learn,
            channels: vec![ChannelSpec::Preset(ChannelPreset::Depolarizing { q: 0.3 })],
            partners: vec![],
            grid: ParameterGrid {
                p: vec![PNorm::ONE],
                n: vec![3],
                epsilon: vec![0.1],
                delta: vec![1.0 / 3.0],
                samples: (8..=16).map(|e| 1u64 << e).collect(),
            },
            trials: 20,
            master_seed: 3,
            c_plan: CALIBRATED_C_PLAN,
            gamma: DEFAULT_GAMMA,
            diamond_method: DiamondMethod::Unseen,
        };
        let report = run_experiment(&cfg).unwrap();
        let f = fit_scaling(&report, ScalingField::Samples, ScalingField::MedianError).unwrap();
        assert!((-0.6..=-0.4).contains(&f.slope), "{f:?}");
        assert_eq!(f.points, 9);
    }
}
