//! Least-squares decay fits in log and log-log coordinates.

use serde::Serialize;

use crate::error::{LabError, Result};

/// Values at or below this are treated as numerical zero.
pub const FLOOR: f64 = 1e-14;
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// f(t) = C exp(-alpha t)
    Exponential,
    /// f(t) = C (1 + t)^k
    Power,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub model: FitModel,
    pub amplitude: f64,
    /// alpha for the exponential model, k for the power model
    pub rate: f64,
    pub r2: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum FitOutcome {
    Fitted(DecayFit),
    /// Fewer than [`MIN_SAMPLES`] values above [`FLOOR`].
    DecayedToFloor { max_value: f64 },
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&DecayFit> {
        match self {
            FitOutcome::Fitted(f) => Some(f),
            FitOutcome::DecayedToFloor { .. } => None,
        }
    }
}

/// Ordinary least squares y = a + b x; returns (a, b, r2).
pub fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(&xi, &yi)| (yi - a - b * xi).powi(2)).sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (a, b, r2)
}

pub fn decay_fit(times: &[f64], values: &[f64], model: FitModel) -> Result<FitOutcome> {
    if times.len() != values.len() {
        return Err(LabError::Shape(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
        return Err(LabError::Contract(format!("decay fit needs nonnegative values, got {v}")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut t_lo = f64::INFINITY;
    let mut t_hi = f64::NEG_INFINITY;
    for (&t, &f) in times.iter().zip(values) {
        if f > FLOOR {
            xs.push(match model {
                FitModel::Exponential => t,
                FitModel::Power => (1.0 + t).ln(),
            });
            ys.push(f.ln());
            t_lo = t_lo.min(t);
            t_hi = t_hi.max(t);
        }
    }
    if xs.len() < MIN_SAMPLES {
        return Ok(FitOutcome::DecayedToFloor {
            max_value: values.iter().cloned().fold(0.0, f64::max),
        });
    }
    let (a, b, r2) = linear_regression(&xs, &ys);
    let rate = match model {
        FitModel::Exponential => -b,
        FitModel::Power => b,
    };
    Ok(FitOutcome::Fitted(DecayFit {
        model,
        amplitude: a.exp(),
        rate,
        r2,
        t_lo,
        t_hi,
        samples: xs.len(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times() -> Vec<f64> {
        (0..40).map(|i| 2.5 * i as f64).collect()
    }

    #[test]
    fn exponential_recovered() {
        let t = times();
        let f: Vec<f64> = t.iter().map(|t| 3.0 * (-0.3 * t).exp()).collect();
        let fit = decay_fit(&t, &f, FitModel::Exponential).unwrap();
        let fit = fit.fit().unwrap();
        assert!((fit.rate - 0.3).abs() < 1e-6);
        assert!((fit.amplitude - 3.0).abs() < 1e-6);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_recovered() {
        let t = times();
        let f: Vec<f64> = t.iter().map(|t| 0.7 / (1.0 + t)).collect();
        let fit = decay_fit(&t, &f, FitModel::Power).unwrap();
        assert!((fit.fit().unwrap().rate + 1.0).abs() < 1e-6);
    }

    #[test]
    fn floor_reported() {
        let t = times();
        let f = vec![0.0; t.len()];
        assert!(matches!(
            decay_fit(&t, &f, FitModel::Exponential).unwrap(),
            FitOutcome::DecayedToFloor { .. }
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(decay_fit(&[1.0], &[1.0, 2.0], FitModel::Power), Err(LabError::Shape(_))));
        assert!(matches!(decay_fit(&[1.0], &[-1.0], FitModel::Power), Err(LabError::Contract(_))));
    }
}
