//! Regression metrics and uncertainty indices.
//!
//! For actuals `y` and predictions `ŷ` with `ȳ = mean(y)`:
//!
//! - `R² = 1 − Σ(y−ŷ)² / Σ(y−ȳ)²`
//! - `RMSE = sqrt(Σ(y−ŷ)²/n)`, `MAE = Σ|y−ŷ|/n`
//! - `RSE = Σ(y−ŷ)² / Σ(y−ȳ)²` (so `RSE = 1 − R²` identically)
//! - `RRMSE = RMSE/ȳ`, stored as a fraction
//! - `R` = Pearson correlation of `(y, ŷ)`, each centered about its own mean
//! - `PI = RRMSE / (1 + R)` as the primary performance index, with the
//!   alternative composite `R²/(1 + RRMSE)` reported alongside as `pi_eq12`
//!
//! Uncertainty at confidence factor `z` (default 1.96):
//! `U = z·sqrt(RMSE² + σ²)` with `σ` the population standard deviation of the
//! signed errors `ŷ−y`, and `U_norm = sqrt(RMSE² + σ²)/ȳ · 100` in percent.
//!
//! Metrics whose preconditions do not hold (e.g. `var(y) = 0` for `R²`, or
//! `ȳ = 0` for `RRMSE`) are reported as `None` so that single-row
//! cross-validation folds still yield RMSE/MAE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven statistics for one `(y, ŷ)` pair.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub y_mean: f64,
    pub rmse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
    pub rse: Option<f64>,
    pub rrmse: Option<f64>,
    pub pearson_r: Option<f64>,
    pub pi: Option<f64>,
    pub pi_eq12: Option<f64>,
    /// Set when `var(ŷ) = 0`, in which case `pearson_r` is the sentinel 0.
    pub degenerate_predictions: bool,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "n,r2,rmse,mae,rse,rrmse,pearson_r,pi,pi_eq12";

    pub fn to_csv_row(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            v.map(crate::dataset::format_f64).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            cell(self.r2),
            crate::dataset::format_f64(self.rmse),
            crate::dataset::format_f64(self.mae),
            cell(self.rse),
            cell(self.rrmse),
            cell(self.pearson_r),
            cell(self.pi),
            cell(self.pi_eq12),
        )
    }
}

/// Absolute and mean-normalized uncertainty of a prediction set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UncertaintyReport {
    /// `z·sqrt(RMSE² + σ²)`, target units.
    pub u_abs: f64,
    /// `sqrt(RMSE² + σ²)/ȳ·100`, percent.
    pub u_norm: f64,
    pub rmse: f64,
    /// Population standard deviation of the signed errors `ŷ−y`.
    pub sigma: f64,
    pub z: f64,
    pub y_mean: f64,
}

fn check_lengths(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyData);
    }
    if y.len() != yhat.len() {
        return Err(Error::Shape {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    Ok(())
}

/// Compute the full metrics report for one `(y, ŷ)` pair.
pub fn evaluate(y: &[f64], yhat: &[f64]) -> Result<MetricsReport> {
    check_lengths(y, yhat)?;
    let n = y.len();
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let yhat_mean = yhat.iter().sum::<f64>() / nf;

    let sse: f64 = y
        .iter()
        .zip(yhat)
        .map(|(a, p)| (a - p) * (a - p))
        .sum::<f64>();
    let sst: f64 = y.iter().map(|a| (a - y_mean) * (a - y_mean)).sum::<f64>();
    let ss_pred: f64 = yhat
        .iter()
        .map(|p| (p - yhat_mean) * (p - yhat_mean))
        .sum::<f64>();

    let rmse = (sse / nf).sqrt();
    let mae = y.iter().zip(yhat).map(|(a, p)| (a - p).abs()).sum::<f64>() / nf;

    let (r2, rse) = if sst > 0.0 {
        (Some(1.0 - sse / sst), Some(sse / sst))
    } else {
        (None, None)
    };

    let rrmse = if y_mean != 0.0 {
        Some(rmse / y_mean)
    } else {
        None
    };

    let mut degenerate_predictions = false;
    let pearson_r = if sst > 0.0 {
        if ss_pred > 0.0 {
            let cov: f64 = y
                .iter()
                .zip(yhat)
                .map(|(a, p)| (a - y_mean) * (p - yhat_mean))
                .sum::<f64>();
            Some((cov / (sst * ss_pred).sqrt()).clamp(-1.0, 1.0))
        } else {
            degenerate_predictions = true;
            Some(0.0)
        }
    } else {
        None
    };

    let pi = match (rrmse, pearson_r) {
        (Some(rr), Some(r)) if 1.0 + r != 0.0 => Some(rr / (1.0 + r)),
        _ => None,
    };
    let pi_eq12 = match (r2, rrmse) {
        (Some(r2v), Some(rr)) if 1.0 + rr != 0.0 => Some(r2v / (1.0 + rr)),
        _ => None,
    };

    Ok(MetricsReport {
        n,
        y_mean,
        rmse,
        mae,
        r2,
        rse,
        rrmse,
        pearson_r,
        pi,
        pi_eq12,
        degenerate_predictions,
    })
}

/// Compute the uncertainty indices at confidence factor `z`.
///
/// Errors with [`Error::UndefinedMetric`] when `ȳ = 0`, since the normalized
/// index divides by the mean of the actuals.
pub fn uncertainty(y: &[f64], yhat: &[f64], z: f64) -> Result<UncertaintyReport> {
    check_lengths(y, yhat)?;
    let nf = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    if y_mean == 0.0 {
        return Err(Error::UndefinedMetric(
            "u_norm requires a nonzero mean of actuals".into(),
        ));
    }
    let errors: Vec<f64> = y.iter().zip(yhat).map(|(a, p)| p - a).collect();
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / nf).sqrt();
    let err_mean = errors.iter().sum::<f64>() / nf;
    let sigma = (errors
        .iter()
        .map(|e| (e - err_mean) * (e - err_mean))
        .sum::<f64>()
        / nf)
        .sqrt();
    let spread = (rmse * rmse + sigma * sigma).sqrt();
    Ok(UncertaintyReport {
        u_abs: z * spread,
        u_norm: spread / y_mean * 100.0,
        rmse,
        sigma,
        z,
        y_mean,
    })
}

/// One entry of the uncertainty comparison, ranked by test `u_norm`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedModel {
    pub rank: usize,
    pub model: String,
    pub train: UncertaintyReport,
    pub test: UncertaintyReport,
    /// Test minus train normalized uncertainty, percentage points.
    pub delta_norm: f64,
}

/// Rank models ascending by test `u_norm`; ties break by model name.
pub fn compare_uncertainty(
    reports: &[(String, UncertaintyReport, UncertaintyReport)],
) -> Vec<RankedModel> {
    let mut entries: Vec<RankedModel> = reports
        .iter()
        .map(|(name, train, test)| RankedModel {
            rank: 0,
            model: name.clone(),
            delta_norm: test.u_norm - train.u_norm,
            train: train.clone(),
            test: test.clone(),
        })
        .collect();
    entries.sort_by(|a, b| {
        a.test
            .u_norm
            .partial_cmp(&b.test.u_norm)
            .unwrap()
            .then_with(|| a.model.cmp(&b.model))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn perfect_prediction() {
        let y = [1.0, 2.0, 3.0];
        let m = evaluate(&y, &y).unwrap();
        assert_eq!(m.r2, Some(1.0));
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.rse, Some(0.0));
        assert_eq!(m.rrmse, Some(0.0));
        assert_eq!(m.pearson_r, Some(1.0));
        assert_eq!(m.pi, Some(0.0));
    }

    #[test]
    fn hand_derived_triple() {
        let y = [2.0, 4.0, 6.0];
        let yhat = [3.0, 3.0, 6.0];
        let m = evaluate(&y, &yhat).unwrap();
        assert!((m.rmse - 0.81650).abs() < 1e-5);
        assert!((m.mae - 0.66667).abs() < 1e-5);
        assert!((m.r2.unwrap() - 0.75).abs() < 1e-5);
        assert!((m.rse.unwrap() - 0.25).abs() < 1e-5);
        assert!((m.rrmse.unwrap() - 0.20412).abs() < 1e-5);
        assert!((m.pearson_r.unwrap() - 0.86603).abs() < 1e-5);
        assert!((m.pi.unwrap() - 0.10939).abs() < 1e-5);
        assert!((m.pi_eq12.unwrap() - 0.75 / 1.2041241452319317).abs() < 1e-10);
    }

    #[test]
    fn constant_mean_model_zero_r2() {
        let y = [1.0, 2.0, 3.0, 6.0];
        let mean = y.iter().sum::<f64>() / 4.0;
        let yhat = [mean; 4];
        let m = evaluate(&y, &yhat).unwrap();
        assert!((m.r2.unwrap() - 0.0).abs() < 1e-12);
        assert!(m.degenerate_predictions);
        assert_eq!(m.pearson_r, Some(0.0));
    }

    #[test]
    fn constant_actuals_drop_variance_metrics() {
        let y = [5.0, 5.0, 5.0];
        let yhat = [4.0, 5.0, 6.0];
        let m = evaluate(&y, &yhat).unwrap();
        assert!(m.r2.is_none());
        assert!(m.rse.is_none());
        assert!(m.pearson_r.is_none());
        assert!(m.rmse > 0.0);
        assert!(m.mae > 0.0);
    }

    #[test]
    fn zero_mean_actuals_drop_rrmse() {
        let y = [-1.0, 1.0];
        let yhat = [0.0, 0.5];
        let m = evaluate(&y, &yhat).unwrap();
        assert!(m.rrmse.is_none());
        assert!(m.pi.is_none());
        assert!(uncertainty(&y, &yhat, 1.96).is_err());
    }

    #[test]
    fn single_row_keeps_rmse() {
        let m = evaluate(&[3.0], &[4.0]).unwrap();
        assert_eq!(m.rmse, 1.0);
        assert_eq!(m.mae, 1.0);
        assert!(m.r2.is_none());
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(matches!(
            evaluate(&[1.0, 2.0], &[1.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn rse_identity_and_mae_bound_random() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..200 {
            let n = 2 + rng.below(40);
            let y: Vec<f64> = (0..n).map(|_| rng.uniform(-10.0, 90.0)).collect();
            let yhat: Vec<f64> = (0..n).map(|_| rng.uniform(-10.0, 90.0)).collect();
            let m = evaluate(&y, &yhat).unwrap();
            if let (Some(r2), Some(rse)) = (m.r2, m.rse) {
                assert!((rse - (1.0 - r2)).abs() < 1e-12);
            }
            assert!(m.mae <= m.rmse + 1e-12);
            let max_err = y
                .iter()
                .zip(&yhat)
                .map(|(a, p)| (a - p).abs())
                .fold(0.0f64, f64::max);
            assert!(m.rmse <= max_err + 1e-12);
        }
    }

    #[test]
    fn pearson_affine_invariance() {
        let mut rng = SplitMix64::new(23);
        for _ in 0..100 {
            let n = 3 + rng.below(30);
            let y: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 50.0)).collect();
            let yhat: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 50.0)).collect();
            let a = rng.uniform(0.1, 5.0);
            let b = rng.uniform(-10.0, 10.0);
            let scaled: Vec<f64> = yhat.iter().map(|p| a * p + b).collect();
            let m1 = evaluate(&y, &yhat).unwrap();
            let m2 = evaluate(&y, &scaled).unwrap();
            match (m1.pearson_r, m2.pearson_r) {
                (Some(r1), Some(r2)) => assert!((r1 - r2).abs() < 1e-10),
                _ => panic!("pearson undefined on random input"),
            }
        }
    }

    #[test]
    fn uncertainty_hand_derived() {
        let y = [2.0, 4.0, 6.0];
        let yhat = [3.0, 3.0, 6.0];
        let u = uncertainty(&y, &yhat, 1.96).unwrap();
        assert!((u.rmse - 0.81650).abs() < 1e-5);
        assert!((u.sigma - 0.81650).abs() < 1e-5);
        assert!((u.u_abs - 2.26322).abs() < 1e-4);
        assert!((u.u_norm - 28.8675).abs() < 1e-3);
    }

    #[test]
    fn uncertainty_zero_errors() {
        let y = [2.0, 4.0];
        let u = uncertainty(&y, &y, 1.96).unwrap();
        assert_eq!(u.u_abs, 0.0);
        assert_eq!(u.u_norm, 0.0);
    }

    #[test]
    fn uncertainty_z_scaling() {
        let y = [2.0, 4.0, 6.0];
        let yhat = [3.0, 3.0, 6.0];
        let u0 = uncertainty(&y, &yhat, 0.0).unwrap();
        let u1 = uncertainty(&y, &yhat, 1.0).unwrap();
        let u2 = uncertainty(&y, &yhat, 2.0).unwrap();
        assert_eq!(u0.u_abs, 0.0);
        assert!((u2.u_abs - 2.0 * u1.u_abs).abs() < 1e-12);
        assert_eq!(u0.u_norm, u1.u_norm);
        assert_eq!(u1.u_norm, u2.u_norm);
    }

    #[test]
    fn unbiased_errors_make_uabs_z_rmse_sqrt2() {
        // Symmetric errors have zero mean, so sigma equals RMSE exactly.
        let y = [10.0, 20.0, 30.0, 40.0];
        let yhat = [11.0, 19.0, 32.0, 38.0];
        let u = uncertainty(&y, &yhat, 1.96).unwrap();
        assert!((u.u_abs - 1.96 * u.rmse * 2.0f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn compare_uncertainty_ranks_and_ties() {
        let mk = |u: f64| UncertaintyReport {
            u_abs: u,
            u_norm: u,
            rmse: 0.0,
            sigma: 0.0,
            z: 1.96,
            y_mean: 1.0,
        };
        let ranked = compare_uncertainty(&[
            ("B".into(), mk(1.0), mk(24.3)),
            ("A".into(), mk(1.0), mk(15.5)),
            ("C".into(), mk(1.0), mk(15.5)),
        ]);
        let names: Vec<&str> = ranked.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(names, vec!["A", "C", "B"]);
        assert_eq!(ranked[0].rank, 1);
        assert_eq!(ranked[2].rank, 3);
    }

    #[test]
    fn single_model_ranks_first() {
        let r = UncertaintyReport {
            u_abs: 1.0,
            u_norm: 10.0,
            rmse: 0.5,
            sigma: 0.5,
            z: 1.96,
            y_mean: 5.0,
        };
        let ranked = compare_uncertainty(&[("only".into(), r.clone(), r)]);
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].rank, 1);
    }
}
