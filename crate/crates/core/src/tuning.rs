//! k-fold cross-validation and seeded random-search tuning over hybrid
//! specs.
//!
//! The objective is mean fold RMSE (always defined, unlike R² on tiny
//! folds). Trial `i` samples its parameters from the substream
//! `derive_seed(seed, i + 1)`, so trial sequences are nested across budgets:
//! growing the budget never changes earlier trials, which makes the best
//! objective non-increasing in the budget.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::MetricsReport;
use crate::hybrid::{fit_hybrid, HybridKind, HybridSpec, Stage1Params};
use crate::rng::{derive_seed, SplitMix64};

/// One hyperparameter's sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dist {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    IntUniform { lo: i64, hi: i64 },
    Choice(Vec<f64>),
}

impl Dist {
    fn validate(&self) -> Result<()> {
        match self {
            Dist::Uniform { lo, hi } => {
                if lo >= hi {
                    return Err(Error::Config(format!("uniform bounds {lo} >= {hi}")));
                }
            }
            Dist::LogUniform { lo, hi } => {
                if !(*lo > 0.0 && lo < hi) {
                    return Err(Error::Config(format!("log_uniform bounds ({lo}, {hi})")));
                }
            }
            Dist::IntUniform { lo, hi } => {
                if lo >= hi {
                    return Err(Error::Config(format!("int_uniform bounds {lo} >= {hi}")));
                }
            }
            Dist::Choice(values) => {
                if values.is_empty() {
                    return Err(Error::Config("choice list is empty".into()));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut SplitMix64) -> f64 {
        match self {
            Dist::Uniform { lo, hi } => rng.uniform(*lo, *hi),
            Dist::LogUniform { lo, hi } => (rng.uniform(lo.ln(), hi.ln())).exp(),
            Dist::IntUniform { lo, hi } => {
                let span = (hi - lo + 1) as usize;
                *lo as f64 + rng.below(span) as f64
            }
            Dist::Choice(values) => values[rng.below(values.len())],
        }
    }
}

/// Ordered list of (parameter path, distribution) pairs. Paths address
/// spec fields, e.g. `stage2.learning_rate` or `stage1.n_estimators`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SearchSpace {
    pub params: Vec<(String, Dist)>,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        for (_, dist) in &self.params {
            dist.validate()?;
        }
        Ok(())
    }

    fn sample(&self, rng: &mut SplitMix64) -> Vec<(String, f64)> {
        self.params
            .iter()
            .map(|(name, dist)| (name.clone(), dist.sample(rng)))
            .collect()
    }
}

/// Apply sampled parameter values onto a base spec.
pub fn apply_assignments(base: &HybridSpec, assignments: &[(String, f64)]) -> Result<HybridSpec> {
    let mut spec = base.clone();
    for (path, value) in assignments {
        let v = *value;
        match path.as_str() {
            "stage2.n_estimators" => spec.stage2.n_estimators = v.round().max(0.0) as usize,
            "stage2.learning_rate" => spec.stage2.learning_rate = v,
            "stage2.max_depth" => spec.stage2.max_depth = v.round().max(1.0) as usize,
            "stage2.min_child_weight" => spec.stage2.min_child_weight = v,
            "stage2.reg_alpha" => spec.stage2.reg_alpha = v,
            "stage2.reg_lambda" => spec.stage2.reg_lambda = v,
            "stage2.gamma" => spec.stage2.gamma = v,
            "stage2.subsample" => spec.stage2.subsample = v,
            "stage2.colsample_bytree" => spec.stage2.colsample_bytree = v,
            "stage1.n_estimators" => match &mut spec.stage1 {
                Stage1Params::Forest { n_estimators, .. } => {
                    *n_estimators = v.round().max(1.0) as usize
                }
                _ => return Err(Error::Config(format!("`{path}` needs a forest stage"))),
            },
            "stage1.min_samples_split" => match &mut spec.stage1 {
                Stage1Params::Forest { tree, .. } => {
                    tree.min_samples_split = v.round().max(2.0) as usize
                }
                _ => return Err(Error::Config(format!("`{path}` needs a forest stage"))),
            },
            "stage1.min_samples_leaf" => match &mut spec.stage1 {
                Stage1Params::Forest { tree, .. } => {
                    tree.min_samples_leaf = v.round().max(1.0) as usize
                }
                _ => return Err(Error::Config(format!("`{path}` needs a forest stage"))),
            },
            "stage1.max_epochs" => match &mut spec.stage1 {
                Stage1Params::Transformer(cfg) => cfg.max_epochs = v.round().max(1.0) as usize,
                _ => return Err(Error::Config(format!("`{path}` needs a transformer stage"))),
            },
            "stage1.learning_rate" => match &mut spec.stage1 {
                Stage1Params::Transformer(cfg) => cfg.learning_rate = v,
                _ => return Err(Error::Config(format!("`{path}` needs a transformer stage"))),
            },
            "stage1.dropout" => match &mut spec.stage1 {
                Stage1Params::Transformer(cfg) => cfg.dropout = v,
                _ => return Err(Error::Config(format!("`{path}` needs a transformer stage"))),
            },
            other => return Err(Error::Config(format!("unknown search parameter `{other}`"))),
        }
    }
    Ok(spec)
}

/// Default spaces bracketing each shipped table value: ×/÷10 for continuous
/// parameters, ±2 steps for integers.
pub fn default_space(kind: HybridKind) -> SearchSpace {
    let mut params: Vec<(String, Dist)> = Vec::new();
    match kind {
        HybridKind::EtXgb => {
            params.push((
                "stage2.learning_rate".into(),
                Dist::LogUniform { lo: 0.0005, hi: 0.05 },
            ));
            params.push(("stage2.max_depth".into(), Dist::IntUniform { lo: 3, hi: 7 }));
            params.push((
                "stage2.reg_alpha".into(),
                Dist::LogUniform { lo: 0.5, hi: 50.0 },
            ));
            params.push((
                "stage2.reg_lambda".into(),
                Dist::LogUniform { lo: 1.0, hi: 100.0 },
            ));
            params.push(("stage2.subsample".into(), Dist::Uniform { lo: 0.2, hi: 1.0 }));
            params.push((
                "stage2.colsample_bytree".into(),
                Dist::Uniform { lo: 0.2, hi: 1.0 },
            ));
        }
        HybridKind::RfLgbm => {
            params.push((
                "stage1.n_estimators".into(),
                Dist::IntUniform { lo: 25, hi: 100 },
            ));
            params.push((
                "stage2.learning_rate".into(),
                Dist::LogUniform { lo: 0.0005, hi: 0.05 },
            ));
            params.push(("stage2.max_depth".into(), Dist::IntUniform { lo: 1, hi: 5 }));
            params.push((
                "stage2.reg_alpha".into(),
                Dist::LogUniform { lo: 0.5, hi: 50.0 },
            ));
            params.push((
                "stage2.reg_lambda".into(),
                Dist::LogUniform { lo: 0.5, hi: 50.0 },
            ));
        }
        HybridKind::TransformerXgb => {
            params.push((
                "stage1.learning_rate".into(),
                Dist::LogUniform { lo: 0.0001, hi: 0.01 },
            ));
            params.push(("stage1.dropout".into(), Dist::Uniform { lo: 0.0, hi: 0.3 }));
            params.push((
                "stage2.learning_rate".into(),
                Dist::LogUniform { lo: 0.001, hi: 0.1 },
            ));
            params.push(("stage2.max_depth".into(), Dist::IntUniform { lo: 8, hi: 12 }));
            params.push(("stage2.subsample".into(), Dist::Uniform { lo: 0.5, hi: 1.0 }));
        }
    }
    SearchSpace { params }
}

/// Seeded shuffle then contiguous partition; fold sizes differ by at most
/// one, the first `n % k` folds take the extra row.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::Config(format!("k={k} must satisfy 2 <= k <= n={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut order);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// One cross-validated configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CVResult {
    pub draw_index: usize,
    pub assignments: Vec<(String, f64)>,
    pub spec: HybridSpec,
    pub fold_reports: Vec<MetricsReport>,
    /// Per-fold RMSE.
    pub fold_objectives: Vec<f64>,
    pub mean_objective: f64,
    pub std_objective: f64,
}

/// Fit on each fold's complement, evaluate on the fold, aggregate RMSE.
pub fn cross_validate(ds: &Dataset, spec: &HybridSpec, k: usize, seed: u64) -> Result<CVResult> {
    spec.validate()?;
    let n = ds.n_samples();
    let folds = kfold(n, k, seed)?;
    let mut fold_reports = Vec::with_capacity(k);
    let mut fold_objectives = Vec::with_capacity(k);
    for (fi, fold) in folds.iter().enumerate() {
        let wrap = |e: Error| Error::Fold {
            index: fi,
            source: Box::new(e),
        };
        let mut train_idx: Vec<usize> = Vec::with_capacity(n - fold.len());
        let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
        for i in 0..n {
            if !in_fold.contains(&i) {
                train_idx.push(i);
            }
        }
        let train = ds.subset(&train_idx);
        let model = fit_hybrid(&train, spec).map_err(wrap)?;
        let mut actual = Vec::with_capacity(fold.len());
        let mut predicted = Vec::with_capacity(fold.len());
        for &i in fold {
            actual.push(ds.y[i]);
            predicted.push(
                model
                    .predict(ds.x.row(i).as_slice().expect("contiguous row"))
                    .map_err(wrap)?,
            );
        }
        let report = crate::evaluation::evaluate(&actual, &predicted).map_err(wrap)?;
        fold_objectives.push(report.rmse);
        fold_reports.push(report);
    }
    let kf = k as f64;
    let mean = fold_objectives.iter().sum::<f64>() / kf;
    let var = fold_objectives
        .iter()
        .map(|o| (o - mean) * (o - mean))
        .sum::<f64>()
        / kf;
    Ok(CVResult {
        draw_index: 0,
        assignments: Vec::new(),
        spec: spec.clone(),
        fold_reports,
        fold_objectives,
        mean_objective: mean,
        std_objective: var.sqrt(),
    })
}

/// Random search: `budget` i.i.d. draws from `space` applied to the kind's
/// default spec, each scored by k-fold CV; minimal mean RMSE wins, ties by
/// earlier draw. Returns the winning spec and the full trial log.
pub fn random_search(
    ds: &Dataset,
    kind: HybridKind,
    space: &SearchSpace,
    budget: usize,
    k: usize,
    seed: u64,
) -> Result<(HybridSpec, Vec<CVResult>)> {
    if budget == 0 {
        return Err(Error::Config("budget must be >= 1".into()));
    }
    space.validate()?;
    let base = HybridSpec::default_for(kind);
    let mut results: Vec<CVResult> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for t in 0..budget {
        let mut rng = SplitMix64::new(derive_seed(seed, t as u64 + 1));
        let assignments = space.sample(&mut rng);
        let spec = match apply_assignments(&base, &assignments) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("trial {t}: {e}"));
                continue;
            }
        };
        match cross_validate(ds, &spec, k, seed) {
            Ok(mut res) => {
                res.draw_index = t;
                res.assignments = assignments;
                results.push(res);
            }
            Err(e) => failures.push(format!("trial {t}: {e}")),
        }
    }
    if results.is_empty() {
        return Err(Error::SearchFailed(failures.join("; ")));
    }
    let best = results
        .iter()
        .min_by(|a, b| {
            a.mean_objective
                .partial_cmp(&b.mean_objective)
                .unwrap()
                .then(a.draw_index.cmp(&b.draw_index))
        })
        .expect("nonempty results");
    Ok((best.spec.clone(), results))
}
