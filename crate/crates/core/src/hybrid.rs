//! The three two-stage hybrid pipelines behind one prediction interface.
//!
//! - `et_xgb` — randomized-threshold tree ensemble (no bootstrap), then an
//!   exact-mode booster fit on its residuals; prediction is the sum of the
//!   stages.
//! - `rf_lgbm` — bootstrap forest with exact splits, then a histogram-mode
//!   booster (GOSS + EFB) on its residuals; prediction is the sum.
//! - `transformer_xgb` — transformer encoder fit on the raw targets; the
//!   stage-2 exact-mode booster consumes the encoded representations, and
//!   prediction runs entirely through the booster on `encode(x)`.
//!
//! Residual stages receive the stage-1 in-sample predictions as their
//! initial margin, so the booster's own output is exactly the stacked
//! correction (`ŷ − stage1(x)`).

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::attention::{fit_transformer, AttentionConfig, TransformerModel};
use crate::boosting::{fit_gbt, BoostMode, GBTModel, GBTParams, HistogramParams};
use crate::dataset::{Dataset, SplitIndices};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricsReport};
use crate::trees::{fit_forest, ForestModel, SplitMode, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridKind {
    EtXgb,
    RfLgbm,
    TransformerXgb,
}

impl HybridKind {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "et_xgb" => Ok(HybridKind::EtXgb),
            "rf_lgbm" => Ok(HybridKind::RfLgbm),
            "transformer_xgb" => Ok(HybridKind::TransformerXgb),
            other => Err(Error::Config(format!(
                "unknown hybrid kind `{other}` (expected et_xgb, rf_lgbm, or transformer_xgb)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            HybridKind::EtXgb => "et_xgb",
            HybridKind::RfLgbm => "rf_lgbm",
            HybridKind::TransformerXgb => "transformer_xgb",
        }
    }
}

/// Stage-1 configuration: a forest or a transformer encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage1Params {
    Forest {
        tree: TreeParams,
        n_estimators: usize,
        bootstrap: bool,
    },
    Transformer(AttentionConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridSpec {
    pub kind: HybridKind,
    pub stage1: Stage1Params,
    pub stage2: GBTParams,
    pub seed: u64,
}

impl HybridSpec {
    /// Shipped defaults of the randomized-tree + exact-booster pipeline.
    pub fn table4() -> Self {
        HybridSpec {
            kind: HybridKind::EtXgb,
            stage1: Stage1Params::Forest {
                tree: TreeParams {
                    max_depth: None,
                    min_samples_split: 2,
                    min_samples_leaf: 1,
                    split_mode: SplitMode::RandomThreshold,
                    feature_subsample: 1.0,
                    seed: 100,
                },
                n_estimators: 500,
                bootstrap: false,
            },
            stage2: GBTParams {
                n_estimators: 500,
                learning_rate: 0.005,
                max_depth: 5,
                min_child_weight: 10.0,
                reg_alpha: 5.0,
                reg_lambda: 10.0,
                gamma: 1.0,
                subsample: 0.4,
                colsample_bytree: 0.4,
                seed: 100,
                mode: BoostMode::Exact,
                ..GBTParams::default()
            },
            seed: 100,
        }
    }

    /// Shipped defaults of the bootstrap-forest + histogram-booster pipeline.
    pub fn table6() -> Self {
        HybridSpec {
            kind: HybridKind::RfLgbm,
            stage1: Stage1Params::Forest {
                tree: TreeParams {
                    max_depth: None,
                    min_samples_split: 2,
                    min_samples_leaf: 1,
                    split_mode: SplitMode::Exact,
                    feature_subsample: 1.0,
                    seed: 42,
                },
                n_estimators: 50,
                bootstrap: true,
            },
            stage2: GBTParams {
                n_estimators: 50,
                learning_rate: 0.005,
                max_depth: 3,
                min_child_weight: 10.0,
                reg_alpha: 5.0,
                reg_lambda: 5.0,
                gamma: 0.0,
                subsample: 1.0,
                colsample_bytree: 1.0,
                seed: 42,
                mode: BoostMode::Histogram,
                histogram: HistogramParams::default(),
                ..GBTParams::default()
            },
            seed: 42,
        }
    }

    /// Shipped defaults of the transformer + exact-booster pipeline.
    pub fn table8() -> Self {
        HybridSpec {
            kind: HybridKind::TransformerXgb,
            stage1: Stage1Params::Transformer(AttentionConfig {
                n_layers: 2,
                n_heads: 4,
                d_model: 128,
                dropout: 0.1,
                learning_rate: 0.001,
                batch_size: 32,
                max_epochs: 100,
                early_stop_patience: 10,
                val_fraction: 0.1,
                seed: 42,
            }),
            stage2: GBTParams {
                n_estimators: 500,
                learning_rate: 0.01,
                max_depth: 10,
                min_child_weight: 1.0,
                reg_alpha: 1.0,
                reg_lambda: 1.0,
                gamma: 0.0,
                subsample: 0.8,
                colsample_bytree: 0.8,
                seed: 42,
                mode: BoostMode::Exact,
                ..GBTParams::default()
            },
            seed: 42,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table4" => Ok(Self::table4()),
            "table6" => Ok(Self::table6()),
            "table8" => Ok(Self::table8()),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected table4, table6, or table8)"
            ))),
        }
    }

    /// Default spec for a kind (its table preset).
    pub fn default_for(kind: HybridKind) -> Self {
        match kind {
            HybridKind::EtXgb => Self::table4(),
            HybridKind::RfLgbm => Self::table6(),
            HybridKind::TransformerXgb => Self::table8(),
        }
    }

    /// Rewire every stage seed as a substream of one master seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        match &mut self.stage1 {
            Stage1Params::Forest { tree, .. } => {
                tree.seed = crate::rng::derive_seed(seed, 1);
            }
            Stage1Params::Transformer(cfg) => {
                cfg.seed = crate::rng::derive_seed(seed, 1);
            }
        }
        self.stage2.seed = crate::rng::derive_seed(seed, 2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.kind, &self.stage1) {
            (HybridKind::TransformerXgb, Stage1Params::Transformer(cfg)) => cfg.validate()?,
            (HybridKind::TransformerXgb, _) => {
                return Err(Error::Config(
                    "transformer_xgb requires a transformer stage 1".into(),
                ))
            }
            (_, Stage1Params::Forest { tree, n_estimators, .. }) => {
                tree.validate()?;
                if *n_estimators == 0 {
                    return Err(Error::Config("stage-1 n_estimators must be >= 1".into()));
                }
            }
            (_, Stage1Params::Transformer(_)) => {
                return Err(Error::Config(
                    "residual hybrids require a forest stage 1".into(),
                ))
            }
        }
        self.stage2.validate()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage1Model {
    Forest(ForestModel),
    Transformer(TransformerModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpace {
    /// Stage 2 consumes the raw feature vector.
    Raw,
    /// Stage 2 consumes the stage-1 encoder representations.
    Encoded,
}

/// A fitted two-stage model. Serializes as the JSON envelope
/// `{kind, stage1, stage2, feature_space, schema_version, feature_names}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridModel {
    pub kind: HybridKind,
    pub stage1: Stage1Model,
    pub stage2: GBTModel,
    pub feature_space: FeatureSpace,
    pub schema_version: u32,
    pub feature_names: Vec<String>,
}

pub const SCHEMA_VERSION: u32 = 1;

impl HybridModel {
    /// Stage-1 prediction alone (forest output or transformer head).
    pub fn stage1_predict(&self, x: &[f64]) -> Result<f64> {
        match &self.stage1 {
            Stage1Model::Forest(f) => f.predict(x),
            Stage1Model::Transformer(t) => t.predict(x),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self.feature_space {
            FeatureSpace::Raw => Ok(self.stage1_predict(x)? + self.stage2.predict(x)?),
            FeatureSpace::Encoded => {
                let Stage1Model::Transformer(t) = &self.stage1 else {
                    return Err(Error::Config("encoded space requires a transformer".into()));
                };
                let (repr, _) = t.forward(x)?;
                self.stage2.predict(repr.as_slice().expect("contiguous"))
            }
        }
    }

    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        x.outer_iter()
            .map(|row| self.predict(row.as_slice().expect("contiguous row")))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Fit a hybrid pipeline on the given training data.
pub fn fit_hybrid(train: &Dataset, spec: &HybridSpec) -> Result<HybridModel> {
    spec.validate()?;
    match (&spec.kind, &spec.stage1) {
        (HybridKind::TransformerXgb, Stage1Params::Transformer(cfg)) => {
            let encoder = fit_transformer(train.x.view(), &train.y, cfg)?;
            let z = encoder.encode(train.x.view())?;
            let stage2 = fit_gbt(z.view(), &train.y, None, &spec.stage2)?;
            Ok(HybridModel {
                kind: spec.kind,
                stage1: Stage1Model::Transformer(encoder),
                stage2,
                feature_space: FeatureSpace::Encoded,
                schema_version: SCHEMA_VERSION,
                feature_names: train.feature_names.clone(),
            })
        }
        (_, Stage1Params::Forest { tree, n_estimators, bootstrap }) => {
            let forest = fit_forest(train.x.view(), &train.y, tree, *n_estimators, *bootstrap)?;
            let margin = forest.predict_batch(train.x.view())?;
            let stage2 = fit_gbt(train.x.view(), &train.y, Some(&margin), &spec.stage2)?;
            Ok(HybridModel {
                kind: spec.kind,
                stage1: Stage1Model::Forest(forest),
                stage2,
                feature_space: FeatureSpace::Raw,
                schema_version: SCHEMA_VERSION,
                feature_names: train.feature_names.clone(),
            })
        }
        _ => Err(Error::Config("stage-1 kind mismatch".into())),
    }
}

/// One evaluated point: actual, predicted, and the ±10% band flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionPoint {
    pub index: usize,
    pub actual: f64,
    pub predicted: f64,
    /// |ŷ − y| ≤ 0.1·|y|.
    pub within_10pct: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionReport {
    pub metrics: MetricsReport,
    pub points: Vec<PredictionPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridEvaluation {
    pub train: PartitionReport,
    pub test: PartitionReport,
}

fn evaluate_partition(
    model: &HybridModel,
    ds: &Dataset,
    indices: &[usize],
) -> Result<PartitionReport> {
    if indices.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut actual = Vec::with_capacity(indices.len());
    let mut predicted = Vec::with_capacity(indices.len());
    let mut points = Vec::with_capacity(indices.len());
    for &i in indices {
        let row = ds.x.row(i);
        let p = model.predict(row.as_slice().expect("contiguous row"))?;
        let a = ds.y[i];
        actual.push(a);
        predicted.push(p);
        points.push(PredictionPoint {
            index: i,
            actual: a,
            predicted: p,
            within_10pct: (p - a).abs() <= 0.1 * a.abs(),
        });
    }
    Ok(PartitionReport {
        metrics: evaluate(&actual, &predicted)?,
        points,
    })
}

/// Metrics and plot-ready prediction points for both partitions.
pub fn evaluate_hybrid(
    model: &HybridModel,
    ds: &Dataset,
    split: &SplitIndices,
) -> Result<HybridEvaluation> {
    for &i in split.train.iter().chain(&split.test) {
        if i >= ds.n_samples() {
            return Err(Error::Shape {
                expected: ds.n_samples(),
                got: i + 1,
            });
        }
    }
    Ok(HybridEvaluation {
        train: evaluate_partition(model, ds, &split.train)?,
        test: evaluate_partition(model, ds, &split.test)?,
    })
}

/// Encode a dataset through a fitted transformer-hybrid's stage 1.
pub fn encode_dataset(model: &HybridModel, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    match &model.stage1 {
        Stage1Model::Transformer(t) => t.encode(x),
        _ => Err(Error::UnsupportedModel(
            "raw-feature hybrids have no encoder stage".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize, table1_stats, GroundTruth};
    use crate::rng::SplitMix64;
    use ndarray::Array2;

    fn small_linear_ds(seed: u64, n: usize) -> Dataset {
        let mut rng = SplitMix64::new(seed);
        let mut x = Array2::zeros((n, 3));
        for v in x.iter_mut() {
            *v = rng.uniform(0.0, 4.0);
        }
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 + 3.0 * x[[i, 0]] - x[[i, 1]] + 0.2 * x[[i, 2]])
            .collect();
        Dataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            x,
            y,
            "t".into(),
        )
        .unwrap()
    }

    fn quick_et_spec() -> HybridSpec {
        let mut spec = HybridSpec::table4();
        if let Stage1Params::Forest { n_estimators, .. } = &mut spec.stage1 {
            *n_estimators = 30;
        }
        spec.stage2.n_estimators = 30;
        spec
    }

    #[test]
    fn presets_match_published_values() {
        let t4 = HybridSpec::table4();
        assert_eq!(t4.kind, HybridKind::EtXgb);
        match &t4.stage1 {
            Stage1Params::Forest { tree, n_estimators, bootstrap } => {
                assert_eq!(*n_estimators, 500);
                assert!(!bootstrap);
                assert_eq!(tree.min_samples_split, 2);
                assert_eq!(tree.min_samples_leaf, 1);
                assert_eq!(tree.max_depth, None);
                assert_eq!(tree.seed, 100);
                assert_eq!(tree.split_mode, SplitMode::RandomThreshold);
            }
            _ => panic!("expected forest stage"),
        }
        assert_eq!(t4.stage2.reg_alpha, 5.0);
        assert_eq!(t4.stage2.reg_lambda, 10.0);
        assert_eq!(t4.stage2.learning_rate, 0.005);
        assert_eq!(t4.stage2.min_child_weight, 10.0);
        assert_eq!(t4.stage2.max_depth, 5);
        assert_eq!(t4.stage2.gamma, 1.0);
        assert_eq!(t4.stage2.subsample, 0.4);
        assert_eq!(t4.stage2.colsample_bytree, 0.4);
        assert_eq!(t4.stage2.seed, 100);
        assert_eq!(t4.stage2.n_estimators, 500);

        let t6 = HybridSpec::table6();
        match &t6.stage1 {
            Stage1Params::Forest { tree, n_estimators, bootstrap } => {
                assert_eq!(*n_estimators, 50);
                assert!(bootstrap);
                assert_eq!(tree.seed, 42);
            }
            _ => panic!("expected forest stage"),
        }
        assert_eq!(t6.stage2.n_estimators, 50);
        assert_eq!(t6.stage2.learning_rate, 0.005);
        assert_eq!(t6.stage2.max_depth, 3);
        assert_eq!(t6.stage2.min_child_weight, 10.0);
        assert_eq!(t6.stage2.reg_alpha, 5.0);
        assert_eq!(t6.stage2.reg_lambda, 5.0);
        assert_eq!(t6.stage2.mode, BoostMode::Histogram);

        let t8 = HybridSpec::table8();
        match &t8.stage1 {
            Stage1Params::Transformer(cfg) => {
                assert_eq!(cfg.n_layers, 2);
                assert_eq!(cfg.n_heads, 4);
                assert_eq!(cfg.d_model, 128);
                assert_eq!(cfg.dropout, 0.1);
                assert_eq!(cfg.learning_rate, 0.001);
                assert_eq!(cfg.batch_size, 32);
                assert_eq!(cfg.max_epochs, 100);
                assert_eq!(cfg.early_stop_patience, 10);
            }
            _ => panic!("expected transformer stage"),
        }
        assert_eq!(t8.stage2.n_estimators, 500);
        assert_eq!(t8.stage2.learning_rate, 0.01);
        assert_eq!(t8.stage2.max_depth, 10);
        assert_eq!(t8.stage2.subsample, 0.8);
        assert_eq!(t8.stage2.colsample_bytree, 0.8);
        assert_eq!(t8.stage2.reg_alpha, 1.0);
        assert_eq!(t8.stage2.reg_lambda, 1.0);
        assert_eq!(t8.stage2.seed, 42);
    }

    #[test]
    fn constant_target_all_kinds_residual() {
        let mut x = Array2::zeros((12, 2));
        let mut rng = SplitMix64::new(1);
        for v in x.iter_mut() {
            *v = rng.uniform(0.0, 1.0);
        }
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            x,
            vec![4.5; 12],
            "t".into(),
        )
        .unwrap();
        for spec in [quick_et_spec(), {
            let mut s = HybridSpec::table6();
            if let Stage1Params::Forest { n_estimators, .. } = &mut s.stage1 {
                *n_estimators = 10;
            }
            s.stage2.n_estimators = 10;
            s
        }] {
            let model = fit_hybrid(&ds, &spec).unwrap();
            for i in 0..ds.n_samples() {
                let p = model.predict(ds.x.row(i).as_slice().unwrap()).unwrap();
                assert!((p - 4.5).abs() < 1e-9, "{:?}: {p}", spec.kind);
            }
        }
    }

    #[test]
    fn stage2_off_reduces_to_stage1() {
        let ds = small_linear_ds(5, 60);
        let mut spec = quick_et_spec();
        spec.stage2.n_estimators = 0;
        let model = fit_hybrid(&ds, &spec).unwrap();
        for i in 0..10 {
            let row = ds.x.row(i);
            let r = row.as_slice().unwrap();
            assert_eq!(
                model.predict(r).unwrap(),
                model.stage1_predict(r).unwrap()
            );
        }
    }

    #[test]
    fn residual_identity() {
        let ds = small_linear_ds(6, 80);
        let model = fit_hybrid(&ds, &quick_et_spec()).unwrap();
        for i in 0..10 {
            let row = ds.x.row(i);
            let r = row.as_slice().unwrap();
            let total = model.predict(r).unwrap();
            let s1 = model.stage1_predict(r).unwrap();
            let s2 = model.stage2.predict(r).unwrap();
            assert_eq!(total - s1, s2);
        }
    }

    #[test]
    fn additive_prediction_rule() {
        let ds = small_linear_ds(7, 50);
        let model = fit_hybrid(&ds, &quick_et_spec()).unwrap();
        let r = [1.0, 2.0, 3.0];
        assert_eq!(
            model.predict(&r).unwrap(),
            model.stage1_predict(&r).unwrap() + model.stage2.predict(&r).unwrap()
        );
    }

    #[test]
    fn hybrid_training_mse_dominates_stage1() {
        let stats = table1_stats();
        let ds = synthesize(&stats, &GroundTruth::CsSmooth, 1.0, 300, 11).unwrap();
        let mut spec = quick_et_spec();
        // Regularization off and full sampling so boosting is monotone.
        spec.stage2.reg_alpha = 0.0;
        spec.stage2.reg_lambda = 0.0;
        spec.stage2.gamma = 0.0;
        spec.stage2.min_child_weight = 0.0;
        spec.stage2.subsample = 1.0;
        spec.stage2.colsample_bytree = 1.0;
        spec.stage2.learning_rate = 0.1;
        let model = fit_hybrid(&ds, &spec).unwrap();
        let mut mse_hybrid = 0.0;
        let mut mse_stage1 = 0.0;
        for i in 0..ds.n_samples() {
            let r = ds.x.row(i);
            let r = r.as_slice().unwrap();
            let y = ds.y[i];
            let ph = model.predict(r).unwrap();
            let p1 = model.stage1_predict(r).unwrap();
            mse_hybrid += (ph - y) * (ph - y);
            mse_stage1 += (p1 - y) * (p1 - y);
        }
        assert!(
            mse_hybrid <= mse_stage1 + 1e-9,
            "hybrid {mse_hybrid} vs stage1 {mse_stage1}"
        );
    }

    #[test]
    fn transformer_kind_with_zero_booster_is_constant() {
        let ds = small_linear_ds(8, 40);
        let mut spec = HybridSpec::table8();
        if let Stage1Params::Transformer(cfg) = &mut spec.stage1 {
            cfg.d_model = 8;
            cfg.n_heads = 2;
            cfg.n_layers = 1;
            cfg.max_epochs = 2;
            cfg.dropout = 0.0;
        }
        spec.stage2.n_estimators = 0;
        let model = fit_hybrid(&ds, &spec).unwrap();
        let y_mean = ds.y.iter().sum::<f64>() / ds.n_samples() as f64;
        for i in 0..5 {
            let p = model.predict(ds.x.row(i).as_slice().unwrap()).unwrap();
            assert!((p - y_mean).abs() < 1e-12);
        }
        assert_eq!(model.feature_space, FeatureSpace::Encoded);
    }

    #[test]
    fn serialized_model_round_trips_and_is_deterministic() {
        let ds = small_linear_ds(9, 40);
        let spec = quick_et_spec();
        let a = fit_hybrid(&ds, &spec).unwrap();
        let b = fit_hybrid(&ds, &spec).unwrap();
        let ja = a.to_json().unwrap();
        let jb = b.to_json().unwrap();
        assert_eq!(ja, jb);
        let back = HybridModel::from_json(&ja).unwrap();
        let probe = [0.5, 1.5, 2.5];
        assert_eq!(back.predict(&probe).unwrap(), a.predict(&probe).unwrap());
    }

    #[test]
    fn evaluation_reports_and_band_flags() {
        let ds = small_linear_ds(10, 60);
        let split = crate::dataset::split(&ds, 0.8, 3).unwrap();
        let train = ds.subset(&split.train);
        let model = fit_hybrid(&train, &quick_et_spec()).unwrap();
        let eval = evaluate_hybrid(&model, &ds, &split).unwrap();
        assert_eq!(eval.train.points.len(), 48);
        assert_eq!(eval.test.points.len(), 12);
        for p in eval.train.points.iter().chain(&eval.test.points) {
            let expected = (p.predicted - p.actual).abs() <= 0.1 * p.actual.abs();
            assert_eq!(p.within_10pct, expected);
        }
        assert!(eval.train.metrics.r2.unwrap() > 0.9);
    }

    #[test]
    fn perfect_model_reports_unity() {
        let ds = small_linear_ds(12, 30);
        // A model that memorizes: stage2 with 0 trees and a stage-1 exact
        // forest of one unlimited tree (distinct rows -> exact fit).
        let mut spec = quick_et_spec();
        if let Stage1Params::Forest { tree, n_estimators, bootstrap } = &mut spec.stage1 {
            tree.split_mode = SplitMode::Exact;
            *n_estimators = 1;
            *bootstrap = false;
        }
        spec.stage2.n_estimators = 0;
        let split = crate::dataset::split(&ds, 0.5, 1).unwrap();
        let model = fit_hybrid(&ds, &spec).unwrap();
        let eval = evaluate_hybrid(&model, &ds, &split).unwrap();
        for part in [&eval.train, &eval.test] {
            assert!((part.metrics.r2.unwrap() - 1.0).abs() < 1e-9);
            assert!(part.metrics.rmse < 1e-9);
        }
    }

    #[test]
    fn kind_mismatch_rejected() {
        let spec = HybridSpec {
            kind: HybridKind::TransformerXgb,
            stage1: Stage1Params::Forest {
                tree: TreeParams::default(),
                n_estimators: 5,
                bootstrap: false,
            },
            stage2: GBTParams::default(),
            seed: 0,
        };
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn with_seed_rewires_stages() {
        let spec = HybridSpec::table4().with_seed(7);
        assert_eq!(spec.seed, 7);
        match &spec.stage1 {
            Stage1Params::Forest { tree, .. } => assert_ne!(tree.seed, 100),
            _ => unreachable!(),
        }
        assert_ne!(spec.stage2.seed, 100);
    }
}
