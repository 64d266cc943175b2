//! Hybrid regression engine for concrete-strength-style tabular datasets.
//!
//! The crate provides three hybrid model families — randomized-tree ensembles
//! boosted by a regularized second-order booster (`et_xgb`), bagged forests
//! boosted by a histogram booster with GOSS and EFB (`rf_lgbm`), and a
//! transformer feature encoder feeding an exact-mode booster
//! (`transformer_xgb`) — together with the evaluation metrics, uncertainty
//! indices, SHAP attribution, and cross-validated random-search tuning needed
//! to run the full train/evaluate/explain workflow from a CSV file.
//!
//! # Module map
//!
//! - [`dataset`] — CSV ingestion, descriptive statistics, Pearson
//!   correlations, seeded train/test splits, and a statistics-matched
//!   synthetic data generator.
//! - [`trees`] — CART and randomized-threshold regression trees plus bagged
//!   forests.
//! - [`boosting`] — second-order regularized gradient boosting with exact and
//!   histogram split finding, GOSS row sampling, and exclusive feature
//!   bundling.
//! - [`attention`] — a small transformer encoder over tabular features with
//!   an MSE regression head, usable as a feature encoder.
//! - [`hybrid`] — the three two-stage pipelines and their shipped parameter
//!   presets.
//! - [`evaluation`] — the seven regression metrics and the two uncertainty
//!   indices.
//! - [`explain`] — exact TreeSHAP (path-dependent and interventional) plus a
//!   brute-force Shapley oracle.
//! - [`tuning`] — k-fold cross-validation and seeded random search.
//!
//! All randomness is driven by explicit 64-bit seeds through the splitmix64
//! stream in [`rng`], so every fit, split, and search is reproducible
//! bit-for-bit across platforms and thread counts.

pub mod attention;
pub mod boosting;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod hybrid;
pub mod rng;
pub mod trees;
pub mod tuning;

pub use error::{Error, Result};
