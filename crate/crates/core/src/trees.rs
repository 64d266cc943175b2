//! Regression trees with exact (CART) and fully randomized (Extra-Trees)
//! split selection, plus bagged forests.
//!
//! Routing is fixed as `x[feature] <= threshold -> left`. Exact-mode
//! thresholds are midpoints between consecutive distinct sorted values; gain
//! ties break by lowest feature index then lowest threshold. All in-node
//! sums run in a canonical (value-sorted) order, so a fitted exact-split tree
//! is invariant to permutations of the training rows.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// A regression tree node: internal split or leaf.
///
/// Serializes losslessly to JSON as `{feature, threshold, left, right}` or
/// `{value, n}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        n: usize,
    },
}

impl TreeNode {
    /// Value of the leaf reached by routing `x` through the tree.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return Ok(*value),
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= x.len() {
                        return Err(Error::Shape {
                            expected: *feature + 1,
                            got: x.len(),
                        });
                    }
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Total training cover (sum of leaf sample counts).
    pub fn cover(&self) -> usize {
        match self {
            TreeNode::Leaf { n, .. } => *n,
            TreeNode::Internal { left, right, .. } => left.cover() + right.cover(),
        }
    }

    /// Cover-weighted expectation of the tree output over its training
    /// distribution.
    pub fn expectation(&self) -> f64 {
        fn go(node: &TreeNode) -> (f64, f64) {
            match node {
                TreeNode::Leaf { value, n } => (*value * *n as f64, *n as f64),
                TreeNode::Internal { left, right, .. } => {
                    let (ls, lc) = go(left);
                    let (rs, rc) = go(right);
                    (ls + rs, lc + rc)
                }
            }
        }
        let (sum, count) = go(self);
        if count > 0.0 {
            sum / count
        } else {
            0.0
        }
    }

    /// Largest feature index referenced by any split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal {
                feature,
                left,
                right,
                ..
            } => {
                let m = left.max_feature().into_iter().chain(right.max_feature());
                Some(m.fold(*feature, usize::max))
            }
        }
    }
}

/// Split-candidate selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Best variance-reduction split over all (feature, midpoint) candidates.
    Exact,
    /// One uniformly drawn threshold per candidate feature; best of those.
    RandomThreshold,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TreeParams {
    /// `None` grows until the stopping rules below apply.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub split_mode: SplitMode,
    /// Fraction of features drawn (without replacement) per node, in (0, 1].
    pub feature_subsample: f64,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            split_mode: SplitMode::Exact,
            feature_subsample: 1.0,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be >= 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Config("min_samples_leaf must be >= 1".into()));
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(Error::Config("feature_subsample must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// A bagged ensemble whose prediction is the arithmetic mean of its members.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub bootstrap: bool,
    pub params: TreeParams,
    pub n_features: usize,
}

impl ForestModel {
    /// Mean of member predictions, summed left to right.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut sum = 0.0;
        for tree in &self.trees {
            sum += tree.predict(x)?;
        }
        Ok(sum / self.trees.len() as f64)
    }

    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        x.outer_iter()
            .map(|row| self.predict(row.as_slice().expect("contiguous row")))
            .collect()
    }
}

struct NodeSums {
    count: usize,
    sum: f64,
    lo: f64,
    hi: f64,
}

impl NodeSums {
    fn constant(&self) -> bool {
        self.lo == self.hi
    }

    fn mean(&self) -> f64 {
        // A constant node keeps the exact constant rather than sum/n, which
        // can differ in the last ulp.
        if self.constant() {
            self.lo
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Sums over node rows in canonical (sorted-by-value) order.
fn node_sums(y: &[f64], idx: &[usize]) -> NodeSums {
    let mut vals: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sum: f64 = vals.iter().sum();
    NodeSums {
        count: idx.len(),
        sum,
        lo: vals[0],
        hi: vals[vals.len() - 1],
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    /// `s_l²/n_l + s_r²/n_r`; the parent term is constant per node.
    score: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    // Higher score wins; ties prefer the lower feature index, then the lower
    // threshold.
    if a.score != b.score {
        return a.score > b.score;
    }
    if a.feature != b.feature {
        return a.feature < b.feature;
    }
    a.threshold < b.threshold
}

struct TreeFitter<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    params: &'a TreeParams,
}

impl<'a> TreeFitter<'a> {
    fn leaf(&self, sums: &NodeSums) -> TreeNode {
        TreeNode::Leaf {
            value: sums.mean(),
            n: sums.count,
        }
    }

    fn candidate_features(&self, rng: &mut SplitMix64) -> Vec<usize> {
        let d = self.x.ncols();
        if self.params.feature_subsample >= 1.0 {
            return (0..d).collect();
        }
        let k = ((self.params.feature_subsample * d as f64).round() as usize).clamp(1, d);
        rng.sample_without_replacement(d, k)
    }

    /// Sorted (value, y) pairs for a feature over the node rows. Sorting by
    /// the pair makes the left/right prefix sums independent of row order.
    fn sorted_pairs(&self, idx: &[usize], feature: usize) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = idx
            .iter()
            .map(|&i| (self.x[[i, feature]], self.y[i]))
            .collect();
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pairs
    }

    fn best_exact_for_feature(&self, idx: &[usize], feature: usize) -> Option<Candidate> {
        let pairs = self.sorted_pairs(idx, feature);
        let n = pairs.len();
        let msl = self.params.min_samples_leaf;
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut best: Option<Candidate> = None;
        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue; // threshold only between distinct values
            }
            let n_l = i + 1;
            let n_r = n - n_l;
            if n_l < msl || n_r < msl {
                continue;
            }
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / n_l as f64 + right_sum * right_sum / n_r as f64;
            let threshold = 0.5 * (pairs[i].0 + pairs[i + 1].0);
            let cand = Candidate {
                feature,
                threshold,
                score,
            };
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
        best
    }

    fn random_for_feature(
        &self,
        idx: &[usize],
        feature: usize,
        rng: &mut SplitMix64,
    ) -> Option<Candidate> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in idx {
            let v = self.x[[i, feature]];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi <= lo {
            return None;
        }
        let threshold = rng.uniform(lo, hi);
        let pairs = self.sorted_pairs(idx, feature);
        let msl = self.params.min_samples_leaf;
        let mut n_l = 0usize;
        let mut left_sum = 0.0;
        let mut total = 0.0;
        for (v, yv) in &pairs {
            total += yv;
            if *v <= threshold {
                n_l += 1;
                left_sum += yv;
            }
        }
        let n_r = pairs.len() - n_l;
        if n_l < msl || n_r < msl || n_l == 0 || n_r == 0 {
            return None;
        }
        let right_sum = total - left_sum;
        let score = left_sum * left_sum / n_l as f64 + right_sum * right_sum / n_r as f64;
        Some(Candidate {
            feature,
            threshold,
            score,
        })
    }

    fn build(&self, idx: &[usize], depth: usize, rng: &mut SplitMix64) -> TreeNode {
        let sums = node_sums(self.y, idx);
        let n = sums.count;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if depth_reached || n < self.params.min_samples_split || sums.constant() {
            return self.leaf(&sums);
        }

        let features = self.candidate_features(rng);
        let mut best: Option<Candidate> = None;
        for feature in features {
            let cand = match self.params.split_mode {
                SplitMode::Exact => self.best_exact_for_feature(idx, feature),
                SplitMode::RandomThreshold => self.random_for_feature(idx, feature, rng),
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| better(&c, b)) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            return self.leaf(&sums);
        };

        let mut left_idx = Vec::new();
        let mut right_idx = Vec::new();
        for &i in idx {
            if self.x[[i, split.feature]] <= split.threshold {
                left_idx.push(i);
            } else {
                right_idx.push(i);
            }
        }
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.build(&left_idx, depth + 1, rng)),
            right: Box::new(self.build(&right_idx, depth + 1, rng)),
        }
    }
}

/// Fit a single regression tree on the given rows.
pub fn fit_tree(
    x: ArrayView2<f64>,
    y: &[f64],
    params: &TreeParams,
    rng: &mut SplitMix64,
) -> Result<TreeNode> {
    params.validate()?;
    if x.nrows() == 0 || y.is_empty() {
        return Err(Error::EmptyData);
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let fitter = TreeFitter { x, y, params };
    let idx: Vec<usize> = (0..x.nrows()).collect();
    Ok(fitter.build(&idx, 0, rng))
}

/// Fit a bagged forest. Each tree draws its bootstrap resample and its split
/// randomness from the substream `derive_seed(params.seed, tree_index)`, so
/// the fitted model is independent of the parallel schedule.
pub fn fit_forest(
    x: ArrayView2<f64>,
    y: &[f64],
    params: &TreeParams,
    n_estimators: usize,
    bootstrap: bool,
) -> Result<ForestModel> {
    params.validate()?;
    if n_estimators == 0 {
        return Err(Error::Config("n_estimators must be >= 1".into()));
    }
    if x.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let n = x.nrows();
    let trees: Result<Vec<TreeNode>> = (0..n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = SplitMix64::new(derive_seed(params.seed, t as u64));
            let fitter = TreeFitter { x, y, params };
            let idx: Vec<usize> = if bootstrap {
                (0..n).map(|_| rng.below(n)).collect()
            } else {
                (0..n).collect()
            };
            Ok(fitter.build(&idx, 0, &mut rng))
        })
        .collect();
    Ok(ForestModel {
        trees: trees?,
        bootstrap,
        params: params.clone(),
        n_features: x.ncols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};
    use proptest::prelude::*;

    fn exact_params() -> TreeParams {
        TreeParams::default()
    }

    #[test]
    fn constant_target_single_leaf() {
        let x = arr2(&[[0.0], [1.0], [2.0]]);
        let y = [7.0, 7.0, 7.0];
        let mut rng = SplitMix64::new(0);
        let tree = fit_tree(x.view(), &y, &exact_params(), &mut rng).unwrap();
        assert_eq!(tree, TreeNode::Leaf { value: 7.0, n: 3 });
    }

    #[test]
    fn exact_split_at_middle_gap() {
        let x = arr2(&[[0.0], [1.0], [2.0], [3.0]]);
        let y = [0.0, 0.0, 10.0, 10.0];
        let params = TreeParams {
            max_depth: Some(1),
            ..exact_params()
        };
        let mut rng = SplitMix64::new(0);
        let tree = fit_tree(x.view(), &y, &params, &mut rng).unwrap();
        match tree {
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
                assert_eq!(*left, TreeNode::Leaf { value: 0.0, n: 2 });
                assert_eq!(*right, TreeNode::Leaf { value: 10.0, n: 2 });
            }
            other => panic!("expected internal node, got {other:?}"),
        }
    }

    #[test]
    fn random_threshold_deterministic_per_seed() {
        let x = arr2(&[[0.0], [1.0], [2.0], [3.0]]);
        let y = [0.0, 0.0, 10.0, 10.0];
        let params = TreeParams {
            split_mode: SplitMode::RandomThreshold,
            ..exact_params()
        };
        let mut r1 = SplitMix64::new(5);
        let mut r2 = SplitMix64::new(5);
        let t1 = fit_tree(x.view(), &y, &params, &mut r1).unwrap();
        let t2 = fit_tree(x.view(), &y, &params, &mut r2).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn predict_single_leaf() {
        let tree = TreeNode::Leaf { value: 7.0, n: 1 };
        assert_eq!(tree.predict(&[123.0, -5.0]).unwrap(), 7.0);
    }

    #[test]
    fn predict_boundary_goes_left() {
        let stump = TreeNode::Internal {
            feature: 0,
            threshold: 1.5,
            left: Box::new(TreeNode::Leaf { value: 0.0, n: 2 }),
            right: Box::new(TreeNode::Leaf { value: 10.0, n: 2 }),
        };
        assert_eq!(stump.predict(&[1.5]).unwrap(), 0.0);
        assert_eq!(stump.predict(&[2.0]).unwrap(), 10.0);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let stump = TreeNode::Internal {
            feature: 3,
            threshold: 0.0,
            left: Box::new(TreeNode::Leaf { value: 0.0, n: 1 }),
            right: Box::new(TreeNode::Leaf { value: 1.0, n: 1 }),
        };
        assert!(matches!(stump.predict(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn forest_of_one_equals_tree() {
        let x = arr2(&[[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]]);
        let y = [1.0, 2.0, 3.0, 4.0];
        let params = exact_params();
        let forest = fit_forest(x.view(), &y, &params, 1, false).unwrap();
        let mut rng = SplitMix64::new(derive_seed(params.seed, 0));
        let tree = fit_tree(x.view(), &y, &params, &mut rng).unwrap();
        for row in x.outer_iter() {
            let r = row.as_slice().unwrap();
            assert_eq!(forest.predict(r).unwrap(), tree.predict(r).unwrap());
        }
    }

    #[test]
    fn forest_constant_target() {
        let x = arr2(&[[0.0], [1.0], [2.0], [3.0], [4.0]]);
        let y = [3.25; 5];
        let forest = fit_forest(x.view(), &y, &exact_params(), 20, true).unwrap();
        assert_eq!(forest.predict(&[2.5]).unwrap(), 3.25);
    }

    #[test]
    fn forest_mean_of_members() {
        let two = ForestModel {
            trees: vec![
                TreeNode::Leaf { value: 2.0, n: 1 },
                TreeNode::Leaf { value: 4.0, n: 1 },
            ],
            bootstrap: false,
            params: TreeParams::default(),
            n_features: 1,
        };
        assert_eq!(two.predict(&[0.0]).unwrap(), 3.0);
    }

    #[test]
    fn forest_refit_identical() {
        let x = arr2(&[[0.0, 1.0], [1.0, 0.5], [2.0, 0.25], [3.0, 2.0], [4.0, 1.5]]);
        let y = [0.1, 0.4, 0.9, 1.6, 2.5];
        let params = TreeParams {
            split_mode: SplitMode::RandomThreshold,
            seed: 77,
            ..exact_params()
        };
        let a = fit_forest(x.view(), &y, &params, 16, true).unwrap();
        let b = fit_forest(x.view(), &y, &params, 16, true).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn tree_json_round_trip_full_precision() {
        let x = arr2(&[
            [0.123456789012345, 1.0],
            [1.0, 0.5],
            [0.2, 0.25],
            [3.0, 2.0],
        ]);
        let y = [0.1, std::f64::consts::PI, 0.9, 1.0 / 3.0];
        let mut rng = SplitMix64::new(2);
        let tree = fit_tree(x.view(), &y, &exact_params(), &mut rng).unwrap();
        let json = serde_json::to_string(&tree).unwrap();
        let back: TreeNode = serde_json::from_str(&json).unwrap();
        assert_eq!(tree, back);
    }

    fn random_dataset(seed: u64, n: usize, d: usize) -> (Array2<f64>, Vec<f64>) {
        let mut rng = SplitMix64::new(seed);
        let mut x = Array2::zeros((n, d));
        for i in 0..n {
            for j in 0..d {
                x[[i, j]] = rng.uniform(-3.0, 3.0);
            }
        }
        let y: Vec<f64> = (0..n)
            .map(|i| x[[i, 0]] * 2.0 + x[[i, d - 1]].sin() + rng.uniform(-0.1, 0.1))
            .collect();
        (x, y)
    }

    #[test]
    fn exact_tree_interpolates_distinct_rows() {
        let (x, y) = random_dataset(31, 40, 3);
        let mut rng = SplitMix64::new(0);
        let tree = fit_tree(x.view(), &y, &exact_params(), &mut rng).unwrap();
        for (i, row) in x.outer_iter().enumerate() {
            let p = tree.predict(row.as_slice().unwrap()).unwrap();
            assert!(
                (p - y[i]).abs() < 1e-12,
                "row {i}: predicted {p}, actual {}",
                y[i]
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exact_tree_invariant_to_row_permutation(seed in 0u64..500) {
            let (x, y) = random_dataset(seed, 25, 3);
            let mut order: Vec<usize> = (0..25).collect();
            let mut shuffle_rng = SplitMix64::new(seed ^ 0xABCD);
            shuffle_rng.shuffle(&mut order);
            let mut xp = Array2::zeros((25, 3));
            let mut yp = vec![0.0; 25];
            for (r, &i) in order.iter().enumerate() {
                xp.row_mut(r).assign(&x.row(i));
                yp[r] = y[i];
            }
            let mut r1 = SplitMix64::new(0);
            let mut r2 = SplitMix64::new(0);
            let t1 = fit_tree(x.view(), &y, &exact_params(), &mut r1).unwrap();
            let t2 = fit_tree(xp.view(), &yp, &exact_params(), &mut r2).unwrap();
            prop_assert_eq!(
                serde_json::to_string(&t1).unwrap(),
                serde_json::to_string(&t2).unwrap()
            );
        }

        #[test]
        fn forest_prediction_is_member_mean(seed in 0u64..200) {
            let (x, y) = random_dataset(seed, 30, 3);
            let params = TreeParams { seed, ..TreeParams::default() };
            let forest = fit_forest(x.view(), &y, &params, 7, true).unwrap();
            let probe = [0.5, -0.5, 1.5];
            let mut sum = 0.0;
            for tree in &forest.trees {
                sum += tree.predict(&probe).unwrap();
            }
            prop_assert_eq!(forest.predict(&probe).unwrap(), sum / 7.0);
        }
    }
}
