//! SHAP attribution for tree-based models.
//!
//! Two value-function modes ship:
//!
//! - **Path-dependent** (default): the classic polynomial-time TreeSHAP
//!   recursion, conditioning on tree cover statistics. The base value is the
//!   cover-weighted expectation of the model over its training distribution.
//! - **Interventional**: conditions on an explicit background dataset. For a
//!   fixed background row, each root-to-leaf path splits its features into an
//!   x-side set `U` and a background-side set `V`; the leaf contributes
//!   `v·(u−1)!·w!/(u+w)!` to each feature in `U` and `−v·u!·(w−1)!/(u+w)!` to
//!   each in `V`. Averaging over background rows yields exact interventional
//!   Shapley values, which [`brute_shap`] cross-checks by full subset
//!   enumeration (feature count ≤ 12).
//!
//! Both modes satisfy additivity: `base + Σφ = prediction`.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::GBTModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hybrid::{HybridKind, HybridModel, Stage1Model};
use crate::trees::{ForestModel, TreeNode};

/// Maximum feature count for exact subset enumeration.
pub const BRUTE_MAX_FEATURES: usize = 12;

/// Borrowed view of any tree-backed model as `offset + Σ scale·tree(x)`.
#[derive(Clone, Copy)]
pub enum TreeEnsembleRef<'a> {
    Tree(&'a TreeNode),
    Forest(&'a ForestModel),
    Gbt(&'a GBTModel),
    /// Residual-stacked hybrid: forest plus booster over the same features.
    Hybrid(&'a HybridModel),
}

impl<'a> From<&'a TreeNode> for TreeEnsembleRef<'a> {
    fn from(t: &'a TreeNode) -> Self {
        TreeEnsembleRef::Tree(t)
    }
}

impl<'a> From<&'a ForestModel> for TreeEnsembleRef<'a> {
    fn from(m: &'a ForestModel) -> Self {
        TreeEnsembleRef::Forest(m)
    }
}

impl<'a> From<&'a GBTModel> for TreeEnsembleRef<'a> {
    fn from(m: &'a GBTModel) -> Self {
        TreeEnsembleRef::Gbt(m)
    }
}

impl<'a> TreeEnsembleRef<'a> {
    fn components(&self) -> Result<(f64, Vec<(f64, &'a TreeNode)>)> {
        match self {
            TreeEnsembleRef::Tree(t) => Ok((0.0, vec![(1.0, *t)])),
            TreeEnsembleRef::Forest(f) => {
                let scale = 1.0 / f.trees.len() as f64;
                Ok((0.0, f.trees.iter().map(|t| (scale, t)).collect()))
            }
            TreeEnsembleRef::Gbt(g) => Ok((
                g.base_score,
                g.trees.iter().map(|t| (g.learning_rate, t)).collect(),
            )),
            TreeEnsembleRef::Hybrid(h) => match (&h.kind, &h.stage1) {
                (HybridKind::TransformerXgb, _) => Err(Error::UnsupportedModel(
                    "transformer_xgb attributes over its encoded feature space; \
                     explain the stage-2 booster on encoded rows instead"
                        .into(),
                )),
                (_, Stage1Model::Forest(f)) => {
                    let mut comps: Vec<(f64, &TreeNode)> = Vec::new();
                    let scale = 1.0 / f.trees.len() as f64;
                    comps.extend(f.trees.iter().map(|t| (scale, t)));
                    comps.extend(h.stage2.trees.iter().map(|t| (h.stage2.learning_rate, t)));
                    Ok((h.stage2.base_score, comps))
                }
                (_, Stage1Model::Transformer(_)) => Err(Error::UnsupportedModel(
                    "residual hybrid with non-tree stage 1".into(),
                )),
            },
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            TreeEnsembleRef::Tree(t) => t.predict(x),
            TreeEnsembleRef::Forest(f) => f.predict(x),
            TreeEnsembleRef::Gbt(g) => g.predict(x),
            TreeEnsembleRef::Hybrid(h) => h.predict(x),
        }
    }
}

/// Per-sample, per-feature attributions with the shared base value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub values: Array2<f64>,
    pub base_value: f64,
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<usize>,
}

/// Features ranked by mean |SHAP|, descending; ties by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<(String, f64)>,
}

// ---------------------------------------------------------------------------
// Flattened tree with per-node covers.
// ---------------------------------------------------------------------------

enum FlatNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        cover: f64,
    },
    Leaf {
        value: f64,
        cover: f64,
    },
}

struct FlatTree {
    nodes: Vec<FlatNode>,
    max_depth: usize,
}

impl FlatTree {
    fn from_tree(root: &TreeNode) -> Self {
        fn push(nodes: &mut Vec<FlatNode>, node: &TreeNode, depth: usize, max: &mut usize) -> (usize, f64) {
            *max = (*max).max(depth);
            match node {
                TreeNode::Leaf { value, n } => {
                    let cover = (*n as f64).max(1.0);
                    nodes.push(FlatNode::Leaf {
                        value: *value,
                        cover,
                    });
                    (nodes.len() - 1, cover)
                }
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let slot = nodes.len();
                    nodes.push(FlatNode::Leaf {
                        value: 0.0,
                        cover: 0.0,
                    }); // placeholder
                    let (li, lc) = push(nodes, left, depth + 1, max);
                    let (ri, rc) = push(nodes, right, depth + 1, max);
                    nodes[slot] = FlatNode::Internal {
                        feature: *feature,
                        threshold: *threshold,
                        left: li,
                        right: ri,
                        cover: lc + rc,
                    };
                    (slot, lc + rc)
                }
            }
        }
        let mut nodes = Vec::new();
        let mut max_depth = 0;
        push(&mut nodes, root, 0, &mut max_depth);
        FlatTree { nodes, max_depth }
    }

    fn cover(&self, i: usize) -> f64 {
        match &self.nodes[i] {
            FlatNode::Internal { cover, .. } => *cover,
            FlatNode::Leaf { cover, .. } => *cover,
        }
    }
}

// ---------------------------------------------------------------------------
// Path-dependent TreeSHAP (unique-path recursion).
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct PathItem {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

impl PathItem {
    fn empty() -> Self {
        PathItem {
            feature: None,
            zero_fraction: 0.0,
            one_fraction: 0.0,
            pweight: 0.0,
        }
    }
}

fn extend_path(
    path: &mut [PathItem],
    depth: usize,
    zero_fraction: f64,
    one_fraction: f64,
    feature: Option<usize>,
) {
    path[depth] = PathItem {
        feature,
        zero_fraction,
        one_fraction,
        pweight: if depth == 0 { 1.0 } else { 0.0 },
    };
    for i in (0..depth).rev() {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) as f64 / (depth + 1) as f64;
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) as f64 / (depth + 1) as f64;
    }
}

fn unwind_path(path: &mut [PathItem], depth: usize, index: usize) {
    let one_fraction = path[index].one_fraction;
    let zero_fraction = path[index].zero_fraction;
    let mut next_one = path[depth].pweight;
    for i in (0..depth).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight = next_one * (depth + 1) as f64 / ((i + 1) as f64 * one_fraction);
            next_one = tmp - path[i].pweight * zero_fraction * (depth - i) as f64 / (depth + 1) as f64;
        } else {
            path[i].pweight =
                path[i].pweight * (depth + 1) as f64 / (zero_fraction * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

fn unwound_sum(path: &[PathItem], depth: usize, index: usize) -> f64 {
    let one_fraction = path[index].one_fraction;
    let zero_fraction = path[index].zero_fraction;
    let mut next_one = path[depth].pweight;
    let mut total = 0.0;
    if one_fraction != 0.0 {
        for i in (0..depth).rev() {
            let tmp = next_one / ((i + 1) as f64 * one_fraction);
            total += tmp;
            next_one = path[i].pweight - tmp * zero_fraction * (depth - i) as f64;
        }
    } else {
        for i in (0..depth).rev() {
            total += path[i].pweight / (zero_fraction * (depth - i) as f64);
        }
    }
    total * (depth + 1) as f64
}

#[allow(clippy::too_many_arguments)]
fn path_dependent_recurse(
    tree: &FlatTree,
    x: &[f64],
    phi: &mut [f64],
    node: usize,
    path: &mut Vec<PathItem>,
    depth: usize,
    parent_zero: f64,
    parent_one: f64,
    parent_feature: Option<usize>,
) {
    extend_path(&mut path[..], depth, parent_zero, parent_one, parent_feature);
    match &tree.nodes[node] {
        FlatNode::Leaf { value, .. } => {
            for i in 1..=depth {
                let w = unwound_sum(path, depth, i);
                let item = &path[i];
                phi[item.feature.expect("internal path item")] +=
                    w * (item.one_fraction - item.zero_fraction) * value;
            }
        }
        FlatNode::Internal {
            feature,
            threshold,
            left,
            right,
            cover,
        } => {
            let (hot, cold) = if x[*feature] <= *threshold {
                (*left, *right)
            } else {
                (*right, *left)
            };
            let hot_zero = tree.cover(hot) / cover;
            let cold_zero = tree.cover(cold) / cover;
            let mut incoming_zero = 1.0;
            let mut incoming_one = 1.0;
            let mut depth = depth;
            if let Some(i) = (1..=depth).find(|&i| path[i].feature == Some(*feature)) {
                incoming_zero = path[i].zero_fraction;
                incoming_one = path[i].one_fraction;
                unwind_path(path, depth, i);
                depth -= 1;
            }
            let saved: Vec<PathItem> = path[..depth + 1].to_vec();
            path_dependent_recurse(
                tree,
                x,
                phi,
                hot,
                path,
                depth + 1,
                hot_zero * incoming_zero,
                incoming_one,
                Some(*feature),
            );
            path[..depth + 1].clone_from_slice(&saved);
            path_dependent_recurse(
                tree,
                x,
                phi,
                cold,
                path,
                depth + 1,
                cold_zero * incoming_zero,
                0.0,
                Some(*feature),
            );
            path[..depth + 1].clone_from_slice(&saved);
        }
    }
}

fn check_dims(components: &[(f64, &TreeNode)], d: usize) -> Result<()> {
    for (_, tree) in components {
        if let Some(max_f) = tree.max_feature() {
            if max_f >= d {
                return Err(Error::Shape {
                    expected: max_f + 1,
                    got: d,
                });
            }
        }
    }
    Ok(())
}

/// Path-dependent TreeSHAP attributions and base value for one sample.
pub fn tree_shap<'a>(model: impl Into<TreeEnsembleRef<'a>>, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let model = model.into();
    let (offset, components) = model.components()?;
    check_dims(&components, x.len())?;
    let mut phi = vec![0.0; x.len()];
    let mut base = offset;
    for (scale, tree) in components {
        let flat = FlatTree::from_tree(tree);
        base += scale * tree.expectation();
        let mut tree_phi = vec![0.0; x.len()];
        let cap = flat.max_depth + 2;
        let mut path = vec![PathItem::empty(); cap * (cap + 1) / 2 + cap];
        path_dependent_recurse(&flat, x, &mut tree_phi, 0, &mut path, 0, 1.0, 1.0, None);
        for (p, t) in phi.iter_mut().zip(&tree_phi) {
            *p += scale * t;
        }
    }
    Ok((phi, base))
}

// ---------------------------------------------------------------------------
// Interventional TreeSHAP.
// ---------------------------------------------------------------------------

/// `1/(u·C(u+w, u))`, the Shapley weight of an x-side path feature.
fn weight_pos(u: usize, w: usize) -> f64 {
    let mut binom = 1.0;
    for i in 1..=u {
        binom *= (w + i) as f64 / i as f64;
    }
    1.0 / (u as f64 * binom)
}

fn interventional_pair(tree: &TreeNode, x: &[f64], b: &[f64], phi: &mut [f64]) {
    // Commits: features forced to the x side (true) or background side
    // (false) along the current path.
    fn recurse(
        node: &TreeNode,
        x: &[f64],
        b: &[f64],
        commits: &mut Vec<(usize, bool)>,
        phi: &mut [f64],
    ) {
        match node {
            TreeNode::Leaf { value, .. } => {
                let u = commits.iter().filter(|(_, xs)| *xs).count();
                let w = commits.len() - u;
                if u + w == 0 {
                    return;
                }
                for &(f, x_side) in commits.iter() {
                    if x_side {
                        phi[f] += value * weight_pos(u, w);
                    } else {
                        phi[f] -= value * weight_pos(w, u);
                    }
                }
            }
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let x_left = x[*feature] <= *threshold;
                let b_left = b[*feature] <= *threshold;
                if x_left == b_left {
                    let child = if x_left { left } else { right };
                    recurse(child, x, b, commits, phi);
                    return;
                }
                match commits.iter().find(|(f, _)| f == feature) {
                    Some(&(_, x_side)) => {
                        let follow_x = x_side;
                        let child = if (follow_x && x_left) || (!follow_x && b_left) {
                            left
                        } else {
                            right
                        };
                        recurse(child, x, b, commits, phi);
                    }
                    None => {
                        commits.push((*feature, true));
                        let x_child = if x_left { left } else { right };
                        recurse(x_child, x, b, commits, phi);
                        commits.pop();
                        commits.push((*feature, false));
                        let b_child = if b_left { left } else { right };
                        recurse(b_child, x, b, commits, phi);
                        commits.pop();
                    }
                }
            }
        }
    }
    let mut commits = Vec::new();
    recurse(tree, x, b, &mut commits, phi);
}

/// Interventional TreeSHAP: Shapley values of the ensemble with the value
/// function conditioned on the background dataset. The base value is the
/// mean model prediction over the background.
pub fn tree_shap_interventional<'a>(
    model: impl Into<TreeEnsembleRef<'a>>,
    x: &[f64],
    background: ArrayView2<f64>,
) -> Result<(Vec<f64>, f64)> {
    let model = model.into();
    if background.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    if background.ncols() != x.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: background.ncols(),
        });
    }
    let (_, components) = model.components()?;
    check_dims(&components, x.len())?;
    let mut phi = vec![0.0; x.len()];
    let inv_bg = 1.0 / background.nrows() as f64;
    let mut base = 0.0;
    for row in background.outer_iter() {
        let b = row.as_slice().expect("contiguous row");
        base += model.predict(b)? * inv_bg;
        let mut pair_phi = vec![0.0; x.len()];
        for (scale, tree) in &components {
            let mut tree_phi = vec![0.0; x.len()];
            interventional_pair(tree, x, b, &mut tree_phi);
            for (p, t) in pair_phi.iter_mut().zip(&tree_phi) {
                *p += scale * t;
            }
        }
        for (p, t) in phi.iter_mut().zip(&pair_phi) {
            *p += inv_bg * t;
        }
    }
    Ok((phi, base))
}

// ---------------------------------------------------------------------------
// Brute-force Shapley oracle.
// ---------------------------------------------------------------------------

/// Exact interventional Shapley values of an arbitrary predictor by full
/// subset enumeration. Limited to [`BRUTE_MAX_FEATURES`] features.
pub fn brute_shap(
    predictor: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    background: ArrayView2<f64>,
) -> Result<(Vec<f64>, f64)> {
    let d = x.len();
    if d > BRUTE_MAX_FEATURES {
        return Err(Error::TooManyFeatures {
            got: d,
            max: BRUTE_MAX_FEATURES,
        });
    }
    if background.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    if background.ncols() != d {
        return Err(Error::Shape {
            expected: d,
            got: background.ncols(),
        });
    }
    let n_masks = 1usize << d;
    let inv_bg = 1.0 / background.nrows() as f64;
    let mut v = vec![0.0; n_masks];
    let mut blend = vec![0.0; d];
    for (mask, slot) in v.iter_mut().enumerate() {
        let mut acc = 0.0;
        for row in background.outer_iter() {
            for j in 0..d {
                blend[j] = if mask & (1 << j) != 0 { x[j] } else { row[j] };
            }
            acc += predictor(&blend);
        }
        *slot = acc * inv_bg;
    }
    let mut fact = vec![1.0f64; d + 1];
    for i in 1..=d {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut phi = vec![0.0; d];
    for (j, phi_j) in phi.iter_mut().enumerate() {
        let bit = 1usize << j;
        for mask in 0..n_masks {
            if mask & bit != 0 {
                continue;
            }
            let s = (mask as u32).count_ones() as usize;
            let weight = fact[s] * fact[d - s - 1] / fact[d];
            *phi_j += weight * (v[mask | bit] - v[mask]);
        }
    }
    Ok((phi, v[0]))
}

// ---------------------------------------------------------------------------
// Batch attribution and reporting.
// ---------------------------------------------------------------------------

/// Path-dependent attributions for a batch of rows, parallel over samples.
pub fn shap_matrix<'a>(
    model: impl Into<TreeEnsembleRef<'a>>,
    x: ArrayView2<f64>,
    sample_ids: Vec<usize>,
    feature_names: Vec<String>,
) -> Result<ShapMatrix> {
    let model = model.into();
    if sample_ids.len() != x.nrows() {
        return Err(Error::Shape {
            expected: x.nrows(),
            got: sample_ids.len(),
        });
    }
    if feature_names.len() != x.ncols() {
        return Err(Error::Shape {
            expected: x.ncols(),
            got: feature_names.len(),
        });
    }
    let rows: Result<Vec<(Vec<f64>, f64)>> = (0..x.nrows())
        .into_par_iter()
        .map(|i| tree_shap(model, x.row(i).as_slice().expect("contiguous row")))
        .collect();
    let rows = rows?;
    let base_value = rows.first().map(|(_, b)| *b).unwrap_or(0.0);
    let mut values = Array2::zeros((x.nrows(), x.ncols()));
    for (i, (phi, _)) in rows.iter().enumerate() {
        for (j, p) in phi.iter().enumerate() {
            values[[i, j]] = *p;
        }
    }
    Ok(ShapMatrix {
        values,
        base_value,
        feature_names,
        sample_ids,
    })
}

/// Mean |SHAP| per feature, descending; ties break by feature name.
pub fn global_importance(shap: &ShapMatrix) -> ImportanceRanking {
    let n = shap.values.nrows().max(1) as f64;
    let mut entries: Vec<(String, f64)> = shap
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mean_abs = shap.values.column(j).iter().map(|v| v.abs()).sum::<f64>() / n;
            (name.clone(), mean_abs)
        })
        .collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ImportanceRanking { entries }
}

/// Per-sample (feature value, SHAP value) pairs for one feature, sorted
/// ascending by value with stable ties.
pub fn dependence(shap: &ShapMatrix, ds: &Dataset, feature: &str) -> Result<Vec<(f64, f64)>> {
    let j = shap
        .feature_names
        .iter()
        .position(|f| f == feature)
        .ok_or_else(|| Error::UnknownFeature(feature.to_string()))?;
    let mut pairs: Vec<(f64, f64)> = shap
        .sample_ids
        .iter()
        .enumerate()
        .map(|(row, &id)| (ds.x[[id, j]], shap.values[[row, j]]))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs)
}

/// One sample's attributions sorted by |SHAP| descending: `(feature, value,
/// shap)` rows for waterfall-style reporting.
pub fn waterfall(shap: &ShapMatrix, ds: &Dataset, row: usize) -> Result<Vec<(String, f64, f64)>> {
    if row >= shap.values.nrows() {
        return Err(Error::Shape {
            expected: shap.values.nrows(),
            got: row,
        });
    }
    let id = shap.sample_ids[row];
    let mut entries: Vec<(String, f64, f64)> = shap
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), ds.x[[id, j]], shap.values[[row, j]]))
        .collect();
    entries.sort_by(|a, b| b.2.abs().partial_cmp(&a.2.abs()).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(entries)
}

/// Least-squares slope of SHAP value against feature value.
pub fn dependence_slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let var: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if var > 0.0 {
        cov / var
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::trees::{fit_tree, TreeParams};
    use ndarray::arr2;

    fn stump(feature: usize, threshold: f64, left: f64, right: f64, n: usize) -> TreeNode {
        TreeNode::Internal {
            feature,
            threshold,
            left: Box::new(TreeNode::Leaf { value: left, n }),
            right: Box::new(TreeNode::Leaf { value: right, n }),
        }
    }

    #[test]
    fn constant_model_all_zero() {
        let tree = TreeNode::Leaf { value: 7.0, n: 10 };
        let (phi, base) = tree_shap(&tree, &[1.0, 2.0]).unwrap();
        assert_eq!(phi, vec![0.0, 0.0]);
        assert_eq!(base, 7.0);
    }

    #[test]
    fn balanced_stump_attribution() {
        // Balanced cover: expectation 5, so the active side carries ±5.
        let tree = stump(0, 0.5, 0.0, 10.0, 4);
        let (phi, base) = tree_shap(&tree, &[1.0, 99.0]).unwrap();
        assert!((base - 5.0).abs() < 1e-12);
        assert!((phi[0] - 5.0).abs() < 1e-12);
        assert_eq!(phi[1], 0.0);
        // Additivity: base + phi = prediction = 10.
        assert!((base + phi[0] + phi[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn additivity_on_fitted_ensembles() {
        let mut rng = SplitMix64::new(14);
        let n = 60;
        let mut x = ndarray::Array2::zeros((n, 4));
        for v in x.iter_mut() {
            *v = rng.uniform(-2.0, 2.0);
        }
        let y: Vec<f64> = (0..n)
            .map(|i| x[[i, 0]] * 3.0 + x[[i, 1]] * x[[i, 1]] - x[[i, 3]])
            .collect();
        let forest =
            crate::trees::fit_forest(x.view(), &y, &TreeParams { seed: 3, ..TreeParams::default() }, 12, true)
                .unwrap();
        let gbt = crate::boosting::fit_gbt(
            x.view(),
            &y,
            None,
            &crate::boosting::GBTParams {
                n_estimators: 20,
                learning_rate: 0.2,
                max_depth: 3,
                ..crate::boosting::GBTParams::default()
            },
        )
        .unwrap();
        for i in 0..10 {
            let row = x.row(i);
            let probe = row.as_slice().unwrap();
            let (phi, base) = tree_shap(&forest, probe).unwrap();
            let pred = forest.predict(probe).unwrap();
            assert!(
                (base + phi.iter().sum::<f64>() - pred).abs() < 1e-6,
                "forest additivity violated"
            );
            let (phi, base) = tree_shap(&gbt, probe).unwrap();
            let pred = gbt.predict(probe).unwrap();
            assert!(
                (base + phi.iter().sum::<f64>() - pred).abs() < 1e-6,
                "gbt additivity violated"
            );
        }
    }

    #[test]
    fn dummy_feature_gets_zero() {
        // Feature 1 never splits; its attribution must be exactly zero.
        let tree = stump(0, 0.0, -1.0, 1.0, 3);
        let (phi, _) = tree_shap(&tree, &[0.5, 123.0]).unwrap();
        assert_eq!(phi[1], 0.0);
    }

    #[test]
    fn interventional_single_feature_model() {
        let tree = stump(0, 0.5, 0.0, 10.0, 1);
        let background = arr2(&[[0.0], [0.0], [1.0], [0.0]]);
        let x = [1.0];
        let (phi, base) = tree_shap_interventional(&tree, &x, background.view()).unwrap();
        // phi_0 = f(x) - mean_b f(b) = 10 - 2.5
        assert!((phi[0] - 7.5).abs() < 1e-12);
        assert!((base - 2.5).abs() < 1e-12);
    }

    #[test]
    fn interventional_hand_enumerated_two_features() {
        // Depth-2 tree over 2 features, single background row. The four
        // subset values are leaves reachable by blending x and b.
        let tree = TreeNode::Internal {
            feature: 0,
            threshold: 0.5,
            left: Box::new(stump(1, 0.5, 1.0, 2.0, 1)),
            right: Box::new(stump(1, 0.5, 3.0, 4.0, 1)),
        };
        let x = [1.0, 1.0];
        let background = arr2(&[[0.0, 0.0]]);
        // v({}) = f(0,0)=1, v({0}) = f(1,0)=3, v({1}) = f(0,1)=2,
        // v({0,1}) = 4; phi_0 = ((3-1)+(4-2))/2 = 2, phi_1 = 1.
        let (phi, base) = tree_shap_interventional(&tree, &x, background.view()).unwrap();
        assert!((phi[0] - 2.0).abs() < 1e-12);
        assert!((phi[1] - 1.0).abs() < 1e-12);
        assert!((base - 1.0).abs() < 1e-12);
        let f = |row: &[f64]| tree.predict(row).unwrap();
        let (bphi, bbase) = brute_shap(&f, &x, background.view()).unwrap();
        assert!((bphi[0] - phi[0]).abs() < 1e-12);
        assert!((bphi[1] - phi[1]).abs() < 1e-12);
        assert!((bbase - base).abs() < 1e-12);
    }

    #[test]
    fn brute_symmetry_axiom() {
        let f = |row: &[f64]| row[0] + row[1];
        let background = arr2(&[[0.0, 0.0], [1.0, 1.0]]);
        let (phi, _) = brute_shap(&f, &[2.0, 2.0], background.view()).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-12);
    }

    #[test]
    fn brute_feature_limit() {
        let f = |_: &[f64]| 0.0;
        let x = vec![0.0; 13];
        let bg = ndarray::Array2::zeros((1, 13));
        assert!(matches!(
            brute_shap(&f, &x, bg.view()),
            Err(Error::TooManyFeatures { .. })
        ));
    }

    #[test]
    fn interventional_matches_brute_on_random_ensembles() {
        let mut rng = SplitMix64::new(55);
        for case in 0..25 {
            let n = 20;
            let d = 3;
            let mut x = ndarray::Array2::zeros((n, d));
            for v in x.iter_mut() {
                *v = rng.uniform(-1.0, 1.0);
            }
            let y: Vec<f64> = (0..n)
                .map(|i| x[[i, 0]] * 2.0 - x[[i, 1]] + rng.uniform(-0.3, 0.3))
                .collect();
            let params = TreeParams {
                max_depth: Some(3),
                seed: case,
                ..TreeParams::default()
            };
            let forest = crate::trees::fit_forest(x.view(), &y, &params, 3, true).unwrap();
            let probe: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let background = x.slice(ndarray::s![..5, ..]);
            let (phi, base) =
                tree_shap_interventional(&forest, &probe, background).unwrap();
            let f = |row: &[f64]| forest.predict(row).unwrap();
            let (bphi, bbase) = brute_shap(&f, &probe, background).unwrap();
            for j in 0..d {
                assert!(
                    (phi[j] - bphi[j]).abs() < 1e-9,
                    "case {case} feature {j}: {} vs {}",
                    phi[j],
                    bphi[j]
                );
            }
            assert!((base - bbase).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetry_of_exchangeable_features() {
        // Tree built on y = x0 + x1 with x0, x1 exchangeable; interventional
        // attributions on a symmetric probe/background must match.
        let x = arr2(&[
            [0.0, 0.0],
            [0.0, 1.0],
            [1.0, 0.0],
            [1.0, 1.0],
        ]);
        let y = [0.0, 1.0, 1.0, 2.0];
        let mut rng = SplitMix64::new(0);
        let tree = fit_tree(x.view(), &y, &TreeParams::default(), &mut rng).unwrap();
        let background = arr2(&[[0.0, 0.0], [1.0, 1.0]]);
        let (phi, _) = tree_shap_interventional(&tree, &[1.0, 1.0], background.view()).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-9);
    }

    #[test]
    fn importance_ranking_and_ties() {
        let values = arr2(&[[2.0, 0.0, -1.0], [-2.0, 0.0, 1.0]]);
        let shap = ShapMatrix {
            values,
            base_value: 0.0,
            feature_names: vec!["b".into(), "a".into(), "c".into()],
            sample_ids: vec![0, 1],
        };
        let ranking = global_importance(&shap);
        assert_eq!(ranking.entries[0].0, "b");
        assert_eq!(ranking.entries[0].1, 2.0);
        assert_eq!(ranking.entries[1].0, "c");
        assert_eq!(ranking.entries[2].0, "a");
        assert_eq!(ranking.entries[2].1, 0.0);
    }

    #[test]
    fn all_zero_importances() {
        let shap = ShapMatrix {
            values: ndarray::Array2::zeros((3, 2)),
            base_value: 1.0,
            feature_names: vec!["a".into(), "b".into()],
            sample_ids: vec![0, 1, 2],
        };
        let ranking = global_importance(&shap);
        assert!(ranking.entries.iter().all(|(_, v)| *v == 0.0));
        // Ties resolve alphabetically.
        assert_eq!(ranking.entries[0].0, "a");
    }

    #[test]
    fn dependence_sorted_and_named() {
        let ds = Dataset::new(
            vec!["f".into()],
            arr2(&[[3.0], [1.0], [2.0]]),
            vec![0.0, 0.0, 0.0],
            "t".into(),
        )
        .unwrap();
        let shap = ShapMatrix {
            values: arr2(&[[30.0], [10.0], [20.0]]),
            base_value: 0.0,
            feature_names: vec!["f".into()],
            sample_ids: vec![0, 1, 2],
        };
        let pairs = dependence(&shap, &ds, "f").unwrap();
        assert_eq!(pairs, vec![(1.0, 10.0), (2.0, 20.0), (3.0, 30.0)]);
        assert!(matches!(
            dependence(&shap, &ds, "missing"),
            Err(Error::UnknownFeature(_))
        ));
        let slope = dependence_slope(&pairs);
        assert!((slope - 10.0).abs() < 1e-12);
    }

    #[test]
    fn waterfall_sorted_by_magnitude() {
        let ds = Dataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            arr2(&[[1.0, 2.0, 3.0]]),
            vec![0.0],
            "t".into(),
        )
        .unwrap();
        let shap = ShapMatrix {
            values: arr2(&[[1.0, -5.0, 2.0]]),
            base_value: 0.0,
            feature_names: vec!["a".into(), "b".into(), "c".into()],
            sample_ids: vec![0],
        };
        let rows = waterfall(&shap, &ds, 0).unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(names, vec!["b", "c", "a"]);
    }
}
