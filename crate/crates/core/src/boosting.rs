//! Second-order regularized gradient boosting over regression trees.
//!
//! Squared-error loss with the factor of two absorbed: `g = ŷ − y`, `h = 1`,
//! so the optimal leaf weight at `α = 0` is the mean residual. Leaf weights
//! soft-threshold the gradient sum by `α` (L1), shrink by `λ` (L2), and
//! splits pay a per-leaf penalty `γ`:
//!
//! - `w = −sign(G)·max(|G|−α, 0)/(H+λ)`
//! - `gain = ½[score(G_L,H_L) + score(G_R,H_R) − score(G_L+G_R, H_L+H_R)] − γ`
//!   with `score(G,H) = soft(G,α)²/(H+λ)`
//!
//! Split finding runs in `exact` mode (all midpoint candidates) or
//! `histogram` mode (global quantile bins with the sibling-subtraction trick,
//! GOSS row sampling, and exclusive feature bundling). Histogram-mode trees
//! still split on raw features: EFB only accelerates histogram construction,
//! and chosen thresholds are midpoints between the actual in-node values each
//! side of the winning bin boundary, so bin-aligned data reproduces
//! exact-mode trees.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::trees::TreeNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    #[default]
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoostMode {
    #[default]
    Exact,
    Histogram,
}

/// Histogram-mode settings: bin budget, GOSS fractions, EFB conflict budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramParams {
    pub n_bins: usize,
    /// Fraction of rows kept by largest |gradient|, weight 1.
    pub goss_a: f64,
    /// Fraction of rows sampled uniformly from the remainder, weight (1−a)/b.
    pub goss_b: f64,
    /// Maximum nonzero-row overlap fraction for two features to bundle.
    pub efb_conflict: f64,
}

impl Default for HistogramParams {
    fn default() -> Self {
        HistogramParams {
            n_bins: 255,
            goss_a: 0.2,
            goss_b: 0.1,
            efb_conflict: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBTParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum hessian sum per child (equals row count for squared loss).
    pub min_child_weight: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    #[serde(default)]
    pub loss: Loss,
    pub seed: u64,
    #[serde(default)]
    pub mode: BoostMode,
    #[serde(default)]
    pub histogram: HistogramParams,
}

impl Default for GBTParams {
    fn default() -> Self {
        GBTParams {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 6,
            min_child_weight: 1.0,
            reg_alpha: 0.0,
            reg_lambda: 1.0,
            gamma: 0.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
            loss: Loss::SquaredError,
            seed: 0,
            mode: BoostMode::Exact,
            histogram: HistogramParams::default(),
        }
    }
}

impl GBTParams {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        if self.min_child_weight < 0.0 || self.reg_alpha < 0.0 || self.reg_lambda < 0.0 {
            return Err(Error::Config(
                "min_child_weight, reg_alpha, reg_lambda must be >= 0".into(),
            ));
        }
        if self.gamma < 0.0 {
            return Err(Error::Config("gamma must be >= 0".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Config("subsample must be in (0, 1]".into()));
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return Err(Error::Config("colsample_bytree must be in (0, 1]".into()));
        }
        if self.mode == BoostMode::Histogram {
            let h = &self.histogram;
            if h.n_bins < 2 {
                return Err(Error::Config("n_bins must be >= 2".into()));
            }
            if !(h.goss_a > 0.0 && h.goss_a <= 1.0) || h.goss_b < 0.0 {
                return Err(Error::Config("goss_a in (0,1], goss_b >= 0".into()));
            }
            if h.goss_a + h.goss_b > 1.0 + 1e-12 {
                return Err(Error::Config("goss_a + goss_b must be <= 1".into()));
            }
            if !(0.0..=1.0).contains(&h.efb_conflict) {
                return Err(Error::Config("efb_conflict must be in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// A boosted additive ensemble: `ŷ = base_score + η·Σ tree_k(x)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GBTModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode>,
    pub params: GBTParams,
    pub n_features: usize,
}

impl GBTModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut acc = 0.0;
        for tree in &self.trees {
            acc += tree.predict(x)?;
        }
        Ok(self.base_score + self.learning_rate * acc)
    }

    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        x.outer_iter()
            .map(|row| self.predict(row.as_slice().expect("contiguous row")))
            .collect()
    }
}

fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

/// Closed-form minimizer of the per-leaf second-order objective.
pub fn leaf_weight(g: f64, h: f64, alpha: f64, lambda: f64) -> Result<f64> {
    let denom = h + lambda;
    if denom <= 0.0 {
        return Err(Error::DegenerateLeaf);
    }
    Ok(-soft_threshold(g, alpha) / denom)
}

fn score(g: f64, h: f64, alpha: f64, lambda: f64) -> f64 {
    let s = soft_threshold(g, alpha);
    s * s / (h + lambda)
}

/// Structure-score gain of splitting a node `(G_L+G_R, H_L+H_R)` into its
/// two children, minus the per-leaf penalty `γ`.
pub fn split_gain(
    gl: f64,
    hl: f64,
    gr: f64,
    hr: f64,
    alpha: f64,
    lambda: f64,
    gamma: f64,
) -> Result<f64> {
    if hl + lambda <= 0.0 || hr + lambda <= 0.0 || hl + hr + lambda <= 0.0 {
        return Err(Error::DegenerateLeaf);
    }
    Ok(0.5
        * (score(gl, hl, alpha, lambda) + score(gr, hr, alpha, lambda)
            - score(gl + gr, hl + hr, alpha, lambda))
        - gamma)
}

/// Gradient-based one-side sampling.
///
/// Keeps the top `ceil(a·n)` rows by |gradient| with weight 1 and samples
/// `ceil(b·n)` of the remainder uniformly without replacement with weight
/// `(1−a)/b`. Returned indices are ascending.
pub fn goss_select(
    gradients: &[f64],
    a: f64,
    b: f64,
    rng: &mut SplitMix64,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = gradients.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if !(a > 0.0 && b >= 0.0 && a + b <= 1.0 + 1e-12) {
        return Err(Error::Config(format!("goss fractions a={a}, b={b} invalid")));
    }
    if a * (n as f64) < 1.0 {
        return Err(Error::Config(format!(
            "goss top fraction a={a} selects less than one of {n} rows"
        )));
    }
    let n_top = (a * n as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        gradients[j]
            .abs()
            .partial_cmp(&gradients[i].abs())
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut top: Vec<usize> = order[..n_top].to_vec();
    top.sort_unstable();
    let mut rest: Vec<usize> = order[n_top..].to_vec();
    rest.sort_unstable();

    let n_sample = ((b * n as f64).ceil() as usize).min(rest.len());
    let mut picked: Vec<usize> = if n_sample > 0 {
        let pos = rng.sample_without_replacement(rest.len(), n_sample);
        pos.iter().map(|&p| rest[p]).collect()
    } else {
        Vec::new()
    };
    picked.sort_unstable();

    let amplify = if n_sample > 0 { (1.0 - a) / b } else { 1.0 };
    let mut indices = Vec::with_capacity(n_top + n_sample);
    let mut weights = Vec::with_capacity(n_top + n_sample);
    let mut ti = 0;
    let mut pi = 0;
    while ti < top.len() || pi < picked.len() {
        if pi >= picked.len() || (ti < top.len() && top[ti] < picked[pi]) {
            indices.push(top[ti]);
            weights.push(1.0);
            ti += 1;
        } else {
            indices.push(picked[pi]);
            weights.push(amplify);
            pi += 1;
        }
    }
    Ok((indices, weights))
}

/// Greedy exclusive feature bundling: features whose nonzero-row overlap
/// fraction stays within `conflict` share a bundle. Returns groups of
/// feature indices covering every feature.
pub fn efb_bundle(x: ArrayView2<f64>, conflict: f64) -> Vec<Vec<usize>> {
    let (n, d) = x.dim();
    let nonzero: Vec<Vec<bool>> = (0..d)
        .map(|j| x.column(j).iter().map(|v| *v != 0.0).collect())
        .collect();
    let counts: Vec<usize> = nonzero
        .iter()
        .map(|col| col.iter().filter(|&&b| b).count())
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    // Densest first; ties by feature index for determinism.
    order.sort_by(|&i, &j| counts[j].cmp(&counts[i]).then(i.cmp(&j)));

    let budget = (conflict * n as f64).floor() as usize;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut used: Vec<Vec<bool>> = Vec::new(); // rows already nonzero per bundle
    for &f in &order {
        let mut placed = false;
        for (g, rows) in used.iter_mut().enumerate() {
            let overlap = nonzero[f]
                .iter()
                .zip(rows.iter())
                .filter(|(a, b)| **a && **b)
                .count();
            if overlap <= budget {
                for (slot, &nz) in rows.iter_mut().zip(nonzero[f].iter()) {
                    *slot = *slot || nz;
                }
                groups[g].push(f);
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push(vec![f]);
            used.push(nonzero[f].clone());
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups
}

/// One histogram bin: weighted gradient/hessian sums and row count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HistBin {
    pub sum_g: f64,
    pub sum_h: f64,
    pub count: usize,
}

/// Global quantile bin edges and per-row bin codes for one dataset.
#[derive(Debug, Clone)]
pub struct BinnedData {
    /// Ascending, deduplicated upper-inclusive boundaries per feature.
    pub edges: Vec<Vec<f64>>,
    /// Column-major bin codes: `codes[feature][row]`.
    pub codes: Vec<Vec<u32>>,
    /// Bins per feature (= edges + 1).
    pub n_bins: Vec<usize>,
}

fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|e| *e < v)
}

impl BinnedData {
    /// Quantile-spaced edges over the full data, one pass per feature.
    pub fn from_data(x: ArrayView2<f64>, n_bins: usize) -> Self {
        let (n, d) = x.dim();
        let mut edges = Vec::with_capacity(d);
        let mut codes = Vec::with_capacity(d);
        let mut bins = Vec::with_capacity(d);
        for j in 0..d {
            let mut sorted: Vec<f64> = x.column(j).to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let max = sorted[n - 1];
            let mut distinct: Vec<f64> = Vec::new();
            for &v in &sorted {
                if distinct.last() != Some(&v) {
                    distinct.push(v);
                }
            }
            let mut e: Vec<f64> = if distinct.len() <= n_bins {
                distinct[..distinct.len() - 1].to_vec()
            } else {
                let mut out = Vec::with_capacity(n_bins - 1);
                for k in 1..n_bins {
                    let pos = (k * n).div_ceil(n_bins).saturating_sub(1);
                    out.push(sorted[pos.min(n - 1)]);
                }
                out.dedup();
                out.retain(|v| *v < max);
                out
            };
            e.dedup();
            let code: Vec<u32> = x.column(j).iter().map(|v| bin_of(&e, *v) as u32).collect();
            bins.push(e.len() + 1);
            edges.push(e);
            codes.push(code);
        }
        BinnedData {
            edges,
            codes,
            n_bins: bins,
        }
    }
}

/// Per-feature bin aggregates over a set of rows. The spec-facing
/// constructor; the fitter shares the same accumulation (ascending row
/// order) through [`FitHistograms`].
pub fn build_histograms(
    x: ArrayView2<f64>,
    g: &[f64],
    h: &[f64],
    n_bins: usize,
) -> Result<Vec<Vec<HistBin>>> {
    if n_bins < 2 {
        return Err(Error::Config("n_bins must be >= 2".into()));
    }
    if x.nrows() != g.len() || g.len() != h.len() {
        return Err(Error::Shape {
            expected: x.nrows(),
            got: g.len().min(h.len()),
        });
    }
    let binned = BinnedData::from_data(x, n_bins);
    let d = x.ncols();
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let mut hist = vec![HistBin::default(); binned.n_bins[j]];
        for i in 0..x.nrows() {
            let b = binned.codes[j][i] as usize;
            hist[b].sum_g += g[i];
            hist[b].sum_h += h[i];
            hist[b].count += 1;
        }
        out.push(hist);
    }
    Ok(out)
}

/// Sibling histogram by subtraction: `right = parent − left`, bin by bin.
pub fn subtract_histograms(parent: &[HistBin], child: &[HistBin]) -> Vec<HistBin> {
    parent
        .iter()
        .zip(child)
        .map(|(p, c)| HistBin {
            sum_g: p.sum_g - c.sum_g,
            sum_h: p.sum_h - c.sum_h,
            count: p.count - c.count,
        })
        .collect()
}

/// Feature bundles with disjoint bin-offset ranges and precomputed
/// per-row bundle codes.
#[derive(Debug, Clone)]
pub struct BundleSet {
    pub groups: Vec<Vec<usize>>,
    /// Parallel to `groups`: offset of each member's bin range.
    offsets: Vec<Vec<usize>>,
    /// Bundle code per row, per bundle: 0 = every member zero.
    codes: Vec<Vec<u32>>,
    /// Total bins per bundle.
    n_bundle_bins: Vec<usize>,
    /// Which bundle and member slot each feature occupies.
    feature_home: Vec<(usize, usize)>,
    /// Bin index of the raw value 0 per feature.
    zero_bin: Vec<usize>,
}

impl BundleSet {
    pub fn build(x: ArrayView2<f64>, binned: &BinnedData, conflict: f64) -> Self {
        let (n, d) = x.dim();
        let groups = efb_bundle(x, conflict);
        let mut offsets = Vec::with_capacity(groups.len());
        let mut n_bundle_bins = Vec::with_capacity(groups.len());
        let mut feature_home = vec![(0usize, 0usize); d];
        for (gi, group) in groups.iter().enumerate() {
            let mut offs = Vec::with_capacity(group.len());
            let mut next = 1usize; // bundle bin 0 = all members zero
            for (slot, &f) in group.iter().enumerate() {
                offs.push(next);
                next += binned.n_bins[f];
                feature_home[f] = (gi, slot);
            }
            offsets.push(offs);
            n_bundle_bins.push(next);
        }
        let mut codes = Vec::with_capacity(groups.len());
        for (gi, group) in groups.iter().enumerate() {
            let mut code = vec![0u32; n];
            for i in 0..n {
                for (slot, &f) in group.iter().enumerate() {
                    if x[[i, f]] != 0.0 {
                        // Later members overwrite on (rare) conflicts.
                        code[i] = (offsets[gi][slot] as u32) + binned.codes[f][i];
                    }
                }
            }
            codes.push(code);
        }
        let zero_bin = (0..d).map(|f| bin_of(&binned.edges[f], 0.0)).collect();
        BundleSet {
            groups,
            offsets,
            codes,
            n_bundle_bins,
            feature_home,
            zero_bin,
        }
    }
}

/// Per-node bundle histograms plus the node totals.
#[derive(Debug, Clone)]
pub struct FitHistograms {
    per_bundle: Vec<Vec<HistBin>>,
    total: HistBin,
}

impl FitHistograms {
    fn accumulate(
        bundles: &BundleSet,
        rows: &[usize],
        row_ids: &[usize],
        g: &[f64],
        h: &[f64],
    ) -> Self {
        let mut per_bundle: Vec<Vec<HistBin>> = bundles
            .n_bundle_bins
            .iter()
            .map(|&n| vec![HistBin::default(); n])
            .collect();
        let mut total = HistBin::default();
        for &p in rows {
            let id = row_ids[p];
            total.sum_g += g[p];
            total.sum_h += h[p];
            total.count += 1;
            for (bi, hist) in per_bundle.iter_mut().enumerate() {
                let code = bundles.codes[bi][id] as usize;
                hist[code].sum_g += g[p];
                hist[code].sum_h += h[p];
                hist[code].count += 1;
            }
        }
        FitHistograms { per_bundle, total }
    }

    fn subtract(parent: &Self, child: &Self) -> Self {
        FitHistograms {
            per_bundle: parent
                .per_bundle
                .iter()
                .zip(&child.per_bundle)
                .map(|(p, c)| subtract_histograms(p, c))
                .collect(),
            total: HistBin {
                sum_g: parent.total.sum_g - child.total.sum_g,
                sum_h: parent.total.sum_h - child.total.sum_h,
                count: parent.total.count - child.total.count,
            },
        }
    }

    /// Reassemble one raw feature's histogram from its bundle slice: the
    /// slice holds the feature's nonzero rows and the remainder of the node
    /// folds into the feature's zero-value bin.
    fn feature_histogram(&self, bundles: &BundleSet, binned: &BinnedData, f: usize) -> Vec<HistBin> {
        let (gi, slot) = bundles.feature_home[f];
        let off = bundles.offsets[gi][slot];
        let nb = binned.n_bins[f];
        let mut hist: Vec<HistBin> = self.per_bundle[gi][off..off + nb].to_vec();
        let mut rest = self.total;
        for b in &hist {
            rest.sum_g -= b.sum_g;
            rest.sum_h -= b.sum_h;
            rest.count -= b.count;
        }
        let zb = bundles.zero_bin[f];
        hist[zb].sum_g += rest.sum_g;
        hist[zb].sum_h += rest.sum_h;
        hist[zb].count += rest.count;
        hist
    }
}

#[derive(Debug, Clone, Copy)]
struct BoostCandidate {
    feature: usize,
    gain: f64,
    /// Bin boundary for histogram mode; usize::MAX in exact mode.
    boundary: usize,
    /// Final threshold; filled immediately in exact mode, after boundary
    /// resolution in histogram mode.
    threshold: f64,
}

fn boost_better(a: &BoostCandidate, b: &BoostCandidate) -> bool {
    if a.gain != b.gain {
        return a.gain > b.gain;
    }
    if a.feature != b.feature {
        return a.feature < b.feature;
    }
    if a.boundary != b.boundary {
        return a.boundary < b.boundary;
    }
    a.threshold < b.threshold
}

struct BoostFitter<'a> {
    x: ArrayView2<'a, f64>,
    params: &'a GBTParams,
    /// Colsampled feature set, ascending.
    features: Vec<usize>,
    /// Original row ids of the selected (subsampled / GOSS) rows.
    row_ids: Vec<usize>,
    /// Weighted gradient/hessian per selected position.
    g: Vec<f64>,
    h: Vec<f64>,
    binned: Option<&'a BinnedData>,
    bundles: Option<&'a BundleSet>,
}

impl<'a> BoostFitter<'a> {
    fn node_totals(&self, rows: &[usize]) -> (f64, f64) {
        let mut gs = 0.0;
        let mut hs = 0.0;
        for &p in rows {
            gs += self.g[p];
            hs += self.h[p];
        }
        (gs, hs)
    }

    fn leaf(&self, rows: &[usize]) -> Result<TreeNode> {
        let (gs, hs) = self.node_totals(rows);
        Ok(TreeNode::Leaf {
            value: leaf_weight(gs, hs, self.params.reg_alpha, self.params.reg_lambda)?,
            n: rows.len(),
        })
    }

    fn best_exact(&self, rows: &[usize], g_tot: f64, h_tot: f64) -> Result<Option<BoostCandidate>> {
        let p = self.params;
        let mut best: Option<BoostCandidate> = None;
        for &f in &self.features {
            let mut order: Vec<usize> = rows.to_vec();
            order.sort_by(|&i, &j| {
                self.x[[self.row_ids[i], f]]
                    .partial_cmp(&self.x[[self.row_ids[j], f]])
                    .unwrap()
                    .then(i.cmp(&j))
            });
            let mut gl = 0.0;
            let mut hl = 0.0;
            for w in 0..order.len() - 1 {
                gl += self.g[order[w]];
                hl += self.h[order[w]];
                let v = self.x[[self.row_ids[order[w]], f]];
                let v_next = self.x[[self.row_ids[order[w + 1]], f]];
                if v == v_next {
                    continue;
                }
                let gr = g_tot - gl;
                let hr = h_tot - hl;
                if hl < p.min_child_weight || hr < p.min_child_weight {
                    continue;
                }
                let gain = split_gain(gl, hl, gr, hr, p.reg_alpha, p.reg_lambda, p.gamma)?;
                if gain <= 0.0 {
                    continue;
                }
                let cand = BoostCandidate {
                    feature: f,
                    gain,
                    boundary: usize::MAX,
                    threshold: 0.5 * (v + v_next),
                };
                if best.as_ref().is_none_or(|b| boost_better(&cand, b)) {
                    best = Some(cand);
                }
            }
        }
        Ok(best)
    }

    fn best_histogram(
        &self,
        rows: &[usize],
        hist: &FitHistograms,
        g_tot: f64,
        h_tot: f64,
    ) -> Result<Option<BoostCandidate>> {
        let p = self.params;
        let binned = self.binned.expect("histogram mode");
        let bundles = self.bundles.expect("histogram mode");
        let mut best: Option<BoostCandidate> = None;
        for &f in &self.features {
            let fh = hist.feature_histogram(bundles, binned, f);
            let mut gl = 0.0;
            let mut hl = 0.0;
            let mut nl = 0usize;
            for (b, bin) in fh.iter().enumerate().take(fh.len() - 1) {
                gl += bin.sum_g;
                hl += bin.sum_h;
                nl += bin.count;
                if nl == 0 || nl == rows.len() {
                    continue;
                }
                let gr = g_tot - gl;
                let hr = h_tot - hl;
                if hl < p.min_child_weight || hr < p.min_child_weight {
                    continue;
                }
                let gain = split_gain(gl, hl, gr, hr, p.reg_alpha, p.reg_lambda, p.gamma)?;
                if gain <= 0.0 {
                    continue;
                }
                let cand = BoostCandidate {
                    feature: f,
                    gain,
                    boundary: b,
                    threshold: 0.0,
                };
                if best.as_ref().is_none_or(|b2| boost_better(&cand, b2)) {
                    best = Some(cand);
                }
            }
        }
        // Resolve the winning boundary to a midpoint between actual values.
        if let Some(cand) = best.as_mut() {
            let codes = &self.binned.unwrap().codes[cand.feature];
            let mut max_left = f64::NEG_INFINITY;
            let mut min_right = f64::INFINITY;
            for &pos in rows {
                let id = self.row_ids[pos];
                let v = self.x[[id, cand.feature]];
                if (codes[id] as usize) <= cand.boundary {
                    max_left = max_left.max(v);
                } else {
                    min_right = min_right.min(v);
                }
            }
            cand.threshold = 0.5 * (max_left + min_right);
        }
        Ok(best)
    }

    fn grow(
        &self,
        rows: Vec<usize>,
        depth: usize,
        hist: Option<FitHistograms>,
    ) -> Result<TreeNode> {
        if depth >= self.params.max_depth {
            return self.leaf(&rows);
        }
        let (g_tot, h_tot) = self.node_totals(&rows);
        let cand = match self.params.mode {
            BoostMode::Exact => self.best_exact(&rows, g_tot, h_tot)?,
            BoostMode::Histogram => {
                let hist_ref = hist.as_ref().expect("histogram carried down");
                self.best_histogram(&rows, hist_ref, g_tot, h_tot)?
            }
        };
        let Some(split) = cand else {
            return self.leaf(&rows);
        };

        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        match self.params.mode {
            BoostMode::Exact => {
                for &pos in &rows {
                    if self.x[[self.row_ids[pos], split.feature]] <= split.threshold {
                        left_rows.push(pos);
                    } else {
                        right_rows.push(pos);
                    }
                }
            }
            BoostMode::Histogram => {
                let codes = &self.binned.unwrap().codes[split.feature];
                for &pos in &rows {
                    if (codes[self.row_ids[pos]] as usize) <= split.boundary {
                        left_rows.push(pos);
                    } else {
                        right_rows.push(pos);
                    }
                }
            }
        }
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let (left_hist, right_hist) = match self.params.mode {
            BoostMode::Exact => (None, None),
            BoostMode::Histogram => {
                let parent = hist.expect("histogram carried down");
                let bundles = self.bundles.unwrap();
                let left =
                    FitHistograms::accumulate(bundles, &left_rows, &self.row_ids, &self.g, &self.h);
                let right = FitHistograms::subtract(&parent, &left);
                (Some(left), Some(right))
            }
        };

        Ok(TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(left_rows, depth + 1, left_hist)?),
            right: Box::new(self.grow(right_rows, depth + 1, right_hist)?),
        })
    }
}

/// Fit a boosted ensemble. With `init_margin` present the base score is zero
/// and boosting models the residual against the supplied margin, so the
/// fitted model's own prediction is exactly the stacked correction.
pub fn fit_gbt(
    x: ArrayView2<f64>,
    y: &[f64],
    init_margin: Option<&[f64]>,
    params: &GBTParams,
) -> Result<GBTModel> {
    params.validate()?;
    let (n, d) = x.dim();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if y.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: y.len(),
        });
    }
    if let Some(m) = init_margin {
        if m.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: m.len(),
            });
        }
    }

    let base_score = match init_margin {
        Some(_) => 0.0,
        None => y.iter().sum::<f64>() / n as f64,
    };
    let mut margin: Vec<f64> = match init_margin {
        Some(m) => m.to_vec(),
        None => vec![base_score; n],
    };

    let (binned, bundles) = if params.mode == BoostMode::Histogram {
        let binned = BinnedData::from_data(x, params.histogram.n_bins);
        let bundles = BundleSet::build(x, &binned, params.histogram.efb_conflict);
        (Some(binned), Some(bundles))
    } else {
        (None, None)
    };

    let mut rng = SplitMix64::new(params.seed);
    let mut trees = Vec::with_capacity(params.n_estimators);
    for _ in 0..params.n_estimators {
        let gradients: Vec<f64> = margin.iter().zip(y).map(|(m, yv)| m - yv).collect();

        // Row selection first, then the per-tree column draw.
        let (row_ids, weights): (Vec<usize>, Vec<f64>) = match params.mode {
            BoostMode::Histogram => goss_select(
                &gradients,
                params.histogram.goss_a,
                params.histogram.goss_b,
                &mut rng,
            )?,
            BoostMode::Exact => {
                if params.subsample < 1.0 {
                    let k = ((params.subsample * n as f64).round() as usize).clamp(1, n);
                    let ids = rng.sample_without_replacement(n, k);
                    let w = vec![1.0; ids.len()];
                    (ids, w)
                } else {
                    ((0..n).collect(), vec![1.0; n])
                }
            }
        };
        let features: Vec<usize> = if params.colsample_bytree < 1.0 {
            let k = ((params.colsample_bytree * d as f64).round() as usize).clamp(1, d);
            rng.sample_without_replacement(d, k)
        } else {
            (0..d).collect()
        };

        let g: Vec<f64> = row_ids
            .iter()
            .zip(&weights)
            .map(|(&i, &w)| w * gradients[i])
            .collect();
        let h: Vec<f64> = weights.clone();

        let fitter = BoostFitter {
            x,
            params,
            features,
            row_ids,
            g,
            h,
            binned: binned.as_ref(),
            bundles: bundles.as_ref(),
        };
        let positions: Vec<usize> = (0..fitter.row_ids.len()).collect();
        let root_hist = match params.mode {
            BoostMode::Exact => None,
            BoostMode::Histogram => Some(FitHistograms::accumulate(
                fitter.bundles.unwrap(),
                &positions,
                &fitter.row_ids,
                &fitter.g,
                &fitter.h,
            )),
        };
        let tree = fitter.grow(positions, 0, root_hist)?;

        for (i, m) in margin.iter_mut().enumerate() {
            *m += params.learning_rate * tree.predict(x.row(i).as_slice().unwrap())?;
        }
        trees.push(tree);
    }

    Ok(GBTModel {
        base_score,
        learning_rate: params.learning_rate,
        trees,
        params: params.clone(),
        n_features: d,
    })
}
