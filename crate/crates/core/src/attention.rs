//! A small transformer encoder over tabular features with an MSE regression
//! head.
//!
//! Each standardized feature value becomes one token (`value · E_j + B_j`
//! with a learned vector and bias per feature); tokens pass through pre-norm
//! residual blocks of multi-head scaled dot-product attention and a GELU
//! feed-forward of width `d_model`; the mean-pooled token representation
//! feeds a linear head. There is no positional encoding: a mix-design row is
//! an unordered feature set.
//!
//! Training is double-precision Adam (moments 0.9/0.999, epsilon 1e-8) on
//! mini-batches with a held-out validation fraction for early stopping; the
//! weights at the best validation epoch are restored. Targets are
//! standardized internally (`y_mean`, `y_std` are stored on the model), so
//! the optimizer sees O(1) losses regardless of the target scale.
//!
//! All gradients are exact analytic backpropagation; `loss_gradients` exposes
//! them so finite-difference oracles can check every parameter tensor.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    /// Fraction of the fit data held out for early stopping; 0 disables.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
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
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 || self.n_heads == 0 || self.d_model == 0 {
            return Err(Error::Config("layers, heads, d_model must be >= 1".into()));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must be in [0, 1)".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config("val_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.n_heads
    }
}

const LN_EPS: f64 = 1e-5;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Row-wise `softmax(Q Kᵀ / sqrt(d_k)) V`.
pub fn scaled_dot_attention(
    q: ArrayView2<f64>,
    k: ArrayView2<f64>,
    v: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    if q.ncols() != k.ncols() {
        return Err(Error::Shape {
            expected: q.ncols(),
            got: k.ncols(),
        });
    }
    if k.nrows() != v.nrows() {
        return Err(Error::Shape {
            expected: k.nrows(),
            got: v.nrows(),
        });
    }
    let scale = 1.0 / (q.ncols() as f64).sqrt();
    let mut scores = q.dot(&k.t());
    scores.mapv_inplace(|s| s * scale);
    let probs = softmax_rows(&scores);
    Ok(probs.dot(&v))
}

fn softmax_rows(scores: &Array2<f64>) -> Array2<f64> {
    let mut out = scores.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let th = u.tanh();
    0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

// Parameter tensor layout: embed, embed_bias, then per layer
// [ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2],
// then head_w, head_b. Vectors are 1×m; head_b is 1×1.
const TENSORS_PER_LAYER: usize = 16;

fn layer_base(layer: usize) -> usize {
    2 + layer * TENSORS_PER_LAYER
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformerModel {
    pub config: AttentionConfig,
    pub n_features: usize,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
    /// All learnable tensors in the layout documented above.
    pub params: Vec<Array2<f64>>,
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
}

struct LayerCache {
    t_in: Array2<f64>,
    n1: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    probs: Vec<Array2<f64>>,
    concat: Array2<f64>,
    attn_mask: Option<Array2<f64>>,
    t_mid: Array2<f64>,
    n2: Array2<f64>,
    ff_pre: Array2<f64>,
    ff_act: Array2<f64>,
    ff_mask: Option<Array2<f64>>,
}

struct ForwardCache {
    x_std: Vec<f64>,
    layers: Vec<LayerCache>,
    pooled: Array1<f64>,
    /// Standardized-space output.
    z: f64,
}

fn layer_norm(x: &Array2<f64>, gamma: &Array2<f64>, beta: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    let m = x.ncols() as f64;
    for mut row in out.rows_mut() {
        let mean = row.sum() / m;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - mean) * inv * gamma[[0, j]] + beta[[0, j]];
        }
    }
    out
}

/// Backward through layer norm; returns dx and accumulates dgamma/dbeta.
fn layer_norm_backward(
    x: &Array2<f64>,
    gamma: &Array2<f64>,
    dout: &Array2<f64>,
    dgamma: &mut Array2<f64>,
    dbeta: &mut Array2<f64>,
) -> Array2<f64> {
    let m = x.ncols() as f64;
    let mut dx = Array2::zeros(x.raw_dim());
    for r in 0..x.nrows() {
        let row = x.row(r);
        let mean = row.sum() / m;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        let xhat: Vec<f64> = row.iter().map(|v| (v - mean) * inv).collect();
        let dout_row = dout.row(r);
        let mut dxhat = vec![0.0; x.ncols()];
        for j in 0..x.ncols() {
            dgamma[[0, j]] += dout_row[j] * xhat[j];
            dbeta[[0, j]] += dout_row[j];
            dxhat[j] = dout_row[j] * gamma[[0, j]];
        }
        let mean_dxhat = dxhat.iter().sum::<f64>() / m;
        let mean_dxhat_xhat = dxhat
            .iter()
            .zip(&xhat)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / m;
        for j in 0..x.ncols() {
            dx[[r, j]] = inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
        }
    }
    dx
}

fn add_row_bias(x: &mut Array2<f64>, b: &Array2<f64>) {
    for mut row in x.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v += b[[0, j]];
        }
    }
}

impl TransformerModel {
    fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, v)| (v - self.feature_means[j]) / self.feature_stds[j])
            .collect())
    }

    fn forward_inner(
        &self,
        x_std: &[f64],
        dropout_rng: Option<&mut SplitMix64>,
    ) -> ForwardCache {
        let cfg = &self.config;
        let t = self.n_features;
        let m = cfg.d_model;
        let dk = cfg.d_k();
        let embed = &self.params[0];
        let embed_bias = &self.params[1];

        let mut tokens = Array2::zeros((t, m));
        for j in 0..t {
            for c in 0..m {
                tokens[[j, c]] = x_std[j] * embed[[j, c]] + embed_bias[[j, c]];
            }
        }

        let mut dropout_rng = dropout_rng;
        let mut make_mask = |shape: (usize, usize)| -> Option<Array2<f64>> {
            match dropout_rng.as_deref_mut() {
                Some(rng) if cfg.dropout > 0.0 => {
                    let keep = 1.0 - cfg.dropout;
                    let mut mask = Array2::zeros(shape);
                    for v in mask.iter_mut() {
                        *v = if rng.next_f64() < keep { 1.0 / keep } else { 0.0 };
                    }
                    Some(mask)
                }
                _ => None,
            }
        };

        let mut layers = Vec::with_capacity(cfg.n_layers);
        for l in 0..cfg.n_layers {
            let base = layer_base(l);
            let n1 = layer_norm(&tokens, &self.params[base], &self.params[base + 1]);
            let mut q = n1.dot(&self.params[base + 2]);
            add_row_bias(&mut q, &self.params[base + 3]);
            let mut k = n1.dot(&self.params[base + 4]);
            add_row_bias(&mut k, &self.params[base + 5]);
            let mut v = n1.dot(&self.params[base + 6]);
            add_row_bias(&mut v, &self.params[base + 7]);

            let scale = 1.0 / (dk as f64).sqrt();
            let mut concat = Array2::zeros((t, m));
            let mut probs = Vec::with_capacity(cfg.n_heads);
            for h in 0..cfg.n_heads {
                let cols = h * dk..(h + 1) * dk;
                let qh = q.slice(ndarray::s![.., cols.clone()]);
                let kh = k.slice(ndarray::s![.., cols.clone()]);
                let vh = v.slice(ndarray::s![.., cols.clone()]);
                let mut scores = qh.dot(&kh.t());
                scores.mapv_inplace(|s| s * scale);
                let p = softmax_rows(&scores);
                let ah = p.dot(&vh);
                concat.slice_mut(ndarray::s![.., cols]).assign(&ah);
                probs.push(p);
            }
            let mut attn_out = concat.dot(&self.params[base + 8]);
            add_row_bias(&mut attn_out, &self.params[base + 9]);
            let attn_mask = make_mask((t, m));
            if let Some(mask) = &attn_mask {
                attn_out *= mask;
            }
            let t_mid = &tokens + &attn_out;

            let n2 = layer_norm(&t_mid, &self.params[base + 10], &self.params[base + 11]);
            let mut ff_pre = n2.dot(&self.params[base + 12]);
            add_row_bias(&mut ff_pre, &self.params[base + 13]);
            let ff_act = ff_pre.mapv(gelu);
            let mut ff_out = ff_act.dot(&self.params[base + 14]);
            add_row_bias(&mut ff_out, &self.params[base + 15]);
            let ff_mask = make_mask((t, m));
            if let Some(mask) = &ff_mask {
                ff_out *= mask;
            }
            let t_next = &t_mid + &ff_out;

            layers.push(LayerCache {
                t_in: tokens,
                n1,
                q,
                k,
                v,
                probs,
                concat,
                attn_mask,
                t_mid,
                n2,
                ff_pre,
                ff_act,
                ff_mask,
            });
            tokens = t_next;
        }

        let pooled = tokens.mean_axis(Axis(0)).expect("tokens nonempty");
        let head_w = &self.params[self.params.len() - 2];
        let head_b = self.params[self.params.len() - 1][[0, 0]];
        let mut z = head_b;
        for c in 0..m {
            z += head_w[[0, c]] * pooled[c];
        }
        ForwardCache {
            x_std: x_std.to_vec(),
            layers,
            pooled,
            z,
        }
    }

    /// Deterministic evaluation-mode forward pass: the mean-pooled
    /// representation and the prediction in target units.
    pub fn forward(&self, x: &[f64]) -> Result<(Array1<f64>, f64)> {
        let x_std = self.standardize(x)?;
        let cache = self.forward_inner(&x_std, None);
        let pred = self.y_mean + self.y_std * cache.z;
        Ok((cache.pooled, pred))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x)?.1)
    }

    /// Evaluation-mode representations, one row per sample.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((x.nrows(), self.config.d_model));
        for (i, row) in x.outer_iter().enumerate() {
            let (repr, _) = self.forward(row.as_slice().expect("contiguous row"))?;
            out.row_mut(i).assign(&repr);
        }
        Ok(out)
    }

    /// Mean squared error in target units over the given rows, eval mode.
    pub fn validation_loss(&self, x: ArrayView2<f64>, y: &[f64]) -> Result<f64> {
        if x.nrows() != y.len() || x.nrows() == 0 {
            return Err(Error::Shape {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        let mut acc = 0.0;
        for (i, row) in x.outer_iter().enumerate() {
            let pred = self.predict(row.as_slice().expect("contiguous row"))?;
            acc += (pred - y[i]) * (pred - y[i]);
        }
        Ok(acc / y.len() as f64)
    }

    /// Mean squared error in standardized space, eval mode (no dropout).
    /// This is the quantity `loss_gradients` differentiates.
    pub fn standardized_loss(&self, x: ArrayView2<f64>, y: &[f64]) -> Result<f64> {
        if x.nrows() != y.len() || x.nrows() == 0 {
            return Err(Error::Shape {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        let mut acc = 0.0;
        for (i, row) in x.outer_iter().enumerate() {
            let x_std = self.standardize(row.as_slice().expect("contiguous row"))?;
            let cache = self.forward_inner(&x_std, None);
            let target = (y[i] - self.y_mean) / self.y_std;
            acc += (cache.z - target) * (cache.z - target);
        }
        Ok(acc / y.len() as f64)
    }

    /// Analytic gradients of [`standardized_loss`] with respect to every
    /// parameter tensor, accumulated in ascending sample order.
    pub fn loss_gradients(&self, x: ArrayView2<f64>, y: &[f64]) -> Result<Vec<Array2<f64>>> {
        if x.nrows() != y.len() || x.nrows() == 0 {
            return Err(Error::Shape {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        let mut grads: Vec<Array2<f64>> =
            self.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        let inv_n = 1.0 / y.len() as f64;
        for (i, row) in x.outer_iter().enumerate() {
            let x_std = self.standardize(row.as_slice().expect("contiguous row"))?;
            let cache = self.forward_inner(&x_std, None);
            let target = (y[i] - self.y_mean) / self.y_std;
            let dz = 2.0 * (cache.z - target) * inv_n;
            self.backward(&cache, dz, &mut grads);
        }
        Ok(grads)
    }

    /// Backpropagate `dz` (gradient at the standardized output) through one
    /// cached forward pass, adding into `grads`.
    fn backward(&self, cache: &ForwardCache, dz: f64, grads: &mut [Array2<f64>]) {
        let cfg = &self.config;
        let t = self.n_features;
        let m = cfg.d_model;
        let dk = cfg.d_k();
        let n_params = self.params.len();
        let head_w = &self.params[n_params - 2];

        // Head.
        for c in 0..m {
            grads[n_params - 2][[0, c]] += dz * cache.pooled[c];
        }
        grads[n_params - 1][[0, 0]] += dz;

        // Mean pooling spreads the head gradient uniformly over tokens.
        let mut d_tokens = Array2::zeros((t, m));
        let inv_t = 1.0 / t as f64;
        for j in 0..t {
            for c in 0..m {
                d_tokens[[j, c]] = dz * head_w[[0, c]] * inv_t;
            }
        }

        for l in (0..cfg.n_layers).rev() {
            let base = layer_base(l);
            let lc = &cache.layers[l];

            // Feed-forward residual branch.
            let mut d_ff_out = d_tokens.clone();
            if let Some(mask) = &lc.ff_mask {
                d_ff_out *= mask;
            }
            // ff_out = gelu(n2·w1 + b1)·w2 + b2
            let d_ff_act = d_ff_out.dot(&self.params[base + 14].t());
            grads[base + 14] = &grads[base + 14] + &lc.ff_act.t().dot(&d_ff_out);
            for c in 0..m {
                grads[base + 15][[0, c]] += d_ff_out.column(c).sum();
            }
            let mut d_ff_pre = d_ff_act;
            ndarray::Zip::from(&mut d_ff_pre)
                .and(&lc.ff_pre)
                .for_each(|g, &pre| *g *= gelu_grad(pre));
            let d_n2 = d_ff_pre.dot(&self.params[base + 12].t());
            grads[base + 12] = &grads[base + 12] + &lc.n2.t().dot(&d_ff_pre);
            for c in 0..m {
                grads[base + 13][[0, c]] += d_ff_pre.column(c).sum();
            }
            let (mut dgamma2, mut dbeta2) = (Array2::zeros((1, m)), Array2::zeros((1, m)));
            let d_t_mid_ln = layer_norm_backward(
                &lc.t_mid,
                &self.params[base + 10],
                &d_n2,
                &mut dgamma2,
                &mut dbeta2,
            );
            grads[base + 10] = &grads[base + 10] + &dgamma2;
            grads[base + 11] = &grads[base + 11] + &dbeta2;
            let d_t_mid = &d_tokens + &d_t_mid_ln;

            // Attention residual branch.
            let mut d_attn_out = d_t_mid.clone();
            if let Some(mask) = &lc.attn_mask {
                d_attn_out *= mask;
            }
            // attn_out = concat·wo + bo
            let d_concat = d_attn_out.dot(&self.params[base + 8].t());
            grads[base + 8] = &grads[base + 8] + &lc.concat.t().dot(&d_attn_out);
            for c in 0..m {
                grads[base + 9][[0, c]] += d_attn_out.column(c).sum();
            }

            let scale = 1.0 / (dk as f64).sqrt();
            let mut dq = Array2::zeros((t, m));
            let mut dkk = Array2::zeros((t, m));
            let mut dv = Array2::zeros((t, m));
            for h in 0..cfg.n_heads {
                let cols = h * dk..(h + 1) * dk;
                let d_ah = d_concat.slice(ndarray::s![.., cols.clone()]);
                let p = &lc.probs[h];
                let vh = lc.v.slice(ndarray::s![.., cols.clone()]);
                let qh = lc.q.slice(ndarray::s![.., cols.clone()]);
                let kh = lc.k.slice(ndarray::s![.., cols.clone()]);

                let d_p = d_ah.dot(&vh.t());
                let d_vh = p.t().dot(&d_ah);
                // Softmax backward per row.
                let mut d_scores = Array2::zeros((t, t));
                for r in 0..t {
                    let p_row = p.row(r);
                    let dp_row = d_p.row(r);
                    let dot: f64 = p_row.iter().zip(dp_row.iter()).map(|(a, b)| a * b).sum();
                    for c2 in 0..t {
                        d_scores[[r, c2]] = p_row[c2] * (dp_row[c2] - dot);
                    }
                }
                d_scores.mapv_inplace(|s| s * scale);
                let d_qh = d_scores.dot(&kh);
                let d_kh = d_scores.t().dot(&qh);
                dq.slice_mut(ndarray::s![.., cols.clone()]).assign(&d_qh);
                dkk.slice_mut(ndarray::s![.., cols.clone()]).assign(&d_kh);
                dv.slice_mut(ndarray::s![.., cols]).assign(&d_vh);
            }

            let mut d_n1 = dq.dot(&self.params[base + 2].t());
            grads[base + 2] = &grads[base + 2] + &lc.n1.t().dot(&dq);
            for c in 0..m {
                grads[base + 3][[0, c]] += dq.column(c).sum();
            }
            d_n1 = d_n1 + dkk.dot(&self.params[base + 4].t());
            grads[base + 4] = &grads[base + 4] + &lc.n1.t().dot(&dkk);
            for c in 0..m {
                grads[base + 5][[0, c]] += dkk.column(c).sum();
            }
            d_n1 = d_n1 + dv.dot(&self.params[base + 6].t());
            grads[base + 6] = &grads[base + 6] + &lc.n1.t().dot(&dv);
            for c in 0..m {
                grads[base + 7][[0, c]] += dv.column(c).sum();
            }

            let (mut dgamma1, mut dbeta1) = (Array2::zeros((1, m)), Array2::zeros((1, m)));
            let d_t_in_ln = layer_norm_backward(
                &lc.t_in,
                &self.params[base],
                &d_n1,
                &mut dgamma1,
                &mut dbeta1,
            );
            grads[base] = &grads[base] + &dgamma1;
            grads[base + 1] = &grads[base + 1] + &dbeta1;
            d_tokens = &d_t_mid + &d_t_in_ln;
        }

        // Tokenizer.
        for j in 0..t {
            for c in 0..m {
                grads[0][[j, c]] += cache.x_std[j] * d_tokens[[j, c]];
                grads[1][[j, c]] += d_tokens[[j, c]];
            }
        }
    }

    /// Descriptive names for each parameter tensor, matching `params` order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["embed".to_string(), "embed_bias".to_string()];
        for l in 0..self.config.n_layers {
            for part in [
                "ln1_gamma", "ln1_beta", "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                "ln2_gamma", "ln2_beta", "ff_w1", "ff_b1", "ff_w2", "ff_b2",
            ] {
                names.push(format!("layer{l}.{part}"));
            }
        }
        names.push("head_w".to_string());
        names.push("head_b".to_string());
        names
    }
}

/// Build an initialized model without training. Exposed for oracle tests.
pub fn init_model(
    cfg: &AttentionConfig,
    n_features: usize,
    feature_means: Vec<f64>,
    feature_stds: Vec<f64>,
    y_mean: f64,
    y_std: f64,
) -> Result<TransformerModel> {
    cfg.validate()?;
    if n_features == 0 {
        return Err(Error::EmptyData);
    }
    let m = cfg.d_model;
    let t = n_features;
    let mut rng = SplitMix64::new(derive_seed(cfg.seed, 0));
    let mut params: Vec<Array2<f64>> = Vec::new();

    let mut uniform_tensor = |rows: usize, cols: usize, bound: f64| -> Array2<f64> {
        let mut a = Array2::zeros((rows, cols));
        for v in a.iter_mut() {
            *v = rng.uniform(-bound, bound);
        }
        a
    };

    let embed_bound = 1.0 / (m as f64).sqrt();
    params.push(uniform_tensor(t, m, embed_bound));
    params.push(uniform_tensor(t, m, embed_bound));
    let xavier = (6.0 / (m as f64 + m as f64)).sqrt();
    for _ in 0..cfg.n_layers {
        params.push(Array2::ones((1, m))); // ln1_gamma
        params.push(Array2::zeros((1, m))); // ln1_beta
        for _ in 0..4 {
            params.push(uniform_tensor(m, m, xavier)); // wq/wk/wv (then wo below)
            params.push(Array2::zeros((1, m)));
        }
        params.push(Array2::ones((1, m))); // ln2_gamma
        params.push(Array2::zeros((1, m))); // ln2_beta
        params.push(uniform_tensor(m, m, xavier)); // ff_w1
        params.push(Array2::zeros((1, m)));
        params.push(uniform_tensor(m, m, xavier)); // ff_w2
        params.push(Array2::zeros((1, m)));
    }
    let head_bound = (6.0 / (m as f64 + 1.0)).sqrt();
    params.push(uniform_tensor(1, m, head_bound));
    params.push(Array2::zeros((1, 1)));

    Ok(TransformerModel {
        config: cfg.clone(),
        n_features,
        feature_means,
        feature_stds,
        y_mean,
        y_std,
        params,
        best_epoch: 0,
        best_val_loss: None,
    })
}

/// The train/validation row partition used by [`fit_transformer`]: a seeded
/// shuffle with the last `round(val_fraction·n)` rows held out.
pub fn validation_split(cfg: &AttentionConfig, n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(derive_seed(cfg.seed, 1));
    rng.shuffle(&mut order);
    let mut n_val = if cfg.val_fraction > 0.0 {
        ((cfg.val_fraction * n as f64).round() as usize).max(1)
    } else {
        0
    };
    if n_val >= n {
        n_val = n - 1;
    }
    let val = order.split_off(n - n_val);
    (order, val)
}

/// Fit the encoder + head with Adam, mini-batches, and early stopping on the
/// held-out validation loss; the best-validation weights are restored.
pub fn fit_transformer(
    x: ArrayView2<f64>,
    y: &[f64],
    cfg: &AttentionConfig,
) -> Result<TransformerModel> {
    cfg.validate()?;
    let (n, d) = x.dim();
    if n == 0 || d == 0 {
        return Err(Error::EmptyData);
    }
    if y.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: y.len(),
        });
    }

    let nf = n as f64;
    let feature_means: Vec<f64> = (0..d).map(|j| x.column(j).sum() / nf).collect();
    let feature_stds: Vec<f64> = (0..d)
        .map(|j| {
            let mu = feature_means[j];
            let var = x.column(j).iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / nf;
            let s = var.sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    let y_var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / nf;
    let y_std = if y_var > 0.0 { y_var.sqrt() } else { 1.0 };

    let mut model = init_model(
        cfg,
        d,
        feature_means,
        feature_stds,
        y_mean,
        y_std,
    )?;

    let (train_idx, val_idx) = validation_split(cfg, n);
    let use_val = !val_idx.is_empty();
    let val_x = take_rows(x, &val_idx);
    let val_y: Vec<f64> = val_idx.iter().map(|&i| y[i]).collect();

    let mut adam_m: Vec<Array2<f64>> =
        model.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
    let mut adam_v: Vec<Array2<f64>> =
        model.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
    let mut step = 0usize;
    let mut train_rng = SplitMix64::new(derive_seed(cfg.seed, 2));

    let mut best_params = model.params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut stale = 0usize;

    let mut epoch_order = train_idx.clone();
    for epoch in 0..cfg.max_epochs {
        train_rng.shuffle(&mut epoch_order);
        for chunk in epoch_order.chunks(cfg.batch_size) {
            let mut batch: Vec<usize> = chunk.to_vec();
            batch.sort_unstable();
            let inv_b = 1.0 / batch.len() as f64;

            let mut grads: Vec<Array2<f64>> =
                model.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
            let mut batch_loss = 0.0;
            for &i in &batch {
                let x_std = model.standardize(x.row(i).as_slice().expect("contiguous"))?;
                let cache = model.forward_inner(&x_std, Some(&mut train_rng));
                let target = (y[i] - y_mean) / y_std;
                let diff = cache.z - target;
                batch_loss += diff * diff * inv_b;
                model.backward(&cache, 2.0 * diff * inv_b, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }

            step += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(step as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(step as i32);
            for (k, grad) in grads.iter().enumerate() {
                let mt = &mut adam_m[k];
                let vt = &mut adam_v[k];
                let pt = &mut model.params[k];
                ndarray::Zip::from(pt)
                    .and(mt)
                    .and(vt)
                    .and(grad)
                    .for_each(|p, m1, v1, &g| {
                        *m1 = ADAM_BETA1 * *m1 + (1.0 - ADAM_BETA1) * g;
                        *v1 = ADAM_BETA2 * *v1 + (1.0 - ADAM_BETA2) * g * g;
                        let mhat = *m1 / bc1;
                        let vhat = *v1 / bc2;
                        *p -= cfg.learning_rate * mhat / (vhat.sqrt() + ADAM_EPS);
                    });
            }
        }

        if use_val {
            let val_loss = model.validation_loss(val_x.view(), &val_y)?;
            if !val_loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            if val_loss < best_val {
                best_val = val_loss;
                best_epoch = epoch;
                best_params = model.params.clone();
                stale = 0;
            } else {
                stale += 1;
                if cfg.early_stop_patience > 0 && stale >= cfg.early_stop_patience {
                    break;
                }
            }
        } else {
            best_epoch = epoch;
        }
    }

    if use_val {
        model.params = best_params;
        model.best_val_loss = Some(best_val);
    }
    model.best_epoch = best_epoch;
    Ok(model)
}

fn take_rows(x: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), x.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}
