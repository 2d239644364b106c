//! Item-level embedders (learnable ID table, frozen-feature MLP projection)
//! and the two session encoders: mean pooling and a causally-masked
//! single-head transformer. Forward passes cache what the hand-written
//! backward passes need; every gradient here is certified against central
//! finite differences in the test suites.

use rand_chacha::ChaCha8Rng;

use crate::corpus::{Session, TextFeatureMatrix};
use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix, DropoutCtx, Gradients};

pub const LAYER_NORM_EPS: f64 = 1e-12;

/// Dropout-site key spaces (see [`DropoutCtx::mask`]).
const SITE_TEXT_HIDDEN: u64 = 0x1000_0000_0000_0000;
const SITE_ATTN_OUT: u64 = 0x2000_0000_0000_0000;

/// Which session encoder a uni-modal network uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionEncoderKind {
    Mean,
    Transformer,
}

/// Keep the most recent `l_max` context items; the target is untouched.
pub fn truncate_session(session: &Session, l_max: usize) -> Session {
    let mut out = session.clone();
    if out.items.len() > l_max {
        out.items = out.items[out.items.len() - l_max..].to_vec();
    }
    out
}

// ---------------------------------------------------------------------------
// ID embedding table
// ---------------------------------------------------------------------------

/// Learnable per-item embedding matrix, |V|×d.
#[derive(Debug, Clone)]
pub struct IdEmbeddingTable {
    pub weights: DenseMatrix,
}

impl IdEmbeddingTable {
    pub fn init(num_items: usize, d: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / (d as f64).sqrt();
        IdEmbeddingTable {
            weights: DenseMatrix::uniform_init(num_items, d, scale, rng),
        }
    }
}

// ---------------------------------------------------------------------------
// Text projection
// ---------------------------------------------------------------------------

/// Two-layer MLP mapping frozen d_text features to d-dimensional item
/// embeddings: `out = relu(f·W1 + b1)·W2 + b2`, dropout on the hidden layer
/// in training mode. The feature matrix itself is never mutated.
#[derive(Debug, Clone)]
pub struct TextProjection {
    pub hidden_weight: DenseMatrix, // d_text × d_h
    pub hidden_bias: DenseMatrix,   // 1 × d_h
    pub output_weight: DenseMatrix, // d_h × d
    pub output_bias: DenseMatrix,   // 1 × d
}

/// Per-item cache for the MLP backward pass.
pub struct TextRowCache {
    pub item: usize,
    pre: Vec<f64>,
    hidden_dropped: Vec<f64>,
    mask: Vec<f64>,
}

impl TextProjection {
    pub fn init(d_text: usize, d_h: usize, d: usize, rng: &mut ChaCha8Rng) -> Self {
        TextProjection {
            hidden_weight: DenseMatrix::uniform_init(d_text, d_h, 1.0 / (d_text as f64).sqrt(), rng),
            hidden_bias: DenseMatrix::zeros(1, d_h),
            output_weight: DenseMatrix::uniform_init(d_h, d, 1.0 / (d_h as f64).sqrt(), rng),
            output_bias: DenseMatrix::zeros(1, d),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden_weight.rows
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_weight.cols
    }

    pub fn output_dim(&self) -> usize {
        self.output_weight.cols
    }

    pub fn check_features(&self, features: &TextFeatureMatrix) -> Result<()> {
        if features.dim() != self.input_dim() {
            return Err(Error::Shape(format!(
                "feature dim {} does not match projection input dim {}",
                features.dim(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Embed one item row, returning the cache needed by [`Self::backward_row`].
    pub fn embed_row(
        &self,
        features: &TextFeatureMatrix,
        item: usize,
        dropout: &DropoutCtx,
        train: bool,
    ) -> (Vec<f64>, TextRowCache) {
        let f = features.row(item);
        let d_h = self.hidden_dim();
        let d = self.output_dim();
        let mut pre = self.hidden_bias.row(0).to_vec();
        for (k, &fv) in f.iter().enumerate() {
            if fv == 0.0 {
                continue;
            }
            let wrow = self.hidden_weight.row(k);
            for j in 0..d_h {
                pre[j] += fv * wrow[j];
            }
        }
        let mask = if train {
            dropout.mask(SITE_TEXT_HIDDEN | item as u64, d_h)
        } else {
            vec![1.0; d_h]
        };
        let hidden_dropped: Vec<f64> = pre
            .iter()
            .zip(&mask)
            .map(|(&p, &m)| p.max(0.0) * m)
            .collect();
        let mut out = self.output_bias.row(0).to_vec();
        for (k, &h) in hidden_dropped.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            let wrow = self.output_weight.row(k);
            for j in 0..d {
                out[j] += h * wrow[j];
            }
        }
        (
            out,
            TextRowCache {
                item,
                pre,
                hidden_dropped,
                mask,
            },
        )
    }

    /// Accumulate parameter gradients for one item row given d(out-row).
    pub fn backward_row(
        &self,
        features: &TextFeatureMatrix,
        cache: &TextRowCache,
        d_out: &[f64],
        grads: &mut Gradients,
        prefix: &str,
    ) {
        let d_h = self.hidden_dim();
        let d = self.output_dim();
        let f = features.row(cache.item);

        {
            let g_w2 = grads.entry(&format!("{prefix}w2"), d_h, d);
            for (k, &h) in cache.hidden_dropped.iter().enumerate() {
                if h == 0.0 {
                    continue;
                }
                let grow = g_w2.row_mut(k);
                for j in 0..d {
                    grow[j] += h * d_out[j];
                }
            }
        }
        {
            let g_b2 = grads.entry(&format!("{prefix}b2"), 1, d);
            for j in 0..d {
                g_b2.data[j] += d_out[j];
            }
        }
        // through the dropout mask and the rectifier
        let mut d_pre = vec![0.0; d_h];
        for k in 0..d_h {
            if cache.pre[k] <= 0.0 || cache.mask[k] == 0.0 {
                continue;
            }
            d_pre[k] = dot(self.output_weight.row(k), d_out) * cache.mask[k];
        }
        {
            let g_w1 = grads.entry(&format!("{prefix}w1"), self.input_dim(), d_h);
            for (k, &fv) in f.iter().enumerate() {
                if fv == 0.0 {
                    continue;
                }
                let grow = g_w1.row_mut(k);
                for j in 0..d_h {
                    grow[j] += fv * d_pre[j];
                }
            }
        }
        let g_b1 = grads.entry(&format!("{prefix}b1"), 1, d_h);
        for j in 0..d_h {
            g_b1.data[j] += d_pre[j];
        }
    }
}

/// Spec-level op: the full |V|×d text item-embedding matrix
/// `H_i = relu(F_i·W1 + b1)·W2 + b2` (dropout only in training mode).
pub fn text_item_embeddings(
    features: &TextFeatureMatrix,
    proj: &TextProjection,
    dropout: &DropoutCtx,
    train: bool,
) -> Result<DenseMatrix> {
    proj.check_features(features)?;
    let mut out = DenseMatrix::zeros(features.num_items(), proj.output_dim());
    for item in 0..features.num_items() {
        let (row, _) = proj.embed_row(features, item, dropout, train);
        out.row_mut(item).copy_from_slice(&row);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Positional table and attention layers
// ---------------------------------------------------------------------------

/// Learnable positional embeddings, L_max×d.
#[derive(Debug, Clone)]
pub struct PositionalTable {
    pub weights: DenseMatrix,
}

impl PositionalTable {
    pub fn init(l_max: usize, d: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / (d as f64).sqrt();
        PositionalTable {
            weights: DenseMatrix::uniform_init(l_max, d, scale, rng),
        }
    }
}

/// Optional position-wise feed-forward sublayer (off by default; the base
/// layer is attention + residual + layer norm only).
#[derive(Debug, Clone)]
pub struct FeedForward {
    pub w1: DenseMatrix, // d × d_ff
    pub b1: DenseMatrix, // 1 × d_ff
    pub w2: DenseMatrix, // d_ff × d
    pub b2: DenseMatrix, // 1 × d
    pub ln_gain: DenseMatrix,
    pub ln_bias: DenseMatrix,
}

/// One causal self-attention layer: single head, residual add, layer norm.
#[derive(Debug, Clone)]
pub struct AttentionLayer {
    pub wq: DenseMatrix,
    pub wk: DenseMatrix,
    pub wv: DenseMatrix,
    pub ln_gain: DenseMatrix, // 1 × d
    pub ln_bias: DenseMatrix, // 1 × d
    pub ffn: Option<FeedForward>,
}

impl AttentionLayer {
    pub fn init(d: usize, with_ffn: bool, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / (d as f64).sqrt();
        let ffn = with_ffn.then(|| {
            let d_ff = 4 * d;
            FeedForward {
                w1: DenseMatrix::uniform_init(d, d_ff, scale, rng),
                b1: DenseMatrix::zeros(1, d_ff),
                w2: DenseMatrix::uniform_init(d_ff, d, 1.0 / (d_ff as f64).sqrt(), rng),
                b2: DenseMatrix::zeros(1, d),
                ln_gain: DenseMatrix::filled(1, d, 1.0),
                ln_bias: DenseMatrix::zeros(1, d),
            }
        });
        AttentionLayer {
            wq: DenseMatrix::uniform_init(d, d, scale, rng),
            wk: DenseMatrix::uniform_init(d, d, scale, rng),
            wv: DenseMatrix::uniform_init(d, d, scale, rng),
            ln_gain: DenseMatrix::filled(1, d, 1.0),
            ln_bias: DenseMatrix::zeros(1, d),
            ffn,
        }
    }
}

/// Positional table plus the attention stack — everything the transformer
/// session encoder owns.
#[derive(Debug, Clone)]
pub struct TransformerParams {
    pub positions: PositionalTable,
    pub layers: Vec<AttentionLayer>,
}

impl TransformerParams {
    pub fn init(l_max: usize, d: usize, num_layers: usize, with_ffn: bool, rng: &mut ChaCha8Rng) -> Self {
        TransformerParams {
            positions: PositionalTable::init(l_max, d, rng),
            layers: (0..num_layers).map(|_| AttentionLayer::init(d, with_ffn, rng)).collect(),
        }
    }

    pub fn l_max(&self) -> usize {
        self.positions.weights.rows
    }
}

struct LayerNormCache {
    xhat: DenseMatrix,
    inv_std: Vec<f64>,
}

struct LayerCache {
    input: DenseMatrix,
    q: DenseMatrix,
    k: DenseMatrix,
    v: DenseMatrix,
    /// row i holds softmax probabilities over positions 0..=i
    attn: Vec<Vec<f64>>,
    drop_mask: DenseMatrix,
    ln1: LayerNormCache,
    // FFN sublayer (when enabled)
    ffn_input: Option<DenseMatrix>,
    ffn_pre: Option<DenseMatrix>,
    ln2: Option<LayerNormCache>,
}

pub struct TransformerCache {
    layers: Vec<LayerCache>,
    n: usize,
}

fn layer_norm_rows(input: &DenseMatrix, gain: &DenseMatrix, bias: &DenseMatrix) -> (DenseMatrix, LayerNormCache) {
    let d = input.cols;
    let mut out = DenseMatrix::zeros(input.rows, d);
    let mut xhat = DenseMatrix::zeros(input.rows, d);
    let mut inv_std = Vec::with_capacity(input.rows);
    for i in 0..input.rows {
        let row = input.row(i);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let istd = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(istd);
        for j in 0..d {
            let xh = (row[j] - mean) * istd;
            xhat.set(i, j, xh);
            out.set(i, j, gain.data[j] * xh + bias.data[j]);
        }
    }
    (out, LayerNormCache { xhat, inv_std })
}

/// Backward through layer norm for all rows: returns d(input), accumulates
/// d(gain)/d(bias) into the provided tensors.
fn layer_norm_backward(
    d_out: &DenseMatrix,
    cache: &LayerNormCache,
    gain: &DenseMatrix,
    g_gain: &mut DenseMatrix,
    g_bias: &mut DenseMatrix,
) -> DenseMatrix {
    let d = d_out.cols;
    let mut d_in = DenseMatrix::zeros(d_out.rows, d);
    for i in 0..d_out.rows {
        let dy = d_out.row(i);
        let xhat = cache.xhat.row(i);
        for j in 0..d {
            g_gain.data[j] += dy[j] * xhat[j];
            g_bias.data[j] += dy[j];
        }
        let dxhat: Vec<f64> = (0..d).map(|j| dy[j] * gain.data[j]).collect();
        let mean_dxhat = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dxhat_xhat = dxhat.iter().zip(xhat).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        let istd = cache.inv_std[i];
        for j in 0..d {
            d_in.set(i, j, istd * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat));
        }
    }
    d_in
}

impl TransformerParams {
    /// Run the stack over gathered item-embedding rows (one session, already
    /// truncated to L_max). Positions are added internally. Returns the full
    /// refined embedding matrix; callers take the last row as the session
    /// embedding.
    pub fn forward(
        &self,
        item_rows: &DenseMatrix,
        dropout: &DropoutCtx,
        train: bool,
    ) -> (DenseMatrix, TransformerCache) {
        let n = item_rows.rows;
        let d = item_rows.cols;
        assert!(n <= self.l_max(), "session longer than positional table");
        let scale = 1.0 / (d as f64).sqrt();

        let mut current = item_rows.clone();
        for i in 0..n {
            let p = self.positions.weights.row(i);
            let row = current.row_mut(i);
            for j in 0..d {
                row[j] += p[j];
            }
        }

        let mut caches = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let input = current;
            let q = input.matmul(&layer.wq);
            let k = input.matmul(&layer.wk);
            let v = input.matmul(&layer.wv);

            // causal attention: row i attends to positions 0..=i only
            let mut attn = Vec::with_capacity(n);
            let mut attn_out = DenseMatrix::zeros(n, d);
            for i in 0..n {
                let qi = q.row(i);
                let logits: Vec<f64> = (0..=i).map(|j| dot(qi, k.row(j)) * scale).collect();
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut probs: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
                let sum: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= sum);
                let out_row = attn_out.row_mut(i);
                for (j, &p) in probs.iter().enumerate() {
                    let vr = v.row(j);
                    for c in 0..d {
                        out_row[c] += p * vr[c];
                    }
                }
                attn.push(probs);
            }

            // dropout on the attention output, then residual + layer norm
            let mut drop_mask = DenseMatrix::filled(n, d, 1.0);
            if train && dropout.is_active() {
                for i in 0..n {
                    let m = dropout.mask(SITE_ATTN_OUT | ((li as u64) << 32) | i as u64, d);
                    drop_mask.row_mut(i).copy_from_slice(&m);
                }
            }
            let mut residual = DenseMatrix::zeros(n, d);
            for i in 0..n {
                let ir = input.row(i);
                let ar = attn_out.row(i);
                let mr = drop_mask.row(i);
                let rr = residual.row_mut(i);
                for j in 0..d {
                    rr[j] = ir[j] + ar[j] * mr[j];
                }
            }
            let (normed, ln1) = layer_norm_rows(&residual, &layer.ln_gain, &layer.ln_bias);

            let (out, ffn_input, ffn_pre, ln2) = match &layer.ffn {
                None => (normed, None, None, None),
                Some(ffn) => {
                    let d_ff = ffn.w1.cols;
                    let pre = {
                        let mut p = normed.matmul(&ffn.w1);
                        for i in 0..n {
                            let row = p.row_mut(i);
                            for j in 0..d_ff {
                                row[j] += ffn.b1.data[j];
                            }
                        }
                        p
                    };
                    let mut hidden = pre.clone();
                    hidden.data.iter_mut().for_each(|v| *v = v.max(0.0));
                    let mut f_out = hidden.matmul(&ffn.w2);
                    for i in 0..n {
                        let nr = normed.row(i);
                        let fr = f_out.row_mut(i);
                        for j in 0..d {
                            fr[j] += ffn.b2.data[j] + nr[j];
                        }
                    }
                    let (out2, ln2) = layer_norm_rows(&f_out, &ffn.ln_gain, &ffn.ln_bias);
                    (out2, Some(normed), Some(pre), Some(ln2))
                }
            };

            caches.push(LayerCache {
                input,
                q,
                k,
                v,
                attn,
                drop_mask,
                ln1,
                ffn_input,
                ffn_pre,
                ln2,
            });
            current = out;
        }

        (current, TransformerCache { layers: caches, n })
    }

    /// Backward through the stack. `d_out` is the gradient w.r.t. the final
    /// refined embeddings; returns the gradient w.r.t. the gathered item rows
    /// and accumulates parameter gradients (names `{prefix}positions`,
    /// `{prefix}layer{i}.*`).
    pub fn backward(
        &self,
        d_out: &DenseMatrix,
        cache: &TransformerCache,
        grads: &mut Gradients,
        prefix: &str,
    ) -> DenseMatrix {
        let n = cache.n;
        let d = d_out.cols;
        let scale = 1.0 / (d as f64).sqrt();
        let mut d_current = d_out.clone();

        for (li, layer) in self.layers.iter().enumerate().rev() {
            let lc = &cache.layers[li];
            let lp = format!("{prefix}layer{li}.");

            // FFN sublayer backward (when present)
            let d_normed_total = match (&layer.ffn, &lc.ffn_input, &lc.ffn_pre, &lc.ln2) {
                (Some(ffn), Some(normed), Some(pre), Some(ln2)) => {
                    let d_ff = ffn.w1.cols;
                    let d_r2 = {
                        let mut g_gain = DenseMatrix::zeros(1, d);
                        let mut g_bias = DenseMatrix::zeros(1, d);
                        let out = layer_norm_backward(&d_current, ln2, &ffn.ln_gain, &mut g_gain, &mut g_bias);
                        grads.entry(&format!("{lp}ffn.ln_gain"), 1, d).add_assign(&g_gain);
                        grads.entry(&format!("{lp}ffn.ln_bias"), 1, d).add_assign(&g_bias);
                        out
                    };
                    // residual: R2 = normed + ffn(normed)
                    let mut hidden = pre.clone();
                    hidden.data.iter_mut().for_each(|v| *v = v.max(0.0));
                    grads.entry(&format!("{lp}ffn.w2"), d_ff, d).add_assign(&hidden.matmul_tn(&d_r2));
                    {
                        let g_b2 = grads.entry(&format!("{lp}ffn.b2"), 1, d);
                        for i in 0..n {
                            let row = d_r2.row(i);
                            for j in 0..d {
                                g_b2.data[j] += row[j];
                            }
                        }
                    }
                    let mut d_pre = d_r2.matmul_nt(&ffn.w2);
                    for (dp, p) in d_pre.data.iter_mut().zip(&pre.data) {
                        if *p <= 0.0 {
                            *dp = 0.0;
                        }
                    }
                    grads.entry(&format!("{lp}ffn.w1"), d, d_ff).add_assign(&normed.matmul_tn(&d_pre));
                    {
                        let g_b1 = grads.entry(&format!("{lp}ffn.b1"), 1, d_ff);
                        for i in 0..n {
                            let row = d_pre.row(i);
                            for j in 0..d_ff {
                                g_b1.data[j] += row[j];
                            }
                        }
                    }
                    let mut d_normed = d_pre.matmul_nt(&ffn.w1);
                    d_normed.add_assign(&d_r2);
                    d_normed
                }
                _ => d_current,
            };

            // layer norm after the attention residual
            let d_residual = {
                let mut g_gain = DenseMatrix::zeros(1, d);
                let mut g_bias = DenseMatrix::zeros(1, d);
                let out = layer_norm_backward(&d_normed_total, &lc.ln1, &layer.ln_gain, &mut g_gain, &mut g_bias);
                grads.entry(&format!("{lp}ln_gain"), 1, d).add_assign(&g_gain);
                grads.entry(&format!("{lp}ln_bias"), 1, d).add_assign(&g_bias);
                out
            };

            // residual split: R = input + attn_out ⊙ mask
            let mut d_input = d_residual.clone();
            let mut d_attn_out = d_residual;
            for (da, m) in d_attn_out.data.iter_mut().zip(&lc.drop_mask.data) {
                *da *= m;
            }

            // attention backward
            let mut d_v = DenseMatrix::zeros(n, d);
            let mut d_q = DenseMatrix::zeros(n, d);
            let mut d_k = DenseMatrix::zeros(n, d);
            for i in 0..n {
                let probs = &lc.attn[i];
                let da_row = d_attn_out.row(i);
                // dA_ij and the softmax Jacobian within the allowed window
                let d_probs: Vec<f64> = (0..=i).map(|j| dot(da_row, lc.v.row(j))).collect();
                let s: f64 = probs.iter().zip(&d_probs).map(|(p, dp)| p * dp).sum();
                for j in 0..=i {
                    let d_logit = probs[j] * (d_probs[j] - s);
                    let dv_row = d_v.row_mut(j);
                    for c in 0..d {
                        dv_row[c] += probs[j] * da_row[c];
                    }
                    let kj = lc.k.row(j);
                    let qi = lc.q.row(i);
                    let dq_row = d_q.row_mut(i);
                    for c in 0..d {
                        dq_row[c] += d_logit * kj[c] * scale;
                    }
                    let dk_row = d_k.row_mut(j);
                    for c in 0..d {
                        dk_row[c] += d_logit * qi[c] * scale;
                    }
                }
            }

            grads.entry(&format!("{lp}wq"), d, d).add_assign(&lc.input.matmul_tn(&d_q));
            grads.entry(&format!("{lp}wk"), d, d).add_assign(&lc.input.matmul_tn(&d_k));
            grads.entry(&format!("{lp}wv"), d, d).add_assign(&lc.input.matmul_tn(&d_v));
            d_input.add_assign(&d_q.matmul_nt(&layer.wq));
            d_input.add_assign(&d_k.matmul_nt(&layer.wk));
            d_input.add_assign(&d_v.matmul_nt(&layer.wv));

            d_current = d_input;
        }

        // peel off the positional add
        let l_max = self.l_max();
        let g_pos = grads.entry(&format!("{prefix}positions"), l_max, d_out.cols);
        for i in 0..n {
            let src = d_current.row(i);
            let dst = g_pos.row_mut(i);
            for j in 0..d_out.cols {
                dst[j] += src[j];
            }
        }
        d_current
    }
}

// ---------------------------------------------------------------------------
// Spec-level session embedding ops
// ---------------------------------------------------------------------------

/// Mean of the (context) item embeddings; the target is never included.
pub fn session_embed_mean(session: &Session, item_embs: &DenseMatrix) -> Result<Vec<f64>> {
    if session.items.is_empty() {
        return Err(Error::Invalid("cannot embed an empty session".into()));
    }
    let d = item_embs.cols;
    let mut q = vec![0.0; d];
    for &it in &session.items {
        let row = item_embs.row(it);
        for j in 0..d {
            q[j] += row[j];
        }
    }
    let inv = 1.0 / session.items.len() as f64;
    q.iter_mut().for_each(|v| *v *= inv);
    Ok(q)
}

/// Gather item-embedding rows for a session's context items.
pub fn gather_rows(items: &[usize], item_embs: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(items.len(), item_embs.cols);
    for (i, &it) in items.iter().enumerate() {
        out.row_mut(i).copy_from_slice(item_embs.row(it));
    }
    out
}

/// Transformer session embedding: refined embedding of the last position
/// after the full stack (sessions longer than L_max are truncated to the
/// most recent items first).
pub fn session_embed_transformer(
    session: &Session,
    item_embs: &DenseMatrix,
    params: &TransformerParams,
    dropout: &DropoutCtx,
    train: bool,
) -> Result<Vec<f64>> {
    if session.items.is_empty() {
        return Err(Error::Invalid("cannot embed an empty session".into()));
    }
    let truncated = truncate_session(session, params.l_max());
    let rows = gather_rows(&truncated.items, item_embs);
    let (out, _) = params.forward(&rows, dropout, train);
    Ok(out.row(out.rows - 1).to_vec())
}
