//! Session–item relevance for each uni-modal network, full-catalog ranking,
//! and the blended inference score. Also owns the network composition
//! (embedder + session encoder) and its named-parameter plumbing, which the
//! optimizer, checkpoint format, and finite-difference tests all share.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::corpus::{Session, TextFeatureMatrix};
use crate::encoders::{
    gather_rows, session_embed_mean, text_item_embeddings, truncate_session, IdEmbeddingTable,
    SessionEncoderKind, TextProjection, TextRowCache, TransformerCache, TransformerParams,
};
use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix, DropoutCtx, Gradients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Id,
    Text,
}

impl Modality {
    pub fn tag(&self) -> &'static str {
        match self {
            Modality::Id => "id",
            Modality::Text => "text",
        }
    }
}

/// Shape hyperparameters shared by every network in a run.
#[derive(Debug, Clone, Copy)]
pub struct ModelShape {
    pub d: usize,
    pub d_h: usize,
    pub l_max: usize,
    pub layers: usize,
    pub transformer_ffn: bool,
}

/// Item-embedding source: a learnable ID table, or the frozen text feature
/// matrix behind a learnable MLP projection. Never mixed.
pub enum ItemEmbedder {
    Id(IdEmbeddingTable),
    Text {
        proj: TextProjection,
        features: Arc<TextFeatureMatrix>,
    },
}

pub enum SessionEncoder {
    Mean,
    Transformer(TransformerParams),
}

/// One modality's complete scoring network.
pub struct UniModalNetwork {
    pub embedder: ItemEmbedder,
    pub encoder: SessionEncoder,
    pub num_items: usize,
    pub l_max: usize,
}

impl UniModalNetwork {
    pub fn new_id(
        num_items: usize,
        shape: ModelShape,
        kind: SessionEncoderKind,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        UniModalNetwork {
            embedder: ItemEmbedder::Id(IdEmbeddingTable::init(num_items, shape.d, rng)),
            encoder: make_encoder(kind, shape, rng),
            num_items,
            l_max: shape.l_max,
        }
    }

    pub fn new_text(
        features: Arc<TextFeatureMatrix>,
        shape: ModelShape,
        kind: SessionEncoderKind,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let num_items = features.num_items();
        UniModalNetwork {
            embedder: ItemEmbedder::Text {
                proj: TextProjection::init(features.dim(), shape.d_h, shape.d, rng),
                features,
            },
            encoder: make_encoder(kind, shape, rng),
            num_items,
            l_max: shape.l_max,
        }
    }

    pub fn modality(&self) -> Modality {
        match self.embedder {
            ItemEmbedder::Id(_) => Modality::Id,
            ItemEmbedder::Text { .. } => Modality::Text,
        }
    }

    pub fn encoder_kind(&self) -> SessionEncoderKind {
        match self.encoder {
            SessionEncoder::Mean => SessionEncoderKind::Mean,
            SessionEncoder::Transformer(_) => SessionEncoderKind::Transformer,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.embedder {
            ItemEmbedder::Id(t) => t.weights.cols,
            ItemEmbedder::Text { proj, .. } => proj.output_dim(),
        }
    }

    /// Materialize the full |V|×d item-embedding matrix.
    pub fn item_embedding_matrix(&self, dropout: &DropoutCtx, train: bool) -> Result<DenseMatrix> {
        match &self.embedder {
            ItemEmbedder::Id(t) => Ok(t.weights.clone()),
            ItemEmbedder::Text { proj, features } => {
                text_item_embeddings(features, proj, dropout, train)
            }
        }
    }

    /// Session embedding given a full item-embedding matrix (context items
    /// are truncated to the most recent `l_max` first).
    pub fn session_embedding(
        &self,
        session: &Session,
        item_embs: &DenseMatrix,
        dropout: &DropoutCtx,
        train: bool,
    ) -> Result<Vec<f64>> {
        if session.items.is_empty() {
            return Err(Error::Invalid("cannot score an empty session".into()));
        }
        let truncated = truncate_session(session, self.l_max);
        match &self.encoder {
            SessionEncoder::Mean => session_embed_mean(&truncated, item_embs),
            SessionEncoder::Transformer(params) => {
                let rows = gather_rows(&truncated.items, item_embs);
                let (out, _) = params.forward(&rows, dropout, train);
                Ok(out.row(out.rows - 1).to_vec())
            }
        }
    }

    // -- parameter plumbing ------------------------------------------------

    pub fn named_params(&self) -> Vec<(String, &DenseMatrix)> {
        let mut out = Vec::new();
        match &self.embedder {
            ItemEmbedder::Id(t) => out.push(("embeddings".to_string(), &t.weights)),
            ItemEmbedder::Text { proj, .. } => {
                out.push(("w1".to_string(), &proj.hidden_weight));
                out.push(("b1".to_string(), &proj.hidden_bias));
                out.push(("w2".to_string(), &proj.output_weight));
                out.push(("b2".to_string(), &proj.output_bias));
            }
        }
        if let SessionEncoder::Transformer(t) = &self.encoder {
            out.push(("positions".to_string(), &t.positions.weights));
            for (i, layer) in t.layers.iter().enumerate() {
                out.push((format!("layer{i}.wq"), &layer.wq));
                out.push((format!("layer{i}.wk"), &layer.wk));
                out.push((format!("layer{i}.wv"), &layer.wv));
                out.push((format!("layer{i}.ln_gain"), &layer.ln_gain));
                out.push((format!("layer{i}.ln_bias"), &layer.ln_bias));
                if let Some(ffn) = &layer.ffn {
                    out.push((format!("layer{i}.ffn.w1"), &ffn.w1));
                    out.push((format!("layer{i}.ffn.b1"), &ffn.b1));
                    out.push((format!("layer{i}.ffn.w2"), &ffn.w2));
                    out.push((format!("layer{i}.ffn.b2"), &ffn.b2));
                    out.push((format!("layer{i}.ffn.ln_gain"), &ffn.ln_gain));
                    out.push((format!("layer{i}.ffn.ln_bias"), &ffn.ln_bias));
                }
            }
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut DenseMatrix)> {
        let mut out = Vec::new();
        match &mut self.embedder {
            ItemEmbedder::Id(t) => out.push(("embeddings".to_string(), &mut t.weights)),
            ItemEmbedder::Text { proj, .. } => {
                out.push(("w1".to_string(), &mut proj.hidden_weight));
                out.push(("b1".to_string(), &mut proj.hidden_bias));
                out.push(("w2".to_string(), &mut proj.output_weight));
                out.push(("b2".to_string(), &mut proj.output_bias));
            }
        }
        if let SessionEncoder::Transformer(t) = &mut self.encoder {
            out.push(("positions".to_string(), &mut t.positions.weights));
            for (i, layer) in t.layers.iter_mut().enumerate() {
                out.push((format!("layer{i}.wq"), &mut layer.wq));
                out.push((format!("layer{i}.wk"), &mut layer.wk));
                out.push((format!("layer{i}.wv"), &mut layer.wv));
                out.push((format!("layer{i}.ln_gain"), &mut layer.ln_gain));
                out.push((format!("layer{i}.ln_bias"), &mut layer.ln_bias));
                if let Some(ffn) = &mut layer.ffn {
                    out.push((format!("layer{i}.ffn.w1"), &mut ffn.w1));
                    out.push((format!("layer{i}.ffn.b1"), &mut ffn.b1));
                    out.push((format!("layer{i}.ffn.w2"), &mut ffn.w2));
                    out.push((format!("layer{i}.ffn.b2"), &mut ffn.b2));
                    out.push((format!("layer{i}.ffn.ln_gain"), &mut ffn.ln_gain));
                    out.push((format!("layer{i}.ffn.ln_bias"), &mut ffn.ln_bias));
                }
            }
        }
        out
    }

    pub fn param_shapes(&self) -> Vec<(String, usize, usize)> {
        self.named_params()
            .into_iter()
            .map(|(n, m)| (n, m.rows, m.cols))
            .collect()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (_, m) in self.named_params() {
            out.extend_from_slice(&m.data);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for (_, m) in self.named_params_mut() {
            let len = m.data.len();
            m.data.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        assert_eq!(offset, flat.len(), "flat parameter length mismatch");
    }

    /// FNV-1a over the parameter bit patterns; used by frozen-counterpart
    /// and determinism tests.
    pub fn params_checksum(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        for (name, m) in self.named_params() {
            for b in name.as_bytes() {
                hash = (hash ^ *b as u64).wrapping_mul(0x100_0000_01b3);
            }
            for v in &m.data {
                hash = (hash ^ v.to_bits()).wrapping_mul(0x100_0000_01b3);
            }
        }
        hash
    }
}

fn make_encoder(kind: SessionEncoderKind, shape: ModelShape, rng: &mut ChaCha8Rng) -> SessionEncoder {
    match kind {
        SessionEncoderKind::Mean => SessionEncoder::Mean,
        SessionEncoderKind::Transformer => SessionEncoder::Transformer(TransformerParams::init(
            shape.l_max,
            shape.d,
            shape.layers,
            shape.transformer_ffn,
            rng,
        )),
    }
}

// ---------------------------------------------------------------------------
// Sparse item-row embedding (training path)
// ---------------------------------------------------------------------------

/// Embedding rows for just the items one loss evaluation touches
/// (candidates plus context), with the caches backward needs.
pub struct ItemRowSet {
    pub items: Vec<usize>,
    pub rows: DenseMatrix,
    index: BTreeMap<usize, usize>,
    text_caches: Vec<Option<TextRowCache>>,
}

impl ItemRowSet {
    pub fn local(&self, item: usize) -> usize {
        self.index[&item]
    }

    pub fn row(&self, item: usize) -> &[f64] {
        self.rows.row(self.local(item))
    }
}

impl UniModalNetwork {
    /// Embed a set of items (deduplicated, ascending order).
    pub fn embed_items(
        &self,
        involved: impl IntoIterator<Item = usize>,
        dropout: &DropoutCtx,
        train: bool,
    ) -> ItemRowSet {
        let index: BTreeMap<usize, usize> = {
            let mut uniq: Vec<usize> = involved.into_iter().collect();
            uniq.sort_unstable();
            uniq.dedup();
            uniq.into_iter().enumerate().map(|(i, it)| (it, i)).collect()
        };
        let items: Vec<usize> = index.keys().copied().collect();
        let d = self.dim();
        let mut rows = DenseMatrix::zeros(items.len(), d);
        let mut text_caches = Vec::with_capacity(items.len());
        for (local, &item) in items.iter().enumerate() {
            match &self.embedder {
                ItemEmbedder::Id(t) => {
                    rows.row_mut(local).copy_from_slice(t.weights.row(item));
                    text_caches.push(None);
                }
                ItemEmbedder::Text { proj, features } => {
                    let (row, cache) = proj.embed_row(features, item, dropout, train);
                    rows.row_mut(local).copy_from_slice(&row);
                    text_caches.push(Some(cache));
                }
            }
        }
        ItemRowSet {
            items,
            rows,
            index,
            text_caches,
        }
    }

    /// Route per-item embedding gradients into the embedder parameters.
    pub fn embed_items_backward(
        &self,
        set: &ItemRowSet,
        d_rows: &DenseMatrix,
        grads: &mut Gradients,
    ) {
        match &self.embedder {
            ItemEmbedder::Id(t) => {
                let g = grads.entry("embeddings", t.weights.rows, t.weights.cols);
                for (local, &item) in set.items.iter().enumerate() {
                    let src = d_rows.row(local);
                    let dst = g.row_mut(item);
                    for j in 0..src.len() {
                        dst[j] += src[j];
                    }
                }
            }
            ItemEmbedder::Text { proj, features } => {
                for (local, cache) in set.text_caches.iter().enumerate() {
                    let cache = cache.as_ref().expect("text cache");
                    proj.backward_row(features, cache, d_rows.row(local), grads, "");
                }
            }
        }
    }

    /// Session embedding over an [`ItemRowSet`] (training path), returning
    /// the cache for [`Self::session_backward`].
    pub fn session_forward(
        &self,
        session: &Session,
        set: &ItemRowSet,
        dropout: &DropoutCtx,
        train: bool,
    ) -> Result<(Vec<f64>, SessionCache)> {
        if session.items.is_empty() {
            return Err(Error::Invalid("cannot embed an empty session".into()));
        }
        let truncated = truncate_session(session, self.l_max);
        let local_items: Vec<usize> = truncated.items.iter().map(|&it| set.local(it)).collect();
        let ctx_rows = gather_rows(&local_items, &set.rows);
        match &self.encoder {
            SessionEncoder::Mean => {
                let d = set.rows.cols;
                let mut q = vec![0.0; d];
                for i in 0..ctx_rows.rows {
                    let row = ctx_rows.row(i);
                    for j in 0..d {
                        q[j] += row[j];
                    }
                }
                let inv = 1.0 / ctx_rows.rows as f64;
                q.iter_mut().for_each(|v| *v *= inv);
                Ok((
                    q,
                    SessionCache {
                        context: truncated.items,
                        transformer: None,
                    },
                ))
            }
            SessionEncoder::Transformer(params) => {
                let (out, cache) = params.forward(&ctx_rows, dropout, train);
                Ok((
                    out.row(out.rows - 1).to_vec(),
                    SessionCache {
                        context: truncated.items,
                        transformer: Some(cache),
                    },
                ))
            }
        }
    }

    /// Backward from d(session embedding) into d_rows (aligned with `set`)
    /// plus encoder parameter gradients.
    pub fn session_backward(
        &self,
        d_q: &[f64],
        set: &ItemRowSet,
        cache: &SessionCache,
        d_rows: &mut DenseMatrix,
        grads: &mut Gradients,
    ) {
        let d = d_rows.cols;
        match &self.encoder {
            SessionEncoder::Mean => {
                let inv = 1.0 / cache.context.len() as f64;
                for &item in &cache.context {
                    let dst = d_rows.row_mut(set.local(item));
                    for j in 0..d {
                        dst[j] += d_q[j] * inv;
                    }
                }
            }
            SessionEncoder::Transformer(params) => {
                let t_cache = cache.transformer.as_ref().expect("transformer cache");
                let n = cache.context.len();
                let mut d_out = DenseMatrix::zeros(n, d);
                d_out.row_mut(n - 1).copy_from_slice(d_q);
                let d_ctx = params.backward(&d_out, t_cache, grads, "");
                for (pos, &item) in cache.context.iter().enumerate() {
                    let src = d_ctx.row(pos);
                    let dst = d_rows.row_mut(set.local(item));
                    for j in 0..d {
                        dst[j] += src[j];
                    }
                }
            }
        }
    }
}

/// Cache tying a session forward to its backward pass.
pub struct SessionCache {
    /// truncated context items, in order
    pub context: Vec<usize>,
    transformer: Option<TransformerCache>,
}

// ---------------------------------------------------------------------------
// Scores and rankings
// ---------------------------------------------------------------------------

/// Per-item relevance scores for one session, length |V|.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Inference-time scores of every candidate item for one session:
/// `y_i = ⟨item_embedding_i, session_embedding⟩` (dropout disabled).
pub fn uni_modal_scores(net: &UniModalNetwork, session: &Session) -> Result<ScoreVector> {
    let embs = net.item_embedding_matrix(&DropoutCtx::off(), false)?;
    scores_with_items(net, &embs, session)
}

/// Same as [`uni_modal_scores`] with a precomputed item-embedding matrix,
/// for callers scoring many sessions against frozen parameters.
pub fn scores_with_items(
    net: &UniModalNetwork,
    item_embs: &DenseMatrix,
    session: &Session,
) -> Result<ScoreVector> {
    let q = net.session_embedding(session, item_embs, &DropoutCtx::off(), false)?;
    Ok(score_against(item_embs, &q))
}

/// Dot the session embedding against every row of the item matrix.
pub fn score_against(item_embs: &DenseMatrix, q: &[f64]) -> ScoreVector {
    ScoreVector(
        (0..item_embs.rows)
            .map(|i| dot(item_embs.row(i), q))
            .collect(),
    )
}

/// Full-catalog argsort, descending scores, ties broken by ascending item
/// index.
pub fn rank_descending(scores: &ScoreVector) -> Result<Vec<usize>> {
    if let Some(bad) = scores.0.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("score {bad}")));
    }
    let mut idx: Vec<usize> = (0..scores.0.len()).collect();
    idx.sort_by(|&a, &b| {
        scores.0[b]
            .partial_cmp(&scores.0[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    Ok(idx)
}

/// Inference blend `y = α·y_id + (1−α)·y_text`.
pub fn combined_scores(y_id: &ScoreVector, y_text: &ScoreVector, alpha: f64) -> Result<ScoreVector> {
    if y_id.len() != y_text.len() {
        return Err(Error::Shape(format!(
            "score lengths differ: {} vs {}",
            y_id.len(),
            y_text.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid(format!("alpha must be in [0,1], got {alpha}")));
    }
    Ok(ScoreVector(
        y_id.0
            .iter()
            .zip(&y_text.0)
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn scores_are_dot_products() {
        // d=1 scalar case from first principles
        let embs = DenseMatrix::from_vec(3, 1, vec![2.0, -1.0, 0.0]);
        let y = score_against(&embs, &[3.0]);
        assert_eq!(y.0, vec![6.0, -3.0, 0.0]);
    }

    #[test]
    fn orthogonal_item_scores_zero() {
        let embs = DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let y = score_against(&embs, &[0.0, 5.0]);
        assert_eq!(y.0[0], 0.0);
        assert_eq!(y.0[1], 5.0);
    }

    #[test]
    fn positive_scaling_preserves_ranking() {
        let embs = DenseMatrix::from_vec(4, 2, vec![0.3, -1.0, 2.0, 0.1, -0.4, 0.9, 1.1, 1.2]);
        let q = [0.7, -0.2];
        let y = score_against(&embs, &q);
        let mut scaled = embs.clone();
        scaled.scale(3.5);
        let y2 = score_against(&scaled, &q);
        for (a, b) in y.0.iter().zip(&y2.0) {
            assert!((b - 3.5 * a).abs() < 1e-12);
        }
        assert_eq!(rank_descending(&y).unwrap(), rank_descending(&y2).unwrap());
    }

    #[test]
    fn rank_descending_example() {
        let y = ScoreVector(vec![0.1, 0.9, 0.5, 0.3]);
        assert_eq!(rank_descending(&y).unwrap(), vec![1, 2, 3, 0]);
    }

    #[test]
    fn rank_all_equal_uses_index_tiebreak() {
        let y = ScoreVector(vec![0.5; 5]);
        assert_eq!(rank_descending(&y).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rank_rejects_non_finite() {
        assert!(rank_descending(&ScoreVector(vec![0.0, f64::NAN])).is_err());
    }

    proptest! {
        #[test]
        fn rank_is_permutation(scores in proptest::collection::vec(-100.0f64..100.0, 1..40)) {
            let r = rank_descending(&ScoreVector(scores.clone())).unwrap();
            let mut seen = vec![false; scores.len()];
            for &i in &r {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
            for w in r.windows(2) {
                prop_assert!(scores[w[0]] >= scores[w[1]]);
            }
        }

        #[test]
        fn rank_reversal_under_negation(scores in proptest::collection::vec(-100.0f64..100.0, 2..30)) {
            // brute-force sort oracle: negating scores reverses the order up
            // to the tie-break
            let fwd = rank_descending(&ScoreVector(scores.clone())).unwrap();
            let neg = rank_descending(&ScoreVector(scores.iter().map(|v| -v).collect())).unwrap();
            let mut expect: Vec<usize> = (0..scores.len()).collect();
            expect.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
            prop_assert_eq!(neg, expect);
            let mut expect_fwd: Vec<usize> = (0..scores.len()).collect();
            expect_fwd.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
            prop_assert_eq!(fwd, expect_fwd);
        }

        #[test]
        fn blend_symmetry(
            a in proptest::collection::vec(-10.0f64..10.0, 5),
            b in proptest::collection::vec(-10.0f64..10.0, 5),
            alpha in 0.0f64..1.0,
        ) {
            let ya = ScoreVector(a);
            let yb = ScoreVector(b);
            let left = combined_scores(&ya, &yb, alpha).unwrap();
            let right = combined_scores(&yb, &ya, 1.0 - alpha).unwrap();
            for (x, y) in left.0.iter().zip(&right.0) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blend_degenerate_alphas() {
        let y_id = ScoreVector(vec![2.0, 0.0]);
        let y_text = ScoreVector(vec![4.0, 2.0]);
        assert_eq!(combined_scores(&y_id, &y_text, 1.0).unwrap().0, vec![2.0, 0.0]);
        assert_eq!(combined_scores(&y_id, &y_text, 0.0).unwrap().0, vec![4.0, 2.0]);
        // α=0.5 elementwise arithmetic
        assert_eq!(combined_scores(&y_id, &y_text, 0.5).unwrap().0, vec![3.0, 1.0]);
    }

    #[test]
    fn blend_validates_inputs() {
        let a = ScoreVector(vec![1.0]);
        let b = ScoreVector(vec![1.0, 2.0]);
        assert!(combined_scores(&a, &b, 0.5).is_err());
        let c = ScoreVector(vec![1.0]);
        assert!(combined_scores(&a, &c, 1.5).is_err());
    }

    #[test]
    fn id_and_text_networks_score_sessions() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let shape = ModelShape {
            d: 4,
            d_h: 3,
            l_max: 6,
            layers: 1,
            transformer_ffn: false,
        };
        let features = Arc::new(
            TextFeatureMatrix::new(DenseMatrix::uniform_init(8, 5, 1.0, &mut rng)).unwrap(),
        );
        let session = Session::new(vec![0, 3, 5], 2);
        for kind in [SessionEncoderKind::Mean, SessionEncoderKind::Transformer] {
            let id_net = UniModalNetwork::new_id(8, shape, kind, &mut rng);
            let text_net = UniModalNetwork::new_text(features.clone(), shape, kind, &mut rng);
            let y_id = uni_modal_scores(&id_net, &session).unwrap();
            let y_text = uni_modal_scores(&text_net, &session).unwrap();
            assert_eq!(y_id.len(), 8);
            assert_eq!(y_text.len(), 8);
            assert!(y_id.0.iter().all(|v| v.is_finite()));
            assert!(y_text.0.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let shape = ModelShape {
            d: 4,
            d_h: 3,
            l_max: 6,
            layers: 2,
            transformer_ffn: true,
        };
        let mut net = UniModalNetwork::new_id(5, shape, SessionEncoderKind::Transformer, &mut rng);
        let flat = net.flat_params();
        let checksum = net.params_checksum();
        let mut perturbed = flat.clone();
        perturbed[3] += 1.0;
        net.set_flat_params(&perturbed);
        assert_ne!(net.params_checksum(), checksum);
        net.set_flat_params(&flat);
        assert_eq!(net.params_checksum(), checksum);
    }

    #[test]
    fn sparse_embed_matches_full_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let shape = ModelShape {
            d: 3,
            d_h: 4,
            l_max: 8,
            layers: 1,
            transformer_ffn: false,
        };
        let features = Arc::new(
            TextFeatureMatrix::new(DenseMatrix::uniform_init(6, 4, 1.0, &mut rng)).unwrap(),
        );
        let net = UniModalNetwork::new_text(features, shape, SessionEncoderKind::Mean, &mut rng);
        let full = net.item_embedding_matrix(&DropoutCtx::off(), false).unwrap();
        let set = net.embed_items([4, 1, 4, 2], &DropoutCtx::off(), false);
        assert_eq!(set.items, vec![1, 2, 4]);
        for &item in &set.items {
            assert_eq!(set.row(item), full.row(item));
        }
    }
}
