//! The naive-fusion baseline: ID and text item embeddings merged (sum or
//! concat) into one vector, mean-pooled per session, trained under a single
//! joint loss. Its score decomposes exactly into an ID part and a text part,
//! which powers the modality-imbalance diagnostics. Also hosts independent
//! single-modality training.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

use crate::corpus::{shuffled_indices, Session, SessionDataset, TextFeatureMatrix};
use crate::encoders::{truncate_session, IdEmbeddingTable, SessionEncoderKind, TextProjection};
use crate::error::{Error, Result};
use crate::evalkit::{hits_at_n, ndcg_at_n, ranks_for_sessions};
use crate::numerics::{dot, log_sum_exp, mix_seed, AdamState, DenseMatrix, DropoutCtx, Gradients};
use crate::scoring::{Modality, ScoreVector, UniModalNetwork};
use crate::training::{
    random_negatives, snapshot_params, train_epoch, EpochRecord, MiningCachePolicy, NegativeMode,
    NegativeSet, Phase, TrainConfig, SEED_INIT_FUSION, SEED_INIT_ID, SEED_INIT_TEXT,
};

/// How the per-item ID and text embeddings are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    Sum,
    Concat,
}

impl FusionMode {
    pub fn tag(&self) -> &'static str {
        match self {
            FusionMode::Sum => "sum",
            FusionMode::Concat => "concat",
        }
    }
}

/// Naive-fusion model: learnable ID table, learnable text projection over
/// frozen features, fused item embeddings Z, mean session encoder.
pub struct NaiveFusionModel {
    pub id_table: IdEmbeddingTable,
    pub text_proj: TextProjection,
    pub features: Arc<TextFeatureMatrix>,
    pub fusion: FusionMode,
    pub num_items: usize,
    pub l_max: usize,
}

impl NaiveFusionModel {
    pub fn init(
        features: Arc<TextFeatureMatrix>,
        config: &TrainConfig,
        fusion: FusionMode,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let num_items = features.num_items();
        NaiveFusionModel {
            id_table: IdEmbeddingTable::init(num_items, config.d, rng),
            text_proj: TextProjection::init(features.dim(), config.d_h, config.d, rng),
            features,
            fusion,
            num_items,
            l_max: config.l_max,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.id_table.weights.cols
    }

    /// dim(Z): 2d for concat, d for sum.
    pub fn fused_dim(&self) -> usize {
        match self.fusion {
            FusionMode::Sum => self.embedding_dim(),
            FusionMode::Concat => 2 * self.embedding_dim(),
        }
    }

    pub fn named_params(&self) -> Vec<(String, &DenseMatrix)> {
        vec![
            ("id.embeddings".to_string(), &self.id_table.weights),
            ("text.w1".to_string(), &self.text_proj.hidden_weight),
            ("text.b1".to_string(), &self.text_proj.hidden_bias),
            ("text.w2".to_string(), &self.text_proj.output_weight),
            ("text.b2".to_string(), &self.text_proj.output_bias),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut DenseMatrix)> {
        vec![
            ("id.embeddings".to_string(), &mut self.id_table.weights),
            ("text.w1".to_string(), &mut self.text_proj.hidden_weight),
            ("text.b1".to_string(), &mut self.text_proj.hidden_bias),
            ("text.w2".to_string(), &mut self.text_proj.output_weight),
            ("text.b2".to_string(), &mut self.text_proj.output_bias),
        ]
    }

    pub fn snapshot(&self) -> Vec<(String, DenseMatrix)> {
        self.named_params()
            .into_iter()
            .map(|(n, m)| (n, m.clone()))
            .collect()
    }

    pub fn restore(&mut self, snapshot: &[(String, DenseMatrix)]) -> Result<()> {
        for (name, param) in self.named_params_mut() {
            let stored = snapshot
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| Error::Invalid(format!("snapshot missing tensor {name}")))?;
            if !param.same_shape(&stored.1) {
                return Err(Error::Shape(format!("tensor {name} shape mismatch")));
            }
            param.data.copy_from_slice(&stored.1.data);
        }
        Ok(())
    }

    /// The text item-embedding matrix H (inference mode).
    fn text_matrix(&self) -> Result<DenseMatrix> {
        crate::encoders::text_item_embeddings(
            &self.features,
            &self.text_proj,
            &DropoutCtx::off(),
            false,
        )
    }

    /// Mean of X rows and mean of H rows over the (truncated) context.
    fn component_means(&self, session: &Session, h: &DenseMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
        if session.items.is_empty() {
            return Err(Error::Invalid("cannot score an empty session".into()));
        }
        let ctx = truncate_session(session, self.l_max).items;
        let d = self.embedding_dim();
        let mut q_id = vec![0.0; d];
        let mut q_text = vec![0.0; d];
        for &it in &ctx {
            let xr = self.id_table.weights.row(it);
            let hr = h.row(it);
            for j in 0..d {
                q_id[j] += xr[j];
                q_text[j] += hr[j];
            }
        }
        let inv = 1.0 / ctx.len() as f64;
        q_id.iter_mut().for_each(|v| *v *= inv);
        q_text.iter_mut().for_each(|v| *v *= inv);
        Ok((q_id, q_text))
    }
}

/// Fused relevance scores `y_i = ⟨Z_i, q⟩` with `q` the mean of the fused
/// context embeddings.
pub fn nfrec_scores(model: &NaiveFusionModel, session: &Session) -> Result<ScoreVector> {
    let h = model.text_matrix()?;
    nfrec_scores_with(model, &h, session)
}

fn nfrec_scores_with(
    model: &NaiveFusionModel,
    h: &DenseMatrix,
    session: &Session,
) -> Result<ScoreVector> {
    let (y_id, y_text) = decompose_scores_with(model, h, session)?;
    Ok(ScoreVector(
        y_id.0.iter().zip(&y_text.0).map(|(a, b)| a + b).collect(),
    ))
}

/// Exact per-modality decomposition with `y = y_id + y_text` elementwise.
///
/// Concat: both factors restrict to their block, `y_id = ⟨X_i, mean X⟩` and
/// `y_text = ⟨H_i, mean H⟩`. Sum: the split is on the item side against the
/// shared session embedding `q = mean X + mean H`: `y_id = ⟨X_i, q⟩`,
/// `y_text = ⟨H_i, q⟩`.
pub fn decompose_scores(
    model: &NaiveFusionModel,
    session: &Session,
) -> Result<(ScoreVector, ScoreVector)> {
    let h = model.text_matrix()?;
    decompose_scores_with(model, &h, session)
}

fn decompose_scores_with(
    model: &NaiveFusionModel,
    h: &DenseMatrix,
    session: &Session,
) -> Result<(ScoreVector, ScoreVector)> {
    let (q_id, q_text) = model.component_means(session, h)?;
    let d = model.embedding_dim();
    let n = model.num_items;
    let mut y_id = Vec::with_capacity(n);
    let mut y_text = Vec::with_capacity(n);
    match model.fusion {
        FusionMode::Concat => {
            for i in 0..n {
                y_id.push(dot(model.id_table.weights.row(i), &q_id));
                y_text.push(dot(h.row(i), &q_text));
            }
        }
        FusionMode::Sum => {
            let q: Vec<f64> = (0..d).map(|j| q_id[j] + q_text[j]).collect();
            for i in 0..n {
                y_id.push(dot(model.id_table.weights.row(i), &q));
                y_text.push(dot(h.row(i), &q));
            }
        }
    }
    Ok((ScoreVector(y_id), ScoreVector(y_text)))
}

// ---------------------------------------------------------------------------
// Fusion training
// ---------------------------------------------------------------------------

/// Sampled-softmax loss on the fused score with gradients into the ID table
/// and the text projection.
fn nfrec_session_loss(
    model: &NaiveFusionModel,
    session: &Session,
    negatives: &NegativeSet,
    dropout: &DropoutCtx,
    grads: &mut Gradients,
) -> Result<f64> {
    let ctx = truncate_session(session, model.l_max).items;
    let mut involved: Vec<usize> = ctx.clone();
    involved.push(session.target);
    involved.extend_from_slice(&negatives.items);
    involved.sort_unstable();
    involved.dedup();

    let d = model.embedding_dim();
    // per involved item: X row, H row (training mode, cached for backward)
    let mut h_rows = Vec::with_capacity(involved.len());
    let mut caches = Vec::with_capacity(involved.len());
    for &it in &involved {
        let (row, cache) = model.text_proj.embed_row(&model.features, it, dropout, true);
        h_rows.push(row);
        caches.push(cache);
    }
    let local = |item: usize| involved.binary_search(&item).expect("involved item");

    // session means over the context
    let inv = 1.0 / ctx.len() as f64;
    let mut q_id = vec![0.0; d];
    let mut q_text = vec![0.0; d];
    for &it in &ctx {
        let xr = model.id_table.weights.row(it);
        let hr = &h_rows[local(it)];
        for j in 0..d {
            q_id[j] += xr[j] * inv;
            q_text[j] += hr[j] * inv;
        }
    }

    // fused candidate scores
    let mut candidates = Vec::with_capacity(1 + negatives.items.len());
    candidates.push(session.target);
    candidates.extend_from_slice(&negatives.items);
    let score_of = |item: usize| -> f64 {
        let xr = model.id_table.weights.row(item);
        let hr = &h_rows[local(item)];
        match model.fusion {
            FusionMode::Concat => dot(xr, &q_id) + dot(hr, &q_text),
            FusionMode::Sum => (0..d).map(|j| (xr[j] + hr[j]) * (q_id[j] + q_text[j])).sum(),
        }
    };
    let scores: Vec<f64> = candidates.iter().map(|&c| score_of(c)).collect();
    let lse = log_sum_exp(&scores);
    let loss = lse - scores[0];

    // backward: d_x / d_h per involved row, then q paths back to the context
    let mut d_x = DenseMatrix::zeros(involved.len(), d);
    let mut d_h = DenseMatrix::zeros(involved.len(), d);
    let mut d_q_id = vec![0.0; d];
    let mut d_q_text = vec![0.0; d];
    for (ci, &c) in candidates.iter().enumerate() {
        let p = (scores[ci] - lse).exp();
        let dy = p - if ci == 0 { 1.0 } else { 0.0 };
        if dy == 0.0 {
            continue;
        }
        let li = local(c);
        let xr = model.id_table.weights.row(c);
        let hr = &h_rows[li];
        match model.fusion {
            FusionMode::Concat => {
                let dxr = d_x.row_mut(li);
                for j in 0..d {
                    dxr[j] += dy * q_id[j];
                    d_q_id[j] += dy * xr[j];
                }
                let dhr = d_h.row_mut(li);
                for j in 0..d {
                    dhr[j] += dy * q_text[j];
                    d_q_text[j] += dy * hr[j];
                }
            }
            FusionMode::Sum => {
                // y = ⟨x+h, q_id+q_text⟩
                let dxr = d_x.row_mut(li);
                let dhr = d_h.row_mut(li);
                for j in 0..d {
                    let q = q_id[j] + q_text[j];
                    dxr[j] += dy * q;
                    dhr[j] += dy * q;
                    let z = xr[j] + hr[j];
                    d_q_id[j] += dy * z;
                    d_q_text[j] += dy * z;
                }
            }
        }
    }
    for &it in &ctx {
        let li = local(it);
        let dxr = d_x.row_mut(li);
        for j in 0..d {
            dxr[j] += d_q_id[j] * inv;
        }
        let dhr = d_h.row_mut(li);
        for j in 0..d {
            dhr[j] += d_q_text[j] * inv;
        }
    }

    {
        let g_x = grads.entry("id.embeddings", model.num_items, d);
        for (li, &it) in involved.iter().enumerate() {
            let src = d_x.row(li);
            let dst = g_x.row_mut(it);
            for j in 0..d {
                dst[j] += src[j];
            }
        }
    }
    for (li, cache) in caches.iter().enumerate() {
        model
            .text_proj
            .backward_row(&model.features, cache, d_h.row(li), grads, "text.");
    }
    Ok(loss)
}

/// One diagnostics row (the data behind the imbalance study): test Hits@20
/// of the fused score and of each component, plus per-session mean training
/// losses with the component score substituted into the same loss form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub epoch: usize,
    pub hits20_full: f64,
    pub hits20_id: f64,
    pub hits20_text: f64,
    pub loss_full: f64,
    pub loss_id: f64,
    pub loss_text: f64,
}

pub struct FusionRun {
    pub model: NaiveFusionModel,
    pub log: Vec<EpochRecord>,
    /// one row per epoch, including epoch 0 (untrained)
    pub diagnostics: Vec<DiagnosticRecord>,
    pub best_epoch: usize,
    pub best_val_hits20: f64,
    pub best_snapshot: Vec<(String, DenseMatrix)>,
}

fn fusion_diagnostics(
    model: &NaiveFusionModel,
    dataset: &SessionDataset,
    diag_negatives: &[NegativeSet],
    epoch: usize,
) -> Result<DiagnosticRecord> {
    let h = model.text_matrix()?;
    // test-split Hits@20 for the three score functions
    let decomposed: Vec<(ScoreVector, ScoreVector)> = dataset
        .test
        .iter()
        .map(|s| decompose_scores_with(model, &h, s))
        .collect::<Result<Vec<_>>>()?;
    let rank_with = |pick: &dyn Fn(&(ScoreVector, ScoreVector)) -> ScoreVector| -> Result<f64> {
        let mut ranks = Vec::with_capacity(decomposed.len());
        for (pair, s) in decomposed.iter().zip(&dataset.test) {
            ranks.push(crate::evalkit::target_rank(&pick(pair), s.target)?);
        }
        hits_at_n(&ranks, 20)
    };
    let hits20_full = rank_with(&|(a, b)| {
        ScoreVector(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
    })?;
    let hits20_id = rank_with(&|(a, _)| a.clone())?;
    let hits20_text = rank_with(&|(_, b)| b.clone())?;

    // mean training losses with shared fixed negatives
    let mut loss_full = 0.0;
    let mut loss_id = 0.0;
    let mut loss_text = 0.0;
    for (session, negs) in dataset.train.iter().zip(diag_negatives) {
        let (y_id, y_text) = decompose_scores_with(model, &h, session)?;
        let term = |scores: &ScoreVector| -> f64 {
            let mut cand = vec![scores.0[session.target]];
            cand.extend(negs.items.iter().map(|&n| scores.0[n]));
            log_sum_exp(&cand) - cand[0]
        };
        let y_full = ScoreVector(y_id.0.iter().zip(&y_text.0).map(|(a, b)| a + b).collect());
        loss_full += term(&y_full);
        loss_id += term(&y_id);
        loss_text += term(&y_text);
    }
    let n = dataset.train.len().max(1) as f64;
    Ok(DiagnosticRecord {
        epoch,
        hits20_full,
        hits20_id,
        hits20_text,
        loss_full: loss_full / n,
        loss_id: loss_id / n,
        loss_text: loss_text / n,
    })
}

/// Joint training of the fusion model with random negatives, logging the
/// component decomposition after every epoch (and at epoch 0, untrained).
pub fn train_nfrec(
    dataset: &SessionDataset,
    features: Arc<TextFeatureMatrix>,
    config: &TrainConfig,
    fusion: FusionMode,
) -> Result<FusionRun> {
    let num_items = dataset.catalog.num_items;
    config.validate(num_items)?;
    features.ensure_rows(num_items)?;
    let mut model = NaiveFusionModel::init(
        features,
        config,
        fusion,
        &mut ChaCha8Rng::seed_from_u64(mix_seed(config.seed, SEED_INIT_FUSION)),
    );
    let mut optimizer = AdamState::new(config.learning_rate);
    let neg_count = config.negative_count();

    // fixed per-session negatives for the diagnostic loss curves, so epochs
    // are comparable
    let mut diag_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0x31));
    let diag_negatives: Vec<NegativeSet> = dataset
        .train
        .iter()
        .map(|s| random_negatives(neg_count, num_items, s.target, &mut diag_rng))
        .collect::<Result<Vec<_>>>()?;

    let mut diagnostics = vec![fusion_diagnostics(&model, dataset, &diag_negatives, 0)?];
    let mut log = Vec::with_capacity(config.m_max);
    let mut best_epoch = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_snapshot = Vec::new();
    let has_val = !dataset.val.is_empty();

    for epoch in 1..=config.m_max {
        let start = Instant::now();
        let mut epoch_rng =
            ChaCha8Rng::seed_from_u64(mix_seed(mix_seed(config.seed, 0x23), (epoch - 1) as u64));
        let order = shuffled_indices(dataset.train.len(), &mut epoch_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut batch_grads = Gradients::new();
            for &si in batch {
                let session = &dataset.train[si];
                let drop_seed = epoch_rng.gen::<u64>();
                let negs = random_negatives(neg_count, num_items, session.target, &mut epoch_rng)?;
                let dropout = DropoutCtx::new(config.dropout, drop_seed);
                loss_sum += nfrec_session_loss(&model, session, &negs, &dropout, &mut batch_grads)?;
            }
            batch_grads.scale(1.0 / batch.len() as f64);
            let mut params = model.named_params_mut();
            optimizer.step(&mut params, &batch_grads)?;
        }

        // validation on the fused score
        let (val_hits20, val_ndcg20) = if has_val {
            let h = model.text_matrix()?;
            let ranks = ranks_for_sessions(&dataset.val, |s| nfrec_scores_with(&model, &h, s))?;
            (hits_at_n(&ranks, 20)?, ndcg_at_n(&ranks, 20)?)
        } else {
            (0.0, 0.0)
        };
        log.push(EpochRecord {
            epoch,
            trainee: "fused".to_string(),
            mode: "random".to_string(),
            mean_loss: loss_sum / dataset.train.len().max(1) as f64,
            val_hits20,
            val_ndcg20,
            seconds: start.elapsed().as_secs_f64(),
        });
        diagnostics.push(fusion_diagnostics(&model, dataset, &diag_negatives, epoch)?);

        let better = if has_val { val_hits20 > best_val } else { true };
        if better {
            best_val = val_hits20;
            best_epoch = epoch;
            best_snapshot = model.snapshot();
        }
    }

    Ok(FusionRun {
        model,
        log,
        diagnostics,
        best_epoch,
        best_val_hits20: best_val,
        best_snapshot,
    })
}

// ---------------------------------------------------------------------------
// Independent training
// ---------------------------------------------------------------------------

pub struct SingleRun {
    pub net: UniModalNetwork,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_hits20: f64,
    pub best_snapshot: Vec<(String, DenseMatrix)>,
    pub total_counterpart_calls: usize,
}

/// Train one uni-modal network for `m_max` epochs with random negatives
/// only; the other modality is never constructed or queried.
pub fn train_independent(
    modality: Modality,
    dataset: &SessionDataset,
    features: Option<Arc<TextFeatureMatrix>>,
    config: &TrainConfig,
    kind: SessionEncoderKind,
) -> Result<SingleRun> {
    let num_items = dataset.catalog.num_items;
    config.validate(num_items)?;
    let mut net = match modality {
        Modality::Id => UniModalNetwork::new_id(
            num_items,
            config.shape(),
            kind,
            &mut ChaCha8Rng::seed_from_u64(mix_seed(config.seed, SEED_INIT_ID)),
        ),
        Modality::Text => {
            let features = features
                .ok_or_else(|| Error::Config("text training requires a features file".into()))?;
            features.ensure_rows(num_items)?;
            UniModalNetwork::new_text(
                features,
                config.shape(),
                kind,
                &mut ChaCha8Rng::seed_from_u64(mix_seed(config.seed, SEED_INIT_TEXT)),
            )
        }
    };
    let mut optimizer = AdamState::new(config.learning_rate);
    let mut log = Vec::with_capacity(config.m_max);
    let mut best_epoch = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_snapshot = Vec::new();
    let mut total_counterpart_calls = 0usize;
    let has_val = !dataset.val.is_empty();
    let prefix = format!("{}.", modality.tag());

    for epoch in 1..=config.m_max {
        let phase = Phase {
            epoch,
            trainee: modality,
            negative_mode: NegativeMode::Random,
        };
        let mut epoch_rng = ChaCha8Rng::seed_from_u64(config.epoch_seed(modality, epoch - 1));
        let stats = train_epoch(
            &mut net,
            None,
            &mut optimizer,
            &dataset.train,
            &phase,
            config,
            false,
            MiningCachePolicy::PerBatch,
            &mut epoch_rng,
        )?;
        total_counterpart_calls += stats.counterpart_forward_calls;
        let (val_hits20, val_ndcg20) = crate::training::single_metrics(&net, &dataset.val)?;
        log.push(EpochRecord {
            epoch,
            trainee: modality.tag().to_string(),
            mode: "random".to_string(),
            mean_loss: stats.mean_loss,
            val_hits20,
            val_ndcg20,
            seconds: stats.seconds,
        });
        let better = if has_val { val_hits20 > best_val } else { true };
        if better {
            best_val = val_hits20;
            best_epoch = epoch;
            best_snapshot = snapshot_params(&net, &prefix);
        }
    }

    Ok(SingleRun {
        net,
        log,
        best_epoch,
        best_val_hits20: best_val,
        best_snapshot,
        total_counterpart_calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticSpec};
    use crate::numerics::finite_diff_check;
    use crate::scoring::uni_modal_scores;
    use crate::training::{run_alternating, AlternatingVariant, NegativeProvenance};

    fn small_features(num_items: usize, dim: usize, seed: u64) -> Arc<TextFeatureMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Arc::new(TextFeatureMatrix::new(DenseMatrix::uniform_init(num_items, dim, 1.0, &mut rng)).unwrap())
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            m_random: 1,
            m_gap: 1,
            m_max: 4,
            k1: 4,
            k2: 10,
            p: 2,
            d: 6,
            d_h: 5,
            l_max: 6,
            layers: 1,
            learning_rate: 0.02,
            dropout: 0.0,
            batch_size: 8,
            seed: 99,
            ..TrainConfig::default()
        }
    }

    fn small_dataset(seed: u64) -> (SessionDataset, Arc<TextFeatureMatrix>) {
        let spec = SyntheticSpec {
            num_items: 30,
            num_clusters: 5,
            train_sessions: 50,
            val_sessions: 10,
            test_sessions: 10,
            min_len: 1,
            max_len: 5,
            id_signal: 0.8,
            text_informativeness: 0.7,
            feature_dim: 12,
            seed,
        };
        let (ds, f) = generate_synthetic(&spec).unwrap();
        (ds, Arc::new(f))
    }

    #[test]
    fn decomposition_identity_holds_for_both_modes() {
        let (ds, features) = small_dataset(3);
        let config = small_config();
        for fusion in [FusionMode::Concat, FusionMode::Sum] {
            let model = NaiveFusionModel::init(
                features.clone(),
                &config,
                fusion,
                &mut ChaCha8Rng::seed_from_u64(5),
            );
            for session in ds.train.iter().take(100) {
                let y = nfrec_scores(&model, session).unwrap();
                let (y_id, y_text) = decompose_scores(&model, session).unwrap();
                for i in 0..y.len() {
                    let sum = y_id.0[i] + y_text.0[i];
                    assert!(
                        (y.0[i] - sum).abs() < 1e-10,
                        "{fusion:?} item {i}: {} vs {sum}",
                        y.0[i]
                    );
                }
            }
        }
    }

    #[test]
    fn concat_zero_text_pathway_equals_pure_id_scores() {
        let (ds, features) = small_dataset(4);
        let config = small_config();
        let mut model = NaiveFusionModel::init(
            features,
            &config,
            FusionMode::Concat,
            &mut ChaCha8Rng::seed_from_u64(6),
        );
        model.text_proj.hidden_weight = DenseMatrix::zeros(12, config.d_h);
        model.text_proj.hidden_bias = DenseMatrix::zeros(1, config.d_h);
        model.text_proj.output_weight = DenseMatrix::zeros(config.d_h, config.d);
        model.text_proj.output_bias = DenseMatrix::zeros(1, config.d);

        // a pure-ID network sharing the same table and mean encoder
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut id_net = UniModalNetwork::new_id(
            30,
            config.shape(),
            SessionEncoderKind::Mean,
            &mut rng,
        );
        if let crate::scoring::ItemEmbedder::Id(t) = &mut id_net.embedder {
            t.weights = model.id_table.weights.clone();
        }
        for session in ds.test.iter() {
            let fused = nfrec_scores(&model, session).unwrap();
            let pure = uni_modal_scores(&id_net, session).unwrap();
            for (a, b) in fused.0.iter().zip(&pure.0) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sum_mode_with_text_equal_id_quadruples_scores() {
        // H = X via identity projection over non-negative features equal to X
        let num_items = 8;
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = {
            let mut m = DenseMatrix::uniform_init(num_items, d, 1.0, &mut rng);
            m.data.iter_mut().for_each(|v| *v = v.abs());
            m
        };
        let features = Arc::new(TextFeatureMatrix::new(x.clone()).unwrap());
        let config = TrainConfig {
            d,
            d_h: d,
            ..small_config()
        };
        let mut model =
            NaiveFusionModel::init(features, &config, FusionMode::Sum, &mut rng);
        model.id_table.weights = x.clone();
        model.text_proj.hidden_weight = DenseMatrix::identity(d);
        model.text_proj.hidden_bias = DenseMatrix::zeros(1, d);
        model.text_proj.output_weight = DenseMatrix::identity(d);
        model.text_proj.output_bias = DenseMatrix::zeros(1, d);

        let mut id_net = UniModalNetwork::new_id(
            num_items,
            config.shape(),
            SessionEncoderKind::Mean,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        if let crate::scoring::ItemEmbedder::Id(t) = &mut id_net.embedder {
            t.weights = x.clone();
        }
        let session = Session::new(vec![0, 3, 5], 2);
        let fused = nfrec_scores(&model, &session).unwrap();
        let pure = uni_modal_scores(&id_net, &session).unwrap();
        for (a, b) in fused.0.iter().zip(&pure.0) {
            assert!((a - 4.0 * b).abs() < 1e-10, "{a} vs 4×{b}");
        }
    }

    #[test]
    fn decomposition_scalar_example() {
        // d=1: X_i=2, q_id=3 (single context item with X=3), H_i=1, q_text=4
        let num_items = 2;
        let features = Arc::new(
            TextFeatureMatrix::new(DenseMatrix::from_vec(2, 1, vec![1.0, 4.0])).unwrap(),
        );
        let config = TrainConfig {
            d: 1,
            d_h: 1,
            ..small_config()
        };
        let mut model = NaiveFusionModel::init(
            features,
            &config,
            FusionMode::Concat,
            &mut ChaCha8Rng::seed_from_u64(10),
        );
        model.id_table.weights = DenseMatrix::from_vec(2, 1, vec![2.0, 3.0]);
        // identity text projection: H = features
        model.text_proj.hidden_weight = DenseMatrix::identity(1);
        model.text_proj.hidden_bias = DenseMatrix::zeros(1, 1);
        model.text_proj.output_weight = DenseMatrix::identity(1);
        model.text_proj.output_bias = DenseMatrix::zeros(1, 1);
        let _ = num_items;

        // context = item 1: q_id = 3, q_text = 4; scored item 0: X=2, H=1
        let session = Session::new(vec![1], 0);
        let (y_id, y_text) = decompose_scores(&model, &session).unwrap();
        assert_eq!(y_id.0[0], 6.0);
        assert_eq!(y_text.0[0], 4.0);
        let y = nfrec_scores(&model, &session).unwrap();
        assert_eq!(y.0[0], 10.0);
    }

    #[test]
    fn fusion_loss_gradients_match_finite_differences() {
        for fusion in [FusionMode::Concat, FusionMode::Sum] {
            let (ds, features) = small_dataset(11);
            let config = small_config();
            let mut model = NaiveFusionModel::init(
                features,
                &config,
                fusion,
                &mut ChaCha8Rng::seed_from_u64(12),
            );
            let session = &ds.train[0];
            let negs = NegativeSet {
                items: (0..30).filter(|&i| i != session.target).take(6).collect(),
                provenance: NegativeProvenance::Random,
            };
            let dropout = DropoutCtx::new(0.2, 77);

            let mut grads = Gradients::new();
            let _ =
                nfrec_session_loss(&model, session, &negs, &dropout, &mut grads).unwrap();
            let shapes: Vec<(String, usize, usize)> = model
                .named_params()
                .into_iter()
                .map(|(n, m)| (n, m.rows, m.cols))
                .collect();
            let analytic = grads.flatten(&shapes);
            let theta: Vec<f64> = model
                .named_params()
                .iter()
                .flat_map(|(_, m)| m.data.iter().copied())
                .collect();

            let model_cell = std::cell::RefCell::new(&mut model);
            let err = finite_diff_check(&theta, &analytic, 1e-5, |flat| {
                let mut m = model_cell.borrow_mut();
                let mut offset = 0;
                for (_, p) in m.named_params_mut() {
                    let len = p.data.len();
                    p.data.copy_from_slice(&flat[offset..offset + len]);
                    offset += len;
                }
                let mut g = Gradients::new();
                nfrec_session_loss(&m, session, &negs, &dropout, &mut g).unwrap()
            })
            .unwrap();
            assert!(err <= 1e-4, "{fusion:?}: rel err {err}");
        }
    }

    #[test]
    fn fusion_training_logs_epoch_zero_and_schema() {
        let (ds, features) = small_dataset(13);
        let config = TrainConfig {
            m_max: 2,
            m_random: 1,
            ..small_config()
        };
        let run = train_nfrec(&ds, features, &config, FusionMode::Concat).unwrap();
        assert_eq!(run.diagnostics.len(), 3); // epoch 0 plus two epochs
        assert_eq!(run.diagnostics[0].epoch, 0);
        for rec in &run.diagnostics {
            assert!(rec.hits20_full >= 0.0 && rec.hits20_full <= 1.0);
            assert!(rec.hits20_id >= 0.0 && rec.hits20_id <= 1.0);
            assert!(rec.hits20_text >= 0.0 && rec.hits20_text <= 1.0);
            assert!(rec.loss_full.is_finite());
            assert!(rec.loss_id.is_finite());
            assert!(rec.loss_text.is_finite());
        }
        assert_eq!(run.log.len(), 2);
        assert!(run.log.iter().all(|l| l.trainee == "fused"));
    }

    #[test]
    fn independent_training_never_calls_counterpart() {
        let (ds, features) = small_dataset(14);
        let config = TrainConfig {
            m_max: 2,
            m_random: 1,
            ..small_config()
        };
        let run = train_independent(
            Modality::Text,
            &ds,
            Some(features),
            &config,
            SessionEncoderKind::Mean,
        )
        .unwrap();
        assert_eq!(run.total_counterpart_calls, 0);
        assert_eq!(run.log.len(), 2);
        assert!(run.log.iter().all(|l| l.mode == "random"));
    }

    #[test]
    fn independent_id_training_ignores_feature_contents() {
        let (ds, features_a) = small_dataset(15);
        let features_b = small_features(30, 12, 999);
        let config = TrainConfig {
            m_max: 2,
            m_random: 1,
            ..small_config()
        };
        let run_a = train_independent(Modality::Id, &ds, Some(features_a), &config, SessionEncoderKind::Mean).unwrap();
        let run_b = train_independent(Modality::Id, &ds, Some(features_b), &config, SessionEncoderKind::Mean).unwrap();
        assert_eq!(run_a.net.params_checksum(), run_b.net.params_checksum());
    }

    #[test]
    fn random_forced_alternating_equals_independent_training_bitwise() {
        let (ds, features) = small_dataset(16);
        let config = small_config(); // m_random=1, m_gap=1, m_max=4
        let alt = run_alternating(
            &ds,
            features.clone(),
            &config,
            SessionEncoderKind::Mean,
            SessionEncoderKind::Mean,
            AlternatingVariant::RandomNegatives,
            MiningCachePolicy::PerBatch,
        )
        .unwrap();
        assert_eq!(alt.total_counterpart_calls, 0);
        // schedule: epochs (id, text, id, text) → each modality trains twice
        let ind_config = TrainConfig {
            m_max: 2,
            m_random: 1,
            ..config.clone()
        };
        let id_run = train_independent(
            Modality::Id,
            &ds,
            None,
            &ind_config,
            SessionEncoderKind::Mean,
        )
        .unwrap();
        let text_run = train_independent(
            Modality::Text,
            &ds,
            Some(features),
            &ind_config,
            SessionEncoderKind::Mean,
        )
        .unwrap();
        assert_eq!(alt.id_net.params_checksum(), id_run.net.params_checksum());
        assert_eq!(alt.text_net.params_checksum(), text_run.net.params_checksum());
    }
}
