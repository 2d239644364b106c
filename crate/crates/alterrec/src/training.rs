//! Sampled-softmax ranking losses, cross-modal hard-negative mining and
//! positive augmentation, the alternating epoch schedule, and the epoch
//! driver that ties them together.
//!
//! Rank-window conventions are 1-based and inclusive on both ends:
//! `r[1:p]` is the top-p head, the hard window `r[k1:k2]` has `k2−k1+1`
//! entries before target removal.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::corpus::{shuffled_indices, Session};
use crate::error::{Error, Result};
use crate::numerics::{dot, log_sum_exp, mix_seed, AdamState, DenseMatrix, DropoutCtx, Gradients};
use crate::scoring::{rank_descending, scores_with_items, Modality, ModelShape, UniModalNetwork};

/// Seed-stream tags. Initialization and per-epoch streams are derived per
/// modality so that a network's trajectory does not depend on whether the
/// other network exists (the random-negatives run of the alternating trainer
/// is bitwise equal to independent training).
pub const SEED_INIT_ID: u64 = 0x11;
pub const SEED_INIT_TEXT: u64 = 0x12;
pub const SEED_INIT_FUSION: u64 = 0x13;
const SEED_EPOCH_ID: u64 = 0x21;
const SEED_EPOCH_TEXT: u64 = 0x22;

/// Every hyperparameter of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub m_random: usize,
    pub m_gap: usize,
    pub m_max: usize,
    /// hard-negative rank window, 1-based inclusive
    pub k1: usize,
    pub k2: usize,
    /// augmentation head size (ranks 1..p)
    pub p: usize,
    /// inference blend weight on the ID scores
    pub alpha: f64,
    /// augmentation loss weight
    pub beta: f64,
    pub d: usize,
    pub d_h: usize,
    pub l_max: usize,
    pub layers: usize,
    pub transformer_ffn: bool,
    pub learning_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Published defaults: m_random=2, m_gap=2, m_max=30, k1=6, k2=2000,
    /// p=5, α=0.5, β=0.5, d=300, 2 layers.
    fn default() -> Self {
        TrainConfig {
            m_random: 2,
            m_gap: 2,
            m_max: 30,
            k1: 6,
            k2: 2000,
            p: 5,
            alpha: 0.5,
            beta: 0.5,
            d: 300,
            d_h: 300,
            l_max: 50,
            layers: 2,
            transformer_ffn: false,
            learning_rate: 0.001,
            dropout: 0.1,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, num_items: usize) -> Result<()> {
        if self.p < 1 {
            return Err(Error::Config("p must be at least 1".into()));
        }
        if !(self.p < self.k1) {
            return Err(Error::Config(format!(
                "p must be < k1 (got p={}, k1={})",
                self.p, self.k1
            )));
        }
        if !(self.k1 <= self.k2) {
            return Err(Error::Config(format!(
                "k1 must be <= k2 (got k1={}, k2={})",
                self.k1, self.k2
            )));
        }
        if self.k2 > num_items {
            return Err(Error::Config(format!(
                "k2={} exceeds catalog size {num_items}",
                self.k2
            )));
        }
        if 2 * self.m_random > self.m_max {
            return Err(Error::Config(format!(
                "2*m_random must be <= m_max (got m_random={}, m_max={})",
                self.m_random, self.m_max
            )));
        }
        if self.m_gap < 1 {
            return Err(Error::Config("m_gap must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must be in [0,1], got {}", self.alpha)));
        }
        if self.beta < 0.0 {
            return Err(Error::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0,1), got {}",
                self.dropout
            )));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size < 1 || self.d < 1 || self.d_h < 1 || self.l_max < 1 || self.layers < 1 {
            return Err(Error::Config(
                "batch_size, d, d_h, l_max, and layers must all be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            d: self.d,
            d_h: self.d_h,
            l_max: self.l_max,
            layers: self.layers,
            transformer_ffn: self.transformer_ffn,
        }
    }

    /// Size of every negative set (hard window width).
    pub fn negative_count(&self) -> usize {
        self.k2 - self.k1 + 1
    }

    pub fn epoch_seed(&self, trainee: Modality, per_trainee_epoch: usize) -> u64 {
        let tag = match trainee {
            Modality::Id => SEED_EPOCH_ID,
            Modality::Text => SEED_EPOCH_TEXT,
        };
        mix_seed(mix_seed(self.seed, tag), per_trainee_epoch as u64)
    }
}

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeMode {
    Random,
    Hard,
}

impl NegativeMode {
    pub fn tag(&self) -> &'static str {
        match self {
            NegativeMode::Random => "random",
            NegativeMode::Hard => "hard",
        }
    }
}

/// One epoch's slot in the alternating schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase {
    pub epoch: usize,
    pub trainee: Modality,
    pub negative_mode: NegativeMode,
}

/// Alternating schedule: `m_random` epochs of (ID, random), the same of
/// (Text, random), then blocks of `m_gap` hard epochs alternating ID-first.
/// The hard loop runs exactly `m_max − 2·m_random` times, so the whole run
/// is `m_max` epochs.
pub fn schedule_phase(epoch: usize, config: &TrainConfig) -> Result<Phase> {
    if epoch < 1 || epoch > config.m_max {
        return Err(Error::Invalid(format!(
            "epoch {epoch} outside schedule range [1, {}]",
            config.m_max
        )));
    }
    let (trainee, negative_mode) = if epoch <= config.m_random {
        (Modality::Id, NegativeMode::Random)
    } else if epoch <= 2 * config.m_random {
        (Modality::Text, NegativeMode::Random)
    } else {
        let i = epoch - 2 * config.m_random - 1;
        if i % (2 * config.m_gap) < config.m_gap {
            (Modality::Id, NegativeMode::Hard)
        } else {
            (Modality::Text, NegativeMode::Hard)
        }
    };
    Ok(Phase {
        epoch,
        trainee,
        negative_mode,
    })
}

// ---------------------------------------------------------------------------
// Negative mining
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeProvenance {
    Random,
    HardFromId,
    HardFromText,
}

/// A per-session negative sample set: no duplicates, never contains the
/// session's target.
#[derive(Debug, Clone)]
pub struct NegativeSet {
    pub items: Vec<usize>,
    pub provenance: NegativeProvenance,
}

/// Items at 1-based ranks `k1..=k2` of the counterpart ranking, minus the
/// target when it falls inside the window.
pub fn select_hard_negatives(
    ranking: &[usize],
    k1: usize,
    k2: usize,
    target: usize,
    provenance: NegativeProvenance,
) -> Result<NegativeSet> {
    if k1 < 1 || k1 > k2 || k2 > ranking.len() {
        return Err(Error::Invalid(format!(
            "rank window [{k1}, {k2}] invalid for a ranking of {}",
            ranking.len()
        )));
    }
    let items = ranking[k1 - 1..k2]
        .iter()
        .copied()
        .filter(|&it| it != target)
        .collect();
    Ok(NegativeSet { items, provenance })
}

/// Items at ranks 1..=p of the counterpart ranking, excluding the true
/// target; used as extra ground-truth positives.
pub fn select_positive_augmentations(ranking: &[usize], p: usize, target: usize) -> Vec<usize> {
    ranking[..p.min(ranking.len())]
        .iter()
        .copied()
        .filter(|&it| it != target)
        .collect()
}

/// `count` distinct items drawn uniformly without replacement from the
/// catalog minus the target.
pub fn random_negatives(
    count: usize,
    catalog_size: usize,
    target: usize,
    rng: &mut ChaCha8Rng,
) -> Result<NegativeSet> {
    if count > catalog_size.saturating_sub(1) {
        return Err(Error::Invalid(format!(
            "cannot draw {count} distinct negatives from a catalog of {catalog_size} minus the target"
        )));
    }
    // sample from the complement of {target} by index remapping
    let items = rand::seq::index::sample(rng, catalog_size - 1, count)
        .into_iter()
        .map(|i| if i >= target { i + 1 } else { i })
        .collect();
    Ok(NegativeSet {
        items,
        provenance: NegativeProvenance::Random,
    })
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Shared core: a weighted sum of softmax cross-entropy terms, each over
/// {one positive} ∪ negatives, all sharing one session embedding. Parameter
/// gradients are accumulated into `grads`; returns the loss value.
fn weighted_terms_loss(
    net: &UniModalNetwork,
    session: &Session,
    positives: &[(usize, f64)],
    negatives: &NegativeSet,
    dropout: &DropoutCtx,
    train: bool,
    grads: &mut Gradients,
) -> Result<f64> {
    let truncated_ctx = crate::encoders::truncate_session(session, net.l_max);
    let involved = truncated_ctx
        .items
        .iter()
        .copied()
        .chain(positives.iter().map(|&(it, _)| it))
        .chain(negatives.items.iter().copied());
    let set = net.embed_items(involved, dropout, train);
    let (q, cache) = net.session_forward(session, &set, dropout, train)?;

    let d = set.rows.cols;
    let mut d_rows = DenseMatrix::zeros(set.rows.rows, d);
    let mut d_q = vec![0.0; d];
    let mut total = 0.0;

    for &(positive, weight) in positives {
        // scores over {positive} ∪ negatives
        let mut candidates = Vec::with_capacity(1 + negatives.items.len());
        candidates.push(positive);
        candidates.extend_from_slice(&negatives.items);
        let scores: Vec<f64> = candidates.iter().map(|&c| dot(set.row(c), &q)).collect();
        let lse = log_sum_exp(&scores);
        total += weight * (lse - scores[0]);
        for (ci, &c) in candidates.iter().enumerate() {
            let p = (scores[ci] - lse).exp();
            let dy = weight * (p - if ci == 0 { 1.0 } else { 0.0 });
            if dy == 0.0 {
                continue;
            }
            let local = set.local(c);
            let row = set.rows.row(local);
            let dst = d_rows.row_mut(local);
            for j in 0..d {
                dst[j] += dy * q[j];
                d_q[j] += dy * row[j];
            }
        }
    }

    net.session_backward(&d_q, &set, &cache, &mut d_rows, grads);
    net.embed_items_backward(&set, &d_rows, grads);
    Ok(total)
}

/// `L = −log( e^{y_t} / (e^{y_t} + Σ_j e^{y_j}) )` with training-mode scores
/// from the trainee network; gradients accumulate into `grads`.
pub fn sampled_softmax_loss(
    net: &UniModalNetwork,
    session: &Session,
    negatives: &NegativeSet,
    dropout: &DropoutCtx,
    train: bool,
    grads: &mut Gradients,
) -> Result<f64> {
    if negatives.items.contains(&session.target) {
        return Err(Error::Invalid(
            "negative set must not contain the session target".into(),
        ));
    }
    weighted_terms_loss(
        net,
        session,
        &[(session.target, 1.0)],
        negatives,
        dropout,
        train,
        grads,
    )
}

/// Augmented loss `L_a = L(target) + β·Σ_k L(aug_k)`, each term a softmax
/// over {that positive} ∪ the same negatives.
pub fn augmented_loss(
    net: &UniModalNetwork,
    session: &Session,
    negatives: &NegativeSet,
    augmentations: &[usize],
    beta: f64,
    dropout: &DropoutCtx,
    train: bool,
    grads: &mut Gradients,
) -> Result<f64> {
    if negatives.items.contains(&session.target) {
        return Err(Error::Invalid(
            "negative set must not contain the session target".into(),
        ));
    }
    for &a in augmentations {
        if a == session.target {
            return Err(Error::Invalid(
                "augmentations must not contain the session target".into(),
            ));
        }
        if negatives.items.contains(&a) {
            return Err(Error::Invalid(format!(
                "augmentation {a} overlaps the negative set"
            )));
        }
    }
    let mut positives = Vec::with_capacity(1 + augmentations.len());
    positives.push((session.target, 1.0));
    positives.extend(augmentations.iter().map(|&a| (a, beta)));
    weighted_terms_loss(net, session, &positives, negatives, dropout, train, grads)
}

// ---------------------------------------------------------------------------
// Epoch driver
// ---------------------------------------------------------------------------

/// Whether hard-mining recomputes the counterpart's item embeddings per
/// mini-batch or caches them for the whole epoch. The counterpart is frozen
/// within an epoch, so both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiningCachePolicy {
    #[default]
    PerBatch,
    PerEpoch,
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub negatives_per_session: f64,
    pub seconds: f64,
    /// counterpart full-catalog forwards (0 in Random mode)
    pub counterpart_forward_calls: usize,
}

/// One epoch over the training split: shuffles sessions, mines negatives
/// (from the frozen counterpart in Hard mode), accumulates mean-of-batch
/// gradients, and applies one optimizer step per batch. The counterpart is
/// read-only throughout.
#[allow(clippy::too_many_arguments)]
pub fn train_epoch(
    trainee: &mut UniModalNetwork,
    counterpart: Option<&UniModalNetwork>,
    optimizer: &mut AdamState,
    sessions: &[Session],
    phase: &Phase,
    config: &TrainConfig,
    augmented: bool,
    mining: MiningCachePolicy,
    epoch_rng: &mut ChaCha8Rng,
) -> Result<EpochStats> {
    let start = Instant::now();
    let neg_count = config.negative_count();
    let num_items = trainee.num_items;
    let order = shuffled_indices(sessions.len(), epoch_rng);

    if phase.negative_mode == NegativeMode::Hard && counterpart.is_none() {
        return Err(Error::Invalid("hard mode requires a counterpart network".into()));
    }

    let mut counterpart_matrix: Option<DenseMatrix> = None;
    let mut counterpart_calls = 0usize;
    let mut loss_sum = 0.0;
    let mut neg_sum = 0usize;

    for batch in order.chunks(config.batch_size) {
        // per-session negative sets and dropout seeds, drawn in batch order
        let mut prepared: Vec<(usize, NegativeSet, Vec<usize>, u64)> =
            Vec::with_capacity(batch.len());
        match phase.negative_mode {
            NegativeMode::Random => {
                for &si in batch {
                    let drop_seed = epoch_rng.gen::<u64>();
                    let negs =
                        random_negatives(neg_count, num_items, sessions[si].target, epoch_rng)?;
                    prepared.push((si, negs, Vec::new(), drop_seed));
                }
            }
            NegativeMode::Hard => {
                let cp = counterpart.expect("checked above");
                if counterpart_matrix.is_none() || mining == MiningCachePolicy::PerBatch {
                    counterpart_matrix = Some(cp.item_embedding_matrix(&DropoutCtx::off(), false)?);
                }
                let cp_matrix = counterpart_matrix.as_ref().unwrap();
                let provenance = match cp.modality() {
                    Modality::Id => NegativeProvenance::HardFromId,
                    Modality::Text => NegativeProvenance::HardFromText,
                };
                let rankings: Vec<Vec<usize>> = batch
                    .par_iter()
                    .map(|&si| {
                        let scores = scores_with_items(cp, cp_matrix, &sessions[si])?;
                        rank_descending(&scores)
                    })
                    .collect::<Result<Vec<_>>>()?;
                counterpart_calls += batch.len();
                for (&si, ranking) in batch.iter().zip(&rankings) {
                    let drop_seed = epoch_rng.gen::<u64>();
                    let target = sessions[si].target;
                    let negs =
                        select_hard_negatives(ranking, config.k1, config.k2, target, provenance)?;
                    let augs = if augmented {
                        select_positive_augmentations(ranking, config.p, target)
                    } else {
                        Vec::new()
                    };
                    prepared.push((si, negs, augs, drop_seed));
                }
            }
        }

        let mut batch_grads = Gradients::new();
        for (si, negs, augs, drop_seed) in &prepared {
            let dropout = DropoutCtx::new(config.dropout, *drop_seed);
            let session = &sessions[*si];
            neg_sum += negs.items.len();
            let loss = if augs.is_empty() {
                sampled_softmax_loss(trainee, session, negs, &dropout, true, &mut batch_grads)?
            } else {
                augmented_loss(
                    trainee,
                    session,
                    negs,
                    augs,
                    config.beta,
                    &dropout,
                    true,
                    &mut batch_grads,
                )?
            };
            loss_sum += loss;
        }
        batch_grads.scale(1.0 / prepared.len() as f64);
        let mut params = trainee.named_params_mut();
        optimizer.step(&mut params, &batch_grads)?;
    }

    Ok(EpochStats {
        mean_loss: loss_sum / sessions.len().max(1) as f64,
        negatives_per_session: neg_sum as f64 / sessions.len().max(1) as f64,
        seconds: start.elapsed().as_secs_f64(),
        counterpart_forward_calls: counterpart_calls,
    })
}

/// One line of `train_log.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub trainee: String,
    pub mode: String,
    pub mean_loss: f64,
    pub val_hits20: f64,
    pub val_ndcg20: f64,
    pub seconds: f64,
}

// ---------------------------------------------------------------------------
// Alternating runner
// ---------------------------------------------------------------------------

/// Which flavor of the alternating trainer to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlternatingVariant {
    /// hard negatives, no augmentation
    Standard,
    /// hard negatives plus top-p positive augmentation
    Augmented,
    /// same schedule but every epoch uses random negatives (ablation);
    /// equivalent to training the two networks independently
    RandomNegatives,
}

pub struct AlternatingRun {
    pub id_net: UniModalNetwork,
    pub text_net: UniModalNetwork,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_hits20: f64,
    /// both networks' parameters at the best-validation epoch, prefixed
    /// `id.` / `text.`
    pub best_snapshot: Vec<(String, DenseMatrix)>,
    pub total_counterpart_calls: usize,
}

/// Snapshot network parameters under a name prefix.
pub fn snapshot_params(net: &UniModalNetwork, prefix: &str) -> Vec<(String, DenseMatrix)> {
    net.named_params()
        .into_iter()
        .map(|(name, m)| (format!("{prefix}{name}"), m.clone()))
        .collect()
}

/// Restore parameters from a prefixed snapshot.
pub fn restore_params(net: &mut UniModalNetwork, prefix: &str, snapshot: &[(String, DenseMatrix)]) -> Result<()> {
    for (name, param) in net.named_params_mut() {
        let key = format!("{prefix}{name}");
        let stored = snapshot
            .iter()
            .find(|(n, _)| *n == key)
            .ok_or_else(|| Error::Invalid(format!("snapshot missing tensor {key}")))?;
        if !param.same_shape(&stored.1) {
            return Err(Error::Shape(format!(
                "tensor {key}: expected {}x{}, snapshot has {}x{}",
                param.rows, param.cols, stored.1.rows, stored.1.cols
            )));
        }
        param.data.copy_from_slice(&stored.1.data);
    }
    Ok(())
}

/// Validation Hits@20 / NDCG@20 of the α-blend of two networks.
pub fn blended_metrics(
    id_net: &UniModalNetwork,
    text_net: &UniModalNetwork,
    alpha: f64,
    sessions: &[Session],
) -> Result<(f64, f64)> {
    if sessions.is_empty() {
        return Ok((0.0, 0.0));
    }
    let id_embs = id_net.item_embedding_matrix(&DropoutCtx::off(), false)?;
    let text_embs = text_net.item_embedding_matrix(&DropoutCtx::off(), false)?;
    let ranks = crate::evalkit::ranks_for_sessions(sessions, |s| {
        let y_id = scores_with_items(id_net, &id_embs, s)?;
        let y_text = scores_with_items(text_net, &text_embs, s)?;
        crate::scoring::combined_scores(&y_id, &y_text, alpha)
    })?;
    Ok((
        crate::evalkit::hits_at_n(&ranks, 20)?,
        crate::evalkit::ndcg_at_n(&ranks, 20)?,
    ))
}

/// Hits@20 / NDCG@20 of a single network.
pub fn single_metrics(net: &UniModalNetwork, sessions: &[Session]) -> Result<(f64, f64)> {
    if sessions.is_empty() {
        return Ok((0.0, 0.0));
    }
    let embs = net.item_embedding_matrix(&DropoutCtx::off(), false)?;
    let ranks =
        crate::evalkit::ranks_for_sessions(sessions, |s| scores_with_items(net, &embs, s))?;
    Ok((
        crate::evalkit::hits_at_n(&ranks, 20)?,
        crate::evalkit::ndcg_at_n(&ranks, 20)?,
    ))
}

/// Full alternating run over `m_max` epochs. The best-validation (Hits@20 of
/// the α-blend) parameter snapshot is kept; the schedule itself is never
/// altered by validation results.
pub fn run_alternating(
    dataset: &crate::corpus::SessionDataset,
    features: std::sync::Arc<crate::corpus::TextFeatureMatrix>,
    config: &TrainConfig,
    id_kind: crate::encoders::SessionEncoderKind,
    text_kind: crate::encoders::SessionEncoderKind,
    variant: AlternatingVariant,
    mining: MiningCachePolicy,
) -> Result<AlternatingRun> {
    let num_items = dataset.catalog.num_items;
    config.validate(num_items)?;
    features.ensure_rows(num_items)?;

    let shape = config.shape();
    let mut id_net = UniModalNetwork::new_id(
        num_items,
        shape,
        id_kind,
        &mut ChaCha8Rng::seed_from_u64(mix_seed(config.seed, SEED_INIT_ID)),
    );
    let mut text_net = UniModalNetwork::new_text(
        features,
        shape,
        text_kind,
        &mut ChaCha8Rng::seed_from_u64(mix_seed(config.seed, SEED_INIT_TEXT)),
    );
    let mut id_opt = AdamState::new(config.learning_rate);
    let mut text_opt = AdamState::new(config.learning_rate);
    let mut per_trainee = [0usize; 2];

    let mut log = Vec::with_capacity(config.m_max);
    let mut best_epoch = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_snapshot = Vec::new();
    let mut total_counterpart_calls = 0usize;
    let has_val = !dataset.val.is_empty();

    for epoch in 1..=config.m_max {
        let mut phase = schedule_phase(epoch, config)?;
        if variant == AlternatingVariant::RandomNegatives {
            phase.negative_mode = NegativeMode::Random;
        }
        let augmented = variant == AlternatingVariant::Augmented
            && phase.negative_mode == NegativeMode::Hard;
        let trainee_idx = match phase.trainee {
            Modality::Id => 0,
            Modality::Text => 1,
        };
        let mut epoch_rng =
            ChaCha8Rng::seed_from_u64(config.epoch_seed(phase.trainee, per_trainee[trainee_idx]));
        per_trainee[trainee_idx] += 1;

        let stats = match phase.trainee {
            Modality::Id => train_epoch(
                &mut id_net,
                (phase.negative_mode == NegativeMode::Hard).then_some(&text_net),
                &mut id_opt,
                &dataset.train,
                &phase,
                config,
                augmented,
                mining,
                &mut epoch_rng,
            )?,
            Modality::Text => train_epoch(
                &mut text_net,
                (phase.negative_mode == NegativeMode::Hard).then_some(&id_net),
                &mut text_opt,
                &dataset.train,
                &phase,
                config,
                augmented,
                mining,
                &mut epoch_rng,
            )?,
        };
        total_counterpart_calls += stats.counterpart_forward_calls;

        let (val_hits20, val_ndcg20) =
            blended_metrics(&id_net, &text_net, config.alpha, &dataset.val)?;
        log.push(EpochRecord {
            epoch,
            trainee: phase.trainee.tag().to_string(),
            mode: phase.negative_mode.tag().to_string(),
            mean_loss: stats.mean_loss,
            val_hits20,
            val_ndcg20,
            seconds: stats.seconds,
        });

        // without a validation split the final epoch is kept
        let better = if has_val { val_hits20 > best_val } else { true };
        if better {
            best_val = val_hits20;
            best_epoch = epoch;
            best_snapshot = snapshot_params(&id_net, "id.");
            best_snapshot.extend(snapshot_params(&text_net, "text."));
        }
    }

    Ok(AlternatingRun {
        id_net,
        text_net,
        log,
        best_epoch,
        best_val_hits20: best_val,
        best_snapshot,
        total_counterpart_calls,
    })
}
