//! Library-level implementations of the CLI commands. The binary is a thin
//! argument parser over these; tests and examples call them directly.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::baselines::{train_independent, train_nfrec, FusionMode, NaiveFusionModel};
use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::RunConfig;
use crate::corpus::{
    atomic_write, generate_synthetic, load_sessions, load_text_features, popularity_counts_mode,
    save_text_features, write_sessions, PopularityMode, Session, SessionDataset, SyntheticSpec,
    TextFeatureMatrix,
};
use crate::encoders::SessionEncoderKind;
use crate::error::{Error, Result};
use crate::evalkit::{
    hits_at_n, long_tail_report, ndcg_at_n, ranks_for_sessions, sweep, sweep_csv, RankingReport,
    SweepParam, SweepRow,
};
use crate::numerics::{DenseMatrix, DropoutCtx};
use crate::scoring::{combined_scores, scores_with_items, Modality, UniModalNetwork};
use crate::training::{
    restore_params, run_alternating, AlternatingVariant, EpochRecord, TrainConfig,
};

/// The seven training variants behind `train --mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    AlterRec,
    AlterRecAug,
    AlterRecRandom,
    IdOnly,
    TextOnly,
    NfrecSum,
    NfrecConcat,
}

impl TrainMode {
    pub fn tag(&self) -> &'static str {
        match self {
            TrainMode::AlterRec => "alterrec",
            TrainMode::AlterRecAug => "alterrec-aug",
            TrainMode::AlterRecRandom => "alterrec-random",
            TrainMode::IdOnly => "id-only",
            TrainMode::TextOnly => "text-only",
            TrainMode::NfrecSum => "nfrec-sum",
            TrainMode::NfrecConcat => "nfrec-concat",
        }
    }

    pub fn needs_text(&self) -> bool {
        !matches!(self, TrainMode::IdOnly)
    }
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "alterrec" => TrainMode::AlterRec,
            "alterrec-aug" => TrainMode::AlterRecAug,
            "alterrec-random" => TrainMode::AlterRecRandom,
            "id-only" => TrainMode::IdOnly,
            "text-only" => TrainMode::TextOnly,
            "nfrec-sum" => TrainMode::NfrecSum,
            "nfrec-concat" => TrainMode::NfrecConcat,
            other => {
                return Err(Error::Invalid(format!(
                    "unknown mode '{other}' (expected one of alterrec, alterrec-aug, \
                     alterrec-random, id-only, text-only, nfrec-sum, nfrec-concat)"
                )))
            }
        })
    }
}

/// Config blob stored inside every checkpoint; `load_model` rejects any
/// mismatch against the catalog or feature file it is evaluated with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub mode: String,
    pub num_items: usize,
    pub d: usize,
    pub d_h: usize,
    pub d_text: Option<usize>,
    pub l_max: usize,
    pub layers: usize,
    pub transformer_ffn: bool,
    pub id_encoder: Option<SessionEncoderKind>,
    pub text_encoder: Option<SessionEncoderKind>,
    pub fusion: Option<FusionMode>,
    pub alpha: f64,
    pub best_epoch: usize,
}

/// A loadable trained model of any mode.
pub enum TrainedModel {
    Pair {
        id_net: UniModalNetwork,
        text_net: UniModalNetwork,
    },
    Single(UniModalNetwork),
    Fusion(NaiveFusionModel),
}

impl TrainedModel {
    /// Target ranks over a session list (full-catalog scoring). For `Pair`
    /// the two score vectors blend with `alpha`.
    pub fn ranks(&self, sessions: &[Session], alpha: f64) -> Result<Vec<usize>> {
        match self {
            TrainedModel::Pair { id_net, text_net } => {
                let id_embs = id_net.item_embedding_matrix(&DropoutCtx::off(), false)?;
                let text_embs = text_net.item_embedding_matrix(&DropoutCtx::off(), false)?;
                ranks_for_sessions(sessions, |s| {
                    let y_id = scores_with_items(id_net, &id_embs, s)?;
                    let y_text = scores_with_items(text_net, &text_embs, s)?;
                    combined_scores(&y_id, &y_text, alpha)
                })
            }
            TrainedModel::Single(net) => {
                let embs = net.item_embedding_matrix(&DropoutCtx::off(), false)?;
                ranks_for_sessions(sessions, |s| scores_with_items(net, &embs, s))
            }
            TrainedModel::Fusion(model) => {
                ranks_for_sessions(sessions, |s| crate::baselines::nfrec_scores(model, s))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

pub struct GenDataSummary {
    pub out_dir: PathBuf,
    pub num_items: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub feature_dim: usize,
}

/// Generate a synthetic corpus and write `train/val/test.jsonl`,
/// `catalog.json`, and `features.itfx` into `out_dir`.
pub fn cmd_gen_data(spec: &SyntheticSpec, out_dir: impl AsRef<Path>) -> Result<GenDataSummary> {
    let out_dir = out_dir.as_ref();
    let (dataset, features) = generate_synthetic(spec)?;
    write_sessions(out_dir, &dataset)?;
    save_text_features(out_dir.join("features.itfx"), &features)?;
    Ok(GenDataSummary {
        out_dir: out_dir.to_path_buf(),
        num_items: dataset.catalog.num_items,
        train: dataset.train.len(),
        val: dataset.val.len(),
        test: dataset.test.len(),
        feature_dim: features.dim(),
    })
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub struct TrainOutcome {
    pub checkpoint_path: PathBuf,
    pub log_path: PathBuf,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_hits20: f64,
}

fn load_features_for(config: &RunConfig, mode: TrainMode) -> Result<Option<Arc<TextFeatureMatrix>>> {
    if !mode.needs_text() {
        return Ok(None);
    }
    let path = config.features_file.as_ref().ok_or_else(|| {
        Error::Config(format!(
            "mode '{}' needs text features but the config has no features_file",
            mode.tag()
        ))
    })?;
    Ok(Some(Arc::new(load_text_features(path)?)))
}

fn write_log(path: &Path, log: &[EpochRecord]) -> Result<()> {
    let mut out = String::new();
    for record in log {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

fn meta_for(
    config: &RunConfig,
    mode: TrainMode,
    num_items: usize,
    d_text: Option<usize>,
    best_epoch: usize,
) -> CheckpointMeta {
    let t = &config.train;
    CheckpointMeta {
        mode: mode.tag().to_string(),
        num_items,
        d: t.d,
        d_h: t.d_h,
        d_text,
        l_max: t.l_max,
        layers: t.layers,
        transformer_ffn: t.transformer_ffn,
        id_encoder: match mode {
            TrainMode::TextOnly | TrainMode::NfrecSum | TrainMode::NfrecConcat => None,
            _ => Some(config.id_encoder),
        },
        text_encoder: match mode {
            TrainMode::IdOnly | TrainMode::NfrecSum | TrainMode::NfrecConcat => None,
            _ => Some(config.text_encoder),
        },
        fusion: match mode {
            TrainMode::NfrecSum => Some(FusionMode::Sum),
            TrainMode::NfrecConcat => Some(FusionMode::Concat),
            _ => None,
        },
        alpha: t.alpha,
        best_epoch,
    }
}

/// Run one of the seven trainers and write `train_log.jsonl` plus the
/// best-validation checkpoint `best.ckpt` under the config's model dir.
pub fn cmd_train(config: &RunConfig, mode: TrainMode) -> Result<TrainOutcome> {
    let dataset = load_sessions(&config.sessions_dir)?;
    let num_items = dataset.catalog.num_items;
    config.train.validate(num_items)?;
    let features = load_features_for(config, mode)?;
    if let Some(f) = &features {
        f.ensure_rows(num_items)?;
    }
    let d_text = features.as_ref().map(|f| f.dim());

    let (log, best_epoch, best_val, snapshot) = match mode {
        TrainMode::AlterRec | TrainMode::AlterRecAug | TrainMode::AlterRecRandom => {
            let variant = match mode {
                TrainMode::AlterRec => AlternatingVariant::Standard,
                TrainMode::AlterRecAug => AlternatingVariant::Augmented,
                _ => AlternatingVariant::RandomNegatives,
            };
            let run = run_alternating(
                &dataset,
                features.clone().expect("checked above"),
                &config.train,
                config.id_encoder,
                config.text_encoder,
                variant,
                config.mining_cache,
            )?;
            (run.log, run.best_epoch, run.best_val_hits20, run.best_snapshot)
        }
        TrainMode::IdOnly => {
            let run = train_independent(
                Modality::Id,
                &dataset,
                None,
                &config.train,
                config.id_encoder,
            )?;
            (run.log, run.best_epoch, run.best_val_hits20, run.best_snapshot)
        }
        TrainMode::TextOnly => {
            let run = train_independent(
                Modality::Text,
                &dataset,
                features.clone(),
                &config.train,
                config.text_encoder,
            )?;
            (run.log, run.best_epoch, run.best_val_hits20, run.best_snapshot)
        }
        TrainMode::NfrecSum | TrainMode::NfrecConcat => {
            let fusion = if mode == TrainMode::NfrecSum {
                FusionMode::Sum
            } else {
                FusionMode::Concat
            };
            let run = train_nfrec(
                &dataset,
                features.clone().expect("checked above"),
                &config.train,
                fusion,
            )?;
            (run.log, run.best_epoch, run.best_val_hits20, run.best_snapshot)
        }
    };

    std::fs::create_dir_all(&config.model_dir).map_err(|e| Error::io(&config.model_dir, e))?;
    let log_path = config.model_dir.join("train_log.jsonl");
    write_log(&log_path, &log)?;
    let checkpoint_path = config.model_dir.join("best.ckpt");
    let meta = meta_for(config, mode, num_items, d_text, best_epoch);
    let meta_json = serde_json::to_string(&meta).expect("meta serializes");
    save_checkpoint(&checkpoint_path, &meta_json, &snapshot)?;

    Ok(TrainOutcome {
        checkpoint_path,
        log_path,
        log,
        best_epoch,
        best_val_hits20: best_val,
    })
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Rebuild a trained model from a checkpoint, validating it against the
/// catalog (and feature file, when the model has a text pathway).
pub fn load_model(
    checkpoint_path: impl AsRef<Path>,
    num_items: usize,
    features: Option<Arc<TextFeatureMatrix>>,
) -> Result<(TrainedModel, CheckpointMeta)> {
    let path = checkpoint_path.as_ref();
    let ckpt = load_checkpoint(path)?;
    let meta: CheckpointMeta =
        serde_json::from_str(&ckpt.config_json).map_err(|e| Error::BadFormat {
            path: path.to_path_buf(),
            message: format!("config blob: {e}"),
        })?;
    if meta.num_items != num_items {
        return Err(Error::Config(format!(
            "checkpoint was trained on {} items but the catalog has {num_items}",
            meta.num_items
        )));
    }
    let shape = crate::scoring::ModelShape {
        d: meta.d,
        d_h: meta.d_h,
        l_max: meta.l_max,
        layers: meta.layers,
        transformer_ffn: meta.transformer_ffn,
    };
    let need_features = || -> Result<Arc<TextFeatureMatrix>> {
        let f = features.clone().ok_or_else(|| {
            Error::Config(format!(
                "checkpoint mode '{}' needs a features file for evaluation",
                meta.mode
            ))
        })?;
        f.ensure_rows(num_items)?;
        if let Some(d_text) = meta.d_text {
            if f.dim() != d_text {
                return Err(Error::Config(format!(
                    "checkpoint expects {d_text}-dim features but the file has {}",
                    f.dim()
                )));
            }
        }
        Ok(f)
    };
    let mut seed_rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    use rand::SeedableRng;

    let model = match meta.mode.as_str() {
        "alterrec" | "alterrec-aug" | "alterrec-random" => {
            let f = need_features()?;
            let mut id_net = UniModalNetwork::new_id(
                num_items,
                shape,
                meta.id_encoder.unwrap_or(SessionEncoderKind::Mean),
                &mut seed_rng,
            );
            let mut text_net = UniModalNetwork::new_text(
                f,
                shape,
                meta.text_encoder.unwrap_or(SessionEncoderKind::Mean),
                &mut seed_rng,
            );
            restore_params(&mut id_net, "id.", &ckpt.tensors)?;
            restore_params(&mut text_net, "text.", &ckpt.tensors)?;
            TrainedModel::Pair { id_net, text_net }
        }
        "id-only" => {
            let mut net = UniModalNetwork::new_id(
                num_items,
                shape,
                meta.id_encoder.unwrap_or(SessionEncoderKind::Mean),
                &mut seed_rng,
            );
            restore_params(&mut net, "id.", &ckpt.tensors)?;
            TrainedModel::Single(net)
        }
        "text-only" => {
            let f = need_features()?;
            let mut net = UniModalNetwork::new_text(
                f,
                shape,
                meta.text_encoder.unwrap_or(SessionEncoderKind::Mean),
                &mut seed_rng,
            );
            restore_params(&mut net, "text.", &ckpt.tensors)?;
            TrainedModel::Single(net)
        }
        "nfrec-sum" | "nfrec-concat" => {
            let f = need_features()?;
            let train = TrainConfig {
                d: meta.d,
                d_h: meta.d_h,
                l_max: meta.l_max,
                layers: meta.layers,
                ..TrainConfig::default()
            };
            let mut model = NaiveFusionModel::init(
                f,
                &train,
                meta.fusion.unwrap_or(FusionMode::Concat),
                &mut seed_rng,
            );
            model.restore(&ckpt.tensors)?;
            TrainedModel::Fusion(model)
        }
        other => {
            return Err(Error::BadFormat {
                path: path.to_path_buf(),
                message: format!("unknown checkpoint mode '{other}'"),
            })
        }
    };
    Ok((model, meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Invalid(format!(
                "unknown split '{other}' (expected train, val, or test)"
            ))),
        }
    }
}

pub fn split_sessions<'a>(dataset: &'a SessionDataset, split: Split) -> &'a [Session] {
    match split {
        Split::Train => &dataset.train,
        Split::Val => &dataset.val,
        Split::Test => &dataset.test,
    }
}

/// Score one split with a checkpoint and produce the ranking report
/// (metrics plus long-tail buckets keyed by train popularity).
#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    checkpoint_path: impl AsRef<Path>,
    data_dir: impl AsRef<Path>,
    features_path: Option<&Path>,
    split: Split,
    alpha_override: Option<f64>,
    bucket_edges: &[u64],
    popularity_mode: PopularityMode,
    out_path: Option<&Path>,
) -> Result<RankingReport> {
    let dataset = load_sessions(data_dir)?;
    let features = match features_path {
        Some(p) => Some(Arc::new(load_text_features(p)?)),
        None => None,
    };
    let (model, meta) = load_model(checkpoint_path, dataset.catalog.num_items, features)?;
    let alpha = alpha_override.unwrap_or(meta.alpha);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid(format!("alpha must be in [0,1], got {alpha}")));
    }
    let sessions = split_sessions(&dataset, split);
    if sessions.is_empty() {
        return Err(Error::Invalid("requested split is empty".into()));
    }
    let ranks = model.ranks(sessions, alpha)?;
    let mut report = RankingReport::from_ranks(&ranks)?;
    let popularity = popularity_counts_mode(&dataset, popularity_mode);
    report.buckets = long_tail_report(sessions, &ranks, &popularity, bucket_edges, None)?;
    if let Some(out) = out_path {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        atomic_write(out, json.as_bytes())?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnoseSummary {
    pub fusion: FusionMode,
    pub epochs: usize,
    /// final-epoch test Hits@20 of the fused score and its components
    pub hits20_full: f64,
    pub hits20_id: f64,
    pub hits20_text: f64,
    /// final-epoch mean train losses
    pub loss_full: f64,
    pub loss_id: f64,
    pub loss_text: f64,
    /// independently trained single-modality test Hits@20
    pub hits20_id_only: f64,
    pub hits20_text_only: f64,
    /// which component's curve tracks the fused model more closely
    pub dominant: String,
}

pub struct DiagnoseOutcome {
    pub log_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: DiagnoseSummary,
    pub diagnostics: Vec<crate::baselines::DiagnosticRecord>,
}

/// Train the fusion baseline with per-epoch component decomposition
/// (epoch 0 = untrained state), plus id-only and text-only references,
/// writing `diagnose_log.jsonl` and a combined summary.
pub fn cmd_diagnose(config: &RunConfig) -> Result<DiagnoseOutcome> {
    let dataset = load_sessions(&config.sessions_dir)?;
    let num_items = dataset.catalog.num_items;
    config.train.validate(num_items)?;
    let features = load_features_for(config, TrainMode::NfrecConcat)?.expect("needs text");
    features.ensure_rows(num_items)?;

    let fusion_run = train_nfrec(&dataset, features.clone(), &config.train, config.fusion)?;
    let id_run = train_independent(
        Modality::Id,
        &dataset,
        None,
        &config.train,
        SessionEncoderKind::Mean,
    )?;
    let text_run = train_independent(
        Modality::Text,
        &dataset,
        Some(features),
        &config.train,
        SessionEncoderKind::Mean,
    )?;

    let (id_only_hits, _) = crate::training::single_metrics(&id_run.net, &dataset.test)?;
    let (text_only_hits, _) = crate::training::single_metrics(&text_run.net, &dataset.test)?;

    let last = fusion_run.diagnostics.last().expect("at least epoch 0");
    let dominant = if (last.hits20_full - last.hits20_id).abs()
        <= (last.hits20_full - last.hits20_text).abs()
    {
        "id"
    } else {
        "text"
    };
    let summary = DiagnoseSummary {
        fusion: config.fusion,
        epochs: config.train.m_max,
        hits20_full: last.hits20_full,
        hits20_id: last.hits20_id,
        hits20_text: last.hits20_text,
        loss_full: last.loss_full,
        loss_id: last.loss_id,
        loss_text: last.loss_text,
        hits20_id_only: id_only_hits,
        hits20_text_only: text_only_hits,
        dominant: dominant.to_string(),
    };

    std::fs::create_dir_all(&config.model_dir).map_err(|e| Error::io(&config.model_dir, e))?;
    let log_path = config.model_dir.join("diagnose_log.jsonl");
    let mut out = String::new();
    for record in &fusion_run.diagnostics {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    atomic_write(&log_path, out.as_bytes())?;
    let summary_path = config.model_dir.join("diagnose_summary.json");
    atomic_write(
        &summary_path,
        serde_json::to_string_pretty(&summary)
            .expect("summary serializes")
            .as_bytes(),
    )?;

    Ok(DiagnoseOutcome {
        log_path,
        summary_path,
        summary,
        diagnostics: fusion_run.diagnostics,
    })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub csv: String,
    /// how many full training runs the sweep performed
    pub training_runs: usize,
}

/// α sweep: re-score a trained alternating checkpoint on the test split at
/// each blend weight (no retraining). k₂ sweep: retrain per value.
pub fn cmd_sweep(
    param: SweepParam,
    values: &[f64],
    config: &RunConfig,
    checkpoint_path: Option<&Path>,
    out_path: Option<&Path>,
) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::Invalid("sweep needs at least one value".into()));
    }
    let dataset = load_sessions(&config.sessions_dir)?;
    let mut training_runs = 0usize;

    let rows = match param {
        SweepParam::Alpha => {
            for &v in values {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Invalid(format!("alpha value {v} outside [0,1]")));
                }
            }
            let ckpt = checkpoint_path
                .map(|p| p.to_path_buf())
                .unwrap_or_else(|| config.model_dir.join("best.ckpt"));
            let features = match &config.features_file {
                Some(p) => Some(Arc::new(load_text_features(p)?)),
                None => None,
            };
            let (model, _) = load_model(&ckpt, dataset.catalog.num_items, features)?;
            let (id_net, text_net) = match &model {
                TrainedModel::Pair { id_net, text_net } => (id_net, text_net),
                _ => {
                    return Err(Error::Invalid(
                        "alpha sweep needs an alternating (two-network) checkpoint".into(),
                    ))
                }
            };
            let id_embs = id_net.item_embedding_matrix(&DropoutCtx::off(), false)?;
            let text_embs = text_net.item_embedding_matrix(&DropoutCtx::off(), false)?;
            sweep(values, |alpha| {
                let ranks = ranks_for_sessions(&dataset.test, |s| {
                    let y_id = scores_with_items(id_net, &id_embs, s)?;
                    let y_text = scores_with_items(text_net, &text_embs, s)?;
                    combined_scores(&y_id, &y_text, alpha)
                })?;
                Ok((hits_at_n(&ranks, 20)?, ndcg_at_n(&ranks, 20)?))
            })?
        }
        SweepParam::K2 => {
            let features = load_features_for(config, TrainMode::AlterRec)?.expect("needs text");
            sweep(values, |k2| {
                if k2.fract() != 0.0 || k2 < 1.0 {
                    return Err(Error::Invalid(format!("k2 value {k2} must be a positive integer")));
                }
                let train = TrainConfig {
                    k2: k2 as usize,
                    ..config.train.clone()
                };
                train.validate(dataset.catalog.num_items)?;
                training_runs += 1;
                let run = run_alternating(
                    &dataset,
                    features.clone(),
                    &train,
                    config.id_encoder,
                    config.text_encoder,
                    AlternatingVariant::Standard,
                    config.mining_cache,
                )?;
                let mut id_net = run.id_net;
                let mut text_net = run.text_net;
                restore_params(&mut id_net, "id.", &run.best_snapshot)?;
                restore_params(&mut text_net, "text.", &run.best_snapshot)?;
                crate::training::blended_metrics(&id_net, &text_net, train.alpha, &dataset.test)
            })?
        }
    };

    let csv = sweep_csv(&rows);
    if let Some(out) = out_path {
        atomic_write(out, csv.as_bytes())?;
    }
    Ok(SweepOutcome {
        rows,
        csv,
        training_runs,
    })
}

/// Build the global rayon pool from `ALTERREC_THREADS` when set.
pub fn init_thread_pool() -> Result<()> {
    if let Ok(v) = std::env::var("ALTERREC_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("ALTERREC_THREADS must be an integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Config("ALTERREC_THREADS must be at least 1".into()));
        }
        // ignore the error if a pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Component scores of a pair checkpoint for one session (α=1 gives the ID
/// component, α=0 the text component).
pub fn pair_component_matrices(
    model: &TrainedModel,
) -> Result<(DenseMatrix, DenseMatrix)> {
    match model {
        TrainedModel::Pair { id_net, text_net } => Ok((
            id_net.item_embedding_matrix(&DropoutCtx::off(), false)?,
            text_net.item_embedding_matrix(&DropoutCtx::off(), false)?,
        )),
        _ => Err(Error::Invalid("not an alternating checkpoint".into())),
    }
}

// re-export for the binary
pub use crate::baselines::DiagnosticRecord;
