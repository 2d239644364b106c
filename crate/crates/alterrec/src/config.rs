//! Run configuration: one JSON file holding data paths, model shape, and
//! every training hyperparameter, with unknown keys rejected. Fields left
//! out fall back to the published defaults.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::baselines::FusionMode;
use crate::corpus::PopularityMode;
use crate::encoders::SessionEncoderKind;
use crate::error::{Error, Result};
use crate::training::{MiningCachePolicy, TrainConfig};

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub sessions_dir: PathBuf,
    pub features_file: Option<PathBuf>,
    pub model_dir: PathBuf,
    pub train: TrainConfig,
    pub id_encoder: SessionEncoderKind,
    pub text_encoder: SessionEncoderKind,
    pub fusion: FusionMode,
    pub bucket_edges: Vec<u64>,
    pub popularity_mode: PopularityMode,
    pub mining_cache: MiningCachePolicy,
}

/// On-disk form: everything except the data directory is optional.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    sessions_dir: PathBuf,
    features_file: Option<PathBuf>,
    model_dir: Option<PathBuf>,
    m_random: Option<usize>,
    m_gap: Option<usize>,
    m_max: Option<usize>,
    k1: Option<usize>,
    k2: Option<usize>,
    p: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    d: Option<usize>,
    d_h: Option<usize>,
    l_max: Option<usize>,
    layers: Option<usize>,
    transformer_ffn: Option<bool>,
    learning_rate: Option<f64>,
    dropout: Option<f64>,
    batch_size: Option<usize>,
    seed: Option<u64>,
    id_encoder: Option<SessionEncoderKind>,
    text_encoder: Option<SessionEncoderKind>,
    fusion: Option<FusionMode>,
    bucket_edges: Option<Vec<u64>>,
    popularity_mode: Option<PopularityMode>,
    mining_cache: Option<MiningCachePolicy>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: RunConfigFile = serde_json::from_str(&raw).map_err(|e| Error::BadFormat {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let defaults = TrainConfig::default();
        let config = RunConfig {
            sessions_dir: file.sessions_dir,
            features_file: file.features_file,
            model_dir: file.model_dir.unwrap_or_else(|| PathBuf::from("model")),
            train: TrainConfig {
                m_random: file.m_random.unwrap_or(defaults.m_random),
                m_gap: file.m_gap.unwrap_or(defaults.m_gap),
                m_max: file.m_max.unwrap_or(defaults.m_max),
                k1: file.k1.unwrap_or(defaults.k1),
                k2: file.k2.unwrap_or(defaults.k2),
                p: file.p.unwrap_or(defaults.p),
                alpha: file.alpha.unwrap_or(defaults.alpha),
                beta: file.beta.unwrap_or(defaults.beta),
                d: file.d.unwrap_or(defaults.d),
                d_h: file.d_h.unwrap_or(defaults.d_h),
                l_max: file.l_max.unwrap_or(defaults.l_max),
                layers: file.layers.unwrap_or(defaults.layers),
                transformer_ffn: file.transformer_ffn.unwrap_or(defaults.transformer_ffn),
                learning_rate: file.learning_rate.unwrap_or(defaults.learning_rate),
                dropout: file.dropout.unwrap_or(defaults.dropout),
                batch_size: file.batch_size.unwrap_or(defaults.batch_size),
                seed: file.seed.unwrap_or(defaults.seed),
            },
            id_encoder: file.id_encoder.unwrap_or(SessionEncoderKind::Mean),
            text_encoder: file.text_encoder.unwrap_or(SessionEncoderKind::Transformer),
            fusion: file.fusion.unwrap_or(FusionMode::Concat),
            bucket_edges: file.bucket_edges.unwrap_or_else(|| vec![30, 100]),
            popularity_mode: file.popularity_mode.unwrap_or_default(),
            mining_cache: file.mining_cache.unwrap_or_default(),
        };
        config.validate_static()?;
        Ok(config)
    }

    /// Validation that does not need the catalog (k2 vs |V| happens once the
    /// data is loaded, via `TrainConfig::validate`).
    pub fn validate_static(&self) -> Result<()> {
        if self.bucket_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "bucket_edges must be strictly increasing: {:?}",
                self.bucket_edges
            )));
        }
        if !(0.0..=1.0).contains(&self.train.alpha) {
            return Err(Error::Config(format!(
                "alpha must be in [0,1], got {}",
                self.train.alpha
            )));
        }
        Ok(())
    }
}
