//! Data model and on-disk formats: item catalog, sessions, train/val/test
//! splits, frozen per-item text features, popularity statistics, and a
//! synthetic session generator with controllable ID/text signal strength.
//!
//! Formats:
//! - sessions: UTF-8 JSON Lines (`train.jsonl` / `val.jsonl` / `test.jsonl`)
//!   plus `catalog.json`
//! - text features: little-endian binary, magic `ITFX`, f32 row-major

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numerics::{mix_seed, snap_f32, DenseMatrix};

pub const FEATURE_MAGIC: &[u8; 4] = b"ITFX";
pub const FEATURE_VERSION: u32 = 1;

/// The item universe: dense contiguous indices 0..num_items.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemCatalog {
    pub num_items: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

impl ItemCatalog {
    pub fn new(num_items: usize) -> Result<Self> {
        if num_items < 2 {
            return Err(Error::Invalid(format!(
                "catalog needs at least 2 items, got {num_items}"
            )));
        }
        Ok(ItemCatalog {
            num_items,
            names: None,
        })
    }
}

/// One user interaction sequence plus the next-item target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub items: Vec<usize>,
    pub target: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ts: Option<i64>,
}

impl Session {
    pub fn new(items: Vec<usize>, target: usize) -> Self {
        Session {
            items,
            target,
            user: None,
            ts: None,
        }
    }

    pub fn validate(&self, num_items: usize) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::Invalid("session has an empty items list".into()));
        }
        for &it in &self.items {
            if it >= num_items {
                return Err(Error::Invalid(format!(
                    "item index {it} out of range for catalog of {num_items}"
                )));
            }
        }
        if self.target >= num_items {
            return Err(Error::Invalid(format!(
                "target index {} out of range for catalog of {num_items}",
                self.target
            )));
        }
        Ok(())
    }
}

/// Train/val/test session splits over one catalog.
#[derive(Debug, Clone)]
pub struct SessionDataset {
    pub catalog: ItemCatalog,
    pub train: Vec<Session>,
    pub val: Vec<Session>,
    pub test: Vec<Session>,
}

impl SessionDataset {
    pub fn validate(&self) -> Result<()> {
        for split in [&self.train, &self.val, &self.test] {
            for s in split {
                s.validate(self.catalog.num_items)?;
            }
        }
        Ok(())
    }
}

/// Frozen per-item text feature vectors (row i = item i). Values live on the
/// f32 grid, the native precision of the feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct TextFeatureMatrix {
    pub values: DenseMatrix,
}

impl TextFeatureMatrix {
    pub fn new(values: DenseMatrix) -> Result<Self> {
        if !values.is_finite() {
            return Err(Error::NonFinite("text feature matrix".into()));
        }
        Ok(TextFeatureMatrix { values })
    }

    pub fn num_items(&self) -> usize {
        self.values.rows
    }

    pub fn dim(&self) -> usize {
        self.values.cols
    }

    pub fn row(&self, item: usize) -> &[f64] {
        self.values.row(item)
    }

    pub fn ensure_rows(&self, num_items: usize) -> Result<()> {
        if self.num_items() != num_items {
            return Err(Error::Shape(format!(
                "feature matrix has {} rows but catalog has {num_items} items",
                self.num_items()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Session files
// ---------------------------------------------------------------------------

fn parse_session_line(path: &Path, lineno: usize, line: &str, num_items: usize) -> Result<Session> {
    let session: Session = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
        path: path.to_path_buf(),
        line: lineno,
        message: e.to_string(),
    })?;
    session.validate(num_items).map_err(|e| Error::MalformedLine {
        path: path.to_path_buf(),
        line: lineno,
        message: e.to_string(),
    })?;
    Ok(session)
}

fn load_split(path: &Path, num_items: usize) -> Result<Vec<Session>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut sessions = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        sessions.push(parse_session_line(path, idx + 1, &line, num_items)?);
    }
    Ok(sessions)
}

/// Load `catalog.json` + `{train,val,test}.jsonl` from a directory; every
/// item index is validated against the catalog.
pub fn load_sessions(dir: impl AsRef<Path>) -> Result<SessionDataset> {
    let dir = dir.as_ref();
    let catalog_path = dir.join("catalog.json");
    let raw = fs::read_to_string(&catalog_path).map_err(|e| Error::io(&catalog_path, e))?;
    let catalog: ItemCatalog = serde_json::from_str(&raw).map_err(|e| Error::BadFormat {
        path: catalog_path.clone(),
        message: e.to_string(),
    })?;
    if catalog.num_items < 2 {
        return Err(Error::BadFormat {
            path: catalog_path,
            message: format!("num_items must be at least 2, got {}", catalog.num_items),
        });
    }
    let dataset = SessionDataset {
        train: load_split(&dir.join("train.jsonl"), catalog.num_items)?,
        val: load_split(&dir.join("val.jsonl"), catalog.num_items)?,
        test: load_split(&dir.join("test.jsonl"), catalog.num_items)?,
        catalog,
    };
    Ok(dataset)
}

fn write_split(path: &Path, sessions: &[Session]) -> Result<()> {
    let mut out = String::new();
    for s in sessions {
        out.push_str(&serde_json::to_string(s).expect("session serializes"));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Write a dataset in canonical form (`catalog.json` + three JSONL splits).
/// Canonical files round-trip byte-identically through [`load_sessions`].
pub fn write_sessions(dir: impl AsRef<Path>, dataset: &SessionDataset) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let catalog_json =
        serde_json::to_string(&dataset.catalog).expect("catalog serializes");
    atomic_write(&dir.join("catalog.json"), catalog_json.as_bytes())?;
    write_split(&dir.join("train.jsonl"), &dataset.train)?;
    write_split(&dir.join("val.jsonl"), &dataset.val)?;
    write_split(&dir.join("test.jsonl"), &dataset.test)?;
    Ok(())
}

/// Write bytes to `path` via a temp file in the same directory plus an
/// atomic rename, so failures never leave partial output behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp: PathBuf = {
        let mut name = path
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".tmp");
        dir.join(name)
    };
    {
        let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut writer = BufWriter::new(file);
        writer.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        writer.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Text feature files
// ---------------------------------------------------------------------------

/// Load a text feature file: magic `ITFX`, u32 version=1, u32 rows, u32 dim,
/// then rows×dim little-endian f32, row-major.
pub fn load_text_features(path: impl AsRef<Path>) -> Result<TextFeatureMatrix> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; 16];
    file.read_exact(&mut header).map_err(|_| Error::BadFormat {
        path: path.to_path_buf(),
        message: "file too short for header".into(),
    })?;
    if &header[0..4] != FEATURE_MAGIC {
        return Err(Error::BadFormat {
            path: path.to_path_buf(),
            message: format!("bad magic {:?}, expected ITFX", &header[0..4]),
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FEATURE_VERSION {
        return Err(Error::BadFormat {
            path: path.to_path_buf(),
            message: format!("unsupported version {version}"),
        });
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut payload = vec![0u8; rows * dim * 4];
    file.read_exact(&mut payload).map_err(|_| Error::BadFormat {
        path: path.to_path_buf(),
        message: format!("truncated: expected {rows}x{dim} f32 values"),
    })?;
    let mut trailing = [0u8; 1];
    if file.read(&mut trailing).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::BadFormat {
            path: path.to_path_buf(),
            message: "trailing bytes after declared payload".into(),
        });
    }
    let mut values = DenseMatrix::zeros(rows, dim);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::BadFormat {
                path: path.to_path_buf(),
                message: format!("non-finite value at flat index {i}"),
            });
        }
        values.data[i] = v as f64;
    }
    TextFeatureMatrix::new(values)
}

/// Inverse of [`load_text_features`]; round-trips bit-exactly.
pub fn save_text_features(path: impl AsRef<Path>, features: &TextFeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    let rows = features.num_items();
    let dim = features.dim();
    let mut bytes = Vec::with_capacity(16 + rows * dim * 4);
    bytes.extend_from_slice(FEATURE_MAGIC);
    bytes.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(rows as u32).to_le_bytes());
    bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    for &v in &features.values.data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    atomic_write(path, &bytes)
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

/// Knobs for the synthetic corpus. `id_signal` is the probability that a
/// session's next item stays in the current latent cluster;
/// `text_informativeness` mixes the cluster centroid into each item's text
/// feature vector (1 = pure centroid, 0 = pure noise).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_items: usize,
    pub num_clusters: usize,
    pub train_sessions: usize,
    pub val_sessions: usize,
    pub test_sessions: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub id_signal: f64,
    pub text_informativeness: f64,
    pub feature_dim: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_items < 2 {
            return Err(Error::Config("num_items must be at least 2".into()));
        }
        if self.num_clusters == 0 || self.num_clusters > self.num_items {
            return Err(Error::Config(format!(
                "num_clusters must be in [1, num_items], got {}",
                self.num_clusters
            )));
        }
        if self.min_len < 1 || self.max_len < self.min_len {
            return Err(Error::Config(format!(
                "session length range [{}, {}] is invalid",
                self.min_len, self.max_len
            )));
        }
        if !(0.0..=1.0).contains(&self.id_signal) {
            return Err(Error::Config(format!(
                "id_signal must be in [0,1], got {}",
                self.id_signal
            )));
        }
        if !(0.0..=1.0).contains(&self.text_informativeness) {
            return Err(Error::Config(format!(
                "text_informativeness must be in [0,1], got {}",
                self.text_informativeness
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be positive".into()));
        }
        Ok(())
    }
}

/// Cluster of item i under round-robin assignment.
pub fn item_cluster(item: usize, num_clusters: usize) -> usize {
    item % num_clusters
}

fn draw_next(spec: &SyntheticSpec, prev: usize, rng: &mut ChaCha8Rng) -> usize {
    if rng.gen::<f64>() < spec.id_signal {
        // uniform within the previous item's cluster
        let cluster = item_cluster(prev, spec.num_clusters);
        let members = (spec.num_items - cluster).div_ceil(spec.num_clusters);
        let k = rng.gen_range(0..members);
        cluster + k * spec.num_clusters
    } else {
        rng.gen_range(0..spec.num_items)
    }
}

fn draw_session(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Session {
    let len = rng.gen_range(spec.min_len..=spec.max_len);
    let mut items = Vec::with_capacity(len);
    items.push(rng.gen_range(0..spec.num_items));
    for _ in 1..len {
        let prev = *items.last().unwrap();
        items.push(draw_next(spec, prev, rng));
    }
    let target = draw_next(spec, *items.last().unwrap(), rng);
    Session::new(items, target)
}

/// Deterministically generate a dataset plus matching text features from a
/// spec. Item i's feature row is
/// `t·centroid(cluster(i)) + (1−t)·noise`, row-normalized, snapped to f32.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(SessionDataset, TextFeatureMatrix)> {
    spec.validate()?;
    let catalog = ItemCatalog::new(spec.num_items)?;

    let mut session_rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 1));
    let split = |count: usize, rng: &mut ChaCha8Rng| -> Vec<Session> {
        (0..count).map(|_| draw_session(spec, rng)).collect()
    };
    let train = split(spec.train_sessions, &mut session_rng);
    let val = split(spec.val_sessions, &mut session_rng);
    let test = split(spec.test_sessions, &mut session_rng);

    // Per-cluster unit centroids, then per-item mixed rows.
    let mut feature_rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 2));
    let normal = StandardNormal;
    let mut centroids = Vec::with_capacity(spec.num_clusters);
    for _ in 0..spec.num_clusters {
        let mut c: Vec<f64> = (0..spec.feature_dim)
            .map(|_| normal.sample(&mut feature_rng))
            .collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        c.iter_mut().for_each(|v| *v /= norm);
        centroids.push(c);
    }
    let t = spec.text_informativeness;
    let mut values = DenseMatrix::zeros(spec.num_items, spec.feature_dim);
    for item in 0..spec.num_items {
        let centroid = &centroids[item_cluster(item, spec.num_clusters)];
        let mut row: Vec<f64> = (0..spec.feature_dim)
            .map(|j| {
                let noise: f64 = normal.sample(&mut feature_rng);
                t * centroid[j] + (1.0 - t) * noise
            })
            .collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        for (j, v) in row.iter_mut().enumerate() {
            values.set(item, j, snap_f32(*v / norm));
        }
    }

    let dataset = SessionDataset {
        catalog,
        train,
        val,
        test,
    };
    Ok((dataset, TextFeatureMatrix::new(values)?))
}

// ---------------------------------------------------------------------------
// Popularity
// ---------------------------------------------------------------------------

/// What counts toward an item's train popularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PopularityMode {
    /// Context items and targets both counted.
    #[default]
    AllInteractions,
    /// Targets only.
    TargetsOnly,
}

/// Per-item occurrence count over the TRAIN split only.
pub fn popularity_counts(dataset: &SessionDataset) -> Vec<u64> {
    popularity_counts_mode(dataset, PopularityMode::AllInteractions)
}

pub fn popularity_counts_mode(dataset: &SessionDataset, mode: PopularityMode) -> Vec<u64> {
    let mut counts = vec![0u64; dataset.catalog.num_items];
    for s in &dataset.train {
        if mode == PopularityMode::AllInteractions {
            for &it in &s.items {
                counts[it] += 1;
            }
        }
        counts[s.target] += 1;
    }
    counts
}

/// Deterministic shuffle helper used by training loops.
pub fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}
