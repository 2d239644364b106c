//! Model checkpoint file: magic `ARMD`, u32 version, a length-prefixed JSON
//! config blob, then each parameter tensor as (u32 name length, name bytes,
//! u32 rows, u32 cols, little-endian float32 values, row-major). Parameters
//! live on the f32 grid, so save → load round-trips bitwise.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::corpus::atomic_write;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ARMD";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug)]
pub struct Checkpoint {
    pub config_json: String,
    pub tensors: Vec<(String, DenseMatrix)>,
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    config_json: &str,
    tensors: &[(String, DenseMatrix)],
) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let blob = config_json.as_bytes();
    bytes.extend_from_slice(&(blob.len() as u32).to_le_bytes());
    bytes.extend_from_slice(blob);
    for (name, tensor) in tensors {
        let name_bytes = name.as_bytes();
        bytes.extend_from_slice(&(name_bytes.len() as u32).to_le_bytes());
        bytes.extend_from_slice(name_bytes);
        bytes.extend_from_slice(&(tensor.rows as u32).to_le_bytes());
        bytes.extend_from_slice(&(tensor.cols as u32).to_le_bytes());
        for &v in &tensor.data {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    atomic_write(path.as_ref(), &bytes)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bad = |message: String| Error::BadFormat {
        path: path.to_path_buf(),
        message,
    };
    let bad = &bad;
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;

    struct Cursor<'a> {
        bytes: &'a [u8],
        pos: usize,
    }
    impl<'a> Cursor<'a> {
        fn take(&mut self, n: usize, what: &str) -> std::result::Result<&'a [u8], String> {
            if self.pos + n > self.bytes.len() {
                return Err(format!("truncated while reading {what}"));
            }
            let slice = &self.bytes[self.pos..self.pos + n];
            self.pos += n;
            Ok(slice)
        }
        fn take_u32(&mut self, what: &str) -> std::result::Result<u32, String> {
            Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
        }
        fn done(&self) -> bool {
            self.pos >= self.bytes.len()
        }
    }

    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(4, "magic").map_err(&bad)? != CHECKPOINT_MAGIC {
        return Err(bad("bad magic, expected ARMD".into()));
    }
    let version = cur.take_u32("version").map_err(&bad)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let blob_len = cur.take_u32("config length").map_err(&bad)? as usize;
    let config_json = String::from_utf8(cur.take(blob_len, "config blob").map_err(&bad)?.to_vec())
        .map_err(|e| bad(format!("config blob is not UTF-8: {e}")))?;

    let mut tensors = Vec::new();
    while !cur.done() {
        let name_len = cur.take_u32("tensor name length").map_err(&bad)? as usize;
        let name = String::from_utf8(cur.take(name_len, "tensor name").map_err(&bad)?.to_vec())
            .map_err(|e| bad(format!("tensor name is not UTF-8: {e}")))?;
        let rows = cur.take_u32("rows").map_err(&bad)? as usize;
        let cols = cur.take_u32("cols").map_err(&bad)? as usize;
        let payload = cur.take(rows * cols * 4, "tensor values").map_err(&bad)?;
        let mut m = DenseMatrix::zeros(rows, cols);
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(bad(format!("non-finite value in tensor {name} at {i}")));
            }
            m.data[i] = v as f64;
        }
        tensors.push((name, m));
    }
    Ok(Checkpoint {
        config_json,
        tensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_every_parameter_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tensors = vec![
            ("id.embeddings".to_string(), DenseMatrix::uniform_init(7, 3, 0.5, &mut rng)),
            ("text.w1".to_string(), DenseMatrix::uniform_init(4, 5, 0.5, &mut rng)),
        ];
        save_checkpoint(&path, "{\"num_items\":7}", &tensors).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.config_json, "{\"num_items\":7}");
        assert_eq!(loaded.tensors.len(), 2);
        for ((n1, t1), (n2, t2)) in tensors.iter().zip(&loaded.tensors) {
            assert_eq!(n1, n2);
            // uniform_init values are f32-snapped, so equality is bitwise
            assert_eq!(t1.data, t2.data);
        }
        // and a second save is byte-identical
        let path2 = dir.path().join("model2.ckpt");
        save_checkpoint(&path2, &loaded.config_json, &loaded.tensors).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        fs::write(&path, b"NOPE").unwrap();
        assert!(load_checkpoint(&path).is_err());

        let path2 = dir.path().join("trunc.ckpt");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tensors = vec![("t".to_string(), DenseMatrix::uniform_init(3, 3, 0.5, &mut rng))];
        save_checkpoint(&path2, "{}", &tensors).unwrap();
        let bytes = fs::read(&path2).unwrap();
        fs::write(&path2, &bytes[..bytes.len() - 5]).unwrap();
        let err = load_checkpoint(&path2).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
    }
}
