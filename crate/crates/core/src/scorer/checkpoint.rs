//! Versioned binary model checkpoint.
//!
//! Layout: 8-byte magic, u32 LE version, u64 LE header length, JSON header,
//! then `K*D` weights and `K` biases as f64 LE.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::ModelParams;
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::fsutil;

const MAGIC: &[u8; 8] = b"LXSCORE\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    num_classes: usize,
    dim: usize,
    seed: u64,
    config: TrainConfig,
    class_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelParams,
    pub config: TrainConfig,
    /// Class ids in head order; must match the inventory used at scoring time.
    pub class_ids: Vec<String>,
}

impl Checkpoint {
    pub fn write_to(&self, w: &mut dyn Write) -> std::io::Result<()> {
        let header = Header {
            num_classes: self.model.num_classes,
            dim: self.model.dim,
            seed: self.config.seed,
            config: self.config.clone(),
            class_ids: self.class_ids.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(std::io::Error::other)?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for v in self.model.weights.iter().chain(&self.model.bias) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut dyn Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::Checkpoint(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf).map_err(io)?;
        let version = u32::from_le_bytes(u32buf);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf).map_err(io)?;
        let len = u64::from_le_bytes(u64buf) as usize;
        let mut json = vec![0u8; len];
        r.read_exact(&mut json).map_err(io)?;
        let header: Header =
            serde_json::from_slice(&json).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if header.class_ids.len() != header.num_classes {
            return Err(Error::Checkpoint("class id list does not match K".into()));
        }
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut u64buf).map_err(io)?;
                out.push(f64::from_le_bytes(u64buf));
            }
            Ok(out)
        };
        let weights = read_f64s(header.num_classes * header.dim)?;
        let bias = read_f64s(header.num_classes)?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(io)? != 0 {
            return Err(Error::Checkpoint("trailing bytes after parameters".into()));
        }
        Ok(Checkpoint {
            model: ModelParams {
                num_classes: header.num_classes,
                dim: header.dim,
                weights,
                bias,
            },
            config: header.config,
            class_ids: header.class_ids,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic_with(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let mut model = ModelParams::init(3, 7, 11);
        model.bias = vec![-0.0, f64::MIN_POSITIVE, 1.0 / 3.0];
        let ck = Checkpoint {
            model,
            config: TrainConfig {
                dim: 7,
                ..TrainConfig::default()
            },
            class_ids: vec!["a".into(), "b".into(), "c".into()],
        };
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        let back = Checkpoint::read_from(&mut bytes.as_slice()).unwrap();
        let bits = |m: &ModelParams| {
            m.weights
                .iter()
                .chain(&m.bias)
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&back.model), bits(&ck.model));
        assert_eq!(back.config, ck.config);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, bytes);
    }

    #[test]
    fn rejects_truncation_and_bad_magic() {
        let ck = Checkpoint {
            model: ModelParams::zeros(2, 2),
            config: TrainConfig::default(),
            class_ids: vec!["a".into(), "b".into()],
        };
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        assert!(Checkpoint::read_from(&mut &bytes[..bytes.len() - 3]).is_err());
        bytes[0] = b'X';
        assert!(Checkpoint::read_from(&mut bytes.as_slice()).is_err());
    }
}
