//! Versioned binary checkpoint.
//!
//! Layout: magic `PSC1`, a little-endian `u64` byte length, a UTF-8 JSON
//! header, then every parameter tensor followed by the two Adadelta
//! accumulator sets, each as little-endian `f64` values in declaration
//! order. Tensor shapes are implied by the header's model config.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::adadelta::{Adadelta, AdadeltaConfig};
use super::model::{Model, ModelConfig, Parameters};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};
use crate::seq::{MonomerCode, Vocabulary};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PSC1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub config: ModelConfig,
    pub optimizer: AdadeltaConfig,
    /// Codes in index order; code `i` has index `i + 1`.
    pub vocabulary: Vec<MonomerCode>,
    pub epoch: usize,
    pub val_acc: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Parameters,
    pub optimizer: Adadelta,
}

impl Checkpoint {
    pub fn new(
        model: &Model,
        optimizer: &Adadelta,
        vocab: &Vocabulary,
        epoch: usize,
        val_acc: f64,
        val_loss: f64,
    ) -> Self {
        Self {
            header: CheckpointHeader {
                format_version: CHECKPOINT_VERSION,
                config: model.config,
                optimizer: optimizer.config,
                vocabulary: vocab.codes().to_vec(),
                epoch,
                val_acc,
                val_loss,
            },
            params: model.params.clone(),
            optimizer: optimizer.clone(),
        }
    }

    pub fn model(&self) -> Result<Model> {
        Model::new(self.header.config, self.params.clone())
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::from_codes(self.header.vocabulary.clone())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)
            .map_err(|e| Error::BadCheckpoint(e.to_string()))?;
        let n_values = 3 * self.params.count();
        let mut out = Vec::with_capacity(12 + header.len() + 8 * n_values);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        let sets = [
            &self.params,
            &self.optimizer.avg_sq_grad,
            &self.optimizer.avg_sq_update,
        ];
        for set in sets {
            for tensor in set.tensors() {
                for &v in tensor.data() {
                    out.extend_from_slice(&(v as f64).to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::BadCheckpoint(m.to_string());
        if bytes.len() < 12 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("missing PSC1 magic"));
        }
        let header_len = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
        let body_start = 12usize
            .checked_add(header_len)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| bad("header length exceeds file size"))?;
        let header: CheckpointHeader = serde_json::from_slice(&bytes[12..body_start])
            .map_err(|e| Error::BadCheckpoint(format!("header: {e}")))?;
        if header.format_version != CHECKPOINT_VERSION {
            return Err(Error::BadCheckpoint(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        header
            .config
            .validate()
            .map_err(|e| Error::BadCheckpoint(e.to_string()))?;
        if header.vocabulary.len() != header.config.vocab_size {
            return Err(bad("vocabulary size differs from model config"));
        }

        let shapes = header.config.param_shapes();
        let per_set: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        let body = &bytes[body_start..];
        if body.len() != 3 * per_set * 8 {
            return Err(Error::BadCheckpoint(format!(
                "expected {} tensor bytes, found {}",
                3 * per_set * 8,
                body.len()
            )));
        }
        let mut values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")) as Real);
        let mut read_set = || -> Result<Parameters> {
            let tensors = shapes.clone().map(|shape| {
                let n = shape.iter().product();
                let data: Vec<Real> = values.by_ref().take(n).collect();
                Tensor::new(shape, data)
            });
            let [a, b, c, d, e, f, g, h, i] = tensors;
            Ok(Parameters::from_tensors([a?, b?, c?, d?, e?, f?, g?, h?, i?]))
        };
        let params = read_set()?;
        let avg_sq_grad = read_set()?;
        let avg_sq_update = read_set()?;
        let optimizer = Adadelta {
            config: header.optimizer,
            avg_sq_grad,
            avg_sq_update,
        };
        Ok(Self {
            header,
            params,
            optimizer,
        })
    }

    /// Writes to a sibling temp file, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let write_err = |source| Error::CheckpointWrite {
            path: path.to_path_buf(),
            source,
        };
        let bytes = self.to_bytes()?;
        let tmp = temp_sibling(path);
        let mut out = BufWriter::new(File::create(&tmp).map_err(write_err)?);
        out.write_all(&bytes).map_err(write_err)?;
        out.into_inner()
            .map_err(|e| write_err(e.into_error()))?
            .sync_all()
            .map_err(write_err)?;
        fs::rename(&tmp, path).map_err(write_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Reads only the JSON header.
    pub fn read_header(path: &Path) -> Result<CheckpointHeader> {
        let mut file = File::open(path)?;
        let mut prefix = [0u8; 12];
        file.read_exact(&mut prefix)
            .map_err(|_| Error::BadCheckpoint("file too short".into()))?;
        if &prefix[..4] != CHECKPOINT_MAGIC {
            return Err(Error::BadCheckpoint("missing PSC1 magic".into()));
        }
        let len = u64::from_le_bytes(prefix[4..].try_into().expect("8 bytes"));
        let mut header = Vec::new();
        file.take(len).read_to_end(&mut header)?;
        serde_json::from_slice(&header).map_err(|e| Error::BadCheckpoint(format!("header: {e}")))
    }
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}
