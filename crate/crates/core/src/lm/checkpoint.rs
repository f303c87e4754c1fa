//! Backbone checkpoint: `WATLM1`, then V, d, C as little-endian u32, then
//! every parameter group as little-endian f64 in the order
//! embed, pos, wq, wk, wv, wo, ff1_w, ff1_b, ff2_w, ff2_b.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lm::model::{BackboneLm, ModelDims, Params};
use crate::lm::tokenizer::Tokenizer;
use crate::{Error, Result, Scalar};

const MAGIC: &[u8; 6] = b"WATLM1";

pub fn backbone_to_bytes<T: Scalar>(model: &BackboneLm<T>) -> Vec<u8> {
    let dims = model.dims();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    for v in [dims.vocab, dims.d, dims.context] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for g in model.params.groups() {
        for &x in g.iter() {
            out.extend_from_slice(&x.as_f64().to_le_bytes());
        }
    }
    out
}

pub fn backbone_from_bytes<T: Scalar>(bytes: &[u8]) -> Result<BackboneLm<T>> {
    if bytes.len() < 18 || &bytes[..6] != MAGIC {
        return Err(Error::Checkpoint("not a backbone checkpoint (bad magic)".into()));
    }
    let u = |i: usize| u32::from_le_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap()) as usize;
    let dims = ModelDims {
        vocab: u(0),
        d: u(1),
        context: u(2),
    };
    let mut params = Params::<T>::zeros(dims);
    let total: usize = params.groups().iter().map(|g| g.len()).sum();
    let body = &bytes[18..];
    if body.len() != total * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {} parameter bytes for V={} d={} C={}, found {}",
            total * 8,
            dims.vocab,
            dims.d,
            dims.context,
            body.len()
        )));
    }
    let mut chunks = body.chunks_exact(8);
    for g in params.groups_mut() {
        for x in g.iter_mut() {
            *x = T::of(f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap()));
        }
    }
    BackboneLm::from_params(dims, params)
}

/// JSON written next to a backbone checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BackboneSidecar {
    pub config_hash: String,
    pub seed: u64,
    pub vocab_size: usize,
    pub d: usize,
    pub context: usize,
    pub vocab: serde_json::Value,
}

impl BackboneSidecar {
    pub fn new(model_dims: ModelDims, tokenizer: &Tokenizer, config_hash: &str, seed: u64) -> Result<Self> {
        Ok(BackboneSidecar {
            config_hash: config_hash.to_string(),
            seed,
            vocab_size: model_dims.vocab,
            d: model_dims.d,
            context: model_dims.context,
            vocab: serde_json::from_str(&tokenizer.to_json()?)?,
        })
    }

    pub fn tokenizer(&self) -> Result<Tokenizer> {
        Tokenizer::from_json(&self.vocab.to_string())
    }
}

/// Path of the sidecar for a checkpoint: `backbone.bin` → `backbone.json`.
pub fn sidecar_path(checkpoint: &Path) -> std::path::PathBuf {
    checkpoint.with_extension("json")
}

pub fn save_backbone<T: Scalar>(path: &Path, model: &BackboneLm<T>, sidecar: &BackboneSidecar) -> Result<()> {
    fs::write(path, backbone_to_bytes(model)).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(sidecar)? + "\n";
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

pub fn load_backbone<T: Scalar>(path: &Path) -> Result<(BackboneLm<T>, BackboneSidecar, Tokenizer)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let model = backbone_from_bytes(&bytes)?;
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: BackboneSidecar = serde_json::from_str(&text)?;
    let tok = sidecar.tokenizer()?;
    if tok.vocab_size() != model.dims().vocab {
        return Err(Error::Checkpoint(format!(
            "sidecar vocabulary has {} ids but checkpoint has V={}",
            tok.vocab_size(),
            model.dims().vocab
        )));
    }
    Ok((model, sidecar, tok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bitwise() {
        let m = BackboneLm::<f64>::init(
            ModelDims {
                vocab: 7,
                d: 3,
                context: 5,
            },
            9,
        );
        let bytes = backbone_to_bytes(&m);
        assert_eq!(&bytes[..6], b"WATLM1");
        let back: BackboneLm<f64> = backbone_from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(backbone_to_bytes(&back), bytes);
    }

    #[test]
    fn rejects_truncated() {
        let m = BackboneLm::<f64>::zeros(ModelDims {
            vocab: 4,
            d: 2,
            context: 3,
        });
        let bytes = backbone_to_bytes(&m);
        assert!(backbone_from_bytes::<f64>(&bytes[..bytes.len() - 8]).is_err());
        assert!(backbone_from_bytes::<f64>(b"WATST1xxxxxxxxxxxxxx").is_err());
    }
}
