//! Steering checkpoint: `WATST1`, |C| and d as little-endian u32, each
//! culture id as a u32 byte length plus UTF-8, ε as f64, the W slices in
//! registry order as f64, and a CRC32 of everything before it.

use std::fs;
use std::path::Path;

use crate::data::CultureId;
use crate::steer::SteerModel;
use crate::{Error, Result, Scalar};

const MAGIC: &[u8; 6] = b"WATST1";

pub fn steer_to_bytes<T: Scalar>(model: &SteerModel<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(model.registry().len() as u32).to_le_bytes());
    out.extend_from_slice(&(model.d() as u32).to_le_bytes());
    for c in model.registry() {
        out.extend_from_slice(&(c.as_str().len() as u32).to_le_bytes());
        out.extend_from_slice(c.as_str().as_bytes());
    }
    out.extend_from_slice(&model.epsilon.as_f64().to_le_bytes());
    for &x in model.weights() {
        out.extend_from_slice(&x.as_f64().to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Checkpoint("steer checkpoint truncated".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Decodes a checkpoint and validates it against the expected registry and
/// hidden size.
pub fn steer_from_bytes<T: Scalar>(bytes: &[u8], registry: &[CultureId], d: usize) -> Result<SteerModel<T>> {
    if bytes.len() < 6 + 8 + 8 + 4 || &bytes[..6] != MAGIC {
        return Err(Error::Checkpoint("not a steer checkpoint (bad magic)".into()));
    }
    let (body, footer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(footer.try_into().unwrap());
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::Checkpoint(format!(
            "checksum mismatch: stored {stored:08x}, computed {actual:08x}"
        )));
    }
    let mut r = Reader { bytes: body, pos: 6 };
    let n = r.u32()? as usize;
    let file_d = r.u32()? as usize;
    if file_d != d {
        return Err(Error::DimMismatch {
            expected: d,
            got: file_d,
        });
    }
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let len = r.u32()? as usize;
        let s = std::str::from_utf8(r.take(len)?).map_err(|_| Error::Checkpoint("culture id is not UTF-8".into()))?;
        ids.push(CultureId::new(s)?);
    }
    for i in 0..n.max(registry.len()) {
        let expected = registry.get(i).map_or("<none>", |c| c.as_str());
        let found = ids.get(i).map_or("<none>", |c| c.as_str());
        if expected != found {
            return Err(Error::RegistryMismatch {
                index: i,
                expected: expected.into(),
                found: found.into(),
            });
        }
    }
    let eps = r.f64()?;
    let mut model = SteerModel::new(ids, d, T::of(eps))?;
    for x in model.w.iter_mut() {
        *x = T::of(r.f64()?);
    }
    if r.pos != body.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", body.len() - r.pos)));
    }
    if !model.w.iter().all(|x| x.is_finite()) {
        return Err(Error::Checkpoint("non-finite steering weight".into()));
    }
    Ok(model)
}

pub fn save_steer<T: Scalar>(path: &Path, model: &SteerModel<T>) -> Result<()> {
    fs::write(path, steer_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_steer<T: Scalar>(path: &Path, registry: &[CultureId], d: usize) -> Result<SteerModel<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    steer_from_bytes(&bytes, registry, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(names: &[&str]) -> Vec<CultureId> {
        names.iter().map(|n| CultureId::new(*n).unwrap()).collect()
    }

    fn model() -> SteerModel<f64> {
        let mut m = SteerModel::new(reg(&["USA", "UK"]), 3, 1e-3).unwrap();
        for (i, x) in m.w.iter_mut().enumerate() {
            *x = (i as f64).sin() * 1e3;
        }
        m
    }

    #[test]
    fn round_trip_bitwise() {
        let m = model();
        let bytes = steer_to_bytes(&m);
        let back: SteerModel<f64> = steer_from_bytes(&bytes, &reg(&["USA", "UK"]), 3).unwrap();
        assert_eq!(
            back.weights().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            m.weights().iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(back.epsilon.to_bits(), m.epsilon.to_bits());
    }

    #[test]
    fn wrong_d_rejected() {
        let bytes = steer_to_bytes(&model());
        assert!(matches!(
            steer_from_bytes::<f64>(&bytes, &reg(&["USA", "UK"]), 4),
            Err(Error::DimMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn permuted_registry_names_first_mismatch() {
        let bytes = steer_to_bytes(&model());
        match steer_from_bytes::<f64>(&bytes, &reg(&["UK", "USA"]), 3) {
            Err(Error::RegistryMismatch { index, expected, found }) => {
                assert_eq!((index, expected.as_str(), found.as_str()), (0, "UK", "USA"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let mut bytes = steer_to_bytes(&model());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 1;
        assert!(matches!(
            steer_from_bytes::<f64>(&bytes, &reg(&["USA", "UK"]), 3),
            Err(Error::Checkpoint(_))
        ));
    }
}
