//! Binary checkpoint format.
//!
//! All integers and floats are little-endian.
//!
//! | field            | type                          |
//! |------------------|-------------------------------|
//! | magic            | 8 bytes, `b"QSECCKPT"`        |
//! | format version   | u32                           |
//! | input_dim        | u32                           |
//! | action_dim       | u32                           |
//! | hidden count `h` | u32                           |
//! | hidden widths    | `h` x u32                     |
//! | seed             | u64                           |
//! | parameter count  | u64                           |
//! | parameters       | f64 x count (layer order, then log_std) |
//! | has Adam state   | u8 (0 or 1)                   |
//! | Adam step        | u64          (if present)     |
//! | first moments    | f64 x count  (if present)     |
//! | second moments   | f64 x count  (if present)     |
//! | checksum         | 32 bytes, SHA-256 of everything above |

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{AdamState, MlpSpec, PolicyParams};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"QSECCKPT";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub adam: Option<AdamState>,
    pub seed: u64,
}

impl Checkpoint {
    pub fn spec(&self) -> &MlpSpec {
        self.params.spec()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let spec = self.params.spec();
        let n = self.params.len();
        let mut out = Vec::with_capacity(64 + 8 * n * 3);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(spec.input_dim as u32).to_le_bytes());
        out.extend_from_slice(&(spec.action_dim as u32).to_le_bytes());
        out.extend_from_slice(&(spec.hidden.len() as u32).to_le_bytes());
        for &h in &spec.hidden {
            out.extend_from_slice(&(h as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        put_f64s(&mut out, self.params.as_flat());
        match &self.adam {
            None => out.push(0),
            Some(adam) => {
                out.push(1);
                out.extend_from_slice(&adam.step.to_le_bytes());
                put_f64s(&mut out, &adam.first_moment);
                put_f64s(&mut out, &adam.second_moment);
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + CHECKSUM_LEN {
            return Err(Error::Checkpoint("file too short".into()));
        }
        let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(body).as_slice() != stored {
            return Err(Error::Checkpoint(
                "checksum mismatch (file truncated or corrupt)".into(),
            ));
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version}"
            )));
        }
        let input_dim = r.u32()? as usize;
        let action_dim = r.u32()? as usize;
        let n_hidden = r.u32()? as usize;
        let hidden = (0..n_hidden)
            .map(|_| r.u32().map(|h| h as usize))
            .collect::<Result<Vec<_>>>()?;
        let spec = MlpSpec::new(input_dim, hidden, action_dim)
            .map_err(|e| Error::Checkpoint(format!("invalid network header: {e}")))?;
        let seed = r.u64()?;
        let count = r.u64()? as usize;
        if count != spec.param_count() {
            return Err(Error::Checkpoint(format!(
                "parameter count {count} does not match header dimensions ({})",
                spec.param_count()
            )));
        }
        let params = PolicyParams::from_flat(&spec, r.f64s(count)?)?;
        let adam = match r.take(1)?[0] {
            0 => None,
            1 => {
                let step = r.u64()?;
                let first_moment = r.f64s(count)?;
                let second_moment = r.f64s(count)?;
                Some(AdamState {
                    first_moment,
                    second_moment,
                    step,
                })
            }
            other => {
                return Err(Error::Checkpoint(format!("bad Adam flag {other}")));
            }
        };
        if r.pos != body.len() {
            return Err(Error::Checkpoint("trailing bytes after payload".into()));
        }
        Ok(Checkpoint { params, adam, seed })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Content hash in the style of git object ids: SHA-256 over
/// `"blob <len>\0" + bytes`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Content hash of the parameter vector alone.
pub fn params_hash(params: &PolicyParams) -> String {
    let mut bytes = Vec::with_capacity(params.len() * 8);
    put_f64s(&mut bytes, params.as_flat());
    content_hash(&bytes)
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint("unexpected end of payload".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| {
            Error::Checkpoint("parameter count overflows".into())
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{adam_step, init, Gradients};

    fn sample() -> Checkpoint {
        let spec = MlpSpec::new(18, vec![8, 8], 4).unwrap();
        let mut params = init(&spec, 11).unwrap();
        let mut adam = AdamState::new(&params);
        let mut g = Gradients::zeros_like(&params);
        g.as_flat_mut().iter_mut().enumerate().for_each(|(i, x)| *x = (i as f64).sin());
        adam_step(&mut params, &mut adam, &g, 1e-3).unwrap();
        Checkpoint {
            params,
            adam: Some(adam),
            seed: 11,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);

        let no_adam = Checkpoint { adam: None, ..ck };
        assert_eq!(Checkpoint::from_bytes(&no_adam.to_bytes()).unwrap(), no_adam);
    }

    #[test]
    fn truncation_and_corruption_detected() {
        let bytes = sample().to_bytes();
        let err = Checkpoint::from_bytes(&bytes[..bytes.len() - 9]).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");

        let mut flipped = bytes.clone();
        flipped[40] ^= 0x01;
        assert!(Checkpoint::from_bytes(&flipped).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn content_hash_matches_git_blob_shape() {
        // Same framing as `git hash-object` under the SHA-256 object format.
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}
