//! Binary checkpoint container.
//!
//! ```text
//! magic       7 bytes   "SEQNET1"
//! kind        u8        0 = LSTM, 1 = GRU
//! dims        6 × u32   input, hidden, layers, directions, head_hidden, output
//! channels    u32       scaler channel count n
//! scaler      n × (f64 min, f64 max)
//! count       u64       parameter count
//! params      count × f64, in the layout order of `network`
//! ```
//!
//! All integers and floats are little-endian. Trailing bytes are rejected.

use std::path::Path;

use crate::cell::CellKind;
use crate::network::{Dims, NetworkWeights, DIRECTIONS};
use crate::scaler::Scaler;
use crate::{Error, Result};

pub const MAGIC: &[u8; 7] = b"SEQNET1";

/// Upper bound accepted for any single dimension when decoding.
const MAX_DIM: u32 = 4096;
const MAX_LAYERS: u32 = 64;

pub fn encode(w: &NetworkWeights) -> Vec<u8> {
    let d = w.dims();
    let s = w.scaler();
    let mut out = Vec::with_capacity(64 + 16 * s.channels() + 8 * w.param_count());
    out.extend_from_slice(MAGIC);
    out.push(w.kind().code());
    for v in [d.input, d.hidden, d.layers, DIRECTIONS, d.head_hidden, d.output] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&(s.channels() as u32).to_le_bytes());
    for (lo, hi) in s.min().iter().zip(s.max()) {
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
    }
    out.extend_from_slice(&(w.param_count() as u64).to_le_bytes());
    for p in w.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.at < n {
            return Err(Error::Checkpoint(format!("truncated at byte {} while reading {what}", self.at)));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.at
    }
}

pub fn decode(bytes: &[u8]) -> Result<NetworkWeights> {
    let mut c = Cursor { buf: bytes, at: 0 };
    if c.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::Checkpoint("bad magic, not a SEQNET1 checkpoint".into()));
    }
    let code = c.take(1, "cell kind")?[0];
    let kind = CellKind::from_code(code).ok_or_else(|| Error::Checkpoint(format!("unknown cell kind {code}")))?;
    let mut dims = [0u32; 6];
    for (v, name) in dims.iter_mut().zip(["input", "hidden", "layers", "directions", "head_hidden", "output"]) {
        *v = c.u32(name)?;
        let cap = if name == "layers" { MAX_LAYERS } else { MAX_DIM };
        if *v == 0 || *v > cap {
            return Err(Error::Checkpoint(format!("{name} = {v} outside 1..={cap}")));
        }
    }
    if dims[3] as usize != DIRECTIONS {
        return Err(Error::Checkpoint(format!("only bidirectional networks are supported, got {} directions", dims[3])));
    }
    let dims = Dims {
        input: dims[0] as usize,
        hidden: dims[1] as usize,
        layers: dims[2] as usize,
        head_hidden: dims[4] as usize,
        output: dims[5] as usize,
    };
    let channels = c.u32("scaler channels")? as usize;
    if channels != dims.input + dims.output {
        return Err(Error::Checkpoint(format!("scaler has {channels} channels, network needs {}", dims.input + dims.output)));
    }
    let mut min = Vec::with_capacity(channels);
    let mut max = Vec::with_capacity(channels);
    for _ in 0..channels {
        min.push(c.f64("scaler min")?);
        max.push(c.f64("scaler max")?);
    }
    let scaler = Scaler::new(min, max).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let count = c.u64("parameter count")?;
    if count.checked_mul(8) != Some(c.remaining() as u64) {
        return Err(Error::Checkpoint(format!("{count} parameters declared, {} bytes remain", c.remaining())));
    }
    let mut params = Vec::with_capacity(count as usize);
    for _ in 0..count {
        params.push(c.f64("parameters")?);
    }
    NetworkWeights::from_parts(kind, dims, params, scaler).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save(w: &NetworkWeights, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(w))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<NetworkWeights> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: CellKind) -> NetworkWeights {
        let dims = Dims { input: 3, hidden: 2, layers: 2, head_hidden: 3, output: 2 };
        NetworkWeights::init(kind, dims, Scaler::identity(5), 7).unwrap()
    }

    #[test]
    fn round_trip_is_byte_exact() {
        for kind in [CellKind::Lstm, CellKind::Gru] {
            let w = tiny(kind);
            let bytes = encode(&w);
            let back = decode(&bytes).unwrap();
            assert_eq!(back, w);
            assert_eq!(encode(&back), bytes);
        }
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode(&tiny(CellKind::Gru));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode(&magic).is_err());
        let mut kind = bytes.clone();
        kind[7] = 9;
        assert!(decode(&kind).is_err());
        let mut nan = bytes.clone();
        let n = nan.len();
        nan[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode(&nan).is_err());
        assert!(decode(b"").is_err());
    }
}
