use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{AdamState, ParamMap, RngState, Tensor};

const MAGIC: &[u8; 8] = b"LCGCKPT\0";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    Magic,
    #[error("checkpoint version {0} is not supported")]
    Version(u32),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("checkpoint corrupt: {0}")]
    Corrupt(String),
}

/// Everything needed to resume training bit-exactly.
///
/// Layout: magic, u32 version, then little-endian fields in declaration
/// order. Floats are stored as raw IEEE-754 bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ParamMap,
    pub adam: AdamState,
    pub epoch: u64,
    pub beta: f64,
    pub batches: u64,
    pub seed: u64,
    pub rng: Vec<RngState>,
    /// Free-form text entries (configuration, vocabulary).
    pub meta: BTreeMap<String, String>,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn tensor(&mut self, t: &Tensor) {
        self.u32(t.rows() as u32);
        self.u32(t.cols() as u32);
        for &x in t.data() {
            self.f64(x);
        }
    }
    fn map(&mut self, m: &ParamMap) {
        self.u32(m.len() as u32);
        for (k, t) in m {
            self.str(k);
            self.tensor(t);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CheckpointError> {
        if self.buf.len() - self.pos < n {
            return Err(CheckpointError::Truncated(self.pos));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn str(&mut self) -> Result<String, CheckpointError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| CheckpointError::Corrupt(e.to_string()))
    }
    fn tensor(&mut self) -> Result<Tensor, CheckpointError> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let n = rows.checked_mul(cols).filter(|n| n * 8 <= self.buf.len() - self.pos);
        let n = n.ok_or(CheckpointError::Truncated(self.pos))?;
        let data = (0..n).map(|_| self.f64()).collect::<Result<Vec<_>, _>>()?;
        Tensor::new(rows, cols, data).map_err(|e| CheckpointError::Corrupt(e.to_string()))
    }
    fn map(&mut self) -> Result<ParamMap, CheckpointError> {
        let n = self.u32()?;
        let mut out = ParamMap::new();
        for _ in 0..n {
            let k = self.str()?;
            out.insert(k, self.tensor()?);
        }
        Ok(out)
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(MAGIC.to_vec());
        w.u32(VERSION);
        w.map(&self.params);
        let a = &self.adam;
        for x in [a.lr, a.beta1, a.beta2, a.eps] {
            w.f64(x);
        }
        w.u64(a.t);
        w.map(&a.m);
        w.map(&a.v);
        w.u64(self.epoch);
        w.f64(self.beta);
        w.u64(self.batches);
        w.u64(self.seed);
        w.u32(self.rng.len() as u32);
        for s in &self.rng {
            w.str(&s.name);
            w.0.extend_from_slice(&s.seed);
            w.u64(s.stream);
            w.0.extend_from_slice(&s.word_pos.to_le_bytes());
        }
        w.u32(self.meta.len() as u32);
        for (k, v) in &self.meta {
            w.str(k);
            w.str(v);
        }
        w.0
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Checkpoint, CheckpointError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8).map_err(|_| CheckpointError::Magic)? != MAGIC {
            return Err(CheckpointError::Magic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let params = r.map()?;
        let (lr, beta1, beta2, eps) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let t = r.u64()?;
        let m = r.map()?;
        let v = r.map()?;
        let adam = AdamState { lr, beta1, beta2, eps, t, m, v };
        let epoch = r.u64()?;
        let beta = r.f64()?;
        let batches = r.u64()?;
        let seed = r.u64()?;
        let mut rng = Vec::new();
        for _ in 0..r.u32()? {
            let name = r.str()?;
            let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
            let stream = r.u64()?;
            let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
            rng.push(RngState { name, seed, stream, word_pos });
        }
        let mut meta = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.str()?;
            meta.insert(k, r.str()?);
        }
        if r.pos != buf.len() {
            return Err(CheckpointError::Corrupt(format!("{} trailing bytes", buf.len() - r.pos)));
        }
        Ok(Checkpoint { params, adam, epoch, beta, batches, seed, rng, meta })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{xavier_normal, RngStreams};

    fn sample() -> Checkpoint {
        let mut rngs = RngStreams::new(5);
        let w = xavier_normal(&[4, 3], rngs.stream("init")).unwrap();
        let mut params = ParamMap::new();
        params.insert("w".into(), w.clone());
        params.insert("neg_zero".into(), Tensor::row(&[-0.0, f64::MIN_POSITIVE, 1.0 / 3.0]));
        let mut adam = AdamState::new(1e-3);
        adam.t = 17;
        adam.m.insert("w".into(), w.map(|x| x * 0.1));
        adam.v.insert("w".into(), w.map(|x| x * x));
        rngs.stream("reparam");
        Checkpoint {
            params,
            adam,
            epoch: 3,
            beta: 0.034,
            batches: 17,
            seed: 5,
            rng: rngs.states(),
            meta: BTreeMap::from([("config".to_string(), "epochs = 500\n".to_string())]),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = Checkpoint::from_bytes(&c.to_bytes()).unwrap();
        for (k, t) in &c.params {
            assert!(t.bit_eq(&back.params[k]), "{k}");
        }
        assert_eq!(back.params["neg_zero"].data()[0].to_bits(), (-0.0f64).to_bits());
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), c.to_bytes());
    }

    #[test]
    fn rejects_damage() {
        let bytes = sample().to_bytes();
        assert!(matches!(Checkpoint::from_bytes(b"nope"), Err(CheckpointError::Magic)));
        assert!(matches!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]), Err(CheckpointError::Truncated(_))));
        let mut v = bytes.clone();
        v[8] = 9;
        assert!(matches!(Checkpoint::from_bytes(&v), Err(CheckpointError::Version(9))));
    }
}
