//! Binary state snapshots.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "OPE1"                      magic / format version
//! u8   kind                   0 = single eigensystem, 1 = additive
//! u32  len, [u8; len]         feature-map descriptor (kernel id)
//! u32  input dimension        dimension header
//! f64  alpha
//! u32  schedule dimension d
//! f64  schedule constant c
//! u32  initial basis N0
//! f64  clamp M
//! f64  jitter tolerance
//! u32  warm-up extra
//! u8   initialized
//! u64  columns N
//! u64  samples n
//! u64  flop counter
//! f64 × N            theta
//! f64 × N(N+1)/2     Phi upper triangle, row-major
//! f64 × N            s = Psi^T Y
//! f64 × n·dim        covariate history
//! f64 × n            response history
//! ```
//!
//! The cached design columns are rebuilt from the history on load, which
//! reproduces them bit for bit.

use std::io::{Read, Write};

use super::{EstimatorConfig, OnlineProjection, SymMatrix};
use crate::eigensystems::EigenSystem;
use crate::error::{Error, Result};
use crate::features::FeatureMap;

pub const MAGIC: &[u8; 4] = b"OPE1";

/// Feature maps that can be named in a snapshot header.
pub trait SnapshotFeatures: FeatureMap + Sized {
    const KIND: u8;
    fn descriptor(&self) -> String;
    fn from_descriptor(desc: &str, input_dim: usize) -> Result<Self>;
}

impl SnapshotFeatures for EigenSystem {
    const KIND: u8 = 0;

    fn descriptor(&self) -> String {
        self.id().to_string()
    }

    fn from_descriptor(desc: &str, input_dim: usize) -> Result<Self> {
        let sys = EigenSystem::new(desc.parse()?)?;
        if sys.dim() != input_dim {
            return Err(Error::Snapshot(format!(
                "kernel `{desc}` has dimension {} but header says {input_dim}",
                sys.dim()
            )));
        }
        Ok(sys)
    }
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Snapshot(format!("{v} does not fit in u32")))?;
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        vs.iter().try_for_each(|v| self.f64(*v))
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const K: usize>(&mut self) -> Result<[u8; K]> {
        let mut buf = [0u8; K];
        self.0
            .read_exact(&mut buf)
            .map_err(|e| Error::Snapshot(format!("truncated snapshot: {e}")))?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes()?) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|_| self.f64()).collect()
    }
}

impl<F: SnapshotFeatures> OnlineProjection<F> {
    pub fn write_snapshot<W: Write>(&self, out: W) -> Result<()> {
        let mut w = Writer(out);
        w.0.write_all(MAGIC)?;
        w.u8(F::KIND)?;
        let desc = self.features.descriptor();
        w.u32(desc.len())?;
        w.0.write_all(desc.as_bytes())?;
        w.u32(self.features.input_dim())?;
        let c = &self.config;
        w.f64(c.alpha)?;
        w.u32(c.dim)?;
        w.f64(c.schedule_constant)?;
        w.u32(c.initial_basis)?;
        w.f64(c.clamp)?;
        w.f64(c.jitter_tol)?;
        w.u32(c.warmup_extra)?;
        w.u8(self.initialized as u8)?;
        w.u64(self.columns() as u64)?;
        w.u64(self.n() as u64)?;
        w.u64(self.flops)?;
        w.f64s(&self.theta)?;
        w.f64s(&self.phi.upper())?;
        w.f64s(&self.s)?;
        w.f64s(&self.xs)?;
        w.f64s(&self.ys)?;
        Ok(())
    }

    pub fn to_snapshot_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_snapshot(&mut buf)?;
        Ok(buf)
    }

    pub fn read_snapshot<R: Read>(input: R) -> Result<Self> {
        let mut r = Reader(input);
        if &r.bytes::<4>()? != MAGIC {
            return Err(Error::Snapshot("missing OPE1 magic".into()));
        }
        let kind = r.u8()?;
        if kind != F::KIND {
            return Err(Error::Snapshot(format!(
                "snapshot holds model kind {kind}, expected {}",
                F::KIND
            )));
        }
        let len = r.u32()?;
        let mut desc = vec![0u8; len];
        r.0.read_exact(&mut desc)
            .map_err(|e| Error::Snapshot(format!("truncated descriptor: {e}")))?;
        let desc = String::from_utf8(desc).map_err(|_| Error::Snapshot("descriptor is not UTF-8".into()))?;
        let input_dim = r.u32()?;
        let features = F::from_descriptor(&desc, input_dim)?;

        let config = EstimatorConfig {
            alpha: r.f64()?,
            dim: r.u32()?,
            schedule_constant: r.f64()?,
            initial_basis: r.u32()?,
            clamp: r.f64()?,
            jitter_tol: r.f64()?,
            warmup_extra: r.u32()?,
        };
        let mut state = OnlineProjection::new(features, config)?;
        let initialized = match r.u8()? {
            0 => false,
            1 => true,
            v => return Err(Error::Snapshot(format!("bad initialized flag {v}"))),
        };
        let cols = r.u64()? as usize;
        let n = r.u64()? as usize;
        state.flops = r.u64()?;
        let theta = r.f64s(cols)?;
        let upper = r.f64s(cols * (cols + 1) / 2)?;
        let s = r.f64s(cols)?;
        state.xs = r.f64s(n * input_dim)?;
        state.ys = r.f64s(n)?;
        if initialized {
            state.phi = SymMatrix::from_upper(cols, &upper)?;
            state.s = s;
            state.theta = theta;
            state.design = (0..cols).map(|m| state.column_over_history(m)).collect();
            state.initialized = true;
        } else if cols != 0 {
            return Err(Error::Snapshot("uninitialized snapshot carries coefficients".into()));
        }
        Ok(state)
    }

    pub fn from_snapshot_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_snapshot(bytes)
    }
}
