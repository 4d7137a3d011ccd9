//! Little-endian fixed-width byte encoding shared by the tensor and model
//! file formats.

use crate::error::{Error, Result};
use crate::tensor::{DenseMatrix, DenseTensor};

#[derive(Debug, Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    /// Writes a `usize` as `u32`, failing if it does not fit.
    pub fn len(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v)
            .map_err(|_| Error::ExtentOverflow(format!("{v} does not fit in u32")))?;
        self.u32(v);
        Ok(())
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        self.buf.reserve(vs.len() * 8);
        for &v in vs {
            self.f64(v);
        }
    }

    /// Count-prefixed list of `u32`.
    pub fn usizes(&mut self, vs: &[usize]) -> Result<()> {
        self.len(vs.len())?;
        vs.iter().try_for_each(|&v| self.len(v))
    }

    pub fn string(&mut self, s: &str) -> Result<()> {
        self.len(s.len())?;
        self.bytes(s.as_bytes());
        Ok(())
    }

    /// Dims list followed by the row-major payload.
    pub fn tensor(&mut self, t: &DenseTensor) -> Result<()> {
        self.usizes(t.dims())?;
        self.f64s(t.data());
        Ok(())
    }

    pub fn matrix(&mut self, m: &DenseMatrix) -> Result<()> {
        self.len(m.rows())?;
        self.len(m.cols())?;
        self.f64s(m.data());
        Ok(())
    }
}

#[derive(Debug)]
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated(format!(
                "{what}: need {n} bytes at offset {}, {} left",
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        let found: [u8; 4] = got.try_into().expect("4 bytes");
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn len(&mut self, what: &str) -> Result<usize> {
        Ok(self.u32(what)? as usize)
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| Error::ExtentOverflow(format!("{what}: {n} reals")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub fn usizes(&mut self, what: &str) -> Result<Vec<usize>> {
        let n = self.len(what)?;
        if n > self.remaining() / 4 {
            return Err(Error::Truncated(format!("{what}: list of {n} entries")));
        }
        (0..n).map(|_| self.len(what)).collect()
    }

    pub fn string(&mut self, what: &str) -> Result<String> {
        let n = self.len(what)?;
        let raw = self.take(n, what)?;
        String::from_utf8(raw.to_vec()).map_err(|e| Error::Corrupt(format!("{what}: {e}")))
    }

    pub fn tensor(&mut self, what: &str) -> Result<DenseTensor> {
        let dims = self.usizes(what)?;
        let len = crate::tensor::checked_volume(&dims)
            .map_err(|e| Error::Corrupt(format!("{what}: {e}")))?;
        let data = self.f64s(len, what)?;
        DenseTensor::new(dims, data)
    }

    pub fn matrix(&mut self, what: &str) -> Result<DenseMatrix> {
        let rows = self.len(what)?;
        let cols = self.len(what)?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::ExtentOverflow(format!("{what}: {rows}x{cols}")))?;
        let data = self.f64s(n, what)?;
        DenseMatrix::new(rows, cols, data).map_err(|e| Error::Corrupt(format!("{what}: {e}")))
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}
