//! Raw pulse dump: one little-endian binary file per run.
//!
//! ```text
//! offset  size  field
//!      0     8  magic  "XPDRDUMP"
//!      8     4  u32    format version (1)
//!     12     4  u32    pulse_count
//!     16     4  u32    samples_per_pulse
//!     20     4  u32    reserved, 0
//!     24     8  f64    sample_rate_hz
//!     32     …  pulse_count × samples_per_pulse × (f32 I, f32 Q)
//! ```

use std::io::{self, Read, Write};

use num_complex::Complex;
use thiserror::Error;

use crate::Scalar;

pub const MAGIC: &[u8; 8] = b"XPDRDUMP";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a pulse dump (bad magic)")]
    BadMagic,
    #[error("unsupported dump format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("dump truncated in pulse {pulse}")]
    Truncated { pulse: usize },
    #[error("pulse has {got} samples, header declares {expected}")]
    Length { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub pulse_count: u32,
    pub samples_per_pulse: u32,
    pub sample_rate_hz: f64,
}

impl DumpHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..8].copy_from_slice(MAGIC);
        b[8..12].copy_from_slice(&VERSION.to_le_bytes());
        b[12..16].copy_from_slice(&self.pulse_count.to_le_bytes());
        b[16..20].copy_from_slice(&self.samples_per_pulse.to_le_bytes());
        b[24..32].copy_from_slice(&self.sample_rate_hz.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN]) -> Result<Self, DumpError> {
        if &b[0..8] != MAGIC {
            return Err(DumpError::BadMagic);
        }
        let u = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let version = u(8);
        if version != VERSION {
            return Err(DumpError::Version {
                found: version,
                expected: VERSION,
            });
        }
        Ok(DumpHeader {
            pulse_count: u(12),
            samples_per_pulse: u(16),
            sample_rate_hz: f64::from_le_bytes(b[24..32].try_into().unwrap()),
        })
    }
}

pub struct DumpWriter<W: Write> {
    inner: W,
    header: DumpHeader,
    written: usize,
}

impl<W: Write> DumpWriter<W> {
    pub fn new(mut inner: W, header: DumpHeader) -> Result<Self, DumpError> {
        inner.write_all(&header.to_bytes())?;
        Ok(DumpWriter { inner, header, written: 0 })
    }

    pub fn write_pulse<T: Scalar>(&mut self, samples: &[Complex<T>]) -> Result<(), DumpError> {
        let expected = self.header.samples_per_pulse as usize;
        if samples.len() != expected {
            return Err(DumpError::Length {
                got: samples.len(),
                expected,
            });
        }
        let mut buf = Vec::with_capacity(samples.len() * 8);
        for z in samples {
            buf.extend_from_slice(&(z.re.to_f64_lossy() as f32).to_le_bytes());
            buf.extend_from_slice(&(z.im.to_f64_lossy() as f32).to_le_bytes());
        }
        self.inner.write_all(&buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn pulses_written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> Result<W, DumpError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub struct DumpReader<R: Read> {
    inner: R,
    header: DumpHeader,
    next: usize,
}

impl<R: Read> DumpReader<R> {
    pub fn new(mut inner: R) -> Result<Self, DumpError> {
        let mut b = [0u8; HEADER_LEN];
        inner.read_exact(&mut b).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => DumpError::BadMagic,
            _ => DumpError::Io(e),
        })?;
        let header = DumpHeader::from_bytes(&b)?;
        Ok(DumpReader { inner, header, next: 0 })
    }

    pub fn header(&self) -> DumpHeader {
        self.header
    }

    /// Next pulse, or `None` after the last one declared in the header.
    pub fn read_pulse<T: Scalar>(&mut self) -> Result<Option<Vec<Complex<T>>>, DumpError> {
        if self.next >= self.header.pulse_count as usize {
            return Ok(None);
        }
        let n = self.header.samples_per_pulse as usize;
        let mut buf = vec![0u8; n * 8];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => DumpError::Truncated { pulse: self.next },
            _ => DumpError::Io(e),
        })?;
        self.next += 1;
        Ok(Some(
            buf.chunks_exact(8)
                .map(|c| {
                    let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
                    let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
                    Complex::new(T::of(re as f64), T::of(im as f64))
                })
                .collect(),
        ))
    }
}
