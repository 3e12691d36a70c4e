//! Raw binary tensor files.
//!
//! Two little-endian layouts share a `u32 T | u32 H | u32 W` header:
//!
//! - [`FrameTensor`]: `T*H*W` `u32` counts followed by `T*H*W` `i32`
//!   polarity sums. This is the exact export of a frame sequence.
//! - [`RealTensor`]: `T*H*W` `f64` values. Used for features, logits and
//!   attention matrices.
//!
//! Neither layout carries a magic number, so the reader checks the payload
//! length against the header.

use std::io::{Read, Write};

use ndarray::{Array2, Array3};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTensor {
    pub counts: Array3<u32>,
    pub polarity: Array3<i32>,
}

impl FrameTensor {
    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        if self.counts.dim() != self.polarity.dim() {
            return Err(Error::Shape(format!(
                "counts {:?} vs polarity {:?}",
                self.counts.dim(),
                self.polarity.dim()
            )));
        }
        write_header(&mut sink, self.counts.dim())?;
        let mut buf = Vec::with_capacity(8 * self.counts.len());
        for v in self.counts.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.polarity.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
        Ok(())
    }

    pub fn read<R: Read>(mut source: R) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        let dim = read_header(&bytes, 8)?;
        let n = dim.0 * dim.1 * dim.2;
        let body = &bytes[12..];
        let counts = body[..4 * n]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let polarity = body[4 * n..]
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            counts: Array3::from_shape_vec(dim, counts).expect("length checked"),
            polarity: Array3::from_shape_vec(dim, polarity).expect("length checked"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    pub data: Array3<f64>,
}

impl RealTensor {
    pub fn from_matrix(m: &Array2<f64>) -> Self {
        let (r, c) = m.dim();
        Self {
            data: m.clone().into_shape_with_order((r, 1, c)).expect("same length"),
        }
    }

    /// Collapses `T x H x W` into `T x (H*W)`.
    pub fn into_matrix(self) -> Array2<f64> {
        let (t, h, w) = self.data.dim();
        let flat: Vec<f64> = self.data.iter().copied().collect();
        Array2::from_shape_vec((t, h * w), flat).expect("same length")
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        write_header(&mut sink, self.data.dim())?;
        let mut buf = Vec::with_capacity(8 * self.data.len());
        for v in self.data.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
        Ok(())
    }

    pub fn read<R: Read>(mut source: R) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        let dim = read_header(&bytes, 8)?;
        let data = bytes[12..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            data: Array3::from_shape_vec(dim, data).expect("length checked"),
        })
    }
}

fn write_header<W: Write>(sink: &mut W, (t, h, w): (usize, usize, usize)) -> Result<()> {
    for d in [t, h, w] {
        let d = u32::try_from(d).map_err(|_| Error::Shape(format!("dimension {d} exceeds u32")))?;
        sink.write_all(&d.to_le_bytes())?;
    }
    Ok(())
}

fn read_header(bytes: &[u8], bytes_per_cell: usize) -> Result<(usize, usize, usize)> {
    if bytes.len() < 12 {
        return Err(Error::Truncated(format!("tensor header needs 12 bytes, got {}", bytes.len())));
    }
    let dim = |k: usize| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap()) as usize;
    let (t, h, w) = (dim(0), dim(1), dim(2));
    let want = t
        .checked_mul(h)
        .and_then(|n| n.checked_mul(w))
        .and_then(|n| n.checked_mul(bytes_per_cell))
        .ok_or_else(|| Error::Shape(format!("{t}x{h}x{w} overflows")))?;
    if bytes.len() - 12 != want {
        return Err(Error::Truncated(format!(
            "{t}x{h}x{w} tensor needs {want} payload bytes, got {}",
            bytes.len() - 12
        )));
    }
    Ok((t, h, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_tensor_layout() {
        let mut counts = Array3::<u32>::zeros((1, 1, 2));
        counts[[0, 0, 1]] = 3;
        let mut polarity = Array3::<i32>::zeros((1, 1, 2));
        polarity[[0, 0, 1]] = -2;
        let t = FrameTensor { counts, polarity };
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(
            buf,
            [
                1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, //
                0, 0, 0, 0, 3, 0, 0, 0, //
                0, 0, 0, 0, 0xfe, 0xff, 0xff, 0xff
            ]
        );
        assert_eq!(FrameTensor::read(&buf[..]).unwrap(), t);
        assert!(FrameTensor::read(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn real_tensor_matrix_round_trip() {
        let m = Array2::from_shape_fn((3, 4), |(i, j)| i as f64 - 0.25 * j as f64);
        let mut buf = Vec::new();
        RealTensor::from_matrix(&m).write(&mut buf).unwrap();
        assert_eq!(RealTensor::read(&buf[..]).unwrap().into_matrix(), m);
    }
}
