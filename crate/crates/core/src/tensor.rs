// SPDX-License-Identifier: Apache-2.0

//! Minimal binary tensor container used for image features, depth
//! distributions, BEV maps and head outputs.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size      | field                         |
//! |--------|-----------|-------------------------------|
//! | 0      | 4         | magic `b"RCBT"`               |
//! | 4      | 1         | version, currently `1`        |
//! | 5      | 1         | dtype: `1` = f32, `2` = f64   |
//! | 6      | 2         | rank (u16)                    |
//! | 8      | 8 * rank  | dims (u64 each)               |
//! | ...    | ...       | row-major little-endian data  |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RCBT";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32 = 1,
    F64 = 2,
}

impl DType {
    fn from_code(c: u8) -> Result<Self> {
        match c {
            1 => Ok(DType::F32),
            2 => Ok(DType::F64),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    F32(ArrayD<f32>),
    F64(ArrayD<f64>),
}

impl From<ArrayD<f32>> for Tensor {
    fn from(a: ArrayD<f32>) -> Self {
        Tensor::F32(a)
    }
}

impl From<ArrayD<f64>> for Tensor {
    fn from(a: ArrayD<f64>) -> Self {
        Tensor::F64(a)
    }
}

impl Tensor {
    pub fn dtype(&self) -> DType {
        match self {
            Tensor::F32(_) => DType::F32,
            Tensor::F64(_) => DType::F64,
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            Tensor::F32(a) => a.shape(),
            Tensor::F64(a) => a.shape(),
        }
    }

    /// Narrows f64 data to f32.
    pub fn into_f32(self) -> ArrayD<f32> {
        match self {
            Tensor::F32(a) => a,
            Tensor::F64(a) => a.mapv(|v| v as f32),
        }
    }

    /// Widens f32 data losslessly.
    pub fn into_f64(self) -> ArrayD<f64> {
        match self {
            Tensor::F32(a) => a.mapv(f64::from),
            Tensor::F64(a) => a,
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let shape = self.shape();
        w.write_all(&MAGIC)?;
        w.write_all(&[VERSION, self.dtype() as u8])?;
        w.write_all(&(shape.len() as u16).to_le_bytes())?;
        for &d in shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        match self {
            Tensor::F32(a) => {
                for v in a.iter() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            Tensor::F64(a) => {
                for v in a.iter() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)
            .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
        if head[..4] != MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", &head[..4])));
        }
        if head[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", head[4])));
        }
        let dtype = DType::from_code(head[5])?;
        let rank = u16::from_le_bytes([head[6], head[7]]) as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)
                .map_err(|e| Error::Format(format!("truncated dims: {e}")))?;
            let d = usize::try_from(u64::from_le_bytes(b))
                .map_err(|_| Error::Format("dimension overflows usize".into()))?;
            dims.push(d);
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format("element count overflows".into()))?;
        let nbytes = count
            .checked_mul(dtype.size())
            .ok_or_else(|| Error::Format("payload size overflows".into()))?;
        let mut payload = Vec::with_capacity(nbytes);
        r.by_ref().take(nbytes as u64).read_to_end(&mut payload).map_err(|e| Error::Format(e.to_string()))?;
        if payload.len() != nbytes {
            return Err(Error::Format(format!(
                "payload has {} bytes, header implies {nbytes}",
                payload.len()
            )));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| Error::Format(e.to_string()))? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        let shape = IxDyn(&dims);
        let tensor = match dtype {
            DType::F32 => {
                let data = payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                Tensor::F32(ArrayD::from_shape_vec(shape, data).expect("length checked"))
            }
            DType::F64 => {
                let data = payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                Tensor::F64(ArrayD::from_shape_vec(shape, data).expect("length checked"))
            }
        };
        Ok(tensor)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f)).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let t = Tensor::F32(ArrayD::from_shape_vec(IxDyn(&[2, 1]), vec![1.0f32, -2.5]).unwrap());
        let b = t.to_bytes();
        assert_eq!(&b[..4], b"RCBT");
        assert_eq!(b[4], 1);
        assert_eq!(b[5], 1);
        assert_eq!(&b[6..8], &[2, 0]);
        assert_eq!(&b[8..16], &2u64.to_le_bytes());
        assert_eq!(&b[16..24], &1u64.to_le_bytes());
        assert_eq!(&b[24..28], &1.0f32.to_le_bytes());
        assert_eq!(&b[28..32], &(-2.5f32).to_le_bytes());
        assert_eq!(b.len(), 32);
    }

    #[test]
    fn rejects_corrupt_input() {
        let t = Tensor::F64(Array3::<f64>::zeros((1, 2, 3)).into_dyn());
        let b = t.to_bytes();
        assert!(Tensor::read_from(&b[..b.len() - 1]).is_err());
        let mut extra = b.clone();
        extra.push(0);
        assert!(Tensor::read_from(&extra[..]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(Tensor::read_from(&bad[..]).is_err());
        let mut bad = b;
        bad[5] = 9;
        assert!(Tensor::read_from(&bad[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(dims in prop::collection::vec(0usize..4, 0..4), seed in any::<u64>()) {
            let n: usize = dims.iter().product();
            let data: Vec<f64> = (0..n).map(|i| (seed.wrapping_mul(i as u64 + 1) as f64).sin() * 1e3).collect();
            let t = Tensor::F64(ArrayD::from_shape_vec(IxDyn(&dims), data).unwrap());
            let back = Tensor::read_from(&t.to_bytes()[..]).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
