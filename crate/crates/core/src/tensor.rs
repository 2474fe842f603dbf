//! Rank-4 `f32` tensors and the `PDGT` raw tensor file format.
//!
//! Layout of a `.pdgt` file:
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 4    | magic `PDGT`                             |
//! | 4      | 16   | four `u32` little-endian dims            |
//! | 20     | 4·n  | `f32` little-endian values, row-major    |
//!
//! Videos are `(frames, height, width, channels)`; the same layout carries
//! tracking videos (3 channels), masks (1), flow fields (2) and latents (16).

use std::path::Path;

use thiserror::Error;

use crate::error::{read_file, write_file, IoError};

pub const MAGIC: &[u8; 4] = b"PDGT";
const HEADER_LEN: usize = 4 + 4 * 4;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: bad magic, expected PDGT")]
    BadMagic { path: String },
    #[error("{path}: payload has {actual} bytes, dims {dims:?} need {expected}")]
    Truncated {
        path: String,
        dims: [usize; 4],
        expected: usize,
        actual: usize,
    },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    Shape { left: [usize; 4], right: [usize; 4] },
}

impl TensorError {
    pub fn is_io(&self) -> bool {
        !matches!(self, TensorError::Shape { .. })
    }
}

/// Dense row-major rank-4 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f32>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<f32>) -> Result<Self, TensorError> {
        if data.len() != dims.iter().product::<usize>() {
            return Err(TensorError::Shape {
                left: dims,
                right: [data.len(), 1, 1, 1],
            });
        }
        Ok(Self { dims, data })
    }

    #[inline]
    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let [_, d1, d2, d3] = self.dims;
        ((i * d1 + j) * d2 + k) * d3 + l
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize, l: usize) -> f32 {
        self.data[self.index(i, j, k, l)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize, k: usize, l: usize) -> &mut f32 {
        let idx = self.index(i, j, k, l);
        &mut self.data[idx]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Contiguous slice of the `i`-th outermost entry (one frame).
    pub fn frame(&self, i: usize) -> &[f32] {
        let stride = self.dims[1] * self.dims[2] * self.dims[3];
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn frame_mut(&mut self, i: usize) -> &mut [f32] {
        let stride = self.dims[1] * self.dims[2] * self.dims[3];
        &mut self.data[i * stride..(i + 1) * stride]
    }

    pub fn check_same_shape(&self, other: &Tensor4) -> Result<(), TensorError> {
        if self.dims == other.dims {
            Ok(())
        } else {
            Err(TensorError::Shape {
                left: self.dims,
                right: other.dims,
            })
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        for d in self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self, TensorError> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(TensorError::BadMagic {
                path: origin.to_string(),
            });
        }
        let mut dims = [0usize; 4];
        for (i, d) in dims.iter_mut().enumerate() {
            let o = 4 + 4 * i;
            *d = u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        }
        let n: usize = dims.iter().product();
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != 4 * n {
            return Err(TensorError::Truncated {
                path: origin.to_string(),
                dims,
                expected: 4 * n,
                actual: payload.len(),
            });
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn write(&self, path: &Path) -> Result<(), TensorError> {
        Ok(write_file(path, &self.to_bytes())?)
    }

    pub fn read(path: &Path) -> Result<Self, TensorError> {
        let bytes = read_file(path)?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}
