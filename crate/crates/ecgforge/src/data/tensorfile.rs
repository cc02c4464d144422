//! On-disk tensor format.
//!
//! Layout, all integers little-endian regardless of host:
//!
//! ```text
//! magic   4 bytes  "ECGF"
//! version u32      currently 1
//! dtype   u32      1 = f32, 2 = f64
//! ndim    u32
//! dims    ndim x u64
//! payload row-major values, little-endian
//! ```
//!
//! Round-trips are bit-exact. Writes go through a `.part` file renamed into
//! place on completion.

use crate::error::{Error, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"ECGF";
pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE_F32: u32 = 1;
pub const DTYPE_F64: u32 = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum TensorPayload {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorPayload {
    pub fn len(&self) -> usize {
        match self {
            TensorPayload::F32(v) => v.len(),
            TensorPayload::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dtype_code(&self) -> u32 {
        match self {
            TensorPayload::F32(_) => DTYPE_F32,
            TensorPayload::F64(_) => DTYPE_F64,
        }
    }

    fn elem_size(&self) -> usize {
        match self {
            TensorPayload::F32(_) => 4,
            TensorPayload::F64(_) => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorData {
    pub dims: Vec<u64>,
    pub payload: TensorPayload,
}

impl TensorData {
    pub fn f32(dims: Vec<u64>, values: Vec<f32>) -> Self {
        debug_assert_eq!(dims.iter().product::<u64>() as usize, values.len());
        TensorData {
            dims,
            payload: TensorPayload::F32(values),
        }
    }

    pub fn f64(dims: Vec<u64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<u64>() as usize, values.len());
        TensorData {
            dims,
            payload: TensorPayload::F64(values),
        }
    }

    pub fn element_count(&self) -> u64 {
        self.dims.iter().product()
    }

    /// Values widened to f64 regardless of stored dtype.
    pub fn to_f64(&self) -> Vec<f64> {
        match &self.payload {
            TensorPayload::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorPayload::F64(v) => v.clone(),
        }
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.payload {
            TensorPayload::F32(v) => Some(v),
            TensorPayload::F64(_) => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.payload {
            TensorPayload::F64(v) => Some(v),
            TensorPayload::F32(_) => None,
        }
    }
}

pub fn save_tensor(path: &Path, tensor: &TensorData) -> Result<()> {
    let expected = tensor.element_count() as usize;
    if tensor.payload.len() != expected {
        return Err(Error::Shape(format!(
            "tensor dims {:?} require {expected} values, payload holds {}",
            tensor.dims,
            tensor.payload.len()
        )));
    }
    let mut bytes = Vec::with_capacity(16 + tensor.dims.len() * 8 + expected * tensor.payload.elem_size());
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&tensor.payload.dtype_code().to_le_bytes());
    bytes.extend_from_slice(&(tensor.dims.len() as u32).to_le_bytes());
    for &d in &tensor.dims {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    match &tensor.payload {
        TensorPayload::F32(v) => {
            for x in v {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        TensorPayload::F64(v) => {
            for x in v {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
    }

    let tmp = path.with_extension("part");
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_tensor(path: &Path) -> Result<TensorData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_tensor(&bytes)
}

/// Decode a tensor from raw bytes. Header corruption maps to distinct
/// errors: bad magic, unknown version, unknown dtype, truncated payload.
pub fn parse_tensor(bytes: &[u8]) -> Result<TensorData> {
    let header_err = || Error::Truncated {
        expected: 16,
        found: bytes.len() as u64,
    };
    if bytes.len() < 4 {
        return Err(header_err());
    }
    let mut magic = [0u8; 4];
    magic.copy_from_slice(&bytes[0..4]);
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    if bytes.len() < 16 {
        return Err(header_err());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::UnknownVersion(version));
    }
    let dtype = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let elem_size = match dtype {
        DTYPE_F32 => 4usize,
        DTYPE_F64 => 8usize,
        other => return Err(Error::UnknownDtype(other)),
    };
    let ndim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let dims_end = 16 + ndim * 8;
    if bytes.len() < dims_end {
        return Err(Error::Truncated {
            expected: dims_end as u64,
            found: bytes.len() as u64,
        });
    }
    let mut dims = Vec::with_capacity(ndim);
    for k in 0..ndim {
        let off = 16 + k * 8;
        dims.push(u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
    }
    let count = dims.iter().product::<u64>() as usize;
    let expected = dims_end as u64 + (count * elem_size) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len() as u64,
        });
    }
    let body = &bytes[dims_end..];
    let payload = match dtype {
        DTYPE_F32 => TensorPayload::F32(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        _ => TensorPayload::F64(
            body.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Ok(TensorData { dims, payload })
}
