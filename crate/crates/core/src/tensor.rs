//! Bit-exact binary tensor files.
//!
//! Layout (little-endian):
//! - magic: 4 ASCII bytes "CPRP"
//! - version: u8 = 1
//! - dtype: u8 (0 = f32, 1 = u8)
//! - reserved: 2 zero bytes
//! - ndim: u32
//! - dims: ndim * u32
//! - payload: row-major values

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::maps::{BinaryMask, ProbMap, SampleStack};

pub const MAGIC: [u8; 4] = *b"CPRP";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32 = 0,
    U8 = 1,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

/// Payload of a tensor file.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::F32(_) => Dtype::F32,
            TensorData::U8(_) => Dtype::U8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense tensor with declared dims.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u32>,
    pub data: TensorData,
}

fn read_exact_at(
    reader: &mut impl Read,
    buf: &mut [u8],
    path: &Path,
    offset: u64,
) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = reader
            .read(&mut buf[filled..])
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::TruncatedPayload {
                path: path.to_path_buf(),
                offset: offset + filled as u64,
                expected: (buf.len() - filled) as u64,
            });
        }
        filled += n;
    }
    Ok(())
}

/// Reads a tensor file, validating header, payload length and value ranges.
///
/// F32 payloads must be finite and in [0,1]; U8 payloads must be 0 or 1.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut header = [0u8; 8];
    read_exact_at(&mut reader, &mut header, path, 0)?;
    if header[0..4] != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            offset: 0,
        });
    }
    if header[4] != VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            version: header[4],
            offset: 4,
        });
    }
    let dtype = match header[5] {
        0 => Dtype::F32,
        1 => Dtype::U8,
        other => {
            return Err(Error::UnsupportedDtype {
                path: path.to_path_buf(),
                dtype: other,
                offset: 5,
            })
        }
    };

    let mut u32_buf = [0u8; 4];
    read_exact_at(&mut reader, &mut u32_buf, path, 8)?;
    let ndim = u32::from_le_bytes(u32_buf) as usize;
    if ndim == 0 {
        return Err(Error::InvalidDims(format!("{}: ndim is 0", path.display())));
    }

    let mut dims = Vec::with_capacity(ndim);
    for i in 0..ndim {
        read_exact_at(&mut reader, &mut u32_buf, path, 12 + 4 * i as u64)?;
        dims.push(u32::from_le_bytes(u32_buf));
    }
    let payload_start = 12 + 4 * ndim as u64;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or_else(|| Error::InvalidDims(format!("{}: dims overflow", path.display())))?;

    let mut payload = vec![0u8; count * dtype.size()];
    read_exact_at(&mut reader, &mut payload, path, payload_start)?;

    // extra trailing bytes would make the declared dims a lie
    let mut probe = [0u8; 1];
    let extra = reader.read(&mut probe).map_err(|e| Error::io(path, e))?;
    if extra != 0 {
        return Err(Error::InvalidDims(format!(
            "{}: payload longer than product(dims)",
            path.display()
        )));
    }

    let data = match dtype {
        Dtype::F32 => {
            let mut values = Vec::with_capacity(count);
            for (i, chunk) in payload.chunks_exact(4).enumerate() {
                let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::ValueOutOfRange {
                        path: path.to_path_buf(),
                        value: v as f64,
                        offset: payload_start + 4 * i as u64,
                    });
                }
                values.push(v);
            }
            TensorData::F32(values)
        }
        Dtype::U8 => {
            for (i, &b) in payload.iter().enumerate() {
                if b > 1 {
                    return Err(Error::ValueOutOfRange {
                        path: path.to_path_buf(),
                        value: b as f64,
                        offset: payload_start + i as u64,
                    });
                }
            }
            TensorData::U8(payload)
        }
    };

    Ok(Tensor { dims, data })
}

/// Writes a tensor file; byte-stable for identical inputs.
pub fn write_tensor(path: impl AsRef<Path>, dims: &[u32], data: &TensorData) -> Result<()> {
    let path = path.as_ref();
    if dims.is_empty() {
        return Err(Error::InvalidDims("empty dims list".into()));
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or_else(|| Error::InvalidDims("dims overflow".into()))?;
    if count != data.len() {
        return Err(Error::InvalidDims(format!(
            "product(dims) = {count} but payload has {} values",
            data.len()
        )));
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));

    emit(&MAGIC)?;
    emit(&[VERSION, data.dtype() as u8, 0, 0])?;
    emit(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        emit(&d.to_le_bytes())?;
    }
    match data {
        TensorData::F32(values) => {
            for v in values {
                emit(&v.to_le_bytes())?;
            }
        }
        TensorData::U8(values) => emit(values)?,
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_prob_map(path: impl AsRef<Path>, map: &ProbMap) -> Result<()> {
    write_tensor(
        path,
        &[map.height as u32, map.width as u32],
        &TensorData::F32(map.values.iter().map(|&v| v as f32).collect()),
    )
}

pub fn write_sample_stack(path: impl AsRef<Path>, stack: &SampleStack) -> Result<()> {
    write_tensor(
        path,
        &[
            stack.n_samples as u32,
            stack.height as u32,
            stack.width as u32,
        ],
        &TensorData::F32(stack.values.iter().map(|&v| v as f32).collect()),
    )
}

pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    write_tensor(
        path,
        &[mask.height as u32, mask.width as u32],
        &TensorData::U8(mask.values.iter().map(|&b| b as u8).collect()),
    )
}

/// Reads an N x H x W f32 tensor as a sample stack.
pub fn read_sample_stack(path: impl AsRef<Path>) -> Result<SampleStack> {
    let path = path.as_ref();
    let t = read_tensor(path)?;
    let [n, h, w] = t.dims[..] else {
        return Err(Error::ShapeMismatch(format!(
            "{}: expected 3 dims for a sample stack, got {:?}",
            path.display(),
            t.dims
        )));
    };
    let TensorData::F32(values) = t.data else {
        return Err(Error::ShapeMismatch(format!(
            "{}: sample stack must be dtype f32",
            path.display()
        )));
    };
    SampleStack::new(
        n as usize,
        h as usize,
        w as usize,
        values.into_iter().map(|v| v as f64).collect(),
    )
}

/// Reads an H x W u8 tensor as a binary mask.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let t = read_tensor(path)?;
    let [h, w] = t.dims[..] else {
        return Err(Error::ShapeMismatch(format!(
            "{}: expected 2 dims for a mask, got {:?}",
            path.display(),
            t.dims
        )));
    };
    let TensorData::U8(values) = t.data else {
        return Err(Error::ShapeMismatch(format!(
            "{}: mask must be dtype u8",
            path.display()
        )));
    };
    BinaryMask::new(
        h as usize,
        w as usize,
        values.into_iter().map(|b| b == 1).collect(),
    )
}
