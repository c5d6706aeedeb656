//! Flat, versioned binary parameter container.
//!
//! Layout: magic `MRXT`, version u32, tensor count u32; then per tensor
//! name length u32, name bytes, rank u32, dims u32 each, raw little-endian
//! f32 scalars. All integers little-endian.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"MRXT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

pub fn write_checkpoint(path: &Path, tensors: &[CheckpointTensor]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
    w.write_u32::<LittleEndian>(tensors.len() as u32)?;
    for t in tensors {
        let numel: usize = t.dims.iter().product();
        if numel != t.data.len() {
            return Err(Error::BadLength {
                op: "write_checkpoint",
                shape: t.dims.clone(),
                got: t.data.len(),
            });
        }
        w.write_u32::<LittleEndian>(t.name.len() as u32)?;
        w.write_all(t.name.as_bytes())?;
        w.write_u32::<LittleEndian>(t.dims.len() as u32)?;
        for &d in &t.dims {
            w.write_u32::<LittleEndian>(d as u32)?;
        }
        for &x in &t.data {
            w.write_f32::<LittleEndian>(x)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<CheckpointTensor>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadCheckpoint(format!("bad magic {magic:?}")));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::BadCheckpoint(format!(
            "unsupported version {version}"
        )));
    }
    let count = r.read_u32::<LittleEndian>()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.read_u32::<LittleEndian>()? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|e| Error::BadCheckpoint(format!("non-utf8 tensor name: {e}")))?;
        let rank = r.read_u32::<LittleEndian>()? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.read_u32::<LittleEndian>()? as usize);
        }
        let numel: usize = dims.iter().product();
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            data.push(r.read_f32::<LittleEndian>()?);
        }
        out.push(CheckpointTensor { name, dims, data });
    }
    Ok(out)
}
