//! Binary container for named tensors.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   4 bytes  "OPRC"
//! version u32      currently 1
//! count   u32      number of tensors
//! per tensor:
//!   name_len u32, name bytes (UTF-8)
//!   ndim     u32, dims as u64 each
//!   values   f64 little-endian, product(dims) of them
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::nn::{ParamStore, Tensor};

const MAGIC: &[u8; 4] = b"OPRC";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint is missing tensor {0:?}")]
    MissingTensor(String),
    #[error("tensor {name:?} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },
}

/// Serializes `(name, tensor)` pairs in order.
pub fn write_tensors<W: Write>(
    mut w: W,
    tensors: &[(&str, &Tensor)],
) -> Result<(), CheckpointError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, tensor) in tensors {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(tensor.ndim() as u32).to_le_bytes())?;
        for &d in tensor.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads back every named tensor, in file order.
pub fn read_tensors<R: Read>(mut r: R) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let count = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let ndim = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            shape.push(u64::from_le_bytes(buf) as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        out.push((name, Tensor::new(shape, data)));
    }
    Ok(out)
}

/// Snapshot of a parameter store as checkpoint bytes.
pub fn store_to_bytes(store: &ParamStore) -> Vec<u8> {
    let pairs: Vec<(&str, &Tensor)> = store.iter().collect();
    let mut buf = Vec::new();
    write_tensors(&mut buf, &pairs).expect("in-memory serialization cannot fail");
    buf
}

/// Loads checkpoint bytes into an existing store; every store
/// parameter must be present with a matching shape.
pub fn load_store_from_bytes(
    store: &mut ParamStore,
    bytes: &[u8],
) -> Result<(), CheckpointError> {
    let tensors = read_tensors(bytes)?;
    let by_name: std::collections::HashMap<String, Tensor> = tensors.into_iter().collect();
    for id in store.ids().collect::<Vec<_>>() {
        let name = store.name(id).to_string();
        let tensor = by_name
            .get(&name)
            .ok_or_else(|| CheckpointError::MissingTensor(name.clone()))?;
        if tensor.shape() != store.value(id).shape() {
            return Err(CheckpointError::ShapeMismatch {
                name,
                found: tensor.shape().to_vec(),
                expected: store.value(id).shape().to_vec(),
            });
        }
        store.set_value(id, tensor.clone());
    }
    Ok(())
}

pub fn save_store(store: &ParamStore, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, store_to_bytes(store))?;
    Ok(())
}

pub fn load_store(store: &mut ParamStore, path: &Path) -> Result<(), CheckpointError> {
    let bytes = std::fs::read(path)?;
    load_store_from_bytes(store, &bytes)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
