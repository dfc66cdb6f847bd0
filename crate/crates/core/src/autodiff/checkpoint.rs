//! ParamStore checkpoints: a little-endian binary format (compact, exact)
//! and a JSON twin (inspectable, still exact — floats are written with
//! round-trip precision). Both store `name -> shape -> values` plus the
//! optimizer step count; Adam moments are deliberately not persisted, so a
//! reloaded store starts with fresh optimizer state.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::nn::ParamStore;
use super::tensor::Tensor;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"LTCEPS01";

fn bad(path: &Path, msg: impl Into<String>) -> Error {
    Error::Checkpoint { path: path.display().to_string(), msg: msg.into() }
}

/// Write `store` to `path` in the binary checkpoint format.
pub fn save_params(path: &Path, store: &ParamStore) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u64::<LittleEndian>(store.step())?;
    w.write_u64::<LittleEndian>(store.len() as u64)?;
    for (name, value) in store.iter_values() {
        w.write_u32::<LittleEndian>(name.len() as u32)?;
        w.write_all(name.as_bytes())?;
        w.write_u32::<LittleEndian>(value.shape().len() as u32)?;
        for &d in value.shape() {
            w.write_u64::<LittleEndian>(d as u64)?;
        }
        for &v in value.data() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a binary checkpoint back into a fresh store (zero gradients and
/// optimizer moments, step count restored).
pub fn load_params(path: &Path) -> Result<ParamStore> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad(path, "file shorter than header"))?;
    if &magic != MAGIC {
        return Err(bad(path, format!("bad magic {magic:?}")));
    }
    let step = r.read_u64::<LittleEndian>()?;
    let count = r.read_u64::<LittleEndian>()?;
    let mut store = ParamStore::new();
    for i in 0..count {
        let name_len = r.read_u32::<LittleEndian>()? as usize;
        if name_len > 4096 {
            return Err(bad(path, format!("parameter {i}: implausible name length {name_len}")));
        }
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(|_| bad(path, format!("parameter {i}: truncated name")))?;
        let name = String::from_utf8(name)
            .map_err(|_| bad(path, format!("parameter {i}: name is not UTF-8")))?;
        let ndim = r.read_u32::<LittleEndian>()? as usize;
        if ndim > 8 {
            return Err(bad(path, format!("parameter {name:?}: implausible rank {ndim}")));
        }
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.read_u64::<LittleEndian>()? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = vec![0.0f64; n];
        r.read_f64_into::<LittleEndian>(&mut data)
            .map_err(|_| bad(path, format!("parameter {name:?}: truncated values")))?;
        let t = Tensor::new(shape, data).map_err(|e| bad(path, e.to_string()))?;
        store.insert(&name, t).map_err(|e| bad(path, e.to_string()))?;
    }
    store.step = step;
    Ok(store)
}

#[derive(Serialize, Deserialize)]
struct JsonParam {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonCheckpoint {
    format: String,
    version: u32,
    step: u64,
    params: BTreeMap<String, JsonParam>,
}

/// Write `store` to `path` as JSON.
pub fn save_params_json(path: &Path, store: &ParamStore) -> Result<()> {
    let doc = JsonCheckpoint {
        format: "ltce-params".into(),
        version: 1,
        step: store.step(),
        params: store
            .iter_values()
            .map(|(k, v)| {
                (k.to_string(), JsonParam { shape: v.shape().to_vec(), data: v.data().to_vec() })
            })
            .collect(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.flush()?;
    Ok(())
}

/// Read a JSON checkpoint back into a fresh store.
pub fn load_params_json(path: &Path) -> Result<ParamStore> {
    let r = BufReader::new(File::open(path)?);
    let doc: JsonCheckpoint =
        serde_json::from_reader(r).map_err(|e| bad(path, e.to_string()))?;
    if doc.format != "ltce-params" {
        return Err(bad(path, format!("unexpected format tag {:?}", doc.format)));
    }
    if doc.version != 1 {
        return Err(bad(path, format!("unsupported version {}", doc.version)));
    }
    let mut store = ParamStore::new();
    for (name, p) in doc.params {
        let t = Tensor::new(p.shape, p.data).map_err(|e| bad(path, e.to_string()))?;
        store.insert(&name, t).map_err(|e| bad(path, e.to_string()))?;
    }
    store.step = doc.step;
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_store() -> ParamStore {
        let mut store = ParamStore::new();
        store
            .insert("net.l0.w", Tensor::new(vec![2, 3], vec![0.1, -0.25, 3.5e-7, 1.0 / 3.0, -4.0, 0.0]).unwrap())
            .unwrap();
        store.insert("net.l0.b", Tensor::new(vec![3], vec![1e-300, -2.5, 7.0]).unwrap()).unwrap();
        store.step = 17;
        store
    }

    #[test]
    fn binary_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.bin");
        let store = sample_store();
        save_params(&path, &store).unwrap();
        let back = load_params(&path).unwrap();
        assert_eq!(back.step(), 17);
        assert_eq!(back.len(), store.len());
        for (name, v) in store.iter_values() {
            let b = back.value(name).unwrap();
            assert_eq!(b.shape(), v.shape());
            for (x, y) in v.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.json");
        let store = sample_store();
        save_params_json(&path, &store).unwrap();
        let back = load_params_json(&path).unwrap();
        assert_eq!(back.step(), 17);
        for (name, v) in store.iter_values() {
            let b = back.value(name).unwrap();
            for (x, y) in v.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.bin");
        std::fs::write(&path, b"NOTAPARM00000000").unwrap();
        assert!(matches!(load_params(&path), Err(Error::Checkpoint { .. })));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.bin");
        let store = sample_store();
        save_params(&path, &store).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(load_params(&path), Err(Error::Checkpoint { .. })));
    }
}
