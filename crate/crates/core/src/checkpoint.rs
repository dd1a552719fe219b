//! Versioned container for named arrays.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `UTSGANCK` |
//! | 4 | format version (`u32`, currently 1) |
//! | 8 | header length `n` (`u64`) |
//! | n | UTF-8 JSON header: `{"meta": {string: string}, "arrays": [{"name", "shape"}]}` |
//! | … | every array's `f64` values in header order, row-major |
//!
//! Values are stored bit-exactly, so a save/load round trip reproduces
//! every parameter.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use utsgan_autograd::Tensor;

use crate::error::{Error, IoContext, Result};

pub const MAGIC: &[u8; 8] = b"UTSGANCK";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    meta: BTreeMap<String, String>,
    arrays: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Container {
    pub meta: BTreeMap<String, String>,
    arrays: Vec<(String, Tensor)>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn push(&mut self, name: impl Into<String>, t: Tensor) {
        self.arrays.push((name.into(), t));
    }

    pub fn arrays(&self) -> &[(String, Tensor)] {
        &self.arrays
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.arrays.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            meta: self.meta.clone(),
            arrays: self
                .arrays
                .iter()
                .map(|(name, t)| Entry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(20 + json.len() + 8 * self.arrays.iter().map(|(_, t)| t.len()).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in &self.arrays {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::Checkpoint {
            path: path.to_path_buf(),
            msg,
        };
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = bytes.get(20..20 + hlen).ok_or_else(|| bad("truncated header".into()))?;
        let header: Header = serde_json::from_slice(body).map_err(|e| bad(format!("header: {e}")))?;

        let mut payload = &bytes[20 + hlen..];
        let mut arrays = Vec::with_capacity(header.arrays.len());
        for e in header.arrays {
            let n: usize = e.shape.iter().product();
            if payload.len() < 8 * n {
                return Err(bad(format!("truncated payload in array {}", e.name)));
            }
            let data = payload[..8 * n]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            payload = &payload[8 * n..];
            arrays.push((e.name, Tensor::new(e.shape, data)));
        }
        if !payload.is_empty() {
            return Err(bad(format!("{} trailing bytes", payload.len())));
        }
        Ok(Container {
            meta: header.meta,
            arrays,
        })
    }

    /// Writes through a temporary file and a rename, so a crash never
    /// leaves a partial checkpoint under the final name.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("ckpt.tmp");
        let mut f = fs::File::create(&tmp).at(&tmp)?;
        f.write_all(&self.to_bytes()).at(&tmp)?;
        f.sync_all().at(&tmp)?;
        fs::rename(&tmp, path).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).at(path)?, path)
    }

    pub fn meta(&self, key: &str, path: &Path) -> Result<&str> {
        self.meta.get(key).map(String::as_str).ok_or_else(|| Error::Checkpoint {
            path: path.to_path_buf(),
            msg: format!("missing metadata key {key:?}"),
        })
    }

    pub fn parse_meta<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<T> {
        let raw = self.meta(key, path)?;
        raw.parse().map_err(|_| Error::Checkpoint {
            path: path.to_path_buf(),
            msg: format!("bad value {raw:?} for {key:?}"),
        })
    }

    pub fn array(&self, name: &str, path: &Path) -> Result<&Tensor> {
        self.get(name).ok_or_else(|| Error::Checkpoint {
            path: path.to_path_buf(),
            msg: format!("missing array {name:?}"),
        })
    }
}
