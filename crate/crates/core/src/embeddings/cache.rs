//! Append-only embedding cache.
//!
//! Record layout, all integers little-endian:
//! `u32 model_len | model bytes | [u8; 32] sha256(text) | u32 dim | dim x f32`.
//! A truncated or implausible trailing record is cut off on open.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use sha2::{Digest, Sha256};

use super::EmbeddingVector;
use crate::error::{Error, Result};

const MAX_MODEL_LEN: usize = 4096;
const MAX_DIM: usize = 1 << 20;

pub fn content_hash(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

type Key = (String, [u8; 32]);

pub struct EmbeddingCache {
    path: PathBuf,
    entries: RwLock<HashMap<Key, EmbeddingVector>>,
    file: Mutex<File>,
}

fn parse_record(buf: &[u8]) -> Option<(Key, EmbeddingVector, usize)> {
    let read_u32 = |at: usize| -> Option<usize> {
        buf.get(at..at + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
    };
    let model_len = read_u32(0)?;
    if model_len > MAX_MODEL_LEN {
        return None;
    }
    let mut at = 4;
    let model = std::str::from_utf8(buf.get(at..at + model_len)?).ok()?.to_string();
    at += model_len;
    let hash: [u8; 32] = buf.get(at..at + 32)?.try_into().unwrap();
    at += 32;
    let dim = read_u32(at)?;
    if dim == 0 || dim > MAX_DIM {
        return None;
    }
    at += 4;
    let raw = buf.get(at..at + 4 * dim)?;
    at += 4 * dim;
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let vector = EmbeddingVector::new(values).ok()?;
    Some(((model, hash), vector, at))
}

fn encode_record(model: &str, hash: &[u8; 32], vector: &EmbeddingVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + model.len() + 32 + 4 + 4 * vector.dim());
    out.extend_from_slice(&(model.len() as u32).to_le_bytes());
    out.extend_from_slice(model.as_bytes());
    out.extend_from_slice(hash);
    out.extend_from_slice(&(vector.dim() as u32).to_le_bytes());
    for v in vector.values() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

impl EmbeddingCache {
    pub fn open(path: &Path) -> Result<Self> {
        let io = |e| Error::io(path, e);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io)?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf).map_err(io)?;

        let mut entries = HashMap::new();
        let mut offset = 0;
        while offset < buf.len() {
            match parse_record(&buf[offset..]) {
                Some((key, vector, used)) => {
                    entries.entry(key).or_insert(vector);
                    offset += used;
                }
                None => break,
            }
        }
        if offset < buf.len() {
            log::warn!(
                "{}: truncating {} trailing bytes of a corrupt record",
                path.display(),
                buf.len() - offset
            );
            file.set_len(offset as u64).map_err(io)?;
        }
        Ok(EmbeddingCache {
            path: path.to_path_buf(),
            entries: RwLock::new(entries),
            file: Mutex::new(file),
        })
    }

    pub fn get(&self, model: &str, text: &str) -> Option<EmbeddingVector> {
        let key = (model.to_string(), content_hash(text));
        self.entries.read().unwrap().get(&key).cloned()
    }

    /// Writes through to disk. An existing key keeps its original vector.
    pub fn insert(&self, model: &str, text: &str, vector: &EmbeddingVector) -> Result<()> {
        let key = (model.to_string(), content_hash(text));
        let mut entries = self.entries.write().unwrap();
        if entries.contains_key(&key) {
            return Ok(());
        }
        let record = encode_record(model, &key.1, vector);
        let mut file = self.file.lock().unwrap();
        file.write_all(&record)
            .and_then(|_| file.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        entries.insert(key, vector.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
