//! Self-describing stage outputs.
//!
//! JSONL files open with a `{"meta": ...}` line, CSV and TSV files with a
//! `#` comment line, and GraphML files carry a graph attribute. All of them
//! embed the config hash that produced them.

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub config_hash: String,
    pub stage: String,
    pub version: String,
}

impl Meta {
    pub fn new(config_hash: &str, stage: &str) -> Self {
        Meta {
            config_hash: config_hash.to_string(),
            stage: stage.to_string(),
            version: VERSION.to_string(),
        }
    }

    pub fn comment(&self, prefix: &str) -> String {
        format!(
            "{prefix} claimnet {} stage={} config_hash={}\n",
            self.version, self.stage, self.config_hash
        )
    }

    pub fn pairs(&self) -> [(&str, &str); 3] {
        [
            ("config_hash", self.config_hash.as_str()),
            ("stage", self.stage.as_str()),
            ("version", self.version.as_str()),
        ]
    }
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: Meta,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(claimnet::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes through a sibling temp file so readers never see partial output.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    serde_json::to_string(value).map_err(|e| CliError::Core(e.into()))
}

pub fn jsonl_string<T: Serialize>(meta: &Meta, items: &[T]) -> Result<String, CliError> {
    let mut out = to_json(&MetaLine { meta: meta.clone() })?;
    out.push('\n');
    for item in items {
        out.push_str(&to_json(item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, meta: &Meta, items: &[T]) -> Result<(), CliError> {
    write_atomic(path, &jsonl_string(meta, items)?)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(Meta, Vec<T>), CliError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let malformed = |line: usize, message: String| {
        CliError::Core(claimnet::Error::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        })
    };
    let meta = match lines.next() {
        Some((_, line)) => {
            let line = line.map_err(|e| io_err(path, e))?;
            serde_json::from_str::<MetaLine>(&line)
                .map_err(|e| malformed(1, format!("missing meta header: {e}")))?
                .meta
        }
        None => return Err(malformed(1, "empty file".into())),
    };
    let mut items = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?);
    }
    Ok((meta, items))
}

/// The config hash embedded in any stage output, if one can be found.
pub fn embedded_hash(path: &Path) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut rest = text.as_str();
    while let Some(pos) = rest.find("config_hash") {
        rest = &rest[pos + "config_hash".len()..];
        let candidate = rest.trim_start_matches(|c: char| matches!(c, '"' | ':' | '=' | '>') || c.is_whitespace());
        let hex: String = candidate.chars().take_while(char::is_ascii_hexdigit).collect();
        if hex.len() == 64 {
            return Some(hex);
        }
    }
    None
}
