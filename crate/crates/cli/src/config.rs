//! Pipeline configuration (TOML).

use std::path::{Path, PathBuf};

use claimnet::categorizer::CategorizerConfig;
use claimnet::claims::ClaimDetectorConfig;
use claimnet::codebook::{Codebook, OTHER_CODE, PROCEDURES_CODE};
use claimnet::dyads::DedupPolicy;
use claimnet::embeddings::EmbeddingConfig;
use claimnet::evaluation::DyadMatch;
use claimnet::ingest::{parse_query, DEFAULT_QUERY};
use claimnet::network::{default_periods, load_periods, CoreConfig, ExportFormat, PeriodSpec};
use claimnet::stance::StanceConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const ENDPOINT_ENV: &str = "CLAIMNET_ENDPOINT";

/// Closed interval of confidence values that sends a dyad to review.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewBands {
    pub claim_score: Band,
    pub similarity: Band,
    /// Applied to the absolute stance margin.
    pub stance_margin: Band,
}

impl Default for ReviewBands {
    fn default() -> Self {
        ReviewBands {
            claim_score: Band { lo: 0.1, hi: 0.5 },
            similarity: Band { lo: 0.5, hi: 0.6 },
            stance_margin: Band { lo: 0.0, hi: 0.1 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub dyad_match: DyadMatch,
}

fn default_query() -> String {
    DEFAULT_QUERY.to_string()
}

fn default_true() -> bool {
    true
}

fn default_excluded() -> Vec<u32> {
    vec![PROCEDURES_CODE, OTHER_CODE]
}

fn default_formats() -> Vec<ExportFormat> {
    vec![ExportFormat::Graphml]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub conllu_dir: PathBuf,
    #[serde(default)]
    pub gold: Option<PathBuf>,
    #[serde(default = "default_query")]
    pub query: String,
    #[serde(default = "default_true")]
    pub match_title: bool,
    #[serde(default)]
    pub section_exclusions: Vec<String>,
    /// Built-in codebook when absent.
    #[serde(default)]
    pub codebook: Option<PathBuf>,
    #[serde(default = "default_excluded")]
    pub excluded_codes: Vec<u32>,
    /// Built-in verb cue lexicon when absent.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    pub seed_file: PathBuf,
    /// Built-in periods when absent.
    #[serde(default)]
    pub periods: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub export_formats: Vec<ExportFormat>,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub claims: ClaimDetectorConfig,
    #[serde(default)]
    pub categorizer: CategorizerConfig,
    #[serde(default)]
    pub stance: StanceConfig,
    #[serde(default)]
    pub dedup: DedupPolicy,
    #[serde(default)]
    pub core: CoreConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub review: ReviewBands,
}

/// A loaded configuration with paths resolved against the config file.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub hash: String,
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::validation(format!("empty override key `{key}`")))?;
    let mut table = root
        .as_table_mut()
        .ok_or_else(|| CliError::validation("config root is not a table"))?;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| CliError::validation(format!("override `{key}`: `{p}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Applies `key=value` overrides; values are parsed as TOML, falling back to strings.
pub fn apply_overrides(root: &mut toml::Value, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("override `{o}` is not `key=value`")))?;
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        set_path(root, key.trim(), value)?;
    }
    Ok(())
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn hash_file(hasher: &mut Sha256, path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for e in entries {
            hasher.update(e.file_name().unwrap_or_default().to_string_lossy().as_bytes());
            hash_file(hasher, &e)?;
        }
        return Ok(());
    }
    let bytes = std::fs::read(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    hasher.update((bytes.len() as u64).to_le_bytes());
    hasher.update(&bytes);
    Ok(())
}

impl PipelineConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut value: toml::Value = toml::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))?;
        apply_overrides(&mut value, overrides)?;
        let mut cfg: PipelineConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| CliError::validation(format!("config: {e}")))?;
        if let Ok(endpoint) = std::env::var(ENDPOINT_ENV) {
            if !endpoint.is_empty() {
                cfg.embedding.endpoint = Some(endpoint.clone());
                cfg.claims.endpoint = Some(endpoint.clone());
                cfg.stance.endpoint = Some(endpoint);
            }
        }
        Ok(cfg)
    }

    fn input_paths(&self) -> Vec<&Path> {
        let mut out = vec![self.corpus.as_path(), self.conllu_dir.as_path(), self.seed_file.as_path()];
        out.extend(self.gold.as_deref());
        out.extend(self.codebook.as_deref());
        out.extend(self.lexicon.as_deref());
        out.extend(self.periods.as_deref());
        out.extend(self.claims.head_path.as_deref());
        out
    }

    fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.corpus);
        resolve(base, &mut self.conllu_dir);
        resolve(base, &mut self.seed_file);
        resolve(base, &mut self.output_dir);
        for p in [&mut self.gold, &mut self.codebook, &mut self.lexicon, &mut self.periods, &mut self.claims.head_path, &mut self.embedding.cache_path]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
    }

    /// Checks ranges and that every referenced input exists.
    pub fn validate(&self) -> Result<(), CliError> {
        for p in self.input_paths() {
            if !p.exists() {
                return Err(CliError::validation(format!("referenced path {} does not exist", p.display())));
            }
        }
        parse_query(&self.query)?;
        self.embedding.validate()?;
        self.claims.validate()?;
        self.categorizer.validate()?;
        self.stance.validate()?;
        for (name, band) in [
            ("claim_score", self.review.claim_score),
            ("similarity", self.review.similarity),
            ("stance_margin", self.review.stance_margin),
        ] {
            if band.lo.is_nan() || band.hi.is_nan() || band.lo > band.hi {
                return Err(CliError::validation(format!("review band {name}: lo > hi")));
            }
        }
        if self.export_formats.is_empty() {
            return Err(CliError::validation("export_formats is empty"));
        }
        self.codebook()?;
        self.periods()?;
        Ok(())
    }

    pub fn codebook(&self) -> Result<Codebook, CliError> {
        match &self.codebook {
            Some(p) => Ok(Codebook::from_tsv(p, self.excluded_codes.iter().copied())?),
            None => Ok(Codebook::nuclear_phase_out()),
        }
    }

    pub fn periods(&self) -> Result<Vec<PeriodSpec>, CliError> {
        match &self.periods {
            Some(p) => Ok(load_periods(p)?),
            None => Ok(default_periods()),
        }
    }

    /// Hash over the configuration (output directory excluded) and the bytes of every input.
    fn content_hash(&self) -> Result<String, CliError> {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&canonical).map_err(|e| CliError::validation(e.to_string()))?);
        for p in self.input_paths() {
            hash_file(&mut hasher, p)?;
        }
        Ok(format!("{:x}", hasher.finalize()))
    }
}

/// Reads, overrides, resolves and validates a config file.
pub fn load(path: &Path, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = PipelineConfig::from_toml(&text, overrides)?;
    let base = path.parent().unwrap_or(Path::new("."));
    config.resolve_paths(base);
    config.validate()?;
    let hash = config.content_hash()?;
    Ok(LoadedConfig { config, hash })
}
