//! Sentence embeddings: provider abstraction, persistent cache and cosine math.

mod cache;
mod mock;

pub use cache::{content_hash, EmbeddingCache};
pub use mock::mock_embed;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::remote::ModelClient;

pub const DEFAULT_DIM: usize = 768;
pub const DEFAULT_MODEL_ID: &str = "paraphrase-multilingual-mpnet-base-v2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("embedding vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("embedding contains non-finite values".into()));
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        EmbeddingVector::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// Rounds every component to single precision, the storage precision of the cache.
    pub(crate) fn quantized(self) -> Self {
        EmbeddingVector {
            values: self.values.into_iter().map(|v| v as f32 as f64).collect(),
        }
    }
}

/// Cosine similarity, clamped to `[-1, 1]` against rounding.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    let dot = u.dot(v)?;
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Remote,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub provider: ProviderKind,
    pub model_id: String,
    pub dim: usize,
    pub endpoint: Option<String>,
    pub cache_path: Option<PathBuf>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            provider: ProviderKind::Mock,
            model_id: DEFAULT_MODEL_ID.to_string(),
            dim: DEFAULT_DIM,
            endpoint: None,
            cache_path: None,
        }
    }
}

impl EmbeddingConfig {
    pub fn mock(dim: usize) -> Self {
        EmbeddingConfig {
            dim,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be positive".into()));
        }
        match (self.provider, &self.endpoint) {
            (ProviderKind::Remote, None) => {
                Err(Error::Config("remote embedding provider requires an endpoint".into()))
            }
            (ProviderKind::Mock, Some(_)) => {
                Err(Error::Config("endpoint is only valid for the remote provider".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Embeds texts through the configured provider, consulting the cache first.
pub struct Embedder {
    config: EmbeddingConfig,
    cache: Option<EmbeddingCache>,
    client: Option<ModelClient>,
}

impl Embedder {
    pub fn new(config: EmbeddingConfig) -> Result<Self> {
        config.validate()?;
        let cache = match &config.cache_path {
            Some(path) => Some(EmbeddingCache::open(path)?),
            None => None,
        };
        let client = match (config.provider, &config.endpoint) {
            (ProviderKind::Remote, Some(url)) => Some(ModelClient::new(url)?),
            _ => None,
        };
        Ok(Embedder {
            config,
            cache,
            client,
        })
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn embed_one(&self, text: &str) -> Result<EmbeddingVector> {
        Ok(self.embed(&[text])?.remove(0))
    }

    pub fn embed<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<EmbeddingVector>> {
        if texts.iter().any(|t| t.as_ref().trim().is_empty()) {
            return Err(Error::EmptyInput("text to embed"));
        }
        let model = &self.config.model_id;
        let mut out: Vec<Option<EmbeddingVector>> = texts
            .iter()
            .map(|t| self.cache.as_ref().and_then(|c| c.get(model, t.as_ref())))
            .collect();

        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<&str> = missing.iter().map(|&i| texts[i].as_ref()).collect();
            let fresh = self.provide(&batch)?;
            for (i, v) in missing.into_iter().zip(fresh) {
                if v.dim() != self.config.dim {
                    return Err(Error::Contract(format!(
                        "provider returned dim {} but config expects {}",
                        v.dim(),
                        self.config.dim
                    )));
                }
                let v = v.quantized();
                if let Some(cache) = &self.cache {
                    cache.insert(model, texts[i].as_ref(), &v)?;
                }
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled above")).collect())
    }

    fn provide(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        match self.config.provider {
            ProviderKind::Mock => texts.iter().map(|t| mock_embed(t, self.config.dim)).collect(),
            ProviderKind::Remote => {
                let client = self.client.as_ref().expect("validated remote config");
                let response = client.embed(texts, Some(&self.config.model_id))?;
                response
                    .vectors
                    .into_iter()
                    .map(EmbeddingVector::new)
                    .collect()
            }
        }
    }
}
