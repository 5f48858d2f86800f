//! Claim-hood scoring and high-recall candidate selection.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embeddings::{Embedder, EmbeddingVector};
use crate::error::{Error, Result};
use crate::remote::ModelClient;

pub const DEFAULT_CLAIM_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimScore {
    pub doc_id: String,
    pub sentence_index: usize,
    pub score: f64,
}

/// A sentence kept for downstream processing; `(doc_id, sentence_index)`
/// references the sentence text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimCandidate {
    pub doc_id: String,
    pub sentence_index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Remote,
    LinearHead,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClaimDetectorConfig {
    pub threshold: f64,
    pub scorer: ScorerKind,
    /// Head file for the `linear_head` scorer.
    pub head_path: Option<std::path::PathBuf>,
    /// Model server for the `remote` scorer.
    pub endpoint: Option<String>,
}

impl Default for ClaimDetectorConfig {
    fn default() -> Self {
        ClaimDetectorConfig {
            threshold: DEFAULT_CLAIM_THRESHOLD,
            scorer: ScorerKind::Mock,
            head_path: None,
            endpoint: None,
        }
    }
}

impl ClaimDetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "claim threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        match self.scorer {
            ScorerKind::LinearHead if self.head_path.is_none() => {
                Err(Error::Config("linear_head scorer requires head_path".into()))
            }
            ScorerKind::Remote if self.endpoint.is_none() => {
                Err(Error::Config("remote claim scorer requires an endpoint".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Serialize, Deserialize)]
struct HeadFile {
    dim: usize,
    weights: Vec<f64>,
    bias: f64,
    trained_on: String,
    created_at: String,
}

impl LinearHead {
    pub fn zeros(dim: usize) -> Self {
        LinearHead {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn logit(&self, e: &EmbeddingVector) -> Result<f64> {
        if e.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: e.dim(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(e.values())
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: HeadFile = serde_json::from_str(&text)?;
        if file.weights.len() != file.dim {
            return Err(Error::DimensionMismatch {
                expected: file.dim,
                actual: file.weights.len(),
            });
        }
        if file.weights.iter().chain([&file.bias]).any(|v| !v.is_finite()) {
            return Err(Error::Contract("head parameters must be finite".into()));
        }
        Ok(LinearHead {
            weights: file.weights,
            bias: file.bias,
        })
    }

    pub fn save(&self, path: &Path, trained_on: &str, created_at: &str) -> Result<()> {
        let file = HeadFile {
            dim: self.dim(),
            weights: self.weights.clone(),
            bias: self.bias,
            trained_on: trained_on.to_string(),
            created_at: created_at.to_string(),
        };
        let json = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let ez = z.exp();
        ez / (1.0 + ez)
    }
}

pub fn score_sentence(e: &EmbeddingVector, head: &LinearHead) -> Result<f64> {
    Ok(logistic(head.logit(e)?))
}

/// Mean binary cross-entropy of `head` over `data`.
pub fn cross_entropy_loss(head: &LinearHead, data: &[(EmbeddingVector, u8)]) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in data {
        let z = head.logit(x)?;
        // log(1 + e^z) - y z, evaluated stably
        let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        total += softplus - f64::from(*y) * z;
    }
    Ok(total / data.len() as f64)
}

/// Gradient of [`cross_entropy_loss`] as `(d weights, d bias)`.
pub fn cross_entropy_gradient(
    head: &LinearHead,
    data: &[(EmbeddingVector, u8)],
) -> Result<(Vec<f64>, f64)> {
    let n = data.len() as f64;
    let mut gw = vec![0.0; head.dim()];
    let mut gb = 0.0;
    for (x, y) in data {
        let residual = logistic(head.logit(x)?) - f64::from(*y);
        for (g, xi) in gw.iter_mut().zip(x.values()) {
            *g += residual * xi / n;
        }
        gb += residual / n;
    }
    Ok((gw, gb))
}

/// Full-batch gradient descent from a zero initialisation.
pub fn train_head(
    labeled: &[(EmbeddingVector, u8)],
    epochs: usize,
    learning_rate: f64,
) -> Result<LinearHead> {
    let first = labeled.first().ok_or(Error::EmptyInput("training set"))?;
    if let Some((_, y)) = labeled.iter().find(|(_, y)| *y > 1) {
        return Err(Error::InvalidArgument(format!("label {y} is not 0 or 1")));
    }
    if labeled.iter().all(|(_, y)| *y == first.1) {
        return Err(Error::SingleClass(first.1));
    }
    let mut head = LinearHead::zeros(first.0.dim());
    for _ in 0..epochs {
        let (gw, gb) = cross_entropy_gradient(&head, labeled)?;
        for (w, g) in head.weights.iter_mut().zip(&gw) {
            *w -= learning_rate * g;
        }
        head.bias -= learning_rate * gb;
    }
    Ok(head)
}

/// Keeps scores at or above `threshold`, preserving order.
pub fn filter_candidates(scores: &[ClaimScore], threshold: f64) -> Vec<ClaimCandidate> {
    scores
        .iter()
        .filter(|s| s.score >= threshold)
        .map(|s| ClaimCandidate {
            doc_id: s.doc_id.clone(),
            sentence_index: s.sentence_index,
            score: s.score,
        })
        .collect()
}

/// Documents with at least one candidate.
pub fn implicit_article_selection(candidates: &[ClaimCandidate]) -> BTreeSet<String> {
    candidates.iter().map(|c| c.doc_id.clone()).collect()
}

const CLAIM_VERB_STEMS: &[&str] = &[
    "forder", "fordert", "verlang", "plädier", "kündigt", "kritisier", "warn", "will", "woll",
    "mahn", "appellier", "drängt", "lehnt",
];

/// Deterministic offline scorer: high for sentences containing a claim verb.
pub fn mock_claim_score(text: &str) -> f64 {
    let hit = text
        .split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .any(|tok| CLAIM_VERB_STEMS.iter().any(|s| tok.starts_with(s)));
    if hit {
        0.9
    } else {
        0.05
    }
}

pub enum ClaimScorer {
    Mock,
    LinearHead(LinearHead),
    Remote(ModelClient),
}

impl ClaimScorer {
    pub fn from_config(cfg: &ClaimDetectorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.scorer {
            ScorerKind::Mock => ClaimScorer::Mock,
            ScorerKind::LinearHead => {
                ClaimScorer::LinearHead(LinearHead::load(cfg.head_path.as_deref().unwrap())?)
            }
            ScorerKind::Remote => ClaimScorer::Remote(ModelClient::new(cfg.endpoint.as_deref().unwrap())?),
        })
    }

    pub fn score<S: AsRef<str>>(&self, texts: &[S], embedder: &Embedder) -> Result<Vec<f64>> {
        match self {
            ClaimScorer::Mock => Ok(texts.iter().map(|t| mock_claim_score(t.as_ref())).collect()),
            ClaimScorer::LinearHead(head) => embedder
                .embed(texts)?
                .iter()
                .map(|e| score_sentence(e, head))
                .collect(),
            ClaimScorer::Remote(client) => {
                let texts: Vec<&str> = texts.iter().map(AsRef::as_ref).collect();
                client.claim_scores(&texts)
            }
        }
    }
}
