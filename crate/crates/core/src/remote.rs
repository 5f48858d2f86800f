//! HTTP client for the model server (`/embed`, `/nli`, `/claim-score`, `/health`).
//!
//! Requests are split into chunks of at most [`BATCH_LIMIT`] items. Transport
//! failures and 5xx responses are retried up to [`MAX_ATTEMPTS`] times with
//! exponential backoff; 4xx responses fail immediately.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BATCH_LIMIT: usize = 64;
pub const MAX_ATTEMPTS: u32 = 3;
const BACKOFF_BASE: Duration = Duration::from_millis(100);

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub texts: &'a [&'a str],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EmbedResponse {
    pub model_id: String,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NliPair<'a> {
    pub premise: &'a str,
    pub hypothesis: &'a str,
}

#[derive(Debug, Serialize)]
pub struct NliRequest<'a> {
    pub pairs: &'a [NliPair<'a>],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<&'a str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct NliTriple {
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct NliResponse {
    pub model_id: String,
    pub scores: Vec<NliTriple>,
}

#[derive(Debug, Serialize)]
struct ClaimScoreRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ClaimScoreResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub models: Vec<String>,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ModelClient {
    base: String,
    http: reqwest::blocking::Client,
}

impl ModelClient {
    pub fn new(endpoint: &str) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(ModelClient {
            base: endpoint.trim_end_matches('/').to_string(),
            http,
        })
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, route: &str, body: &B) -> Result<R> {
        let url = format!("{}{route}", self.base);
        let mut last_error = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
            }
            match self.http.post(&url).json(body).send() {
                Ok(resp) if resp.status().is_success() => {
                    return resp
                        .json::<R>()
                        .map_err(|e| Error::Contract(format!("{url}: invalid response body: {e}")));
                }
                Ok(resp) if resp.status().is_client_error() => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    return Err(Error::Transport(format!("{url}: {status}: {text}")));
                }
                Ok(resp) => last_error = format!("{url}: {}", resp.status()),
                Err(e) => last_error = format!("{url}: {e}"),
            }
            log::warn!("attempt {} of {MAX_ATTEMPTS} failed: {last_error}", attempt + 1);
        }
        Err(Error::Transport(format!(
            "giving up after {MAX_ATTEMPTS} attempts: {last_error}"
        )))
    }

    pub fn embed(&self, texts: &[&str], model: Option<&str>) -> Result<EmbedResponse> {
        let mut merged: Option<EmbedResponse> = None;
        for chunk in texts.chunks(BATCH_LIMIT) {
            let resp: EmbedResponse = self.post("/embed", &EmbedRequest { texts: chunk, model })?;
            if resp.vectors.len() != chunk.len() {
                return Err(Error::Contract(format!(
                    "/embed returned {} vectors for {} texts",
                    resp.vectors.len(),
                    chunk.len()
                )));
            }
            if let Some(v) = resp.vectors.iter().find(|v| v.len() != resp.dim) {
                return Err(Error::Contract(format!(
                    "/embed advertised dim {} but returned a vector of length {}",
                    resp.dim,
                    v.len()
                )));
            }
            match &mut merged {
                None => merged = Some(resp),
                Some(m) => {
                    if m.dim != resp.dim {
                        return Err(Error::Contract("/embed dim changed between batches".into()));
                    }
                    m.vectors.extend(resp.vectors);
                }
            }
        }
        merged.ok_or(Error::EmptyInput("texts to embed"))
    }

    pub fn nli(&self, pairs: &[NliPair<'_>], model: Option<&str>) -> Result<Vec<NliTriple>> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(BATCH_LIMIT) {
            let resp: NliResponse = self.post("/nli", &NliRequest { pairs: chunk, model })?;
            if resp.scores.len() != chunk.len() {
                return Err(Error::Contract(format!(
                    "/nli returned {} triples for {} pairs",
                    resp.scores.len(),
                    chunk.len()
                )));
            }
            out.extend(resp.scores);
        }
        Ok(out)
    }

    pub fn claim_scores(&self, texts: &[&str]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(BATCH_LIMIT) {
            let resp: ClaimScoreResponse =
                self.post("/claim-score", &ClaimScoreRequest { texts: chunk })?;
            if resp.scores.len() != chunk.len() {
                return Err(Error::Contract(format!(
                    "/claim-score returned {} scores for {} texts",
                    resp.scores.len(),
                    chunk.len()
                )));
            }
            if let Some(s) = resp.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                return Err(Error::Contract(format!("/claim-score returned {s} outside [0, 1]")));
            }
            out.extend(resp.scores);
        }
        Ok(out)
    }

    pub fn health(&self) -> Result<HealthResponse> {
        let url = format!("{}/health", self.base);
        let resp = self
            .http
            .get(&url)
            .send()
            .map_err(|e| Error::Transport(format!("{url}: {e}")))?;
        if !resp.status().is_success() {
            return Err(Error::Transport(format!("{url}: {}", resp.status())));
        }
        resp.json()
            .map_err(|e| Error::Contract(format!("{url}: invalid response body: {e}")))
    }
}
