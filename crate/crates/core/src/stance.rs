//! Actor polarity by comparing entailment of a positive and a negated
//! category hypothesis.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::ingest::Polarity;
use crate::remote::{ModelClient, NliPair};

pub const PHRASE_SLOT: &str = "{phrase}";
pub const DEFAULT_NEGATION_TEMPLATE: &str = "warnt vor {phrase}";
const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliScores {
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

impl NliScores {
    pub fn new(entailment: f64, neutral: f64, contradiction: f64) -> Result<Self> {
        let s = NliScores {
            entailment,
            neutral,
            contradiction,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.entailment, self.neutral, self.contradiction];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Contract(format!("NLI score outside [0, 1]: {self:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Contract(format!("NLI scores sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisPair {
    pub positive: String,
    pub negative: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliKind {
    Remote,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    Support,
    Oppose,
}

impl TiePolicy {
    fn polarity(self) -> Polarity {
        match self {
            TiePolicy::Support => Polarity::Support,
            TiePolicy::Oppose => Polarity::Oppose,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StanceConfig {
    pub negation_template: String,
    /// Per-category templates, keyed by code.
    #[serde(deserialize_with = "code_keyed")]
    pub overrides: BTreeMap<u32, String>,
    pub scorer: NliKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub tie_policy: TiePolicy,
}

impl Default for StanceConfig {
    fn default() -> Self {
        StanceConfig {
            negation_template: DEFAULT_NEGATION_TEMPLATE.to_string(),
            overrides: BTreeMap::new(),
            scorer: NliKind::Mock,
            endpoint: None,
            model: None,
            tie_policy: TiePolicy::Support,
        }
    }
}

/// Accepts category codes as string keys, as TOML and JSON tables carry them.
fn code_keyed<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<u32, String>, D::Error> {
    BTreeMap::<String, String>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<u32>()
                .map(|code| (code, v))
                .map_err(|_| serde::de::Error::custom(format!("invalid category code `{k}`")))
        })
        .collect()
}

fn check_template(template: &str) -> Result<()> {
    if template.matches(PHRASE_SLOT).count() != 1 {
        return Err(Error::Config(format!(
            "negation template `{template}` must contain `{PHRASE_SLOT}` exactly once"
        )));
    }
    Ok(())
}

impl StanceConfig {
    pub fn validate(&self) -> Result<()> {
        check_template(&self.negation_template)?;
        self.overrides.values().try_for_each(|t| check_template(t))?;
        if self.scorer == NliKind::Remote && self.endpoint.is_none() {
            return Err(Error::Config("remote NLI scorer requires an endpoint".into()));
        }
        Ok(())
    }
}

pub fn build_hypotheses(code: u32, codebook: &Codebook, cfg: &StanceConfig) -> Result<HypothesisPair> {
    codebook.check_assignable(code)?;
    let label = codebook.label(code).expect("checked above");
    let template = cfg.overrides.get(&code).unwrap_or(&cfg.negation_template);
    check_template(template)?;
    let negative = template.replacen(PHRASE_SLOT, label, 1);
    if negative == label {
        return Err(Error::Config("negated hypothesis equals the positive one".into()));
    }
    Ok(HypothesisPair {
        positive: label.to_string(),
        negative,
    })
}

pub trait NliScorer: Send + Sync {
    fn score(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliScores>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockNli;

impl NliScorer for MockNli {
    fn score(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliScores>> {
        pairs.iter().map(|(p, h)| mock_nli(p, h)).collect()
    }
}

pub struct RemoteNli {
    client: ModelClient,
    model: Option<String>,
}

impl RemoteNli {
    pub fn new(endpoint: &str, model: Option<String>) -> Result<Self> {
        Ok(RemoteNli {
            client: ModelClient::new(endpoint)?,
            model,
        })
    }
}

impl NliScorer for RemoteNli {
    fn score(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliScores>> {
        let wire: Vec<NliPair> = pairs
            .iter()
            .map(|(premise, hypothesis)| NliPair { premise, hypothesis })
            .collect();
        self.client
            .nli(&wire, self.model.as_deref())?
            .into_iter()
            .map(|t| NliScores::new(t.entailment, t.neutral, t.contradiction))
            .collect()
    }
}

pub fn scorer_from_config(cfg: &StanceConfig) -> Result<Box<dyn NliScorer>> {
    cfg.validate()?;
    Ok(match cfg.scorer {
        NliKind::Mock => Box::new(MockNli),
        NliKind::Remote => Box::new(RemoteNli::new(
            cfg.endpoint.as_deref().expect("validated"),
            cfg.model.clone(),
        )?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceResult {
    pub polarity: Polarity,
    /// Entailment of the positive minus the negative hypothesis.
    pub margin: f64,
    pub tie: bool,
}

/// Polarity from two already-computed entailment scores.
pub fn decide(positive: f64, negative: f64, tie_policy: TiePolicy) -> StanceResult {
    let margin = positive - negative;
    let (polarity, tie) = match positive.partial_cmp(&negative) {
        Some(std::cmp::Ordering::Greater) => (Polarity::Support, false),
        Some(std::cmp::Ordering::Less) => (Polarity::Oppose, false),
        _ => (tie_policy.polarity(), true),
    };
    StanceResult {
        polarity,
        margin,
        tie,
    }
}

pub fn classify_stance(
    sentence: &str,
    pair: &HypothesisPair,
    scorer: &dyn NliScorer,
    tie_policy: TiePolicy,
) -> Result<StanceResult> {
    let scores = scorer.score(&[(sentence, &pair.positive), (sentence, &pair.negative)])?;
    if scores.len() != 2 {
        return Err(Error::Contract(format!("expected 2 NLI results, got {}", scores.len())));
    }
    scores.iter().try_for_each(NliScores::validate)?;
    let result = decide(scores[0].entailment, scores[1].entailment, tie_policy);
    if result.tie {
        log::info!("stance tie for `{sentence}`; applied {:?}", tie_policy);
    }
    Ok(result)
}

const STOPWORDS: &[&str] = &[
    "der", "die", "das", "den", "dem", "des", "ein", "eine", "einen", "einem", "einer", "eines",
    "und", "oder", "aller", "alle", "für", "von", "mit", "zu", "zum", "zur", "auf", "in", "im",
    "an", "am", "bei", "ist", "sind", "sei", "wird", "werden", "muss", "müssen", "soll", "sollen",
];
const STEM_CHARS: usize = 5;

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn negated(words: &[String]) -> bool {
    words.windows(2).any(|w| w[0] == "warnt" && w[1] == "vor")
        || words
            .iter()
            .any(|w| w == "gegen" || w == "nicht" || w.starts_with("kein"))
}

fn content_stems(words: &[String]) -> BTreeSet<String> {
    let mut skip = vec![false; words.len()];
    for i in 0..words.len() {
        let w = words[i].as_str();
        if w == "gegen" || w == "nicht" || w.starts_with("kein") || STOPWORDS.contains(&w) {
            skip[i] = true;
        }
        if w == "warnt" && words.get(i + 1).is_some_and(|n| n == "vor") {
            skip[i] = true;
            skip[i + 1] = true;
        }
    }
    words
        .iter()
        .zip(skip)
        .filter(|(_, s)| !s)
        .map(|(w, _)| w.chars().take(STEM_CHARS).collect())
        .collect()
}

/// Deterministic offline NLI.
///
/// Entailment grows with the share of hypothesis content stems (first five
/// characters of non-stopword tokens) found in the premise, and is cut to a
/// quarter when exactly one side carries a negation marker (`warnt vor`,
/// `gegen`, `nicht`, `kein*`). Contradiction takes a fixed share of the rest.
pub fn mock_nli(premise: &str, hypothesis: &str) -> Result<NliScores> {
    if premise.trim().is_empty() || hypothesis.trim().is_empty() {
        return Err(Error::EmptyInput("NLI premise or hypothesis"));
    }
    let (pw, hw) = (words(premise), words(hypothesis));
    let premise_stems = content_stems(&pw);
    let mut hyp_stems = content_stems(&hw);
    let mut prem_stems = premise_stems;
    if hyp_stems.is_empty() {
        hyp_stems = hw.iter().map(|w| w.chars().take(STEM_CHARS).collect()).collect();
        prem_stems = pw.iter().map(|w| w.chars().take(STEM_CHARS).collect()).collect();
    }
    let overlap = if hyp_stems.is_empty() {
        if premise.trim() == hypothesis.trim() { 1.0 } else { 0.0 }
    } else {
        hyp_stems.intersection(&prem_stems).count() as f64 / hyp_stems.len() as f64
    };
    let mismatch = negated(&pw) != negated(&hw);
    let mut entailment = 0.05 + 0.9 * overlap;
    if mismatch {
        entailment *= 0.25;
    }
    let rest = 1.0 - entailment;
    let contradiction = rest * if mismatch { 0.5 } else { 0.1 };
    let neutral = rest - contradiction;
    NliScores::new(entailment, neutral, contradiction)
}
