//! Corpus, gold annotation and pre-annotation loading.

mod conllu;
mod query;

pub use conllu::{load_conllu, load_spans_file, parse_conllu, SpanRecord};
pub use query::{keyword_filter, parse_query, KeywordQuery, QueryTerm, DEFAULT_QUERY};

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub date: NaiveDate,
    pub newspaper: String,
    pub section: String,
    pub title: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sentences: Vec<SentenceAnnotation>,
}

impl Document {
    pub fn sentence_text(&self, index: usize) -> Option<&str> {
        self.sentences
            .get(index)
            .and_then(|s| self.text.get(s.char_span.0..s.char_span.1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    pub index: usize,
    /// Byte offsets `[start, end)` into the document text.
    pub char_span: (usize, usize),
    pub tokens: Vec<Token>,
    pub entity_mentions: Vec<EntitySpan>,
}

impl SentenceAnnotation {
    /// Token by its 1-based CoNLL-U index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn entity_at(&self, token_index: usize) -> Option<&EntitySpan> {
        self.entity_mentions
            .iter()
            .find(|e| e.token_range.0 <= token_index && token_index <= e.token_range.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub head: usize,
    pub deprel: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityLabel {
    #[serde(rename = "PER")]
    Person,
    #[serde(rename = "ORG")]
    Organisation,
    #[serde(rename = "OTHER")]
    Other,
}

impl EntityLabel {
    pub fn from_tag(tag: &str) -> Self {
        match tag.to_ascii_uppercase().as_str() {
            "PER" | "PERSON" => EntityLabel::Person,
            "ORG" | "ORGANIZATION" | "ORGANISATION" => EntityLabel::Organisation,
            _ => EntityLabel::Other,
        }
    }

    pub fn is_actor(self) -> bool {
        matches!(self, EntityLabel::Person | EntityLabel::Organisation)
    }
}

impl fmt::Display for EntityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityLabel::Person => "PER",
            EntityLabel::Organisation => "ORG",
            EntityLabel::Other => "OTHER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntitySpan {
    /// Inclusive 1-based token indices.
    pub token_range: (usize, usize),
    pub label: EntityLabel,
    pub surface: String,
}

/// Support (+1) or opposition (-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Support,
    Oppose,
}

impl Polarity {
    pub fn value(self) -> i8 {
        match self {
            Polarity::Support => 1,
            Polarity::Oppose => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Polarity::Support => Polarity::Oppose,
            Polarity::Oppose => Polarity::Support,
        }
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "+1" => Ok(Polarity::Support),
            "-1" | "−1" => Ok(Polarity::Oppose),
            other => Err(Error::InvalidPolarity(other.to_string())),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for Polarity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Polarity {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match i8::deserialize(deserializer)? {
            1 => Ok(Polarity::Support),
            -1 => Ok(Polarity::Oppose),
            other => Err(serde::de::Error::custom(format!("invalid polarity {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldDyad {
    pub article_id: String,
    pub date: NaiveDate,
    pub actor: String,
    pub category_code: u32,
    pub polarity: Polarity,
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| Error::InvalidDate(s.to_string()))
}

#[derive(Deserialize)]
struct RawDocument {
    id: String,
    date: String,
    newspaper: String,
    section: String,
    title: String,
    text: String,
}

/// Reads a JSON-lines corpus, one document per line, in file order.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let raw: RawDocument =
            serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let date = parse_date(&raw.date)?;
        if raw.text.trim().is_empty() {
            return Err(malformed(format!("document `{}` has empty text", raw.id)));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId(raw.id));
        }
        docs.push(Document {
            id: raw.id,
            date,
            newspaper: raw.newspaper,
            section: raw.section,
            title: raw.title,
            text: raw.text,
            sentences: Vec::new(),
        });
    }
    Ok(docs)
}

/// Drops documents whose section contains any pattern, case-insensitively.
pub fn exclude_sections(docs: Vec<Document>, section_patterns: &[String]) -> Vec<Document> {
    let patterns: Vec<String> = section_patterns.iter().map(|p| p.to_lowercase()).collect();
    docs.into_iter()
        .filter(|d| {
            let section = d.section.to_lowercase();
            !patterns.iter().any(|p| section.contains(p.as_str()))
        })
        .collect()
}

#[derive(Deserialize)]
struct RawGold {
    article_id: String,
    date: String,
    actor: String,
    category_code: String,
    polarity: String,
}

/// Reads gold dyads from CSV (`article_id,date,actor,category_code,polarity`).
pub fn load_gold(path: &Path, codebook: &Codebook) -> Result<Vec<GoldDyad>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Csv(e),
        })?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RawGold>().enumerate() {
        let row = row.map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?;
        let code: u32 = row.category_code.parse().map_err(|_| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 2,
            message: format!("invalid category code `{}`", row.category_code),
        })?;
        if !codebook.contains(code) {
            return Err(Error::UnknownCode(code));
        }
        out.push(GoldDyad {
            article_id: row.article_id,
            date: parse_date(&row.date)?,
            actor: row.actor,
            category_code: code,
            polarity: row.polarity.parse()?,
        });
    }
    Ok(out)
}
