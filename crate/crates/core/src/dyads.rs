//! Signed actor-claim dyads: assembly from stage outputs and deduplication.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::actors::ActorClaimLink;
use crate::categorizer::CategoryAssignment;
use crate::error::{Error, Result};
use crate::ingest::Polarity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dyad {
    pub actor: String,
    pub code: u32,
    pub polarity: Polarity,
    pub date: NaiveDate,
    pub doc_id: String,
    pub sentence_index: usize,
    pub similarity: f64,
    pub claim_score: f64,
    pub stance_margin: f64,
}

impl Dyad {
    fn order_key(&self) -> (NaiveDate, &str, usize) {
        (self.date, &self.doc_id, self.sentence_index)
    }
}

/// Stance decision for one categorised candidate sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceRecord {
    pub doc_id: String,
    pub sentence_index: usize,
    pub code: u32,
    pub polarity: Polarity,
    pub margin: f64,
    #[serde(default)]
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    /// Categorised candidates without an actor link.
    pub no_actor: usize,
    /// Linked candidates without a category.
    pub no_category: usize,
    /// Linked, categorised candidates without a stance decision.
    pub no_polarity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub dyads: Vec<Dyad>,
    pub dropped: DropCounts,
}

type SentenceKey = (String, usize);

/// Joins links, assignments and stances on `(doc_id, sentence_index)`.
///
/// `dates` maps document ids to publication dates. Output follows the order
/// of `links`.
pub fn assemble(
    links: &[ActorClaimLink],
    assignments: &[CategoryAssignment],
    stances: &[StanceRecord],
    dates: &HashMap<String, NaiveDate>,
) -> Result<Assembly> {
    let mut categories: HashMap<SentenceKey, &CategoryAssignment> = HashMap::new();
    for a in assignments {
        let key = (a.doc_id.clone(), a.sentence_index);
        if let Some(prev) = categories.insert(key, a) {
            if prev.code != a.code {
                return Err(Error::CategoryConflict {
                    doc_id: a.doc_id.clone(),
                    sentence_index: a.sentence_index,
                    first: prev.code,
                    second: a.code,
                });
            }
        }
    }
    let polarities: HashMap<SentenceKey, &StanceRecord> = stances
        .iter()
        .map(|s| ((s.doc_id.clone(), s.sentence_index), s))
        .collect();

    let mut dropped = DropCounts::default();
    let linked: std::collections::HashSet<SentenceKey> = links
        .iter()
        .map(|l| (l.candidate.doc_id.clone(), l.candidate.sentence_index))
        .collect();
    dropped.no_actor = categories.keys().filter(|k| !linked.contains(*k)).count();

    let mut counted = std::collections::HashSet::new();
    let mut dyads = Vec::new();
    for link in links {
        let key = (link.candidate.doc_id.clone(), link.candidate.sentence_index);
        let Some(assignment) = categories.get(&key) else {
            if counted.insert(key) {
                dropped.no_category += 1;
            }
            continue;
        };
        let stance = match polarities.get(&key) {
            Some(s) if s.code == assignment.code => s,
            _ => {
                if counted.insert(key) {
                    dropped.no_polarity += 1;
                }
                continue;
            }
        };
        let date = *dates.get(&key.0).ok_or_else(|| {
            Error::Contract(format!("no date known for document `{}`", key.0))
        })?;
        dyads.push(Dyad {
            actor: link.actor.normalized.clone(),
            code: assignment.code,
            polarity: stance.polarity,
            date,
            doc_id: key.0,
            sentence_index: key.1,
            similarity: assignment.similarity,
            claim_score: link.candidate.score,
            stance_margin: stance.margin,
        });
    }
    Ok(Assembly { dyads, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupScope {
    /// One dyad per actor, code and date.
    #[default]
    PerDate,
    /// One dyad per actor, code and article.
    PerArticle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DedupPolicy {
    pub scope: DedupScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityConflict {
    pub kept: Dyad,
    pub dropped: Dyad,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupOutcome {
    pub dyads: Vec<Dyad>,
    pub conflicts: Vec<PolarityConflict>,
}

#[derive(PartialEq, Eq, Hash, PartialOrd, Ord)]
enum DedupKey {
    Date(String, u32, NaiveDate),
    Article(String, u32, String),
}

fn dedup_key(d: &Dyad, policy: DedupPolicy) -> DedupKey {
    match policy.scope {
        DedupScope::PerDate => DedupKey::Date(d.actor.clone(), d.code, d.date),
        DedupScope::PerArticle => DedupKey::Article(d.actor.clone(), d.code, d.doc_id.clone()),
    }
}

/// Keeps the first dyad per key in `(date, doc_id, sentence_index)` order.
/// Later dyads of opposite polarity under a kept key are reported, not merged.
pub fn dedup(dyads: &[Dyad], policy: DedupPolicy) -> DedupOutcome {
    let mut ordered: Vec<&Dyad> = dyads.iter().collect();
    ordered.sort_by(|a, b| a.order_key().cmp(&b.order_key()));

    let mut first: BTreeMap<DedupKey, usize> = BTreeMap::new();
    let mut kept: Vec<Dyad> = Vec::new();
    let mut conflicts = Vec::new();
    for d in ordered {
        match first.get(&dedup_key(d, policy)) {
            Some(&i) => {
                if kept[i].polarity != d.polarity {
                    conflicts.push(PolarityConflict {
                        kept: kept[i].clone(),
                        dropped: d.clone(),
                    });
                }
            }
            None => {
                first.insert(dedup_key(d, policy), kept.len());
                kept.push(d.clone());
            }
        }
    }
    DedupOutcome {
        dyads: kept,
        conflicts,
    }
}
