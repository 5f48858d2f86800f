//! Actor identification for claim candidates.
//!
//! A sentence is an *inside* case when a named person or organisation is the
//! subject of a cue verb, and an *outside* case when the subject of a cue
//! verb is a pronoun. Only inside cases produce actor-claim links.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::claims::ClaimCandidate;
use crate::error::{Error, Result};
use crate::ingest::{EntityLabel, SentenceAnnotation, Token};

const SUBJECT_RELATIONS: &[&str] = &["nsubj", "nsubjpass", "sb"];
/// Relations climbed from an entity token towards the subject it belongs to.
const ATTACHMENT_RELATIONS: &[&str] = &["flat", "appos", "compound", "conj", "pnc", "nk"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbCueLexicon {
    pub inside: BTreeSet<String>,
    pub outside: BTreeSet<String>,
}

impl Default for VerbCueLexicon {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        VerbCueLexicon {
            inside: set(&[
                "fordern", "plädieren", "verlangen", "ankündigen", "kritisieren", "warnen", "wollen",
            ]),
            outside: set(&["sagen", "betonen", "kritisieren", "erklären"]),
        }
    }
}

impl VerbCueLexicon {
    /// Parses a lexicon file with `[inside]` and `[outside]` sections, one lemma per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut inside = BTreeSet::new();
        let mut outside = BTreeSet::new();
        let mut section: Option<&mut BTreeSet<String>> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[inside]" => section = Some(&mut inside),
                "[outside]" => section = Some(&mut outside),
                lemma => match section.as_deref_mut() {
                    Some(set) => {
                        set.insert(lemma.to_lowercase());
                    }
                    None => {
                        return Err(Error::Config(format!(
                            "lexicon line {}: lemma outside of a section",
                            i + 1
                        )))
                    }
                },
            }
        }
        if inside.is_empty() || outside.is_empty() {
            return Err(Error::Config("lexicon needs non-empty [inside] and [outside] sections".into()));
        }
        Ok(VerbCueLexicon { inside, outside })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[inside]\n");
        self.inside.iter().for_each(|l| out.push_str(&format!("{l}\n")));
        out.push_str("[outside]\n");
        self.outside.iter().for_each(|l| out.push_str(&format!("{l}\n")));
        out
    }

    fn any_cue(&self, lemma: &str) -> bool {
        self.inside.contains(lemma) || self.outside.contains(lemma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    Inside,
    Outside,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorMention {
    pub surface: String,
    pub normalized: String,
    pub entity_type: EntityLabel,
    pub doc_id: String,
    pub sentence_index: usize,
    pub token_range: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorClaimLink {
    pub actor: ActorMention,
    pub candidate: ClaimCandidate,
    pub cue_verb_lemma: String,
}

fn relation(token: &Token) -> &str {
    token.deprel.split(':').next().unwrap_or("")
}

fn is_subject(token: &Token) -> bool {
    SUBJECT_RELATIONS.contains(&relation(token))
}

/// The cue lemma carried by a verb, directly or through an auxiliary/modal child.
fn cue_of(sentence: &SentenceAnnotation, verb: &Token, accept: &dyn Fn(&str) -> bool) -> Option<String> {
    let lemma = verb.lemma.to_lowercase();
    if accept(&lemma) {
        return Some(lemma);
    }
    sentence
        .tokens
        .iter()
        .filter(|t| t.head == verb.index && relation(t) == "aux")
        .map(|t| t.lemma.to_lowercase())
        .find(|l| accept(l))
}

/// Climbs attachment relations from `token` and returns the subject token it
/// belongs to, if any.
fn governing_subject<'a>(sentence: &'a SentenceAnnotation, token: &'a Token) -> Option<&'a Token> {
    let mut current = token;
    for _ in 0..sentence.tokens.len() {
        if is_subject(current) {
            return Some(current);
        }
        if !ATTACHMENT_RELATIONS.contains(&relation(current)) {
            return None;
        }
        current = sentence.token(current.head)?;
    }
    None
}

/// `(entity index, verb token index, cue lemma)` for every actor entity that
/// is the subject of an inside-cue verb.
fn entity_subjects(sentence: &SentenceAnnotation, lex: &VerbCueLexicon) -> Vec<(usize, usize, String)> {
    let accept = |l: &str| lex.inside.contains(l);
    let mut found = BTreeSet::new();
    for (e_idx, entity) in sentence.entity_mentions.iter().enumerate() {
        if !entity.label.is_actor() {
            continue;
        }
        for t in entity.token_range.0..=entity.token_range.1 {
            let Some(token) = sentence.token(t) else { continue };
            let Some(subject) = governing_subject(sentence, token) else { continue };
            let Some(verb) = sentence.token(subject.head) else { continue };
            if let Some(cue) = cue_of(sentence, verb, &accept) {
                found.insert((e_idx, verb.index, cue));
            }
        }
    }
    found.into_iter().collect()
}

pub fn detect_case(sentence: &SentenceAnnotation, lex: &VerbCueLexicon) -> CaseLabel {
    if !entity_subjects(sentence, lex).is_empty() {
        return CaseLabel::Inside;
    }
    let any = |l: &str| lex.any_cue(l);
    let pronoun_subject = sentence.tokens.iter().any(|t| {
        t.upos == "PRON"
            && is_subject(t)
            && sentence
                .token(t.head)
                .is_some_and(|verb| cue_of(sentence, verb, &any).is_some())
    });
    if pronoun_subject {
        CaseLabel::Outside
    } else {
        CaseLabel::None
    }
}

/// One link per (entity subject, cue verb) pair in an inside-case candidate sentence.
pub fn extract_links(
    sentence: &SentenceAnnotation,
    doc_id: &str,
    candidates: &[ClaimCandidate],
    lex: &VerbCueLexicon,
) -> Vec<ActorClaimLink> {
    let Some(candidate) = candidates
        .iter()
        .find(|c| c.doc_id == doc_id && c.sentence_index == sentence.index)
    else {
        return Vec::new();
    };
    entity_subjects(sentence, lex)
        .into_iter()
        .map(|(e_idx, _, cue)| {
            let entity = &sentence.entity_mentions[e_idx];
            ActorClaimLink {
                actor: ActorMention {
                    surface: entity.surface.clone(),
                    normalized: entity.surface.clone(),
                    entity_type: entity.label,
                    doc_id: doc_id.to_string(),
                    sentence_index: sentence.index,
                    token_range: entity.token_range,
                },
                candidate: candidate.clone(),
                cue_verb_lemma: cue,
            }
        })
        .collect()
}

fn canonical(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn genitive_stem(name: &str) -> Option<&str> {
    name.strip_suffix('s').filter(|s| !s.is_empty())
}

/// Corpus-wide index of attested actor names, genitive forms folded.
#[derive(Debug, Clone, Default)]
pub struct AttestedNames {
    counts: HashMap<String, usize>,
    by_token: HashMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalization {
    pub chosen: String,
    /// Other names tied with `chosen` on length; non-empty means ambiguous.
    pub alternatives: Vec<String>,
}

impl AttestedNames {
    pub fn from_surfaces<I, S>(surfaces: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for s in surfaces {
            let name = canonical(s.as_ref());
            if !name.is_empty() {
                *counts.entry(name).or_default() += 1;
            }
        }
        // fold `Xs` into `X` until no attested name has an attested genitive stem
        loop {
            let mut folds: Vec<(String, String)> = counts
                .keys()
                .filter_map(|n| {
                    genitive_stem(n)
                        .filter(|stem| counts.contains_key(*stem))
                        .map(|stem| (n.clone(), stem.to_string()))
                })
                .collect();
            if folds.is_empty() {
                break;
            }
            folds.sort();
            for (from, to) in folds {
                if let Some(c) = counts.remove(&from) {
                    *counts.entry(to).or_default() += c;
                }
            }
        }
        let mut by_token: HashMap<String, Vec<String>> = HashMap::new();
        for name in counts.keys() {
            let unique: BTreeSet<&str> = name.split(' ').collect();
            for tok in unique {
                by_token.entry(tok.to_string()).or_default().push(name.clone());
            }
        }
        AttestedNames { counts, by_token }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.counts.contains_key(name)
    }

    pub fn count(&self, name: &str) -> usize {
        self.counts.get(name).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    /// Strips a genitive `s` when the stem is attested, then picks the longest
    /// attested name containing the result at token boundaries. Ties go to the
    /// most frequent name, then the lexicographically smallest.
    pub fn normalize(&self, surface: &str) -> Result<Normalization> {
        let name = canonical(surface);
        if name.is_empty() {
            return Err(Error::EmptyInput("actor surface"));
        }
        let stripped = match genitive_stem(&name) {
            Some(stem) if self.contains(stem) => stem.to_string(),
            _ => name,
        };
        let needle: Vec<&str> = stripped.split(' ').collect();
        let pool = self.by_token.get(needle[0]).map(Vec::as_slice).unwrap_or(&[]);
        let mut matches: Vec<&String> = pool
            .iter()
            .filter(|cand| {
                let hay: Vec<&str> = cand.split(' ').collect();
                hay.windows(needle.len()).any(|w| w == needle.as_slice())
            })
            .collect();
        if matches.is_empty() {
            return Ok(Normalization {
                chosen: stripped,
                alternatives: Vec::new(),
            });
        }
        let len = |s: &str| s.split(' ').count();
        matches.sort_by(|a, b| {
            len(b)
                .cmp(&len(a))
                .then_with(|| self.count(b).cmp(&self.count(a)))
                .then_with(|| a.cmp(b))
        });
        let best = len(matches[0]);
        let alternatives = matches[1..]
            .iter()
            .take_while(|m| len(m) == best)
            .map(|m| m.to_string())
            .collect();
        Ok(Normalization {
            chosen: matches[0].clone(),
            alternatives,
        })
    }
}

pub fn normalize_actor(surface: &str, attested: &AttestedNames) -> Result<String> {
    attested.normalize(surface).map(|n| n.chosen)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityRecord {
    pub surface: String,
    pub chosen: String,
    pub alternatives: Vec<String>,
    pub doc_id: String,
    pub sentence_index: usize,
}

pub fn ambiguity_tsv(records: &[AmbiguityRecord]) -> String {
    let mut out = String::from("surface\tchosen\talternatives\tdoc_id\tsentence_index\n");
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.surface,
            r.chosen,
            r.alternatives.join("|"),
            r.doc_id,
            r.sentence_index
        );
    }
    out
}

/// Rewrites each link's `normalized` name, collecting ambiguous choices.
pub fn normalize_links(
    links: &mut [ActorClaimLink],
    attested: &AttestedNames,
) -> Result<Vec<AmbiguityRecord>> {
    let mut log = Vec::new();
    for link in links.iter_mut() {
        let n = attested.normalize(&link.actor.surface)?;
        if !n.alternatives.is_empty() {
            log.push(AmbiguityRecord {
                surface: link.actor.surface.clone(),
                chosen: n.chosen.clone(),
                alternatives: n.alternatives.clone(),
                doc_id: link.actor.doc_id.clone(),
                sentence_index: link.actor.sentence_index,
            });
        }
        link.actor.normalized = n.chosen;
    }
    Ok(log)
}
