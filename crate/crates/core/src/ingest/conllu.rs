//! CoNLL-U reader with named-entity recovery and character alignment.
//!
//! Entities are read from a `NER=` MISC attribute in BIO notation, or from a
//! sibling spans file (`sent_index, first_token, last_token, label`) which
//! takes precedence when present.

use std::path::Path;

use super::{Document, EntityLabel, EntitySpan, SentenceAnnotation, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanRecord {
    pub sent_index: usize,
    pub first_token: usize,
    pub last_token: usize,
    pub label: EntityLabel,
}

struct RawToken {
    token: Token,
    ner: Option<String>,
    /// Surface to align against the text; `None` for members of a multiword token.
    align_form: Option<String>,
}

/// Loads `<doc_id>.conllu` style annotations and aligns them to `doc.text`.
pub fn load_conllu(
    path: &Path,
    doc: &Document,
    spans_path: Option<&Path>,
) -> Result<Vec<SentenceAnnotation>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spans = match spans_path {
        Some(p) if p.exists() => Some(load_spans_file(p)?),
        _ => None,
    };
    parse_conllu(&text, &doc.text, spans.as_deref()).map_err(|e| match e {
        Error::Malformed { line, message, .. } => Error::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

pub fn load_spans_file(path: &Path) -> Result<Vec<SpanRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if i == 0 && fields.first() == Some(&"sent_index") {
            continue;
        }
        let malformed = |message: &str| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: message.to_string(),
        };
        if fields.len() != 4 {
            return Err(malformed("expected 4 tab-separated columns"));
        }
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| malformed("invalid integer"));
        out.push(SpanRecord {
            sent_index: num(fields[0])?,
            first_token: num(fields[1])?,
            last_token: num(fields[2])?,
            label: EntityLabel::from_tag(fields[3].trim()),
        });
    }
    Ok(out)
}

fn parse_sentences(conllu: &str) -> Result<Vec<Vec<RawToken>>> {
    let mut sentences = Vec::new();
    let mut current: Vec<RawToken> = Vec::new();
    // (last word id covered, surface) of the open multiword token
    let mut multiword: Option<(usize, String)> = None;

    for (i, line) in conllu.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let malformed = |message: String| Error::Malformed {
            path: Default::default(),
            line: i + 1,
            message,
        };
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(malformed(format!("expected 10 columns, found {}", cols.len())));
        }
        let id = cols[0];
        if id.contains('.') {
            continue;
        }
        if let Some((start, end)) = id.split_once('-') {
            let end: usize = end
                .parse()
                .map_err(|_| malformed(format!("invalid range id `{id}`")))?;
            start
                .parse::<usize>()
                .map_err(|_| malformed(format!("invalid range id `{id}`")))?;
            multiword = Some((end, cols[1].to_string()));
            continue;
        }
        let index: usize = id
            .parse()
            .map_err(|_| malformed(format!("invalid token id `{id}`")))?;
        if index != current.len() + 1 {
            return Err(malformed(format!("token id {index} out of sequence")));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| malformed(format!("invalid head `{}`", cols[6])))?;
        let ner = cols[9]
            .split('|')
            .find_map(|kv| kv.strip_prefix("NER="))
            .map(str::to_string);
        let align_form = match &mut multiword {
            Some((end, form)) => {
                let first = !form.is_empty();
                let f = std::mem::take(form);
                if index >= *end {
                    multiword = None;
                }
                first.then_some(f)
            }
            None => Some(cols[1].to_string()),
        };
        current.push(RawToken {
            token: Token {
                index,
                surface: cols[1].to_string(),
                lemma: cols[2].to_string(),
                upos: cols[3].to_string(),
                head,
                deprel: cols[7].to_string(),
            },
            ner,
            align_form,
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    for (s, sentence) in sentences.iter().enumerate() {
        let n = sentence.len();
        if let Some(t) = sentence.iter().find(|t| t.token.head > n) {
            return Err(Error::Malformed {
                path: Default::default(),
                line: 0,
                message: format!("sentence {s}: head {} out of range", t.token.head),
            });
        }
        let roots = sentence.iter().filter(|t| t.token.head == 0).count();
        if roots != 1 {
            return Err(Error::Malformed {
                path: Default::default(),
                line: 0,
                message: format!("sentence {s}: expected exactly one root, found {roots}"),
            });
        }
    }
    Ok(sentences)
}

fn bio_entities(tokens: &[RawToken]) -> Vec<(usize, usize, EntityLabel)> {
    let mut out: Vec<(usize, usize, EntityLabel)> = Vec::new();
    let mut open: Option<(usize, usize, String)> = None;
    for t in tokens {
        let tag = t.ner.as_deref().unwrap_or("O");
        let (kind, label) = match tag.split_once('-') {
            Some((k, l)) => (k, l),
            None => (tag, ""),
        };
        match kind {
            "B" => {
                if let Some((a, b, l)) = open.take() {
                    out.push((a, b, EntityLabel::from_tag(&l)));
                }
                open = Some((t.token.index, t.token.index, label.to_string()));
            }
            "I" => match &mut open {
                Some((_, b, l)) if l == label => *b = t.token.index,
                _ => {
                    if let Some((a, b, l)) = open.take() {
                        out.push((a, b, EntityLabel::from_tag(&l)));
                    }
                    open = Some((t.token.index, t.token.index, label.to_string()));
                }
            },
            _ => {
                if let Some((a, b, l)) = open.take() {
                    out.push((a, b, EntityLabel::from_tag(&l)));
                }
            }
        }
    }
    if let Some((a, b, l)) = open {
        out.push((a, b, EntityLabel::from_tag(&l)));
    }
    out
}

/// Parses CoNLL-U text and aligns every token left to right against `doc_text`.
pub fn parse_conllu(
    conllu: &str,
    doc_text: &str,
    spans: Option<&[SpanRecord]>,
) -> Result<Vec<SentenceAnnotation>> {
    let sentences = parse_sentences(conllu)?;
    let mut cursor = 0usize;
    let mut out = Vec::with_capacity(sentences.len());

    for (s_idx, raw) in sentences.iter().enumerate() {
        let mut start = None;
        let mut end = cursor;
        for t in raw {
            let Some(form) = &t.align_form else { continue };
            let rest = &doc_text[cursor..];
            let skipped = rest.len() - rest.trim_start().len();
            let at = cursor + skipped;
            if !doc_text[at..].starts_with(form.as_str()) {
                return Err(Error::Alignment {
                    sentence: s_idx,
                    token: t.token.index,
                    surface: form.clone(),
                });
            }
            start.get_or_insert(at);
            cursor = at + form.len();
            end = cursor;
        }
        let start = start.unwrap_or(cursor);
        let n = raw.len();

        let ranges: Vec<(usize, usize, EntityLabel)> = match spans {
            Some(records) => records
                .iter()
                .filter(|r| r.sent_index == s_idx)
                .map(|r| {
                    if r.first_token < 1 || r.first_token > r.last_token || r.last_token > n {
                        Err(Error::Malformed {
                            path: Default::default(),
                            line: 0,
                            message: format!(
                                "span {}..{} outside sentence {s_idx} of length {n}",
                                r.first_token, r.last_token
                            ),
                        })
                    } else {
                        Ok((r.first_token, r.last_token, r.label))
                    }
                })
                .collect::<Result<_>>()?,
            None => bio_entities(raw),
        };
        let tokens: Vec<Token> = raw.iter().map(|t| t.token.clone()).collect();
        let entity_mentions = ranges
            .into_iter()
            .map(|(a, b, label)| EntitySpan {
                token_range: (a, b),
                label,
                surface: tokens[a - 1..b]
                    .iter()
                    .map(|t| t.surface.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            })
            .collect();
        out.push(SentenceAnnotation {
            index: s_idx,
            char_span: (start, end),
            tokens,
            entity_mentions,
        });
    }
    Ok(out)
}
