//! Boolean keyword queries of the form `(a* OR b) AND (c*) NOT (d*)`.
//!
//! Terms are lower-cased. A trailing `*` makes a term a token-initial prefix.
//! A term without `*` matches a whole token or the head (final constituent)
//! of a closed compound, so `bombe` matches `Atombombe`.

use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{Error, Result};

/// The article-selection query for the nuclear phase-out corpus.
pub const DEFAULT_QUERY: &str = "(Atom* OR AKW* OR Kernenergie*) AND (ausst* OR stilll* OR abschalt* OR Laufzeit*) NOT (waffe* or bombe)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTerm {
    pub text: String,
    pub prefix: bool,
}

impl QueryTerm {
    pub fn matches(&self, token: &str) -> bool {
        if self.prefix {
            token.starts_with(&self.text)
        } else {
            token.ends_with(&self.text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordQuery {
    /// Conjunction of OR-groups.
    pub groups: Vec<Vec<QueryTerm>>,
    /// Disjunction of excluded terms; may be empty.
    pub exclude: Vec<QueryTerm>,
}

impl KeywordQuery {
    pub fn matches_tokens<'a>(&self, tokens: impl Iterator<Item = &'a str> + Clone) -> bool {
        let any = |terms: &[QueryTerm]| {
            tokens
                .clone()
                .any(|tok| terms.iter().any(|t| t.matches(tok)))
        };
        self.groups.iter().all(|g| any(g)) && !any(&self.exclude)
    }

    pub fn matches_text(&self, text: &str) -> bool {
        let tokens = tokenize(text);
        self.matches_tokens(tokens.iter().map(String::as_str))
    }

    pub fn matches_document(&self, doc: &Document, include_title: bool) -> bool {
        let mut tokens = tokenize(&doc.text);
        if include_title {
            tokens.extend(tokenize(&doc.title));
        }
        self.matches_tokens(tokens.iter().map(String::as_str))
    }
}

/// Lower-cased alphanumeric runs.
pub(crate) fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme {
    Open,
    Close,
    And,
    Or,
    Not,
    Word(String),
}

fn lex(input: &str) -> Vec<(usize, Lexeme)> {
    let mut out = Vec::new();
    let mut chars = input.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            '(' => {
                out.push((pos, Lexeme::Open));
                chars.next();
            }
            ')' => {
                out.push((pos, Lexeme::Close));
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                let lexeme = match word.as_str() {
                    w if w.eq_ignore_ascii_case("and") => Lexeme::And,
                    w if w.eq_ignore_ascii_case("or") => Lexeme::Or,
                    w if w.eq_ignore_ascii_case("not") => Lexeme::Not,
                    _ => Lexeme::Word(word),
                };
                out.push((pos, lexeme));
            }
        }
    }
    out
}

struct Parser {
    lexemes: Vec<(usize, Lexeme)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Lexeme> {
        self.lexemes.get(self.pos).map(|(_, l)| l)
    }

    fn offset(&self) -> usize {
        self.lexemes.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::QueryParse {
            position: self.offset(),
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Lexeme, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn term(&mut self) -> Result<QueryTerm> {
        match self.peek() {
            Some(Lexeme::Word(w)) => {
                let w = w.to_lowercase();
                let (text, prefix) = match w.strip_suffix('*') {
                    Some(stem) => (stem.to_string(), true),
                    None => (w, false),
                };
                if text.is_empty() || text.contains('*') {
                    return Err(self.error("invalid term"));
                }
                self.pos += 1;
                Ok(QueryTerm { text, prefix })
            }
            _ => Err(self.error("expected term")),
        }
    }

    fn group(&mut self) -> Result<Vec<QueryTerm>> {
        self.expect(Lexeme::Open, "`(`")?;
        if self.peek() == Some(&Lexeme::Close) {
            return Err(self.error("empty group"));
        }
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Lexeme::Or) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        self.expect(Lexeme::Close, "`)`")?;
        Ok(terms)
    }
}

pub fn parse_query(text: &str) -> Result<KeywordQuery> {
    let mut p = Parser {
        lexemes: lex(text),
        pos: 0,
        end: text.len(),
    };
    let mut groups = vec![p.group()?];
    while p.peek() == Some(&Lexeme::And) {
        p.pos += 1;
        groups.push(p.group()?);
    }
    let mut exclude = Vec::new();
    if p.peek() == Some(&Lexeme::Not) {
        p.pos += 1;
        exclude = p.group()?;
    }
    if p.peek().is_some() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(KeywordQuery { groups, exclude })
}

/// Keeps documents where every positive group matches and no excluded term does.
pub fn keyword_filter(docs: Vec<Document>, query: &KeywordQuery, include_title: bool) -> Vec<Document> {
    docs.into_iter()
        .filter(|d| query.matches_document(d, include_title))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_groups_and_exclusion() {
        let q = parse_query("(Atom* OR AKW*) AND (ausst*) NOT (waffe*)").unwrap();
        assert_eq!(q.groups.len(), 2);
        assert_eq!(q.groups[0].len(), 2);
        assert_eq!(q.groups[0][0], QueryTerm { text: "atom".into(), prefix: true });
        assert_eq!(q.exclude.len(), 1);
    }

    #[test]
    fn single_exact_term() {
        let q = parse_query("(a)").unwrap();
        assert_eq!(q.groups, vec![vec![QueryTerm { text: "a".into(), prefix: false }]]);
        assert!(q.exclude.is_empty());
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_query("(a OR") {
            Err(Error::QueryParse { position, .. }) => assert_eq!(position, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_query("()").is_err());
        assert!(parse_query("(a) AND").is_err());
        assert!(parse_query("a").is_err());
        assert!(parse_query("(a))").is_err());
        assert!(parse_query("NOT (a)").is_err());
        assert!(parse_query("(*)").is_err());
    }

    #[test]
    fn default_query_parses() {
        let q = parse_query(DEFAULT_QUERY).unwrap();
        assert_eq!(q.groups.len(), 2);
        assert_eq!(q.groups[1].len(), 4);
        assert_eq!(q.exclude[1], QueryTerm { text: "bombe".into(), prefix: false });
    }

    #[test]
    fn default_query_fixtures() {
        let q = parse_query(DEFAULT_QUERY).unwrap();
        assert!(q.matches_text("Atomkraftwerke abschalten"));
        assert!(!q.matches_text("Atombombe sofort abschalten"));
        assert!(!q.matches_text("Kohlekraftwerke abschalten"));
    }

    #[test]
    fn prefix_is_token_initial() {
        let q = parse_query("(kraft*)").unwrap();
        assert!(q.matches_text("Kraftwerk"));
        assert!(!q.matches_text("Atomkraftwerk"));
    }
}
