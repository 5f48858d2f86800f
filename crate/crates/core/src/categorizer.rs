//! Few-shot claim categorisation by cosine similarity to seed sentences.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::embeddings::{cosine, Embedder, EmbeddingVector};
use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategorizerConfig {
    pub tau: f64,
    pub pooling: Pooling,
}

impl Default for CategorizerConfig {
    fn default() -> Self {
        CategorizerConfig {
            tau: DEFAULT_TAU,
            pooling: Pooling::Max,
        }
    }
}

impl CategorizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau {} outside [-1, 1]", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub text: String,
    pub embedding: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeedSet {
    by_code: BTreeMap<u32, Vec<Seed>>,
}

impl SeedSet {
    /// Seeds without codebook validation; used for ad-hoc category sets.
    pub fn from_map(by_code: BTreeMap<u32, Vec<Seed>>) -> Self {
        SeedSet { by_code }
    }

    /// Validates that seeds only target assignable codes and that every
    /// assignable code has at least one seed.
    pub fn new(by_code: BTreeMap<u32, Vec<Seed>>, codebook: &Codebook) -> Result<Self> {
        for code in by_code.keys() {
            codebook.check_assignable(*code)?;
        }
        if let Some(code) = codebook
            .assignable_codes()
            .find(|c| !by_code.get(c).is_some_and(|v| !v.is_empty()))
        {
            return Err(Error::Config(format!("category {code} has no seed sentence")));
        }
        Ok(SeedSet { by_code })
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.values().all(Vec::is_empty)
    }

    pub fn codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.by_code.keys().copied()
    }

    pub fn seeds(&self, code: u32) -> &[Seed] {
        self.by_code.get(&code).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn add(&mut self, code: u32, seed: Seed) {
        self.by_code.entry(code).or_default().push(seed);
    }
}

/// Best-matching category for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMatch {
    pub code: u32,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAssignment {
    pub doc_id: String,
    pub sentence_index: usize,
    pub code: u32,
    pub similarity: f64,
}

/// Pooled similarity per category, ascending by code.
pub fn pooled_similarities(
    candidate: &EmbeddingVector,
    seeds: &SeedSet,
    pooling: Pooling,
) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::new();
    for (code, list) in &seeds.by_code {
        if list.is_empty() {
            continue;
        }
        let sims = list
            .iter()
            .map(|s| cosine(candidate, &s.embedding))
            .collect::<Result<Vec<f64>>>()?;
        let pooled = match pooling {
            Pooling::Max => sims.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Pooling::Mean => sims.iter().sum::<f64>() / sims.len() as f64,
        };
        out.push((*code, pooled));
    }
    Ok(out)
}

/// Argmax category (lowest code on ties), or `None` below `tau`.
pub fn categorize(
    candidate: &EmbeddingVector,
    seeds: &SeedSet,
    cfg: &CategorizerConfig,
) -> Result<Option<CategoryMatch>> {
    if seeds.is_empty() {
        return Err(Error::EmptyInput("seed set"));
    }
    let pooled = pooled_similarities(candidate, seeds, cfg.pooling)?;
    let mut best: Option<CategoryMatch> = None;
    let mut tied = false;
    for (code, similarity) in pooled {
        match best {
            Some(b) if similarity > b.similarity => {
                best = Some(CategoryMatch { code, similarity });
                tied = false;
            }
            Some(b) if similarity == b.similarity => tied = true,
            Some(_) => {}
            None => best = Some(CategoryMatch { code, similarity }),
        }
    }
    let best = best.expect("non-empty seed set");
    if tied {
        log::info!("category tie at similarity {}; kept lowest code {}", best.similarity, best.code);
    }
    Ok((best.similarity >= cfg.tau).then_some(best))
}

/// Ranks `sentences` by similarity to `label`, descending; ties keep input order.
pub fn suggest_seeds(
    label: &EmbeddingVector,
    sentences: &[(String, EmbeddingVector)],
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut ranked = sentences
        .iter()
        .enumerate()
        .map(|(i, (_, e))| cosine(label, e).map(|s| (i, s)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked.truncate(k);
    Ok(ranked)
}

/// Reads a `code<TAB>seed_text` file and embeds every seed.
pub fn load_seed_file(path: &Path, codebook: &Codebook, embedder: &Embedder) -> Result<SeedSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<(u32, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (code, seed) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected `code<TAB>seed_text`".into()))?;
        if i == 0 && code.trim().eq_ignore_ascii_case("code") {
            continue;
        }
        let code: u32 = code
            .trim()
            .parse()
            .map_err(|_| malformed(format!("invalid code `{code}`")))?;
        codebook.check_assignable(code)?;
        let seed = seed.trim();
        if seed.is_empty() {
            return Err(malformed("empty seed text".into()));
        }
        rows.push((code, seed.to_string()));
    }
    let texts: Vec<&str> = rows.iter().map(|(_, t)| t.as_str()).collect();
    let embeddings = if texts.is_empty() { Vec::new() } else { embedder.embed(&texts)? };
    let mut by_code: BTreeMap<u32, Vec<Seed>> = BTreeMap::new();
    for ((code, text), embedding) in rows.into_iter().zip(embeddings) {
        by_code.entry(code).or_default().push(Seed { text, embedding });
    }
    SeedSet::new(by_code, codebook)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{mock_embed, EmbeddingConfig};

    fn seed(text: &str) -> Seed {
        Seed { text: text.into(), embedding: mock_embed(text, 256).unwrap() }
    }

    fn small_set() -> SeedSet {
        let mut m = BTreeMap::new();
        m.insert(110, vec![seed("Wir brauchen ein Moratorium für alle Atomkraftwerke.")]);
        m.insert(130, vec![seed("Die Laufzeiten der Kraftwerke müssen verlängert werden.")]);
        SeedSet::from_map(m)
    }

    #[test]
    fn identical_candidate_gets_its_category() {
        let set = small_set();
        let cand = mock_embed("Wir brauchen ein Moratorium für alle Atomkraftwerke.", 256).unwrap();
        let m = categorize(&cand, &set, &CategorizerConfig::default()).unwrap().unwrap();
        assert_eq!(m.code, 110);
        assert!((m.similarity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn below_tau_is_none() {
        let set = small_set();
        let cand = mock_embed("Xylophon Quiz", 256).unwrap();
        let cfg = CategorizerConfig { tau: 0.99, ..Default::default() };
        assert_eq!(categorize(&cand, &set, &cfg).unwrap(), None);
    }

    #[test]
    fn ties_pick_lowest_code() {
        let e = mock_embed("gleich", 64).unwrap();
        let mut m = BTreeMap::new();
        m.insert(7, vec![Seed { text: "a".into(), embedding: e.clone() }]);
        m.insert(3, vec![Seed { text: "b".into(), embedding: e.clone() }]);
        let got = categorize(&e, &SeedSet::from_map(m), &CategorizerConfig::default()).unwrap();
        assert_eq!(got.unwrap().code, 3);
    }

    #[test]
    fn empty_seed_set_is_error() {
        let e = mock_embed("x", 8).unwrap();
        assert!(categorize(&e, &SeedSet::default(), &CategorizerConfig::default()).is_err());
    }

    #[test]
    fn mean_pooling() {
        let a = EmbeddingVector::new(vec![1.0, 0.0]).unwrap();
        let b = EmbeddingVector::new(vec![0.0, 1.0]).unwrap();
        let mut m = BTreeMap::new();
        m.insert(1, vec![Seed { text: "a".into(), embedding: a.clone() }, Seed { text: "b".into(), embedding: b }]);
        let set = SeedSet::from_map(m);
        let pooled = pooled_similarities(&a, &set, Pooling::Mean).unwrap();
        assert!((pooled[0].1 - 0.5).abs() < 1e-12);
        let pooled = pooled_similarities(&a, &set, Pooling::Max).unwrap();
        assert!((pooled[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn suggest_seeds_ranks_verbatim_label_first() {
        let label = mock_embed("Moratorium", 256).unwrap();
        let sentences: Vec<(String, EmbeddingVector)> = ["Die Laufzeit wird verlängert.", "Moratorium", "Ein Moratorium jetzt."]
            .iter()
            .map(|t| (t.to_string(), mock_embed(t, 256).unwrap()))
            .collect();
        let top = suggest_seeds(&label, &sentences, 1).unwrap();
        assert_eq!(top[0].0, 1);
        assert!((top[0].1 - 1.0).abs() < 1e-9);
        assert_eq!(suggest_seeds(&label, &sentences, 10).unwrap().len(), 3);
        assert!(suggest_seeds(&label, &sentences, 0).is_err());
    }

    #[test]
    fn seed_file_validation() {
        let cb = Codebook::nuclear_phase_out();
        let embedder = Embedder::new(EmbeddingConfig::mock(64)).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let all: String = cb.assignable_codes().map(|c| format!("{c}\tSeed für {c}\n")).collect();
        let p = dir.path().join("seeds.tsv");
        std::fs::write(&p, format!("code\tseed_text\n{all}")).unwrap();
        let set = load_seed_file(&p, &cb, &embedder).unwrap();
        assert_eq!(set.codes().count(), 35);

        std::fs::write(&p, format!("{all}400\tVerfahren\n")).unwrap();
        assert!(matches!(load_seed_file(&p, &cb, &embedder), Err(Error::ExcludedCode(400))));

        std::fs::write(&p, "110\tNur ein Seed\n").unwrap();
        assert!(matches!(load_seed_file(&p, &cb, &embedder), Err(Error::Config(_))));

        assert!(matches!(
            load_seed_file(&dir.path().join("missing.tsv"), &cb, &embedder),
            Err(Error::Io { .. })
        ));
    }
}
