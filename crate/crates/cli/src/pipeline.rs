//! Stage execution with output caching keyed by config hash.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use claimnet::actors::{ambiguity_tsv, extract_links, normalize_links, ActorClaimLink, AttestedNames, VerbCueLexicon};
use claimnet::categorizer::{categorize, load_seed_file, CategoryAssignment};
use claimnet::claims::{filter_candidates, ClaimCandidate, ClaimScore, ClaimScorer};
use claimnet::dyads::{assemble, dedup, Dyad, StanceRecord};
use claimnet::embeddings::Embedder;
use claimnet::evaluation::{
    compare_periods, confusion, gold_as_dyads, macro_precision, stance_report, period_metrics_csv, weekly_counts, weekly_csv,
    ConfusionMatrix, EvalReport,
};
use claimnet::ingest::{exclude_sections, keyword_filter, load_conllu, load_corpus, load_gold, parse_query, Document, GoldDyad};
use claimnet::network::{build, concept_core, network_file_name, render, DegreeMode, ExportFormat};
use claimnet::stance::{build_hypotheses, classify_stance, scorer_from_config};
use serde::{Deserialize, Serialize};

use crate::config::LoadedConfig;
use crate::output::{embedded_hash, read_jsonl, write_atomic, write_jsonl, Meta};
use crate::review::{review_queue, review_tsv};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Detect,
    Extract,
    Classify,
    Stance,
    Network,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Detect,
        Stage::Extract,
        Stage::Classify,
        Stage::Stance,
        Stage::Network,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Detect => "detect",
            Stage::Extract => "extract",
            Stage::Classify => "classify",
            Stage::Stance => "stance",
            Stage::Network => "network",
            Stage::Eval => "eval",
        }
    }

    fn inputs(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Detect => &[Stage::Ingest],
            Stage::Extract | Stage::Classify => &[Stage::Ingest, Stage::Detect],
            Stage::Stance => &[Stage::Ingest, Stage::Extract, Stage::Classify],
            Stage::Network | Stage::Eval => &[Stage::Stance],
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| CliError::validation(format!("unknown stage `{s}`")))
    }
}

pub const DOCUMENTS: &str = "documents.jsonl";
pub const CLAIM_SCORES: &str = "claim_scores.jsonl";
pub const CANDIDATES: &str = "candidates.jsonl";
pub const LINKS: &str = "links.jsonl";
pub const AMBIGUITIES: &str = "actor_ambiguities.tsv";
pub const ASSIGNMENTS: &str = "assignments.jsonl";
pub const STANCES: &str = "stances.jsonl";
pub const DYADS: &str = "dyads.jsonl";
pub const CONFLICTS: &str = "dedup_conflicts.jsonl";
pub const RUN_META: &str = "run_meta.json";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const PERIOD_METRICS: &str = "period_metrics.csv";
pub const WEEKLY: &str = "weekly_counts.csv";
pub const CONFUSION: &str = "confusion.csv";
pub const REVIEW_QUEUE: &str = "review_queue.tsv";

pub struct Pipeline<'a> {
    loaded: &'a LoadedConfig,
    out: PathBuf,
}

/// Outcome per requested stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    Skipped,
}

impl<'a> Pipeline<'a> {
    pub fn new(loaded: &'a LoadedConfig) -> Self {
        Pipeline {
            loaded,
            out: loaded.config.output_dir.clone(),
        }
    }

    fn meta(&self, stage: Stage) -> Meta {
        Meta::new(&self.loaded.hash, stage.name())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn outputs(&self, stage: Stage) -> Result<Vec<PathBuf>, CliError> {
        let names: Vec<String> = match stage {
            Stage::Ingest => vec![DOCUMENTS.into()],
            Stage::Detect => vec![CLAIM_SCORES.into(), CANDIDATES.into()],
            Stage::Extract => vec![LINKS.into(), AMBIGUITIES.into()],
            Stage::Classify => vec![ASSIGNMENTS.into()],
            Stage::Stance => vec![STANCES.into(), DYADS.into(), CONFLICTS.into(), RUN_META.into()],
            Stage::Network => {
                let mut v = Vec::new();
                for p in self.loaded.config.periods()? {
                    for f in &self.loaded.config.export_formats {
                        v.push(network_file_name(p.index, p.core_n, *f));
                    }
                }
                v
            }
            Stage::Eval => vec![EVAL_REPORT.into(), PERIOD_METRICS.into(), WEEKLY.into(), CONFUSION.into()],
        };
        Ok(names.iter().map(|n| self.path(n)).collect())
    }

    /// Outputs exist and were produced by the current configuration.
    pub fn is_current(&self, stage: Stage) -> Result<bool, CliError> {
        Ok(self
            .outputs(stage)?
            .iter()
            .all(|p| embedded_hash(p).as_deref() == Some(self.loaded.hash.as_str())))
    }

    fn check_inputs(&self, stage: Stage, scheduled: &[Stage]) -> Result<(), CliError> {
        for needs in stage.inputs() {
            if scheduled.contains(needs) {
                continue;
            }
            for p in self.outputs(*needs)? {
                if embedded_hash(&p).as_deref() != Some(self.loaded.hash.as_str()) {
                    return Err(CliError::MissingPredecessor {
                        stage: stage.name(),
                        needs: needs.name(),
                        path: p.display().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn run(&self, stages: &[Stage], force: bool) -> Result<Vec<(Stage, StageStatus)>, CliError> {
        let mut stages = stages.to_vec();
        stages.sort();
        stages.dedup();
        if stages.contains(&Stage::Eval) && self.loaded.config.gold.is_none() {
            return Err(CliError::validation("stage `eval` requires `gold`"));
        }
        for (i, s) in stages.iter().enumerate() {
            self.check_inputs(*s, &stages[..i])?;
        }
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::validation(format!("cannot create {}: {e}", self.out.display())))?;
        let mut report = Vec::new();
        for s in stages {
            if !force && self.is_current(s)? {
                log::info!("stage {}: outputs current, skipped", s.name());
                report.push((s, StageStatus::Skipped));
                continue;
            }
            log::info!("stage {}: running", s.name());
            match s {
                Stage::Ingest => self.ingest()?,
                Stage::Detect => self.detect()?,
                Stage::Extract => self.extract()?,
                Stage::Classify => self.classify()?,
                Stage::Stance => self.stance()?,
                Stage::Network => self.network(&self.loaded.config.export_formats, &self.out)?,
                Stage::Eval => self.eval()?,
            }
            report.push((s, StageStatus::Ran));
        }
        Ok(report)
    }

    pub fn documents(&self) -> Result<Vec<Document>, CliError> {
        Ok(read_jsonl(&self.path(DOCUMENTS))?.1)
    }

    pub fn dyads(&self) -> Result<Vec<Dyad>, CliError> {
        Ok(read_jsonl(&self.path(DYADS))?.1)
    }

    fn ingest(&self) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let all = load_corpus(&cfg.corpus)?;
        let total = all.len();
        let query = parse_query(&cfg.query)?;
        let kept = exclude_sections(all, &cfg.section_exclusions);
        let mut docs = keyword_filter(kept, &query, cfg.match_title);
        log::info!("ingest: {} of {total} documents retained", docs.len());
        for doc in &mut docs {
            let conllu = cfg.conllu_dir.join(format!("{}.conllu", doc.id));
            let spans = cfg.conllu_dir.join(format!("{}.spans.tsv", doc.id));
            doc.sentences = load_conllu(&conllu, doc, Some(&spans))?;
        }
        write_jsonl(&self.path(DOCUMENTS), &self.meta(Stage::Ingest), &docs)
    }

    fn detect(&self) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let docs = self.documents()?;
        let mut keys = Vec::new();
        let mut texts = Vec::new();
        for d in &docs {
            for s in &d.sentences {
                keys.push((d.id.clone(), s.index));
                texts.push(d.sentence_text(s.index).unwrap_or_default());
            }
        }
        let embedder = Embedder::new(cfg.embedding.clone())?;
        let scorer = ClaimScorer::from_config(&cfg.claims)?;
        let scores: Vec<ClaimScore> = if texts.is_empty() {
            Vec::new()
        } else {
            let raw = scorer.score(&texts, &embedder)?;
            keys.into_iter()
                .zip(raw)
                .map(|((doc_id, sentence_index), score)| ClaimScore { doc_id, sentence_index, score })
                .collect()
        };
        let candidates = filter_candidates(&scores, cfg.claims.threshold);
        log::info!("detect: {} of {} sentences are candidates", candidates.len(), scores.len());
        let meta = self.meta(Stage::Detect);
        write_jsonl(&self.path(CLAIM_SCORES), &meta, &scores)?;
        write_jsonl(&self.path(CANDIDATES), &meta, &candidates)
    }

    fn candidates(&self) -> Result<Vec<ClaimCandidate>, CliError> {
        Ok(read_jsonl(&self.path(CANDIDATES))?.1)
    }

    fn extract(&self) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let docs = self.documents()?;
        let candidates = self.candidates()?;
        let lexicon = match &cfg.lexicon {
            Some(p) => VerbCueLexicon::load(p)?,
            None => VerbCueLexicon::default(),
        };
        let mut by_doc: HashMap<&str, Vec<ClaimCandidate>> = HashMap::new();
        for c in &candidates {
            by_doc.entry(c.doc_id.as_str()).or_default().push(c.clone());
        }
        let mut links: Vec<ActorClaimLink> = Vec::new();
        for d in &docs {
            let Some(cands) = by_doc.get(d.id.as_str()) else { continue };
            for s in &d.sentences {
                links.extend(extract_links(s, &d.id, cands, &lexicon));
            }
        }
        let attested = AttestedNames::from_surfaces(
            docs.iter()
                .flat_map(|d| d.sentences.iter())
                .flat_map(|s| s.entity_mentions.iter())
                .filter(|e| e.label.is_actor())
                .map(|e| e.surface.as_str()),
        );
        let ambiguities = normalize_links(&mut links, &attested)?;
        log::info!("extract: {} actor links, {} ambiguous names", links.len(), ambiguities.len());
        let meta = self.meta(Stage::Extract);
        write_jsonl(&self.path(LINKS), &meta, &links)?;
        write_atomic(&self.path(AMBIGUITIES), &format!("{}{}", meta.comment("#"), ambiguity_tsv(&ambiguities)))
    }

    fn classify(&self) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let docs = self.documents()?;
        let candidates = self.candidates()?;
        let codebook = cfg.codebook()?;
        let embedder = Embedder::new(cfg.embedding.clone())?;
        let seeds = load_seed_file(&cfg.seed_file, &codebook, &embedder)?;
        let index: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
        let texts: Vec<&str> = candidates
            .iter()
            .map(|c| {
                index
                    .get(c.doc_id.as_str())
                    .and_then(|d| d.sentence_text(c.sentence_index))
                    .ok_or_else(|| claimnet::Error::Contract(format!("candidate {}#{} has no sentence", c.doc_id, c.sentence_index)))
            })
            .collect::<Result<_, _>>()?;
        let embeddings = if texts.is_empty() { Vec::new() } else { embedder.embed(&texts)? };
        let mut assignments = Vec::new();
        for (c, e) in candidates.iter().zip(&embeddings) {
            if let Some(m) = categorize(e, &seeds, &cfg.categorizer)? {
                assignments.push(CategoryAssignment {
                    doc_id: c.doc_id.clone(),
                    sentence_index: c.sentence_index,
                    code: m.code,
                    similarity: m.similarity,
                });
            }
        }
        log::info!("classify: {} of {} candidates categorised", assignments.len(), candidates.len());
        write_jsonl(&self.path(ASSIGNMENTS), &self.meta(Stage::Classify), &assignments)
    }

    fn stance(&self) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let docs = self.documents()?;
        let links: Vec<ActorClaimLink> = read_jsonl(&self.path(LINKS))?.1;
        let assignments: Vec<CategoryAssignment> = read_jsonl(&self.path(ASSIGNMENTS))?.1;
        let codebook = cfg.codebook()?;
        let scorer = scorer_from_config(&cfg.stance)?;
        let index: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
        let linked: std::collections::HashSet<(&str, usize)> = links
            .iter()
            .map(|l| (l.candidate.doc_id.as_str(), l.candidate.sentence_index))
            .collect();
        let mut stances = Vec::new();
        for a in &assignments {
            if !linked.contains(&(a.doc_id.as_str(), a.sentence_index)) {
                continue;
            }
            let sentence = index
                .get(a.doc_id.as_str())
                .and_then(|d| d.sentence_text(a.sentence_index))
                .ok_or_else(|| claimnet::Error::Contract(format!("no sentence for {}#{}", a.doc_id, a.sentence_index)))?;
            let pair = build_hypotheses(a.code, &codebook, &cfg.stance)?;
            let r = classify_stance(sentence, &pair, scorer.as_ref(), cfg.stance.tie_policy)?;
            stances.push(StanceRecord {
                doc_id: a.doc_id.clone(),
                sentence_index: a.sentence_index,
                code: a.code,
                polarity: r.polarity,
                margin: r.margin,
                tie: r.tie,
            });
        }
        let dates: HashMap<String, chrono::NaiveDate> = docs.iter().map(|d| (d.id.clone(), d.date)).collect();
        let assembly = assemble(&links, &assignments, &stances, &dates)?;
        let outcome = dedup(&assembly.dyads, cfg.dedup);
        log::info!(
            "stance: {} dyads after dedup ({} before), {} polarity conflicts",
            outcome.dyads.len(),
            assembly.dyads.len(),
            outcome.conflicts.len()
        );
        let meta = self.meta(Stage::Stance);
        write_jsonl(&self.path(STANCES), &meta, &stances)?;
        write_jsonl(&self.path(DYADS), &meta, &outcome.dyads)?;
        write_jsonl(&self.path(CONFLICTS), &meta, &outcome.conflicts)?;
        let run_meta = RunMeta {
            meta,
            stance_decisions: stances.len(),
            ties: stances.iter().filter(|s| s.tie).count(),
            dyads_before_dedup: assembly.dyads.len(),
            dyads: outcome.dyads.len(),
            polarity_conflicts: outcome.conflicts.len(),
            dropped: assembly.dropped,
            dedup_scope: cfg.dedup.scope,
            degree_mode: cfg.core.degree_mode,
        };
        write_atomic(&self.path(RUN_META), &(pretty(&run_meta)? + "\n"))
    }

    /// Writes one file per period and format into `dir`.
    pub fn network(&self, formats: &[ExportFormat], dir: &Path) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let dyads = self.dyads()?;
        let meta = self.meta(Stage::Network);
        let degree_mode = match cfg.core.degree_mode {
            DegreeMode::DistinctActors => "distinct_actors",
            DegreeMode::MentionCount => "mention_count",
        };
        std::fs::create_dir_all(dir).map_err(|e| CliError::validation(format!("cannot create {}: {e}", dir.display())))?;
        for p in cfg.periods()? {
            let core = concept_core(&build(&dyads, &p), i64::from(p.core_n), &cfg.core)?;
            let period = p.index.to_string();
            let mut pairs = meta.pairs().to_vec();
            pairs.push(("period", period.as_str()));
            pairs.push(("degree_mode", degree_mode));
            for f in formats {
                write_atomic(&dir.join(network_file_name(p.index, p.core_n, *f)), &render(&core, *f, &pairs))?;
            }
        }
        Ok(())
    }

    fn eval(&self) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let codebook = cfg.codebook()?;
        let gold_path = cfg.gold.as_deref().ok_or_else(|| CliError::validation("stage `eval` requires `gold`"))?;
        let gold = load_gold(gold_path, &codebook)?;
        let pred = self.dyads()?;
        let periods = cfg.periods()?;
        let reports = compare_periods(&pred, &gold_as_dyads(&gold), &periods, &cfg.core, cfg.evaluation.dyad_match)?;
        let weekly = weekly_counts(&pred);
        let (matrix, stance) = gold_alignment(&pred, &gold)?;
        let macro_p = if matrix.is_empty() { None } else { Some(macro_precision(&matrix)?) };
        let meta = self.meta(Stage::Eval);
        let report = EvalFile {
            meta: meta.clone(),
            report: EvalReport {
                periods: reports.clone(),
                weekly: weekly.iter().map(|(w, c)| (w.to_string(), *c)).collect(),
                confusion: Some(matrix.clone()),
                macro_precision: macro_p,
                stance,
            },
        };
        write_atomic(&self.path(EVAL_REPORT), &(pretty(&report)? + "\n"))?;
        write_atomic(&self.path(PERIOD_METRICS), &(meta.comment("#") + &period_metrics_csv(&reports)))?;
        write_atomic(&self.path(WEEKLY), &(meta.comment("#") + &weekly_csv(&weekly)))?;
        write_atomic(&self.path(CONFUSION), &(meta.comment("#") + &matrix.to_csv()))
    }

    /// Writes the review queue; returns its path and row count.
    pub fn export_review_queue(&self, out: Option<&Path>) -> Result<(PathBuf, usize), CliError> {
        self.check_inputs(Stage::Network, &[])?;
        let docs = self.documents()?;
        let dyads = self.dyads()?;
        let index: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
        let queue = review_queue(&dyads, &self.loaded.config.review);
        let path = out.map(Path::to_path_buf).unwrap_or_else(|| self.path(REVIEW_QUEUE));
        let meta = Meta::new(&self.loaded.hash, "review-queue");
        write_atomic(&path, &(meta.comment("#") + &review_tsv(&queue, &index)))?;
        Ok((path, queue.len()))
    }

    /// Re-exports period networks in `formats` from the current dyads.
    pub fn export(&self, formats: &[ExportFormat], out: Option<&Path>) -> Result<PathBuf, CliError> {
        self.check_inputs(Stage::Network, &[])?;
        let dir = out.map(Path::to_path_buf).unwrap_or_else(|| self.out.clone());
        self.network(formats, &dir)?;
        Ok(dir)
    }
}

#[derive(Serialize, Deserialize)]
struct RunMeta {
    meta: Meta,
    stance_decisions: usize,
    ties: usize,
    dyads_before_dedup: usize,
    dyads: usize,
    polarity_conflicts: usize,
    dropped: claimnet::dyads::DropCounts,
    dedup_scope: claimnet::dyads::DedupScope,
    degree_mode: claimnet::network::DegreeMode,
}

#[derive(Serialize, Deserialize)]
struct EvalFile {
    meta: Meta,
    report: EvalReport,
}

fn pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))
}

/// Confusion matrix and stance counts from gold dyads matched to predictions
/// by article and actor.
///
/// A gold dyad takes the predicted code of the same article and actor,
/// preferring an exact code match and otherwise the lowest code; without any
/// prediction it lands in the none column. Stance is scored on dyads whose
/// code matched.
pub fn gold_alignment(
    pred: &[Dyad],
    gold: &[GoldDyad],
) -> Result<(ConfusionMatrix, Option<claimnet::evaluation::StanceReport>), CliError> {
    let mut by_key: BTreeMap<(&str, &str), Vec<&Dyad>> = BTreeMap::new();
    for d in pred {
        by_key.entry((d.doc_id.as_str(), d.actor.as_str())).or_default().push(d);
    }
    let mut predicted = Vec::new();
    let mut gold_codes = Vec::new();
    let mut pred_pol = Vec::new();
    let mut gold_pol = Vec::new();
    for g in gold {
        let matches = by_key.get(&(g.article_id.as_str(), g.actor.as_str()));
        let exact = matches.and_then(|m| m.iter().find(|d| d.code == g.category_code));
        let code = match exact {
            Some(d) => {
                pred_pol.push(d.polarity);
                gold_pol.push(g.polarity);
                Some(d.code)
            }
            None => matches.and_then(|m| m.iter().map(|d| d.code).min()),
        };
        predicted.push(code);
        gold_codes.push(g.category_code);
    }
    let matrix = confusion(&predicted, &gold_codes)?;
    let stance = if pred_pol.is_empty() { None } else { Some(stance_report(&pred_pol, &gold_pol)?) };
    Ok((matrix, stance))
}

/// Runs `stages` for a loaded config.
pub fn run(loaded: &LoadedConfig, stages: &[Stage], force: bool) -> Result<Vec<(Stage, StageStatus)>, CliError> {
    Pipeline::new(loaded).run(stages, force)
}

/// Parses a comma-separated stage list; `all` selects every stage.
pub fn parse_stages(list: &str) -> Result<Vec<Stage>, CliError> {
    if list.trim() == "all" {
        return Ok(Stage::ALL.to_vec());
    }
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}
