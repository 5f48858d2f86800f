//! Curation queue of low-confidence dyads.

use std::collections::HashMap;
use std::fmt::Write as _;

use claimnet::dyads::Dyad;
use claimnet::ingest::Document;

use crate::config::ReviewBands;

/// The smallest of claim score, similarity and absolute stance margin.
pub fn weakest_confidence(d: &Dyad) -> f64 {
    d.claim_score.min(d.similarity).min(d.stance_margin.abs())
}

pub fn needs_review(d: &Dyad, bands: &ReviewBands) -> bool {
    bands.claim_score.contains(d.claim_score)
        || bands.similarity.contains(d.similarity)
        || bands.stance_margin.contains(d.stance_margin.abs())
}

/// Dyads inside any review band, weakest first.
pub fn review_queue<'a>(dyads: &'a [Dyad], bands: &ReviewBands) -> Vec<&'a Dyad> {
    let mut queue: Vec<&Dyad> = dyads.iter().filter(|d| needs_review(d, bands)).collect();
    queue.sort_by(|a, b| {
        weakest_confidence(a)
            .total_cmp(&weakest_confidence(b))
            .then_with(|| (a.date, &a.doc_id, a.sentence_index, &a.actor).cmp(&(b.date, &b.doc_id, b.sentence_index, &b.actor)))
    });
    queue
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// TSV rows with the source sentence for context.
pub fn review_tsv(queue: &[&Dyad], docs: &HashMap<&str, &Document>) -> String {
    let mut out = String::from(
        "doc_id\tsentence_index\tdate\tactor\tcode\tpolarity\tclaim_score\tsimilarity\tstance_margin\tweakest\tsentence\n",
    );
    for d in queue {
        let sentence = docs
            .get(d.doc_id.as_str())
            .and_then(|doc| doc.sentence_text(d.sentence_index))
            .unwrap_or("");
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
            clean(&d.doc_id),
            d.sentence_index,
            d.date,
            clean(&d.actor),
            d.code,
            d.polarity,
            d.claim_score,
            d.similarity,
            d.stance_margin,
            weakest_confidence(d),
            clean(sentence)
        );
    }
    out
}
