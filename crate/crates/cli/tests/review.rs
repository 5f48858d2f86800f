//! Review queue against a brute-force selection and ordering.

use std::collections::HashMap;

use chrono::NaiveDate;
use proptest::prelude::*;

use claimnet::dyads::Dyad;
use claimnet::ingest::{Document, Polarity};
use claimnet_cli::config::{Band, ReviewBands};
use claimnet_cli::review::{review_queue, review_tsv};

fn dyad(actor: usize, day: u32, doc: usize, sentence: usize, claim: f64, sim: f64, margin: f64) -> Dyad {
    Dyad {
        actor: format!("actor{actor}"),
        code: 110,
        polarity: if margin >= 0.0 { Polarity::Support } else { Polarity::Oppose },
        date: NaiveDate::from_ymd_opt(2011, 3, day).unwrap(),
        doc_id: format!("doc{doc}"),
        sentence_index: sentence,
        similarity: sim,
        claim_score: claim,
        stance_margin: margin,
    }
}

fn dyads() -> impl Strategy<Value = Vec<Dyad>> {
    let grid = |n: u32| (0..=n).prop_map(move |k| f64::from(k) / f64::from(n));
    prop::collection::vec(
        (0usize..4, 11u32..20, 0usize..5, 0usize..3, grid(10), grid(10), grid(10), any::<bool>()),
        0..40,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .map(|(a, d, doc, s, c, sim, m, neg)| dyad(a, d, doc, s, c, sim, if neg { -m } else { m }))
            .collect()
    })
}

fn band() -> impl Strategy<Value = Band> {
    (0u32..=10, 0u32..=10).prop_map(|(a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Band { lo: f64::from(lo) / 10.0, hi: f64::from(hi) / 10.0 }
    })
}

proptest! {
    #[test]
    fn queue_matches_brute_force(input in dyads(), claim_score in band(), similarity in band(), stance_margin in band()) {
        let bands = ReviewBands { claim_score, similarity, stance_margin };
        let inside = |b: &Band, x: f64| b.lo <= x && x <= b.hi;
        let mut oracle: Vec<usize> = (0..input.len())
            .filter(|&i| {
                let d = &input[i];
                inside(&claim_score, d.claim_score) || inside(&similarity, d.similarity) || inside(&stance_margin, d.stance_margin.abs())
            })
            .collect();
        let weakest = |d: &Dyad| [d.claim_score, d.similarity, d.stance_margin.abs()].into_iter().fold(f64::INFINITY, f64::min);
        oracle.sort_by(|&i, &j| {
            let (a, b) = (&input[i], &input[j]);
            weakest(a)
                .partial_cmp(&weakest(b))
                .unwrap()
                .then((a.date, &a.doc_id, a.sentence_index, &a.actor).cmp(&(b.date, &b.doc_id, b.sentence_index, &b.actor)))
                .then(i.cmp(&j))
        });
        let got = review_queue(&input, &bands);
        prop_assert_eq!(got.len(), oracle.len());
        for (g, &i) in got.iter().zip(&oracle) {
            prop_assert_eq!(*g, &input[i]);
        }
    }
}

#[test]
fn tsv_carries_sentence_context() {
    let doc = Document {
        id: "doc0".into(),
        date: NaiveDate::from_ymd_opt(2011, 3, 11).unwrap(),
        newspaper: "sz".into(),
        section: "Politik".into(),
        title: "t".into(),
        text: "Merkel fordert\tden Ausstieg.".into(),
        sentences: vec![claimnet::ingest::SentenceAnnotation {
            index: 0,
            char_span: (0, 28),
            tokens: Vec::new(),
            entity_mentions: Vec::new(),
        }],
    };
    let d = dyad(0, 11, 0, 0, 0.3, 0.9, 0.5);
    let docs: HashMap<&str, &Document> = [("doc0", &doc)].into_iter().collect();
    let tsv = review_tsv(&[&d], &docs);
    let row: Vec<&str> = tsv.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row.len(), 11);
    assert_eq!(row[9], "0.3000");
    assert_eq!(row[10], "Merkel fordert den Ausstieg.");
}
