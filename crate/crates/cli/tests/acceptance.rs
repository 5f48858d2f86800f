//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Runs without the libtest harness so the report is always printed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use claimnet::categorizer::{categorize, CategorizerConfig, Pooling, Seed, SeedSet};
use claimnet::claims::{
    cross_entropy_gradient, cross_entropy_loss, filter_candidates, score_sentence, train_head, ClaimScore, LinearHead,
};
use claimnet::dyads::{dedup, DedupPolicy, DedupScope, Dyad};
use claimnet::embeddings::{cosine, mock_embed, EmbeddingVector};
use claimnet::evaluation::{compare_periods, f1, gold_as_dyads, StanceReport};
use claimnet::ingest::{keyword_filter, load_gold, parse_query, Document, Polarity, DEFAULT_QUERY};
use claimnet::network::{build, concept_core, CoreConfig, DegreeMode, DiscourseNetwork};
use claimnet_cli::pipeline::{Pipeline, Stage, DYADS};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
/// `(date, doc_id, sentence_index, input position)`.
type OrderKey = (NaiveDate, String, usize, usize);

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

// ------------------------------------------------------ published metrics

/// `(period, partition, f1, precision, recall)` as printed.
const PUBLISHED: [(usize, &str, f64, f64, f64); 24] = [
    (1, "actors", 0.59, 0.58, 0.61), (1, "claims", 0.57, 0.57, 0.57), (1, "dyads", 0.31, 0.33, 0.29),
    (2, "actors", 0.34, 0.29, 0.41), (2, "claims", 0.47, 0.36, 0.67), (2, "dyads", 0.18, 0.15, 0.22),
    (3, "actors", 0.34, 0.33, 0.35), (3, "claims", 0.29, 0.30, 0.27), (3, "dyads", 0.08, 0.08, 0.09),
    (4, "actors", 0.36, 0.30, 0.47), (4, "claims", 0.69, 0.60, 0.82), (4, "dyads", 0.15, 0.12, 0.18),
    (5, "actors", 0.32, 0.25, 0.45), (5, "claims", 0.55, 0.50, 0.60), (5, "dyads", 0.13, 0.12, 0.15),
    (6, "actors", 0.17, 0.13, 0.26), (6, "claims", 0.42, 0.29, 0.71), (6, "dyads", 0.07, 0.05, 0.11),
    (7, "actors", 0.33, 0.29, 0.38), (7, "claims", 0.44, 0.40, 0.50), (7, "dyads", 0.06, 0.05, 0.07),
    (8, "actors", 0.28, 0.23, 0.36), (8, "claims", 0.38, 0.31, 0.50), (8, "dyads", 0.08, 0.06, 0.12),
];

fn published_f1_consistency() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (period, part, printed, p, r) in PUBLISHED {
        let got = f1(p, r);
        let oracle = 2.0 * p * r / (p + r);
        check((got - oracle).abs() < 1e-12, || format!("period {period} {part}: f1 {got} vs oracle {oracle}"))?;
        check((got - printed).abs() <= 0.01 + 1e-9, || format!("period {period} {part}: {got:.4} vs printed {printed}"))?;
        worst = worst.max((got - printed).abs());
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("24 rows, max |diff| {worst:.4}"))
}

fn stance_accuracy() -> Outcome {
    let start = Instant::now();
    let r = StanceReport::from_counts(755, 102, 142, 132).map_err(|e| e.to_string())?;
    check((r.accuracy - 0.7577).abs() <= 0.0005, || format!("accuracy {}", r.accuracy))?;
    check((r.accuracy - 857.0 / 1131.0).abs() < 1e-12, || format!("accuracy {} vs 857/1131", r.accuracy))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("accuracy {:.4}", r.accuracy))
}

// -------------------------------------------------------------- threshold

fn threshold_semantics() -> Outcome {
    let score = |i: usize, s: f64| ClaimScore { doc_id: "d".into(), sentence_index: i, score: s };
    let kept: Vec<usize> = filter_candidates(&[score(0, 0.05), score(1, 0.10), score(2, 0.95)], 0.1)
        .iter()
        .map(|c| c.sentence_index)
        .collect();
    check(kept == [1, 2], || format!("kept sentences {kept:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scores: Vec<ClaimScore> = (0..100).map(|i| score(i, rng.gen::<f64>())).collect();
    let thresholds: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
    let sets: Vec<BTreeSet<usize>> = thresholds
        .iter()
        .map(|t| filter_candidates(&scores, *t).iter().map(|c| c.sentence_index).collect())
        .collect();
    for (i, t) in thresholds.iter().enumerate() {
        let oracle: BTreeSet<usize> = scores.iter().filter(|s| s.score >= *t).map(|s| s.sentence_index).collect();
        check(sets[i] == oracle, || format!("threshold {t}: selection differs from oracle"))?;
        if i > 0 {
            check(sets[i].is_subset(&sets[i - 1]), || format!("threshold {t} not nested"))?;
        }
    }
    Ok("fixture exact, 20 thresholds nested over 100 scores".into())
}

// ---------------------------------------------------------- concept core

type Edge = (usize, usize, bool, u32);

fn random_graph(rng: &mut ChaCha8Rng) -> Vec<Edge> {
    let actors = rng.gen_range(1..=20);
    let concepts = rng.gen_range(1..=12);
    let density = rng.gen_range(0.05..0.6);
    let mut edges = Vec::new();
    for a in 0..actors {
        for c in 0..concepts {
            for sign in [true, false] {
                if rng.gen_bool(density / 2.0) {
                    edges.push((a, c, sign, rng.gen_range(1..=5)));
                }
            }
        }
    }
    edges
}

fn to_network(edges: &[Edge]) -> DiscourseNetwork {
    DiscourseNetwork::from_edges(edges.iter().map(|&(a, c, s, w)| {
        ((format!("actor{a}"), 100 + c as u32, if s { Polarity::Support } else { Polarity::Oppose }), w)
    }))
    .unwrap()
}

fn core_oracle(edges: &[Edge], n: u64, mode: DegreeMode) -> Vec<Edge> {
    let concepts: BTreeSet<usize> = edges.iter().map(|e| e.1).collect();
    let keep: BTreeSet<usize> = concepts
        .into_iter()
        .filter(|&c| {
            let degree = match mode {
                DegreeMode::DistinctActors => edges.iter().filter(|e| e.1 == c).map(|e| e.0).collect::<BTreeSet<_>>().len() as u64,
                DegreeMode::MentionCount => edges.iter().filter(|e| e.1 == c).map(|e| u64::from(e.3)).sum(),
            };
            degree >= n
        })
        .collect();
    edges.iter().copied().filter(|e| keep.contains(&e.1)).collect()
}

fn concept_core_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checks = 0;
    for g in 0..100 {
        let edges = random_graph(&mut rng);
        let net = to_network(&edges);
        for mode in [DegreeMode::DistinctActors, DegreeMode::MentionCount] {
            let cfg = CoreConfig { degree_mode: mode };
            let mut previous: Option<DiscourseNetwork> = None;
            for n in 0..=5u64 {
                let core = concept_core(&net, n as i64, &cfg).map_err(|e| e.to_string())?;
                let oracle = to_network(&core_oracle(&edges, n, mode));
                check(core == oracle, || format!("graph {g}, {mode:?}, n={n}: differs from oracle"))?;
                let again = concept_core(&core, n as i64, &cfg).map_err(|e| e.to_string())?;
                check(again == core, || format!("graph {g}, {mode:?}, n={n}: not idempotent"))?;
                if let Some(prev) = &previous {
                    check(core.signed_pairs().is_subset(&prev.signed_pairs()), || format!("graph {g}, {mode:?}, n={n}: not nested"))?;
                }
                previous = Some(core);
                checks += 1;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{checks} cores match, idempotent and nested"))
}

// ----------------------------------------------------------------- dedup

fn random_dyads(rng: &mut ChaCha8Rng, n: usize) -> Vec<Dyad> {
    let base = NaiveDate::from_ymd_opt(2011, 3, 11).unwrap();
    (0..n)
        .map(|_| Dyad {
            actor: format!("actor{}", rng.gen_range(0..8)),
            code: [110, 120, 130, 140, 150][rng.gen_range(0..5)],
            polarity: if rng.gen_bool(0.7) { Polarity::Support } else { Polarity::Oppose },
            date: base + chrono::Duration::days(rng.gen_range(0..30)),
            doc_id: format!("doc{}", rng.gen_range(0..40)),
            sentence_index: rng.gen_range(0..6),
            similarity: rng.gen(),
            claim_score: rng.gen(),
            stance_margin: rng.gen_range(-1.0..1.0),
        })
        .collect()
}

fn dedup_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let policy = DedupPolicy { scope: DedupScope::PerDate };
    for f in 0..50 {
        let input = random_dyads(&mut rng, 200);
        let mut groups: BTreeMap<(String, u32, NaiveDate), OrderKey> = BTreeMap::new();
        for (i, d) in input.iter().enumerate() {
            let order = (d.date, d.doc_id.clone(), d.sentence_index, i);
            groups
                .entry((d.actor.clone(), d.code, d.date))
                .and_modify(|best| {
                    if order < *best {
                        *best = order.clone();
                    }
                })
                .or_insert(order);
        }
        let mut winners: Vec<OrderKey> = groups.into_values().collect();
        winners.sort();
        let oracle: Vec<Dyad> = winners.iter().map(|w| input[w.3].clone()).collect();
        let out = dedup(&input, policy);
        check(out.dyads == oracle, || format!("fixture {f}: differs from oracle"))?;
        check(dedup(&out.dyads, policy).dyads == out.dyads, || format!("fixture {f}: not idempotent"))?;
        let keys: BTreeSet<_> = out.dyads.iter().map(|d| (&d.actor, d.code, d.date)).collect();
        check(keys.len() == out.dyads.len(), || format!("fixture {f}: duplicate key in output"))?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok("50 fixtures of 200 dyads match".into())
}

// ----------------------------------------------------------- categorizer

const WORDS: &[&str] = &[
    "atom", "ausstieg", "sofort", "laufzeit", "verlängerung", "moratorium", "sicherheit", "prüfung", "energie",
    "wende", "kohle", "gas", "strom", "preis", "netz", "ausbau", "wind", "solar", "endlager", "gorleben",
];

fn phrase(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..6);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn oracle_cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nu * nv)
}

/// Best `(code, pooled)` and the runner-up score, lowest code winning ties.
fn categorize_oracle(cand: &[f64], seeds: &BTreeMap<u32, Vec<Vec<f64>>>, pooling: Pooling) -> ((u32, f64), f64) {
    let mut pooled: Vec<(u32, f64)> = seeds
        .iter()
        .map(|(code, vs)| {
            let sims: Vec<f64> = vs.iter().map(|v| oracle_cosine(cand, v)).collect();
            let p = match pooling {
                Pooling::Max => sims.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Pooling::Mean => sims.iter().sum::<f64>() / sims.len() as f64,
            };
            (*code, p)
        })
        .collect();
    pooled.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    (pooled[0], pooled.get(1).map_or(f64::NEG_INFINITY, |p| p.1))
}

fn categorizer_oracle() -> Outcome {
    let dim = 128;
    let mut compared = 0;
    let mut near_ties = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut raw: BTreeMap<u32, Vec<Vec<f64>>> = BTreeMap::new();
        let mut by_code: BTreeMap<u32, Vec<Seed>> = BTreeMap::new();
        for code in [110, 120, 130, 140, 150] {
            for _ in 0..rng.gen_range(1..=3) {
                let text = phrase(&mut rng);
                let e = mock_embed(&text, dim).map_err(|e| e.to_string())?;
                raw.entry(code).or_default().push(e.values().to_vec());
                by_code.entry(code).or_default().push(Seed { text, embedding: e });
            }
        }
        let seeds = SeedSet::from_map(by_code);
        for _ in 0..20 {
            let e = mock_embed(&phrase(&mut rng), dim).map_err(|e| e.to_string())?;
            for pooling in [Pooling::Max, Pooling::Mean] {
                let ((code, sim), runner_up) = categorize_oracle(e.values(), &raw, pooling);
                let mut previous: Option<Option<u32>> = None;
                for tau in [-1.0, -0.5, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0] {
                    let got = categorize(&e, &seeds, &CategorizerConfig { tau, pooling }).map_err(|e| e.to_string())?;
                    let ambiguous = (sim - runner_up).abs() < 1e-12 || (sim - tau).abs() < 1e-12;
                    if ambiguous {
                        near_ties += 1;
                    } else {
                        let want = (sim >= tau).then_some(code);
                        check(got.map(|m| m.code) == want, || format!("seed {seed} {pooling:?} tau {tau}: {got:?} vs oracle {want:?}"))?;
                        if let Some(m) = got {
                            check((m.similarity - sim).abs() < 1e-9, || format!("seed {seed}: similarity {} vs {sim}", m.similarity))?;
                        }
                        compared += 1;
                    }
                    let now = got.map(|m| m.code);
                    if let Some(prev) = previous {
                        check(now.is_none() || now == prev, || format!("seed {seed} {pooling:?}: raising tau to {tau} changed the category"))?;
                    }
                    previous = Some(now);
                }
            }
        }
    }
    Ok(format!("{compared} decisions match, {near_ties} exact ties skipped"))
}

// ---------------------------------------------------------------- cosine

fn cosine_numerics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let dim = rng.gen_range(1..64);
        let mut draw = || loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
            if v.iter().any(|x| *x != 0.0) {
                break v;
            }
        };
        let (u, v) = (draw(), draw());
        let (eu, ev) = (EmbeddingVector::new(u.clone()).unwrap(), EmbeddingVector::new(v.clone()).unwrap());
        let c = cosine(&eu, &ev).map_err(|e| e.to_string())?;
        let oracle = oracle_cosine(&u, &v);
        worst = worst.max((c - oracle).abs());
        check((c - oracle).abs() < 1e-9, || format!("pair {i}: {c} vs oracle {oracle}"))?;
        check((c - cosine(&ev, &eu).unwrap()).abs() < 1e-12, || format!("pair {i}: asymmetric"))?;
        check((cosine(&eu, &eu).unwrap() - 1.0).abs() < 1e-9, || format!("pair {i}: self-similarity"))?;
        let k = rng.gen_range(0.001..1000.0);
        check((cosine(&eu.scaled(k).unwrap(), &ev).unwrap() - c).abs() < 1e-9, || format!("pair {i}: scale {k}"))?;
    }
    Ok(format!("1000 pairs, max oracle diff {worst:.1e}"))
}

// -------------------------------------------------------------- gradient

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for inst in 0..20 {
        let dim = rng.gen_range(2..6);
        let n = rng.gen_range(3..10);
        let data: Vec<(EmbeddingVector, u8)> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (EmbeddingVector::new(x).unwrap(), rng.gen_range(0..2))
            })
            .collect();
        let head = LinearHead { weights: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(), bias: rng.gen_range(-1.0..1.0) };
        let (gw, gb) = cross_entropy_gradient(&head, &data).map_err(|e| e.to_string())?;
        let loss = |hd: &LinearHead| cross_entropy_loss(hd, &data).unwrap();
        let mut params: Vec<(f64, f64)> = Vec::new();
        for (j, analytic) in gw.iter().enumerate() {
            let (mut plus, mut minus) = (head.clone(), head.clone());
            plus.weights[j] += h;
            minus.weights[j] -= h;
            params.push((*analytic, (loss(&plus) - loss(&minus)) / (2.0 * h)));
        }
        let (mut plus, mut minus) = (head.clone(), head.clone());
        plus.bias += h;
        minus.bias -= h;
        params.push((gb, (loss(&plus) - loss(&minus)) / (2.0 * h)));
        for (analytic, numeric) in params {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            check(rel < 1e-4, || format!("instance {inst}: analytic {analytic} numeric {numeric}"))?;
        }
    }

    let mut data = Vec::new();
    for i in 0..20 {
        let label = (i % 2) as u8;
        let side = if label == 1 { 1.0 } else { -1.0 };
        let x = vec![side * (0.5 + rng.gen::<f64>()), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        data.push((EmbeddingVector::new(x).unwrap(), label));
    }
    let head = train_head(&data, 500, 0.5).map_err(|e| e.to_string())?;
    let correct = data
        .iter()
        .filter(|(x, y)| (score_sentence(x, &head).unwrap() >= 0.5) == (*y == 1))
        .count();
    check(correct == 20, || format!("separable fixture accuracy {correct}/20"))?;
    Ok(format!("20 instances, max relative error {worst:.1e}; separable fixture 20/20"))
}

// ------------------------------------------------------------ end to end

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic/config.toml")
}

fn network_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "graphml"))
        .collect();
    files.sort();
    files
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<(PathBuf, Duration), String> {
        let out = tmp.path().join(name);
        let loaded = claimnet_cli::load(&fixture_config(), &[format!("output_dir={}", out.display())]).map_err(|e| e.to_string())?;
        let start = Instant::now();
        Pipeline::new(&loaded).run(&Stage::ALL, false).map_err(|e| e.to_string())?;
        Ok((out, start.elapsed()))
    };
    let (first, elapsed) = run("a")?;
    let (second, _) = run("b")?;

    let loaded = claimnet_cli::load(&fixture_config(), &[format!("output_dir={}", first.display())]).map_err(|e| e.to_string())?;
    let cfg = &loaded.config;
    let codebook = cfg.codebook().map_err(|e| e.to_string())?;
    let gold = load_gold(cfg.gold.as_deref().unwrap(), &codebook).map_err(|e| e.to_string())?;
    let gold = gold_as_dyads(&gold);
    let pred = Pipeline::new(&loaded).dyads().map_err(|e| e.to_string())?;
    let periods = cfg.periods().map_err(|e| e.to_string())?;
    let reports = compare_periods(&pred, &gold, &periods, &cfg.core, cfg.evaluation.dyad_match).map_err(|e| e.to_string())?;
    let mut planted = 0;
    for (r, p) in reports.iter().zip(&periods) {
        let gold_core = concept_core(&build(&gold, p), i64::from(p.core_n), &cfg.core).map_err(|e| e.to_string())?;
        if gold_core.is_empty() {
            continue;
        }
        planted += 1;
        check(r.dyads.precision == 1.0 && r.dyads.recall == 1.0, || {
            format!("period {}: dyad P={} R={}", r.period, r.dyads.precision, r.dyads.recall)
        })?;
    }
    check(planted > 0, || "no period with planted content".into())?;

    let same = |a: &Path, b: &Path| std::fs::read(a).ok() == std::fs::read(b).ok() && a.exists();
    check(same(&first.join(DYADS), &second.join(DYADS)), || "dyads differ between runs".into())?;
    let graphs = network_files(&first);
    check(!graphs.is_empty(), || "no GraphML written".into())?;
    for g in &graphs {
        let other = second.join(g.file_name().unwrap());
        check(same(g, &other), || format!("{} differs between runs", g.display()))?;
    }
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("{planted} planted periods at P=R=1, {} dyads, {} GraphML files identical, {elapsed:.2?}", pred.len(), graphs.len()))
}

// ----------------------------------------------------------------- query

fn doc(id: usize, title: &str, text: &str) -> Document {
    Document {
        id: format!("d{id}"),
        date: NaiveDate::from_ymd_opt(2011, 3, 14).unwrap(),
        newspaper: "taz".into(),
        section: "Politik".into(),
        title: title.into(),
        text: text.into(),
        sentences: Vec::new(),
    }
}

fn query_semantics() -> Outcome {
    let q = parse_query(DEFAULT_QUERY).map_err(|e| e.to_string())?;
    let fixtures = [
        doc(0, "", "Atomkraftwerke abschalten"),
        doc(1, "", "Atombombe sofort abschalten"),
        doc(2, "", "Kohlekraftwerke abschalten"),
    ];
    let kept: Vec<String> = keyword_filter(fixtures.to_vec(), &q, true).into_iter().map(|d| d.text).collect();
    check(kept == ["Atomkraftwerke abschalten"], || format!("kept {kept:?}"))?;

    let vocab = [
        "Atomkraft", "AKW", "Kernenergie", "Ausstieg", "Stilllegung", "abschalten", "Laufzeiten", "Atomwaffen", "Bombe",
        "Merkel", "fordert", "Energiewende", "Kohle", "Strom", "Atombombe", "heute",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let docs: Vec<Document> = (0..100)
        .map(|i| {
            let n = rng.gen_range(1..10);
            let text = (0..n).map(|_| *vocab.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
            let title = if rng.gen_bool(0.3) { vocab.choose(&mut rng).unwrap().to_string() } else { String::new() };
            doc(i, &title, &text)
        })
        .collect();
    let ids = |ds: &[Document]| ds.iter().map(|d| d.id.clone()).collect::<BTreeSet<_>>();
    let once = keyword_filter(docs.clone(), &q, true);
    check(keyword_filter(once.clone(), &q, true) == once, || "filter not idempotent".into())?;
    let wider = parse_query("(Atom* OR AKW* OR Kernenergie* OR Energiewende) AND (ausst* OR stilll* OR abschalt* OR Laufzeit*) NOT (waffe* or bombe)")
        .map_err(|e| e.to_string())?;
    check(ids(&once).is_subset(&ids(&keyword_filter(docs.clone(), &wider, true))), || "adding an OR term shrank the selection".into())?;
    let narrower = parse_query("(Atom* OR AKW* OR Kernenergie*) AND (ausst* OR stilll* OR abschalt* OR Laufzeit*) NOT (waffe* or bombe or Merkel)")
        .map_err(|e| e.to_string())?;
    check(ids(&keyword_filter(docs, &narrower, true)).is_subset(&ids(&once)), || "adding a NOT term grew the selection".into())?;
    Ok(format!("fixtures exact; {} of 100 random docs retained", once.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("published-f1-consistency", published_f1_consistency),
        ("stance-accuracy-identity", stance_accuracy),
        ("threshold-semantics", threshold_semantics),
        ("concept-core-oracle", concept_core_oracle),
        ("dedup-oracle", dedup_oracle_equivalence),
        ("categorizer-oracle", categorizer_oracle),
        ("cosine-numerics", cosine_numerics),
        ("gradient-check", gradient_check),
        ("end-to-end-synthetic", end_to_end),
        ("query-semantics", query_semantics),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let ms = start.elapsed().as_secs_f64() * 1000.0;
        match outcome {
            Ok(detail) => println!("PASS {name:<26} {ms:>9.1} ms  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name:<26} {ms:>9.1} ms  {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
