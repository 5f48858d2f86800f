//! Comparison of predicted dyads and networks against gold annotation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::{Datelike, Duration, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyads::Dyad;
use crate::error::{Error, Result};
use crate::ingest::{GoldDyad, Polarity};
use crate::network::{build, concept_core, CoreConfig, DiscourseNetwork, PeriodSpec};

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// No predictions: precision reported as 0.
    pub precision_undefined: bool,
    /// No gold items: recall reported as 0.
    pub recall_undefined: bool,
}

impl SetMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den > 0 { Some(num as f64 / den as f64) } else { None };
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fn_);
        let precision = p.unwrap_or(0.0);
        let recall = r.unwrap_or(0.0);
        SetMetrics {
            precision,
            recall,
            f1: f1(precision, recall),
            tp,
            fp,
            fn_,
            precision_undefined: p.is_none(),
            recall_undefined: r.is_none(),
        }
    }
}

pub fn prf<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> SetMetrics {
    let tp = pred.intersection(gold).count();
    SetMetrics::from_counts(tp, pred.len() - tp, gold.len() - tp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadMatch {
    /// `(actor, code)` pairs; polarity ignored.
    #[default]
    IgnorePolarity,
    /// `(actor, code, polarity)` triples.
    StrictPolarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub period: usize,
    pub core_n: u32,
    pub actors: SetMetrics,
    pub claims: SetMetrics,
    pub dyads: SetMetrics,
}

/// Converts gold annotations to dyads so both sides share one network builder.
pub fn gold_as_dyads(gold: &[GoldDyad]) -> Vec<Dyad> {
    gold.iter()
        .enumerate()
        .map(|(i, g)| Dyad {
            actor: g.actor.clone(),
            code: g.category_code,
            polarity: g.polarity,
            date: g.date,
            doc_id: g.article_id.clone(),
            sentence_index: i,
            similarity: 1.0,
            claim_score: 1.0,
            stance_margin: 0.0,
        })
        .collect()
}

fn core_of(dyads: &[Dyad], period: &PeriodSpec, cfg: &CoreConfig) -> Result<DiscourseNetwork> {
    concept_core(&build(dyads, period), i64::from(period.core_n), cfg)
}

pub fn compare_networks(pred: &DiscourseNetwork, gold: &DiscourseNetwork, mode: DyadMatch) -> (SetMetrics, SetMetrics, SetMetrics) {
    let dyads = match mode {
        DyadMatch::IgnorePolarity => prf(&pred.dyad_pairs(), &gold.dyad_pairs()),
        DyadMatch::StrictPolarity => prf(&pred.signed_pairs(), &gold.signed_pairs()),
    };
    (prf(&pred.actors(), &gold.actors()), prf(&pred.concepts(), &gold.concepts()), dyads)
}

/// Builds both period networks, reduces each to its concept core and compares them.
pub fn compare_period(
    pred: &[Dyad],
    gold: &[Dyad],
    period: &PeriodSpec,
    cfg: &CoreConfig,
    mode: DyadMatch,
) -> Result<PeriodReport> {
    let (actors, claims, dyads) = compare_networks(&core_of(pred, period, cfg)?, &core_of(gold, period, cfg)?, mode);
    Ok(PeriodReport {
        period: period.index,
        core_n: period.core_n,
        actors,
        claims,
        dyads,
    })
}

pub fn compare_periods(
    pred: &[Dyad],
    gold: &[Dyad],
    periods: &[PeriodSpec],
    cfg: &CoreConfig,
    mode: DyadMatch,
) -> Result<Vec<PeriodReport>> {
    periods
        .par_iter()
        .map(|p| compare_period(pred, gold, p, cfg, mode))
        .collect()
}

/// `period,partition,f1,precision,recall` rows.
pub fn period_metrics_csv(reports: &[PeriodReport]) -> String {
    let mut out = String::from("period,partition,f1,precision,recall\n");
    for r in reports {
        for (name, m) in [("actors", &r.actors), ("claims", &r.claims), ("dyads", &r.dyads)] {
            let _ = writeln!(out, "{},{name},{:.4},{:.4},{:.4}", r.period, m.f1, m.precision, m.recall);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IsoWeek {
    pub year: i32,
    pub week: u32,
}

impl std::fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-W{:02}", self.year, self.week)
    }
}

pub fn iso_week(date: NaiveDate) -> IsoWeek {
    let w = date.iso_week();
    IsoWeek { year: w.year(), week: w.week() }
}

/// Dyad counts per ISO week, zero-filled between the first and last dyad date.
pub fn weekly_counts(dyads: &[Dyad]) -> Vec<(IsoWeek, usize)> {
    let (Some(first), Some(last)) = (dyads.iter().map(|d| d.date).min(), dyads.iter().map(|d| d.date).max()) else {
        return Vec::new();
    };
    let mut counts: BTreeMap<IsoWeek, usize> = BTreeMap::new();
    let mut monday = first - Duration::days(i64::from(first.weekday().num_days_from_monday()));
    while monday <= last {
        counts.insert(iso_week(monday), 0);
        monday += Duration::days(7);
    }
    for d in dyads {
        *counts.entry(iso_week(d.date)).or_default() += 1;
    }
    counts.into_iter().collect()
}

pub fn weekly_csv(counts: &[(IsoWeek, usize)]) -> String {
    let mut out = String::from("iso_week,count\n");
    for (w, c) in counts {
        let _ = writeln!(out, "{w},{c}");
    }
    out
}

/// Rows are gold codes, columns predicted codes; `None` is the below-threshold column.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    cells: BTreeMap<u32, BTreeMap<Option<u32>, usize>>,
}

impl ConfusionMatrix {
    pub fn add(&mut self, gold: u32, pred: Option<u32>) {
        *self.cells.entry(gold).or_default().entry(pred).or_default() += 1;
    }

    pub fn get(&self, gold: u32, pred: Option<u32>) -> usize {
        self.cells.get(&gold).and_then(|r| r.get(&pred)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.cells.values().flat_map(|r| r.values()).sum()
    }

    pub fn row_sum(&self, gold: u32) -> usize {
        self.cells.get(&gold).map_or(0, |r| r.values().sum())
    }

    pub fn column_sum(&self, pred: Option<u32>) -> usize {
        self.cells.values().filter_map(|r| r.get(&pred)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Every code appearing as gold or prediction, ascending.
    pub fn codes(&self) -> BTreeSet<u32> {
        self.cells
            .iter()
            .flat_map(|(g, r)| std::iter::once(*g).chain(r.keys().flatten().copied()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let codes = self.codes();
        let mut out = String::from("gold\\pred");
        for c in &codes {
            let _ = write!(out, ",{c}");
        }
        out.push_str(",none\n");
        for g in &codes {
            let _ = write!(out, "{g}");
            for p in codes.iter().map(|c| Some(*c)).chain([None]) {
                let _ = write!(out, ",{}", self.get(*g, p));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion(pred: &[Option<u32>], gold: &[u32]) -> Result<ConfusionMatrix> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: gold.len() });
    }
    let mut m = ConfusionMatrix::default();
    for (p, g) in pred.iter().zip(gold) {
        m.add(*g, *p);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroPrecision {
    pub value: f64,
    pub per_category: BTreeMap<u32, f64>,
    /// Gold categories that were never predicted and so left out of the mean.
    pub never_predicted: Vec<u32>,
}

/// Unweighted mean of per-column precision over predicted categories.
pub fn macro_precision(m: &ConfusionMatrix) -> Result<MacroPrecision> {
    if m.is_empty() {
        return Err(Error::EmptyInput("confusion matrix"));
    }
    let mut per_category = BTreeMap::new();
    let mut never_predicted = Vec::new();
    for code in m.codes() {
        let predicted = m.column_sum(Some(code));
        if predicted == 0 {
            never_predicted.push(code);
        } else {
            per_category.insert(code, m.get(code, Some(code)) as f64 / predicted as f64);
        }
    }
    let value = if per_category.is_empty() {
        0.0
    } else {
        per_category.values().sum::<f64>() / per_category.len() as f64
    };
    Ok(MacroPrecision { value, per_category, never_predicted })
}

/// Support is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceReport {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
}

impl StanceReport {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Result<Self> {
        let total = tp + tn + fp + fn_;
        if total == 0 {
            return Err(Error::EmptyInput("stance predictions"));
        }
        Ok(StanceReport { tp, tn, fp, fn_, accuracy: (tp + tn) as f64 / total as f64 })
    }
}

pub fn stance_report(pred: &[Polarity], gold: &[Polarity]) -> Result<StanceReport> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: gold.len() });
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        match (p, g) {
            (Polarity::Support, Polarity::Support) => tp += 1,
            (Polarity::Oppose, Polarity::Oppose) => tn += 1,
            (Polarity::Support, Polarity::Oppose) => fp += 1,
            (Polarity::Oppose, Polarity::Support) => fn_ += 1,
        }
    }
    StanceReport::from_counts(tp, tn, fp, fn_)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub periods: Vec<PeriodReport>,
    pub weekly: Vec<(String, usize)>,
    pub confusion: Option<ConfusionMatrix>,
    pub macro_precision: Option<MacroPrecision>,
    pub stance: Option<StanceReport>,
}
