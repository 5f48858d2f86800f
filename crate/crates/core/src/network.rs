//! Time-sliced bipartite actor-concept networks.
//!
//! Edges are signed: an actor supporting and opposing the same concept in one
//! period yields two parallel edges. Edge weight is the number of distinct
//! dates on which the dyad occurred.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use quick_xml::escape::escape;
use quick_xml::events::Event;
use serde::{Deserialize, Serialize};

use crate::dyads::Dyad;
use crate::error::{Error, Result};
use crate::ingest::{parse_date, Polarity};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub index: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub core_n: u32,
}

impl PeriodSpec {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// The eight periods of the 2011 phase-out debate with their core levels.
pub fn default_periods() -> Vec<PeriodSpec> {
    let d = |m, day| NaiveDate::from_ymd_opt(2011, m, day).unwrap();
    let rows = [
        (d(3, 11), d(3, 13), 3),
        (d(3, 14), d(3, 15), 5),
        (d(3, 16), d(3, 22), 6),
        (d(3, 23), d(4, 8), 7),
        (d(4, 9), d(4, 28), 6),
        (d(4, 29), d(5, 17), 6),
        (d(5, 18), d(5, 30), 6),
        (d(5, 31), d(7, 1), 7),
    ];
    rows.into_iter()
        .enumerate()
        .map(|(i, (start, end, core_n))| PeriodSpec {
            index: i + 1,
            start,
            end,
            core_n,
        })
        .collect()
}

pub fn validate_periods(periods: &[PeriodSpec]) -> Result<()> {
    for p in periods {
        if p.start > p.end {
            return Err(Error::Config(format!("period {} starts after it ends", p.index)));
        }
    }
    for w in periods.windows(2) {
        if w[0].end >= w[1].start {
            return Err(Error::Config(format!(
                "periods {} and {} overlap or are out of order",
                w[0].index, w[1].index
            )));
        }
    }
    Ok(())
}

/// Reads `index,start,end,core_n` rows.
pub fn load_periods(path: &Path) -> Result<Vec<PeriodSpec>> {
    #[derive(Deserialize)]
    struct Row {
        index: usize,
        start: String,
        end: String,
        core_n: u32,
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        out.push(PeriodSpec {
            index: row.index,
            start: parse_date(&row.start)?,
            end: parse_date(&row.end)?,
            core_n: row.core_n,
        });
    }
    validate_periods(&out)?;
    Ok(out)
}

pub fn periods_csv(periods: &[PeriodSpec]) -> String {
    let mut out = String::from("index,start,end,core_n\n");
    for p in periods {
        let _ = writeln!(out, "{},{},{},{}", p.index, p.start, p.end, p.core_n);
    }
    out
}

pub type EdgeKey = (String, u32, Polarity);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiscourseNetwork {
    edges: BTreeMap<EdgeKey, u32>,
}

impl DiscourseNetwork {
    /// Builds a network from explicit edges; zero weights are rejected.
    pub fn from_edges(edges: impl IntoIterator<Item = (EdgeKey, u32)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (key, weight) in edges {
            if weight == 0 {
                return Err(Error::InvalidArgument("edge weight must be at least 1".into()));
            }
            map.insert(key, weight);
        }
        Ok(DiscourseNetwork { edges: map })
    }

    pub fn edges(&self) -> impl Iterator<Item = (&EdgeKey, u32)> {
        self.edges.iter().map(|(k, w)| (k, *w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn weight(&self, actor: &str, code: u32, polarity: Polarity) -> Option<u32> {
        self.edges.get(&(actor.to_string(), code, polarity)).copied()
    }

    pub fn actors(&self) -> BTreeSet<String> {
        self.edges.keys().map(|(a, _, _)| a.clone()).collect()
    }

    pub fn concepts(&self) -> BTreeSet<u32> {
        self.edges.keys().map(|(_, c, _)| *c).collect()
    }

    /// Actor-concept pairs, polarity ignored.
    pub fn dyad_pairs(&self) -> BTreeSet<(String, u32)> {
        self.edges.keys().map(|(a, c, _)| (a.clone(), *c)).collect()
    }

    /// Actor-concept pairs with polarity.
    pub fn signed_pairs(&self) -> BTreeSet<EdgeKey> {
        self.edges.keys().cloned().collect()
    }
}

/// Aggregates deduplicated dyads dated within `period`.
pub fn build(dyads: &[Dyad], period: &PeriodSpec) -> DiscourseNetwork {
    let mut dates: BTreeMap<EdgeKey, BTreeSet<NaiveDate>> = BTreeMap::new();
    for d in dyads.iter().filter(|d| period.contains(d.date)) {
        dates
            .entry((d.actor.clone(), d.code, d.polarity))
            .or_default()
            .insert(d.date);
    }
    DiscourseNetwork {
        edges: dates
            .into_iter()
            .map(|(k, ds)| (k, ds.len() as u32))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    /// Number of distinct adjacent actors.
    #[default]
    DistinctActors,
    /// Sum of adjacent edge weights.
    MentionCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CoreConfig {
    pub degree_mode: DegreeMode,
}

pub fn concept_degrees(net: &DiscourseNetwork, mode: DegreeMode) -> BTreeMap<u32, u64> {
    let mut degrees: BTreeMap<u32, u64> = BTreeMap::new();
    match mode {
        DegreeMode::DistinctActors => {
            let mut seen: BTreeSet<(u32, &str)> = BTreeSet::new();
            for (actor, code, _) in net.edges.keys() {
                if seen.insert((*code, actor)) {
                    *degrees.entry(*code).or_default() += 1;
                }
            }
        }
        DegreeMode::MentionCount => {
            for ((_, code, _), w) in &net.edges {
                *degrees.entry(*code).or_default() += u64::from(*w);
            }
        }
    }
    degrees
}

/// Removes concepts with degree below `n`, then actors left without edges.
/// Actors are never removed for their own degree.
pub fn concept_core(net: &DiscourseNetwork, n: i64, cfg: &CoreConfig) -> Result<DiscourseNetwork> {
    if n < 0 {
        return Err(Error::InvalidArgument(format!("core level {n} is negative")));
    }
    let degrees = concept_degrees(net, cfg.degree_mode);
    let keep: BTreeSet<u32> = degrees
        .into_iter()
        .filter(|(_, d)| *d as i64 >= n)
        .map(|(c, _)| c)
        .collect();
    // actors exist only through edges, so dropping edges drops dangling actors
    Ok(DiscourseNetwork {
        edges: net
            .edges
            .iter()
            .filter(|((_, c, _), _)| keep.contains(c))
            .map(|(k, w)| (k.clone(), *w))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Graphml,
    Dot,
    EdgeCsv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Graphml => "graphml",
            ExportFormat::Dot => "dot",
            ExportFormat::EdgeCsv => "csv",
        }
    }
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graphml" => Ok(ExportFormat::Graphml),
            "dot" => Ok(ExportFormat::Dot),
            "edge_csv" | "csv" => Ok(ExportFormat::EdgeCsv),
            other => Err(Error::InvalidArgument(format!("unknown export format `{other}`"))),
        }
    }
}

pub fn network_file_name(period: usize, core_n: u32, format: ExportFormat) -> String {
    format!("network_p{period}_core{core_n}.{}", format.extension())
}

fn actor_id(name: &str) -> String {
    format!("a:{name}")
}

fn concept_id(code: u32) -> String {
    format!("c:{code}")
}

/// Renders `net`; `meta` pairs are embedded as graph attributes or comments.
pub fn render(net: &DiscourseNetwork, format: ExportFormat, meta: &[(&str, &str)]) -> String {
    match format {
        ExportFormat::Graphml => render_graphml(net, meta),
        ExportFormat::Dot => render_dot(net, meta),
        ExportFormat::EdgeCsv => render_csv(net, meta),
    }
}

pub fn export(net: &DiscourseNetwork, format: ExportFormat, path: &Path, meta: &[(&str, &str)]) -> Result<()> {
    std::fs::write(path, render(net, format, meta)).map_err(|e| Error::io(path, e))
}

fn render_graphml(net: &DiscourseNetwork, meta: &[(&str, &str)]) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n  \
         <key id=\"partition\" for=\"node\" attr.name=\"partition\" attr.type=\"string\"/>\n  \
         <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n  \
         <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n  \
         <key id=\"sign\" for=\"edge\" attr.name=\"sign\" attr.type=\"int\"/>\n",
    );
    for (k, _) in meta {
        let k = escape(k);
        let _ = writeln!(out, "  <key id=\"g_{k}\" for=\"graph\" attr.name=\"{k}\" attr.type=\"string\"/>");
    }
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    for (k, v) in meta {
        let _ = writeln!(out, "    <data key=\"g_{}\">{}</data>", escape(k), escape(v));
    }
    for actor in net.actors() {
        let _ = writeln!(
            out,
            "    <node id=\"{}\"><data key=\"partition\">actor</data><data key=\"label\">{}</data></node>",
            escape(actor_id(&actor).as_str()),
            escape(actor.as_str())
        );
    }
    for code in net.concepts() {
        let _ = writeln!(
            out,
            "    <node id=\"{}\"><data key=\"partition\">concept</data><data key=\"label\">{code}</data></node>",
            concept_id(code)
        );
    }
    for ((actor, code, polarity), weight) in net.edges() {
        let _ = writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{weight}</data><data key=\"sign\">{polarity}</data></edge>",
            escape(actor_id(actor).as_str()),
            concept_id(*code)
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn render_dot(net: &DiscourseNetwork, meta: &[(&str, &str)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "// {k}={v}");
    }
    out.push_str("digraph discourse {\n");
    for actor in net.actors() {
        let _ = writeln!(
            out,
            "  {} [shape=ellipse, partition=actor, label={}];",
            dot_quote(&actor_id(&actor)),
            dot_quote(&actor)
        );
    }
    for code in net.concepts() {
        let _ = writeln!(
            out,
            "  {} [shape=box, partition=concept, label=\"{code}\"];",
            dot_quote(&concept_id(code))
        );
    }
    for ((actor, code, polarity), weight) in net.edges() {
        let color = match polarity {
            Polarity::Support => "darkgreen",
            Polarity::Oppose => "red",
        };
        let _ = writeln!(
            out,
            "  {} -> {} [weight={weight}, sign={polarity}, color={color}];",
            dot_quote(&actor_id(actor)),
            dot_quote(&concept_id(*code))
        );
    }
    out.push_str("}\n");
    out
}

fn render_csv(net: &DiscourseNetwork, meta: &[(&str, &str)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["actor", "code", "sign", "weight"]).unwrap();
    for ((actor, code, polarity), weight) in net.edges() {
        writer
            .write_record([actor.as_str(), &code.to_string(), &polarity.to_string(), &weight.to_string()])
            .unwrap();
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap()).unwrap());
    out
}

/// Parses GraphML written by [`render`] back into a network and its graph attributes.
pub fn parse_graphml(xml: &str) -> Result<(DiscourseNetwork, BTreeMap<String, String>)> {
    #[derive(Default)]
    struct NodeAcc {
        partition: String,
        label: String,
    }
    #[derive(Default)]
    struct EdgeAcc {
        source: String,
        target: String,
        weight: String,
        sign: String,
    }
    let bad = |m: String| Error::Contract(format!("graphml: {m}"));
    let attr = |e: &quick_xml::events::BytesStart, name: &str| -> Result<Option<String>> {
        for a in e.attributes() {
            let a = a.map_err(|e| bad(e.to_string()))?;
            if a.key.as_ref() == name.as_bytes() {
                return Ok(Some(a.unescape_value().map_err(|e| bad(e.to_string()))?.into_owned()));
            }
        }
        Ok(None)
    };

    let mut reader = quick_xml::Reader::from_str(xml);
    let mut nodes: BTreeMap<String, NodeAcc> = BTreeMap::new();
    let mut edges: Vec<EdgeAcc> = Vec::new();
    let mut graph_meta = BTreeMap::new();
    let mut node: Option<(String, NodeAcc)> = None;
    let mut edge: Option<EdgeAcc> = None;
    let mut data_key: Option<String> = None;

    loop {
        match reader.read_event().map_err(|e| bad(e.to_string()))? {
            Event::Start(e) => match e.name().as_ref() {
                b"node" => {
                    let id = attr(&e, "id")?.ok_or_else(|| bad("node without id".into()))?;
                    node = Some((id, NodeAcc::default()));
                }
                b"edge" => {
                    edge = Some(EdgeAcc {
                        source: attr(&e, "source")?.ok_or_else(|| bad("edge without source".into()))?,
                        target: attr(&e, "target")?.ok_or_else(|| bad("edge without target".into()))?,
                        ..Default::default()
                    });
                }
                b"data" => data_key = attr(&e, "key")?,
                _ => {}
            },
            Event::Text(t) => {
                let Some(key) = &data_key else { continue };
                let text = t.unescape().map_err(|e| bad(e.to_string()))?.into_owned();
                if let Some((_, n)) = &mut node {
                    match key.as_str() {
                        "partition" => n.partition = text,
                        "label" => n.label = text,
                        _ => {}
                    }
                } else if let Some(ed) = &mut edge {
                    match key.as_str() {
                        "weight" => ed.weight = text,
                        "sign" => ed.sign = text,
                        _ => {}
                    }
                } else if let Some(k) = key.strip_prefix("g_") {
                    graph_meta.insert(k.to_string(), text);
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"node" => {
                    if let Some((id, n)) = node.take() {
                        nodes.insert(id, n);
                    }
                }
                b"edge" => edges.extend(edge.take()),
                b"data" => data_key = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    let mut out = BTreeMap::new();
    for e in edges {
        let src = nodes.get(&e.source).ok_or_else(|| bad(format!("unknown node {}", e.source)))?;
        let dst = nodes.get(&e.target).ok_or_else(|| bad(format!("unknown node {}", e.target)))?;
        if src.partition != "actor" || dst.partition != "concept" {
            return Err(bad("edges must run from actor to concept".into()));
        }
        let code: u32 = dst.label.parse().map_err(|_| bad(format!("bad concept label {}", dst.label)))?;
        let weight: u32 = e.weight.parse().map_err(|_| bad(format!("bad weight {}", e.weight)))?;
        let polarity: Polarity = e.sign.parse()?;
        out.insert((src.label.clone(), code, polarity), weight);
    }
    Ok((DiscourseNetwork::from_edges(out)?, graph_meta))
}
