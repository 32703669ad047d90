//! Source parsing and reconciliation into a [`GraphBuildPlan`].
//!
//! REACH factsheets define the substance set. CTD links and NIOSH pages join
//! onto it by CAS number only; rows that do not join are logged, never fatal.

mod ctd;
mod niosh;
mod reach;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use scraper::ElementRef;
use serde::{Deserialize, Serialize};

pub use ctd::{parse_ctd_links, ChemicalDiseaseLink, CtdError, CtdParse};
pub use niosh::{parse_niosh_page, NioshError, OrganTargetRecord};
pub use reach::{parse_reach_factsheet, ReachError};

use crate::graph::{EdgeType, GraphBuildPlan, GraphStats, Label, NodeRef, PlannedEdge, PlannedNode, Properties};
use crate::model::SubstanceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogReason {
    TemplateMismatch,
    NotHazardous,
    InvalidIdentifier,
    AmbiguousIdentifier,
    MissingCas,
    MalformedRow,
    UnreadableDocument,
    /// CTD link without a CAS number; CAS is the only join key.
    NoCas,
    NoMatchingSubstance,
    DuplicateLink,
    DuplicateSubstance,
    /// Several REACH substances share one CAS number.
    SharedCas,
    DiseaseNameMismatch,
}

impl LogReason {
    pub fn as_str(self) -> &'static str {
        match self {
            LogReason::TemplateMismatch => "template_mismatch",
            LogReason::NotHazardous => "not_hazardous",
            LogReason::InvalidIdentifier => "invalid_identifier",
            LogReason::AmbiguousIdentifier => "ambiguous_identifier",
            LogReason::MissingCas => "missing_cas",
            LogReason::MalformedRow => "malformed_row",
            LogReason::UnreadableDocument => "unreadable_document",
            LogReason::NoCas => "no_cas",
            LogReason::NoMatchingSubstance => "no_matching_substance",
            LogReason::DuplicateLink => "duplicate_link",
            LogReason::DuplicateSubstance => "duplicate_substance",
            LogReason::SharedCas => "shared_cas",
            LogReason::DiseaseNameMismatch => "disease_name_mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub reason: LogReason,
    /// File, optionally with `:line` or `#Link[n]`.
    pub source: String,
    pub detail: String,
}

impl LogEntry {
    pub fn new(reason: LogReason, source: impl Into<String>, detail: impl Into<String>) -> LogEntry {
        LogEntry { reason, source: source.into(), detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Exactly the node and edge counts of the emitted plan.
    pub counts: GraphStats,
    pub skipped: Vec<LogEntry>,
    pub conflicts: Vec<LogEntry>,
}

impl IngestReport {
    /// One JSON object per line: counts first, then skipped rows, then conflicts.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut line = |v: serde_json::Value| {
            out.push_str(&v.to_string());
            out.push('\n');
        };
        for (label, n) in &self.counts.nodes {
            line(serde_json::json!({"log": "count", "node": label.as_str(), "count": n}));
        }
        for (edge_type, n) in &self.counts.edges {
            line(serde_json::json!({"log": "count", "edge": edge_type.as_str(), "count": n}));
        }
        for (kind, entries) in [("skipped", &self.skipped), ("conflict", &self.conflicts)] {
            for e in entries {
                line(serde_json::json!({"log": kind, "reason": e.reason, "source": e.source, "detail": e.detail}));
            }
        }
        out
    }
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, n) in &self.counts.nodes {
            writeln!(f, "{:<20} {n:>6}", label.as_str())?;
        }
        for (edge_type, n) in &self.counts.edges {
            writeln!(f, "{:<20} {n:>6}", edge_type.as_str())?;
        }
        writeln!(f, "{:<20} {:>6}", "skipped", self.skipped.len())?;
        writeln!(f, "{:<20} {:>6}", "conflicts", self.conflicts.len())?;
        for (kind, entries) in [("skipped", &self.skipped), ("conflict", &self.conflicts)] {
            for e in entries {
                writeln!(f, "{kind}: {} {}: {}", e.reason.as_str(), e.source, e.detail)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrganError {
    #[error("organ label {0:?} is empty after normalization")]
    EmptyAfterNormalization(String),
}

/// Lowercases, drops parenthesised segments (an unclosed `(` drops the rest,
/// a stray `)` is removed), collapses whitespace and trims trailing `.,;:`.
pub fn normalize_organ(label: &str) -> Result<String, OrganError> {
    let mut kept = String::with_capacity(label.len());
    let mut depth = 0usize;
    for c in label.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if depth == 0 => kept.push(c),
            _ => {}
        }
    }
    let collapsed = kept.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
    let trimmed = collapsed.trim_end_matches(['.', ',', ';', ':', ' ']).trim_start_matches(['.', ',', ';', ':', ' ']);
    if trimmed.is_empty() {
        return Err(OrganError::EmptyAfterNormalization(label.to_string()));
    }
    Ok(trimmed.to_string())
}

/// Splits on `,` and `;` outside parentheses.
pub(crate) fn split_top_level(text: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' | ';' if depth == 0 => parts.push(std::mem::take(&mut current)),
            c => current.push(c),
        }
    }
    parts.push(current);
    parts.into_iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

/// Element text with whitespace runs collapsed.
pub(crate) fn text_of(el: ElementRef<'_>) -> String {
    el.text().collect::<String>().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One source document; `origin` is its path relative to the corpus root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub origin: String,
    pub text: String,
}

impl Document {
    pub fn new(origin: impl Into<String>, text: impl Into<String>) -> Document {
        Document { origin: origin.into(), text: text.into() }
    }
}

/// Raw documents grouped by source, in file-name order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub reach: Vec<Document>,
    pub ctd: Vec<Document>,
    pub niosh: Vec<Document>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} is not a corpus directory (expected reach/, ctd/ and niosh/)")]
    NotACorpus(PathBuf),
}

impl Corpus {
    /// Reads `reach/*.html`, `ctd/*.{csv,xml}` and `niosh/*.html` under `dir`.
    pub fn from_dir(dir: &Path) -> Result<Corpus, CorpusError> {
        if !dir.is_dir() {
            return Err(CorpusError::Io {
                path: dir.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory"),
            });
        }
        let subdirs = ["reach", "ctd", "niosh"];
        if !subdirs.iter().any(|s| dir.join(s).is_dir()) {
            return Err(CorpusError::NotACorpus(dir.to_path_buf()));
        }
        Ok(Corpus {
            reach: read_docs(dir, "reach", &["html", "htm"])?,
            ctd: read_docs(dir, "ctd", &["csv", "xml"])?,
            niosh: read_docs(dir, "niosh", &["html", "htm"])?,
        })
    }
}

fn read_docs(root: &Path, sub: &str, extensions: &[&str]) -> Result<Vec<Document>, CorpusError> {
    let dir = root.join(sub);
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(io(&dir))? {
        let path = entry.map_err(io(&dir))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| extensions.contains(&e.as_str())) {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = std::fs::read_to_string(&path).map_err(io(&path))?;
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(Document::new(format!("{sub}/{name}"), text))
        })
        .collect()
}

/// Parsed records from a corpus plus everything that failed to parse.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCorpus {
    pub reach: Vec<SubstanceRecord>,
    pub ctd: Vec<ChemicalDiseaseLink>,
    pub niosh: Vec<OrganTargetRecord>,
    pub skipped: Vec<LogEntry>,
}

pub fn parse_corpus(corpus: &Corpus) -> ParsedCorpus {
    let mut out = ParsedCorpus::default();
    for doc in &corpus.reach {
        match parse_reach_factsheet(&doc.text, &doc.origin) {
            Ok(rec) => out.reach.push(rec),
            Err(e) => {
                let reason = match e {
                    ReachError::TemplateMismatch(_) => LogReason::TemplateMismatch,
                    ReachError::NotHazardous(_) => LogReason::NotHazardous,
                    ReachError::InvalidIdentifier(_) => LogReason::InvalidIdentifier,
                    ReachError::AmbiguousIdentifier { .. } => LogReason::AmbiguousIdentifier,
                };
                out.skipped.push(LogEntry::new(reason, &doc.origin, e.to_string()));
            }
        }
    }
    for doc in &corpus.ctd {
        match parse_ctd_links(&doc.text, &doc.origin) {
            Ok(parsed) => {
                out.ctd.extend(parsed.links);
                out.skipped.extend(parsed.skipped);
            }
            Err(e) => out.skipped.push(LogEntry::new(LogReason::UnreadableDocument, &doc.origin, e.to_string())),
        }
    }
    for doc in &corpus.niosh {
        match parse_niosh_page(&doc.text, &doc.origin) {
            Ok(rec) => out.niosh.push(rec),
            Err(e) => {
                let reason = match e {
                    NioshError::MissingCas(_) => LogReason::MissingCas,
                    NioshError::TemplateMismatch(_) => LogReason::TemplateMismatch,
                };
                out.skipped.push(LogEntry::new(reason, &doc.origin, e.to_string()));
            }
        }
    }
    out
}

/// Parses and reconciles a whole corpus; parse-stage skips come first in the report.
pub fn build_from_corpus(corpus: &Corpus) -> (GraphBuildPlan, IngestReport) {
    let parsed = parse_corpus(corpus);
    let (plan, mut report) = reconcile_and_build(&parsed.reach, &parsed.ctd, &parsed.niosh);
    let mut skipped = parsed.skipped;
    skipped.append(&mut report.skipped);
    report.skipped = skipped;
    (plan, report)
}

struct PlanBuilder {
    nodes: BTreeMap<(Label, String), Properties>,
    edges: BTreeSet<PlannedEdge>,
    /// Dedup key: type, endpoints, and the phrase for hazard-class edges.
    edge_keys: HashSet<(EdgeType, String, String, String)>,
}

impl PlanBuilder {
    fn node(&mut self, label: Label, key: &str, properties: Properties) -> NodeRef {
        self.nodes.entry((label, key.to_string())).or_insert(properties);
        NodeRef { label, key: key.to_string() }
    }

    /// Returns false when an equivalent edge is already planned.
    fn edge(&mut self, edge_type: EdgeType, from: NodeRef, to: NodeRef, properties: Properties) -> bool {
        let discriminator = match edge_type {
            EdgeType::HasHazardClass => properties.get("hazard_phrase").cloned().unwrap_or_default(),
            _ => String::new(),
        };
        let key = (edge_type, from.key.clone(), to.key.clone(), discriminator);
        if !self.edge_keys.insert(key) {
            return false;
        }
        self.edges.insert(PlannedEdge { edge_type, from, to, properties });
        true
    }
}

fn props<const N: usize>(pairs: [(&str, &str); N]) -> Properties {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Joins CTD and NIOSH onto REACH substances by CAS and emits a sorted plan.
pub fn reconcile_and_build(
    reach: &[SubstanceRecord],
    ctd: &[ChemicalDiseaseLink],
    niosh: &[OrganTargetRecord],
) -> (GraphBuildPlan, IngestReport) {
    let mut skipped = Vec::new();
    let mut conflicts = Vec::new();
    let mut b = PlanBuilder { nodes: BTreeMap::new(), edges: BTreeSet::new(), edge_keys: HashSet::new() };

    // CAS -> substance keys, in first-seen order.
    let mut by_cas: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut first_origin: HashMap<String, String> = HashMap::new();
    for rec in reach {
        let key = rec.key.to_string();
        if let Some(first) = first_origin.get(&key) {
            conflicts.push(LogEntry::new(
                LogReason::DuplicateSubstance,
                &rec.origin,
                format!("{key} already defined by {first}"),
            ));
            continue;
        }
        first_origin.insert(key.clone(), rec.origin.clone());
        let mut p = props([("name", rec.name.as_str()), ("key", key.as_str())]);
        if let Some(ec) = &rec.ec {
            p.insert("ec".into(), ec.to_string());
        }
        if let Some(cas) = &rec.cas {
            p.insert("cas".into(), cas.to_string());
            by_cas.entry(cas.to_string()).or_default().push(key.clone());
        }
        let sub = b.node(Label::Substance, &key, p);
        for hc in &rec.hazard_classes {
            let class = b.node(Label::HazardClass, &hc.class_name, props([("HazardClass", hc.class_name.as_str())]));
            let edge_props = if hc.hazard_phrase.is_empty() {
                Properties::new()
            } else {
                props([("hazard_phrase", hc.hazard_phrase.as_str())])
            };
            b.edge(EdgeType::HasHazardClass, sub.clone(), class, edge_props);
        }
        for cat in &rec.product_categories {
            let node = b.node(Label::ProductCategory, cat, props([("ProductCategory", cat.as_str())]));
            b.edge(EdgeType::InProductCategory, sub.clone(), node, Properties::new());
        }
    }
    for (cas, keys) in &by_cas {
        if keys.len() > 1 {
            conflicts.push(LogEntry::new(
                LogReason::SharedCas,
                format!("CAS:{cas}"),
                format!("shared by {}; joined rows attach to all of them", keys.join(", ")),
            ));
        }
    }

    let mut disease_names: HashMap<String, String> = HashMap::new();
    for link in ctd {
        let Some(cas) = &link.cas else {
            skipped.push(LogEntry::new(
                LogReason::NoCas,
                &link.origin,
                format!("ChemicalID {} has no CAS", link.chemical_id),
            ));
            continue;
        };
        let Some(keys) = by_cas.get(cas.as_str()) else {
            skipped.push(LogEntry::new(
                LogReason::NoMatchingSubstance,
                &link.origin,
                format!("CAS {cas} is not a REACH substance"),
            ));
            continue;
        };
        let disease_key = link.disease.to_string();
        match disease_names.get(&disease_key) {
            Some(name) if *name != link.disease_name => conflicts.push(LogEntry::new(
                LogReason::DiseaseNameMismatch,
                &link.origin,
                format!("{disease_key} named {:?}, keeping {name:?}", link.disease_name),
            )),
            Some(_) => {}
            None => {
                disease_names.insert(disease_key.clone(), link.disease_name.clone());
            }
        }
        let disease = b.node(
            Label::Disease,
            &disease_key,
            props([("DiseaseName", link.disease_name.as_str()), ("DiseaseID", disease_key.as_str())]),
        );
        for key in keys {
            let sub = NodeRef { label: Label::Substance, key: key.clone() };
            let edge_props = if link.chemical_id.is_empty() {
                Properties::new()
            } else {
                props([("chemical_id", link.chemical_id.as_str())])
            };
            if !b.edge(EdgeType::RelatedToDisease, sub, disease.clone(), edge_props) {
                skipped.push(LogEntry::new(
                    LogReason::DuplicateLink,
                    &link.origin,
                    format!("{key} -> {disease_key} already linked"),
                ));
            }
        }
    }

    for rec in niosh {
        let Some(keys) = by_cas.get(rec.cas.as_str()) else {
            skipped.push(LogEntry::new(
                LogReason::NoMatchingSubstance,
                &rec.origin,
                format!("CAS {} is not a REACH substance", rec.cas),
            ));
            continue;
        };
        for organ in &rec.organs {
            let node = b.node(Label::Organ, organ, props([("Organ", organ.as_str())]));
            for key in keys {
                let sub = NodeRef { label: Label::Substance, key: key.clone() };
                if !b.edge(EdgeType::TargetOrgan, sub, node.clone(), Properties::new()) {
                    skipped.push(LogEntry::new(
                        LogReason::DuplicateLink,
                        &rec.origin,
                        format!("{key} -> organ {organ} already linked"),
                    ));
                }
            }
        }
    }

    let plan = GraphBuildPlan {
        nodes: b.nodes.into_iter().map(|((label, key), properties)| PlannedNode { label, key, properties }).collect(),
        edges: b.edges.into_iter().collect(),
    };
    let report = IngestReport { counts: plan_stats(&plan), skipped, conflicts };
    (plan, report)
}

/// Node and edge counts of a plan.
pub fn plan_stats(plan: &GraphBuildPlan) -> GraphStats {
    let mut stats = GraphStats::zero();
    for n in &plan.nodes {
        *stats.nodes.entry(n.label).or_default() += 1;
    }
    for e in &plan.edges {
        *stats.edges.entry(e.edge_type).or_default() += 1;
    }
    stats
}
