//! Embedded property-graph store for the hazardous-substance knowledge graph.
//!
//! Nodes and edges both carry string-keyed string properties. Every node has a
//! natural key unique within its label; inserting a node whose `(label, key)`
//! already exists merges properties into the existing node instead of
//! creating a second one. Edges are only accepted when their endpoint labels
//! match the static schema table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod snapshot;

pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot};

pub type Properties = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Substance,
    Disease,
    Organ,
    HazardClass,
    ProductCategory,
}

impl Label {
    pub const ALL: [Label; 5] =
        [Label::Substance, Label::Disease, Label::Organ, Label::HazardClass, Label::ProductCategory];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Substance => "Substance",
            Label::Disease => "Disease",
            Label::Organ => "Organ",
            Label::HazardClass => "HazardClass",
            Label::ProductCategory => "ProductCategory",
        }
    }

    /// Property holding the human-readable name used by name lookups.
    pub fn name_property(self) -> &'static str {
        match self {
            Label::Substance => "name",
            Label::Disease => "DiseaseName",
            Label::Organ => "Organ",
            Label::HazardClass => "HazardClass",
            Label::ProductCategory => "ProductCategory",
        }
    }

    pub fn static_properties(self) -> &'static [&'static str] {
        match self {
            Label::Substance => &["name", "key", "ec", "cas"],
            Label::Disease => &["DiseaseName", "DiseaseID"],
            Label::Organ => &["Organ"],
            Label::HazardClass => &["HazardClass"],
            Label::ProductCategory => &["ProductCategory"],
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| GraphError::SchemaViolation(format!("unknown label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeType {
    RelatedToDisease,
    TargetOrgan,
    HasHazardClass,
    InProductCategory,
}

impl EdgeType {
    pub const ALL: [EdgeType; 4] =
        [EdgeType::RelatedToDisease, EdgeType::TargetOrgan, EdgeType::HasHazardClass, EdgeType::InProductCategory];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::RelatedToDisease => "related_to_disease",
            EdgeType::TargetOrgan => "target_organ",
            EdgeType::HasHazardClass => "has_hazard_class",
            EdgeType::InProductCategory => "in_product_category",
        }
    }

    /// `(source label, target label)` every edge of this type must connect.
    pub fn signature(self) -> (Label, Label) {
        match self {
            EdgeType::RelatedToDisease => (Label::Substance, Label::Disease),
            EdgeType::TargetOrgan => (Label::Substance, Label::Organ),
            EdgeType::HasHazardClass => (Label::Substance, Label::HazardClass),
            EdgeType::InProductCategory => (Label::Substance, Label::ProductCategory),
        }
    }

    pub fn static_properties(self) -> &'static [&'static str] {
        match self {
            EdgeType::RelatedToDisease => &["chemical_id"],
            EdgeType::TargetOrgan => &[],
            EdgeType::HasHazardClass => &["hazard_phrase"],
            EdgeType::InProductCategory => &[],
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GraphError::SchemaViolation(format!("unknown edge type {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub id: NodeId,
    pub label: Label,
    pub key: String,
    pub properties: Properties,
}

impl Node {
    pub fn name(&self) -> Option<&str> {
        self.properties.get(self.label.name_property()).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub id: EdgeId,
    pub edge_type: EdgeType,
    pub from: NodeId,
    pub to: NodeId,
    pub properties: Properties,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
    Both,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("unknown node {0:?}")]
    UnknownNode(NodeId),
    #[error("snapshot i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
}

/// Reference to a node by its natural key, as used in build plans.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub label: Label,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlannedNode {
    pub label: Label,
    pub key: String,
    pub properties: Properties,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlannedEdge {
    pub edge_type: EdgeType,
    pub from: NodeRef,
    pub to: NodeRef,
    pub properties: Properties,
}

/// Nodes and edges to insert, addressed by natural key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphBuildPlan {
    pub nodes: Vec<PlannedNode>,
    pub edges: Vec<PlannedEdge>,
}

/// Counts per node label and per edge type; every label and type is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: BTreeMap<Label, usize>,
    pub edges: BTreeMap<EdgeType, usize>,
}

impl GraphStats {
    pub fn zero() -> GraphStats {
        GraphStats {
            nodes: Label::ALL.into_iter().map(|l| (l, 0)).collect(),
            edges: EdgeType::ALL.into_iter().map(|t| (t, 0)).collect(),
        }
    }

    pub fn node_count(&self, label: Label) -> usize {
        self.nodes.get(&label).copied().unwrap_or(0)
    }

    pub fn edge_count(&self, edge_type: EdgeType) -> usize {
        self.edges.get(&edge_type).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeSchema {
    pub label: Label,
    pub properties: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeSchema {
    pub edge_type: EdgeType,
    pub from: Label,
    pub to: Label,
    pub properties: BTreeSet<String>,
}

/// Static schema table extended with property keys observed in stored data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphSchema {
    pub nodes: Vec<NodeSchema>,
    pub edges: Vec<EdgeSchema>,
}

impl GraphSchema {
    pub fn static_schema() -> GraphSchema {
        GraphSchema {
            nodes: Label::ALL
                .into_iter()
                .map(|label| NodeSchema {
                    label,
                    properties: label.static_properties().iter().map(|p| p.to_string()).collect(),
                })
                .collect(),
            edges: EdgeType::ALL
                .into_iter()
                .map(|edge_type| {
                    let (from, to) = edge_type.signature();
                    EdgeSchema {
                        edge_type,
                        from,
                        to,
                        properties: edge_type.static_properties().iter().map(|p| p.to_string()).collect(),
                    }
                })
                .collect(),
        }
    }

    pub fn node(&self, label: &str) -> Option<&NodeSchema> {
        self.nodes.iter().find(|n| n.label.as_str() == label)
    }

    pub fn edge(&self, edge_type: &str) -> Option<&EdgeSchema> {
        self.edges.iter().find(|e| e.edge_type.as_str() == edge_type)
    }

    /// Text rendering in the style of `CALL db.schema`, used inside prompts.
    pub fn render(&self) -> String {
        let mut out = String::from("Node properties:\n");
        for n in &self.nodes {
            out.push_str(&format!("{} {{{}}}\n", n.label, typed_keys(&n.properties)));
        }
        out.push_str("Relationship properties:\n");
        for e in &self.edges {
            out.push_str(&format!("{} {{{}}}\n", e.edge_type, typed_keys(&e.properties)));
        }
        out.push_str("The relationships:\n");
        for e in &self.edges {
            out.push_str(&format!("(:{})-[:{}]->(:{})\n", e.from, e.edge_type, e.to));
        }
        out
    }
}

fn typed_keys(keys: &BTreeSet<String>) -> String {
    keys.iter().map(|k| format!("{k}: STRING")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<EdgeId>>,
    incoming: Vec<Vec<EdgeId>>,
    by_key: HashMap<(Label, String), NodeId>,
    by_name: HashMap<(Label, String), Vec<NodeId>>,
}

impl PropertyGraph {
    pub fn new() -> PropertyGraph {
        PropertyGraph::default()
    }

    /// Builds a graph from a plan, rejecting edges that break the schema.
    pub fn apply(plan: &GraphBuildPlan) -> Result<PropertyGraph, GraphError> {
        let mut graph = PropertyGraph::new();
        for node in &plan.nodes {
            graph.upsert_node(node.label, &node.key, node.properties.clone());
        }
        for edge in &plan.edges {
            let resolve = |r: &NodeRef| {
                graph.node_by_key(r.label, &r.key).map(|n| n.id).ok_or_else(|| {
                    GraphError::SchemaViolation(format!(
                        "{} edge references missing {} node {:?}",
                        edge.edge_type, r.label, r.key
                    ))
                })
            };
            let from = resolve(&edge.from)?;
            let to = resolve(&edge.to)?;
            graph.add_edge(edge.edge_type, from, to, edge.properties.clone())?;
        }
        Ok(graph)
    }

    /// Inserts a node, or merges properties into the existing node with the
    /// same natural key. Existing property values are kept.
    pub fn upsert_node(&mut self, label: Label, key: &str, properties: Properties) -> NodeId {
        if let Some(&id) = self.by_key.get(&(label, key.to_string())) {
            let had_name = self.nodes[id.0 as usize].name().is_some();
            let node = &mut self.nodes[id.0 as usize];
            for (k, v) in properties {
                node.properties.entry(k).or_insert(v);
            }
            if !had_name {
                self.index_name(id);
            }
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { id, label, key: key.to_string(), properties });
        self.outgoing.push(Vec::new());
        self.incoming.push(Vec::new());
        self.by_key.insert((label, key.to_string()), id);
        self.index_name(id);
        id
    }

    fn index_name(&mut self, id: NodeId) {
        let node = &self.nodes[id.0 as usize];
        if let Some(name) = node.name() {
            self.by_name.entry((node.label, name.to_lowercase())).or_default().push(id);
        }
    }

    pub fn add_edge(
        &mut self,
        edge_type: EdgeType,
        from: NodeId,
        to: NodeId,
        properties: Properties,
    ) -> Result<EdgeId, GraphError> {
        let from_label = self.node(from)?.label;
        let to_label = self.node(to)?.label;
        let (want_from, want_to) = edge_type.signature();
        if (from_label, to_label) != (want_from, want_to) {
            return Err(GraphError::SchemaViolation(format!(
                "{edge_type} must connect {want_from}->{want_to}, got {from_label}->{to_label}"
            )));
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge { id, edge_type, from, to, properties });
        self.outgoing[from.0 as usize].push(id);
        self.incoming[to.0 as usize].push(id);
        Ok(id)
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, GraphError> {
        self.nodes.get(id.0 as usize).ok_or(GraphError::UnknownNode(id))
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0 as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_by_key(&self, label: Label, key: &str) -> Option<&Node> {
        self.by_key.get(&(label, key.to_string())).map(|id| &self.nodes[id.0 as usize])
    }

    /// Nodes whose name property equals `name`, optionally ignoring case.
    pub fn lookup_by_name(&self, label: Label, name: &str, case_insensitive: bool) -> Vec<&Node> {
        let Some(ids) = self.by_name.get(&(label, name.to_lowercase())) else {
            return Vec::new();
        };
        ids.iter().map(|id| &self.nodes[id.0 as usize]).filter(|n| case_insensitive || n.name() == Some(name)).collect()
    }

    /// Incident edges of `node`, filtered by type and direction. Edges are
    /// returned in insertion order, outgoing before incoming.
    pub fn neighbors(
        &self,
        node: NodeId,
        edge_type: Option<EdgeType>,
        direction: Direction,
    ) -> Result<Vec<(&Edge, &Node)>, GraphError> {
        self.node(node)?;
        let idx = node.0 as usize;
        let mut out = Vec::new();
        let wanted = |e: &Edge| edge_type.is_none_or(|t| t == e.edge_type);
        if matches!(direction, Direction::Outgoing | Direction::Both) {
            for id in &self.outgoing[idx] {
                let e = self.edge(*id);
                if wanted(e) {
                    out.push((e, &self.nodes[e.to.0 as usize]));
                }
            }
        }
        if matches!(direction, Direction::Incoming | Direction::Both) {
            for id in &self.incoming[idx] {
                let e = self.edge(*id);
                // A self-loop would already be listed as outgoing.
                if wanted(e) && !(direction == Direction::Both && e.from == e.to) {
                    out.push((e, &self.nodes[e.from.0 as usize]));
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn outgoing_ids(&self, node: NodeId) -> &[EdgeId] {
        &self.outgoing[node.0 as usize]
    }

    pub(crate) fn incoming_ids(&self, node: NodeId) -> &[EdgeId] {
        &self.incoming[node.0 as usize]
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats::zero();
        for n in &self.nodes {
            *stats.nodes.entry(n.label).or_default() += 1;
        }
        for e in &self.edges {
            *stats.edges.entry(e.edge_type).or_default() += 1;
        }
        stats
    }

    pub fn schema(&self) -> GraphSchema {
        let mut schema = GraphSchema::static_schema();
        for n in &self.nodes {
            let entry = schema.nodes.iter_mut().find(|s| s.label == n.label).expect("static schema lists every label");
            entry.properties.extend(n.properties.keys().cloned());
        }
        for e in &self.edges {
            let entry = schema
                .edges
                .iter_mut()
                .find(|s| s.edge_type == e.edge_type)
                .expect("static schema lists every edge type");
            entry.properties.extend(e.properties.keys().cloned());
        }
        schema
    }

    /// SHA-256 of the snapshot body; identical for isomorphic graphs built in
    /// the same order.
    pub fn checksum(&self) -> String {
        snapshot::body_checksum(self)
    }
}
