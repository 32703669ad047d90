//! Pattern-matching executor.
//!
//! Each path starts from its most selective node (a bound variable, then an
//! index lookup on the label's name property, then a label scan) and expands
//! hop by hop in both directions. Relationships are never bound twice within
//! one match. Rows are sorted before `LIMIT` is applied, so the output order
//! depends only on the query and the graph contents.

use std::collections::HashMap;
use std::time::Duration;

use serde::Serialize;
use web_time::Instant;

use super::ast::*;
use super::validate::compile_regex;
use crate::graph::{EdgeId, EdgeType, Label, NodeId, Properties, PropertyGraph};

pub const DEFAULT_MAX_ROWS: usize = 10_000;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    /// Maximum number of matched rows before `LIMIT`.
    pub max_rows: usize,
    pub timeout: Duration,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { max_rows: DEFAULT_MAX_ROWS, timeout: DEFAULT_TIMEOUT }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("query produced more than {limit} rows")]
    RowLimit { limit: usize },
    #[error("query exceeded its {}ms time budget", .budget.as_millis())]
    TimeLimit { budget: Duration },
    #[error("invalid regular expression {0:?}")]
    InvalidRegex(String),
}

/// A single result value. Nodes and edges are self-contained copies so that
/// tables can be compared and serialized without the graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Text(String),
    Node {
        label: Label,
        key: String,
        properties: Properties,
    },
    Edge {
        #[serde(rename = "type")]
        edge_type: EdgeType,
        from: String,
        to: String,
        properties: Properties,
    },
}

impl Cell {
    pub fn node(graph: &PropertyGraph, id: NodeId) -> Cell {
        let n = &graph.nodes()[id.0 as usize];
        Cell::Node { label: n.label, key: n.key.clone(), properties: n.properties.clone() }
    }

    pub fn edge(graph: &PropertyGraph, id: EdgeId) -> Cell {
        let e = graph.edge(id);
        let key = |n: NodeId| graph.nodes()[n.0 as usize].key.clone();
        Cell::Edge { edge_type: e.edge_type, from: key(e.from), to: key(e.to), properties: e.properties.clone() }
    }

    /// Plain-text rendering used by tables and summaries.
    pub fn render(&self) -> String {
        match self {
            Cell::Null => "null".to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Node { label, properties, .. } => {
                let name = properties.get(label.name_property()).map(String::as_str).unwrap_or("");
                format!("(:{label} {name})")
            }
            Cell::Edge { edge_type, from, to, .. } => format!("[{from}]-[:{edge_type}]->[{to}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn empty(columns: Vec<String>) -> ResultTable {
        ResultTable { columns, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column-aligned text with a header and separator line.
    pub fn render_aligned(&self) -> String {
        let rendered: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &rendered {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.columns);
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
        out.push('\n');
        for row in &rendered {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

/// Three-valued filter result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Truth {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Node(usize),
    Rel(usize),
}

struct NodeConstraint {
    /// `None`: no label required. `Some(None)`: unsatisfiable (unknown or
    /// conflicting labels).
    label: Option<Option<Label>>,
    props: Vec<(String, String)>,
}

struct RelStep {
    types: Option<Option<EdgeType>>,
    props: Vec<(String, String)>,
    direction: RelDirection,
    left: usize,
    right: usize,
}

enum Step {
    Start(usize),
    /// Expand `rel` from its bound `from_right == false` left node to the right node, or vice versa.
    Expand {
        rel: usize,
        from_right: bool,
    },
}

struct Plan<'q> {
    nodes: Vec<NodeConstraint>,
    rels: Vec<RelStep>,
    steps: Vec<Step>,
    vars: HashMap<&'q str, Slot>,
    filter: Option<&'q Expr>,
    regexes: HashMap<String, regex::Regex>,
}

fn resolve_label(label: &str) -> Option<Label> {
    label.parse().ok()
}

fn resolve_type(t: &str) -> Option<EdgeType> {
    t.parse().ok()
}

fn plan<'q>(query: &'q Query, graph: &PropertyGraph) -> Result<Plan<'q>, ExecError> {
    let mut nodes: Vec<NodeConstraint> = Vec::new();
    let mut rels: Vec<RelStep> = Vec::new();
    let mut vars: HashMap<&'q str, Slot> = HashMap::new();
    let mut paths: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();

    let node_slot = |n: &'q NodePattern, nodes: &mut Vec<NodeConstraint>, vars: &mut HashMap<&'q str, Slot>| {
        let slot = match n.var.as_deref().and_then(|v| vars.get(v)) {
            Some(Slot::Node(i)) => *i,
            _ => {
                nodes.push(NodeConstraint { label: None, props: Vec::new() });
                let i = nodes.len() - 1;
                if let Some(v) = &n.var {
                    vars.insert(v, Slot::Node(i));
                }
                i
            }
        };
        let c = &mut nodes[slot];
        if let Some(l) = &n.label {
            let wanted = resolve_label(l);
            c.label = match c.label {
                None => Some(wanted),
                Some(existing) if existing == wanted => Some(existing),
                Some(_) => Some(None),
            };
        }
        c.props.extend(n.props.iter().cloned());
        slot
    };

    for p in &query.patterns {
        let mut node_slots = vec![node_slot(&p.start, &mut nodes, &mut vars)];
        let mut rel_slots = Vec::new();
        for (r, n) in &p.hops {
            let left = *node_slots.last().expect("path has a start node");
            let right = node_slot(n, &mut nodes, &mut vars);
            rels.push(RelStep {
                types: r.rel_type.as_deref().map(resolve_type),
                props: r.props.clone(),
                direction: r.direction,
                left,
                right,
            });
            let idx = rels.len() - 1;
            if let Some(v) = &r.var {
                vars.insert(v, Slot::Rel(idx));
            }
            rel_slots.push(idx);
            node_slots.push(right);
        }
        paths.push((node_slots, rel_slots));
    }

    let stats = graph.stats();
    let mut bound = vec![false; nodes.len()];
    let mut steps = Vec::new();
    for (node_slots, rel_slots) in &paths {
        let score = |slot: usize| -> (u8, usize) {
            if bound[slot] {
                return (0, 0);
            }
            let c = &nodes[slot];
            match c.label {
                Some(None) => (0, 0),
                Some(Some(label)) => {
                    if c.props.iter().any(|(k, _)| k == label.name_property()) {
                        (1, 0)
                    } else {
                        (2, stats.node_count(label))
                    }
                }
                None => (3, graph.node_count()),
            }
        };
        let start = (0..node_slots.len()).min_by_key(|&i| score(node_slots[i])).expect("path has a start node");
        steps.push(Step::Start(node_slots[start]));
        bound[node_slots[start]] = true;
        for &rel in &rel_slots[start..] {
            steps.push(Step::Expand { rel, from_right: false });
            bound[rels[rel].right] = true;
        }
        for &rel in rel_slots[..start].iter().rev() {
            steps.push(Step::Expand { rel, from_right: true });
            bound[rels[rel].left] = true;
        }
    }

    let mut regexes = HashMap::new();
    if let Some(e) = &query.filter {
        collect_regexes(e, &mut regexes)?;
    }
    Ok(Plan { nodes, rels, steps, vars, filter: query.filter.as_ref(), regexes })
}

fn collect_regexes(e: &Expr, out: &mut HashMap<String, regex::Regex>) -> Result<(), ExecError> {
    match e {
        Expr::Or(a, b) | Expr::And(a, b) => {
            collect_regexes(a, out)?;
            collect_regexes(b, out)
        }
        Expr::Not(a) => collect_regexes(a, out),
        Expr::Compare { op: CompareOp::Regex, right: Operand::Literal(p), .. } => {
            if !out.contains_key(p) {
                let re = compile_regex(p).map_err(|_| ExecError::InvalidRegex(p.clone()))?;
                out.insert(p.clone(), re);
            }
            Ok(())
        }
        Expr::Compare { .. } => Ok(()),
    }
}

struct Matcher<'a, 'q> {
    graph: &'a PropertyGraph,
    plan: &'a Plan<'q>,
    query: &'q Query,
    options: ExecOptions,
    deadline: Instant,
    ticks: u64,
    node_binding: Vec<Option<NodeId>>,
    rel_binding: Vec<Option<EdgeId>>,
    rows: Vec<Vec<Cell>>,
}

impl Matcher<'_, '_> {
    fn node_ok(&self, slot: usize, id: NodeId) -> bool {
        let c = &self.plan.nodes[slot];
        let n = &self.graph.nodes()[id.0 as usize];
        match c.label {
            Some(None) => return false,
            Some(Some(l)) if l != n.label => return false,
            _ => {}
        }
        c.props.iter().all(|(k, v)| n.properties.get(k) == Some(v))
    }

    fn candidates(&self, slot: usize) -> Vec<NodeId> {
        let c = &self.plan.nodes[slot];
        match c.label {
            Some(None) => Vec::new(),
            Some(Some(label)) => {
                if let Some((_, v)) = c.props.iter().find(|(k, _)| k == label.name_property()) {
                    self.graph.lookup_by_name(label, v, false).into_iter().map(|n| n.id).collect()
                } else {
                    self.graph.nodes().iter().filter(|n| n.label == label).map(|n| n.id).collect()
                }
            }
            None => self.graph.nodes().iter().map(|n| n.id).collect(),
        }
    }

    fn tick(&mut self) -> Result<(), ExecError> {
        self.ticks += 1;
        if self.ticks.is_multiple_of(1024) && Instant::now() > self.deadline {
            return Err(ExecError::TimeLimit { budget: self.options.timeout });
        }
        Ok(())
    }

    fn bind_node(&mut self, slot: usize, id: NodeId, step: usize) -> Result<(), ExecError> {
        match self.node_binding[slot] {
            Some(existing) => {
                if existing == id {
                    self.run(step + 1)?;
                }
            }
            None => {
                if self.node_ok(slot, id) {
                    self.node_binding[slot] = Some(id);
                    let r = self.run(step + 1);
                    self.node_binding[slot] = None;
                    r?;
                }
            }
        }
        Ok(())
    }

    fn run(&mut self, step: usize) -> Result<(), ExecError> {
        self.tick()?;
        let Some(s) = self.plan.steps.get(step) else {
            return self.emit();
        };
        match *s {
            Step::Start(slot) => {
                if let Some(id) = self.node_binding[slot] {
                    return self.bind_node(slot, id, step);
                }
                for id in self.candidates(slot) {
                    self.bind_node(slot, id, step)?;
                }
            }
            Step::Expand { rel, from_right } => {
                let r = &self.plan.rels[rel];
                if r.types == Some(None) {
                    return Ok(());
                }
                let (here, there) = if from_right { (r.right, r.left) } else { (r.left, r.right) };
                let at = self.node_binding[here].expect("expansion starts from a bound node");
                // Pattern direction relative to the walk: Right means left->right.
                let (out_ok, in_ok) = match (r.direction, from_right) {
                    (RelDirection::Either, _) => (true, true),
                    (RelDirection::Right, false) | (RelDirection::Left, true) => (true, false),
                    (RelDirection::Right, true) | (RelDirection::Left, false) => (false, true),
                };
                let mut candidates: Vec<(EdgeId, NodeId)> = Vec::new();
                if out_ok {
                    candidates.extend(self.graph.outgoing_ids(at).iter().map(|e| (*e, self.graph.edge(*e).to)));
                }
                if in_ok {
                    candidates.extend(
                        self.graph
                            .incoming_ids(at)
                            .iter()
                            .filter(|e| !(out_ok && self.graph.edge(**e).from == at && self.graph.edge(**e).to == at))
                            .map(|e| (*e, self.graph.edge(*e).from)),
                    );
                }
                for (eid, other) in candidates {
                    let e = self.graph.edge(eid);
                    if let Some(Some(t)) = r.types {
                        if e.edge_type != t {
                            continue;
                        }
                    }
                    if !r.props.iter().all(|(k, v)| e.properties.get(k) == Some(v)) {
                        continue;
                    }
                    if self.rel_binding.contains(&Some(eid)) {
                        continue;
                    }
                    self.rel_binding[rel] = Some(eid);
                    let res = self.bind_node(there, other, step);
                    self.rel_binding[rel] = None;
                    res?;
                }
            }
        }
        Ok(())
    }

    fn lookup(&self, var: &str, key: &str) -> Option<&str> {
        let props = match self.plan.vars.get(var)? {
            Slot::Node(i) => &self.graph.nodes()[self.node_binding[*i]?.0 as usize].properties,
            Slot::Rel(i) => &self.graph.edge(self.rel_binding[*i]?).properties,
        };
        props.get(key).map(String::as_str)
    }

    fn operand(&self, o: &Operand) -> Option<String> {
        match o {
            Operand::Property { var, key } => self.lookup(var, key).map(str::to_string),
            Operand::ToLower(i) => self.operand(i).map(|s| s.to_lowercase()),
            Operand::ToUpper(i) => self.operand(i).map(|s| s.to_uppercase()),
            Operand::Literal(s) => Some(s.clone()),
        }
    }

    fn eval(&self, e: &Expr) -> Truth {
        match e {
            Expr::Or(a, b) => match (self.eval(a), self.eval(b)) {
                (Truth::True, _) | (_, Truth::True) => Truth::True,
                (Truth::False, Truth::False) => Truth::False,
                _ => Truth::Unknown,
            },
            Expr::And(a, b) => match (self.eval(a), self.eval(b)) {
                (Truth::False, _) | (_, Truth::False) => Truth::False,
                (Truth::True, Truth::True) => Truth::True,
                _ => Truth::Unknown,
            },
            Expr::Not(a) => match self.eval(a) {
                Truth::True => Truth::False,
                Truth::False => Truth::True,
                Truth::Unknown => Truth::Unknown,
            },
            Expr::Compare { left, op, right } => {
                let (Some(l), Some(r)) = (self.operand(left), self.operand(right)) else {
                    return Truth::Unknown;
                };
                let hit = match op {
                    CompareOp::Eq => l == r,
                    CompareOp::Contains => l.contains(&r),
                    CompareOp::Regex => self.plan.regexes.get(&r).is_some_and(|re| re.is_match(&l)),
                };
                if hit {
                    Truth::True
                } else {
                    Truth::False
                }
            }
        }
    }

    fn emit(&mut self) -> Result<(), ExecError> {
        if let Some(f) = self.plan.filter {
            if self.eval(f) != Truth::True {
                return Ok(());
            }
        }
        if self.rows.len() >= self.options.max_rows {
            return Err(ExecError::RowLimit { limit: self.options.max_rows });
        }
        let row = self
            .query
            .ret
            .items
            .iter()
            .map(|item| match &item.projection {
                Projection::Property { var, key } => {
                    self.lookup(var, key).map_or(Cell::Null, |s| Cell::Text(s.to_string()))
                }
                Projection::Variable(v) => match self.plan.vars.get(v.as_str()) {
                    Some(Slot::Node(i)) => self.node_binding[*i].map_or(Cell::Null, |id| Cell::node(self.graph, id)),
                    Some(Slot::Rel(i)) => self.rel_binding[*i].map_or(Cell::Null, |id| Cell::edge(self.graph, id)),
                    None => Cell::Null,
                },
            })
            .collect();
        self.rows.push(row);
        Ok(())
    }
}

/// Runs a parsed query against `graph` under the given limits.
pub fn execute_with(query: &Query, graph: &PropertyGraph, options: ExecOptions) -> Result<ResultTable, ExecError> {
    let plan = plan(query, graph)?;
    let columns = query.ret.items.iter().map(ReturnItem::column_name).collect();
    let mut m = Matcher {
        graph,
        plan: &plan,
        query,
        options,
        deadline: Instant::now() + options.timeout,
        ticks: 0,
        node_binding: vec![None; plan.nodes.len()],
        rel_binding: vec![None; plan.rels.len()],
        rows: Vec::new(),
    };
    m.run(0)?;
    let mut rows = m.rows;
    rows.sort();
    if query.ret.distinct {
        rows.dedup();
    }
    if let Some(limit) = query.ret.limit {
        rows.truncate(usize::try_from(limit).unwrap_or(usize::MAX));
    }
    Ok(ResultTable { columns, rows })
}

pub fn execute(query: &Query, graph: &PropertyGraph) -> Result<ResultTable, ExecError> {
    execute_with(query, graph, ExecOptions::default())
}
