//! Shared by the core integration tests and the service acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use hazardchat_core::cypher::ast::{
    CompareOp, Expr, NodePattern, Operand, PathPattern, Projection, Query, RelDirection, RelPattern, ReturnClause,
    ReturnItem,
};
use hazardchat_core::cypher::Cell;
use hazardchat_core::graph::{EdgeId, EdgeType, Label, NodeId, Properties, PropertyGraph};
use hazardchat_core::ingest::{build_from_corpus, parse_corpus, Corpus, Document};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub const HEART_QUESTION: &str =
    "What are the potential health impacts, particularly on the heart, of exposure to Acrylaldehyde?";

/// The generated query with its stray closing parenthesis removed.
pub const HEART_QUERY: &str = "MATCH (o:Organ {Organ: 'heart'})<-[:target_organ]-(sub:Substance {name: 'Acrylaldehyde'})-[:related_to_disease]->(d:Disease) where toLower(d.DiseaseName) contains 'heart'\nRETURN d.DiseaseName";

/// Disease names in the order the published answer lists them.
pub const HEART_DISEASES: [&str; 13] = [
    "heart block",
    "hypoplastic left heart syndrome",
    "neurodevelopmental disorder with or without anomalies of the brain, eye, or heart",
    "arterial occlusive disease, progressive, with hypertension, heart defects, bone fragility, and brachysyndactyly",
    "heart arrest",
    "heart valve disease",
    "heart septal defects, ventricular",
    "heart-hand syndrome, slovenian type",
    "heart failure",
    "heartburn",
    "heart defects, congenital",
    "heart injury",
    "heart failure, diastolic",
];

/// `HEART_DISEASES` in byte order, the order result rows are sorted into.
pub fn heart_diseases_sorted() -> Vec<String> {
    let mut v: Vec<String> = HEART_DISEASES.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Every (edge, orientation) choice for every relationship occurrence, then
/// every node for occurrences not fixed by a relationship, filtered and
/// projected. Rows are sorted, deduplicated for DISTINCT and limited.
pub fn oracle_rows(query: &Query, graph: &PropertyGraph) -> Vec<Vec<Cell>> {
    // Node occurrences and relationship occurrences, flattened.
    let mut node_occ: Vec<&NodePattern> = Vec::new();
    // (rel pattern, left occurrence index, right occurrence index)
    let mut rel_occ: Vec<(&RelPattern, usize, usize)> = Vec::new();
    for p in &query.patterns {
        let mut left = node_occ.len();
        node_occ.push(&p.start);
        for (r, n) in &p.hops {
            let right = node_occ.len();
            node_occ.push(n);
            rel_occ.push((r, left, right));
            left = right;
        }
    }

    let mut rows = Vec::new();
    let mut node_bind: Vec<Option<NodeId>> = vec![None; node_occ.len()];
    let mut rel_bind: Vec<EdgeId> = Vec::new();
    enumerate_rels(graph, &rel_occ, 0, &mut node_bind, &mut rel_bind, &mut |node_bind, rel_bind| {
        let mut nb = node_bind.to_vec();
        enumerate_free_nodes(graph, &mut nb, 0, &mut |full| {
            if let Some(row) = check_and_project(query, graph, &node_occ, &rel_occ, full, rel_bind) {
                rows.push(row);
            }
        });
    });
    rows.sort();
    if query.ret.distinct {
        rows.dedup();
    }
    if let Some(limit) = query.ret.limit {
        rows.truncate(limit as usize);
    }
    rows
}

type RelOcc<'a> = (&'a RelPattern, usize, usize);
type Emit<'a> = dyn FnMut(&[Option<NodeId>], &[EdgeId]) + 'a;

fn enumerate_rels(
    graph: &PropertyGraph,
    rels: &[RelOcc<'_>],
    i: usize,
    node_bind: &mut Vec<Option<NodeId>>,
    rel_bind: &mut Vec<EdgeId>,
    emit: &mut Emit<'_>,
) {
    if i == rels.len() {
        emit(node_bind, rel_bind);
        return;
    }
    let (rel, l, r) = rels[i];
    for e in graph.edges() {
        if rel_bind.contains(&e.id)
            || rel.rel_type.as_deref().is_some_and(|t| t != e.edge_type.as_str())
            || !props_match(&rel.props, &e.properties)
        {
            continue;
        }
        let mut orientations = Vec::new();
        match rel.direction {
            RelDirection::Right => orientations.push((e.from, e.to)),
            RelDirection::Left => orientations.push((e.to, e.from)),
            RelDirection::Either => {
                orientations.push((e.from, e.to));
                if e.from != e.to {
                    orientations.push((e.to, e.from));
                }
            }
        }
        for (ln, rn) in orientations {
            let saved = (node_bind[l], node_bind[r]);
            if node_bind[l].is_some_and(|x| x != ln) {
                continue;
            }
            node_bind[l] = Some(ln);
            if node_bind[r].is_some_and(|x| x != rn) {
                node_bind[l] = saved.0;
                continue;
            }
            node_bind[r] = Some(rn);
            rel_bind.push(e.id);
            enumerate_rels(graph, rels, i + 1, node_bind, rel_bind, emit);
            rel_bind.pop();
            node_bind[l] = saved.0;
            node_bind[r] = saved.1;
        }
    }
}

fn enumerate_free_nodes(
    graph: &PropertyGraph,
    bind: &mut Vec<Option<NodeId>>,
    i: usize,
    emit: &mut dyn FnMut(&[NodeId]),
) {
    if i == bind.len() {
        let full: Vec<NodeId> = bind.iter().map(|b| b.unwrap()).collect();
        emit(&full);
        return;
    }
    if bind[i].is_some() {
        enumerate_free_nodes(graph, bind, i + 1, emit);
        return;
    }
    for n in graph.nodes() {
        bind[i] = Some(n.id);
        enumerate_free_nodes(graph, bind, i + 1, emit);
    }
    bind[i] = None;
}

fn props_match(want: &[(String, String)], have: &Properties) -> bool {
    want.iter().all(|(k, v)| have.get(k) == Some(v))
}

fn check_and_project(
    query: &Query,
    graph: &PropertyGraph,
    node_occ: &[&NodePattern],
    rel_occ: &[RelOcc<'_>],
    nodes: &[NodeId],
    rels: &[EdgeId],
) -> Option<Vec<Cell>> {
    let distinct: HashSet<EdgeId> = rels.iter().copied().collect();
    if distinct.len() != rels.len() {
        return None;
    }
    let mut env: BTreeMap<String, Binding> = BTreeMap::new();
    for (occ, &id) in node_occ.iter().zip(nodes) {
        let node = &graph.nodes()[id.0 as usize];
        if occ.label.as_deref().is_some_and(|l| l != node.label.as_str()) || !props_match(&occ.props, &node.properties)
        {
            return None;
        }
        if let Some(v) = &occ.var {
            match env.get(v) {
                Some(Binding::Node(prev)) if *prev != id => return None,
                _ => {
                    env.insert(v.clone(), Binding::Node(id));
                }
            }
        }
    }
    for ((rel, _, _), &id) in rel_occ.iter().zip(rels) {
        let edge = graph.edge(id);
        if rel.rel_type.as_deref().is_some_and(|t| t != edge.edge_type.as_str())
            || !props_match(&rel.props, &edge.properties)
        {
            return None;
        }
        if let Some(v) = &rel.var {
            env.insert(v.clone(), Binding::Rel(id));
        }
    }
    if let Some(filter) = &query.filter {
        if eval(filter, graph, &env) != Some(true) {
            return None;
        }
    }
    Some(
        query
            .ret
            .items
            .iter()
            .map(|item| match &item.projection {
                Projection::Variable(v) => match env[v] {
                    Binding::Node(id) => Cell::node(graph, id),
                    Binding::Rel(id) => Cell::edge(graph, id),
                },
                Projection::Property { var, key } => lookup(graph, &env, var, key).map_or(Cell::Null, Cell::Text),
            })
            .collect(),
    )
}

#[derive(Clone, Copy)]
enum Binding {
    Node(NodeId),
    Rel(EdgeId),
}

fn lookup(graph: &PropertyGraph, env: &BTreeMap<String, Binding>, var: &str, key: &str) -> Option<String> {
    let props = match env.get(var)? {
        Binding::Node(id) => &graph.nodes()[id.0 as usize].properties,
        Binding::Rel(id) => &graph.edge(*id).properties,
    };
    props.get(key).cloned()
}

fn operand(o: &Operand, graph: &PropertyGraph, env: &BTreeMap<String, Binding>) -> Option<String> {
    match o {
        Operand::Property { var, key } => lookup(graph, env, var, key),
        Operand::ToLower(inner) => operand(inner, graph, env).map(|s| s.to_lowercase()),
        Operand::ToUpper(inner) => operand(inner, graph, env).map(|s| s.to_uppercase()),
        Operand::Literal(s) => Some(s.clone()),
    }
}

/// Kleene logic; `None` is null.
fn eval(e: &Expr, graph: &PropertyGraph, env: &BTreeMap<String, Binding>) -> Option<bool> {
    match e {
        Expr::Not(a) => eval(a, graph, env).map(|b| !b),
        Expr::And(a, b) => match (eval(a, graph, env), eval(b, graph, env)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Expr::Or(a, b) => match (eval(a, graph, env), eval(b, graph, env)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Expr::Compare { left, op, right } => {
            let l = operand(left, graph, env)?;
            let r = operand(right, graph, env)?;
            Some(match op {
                CompareOp::Eq => l == r,
                CompareOp::Contains => l.contains(&r),
                CompareOp::Regex => regex::Regex::new(&format!("^(?:{r})$")).unwrap().is_match(&l),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Random graphs and queries
// ---------------------------------------------------------------------------

const WORDS: [&str; 8] = ["heart", "Heart", "eyes", "liver", "Acrylaldehyde", "heart block", "skin", "benzene"];

fn label_of(rng: &mut ChaCha8Rng) -> Label {
    *Label::ALL.choose(rng).unwrap()
}

/// Schema-valid graph with at most `max_nodes` nodes; names repeat often so
/// that filters and inline maps select something.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> PropertyGraph {
    let mut g = PropertyGraph::new();
    let n = if rng.random_bool(0.05) { 0 } else { rng.random_range(max_nodes / 4..=max_nodes) };
    for i in 0..n {
        // Bias towards substances so that edges are possible.
        let label = if rng.random_bool(0.35) { Label::Substance } else { label_of(rng) };
        let mut props = Properties::new();
        if rng.random_bool(0.85) {
            props.insert(label.name_property().to_string(), WORDS.choose(rng).unwrap().to_string());
        }
        if rng.random_bool(0.3) {
            props.insert("cas".into(), WORDS.choose(rng).unwrap().to_string());
        }
        g.upsert_node(label, &format!("k{i}"), props);
    }
    let m = rng.random_range(max_edges / 4..=max_edges);
    for _ in 0..m {
        let t = *EdgeType::ALL.choose(rng).unwrap();
        let (fl, tl) = t.signature();
        let froms: Vec<NodeId> = g.nodes().iter().filter(|x| x.label == fl).map(|x| x.id).collect();
        let tos: Vec<NodeId> = g.nodes().iter().filter(|x| x.label == tl).map(|x| x.id).collect();
        if let (Some(&a), Some(&b)) = (froms.choose(rng), tos.choose(rng)) {
            let mut props = Properties::new();
            if rng.random_bool(0.3) {
                props.insert("hazard_phrase".into(), WORDS.choose(rng).unwrap().to_string());
            }
            g.add_edge(t, a, b, props).unwrap();
        }
    }
    g
}

const NODE_VARS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const PROP_KEYS: [&str; 7] = ["name", "Organ", "DiseaseName", "HazardClass", "ProductCategory", "cas", "hazard_phrase"];

fn random_label(rng: &mut ChaCha8Rng, actual: Option<Label>) -> Option<String> {
    match (actual, rng.random_range(0..20)) {
        (Some(l), 0..=9) => Some(l.as_str().to_string()),
        (_, 10) => Some(label_of(rng).as_str().to_string()),
        _ => None,
    }
}

/// Mostly fresh variables, sometimes a reused one (a join), sometimes none.
fn node_var(rng: &mut ChaCha8Rng, used: &mut Vec<String>) -> Option<String> {
    if rng.random_bool(0.2) {
        return None;
    }
    if !used.is_empty() && rng.random_bool(0.06) {
        return used.choose(rng).cloned();
    }
    let v = NODE_VARS.iter().find(|v| !used.iter().any(|u| u == *v)).unwrap_or(&"a").to_string();
    used.push(v.clone());
    Some(v)
}

fn node_pattern(
    rng: &mut ChaCha8Rng,
    graph: &PropertyGraph,
    actual: Option<NodeId>,
    used: &mut Vec<String>,
    labels: &mut BTreeMap<String, Label>,
) -> NodePattern {
    let node = actual.map(|id| &graph.nodes()[id.0 as usize]);
    let label = random_label(rng, node.map(|n| n.label));
    let mut props = Vec::new();
    if rng.random_bool(0.15) {
        let key = node.map_or("name", |n| n.label.name_property());
        let value = node
            .and_then(|n| n.properties.get(key).cloned())
            .filter(|_| rng.random_bool(0.85))
            .unwrap_or_else(|| WORDS.choose(rng).unwrap().to_string());
        props.push((key.to_string(), value));
    }
    let var = node_var(rng, used);
    if let (Some(v), Some(n)) = (&var, node) {
        labels.entry(v.clone()).or_insert(n.label);
    }
    NodePattern { var, label, props }
}

/// A path of `hops` relationships, following real edges when the graph has
/// them and then perturbing labels, types and directions.
fn path_pattern(
    rng: &mut ChaCha8Rng,
    graph: &PropertyGraph,
    hops: usize,
    rel_no: &mut usize,
    used: &mut Vec<String>,
    labels: &mut BTreeMap<String, Label>,
) -> PathPattern {
    let walk = !graph.edges().is_empty() && rng.random_bool(0.8);
    let mut current = if walk {
        let e = graph.edges().choose(rng).unwrap();
        Some(if rng.random_bool(0.5) { e.from } else { e.to })
    } else {
        graph.nodes().choose(rng).map(|n| n.id)
    };
    let start = node_pattern(rng, graph, current, used, labels);
    let mut taken: Vec<EdgeId> = Vec::new();
    let mut path = Vec::new();
    for _ in 0..hops {
        *rel_no += 1;
        let step = current.filter(|_| walk).and_then(|at| {
            let incident: Vec<_> =
                graph.edges().iter().filter(|e| (e.from == at || e.to == at) && !taken.contains(&e.id)).collect();
            incident.choose(rng).map(|e| (*e, at))
        });
        let (actual_type, direction, next) = match step {
            Some((e, at)) => {
                taken.push(e.id);
                let (dir, next) = if e.from == at { (RelDirection::Right, e.to) } else { (RelDirection::Left, e.from) };
                (Some(e.edge_type), dir, Some(next))
            }
            None => (None, *[RelDirection::Right, RelDirection::Left].choose(rng).unwrap(), None),
        };
        let direction = match rng.random_range(0..20) {
            0..=5 => RelDirection::Either,
            6 => *[RelDirection::Right, RelDirection::Left].choose(rng).unwrap(),
            _ => direction,
        };
        let rel_type = match (actual_type, rng.random_range(0..20)) {
            (Some(t), 0..=9) => Some(t.as_str().to_string()),
            (_, 10) => Some(EdgeType::ALL.choose(rng).unwrap().as_str().to_string()),
            _ => None,
        };
        let rel = RelPattern {
            var: rng.random_bool(0.4).then(|| format!("r{rel_no}")),
            rel_type,
            direction,
            props: if rng.random_bool(0.1) {
                vec![("hazard_phrase".to_string(), WORDS.choose(rng).unwrap().to_string())]
            } else {
                vec![]
            },
        };
        current = next;
        path.push((rel, node_pattern(rng, graph, current, used, labels)));
    }
    PathPattern { start, hops: path }
}

fn random_operand(rng: &mut ChaCha8Rng, vars: &[String], labels: &BTreeMap<String, Label>) -> Operand {
    let var = vars.choose(rng).unwrap().clone();
    let key = match labels.get(&var) {
        Some(l) if rng.random_bool(0.7) => l.name_property(),
        _ => PROP_KEYS.choose(rng).unwrap(),
    };
    let base = Operand::Property { var, key: key.to_string() };
    match rng.random_range(0..4) {
        0 => Operand::ToLower(Box::new(base)),
        1 => Operand::ToUpper(Box::new(base)),
        _ => base,
    }
}

fn random_expr(rng: &mut ChaCha8Rng, vars: &[String], labels: &BTreeMap<String, Label>, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.5) {
        let left = random_operand(rng, vars, labels);
        let (op, right) = match rng.random_range(0..4) {
            0 => (CompareOp::Eq, Operand::Literal(WORDS.choose(rng).unwrap().to_string())),
            1 => (
                CompareOp::Regex,
                Operand::Literal(["(?i)heart.*", "e.*s", ".*", "[a-z ]+"].choose(rng).unwrap().to_string()),
            ),
            2 if rng.random_bool(0.3) => (CompareOp::Eq, random_operand(rng, vars, labels)),
            _ => (CompareOp::Contains, Operand::Literal(["heart", "e", "HEART", ""].choose(rng).unwrap().to_string())),
        };
        return Expr::Compare { left, op, right };
    }
    let a = Box::new(random_expr(rng, vars, labels, depth - 1));
    match rng.random_range(0..3) {
        0 => Expr::Not(a),
        1 => Expr::And(a, Box::new(random_expr(rng, vars, labels, depth - 1))),
        _ => Expr::Or(a, Box::new(random_expr(rng, vars, labels, depth - 1))),
    }
}

/// Query with at most `max_hops` relationships over at most two patterns.
pub fn random_query(rng: &mut ChaCha8Rng, graph: &PropertyGraph, max_hops: usize) -> Query {
    let mut hops_left = rng.random_range(0..=max_hops);
    let pattern_count = if rng.random_bool(0.3) { 2 } else { 1 };
    let mut patterns = Vec::new();
    let mut rel_no = 0;
    let mut used = Vec::new();
    let mut labels = BTreeMap::new();
    for i in 0..pattern_count {
        let hops_here = if i + 1 == pattern_count { hops_left } else { rng.random_range(0..=hops_left) };
        hops_left -= hops_here;
        patterns.push(path_pattern(rng, graph, hops_here, &mut rel_no, &mut used, &mut labels));
    }
    let mut vars: Vec<String> = Vec::new();
    for p in &patterns {
        for n in p.nodes() {
            if let Some(v) = &n.var {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        for r in p.rels() {
            if let Some(v) = &r.var {
                vars.push(v.clone());
            }
        }
    }
    if vars.is_empty() {
        patterns[0].start.var = Some("a".into());
        vars.push("a".into());
    }
    let filter = rng.random_bool(0.5).then(|| random_expr(rng, &vars, &labels, 2));
    let item_count = rng.random_range(1..=3);
    let items = (0..item_count)
        .map(|_| {
            let var = vars.choose(rng).unwrap().clone();
            let projection = if rng.random_bool(0.5) {
                Projection::Variable(var)
            } else {
                Projection::Property { var, key: PROP_KEYS.choose(rng).unwrap().to_string() }
            };
            ReturnItem { projection, alias: None }
        })
        .collect();
    Query {
        patterns,
        filter,
        ret: ReturnClause {
            distinct: rng.random_bool(0.3),
            items,
            limit: rng.random_bool(0.2).then(|| rng.random_range(0..5)),
        },
    }
}

// ---------------------------------------------------------------------------
// Isomorphism under natural keys
// ---------------------------------------------------------------------------

pub type CanonicalNode = (Label, String, Properties);
pub type CanonicalEdge = (EdgeType, (Label, String), (Label, String), Properties);

/// Node set and sorted edge multiset with endpoints replaced by natural keys.
pub fn canonical_form(graph: &PropertyGraph) -> (Vec<CanonicalNode>, Vec<CanonicalEdge>) {
    let key = |id: NodeId| {
        let n = &graph.nodes()[id.0 as usize];
        (n.label, n.key.clone())
    };
    let mut nodes: Vec<CanonicalNode> =
        graph.nodes().iter().map(|n| (n.label, n.key.clone(), n.properties.clone())).collect();
    let mut edges: Vec<CanonicalEdge> =
        graph.edges().iter().map(|e| (e.edge_type, key(e.from), key(e.to), e.properties.clone())).collect();
    nodes.sort();
    edges.sort();
    (nodes, edges)
}

// ---------------------------------------------------------------------------
// Refusal fuzzing
// ---------------------------------------------------------------------------

/// Queries that validate against the fixture schema; mutation seeds.
pub const VALID_SEEDS: [&str; 5] = [
    HEART_QUERY,
    "MATCH (s:Substance)-[r:has_hazard_class]->(h:HazardClass) WHERE s.name =~ '(?i)formaldehyde' RETURN h.HazardClass, r.hazard_phrase",
    "MATCH (s:Substance)-[:target_organ]->(o:Organ) WHERE s.name =~ '(?i)benzene' RETURN o.Organ",
    "MATCH (s:Substance)-[:in_product_category]->(p:ProductCategory) WHERE toLower(p.ProductCategory) CONTAINS 'adhesive' RETURN DISTINCT s.name",
    "MATCH (s:Substance)-[:related_to_disease]->(d:Disease) WHERE s.name = 'Benzene' RETURN d.DiseaseName LIMIT 3",
];

const UNKNOWN_LABELS: [&str; 6] = ["Chemical", "Compound", "Patient", "Symptom", "Gene", "Product"];
const UNKNOWN_TYPES: [&str; 5] = ["CAUSES", "treats", "TARGETS", "associated_with", "HAS_CLASS"];
const UNSUPPORTED_TAILS: [&str; 8] = [
    " ORDER BY x",
    " SKIP 2",
    " UNION MATCH (n) RETURN n",
    " WITH n",
    " CREATE (x)",
    " DELETE n",
    " SET n.name = 'x'",
    " REMOVE n.name",
];
const UNSUPPORTED_WHOLE: [&str; 14] = [
    "CREATE (n)",
    "CREATE (s:Substance {name: 'x'})",
    "MERGE (o:Organ {Organ: 'heart'})",
    "MATCH (n) DETACH DELETE n",
    "MATCH (d:Disease) RETURN count(d)",
    "MATCH (s:Substance)-[:related_to_disease*1..3]->(d:Disease) RETURN d.DiseaseName",
    "OPTIONAL MATCH (s:Substance) RETURN s.name",
    "MATCH (s:Substance) WHERE s.name STARTS WITH 'A' RETURN s.name",
    "MATCH (s:Substance) RETURN s.name ORDER BY s.name",
    "CALL db.schema()",
    "UNWIND [1, 2] AS x RETURN x",
    "MATCH (s:Substance {name: $name}) RETURN s",
    "MATCH (s:Substance:Organ) RETURN s",
    "LOAD CSV FROM 'file:///x.csv' AS row RETURN row",
];
const GARBAGE: &[u8] = b"()[]{}<>-:;,.'\"=~!*$| abcXYZ019\n";

/// Candidate query strings that must all be refused: broken syntax, unknown
/// labels, types and properties, wrong directions and unsupported clauses.
/// None contain backticks, so they survive being wrapped in a code fence.
pub fn fuzz_candidates(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    let label_re = regex::Regex::new(r":(Substance|Organ|Disease|HazardClass|ProductCategory)\b").unwrap();
    let type_re = regex::Regex::new(r"\[(\w*):\w+\]").unwrap();
    let return_re = regex::Regex::new(r"RETURN (DISTINCT )?(\w+)\.\w+").unwrap();
    let arrow_re = regex::Regex::new(r"(<?)-\[([^\]]*)\]-(>?)").unwrap();
    while out.len() < n {
        let seed = *VALID_SEEDS.choose(rng).unwrap();
        let c = match out.len() % 10 {
            // Stray closing parenthesis after the last literal or at the end.
            0 => match seed.rfind('\'') {
                Some(i) if rng.random_bool(0.5) => format!("{}'){}", &seed[..i], &seed[i + 1..]),
                _ => format!("{seed})"),
            },
            // Truncated before the RETURN clause ends.
            1 => {
                let cut = seed.find("RETURN").unwrap_or(seed.len());
                seed[..rng.random_range(0..cut)].to_string()
            }
            // Unknown label.
            2 => {
                let re = &label_re;
                let label = *UNKNOWN_LABELS.choose(rng).unwrap();
                re.replace(seed, format!(":{label}").as_str()).into_owned()
            }
            // Unknown relationship type.
            3 => {
                let re = &type_re;
                let t = *UNKNOWN_TYPES.choose(rng).unwrap();
                re.replace(seed, format!("[${{1}}:{t}]").as_str()).into_owned()
            }
            // Unknown property in RETURN.
            4 => {
                let prop = ["formula", "Name", "diseasename", "weight"].choose(rng).unwrap();
                let re = &return_re;
                re.replace(seed, format!("RETURN ${{1}}${{2}}.{prop}").as_str()).into_owned()
            }
            // Every relationship arrow reversed.
            5 => {
                let re = &arrow_re;
                re.replace_all(seed, |c: &regex::Captures| {
                    let (l, r) = if c[1].is_empty() { ("<", "") } else { ("", ">") };
                    format!("{l}-[{}]-{r}", &c[2])
                })
                .into_owned()
            }
            // Valid prefix plus an unsupported clause.
            6 => format!("{seed}{}", UNSUPPORTED_TAILS.choose(rng).unwrap()),
            7 => UNSUPPORTED_WHOLE.choose(rng).unwrap().to_string(),
            // Random characters.
            8 => {
                let len = rng.random_range(0..40);
                (0..len).map(|_| *GARBAGE.choose(rng).unwrap() as char).collect()
            }
            // Prose, keywords out of order, or an unterminated string.
            _ => [
                "RETURN d.DiseaseName MATCH (d:Disease)",
                "MATCH RETURN",
                "MATCH (d:Disease) WHERE d.DiseaseName CONTAINS 'heart RETURN d",
                "DROP ALL",
                "SELECT * FROM substances",
                "MATCH (d:Disease) RETURN",
                "",
            ]
            .choose(rng)
            .unwrap()
            .to_string(),
        };
        out.push(c);
    }
    out
}

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

/// CAS: digits right to left (excluding the check digit) weighted 1, 2, 3...
pub fn cas_oracle(stem: &str) -> u32 {
    stem.chars().rev().enumerate().map(|(i, c)| (i as u32 + 1) * c.to_digit(10).unwrap()).sum::<u32>() % 10
}

/// EC: the six stem digits weighted 1..6, mod 11; 10 means no valid number.
pub fn ec_oracle(stem: &str) -> Option<u32> {
    let r = stem.chars().enumerate().map(|(i, c)| (i as u32 + 1) * c.to_digit(10).unwrap()).sum::<u32>() % 11;
    (r != 10).then_some(r)
}

pub fn generated_cas(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            let head_len = rng.random_range(2..=7);
            let mut head: String = (0..head_len).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect();
            // No leading zero, as registry numbers are printed.
            head.replace_range(0..1, &rng.random_range(1..10).to_string());
            let mid: String = (0..2).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect();
            let check = cas_oracle(&format!("{head}{mid}"));
            format!("{head}-{mid}-{check}")
        })
        .collect()
}

pub fn generated_ec(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    while out.len() < n {
        let stem: String = (0..6).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect();
        if let Some(check) = ec_oracle(&stem) {
            out.push(format!("{}-{}-{check}", &stem[..3], &stem[3..]));
        }
    }
    out
}

/// Every other value of the final check digit.
pub fn check_digit_mutations(id: &str) -> Vec<String> {
    let (stem, check) = id.split_at(id.len() - 1);
    (b'0'..=b'9').map(char::from).filter(|c| c.to_string() != check).map(|c| format!("{stem}{c}")).collect()
}

// ---------------------------------------------------------------------------
// Large random graphs for snapshots
// ---------------------------------------------------------------------------

pub const AWKWARD: [&str; 6] =
    ["plain", "quote \" and \\ backslash", "new\nline", "tab\tand unicode \u{e9}\u{2603}", "", "{\"json\": [1]}"];

/// Between half of and all `max_nodes` nodes with keys and values that need escaping, and up to
/// twice as many edges.
pub fn big_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> PropertyGraph {
    let mut g = PropertyGraph::new();
    let n = rng.random_range(max_nodes / 2..=max_nodes);
    let mut by_label: Vec<Vec<NodeId>> = vec![Vec::new(); Label::ALL.len()];
    for i in 0..n {
        let li = rng.random_range(0..Label::ALL.len());
        let label = Label::ALL[li];
        let mut props = Properties::new();
        props.insert(label.name_property().into(), format!("{} {i}", AWKWARD.choose(rng).unwrap()));
        if rng.random_bool(0.2) {
            props.insert("extra".into(), AWKWARD.choose(rng).unwrap().to_string());
        }
        let id = g.upsert_node(label, &format!("{}#{i}", AWKWARD.choose(rng).unwrap()), props);
        by_label[li].push(id);
    }
    let substances = by_label[0].clone();
    if !substances.is_empty() {
        for _ in 0..rng.random_range(0..=2 * n) {
            let t = *EdgeType::ALL.choose(rng).unwrap();
            let to_label = t.signature().1;
            let targets = &by_label[Label::ALL.iter().position(|l| *l == to_label).unwrap()];
            if let Some(&to) = targets.choose(rng) {
                let mut props = Properties::new();
                if rng.random_bool(0.3) {
                    props.insert("hazard_phrase".into(), AWKWARD.choose(rng).unwrap().to_string());
                }
                g.add_edge(t, *substances.choose(rng).unwrap(), to, props).unwrap();
            }
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Corpus mutations and ingestion invariants
// ---------------------------------------------------------------------------

pub fn fixture_corpus() -> Corpus {
    Corpus::from_dir(&fixtures_dir().join("corpus")).unwrap()
}

fn random_valid_cas(rng: &mut ChaCha8Rng) -> String {
    let head = rng.random_range(50..99_999u32).to_string();
    let mid = format!("{:02}", rng.random_range(0..100u32));
    let check = cas_oracle(&format!("{head}{mid}"));
    format!("{head}-{mid}-{check}")
}

fn cas_in(text: &str) -> Vec<String> {
    let re = regex::Regex::new(r"\b\d{2,7}-\d{2}-\d\b").unwrap();
    re.find_iter(text).map(|m| m.as_str().to_string()).collect()
}

/// One random edit: copy, drop or corrupt a document, add CTD rows for
/// REACH and non-REACH CAS numbers, strip a hazard section, add an organ
/// page, or shuffle CTD rows.
pub fn mutate_corpus(corpus: &mut Corpus, rng: &mut ChaCha8Rng, step: usize) {
    let reach_cas: Vec<String> = corpus.reach.iter().flat_map(|d| cas_in(&d.text)).collect();
    match rng.random_range(0..7) {
        0 => {
            if let Some(doc) = corpus.reach.choose(rng).cloned() {
                corpus.reach.push(Document::new(format!("reach/zz-copy-{step}.html"), doc.text));
            }
        }
        1 => {
            let docs = [&mut corpus.reach, &mut corpus.ctd, &mut corpus.niosh];
            let pick = rng.random_range(0..3);
            let list = docs.into_iter().nth(pick).unwrap();
            if !list.is_empty() {
                let i = rng.random_range(0..list.len());
                list.remove(i);
            }
        }
        2 => {
            let mut rows = String::from("ChemicalID,CAS,DiseaseID,DiseaseName\n");
            for j in 0..rng.random_range(1..15) {
                let cas = if rng.random_bool(0.5) {
                    reach_cas.choose(rng).cloned().unwrap_or_else(|| random_valid_cas(rng))
                } else {
                    random_valid_cas(rng)
                };
                let code = rng.random_range(1..40);
                rows.push_str(&format!("C{j},{cas},MESH:D9{code:05},disease {code}\n"));
            }
            corpus.ctd.push(Document::new(format!("ctd/extra-{step}.csv"), rows));
        }
        3 => {
            let all = corpus.reach.len() + corpus.niosh.len();
            if all > 0 {
                let i = rng.random_range(0..all);
                let doc = if i < corpus.reach.len() {
                    &mut corpus.reach[i]
                } else {
                    &mut corpus.niosh[i - corpus.reach.len()]
                };
                if let Some(original) = cas_in(&doc.text).first().cloned() {
                    let mut bytes = original.clone().into_bytes();
                    let last = bytes.len() - 1;
                    bytes[last] = b'0' + (bytes[last] - b'0' + 1) % 10;
                    let broken = String::from_utf8(bytes).unwrap();
                    doc.text = doc.text.replacen(&original, &broken, 1);
                }
            }
        }
        4 => {
            if !corpus.reach.is_empty() {
                let i = rng.random_range(0..corpus.reach.len());
                let doc = &mut corpus.reach[i];
                let re = regex::Regex::new(r#"(?s)<section class="hazard-classification">.*?</section>"#).unwrap();
                doc.text = re.replace(&doc.text, "").into_owned();
            }
        }
        5 => {
            let cas = reach_cas.choose(rng).cloned().unwrap_or_else(|| random_valid_cas(rng));
            let organs = ["Heart", "LIVER (damage)", "eyes", "Kidneys.", "blood cholinesterase", "skin (absorption"];
            let picked: Vec<&str> = organs.choose_multiple(rng, 3).copied().collect();
            let text = format!(
                "<div class=\"npg-entry\"><h1 class=\"chemical-name\">X</h1><table class=\"identifiers\"><tr><th>CAS No.</th><td>{cas}</td></tr></table>\
                 <table class=\"health\"><tr><th>Target Organs</th><td>{}</td></tr></table></div>",
                picked.join(", ")
            );
            corpus.niosh.push(Document::new(format!("niosh/extra-{step}.html"), text));
        }
        _ => {
            for doc in corpus.ctd.iter_mut().filter(|d| d.origin.ends_with(".csv")) {
                let mut lines: Vec<&str> = doc.text.lines().collect();
                let header = lines.iter().position(|l| !l.starts_with('#')).unwrap_or(0);
                lines[header + 1..].shuffle(rng);
                doc.text = lines.join("\n");
            }
        }
    }
}

/// The fixture corpus with 1 to 4 random edits, seeded.
pub fn mutated_corpus(base: &Corpus, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = base.clone();
    for step in 0..rng.random_range(1..=4) {
        mutate_corpus(&mut corpus, &mut rng, step);
    }
    corpus
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Idempotence, counts equal graph stats, and intersection soundness: every
/// disease edge comes from a REACH substance whose CAS the CTD links pair
/// with that disease, and no CTD-only CAS number becomes a substance.
pub fn check_ingest_invariants(corpus: &Corpus) -> Result<(), String> {
    let (plan, report) = build_from_corpus(corpus);
    let (plan2, report2) = build_from_corpus(corpus);
    ensure!(plan == plan2, "plans differ between runs");
    ensure!(report == report2, "reports differ between runs");

    let graph = PropertyGraph::apply(&plan).map_err(|e| e.to_string())?;
    ensure!(graph.stats() == report.counts, "report counts {:?} != graph stats {:?}", report.counts, graph.stats());

    let parsed = parse_corpus(corpus);
    let reach_keys: BTreeSet<String> = parsed.reach.iter().map(|r| r.key.to_string()).collect();
    let reach_cas: BTreeSet<String> =
        parsed.reach.iter().filter_map(|r| r.cas.as_ref().map(|c| c.to_string())).collect();
    let mut ctd_pairs: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for link in &parsed.ctd {
        if let Some(cas) = &link.cas {
            ctd_pairs.entry(cas.to_string()).or_default().insert(link.disease.to_string());
        }
    }
    for n in graph.nodes().iter().filter(|n| n.label == Label::Substance) {
        ensure!(reach_keys.contains(&n.key), "substance {} not from REACH", n.key);
    }
    for e in graph.edges().iter().filter(|e| e.edge_type == EdgeType::RelatedToDisease) {
        let sub = &graph.nodes()[e.from.0 as usize];
        let disease = &graph.nodes()[e.to.0 as usize];
        let Some(cas) = sub.properties.get("cas") else {
            return Err(format!("disease edge on {} which has no CAS", sub.key));
        };
        ensure!(reach_cas.contains(cas), "disease edge on non-REACH CAS {cas}");
        ensure!(
            ctd_pairs.get(cas).is_some_and(|d| d.contains(&disease.key)),
            "{cas} -> {} has no CTD link",
            disease.key
        );
    }
    for cas in ctd_pairs.keys().filter(|c| !reach_cas.contains(*c)) {
        ensure!(
            !graph.nodes().iter().any(|n| n.label == Label::Substance && n.properties.get("cas") == Some(cas)),
            "non-REACH CAS {cas} became a substance"
        );
    }
    for e in graph.edges().iter().filter(|e| e.edge_type == EdgeType::TargetOrgan) {
        let sub = &graph.nodes()[e.from.0 as usize];
        ensure!(
            sub.properties.get("cas").is_some_and(|c| reach_cas.contains(c)),
            "organ edge on {} without REACH CAS",
            sub.key
        );
    }
    Ok(())
}
