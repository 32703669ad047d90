//! Schema checks for parsed queries: labels, relationship types, property
//! keys and relationship directions must all exist in the graph schema.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::ast::*;
use crate::graph::{GraphSchema, Label};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "code")]
pub enum Diagnostic {
    UnknownLabel {
        label: String,
    },
    UnknownEdgeType {
        edge_type: String,
    },
    UnknownProperty {
        variable: String,
        key: String,
        owner: String,
    },
    /// The relationship exists but only in the opposite direction.
    DirectionMismatch {
        edge_type: String,
        from: String,
        to: String,
    },
    /// Neither direction of the relationship connects these labels.
    EndpointMismatch {
        edge_type: String,
        from: String,
        to: String,
    },
    /// A node variable is given two different labels.
    ConflictingLabels {
        variable: String,
        labels: Vec<String>,
    },
    InvalidRegex {
        pattern: String,
        message: String,
    },
}

impl Diagnostic {
    pub fn code(&self) -> &'static str {
        match self {
            Diagnostic::UnknownLabel { .. } => "UnknownLabel",
            Diagnostic::UnknownEdgeType { .. } => "UnknownEdgeType",
            Diagnostic::UnknownProperty { .. } => "UnknownProperty",
            Diagnostic::DirectionMismatch { .. } => "DirectionMismatch",
            Diagnostic::EndpointMismatch { .. } => "EndpointMismatch",
            Diagnostic::ConflictingLabels { .. } => "ConflictingLabels",
            Diagnostic::InvalidRegex { .. } => "InvalidRegex",
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnknownLabel { label } => write!(f, "unknown node label {label}"),
            Diagnostic::UnknownEdgeType { edge_type } => write!(f, "unknown relationship type {edge_type}"),
            Diagnostic::UnknownProperty { variable, key, owner } => {
                write!(f, "{owner} has no property {key} (referenced through {variable})")
            }
            Diagnostic::DirectionMismatch { edge_type, from, to } => {
                write!(f, "{edge_type} does not go from {from} to {to}; the relationship points the other way")
            }
            Diagnostic::EndpointMismatch { edge_type, from, to } => {
                write!(f, "{edge_type} never connects {from} and {to}")
            }
            Diagnostic::ConflictingLabels { variable, labels } => {
                write!(f, "variable {variable} has conflicting labels {}", labels.join(", "))
            }
            Diagnostic::InvalidRegex { pattern, message } => {
                write!(f, "invalid regular expression {pattern:?}: {message}")
            }
        }
    }
}

/// Compiles the full-match form of a Cypher regular expression.
pub(crate) fn compile_regex(pattern: &str) -> Result<regex::Regex, regex::Error> {
    regex::Regex::new(&format!("^(?:{pattern})$"))
}

enum Binding {
    Node(Option<String>),
    Rel(Option<String>),
}

/// Returns every schema problem in `query`; an empty list means it is valid.
pub fn validate(query: &Query, schema: &GraphSchema) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let push = |d: Diagnostic, diags: &mut Vec<Diagnostic>| {
        if !diags.contains(&d) {
            diags.push(d);
        }
    };

    // Labels per node variable, and types per relationship variable.
    let mut node_labels: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let mut rel_types: HashMap<&str, Option<&str>> = HashMap::new();
    for p in &query.patterns {
        for n in p.nodes() {
            if let Some(l) = &n.label {
                if schema.node(l).is_none() {
                    push(Diagnostic::UnknownLabel { label: l.clone() }, &mut diags);
                }
            }
            if let Some(v) = &n.var {
                let entry = node_labels.entry(v).or_default();
                if let Some(l) = &n.label {
                    entry.insert(l);
                }
            }
        }
        for r in p.rels() {
            if let Some(t) = &r.rel_type {
                if schema.edge(t).is_none() {
                    push(Diagnostic::UnknownEdgeType { edge_type: t.clone() }, &mut diags);
                }
            }
            if let Some(v) = &r.var {
                rel_types.insert(v, r.rel_type.as_deref());
            }
        }
    }
    for (var, labels) in &node_labels {
        if labels.len() > 1 {
            push(
                Diagnostic::ConflictingLabels {
                    variable: var.to_string(),
                    labels: labels.iter().map(|s| s.to_string()).collect(),
                },
                &mut diags,
            );
        }
    }

    // Effective label of each node occurrence: its own, else its variable's.
    let effective = |n: &NodePattern| -> Option<String> {
        n.label.clone().or_else(|| {
            n.var
                .as_deref()
                .and_then(|v| node_labels.get(v))
                .filter(|ls| ls.len() == 1)
                .and_then(|ls| ls.iter().next().map(|s| s.to_string()))
        })
    };

    let bindings = |var: &str| -> Binding {
        if let Some(t) = rel_types.get(var) {
            Binding::Rel(t.map(str::to_string))
        } else {
            let label =
                node_labels.get(var).filter(|ls| ls.len() == 1).and_then(|ls| ls.iter().next().map(|s| s.to_string()));
            Binding::Node(label)
        }
    };

    let check_node_key = |label: Option<&str>, var: &str, key: &str, diags: &mut Vec<Diagnostic>| {
        let known = match label {
            Some(l) => match schema.node(l) {
                Some(ns) => ns.properties.contains(key),
                None => return,
            },
            None => schema.nodes.iter().any(|ns| ns.properties.contains(key)),
        };
        if !known {
            let d = Diagnostic::UnknownProperty {
                variable: var.to_string(),
                key: key.to_string(),
                owner: label.unwrap_or("any node").to_string(),
            };
            if !diags.contains(&d) {
                diags.push(d);
            }
        }
    };
    let check_rel_key = |rel_type: Option<&str>, var: &str, key: &str, diags: &mut Vec<Diagnostic>| {
        let known = match rel_type {
            Some(t) => match schema.edge(t) {
                Some(es) => es.properties.contains(key),
                None => return,
            },
            None => schema.edges.iter().any(|es| es.properties.contains(key)),
        };
        if !known {
            let d = Diagnostic::UnknownProperty {
                variable: var.to_string(),
                key: key.to_string(),
                owner: rel_type.unwrap_or("any relationship").to_string(),
            };
            if !diags.contains(&d) {
                diags.push(d);
            }
        }
    };

    for p in &query.patterns {
        for n in p.nodes() {
            let label = effective(n);
            for (k, _) in &n.props {
                check_node_key(label.as_deref(), n.var.as_deref().unwrap_or("_"), k, &mut diags);
            }
        }
        let mut left = &p.start;
        for (r, right) in &p.hops {
            for (k, _) in &r.props {
                check_rel_key(r.rel_type.as_deref(), r.var.as_deref().unwrap_or("_"), k, &mut diags);
            }
            if let Some(d) = direction_check(schema, r, effective(left), effective(right)) {
                push(d, &mut diags);
            }
            left = right;
        }
    }

    let mut props: Vec<(&str, &str)> = Vec::new();
    if let Some(e) = &query.filter {
        filter_properties(e, &mut props);
        regex_literals(e, &mut diags);
    }
    for item in &query.ret.items {
        if let Projection::Property { var, key } = &item.projection {
            props.push((var, key));
        }
    }
    for (var, key) in props {
        match bindings(var) {
            Binding::Node(label) => check_node_key(label.as_deref(), var, key, &mut diags),
            Binding::Rel(t) => check_rel_key(t.as_deref(), var, key, &mut diags),
        }
    }
    diags
}

fn direction_check(
    schema: &GraphSchema,
    rel: &RelPattern,
    left: Option<String>,
    right: Option<String>,
) -> Option<Diagnostic> {
    let es = schema.edge(rel.rel_type.as_deref()?)?;
    let (from, to) = match rel.direction {
        RelDirection::Right => (left, right),
        RelDirection::Left => (right, left),
        RelDirection::Either => {
            let fits = |a: &Option<String>, b: &Option<String>| {
                a.as_deref().is_none_or(|l| l == es.from.as_str()) && b.as_deref().is_none_or(|l| l == es.to.as_str())
            };
            if fits(&left, &right) || fits(&right, &left) {
                return None;
            }
            return Some(Diagnostic::EndpointMismatch {
                edge_type: es.edge_type.to_string(),
                from: left.unwrap_or_else(|| "any".into()),
                to: right.unwrap_or_else(|| "any".into()),
            });
        }
    };
    // Unknown labels are reported separately.
    let known = |l: &Option<String>| l.as_deref().is_none_or(|l| l.parse::<Label>().is_ok());
    if !known(&from) || !known(&to) {
        return None;
    }
    let matches = |l: &Option<String>, want: Label| l.as_deref().is_none_or(|l| l == want.as_str());
    if matches(&from, es.from) && matches(&to, es.to) {
        return None;
    }
    let name = |l: Option<String>| l.unwrap_or_else(|| "any".into());
    if matches(&from, es.to) && matches(&to, es.from) {
        Some(Diagnostic::DirectionMismatch { edge_type: es.edge_type.to_string(), from: name(from), to: name(to) })
    } else {
        Some(Diagnostic::EndpointMismatch { edge_type: es.edge_type.to_string(), from: name(from), to: name(to) })
    }
}

fn filter_properties<'a>(e: &'a Expr, out: &mut Vec<(&'a str, &'a str)>) {
    fn operand<'a>(o: &'a Operand, out: &mut Vec<(&'a str, &'a str)>) {
        match o {
            Operand::Property { var, key } => out.push((var, key)),
            Operand::ToLower(i) | Operand::ToUpper(i) => operand(i, out),
            Operand::Literal(_) => {}
        }
    }
    match e {
        Expr::Or(a, b) | Expr::And(a, b) => {
            filter_properties(a, out);
            filter_properties(b, out);
        }
        Expr::Not(a) => filter_properties(a, out),
        Expr::Compare { left, right, .. } => {
            operand(left, out);
            operand(right, out);
        }
    }
}

fn regex_literals(e: &Expr, diags: &mut Vec<Diagnostic>) {
    match e {
        Expr::Or(a, b) | Expr::And(a, b) => {
            regex_literals(a, diags);
            regex_literals(b, diags);
        }
        Expr::Not(a) => regex_literals(a, diags),
        Expr::Compare { op: CompareOp::Regex, right: Operand::Literal(pattern), .. } => {
            if let Err(err) = compile_regex(pattern) {
                diags.push(Diagnostic::InvalidRegex { pattern: pattern.clone(), message: err.to_string() });
            }
        }
        Expr::Compare { .. } => {}
    }
}
