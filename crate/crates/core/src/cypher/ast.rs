//! Parsed form of a read-only Cypher-subset query.
//!
//! `Display` prints a canonical query text that parses back to an equal AST.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub patterns: Vec<PathPattern>,
    pub filter: Option<Expr>,
    pub ret: ReturnClause,
}

/// A linear path: `start (-rel- node)*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPattern {
    pub start: NodePattern,
    pub hops: Vec<(RelPattern, NodePattern)>,
}

impl PathPattern {
    pub fn nodes(&self) -> impl Iterator<Item = &NodePattern> {
        std::iter::once(&self.start).chain(self.hops.iter().map(|(_, n)| n))
    }

    pub fn rels(&self) -> impl Iterator<Item = &RelPattern> {
        self.hops.iter().map(|(r, _)| r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePattern {
    pub var: Option<String>,
    pub label: Option<String>,
    pub props: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelDirection {
    /// `-[]->`
    Right,
    /// `<-[]-`
    Left,
    /// `-[]-`
    Either,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelPattern {
    pub var: Option<String>,
    pub rel_type: Option<String>,
    pub direction: RelDirection,
    pub props: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Compare { left: Operand, op: CompareOp, right: Operand },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Contains,
    /// `=~`, full-string regular expression match.
    Regex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Property { var: String, key: String },
    ToLower(Box<Operand>),
    ToUpper(Box<Operand>),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnClause {
    pub distinct: bool,
    pub items: Vec<ReturnItem>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnItem {
    pub projection: Projection,
    pub alias: Option<String>,
}

impl ReturnItem {
    /// Column name: the alias, else the projection text.
    pub fn column_name(&self) -> String {
        self.alias.clone().unwrap_or_else(|| self.projection.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    Variable(String),
    Property { var: String, key: String },
}

impl Query {
    /// Every variable bound by the MATCH patterns, first occurrence order.
    pub fn bound_variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.patterns {
            for n in p.nodes() {
                if let Some(v) = &n.var {
                    if !out.contains(&v.as_str()) {
                        out.push(v);
                    }
                }
            }
            for r in p.rels() {
                if let Some(v) = &r.var {
                    if !out.contains(&v.as_str()) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    pub fn hop_count(&self) -> usize {
        self.patterns.iter().map(|p| p.hops.len()).sum()
    }
}

const KEYWORDS: &[&str] = &[
    "match", "where", "return", "distinct", "limit", "and", "or", "not", "contains", "as", "xor", "starts", "ends",
    "with", "is", "in", "null", "true", "false", "order", "by", "skip", "create", "merge", "delete", "detach", "set",
    "remove", "call", "unwind", "optional", "union", "load", "foreach", "case", "when", "then", "else", "end",
    "exists", "tolower", "toupper",
];

pub(crate) fn is_keyword(ident: &str) -> bool {
    KEYWORDS.contains(&ident.to_ascii_lowercase().as_str())
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !is_keyword(s)
}

pub(crate) struct Ident<'a>(pub &'a str);

impl fmt::Display for Ident<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_plain_ident(self.0) {
            f.write_str(self.0)
        } else {
            write!(f, "`{}`", self.0.replace('`', "``"))
        }
    }
}

pub(crate) struct StrLit<'a>(pub &'a str);

impl fmt::Display for StrLit<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("'")?;
        for c in self.0.chars() {
            match c {
                '\\' => f.write_str("\\\\")?,
                '\'' => f.write_str("\\'")?,
                '\n' => f.write_str("\\n")?,
                '\t' => f.write_str("\\t")?,
                '\r' => f.write_str("\\r")?,
                c if c.is_control() => write!(f, "\\u{:04x}", c as u32)?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("'")
    }
}

fn write_props(f: &mut fmt::Formatter<'_>, props: &[(String, String)]) -> fmt::Result {
    if props.is_empty() {
        return Ok(());
    }
    f.write_str(" {")?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}: {}", Ident(k), StrLit(v))?;
    }
    f.write_str("}")
}

impl fmt::Display for NodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some(v) = &self.var {
            write!(f, "{}", Ident(v))?;
        }
        if let Some(l) = &self.label {
            write!(f, ":{}", Ident(l))?;
        }
        write_props(f, &self.props)?;
        f.write_str(")")
    }
}

impl fmt::Display for RelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.direction == RelDirection::Left { "<-[" } else { "-[" })?;
        if let Some(v) = &self.var {
            write!(f, "{}", Ident(v))?;
        }
        if let Some(t) = &self.rel_type {
            write!(f, ":{}", Ident(t))?;
        }
        write_props(f, &self.props)?;
        f.write_str(if self.direction == RelDirection::Right { "]->" } else { "]-" })
    }
}

impl fmt::Display for PathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (r, n) in &self.hops {
            write!(f, "{r}{n}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Property { var, key } => write!(f, "{}.{}", Ident(var), Ident(key)),
            Operand::ToLower(inner) => write!(f, "toLower({inner})"),
            Operand::ToUpper(inner) => write!(f, "toUpper({inner})"),
            Operand::Literal(s) => write!(f, "{}", StrLit(s)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Or(a, b) => write!(f, "({a} OR {b})"),
            Expr::And(a, b) => write!(f, "({a} AND {b})"),
            Expr::Not(e) => write!(f, "NOT {e}"),
            Expr::Compare { left, op, right } => {
                let op = match op {
                    CompareOp::Eq => "=",
                    CompareOp::Contains => "CONTAINS",
                    CompareOp::Regex => "=~",
                };
                write!(f, "{left} {op} {right}")
            }
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::Variable(v) => write!(f, "{}", Ident(v)),
            Projection::Property { var, key } => write!(f, "{}.{}", Ident(var), Ident(key)),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MATCH ")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        if let Some(e) = &self.filter {
            write!(f, " WHERE {e}")?;
        }
        f.write_str(" RETURN ")?;
        if self.ret.distinct {
            f.write_str("DISTINCT ")?;
        }
        for (i, item) in self.ret.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", item.projection)?;
            if let Some(a) = &item.alias {
                write!(f, " AS {}", Ident(a))?;
            }
        }
        if let Some(n) = self.ret.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}
