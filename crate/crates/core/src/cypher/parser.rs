use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Clause keywords that are valid Cypher but outside the read-only subset.
const UNSUPPORTED_CLAUSES: &[&str] = &[
    "CREATE", "MERGE", "DELETE", "DETACH", "SET", "REMOVE", "CALL", "UNWIND", "WITH", "OPTIONAL", "ORDER", "SKIP",
    "UNION", "LOAD", "FOREACH", "USE",
];

const AGGREGATES: &[&str] =
    &["count", "collect", "sum", "avg", "min", "max", "stdev", "stdevp", "percentilecont", "percentiledisc"];

pub fn parse(text: &str) -> Result<Query, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, i: 0 };
    let query = p.query()?;
    check_variables(&query, text)?;
    Ok(query)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.i + offset).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::syntax(self.pos(), msg))
    }

    fn unsupported<T>(&self, feature: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Unsupported { position: self.pos(), feature: feature.into() })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.syntax(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn unsupported_clause(&self) -> Option<String> {
        match self.peek() {
            Tok::Ident(s) => {
                UNSUPPORTED_CLAUSES.iter().find(|kw| s.eq_ignore_ascii_case(kw)).map(|kw| format!("{kw} clause"))
            }
            _ => None,
        }
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        if let Some(feature) = self.unsupported_clause() {
            return self.unsupported(feature);
        }
        if !self.eat_kw("MATCH") {
            return self.syntax(format!("expected MATCH, found {}", describe(self.peek())));
        }
        let mut patterns = vec![self.path()?];
        loop {
            if self.eat(&Tok::Comma) || self.eat_kw("MATCH") {
                patterns.push(self.path()?);
            } else {
                break;
            }
        }
        let filter = if self.eat_kw("WHERE") { Some(self.expr()?) } else { None };
        if let Some(feature) = self.unsupported_clause() {
            return self.unsupported(feature);
        }
        if !self.eat_kw("RETURN") {
            return self.syntax(format!("expected RETURN, found {}", describe(self.peek())));
        }
        let ret = self.return_clause()?;
        if let Some(feature) = self.unsupported_clause() {
            return self.unsupported(feature);
        }
        self.eat(&Tok::Semicolon);
        if self.peek() != &Tok::Eof {
            return self.syntax(format!("unexpected {} after RETURN clause", describe(self.peek())));
        }
        Ok(Query { patterns, filter, ret })
    }

    fn variable(&mut self) -> Result<Option<String>, ParseError> {
        match self.peek().clone() {
            Tok::QuotedIdent(s) => {
                self.bump();
                Ok(Some(s))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Some(s))
            }
            _ => Ok(None),
        }
    }

    /// Name after `:` or `.`; keywords are allowed here.
    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::QuotedIdent(s) => {
                self.bump();
                Ok(s)
            }
            other => self.syntax(format!("expected {what}, found {}", describe(&other))),
        }
    }

    fn path(&mut self) -> Result<PathPattern, ParseError> {
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Eq {
            return self.unsupported("named path");
        }
        let start = self.node()?;
        let mut hops = Vec::new();
        while matches!(self.peek(), Tok::Minus | Tok::Lt) {
            let rel = self.rel()?;
            let node = self.node()?;
            hops.push((rel, node));
        }
        Ok(PathPattern { start, hops })
    }

    fn node(&mut self) -> Result<NodePattern, ParseError> {
        self.expect(&Tok::LParen, "'(' to start a node pattern")?;
        let var = self.variable()?;
        let mut label = None;
        if self.eat(&Tok::Colon) {
            label = Some(self.name("label")?);
            if matches!(self.peek(), Tok::Colon | Tok::Pipe) {
                return self.unsupported("multiple labels");
            }
        }
        let props = self.props()?;
        if self.is_kw("WHERE") {
            return self.unsupported("inline WHERE in pattern");
        }
        self.expect(&Tok::RParen, "')' to close the node pattern")?;
        Ok(NodePattern { var, label, props })
    }

    fn rel(&mut self) -> Result<RelPattern, ParseError> {
        let left = self.eat(&Tok::Lt);
        self.expect(&Tok::Minus, "'-' in relationship pattern")?;
        let mut var = None;
        let mut rel_type = None;
        let mut props = Vec::new();
        if self.eat(&Tok::LBracket) {
            var = self.variable()?;
            if self.eat(&Tok::Colon) {
                rel_type = Some(self.name("relationship type")?);
                if matches!(self.peek(), Tok::Pipe | Tok::Colon) {
                    return self.unsupported("relationship type alternatives");
                }
            }
            if self.peek() == &Tok::Star {
                return self.unsupported("variable-length relationship");
            }
            props = self.props()?;
            self.expect(&Tok::RBracket, "']' to close the relationship pattern")?;
        }
        self.expect(&Tok::Minus, "'-' in relationship pattern")?;
        let right = self.eat(&Tok::Gt);
        let direction = match (left, right) {
            (true, false) => RelDirection::Left,
            (false, true) => RelDirection::Right,
            _ => RelDirection::Either,
        };
        Ok(RelPattern { var, rel_type, direction, props })
    }

    fn props(&mut self) -> Result<Vec<(String, String)>, ParseError> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::Param(_)) {
            return self.unsupported("parameters");
        }
        if !self.eat(&Tok::LBrace) {
            return Ok(out);
        }
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            let key = self.name("property key")?;
            self.expect(&Tok::Colon, "':' after property key")?;
            let value = match self.peek().clone() {
                Tok::Str(s) => {
                    self.bump();
                    s
                }
                Tok::Int(_) | Tok::Float(_) => return self.unsupported("non-string property value"),
                Tok::Param(_) => return self.unsupported("parameters"),
                Tok::Ident(s) if ["true", "false", "null"].contains(&s.to_ascii_lowercase().as_str()) => {
                    return self.unsupported("non-string property value")
                }
                other => return self.syntax(format!("expected string literal, found {}", describe(&other))),
            };
            out.push((key, value));
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(&Tok::RBrace, "'}' to close the property map")?;
            return Ok(out);
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.and_expr()?;
        loop {
            if self.eat_kw("OR") {
                let right = self.and_expr()?;
                left = Expr::Or(Box::new(left), Box::new(right));
            } else if self.is_kw("XOR") {
                return self.unsupported("XOR");
            } else {
                return Ok(left);
            }
        }
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.not_expr()?;
        while self.eat_kw("AND") {
            let right = self.not_expr()?;
            left = Expr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        if self.eat(&Tok::LParen) {
            let inner = self.expr()?;
            self.expect(&Tok::RParen, "')' to close the expression")?;
            return Ok(inner);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let left = self.operand()?;
        let op = match self.peek() {
            Tok::Eq => CompareOp::Eq,
            Tok::RegexEq => CompareOp::Regex,
            Tok::Ident(s) if s.eq_ignore_ascii_case("CONTAINS") => CompareOp::Contains,
            Tok::Neq | Tok::Lt | Tok::Gt | Tok::Le | Tok::Ge => {
                return self.unsupported("ordering or inequality operator")
            }
            Tok::Ident(s) if ["STARTS", "ENDS", "IN", "IS"].iter().any(|kw| s.eq_ignore_ascii_case(kw)) => {
                let kw = s.to_ascii_uppercase();
                return self.unsupported(format!("{kw} operator"));
            }
            Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash | Tok::Percent | Tok::Caret => {
                return self.unsupported("arithmetic")
            }
            other => return self.syntax(format!("expected comparison operator, found {}", describe(other))),
        };
        self.bump();
        let right = self.operand()?;
        if op == CompareOp::Regex && !matches!(right, Operand::Literal(_)) {
            return self.unsupported("non-literal regular expression");
        }
        Ok(Expr::Compare { left, op, right })
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Operand::Literal(s))
            }
            Tok::Int(_) | Tok::Float(_) => self.unsupported("numeric literal"),
            Tok::Param(_) => self.unsupported("parameters"),
            Tok::LBracket => self.unsupported("list expression"),
            Tok::LBrace => self.unsupported("map expression"),
            Tok::Ident(s) if self.peek_at(1) == &Tok::LParen => {
                let lower = s.to_ascii_lowercase();
                if AGGREGATES.contains(&lower.as_str()) {
                    return self.unsupported(format!("aggregation function {s}"));
                }
                let wrap: fn(Box<Operand>) -> Operand = match lower.as_str() {
                    "tolower" => Operand::ToLower,
                    "toupper" => Operand::ToUpper,
                    _ => return self.unsupported(format!("function {s}")),
                };
                self.bump();
                self.bump();
                let inner = self.operand()?;
                self.expect(&Tok::RParen, "')' to close the function call")?;
                Ok(wrap(Box::new(inner)))
            }
            Tok::Ident(s) if ["null", "true", "false"].contains(&s.to_ascii_lowercase().as_str()) => {
                self.unsupported(format!("{} literal", s.to_ascii_lowercase()))
            }
            Tok::Ident(s) if is_keyword(&s) => self.syntax(format!("unexpected keyword {s}")),
            Tok::Ident(var) | Tok::QuotedIdent(var) => {
                self.bump();
                if !self.eat(&Tok::Dot) {
                    return self.unsupported("comparison on a whole variable");
                }
                let key = self.name("property key")?;
                Ok(Operand::Property { var, key })
            }
            other => self.syntax(format!("expected operand, found {}", describe(&other))),
        }
    }

    fn return_clause(&mut self) -> Result<ReturnClause, ParseError> {
        let distinct = self.eat_kw("DISTINCT");
        let mut items = Vec::new();
        loop {
            if self.peek() == &Tok::Star {
                return self.unsupported("RETURN *");
            }
            let var = match self.peek().clone() {
                Tok::Ident(s) if self.peek_at(1) == &Tok::LParen => {
                    let lower = s.to_ascii_lowercase();
                    if AGGREGATES.contains(&lower.as_str()) {
                        return self.unsupported(format!("aggregation function {s}"));
                    }
                    return self.unsupported(format!("function {s} in RETURN"));
                }
                Tok::Ident(s) if !is_keyword(&s) => s,
                Tok::QuotedIdent(s) => s,
                Tok::Str(_) | Tok::Int(_) | Tok::Float(_) => return self.unsupported("literal in RETURN"),
                other => return self.syntax(format!("expected return item, found {}", describe(&other))),
            };
            self.bump();
            let projection = if self.eat(&Tok::Dot) {
                let key = self.name("property key")?;
                Projection::Property { var, key }
            } else {
                Projection::Variable(var)
            };
            let alias = if self.eat_kw("AS") {
                match self.variable()? {
                    Some(a) => Some(a),
                    None => return self.syntax("expected alias after AS"),
                }
            } else {
                None
            };
            items.push(ReturnItem { projection, alias });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let limit = if self.eat_kw("LIMIT") {
            match self.peek().clone() {
                Tok::Int(n) => {
                    self.bump();
                    Some(n.parse::<u64>().map_err(|_| ParseError::syntax(self.pos(), "LIMIT out of range"))?)
                }
                Tok::Param(_) => return self.unsupported("parameters"),
                other => return self.syntax(format!("expected integer after LIMIT, found {}", describe(&other))),
            }
        } else {
            None
        };
        Ok(ReturnClause { distinct, items, limit })
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) | Tok::QuotedIdent(s) => format!("'{s}'"),
        Tok::Str(s) => format!("string '{s}'"),
        Tok::Int(s) | Tok::Float(s) => format!("number {s}"),
        Tok::Param(s) => format!("parameter ${s}"),
        Tok::Eof => "end of input".to_string(),
        other => format!("{other:?}"),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Node,
    Rel,
}

fn check_variables(q: &Query, text: &str) -> Result<(), ParseError> {
    let mut kinds: HashMap<&str, VarKind> = HashMap::new();
    let err = |msg: String| ParseError::syntax(text.chars().count(), msg);
    for p in &q.patterns {
        for n in p.nodes() {
            if let Some(v) = &n.var {
                if kinds.insert(v, VarKind::Node) == Some(VarKind::Rel) {
                    return Err(err(format!("variable {v} used for both a node and a relationship")));
                }
            }
        }
        for r in p.rels() {
            if let Some(v) = &r.var {
                if kinds.insert(v, VarKind::Rel).is_some() {
                    return Err(err(format!("variable {v} bound more than once")));
                }
            }
        }
    }
    let check = |v: &str| {
        if kinds.contains_key(v) {
            Ok(())
        } else {
            Err(err(format!("variable {v} is not bound in MATCH")))
        }
    };
    if let Some(e) = &q.filter {
        let mut vars = Vec::new();
        expr_vars(e, &mut vars);
        for v in vars {
            check(v)?;
        }
    }
    for item in &q.ret.items {
        match &item.projection {
            Projection::Variable(v) | Projection::Property { var: v, .. } => check(v)?,
        }
    }
    Ok(())
}

pub(crate) fn expr_vars<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
    match e {
        Expr::Or(a, b) | Expr::And(a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Expr::Not(a) => expr_vars(a, out),
        Expr::Compare { left, right, .. } => {
            operand_vars(left, out);
            operand_vars(right, out);
        }
    }
}

fn operand_vars<'a>(o: &'a Operand, out: &mut Vec<&'a str>) {
    match o {
        Operand::Property { var, .. } => out.push(var),
        Operand::ToLower(i) | Operand::ToUpper(i) => operand_vars(i, out),
        Operand::Literal(_) => {}
    }
}
