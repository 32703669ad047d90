//! Language-model clients: a scripted stub for hermetic runs and, with the
//! `remote` feature, an HTTP chat-completion client.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::cypher::ast::{CompareOp, Expr, Operand, Projection};
use crate::cypher::{parse, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Query,
    Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub purpose: Purpose,
    /// The user's question as typed, for request matching.
    pub question: String,
    /// Full prompt text sent to a real model.
    pub prompt: String,
    /// Present on summary requests.
    pub summary: Option<SummaryInput>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryInput {
    pub cypher: String,
    pub table: ResultTable,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("language model backend unavailable: {0}")]
    BackendUnavailable(String),
}

/// Must tolerate concurrent calls.
pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError>;
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("stub script is not valid TOML: {0}")]
    Format(#[from] toml::de::Error),
    #[error("stub reply {index}: exactly one of question, contains or pattern is required")]
    Matcher { index: usize },
    #[error("stub reply {index}: bad pattern: {source}")]
    Pattern { index: usize, source: regex::Error },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    fallback: Option<String>,
    #[serde(default)]
    reply: Vec<ScriptEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptEntry {
    #[serde(default = "default_purpose")]
    purpose: Purpose,
    question: Option<String>,
    contains: Option<String>,
    pattern: Option<String>,
    reply: String,
}

fn default_purpose() -> Purpose {
    Purpose::Query
}

#[derive(Debug, Clone)]
enum Matcher {
    /// Whole question, ignoring case and surrounding whitespace.
    Question(String),
    /// Case-insensitive substring of the question.
    Contains(String),
    Pattern(Regex),
}

impl Matcher {
    fn matches(&self, question: &str) -> bool {
        match self {
            Matcher::Question(q) => q == &question.trim().to_lowercase(),
            Matcher::Contains(s) => question.to_lowercase().contains(s),
            Matcher::Pattern(re) => re.is_match(question),
        }
    }
}

#[derive(Debug, Clone)]
struct Rule {
    purpose: Purpose,
    matcher: Matcher,
    reply: String,
}

/// Replies from an ordered table of question matchers; the first match wins.
/// Unmatched query requests get the fallback reply, unmatched summary
/// requests get [`template_summary`].
#[derive(Debug, Clone)]
pub struct ScriptedLlm {
    rules: Vec<Rule>,
    fallback: String,
}

pub const DEFAULT_FALLBACK: &str = "I don't know.";

impl ScriptedLlm {
    pub fn from_toml(text: &str) -> Result<ScriptedLlm, ScriptError> {
        let file: ScriptFile = toml::from_str(text)?;
        let mut rules = Vec::new();
        for (index, e) in file.reply.into_iter().enumerate() {
            let matcher = match (e.question, e.contains, e.pattern) {
                (Some(q), None, None) => Matcher::Question(q.trim().to_lowercase()),
                (None, Some(s), None) => Matcher::Contains(s.to_lowercase()),
                (None, None, Some(p)) => {
                    Matcher::Pattern(Regex::new(&p).map_err(|source| ScriptError::Pattern { index, source })?)
                }
                _ => return Err(ScriptError::Matcher { index }),
            };
            rules.push(Rule { purpose: e.purpose, matcher, reply: e.reply });
        }
        Ok(ScriptedLlm { rules, fallback: file.fallback.unwrap_or_else(|| DEFAULT_FALLBACK.to_string()) })
    }

    /// A stub that gives `reply` to every query request.
    pub fn always(reply: impl Into<String>) -> ScriptedLlm {
        ScriptedLlm { rules: Vec::new(), fallback: reply.into() }
    }
}

impl LlmClient for ScriptedLlm {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let hit = self.rules.iter().find(|r| r.purpose == request.purpose && r.matcher.matches(&request.question));
        Ok(match (hit, request.purpose, &request.summary) {
            (Some(r), _, _) => r.reply.clone(),
            (None, Purpose::Summary, Some(s)) => template_summary(&s.cypher, &s.table),
            (None, _, _) => self.fallback.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("the model reply contains no query")]
pub struct NoQueryInReply;

const CLAUSE_STARTS: &[&str] = &[
    "MATCH", "OPTIONAL", "CREATE", "MERGE", "DELETE", "DETACH", "SET", "REMOVE", "DROP", "CALL", "WITH", "UNWIND",
    "RETURN", "LOAD", "FOREACH",
];

/// The first fenced code block, or else the first run of non-blank lines
/// whose first line starts with a Cypher clause keyword.
pub fn extract_query(reply: &str) -> Result<String, NoQueryInReply> {
    static FENCE: OnceLock<Regex> = OnceLock::new();
    let fence = FENCE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z]*[ \t]*\r?\n(.*?)```").unwrap());
    if let Some(c) = fence.captures(reply) {
        let body = c[1].trim();
        return if body.is_empty() { Err(NoQueryInReply) } else { Ok(body.to_string()) };
    }
    let lines: Vec<&str> = reply.lines().collect();
    let starts_clause = |l: &str| {
        let word: String = l.trim_start().chars().take_while(|c| c.is_ascii_alphabetic()).collect();
        CLAUSE_STARTS.iter().any(|k| k.eq_ignore_ascii_case(&word))
    };
    let start = lines.iter().position(|l| starts_clause(l)).ok_or(NoQueryInReply)?;
    let block: Vec<&str> = lines[start..].iter().take_while(|l| !l.trim().is_empty()).map(|l| l.trim_end()).collect();
    Ok(block.join("\n").trim().to_string())
}

/// Deterministic one-sentence answer listing the returned values.
///
/// A single-column query naming a substance and an organ, either inline or
/// through an equality filter, returning disease names uses the
/// "`<substance>` can potentially impact the `<organ>` by causing the
/// following diseases: ..." form.
pub fn template_summary(cypher: &str, table: &ResultTable) -> String {
    if table.is_empty() {
        return "No matching records were found in the graph.".to_string();
    }
    let list = table
        .rows
        .iter()
        .map(|r| format!("\"{}\"", r.iter().map(|c| c.render()).collect::<Vec<_>>().join(" | ")))
        .collect::<Vec<_>>()
        .join(", ");
    if let Ok(q) = parse(cypher) {
        let named = |label: &str, key: &str| named_entity(&q, label, key);
        let returns_diseases = q.ret.items.len() == 1
            && matches!(&q.ret.items[0].projection, Projection::Property { key, .. } if key == "DiseaseName");
        if let (Some(sub), Some(organ), true) = (named("Substance", "name"), named("Organ", "Organ"), returns_diseases)
        {
            return format!("{sub} can potentially impact the {organ} by causing the following diseases: {list}.");
        }
    }
    format!("The query returned {} result(s): {list}.", table.len())
}

fn named_entity(q: &crate::cypher::Query, label: &str, key: &str) -> Option<String> {
    for n in q.patterns.iter().flat_map(|p| p.nodes()) {
        if n.label.as_deref() != Some(label) {
            continue;
        }
        if let Some((_, v)) = n.props.iter().find(|(k, _)| k == key) {
            return Some(v.clone());
        }
        if let (Some(var), Some(filter)) = (&n.var, &q.filter) {
            if let Some(v) = equality_on(filter, var, key) {
                return Some(v);
            }
        }
    }
    None
}

fn equality_on(e: &Expr, var: &str, key: &str) -> Option<String> {
    match e {
        Expr::And(a, b) => equality_on(a, var, key).or_else(|| equality_on(b, var, key)),
        Expr::Compare { left, op: CompareOp::Eq, right } => match (left, right) {
            (Operand::Property { var: v, key: k }, Operand::Literal(s))
            | (Operand::Literal(s), Operand::Property { var: v, key: k })
                if v == var && k == key =>
            {
                Some(s.clone())
            }
            _ => None,
        },
        _ => None,
    }
}

#[cfg(feature = "remote")]
pub use remote::{RemoteConfig, RemoteEmbedder, RemoteLlm};

#[cfg(feature = "remote")]
mod remote {
    use std::time::Duration;

    use serde_json::{json, Value};

    use super::{LlmClient, LlmError, LlmRequest};
    use crate::rag::embed::{normalize, EmbedError, Embedder};

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct RemoteConfig {
        pub endpoint: String,
        pub model: String,
        /// Sent as a bearer token when present.
        pub api_key: Option<String>,
        pub timeout: Duration,
    }

    fn agent(config: &RemoteConfig) -> ureq::Agent {
        ureq::Agent::config_builder().timeout_global(Some(config.timeout)).build().into()
    }

    fn post(agent: &ureq::Agent, config: &RemoteConfig, body: &Value) -> Result<Value, String> {
        let mut req = agent.post(&config.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        resp.body_mut().read_json::<Value>().map_err(|e| e.to_string())
    }

    /// OpenAI-style chat-completion client.
    pub struct RemoteLlm {
        config: RemoteConfig,
        agent: ureq::Agent,
    }

    impl RemoteLlm {
        pub fn new(config: RemoteConfig) -> RemoteLlm {
            RemoteLlm { agent: agent(&config), config }
        }
    }

    impl LlmClient for RemoteLlm {
        fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
            let body = json!({
                "model": self.config.model,
                "temperature": 0,
                "messages": [{"role": "user", "content": request.prompt}],
            });
            let reply = post(&self.agent, &self.config, &body).map_err(LlmError::BackendUnavailable)?;
            reply["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| LlmError::BackendUnavailable("reply has no choices[0].message.content".into()))
        }
    }

    /// OpenAI-style embeddings client; vectors are re-normalised locally.
    pub struct RemoteEmbedder {
        config: RemoteConfig,
        agent: ureq::Agent,
    }

    impl RemoteEmbedder {
        pub fn new(config: RemoteConfig) -> RemoteEmbedder {
            RemoteEmbedder { agent: agent(&config), config }
        }
    }

    impl Embedder for RemoteEmbedder {
        fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
            if text.trim().is_empty() {
                return Err(EmbedError::EmptyText);
            }
            let body = json!({"model": self.config.model, "input": text});
            let reply = post(&self.agent, &self.config, &body).map_err(EmbedError::BackendUnavailable)?;
            let v: Option<Vec<f64>> =
                reply["data"][0]["embedding"].as_array().and_then(|a| a.iter().map(Value::as_f64).collect());
            match v {
                Some(v) if !v.is_empty() => Ok(normalize(v)),
                _ => Err(EmbedError::BackendUnavailable("reply has no data[0].embedding".into())),
            }
        }
    }
}
