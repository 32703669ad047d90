//! Question answering over the graph.
//!
//! A turn runs embed, select, prompt, generate, validate, execute and
//! summarize in that order. A candidate query only reaches the executor as a
//! [`ValidatedQuery`], which can only be obtained from [`validate_or_refuse`].
//! Every step is recorded in the response trace.

pub mod embed;
pub mod exemplars;
pub mod llm;
pub mod prompt;

use serde::{Deserialize, Serialize};

pub use embed::{cosine, EmbedError, Embedder, HashingEmbedder, HASH_DIMENSIONS};
pub use exemplars::{rank, select_few_shots, Exemplar, ExemplarError, ExemplarStore};
pub use llm::{
    extract_query, template_summary, LlmClient, LlmError, LlmRequest, NoQueryInReply, Purpose, ScriptedLlm,
    SummaryInput,
};
#[cfg(feature = "remote")]
pub use llm::{RemoteConfig, RemoteEmbedder, RemoteLlm};
pub use prompt::{build_prompt, PromptContext};

use crate::cypher::{
    execute_with, parse, validate, Diagnostic, ExecError, ExecOptions, ParseError, Query, ResultTable,
};
use crate::graph::{GraphSchema, PropertyGraph};

/// The only answer a refused turn gives.
pub const REFUSAL: &str = "I don't know.";

pub const DEFAULT_K: usize = 4;

/// A query that parsed and produced no schema diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedQuery {
    text: String,
    query: Query,
}

impl ValidatedQuery {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    pub fn execute(&self, graph: &PropertyGraph, options: ExecOptions) -> Result<ResultTable, ExecError> {
        execute_with(&self.query, graph, options)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefusalReason {
    NoQuery,
    Parse(ParseError),
    Schema(Vec<Diagnostic>),
}

impl std::fmt::Display for RefusalReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RefusalReason::NoQuery => f.write_str("the model reply contains no query"),
            RefusalReason::Parse(e) => e.fmt(f),
            RefusalReason::Schema(d) => f.write_str(&d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refusal {
    pub reason: RefusalReason,
}

impl Refusal {
    pub fn answer(&self) -> &'static str {
        REFUSAL
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid(ValidatedQuery),
    Refused(Refusal),
}

pub fn validate_or_refuse(candidate: &str, schema: &GraphSchema) -> Verdict {
    let text = candidate.trim();
    let query = match parse(text) {
        Ok(q) => q,
        Err(e) => return Verdict::Refused(Refusal { reason: RefusalReason::Parse(e) }),
    };
    let diags = validate(&query, schema);
    if !diags.is_empty() {
        return Verdict::Refused(Refusal { reason: RefusalReason::Schema(diags) });
    }
    Verdict::Valid(ValidatedQuery { text: text.to_string(), query })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error(transparent)]
    NoQuery(#[from] NoQueryInReply),
}

pub fn generate_query(context: &PromptContext, llm: &dyn LlmClient) -> Result<String, GenerateError> {
    let reply = llm.complete(&LlmRequest {
        purpose: Purpose::Query,
        question: context.question.clone(),
        prompt: context.render(),
        summary: None,
    })?;
    Ok(extract_query(&reply)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Embed,
    Select,
    Prompt,
    Generate,
    Validate,
    Refuse,
    Execute,
    Summarize,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: Step,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnErrorCode {
    InvalidInput,
    BackendUnavailable,
    ExecutionFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnError {
    pub code: TurnErrorCode,
    pub message: String,
}

/// Outcome of one turn. `error` marks a failed turn, which is distinct from a
/// refusal. A refused turn never executed anything; an answered turn carries
/// the validated query text and its rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatResponse {
    pub answer: String,
    pub cypher: Option<String>,
    pub rows: Option<ResultTable>,
    pub refused: bool,
    pub error: Option<TurnError>,
    pub trace: Vec<TraceStep>,
}

impl ChatResponse {
    pub fn executed(&self) -> bool {
        self.trace.iter().any(|t| t.step == Step::Execute)
    }

    /// Stable JSON rendering.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chat responses always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurnOptions {
    pub k: usize,
    pub exec: ExecOptions,
}

impl Default for TurnOptions {
    fn default() -> Self {
        TurnOptions { k: DEFAULT_K, exec: ExecOptions::default() }
    }
}

struct Turn {
    trace: Vec<TraceStep>,
}

impl Turn {
    fn log(&mut self, step: Step, detail: impl Into<String>) {
        self.trace.push(TraceStep { step, detail: detail.into() });
    }

    fn fail(mut self, code: TurnErrorCode, message: String, validated: Option<(String, ResultTable)>) -> ChatResponse {
        self.log(Step::Fail, message.clone());
        let (cypher, rows) = validated.map_or((None, None), |(c, r)| (Some(c), Some(r)));
        ChatResponse {
            answer: String::new(),
            cypher,
            rows,
            refused: false,
            error: Some(TurnError { code, message }),
            trace: self.trace,
        }
    }

    fn refuse(mut self, reason: &RefusalReason) -> ChatResponse {
        self.log(Step::Refuse, reason.to_string());
        ChatResponse {
            answer: REFUSAL.to_string(),
            cypher: None,
            rows: None,
            refused: true,
            error: None,
            trace: self.trace,
        }
    }
}

pub fn answer_turn(question: &str, graph: &PropertyGraph, store: &ExemplarStore, llm: &dyn LlmClient) -> ChatResponse {
    answer_turn_with(question, graph, store, llm, TurnOptions::default())
}

pub fn answer_turn_with(
    question: &str,
    graph: &PropertyGraph,
    store: &ExemplarStore,
    llm: &dyn LlmClient,
    options: TurnOptions,
) -> ChatResponse {
    let mut turn = Turn { trace: Vec::new() };
    let question = question.trim();
    if question.is_empty() {
        return turn.fail(TurnErrorCode::InvalidInput, "the question is empty".into(), None);
    }

    let embedding = match store.embed(question) {
        Ok(v) => v,
        Err(e) => return turn.fail(TurnErrorCode::BackendUnavailable, e.to_string(), None),
    };
    turn.log(Step::Embed, format!("{} dimensions", embedding.len()));

    let selected: Vec<&Exemplar> = if store.is_empty() {
        Vec::new()
    } else {
        match rank(&embedding, store, options.k.max(1)) {
            Ok(r) => r.into_iter().map(|(e, _)| e).collect(),
            Err(e) => return turn.fail(TurnErrorCode::InvalidInput, e.to_string(), None),
        }
    };
    turn.log(Step::Select, selected.iter().map(|e| e.id.as_str()).collect::<Vec<_>>().join(","));

    let schema = graph.schema();
    let context = build_prompt(question, &schema.render(), &selected);
    turn.log(Step::Prompt, format!("{} bytes", context.render().len()));

    let candidate = match generate_query(&context, llm) {
        Ok(c) => c,
        Err(GenerateError::Backend(e)) => return turn.fail(TurnErrorCode::BackendUnavailable, e.to_string(), None),
        Err(GenerateError::NoQuery(_)) => {
            turn.log(Step::Generate, "no query in reply");
            return turn.refuse(&RefusalReason::NoQuery);
        }
    };
    turn.log(Step::Generate, candidate.clone());

    let validated = match validate_or_refuse(&candidate, &schema) {
        Verdict::Valid(v) => v,
        Verdict::Refused(r) => {
            turn.log(Step::Validate, "rejected");
            return turn.refuse(&r.reason);
        }
    };
    turn.log(Step::Validate, "ok");

    let table = match validated.execute(graph, options.exec) {
        Ok(t) => t,
        Err(e) => return turn.fail(TurnErrorCode::ExecutionFailed, e.to_string(), None),
    };
    turn.log(Step::Execute, format!("{} row(s)", table.len()));

    let request = LlmRequest {
        purpose: Purpose::Summary,
        question: question.to_string(),
        prompt: prompt::summary_prompt(question, validated.text(), &table),
        summary: Some(SummaryInput { cypher: validated.text().to_string(), table: table.clone() }),
    };
    let answer = match llm.complete(&request) {
        Ok(a) => a.trim().to_string(),
        Err(e) => {
            return turn.fail(
                TurnErrorCode::BackendUnavailable,
                e.to_string(),
                Some((validated.text().to_string(), table)),
            )
        }
    };
    turn.log(Step::Summarize, format!("{} bytes", answer.len()));

    ChatResponse {
        answer,
        cypher: Some(validated.text().to_string()),
        rows: Some(table),
        refused: false,
        error: None,
        trace: turn.trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cypher::ParseError;

    #[test]
    fn verdicts() {
        let schema = GraphSchema::static_schema();
        assert!(matches!(validate_or_refuse("MATCH (d:Disease) RETURN d.DiseaseName", &schema), Verdict::Valid(_)));
        assert!(matches!(
            validate_or_refuse("DROP ALL", &schema),
            Verdict::Refused(Refusal { reason: RefusalReason::Parse(ParseError::Syntax { .. }) })
        ));
        assert!(matches!(
            validate_or_refuse("MATCH (c:Chemical) RETURN c", &schema),
            Verdict::Refused(Refusal { reason: RefusalReason::Schema(_) })
        ));
        assert!(matches!(
            validate_or_refuse("CREATE (n)", &schema),
            Verdict::Refused(Refusal { reason: RefusalReason::Parse(ParseError::Unsupported { .. }) })
        ));
        match validate_or_refuse("  MATCH (d:Disease) RETURN d\n", &schema) {
            Verdict::Valid(v) => assert_eq!(v.text(), "MATCH (d:Disease) RETURN d"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn refusal_text_is_fixed() {
        let r = Refusal { reason: RefusalReason::NoQuery };
        assert_eq!(r.answer(), "I don't know.");
    }
}
