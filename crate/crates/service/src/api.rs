//! HTTP routes. Field names here are the wire contract described in
//! `docs/API.md`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hazardchat_core::cypher::{execute_with, parse, validate, ParseError, ResultTable};
use hazardchat_core::graph::{Direction, EdgeType, Label, Properties, PropertyGraph};
use hazardchat_core::rag::{answer_turn_with, ExemplarStore, LlmClient, TurnErrorCode, TurnOptions};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};
use uuid::Uuid;

struct Shared {
    graph: PropertyGraph,
    store: ExemplarStore,
    llm: Box<dyn LlmClient>,
    options: TurnOptions,
    checksum: String,
}

/// Read-only state shared by all handlers.
#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(graph: PropertyGraph, store: ExemplarStore, llm: Box<dyn LlmClient>, options: TurnOptions) -> AppState {
        let checksum = graph.checksum();
        AppState(Arc::new(Shared { graph, store, llm, options, checksum }))
    }

    pub fn graph(&self) -> &PropertyGraph {
        &self.0.graph
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<Value>>,
}

fn error(status: StatusCode, code: &'static str, message: impl Into<String>) -> Response {
    error_with(status, code, message, None)
}

fn error_with(
    status: StatusCode,
    code: &'static str,
    message: impl Into<String>,
    diagnostics: Option<Vec<Value>>,
) -> Response {
    let body = ErrorBody { code, message: message.into(), diagnostics };
    (status, Json(body)).into_response()
}

fn bad_body(rejection: JsonRejection) -> Response {
    error(StatusCode::BAD_REQUEST, "bad_request", rejection.body_text())
}

#[derive(Debug, Deserialize)]
pub struct ChatRequest {
    pub question: String,
}

#[derive(Debug, Serialize)]
pub struct ChatBody {
    pub answer: String,
    pub cypher: Option<String>,
    pub rows: Option<ResultTable>,
    pub refused: bool,
    pub trace_id: String,
}

#[derive(Debug, Deserialize)]
pub struct QueryRequest {
    pub cypher: String,
}

pub fn router(state: AppState, cors_allow: &[String]) -> Router {
    let mut app = Router::new()
        .route("/api/chat", post(chat))
        .route("/api/query", post(query))
        .route("/api/schema", get(schema))
        .route("/api/substances/{key}", get(substance))
        .route("/healthz", get(healthz))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(state);
    let origins: Vec<HeaderValue> = cors_allow.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    if !origins.is_empty() {
        app = app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    app
}

async fn chat(State(state): State<AppState>, body: Result<Json<ChatRequest>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(r) => return bad_body(r),
    };
    let trace_id = Uuid::new_v4().to_string();
    let s = state.clone();
    let turn = tokio::task::spawn_blocking(move || {
        let shared = &s.0;
        answer_turn_with(&req.question, &shared.graph, &shared.store, shared.llm.as_ref(), shared.options)
    })
    .await;
    let resp = match turn {
        Ok(r) => r,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
    };
    tracing::info!(
        trace_id = %trace_id,
        refused = resp.refused,
        error = resp.error.as_ref().map(|e| e.message.as_str()),
        steps = %serde_json::to_string(&resp.trace).unwrap_or_default(),
        "chat turn"
    );
    if let Some(e) = resp.error {
        let (status, code) = match e.code {
            TurnErrorCode::InvalidInput => (StatusCode::BAD_REQUEST, "invalid_input"),
            TurnErrorCode::BackendUnavailable => (StatusCode::BAD_GATEWAY, "backend_unavailable"),
            TurnErrorCode::ExecutionFailed => (StatusCode::UNPROCESSABLE_ENTITY, "execution_failed"),
        };
        return error(status, code, e.message);
    }
    Json(ChatBody { answer: resp.answer, cypher: resp.cypher, rows: resp.rows, refused: resp.refused, trace_id })
        .into_response()
}

async fn query(State(state): State<AppState>, body: Result<Json<QueryRequest>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(r) => return bad_body(r),
    };
    let parsed = match parse(&req.cypher) {
        Ok(q) => q,
        Err(ParseError::Syntax { position, message }) => {
            let d = json!({"code": "SyntaxError", "position": position, "message": message});
            return error_with(
                StatusCode::UNPROCESSABLE_ENTITY,
                "syntax_error",
                format!("syntax error at position {position}: {message}"),
                Some(vec![d]),
            );
        }
        Err(ParseError::Unsupported { position, feature }) => {
            let d = json!({"code": "UnsupportedFeature", "position": position, "feature": feature});
            return error_with(
                StatusCode::UNPROCESSABLE_ENTITY,
                "unsupported_feature",
                format!("{feature} is not supported"),
                Some(vec![d]),
            );
        }
    };
    let diags = validate(&parsed, &state.graph().schema());
    if !diags.is_empty() {
        let message = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        let values = diags.iter().map(|d| serde_json::to_value(d).expect("diagnostics serialize")).collect();
        return error_with(StatusCode::UNPROCESSABLE_ENTITY, "schema_mismatch", message, Some(values));
    }
    let options = state.0.options.exec;
    let s = state.clone();
    match tokio::task::spawn_blocking(move || execute_with(&parsed, s.graph(), options)).await {
        Ok(Ok(table)) => Json(table).into_response(),
        Ok(Err(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, "execution_failed", e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
    }
}

#[derive(Serialize)]
struct SchemaNode {
    label: Label,
    properties: Vec<String>,
}

#[derive(Serialize)]
struct SchemaEdge {
    #[serde(rename = "type")]
    edge_type: EdgeType,
    from: Label,
    to: Label,
    properties: Vec<String>,
}

async fn schema(State(state): State<AppState>) -> Response {
    let s = state.graph().schema();
    Json(json!({
        "nodes": s.nodes.iter().map(|n| SchemaNode { label: n.label, properties: n.properties.iter().cloned().collect() }).collect::<Vec<_>>(),
        "edges": s.edges.iter().map(|e| SchemaEdge { edge_type: e.edge_type, from: e.from, to: e.to, properties: e.properties.iter().cloned().collect() }).collect::<Vec<_>>(),
        "text": s.render(),
    }))
    .into_response()
}

#[derive(Serialize)]
struct NeighborBody<'a> {
    label: Label,
    key: &'a str,
    properties: &'a Properties,
    edge_properties: &'a Properties,
}

async fn substance(State(state): State<AppState>, Path(key): Path<String>) -> Response {
    let g = state.graph();
    let Some(node) = g.node_by_key(Label::Substance, &key) else {
        return error(StatusCode::NOT_FOUND, "not_found", format!("no substance with key {key}"));
    };
    let mut neighbors: BTreeMap<&str, Vec<NeighborBody>> =
        EdgeType::ALL.iter().map(|t| (t.as_str(), Vec::new())).collect();
    for (edge, other) in g.neighbors(node.id, None, Direction::Outgoing).expect("node exists") {
        neighbors.entry(edge.edge_type.as_str()).or_default().push(NeighborBody {
            label: other.label,
            key: &other.key,
            properties: &other.properties,
            edge_properties: &edge.properties,
        });
    }
    Json(json!({
        "substance": {"label": node.label, "key": node.key, "properties": node.properties},
        "neighbors": neighbors,
    }))
    .into_response()
}

async fn healthz(State(state): State<AppState>) -> Response {
    let g = state.graph();
    Json(json!({
        "status": "ok",
        "checksum": state.0.checksum,
        "nodes": g.node_count(),
        "edges": g.edges().len(),
    }))
    .into_response()
}
