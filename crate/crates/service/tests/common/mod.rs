//! Router fixtures shared by the service tests and the acceptance suite.
#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use hazardchat_core::graph::PropertyGraph;
use hazardchat_core::ingest::{build_from_corpus, Corpus};
use hazardchat_core::rag::{ExemplarStore, HashingEmbedder, LlmClient, LlmError, LlmRequest, ScriptedLlm, TurnOptions};
use hazardchat_service::api::{router, AppState};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use crate::support::fixtures_dir;

/// A backend that is always down.
pub struct DownLlm;

impl LlmClient for DownLlm {
    fn complete(&self, _: &LlmRequest) -> Result<String, LlmError> {
        Err(LlmError::BackendUnavailable("connection refused".into()))
    }
}

pub fn fixture_graph() -> PropertyGraph {
    let corpus = Corpus::from_dir(&fixtures_dir().join("corpus")).unwrap();
    PropertyGraph::apply(&build_from_corpus(&corpus).0).unwrap()
}

pub fn stub_llm() -> ScriptedLlm {
    ScriptedLlm::from_toml(&std::fs::read_to_string(fixtures_dir().join("stub_script.toml")).unwrap()).unwrap()
}

pub fn state_with(llm: Box<dyn LlmClient>) -> AppState {
    let graph = fixture_graph();
    let text = std::fs::read_to_string(fixtures_dir().join("exemplars.toml")).unwrap();
    let store = ExemplarStore::from_toml(&text, &graph.schema(), Arc::new(HashingEmbedder)).unwrap();
    AppState::new(graph, store, llm, TurnOptions::default())
}

pub fn stub_app() -> Router {
    router(state_with(Box::new(stub_llm())), &[])
}

/// Sends one request and returns the status and the JSON body.
pub async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{uri}: non-JSON body ({e}): {bytes:?}"));
    (status, value)
}

pub async fn post(app: &Router, uri: &str, body: &Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(&body.to_string())).await
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

/// Column 0 of a serialized result table, rendered as plain strings.
pub fn first_column(table: &Value) -> Vec<String> {
    table["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| match &r[0] {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .collect()
}
