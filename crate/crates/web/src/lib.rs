//! Browser demo: the fixture corpus compiled into the module, queried and
//! chatted with entirely client-side. Every method returns a JSON string so
//! the page needs no bindings beyond `JSON.parse`.

use std::sync::Arc;

use hazardchat_core::cypher::{execute, parse, validate, ParseError};
use hazardchat_core::graph::PropertyGraph;
use hazardchat_core::ingest::{build_from_corpus, Corpus, Document};
use hazardchat_core::model::{validate_cas, validate_ec};
use hazardchat_core::rag::{answer_turn, ExemplarStore, HashingEmbedder, ScriptedLlm};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

macro_rules! corpus_files {
    ($($dir:literal / $file:literal),* $(,)?) => {
        &[$((concat!($dir, "/", $file), include_str!(concat!("../../../fixtures/corpus/", $dir, "/", $file)))),*]
    };
}

const FILES: &[(&str, &str)] = corpus_files![
    "reach" / "acrylaldehyde.html",
    "reach" / "benzene.html",
    "reach" / "benzol.html",
    "reach" / "ethanol-legacy.html",
    "reach" / "formaldehyde.html",
    "reach" / "hydrocarbons-c9-aromatics.html",
    "reach" / "toluene.html",
    "reach" / "water.html",
    "ctd" / "links.csv",
    "ctd" / "links.xml",
    "niosh" / "acrolein.html",
    "niosh" / "benzene.html",
    "niosh" / "formaldehyde.html",
    "niosh" / "parathion.html",
    "niosh" / "styrene-typo.html",
    "niosh" / "toluene.html",
];

const EXEMPLARS: &str = include_str!("../../../fixtures/exemplars.toml");
const SCRIPT: &str = include_str!("../../../fixtures/stub_script.toml");

fn fixture_corpus() -> Corpus {
    let mut corpus = Corpus::default();
    for (path, text) in FILES {
        let doc = Document::new(*path, *text);
        match path.split('/').next() {
            Some("reach") => corpus.reach.push(doc),
            Some("ctd") => corpus.ctd.push(doc),
            _ => corpus.niosh.push(doc),
        }
    }
    corpus
}

fn error(code: &str, message: impl Into<String>, diagnostics: Value) -> String {
    json!({"ok": false, "code": code, "message": message.into(), "diagnostics": diagnostics}).to_string()
}

#[wasm_bindgen]
pub struct Demo {
    graph: PropertyGraph,
    store: ExemplarStore,
    llm: ScriptedLlm,
}

#[wasm_bindgen]
impl Demo {
    /// Builds the graph from the embedded corpus. Panics only if the
    /// embedded fixtures are broken.
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        let (plan, _) = build_from_corpus(&fixture_corpus());
        let graph = PropertyGraph::apply(&plan).expect("fixture plan applies");
        let store =
            ExemplarStore::from_toml(EXEMPLARS, &graph.schema(), Arc::new(HashingEmbedder)).expect("fixture exemplars");
        let llm = ScriptedLlm::from_toml(SCRIPT).expect("fixture script");
        Demo { graph, store, llm }
    }

    /// Schema text plus node and edge counts.
    pub fn summary(&self) -> String {
        json!({"schema": self.graph.schema().render(), "stats": self.graph.stats()}).to_string()
    }

    /// `{ok: true, columns, rows}` or `{ok: false, code, message, diagnostics}`.
    pub fn run_query(&self, cypher: &str) -> String {
        let q = match parse(cypher) {
            Ok(q) => q,
            Err(e @ ParseError::Syntax { .. }) => return error("syntax_error", e.to_string(), Value::Null),
            Err(e @ ParseError::Unsupported { .. }) => return error("unsupported_feature", e.to_string(), Value::Null),
        };
        let diags = validate(&q, &self.graph.schema());
        if !diags.is_empty() {
            let message = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            return error("schema_mismatch", message, json!(diags));
        }
        match execute(&q, &self.graph) {
            Ok(t) => json!({"ok": true, "columns": t.columns, "rows": t.rows}).to_string(),
            Err(e) => error("execution_failed", e.to_string(), Value::Null),
        }
    }

    /// One chat turn against the scripted model; the full response with its trace.
    pub fn ask(&self, question: &str) -> String {
        answer_turn(question, &self.graph, &self.store, &self.llm).to_json()
    }
}

impl Default for Demo {
    fn default() -> Self {
        Demo::new()
    }
}

/// Checks `text` as an EC number if it has the `NNN-NNN-N` shape, otherwise as CAS.
#[wasm_bindgen]
pub fn validate_identifier(text: &str) -> String {
    let text = text.trim();
    let is_ec = text.len() == 9 && text.as_bytes()[3] == b'-' && text.as_bytes()[7] == b'-';
    let (kind, result) = if is_ec {
        ("EC", validate_ec(text).map(|n| n.as_str().to_string()))
    } else {
        ("CAS", validate_cas(text).map(|n| n.as_str().to_string()))
    };
    match result {
        Ok(canonical) => json!({"kind": kind, "valid": true, "canonical": canonical}),
        Err(e) => json!({"kind": kind, "valid": false, "message": e.to_string()}),
    }
    .to_string()
}
