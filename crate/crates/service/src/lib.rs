//! Command-line front end and HTTP service for the hazardous-chemical
//! knowledge graph.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
//! 3 invalid data (corrupt snapshot, malformed corpus, rejected query).

pub mod api;
pub mod config;

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use hazardchat_core::cypher::{execute_with, parse, validate, ExecOptions};
use hazardchat_core::graph::{load_snapshot, save_snapshot, GraphError, PropertyGraph};
use hazardchat_core::ingest::{build_from_corpus, Corpus, CorpusError};
use hazardchat_core::rag::{Embedder, ExemplarStore, HashingEmbedder, LlmClient, ScriptedLlm, TurnOptions};
#[cfg(feature = "remote")]
use hazardchat_core::rag::{RemoteConfig, RemoteEmbedder, RemoteLlm};

use crate::api::AppState;
use crate::config::{ConfigError, EmbeddingConfig, LlmConfig, ServiceConfig};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// A failed command: exit code plus the message printed to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Io { .. } | ConfigError::MissingPath { .. } => EXIT_IO,
            ConfigError::Invalid { .. } | ConfigError::MissingSecret(_) => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        let code = if matches!(e, GraphError::Io(_)) { EXIT_IO } else { EXIT_DATA };
        Failure::new(code, e.to_string())
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let code = if matches!(e, CorpusError::Io { .. }) { EXIT_IO } else { EXIT_DATA };
        Failure::new(code, e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "hazardchat", version, about = "Hazardous-chemical knowledge graph with a question-answering API")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and reconcile a corpus directory, build the graph, save a snapshot and print the report.
    Ingest {
        /// Directory with reach/, ctd/ and niosh/ subdirectories.
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print the report as JSON lines instead of text.
        #[arg(long)]
        jsonl: bool,
    },
    /// Load a snapshot and serve the HTTP API.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one query read from stdin against a snapshot.
    Query {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Lines)]
        format: Format,
    },
    /// Print node and edge counts of a snapshot.
    Stats {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// One row per line, cells separated by tabs.
    Lines,
    /// Aligned columns with a header.
    Table,
    Json,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = stdout.write_all(text.as_bytes());
                0
            } else {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            };
        }
    };
    let result = match cli.command {
        Command::Ingest { corpus, out, jsonl } => ingest(&corpus, &out, jsonl, stdout),
        Command::Serve { config } => serve(&config, stderr),
        Command::Query { snapshot, format } => query(&snapshot, format, stdin, stdout),
        Command::Stats { snapshot, json } => stats(&snapshot, json, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, e.to_string())
}

fn ingest(corpus: &Path, out: &Path, jsonl: bool, stdout: &mut dyn Write) -> Result<(), Failure> {
    let corpus = Corpus::from_dir(corpus)?;
    let (plan, report) = build_from_corpus(&corpus);
    let graph = PropertyGraph::apply(&plan)?;
    save_snapshot(&graph, out)?;
    let text = if jsonl { report.to_jsonl() } else { report.to_string() };
    stdout.write_all(text.as_bytes()).map_err(io_failure)?;
    Ok(())
}

fn query(snapshot: &Path, format: Format, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), Failure> {
    let graph = load_snapshot(snapshot)?;
    let mut text = String::new();
    stdin.read_to_string(&mut text).map_err(io_failure)?;
    let q = parse(&text).map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
    let diags = validate(&q, &graph.schema());
    if !diags.is_empty() {
        let msg = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return Err(Failure::new(EXIT_DATA, msg));
    }
    let table = execute_with(&q, &graph, ExecOptions::default()).map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
    let out = match format {
        Format::Lines => {
            table.rows.iter().map(|r| r.iter().map(|c| c.render()).collect::<Vec<_>>().join("\t") + "\n").collect()
        }
        Format::Table => table.render_aligned(),
        Format::Json => serde_json::to_string_pretty(&table).expect("tables serialize") + "\n",
    };
    stdout.write_all(out.as_bytes()).map_err(io_failure)
}

fn stats(snapshot: &Path, json: bool, stdout: &mut dyn Write) -> Result<(), Failure> {
    let graph = load_snapshot(snapshot)?;
    let s = graph.stats();
    let out = if json {
        serde_json::to_string_pretty(&s).expect("stats serialize") + "\n"
    } else {
        let mut t = String::new();
        for (label, n) in &s.nodes {
            t.push_str(&format!("{label}\t{n}\n"));
        }
        for (edge_type, n) in &s.edges {
            t.push_str(&format!("{edge_type}\t{n}\n"));
        }
        t.push_str(&format!("checksum\t{}\n", graph.checksum()));
        t
    };
    stdout.write_all(out.as_bytes()).map_err(io_failure)
}

/// Loads everything the service needs. Nothing is served until this
/// returns, so a half-loaded graph is never visible.
pub fn build_state(cfg: &ServiceConfig) -> Result<AppState, Failure> {
    cfg.check_paths()?;
    let graph = load_snapshot(&cfg.snapshot)?;
    let embedder: Arc<dyn Embedder> = match &cfg.embedding {
        EmbeddingConfig::Offline => Arc::new(HashingEmbedder),
        #[cfg(feature = "remote")]
        EmbeddingConfig::Remote(r) => Arc::new(RemoteEmbedder::new(remote_config(r)?)),
        #[cfg(not(feature = "remote"))]
        EmbeddingConfig::Remote(_) => return Err(Failure::new(EXIT_USAGE, "built without remote support")),
    };
    let text = std::fs::read_to_string(&cfg.exemplars).map_err(io_failure)?;
    let store = ExemplarStore::from_toml(&text, &graph.schema(), embedder)
        .map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
    let llm: Box<dyn LlmClient> = match &cfg.llm {
        LlmConfig::Stub { script } => {
            let text = std::fs::read_to_string(script).map_err(io_failure)?;
            Box::new(ScriptedLlm::from_toml(&text).map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?)
        }
        #[cfg(feature = "remote")]
        LlmConfig::Remote(r) => Box::new(RemoteLlm::new(remote_config(r)?)),
        #[cfg(not(feature = "remote"))]
        LlmConfig::Remote(_) => return Err(Failure::new(EXIT_USAGE, "built without remote support")),
    };
    let options = TurnOptions {
        k: cfg.limits.few_shots,
        exec: ExecOptions { max_rows: cfg.limits.max_rows, timeout: cfg.limits.timeout() },
    };
    Ok(AppState::new(graph, store, llm, options))
}

#[cfg(feature = "remote")]
fn remote_config(r: &config::RemoteSettings) -> Result<RemoteConfig, Failure> {
    Ok(RemoteConfig {
        endpoint: r.endpoint.clone(),
        model: r.model.clone(),
        api_key: r.api_key()?,
        timeout: r.timeout(),
    })
}

fn serve(config: &Path, stderr: &mut dyn Write) -> Result<(), Failure> {
    let cfg = ServiceConfig::load(config)?;
    let state = build_state(&cfg)?;
    let _ = tracing_subscriber::fmt().json().with_writer(std::io::stderr).try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(io_failure)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(cfg.listen).await.map_err(io_failure)?;
        let addr = listener.local_addr().map_err(io_failure)?;
        let _ = writeln!(stderr, "listening on http://{addr}");
        let app = api::router(state, &cfg.cors_allow);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(io_failure)
    })
}
