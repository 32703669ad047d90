//! Line-delimited snapshot files.
//!
//! ```text
//! HAZARDCHAT-SNAPSHOT 1 nodes=<N> edges=<M> sha256=<64 lowercase hex>\n
//! ["N","<label>","<natural key>",{<properties>}]\n      (N lines, node id order)
//! ["E","<edge type>",<from index>,<to index>,{<properties>}]\n   (M lines)
//! ```
//!
//! Body lines are compact JSON with property keys in ascending byte order.
//! Edge endpoints are zero-based indexes into the node lines. The checksum
//! covers every byte after the header line.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{EdgeType, GraphError, Label, Properties, PropertyGraph};

pub const MAGIC: &str = "HAZARDCHAT-SNAPSHOT";
pub const VERSION: u32 = 1;

fn body(graph: &PropertyGraph) -> Vec<u8> {
    let mut out = Vec::new();
    for n in graph.nodes() {
        let line = serde_json::json!(["N", n.label.as_str(), n.key, n.properties]);
        out.extend_from_slice(line.to_string().as_bytes());
        out.push(b'\n');
    }
    for e in graph.edges() {
        let line = serde_json::json!(["E", e.edge_type.as_str(), e.from.0, e.to.0, e.properties]);
        out.extend_from_slice(line.to_string().as_bytes());
        out.push(b'\n');
    }
    out
}

pub(super) fn body_checksum(graph: &PropertyGraph) -> String {
    hex::encode(Sha256::digest(body(graph)))
}

pub fn write_snapshot<W: Write>(graph: &PropertyGraph, mut out: W) -> Result<(), GraphError> {
    let body = body(graph);
    let checksum = hex::encode(Sha256::digest(&body));
    writeln!(out, "{MAGIC} {VERSION} nodes={} edges={} sha256={checksum}", graph.nodes().len(), graph.edges().len())?;
    out.write_all(&body)?;
    out.flush()?;
    Ok(())
}

pub fn save_snapshot(graph: &PropertyGraph, path: &Path) -> Result<(), GraphError> {
    let file = fs::File::create(path)?;
    write_snapshot(graph, std::io::BufWriter::new(file))
}

pub fn load_snapshot(path: &Path) -> Result<PropertyGraph, GraphError> {
    read_snapshot(&fs::read(path)?)
}

fn corrupt(msg: impl Into<String>) -> GraphError {
    GraphError::CorruptSnapshot(msg.into())
}

struct Header {
    nodes: usize,
    edges: usize,
    checksum: String,
}

fn parse_header(line: &str) -> Result<Header, GraphError> {
    let mut parts = line.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(corrupt("missing snapshot magic"));
    }
    match parts.next() {
        Some(v) if v == VERSION.to_string() => {}
        other => return Err(corrupt(format!("unsupported version {other:?}"))),
    }
    let mut field = |name: &str| -> Result<String, GraphError> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(name))
            .and_then(|p| p.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| corrupt(format!("header field {name} missing")))
    };
    let nodes = field("nodes")?.parse().map_err(|_| corrupt("bad node count"))?;
    let edges = field("edges")?.parse().map_err(|_| corrupt("bad edge count"))?;
    let checksum = field("sha256")?;
    if parts.next().is_some() {
        return Err(corrupt("trailing header fields"));
    }
    Ok(Header { nodes, edges, checksum })
}

fn properties(v: &Value) -> Result<Properties, GraphError> {
    let obj = v.as_object().ok_or_else(|| corrupt("properties must be an object"))?;
    obj.iter()
        .map(|(k, v)| {
            v.as_str().map(|s| (k.clone(), s.to_string())).ok_or_else(|| corrupt("property values must be strings"))
        })
        .collect()
}

pub fn read_snapshot(bytes: &[u8]) -> Result<PropertyGraph, GraphError> {
    let newline = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| corrupt("truncated header"))?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| corrupt("header is not UTF-8"))?;
    let header = parse_header(header)?;
    let body = &bytes[newline + 1..];
    if hex::encode(Sha256::digest(body)) != header.checksum {
        return Err(corrupt("checksum mismatch"));
    }
    let text = std::str::from_utf8(body).map_err(|_| corrupt("body is not UTF-8"))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != header.nodes + header.edges {
        return Err(corrupt(format!("expected {} records, found {}", header.nodes + header.edges, lines.len())));
    }

    let mut graph = PropertyGraph::new();
    for (i, line) in lines.iter().enumerate() {
        let record: Value = serde_json::from_str(line).map_err(|e| corrupt(format!("record {i}: {e}")))?;
        let fields = record.as_array().ok_or_else(|| corrupt(format!("record {i} is not an array")))?;
        let tag = fields.first().and_then(Value::as_str);
        if i < header.nodes {
            let [_, label, key, props] = fields.as_slice() else {
                return Err(corrupt(format!("record {i}: node arity")));
            };
            if tag != Some("N") {
                return Err(corrupt(format!("record {i}: expected node")));
            }
            let label: Label = label
                .as_str()
                .ok_or_else(|| corrupt("label must be a string"))?
                .parse()
                .map_err(|_| corrupt(format!("record {i}: unknown label")))?;
            let key = key.as_str().ok_or_else(|| corrupt("key must be a string"))?;
            if graph.node_by_key(label, key).is_some() {
                return Err(corrupt(format!("record {i}: duplicate node key {key:?}")));
            }
            graph.upsert_node(label, key, properties(props)?);
        } else {
            let [_, edge_type, from, to, props] = fields.as_slice() else {
                return Err(corrupt(format!("record {i}: edge arity")));
            };
            if tag != Some("E") {
                return Err(corrupt(format!("record {i}: expected edge")));
            }
            let edge_type: EdgeType = edge_type
                .as_str()
                .ok_or_else(|| corrupt("edge type must be a string"))?
                .parse()
                .map_err(|_| corrupt(format!("record {i}: unknown edge type")))?;
            let endpoint = |v: &Value| -> Result<super::NodeId, GraphError> {
                v.as_u64()
                    .filter(|n| (*n as usize) < header.nodes)
                    .map(|n| super::NodeId(n as u32))
                    .ok_or_else(|| corrupt(format!("record {i}: bad endpoint")))
            };
            graph
                .add_edge(edge_type, endpoint(from)?, endpoint(to)?, properties(props)?)
                .map_err(|e| corrupt(format!("record {i}: {e}")))?;
        }
    }
    Ok(graph)
}
