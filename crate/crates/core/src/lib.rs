//! Hazardous-chemical knowledge graph with a natural-language query pipeline.
//!
//! Data flows from source documents ([`ingest`]) into a property graph
//! ([`graph`]); questions are answered by generating, validating and running
//! Cypher-subset queries ([`cypher`]) through the prompt pipeline in [`rag`].

pub mod cypher;
pub mod graph;
pub mod ingest;
pub mod model;
pub mod rag;
