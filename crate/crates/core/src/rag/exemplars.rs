//! Few-shot exemplar store and similarity-based selection.

use std::fmt;
use std::sync::Arc;

use serde::Deserialize;

use super::embed::{cosine, EmbedError, Embedder};
use crate::cypher::{parse, validate};
use crate::graph::GraphSchema;

#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub id: String,
    pub question: String,
    pub cypher: String,
    /// Short rendering of what the query returns, shown to the model.
    pub result_digest: String,
    pub embedding: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExemplarError {
    #[error("exemplar file is not valid TOML: {0}")]
    Format(#[from] toml::de::Error),
    #[error("exemplar {id}: {problem}")]
    Invalid { id: String, problem: String },
    #[error("duplicate exemplar id {0}")]
    DuplicateId(String),
    #[error("exemplar store is empty")]
    EmptyStore,
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExemplarFile {
    #[serde(default)]
    exemplar: Vec<ExemplarRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExemplarRecord {
    id: String,
    question: String,
    cypher: String,
    result_digest: String,
}

/// Read-only after construction; cheap to clone and share.
#[derive(Clone)]
pub struct ExemplarStore {
    exemplars: Vec<Exemplar>,
    embedder: Arc<dyn Embedder>,
}

impl fmt::Debug for ExemplarStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExemplarStore").field("exemplars", &self.exemplars).finish_non_exhaustive()
    }
}

impl ExemplarStore {
    /// Parses `[[exemplar]]` records, checks every query against `schema`
    /// and embeds each question.
    pub fn from_toml(
        text: &str,
        schema: &GraphSchema,
        embedder: Arc<dyn Embedder>,
    ) -> Result<ExemplarStore, ExemplarError> {
        let file: ExemplarFile = toml::from_str(text)?;
        let mut exemplars = Vec::with_capacity(file.exemplar.len());
        for r in file.exemplar {
            check_query(&r.id, &r.cypher, schema)?;
            if exemplars.iter().any(|e: &Exemplar| e.id == r.id) {
                return Err(ExemplarError::DuplicateId(r.id));
            }
            let embedding = embedder.embed(&r.question)?;
            exemplars.push(Exemplar {
                id: r.id,
                question: r.question,
                cypher: r.cypher.trim().to_string(),
                result_digest: r.result_digest,
                embedding,
            });
        }
        Ok(ExemplarStore { exemplars, embedder })
    }

    /// Uses the given embeddings as they are.
    pub fn from_exemplars(exemplars: Vec<Exemplar>, embedder: Arc<dyn Embedder>) -> ExemplarStore {
        ExemplarStore { exemplars, embedder }
    }

    pub fn exemplars(&self) -> &[Exemplar] {
        &self.exemplars
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        self.embedder.embed(text)
    }

    /// Re-checks every stored query; used after the graph schema changes.
    pub fn check(&self, schema: &GraphSchema) -> Result<(), ExemplarError> {
        self.exemplars.iter().try_for_each(|e| check_query(&e.id, &e.cypher, schema))
    }
}

fn check_query(id: &str, cypher: &str, schema: &GraphSchema) -> Result<(), ExemplarError> {
    let invalid = |problem: String| ExemplarError::Invalid { id: id.to_string(), problem };
    let q = parse(cypher).map_err(|e| invalid(e.to_string()))?;
    match validate(&q, schema).first() {
        Some(d) => Err(invalid(d.to_string())),
        None => Ok(()),
    }
}

/// Top `k` exemplars by cosine similarity to `embedding`, most similar first;
/// equal scores go to the lower id. Each entry carries its score.
pub fn rank<'a>(
    embedding: &[f64],
    store: &'a ExemplarStore,
    k: usize,
) -> Result<Vec<(&'a Exemplar, f64)>, ExemplarError> {
    if k == 0 {
        return Err(ExemplarError::ZeroK);
    }
    if store.is_empty() {
        return Err(ExemplarError::EmptyStore);
    }
    let mut scored: Vec<(&Exemplar, f64)> =
        store.exemplars.iter().map(|e| (e, cosine(embedding, &e.embedding))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
    scored.truncate(k);
    Ok(scored)
}

pub fn select_few_shots<'a>(
    question: &str,
    store: &'a ExemplarStore,
    k: usize,
) -> Result<Vec<&'a Exemplar>, ExemplarError> {
    let v = store.embed(question)?;
    Ok(rank(&v, store, k)?.into_iter().map(|(e, _)| e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rag::embed::HashingEmbedder;

    const FILE: &str = r#"
[[exemplar]]
id = "b"
question = "Which organs does benzene target?"
cypher = "MATCH (s:Substance)-[:target_organ]->(o:Organ) RETURN o.Organ"
result_digest = "blood"

[[exemplar]]
id = "a"
question = "Which diseases are linked to formaldehyde?"
cypher = "MATCH (s:Substance)-[:related_to_disease]->(d:Disease) RETURN d.DiseaseName"
result_digest = "asthma"
"#;

    fn store() -> ExemplarStore {
        ExemplarStore::from_toml(FILE, &GraphSchema::static_schema(), Arc::new(HashingEmbedder)).unwrap()
    }

    #[test]
    fn self_question_ranks_first() {
        let s = store();
        let got = select_few_shots("Which organs does benzene target?", &s, 1).unwrap();
        assert_eq!(got[0].id, "b");
        let got = select_few_shots("Which diseases are linked to formaldehyde?", &s, 4).unwrap();
        assert_eq!(got.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn ties_go_to_lower_id() {
        let mut ex = store().exemplars().to_vec();
        let shared = ex[0].embedding.clone();
        ex[1].embedding = shared;
        let s = ExemplarStore::from_exemplars(ex, Arc::new(HashingEmbedder));
        let got = select_few_shots("anything at all", &s, 2).unwrap();
        assert_eq!(got.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn rejects_bad_input() {
        let schema = GraphSchema::static_schema();
        let bad = FILE.replace("(o:Organ)", "(o:Chemical)");
        assert!(matches!(
            ExemplarStore::from_toml(&bad, &schema, Arc::new(HashingEmbedder)),
            Err(ExemplarError::Invalid { id, .. }) if id == "b"
        ));
        let dup = FILE.replace("id = \"a\"", "id = \"b\"");
        assert!(matches!(
            ExemplarStore::from_toml(&dup, &schema, Arc::new(HashingEmbedder)),
            Err(ExemplarError::DuplicateId(_))
        ));
        let empty = ExemplarStore::from_toml("", &schema, Arc::new(HashingEmbedder)).unwrap();
        assert!(matches!(select_few_shots("q", &empty, 4), Err(ExemplarError::EmptyStore)));
        assert!(matches!(select_few_shots("q", &store(), 0), Err(ExemplarError::ZeroK)));
    }
}
