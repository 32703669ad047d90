//! Canonical prompt template.
//!
//! Section order: persona with the step-by-step and query-writing
//! instruction, schema, matching rules, answer and refusal rules, exemplars,
//! output format, user question.

use serde::Serialize;

use super::exemplars::Exemplar;
use crate::cypher::ResultTable;

pub const PERSONA: &str = "You are an expert on creating Cypher queries. You also have a deep knowledge in Healthcare and Toxicology. Think step-by-step to answer the question. First, given an input question, create a syntactically correct Cypher query to run.";

pub const SCHEMA_HEADER: &str = "Here is the graph schema:";

pub const MATCHING_RULES: &str = "If the question matches one of the sample questions in the KG then just use the same query used to answer it.
If the user asks to retrieve a property of an entity of the graph, given its name, then use a WHERE statement and a cypher regular expression matching without case sensitivity, and filter the results by the name of the entity.
Ensure the generated query captures relevant information from the graph database without reducing the retrieved data due to variations or synonyms in user wording.";

pub const ANSWER_RULES: &str = "Use the outcome of the query to answer the user's question. If the question has several answers, list each of them and create a summary to explain the context of the list of the answers. If you do not know the answer, just say I don't know.";

pub const EXEMPLAR_HEADER: &str =
    "Below there are some examples of questions and their corresponding Cypher queries and results.";

/// Output contract the query extractor relies on.
pub const OUTPUT_RULES: &str = "Check the query against the schema above before answering. Write the query inside a single ```cypher fenced block.";

pub const QUESTION_HEADER: &str = "User input:";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptExemplar {
    pub id: String,
    pub question: String,
    pub cypher: String,
    pub result_digest: String,
}

impl From<&Exemplar> for PromptExemplar {
    fn from(e: &Exemplar) -> Self {
        PromptExemplar {
            id: e.id.clone(),
            question: e.question.clone(),
            cypher: e.cypher.clone(),
            result_digest: e.result_digest.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptContext {
    pub persona: String,
    pub schema: String,
    pub exemplars: Vec<PromptExemplar>,
    pub instructions: String,
    pub question: String,
}

impl PromptContext {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.persona);
        out.push('\n');
        out.push_str(SCHEMA_HEADER);
        out.push('\n');
        out.push_str(self.schema.trim_end());
        out.push('\n');
        out.push_str(&self.instructions);
        out.push('\n');
        out.push_str(EXEMPLAR_HEADER);
        out.push('\n');
        for e in &self.exemplars {
            out.push_str(&format!(
                "\nQuestion: {}\nCypher:\n```cypher\n{}\n```\nResult: {}\n",
                e.question, e.cypher, e.result_digest
            ));
        }
        out.push('\n');
        out.push_str(OUTPUT_RULES);
        out.push('\n');
        out.push_str(QUESTION_HEADER);
        out.push(' ');
        out.push_str(&self.question);
        out.push('\n');
        out
    }
}

pub fn build_prompt(question: &str, schema: &str, exemplars: &[&Exemplar]) -> PromptContext {
    PromptContext {
        persona: PERSONA.to_string(),
        schema: schema.to_string(),
        exemplars: exemplars.iter().map(|e| PromptExemplar::from(*e)).collect(),
        instructions: format!("{MATCHING_RULES}\n{ANSWER_RULES}"),
        question: question.trim().to_string(),
    }
}

/// Request text for the second model call, which turns rows into prose.
pub fn summary_prompt(question: &str, cypher: &str, table: &ResultTable) -> String {
    format!(
        "{PERSONA}\nThe user asked: {}\nThis Cypher query was run against the graph:\n```cypher\n{cypher}\n```\nIt returned {} row(s):\n{}\n{ANSWER_RULES}\nUse only the rows above.\n",
        question.trim(),
        table.len(),
        table.render_aligned().trim_end()
    )
}

/// Compact rendering of a result table for exemplar records: the row count
/// followed by at most five quoted rows.
pub fn result_digest(table: &ResultTable) -> String {
    const SHOWN: usize = 5;
    let rows: Vec<String> = table
        .rows
        .iter()
        .take(SHOWN)
        .map(|r| format!("\"{}\"", r.iter().map(|c| c.render()).collect::<Vec<_>>().join(" | ")))
        .collect();
    let more = if table.len() > SHOWN { ", ..." } else { "" };
    format!("{} row(s): {}{more}", table.len(), rows.join(", "))
}
