//! NIOSH pocket-guide pages.
//!
//! Supported template:
//!
//! ```html
//! <div class="npg-entry">
//!   <h1 class="chemical-name">Acrolein</h1>
//!   <table class="identifiers"><tr><th>CAS No.</th><td>107-02-8</td></tr></table>
//!   <table class="health"><tr><th>Target Organs</th><td>Eyes, skin, heart</td></tr></table>
//! </div>
//! ```

use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};

use super::{normalize_organ, split_top_level, text_of};
use crate::model::{validate_cas, CasNumber};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrganTargetRecord {
    pub cas: CasNumber,
    /// Normalized, deduplicated, in page order.
    pub organs: Vec<String>,
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NioshError {
    #[error("page has no valid CAS number: {0}")]
    MissingCas(String),
    #[error("page does not follow the supported template: {0}")]
    TemplateMismatch(String),
}

fn sel(css: &str) -> Selector {
    Selector::parse(css).expect("static selector")
}

/// Value cell of the row whose header reads `header` (case-insensitive).
fn row_value(root: scraper::ElementRef<'_>, table: &str, header: &str) -> Option<String> {
    let table = root.select(&sel(table)).next()?;
    table.select(&sel("tr")).find_map(|tr| {
        let th = tr.select(&sel("th")).next().map(text_of)?;
        if th.trim_end_matches(':').eq_ignore_ascii_case(header) {
            tr.select(&sel("td")).next().map(text_of)
        } else {
            None
        }
    })
}

pub fn parse_niosh_page(document: &str, origin: &str) -> Result<OrganTargetRecord, NioshError> {
    let html = Html::parse_document(document);
    let root = html
        .select(&sel("div.npg-entry"))
        .next()
        .ok_or_else(|| NioshError::TemplateMismatch("no div.npg-entry".into()))?;
    let cas_text = row_value(root, "table.identifiers", "CAS No.")
        .filter(|v| !v.is_empty())
        .ok_or_else(|| NioshError::MissingCas("no CAS No. row".into()))?;
    let cas = validate_cas(&cas_text).map_err(|e| NioshError::MissingCas(e.to_string()))?;
    let organ_text = row_value(root, "table.health", "Target Organs")
        .ok_or_else(|| NioshError::TemplateMismatch("no Target Organs row".into()))?;

    let mut organs: Vec<String> = Vec::new();
    for part in split_top_level(&organ_text) {
        if let Ok(organ) = normalize_organ(&part) {
            if !organs.contains(&organ) {
                organs.push(organ);
            }
        }
    }
    if organs.is_empty() {
        return Err(NioshError::TemplateMismatch("Target Organs row lists no organ".into()));
    }
    Ok(OrganTargetRecord { cas, organs, origin: origin.to_string() })
}
