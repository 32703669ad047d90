//! REACH substance factsheets.
//!
//! Supported template (anything else is a `TemplateMismatch`):
//!
//! ```html
//! <div class="substance-factsheet">
//!   <h1 class="substance-name">Acrylaldehyde</h1>
//!   <dl class="identifiers">
//!     <dt>EC number</dt><dd>203-453-4</dd>
//!     <dt>CAS number</dt><dd>107-02-8</dd>
//!   </dl>
//!   <section class="hazard-classification">
//!     <table><tbody><tr><td>Acute Tox. 2</td><td>H330: Fatal if inhaled.</td></tr></tbody></table>
//!   </section>
//!   <section class="product-categories"><ul><li>Biocidal products</li></ul></section>
//! </div>
//! ```
//!
//! Header rows (`th` cells) in the hazard table are ignored. A missing CAS
//! entry, or one holding `-`, is treated as absent.

use scraper::{ElementRef, Html, Selector};

use super::text_of;
use crate::model::{
    validate_cas, validate_ec, HazardClassification, IdentifierError, RecordError, Source, SubstanceRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReachError {
    #[error("factsheet does not follow the supported template: {0}")]
    TemplateMismatch(String),
    #[error("substance {0:?} has no hazard classification")]
    NotHazardous(String),
    #[error(transparent)]
    InvalidIdentifier(#[from] IdentifierError),
    #[error("factsheet lists several {kind} numbers: {values:?}")]
    AmbiguousIdentifier { kind: &'static str, values: Vec<String> },
}

fn sel(css: &str) -> Selector {
    Selector::parse(css).expect("static selector")
}

fn is_placeholder(value: &str) -> bool {
    matches!(value, "" | "-" | "\u{2014}" | "\u{2013}") || value.eq_ignore_ascii_case("n/a")
}

/// Parses one factsheet. `origin` is recorded on the returned record.
pub fn parse_reach_factsheet(document: &str, origin: &str) -> Result<SubstanceRecord, ReachError> {
    let html = Html::parse_document(document);
    let root = html
        .select(&sel("div.substance-factsheet"))
        .next()
        .ok_or_else(|| ReachError::TemplateMismatch("no div.substance-factsheet".into()))?;

    let name = root
        .select(&sel("h1.substance-name"))
        .next()
        .map(text_of)
        .filter(|n| !n.is_empty())
        .ok_or_else(|| ReachError::TemplateMismatch("no h1.substance-name".into()))?;

    let dl = root
        .select(&sel("dl.identifiers"))
        .next()
        .ok_or_else(|| ReachError::TemplateMismatch("no dl.identifiers".into()))?;
    let (ec_values, cas_values) = identifier_values(dl)?;
    let ec = single("EC", ec_values)?.map(|v| validate_ec(&v)).transpose()?;
    let cas = single("CAS", cas_values)?.map(|v| validate_cas(&v)).transpose()?;

    let mut hazard_classes = Vec::new();
    if let Some(section) = root.select(&sel("section.hazard-classification")).next() {
        for row in section.select(&sel("tr")) {
            let cells: Vec<String> = row.select(&sel("td")).map(text_of).collect();
            if cells.is_empty() {
                continue;
            }
            match cells.as_slice() {
                [class_name, hazard_phrase] if !class_name.is_empty() => {
                    let pair =
                        HazardClassification { class_name: class_name.clone(), hazard_phrase: hazard_phrase.clone() };
                    if !hazard_classes.contains(&pair) {
                        hazard_classes.push(pair);
                    }
                }
                _ => {
                    return Err(ReachError::TemplateMismatch(format!(
                        "hazard row must hold a class and a statement, got {cells:?}"
                    )))
                }
            }
        }
    }

    let mut product_categories: Vec<String> = Vec::new();
    if let Some(section) = root.select(&sel("section.product-categories")).next() {
        for li in section.select(&sel("li")) {
            let cat = text_of(li);
            if !cat.is_empty() && !product_categories.contains(&cat) {
                product_categories.push(cat);
            }
        }
    }

    SubstanceRecord::new(name, ec, cas, hazard_classes, product_categories, Source::Reach, origin).map_err(
        |e| match e {
            RecordError::NotHazardous(n) => ReachError::NotHazardous(n),
            RecordError::EmptyName => ReachError::TemplateMismatch("empty substance name".into()),
        },
    )
}

type IdentifierValues = (Vec<String>, Vec<String>);

fn identifier_values(dl: ElementRef<'_>) -> Result<IdentifierValues, ReachError> {
    let mut ec = Vec::new();
    let mut cas = Vec::new();
    let mut current: Option<String> = None;
    for child in dl.children().filter_map(ElementRef::wrap) {
        match child.value().name() {
            "dt" => current = Some(text_of(child).to_lowercase()),
            "dd" => {
                let value = text_of(child);
                if is_placeholder(&value) {
                    continue;
                }
                match current.as_deref() {
                    Some("ec number") | Some("ec no.") => ec.push(value),
                    Some("cas number") | Some("cas no.") => cas.push(value),
                    Some(_) => {}
                    None => return Err(ReachError::TemplateMismatch("dd before any dt in identifiers".into())),
                }
            }
            _ => {}
        }
    }
    Ok((ec, cas))
}

fn single(kind: &'static str, mut values: Vec<String>) -> Result<Option<String>, ReachError> {
    values.dedup();
    match values.len() {
        0 => Ok(None),
        1 => Ok(values.pop()),
        _ => Err(ReachError::AmbiguousIdentifier { kind, values }),
    }
}
