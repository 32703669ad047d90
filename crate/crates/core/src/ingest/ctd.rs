//! CTD chemical-disease association files, CSV or XML.
//!
//! CSV: a header row naming at least `ChemicalID`, `CAS`, `DiseaseID` and
//! `DiseaseName` (in any order; `ChemicalName` and `OmimIDs` are optional).
//! Lines starting with `#` are comments.
//!
//! XML: `<Links>` holding `<Link>` elements with child elements of the same
//! names.
//!
//! `DiseaseID` holds one or more `|`-separated prefixed codes
//! (`MESH:D006327|OMIM:610140`); `OmimIDs` holds bare OMIM numbers.

use serde::{Deserialize, Serialize};

use super::{LogEntry, LogReason};
use crate::model::{validate_cas, CasNumber, DiseaseId, DiseaseScheme};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChemicalDiseaseLink {
    /// Source-internal chemical code, possibly empty when a CAS is present.
    pub chemical_id: String,
    pub cas: Option<CasNumber>,
    pub disease: DiseaseId,
    pub disease_name: String,
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CtdError {
    #[error("missing required column {0}")]
    MissingColumn(&'static str),
    #[error("unreadable document: {0}")]
    Unreadable(String),
}

/// Links parsed from one document plus the rows that were skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CtdParse {
    pub links: Vec<ChemicalDiseaseLink>,
    pub skipped: Vec<LogEntry>,
}

#[derive(Debug, Default, Deserialize)]
struct RawRow {
    #[serde(rename = "ChemicalID", default)]
    chemical_id: Option<String>,
    #[serde(rename = "CAS", default)]
    cas: Option<String>,
    #[serde(rename = "DiseaseID", default)]
    disease_id: Option<String>,
    #[serde(rename = "DiseaseName", default)]
    disease_name: Option<String>,
    #[serde(rename = "OmimIDs", default)]
    omim_ids: Option<String>,
}

#[derive(Debug, Deserialize)]
struct XmlLinks {
    #[serde(rename = "Link", default)]
    links: Vec<RawRow>,
}

const REQUIRED: [&str; 4] = ["ChemicalID", "CAS", "DiseaseID", "DiseaseName"];

/// Parses a CSV or XML document, chosen by its first non-blank character.
pub fn parse_ctd_links(document: &str, origin: &str) -> Result<CtdParse, CtdError> {
    if document.trim_start().starts_with('<') {
        parse_xml(document, origin)
    } else {
        parse_csv(document, origin)
    }
}

fn parse_csv(document: &str, origin: &str) -> Result<CtdParse, CtdError> {
    let mut out = CtdParse::default();
    if document.trim().is_empty() {
        return Ok(out);
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(document.as_bytes());
    let headers = reader.headers().map_err(|e| CtdError::Unreadable(e.to_string()))?.clone();
    if headers.is_empty() {
        return Ok(out);
    }
    for col in REQUIRED {
        if !headers.iter().any(|h| h == col) {
            return Err(CtdError::MissingColumn(col));
        }
    }
    for result in reader.records() {
        let (line, row) = match result {
            Ok(rec) => {
                let line = rec.position().map_or(0, |p| p.line());
                (line, rec.deserialize::<RawRow>(Some(&headers)))
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.skipped.push(LogEntry::new(LogReason::MalformedRow, format!("{origin}:{line}"), e.to_string()));
                continue;
            }
        };
        let source = format!("{origin}:{line}");
        match row.map_err(|e| e.to_string()).and_then(|r| link_from_row(r, &source)) {
            Ok(link) => out.links.push(link),
            Err(detail) => out.skipped.push(LogEntry::new(LogReason::MalformedRow, source, detail)),
        }
    }
    Ok(out)
}

fn parse_xml(document: &str, origin: &str) -> Result<CtdParse, CtdError> {
    let parsed: XmlLinks = quick_xml::de::from_str(document).map_err(|e| CtdError::Unreadable(e.to_string()))?;
    let mut out = CtdParse::default();
    for (i, row) in parsed.links.into_iter().enumerate() {
        let source = format!("{origin}#Link[{}]", i + 1);
        match link_from_row(row, &source) {
            Ok(link) => out.links.push(link),
            Err(detail) => out.skipped.push(LogEntry::new(LogReason::MalformedRow, source, detail)),
        }
    }
    Ok(out)
}

fn non_empty(v: Option<String>) -> Option<String> {
    v.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

fn link_from_row(row: RawRow, origin: &str) -> Result<ChemicalDiseaseLink, String> {
    let chemical_id = non_empty(row.chemical_id).unwrap_or_default();
    let cas = non_empty(row.cas).map(|c| validate_cas(&c)).transpose().map_err(|e| e.to_string())?;
    if chemical_id.is_empty() && cas.is_none() {
        return Err("row has neither ChemicalID nor CAS".into());
    }
    let disease_name = non_empty(row.disease_name).ok_or("empty DiseaseName")?;

    let mut mesh: Option<String> = None;
    let mut omim: Option<String> = None;
    for part in non_empty(row.disease_id).unwrap_or_default().split('|').filter(|p| !p.trim().is_empty()) {
        let id = DiseaseId::parse_prefixed(part).ok_or_else(|| format!("unrecognized disease code {part:?}"))?;
        let slot = match id.scheme {
            DiseaseScheme::Mesh => &mut mesh,
            DiseaseScheme::Omim => &mut omim,
        };
        slot.get_or_insert(id.code);
    }
    if omim.is_none() {
        omim = non_empty(row.omim_ids)
            .and_then(|ids| ids.split('|').map(str::trim).find(|s| !s.is_empty()).map(str::to_string));
    }
    let disease = DiseaseId::from_codes(mesh.as_deref(), omim.as_deref()).ok_or("no disease code")?;
    Ok(ChemicalDiseaseLink { chemical_id, cas, disease, disease_name, origin: origin.to_string() })
}
