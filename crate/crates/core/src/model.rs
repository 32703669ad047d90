//! Substance identifiers and the record shapes shared by ingestion, the graph
//! store and the query pipeline.
//!
//! EC and CAS numbers are validated against their public check-digit rules
//! before anything is allowed to use them as a join key.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdentifierError {
    #[error("malformed {kind} number {text:?}")]
    MalformedFormat { kind: &'static str, text: String },
    #[error("{kind} number {text:?} fails its check digit ({}found {found})", expected_text(*.expected))]
    ChecksumMismatch {
        kind: &'static str,
        text: String,
        /// `None` when no check digit can make the stem valid (EC remainder 10).
        expected: Option<u8>,
        found: u8,
    },
}

fn expected_text(expected: Option<u8>) -> String {
    match expected {
        Some(d) => format!("expected {d}, "),
        None => "no digit can be valid, ".to_string(),
    }
}

/// European Community number, canonical form `NNN-NNN-N`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EcNumber(String);

/// CAS registry number, canonical form `N{2,7}-NN-N`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CasNumber(String);

/// Weighted sum of the first six EC digits (weights 1..=6) modulo 11.
///
/// Returns `None` for a remainder of 10: no EC number exists for that stem.
pub fn ec_check_digit(stem: [u8; 6]) -> Option<u8> {
    let sum: u32 = stem.iter().enumerate().map(|(i, d)| (i as u32 + 1) * u32::from(*d)).sum();
    let rem = (sum % 11) as u8;
    (rem < 10).then_some(rem)
}

/// CAS check digit over the non-check digits, rightmost weighted 1.
pub fn cas_check_digit(stem: &[u8]) -> u8 {
    let sum: u32 = stem.iter().rev().enumerate().map(|(i, d)| (i as u32 + 1) * u32::from(*d)).sum();
    (sum % 10) as u8
}

fn all_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn digits(s: &str) -> impl Iterator<Item = u8> + '_ {
    s.bytes().map(|b| b - b'0')
}

pub fn validate_ec(text: &str) -> Result<EcNumber, IdentifierError> {
    let trimmed = text.trim();
    let malformed = || IdentifierError::MalformedFormat { kind: "EC", text: text.to_string() };
    let parts: Vec<&str> = trimmed.split('-').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(malformed());
    };
    if a.len() != 3 || b.len() != 3 || c.len() != 1 || ![a, b, c].iter().all(|p| all_digits(p)) {
        return Err(malformed());
    }
    let mut stem = [0u8; 6];
    for (slot, d) in stem.iter_mut().zip(digits(a).chain(digits(b))) {
        *slot = d;
    }
    let found = c.as_bytes()[0] - b'0';
    match ec_check_digit(stem) {
        Some(expected) if expected == found => Ok(EcNumber(trimmed.to_string())),
        expected => Err(IdentifierError::ChecksumMismatch { kind: "EC", text: text.to_string(), expected, found }),
    }
}

pub fn validate_cas(text: &str) -> Result<CasNumber, IdentifierError> {
    let trimmed = text.trim();
    let malformed = || IdentifierError::MalformedFormat { kind: "CAS", text: text.to_string() };
    let parts: Vec<&str> = trimmed.split('-').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(malformed());
    };
    if !(2..=7).contains(&a.len()) || b.len() != 2 || c.len() != 1 || ![a, b, c].iter().all(|p| all_digits(p)) {
        return Err(malformed());
    }
    let stem: Vec<u8> = digits(a).chain(digits(b)).collect();
    let found = c.as_bytes()[0] - b'0';
    let expected = cas_check_digit(&stem);
    if expected == found {
        Ok(CasNumber(trimmed.to_string()))
    } else {
        Err(IdentifierError::ChecksumMismatch { kind: "CAS", text: text.to_string(), expected: Some(expected), found })
    }
}

macro_rules! identifier_impls {
    ($ty:ident, $validate:ident) => {
        impl $ty {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $ty {
            type Err = IdentifierError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $validate(s)
            }
        }

        impl TryFrom<String> for $ty {
            type Error = IdentifierError;

            fn try_from(s: String) -> Result<Self, Self::Error> {
                $validate(&s)
            }
        }

        impl From<$ty> for String {
            fn from(v: $ty) -> String {
                v.0
            }
        }
    };
}

identifier_impls!(EcNumber, validate_ec);
identifier_impls!(CasNumber, validate_cas);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DiseaseScheme {
    Mesh,
    Omim,
}

impl DiseaseScheme {
    pub fn prefix(self) -> &'static str {
        match self {
            DiseaseScheme::Mesh => "MESH",
            DiseaseScheme::Omim => "OMIM",
        }
    }
}

/// Disease identifier in either the MeSH or OMIM vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DiseaseId {
    pub scheme: DiseaseScheme,
    pub code: String,
}

impl DiseaseId {
    /// Picks MeSH whenever a non-empty MeSH code is available.
    pub fn from_codes(mesh: Option<&str>, omim: Option<&str>) -> Option<DiseaseId> {
        let clean = |c: Option<&str>| c.map(str::trim).filter(|c| !c.is_empty()).map(str::to_string);
        if let Some(code) = clean(mesh) {
            return Some(DiseaseId { scheme: DiseaseScheme::Mesh, code });
        }
        clean(omim).map(|code| DiseaseId { scheme: DiseaseScheme::Omim, code })
    }

    /// Parses `MESH:D006327` / `OMIM:610140`; the prefix is case-insensitive.
    pub fn parse_prefixed(text: &str) -> Option<DiseaseId> {
        let (prefix, code) = text.trim().split_once(':')?;
        let code = code.trim();
        if code.is_empty() {
            return None;
        }
        let scheme = match prefix.trim().to_ascii_uppercase().as_str() {
            "MESH" => DiseaseScheme::Mesh,
            "OMIM" => DiseaseScheme::Omim,
            _ => return None,
        };
        Some(DiseaseId { scheme, code: code.to_string() })
    }
}

impl fmt::Display for DiseaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scheme.prefix(), self.code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    Reach,
    Ctd,
    Niosh,
}

impl Source {
    pub fn tag(self) -> &'static str {
        match self {
            Source::Reach => "REACH",
            Source::Ctd => "CTD",
            Source::Niosh => "NIOSH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum KeyKind {
    Ec,
    Cas,
    Synthetic,
}

/// Natural key of a substance node; rendered as `EC:…`, `CAS:…` or `SYN:…`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubstanceKey {
    pub kind: KeyKind,
    pub value: String,
}

impl SubstanceKey {
    pub fn parse(text: &str) -> Option<SubstanceKey> {
        let (kind, value) = text.split_once(':')?;
        let kind = match kind {
            "EC" => KeyKind::Ec,
            "CAS" => KeyKind::Cas,
            "SYN" => KeyKind::Synthetic,
            _ => return None,
        };
        (!value.is_empty()).then(|| SubstanceKey { kind, value: value.to_string() })
    }
}

impl fmt::Display for SubstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            KeyKind::Ec => "EC",
            KeyKind::Cas => "CAS",
            KeyKind::Synthetic => "SYN",
        };
        write!(f, "{tag}:{}", self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HazardClassification {
    pub class_name: String,
    pub hazard_phrase: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstanceRecord {
    pub key: SubstanceKey,
    pub name: String,
    pub ec: Option<EcNumber>,
    pub cas: Option<CasNumber>,
    pub hazard_classes: Vec<HazardClassification>,
    pub product_categories: Vec<String>,
    pub source: Source,
    /// Where the record came from, e.g. `reach/acrylaldehyde.html`.
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("substance name is empty")]
    EmptyName,
    #[error("REACH record {0:?} has no hazard classification")]
    NotHazardous(String),
}

impl SubstanceRecord {
    /// Builds a record and assigns its canonical key.
    pub fn new(
        name: impl Into<String>,
        ec: Option<EcNumber>,
        cas: Option<CasNumber>,
        hazard_classes: Vec<HazardClassification>,
        product_categories: Vec<String>,
        source: Source,
        origin: impl Into<String>,
    ) -> Result<SubstanceRecord, RecordError> {
        let name = name.into().trim().to_string();
        if name.is_empty() {
            return Err(RecordError::EmptyName);
        }
        if source == Source::Reach && hazard_classes.is_empty() {
            return Err(RecordError::NotHazardous(name));
        }
        let key = key_for(&name, ec.as_ref(), cas.as_ref(), source);
        Ok(SubstanceRecord { key, name, ec, cas, hazard_classes, product_categories, source, origin: origin.into() })
    }
}

/// EC beats CAS beats a synthetic hash of the normalized name and source.
pub fn canonical_key(record: &SubstanceRecord) -> SubstanceKey {
    key_for(&record.name, record.ec.as_ref(), record.cas.as_ref(), record.source)
}

fn key_for(name: &str, ec: Option<&EcNumber>, cas: Option<&CasNumber>, source: Source) -> SubstanceKey {
    if let Some(ec) = ec {
        return SubstanceKey { kind: KeyKind::Ec, value: ec.to_string() };
    }
    if let Some(cas) = cas {
        return SubstanceKey { kind: KeyKind::Cas, value: cas.to_string() };
    }
    SubstanceKey { kind: KeyKind::Synthetic, value: synthetic_id(name, source) }
}

/// First 8 bytes of SHA-256 over `lowercase(trim(name)) + "\x1f" + source tag`, as hex.
pub fn synthetic_id(name: &str, source: Source) -> String {
    let mut hasher = Sha256::new();
    hasher.update(name.trim().to_lowercase().as_bytes());
    hasher.update([0x1f]);
    hasher.update(source.tag().as_bytes());
    hex::encode(&hasher.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cas_examples() {
        assert_eq!(validate_cas("7732-18-5").unwrap().as_str(), "7732-18-5");
        assert!(matches!(
            validate_cas("7732-18-4"),
            Err(IdentifierError::ChecksumMismatch { expected: Some(5), found: 4, .. })
        ));
        assert!(matches!(validate_cas("abc"), Err(IdentifierError::MalformedFormat { .. })));
        assert!(validate_cas("107-02-8").is_ok());
        assert!(validate_cas(" 50-00-0 ").is_ok());
        assert!(matches!(validate_cas("1-00-0"), Err(IdentifierError::MalformedFormat { .. })));
        assert!(matches!(validate_cas("12345678-00-0"), Err(IdentifierError::MalformedFormat { .. })));
        assert!(matches!(validate_cas("7732-18"), Err(IdentifierError::MalformedFormat { .. })));
    }

    #[test]
    fn ec_examples() {
        assert_eq!(validate_ec("231-791-2").unwrap().to_string(), "231-791-2");
        assert!(matches!(validate_ec("231-791-3"), Err(IdentifierError::ChecksumMismatch { expected: Some(2), .. })));
        assert!(matches!(validate_ec("12-345-6"), Err(IdentifierError::MalformedFormat { .. })));
        assert!(validate_ec("203-453-4").is_ok());
        assert!(matches!(validate_ec("231-7912"), Err(IdentifierError::MalformedFormat { .. })));
    }

    #[test]
    fn ec_remainder_ten_has_no_valid_check_digit() {
        // 4*1 + 1*6 = 10
        assert_eq!(ec_check_digit([4, 0, 0, 0, 0, 1]), None);
        for d in 0..=9 {
            assert!(matches!(
                validate_ec(&format!("400-001-{d}")),
                Err(IdentifierError::ChecksumMismatch { expected: None, .. })
            ));
        }
    }

    #[test]
    fn key_precedence() {
        let ec = validate_ec("231-791-2").ok();
        let cas = validate_cas("7732-18-5").ok();
        let both = SubstanceRecord::new("Water", ec, cas.clone(), vec![], vec![], Source::Ctd, "t").unwrap();
        assert_eq!(both.key.to_string(), "EC:231-791-2");
        let cas_only = SubstanceRecord::new("Water", None, cas, vec![], vec![], Source::Ctd, "t").unwrap();
        assert_eq!(cas_only.key.kind, KeyKind::Cas);
        let a = SubstanceRecord::new("X", None, None, vec![], vec![], Source::Niosh, "a").unwrap();
        let b = SubstanceRecord::new(" x ", None, None, vec![], vec![], Source::Niosh, "b").unwrap();
        assert_eq!(a.key, b.key);
        assert_eq!(a.key.kind, KeyKind::Synthetic);
        assert_eq!(a.key.value.len(), 16);
        assert_eq!(canonical_key(&a), a.key);
    }

    #[test]
    fn synthetic_key_depends_on_source() {
        assert_ne!(synthetic_id("X", Source::Reach), synthetic_id("X", Source::Ctd));
    }

    #[test]
    fn reach_records_must_be_hazardous() {
        assert_eq!(
            SubstanceRecord::new("Water", None, None, vec![], vec![], Source::Reach, "t"),
            Err(RecordError::NotHazardous("Water".into()))
        );
        assert_eq!(
            SubstanceRecord::new("  ", None, None, vec![], vec![], Source::Ctd, "t"),
            Err(RecordError::EmptyName)
        );
    }

    #[test]
    fn substance_key_text_round_trip() {
        for text in ["EC:231-791-2", "CAS:7732-18-5", "SYN:0123456789abcdef"] {
            assert_eq!(SubstanceKey::parse(text).unwrap().to_string(), text);
        }
        assert_eq!(SubstanceKey::parse("XX:1"), None);
        assert_eq!(SubstanceKey::parse("EC:"), None);
    }

    #[test]
    fn disease_id_prefers_mesh() {
        let id = DiseaseId::from_codes(Some("D006327"), Some("610140")).unwrap();
        assert_eq!(id.to_string(), "MESH:D006327");
        let id = DiseaseId::from_codes(Some(" "), Some("610140")).unwrap();
        assert_eq!(id.scheme, DiseaseScheme::Omim);
        assert_eq!(DiseaseId::from_codes(None, None), None);
        assert_eq!(DiseaseId::parse_prefixed("mesh:D1").unwrap().to_string(), "MESH:D1");
        assert_eq!(DiseaseId::parse_prefixed("DOID:1"), None);
    }

    fn valid_cas() -> impl Strategy<Value = String> {
        (proptest::collection::vec(0u8..10, 2..=7), 0u8..10, 0u8..10).prop_map(|(head, t1, t2)| {
            let mut stem = head.clone();
            stem.extend([t1, t2]);
            let check = cas_check_digit(&stem);
            let head: String = head.iter().map(|d| char::from(b'0' + d)).collect();
            format!("{head}-{t1}{t2}-{check}")
        })
    }

    proptest! {
        #[test]
        fn cas_check_digit_mutations_rejected(cas in valid_cas(), bump in 1u8..10) {
            prop_assert!(validate_cas(&cas).is_ok());
            let check = cas.as_bytes()[cas.len() - 1] - b'0';
            let mutated = format!("{}{}", &cas[..cas.len() - 1], (check + bump) % 10);
            let rejected = matches!(validate_cas(&mutated), Err(IdentifierError::ChecksumMismatch { .. }));
            prop_assert!(rejected);
        }

        #[test]
        fn disease_id_mesh_wins(mesh in "[A-Z][0-9]{6}", omim in proptest::option::of("[0-9]{6}")) {
            let id = DiseaseId::from_codes(Some(&mesh), omim.as_deref()).unwrap();
            prop_assert_eq!(id.scheme, DiseaseScheme::Mesh);
            prop_assert_eq!(id.code, mesh);
        }

        #[test]
        fn canonical_key_is_pure(name in "[a-zA-Z ]{1,20}[a-z]") {
            let r = SubstanceRecord::new(&name, None, None, vec![], vec![], Source::Ctd, "p").unwrap();
            prop_assert_eq!(canonical_key(&r), canonical_key(&r.clone()));
        }
    }
}
