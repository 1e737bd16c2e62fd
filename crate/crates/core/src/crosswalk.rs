//! Dublin Core crosswalk for inventory rows.
//!
//! The element set has 22 labels in a fixed order. Each resource field maps
//! to one element or is kept as a local extension. Several fields share an
//! element (`identifier`, `rights`, `relation`); those that could otherwise
//! be confused carry a value prefix so every exported value can be traced
//! back to its field.
//!
//! The element the label list calls "Related" is the standard `relation`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use strum::{AsRefStr, Display, EnumIter, EnumString, IntoEnumIterator};
use thiserror::Error;

use crate::model::{validate_record, Finding, KnowledgeResource, Permission};
use crate::syntax;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum DcElement {
    Title,
    Subject,
    Description,
    Type,
    Source,
    Relation,
    Coverage,
    Creator,
    Publisher,
    Contributor,
    Rights,
    Date,
    Format,
    Identifier,
    Language,
    Audience,
    Provenance,
    RightsHolder,
    InstructionalMethod,
    AccrualMethod,
    AccrualPeriodicity,
    AccrualPolicy,
}

impl DcElement {
    pub fn all() -> impl Iterator<Item = DcElement> {
        DcElement::iter()
    }

    /// Human-readable element label.
    pub fn label(self) -> &'static str {
        use DcElement::*;
        match self {
            Title => "Title",
            Subject => "Subject and Keywords",
            Description => "Description",
            Type => "Resource Type",
            Source => "Source",
            Relation => "Related",
            Coverage => "Coverage",
            Creator => "Creator",
            Publisher => "Publisher",
            Contributor => "Contributor",
            Rights => "Rights Management",
            Date => "Date",
            Format => "Format",
            Identifier => "Resource Identifier",
            Language => "Language",
            Audience => "Audience",
            Provenance => "Provenance",
            RightsHolder => "Rights Holder",
            InstructionalMethod => "Instructional Method",
            AccrualMethod => "Accrual Method",
            AccrualPeriodicity => "Accrual Periodicity",
            AccrualPolicy => "Accrual Policy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Element(DcElement),
    /// Kept locally; no Dublin Core element fits.
    Extension,
}

/// How a field value is written into its element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Verbatim,
    Prefixed(&'static str),
    /// `access: permission required` / `access: no permission required`.
    Access,
}

const ACCESS_YES: &str = "access: permission required";
const ACCESS_NO: &str = "access: no permission required";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mapping {
    pub kaf_field: &'static str,
    pub target: Target,
    pub encoding: Encoding,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrosswalkError {
    #[error("invalid-resource: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidResource(Vec<Finding>),
    #[error("invalid-record: {0}")]
    InvalidRecord(String),
    #[error("parse-error: line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown-field: {0}")]
    UnknownField(String),
}

impl CrosswalkError {
    pub fn code(&self) -> &'static str {
        match self {
            CrosswalkError::InvalidResource(_) => "invalid-resource",
            CrosswalkError::InvalidRecord(_) => "invalid-record",
            CrosswalkError::Parse { .. } => "parse-error",
            CrosswalkError::UnknownField(_) => "unknown-field",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    rows: Vec<Mapping>,
}

impl MappingTable {
    pub fn canonical() -> Self {
        use DcElement::*;
        use Encoding::*;
        let el = Target::Element;
        let row = |kaf_field, target, encoding| Mapping {
            kaf_field,
            target,
            encoding,
        };
        Self {
            rows: vec![
                row("name", el(Title), Verbatim),
                row("resource_id", el(Identifier), Verbatim),
                row("url", el(Identifier), Verbatim),
                row("description", el(Description), Verbatim),
                row("resource_type", el(Type), Verbatim),
                row("maintained_by", el(Contributor), Verbatim),
                row("last_updated", el(Date), Verbatim),
                row("language", el(Language), Verbatim),
                row("format", el(Format), Verbatim),
                row("license", el(Rights), Prefixed("license: ")),
                row("permission_required", el(Rights), Access),
                row("standard_compliance", el(Relation), Prefixed("conforms to: ")),
                row("other_location", el(Relation), Prefixed("location: ")),
                row("policy_prescribed", el(Provenance), Verbatim),
                row("next_review_due", Target::Extension, Verbatim),
                row("lifecycle_phase", Target::Extension, Verbatim),
                row("corresponds_to", el(Relation), Prefixed("corresponds to: ")),
            ],
        }
    }

    pub fn rows(&self) -> &[Mapping] {
        &self.rows
    }

    /// A copy of the table with one field sent to a different target.
    pub fn retarget(&self, field: &str, target: Target) -> Result<Self, CrosswalkError> {
        let mut next = self.clone();
        let row = next
            .rows
            .iter_mut()
            .find(|r| r.kaf_field == field)
            .ok_or_else(|| CrosswalkError::UnknownField(field.to_string()))?;
        row.target = target;
        Ok(next)
    }

    /// Fields kept as extensions, in table order.
    pub fn unmapped_fields(&self) -> Vec<&'static str> {
        self.rows
            .iter()
            .filter(|r| r.target == Target::Extension)
            .map(|r| r.kaf_field)
            .collect()
    }

    pub fn export(&self, resource: &KnowledgeResource) -> Result<DublinCoreRecord, CrosswalkError> {
        let findings = validate_record(resource);
        if !findings.is_empty() {
            return Err(CrosswalkError::InvalidResource(findings));
        }
        let mut record = DublinCoreRecord::new();
        for row in &self.rows {
            let Target::Element(element) = row.target else {
                continue;
            };
            let value = match row.encoding {
                Encoding::Access => match resource.permission_required {
                    Permission::Yes => Some(ACCESS_YES.to_string()),
                    Permission::No => Some(ACCESS_NO.to_string()),
                    Permission::Unknown => None,
                },
                Encoding::Prefixed(prefix) => resource
                    .field_value(row.kaf_field)
                    .map(|v| format!("{prefix}{v}")),
                Encoding::Verbatim => resource.field_value(row.kaf_field),
            };
            if let Some(value) = value {
                record.push(element, value);
            }
        }
        Ok(record)
    }

    /// Recovers field values (in canonical text form) from an exported
    /// record. Inverse of [`MappingTable::export`] on mapped fields.
    pub fn recover(
        &self,
        record: &DublinCoreRecord,
    ) -> Result<BTreeMap<&'static str, String>, CrosswalkError> {
        let mut out = BTreeMap::new();
        for (element, value) in record.pairs() {
            let candidates = self
                .rows
                .iter()
                .filter(|r| r.target == Target::Element(*element) && !out.contains_key(r.kaf_field));
            let mut hit = None;
            for row in candidates {
                let decoded = match row.encoding {
                    Encoding::Access => match value.as_str() {
                        ACCESS_YES => Some(Permission::Yes.to_string()),
                        ACCESS_NO => Some(Permission::No.to_string()),
                        _ => None,
                    },
                    Encoding::Prefixed(prefix) => value.strip_prefix(prefix).map(str::to_string),
                    Encoding::Verbatim if accepts(row.kaf_field, value) => Some(value.clone()),
                    Encoding::Verbatim => None,
                };
                if let Some(decoded) = decoded {
                    hit = Some((row.kaf_field, decoded));
                    break;
                }
            }
            let (field, decoded) = hit.ok_or_else(|| {
                CrosswalkError::InvalidRecord(format!("no field maps to dc.{element} = {value}"))
            })?;
            out.insert(field, decoded);
        }
        Ok(out)
    }
}

fn accepts(field: &str, value: &str) -> bool {
    match field {
        "resource_id" | "corresponds_to" => syntax::is_resource_id(value),
        "url" => syntax::is_uri(value),
        "last_updated" | "next_review_due" => syntax::parse_date(value).is_ok(),
        "language" => syntax::is_language_tag(value),
        _ => true,
    }
}

/// Exports one resource through the canonical table.
pub fn export_dc(resource: &KnowledgeResource) -> Result<DublinCoreRecord, CrosswalkError> {
    MappingTable::canonical().export(resource)
}

pub fn unmapped_fields() -> Vec<&'static str> {
    MappingTable::canonical().unmapped_fields()
}

/// Element/value pairs in element order; repeated elements keep insertion
/// order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DublinCoreRecord {
    pairs: Vec<(DcElement, String)>,
}

impl DublinCoreRecord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a record from pairs that must already be in element order.
    pub fn from_pairs(pairs: Vec<(DcElement, String)>) -> Result<Self, CrosswalkError> {
        let record = Self { pairs };
        record.validate()?;
        Ok(record)
    }

    /// Inserts after every pair of the same or an earlier element.
    pub fn push(&mut self, element: DcElement, value: String) {
        let pos = self.pairs.partition_point(|(e, _)| *e <= element);
        self.pairs.insert(pos, (element, value));
    }

    pub fn pairs(&self) -> &[(DcElement, String)] {
        &self.pairs
    }

    pub fn values(&self, element: DcElement) -> impl Iterator<Item = &str> {
        self.pairs
            .iter()
            .filter(move |(e, _)| *e == element)
            .map(|(_, v)| v.as_str())
    }

    pub fn validate(&self) -> Result<(), CrosswalkError> {
        if let Some(w) = self.pairs.windows(2).find(|w| w[0].0 > w[1].0) {
            return Err(CrosswalkError::InvalidRecord(format!(
                "dc.{} follows dc.{}",
                w[1].0, w[0].0
            )));
        }
        for (element, value) in &self.pairs {
            check_value(*element, value).map_err(CrosswalkError::InvalidRecord)?;
        }
        Ok(())
    }
}

fn check_value(element: DcElement, value: &str) -> Result<(), String> {
    if value.is_empty() {
        return Err(format!("dc.{element} has an empty value"));
    }
    if value.contains(['\n', '\r']) {
        return Err(format!("dc.{element} spans several lines"));
    }
    match element {
        DcElement::Date => syntax::parse_date(value)
            .map(|_| ())
            .map_err(|e| format!("dc.date `{value}`: {e}")),
        DcElement::Language if !syntax::is_language_tag(value) => {
            Err(format!("dc.language `{value}` is not a language tag"))
        }
        _ => Ok(()),
    }
}

/// `dc.<element> = <value>` lines, LF-terminated.
pub fn serialize_dc(record: &DublinCoreRecord) -> String {
    let mut out = String::new();
    for (element, value) in &record.pairs {
        let _ = writeln!(out, "dc.{element} = {value}");
    }
    out
}

pub fn parse_dc(text: &str) -> Result<DublinCoreRecord, CrosswalkError> {
    let parse_err = |line: usize, reason: String| CrosswalkError::Parse { line, reason };
    if text.is_empty() {
        return Ok(DublinCoreRecord::new());
    }
    let Some(body) = text.strip_suffix('\n') else {
        return Err(parse_err(text.lines().count(), "missing final line feed".into()));
    };
    let mut pairs: Vec<(DcElement, String)> = Vec::new();
    for (i, line) in body.split('\n').enumerate() {
        let no = i + 1;
        let (label, value) = line
            .strip_prefix("dc.")
            .and_then(|l| l.split_once(" = "))
            .ok_or_else(|| parse_err(no, "expected `dc.<element> = <value>`".into()))?;
        let element: DcElement = label
            .parse()
            .map_err(|_| parse_err(no, format!("unknown element `{label}`")))?;
        check_value(element, value).map_err(|e| parse_err(no, e))?;
        if pairs.last().is_some_and(|(prev, _)| *prev > element) {
            return Err(parse_err(no, format!("dc.{element} is out of element order")));
        }
        pairs.push((element, value.to_string()));
    }
    Ok(DublinCoreRecord { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classification::{FormatTag, ResourceType};

    fn api_spec() -> KnowledgeResource {
        let mut r = KnowledgeResource::new("API Spec", ResourceType::SystemSpecification);
        r.resource_id = "R001".into();
        r.url = Some("http://x.org/s".into());
        r.format = Some(FormatTag::Pdf);
        r
    }

    #[test]
    fn element_set_order() {
        let all: Vec<_> = DcElement::all().collect();
        assert_eq!(all.len(), 22);
        assert_eq!(all[0], DcElement::Title);
        assert_eq!(all[21], DcElement::AccrualPolicy);
        assert!(DcElement::Format < DcElement::Identifier);
    }

    #[test]
    fn exports_mapped_pairs_in_element_order() {
        let dc = export_dc(&api_spec()).unwrap();
        let expected = vec![
            (DcElement::Title, "API Spec".to_string()),
            (DcElement::Type, "system_specification".to_string()),
            (DcElement::Format, "pdf".to_string()),
            (DcElement::Identifier, "R001".to_string()),
            (DcElement::Identifier, "http://x.org/s".to_string()),
        ];
        assert_eq!(dc.pairs(), expected.as_slice());
        assert_eq!(
            serialize_dc(&dc),
            "dc.title = API Spec\ndc.type = system_specification\ndc.format = pdf\n\
dc.identifier = R001\ndc.identifier = http://x.org/s\n"
        );
    }

    #[test]
    fn minimal_record() {
        let mut r = KnowledgeResource::new("Bare", ResourceType::Glossary);
        r.resource_id = "R002".into();
        let dc = export_dc(&r).unwrap();
        let elements: Vec<_> = dc.pairs().iter().map(|(e, _)| *e).collect();
        assert_eq!(elements, [DcElement::Title, DcElement::Type, DcElement::Identifier]);
    }

    #[test]
    fn date_and_rights() {
        let mut r = api_spec();
        r.last_updated = Some("2010-12-10".into());
        r.license = Some("CC-BY".into());
        r.permission_required = Permission::No;
        let dc = export_dc(&r).unwrap();
        assert_eq!(dc.values(DcElement::Date).collect::<Vec<_>>(), ["2010-12-10"]);
        assert_eq!(
            dc.values(DcElement::Rights).collect::<Vec<_>>(),
            ["license: CC-BY", "access: no permission required"]
        );
    }

    #[test]
    fn invalid_resource_is_refused() {
        let mut r = api_spec();
        r.last_updated = Some("2010-13-01".into());
        assert_eq!(export_dc(&r).unwrap_err().code(), "invalid-resource");
    }

    #[test]
    fn unmapped() {
        assert_eq!(unmapped_fields(), ["next_review_due", "lifecycle_phase"]);
        let t = MappingTable::canonical()
            .retarget("lifecycle_phase", Target::Element(DcElement::Coverage))
            .unwrap();
        assert_eq!(t.unmapped_fields(), ["next_review_due"]);
        let t = t.retarget("next_review_due", Target::Element(DcElement::Coverage)).unwrap();
        assert!(t.unmapped_fields().is_empty());
        assert!(t.retarget("colour", Target::Extension).is_err());
    }

    #[test]
    fn parse_rejects_disorder_and_bad_values() {
        assert!(parse_dc("dc.identifier = R001\ndc.title = A\n").is_err());
        assert!(parse_dc("dc.date = 2010-13-01\n").is_err());
        assert!(parse_dc("dc.language = english\n").is_err());
        assert!(parse_dc("dc.title = A").is_err());
        assert!(parse_dc("dc.bogus = A\n").is_err());
        assert_eq!(parse_dc("dc.title = A\n").unwrap().pairs(), [(DcElement::Title, "A".into())]);
    }

    #[test]
    fn single_pair_serialization() {
        let r = DublinCoreRecord::from_pairs(vec![(DcElement::Title, "A".into())]).unwrap();
        assert_eq!(serialize_dc(&r), "dc.title = A\n");
    }
}
