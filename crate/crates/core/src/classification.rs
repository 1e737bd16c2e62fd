//! Resource-type taxonomies.
//!
//! Every resource type maps to one row holding its lifecycle phase (with
//! representation and notation), its Nonaka asset class, its knowledge
//! category and its Romiszowski category. The rows live in a single table
//! that a registry may amend with an override file (`[classification]`
//! records keyed by `resource_type`); absent overrides leave the built-in
//! table in force.
//!
//! Classification keys only on the declared type of a resource, never on
//! its content.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use strum::{AsRefStr, Display, EnumIter, EnumString};
use thiserror::Error;

use crate::record::{self, Record, RecordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {what} `{value}`")]
pub struct TagError {
    pub what: &'static str,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceType {
    RequirementsSpecification,
    SystemDiagram,
    SystemSpecification,
    OperatingManual,
    UserGuide,
    TestPlan,
    Contract,
    UserFeedbackTickets,
    FeedbackNewRequirements,
    Process,
    Ruleset,
    StandardComplianceDocument,
    Glossary,
    /// Free label for types outside the table; must be non-empty.
    Other(String),
}

const RESOURCE_TYPE_NAMES: [(ResourceType, &str); 13] = [
    (ResourceType::RequirementsSpecification, "requirements_specification"),
    (ResourceType::SystemDiagram, "system_diagram"),
    (ResourceType::SystemSpecification, "system_specification"),
    (ResourceType::OperatingManual, "operating_manual"),
    (ResourceType::UserGuide, "user_guide"),
    (ResourceType::TestPlan, "test_plan"),
    (ResourceType::Contract, "contract"),
    (ResourceType::UserFeedbackTickets, "user_feedback_tickets"),
    (ResourceType::FeedbackNewRequirements, "feedback_new_requirements"),
    (ResourceType::Process, "process"),
    (ResourceType::Ruleset, "ruleset"),
    (ResourceType::StandardComplianceDocument, "standard_compliance_document"),
    (ResourceType::Glossary, "glossary"),
];

impl ResourceType {
    /// All table-defined types, in table order.
    pub fn known() -> impl Iterator<Item = ResourceType> {
        RESOURCE_TYPE_NAMES.into_iter().map(|(t, _)| t)
    }

    pub fn known_name(&self) -> Option<&'static str> {
        RESOURCE_TYPE_NAMES
            .iter()
            .find(|(t, _)| t == self)
            .map(|(_, n)| *n)
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceType::Other(label) => write!(f, "other:{label}"),
            known => f.write_str(known.known_name().unwrap_or_default()),
        }
    }
}

impl FromStr for ResourceType {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((t, _)) = RESOURCE_TYPE_NAMES.iter().find(|(_, n)| *n == s) {
            return Ok(t.clone());
        }
        match s.strip_prefix("other:") {
            Some(label) if !label.is_empty() => Ok(ResourceType::Other(label.to_string())),
            _ => Err(TagError {
                what: "resource type",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FormatTag {
    Image,
    WordDocument,
    Spreadsheet,
    Pdf,
    Html,
    Xml,
    Rdf,
    Owl,
    Other(String),
}

const FORMAT_NAMES: [(FormatTag, &str); 8] = [
    (FormatTag::Image, "image"),
    (FormatTag::WordDocument, "word_document"),
    (FormatTag::Spreadsheet, "spreadsheet"),
    (FormatTag::Pdf, "pdf"),
    (FormatTag::Html, "html"),
    (FormatTag::Xml, "xml"),
    (FormatTag::Rdf, "rdf"),
    (FormatTag::Owl, "owl"),
];

impl FormatTag {
    pub fn known() -> impl Iterator<Item = FormatTag> {
        FORMAT_NAMES.into_iter().map(|(t, _)| t)
    }
}

impl fmt::Display for FormatTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatTag::Other(label) => write!(f, "other:{label}"),
            known => {
                let name = FORMAT_NAMES
                    .iter()
                    .find(|(t, _)| t == known)
                    .map(|(_, n)| *n)
                    .unwrap_or_default();
                f.write_str(name)
            }
        }
    }
}

impl FromStr for FormatTag {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((t, _)) = FORMAT_NAMES.iter().find(|(_, n)| *n == s) {
            return Ok(t.clone());
        }
        match s.strip_prefix("other:") {
            Some(label) if !label.is_empty() => Ok(FormatTag::Other(label.to_string())),
            _ => Err(TagError {
                what: "format",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum LifecyclePhase {
    Analysis,
    Design,
    Development,
    Installation,
    Testing,
    Acceptance,
    Support,
    Maintenance,
    LifecycleIndependent,
}

/// Nonaka asset classes. Only the two explicit classes are ever assigned.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum NonakaClass {
    Systemic,
    Conceptual,
    Experiential,
    Routine,
}

impl NonakaClass {
    pub fn is_explicit(self) -> bool {
        matches!(self, NonakaClass::Systemic | NonakaClass::Conceptual)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum KnowledgeCategory {
    Declarative,
    Procedural,
    Causal,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum DimensionTag {
    Cognitive,
    Organisational,
    Technical,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum RomiszowskiCategory {
    Facts,
    Concepts,
    Procedures,
    Principles,
}

impl RomiszowskiCategory {
    pub fn subcategories(self) -> &'static [&'static str] {
        match self {
            RomiszowskiCategory::Facts => {
                &["Concrete Facts", "Verbal Information", "Concrete Associations"]
            }
            RomiszowskiCategory::Concepts => {
                &["Concrete Concepts", "Defined Concepts", "Concept Systems"]
            }
            RomiszowskiCategory::Procedures => {
                &["Linear Procedures", "Multiple Discriminations", "Algorithms"]
            }
            RomiszowskiCategory::Principles => &["Rules of Action", "Rules of Nature", "Rule Systems"],
        }
    }
}

/// A Romiszowski category together with one of its sub-category labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RomiszowskiClass {
    category: RomiszowskiCategory,
    subcategory: &'static str,
}

impl RomiszowskiClass {
    pub fn new(category: RomiszowskiCategory, subcategory: &str) -> Result<Self, TagError> {
        category
            .subcategories()
            .iter()
            .find(|s| **s == subcategory)
            .map(|s| Self {
                category,
                subcategory: s,
            })
            .ok_or_else(|| TagError {
                what: "Romiszowski sub-category",
                value: format!("{category}/{subcategory}"),
            })
    }

    pub fn category(&self) -> RomiszowskiCategory {
        self.category
    }

    pub fn subcategory(&self) -> &'static str {
        self.subcategory
    }
}

/// Whether a knowledge category and a Romiszowski category agree:
/// declarative knowledge is facts or concepts, procedural knowledge is
/// procedures or principles, causal knowledge is principles.
pub fn is_consistent(category: KnowledgeCategory, rom: RomiszowskiCategory) -> bool {
    use RomiszowskiCategory as R;
    match category {
        KnowledgeCategory::Declarative => matches!(rom, R::Facts | R::Concepts),
        KnowledgeCategory::Procedural => matches!(rom, R::Procedures | R::Principles),
        KnowledgeCategory::Causal => rom == R::Principles,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub lifecycle_phase: LifecyclePhase,
    pub representation: String,
    pub notation: String,
    pub nonaka: NonakaClass,
    pub category: KnowledgeCategory,
    pub romiszowski: RomiszowskiClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassificationError {
    #[error("classification file {0}")]
    Parse(#[from] RecordError),
    #[error("classification file line {line}: {reason}")]
    Invalid { line: usize, reason: String },
}

/// Key used for `Other(_)` types without a label-specific row.
pub const OTHER_KEY: &str = "other";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationTable {
    rows: BTreeMap<String, Classification>,
}

/// (key, phase, representation, notation, Nonaka class, category, Romiszowski category, sub-category)
type Row = (&'static str, LifecyclePhase, &'static str, &'static str, NonakaClass, KnowledgeCategory, RomiszowskiCategory, &'static str);

#[rustfmt::skip]
const BUILTIN_ROWS: [Row; 14] = {
    use KnowledgeCategory::*;
    use LifecyclePhase::*;
    use NonakaClass::*;
    use RomiszowskiCategory::*;
    [
        ("requirements_specification", Analysis, "narrative structured text", "natural language, pseudocode", Systemic, Declarative, Concepts, "Defined Concepts"),
        ("system_diagram", Design, "diagram", "ER, DF, UML", Conceptual, Declarative, Concepts, "Concept Systems"),
        ("system_specification", Development, "narrative structured text", "Natural language pseudocode", Systemic, Declarative, Concepts, "Concept Systems"),
        ("operating_manual", Installation, "narrative diagrams", "Natural language graphics", Systemic, Declarative, Concepts, "Defined Concepts"),
        ("user_guide", Installation, "narrative diagrams", "Natural language graphics", Systemic, Declarative, Concepts, "Defined Concepts"),
        ("test_plan", Testing, "structured text", "natural language charts", Systemic, Procedural, Procedures, "Linear Procedures"),
        ("contract", Acceptance, "narrative", "natural language", Systemic, Causal, Principles, "Rules of Action"),
        ("user_feedback_tickets", Support, "narrative", "natural language", Systemic, Declarative, Facts, "Verbal Information"),
        ("feedback_new_requirements", Maintenance, "narrative", "natural language", Systemic, Declarative, Facts, "Verbal Information"),
        ("process", LifecycleIndependent, "", "", Systemic, Procedural, Procedures, "Algorithms"),
        ("ruleset", LifecycleIndependent, "", "", Systemic, Procedural, Principles, "Rule Systems"),
        ("standard_compliance_document", LifecycleIndependent, "", "", Systemic, Causal, Principles, "Rules of Action"),
        ("glossary", LifecycleIndependent, "", "", Systemic, Declarative, Facts, "Verbal Information"),
        (OTHER_KEY, LifecycleIndependent, "", "", Systemic, Declarative, Facts, "Verbal Information"),
    ]
};

static BUILTIN: LazyLock<ClassificationTable> = LazyLock::new(|| {
    let rows = BUILTIN_ROWS
        .iter()
        .map(|&(key, phase, repr, notation, nonaka, category, rom, sub)| {
            let romiszowski = RomiszowskiClass::new(rom, sub).expect("built-in sub-category");
            (
                key.to_string(),
                Classification {
                    lifecycle_phase: phase,
                    representation: repr.to_string(),
                    notation: notation.to_string(),
                    nonaka,
                    category,
                    romiszowski,
                },
            )
        })
        .collect();
    ClassificationTable { rows }
});

const RECORD_KIND: &str = "classification";

impl ClassificationTable {
    pub fn builtin() -> &'static ClassificationTable {
        &BUILTIN
    }

    /// The built-in table amended by `[classification]` records. Each record
    /// replaces the whole row for its `resource_type` key.
    pub fn from_override_text(text: &str) -> Result<Self, ClassificationError> {
        let records = record::parse(text)?;
        Self::builtin().with_overrides(&records)
    }

    pub fn with_overrides(&self, records: &[Record]) -> Result<Self, ClassificationError> {
        let mut table = self.clone();
        for rec in records {
            if rec.kind != RECORD_KIND {
                return Err(ClassificationError::Invalid {
                    line: rec.line,
                    reason: format!("unexpected record type `{}`", rec.kind),
                });
            }
            let (key, row) = parse_row(rec)?;
            table.rows.insert(key, row);
        }
        Ok(table)
    }

    pub fn classify(&self, rt: &ResourceType) -> &Classification {
        let key = rt.to_string();
        self.rows
            .get(&key)
            .or_else(|| self.rows.get(OTHER_KEY))
            .unwrap_or_else(|| &BUILTIN.rows[OTHER_KEY])
    }

    pub fn lifecycle_of(&self, rt: &ResourceType) -> (LifecyclePhase, &str, &str) {
        let c = self.classify(rt);
        (c.lifecycle_phase, &c.representation, &c.notation)
    }

    pub fn nonaka_class_of(&self, rt: &ResourceType) -> NonakaClass {
        self.classify(rt).nonaka
    }

    pub fn knowledge_category_of(&self, rt: &ResourceType) -> KnowledgeCategory {
        self.classify(rt).category
    }

    pub fn romiszowski_of(&self, rt: &ResourceType) -> RomiszowskiClass {
        self.classify(rt).romiszowski.clone()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &Classification)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn to_records(&self) -> Vec<Record> {
        self.rows
            .iter()
            .map(|(key, c)| {
                let mut r = Record::new(RECORD_KIND);
                r.push("resource_type", key.as_str());
                r.push("lifecycle_phase", c.lifecycle_phase.as_ref());
                r.push_opt("representation", Some(&c.representation));
                r.push_opt("notation", Some(&c.notation));
                r.push("nonaka", c.nonaka.as_ref());
                r.push("category", c.category.as_ref());
                r.push("romiszowski", c.romiszowski.category().as_ref());
                r.push("romiszowski_sub", c.romiszowski.subcategory());
                r
            })
            .collect()
    }
}

fn parse_row(rec: &Record) -> Result<(String, Classification), ClassificationError> {
    let invalid = |name: &str, reason: String| ClassificationError::Invalid {
        line: rec.line_of(name),
        reason,
    };
    let required = |name: &str| {
        rec.get(name)
            .ok_or_else(|| invalid(name, format!("missing field `{name}`")))
    };
    fn tag<T: FromStr>(
        rec: &Record,
        name: &str,
        raw: &str,
    ) -> Result<T, ClassificationError> {
        raw.parse().map_err(|_| ClassificationError::Invalid {
            line: rec.line_of(name),
            reason: format!("invalid {name} `{raw}`"),
        })
    }

    let key = required("resource_type")?.to_string();
    if key != OTHER_KEY && key.parse::<ResourceType>().is_err() {
        return Err(invalid("resource_type", format!("unknown resource type `{key}`")));
    }
    let lifecycle_phase: LifecyclePhase = tag(rec, "lifecycle_phase", required("lifecycle_phase")?)?;
    let nonaka: NonakaClass = tag(rec, "nonaka", required("nonaka")?)?;
    if !nonaka.is_explicit() {
        return Err(invalid("nonaka", format!("`{nonaka}` is not an explicit asset class")));
    }
    let category: KnowledgeCategory = tag(rec, "category", required("category")?)?;
    let rom: RomiszowskiCategory = tag(rec, "romiszowski", required("romiszowski")?)?;
    let romiszowski = RomiszowskiClass::new(rom, required("romiszowski_sub")?)
        .map_err(|e| invalid("romiszowski_sub", e.to_string()))?;
    if !is_consistent(category, rom) {
        return Err(invalid(
            "romiszowski",
            format!("{category} knowledge cannot be classified as {rom}"),
        ));
    }
    Ok((
        key,
        Classification {
            lifecycle_phase,
            representation: rec.get("representation").unwrap_or_default().to_string(),
            notation: rec.get("notation").unwrap_or_default().to_string(),
            nonaka,
            category,
            romiszowski,
        },
    ))
}

pub fn lifecycle_of(rt: &ResourceType) -> (LifecyclePhase, &'static str, &'static str) {
    BUILTIN.lifecycle_of(rt)
}

pub fn nonaka_class_of(rt: &ResourceType) -> NonakaClass {
    BUILTIN.nonaka_class_of(rt)
}

pub fn knowledge_category_of(rt: &ResourceType) -> KnowledgeCategory {
    BUILTIN.knowledge_category_of(rt)
}

pub fn romiszowski_of(rt: &ResourceType) -> RomiszowskiClass {
    BUILTIN.romiszowski_of(rt)
}

/// Every known resource type plus one `Other` sample, for exhaustive checks.
pub fn enumerate_types() -> Vec<ResourceType> {
    ResourceType::known()
        .chain(std::iter::once(ResourceType::Other("sketch".into())))
        .collect()
}
