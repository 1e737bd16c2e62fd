//! Audits, project records and knowledge resources.
//!
//! Values are immutable: every operation on an [`Audit`] returns a new
//! audit or an error and leaves the original untouched. Optional fields use
//! `None` for "unknown"; an empty string is never a valid stored value.

use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use strum::{AsRefStr, Display, EnumString};
use thiserror::Error;

use crate::classification::{FormatTag, LifecyclePhase, ResourceType};
use crate::syntax;
use crate::workflow::{
    replay, EventKind, ReplayError, Stage, StepId, Verdict, WorkflowError, WorkflowEvent,
    WorkflowState,
};

/// Whether a resource needs permission to be accessed or reused.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Display, EnumString, AsRefStr)]
#[strum(serialize_all = "snake_case")]
pub enum Permission {
    Yes,
    No,
    #[default]
    Unknown,
}

/// The violated rule behind a [`Finding`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Display, AsRefStr)]
#[strum(serialize_all = "kebab-case")]
pub enum Rule {
    Required,
    EmptyValue,
    Untrimmed,
    MultiLine,
    InvalidDate,
    InvalidLanguage,
    InvalidUri,
    InvalidResourceId,
    DanglingReference,
    EmptyLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub field: &'static str,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

fn join_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },
}

fn invalid(field: &str, reason: impl fmt::Display) -> FieldError {
    FieldError::InvalidValue {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

fn opt(value: &str) -> Option<String> {
    (!value.is_empty()).then(|| value.to_string())
}

/// Checks shared by every free-text value; returns the first violated rule.
fn text_rule(value: &str, multi_line_ok: bool) -> Option<(Rule, String)> {
    if !multi_line_ok && (value.contains('\n') || value.contains('\r')) {
        return Some((Rule::MultiLine, "value must be a single line".into()));
    }
    if value.trim() != value {
        return Some((Rule::Untrimmed, "leading or trailing whitespace".into()));
    }
    None
}

fn check_optional(
    out: &mut Vec<Finding>,
    field: &'static str,
    value: Option<&str>,
    multi_line_ok: bool,
    extra: impl FnOnce(&str) -> Option<(Rule, String)>,
) {
    let Some(v) = value else { return };
    let rule = if v.is_empty() {
        Some((Rule::EmptyValue, "use an absent value for unknown".into()))
    } else {
        text_rule(v, multi_line_ok).or_else(|| extra(v))
    };
    if let Some((rule, detail)) = rule {
        out.push(Finding { field, rule, detail });
    }
}

fn date_rule(v: &str) -> Option<(Rule, String)> {
    syntax::parse_date(v).err().map(|e| (Rule::InvalidDate, e))
}

fn language_rule(v: &str) -> Option<(Rule, String)> {
    (!syntax::is_language_tag(v)).then(|| (Rule::InvalidLanguage, format!("`{v}` is not a language tag")))
}

fn uri_rule(v: &str) -> Option<(Rule, String)> {
    (!syntax::is_uri(v)).then(|| (Rule::InvalidUri, format!("`{v}` is not a URI")))
}

fn id_rule(v: &str) -> Option<(Rule, String)> {
    (!syntax::is_resource_id(v)).then(|| (Rule::InvalidResourceId, format!("`{v}` does not match Rnnn")))
}

fn label_rule(label: Option<&str>) -> Option<(Rule, String)> {
    match label {
        Some("") => Some((Rule::EmptyLabel, "other: needs a label".into())),
        Some(l) => text_rule(l, false),
        None => None,
    }
}

/// Organisation and project information (audit form part 1).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProjectRecord {
    pub project_name: String,
    pub description: String,
    pub url: Option<String>,
    pub partners: Vec<String>,
    pub funding_body: String,
    pub ks_policy: Option<String>,
    pub contractual_clauses: Option<String>,
    /// Person in charge of knowledge sharing.
    pub km_contact: Option<String>,
    pub duration: Option<String>,
    pub publications: Vec<String>,
    /// The form's free "other comments" column.
    pub comments: Option<String>,
    /// Fields read from a file that this version does not know; kept verbatim.
    pub unknown_fields: Vec<(String, String)>,
}

impl ProjectRecord {
    pub const FIELDS: [&'static str; 11] = [
        "project_name",
        "description",
        "url",
        "partners",
        "funding_body",
        "ks_policy",
        "contractual_clauses",
        "km_contact",
        "duration",
        "publications",
        "comments",
    ];

    pub fn new(project_name: impl Into<String>) -> Self {
        Self {
            project_name: project_name.into(),
            ..Self::default()
        }
    }

    /// Populated fields in declaration order; list fields yield one entry
    /// per element.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |name: &'static str, v: &str| {
            if !v.is_empty() {
                out.push((name, v.to_string()));
            }
        };
        push("project_name", &self.project_name);
        push("description", &self.description);
        push("url", self.url.as_deref().unwrap_or_default());
        for p in &self.partners {
            push("partners", p);
        }
        push("funding_body", &self.funding_body);
        push("ks_policy", self.ks_policy.as_deref().unwrap_or_default());
        push("contractual_clauses", self.contractual_clauses.as_deref().unwrap_or_default());
        push("km_contact", self.km_contact.as_deref().unwrap_or_default());
        push("duration", self.duration.as_deref().unwrap_or_default());
        for p in &self.publications {
            push("publications", p);
        }
        push("comments", self.comments.as_deref().unwrap_or_default());
        out
    }

    /// Sets a scalar field, or appends to a list field. An empty value
    /// clears the field.
    pub fn set_field(&mut self, name: &str, value: &str) -> Result<(), FieldError> {
        match name {
            "project_name" => self.project_name = value.to_string(),
            "description" => self.description = value.to_string(),
            "url" => self.url = opt(value),
            "partners" if value.is_empty() => self.partners.clear(),
            "partners" => self.partners.push(value.to_string()),
            "funding_body" => self.funding_body = value.to_string(),
            "ks_policy" => self.ks_policy = opt(value),
            "contractual_clauses" => self.contractual_clauses = opt(value),
            "km_contact" => self.km_contact = opt(value),
            "duration" => self.duration = opt(value),
            "publications" if value.is_empty() => self.publications.clear(),
            "publications" => self.publications.push(value.to_string()),
            "comments" => self.comments = opt(value),
            other => return Err(FieldError::UnknownField(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Vec<Finding> {
        let mut out = Vec::new();
        if self.project_name.trim().is_empty() {
            out.push(Finding {
                field: "project_name",
                rule: Rule::Required,
                detail: "project name must not be empty".into(),
            });
        } else if let Some((rule, detail)) = text_rule(&self.project_name, false) {
            out.push(Finding { field: "project_name", rule, detail });
        }
        if let Some((rule, detail)) = text_rule(&self.description, true) {
            out.push(Finding { field: "description", rule, detail });
        }
        check_optional(&mut out, "url", self.url.as_deref(), false, uri_rule);
        if let Some(bad) = self.partners.iter().find_map(|p| list_entry_rule(p)) {
            out.push(Finding { field: "partners", rule: bad.0, detail: bad.1 });
        }
        if let Some((rule, detail)) = text_rule(&self.funding_body, false) {
            out.push(Finding { field: "funding_body", rule, detail });
        }
        check_optional(&mut out, "ks_policy", self.ks_policy.as_deref(), false, |_| None);
        check_optional(&mut out, "contractual_clauses", self.contractual_clauses.as_deref(), false, |_| None);
        check_optional(&mut out, "km_contact", self.km_contact.as_deref(), false, |_| None);
        check_optional(&mut out, "duration", self.duration.as_deref(), false, |_| None);
        if let Some(bad) = self.publications.iter().find_map(|p| list_entry_rule(p)) {
            out.push(Finding { field: "publications", rule: bad.0, detail: bad.1 });
        }
        check_optional(&mut out, "comments", self.comments.as_deref(), true, |_| None);
        out
    }
}

fn list_entry_rule(v: &str) -> Option<(Rule, String)> {
    if v.is_empty() {
        Some((Rule::EmptyValue, "list entries must not be empty".into()))
    } else {
        text_rule(v, false)
    }
}

/// One inventory row (audit form part 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeResource {
    /// `Rnnn`; empty means "assign the next free id" when added to an audit.
    pub resource_id: String,
    pub name: String,
    pub resource_type: ResourceType,
    pub description: String,
    pub maintained_by: Option<String>,
    pub last_updated: Option<String>,
    pub next_review_due: Option<String>,
    pub language: Option<String>,
    pub standard_compliance: Option<String>,
    pub policy_prescribed: Option<String>,
    pub format: Option<FormatTag>,
    pub license: Option<String>,
    pub url: Option<String>,
    pub other_location: Option<String>,
    pub permission_required: Permission,
    pub lifecycle_phase: Option<LifecyclePhase>,
    /// Link from a conceptual resource to its systemic realisation.
    pub corresponds_to: Option<String>,
    pub unknown_fields: Vec<(String, String)>,
}

impl KnowledgeResource {
    pub const FIELDS: [&'static str; 17] = [
        "resource_id",
        "name",
        "resource_type",
        "description",
        "maintained_by",
        "last_updated",
        "next_review_due",
        "language",
        "standard_compliance",
        "policy_prescribed",
        "format",
        "license",
        "url",
        "other_location",
        "permission_required",
        "lifecycle_phase",
        "corresponds_to",
    ];

    pub fn new(name: impl Into<String>, resource_type: ResourceType) -> Self {
        Self {
            resource_id: String::new(),
            name: name.into(),
            resource_type,
            description: String::new(),
            maintained_by: None,
            last_updated: None,
            next_review_due: None,
            language: None,
            standard_compliance: None,
            policy_prescribed: None,
            format: None,
            license: None,
            url: None,
            other_location: None,
            permission_required: Permission::Unknown,
            lifecycle_phase: None,
            corresponds_to: None,
            unknown_fields: Vec::new(),
        }
    }

    /// Canonical text of a field, `None` when unknown or empty.
    pub fn field_value(&self, name: &str) -> Option<String> {
        let s = |v: &str| opt(v);
        match name {
            "resource_id" => s(&self.resource_id),
            "name" => s(&self.name),
            "resource_type" => Some(self.resource_type.to_string()),
            "description" => s(&self.description),
            "maintained_by" => self.maintained_by.clone(),
            "last_updated" => self.last_updated.clone(),
            "next_review_due" => self.next_review_due.clone(),
            "language" => self.language.clone(),
            "standard_compliance" => self.standard_compliance.clone(),
            "policy_prescribed" => self.policy_prescribed.clone(),
            "format" => self.format.as_ref().map(ToString::to_string),
            "license" => self.license.clone(),
            "url" => self.url.clone(),
            "other_location" => self.other_location.clone(),
            "permission_required" => match self.permission_required {
                Permission::Unknown => None,
                p => Some(p.to_string()),
            },
            "lifecycle_phase" => self.lifecycle_phase.map(|p| p.to_string()),
            "corresponds_to" => self.corresponds_to.clone(),
            _ => None,
        }
        .filter(|v| !v.is_empty())
    }

    /// Populated fields in declaration order.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        Self::FIELDS
            .iter()
            .filter_map(|f| self.field_value(f).map(|v| (*f, v)))
            .collect()
    }

    /// Sets a field from its canonical text. An empty value clears it
    /// (back to unknown). Dates, language tags and URIs are stored as given
    /// and checked by [`validate_record`].
    pub fn set_field(&mut self, name: &str, value: &str) -> Result<(), FieldError> {
        match name {
            "resource_id" => self.resource_id = value.to_string(),
            "name" => self.name = value.to_string(),
            "resource_type" => {
                self.resource_type = value.parse().map_err(|e| invalid(name, e))?;
            }
            "description" => self.description = value.to_string(),
            "maintained_by" => self.maintained_by = opt(value),
            "last_updated" => self.last_updated = opt(value),
            "next_review_due" => self.next_review_due = opt(value),
            "language" => self.language = opt(value),
            "standard_compliance" => self.standard_compliance = opt(value),
            "policy_prescribed" => self.policy_prescribed = opt(value),
            "format" if value.is_empty() => self.format = None,
            "format" => self.format = Some(value.parse().map_err(|e| invalid(name, e))?),
            "license" => self.license = opt(value),
            "url" => self.url = opt(value),
            "other_location" => self.other_location = opt(value),
            "permission_required" if value.is_empty() => {
                self.permission_required = Permission::Unknown
            }
            "permission_required" => {
                self.permission_required = value
                    .parse()
                    .map_err(|_| invalid(name, format!("expected yes, no or unknown, got `{value}`")))?;
            }
            "lifecycle_phase" if value.is_empty() => self.lifecycle_phase = None,
            "lifecycle_phase" => {
                self.lifecycle_phase = Some(
                    value
                        .parse()
                        .map_err(|_| invalid(name, format!("unknown lifecycle phase `{value}`")))?,
                );
            }
            "corresponds_to" => self.corresponds_to = opt(value),
            other => return Err(FieldError::UnknownField(other.to_string())),
        }
        Ok(())
    }
}

/// Field-level findings for one resource, in field declaration order, at
/// most one per field. Referential checks against an inventory are done by
/// [`Audit::validate_resource`].
pub fn validate_record(r: &KnowledgeResource) -> Vec<Finding> {
    let mut out = Vec::new();
    let id_finding = if r.resource_id.is_empty() {
        Some((Rule::Required, "resource id must be assigned".into()))
    } else {
        id_rule(&r.resource_id)
    };
    let name_finding = if r.name.trim().is_empty() {
        Some((Rule::Required, "name must not be empty".into()))
    } else {
        text_rule(&r.name, false)
    };
    let type_finding = label_rule(match &r.resource_type {
        ResourceType::Other(l) => Some(l.as_str()),
        _ => None,
    });
    for (field, found) in [
        ("resource_id", id_finding),
        ("name", name_finding),
        ("resource_type", type_finding),
        ("description", text_rule(&r.description, false)),
    ] {
        if let Some((rule, detail)) = found {
            out.push(Finding { field, rule, detail });
        }
    }
    check_optional(&mut out, "maintained_by", r.maintained_by.as_deref(), false, |_| None);
    check_optional(&mut out, "last_updated", r.last_updated.as_deref(), false, date_rule);
    check_optional(&mut out, "next_review_due", r.next_review_due.as_deref(), false, date_rule);
    check_optional(&mut out, "language", r.language.as_deref(), false, language_rule);
    check_optional(&mut out, "standard_compliance", r.standard_compliance.as_deref(), false, |_| None);
    check_optional(&mut out, "policy_prescribed", r.policy_prescribed.as_deref(), false, |_| None);
    if let Some(found) = label_rule(match &r.format {
        Some(FormatTag::Other(l)) => Some(l.as_str()),
        _ => None,
    }) {
        out.push(Finding { field: "format", rule: found.0, detail: found.1 });
    }
    check_optional(&mut out, "license", r.license.as_deref(), false, |_| None);
    check_optional(&mut out, "url", r.url.as_deref(), false, uri_rule);
    check_optional(&mut out, "other_location", r.other_location.as_deref(), false, |_| None);
    check_optional(&mut out, "corresponds_to", r.corresponds_to.as_deref(), false, id_rule);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Display, EnumString, AsRefStr)]
#[strum(serialize_all = "snake_case")]
pub enum ReportStatus {
    Draft,
    SentForValidation,
    Rejected,
    Validated,
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportVersion {
    pub version: u32,
    pub body: String,
    pub status: ReportStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("invalid-project: {}", join_findings(.0))]
    InvalidProject(Vec<Finding>),
    #[error("wrong-stage: cannot {operation} during {stage}")]
    WrongStage { operation: &'static str, stage: Stage },
    #[error("duplicate-id: resource {0} already exists")]
    DuplicateId(String),
    #[error("dangling-reference: {id} corresponds_to {target}, which is not in the inventory")]
    DanglingReference { id: String, target: String },
    #[error("referenced-resource: {id} is referenced by {by}")]
    Referenced { id: String, by: String },
    #[error("invalid-resource: {}", join_findings(.0))]
    InvalidResource(Vec<Finding>),
    #[error("inventory-full: no resource ids left after R999")]
    InventoryFull,
    #[error("unknown-resource: {0}")]
    UnknownResource(String),
    #[error("{0}")]
    Workflow(#[from] WorkflowError),
    #[error("replay-error: {0}")]
    Replay(#[from] ReplayError),
    #[error("not-drafted: report version {0} has no stored draft")]
    NotDrafted(u32),
    #[error("report-locked: report version {version} is {status} and can no longer be redrafted")]
    ReportLocked { version: u32, status: ReportStatus },
    #[error("not-validated: report version {version} is not the validated version ({validated})")]
    NotValidated { version: u32, validated: String },
    #[error("already-final: a final report already exists (version {0})")]
    AlreadyFinal(u32),
    #[error("not-final: the audit cannot close without a final report")]
    NotFinal,
    #[error("invalid-report-versions: {0}")]
    InvalidReportVersions(String),
}

impl AuditError {
    pub fn code(&self) -> &'static str {
        match self {
            AuditError::InvalidProject(_) => "invalid-project",
            AuditError::WrongStage { .. } => "wrong-stage",
            AuditError::DuplicateId(_) => "duplicate-id",
            AuditError::DanglingReference { .. } => "dangling-reference",
            AuditError::Referenced { .. } => "referenced-resource",
            AuditError::InvalidResource(_) => "invalid-resource",
            AuditError::InventoryFull => "inventory-full",
            AuditError::UnknownResource(_) => "unknown-resource",
            AuditError::Workflow(e) => e.code(),
            AuditError::Replay(_) => "replay-error",
            AuditError::NotDrafted(_) => "not-drafted",
            AuditError::ReportLocked { .. } => "report-locked",
            AuditError::NotValidated { .. } => "not-validated",
            AuditError::AlreadyFinal(_) => "already-final",
            AuditError::NotFinal => "not-final",
            AuditError::InvalidReportVersions(_) => "invalid-report-versions",
        }
    }
}

/// Lowercase slug: ASCII alphanumerics kept, every other run becomes one
/// hyphen, no leading or trailing hyphens. Falls back to `audit`.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    if out.is_empty() {
        out.push_str("audit");
    }
    out
}

/// `<slug>-<nnn>` with the counter one past the highest already taken for
/// the same slug.
pub fn next_audit_id<'a>(project_name: &str, taken: impl IntoIterator<Item = &'a str>) -> String {
    let base = slug(project_name);
    let prefix = format!("{base}-");
    let max = taken
        .into_iter()
        .filter_map(|id| id.strip_prefix(&prefix))
        .filter(|n| n.len() >= 3 && n.bytes().all(|b| b.is_ascii_digit()))
        .filter_map(|n| n.parse::<u32>().ok())
        .max()
        .unwrap_or(0);
    format!("{base}-{:03}", max + 1)
}

/// One project audit: the project record, its resource inventory, the
/// workflow event log and the report versions produced along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Audit {
    pub audit_id: String,
    pub project: ProjectRecord,
    pub created_on: NaiveDate,
    resources: Vec<KnowledgeResource>,
    events: Vec<WorkflowEvent>,
    workflow: WorkflowState,
    report_versions: Vec<ReportVersion>,
}

/// Starts an audit in planning with an empty inventory. `taken_ids` are the
/// audit ids already present in the registry.
pub fn new_audit<'a>(
    project: ProjectRecord,
    created_on: NaiveDate,
    taken_ids: impl IntoIterator<Item = &'a str>,
) -> Result<Audit, AuditError> {
    let findings = project.validate();
    if !findings.is_empty() {
        return Err(AuditError::InvalidProject(findings));
    }
    Ok(Audit {
        audit_id: next_audit_id(&project.project_name, taken_ids),
        project,
        created_on,
        resources: Vec::new(),
        events: Vec::new(),
        workflow: WorkflowState::initial(),
        report_versions: Vec::new(),
    })
}

impl Audit {
    /// Reassembles an audit from stored parts, replaying the event log and
    /// checking cross-record invariants.
    pub fn from_parts(
        audit_id: String,
        project: ProjectRecord,
        created_on: NaiveDate,
        resources: Vec<KnowledgeResource>,
        events: Vec<WorkflowEvent>,
        report_versions: Vec<ReportVersion>,
    ) -> Result<Audit, AuditError> {
        let workflow = replay(&events)?;
        let mut seen = BTreeSet::new();
        for r in &resources {
            if !seen.insert(r.resource_id.as_str()) {
                return Err(AuditError::DuplicateId(r.resource_id.clone()));
            }
        }
        for r in &resources {
            if let Some(target) = &r.corresponds_to {
                if !seen.contains(target.as_str()) {
                    return Err(AuditError::DanglingReference {
                        id: r.resource_id.clone(),
                        target: target.clone(),
                    });
                }
            }
        }
        for (i, v) in report_versions.iter().enumerate() {
            if v.version as usize != i + 1 {
                return Err(AuditError::InvalidReportVersions(format!(
                    "expected version {} at position {}, found {}",
                    i + 1,
                    i + 1,
                    v.version
                )));
            }
        }
        if report_versions
            .iter()
            .filter(|v| v.status == ReportStatus::Final)
            .count()
            > 1
        {
            return Err(AuditError::InvalidReportVersions("more than one final version".into()));
        }
        Ok(Audit {
            audit_id,
            project,
            created_on,
            resources,
            events,
            workflow,
            report_versions,
        })
    }

    pub fn resources(&self) -> &[KnowledgeResource] {
        &self.resources
    }

    pub fn resource(&self, id: &str) -> Option<&KnowledgeResource> {
        self.resources.iter().find(|r| r.resource_id == id)
    }

    pub fn events(&self) -> &[WorkflowEvent] {
        &self.events
    }

    pub fn workflow(&self) -> &WorkflowState {
        &self.workflow
    }

    pub fn stage(&self) -> Stage {
        self.workflow.stage()
    }

    pub fn report_versions(&self) -> &[ReportVersion] {
        &self.report_versions
    }

    pub fn report_version(&self, version: u32) -> Option<&ReportVersion> {
        self.report_versions.iter().find(|v| v.version == version)
    }

    pub fn final_report(&self) -> Option<&ReportVersion> {
        self.report_versions
            .iter()
            .find(|v| v.status == ReportStatus::Final)
    }

    /// One past the highest id in the inventory.
    pub fn next_resource_id(&self) -> Result<String, AuditError> {
        let max = self
            .resources
            .iter()
            .filter_map(|r| syntax::resource_number(&r.resource_id))
            .max()
            .unwrap_or(0);
        if max >= 999 {
            return Err(AuditError::InventoryFull);
        }
        Ok(format!("R{:03}", max + 1))
    }

    /// Intrinsic findings plus referential integrity against this inventory.
    pub fn validate_resource(&self, r: &KnowledgeResource) -> Vec<Finding> {
        let mut findings = validate_record(r);
        // corresponds_to is the last declared field, so appending keeps order
        if let Some(target) = r.corresponds_to.as_deref() {
            if syntax::is_resource_id(target) && self.resource(target).is_none() {
                findings.push(Finding {
                    field: "corresponds_to",
                    rule: Rule::DanglingReference,
                    detail: format!("{target} is not in the inventory"),
                });
            }
        }
        findings
    }

    fn require_inventory_stage(&self, operation: &'static str) -> Result<(), AuditError> {
        match self.stage() {
            Stage::Execution | Stage::Verification => Ok(()),
            stage => Err(AuditError::WrongStage { operation, stage }),
        }
    }

    /// Appends a resource, assigning the next free id when its id is empty.
    pub fn add_resource(&self, mut resource: KnowledgeResource) -> Result<Audit, AuditError> {
        self.require_inventory_stage("add resources")?;
        if resource.resource_id.is_empty() {
            resource.resource_id = self.next_resource_id()?;
        } else if self.resource(&resource.resource_id).is_some() {
            return Err(AuditError::DuplicateId(resource.resource_id));
        }
        self.check_resource(&resource)?;
        let mut next = self.clone();
        next.resources.push(resource);
        Ok(next)
    }

    /// Replaces the resource with the same id.
    pub fn update_resource(&self, resource: KnowledgeResource) -> Result<Audit, AuditError> {
        self.require_inventory_stage("edit resources")?;
        let pos = self
            .resources
            .iter()
            .position(|r| r.resource_id == resource.resource_id)
            .ok_or_else(|| AuditError::UnknownResource(resource.resource_id.clone()))?;
        self.check_resource(&resource)?;
        let mut next = self.clone();
        next.resources[pos] = resource;
        Ok(next)
    }

    pub fn remove_resource(&self, id: &str) -> Result<Audit, AuditError> {
        self.require_inventory_stage("remove resources")?;
        if self.resource(id).is_none() {
            return Err(AuditError::UnknownResource(id.to_string()));
        }
        if let Some(by) = self
            .resources
            .iter()
            .find(|r| r.corresponds_to.as_deref() == Some(id) && r.resource_id != id)
        {
            return Err(AuditError::Referenced {
                id: id.to_string(),
                by: by.resource_id.clone(),
            });
        }
        let mut next = self.clone();
        next.resources.retain(|r| r.resource_id != id);
        Ok(next)
    }

    fn check_resource(&self, resource: &KnowledgeResource) -> Result<(), AuditError> {
        let findings = self.validate_resource(resource);
        if findings.iter().any(|f| f.rule == Rule::DanglingReference) {
            return Err(AuditError::DanglingReference {
                id: resource.resource_id.clone(),
                target: resource.corresponds_to.clone().unwrap_or_default(),
            });
        }
        if findings.is_empty() {
            Ok(())
        } else {
            Err(AuditError::InvalidResource(findings))
        }
    }

    pub fn set_project(&self, project: ProjectRecord) -> Result<Audit, AuditError> {
        if self.stage() == Stage::Closed {
            return Err(AuditError::WrongStage {
                operation: "edit the project record",
                stage: Stage::Closed,
            });
        }
        let findings = project.validate();
        if !findings.is_empty() {
            return Err(AuditError::InvalidProject(findings));
        }
        let mut next = self.clone();
        next.project = project;
        Ok(next)
    }

    /// Applies an event to the workflow and keeps report versions in step
    /// with it. A valid verdict also records `step_completed(s4_1)`, since
    /// the validated report satisfies that step.
    pub fn record_event(&self, event: WorkflowEvent) -> Result<Audit, AuditError> {
        let workflow = self.workflow.apply(&event)?;
        let mut next = self.clone();
        match event.kind {
            EventKind::ReportSent(v) => match next.version_mut(v) {
                Some(rv) if rv.status == ReportStatus::Draft => {
                    rv.status = ReportStatus::SentForValidation
                }
                _ => return Err(AuditError::NotDrafted(v)),
            },
            EventKind::ValidationReceived(v, verdict) => {
                if let Some(rv) = next.version_mut(v) {
                    rv.status = match verdict {
                        Verdict::Valid => ReportStatus::Validated,
                        Verdict::Invalid => ReportStatus::Rejected,
                    };
                }
            }
            EventKind::AuditClosed if self.final_report().is_none() => {
                return Err(AuditError::NotFinal);
            }
            _ => {}
        }
        let auto = matches!(event.kind, EventKind::ValidationReceived(_, Verdict::Valid))
            .then(|| {
                let v = workflow.validated_version().unwrap_or_default();
                WorkflowEvent::new(event.timestamp, EventKind::StepCompleted(StepId::S4_1))
                    .with_note(format!("report v{v} validated"))
            });
        next.workflow = workflow;
        next.events.push(event);
        if let Some(auto) = auto {
            next.workflow = next.workflow.apply(&auto)?;
            next.events.push(auto);
        }
        Ok(next)
    }

    fn version_mut(&mut self, v: u32) -> Option<&mut ReportVersion> {
        self.report_versions.iter_mut().find(|rv| rv.version == v)
    }

    /// Stores (or replaces) the draft body of the current report version.
    pub fn store_draft(&self, version: u32, body: String) -> Result<Audit, AuditError> {
        if self.stage() != Stage::Verification {
            return Err(AuditError::WrongStage {
                operation: "store a draft report",
                stage: self.stage(),
            });
        }
        let current = self.workflow.current_report_version().unwrap_or(0);
        if version != current {
            return Err(AuditError::Workflow(WorkflowError::StaleVersion {
                event: "report draft".into(),
                expected: current,
                got: version,
            }));
        }
        let mut next = self.clone();
        match next.version_mut(version) {
            Some(rv) if rv.status == ReportStatus::Draft => rv.body = body,
            Some(rv) => {
                return Err(AuditError::ReportLocked {
                    version,
                    status: rv.status,
                })
            }
            None => next.report_versions.push(ReportVersion {
                version,
                body,
                status: ReportStatus::Draft,
            }),
        }
        Ok(next)
    }

    /// Marks the validated version final and replaces its body with the
    /// final document.
    pub fn store_final(&self, version: u32, body: String) -> Result<Audit, AuditError> {
        if let Some(f) = self.final_report() {
            return Err(AuditError::AlreadyFinal(f.version));
        }
        if self.stage() != Stage::Reporting {
            return Err(AuditError::WrongStage {
                operation: "finalise the report",
                stage: self.stage(),
            });
        }
        let validated = self.workflow.validated_version();
        if validated != Some(version) {
            return Err(AuditError::NotValidated {
                version,
                validated: validated.map_or("none".into(), |v| v.to_string()),
            });
        }
        let mut next = self.clone();
        match next.version_mut(version) {
            Some(rv) => {
                rv.status = ReportStatus::Final;
                rv.body = body;
            }
            None => return Err(AuditError::NotDrafted(version)),
        }
        Ok(next)
    }
}
