//! Five-question scoring, the shareability postulate and recommendations.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Zero};
use strum::{AsRefStr, Display, EnumIter, EnumString, IntoEnumIterator};

use crate::classification::{ClassificationTable, DimensionTag, NonakaClass};
use crate::model::{Audit, KnowledgeResource, Permission, ProjectRecord};

pub type Coverage = Ratio<u64>;

/// A question counts as answered at or above this coverage.
pub fn threshold() -> Coverage {
    Ratio::new(4, 5)
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum Question {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
}

impl Question {
    pub fn text(self) -> &'static str {
        match self {
            Question::Q1 => "What knowledge resources are shared?",
            Question::Q2 => "Where are these assets located?",
            Question::Q3 => "By what mechanisms are they shared?",
            Question::Q4 => "Who is responsible for sharing them?",
            Question::Q5 => "Under what knowledge sharing and reuse policy?",
        }
    }
}

/// Either the project as a whole or one resource.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Project,
    Resource(String),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Project => f.write_str("PROJECT"),
            Subject::Resource(id) => f.write_str(id),
        }
    }
}

impl FromStr for Subject {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PROJECT" => Ok(Subject::Project),
            id if crate::syntax::is_resource_id(id) => Ok(Subject::Resource(id.to_string())),
            other => Err(format!("`{other}` is neither PROJECT nor a resource id")),
        }
    }
}

/// Per-question answer payload. Every list is sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    /// Ids of shared resources.
    Shared(Vec<String>),
    /// (id, url or other location).
    Locations(Vec<(String, String)>),
    /// (id, populated mechanisms such as `format: pdf`).
    Mechanisms(Vec<(String, Vec<String>)>),
    /// Responsible party names.
    Parties(Vec<String>),
    /// Policy texts found.
    Policies(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionScore {
    pub question: Question,
    pub coverage: Coverage,
    pub answered: bool,
    pub answer: Answer,
    /// (subject, field) pairs whose absence lowers the coverage.
    pub missing: Vec<(Subject, String)>,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
pub enum RecCode {
    #[strum(serialize = "REC-CONTACT")]
    Contact,
    #[strum(serialize = "REC-FORMAT")]
    Format,
    #[strum(serialize = "REC-LANGUAGE")]
    Language,
    #[strum(serialize = "REC-LICENSE")]
    License,
    #[strum(serialize = "REC-POLICY")]
    Policy,
    #[strum(serialize = "REC-SYSTEMIC")]
    Systemic,
}

impl RecCode {
    pub fn dimension(self) -> DimensionTag {
        match self {
            RecCode::Contact | RecCode::License | RecCode::Policy => DimensionTag::Organisational,
            RecCode::Format | RecCode::Systemic => DimensionTag::Technical,
            RecCode::Language => DimensionTag::Cognitive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Recommendation {
    pub code: RecCode,
    pub subject: Subject,
    pub text: String,
    pub dimension: DimensionTag,
}

impl Recommendation {
    fn new(code: RecCode, subject: Subject, text: String) -> Self {
        Self {
            code,
            subject,
            text,
            dimension: code.dimension(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssessmentResult {
    pub scores: [QuestionScore; 5],
    pub postulate_violations: Vec<String>,
    pub recommendations: Vec<Recommendation>,
    pub heuristic_valid: bool,
}

impl AssessmentResult {
    pub fn score(&self, q: Question) -> &QuestionScore {
        &self.scores[q as usize]
    }
}

fn has_location(r: &KnowledgeResource) -> bool {
    r.url.is_some() || r.other_location.is_some()
}

/// Whether a resource is publicly reusable.
pub fn is_shared(r: &KnowledgeResource) -> bool {
    has_location(r) && r.permission_required == Permission::No
}

/// Shared status can only be decided when location and permission are known.
pub fn is_decidable(r: &KnowledgeResource) -> bool {
    has_location(r) && r.permission_required != Permission::Unknown
}

fn fraction(hits: usize, total: usize) -> Coverage {
    if total == 0 {
        Coverage::zero()
    } else {
        Ratio::new(hits as u64, total as u64)
    }
}

fn half() -> Coverage {
    Ratio::new(1, 2)
}

fn flag(b: bool) -> Coverage {
    if b {
        Coverage::one()
    } else {
        Coverage::zero()
    }
}

fn sorted_ids(resources: &[KnowledgeResource]) -> Vec<&KnowledgeResource> {
    let mut v: Vec<_> = resources.iter().collect();
    v.sort_by(|a, b| a.resource_id.cmp(&b.resource_id));
    v
}

fn finish(question: Question, coverage: Coverage, answer: Answer, mut missing: Vec<(Subject, String)>) -> QuestionScore {
    missing.sort();
    missing.dedup();
    QuestionScore {
        question,
        answered: coverage >= threshold(),
        coverage,
        answer,
        missing,
    }
}

fn res_missing(r: &KnowledgeResource, field: &str) -> (Subject, String) {
    (Subject::Resource(r.resource_id.clone()), field.to_string())
}

fn project_missing(field: &str) -> (Subject, String) {
    (Subject::Project, field.to_string())
}

/// Scores the five questions over a project and its inventory.
pub fn score_questions(project: &ProjectRecord, resources: &[KnowledgeResource]) -> [QuestionScore; 5] {
    let rs = sorted_ids(resources);
    let n = rs.len();
    let empty_gap = || if n == 0 { vec![project_missing("inventory")] } else { vec![] };

    // Q1
    let mut missing = empty_gap();
    for r in &rs {
        if !has_location(r) {
            missing.push(res_missing(r, "url"));
        }
        if r.permission_required == Permission::Unknown {
            missing.push(res_missing(r, "permission_required"));
        }
    }
    let q1 = finish(
        Question::Q1,
        fraction(rs.iter().filter(|r| is_decidable(r)).count(), n),
        Answer::Shared(rs.iter().filter(|r| is_shared(r)).map(|r| r.resource_id.clone()).collect()),
        missing,
    );

    // Q2
    let mut missing = empty_gap();
    let mut located = Vec::new();
    for r in &rs {
        match r.url.as_ref().or(r.other_location.as_ref()) {
            Some(loc) => located.push((r.resource_id.clone(), loc.clone())),
            None => missing.push(res_missing(r, "url")),
        }
    }
    let q2 = finish(Question::Q2, fraction(located.len(), n), Answer::Locations(located), missing);

    // Q3
    let mut missing = empty_gap();
    let mut mechanisms = Vec::new();
    let mut populated = 0usize;
    for r in &rs {
        let mut found = Vec::new();
        let slots = [
            ("format", r.format.as_ref().map(ToString::to_string)),
            ("standard_compliance", r.standard_compliance.clone()),
            ("license", r.license.clone()),
        ];
        for (field, value) in slots {
            match value {
                Some(v) => found.push(format!("{field}: {v}")),
                None => missing.push(res_missing(r, field)),
            }
        }
        populated += found.len();
        if !found.is_empty() {
            mechanisms.push((r.resource_id.clone(), found));
        }
    }
    let q3 = finish(Question::Q3, fraction(populated, 3 * n), Answer::Mechanisms(mechanisms), missing);

    // Q4
    let mut missing = empty_gap();
    let mut parties = BTreeSet::new();
    match &project.km_contact {
        Some(c) => {
            parties.insert(c.clone());
        }
        None => missing.push(project_missing("km_contact")),
    }
    let mut maintained = 0;
    for r in &rs {
        match &r.maintained_by {
            Some(m) => {
                maintained += 1;
                parties.insert(m.clone());
            }
            None => missing.push(res_missing(r, "maintained_by")),
        }
    }
    let q4 = finish(
        Question::Q4,
        half() * flag(project.km_contact.is_some()) + half() * fraction(maintained, n),
        Answer::Parties(parties.into_iter().collect()),
        missing,
    );

    // Q5
    let mut missing = empty_gap();
    let mut policies = BTreeSet::new();
    policies.extend(project.ks_policy.iter().cloned());
    policies.extend(project.contractual_clauses.iter().cloned());
    let project_policy = !policies.is_empty();
    if !project_policy {
        missing.push(project_missing("ks_policy"));
    }
    let mut prescribed = 0;
    for r in &rs {
        match &r.policy_prescribed {
            Some(p) => {
                prescribed += 1;
                policies.insert(p.clone());
            }
            None => missing.push(res_missing(r, "policy_prescribed")),
        }
    }
    let q5 = finish(
        Question::Q5,
        half() * flag(project_policy) + half() * fraction(prescribed, n),
        Answer::Policies(policies.into_iter().collect()),
        missing,
    );

    [q1, q2, q3, q4, q5]
}

/// Ids of conceptual resources with no systemic counterpart, sorted.
///
/// A counterpart is either the `corresponds_to` target or any systemic
/// resource in the same lifecycle phase. A resource's phase is its declared
/// `lifecycle_phase`, falling back to the phase of its type.
pub fn postulate_violations(resources: &[KnowledgeResource], table: &ClassificationTable) -> Vec<String> {
    let class = |r: &KnowledgeResource| table.nonaka_class_of(&r.resource_type);
    let phase = |r: &KnowledgeResource| {
        r.lifecycle_phase
            .unwrap_or_else(|| table.lifecycle_of(&r.resource_type).0)
    };
    let systemic: Vec<&KnowledgeResource> =
        resources.iter().filter(|r| class(r) == NonakaClass::Systemic).collect();
    let systemic_phases: BTreeSet<_> = systemic.iter().map(|r| phase(r)).collect();
    let systemic_ids: BTreeSet<&str> = systemic.iter().map(|r| r.resource_id.as_str()).collect();

    let mut out: Vec<String> = resources
        .iter()
        .filter(|r| class(r) == NonakaClass::Conceptual)
        .filter(|r| {
            let linked = r
                .corresponds_to
                .as_deref()
                .is_some_and(|t| systemic_ids.contains(t));
            !linked && !systemic_phases.contains(&phase(r))
        })
        .map(|r| r.resource_id.clone())
        .collect();
    out.sort();
    out
}

pub fn check_postulate(audit: &Audit) -> Vec<String> {
    postulate_violations(audit.resources(), ClassificationTable::builtin())
}

pub fn check_postulate_with(audit: &Audit, table: &ClassificationTable) -> Vec<String> {
    postulate_violations(audit.resources(), table)
}

pub fn score(audit: &Audit) -> AssessmentResult {
    score_with(audit, ClassificationTable::builtin())
}

pub fn score_with(audit: &Audit, table: &ClassificationTable) -> AssessmentResult {
    let scores = score_questions(&audit.project, audit.resources());
    let heuristic_valid = scores.iter().any(|s| s.answered);
    let mut result = AssessmentResult {
        scores,
        postulate_violations: postulate_violations(audit.resources(), table),
        recommendations: Vec::new(),
        heuristic_valid,
    };
    result.recommendations = recommend(&result, audit);
    result
}

/// Rule table over the assessment and the audit; sorted by (code, subject).
pub fn recommend(result: &AssessmentResult, audit: &Audit) -> Vec<Recommendation> {
    let mut out = Vec::new();
    if !result.score(Question::Q5).answered {
        out.push(Recommendation::new(
            RecCode::Policy,
            Subject::Project,
            "adopt and publish a knowledge-sharing policy".into(),
        ));
    }
    if audit.project.km_contact.is_none() {
        out.push(Recommendation::new(
            RecCode::Contact,
            Subject::Project,
            "designate a knowledge-sharing contact".into(),
        ));
    }
    for id in &result.postulate_violations {
        out.push(Recommendation::new(
            RecCode::Systemic,
            Subject::Resource(id.clone()),
            format!("produce systemic documentation for {id}"),
        ));
    }
    for r in audit.resources() {
        let subject = || Subject::Resource(r.resource_id.clone());
        if r.license.is_none() {
            out.push(Recommendation::new(RecCode::License, subject(), "attach explicit license".into()));
        }
        if r.format.is_none() || r.standard_compliance.is_none() {
            out.push(Recommendation::new(
                RecCode::Format,
                subject(),
                "declare format and standard compliance".into(),
            ));
        }
        if r.language.is_none() {
            out.push(Recommendation::new(
                RecCode::Language,
                subject(),
                "state the language of the resource".into(),
            ));
        }
    }
    out.sort();
    out
}

/// All recommendation codes, in sort order.
pub fn rec_codes() -> impl Iterator<Item = RecCode> {
    RecCode::iter()
}
