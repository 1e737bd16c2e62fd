//! Draft and final audit reports.
//!
//! A report is stored in the record format as one `[report]` record
//! (header, project fields, postulate violations, feedback), one `[row]`
//! per resource, five `[score]` records and one `[rec]` per
//! recommendation.

use std::fmt::Write as _;

use chrono::NaiveDate;

use crate::assessment::{Answer, AssessmentResult, Question, QuestionScore, Recommendation, RecCode, Subject};
use crate::classification::{Classification, ClassificationTable, RomiszowskiClass};
use crate::model::{Audit, AuditError, KnowledgeResource, ProjectRecord, ReportStatus};
use crate::record::{self, Record, RecordError};
use crate::workflow::Stage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportHeader {
    pub audit_id: String,
    pub project_name: String,
    pub date: NaiveDate,
    pub version: u32,
    pub status: ReportStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InventoryRow {
    pub resource: KnowledgeResource,
    pub classification: Classification,
    pub shared: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocument {
    pub header: ReportHeader,
    pub project: ProjectRecord,
    pub rows: Vec<InventoryRow>,
    pub assessment: AssessmentResult,
    /// Team feedback; final reports only.
    pub feedback: Option<String>,
}

fn audit_date(audit: &Audit) -> NaiveDate {
    audit
        .workflow()
        .last_timestamp()
        .map(|t| t.date_naive())
        .unwrap_or(audit.created_on)
}

pub fn draft_report(audit: &Audit, assessment: &AssessmentResult) -> Result<ReportDocument, AuditError> {
    draft_report_with(audit, assessment, ClassificationTable::builtin())
}

pub fn draft_report_with(
    audit: &Audit,
    assessment: &AssessmentResult,
    table: &ClassificationTable,
) -> Result<ReportDocument, AuditError> {
    let wrong_stage = || AuditError::WrongStage {
        operation: "draft a report",
        stage: audit.stage(),
    };
    if audit.stage() < Stage::Verification {
        return Err(wrong_stage());
    }
    let version = audit.workflow().current_report_version().ok_or_else(wrong_stage)?;
    let rows = audit
        .resources()
        .iter()
        .map(|r| InventoryRow {
            resource: r.clone(),
            classification: table.classify(&r.resource_type).clone(),
            shared: crate::assessment::is_shared(r),
        })
        .collect();
    Ok(ReportDocument {
        header: ReportHeader {
            audit_id: audit.audit_id.clone(),
            project_name: audit.project.project_name.clone(),
            date: audit_date(audit),
            version,
            status: ReportStatus::Draft,
        },
        project: audit.project.clone(),
        rows,
        assessment: assessment.clone(),
        feedback: None,
    })
}

pub fn finalize_report(audit: &Audit, doc: &ReportDocument, feedback: &str) -> Result<ReportDocument, AuditError> {
    if let Some(done) = audit.final_report() {
        return Err(AuditError::AlreadyFinal(done.version));
    }
    let validated = audit.workflow().validated_version();
    if validated != Some(doc.header.version) {
        return Err(AuditError::NotValidated {
            version: doc.header.version,
            validated: validated.map_or_else(|| "none".to_string(), |v| format!("v{v}")),
        });
    }
    let mut out = doc.clone();
    out.header.status = ReportStatus::Final;
    out.header.date = audit_date(audit);
    out.feedback = Some(feedback.to_string()).filter(|f| !f.is_empty());
    Ok(out)
}

fn bool_text(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

impl ReportDocument {
    pub fn to_records(&self) -> Vec<Record> {
        let mut out = Vec::new();

        let mut rep = Record::new("report");
        rep.push("audit_id", &self.header.audit_id);
        rep.push("project_name", &self.header.project_name);
        rep.push("date", self.header.date.to_string());
        rep.push("version", self.header.version.to_string());
        rep.push("status", self.header.status.to_string());
        rep.push("heuristic_valid", bool_text(self.assessment.heuristic_valid));
        for id in &self.assessment.postulate_violations {
            rep.push("postulate_violation", id);
        }
        for (name, value) in self.project.fields() {
            rep.push(format!("project.{name}"), value);
        }
        rep.push_opt("feedback", self.feedback.as_deref());
        out.push(rep);

        for row in &self.rows {
            let mut rec = Record::new("row");
            for (name, value) in row.resource.fields() {
                rec.push(name, value);
            }
            let c = &row.classification;
            rec.push("class.lifecycle_phase", c.lifecycle_phase.to_string());
            rec.push_opt("class.representation", Some(&c.representation));
            rec.push_opt("class.notation", Some(&c.notation));
            rec.push("class.nonaka", c.nonaka.to_string());
            rec.push("class.category", c.category.to_string());
            rec.push("class.romiszowski", c.romiszowski.category().to_string());
            rec.push("class.romiszowski_sub", c.romiszowski.subcategory());
            rec.push("shared", bool_text(row.shared));
            out.push(rec);
        }

        for s in &self.assessment.scores {
            let mut rec = Record::new("score");
            rec.push("question", s.question.to_string());
            rec.push("coverage", s.coverage.to_string());
            rec.push("answered", bool_text(s.answered));
            for a in answer_lines(&s.answer) {
                rec.push("answer", a);
            }
            for (subject, field) in &s.missing {
                rec.push("missing", format!("{subject} {field}"));
            }
            out.push(rec);
        }

        for r in &self.assessment.recommendations {
            let mut rec = Record::new("rec");
            rec.push("code", r.code.to_string());
            rec.push("subject", r.subject.to_string());
            rec.push("dimension", r.dimension.to_string());
            rec.push("text", &r.text);
            out.push(rec);
        }
        out
    }

    pub fn serialize(&self) -> Result<String, RecordError> {
        record::write(&self.to_records())
    }

    pub fn parse(text: &str) -> Result<ReportDocument, RecordError> {
        from_records(&record::parse(text)?)
    }

    /// Short plain-text summary used in letters and the CLI.
    pub fn summary_text(&self) -> String {
        let shared = self.rows.iter().filter(|r| r.shared).count();
        let mut out = String::new();
        let _ = writeln!(out, "{} ({})", self.header.project_name, self.header.audit_id);
        let _ = writeln!(out, "resources: {}, shared: {}", self.rows.len(), shared);
        for s in &self.assessment.scores {
            let _ = writeln!(
                out,
                "{} {} coverage {}{}",
                s.question,
                s.question.text(),
                s.coverage,
                if s.answered { " (answered)" } else { "" }
            );
        }
        let _ = write!(
            out,
            "heuristically valid: {}",
            if self.assessment.heuristic_valid { "yes" } else { "no" }
        );
        out
    }

    pub fn recommendations_text(&self) -> String {
        if self.assessment.recommendations.is_empty() {
            return "none".into();
        }
        self.assessment
            .recommendations
            .iter()
            .map(|r| format!("- {} [{}] {}: {}", r.code, r.dimension, r.subject, r.text))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn answer_lines(answer: &Answer) -> Vec<String> {
    match answer {
        Answer::Shared(ids) => ids.clone(),
        Answer::Locations(v) => v.iter().map(|(id, loc)| format!("{id} {loc}")).collect(),
        Answer::Mechanisms(v) => v
            .iter()
            .flat_map(|(id, ms)| ms.iter().map(move |m| format!("{id} {m}")))
            .collect(),
        Answer::Parties(v) | Answer::Policies(v) => v.clone(),
    }
}

fn parse_answer(q: Question, lines: Vec<&str>, at: usize) -> Result<Answer, RecordError> {
    let split = |l: &str| {
        l.split_once(' ')
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .ok_or_else(|| RecordError::new(at, format!("answer `{l}` lacks a resource id")))
    };
    let owned = || lines.iter().map(|l| l.to_string()).collect::<Vec<_>>();
    Ok(match q {
        Question::Q1 => Answer::Shared(owned()),
        Question::Q2 => Answer::Locations(lines.iter().map(|l| split(l)).collect::<Result<_, _>>()?),
        Question::Q3 => {
            let mut out: Vec<(String, Vec<String>)> = Vec::new();
            for l in &lines {
                let (id, m) = split(l)?;
                match out.last_mut() {
                    Some((last, ms)) if *last == id => ms.push(m),
                    _ => out.push((id, vec![m])),
                }
            }
            Answer::Mechanisms(out)
        }
        Question::Q4 => Answer::Parties(owned()),
        Question::Q5 => Answer::Policies(owned()),
    })
}

fn required<'a>(rec: &'a Record, name: &str) -> Result<&'a str, RecordError> {
    rec.get(name)
        .ok_or_else(|| RecordError::new(rec.line, format!("[{}] lacks `{name}`", rec.kind)))
}

fn parsed<T: std::str::FromStr>(rec: &Record, name: &str) -> Result<T, RecordError> {
    let raw = required(rec, name)?;
    raw.parse()
        .map_err(|_| RecordError::new(rec.line_of(name), format!("bad {name} `{raw}`")))
}

fn parse_bool(rec: &Record, name: &str) -> Result<bool, RecordError> {
    match required(rec, name)? {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(RecordError::new(rec.line_of(name), format!("bad {name} `{other}`"))),
    }
}

pub fn from_records(records: &[Record]) -> Result<ReportDocument, RecordError> {
    let mut iter = records.iter();
    let rep = iter
        .next()
        .filter(|r| r.kind == "report")
        .ok_or_else(|| RecordError::new(1, "a report starts with a [report] record"))?;

    let date_raw = required(rep, "date")?;
    let date = crate::syntax::parse_date(date_raw).map_err(|e| RecordError::new(rep.line_of("date"), e))?;
    let header = ReportHeader {
        audit_id: required(rep, "audit_id")?.to_string(),
        project_name: required(rep, "project_name")?.to_string(),
        date,
        version: parsed(rep, "version")?,
        status: parsed(rep, "status")?,
    };
    let mut project = ProjectRecord::default();
    let mut violations = Vec::new();
    for f in &rep.fields {
        if let Some(name) = f.name.strip_prefix("project.") {
            project
                .set_field(name, &f.value)
                .map_err(|e| RecordError::new(f.line, e.to_string()))?;
        } else if f.name == "postulate_violation" {
            violations.push(f.value.clone());
        } else if !matches!(
            f.name.as_str(),
            "audit_id" | "project_name" | "date" | "version" | "status" | "heuristic_valid" | "feedback"
        ) {
            return Err(RecordError::new(f.line, format!("unknown report field `{}`", f.name)));
        }
    }
    let heuristic_valid = parse_bool(rep, "heuristic_valid")?;
    let feedback = rep.get("feedback").map(str::to_string);

    let mut rows = Vec::new();
    let mut scores = Vec::new();
    let mut recs = Vec::new();
    for rec in iter {
        match rec.kind.as_str() {
            "row" => rows.push(parse_row(rec)?),
            "score" => scores.push(parse_score(rec)?),
            "rec" => recs.push(Recommendation {
                code: parsed::<RecCode>(rec, "code")?,
                subject: parsed::<Subject>(rec, "subject")?,
                dimension: parsed(rec, "dimension")?,
                text: required(rec, "text")?.to_string(),
            }),
            other => return Err(RecordError::new(rec.line, format!("unexpected [{other}] record"))),
        }
    }
    let scores: [QuestionScore; 5] = scores
        .try_into()
        .map_err(|v: Vec<_>| RecordError::new(rep.line, format!("expected 5 [score] records, found {}", v.len())))?;
    Ok(ReportDocument {
        header,
        project,
        rows,
        assessment: AssessmentResult {
            scores,
            postulate_violations: violations,
            recommendations: recs,
            heuristic_valid,
        },
        feedback,
    })
}

fn parse_row(rec: &Record) -> Result<InventoryRow, RecordError> {
    let mut resource = KnowledgeResource::new(
        required(rec, "name")?,
        parsed(rec, "resource_type")?,
    );
    for f in &rec.fields {
        if f.name.starts_with("class.") || f.name == "shared" {
            continue;
        }
        resource
            .set_field(&f.name, &f.value)
            .map_err(|e| RecordError::new(f.line, e.to_string()))?;
    }
    let sub = required(rec, "class.romiszowski_sub")?;
    let romiszowski = RomiszowskiClass::new(parsed(rec, "class.romiszowski")?, sub)
        .map_err(|e| RecordError::new(rec.line_of("class.romiszowski_sub"), e.to_string()))?;
    Ok(InventoryRow {
        resource,
        classification: Classification {
            lifecycle_phase: parsed(rec, "class.lifecycle_phase")?,
            representation: rec.get("class.representation").unwrap_or_default().to_string(),
            notation: rec.get("class.notation").unwrap_or_default().to_string(),
            nonaka: parsed(rec, "class.nonaka")?,
            category: parsed(rec, "class.category")?,
            romiszowski,
        },
        shared: parse_bool(rec, "shared")?,
    })
}

fn parse_score(rec: &Record) -> Result<QuestionScore, RecordError> {
    let question: Question = parsed(rec, "question")?;
    let answer = parse_answer(question, rec.get_all("answer").collect(), rec.line_of("answer"))?;
    let mut missing = Vec::new();
    for f in rec.fields.iter().filter(|f| f.name == "missing") {
        let (subject, field) = f
            .value
            .split_once(' ')
            .ok_or_else(|| RecordError::new(f.line, "expected `<subject> <field>`"))?;
        let subject = subject.parse().map_err(|e: String| RecordError::new(f.line, e))?;
        missing.push((subject, field.to_string()));
    }
    Ok(QuestionScore {
        question,
        coverage: parsed(rec, "coverage")?,
        answered: parse_bool(rec, "answered")?,
        answer,
        missing,
    })
}
