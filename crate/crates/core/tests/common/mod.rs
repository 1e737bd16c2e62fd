//! Random builders shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use kaf_core::classification::{
    enumerate_types, ClassificationTable, FormatTag, LifecyclePhase, NonakaClass, ResourceType,
};
use kaf_core::crosswalk::{DcElement, DublinCoreRecord};
use kaf_core::model::{new_audit, Audit, KnowledgeResource, Permission, ProjectRecord, ReportStatus};
use kaf_core::workflow::{EventKind, Stage, StepId, Verdict, WorkflowEvent, WorkflowState};
use strum::IntoEnumIterator;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2011, 3, 1, 9, 0, 0).unwrap()
}

const WORDS: &[&str] = &[
    "alpha", "design", "wiki", "Ops team", "ISO 15288", "SysML", "archive", "Zoë", "naïve café", "x=y",
    "50% done", "[draft]", "<<<", "a # b", "tab\there",
];

pub fn word(rng: &mut ChaCha8Rng) -> String {
    WORDS.choose(rng).unwrap().to_string()
}

/// Single-line text, trimmed, non-empty.
pub fn text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

pub fn date(rng: &mut ChaCha8Rng) -> String {
    let d = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + Duration::days(rng.gen_range(0..9000));
    d.to_string()
}

pub fn language(rng: &mut ChaCha8Rng) -> String {
    ["en", "eng", "en-GB", "de", "zh-Hant-TW", "akk"].choose(rng).unwrap().to_string()
}

pub fn uri(rng: &mut ChaCha8Rng) -> String {
    ["http://x.org/s", "https://example.com/a/b", "www.nectise.com", "ftp://files.example.net/k"]
        .choose(rng)
        .unwrap()
        .to_string()
}

pub fn resource_type(rng: &mut ChaCha8Rng) -> ResourceType {
    let mut all = enumerate_types();
    all.push(ResourceType::Other("wiki-page".into()));
    all.choose(rng).unwrap().clone()
}

pub fn format_tag(rng: &mut ChaCha8Rng) -> FormatTag {
    let mut all: Vec<FormatTag> = FormatTag::known().collect();
    all.push(FormatTag::Other("latex".into()));
    all.choose(rng).unwrap().clone()
}

/// A resource that passes intrinsic validation. `earlier` are ids it may
/// point at.
pub fn resource(rng: &mut ChaCha8Rng, id: &str, earlier: &[String], fill: f64) -> KnowledgeResource {
    let mut r = KnowledgeResource::new(text(rng), resource_type(rng));
    r.resource_id = id.to_string();
    let p = |rng: &mut ChaCha8Rng| rng.gen_bool(fill);
    if p(rng) {
        r.description = text(rng);
    }
    if p(rng) {
        r.maintained_by = Some(text(rng));
    }
    if p(rng) {
        r.last_updated = Some(date(rng));
    }
    if p(rng) {
        r.next_review_due = Some(date(rng));
    }
    if p(rng) {
        r.language = Some(language(rng));
    }
    if p(rng) {
        r.standard_compliance = Some(text(rng));
    }
    if p(rng) {
        r.policy_prescribed = Some(text(rng));
    }
    if p(rng) {
        r.format = Some(format_tag(rng));
    }
    if p(rng) {
        r.license = Some(text(rng));
    }
    if p(rng) {
        r.url = Some(uri(rng));
    }
    if p(rng) {
        r.other_location = Some(text(rng));
    }
    if p(rng) {
        r.permission_required = if rng.gen_bool(0.5) { Permission::Yes } else { Permission::No };
    }
    if p(rng) {
        r.lifecycle_phase = Some(*LifecyclePhase::iter().collect::<Vec<_>>().choose(rng).unwrap());
    }
    if !earlier.is_empty() && p(rng) {
        r.corresponds_to = Some(earlier.choose(rng).unwrap().clone());
    }
    r
}

/// Every field populated.
pub fn full_resource(rng: &mut ChaCha8Rng, id: &str, earlier: &[String]) -> KnowledgeResource {
    resource(rng, id, earlier, 1.0)
}

pub fn inventory(rng: &mut ChaCha8Rng, n: usize, fill: f64) -> Vec<KnowledgeResource> {
    let mut out: Vec<KnowledgeResource> = Vec::new();
    for i in 1..=n {
        let earlier: Vec<String> = out.iter().map(|r| r.resource_id.clone()).collect();
        out.push(resource(rng, &format!("R{i:03}"), &earlier, fill));
    }
    out
}

pub fn project(rng: &mut ChaCha8Rng, fill: f64) -> ProjectRecord {
    let mut p = ProjectRecord::new(text(rng));
    let f = |rng: &mut ChaCha8Rng| rng.gen_bool(fill);
    if f(rng) {
        p.description = if rng.gen_bool(0.5) { text(rng) } else { format!("{}\n{}", text(rng), text(rng)) };
    }
    if f(rng) {
        p.url = Some(uri(rng));
    }
    for _ in 0..rng.gen_range(0..3) {
        p.partners.push(text(rng));
    }
    if f(rng) {
        p.funding_body = text(rng);
    }
    if f(rng) {
        p.ks_policy = Some(text(rng));
    }
    if f(rng) {
        p.contractual_clauses = Some(text(rng));
    }
    if f(rng) {
        p.km_contact = Some(text(rng));
    }
    if f(rng) {
        p.duration = Some("36 months".into());
    }
    for _ in 0..rng.gen_range(0..2) {
        p.publications.push(text(rng));
    }
    if f(rng) {
        p.comments = Some(format!("{}\n\n{}", text(rng), text(rng)));
    }
    p
}

/// Every event kind worth probing from `state`: all steps, every
/// version-carrying kind around the current version, and closing.
pub fn candidate_kinds(state: &WorkflowState) -> Vec<EventKind> {
    let mut out: Vec<EventKind> = StepId::all().map(EventKind::StepCompleted).collect();
    let cur = state.current_report_version().unwrap_or(0);
    for v in 0..=cur + 2 {
        out.push(EventKind::ReportSent(v));
        out.push(EventKind::ValidationReceived(v, Verdict::Valid));
        out.push(EventKind::ValidationReceived(v, Verdict::Invalid));
        out.push(EventKind::InterviewHeld(v));
        out.push(EventKind::ReportAmended(v));
    }
    out.push(EventKind::AuditClosed);
    out
}

/// Random event sequence: mostly legal steps, some arbitrary ones.
pub fn event_sequence(rng: &mut ChaCha8Rng, len: usize) -> Vec<WorkflowEvent> {
    let mut state = WorkflowState::initial();
    let mut ts = t0();
    let mut out = Vec::new();
    for _ in 0..len {
        ts += Duration::seconds(rng.gen_range(0..5000));
        let legal: Vec<EventKind> = state.legal_events().into_iter().collect();
        let kind = if !legal.is_empty() && rng.gen_bool(0.85) {
            *legal.choose(rng).unwrap()
        } else {
            *candidate_kinds(&state).choose(rng).unwrap()
        };
        let e = WorkflowEvent::new(ts, kind);
        if let Ok(next) = state.apply(&e) {
            state = next;
        }
        out.push(e);
    }
    out
}

pub fn nonaka(table: &ClassificationTable, r: &KnowledgeResource) -> NonakaClass {
    table.nonaka_class_of(&r.resource_type)
}

/// A random audit reached through the public API: resources added while
/// allowed, drafts stored before sending, a final stored before closing.
pub fn audit(rng: &mut ChaCha8Rng, steps: usize) -> Audit {
    let mut a = new_audit(project(rng, 0.6), NaiveDate::from_ymd_opt(2011, 3, 1).unwrap(), []).unwrap();
    let mut ts = t0();
    for _ in 0..steps {
        ts += Duration::seconds(rng.gen_range(1..100_000));
        let stage = a.stage();
        if matches!(stage, Stage::Execution | Stage::Verification) && rng.gen_bool(0.3) && a.resources().len() < 30 {
            let earlier: Vec<String> = a.resources().iter().map(|r| r.resource_id.clone()).collect();
            let id = a.next_resource_id().unwrap();
            let r = resource(rng, &id, &earlier, 0.5);
            a = a.add_resource(r).unwrap();
            continue;
        }
        if stage == Stage::Verification {
            let cur = a.workflow().current_report_version().unwrap();
            let drafted = a.report_version(cur).is_some_and(|v| v.status == ReportStatus::Draft);
            if !drafted && a.report_version(cur).is_none() || drafted && rng.gen_bool(0.2) {
                let body = format!("[report]\nversion = {cur}\nnote = {}\n", text(rng));
                a = a.store_draft(cur, body).unwrap();
                continue;
            }
        }
        let legal: Vec<EventKind> = a.workflow().legal_events().into_iter().collect();
        let Some(kind) = legal.choose(rng).cloned() else { break };
        if kind == EventKind::AuditClosed && a.final_report().is_none() {
            let v = a.workflow().validated_version().unwrap();
            a = a.store_final(v, format!("[report]\nversion = {v}\nstatus = final\n")).unwrap();
        }
        let mut e = WorkflowEvent::new(ts, kind);
        if rng.gen_bool(0.3) {
            e = e.with_note(text(rng));
        }
        a = a.record_event(e).unwrap();
    }
    a
}

pub fn dc_record(rng: &mut ChaCha8Rng) -> DublinCoreRecord {
    let elements: Vec<DcElement> = DcElement::all().collect();
    let mut r = DublinCoreRecord::new();
    for _ in 0..rng.gen_range(0..12) {
        let e = *elements.choose(rng).unwrap();
        let v = match e {
            DcElement::Date => date(rng),
            DcElement::Language => language(rng),
            _ => {
                let mut v = text(rng);
                if rng.gen_bool(0.1) {
                    v = format!(" {v}  ");
                }
                v
            }
        };
        r.push(e, v);
    }
    r
}

/// Fully populated context for each letter, used by the golden files.
pub fn letter_context(kind: kaf_core::comms::LetterKind) -> kaf_core::comms::LetterContext {
    use kaf_core::comms::{LetterContext, LetterKind};
    let base = LetterContext::new().with("sender_name", "J. Auditor");
    match kind {
        LetterKind::FunderNotice => base
            .with("funder_contact", "Dr. R. Funder")
            .with("framework_url", "https://kaf.example.org/")
            .with("project_list", "- NECTISE\n- SEAS DTC"),
        LetterKind::LeaderNotice => base
            .with("project_leader", "Prof. P. Leader")
            .with("framework_url", "https://kaf.example.org/")
            .with("project_list", "- NECTISE\n- SEAS DTC")
            .with("summary", "NECTISE, 2006-2010, funded by EPSRC"),
        LetterKind::VerifyFindings => base
            .with("project_leader", "Prof. P. Leader")
            .with("summary", "NECTISE (nectise-001), 4 partners")
            .with("km_contact_name", "A. Smith")
            .with("resource_count", "7")
            .with("deadline", "Friday 11 March 2011"),
        LetterKind::FinalFindings => base
            .with("project_leader", "Prof. P. Leader")
            .with("summary", "resources: 7, shared: 5\nheuristically valid: yes")
            .with(
                "recommendations",
                "- REC-LICENSE R003: attach explicit license\n- REC-POLICY PROJECT: adopt and publish a knowledge-sharing policy",
            ),
    }
}
