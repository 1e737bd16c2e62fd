use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use chrono::{NaiveDate, TimeZone, Utc};

use kaf_core::assessment::score;
use kaf_core::classification::{FormatTag, ResourceType};
use kaf_core::crosswalk::{export_dc, serialize_dc};
use kaf_core::model::{new_audit, Audit, KnowledgeResource, Permission, ProjectRecord};
use kaf_core::reporting::{draft_report, finalize_report, ReportDocument};
use kaf_core::storage::Registry;
use kaf_core::workflow::{EventKind, StepId, Verdict, WorkflowEvent};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn kaf_with_input(root: &Path, args: &[&str], input: &str) -> Run {
    let mut argv = vec!["kaf", "--registry", root.to_str().unwrap()];
    argv.extend_from_slice(args);
    let mut stdin = input.as_bytes();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = kaf_cli::run(argv, &mut stdin, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn kaf(root: &Path, args: &[&str]) -> Run {
    kaf_with_input(root, args, "")
}

fn ok(root: &Path, args: &[&str]) -> String {
    let r = kaf(root, args);
    assert_eq!(r.code, 0, "kaf {args:?}: {}", r.err);
    r.out
}

fn fresh() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ok(dir.path(), &["init", "--name", "Desk Audit", "--date", "2011-03-01"]), "desk-audit-001\n");
    dir
}

#[test]
fn status_on_fresh_audit_lists_first_step() {
    let dir = fresh();
    let out = ok(dir.path(), &["stage", "status"]);
    assert_eq!(
        out,
        "audit: desk-audit-001\nstage: planning\ncompleted: none\nnext:\n  step_completed(s1_1)\n"
    );
}

#[test]
fn resource_add_in_planning_is_wrong_stage() {
    let dir = fresh();
    let r = kaf(dir.path(), &["resource", "add", "--name", "Glossary", "--type", "glossary"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("error: wrong-stage"), "{}", r.err);
    assert_eq!(r.out, "");
}

#[test]
fn usage_errors_exit_2() {
    let dir = fresh();
    for args in [
        &["stage", "step", "s9_9"][..],
        &["frobnicate"],
        &["resource", "add", "--name", "x"],
        &["stage", "event", "report_sent", "--verdict", "valid"],
        &["letter", "render", "funder_notice", "--set", "sender_name=J. Auditor", "--set", "nonsense=1"],
        &["init", "--name", "X", "--set", "no_such_field=1"],
    ] {
        let r = kaf(dir.path(), args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.err);
        assert!(!r.err.is_empty());
    }
    let mut out = Vec::new();
    let code = kaf_cli::run(["kaf", "score"], &mut &b""[..], &mut out, &mut Vec::new());
    assert_eq!(code, 2, "no registry");
}

#[test]
fn domain_errors_exit_1_with_error_name() {
    let dir = fresh();
    let r = kaf(dir.path(), &["stage", "step", "s1_2", "--at", "2011-03-01T09:00:00Z"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("error: illegal-transition"), "{}", r.err);
    let r = kaf(dir.path(), &["--audit", "nope-001", "score"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("not-found"), "{}", r.err);
    let _held = Registry::new(dir.path()).lock("desk-audit-001").unwrap();
    let r = kaf(dir.path(), &["project", "set", "funding_body", "EPSRC"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("lock-contended"), "{}", r.err);
}

fn to_execution(root: &Path) {
    for (i, s) in ["s1_1", "s1_2", "s1_3", "s1_4"].iter().enumerate() {
        ok(root, &["stage", "step", s, "--at", &format!("2011-03-01T0{i}:00:00Z")]);
    }
}

#[test]
fn export_dc_equals_library_serialization() {
    let dir = fresh();
    to_execution(dir.path());
    let id = ok(
        dir.path(),
        &[
            "resource", "add", "--name", "Interface Specification", "--type", "system_specification",
            "--set", "url=http://x.org/s", "--set", "permission_required=no", "--set", "format=pdf",
            "--set", "license=CC BY 3.0", "--set", "language=en",
        ],
    );
    assert_eq!(id, "R001\n");
    let out = ok(dir.path(), &["export", "dc", "R001"]);
    let a = Registry::new(dir.path()).load_audit("desk-audit-001").unwrap();
    assert_eq!(out, serialize_dc(&export_dc(a.resource("R001").unwrap()).unwrap()));

    let file = dir.path().join("r001.dc");
    ok(dir.path(), &["--output", file.to_str().unwrap(), "export", "dc", "R001"]);
    assert_eq!(fs::read_to_string(file).unwrap(), out);
}

#[test]
fn interactive_add_reprompts_on_findings() {
    let dir = fresh();
    to_execution(dir.path());
    // name, type, then every optional field blank except a bad and a good date.
    let mut input = String::from("Ops wiki\nnot-a-type\nother:wiki-page\n\n\nyesterday\n2011-02-01\n");
    input.push_str(&"\n".repeat(20));
    let r = kaf_with_input(dir.path(), &["resource", "add", "--interactive"], &input);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.ends_with("R001\n"));
    assert!(r.out.contains("resource_type: "));
    assert_eq!(r.out.matches("invalid-date").count(), 1, "{}", r.out);
    assert_eq!(r.out.matches("unknown resource type").count(), 1, "{}", r.out);
    let shown = ok(dir.path(), &["resource", "show", "R001"]);
    assert!(shown.contains("resource_type = other:wiki-page\n"), "{shown}");
    assert!(shown.contains("last_updated = 2011-02-01\n"), "{shown}");
}

/// Files under `root`, excluding locks and rendered letters.
fn snapshot(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            let name = p.strip_prefix(root).unwrap().display().to_string();
            if p.is_dir() {
                stack.push(p);
            } else if !name.ends_with(".txt") && !name.ends_with(".lock") {
                out.insert(name, fs::read_to_string(&p).unwrap());
            }
        }
    }
    out
}

const SCRIPT: &[&[&str]] = &[
    &["stage", "status"],
    &["stage", "step", "s1_1", "@"],
    &["stage", "step", "s1_2", "@", "--note", "leader informed"],
    &["letter", "render", "funder_notice", "--set", "sender_name=J. Auditor", "--set", "funder_contact=Dr. R. Funder", "--set", "framework_url=https://kaf.example.org/"],
    &["stage", "step", "s1_3", "@"],
    &["stage", "step", "s1_4", "@"],
    &["resource", "add", "--name", "Requirements", "--type", "requirements_specification", "--set", "url=http://x.org/req", "--set", "permission_required=no", "--set", "format=pdf"],
    &["resource", "add", "--name", "Architecture", "--type", "system_diagram"],
    &["resource", "add", "--name", "Test plan", "--type", "test_plan", "--set", "other_location=shared drive", "--set", "permission_required=yes"],
    &["resource", "list"],
    &["export", "dc", "R001"],
    &["stage", "step", "s2_1", "@"],
    &["stage", "step", "s2_2", "@"],
    &["stage", "step", "s3_1", "@"],
    &["report", "draft"],
    &["stage", "event", "report_sent", "@"],
    &["stage", "event", "validation_received", "--verdict", "invalid", "@", "--note", "diagram has no specification"],
    &["stage", "event", "interview_held", "@"],
    &["resource", "edit", "R002", "--set", "corresponds_to=R001"],
    &["stage", "event", "report_amended", "@"],
    &["report", "draft"],
    &["stage", "event", "report_sent", "@"],
    &["stage", "status"],
    &["stage", "event", "validation_received", "--verdict", "valid", "@"],
    &["report", "finalize", "--feedback", "team agrees"],
    &["stage", "step", "s4_2", "@"],
    &["score"],
    &["stage", "step", "s4_3", "@"],
    &["stage", "event", "audit_closed", "@"],
    &["stage", "status"],
    &["registry", "list"],
];

fn stamp(i: usize) -> String {
    let t = Utc.with_ymd_and_hms(2011, 3, 1, 9, 0, 0).unwrap() + chrono::Duration::hours(i as i64);
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn run_script(root: &Path) -> String {
    let mut transcript = String::new();
    ok(root, &["init", "--name", "Desk Audit", "--date", "2011-03-01", "--set", "funding_body=EPSRC", "--set", "km_contact=A. Smith"]);
    for (i, cmd) in SCRIPT.iter().enumerate() {
        let ts = stamp(i);
        let args: Vec<&str> = cmd
            .iter()
            .flat_map(|a| if *a == "@" { vec!["--at", ts.as_str()] } else { vec![*a] })
            .collect();
        let out = ok(root, &args);
        transcript.push_str(&format!("$ kaf {}\n{out}", args.join(" ")));
    }
    transcript
}

/// The same audit driven through library calls only.
fn library_audit(root: &Path) {
    let reg = Registry::new(root);
    let mut project = ProjectRecord::new("Desk Audit");
    project.funding_body = "EPSRC".into();
    project.km_contact = Some("A. Smith".into());
    let mut a = new_audit(project, NaiveDate::from_ymd_opt(2011, 3, 1).unwrap(), []).unwrap();
    let at = |i: usize| Utc.with_ymd_and_hms(2011, 3, 1, 9, 0, 0).unwrap() + chrono::Duration::hours(i as i64);
    let ev = |a: &Audit, i: usize, k: EventKind| a.record_event(WorkflowEvent::new(at(i), k)).unwrap();
    let step = |s| EventKind::StepCompleted(s);
    let draft = |a: &Audit| {
        let doc = draft_report(a, &score(a)).unwrap();
        a.store_draft(doc.header.version, doc.serialize().unwrap()).unwrap()
    };

    a = ev(&a, 1, step(StepId::S1_1));
    a = a.record_event(WorkflowEvent::new(at(2), step(StepId::S1_2)).with_note("leader informed")).unwrap();
    a = ev(&a, 4, step(StepId::S1_3));
    a = ev(&a, 5, step(StepId::S1_4));
    let mut r = KnowledgeResource::new("Requirements", ResourceType::RequirementsSpecification);
    r.url = Some("http://x.org/req".into());
    r.permission_required = Permission::No;
    r.format = Some(FormatTag::Pdf);
    a = a.add_resource(r).unwrap();
    a = a.add_resource(KnowledgeResource::new("Architecture", ResourceType::SystemDiagram)).unwrap();
    let mut r = KnowledgeResource::new("Test plan", ResourceType::TestPlan);
    r.other_location = Some("shared drive".into());
    r.permission_required = Permission::Yes;
    a = a.add_resource(r).unwrap();
    a = ev(&a, 11, step(StepId::S2_1));
    a = ev(&a, 12, step(StepId::S2_2));
    a = ev(&a, 13, step(StepId::S3_1));
    a = draft(&a);
    a = ev(&a, 15, EventKind::ReportSent(1));
    a = a
        .record_event(
            WorkflowEvent::new(at(16), EventKind::ValidationReceived(1, Verdict::Invalid))
                .with_note("diagram has no specification"),
        )
        .unwrap();
    a = ev(&a, 17, EventKind::InterviewHeld(1));
    let mut r = a.resource("R002").unwrap().clone();
    r.corresponds_to = Some("R001".into());
    a = a.update_resource(r).unwrap();
    a = ev(&a, 19, EventKind::ReportAmended(2));
    a = draft(&a);
    a = ev(&a, 21, EventKind::ReportSent(2));
    a = ev(&a, 23, EventKind::ValidationReceived(2, Verdict::Valid));
    let doc = ReportDocument::parse(&a.report_version(2).unwrap().body).unwrap();
    let fin = finalize_report(&a, &doc, "team agrees").unwrap();
    a = a.store_final(2, fin.serialize().unwrap()).unwrap();
    a = ev(&a, 25, step(StepId::S4_2));
    a = ev(&a, 27, step(StepId::S4_3));
    a = ev(&a, 28, EventKind::AuditClosed);
    reg.save_audit(&a).unwrap();
}

#[test]
fn scripted_audit_matches_library_and_golden_transcript() {
    let cli_dir = tempfile::tempdir().unwrap();
    let transcript = run_script(cli_dir.path());
    let lib_dir = tempfile::tempdir().unwrap();
    library_audit(lib_dir.path());
    assert_eq!(snapshot(cli_dir.path()), snapshot(lib_dir.path()));

    let golden = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/session.txt");
    if std::env::var_os("KAF_BLESS").is_some() {
        fs::write(golden, &transcript).unwrap();
    }
    assert_eq!(transcript, fs::read_to_string(golden).unwrap());

    let letter = fs::read_to_string(cli_dir.path().join("desk-audit-001/reports/funder_notice-0.txt")).unwrap();
    assert!(letter.contains("Dr. R. Funder"));
    let shown = ok(cli_dir.path(), &["report", "show"]);
    let a = Registry::new(lib_dir.path()).load_audit("desk-audit-001").unwrap();
    assert_eq!(shown, a.final_report().unwrap().body);
    assert!(shown.contains("\nstatus = final\n"));
    assert!(shown.contains("[rec]"));
}

#[test]
fn binary_reads_registry_from_environment() {
    let dir = fresh();
    let out = Command::new(env!("CARGO_BIN_EXE_kaf"))
        .args(["registry", "list"])
        .env("KAF_REGISTRY", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "desk-audit-001\tplanning\tDesk Audit\n");

    let out = Command::new(env!("CARGO_BIN_EXE_kaf"))
        .args(["resource", "add", "--name", "G", "--type", "glossary"])
        .env("KAF_REGISTRY", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
