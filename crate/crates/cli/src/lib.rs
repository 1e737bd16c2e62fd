//! `kaf` command-line interface.
//!
//! [`run`] takes the argument list and I/O handles so that tests can drive
//! the binary without spawning a process. Exit status: 0 success, 1 domain
//! error, 2 usage error.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kaf_core::assessment::{score_with, AssessmentResult, Question};
use kaf_core::classification::ResourceType;
use kaf_core::comms::{letter_placeholders, optional_placeholders, render_letter, LetterContext, LetterKind};
use kaf_core::crosswalk::{export_dc, serialize_dc};
use kaf_core::model::{new_audit, Audit, KnowledgeResource, ProjectRecord};
use kaf_core::record;
use kaf_core::reporting::{draft_report_with, finalize_report, ReportDocument};
use kaf_core::storage::{eventlog, report_file, resource_record, Registry, FINAL_REPORT};
use kaf_core::workflow::{EventKind, StepId, Verdict, WorkflowEvent};

#[derive(Debug, Parser)]
#[command(name = "kaf", version, about = "Knowledge audit registry and workflow tool")]
struct Cli {
    /// Registry root directory.
    #[arg(long, env = "KAF_REGISTRY", global = true)]
    registry: Option<PathBuf>,
    /// Audit id; defaults to the only audit in the registry.
    #[arg(long, global = true)]
    audit: Option<String>,
    /// Write letters, exports and reports here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Start a new audit for a project.
    Init(InitArgs),
    /// Show or edit the project record.
    #[command(subcommand)]
    Project(ProjectCmd),
    /// Manage the resource inventory.
    #[command(subcommand)]
    Resource(ResourceCmd),
    /// Inspect and advance the audit workflow.
    #[command(subcommand)]
    Stage(StageCmd),
    /// Render letters to the funder and project team.
    #[command(subcommand)]
    Letter(LetterCmd),
    /// Export resource metadata.
    #[command(subcommand)]
    Export(ExportCmd),
    /// Score the five questions and list recommendations.
    Score,
    /// Draft, finalise and show reports.
    #[command(subcommand)]
    Report(ReportCmd),
    /// List audits and clear stale locks.
    #[command(subcommand)]
    Registry(RegistryCmd),
}

#[derive(Debug, Args)]
struct InitArgs {
    /// Project name.
    #[arg(long)]
    name: String,
    /// Creation date, YYYY-MM-DD (default: today).
    #[arg(long, value_parser = parse_date)]
    date: Option<NaiveDate>,
    /// Further project fields as name=value.
    #[arg(long = "set", value_parser = parse_kv)]
    set: Vec<(String, String)>,
}

#[derive(Debug, Subcommand)]
enum ProjectCmd {
    /// Set one project field; an empty value clears it.
    Set { field: String, value: String },
    /// Print the project record.
    Show,
}

#[derive(Debug, Subcommand)]
enum ResourceCmd {
    /// Add a resource; the id is assigned.
    Add {
        #[arg(long, required_unless_present = "interactive")]
        name: Option<String>,
        #[arg(long = "type", required_unless_present = "interactive", value_parser = parse_type)]
        resource_type: Option<ResourceType>,
        #[arg(long = "set", value_parser = parse_kv)]
        set: Vec<(String, String)>,
        /// Prompt for each field on stdin.
        #[arg(long, conflicts_with_all = ["name", "resource_type", "set"])]
        interactive: bool,
    },
    /// Change fields of a resource; an empty value clears a field.
    Edit {
        id: String,
        #[arg(long = "set", value_parser = parse_kv, required = true)]
        set: Vec<(String, String)>,
    },
    /// Remove a resource no other resource refers to.
    Remove { id: String },
    /// One line per resource: id, type, name.
    List,
    /// Print one resource record.
    Show { id: String },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum EventName {
    ReportSent,
    ValidationReceived,
    InterviewHeld,
    ReportAmended,
    AuditClosed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum VerdictArg {
    Valid,
    Invalid,
}

#[derive(Debug, Args)]
struct EventOpts {
    #[arg(long)]
    note: Option<String>,
    /// Event time, YYYY-MM-DDTHH:MM:SSZ (default: now).
    #[arg(long, value_parser = parse_ts)]
    at: Option<DateTime<Utc>>,
}

#[derive(Debug, Subcommand)]
enum StageCmd {
    /// Current stage, completed steps and the legal next events.
    Status,
    /// Record a completed step.
    Step {
        #[arg(value_parser = parse_step)]
        id: StepId,
        #[command(flatten)]
        opts: EventOpts,
    },
    /// Record a verification event.
    Event {
        kind: EventName,
        /// Report version (default: the current one; for report_amended the next one).
        #[arg(long)]
        version: Option<u32>,
        #[arg(long)]
        verdict: Option<VerdictArg>,
        #[command(flatten)]
        opts: EventOpts,
    },
}

#[derive(Debug, Subcommand)]
enum LetterCmd {
    /// Render a letter; it is also saved under the audit's reports directory.
    Render {
        #[arg(value_parser = parse_letter)]
        kind: LetterKind,
        #[arg(long = "set", value_parser = parse_kv)]
        set: Vec<(String, String)>,
    },
}

#[derive(Debug, Subcommand)]
enum ExportCmd {
    /// Dublin Core record of one resource.
    Dc { id: String },
}

#[derive(Debug, Subcommand)]
enum ReportCmd {
    /// Store a draft of the current report version.
    Draft,
    /// Turn the validated version into the final report.
    Finalize {
        #[arg(long, default_value = "")]
        feedback: String,
    },
    /// Print a stored report.
    Show {
        #[arg(long)]
        version: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
enum RegistryCmd {
    /// Audits with their stage and project name.
    List,
    /// Remove a stale lock.
    Unlock,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected name=value, got `{s}`"))
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    kaf_core::syntax::parse_date(s)
}

fn parse_ts(s: &str) -> Result<DateTime<Utc>, String> {
    eventlog::parse_timestamp(s)
}

fn parse_step(s: &str) -> Result<StepId, String> {
    s.parse().map_err(|_| format!("unknown step `{s}` (expected s1_1 .. s4_3)"))
}

fn parse_type(s: &str) -> Result<ResourceType, String> {
    s.parse().map_err(|e: kaf_core::classification::TagError| e.to_string())
}

fn parse_letter(s: &str) -> Result<LetterKind, String> {
    s.parse().map_err(|_| {
        let kinds: Vec<String> = LetterKind::all().map(|k| k.to_string()).collect();
        format!("unknown letter `{s}` (expected one of {})", kinds.join(", "))
    })
}

enum Failure {
    Usage(String),
    Domain(String),
}

type Outcome = Result<(), Failure>;

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

struct Session<'a> {
    registry: Registry,
    audit: Option<String>,
    output: Option<PathBuf>,
    input: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs one command. Returns the exit status.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let Some(root) = cli.registry else {
        let _ = writeln!(err, "error: no registry given (use --registry or KAF_REGISTRY)");
        return 2;
    };
    let mut session = Session {
        registry: Registry::new(root),
        audit: cli.audit,
        output: cli.output,
        input,
        out,
        err,
    };
    match session.dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(session.err, "error: {m}");
            2
        }
        Err(Failure::Domain(m)) => {
            let _ = writeln!(session.err, "error: {m}");
            1
        }
    }
}

impl Session<'_> {
    fn dispatch(&mut self, command: Command) -> Outcome {
        match command {
            Command::Init(a) => self.init(a),
            Command::Project(ProjectCmd::Set { field, value }) => self.mutate(|a, _| {
                let mut p = a.project.clone();
                p.set_field(&field, &value).map_err(domain)?;
                a.set_project(p).map_err(domain)
            }),
            Command::Project(ProjectCmd::Show) => {
                let a = self.load()?;
                let mut rec = record::Record::new("project");
                for (name, value) in a.project.fields() {
                    rec.push(name, value);
                }
                self.print(&record::write(&[rec]).map_err(domain)?)
            }
            Command::Resource(cmd) => self.resource(cmd),
            Command::Stage(StageCmd::Status) => self.status(),
            Command::Stage(StageCmd::Step { id, opts }) => {
                self.record(EventKind::StepCompleted(id), opts)
            }
            Command::Stage(StageCmd::Event { kind, version, verdict, opts }) => {
                self.event(kind, version, verdict, opts)
            }
            Command::Letter(LetterCmd::Render { kind, set }) => self.letter(kind, set),
            Command::Export(ExportCmd::Dc { id }) => {
                let a = self.load()?;
                let r = a
                    .resource(&id)
                    .ok_or_else(|| Failure::Domain(format!("unknown-resource: {id}")))?;
                let dc = export_dc(r).map_err(domain)?;
                self.emit(&serialize_dc(&dc))
            }
            Command::Score => {
                let a = self.load()?;
                let result = self.assess(&a)?;
                self.print(&score_text(&result))
            }
            Command::Report(cmd) => self.report(cmd),
            Command::Registry(RegistryCmd::List) => {
                let (rows, warnings) = self.registry.list_audits().map_err(domain)?;
                for w in warnings {
                    let _ = writeln!(self.err, "warning: {}: {}", w.entry, w.error);
                }
                let text: String = rows
                    .iter()
                    .map(|r| format!("{}\t{}\t{}\n", r.audit_id, r.stage, r.project_name))
                    .collect();
                self.print(&text)
            }
            Command::Registry(RegistryCmd::Unlock) => {
                let id = self.audit_id()?;
                match self.registry.unlock(&id).map_err(domain)? {
                    Some(owner) => self.print(&format!("removed lock on {id} held by {owner}\n")),
                    None => self.print(&format!("{id} was not locked\n")),
                }
            }
        }
    }

    fn print(&mut self, text: &str) -> Outcome {
        self.out.write_all(text.as_bytes()).map_err(domain)
    }

    /// Writes to `--output` when given, else stdout.
    fn emit(&mut self, text: &str) -> Outcome {
        match &self.output {
            Some(path) => kaf_core::storage::write_atomic(path, text).map_err(domain),
            None => self.print(text),
        }
    }

    fn audit_id(&self) -> Result<String, Failure> {
        if let Some(id) = &self.audit {
            return Ok(id.clone());
        }
        let ids: Vec<String> = self
            .registry
            .audit_ids()
            .map_err(domain)?
            .into_iter()
            .filter(|id| self.registry.exists(id))
            .collect();
        match ids.as_slice() {
            [only] => Ok(only.clone()),
            [] => Err(Failure::Domain("not-found: the registry holds no audits".into())),
            _ => Err(Failure::Usage(format!(
                "several audits in the registry ({}); pick one with --audit",
                ids.join(", ")
            ))),
        }
    }

    fn load(&self) -> Result<Audit, Failure> {
        let id = self.audit_id()?;
        self.registry.load_audit(&id).map_err(domain)
    }

    /// Lock, load, change, save.
    fn mutate(&mut self, change: impl FnOnce(&Audit, &mut Self) -> Result<Audit, Failure>) -> Outcome {
        let id = self.audit_id()?;
        if !self.registry.exists(&id) {
            return Err(Failure::Domain(format!("not-found: audit {id}")));
        }
        let lock = self.registry.lock(&id).map_err(domain)?;
        let before = self.registry.load_audit(&id).map_err(domain)?;
        let after = change(&before, self)?;
        self.registry.write_audit(&lock, &after).map_err(domain)
    }

    fn init(&mut self, a: InitArgs) -> Outcome {
        let mut project = ProjectRecord::new(a.name);
        for (k, v) in &a.set {
            project.set_field(k, v).map_err(|e| Failure::Usage(e.to_string()))?;
        }
        let created = a.date.unwrap_or_else(|| Utc::now().date_naive());
        let taken = self.registry.audit_ids().map_err(domain)?;
        let audit = new_audit(project, created, taken.iter().map(String::as_str)).map_err(domain)?;
        self.registry.save_audit(&audit).map_err(domain)?;
        self.print(&format!("{}\n", audit.audit_id))
    }

    fn resource(&mut self, cmd: ResourceCmd) -> Outcome {
        match cmd {
            ResourceCmd::Add { interactive: true, .. } => {
                let mut assigned = String::new();
                self.mutate(|a, s| {
                    let r = s.prompt_resource(a)?;
                    let next = a.add_resource(r).map_err(domain)?;
                    assigned = next.resources().last().map(|r| r.resource_id.clone()).unwrap_or_default();
                    Ok(next)
                })?;
                self.print(&format!("{assigned}\n"))
            }
            ResourceCmd::Add { name, resource_type, set, .. } => {
                let mut r = KnowledgeResource::new(
                    name.unwrap_or_default(),
                    resource_type.unwrap_or(ResourceType::Glossary),
                );
                apply_sets(&mut r, &set)?;
                let mut assigned = String::new();
                self.mutate(|a, _| {
                    let next = a.add_resource(r).map_err(domain)?;
                    assigned = next.resources().last().map(|r| r.resource_id.clone()).unwrap_or_default();
                    Ok(next)
                })?;
                self.print(&format!("{assigned}\n"))
            }
            ResourceCmd::Edit { id, set } => self.mutate(|a, _| {
                let mut r = a
                    .resource(&id)
                    .cloned()
                    .ok_or_else(|| Failure::Domain(format!("unknown-resource: {id}")))?;
                apply_sets(&mut r, &set)?;
                a.update_resource(r).map_err(domain)
            }),
            ResourceCmd::Remove { id } => self.mutate(|a, _| a.remove_resource(&id).map_err(domain)),
            ResourceCmd::List => {
                let a = self.load()?;
                let text: String = a
                    .resources()
                    .iter()
                    .map(|r| format!("{}\t{}\t{}\n", r.resource_id, r.resource_type, r.name))
                    .collect();
                self.print(&text)
            }
            ResourceCmd::Show { id } => {
                let a = self.load()?;
                let r = a
                    .resource(&id)
                    .ok_or_else(|| Failure::Domain(format!("unknown-resource: {id}")))?;
                self.print(&record::write(&[resource_record(r)]).map_err(domain)?)
            }
        }
    }

    fn read_line(&mut self) -> Result<Option<String>, Failure> {
        let mut line = String::new();
        let n = self.input.read_line(&mut line).map_err(domain)?;
        if n == 0 {
            return Ok(None);
        }
        Ok(Some(line.trim_end_matches(['\n', '\r']).to_string()))
    }

    /// Field-by-field prompt; findings for a field are shown and the field
    /// asked again.
    fn prompt_resource(&mut self, audit: &Audit) -> Result<KnowledgeResource, Failure> {
        let mut r = KnowledgeResource::new("", ResourceType::Glossary);
        for field in KnowledgeResource::FIELDS.iter().copied().filter(|f| *f != "resource_id") {
            let required = matches!(field, "name" | "resource_type");
            loop {
                write!(self.out, "{field}: ").map_err(domain)?;
                self.out.flush().map_err(domain)?;
                let Some(value) = self.read_line()? else {
                    if required {
                        return Err(Failure::Usage(format!("input ended before `{field}` was given")));
                    }
                    break;
                };
                if value.is_empty() {
                    if required {
                        writeln!(self.out, "  {field} is required").map_err(domain)?;
                        continue;
                    }
                    break;
                }
                if let Err(e) = r.set_field(field, &value) {
                    writeln!(self.out, "  {e}").map_err(domain)?;
                    continue;
                }
                let findings: Vec<_> = audit
                    .validate_resource(&r)
                    .into_iter()
                    .filter(|f| f.field == field)
                    .collect();
                if findings.is_empty() {
                    break;
                }
                for f in findings {
                    writeln!(self.out, "  {f}").map_err(domain)?;
                }
                let _ = r.set_field(field, "");
            }
        }
        Ok(r)
    }

    fn status(&mut self) -> Outcome {
        let a = self.load()?;
        let w = a.workflow();
        let mut text = format!("audit: {}\nstage: {}\n", a.audit_id, w.stage());
        let steps: Vec<String> = w.completed_steps().iter().map(|s| s.to_string()).collect();
        text.push_str(&format!(
            "completed: {}\n",
            if steps.is_empty() { "none".to_string() } else { steps.join(" ") }
        ));
        if let Some(v) = w.current_report_version() {
            let phase = w.phase().map(|p| format!(" ({p})")).unwrap_or_default();
            text.push_str(&format!("report: v{v}{phase}\n"));
            text.push_str(&format!("loops: {}\n", w.loop_count()));
        }
        if let Some(last) = w.last_timestamp() {
            text.push_str(&format!("last event: {}\n", eventlog::format_timestamp(&last)));
        }
        text.push_str("next:\n");
        let legal = w.legal_events();
        if legal.is_empty() {
            text.push_str("  none\n");
        }
        for e in legal {
            text.push_str(&format!("  {e}\n"));
        }
        self.print(&text)
    }

    fn record(&mut self, kind: EventKind, opts: EventOpts) -> Outcome {
        let ts = eventlog::truncate(opts.at.unwrap_or_else(Utc::now));
        let mut event = WorkflowEvent::new(ts, kind);
        event.note = opts.note.filter(|n| !n.is_empty());
        let mut line = String::new();
        self.mutate(|a, _| {
            let next = a.record_event(event).map_err(domain)?;
            for e in &next.events()[a.events().len()..] {
                line.push_str(&eventlog::format_event(e));
                line.push('\n');
            }
            Ok(next)
        })?;
        self.print(&line)
    }

    fn event(&mut self, name: EventName, version: Option<u32>, verdict: Option<VerdictArg>, opts: EventOpts) -> Outcome {
        let a = self.load()?;
        let current = a.workflow().current_report_version().unwrap_or(0);
        if verdict.is_some() && !matches!(name, EventName::ValidationReceived) {
            return Err(Failure::Usage("--verdict only applies to validation_received".into()));
        }
        let kind = match name {
            EventName::ReportSent => EventKind::ReportSent(version.unwrap_or(current)),
            EventName::ValidationReceived => {
                let verdict = match verdict {
                    Some(VerdictArg::Valid) => Verdict::Valid,
                    Some(VerdictArg::Invalid) => Verdict::Invalid,
                    None => return Err(Failure::Usage("validation_received needs --verdict valid|invalid".into())),
                };
                EventKind::ValidationReceived(version.unwrap_or(current), verdict)
            }
            EventName::InterviewHeld => EventKind::InterviewHeld(version.unwrap_or(current)),
            EventName::ReportAmended => EventKind::ReportAmended(version.unwrap_or(current + 1)),
            EventName::AuditClosed => {
                if version.is_some() {
                    return Err(Failure::Usage("audit_closed takes no --version".into()));
                }
                EventKind::AuditClosed
            }
        };
        self.record(kind, opts)
    }

    fn assess(&self, a: &Audit) -> Result<AssessmentResult, Failure> {
        let table = self.registry.classification_table().map_err(domain)?;
        Ok(score_with(a, &table))
    }

    fn letter(&mut self, kind: LetterKind, set: Vec<(String, String)>) -> Outcome {
        let known: Vec<&str> = letter_placeholders(kind)
            .into_iter()
            .chain(optional_placeholders(kind))
            .collect();
        let mut extra = LetterContext::new();
        for (k, v) in &set {
            if !known.contains(&k.as_str()) {
                return Err(Failure::Usage(format!(
                    "{kind} has no placeholder `{k}` (known: {})",
                    known.join(", ")
                )));
            }
            extra.set(k, v.clone());
        }
        let id = self.audit_id()?;
        if !self.registry.exists(&id) {
            return Err(Failure::Domain(format!("not-found: audit {id}")));
        }
        let lock = self.registry.lock(&id).map_err(domain)?;
        let a = self.registry.load_audit(&id).map_err(domain)?;
        let result = self.assess(&a)?;
        let mut ctx = derived_context(kind, &a, &result, latest_report(&a).as_ref());
        for k in extra.keys() {
            ctx.set(k, extra.get(k).unwrap_or_default());
        }
        let text = render_letter(kind, &ctx).map_err(domain)?;
        let version = a.workflow().current_report_version().unwrap_or(0);
        self.registry
            .write_letter(&lock, &id, kind, version, &text)
            .map_err(domain)?;
        drop(lock);
        self.emit(&text)
    }

    fn report(&mut self, cmd: ReportCmd) -> Outcome {
        match cmd {
            ReportCmd::Draft => {
                let mut body = String::new();
                self.mutate(|a, s| {
                    let result = s.assess(a)?;
                    let table = s.registry.classification_table().map_err(domain)?;
                    let doc = draft_report_with(a, &result, &table).map_err(domain)?;
                    body = doc.serialize().map_err(domain)?;
                    a.store_draft(doc.header.version, body.clone()).map_err(domain)
                })?;
                self.emit(&body)
            }
            ReportCmd::Finalize { feedback } => {
                let mut body = String::new();
                self.mutate(|a, _| {
                    let v = a
                        .workflow()
                        .validated_version()
                        .ok_or_else(|| Failure::Domain("not-validated: no report version has been validated".into()))?;
                    let stored = a
                        .report_version(v)
                        .ok_or_else(|| Failure::Domain(format!("not-drafted: report version {v} has no stored draft")))?;
                    let doc = ReportDocument::parse(&stored.body)
                        .map_err(|e| Failure::Domain(format!("parse-error: {} {e}", report_file(v))))?;
                    let fin = finalize_report(a, &doc, &feedback).map_err(domain)?;
                    body = fin.serialize().map_err(domain)?;
                    a.store_final(v, body.clone()).map_err(domain)
                })?;
                self.emit(&body)
            }
            ReportCmd::Show { version } => {
                let a = self.load()?;
                let rv = match version {
                    Some(v) => a.report_version(v),
                    None => a.final_report().or_else(|| a.report_versions().last()),
                };
                let rv = rv.ok_or_else(|| Failure::Domain(format!("not-found: no stored report ({FINAL_REPORT} or report-v<N>.kaf)")))?;
                let body = rv.body.clone();
                self.emit(&body)
            }
        }
    }
}

fn apply_sets(r: &mut KnowledgeResource, set: &[(String, String)]) -> Outcome {
    for (k, v) in set {
        if k == "resource_id" {
            return Err(Failure::Usage("resource ids are assigned, not set".into()));
        }
        r.set_field(k, v).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn latest_report(a: &Audit) -> Option<ReportDocument> {
    let rv = a.final_report().or_else(|| a.report_versions().last())?;
    ReportDocument::parse(&rv.body).ok()
}

/// Context values the audit itself can supply.
fn derived_context(kind: LetterKind, a: &Audit, result: &AssessmentResult, doc: Option<&ReportDocument>) -> LetterContext {
    let mut ctx = LetterContext::new();
    let shared = a.resources().iter().filter(|r| kaf_core::assessment::is_shared(r)).count();
    ctx.set("resource_count", shared.to_string());
    if let Some(c) = &a.project.km_contact {
        ctx.set("km_contact_name", c.clone());
    }
    if kind != LetterKind::LeaderNotice {
        ctx.set("project_list", format!("- {}", a.project.project_name));
    }
    let summary = match doc {
        Some(d) => d.summary_text(),
        None => format!("{} ({})", a.project.project_name, a.audit_id),
    };
    if kind != LetterKind::LeaderNotice {
        ctx.set("summary", summary);
    }
    let recs = if result.recommendations.is_empty() {
        "none".to_string()
    } else {
        result
            .recommendations
            .iter()
            .map(|r| format!("- {} {}: {}", r.code, r.subject, r.text))
            .collect::<Vec<_>>()
            .join("\n")
    };
    ctx.set("recommendations", recs);
    ctx
}

pub fn score_text(result: &AssessmentResult) -> String {
    let mut text = String::new();
    for q in [Question::Q1, Question::Q2, Question::Q3, Question::Q4, Question::Q5] {
        let s = result.score(q);
        text.push_str(&format!(
            "{} {} {}{}\n",
            s.question,
            s.coverage,
            if s.answered { "answered" } else { "unanswered" },
            if s.missing.is_empty() { String::new() } else { format!(" missing={}", s.missing.len()) }
        ));
    }
    text.push_str(&format!("heuristic_valid: {}\n", result.heuristic_valid));
    if !result.postulate_violations.is_empty() {
        text.push_str(&format!("postulate violations: {}\n", result.postulate_violations.join(" ")));
    }
    for r in &result.recommendations {
        text.push_str(&format!("{} [{}] {}: {}\n", r.code, r.dimension, r.subject, r.text));
    }
    text
}
