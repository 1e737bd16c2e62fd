//! On-disk registry.
//!
//! ```text
//! <root>/
//!   classification.kaf        optional classification overrides
//!   <audit_id>/
//!     audit.kaf               [audit] record: id, creation date, project fields
//!     resources.kaf           one [resource] record per inventory row
//!     events.log              workflow events, one per line
//!     reports/
//!       report-v<N>.kaf       report bodies
//!       report-final.kaf      copy of the final report
//!       <letter>-<N>.txt      rendered letters
//!     .lock                   present while a writer holds the audit
//! ```
//!
//! Workflow state and report statuses are recomputed from `events.log` on
//! every load; only the final marker (`report-final.kaf`) is extra.

pub mod eventlog;

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::classification::{ClassificationError, ClassificationTable};
use crate::comms::LetterKind;
use crate::model::{Audit, AuditError, FieldError, KnowledgeResource, ProjectRecord, ReportStatus, ReportVersion};
use crate::record::{self, Record, RecordError};
use crate::workflow::{EventKind, ReplayError, Stage, Verdict, WorkflowEvent};

pub const AUDIT_FILE: &str = "audit.kaf";
pub const RESOURCES_FILE: &str = "resources.kaf";
pub const EVENTS_FILE: &str = "events.log";
pub const REPORTS_DIR: &str = "reports";
pub const FINAL_REPORT: &str = "report-final.kaf";
pub const LOCK_FILE: &str = ".lock";
pub const CLASSIFICATION_FILE: &str = "classification.kaf";

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("not-found: {0}")]
    NotFound(String),
    #[error("parse-error: {}:{line}: {reason}", file.display())]
    Parse { file: PathBuf, line: usize, reason: String },
    #[error("replay-error: {}: {source}", file.display())]
    Replay { file: PathBuf, source: ReplayError },
    #[error("{source} (in {})", dir.display())]
    Invalid { dir: PathBuf, source: AuditError },
    #[error("lock-contended: audit {audit_id} is locked by {owner}")]
    LockContended { audit_id: String, owner: String },
    #[error("io-failure: {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("parse-error: {}: {source}", file.display())]
    Classification { file: PathBuf, source: ClassificationError },
}

impl StorageError {
    pub fn code(&self) -> &'static str {
        match self {
            StorageError::NotFound(_) => "not-found",
            StorageError::Parse { .. } | StorageError::Classification { .. } => "parse-error",
            StorageError::Replay { .. } => "replay-error",
            StorageError::Invalid { source, .. } => source.code(),
            StorageError::LockContended { .. } => "lock-contended",
            StorageError::Io { .. } => "io-failure",
        }
    }

    fn parse(file: &Path, e: RecordError) -> Self {
        StorageError::Parse {
            file: file.to_path_buf(),
            line: e.line,
            reason: e.reason,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Row of [`Registry::list_audits`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditSummary {
    pub audit_id: String,
    pub project_name: String,
    pub stage: Stage,
}

/// An audit directory that could not be read.
#[derive(Debug)]
pub struct ListWarning {
    pub entry: String,
    pub error: StorageError,
}

/// Exclusive write access to one audit. Released on drop.
#[derive(Debug)]
pub struct AuditLock {
    audit_id: String,
    path: PathBuf,
}

impl AuditLock {
    pub fn audit_id(&self) -> &str {
        &self.audit_id
    }
}

impl Drop for AuditLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone)]
pub struct Registry {
    root: PathBuf,
}

impl Registry {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn audit_dir(&self, audit_id: &str) -> PathBuf {
        self.root.join(audit_id)
    }

    pub fn reports_dir(&self, audit_id: &str) -> PathBuf {
        self.audit_dir(audit_id).join(REPORTS_DIR)
    }

    pub fn exists(&self, audit_id: &str) -> bool {
        self.audit_dir(audit_id).join(AUDIT_FILE).is_file()
    }

    /// Audit ids present, sorted. Directories without `audit.kaf` are
    /// included so that they can be reported.
    pub fn audit_ids(&self) -> Result<Vec<String>, StorageError> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&self.root)(e)),
        };
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry.map_err(io_err(&self.root))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !name.starts_with('.') && entry.path().is_dir() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Classification table with registry overrides applied, if any.
    pub fn classification_table(&self) -> Result<ClassificationTable, StorageError> {
        let path = self.root.join(CLASSIFICATION_FILE);
        match read_optional(&path)? {
            Some(text) => ClassificationTable::from_override_text(&text)
                .map_err(|source| StorageError::Classification { file: path, source }),
            None => Ok(ClassificationTable::builtin().clone()),
        }
    }

    pub fn lock(&self, audit_id: &str) -> Result<AuditLock, StorageError> {
        let dir = self.audit_dir(audit_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "pid={}", std::process::id()).map_err(io_err(&path))?;
                Ok(AuditLock {
                    audit_id: audit_id.to_string(),
                    path,
                })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StorageError::LockContended {
                audit_id: audit_id.to_string(),
                owner: fs::read_to_string(&path)
                    .map(|s| s.trim().to_string())
                    .unwrap_or_else(|_| "unknown owner".into()),
            }),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    /// Removes a stale lock. Returns the recorded owner, if a lock existed.
    pub fn unlock(&self, audit_id: &str) -> Result<Option<String>, StorageError> {
        let path = self.audit_dir(audit_id).join(LOCK_FILE);
        let owner = match fs::read_to_string(&path) {
            Ok(s) => s.trim().to_string(),
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        fs::remove_file(&path).map_err(io_err(&path))?;
        Ok(Some(owner))
    }

    /// Takes the lock, writes the audit and releases the lock.
    pub fn save_audit(&self, audit: &Audit) -> Result<(), StorageError> {
        let lock = self.lock(&audit.audit_id)?;
        self.write_audit(&lock, audit)
    }

    /// Writes every file of an audit under a lock the caller holds.
    pub fn write_audit(&self, lock: &AuditLock, audit: &Audit) -> Result<(), StorageError> {
        assert_eq!(lock.audit_id, audit.audit_id, "lock belongs to another audit");
        let dir = self.audit_dir(&audit.audit_id);
        let reports = dir.join(REPORTS_DIR);
        fs::create_dir_all(&reports).map_err(io_err(&reports))?;

        let audit_text = write_records(&dir.join(AUDIT_FILE), &[audit_record(audit)])?;
        let resource_records: Vec<Record> = audit.resources().iter().map(resource_record).collect();
        let resources_text = write_records(&dir.join(RESOURCES_FILE), &resource_records)?;

        write_atomic(&dir.join(AUDIT_FILE), &audit_text)?;
        write_atomic(&dir.join(RESOURCES_FILE), &resources_text)?;
        write_atomic(&dir.join(EVENTS_FILE), &eventlog::format_log(audit.events()))?;
        for rv in audit.report_versions() {
            write_atomic(&reports.join(report_file(rv.version)), &rv.body)?;
            if rv.status == ReportStatus::Final {
                write_atomic(&reports.join(FINAL_REPORT), &rv.body)?;
            }
        }
        Ok(())
    }

    pub fn load_audit(&self, audit_id: &str) -> Result<Audit, StorageError> {
        let dir = self.audit_dir(audit_id);
        let audit_path = dir.join(AUDIT_FILE);
        let audit_text = read_optional(&audit_path)?
            .ok_or_else(|| StorageError::NotFound(format!("audit {audit_id}")))?;
        let (stored_id, created_on, project) = parse_audit_file(&audit_text)
            .map_err(|e| StorageError::parse(&audit_path, e))?;
        if stored_id != audit_id {
            return Err(StorageError::Parse {
                file: audit_path,
                line: 2,
                reason: format!("audit_id `{stored_id}` does not match directory `{audit_id}`"),
            });
        }

        let res_path = dir.join(RESOURCES_FILE);
        let resources = match read_optional(&res_path)? {
            Some(text) => parse_resources(&text).map_err(|e| StorageError::parse(&res_path, e))?,
            None => Vec::new(),
        };

        let ev_path = dir.join(EVENTS_FILE);
        let events = match read_optional(&ev_path)? {
            Some(text) => eventlog::parse_log(&text).map_err(|e| StorageError::parse(&ev_path, e))?,
            None => Vec::new(),
        };

        let report_versions = self.load_reports(audit_id, &events)?;
        Audit::from_parts(audit_id.to_string(), project, created_on, resources, events, report_versions)
            .map_err(|e| match e {
                AuditError::Replay(source) => StorageError::Replay { file: ev_path, source },
                source => StorageError::Invalid { dir, source },
            })
    }

    fn load_reports(&self, audit_id: &str, events: &[WorkflowEvent]) -> Result<Vec<ReportVersion>, StorageError> {
        let dir = self.reports_dir(audit_id);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        let mut versions = Vec::new();
        for entry in entries {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(v) = parse_report_file(&name) {
                versions.push(v);
            }
        }
        versions.sort_unstable();
        let final_version = if dir.join(FINAL_REPORT).is_file() {
            let validated = events.iter().rev().find_map(|e| match e.kind {
                EventKind::ValidationReceived(v, Verdict::Valid) => Some(v),
                _ => None,
            });
            Some(validated.ok_or_else(|| StorageError::Parse {
                file: dir.join(FINAL_REPORT),
                line: 1,
                reason: "final report present but no report version was validated".into(),
            })?)
        } else {
            None
        };
        let mut out = Vec::new();
        for v in versions {
            let path = dir.join(report_file(v));
            let body = read_optional(&path)?
                .ok_or_else(|| StorageError::NotFound(path.display().to_string()))?;
            let status = if final_version == Some(v) {
                ReportStatus::Final
            } else {
                derived_status(events, v)
            };
            out.push(ReportVersion { version: v, body, status });
        }
        Ok(out)
    }

    /// Summary rows for every readable audit plus one warning per
    /// unreadable directory.
    pub fn list_audits(&self) -> Result<(Vec<AuditSummary>, Vec<ListWarning>), StorageError> {
        let mut rows = Vec::new();
        let mut warnings = Vec::new();
        for id in self.audit_ids()? {
            match self.load_audit(&id) {
                Ok(a) => rows.push(AuditSummary {
                    project_name: a.project.project_name.clone(),
                    stage: a.stage(),
                    audit_id: id,
                }),
                Err(error) => warnings.push(ListWarning { entry: id, error }),
            }
        }
        Ok((rows, warnings))
    }

    /// Writes a rendered letter as `reports/<kind>-<version>.txt`.
    pub fn write_letter(
        &self,
        _lock: &AuditLock,
        audit_id: &str,
        kind: LetterKind,
        version: u32,
        text: &str,
    ) -> Result<PathBuf, StorageError> {
        let dir = self.reports_dir(audit_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{kind}-{version}.txt"));
        write_atomic(&path, text)?;
        Ok(path)
    }
}

pub fn report_file(version: u32) -> String {
    format!("report-v{version}.kaf")
}

fn parse_report_file(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("report-v")?.strip_suffix(".kaf")?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn derived_status(events: &[WorkflowEvent], v: u32) -> ReportStatus {
    let mut status = ReportStatus::Draft;
    for e in events {
        match e.kind {
            EventKind::ReportSent(x) if x == v => status = ReportStatus::SentForValidation,
            EventKind::ValidationReceived(x, Verdict::Valid) if x == v => status = ReportStatus::Validated,
            EventKind::ValidationReceived(x, Verdict::Invalid) if x == v => status = ReportStatus::Rejected,
            _ => {}
        }
    }
    status
}

fn read_optional(path: &Path) -> Result<Option<String>, StorageError> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) if e.kind() == io::ErrorKind::InvalidData => Err(StorageError::Parse {
            file: path.to_path_buf(),
            line: 1,
            reason: "file is not valid UTF-8".into(),
        }),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn write_records(path: &Path, records: &[Record]) -> Result<String, StorageError> {
    record::write(records).map_err(|e| StorageError::parse(path, e))
}

/// Write to a temporary file in the same directory, then rename over the
/// target.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), StorageError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents.as_bytes()).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

pub fn audit_record(audit: &Audit) -> Record {
    let mut rec = Record::new("audit");
    rec.push("audit_id", &audit.audit_id);
    rec.push("created_on", audit.created_on.to_string());
    for (name, value) in audit.project.fields() {
        rec.push(name, value);
    }
    for (name, value) in &audit.project.unknown_fields {
        rec.push(name, value);
    }
    rec
}

pub fn resource_record(r: &KnowledgeResource) -> Record {
    let mut rec = Record::new("resource");
    for (name, value) in r.fields() {
        rec.push(name, value);
    }
    for (name, value) in &r.unknown_fields {
        rec.push(name, value);
    }
    rec
}

fn field_error(line: usize, e: FieldError) -> RecordError {
    RecordError::new(line, e.to_string())
}

pub fn parse_audit_file(text: &str) -> Result<(String, NaiveDate, ProjectRecord), RecordError> {
    let records = record::parse(text)?;
    let [rec] = records.as_slice() else {
        return Err(RecordError::new(1, format!("expected one [audit] record, found {}", records.len())));
    };
    if rec.kind != "audit" {
        return Err(RecordError::new(rec.line, format!("expected [audit], found [{}]", rec.kind)));
    }
    let mut audit_id = None;
    let mut created_on = None;
    let mut project = ProjectRecord::default();
    for f in &rec.fields {
        let once = |taken: bool| {
            if taken {
                Err(RecordError::new(f.line, format!("`{}` given twice", f.name)))
            } else {
                Ok(())
            }
        };
        match f.name.as_str() {
            "audit_id" => {
                once(audit_id.is_some())?;
                audit_id = Some(f.value.clone());
            }
            "created_on" => {
                once(created_on.is_some())?;
                created_on = Some(crate::syntax::parse_date(&f.value).map_err(|e| RecordError::new(f.line, e))?);
            }
            name => match project.set_field(name, &f.value) {
                Ok(()) => {}
                Err(FieldError::UnknownField(_)) => project.unknown_fields.push((f.name.clone(), f.value.clone())),
                Err(e) => return Err(field_error(f.line, e)),
            },
        }
    }
    let audit_id = audit_id.ok_or_else(|| RecordError::new(rec.line, "[audit] lacks `audit_id`"))?;
    let created_on = created_on.ok_or_else(|| RecordError::new(rec.line, "[audit] lacks `created_on`"))?;
    if project.project_name.is_empty() {
        return Err(RecordError::new(rec.line, "[audit] lacks `project_name`"));
    }
    let findings = project.validate();
    if let Some(f) = findings.first() {
        return Err(RecordError::new(rec.line_of(f.field), f.to_string()));
    }
    Ok((audit_id, created_on, project))
}

pub fn parse_resources(text: &str) -> Result<Vec<KnowledgeResource>, RecordError> {
    let mut out = Vec::new();
    for rec in record::parse(text)? {
        if rec.kind != "resource" {
            return Err(RecordError::new(rec.line, format!("expected [resource], found [{}]", rec.kind)));
        }
        let name = rec
            .get("name")
            .ok_or_else(|| RecordError::new(rec.line, "[resource] lacks `name`"))?;
        let rt_raw = rec
            .get("resource_type")
            .ok_or_else(|| RecordError::new(rec.line, "[resource] lacks `resource_type`"))?;
        let rt = rt_raw
            .parse()
            .map_err(|e: crate::classification::TagError| RecordError::new(rec.line_of("resource_type"), e.to_string()))?;
        let mut r = KnowledgeResource::new(name, rt);
        let mut seen = std::collections::BTreeSet::new();
        for f in &rec.fields {
            match r.set_field(&f.name, &f.value) {
                Ok(()) => {
                    if !seen.insert(f.name.as_str()) {
                        return Err(RecordError::new(f.line, format!("`{}` given twice", f.name)));
                    }
                }
                Err(FieldError::UnknownField(_)) => r.unknown_fields.push((f.name.clone(), f.value.clone())),
                Err(e) => return Err(field_error(f.line, e)),
            }
        }
        if let Some(f) = crate::model::validate_record(&r).first() {
            return Err(RecordError::new(rec.line_of(f.field), f.to_string()));
        }
        out.push(r);
    }
    Ok(out)
}
