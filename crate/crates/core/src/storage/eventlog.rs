//! `events.log`: one event per line.
//!
//! ```text
//! 2011-03-01T09:00:00Z step_completed(s1_1)
//! 2011-03-04T16:30:00Z validation_received(1) verdict=invalid note=missing%20wiki
//! ```
//!
//! Timestamps are UTC with whole seconds. Payload values are
//! percent-encoded.

use chrono::{DateTime, NaiveDateTime, Timelike, Utc};
use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, CONTROLS};

use crate::record::RecordError;
use crate::workflow::{EventKind, StepId, Verdict, WorkflowEvent};

const PAYLOAD: &AsciiSet = &CONTROLS.add(b' ').add(b'%').add(b'=');
const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.format(TS_FORMAT).to_string()
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    let b = s.as_bytes();
    let shape = b.len() == 20
        && b[4] == b'-'
        && b[7] == b'-'
        && b[10] == b'T'
        && b[13] == b':'
        && b[16] == b':'
        && b[19] == b'Z';
    if !shape {
        return Err(format!("expected YYYY-MM-DDTHH:MM:SSZ, got `{s}`"));
    }
    NaiveDateTime::parse_from_str(s, TS_FORMAT)
        .map(|t| t.and_utc())
        .map_err(|e| format!("bad timestamp `{s}`: {e}"))
}

/// Drops sub-second precision, which the log does not keep.
pub fn truncate(ts: DateTime<Utc>) -> DateTime<Utc> {
    ts.with_nanosecond(0).unwrap_or(ts)
}

pub fn format_event(e: &WorkflowEvent) -> String {
    let mut line = format_timestamp(&e.timestamp);
    line.push(' ');
    match &e.kind {
        EventKind::StepCompleted(s) => line.push_str(&format!("step_completed({s})")),
        EventKind::ReportSent(v) => line.push_str(&format!("report_sent({v})")),
        EventKind::ValidationReceived(v, verdict) => {
            line.push_str(&format!("validation_received({v}) verdict={verdict}"))
        }
        EventKind::InterviewHeld(v) => line.push_str(&format!("interview_held({v})")),
        EventKind::ReportAmended(v) => line.push_str(&format!("report_amended({v})")),
        EventKind::AuditClosed => line.push_str("audit_closed"),
    }
    if let Some(note) = e.note.as_ref().filter(|n| !n.is_empty()) {
        line.push_str(" note=");
        line.extend(utf8_percent_encode(note, PAYLOAD));
    }
    line
}

pub fn format_log(events: &[WorkflowEvent]) -> String {
    events.iter().map(|e| format_event(e) + "\n").collect()
}

pub fn parse_event(line: &str) -> Result<WorkflowEvent, String> {
    let mut parts = line.split(' ');
    let timestamp = parse_timestamp(parts.next().unwrap_or_default())?;
    let head = parts.next().ok_or("missing event kind")?;
    let (name, arg) = match head.split_once('(') {
        Some((name, rest)) => {
            let arg = rest
                .strip_suffix(')')
                .ok_or_else(|| format!("unclosed argument in `{head}`"))?;
            (name, Some(arg))
        }
        None => (head, None),
    };

    let mut verdict = None;
    let mut note = None;
    for pair in parts {
        let (key, raw) = pair
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{pair}`"))?;
        if raw.is_empty() {
            return Err(format!("empty value for `{key}`"));
        }
        let value = percent_decode_str(raw)
            .decode_utf8()
            .map_err(|_| format!("`{key}` is not valid UTF-8 once decoded"))?
            .into_owned();
        let slot = match key {
            "verdict" => &mut verdict,
            "note" => &mut note,
            other => return Err(format!("unknown payload key `{other}`")),
        };
        if slot.replace(value).is_some() {
            return Err(format!("repeated payload key `{key}`"));
        }
    }

    let version = || -> Result<u32, String> {
        let a = arg.ok_or_else(|| format!("{name} needs a report version"))?;
        if a.is_empty() || !a.bytes().all(|b| b.is_ascii_digit()) || (a.len() > 1 && a.starts_with('0')) {
            return Err(format!("bad report version `{a}`"));
        }
        a.parse().map_err(|_| format!("bad report version `{a}`"))
    };
    let kind = match name {
        "step_completed" => {
            let a = arg.ok_or("step_completed needs a step id")?;
            EventKind::StepCompleted(a.parse::<StepId>().map_err(|_| format!("unknown step `{a}`"))?)
        }
        "report_sent" => EventKind::ReportSent(version()?),
        "validation_received" => {
            let v = version()?;
            let raw = verdict.take().ok_or("validation_received needs verdict=valid|invalid")?;
            let verdict: Verdict = raw.parse().map_err(|_| format!("unknown verdict `{raw}`"))?;
            EventKind::ValidationReceived(v, verdict)
        }
        "interview_held" => EventKind::InterviewHeld(version()?),
        "report_amended" => EventKind::ReportAmended(version()?),
        "audit_closed" if arg.is_none() => EventKind::AuditClosed,
        "audit_closed" => return Err("audit_closed takes no argument".into()),
        other => return Err(format!("unknown event kind `{other}`")),
    };
    if verdict.is_some() {
        return Err("verdict only applies to validation_received".into());
    }
    Ok(WorkflowEvent {
        timestamp,
        kind,
        note: note.filter(|n| !n.is_empty()),
    })
}

/// Parses a whole log. Errors carry 1-based line numbers.
pub fn parse_log(text: &str) -> Result<Vec<WorkflowEvent>, RecordError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if text.contains('\r') {
        let line = text[..text.find('\r').unwrap_or(0)].matches('\n').count() + 1;
        return Err(RecordError::new(line, "carriage return in event log"));
    }
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| RecordError::new(text.lines().count(), "missing final line feed"))?;
    body.split('\n')
        .enumerate()
        .map(|(i, line)| parse_event(line).map_err(|e| RecordError::new(i + 1, e)))
        .collect()
}
