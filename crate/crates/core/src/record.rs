//! Plain-text record files.
//!
//! A file is a sequence of records separated by one blank line. Each record
//! starts with a `[type]` header line followed by `name = value` field lines.
//! Values spanning several lines use a block:
//!
//! ```text
//! [report]
//! version = 2
//! feedback = <<<
//! first line
//! second line
//! >>>
//! ```
//!
//! Files use LF line endings only and end with exactly one LF. Names may
//! repeat inside a record (list-valued fields). Empty values cannot be
//! represented; callers omit the field instead.

use std::fmt::Write as _;

use thiserror::Error;

const BLOCK_OPEN: &str = "<<<";
const BLOCK_CLOSE: &str = ">>>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct RecordError {
    /// 1-based line number; 0 when the error is not tied to input text.
    pub line: usize,
    pub reason: String,
}

impl RecordError {
    pub fn new(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<Field>,
    /// Line of the header in the parsed source, 0 for constructed records.
    pub line: usize,
}

impl Record {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            fields: Vec::new(),
            line: 0,
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.fields.push(Field {
            name: name.into(),
            value: value.into(),
            line: 0,
        });
    }

    /// Pushes the field only when a non-empty value is present.
    pub fn push_opt(&mut self, name: &str, value: Option<&str>) {
        if let Some(v) = value.filter(|v| !v.is_empty()) {
            self.push(name, v);
        }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.value.as_str())
    }

    pub fn get_all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.fields
            .iter()
            .filter(move |f| f.name == name)
            .map(|f| f.value.as_str())
    }

    /// Line of the first field called `name`, falling back to the header line.
    pub fn line_of(&self, name: &str) -> usize {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .map_or(self.line, |f| f.line)
    }
}

fn is_kind_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.'
}

fn valid_token(s: &str, pred: fn(char) -> bool) -> bool {
    !s.is_empty() && s.chars().all(pred)
}

/// Parses a record file. Rejects anything outside the grammar with the
/// 1-based line number of the first offending line.
pub fn parse(text: &str) -> Result<Vec<Record>, RecordError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(pos) = text.find('\r') {
        let line = text[..pos].matches('\n').count() + 1;
        return Err(RecordError::new(line, "carriage return not allowed"));
    }
    let Some(body) = text.strip_suffix('\n') else {
        let line = text.matches('\n').count() + 1;
        return Err(RecordError::new(line, "file must end with a line feed"));
    };
    let lines: Vec<&str> = body.split('\n').collect();
    if body.ends_with('\n') || lines.last() == Some(&"") {
        return Err(RecordError::new(lines.len(), "file must end with exactly one line feed"));
    }

    let mut records = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let header_no = i + 1;
        let header = lines[i];
        let kind = header
            .strip_prefix('[')
            .and_then(|h| h.strip_suffix(']'))
            .filter(|k| valid_token(k, is_kind_char))
            .ok_or_else(|| RecordError::new(header_no, "expected record header `[type]`"))?;
        let mut record = Record {
            kind: kind.to_string(),
            fields: Vec::new(),
            line: header_no,
        };
        i += 1;
        while i < lines.len() && !lines[i].is_empty() {
            let line_no = i + 1;
            let line = lines[i];
            let (name, value) = line
                .split_once(" = ")
                .ok_or_else(|| RecordError::new(line_no, "expected `name = value`"))?;
            if !valid_token(name, is_name_char) {
                return Err(RecordError::new(line_no, format!("invalid field name `{name}`")));
            }
            let value = if value == BLOCK_OPEN {
                let mut block = Vec::new();
                i += 1;
                loop {
                    match lines.get(i) {
                        None => {
                            return Err(RecordError::new(line_no, "unterminated `<<<` block"))
                        }
                        Some(&BLOCK_CLOSE) => break,
                        Some(l) => block.push(*l),
                    }
                    i += 1;
                }
                let joined = block.join("\n");
                if joined.is_empty() {
                    return Err(RecordError::new(line_no, "empty block value"));
                }
                joined
            } else {
                if value.is_empty() {
                    return Err(RecordError::new(line_no, "empty value"));
                }
                if value.ends_with(char::is_whitespace) {
                    return Err(RecordError::new(line_no, "trailing whitespace"));
                }
                value.to_string()
            };
            record.fields.push(Field {
                name: name.to_string(),
                value,
                line: line_no,
            });
            i += 1;
        }
        records.push(record);
        if i < lines.len() {
            // blank separator; another record must follow
            i += 1;
            if i >= lines.len() || lines[i].is_empty() {
                return Err(RecordError::new(i + 1, "expected record header after blank line"));
            }
        }
    }
    Ok(records)
}

fn needs_block(value: &str) -> bool {
    value.contains('\n') || value == BLOCK_OPEN || value.ends_with(char::is_whitespace)
}

/// Writes records in canonical form. Fails when a value cannot be encoded
/// (empty, contains CR, or contains a line that is exactly `>>>`).
pub fn write(records: &[Record]) -> Result<String, RecordError> {
    let mut out = String::new();
    for (n, record) in records.iter().enumerate() {
        if !valid_token(&record.kind, is_kind_char) {
            return Err(RecordError::new(0, format!("invalid record type `{}`", record.kind)));
        }
        if n > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[{}]", record.kind);
        for field in &record.fields {
            if !valid_token(&field.name, is_name_char) {
                return Err(RecordError::new(0, format!("invalid field name `{}`", field.name)));
            }
            let value = &field.value;
            if value.is_empty() {
                return Err(RecordError::new(0, format!("field `{}` has an empty value", field.name)));
            }
            if value.contains('\r') {
                return Err(RecordError::new(0, format!("field `{}` contains a carriage return", field.name)));
            }
            if needs_block(value) {
                if value.split('\n').any(|l| l == BLOCK_CLOSE) {
                    return Err(RecordError::new(
                        0,
                        format!("field `{}` contains a `>>>` line", field.name),
                    ));
                }
                let _ = writeln!(out, "{} = {BLOCK_OPEN}\n{value}\n{BLOCK_CLOSE}", field.name);
            } else {
                let _ = writeln!(out, "{} = {value}", field.name);
            }
        }
    }
    Ok(out)
}
