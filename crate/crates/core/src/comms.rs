//! Letters sent during an audit.
//!
//! Templates use `{name}` placeholders; `{{` renders a literal `{`.
//! Optional sections are appended only when their key is present in the
//! context.

use std::collections::BTreeMap;

use strum::{AsRefStr, Display, EnumIter, EnumString, IntoEnumIterator};
use thiserror::Error;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum LetterKind {
    FunderNotice,
    LeaderNotice,
    VerifyFindings,
    FinalFindings,
}

impl LetterKind {
    pub fn all() -> impl Iterator<Item = LetterKind> {
        LetterKind::iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommsError {
    #[error("missing-placeholder: {}", .0.join(", "))]
    MissingPlaceholder(Vec<String>),
    #[error("nested-placeholder: value of `{key}` contains `{{{marker}}}`")]
    NestedPlaceholder { key: String, marker: String },
    #[error("bad-template: {0}")]
    BadTemplate(String),
}

impl CommsError {
    pub fn code(&self) -> &'static str {
        match self {
            CommsError::MissingPlaceholder(_) => "missing-placeholder",
            CommsError::NestedPlaceholder { .. } => "nested-placeholder",
            CommsError::BadTemplate(_) => "bad-template",
        }
    }
}

/// Placeholder values for one letter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LetterContext {
    values: BTreeMap<String, String>,
}

impl LetterContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

struct Template {
    body: &'static str,
    /// Rendered after the body, in order, when the key is supplied.
    optional: &'static [(&'static str, &'static str)],
    defaults: &'static [(&'static str, &'static str)],
}

const FUNDER_NOTICE: Template = Template {
    body: "Dear {funder_contact},

I am writing to let you know that a knowledge audit of publicly funded research projects is under way.

The purpose, scope and method of the audit are published at {framework_url}.

The projects funded by your organisation that we plan to audit are:
{project_list}

Each project leader will be contacted shortly. The audit is carried out remotely, through public searches and the project websites, and project teams may point us to further repositories and knowledge sources.

You will receive a copy of the summary findings once they are available.

Please let me know if you have any questions.

Best regards,
{sender_name}
",
    optional: &[],
    defaults: &[],
};

const LEADER_NOTICE: Template = Template {
    body: "Dear {project_leader},

I am writing to let you know that your project is part of a knowledge audit of publicly funded research.

The purpose, scope and method of the audit are published at {framework_url}.

The audit is carried out remotely, through public searches and your project website. If some of the information we look for is hard to find online, please fill in the relevant part of the enclosed form, for example the team members responsible for knowledge sharing.

You are also welcome to point us to repositories not listed on the project website so that we can include them in the inventory.

You will receive the summary findings as soon as they are available, so that you can approve or correct them. The final inventory will then appear in a public audit report.

Please let me know if you have any questions.

Best regards,
{sender_name}
",
    optional: &[
        ("project_list", "\nEnclosure 1. Projects being audited\n{project_list}\n"),
        ("summary", "\nEnclosure 2. Preliminary project information\n{summary}\n"),
    ],
    defaults: &[],
};

const VERIFY_FINDINGS: Template = Template {
    body: "Dear {project_leader},

Following our earlier correspondence, here are the findings of the knowledge inventory carried out on your project.

Summary of findings:
- project: {summary}
- person in charge of knowledge management: {km_contact_name}
- publicly available knowledge resources: {resource_count}

Please confirm that these details are correct, or point us to anything we have missed, within {deadline}. The summary will then be finalised and published.

Thank you in advance.

Best regards,
{sender_name}
",
    optional: &[],
    defaults: &[("deadline", "the next working week")],
};

const FINAL_FINDINGS: Template = Template {
    body: "Dear {project_leader},

Following our correspondence, I enclose the final summary of the knowledge audit of your project, together with recommendations drawn from good knowledge-sharing practice.

We develop methods and instruments that help engineering teams share and reuse knowledge, and we would be glad to advise you and your team further.

We would also welcome your feedback on the audit and any suggestions for improving it.

Best regards,
{sender_name}

Enclosure 1. Summary of findings
{summary}

Enclosure 2. Recommendations
{recommendations}
",
    optional: &[],
    defaults: &[],
};

fn template(kind: LetterKind) -> &'static Template {
    match kind {
        LetterKind::FunderNotice => &FUNDER_NOTICE,
        LetterKind::LeaderNotice => &LEADER_NOTICE,
        LetterKind::VerifyFindings => &VERIFY_FINDINGS,
        LetterKind::FinalFindings => &FINAL_FINDINGS,
    }
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b == b'_')
}

fn pieces(text: &str) -> Result<Vec<Piece<'_>>, CommsError> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find('{') {
        out.push(Piece::Text(&rest[..pos]));
        let after = &rest[pos + 1..];
        if let Some(tail) = after.strip_prefix('{') {
            out.push(Piece::Text("{"));
            rest = tail;
            continue;
        }
        let end = after
            .find('}')
            .ok_or_else(|| CommsError::BadTemplate("unclosed `{`".into()))?;
        let name = &after[..end];
        if !is_name(name) {
            return Err(CommsError::BadTemplate(format!("bad placeholder `{name}`")));
        }
        out.push(Piece::Slot(name));
        rest = &after[end + 1..];
    }
    out.push(Piece::Text(rest));
    Ok(out)
}

fn slots(text: &str) -> Vec<&str> {
    pieces(text)
        .expect("built-in templates are well formed")
        .into_iter()
        .filter_map(|p| match p {
            Piece::Slot(name) => Some(name),
            Piece::Text(_) => None,
        })
        .collect()
}

/// First `{name}` marker in a value, if any.
fn marker_in(value: &str) -> Option<&str> {
    let mut rest = value;
    while let Some(pos) = rest.find('{') {
        let after = &rest[pos + 1..];
        if let Some(end) = after.find('}') {
            if is_name(&after[..end]) {
                return Some(&after[..end]);
            }
        }
        rest = after;
    }
    None
}

/// Placeholders a context must supply, in first-occurrence order.
pub fn letter_placeholders(kind: LetterKind) -> Vec<&'static str> {
    let t = template(kind);
    let mut out: Vec<&'static str> = Vec::new();
    for name in slots(t.body) {
        if !out.contains(&name) && !t.defaults.iter().any(|(k, _)| *k == name) {
            out.push(name);
        }
    }
    out
}

/// Placeholders a context may supply on top of the required ones.
pub fn optional_placeholders(kind: LetterKind) -> Vec<&'static str> {
    let t = template(kind);
    t.optional
        .iter()
        .map(|(k, _)| *k)
        .chain(t.defaults.iter().map(|(k, _)| *k))
        .collect()
}

fn fill(text: &str, values: &BTreeMap<&str, &str>) -> String {
    let mut out = String::with_capacity(text.len() * 2);
    for piece in pieces(text).expect("built-in templates are well formed") {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot(name) => out.push_str(values.get(name).copied().unwrap_or_default()),
        }
    }
    out
}

pub fn render_letter(kind: LetterKind, ctx: &LetterContext) -> Result<String, CommsError> {
    let t = template(kind);
    let missing: Vec<String> = letter_placeholders(kind)
        .into_iter()
        .filter(|k| ctx.get(k).is_none())
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(CommsError::MissingPlaceholder(missing));
    }
    for (key, value) in &ctx.values {
        if let Some(marker) = marker_in(value) {
            return Err(CommsError::NestedPlaceholder {
                key: key.clone(),
                marker: marker.to_string(),
            });
        }
    }
    let mut values: BTreeMap<&str, &str> = t.defaults.iter().copied().collect();
    values.extend(ctx.values.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    let mut out = fill(t.body, &values);
    for (key, section) in t.optional {
        if ctx.get(key).is_some() {
            out.push_str(&fill(section, &values));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(kind: LetterKind) -> LetterContext {
        let mut ctx = LetterContext::new();
        for k in letter_placeholders(kind) {
            ctx.set(k, format!("<{k}>"));
        }
        ctx
    }

    #[test]
    fn placeholder_lists() {
        assert_eq!(
            letter_placeholders(LetterKind::FunderNotice),
            ["funder_contact", "framework_url", "project_list", "sender_name"]
        );
        assert!(letter_placeholders(LetterKind::FinalFindings).contains(&"recommendations"));
        assert!(!letter_placeholders(LetterKind::VerifyFindings).contains(&"deadline"));
        for kind in LetterKind::all() {
            assert!(!letter_placeholders(kind).is_empty());
        }
    }

    #[test]
    fn verify_findings_lists_contact_and_count() {
        let ctx = full(LetterKind::VerifyFindings)
            .with("km_contact_name", "A. Smith")
            .with("resource_count", "7");
        let text = render_letter(LetterKind::VerifyFindings, &ctx).unwrap();
        assert!(text.contains("- person in charge of knowledge management: A. Smith\n"));
        assert!(text.contains("- publicly available knowledge resources: 7\n"));
        assert!(text.contains("within the next working week."));
        assert_eq!(text, render_letter(LetterKind::VerifyFindings, &ctx).unwrap());
    }

    #[test]
    fn missing_keys_are_all_named() {
        let mut ctx = full(LetterKind::FunderNotice);
        ctx.remove("funder_contact");
        let err = render_letter(LetterKind::FunderNotice, &ctx).unwrap_err();
        assert_eq!(err, CommsError::MissingPlaceholder(vec!["funder_contact".into()]));
        let err = render_letter(LetterKind::FunderNotice, &LetterContext::new()).unwrap_err();
        assert_eq!(err.to_string(), "missing-placeholder: funder_contact, framework_url, project_list, sender_name");
    }

    #[test]
    fn enclosures_are_optional() {
        let ctx = full(LetterKind::LeaderNotice);
        let bare = render_letter(LetterKind::LeaderNotice, &ctx).unwrap();
        assert!(!bare.contains("Enclosure"));
        let with = render_letter(LetterKind::LeaderNotice, &ctx.with("project_list", "- P1")).unwrap();
        assert!(with.ends_with("Enclosure 1. Projects being audited\n- P1\n"));
    }

    #[test]
    fn nested_markers_and_escapes() {
        let ctx = full(LetterKind::FunderNotice).with("sender_name", "{summary}");
        assert_eq!(render_letter(LetterKind::FunderNotice, &ctx).unwrap_err().code(), "nested-placeholder");
        let ctx = full(LetterKind::FunderNotice).with("sender_name", "{ not a marker }");
        assert!(render_letter(LetterKind::FunderNotice, &ctx).is_ok());
        assert_eq!(fill("a {{b} {x}", &BTreeMap::from([("x", "y")])), "a {b} y");
    }
}
