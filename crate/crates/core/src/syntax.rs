//! Syntactic checks shared by the inventory model and the crosswalk.

use chrono::NaiveDate;

/// Parses a strict `YYYY-MM-DD` calendar date, explaining the first problem.
pub fn parse_date(s: &str) -> Result<NaiveDate, String> {
    let b = s.as_bytes();
    let shape_ok = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
    if !shape_ok {
        return Err("expected YYYY-MM-DD".into());
    }
    let year: i32 = s[0..4].parse().map_err(|_| "bad year")?;
    let month: u32 = s[5..7].parse().map_err(|_| "bad month")?;
    let day: u32 = s[8..10].parse().map_err(|_| "bad day")?;
    if !(1..=12).contains(&month) {
        return Err(format!("month {month} out of range"));
    }
    NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| format!("day {day} out of range for {year}-{month:02}"))
}

/// Two- or three-letter primary language tag with optional hyphenated
/// alphanumeric subtags of up to eight characters (`en`, `eng`, `en-GB`).
pub fn is_language_tag(s: &str) -> bool {
    let mut parts = s.split('-');
    let primary = parts.next().unwrap_or_default();
    if !(2..=3).contains(&primary.len()) || !primary.chars().all(|c| c.is_ascii_alphabetic()) {
        return false;
    }
    parts.all(|p| (1..=8).contains(&p.len()) && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

/// `scheme://rest` or a bare `domain.tld[/path]`. Syntax only.
pub fn is_uri(s: &str) -> bool {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return false;
    }
    if let Some((scheme, rest)) = s.split_once("://") {
        let mut chars = scheme.chars();
        let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
        return first_ok
            && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
            && !rest.is_empty();
    }
    let host = s.split('/').next().unwrap_or_default();
    let labels: Vec<&str> = host.split('.').collect();
    labels.len() >= 2
        && labels.iter().all(|l| {
            !l.is_empty()
                && !l.starts_with('-')
                && !l.ends_with('-')
                && l.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        })
        && labels.last().is_some_and(|tld| tld.chars().all(|c| c.is_ascii_alphabetic()))
}

/// `R` followed by exactly three decimal digits.
pub fn is_resource_id(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 4 && b[0] == b'R' && b[1..].iter().all(u8::is_ascii_digit)
}

/// Numeric part of a resource id.
pub fn resource_number(s: &str) -> Option<u32> {
    is_resource_id(s).then(|| s[1..].parse().ok()).flatten()
}
