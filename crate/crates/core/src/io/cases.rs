use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::model::AGE_CLASSES;
use crate::observation::CaseSeries;

pub const CASE_HEADER: &str = "week,age_group,cases";

/// Reads a `week,age_group,cases` file.
pub fn load_case_series(path: &Path) -> Result<CaseSeries> {
    let text = read_text(path)?;
    parse_case_series(&text, &path.display().to_string())
}

/// Parses case-series text; `origin` names the source in errors.
pub fn parse_case_series(text: &str, origin: &str) -> Result<CaseSeries> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let header = lines.find(|(_, l)| !l.is_empty());
    match header {
        Some((_, h)) if h.split(',').map(str::trim).eq(CASE_HEADER.split(',')) => {}
        Some((n, h)) => {
            return Err(parse_err(
                n,
                format!("expected header `{CASE_HEADER}`, found `{h}`"),
            ))
        }
        None => return Err(parse_err(1, "empty file".into())),
    }
    let mut cells: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut max_week = 0;
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(n, format!("expected 3 fields, found {}", fields.len())));
        }
        let week: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(n, format!("bad week `{}`", fields[0])))?;
        let age: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(n, format!("bad age_group `{}`", fields[1])))?;
        let cases: u64 = fields[2]
            .parse()
            .map_err(|_| parse_err(n, format!("bad case count `{}`", fields[2])))?;
        if week == 0 {
            return Err(parse_err(n, "weeks start at 1".into()));
        }
        if !(1..=AGE_CLASSES).contains(&age) {
            return Err(parse_err(n, format!("age_group {age} outside 1..={AGE_CLASSES}")));
        }
        if cells.insert((week, age), cases).is_some() {
            return Err(Error::DuplicateCell { week, age });
        }
        max_week = max_week.max(week);
    }
    let mut missing = Vec::new();
    let mut counts = Vec::with_capacity(max_week);
    for week in 1..=max_week {
        let mut row = [0u64; AGE_CLASSES];
        for age in 1..=AGE_CLASSES {
            match cells.get(&(week, age)) {
                Some(&c) => row[age - 1] = c,
                None => missing.push((week, age)),
            }
        }
        counts.push(row);
    }
    if !missing.is_empty() {
        return Err(Error::GridIncomplete { missing });
    }
    Ok(CaseSeries::new(counts))
}

pub fn write_case_series(path: &Path, series: &CaseSeries) -> Result<()> {
    let mut out = String::with_capacity(16 * series.cells() + 32);
    out.push_str(CASE_HEADER);
    out.push('\n');
    for (w, row) in series.counts().iter().enumerate() {
        for (a, c) in row.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", w + 1, a + 1, c);
        }
    }
    write_text(path, &out)
}
