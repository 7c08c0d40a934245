use std::path::Path;

use super::{read_text, write_text};
use crate::error::{Error, Result};

/// A comma-delimited table with a header row.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// A column parsed as numbers.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .column_index(name)
            .ok_or_else(|| Error::Config(format!("table has no column `{name}`")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row[i].parse().map_err(|_| Error::Parse {
                    path: "table".into(),
                    line: r + 2,
                    message: format!("`{}` in column {name} is not a number", row[i]),
                })
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Table> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| Error::Parse {
            path: origin.into(),
            line: 1,
            message: "empty table".into(),
        })?;
        let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::Parse {
                    path: origin.into(),
                    line: i + 1,
                    message: format!("expected {} fields, found {}", header.len(), row.len()),
                });
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    Table::parse(&read_text(path)?, &path.display().to_string())
}
