//! Small CSV/JSON writers. Every file starts with a `# cocomment <version>`
//! line followed by the column header.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn version_line() -> String {
    format!("# cocomment {VERSION}")
}

/// Quotes a field when it contains a separator, quote or newline.
pub fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// `NA` for undefined values, six decimals otherwise (`inf` for infinity).
pub fn opt_metric(v: Option<f64>) -> String {
    v.map(crate::rules::format_metric)
        .unwrap_or_else(|| "NA".to_string())
}

pub struct CsvTable {
    buf: String,
    width: usize,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        let mut buf = version_line();
        buf.push('\n');
        buf.push_str(&columns.join(","));
        buf.push('\n');
        CsvTable {
            buf,
            width: columns.len(),
        }
    }

    /// Adds an extra `# key=value` comment line before the header.
    pub fn with_note(mut self, note: &str) -> Self {
        let insert_at = self.buf.find('\n').map(|i| i + 1).unwrap_or(0);
        self.buf.insert_str(insert_at, &format!("# {note}\n"));
        self
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let fields: Vec<String> = fields.into_iter().map(|f| csv_field(f.as_ref())).collect();
        debug_assert_eq!(fields.len(), self.width, "row width mismatch");
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.buf.as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a top-level `version` field.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Inconsistent(e.to_string()))?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert(
            "version".into(),
            serde_json::Value::String(format!("cocomment {VERSION}")),
        );
    }
    let mut text =
        serde_json::to_string_pretty(&v).map_err(|e| Error::Inconsistent(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// A page id usable as a single path component.
pub fn sanitize_component(raw: &str) -> String {
    let s: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s == "." || s == ".." {
        "_".to_string()
    } else {
        s
    }
}
