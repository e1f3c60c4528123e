//! Renders a command's result document in the requested format.
//!
//! JSON prints the document. Text prints one `path: value` line per leaf.
//! CSV prints the document's table when it has one (one row per record),
//! otherwise `key,value` pairs of the flattened document.

use std::io::Write;

use serde_json::Value;

use crate::args::OutputFormat;

pub struct Rendered {
    pub doc: Value,
    /// Homogeneous records for CSV output.
    pub table: Option<Vec<Value>>,
}

impl Rendered {
    pub fn doc(doc: Value) -> Self {
        Self { doc, table: None }
    }

    pub fn with_table(doc: Value, table: Vec<Value>) -> Self {
        Self { doc, table: Some(table) }
    }
}

pub fn write(out: &mut impl Write, r: &Rendered, format: OutputFormat) -> std::io::Result<()> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &r.doc)?;
            writeln!(out)
        }
        OutputFormat::Text => {
            let mut lines = Vec::new();
            flatten("", &r.doc, &mut lines);
            for (k, v) in lines {
                writeln!(out, "{k}: {v}")?;
            }
            Ok(())
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            match &r.table {
                Some(rows) if !rows.is_empty() => {
                    let mut header = Vec::new();
                    flatten("", &rows[0], &mut header);
                    w.write_record(header.iter().map(|(k, _)| k))
                        .map_err(std::io::Error::other)?;
                    for row in rows {
                        let mut cells = Vec::new();
                        flatten("", row, &mut cells);
                        w.write_record(cells.iter().map(|(_, v)| v))
                            .map_err(std::io::Error::other)?;
                    }
                }
                _ => {
                    let mut pairs = Vec::new();
                    flatten("", &r.doc, &mut pairs);
                    w.write_record(["key", "value"]).map_err(std::io::Error::other)?;
                    for (k, v) in pairs {
                        w.write_record([k, v]).map_err(std::io::Error::other)?;
                    }
                }
            }
            w.flush()
        }
    }
}

/// Leaves of `v` as `(dotted.path, text)`; array elements are indexed.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&key(k), child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), child, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}
