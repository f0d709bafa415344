//! CSV and JSON writers. Floats use the shortest round-trip form, so
//! identical runs produce identical bytes.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use jsonschema::Validator;
use serde::Serialize;
use serde_json::Value;

use super::CliError;
use crate::linalg::CMat;

/// The published document schemas, by file name.
pub const SCHEMAS: [(&str, &str); 7] = [
    ("run_config", include_str!("../../../../schemas/run_config.schema.json")),
    ("classification", include_str!("../../../../schemas/classification.schema.json")),
    ("summary", include_str!("../../../../schemas/summary.schema.json")),
    ("propagator", include_str!("../../../../schemas/propagator.schema.json")),
    ("verify_report", include_str!("../../../../schemas/verify_report.schema.json")),
    ("nmr_report", include_str!("../../../../schemas/nmr_report.schema.json")),
    ("iec_report", include_str!("../../../../schemas/iec_report.schema.json")),
];

pub(crate) fn validator(name: &str) -> &'static Validator {
    static CACHE: OnceLock<Vec<(&'static str, Validator)>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        SCHEMAS
            .iter()
            .map(|(n, text)| {
                let schema: Value = serde_json::from_str(text).expect("schema is valid JSON");
                (*n, jsonschema::validator_for(&schema).expect("schema compiles"))
            })
            .collect()
    });
    &all.iter().find(|(n, _)| *n == name).expect("known schema").1
}

/// Problems of `doc` against the named schema, as `pointer: message`.
pub fn schema_errors(name: &str, doc: &Value) -> Vec<String> {
    validator(name)
        .iter_errors(doc)
        .map(|e| format!("{}: {e}", e.instance_path()))
        .collect()
}

pub fn resolve(out_dir: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(())
}

/// Serializes `doc`, checks it against `schema` and writes it pretty-printed.
pub fn write_json<T: Serialize>(path: &Path, schema: &str, doc: &T) -> Result<Value, CliError> {
    let value = serde_json::to_value(doc).map_err(|e| CliError::io(path, e))?;
    let errors = schema_errors(schema, &value);
    assert!(errors.is_empty(), "emitted {schema} document violates its schema: {errors:?}");
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(value)
}

/// A cell that may be empty.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes a header and rows, LF line endings.
pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    ensure_parent(path)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn numbers(xs: impl IntoIterator<Item = f64>) -> Vec<String> {
    xs.into_iter().map(|x| x.to_string()).collect()
}

/// A complex matrix as nested `[re, im]` pairs.
pub fn complex_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

/// Reads a numeric CSV with a header row.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::config("", format!("malformed CSV header: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::config("", format!("malformed CSV row {k}: {e}")))?;
        let row: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::config("", format!("malformed CSV row {k}: {e}")))?;
        if row.len() != header.len() || row.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config("", format!("malformed CSV row {k}")));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
