use std::io::Write;
use std::path::Path;

use serde_json::Value;

use revjuggle_core::numerics::Rational;
use revjuggle_core::Scalar;

use crate::error::CliResult;

/// Exact values print as `"p/q"` strings; floats as JSON numbers.
pub fn scalar<S: Scalar>(v: &S) -> Value {
    if S::EXACT {
        Value::String(v.to_text())
    } else {
        serde_json::json!(v.to_f64())
    }
}

pub fn rational(v: &Rational) -> Value {
    Value::String(v.to_text())
}

pub fn json_text(v: &Value) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    Ok(text)
}

/// A CSV document with a header row.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(std::io::Error::other)?;
    for row in rows {
        writer.write_record(row).map_err(std::io::Error::other)?;
    }
    let bytes = writer.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(path) => {
            let dir = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or_else(|| Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.flush()?;
            tmp.persist(path).map_err(|e| e.error)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
