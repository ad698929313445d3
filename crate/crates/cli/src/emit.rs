//! Deterministic machine-readable outputs: JSON with 17 significant digits
//! and CSV files whose header rows name units.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// JSON formatter printing every float with 17 significant digits so that
/// round-tripping is lossless and identical runs are byte-identical.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{:.16e}", value)
    }
}

/// Serializes `value` to `path` with the fixed-precision float format.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    buf.push(b'\n');
    fs::write(path, buf)
}

/// Writes a CSV file: one header row naming columns and units, then rows of
/// floats at 17 significant digits, in the given (fixed) order.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut buf = String::new();
    buf.push_str(header);
    buf.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                buf.push(',');
            }
            first = false;
            buf.push_str(&format!("{:.16e}", v));
        }
        buf.push('\n');
    }
    fs::write(path, buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_keep_17_digits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_json(&path, &serde_json::json!({ "v": 0.1_f64 })).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["v"].as_f64().unwrap(), 0.1);
    }
}
