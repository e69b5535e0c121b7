//! CSV writing: comment-block headers, 17-significant-digit floats, and
//! atomic write-temp-then-rename so concurrent runs never interleave.

use crate::error::CliError;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    /// Starts a CSV with the standard comment block: tool banner, resolved
    /// config, seed line, and (unless suppressed) a wall-clock timestamp.
    pub fn new(config_echo: &str, seed_note: &str, deterministic: bool) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# treecoca trace");
        if !deterministic {
            let ts = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let _ = writeln!(buf, "# written-at-unix: {ts}");
        }
        let _ = writeln!(buf, "# {seed_note}");
        for line in config_echo.lines() {
            let _ = writeln!(buf, "# {line}");
        }
        Self { buf }
    }

    pub fn header(&mut self, columns: &[&str]) {
        let _ = writeln!(self.buf, "{}", columns.join(","));
    }

    pub fn row(&mut self, fields: &[Field]) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            match f {
                Field::Int(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                Field::Float(v) => {
                    let _ = write!(self.buf, "{}", fmt_float(*v));
                }
            }
            first = false;
        }
        self.buf.push('\n');
    }

    /// Atomically writes the accumulated CSV.
    pub fn finish(self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.buf.as_bytes())
    }
}

pub enum Field {
    Int(u64),
    Float(f64),
}

/// 17 significant digits: round-trips every finite f64 exactly.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else if v.is_infinite() {
        "-inf".into()
    } else {
        "nan".into()
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("mkdir {}: {e}", dir.display())))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::Runtime(format!("write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Runtime(format!("rename into {}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_the_format() {
        for v in [0.1, -3.5e-5, 1.0 / 3.0, 4.0e5, f64::MIN_POSITIVE] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    #[test]
    fn comment_block_prefixes_every_config_line() {
        let mut w = CsvWriter::new("a = 1\nb = 2", "seed: 7", true);
        w.header(&["x", "y"]);
        w.row(&[Field::Int(1), Field::Float(0.5)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        w.finish(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# treecoca trace\n# seed: 7\n# a = 1\n# b = 2\nx,y\n"));
        assert!(text.contains("1,5.0000000000000000e-1"));
        assert!(!text.contains("written-at-unix"));
    }
}
