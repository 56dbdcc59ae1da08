//! Check records and their serialization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::Format;

/// One verified quantity. `pass` is always `abs_error <= tolerance`.
///
/// Non-finite values are stored as `None` (JSON `null`, empty CSV cell); a
/// computation that errored has no `actual` and no `abs_error` and fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub paper_ref: String,
    pub expected: Option<f64>,
    pub actual: Option<f64>,
    pub abs_error: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    /// Seconds spent on the group of computations this record belongs to.
    pub wall_time: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl CheckRecord {
    /// |actual − expected| ≤ tolerance.
    pub fn equal(id: impl Into<String>, what: &str, expected: f64, actual: f64, tolerance: f64) -> Self {
        Self::with_error(id, what, expected, actual, (actual - expected).abs(), tolerance)
    }

    /// actual ≥ bound, stored as abs_error = max(0, bound − actual) with zero tolerance.
    pub fn at_least(id: impl Into<String>, what: &str, bound: f64, actual: f64) -> Self {
        Self::with_error(id, what, bound, actual, (bound - actual).max(0.0), 0.0)
    }

    /// actual ≤ bound, stored as abs_error = actual with tolerance = bound.
    pub fn at_most(id: impl Into<String>, what: &str, actual: f64, bound: f64) -> Self {
        Self::with_error(id, what, 0.0, actual, actual, bound)
    }

    /// A computation that could not be carried out.
    pub fn failed(id: impl Into<String>, what: &str, tolerance: f64) -> Self {
        Self::with_error(id, what, f64::NAN, f64::NAN, f64::INFINITY, tolerance)
    }

    fn with_error(id: impl Into<String>, what: &str, expected: f64, actual: f64, err: f64, tolerance: f64) -> Self {
        let abs_error = finite(err);
        let pass = abs_error.is_some_and(|e| e <= tolerance);
        CheckRecord {
            id: id.into(),
            paper_ref: what.to_string(),
            expected: finite(expected),
            actual: finite(actual),
            abs_error,
            tolerance,
            pass,
            wall_time: 0.0,
        }
    }

    pub fn timed(mut self, seconds: f64) -> Self {
        self.wall_time = seconds;
        self
    }

    /// Recomputes the pass flag from the stored fields.
    pub fn consistent(&self) -> bool {
        self.pass == self.abs_error.is_some_and(|e| e <= self.tolerance)
    }
}

/// True when every record passed.
pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

pub fn write_records<W: Write>(records: &[CheckRecord], format: Format, w: W) -> std::io::Result<()> {
    write_rows(records, format, w)
}

/// Writes rows as a pretty JSON array or as CSV with a header.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: Format, mut w: W) -> std::io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)
        }
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            for r in rows {
                cw.serialize(r).map_err(std::io::Error::other)?;
            }
            cw.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_follows_error() {
        let r = CheckRecord::equal("a", "x", 1.0, 1.0 + 1e-12, 1e-10);
        assert!(r.pass && r.consistent());
        let r = CheckRecord::equal("a", "x", 1.0, 1.1, 1e-10);
        assert!(!r.pass && r.consistent());
        let r = CheckRecord::at_least("b", "x", 0.1, 2.8);
        assert!(r.pass && r.abs_error == Some(0.0));
        assert!(!CheckRecord::at_least("b", "x", 0.1, 0.05).pass);
        assert!(CheckRecord::at_most("c", "x", 3.0, 5.0).pass);
        let f = CheckRecord::failed("d", "x", 1.0);
        assert!(!f.pass && f.consistent() && f.actual.is_none());
    }

    #[test]
    fn serializes_both_formats() {
        let rows = vec![CheckRecord::equal("a", "x", 1.0, 1.0, 0.0).timed(0.5), CheckRecord::failed("b", "y", 1.0)];
        let mut json = Vec::new();
        write_records(&rows, Format::Json, &mut json).unwrap();
        let back: Vec<CheckRecord> = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, rows);
        let mut csv = Vec::new();
        write_records(&rows, Format::Csv, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("id,paper_ref,expected,actual,abs_error,tolerance,pass,wall_time\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
