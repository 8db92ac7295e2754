//! Artifact formats: numeric CSV tables, run manifests and the small text
//! parsers used by the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::EnsembleParams;
use crate::validation::Check;

/// Version of the JSON output schema.
pub const SCHEMA_VERSION: u32 = 1;

/// One line of a tolerance report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceEntry {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl From<&Check> for ToleranceEntry {
    fn from(c: &Check) -> Self {
        Self { name: c.name.clone(), value: c.value, bound: c.bound, pass: c.pass }
    }
}

/// Provenance of one command run. Only `wall_time` varies between reruns
/// with the same inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub params: Option<EnsembleParams>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Seconds.
    pub wall_time: f64,
    pub threads: usize,
    pub rng: Option<String>,
    #[serde(default)]
    pub tolerance_report: Vec<ToleranceEntry>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, params: Option<EnsembleParams>, seed: Option<u64>, threads: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            params,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: 0.0,
            threads,
            rng: None,
            tolerance_report: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Decodes and checks a manifest.
pub fn decode_manifest(text: &str) -> Result<RunManifest> {
    let m: RunManifest = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported schema version {}", m.schema_version)));
    }
    if !(m.wall_time.is_finite() && m.wall_time >= 0.0) {
        return Err(Error::Parse(format!("wall_time must be a non-negative number, got {}", m.wall_time)));
    }
    Ok(m)
}

/// `<file>.manifest.json` next to a data file.
pub fn manifest_path(data: &Path) -> PathBuf {
    let mut name = data.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    data.with_file_name(name)
}

/// A header plus rows of floating-point columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Comma-separated, LF-terminated, every value with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{}", format_value(*v)).expect("write to String");
            }
            out.push('\n');
        }
        out
    }
}

/// `d.dddddddddddddddde[+-]x`, or `nan` / `inf` / `-inf`.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_float(s: &str) -> Result<f64> {
    let s = s.trim();
    f64::from_str(s).map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

/// Reads a table written by [`CsvTable::to_csv`]. Accepts CRLF line endings
/// and a missing final newline; rejects ragged rows.
pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    let header: Vec<String> = header_line.split(',').map(|h| h.trim().to_string()).collect();
    if header.iter().any(|h| h.is_empty()) {
        return Err(Error::Parse("empty column name".into()));
    }
    let mut table = CsvTable::new(header);
    for (i, line) in lines.enumerate() {
        let row = line.split(',').map(parse_float).collect::<Result<Vec<f64>>>()?;
        if row.len() != table.header.len() {
            return Err(Error::Parse(format!("row {} has {} fields, expected {}", i + 1, row.len(), table.header.len())));
        }
        table.rows.push(row);
    }
    Ok(table)
}

/// `a:b` with finite `a < b`.
pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| Error::Parse(format!("expected a:b, got {s:?}")))?;
    let (a, b) = (parse_float(a)?, parse_float(b)?);
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Parse(format!("range needs finite a < b, got {a}:{b}")));
    }
    Ok((a, b))
}

/// `x+yi`, `x-yi`, `yi`, `x` or `x,y`, with finite parts.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let z = match s.split_once(',') {
        Some((re, im)) => Complex64::new(parse_float(re)?, parse_float(im)?),
        None => Complex64::from_str(s).map_err(|_| Error::Parse(format!("not a complex number: {s:?}")))?,
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Parse(format!("complex number must be finite, got {s:?}")));
    }
    Ok(z)
}

/// Comma-separated list of names drawn from `allowed`.
pub fn parse_name_list<'a>(s: &str, allowed: &[&'a str]) -> Result<Vec<&'a str>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let name = allowed
            .iter()
            .find(|a| **a == part)
            .ok_or_else(|| Error::Parse(format!("unknown item {part:?}, expected one of {}", allowed.join(", "))))?;
        if !out.contains(name) {
            out.push(*name);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty list".into()));
    }
    Ok(out)
}

/// Parameters from JSON `{"t": .., "T": .., "n": ..}`, validated.
pub fn decode_params(text: &str) -> Result<EnsembleParams> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(vec!["xi".into(), "rho".into()]);
        t.push(vec![-1.5, 0.1]);
        t.push(vec![0.0, f64::NAN]);
        let s = t.to_csv();
        assert_eq!(s, "xi,rho\n-1.5000000000000000e0,1.0000000000000001e-1\n0.0000000000000000e0,nan\n");
        assert!(!s.contains('\r'));
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        assert!(parse_csv("a,b\n1,2\n3\n").is_err());
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,,b\n").is_err());
        assert!(parse_csv("a\nx\n").is_err());
    }

    #[test]
    fn ranges_and_complex() {
        assert_eq!(parse_range("-3:3").unwrap(), (-3.0, 3.0));
        assert!(parse_range("3:-3").is_err());
        assert!(parse_range("3").is_err());
        assert!(parse_range("nan:1").is_err());
        assert_eq!(parse_complex("0.3-0.2i").unwrap(), Complex64::new(0.3, -0.2));
        assert_eq!(parse_complex("0.3, -0.2").unwrap(), Complex64::new(0.3, -0.2));
        assert_eq!(parse_complex("2i").unwrap(), Complex64::new(0.0, 2.0));
        assert!(parse_complex("inf").is_err());
        assert!(parse_complex("z").is_err());
    }

    #[test]
    fn name_lists() {
        let allowed = ["exact", "order0", "order1"];
        assert_eq!(parse_name_list("order1, exact,order1", &allowed).unwrap(), vec!["order1", "exact"]);
        assert!(parse_name_list("order3", &allowed).is_err());
        assert!(parse_name_list(",", &allowed).is_err());
    }

    #[test]
    fn manifest_roundtrip_and_sidecar() {
        let p = EnsembleParams::new(0.5, 1.0, 8).unwrap();
        let mut m = RunManifest::new("outside", Some(p), Some(7), 2);
        m.tolerance_report.push(ToleranceEntry { name: "x".into(), value: 1.0, bound: 2.0, pass: true });
        assert_eq!(decode_manifest(&m.to_json()).unwrap(), m);
        assert!(decode_manifest(&m.to_json().replace("\"schema_version\": 1", "\"schema_version\": 9")).is_err());
        assert_eq!(manifest_path(Path::new("out/a.csv")), Path::new("out/a.csv.manifest.json"));
    }

    #[test]
    fn params_decoder_validates() {
        assert!(decode_params(r#"{"t":0.5,"T":1,"n":4}"#).is_ok());
        assert!(decode_params(r#"{"t":0.5,"T":-1,"n":4}"#).is_err());
    }

    proptest! {
        #[test]
        fn csv_roundtrip_is_exact(rows in proptest::collection::vec(proptest::collection::vec(any::<f64>(), 3), 0..20)) {
            let mut t = CsvTable::new(vec!["a".into(), "b".into(), "c".into()]);
            for r in rows {
                t.push(r);
            }
            let back = parse_csv(&t.to_csv()).unwrap();
            prop_assert_eq!(back.rows.len(), t.rows.len());
            for (r, s) in back.rows.iter().zip(&t.rows) {
                for (x, y) in r.iter().zip(s) {
                    prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()) || (*x == 0.0 && *y == 0.0));
                }
            }
            prop_assert_eq!(back.to_csv(), t.to_csv());
        }
    }
}
