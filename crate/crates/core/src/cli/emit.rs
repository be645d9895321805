//! `report.jsonl` and `summary.csv`.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every finite `f64` exactly. Non-finite values are refused
//! rather than written.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling_limit::SuiteVerdict;

pub const REPORT_FILE: &str = "report.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "suite,pass,worst_margin";

/// One measurement. Exactly one of `stderr` and `deterministic` carries
/// the uncertainty: sampled values have a stderr, exact ones the tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub suite: String,
    pub k: Option<usize>,
    pub f_id: Option<String>,
    pub re: f64,
    pub im: f64,
    pub stderr: Option<f64>,
    pub deterministic: bool,
    /// `None` for exploratory measurements with no threshold.
    pub pass: Option<bool>,
}

impl Record {
    /// An exact real value.
    pub fn exact(suite: &str, k: Option<usize>, f_id: Option<&str>, value: f64, pass: Option<bool>) -> Self {
        Self {
            suite: suite.into(),
            k,
            f_id: f_id.map(Into::into),
            re: value,
            im: 0.0,
            stderr: None,
            deterministic: true,
            pass,
        }
    }

    /// A sampled real value with its stderr.
    pub fn sampled(suite: &str, k: Option<usize>, f_id: Option<&str>, value: f64, stderr: f64, pass: Option<bool>) -> Self {
        Self {
            stderr: Some(stderr),
            deterministic: false,
            ..Self::exact(suite, k, f_id, value, pass)
        }
    }

    /// Exact when `stderr` is `None`, sampled otherwise.
    pub fn measured(suite: &str, k: usize, f_id: Option<&str>, value: f64, stderr: Option<f64>, pass: Option<bool>) -> Self {
        match stderr {
            Some(s) => Self::sampled(suite, Some(k), f_id, value, s, pass),
            None => Self::exact(suite, Some(k), f_id, value, pass),
        }
    }

    pub fn with_im(mut self, im: f64) -> Self {
        self.im = im;
        self
    }
}

fn float(out: &mut String, key: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("record field {key}")));
    }
    write!(out, "{v:.16e}").expect("writing to a String");
    Ok(())
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// One JSON object on one line, keys in schema order.
pub fn record_line(r: &Record) -> Result<String> {
    let mut out = String::with_capacity(160);
    write!(out, "{{\"suite\":{},\"k\":", json_string(&r.suite)).unwrap();
    match r.k {
        Some(k) => write!(out, "{k}").unwrap(),
        None => out.push_str("null"),
    }
    out.push_str(",\"f_id\":");
    match &r.f_id {
        Some(f) => out.push_str(&json_string(f)),
        None => out.push_str("null"),
    }
    out.push_str(",\"re\":");
    float(&mut out, "re", r.re)?;
    out.push_str(",\"im\":");
    float(&mut out, "im", r.im)?;
    out.push_str(",\"stderr\":");
    match r.stderr {
        Some(s) => float(&mut out, "stderr", s)?,
        None => out.push_str("null"),
    }
    write!(out, ",\"deterministic\":{}", r.deterministic).unwrap();
    out.push_str(",\"pass\":");
    match r.pass {
        Some(p) => write!(out, "{p}").unwrap(),
        None => out.push_str("null"),
    }
    out.push('}');
    Ok(out)
}

/// `summary.csv` body; infinite margins (vacuous suites) are written as
/// `inf`.
pub fn summary_csv(verdicts: &[SuiteVerdict]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for v in verdicts {
        let margin = if v.worst_margin.is_finite() {
            format!("{:.16e}", v.worst_margin)
        } else if v.worst_margin > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
        writeln!(out, "{},{},{}", v.suite, if v.pass { "PASS" } else { "FAIL" }, margin).unwrap();
    }
    out
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes both files into `out_dir`, creating it if needed.
pub fn emit_report(records: &[Record], verdicts: &[SuiteVerdict], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut body = String::new();
    for r in records {
        body.push_str(&record_line(r)?);
        body.push('\n');
    }
    let report = out_dir.join(REPORT_FILE);
    let summary = out_dir.join(SUMMARY_FILE);
    write_file(&report, &body)?;
    write_file(&summary, &summary_csv(verdicts))?;
    Ok(vec![report, summary])
}

/// Parses a `report.jsonl` body back into records.
pub fn parse_records(body: &str) -> Result<Vec<Record>> {
    body.lines()
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::InvalidArgument(format!("line {}: {e}", i + 1))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_report_has_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&[], &[], dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap(), "");
        assert_eq!(
            std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap(),
            format!("{SUMMARY_HEADER}\n")
        );
    }

    #[test]
    fn line_layout_is_fixed() {
        let r = Record::sampled("charfunc", Some(2), Some("f\"0"), 0.5, 0.01, Some(true)).with_im(-0.25);
        assert_eq!(
            record_line(&r).unwrap(),
            "{\"suite\":\"charfunc\",\"k\":2,\"f_id\":\"f\\\"0\",\"re\":5.0000000000000000e-1,\
             \"im\":-2.5000000000000000e-1,\"stderr\":1.0000000000000000e-2,\"deterministic\":false,\"pass\":true}"
        );
        let e = Record::exact("rp", None, None, 1.0, None);
        assert!(record_line(&e).unwrap().contains("\"k\":null,\"f_id\":null"));
        assert!(record_line(&Record::exact("x", None, None, f64::NAN, None)).is_err());
    }

    #[test]
    fn summary_marks_each_suite() {
        let v = [
            SuiteVerdict { suite: "a".into(), pass: true, worst_margin: 0.5 },
            SuiteVerdict { suite: "b".into(), pass: false, worst_margin: -1e-3 },
            SuiteVerdict { suite: "c".into(), pass: true, worst_margin: f64::INFINITY },
        ];
        let csv = summary_csv(&v);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "a,PASS,5.0000000000000000e-1");
        assert_eq!(lines[2], "b,FAIL,-1.0000000000000000e-3");
        assert_eq!(lines[3], "c,PASS,inf");
    }

    proptest! {
        #[test]
        fn records_round_trip_bit_exactly(
            re in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO,
            im in proptest::num::f64::NORMAL,
            se in proptest::option::of(0.0f64..1e3),
            k in proptest::option::of(0usize..64),
        ) {
            let r = Record {
                suite: "s".into(),
                k,
                f_id: Some("id".into()),
                re,
                im,
                stderr: se,
                deterministic: se.is_none(),
                pass: Some(true),
            };
            let back = parse_records(&record_line(&r).unwrap()).unwrap();
            prop_assert_eq!(back.len(), 1);
            prop_assert_eq!(back[0].re.to_bits(), re.to_bits());
            prop_assert_eq!(back[0].im.to_bits(), im.to_bits());
            prop_assert_eq!(back[0].stderr.map(f64::to_bits), se.map(f64::to_bits));
            prop_assert_eq!(&back[0], &r);
        }
    }
}
