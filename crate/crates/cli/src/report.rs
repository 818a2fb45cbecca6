//! Report serialization: canonical JSON and the rounds-vs-cost CSV.

use crate::experiment::ExperimentReport;
use anyhow::{Context, Result};
use std::path::Path;

/// Formats a float with 12 significant digits. The formatting is idempotent
/// (printing a parsed value reproduces the same text), and values exactly
/// representable at this precision round-trip exactly.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{x:.11e}");
    // trim trailing zeros in the mantissa for readability: 1.50000000000e1
    // becomes 1.5e1
    let (mantissa, exp) = s.split_once('e').expect("scientific notation");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    format!("{mantissa}e{exp}")
}

/// Canonical report JSON (pretty-printed, stable field order, trailing
/// newline). Wall-clock timings are deliberately not part of the report so
/// that identical specs produce identical bytes.
pub fn report_to_json(report: &ExperimentReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

/// CSV with one row per round budget:
/// `r,mean_cost,stderr,coverage_rate,lb_offline,lb_entropy,trials`.
/// Fields never need quoting (numbers only), so the output is trivially
/// RFC-4180 clean; absent bounds are empty fields.
pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("r,mean_cost,stderr,coverage_rate,lb_offline,lb_entropy,trials\n");
    for e in &report.entries {
        let lb_off = e.lb_offline.map(fmt_sig12).unwrap_or_default();
        let lb_ent = e.lb_entropy.map(fmt_sig12).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.r,
            fmt_sig12(e.mean_cost),
            fmt_sig12(e.stderr),
            fmt_sig12(e.coverage_rate),
            lb_off,
            lb_ent,
            e.trials
        ));
    }
    out
}

pub fn write_report_json(report: &ExperimentReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_json(report))
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_report_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_csv(report))
        .with_context(|| format!("cannot write {}", path.display()))
}

/// Parses the numeric fields back out of [`report_to_csv`] output.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.context("malformed CSV")?;
        let opt = |i: usize| -> Result<Option<f64>> {
            let field = record.get(i).unwrap_or("");
            if field.is_empty() {
                Ok(None)
            } else {
                Ok(Some(field.parse()?))
            }
        };
        rows.push(CsvRow {
            r: record.get(0).unwrap_or("").parse()?,
            mean_cost: opt(1)?.unwrap_or(f64::NAN),
            stderr: opt(2)?.unwrap_or(f64::NAN),
            coverage_rate: opt(3)?.unwrap_or(f64::NAN),
            lb_offline: opt(4)?,
            lb_entropy: opt(5)?,
            trials: record.get(6).unwrap_or("").parse()?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub r: u32,
    pub mean_cost: f64,
    pub stderr: f64,
    pub coverage_rate: f64,
    pub lb_offline: Option<f64>,
    pub lb_entropy: Option<f64>,
    pub trials: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{Algo, RoundsEntry};

    fn entry(r: u32, mean: f64) -> RoundsEntry {
        RoundsEntry {
            r,
            eval_mode: "exhaustive".into(),
            trials: 4,
            mean_cost: mean,
            stderr: 0.0,
            coverage_rate: 1.0,
            lb_offline: Some(1.25),
            lb_entropy: None,
            effective_delta_exps: vec![2, 1],
            per_trial: Vec::new(),
        }
    }

    #[test]
    fn sig12_is_idempotent_and_exact_on_representable_values() {
        for x in [0.0, 1.0, -2.5, 12.5, 1.0 / 8.0, 3.0, 1e-9, 123456.75] {
            let s = fmt_sig12(x);
            let parsed: f64 = s.parse().unwrap();
            assert_eq!(parsed, x, "{s}");
            assert_eq!(fmt_sig12(parsed), s);
        }
        // idempotence on a value that needs rounding
        let x = 1.0 / 3.0;
        let s = fmt_sig12(x);
        let parsed: f64 = s.parse().unwrap();
        assert_eq!(fmt_sig12(parsed), s);
    }

    #[test]
    fn csv_header_only_for_empty_range() {
        let report = ExperimentReport {
            algo: Algo::Nsc,
            model: "scenario".into(),
            master_seed: 0,
            entries: Vec::new(),
        };
        assert_eq!(
            report_to_csv(&report),
            "r,mean_cost,stderr,coverage_rate,lb_offline,lb_entropy,trials\n"
        );
    }

    #[test]
    fn csv_roundtrip_recovers_fields() {
        let report = ExperimentReport {
            algo: Algo::Nsc,
            model: "scenario".into(),
            master_seed: 7,
            entries: vec![entry(1, 12.5), entry(2, 8.75)],
        };
        let text = report_to_csv(&report);
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].r, 1);
        assert_eq!(rows[0].mean_cost, 12.5);
        assert_eq!(rows[0].lb_offline, Some(1.25));
        assert_eq!(rows[0].lb_entropy, None);
        assert_eq!(rows[1].mean_cost, 8.75);
        assert_eq!(rows[1].trials, 4);
    }
}
