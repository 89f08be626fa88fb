//! CSV and JSON serialization of experiment results.
//!
//! Floats use Rust's shortest round-trip formatting, so output is a pure
//! function of the values.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{theory_exponent, BenchmarkResult, ConvergenceStudy, LIMIT_EXPONENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub const CELL_HEADER: &str = "n,m,r,queries,queries_amplified,error";
pub const SUMMARY_HEADER: &str = "m,theory_exponent,fitted_exponent,fitted_exponent_amplified";
pub const CONVERGENCE_HEADER: &str = "dt,error,slope,r_squared,exact";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Cell table, a blank line, then one summary row per `m` and the limit row.
pub fn benchmark_csv(result: &BenchmarkResult) -> String {
    let mut out = String::new();
    writeln!(out, "{CELL_HEADER}").unwrap();
    for c in &result.cells {
        writeln!(out, "{},{},{},{},{},{}", c.n, c.m, c.r, c.queries, c.queries_amplified, c.error).unwrap();
    }
    if result.cells.is_empty() {
        return out;
    }
    out.push('\n');
    writeln!(out, "{SUMMARY_HEADER}").unwrap();
    for s in &result.scaling {
        writeln!(
            out,
            "{},{:.3},{},{}",
            s.m, s.theory_exponent, s.fitted_exponent, s.fitted_exponent_amplified
        )
        .unwrap();
    }
    writeln!(out, "limit,{LIMIT_EXPONENT:.3},,").unwrap();
    out
}

/// Summary table with the theory column only.
pub fn theory_csv(m_values: &[usize]) -> String {
    let mut out = String::new();
    writeln!(out, "{SUMMARY_HEADER}").unwrap();
    for &m in m_values {
        writeln!(out, "{m},{:.3},,", theory_exponent(m)).unwrap();
    }
    writeln!(out, "limit,{LIMIT_EXPONENT:.3},,").unwrap();
    out
}

pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut out = String::new();
    writeln!(out, "{CONVERGENCE_HEADER}").unwrap();
    let slope = opt(study.fitted_slope);
    let r2 = opt(study.r_squared);
    for (dt, e) in study.dt_grid.iter().zip(&study.errors) {
        writeln!(out, "{dt},{e},{slope},{r2},{}", study.exact).unwrap();
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn benchmark_report(result: &BenchmarkResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(benchmark_csv(result)),
        Format::Json => to_json(result),
    }
}

pub fn convergence_report(study: &ConvergenceStudy, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(convergence_csv(study)),
        Format::Json => to_json(study),
    }
}

/// Writes `content` to `path`, or to stdout when `path` is `None`.
pub fn emit(content: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{BenchmarkCell, ScalingResult};

    #[test]
    fn empty_benchmark_is_header_only() {
        let r = BenchmarkResult {
            cells: vec![],
            scaling: vec![],
        };
        assert_eq!(benchmark_csv(&r), format!("{CELL_HEADER}\n"));
    }

    #[test]
    fn golden_benchmark_csv() {
        let r = BenchmarkResult {
            cells: vec![BenchmarkCell {
                n: 4,
                m: 2,
                r: 12,
                queries: 36.0,
                queries_amplified: 72.0,
                error: 0.00075,
                start: 9,
                monotone: true,
            }],
            scaling: vec![ScalingResult {
                m: 2,
                n_values: vec![4],
                query_counts: vec![36.0],
                query_counts_amplified: vec![72.0],
                fitted_exponent: 1.5,
                fitted_exponent_amplified: 1.5,
                theory_exponent: theory_exponent(2),
            }],
        };
        let expected = "n,m,r,queries,queries_amplified,error\n4,2,12,36,72,0.00075\n\n\
                        m,theory_exponent,fitted_exponent,fitted_exponent_amplified\n2,1.667,1.5,1.5\nlimit,1.333,,\n";
        assert_eq!(benchmark_csv(&r), expected);
        let json = to_json(&r.scaling[0]).unwrap();
        let back: ScalingResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r.scaling[0]);
    }

    #[test]
    fn theory_rows() {
        let csv = theory_csv(&[1, 2, 3, 4, 5]);
        let theory: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(theory, ["2.000", "1.667", "1.556", "1.500", "1.467", "1.333"]);
    }

    #[test]
    fn convergence_rows() {
        let s = ConvergenceStudy {
            dt_grid: vec![0.1, 0.05],
            errors: vec![1e-3, 1.25e-4],
            fitted_slope: Some(3.0),
            r_squared: Some(1.0),
            fit_points: 2,
            exact: false,
        };
        assert_eq!(convergence_csv(&s), "dt,error,slope,r_squared,exact\n0.1,0.001,3,1,false\n0.05,0.000125,3,1,false\n");
    }
}
