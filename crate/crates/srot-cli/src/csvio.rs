//! CSV emission and parsing. Every file starts with a `# schema:` line and a
//! header row naming each column; numbers always use `.` decimals and
//! lowercase scientific notation, independent of locale.

use std::path::Path;

use anyhow::{bail, Context, Result};

use srot::metrics::SolverTrace;

pub const TRACE_SCHEMA: &str = "srot-trace-v1";
pub const BENCH_RUNS_SCHEMA: &str = "srot-bench-runs-v1";
pub const BENCH_AGGREGATE_SCHEMA: &str = "srot-bench-aggregate-v1";
pub const BENCH_MEDIANS_SCHEMA: &str = "srot-bench-medians-v1";
pub const REPORT_SCHEMA: &str = "srot-report-v1";

pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn optional_number(v: Option<f64>) -> String {
    v.map(number).unwrap_or_default()
}

/// The fixed single-run trace schema:
/// epoch, wall_seconds, objective, gap, marginal_error, sparsity,
/// matrix_error, value_error.
pub fn write_trace(path: &Path, trace: &SolverTrace) -> Result<()> {
    let mut out = format!(
        "# schema: {TRACE_SCHEMA}\nepoch,wall_seconds,objective,gap,marginal_error,sparsity,matrix_error,value_error\n"
    );
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.epoch,
            number(r.wall_seconds),
            number(r.objective),
            number(r.gap),
            number(r.marginal_error),
            number(r.sparsity),
            optional_number(r.matrix_error),
            optional_number(r.value_error),
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing trace {}", path.display()))
}

/// One row per (run, epoch); wall time is deliberately absent so repeated
/// invocations are byte-identical.
pub struct BenchRunRow<'a> {
    pub algo: &'a str,
    pub lambda: f64,
    pub seed: u64,
    pub trace: &'a SolverTrace,
}

pub fn write_bench_runs(path: &Path, rows: &[BenchRunRow<'_>]) -> Result<()> {
    let mut out = format!(
        "# schema: {BENCH_RUNS_SCHEMA}\nalgo,lambda,seed,epoch,objective,gap,marginal_error,sparsity,matrix_error,value_error\n"
    );
    for row in rows {
        for r in &row.trace.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                row.algo,
                number(row.lambda),
                row.seed,
                r.epoch,
                number(r.objective),
                number(r.gap),
                number(r.marginal_error),
                number(r.sparsity),
                optional_number(r.matrix_error),
                optional_number(r.value_error),
            ));
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing bench runs {}", path.display()))
}

/// Final state of one run: the aggregate CSV has one of these per run.
pub struct BenchSummaryRow<'a> {
    pub algo: &'a str,
    pub lambda: f64,
    pub seed: u64,
    pub converged: bool,
    pub epochs: usize,
    pub epochs_to_target: Option<usize>,
    pub objective: f64,
    pub gap: f64,
    pub marginal_error: f64,
    pub sparsity: f64,
    pub matrix_error: Option<f64>,
    pub value_error: Option<f64>,
}

pub fn write_bench_aggregate(path: &Path, rows: &[BenchSummaryRow<'_>]) -> Result<()> {
    let mut out = format!(
        "# schema: {BENCH_AGGREGATE_SCHEMA}\nalgo,lambda,seed,converged,epochs,epochs_to_target,objective,gap,marginal_error,sparsity,matrix_error,value_error\n"
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.algo,
            number(r.lambda),
            r.seed,
            r.converged,
            r.epochs,
            r.epochs_to_target
                .map(|e| e.to_string())
                .unwrap_or_default(),
            number(r.objective),
            number(r.gap),
            number(r.marginal_error),
            number(r.sparsity),
            optional_number(r.matrix_error),
            optional_number(r.value_error),
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing bench aggregate {}", path.display()))
}

/// Median and interquartile range of one metric for one configuration.
pub struct MedianRow<'a> {
    pub algo: &'a str,
    pub lambda: f64,
    pub metric: &'a str,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

pub fn write_medians(path: &Path, schema: &str, rows: &[MedianRow<'_>]) -> Result<()> {
    let mut out = format!("# schema: {schema}\nalgo,lambda,metric,median,q1,q3\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.algo,
            number(r.lambda),
            r.metric,
            number(r.median),
            number(r.q1),
            number(r.q3),
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing medians {}", path.display()))
}

/// Per-epoch median/IQR long-format rows emitted by the report command.
pub struct ReportRow<'a> {
    pub algo: &'a str,
    pub lambda: f64,
    pub epoch: usize,
    pub metric: &'a str,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

pub fn write_report(path: &Path, rows: &[ReportRow<'_>]) -> Result<()> {
    let mut out = format!("# schema: {REPORT_SCHEMA}\nalgo,lambda,epoch,metric,median,q1,q3\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.algo,
            number(r.lambda),
            r.epoch,
            r.metric,
            number(r.median),
            number(r.q1),
            number(r.q3),
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing report {}", path.display()))
}

/// Parsed bench-runs row (the report command's input). Each row is one
/// sample at its epoch; the seed column only distinguishes runs and is not
/// needed after grouping.
#[derive(Debug, Clone)]
pub struct ParsedRunRow {
    pub algo: String,
    pub lambda: f64,
    pub epoch: usize,
    pub metrics: [Option<f64>; 6],
}

pub const RUN_METRIC_NAMES: [&str; 6] = [
    "objective",
    "gap",
    "marginal_error",
    "sparsity",
    "matrix_error",
    "value_error",
];

pub fn read_bench_runs(path: &Path) -> Result<Vec<ParsedRunRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading bench runs {}", path.display()))?;
    let mut lines = text.lines();
    let schema = lines
        .next()
        .with_context(|| "empty bench runs file".to_string())?;
    if schema.trim() != format!("# schema: {BENCH_RUNS_SCHEMA}") {
        bail!("unexpected schema line: {schema}");
    }
    let _header = lines.next();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            bail!(
                "line {}: expected 10 fields, got {}",
                lineno + 3,
                fields.len()
            );
        }
        let parse_opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse::<f64>()?))
            }
        };
        rows.push(ParsedRunRow {
            algo: fields[0].to_string(),
            lambda: fields[1].parse()?,
            epoch: fields[3].parse()?,
            metrics: [
                parse_opt(fields[4])?,
                parse_opt(fields[5])?,
                parse_opt(fields[6])?,
                parse_opt(fields[7])?,
                parse_opt(fields[8])?,
                parse_opt(fields[9])?,
            ],
        });
    }
    Ok(rows)
}

/// Median and quartiles (linear interpolation) of a non-empty sample.
pub fn quartiles(values: &mut [f64]) -> (f64, f64, f64) {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let at = |q: f64| -> f64 {
        let pos = q * (values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        if lo == hi {
            values[lo]
        } else {
            values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
        }
    };
    (at(0.5), at(0.25), at(0.75))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_of_small_samples() {
        let mut v = vec![3.0, 1.0, 2.0];
        let (med, q1, q3) = quartiles(&mut v);
        assert_eq!(med, 2.0);
        assert_eq!(q1, 1.5);
        assert_eq!(q3, 2.5);
        let mut single = vec![7.0];
        assert_eq!(quartiles(&mut single), (7.0, 7.0, 7.0));
    }

    #[test]
    fn number_formatting_is_locale_free() {
        assert_eq!(number(0.5), "5.000000000000e-1");
        assert_eq!(number(f64::NAN), "nan");
    }
}
