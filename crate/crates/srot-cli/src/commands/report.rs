//! `srot report`: median/IQR curves over seeds from a bench runs CSV.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};

use crate::csvio::{self, ReportRow, RUN_METRIC_NAMES};
use crate::svg::{self, Series};
use crate::ReportArgs;

pub fn run(args: ReportArgs) -> Result<u8> {
    let rows = csvio::read_bench_runs(&args.runs)?;
    if rows.is_empty() {
        bail!("no rows in {}", args.runs.display());
    }
    let out_dir = args.out.clone().unwrap_or_else(|| {
        args.runs
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from("."))
    });
    std::fs::create_dir_all(&out_dir)?;

    // group: (algo, lambda-bits) -> epoch -> metric -> samples across seeds
    type Key = (String, u64);
    let mut groups: BTreeMap<Key, BTreeMap<usize, [Vec<f64>; 6]>> = BTreeMap::new();
    for row in &rows {
        let key = (row.algo.clone(), row.lambda.to_bits());
        let per_epoch = groups.entry(key).or_default();
        let samples = per_epoch.entry(row.epoch).or_default();
        for (slot, value) in row.metrics.iter().enumerate() {
            if let Some(v) = value {
                samples[slot].push(*v);
            }
        }
    }

    let mut storage: Vec<(String, f64, usize, &'static str, f64, f64, f64)> = Vec::new();
    for ((algo, lambda_bits), per_epoch) in &groups {
        let lambda = f64::from_bits(*lambda_bits);
        for (epoch, samples) in per_epoch {
            for (slot, name) in RUN_METRIC_NAMES.iter().enumerate() {
                if samples[slot].is_empty() {
                    continue;
                }
                let mut values = samples[slot].clone();
                let (med, q1, q3) = csvio::quartiles(&mut values);
                storage.push((algo.clone(), lambda, *epoch, name, med, q1, q3));
            }
        }
    }
    let report_rows: Vec<ReportRow<'_>> = storage
        .iter()
        .map(|(algo, lambda, epoch, metric, med, q1, q3)| ReportRow {
            algo,
            lambda: *lambda,
            epoch: *epoch,
            metric,
            median: *med,
            q1: *q1,
            q3: *q3,
        })
        .collect();
    let report_path = out_dir.join("report.csv");
    csvio::write_report(&report_path, &report_rows)?;

    if args.svg {
        for (slot, name) in RUN_METRIC_NAMES.iter().enumerate() {
            let mut series = Vec::new();
            let mut labels = Vec::new();
            for (algo, lambda_bits) in groups.keys() {
                labels.push(format!(
                    "{algo} lambda={:.0e}",
                    f64::from_bits(*lambda_bits)
                ));
            }
            for (idx, ((algo, lambda_bits), per_epoch)) in groups.iter().enumerate() {
                let _ = (algo, lambda_bits);
                let points: Vec<(f64, f64)> = per_epoch
                    .iter()
                    .filter_map(|(epoch, samples)| {
                        if samples[slot].is_empty() {
                            return None;
                        }
                        let mut values = samples[slot].clone();
                        let (med, _, _) = csvio::quartiles(&mut values);
                        Some((*epoch as f64, med))
                    })
                    .collect();
                series.push((labels[idx].clone(), points));
            }
            let series_refs: Vec<Series<'_>> = series
                .iter()
                .map(|(label, points)| Series {
                    label,
                    points: points.clone(),
                })
                .collect();
            let chart = svg::line_chart(name, "epoch", name, &series_refs);
            std::fs::write(out_dir.join(format!("report_{name}.svg")), chart)?;
        }
    }
    println!(
        "report: {} configurations, {} rows -> {}",
        groups.len(),
        report_rows.len(),
        report_path.display()
    );
    Ok(0)
}
