//! `srot bench`: a (lambda x algorithm x seed) sweep over random instances.
//!
//! Cells run on a small worker pool; results are collected by index so the
//! emitted CSVs are byte-identical however many workers ran. Wall-clock
//! columns are deliberately absent from bench output for the same reason.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};

use srot::baselines;
use srot::gen;
use srot::metrics::PlanReference;
use srot::solvers::{self, Algorithm, Sampling, SolverOptions, StepRule, Variant};

use crate::config;
use crate::csvio::{self, BenchRunRow, BenchSummaryRow, MedianRow};
use crate::BenchArgs;

#[derive(Debug, Clone)]
struct Cell {
    algo: String,
    lambda: f64,
    seed: u64,
}

struct CellResult {
    converged: bool,
    epochs: usize,
    epochs_to_target: Option<usize>,
    trace: srot::metrics::SolverTrace,
}

pub fn run(args: BenchArgs) -> Result<u8> {
    let cfg = super::load_config(&args.config)?;
    let m = config::resolve_required(args.m, config::parse_from_config(&cfg, "m")?, "m")?;
    let n = config::resolve_required(args.n, config::parse_from_config(&cfg, "n")?, "n")?;
    let lambdas_raw = args
        .lambdas
        .clone()
        .or_else(|| cfg.get("lambdas").map(str::to_string))
        .context("missing required option --lambdas")?;
    let algos_raw = args
        .algos
        .clone()
        .or_else(|| cfg.get("algos").map(str::to_string))
        .unwrap_or_else(|| "bcfw-u-dec,bcfw-u-els".to_string());
    let seeds = config::resolve(args.seeds, config::parse_from_config(&cfg, "seeds")?, 3);
    let eps_scale = config::resolve(
        args.eps_scale,
        config::parse_from_config(&cfg, "eps-scale")?,
        1e-6,
    );
    let max_epochs = config::resolve(
        args.max_epochs,
        config::parse_from_config(&cfg, "max-epochs")?,
        1000,
    );
    let gap_check_period = config::resolve(
        args.gap_check_period,
        config::parse_from_config(&cfg, "gap-check-period")?,
        1,
    );
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("srot-bench"));
    std::fs::create_dir_all(&out_dir)?;

    let lambdas: Vec<f64> = lambdas_raw
        .split(',')
        .map(|s| s.trim().parse::<f64>().context("bad lambda in --lambdas"))
        .collect::<Result<_>>()?;
    let algos: Vec<String> = algos_raw.split(',').map(|s| s.trim().to_string()).collect();
    for a in &algos {
        parse_algo_spec(a)?; // fail fast on typos
    }

    // instances and LP references are shared per lambda
    let mut references: Vec<Option<(f64, PlanReference)>> = Vec::new();
    let mut problems = Vec::new();
    for &lambda in &lambdas {
        let p = gen::random_problem(m, n, lambda, 0xbe7c);
        let reference = if args.no_lp {
            None
        } else {
            let lp = baselines::lp_transport_solve(p.cost(), p.source(), p.target())?;
            Some((lp.cost, lp.reference()))
        };
        references.push(reference);
        problems.push(p);
    }

    let mut cells = Vec::new();
    for algo in &algos {
        for (li, &lambda) in lambdas.iter().enumerate() {
            for seed in 0..seeds {
                cells.push((
                    Cell {
                        algo: algo.clone(),
                        lambda,
                        seed,
                    },
                    li,
                ));
            }
        }
    }

    let jobs = effective_jobs(args.jobs);
    let results: Vec<Option<Result<CellResult>>> = {
        let slots: Vec<Mutex<Option<Result<CellResult>>>> =
            (0..cells.len()).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    if idx >= cells.len() {
                        break;
                    }
                    let (cell, li) = &cells[idx];
                    let outcome = run_cell(
                        cell,
                        &problems[*li],
                        references[*li].as_ref().map(|(_, r)| r),
                        eps_scale,
                        max_epochs,
                        gap_check_period,
                    );
                    *slots[idx].lock().unwrap() = Some(outcome);
                });
            }
        });
        slots.into_iter().map(|s| s.into_inner().unwrap()).collect()
    };

    let mut run_rows = Vec::new();
    let mut summary_rows = Vec::new();
    let mut failures = 0usize;
    let mut ok_results: Vec<(usize, CellResult)> = Vec::new();
    for (idx, outcome) in results.into_iter().enumerate() {
        match outcome.expect("every cell ran") {
            Ok(res) => ok_results.push((idx, res)),
            Err(e) => {
                failures += 1;
                eprintln!(
                    "bench cell failed (algo={} lambda={} seed={}): {e:#}",
                    cells[idx].0.algo, cells[idx].0.lambda, cells[idx].0.seed
                );
            }
        }
    }
    for (idx, res) in &ok_results {
        let cell = &cells[*idx].0;
        run_rows.push(BenchRunRow {
            algo: &cell.algo,
            lambda: cell.lambda,
            seed: cell.seed,
            trace: &res.trace,
        });
        let last = res.trace.records.last().expect("traces are nonempty");
        summary_rows.push(BenchSummaryRow {
            algo: &cell.algo,
            lambda: cell.lambda,
            seed: cell.seed,
            converged: res.converged,
            epochs: res.epochs,
            epochs_to_target: res.epochs_to_target,
            objective: last.objective,
            gap: last.gap,
            marginal_error: last.marginal_error,
            sparsity: last.sparsity,
            matrix_error: last.matrix_error,
            value_error: last.value_error,
        });
    }
    csvio::write_bench_runs(&out_dir.join("bench_runs.csv"), &run_rows)?;
    csvio::write_bench_aggregate(&out_dir.join("bench_aggregate.csv"), &summary_rows)?;

    // per-configuration median/IQR of the final metrics and epochs-to-target
    let mut median_rows_storage: Vec<(String, f64, String, f64, f64, f64)> = Vec::new();
    for algo in &algos {
        for &lambda in &lambdas {
            let group: Vec<&BenchSummaryRow> = summary_rows
                .iter()
                .filter(|r| r.algo == algo && r.lambda == lambda)
                .collect();
            if group.is_empty() {
                continue;
            }
            let metric = |name: &str, extract: &dyn Fn(&BenchSummaryRow) -> Option<f64>| {
                let mut values: Vec<f64> = group.iter().filter_map(|r| extract(r)).collect();
                if values.is_empty() {
                    return None;
                }
                let (med, q1, q3) = csvio::quartiles(&mut values);
                Some((name.to_string(), med, q1, q3))
            };
            type Extractor = Box<dyn Fn(&BenchSummaryRow) -> Option<f64>>;
            let extractors: Vec<(&str, Extractor)> = vec![
                (
                    "objective",
                    Box::new(|r: &BenchSummaryRow| Some(r.objective)),
                ),
                ("gap", Box::new(|r: &BenchSummaryRow| Some(r.gap))),
                (
                    "marginal_error",
                    Box::new(|r: &BenchSummaryRow| Some(r.marginal_error)),
                ),
                ("sparsity", Box::new(|r: &BenchSummaryRow| Some(r.sparsity))),
                (
                    "matrix_error",
                    Box::new(|r: &BenchSummaryRow| r.matrix_error),
                ),
                ("value_error", Box::new(|r: &BenchSummaryRow| r.value_error)),
                (
                    "epochs_to_target",
                    Box::new(|r: &BenchSummaryRow| r.epochs_to_target.map(|e| e as f64)),
                ),
            ];
            for (name, extract) in &extractors {
                if let Some((name, med, q1, q3)) = metric(name, extract.as_ref()) {
                    median_rows_storage.push((algo.clone(), lambda, name, med, q1, q3));
                }
            }
        }
    }
    let median_rows: Vec<MedianRow<'_>> = median_rows_storage
        .iter()
        .map(|(algo, lambda, metric, med, q1, q3)| MedianRow {
            algo,
            lambda: *lambda,
            metric,
            median: *med,
            q1: *q1,
            q3: *q3,
        })
        .collect();
    csvio::write_medians(
        &out_dir.join("bench_medians.csv"),
        csvio::BENCH_MEDIANS_SCHEMA,
        &median_rows,
    )?;

    println!(
        "bench: {} cells ({} failed) -> {}",
        cells.len(),
        failures,
        out_dir.display()
    );
    Ok(if failures > 0 { 1 } else { 0 })
}

fn run_cell(
    cell: &Cell,
    problem: &srot::problem::SemiRelaxedProblem,
    reference: Option<&PlanReference>,
    eps_scale: f64,
    max_epochs: usize,
    gap_check_period: usize,
) -> Result<CellResult> {
    let f0 = problem.objective(&problem.vertex_init())?;
    let target = eps_scale * f0;
    let spec = parse_algo_spec(&cell.algo)?;
    let (solution, trace) = match spec {
        AlgoSpec::Solver(base) => {
            let opts = SolverOptions {
                epsilon: target,
                max_epochs,
                gap_check_period,
                rng_seed: cell.seed,
                ..base
            };
            let sol = solvers::solve_traced(problem, &opts, reference)?;
            let trace = sol.trace.clone();
            (sol, trace)
        }
        AlgoSpec::Pgd => {
            let sol = baselines::pgd_solve(problem, None, max_epochs, target)?;
            let trace = sol.trace.clone();
            (sol, trace)
        }
        AlgoSpec::Fista => {
            let sol = baselines::fista_solve(problem, None, max_epochs, target)?;
            let trace = sol.trace.clone();
            (sol, trace)
        }
    };
    Ok(CellResult {
        converged: solution.converged,
        epochs: solution.epochs,
        epochs_to_target: trace.epochs_to_gap(target),
        trace,
    })
}

enum AlgoSpec {
    Solver(SolverOptions),
    Pgd,
    Fista,
}

/// Parses specs like `fw-dec`, `bcfw-u-els`, `bcfw-ga-dec`, `bcafw-els`,
/// `bcpfw-els`, `pgd`, `fista`.
fn parse_algo_spec(spec: &str) -> Result<AlgoSpec> {
    if spec == "pgd" {
        return Ok(AlgoSpec::Pgd);
    }
    if spec == "fista" {
        return Ok(AlgoSpec::Fista);
    }
    let parts: Vec<&str> = spec.split('-').collect();
    let mut opts = SolverOptions::default();
    let step = |s: &str| -> Result<StepRule> {
        match s {
            "dec" => Ok(StepRule::Decay),
            "els" => Ok(StepRule::ExactLineSearch),
            _ => bail!("bad step rule in algorithm spec {spec:?}"),
        }
    };
    match parts.as_slice() {
        ["fw", rule] => {
            opts.algorithm = Algorithm::Fw;
            opts.step_rule = step(rule)?;
        }
        ["bcfw", sampling, rule] => {
            opts.algorithm = Algorithm::Bcfw;
            opts.sampling = match *sampling {
                "u" => Sampling::Uniform,
                "p" => Sampling::Permutation,
                "ga" => Sampling::GapAdaptive,
                _ => bail!("bad sampling in algorithm spec {spec:?}"),
            };
            opts.step_rule = step(rule)?;
        }
        ["bcafw", rule] => {
            opts.variant = Variant::AwayStep;
            opts.step_rule = step(rule)?;
        }
        ["bcpfw", rule] => {
            opts.variant = Variant::PairwiseStep;
            opts.step_rule = step(rule)?;
        }
        _ => bail!("unknown algorithm spec {spec:?}"),
    }
    Ok(AlgoSpec::Solver(opts))
}

fn effective_jobs(flag: Option<usize>) -> usize {
    let requested = flag.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
    });
    let cap = std::env::var("SROT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(usize::MAX);
    requested.min(cap).max(1)
}
