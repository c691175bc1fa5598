//! `srot solve`: one instance in, plan/trace/summary artifacts out.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use srot::baselines;
use srot::gen;
use srot::problem::SemiRelaxedProblem;
use srot::solvers::{self, Solution};

use crate::config::{self, ConfigFile};
use crate::{csvio, instance, svg, SolveArgs};

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'a str,
    algorithm: String,
    m: usize,
    n: usize,
    lambda: f64,
    epsilon: f64,
    max_epochs: usize,
    seed: u64,
    instance_digest: String,
    converged: bool,
    epochs: usize,
    final_gap: f64,
    final_objective: f64,
    lp_cost: Option<f64>,
}

pub fn run(args: SolveArgs) -> Result<u8> {
    let cfg = super::load_config(&args.config)?;
    let (opts, lambda) = super::resolve_solver_options(&args.solver, &cfg, 100_000)?;
    let problem = resolve_instance(&args, &cfg, lambda)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("srot-out"));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let reference = if args.no_lp {
        None
    } else {
        let lp = baselines::lp_transport_solve(problem.cost(), problem.source(), problem.target())?;
        Some((lp.cost, lp.reference()))
    };
    let solution = solvers::solve_traced(&problem, &opts, reference.as_ref().map(|(_, r)| r))?;

    write_artifacts(
        &out_dir,
        &problem,
        &opts,
        &solution,
        reference.as_ref().map(|(c, _)| *c),
        args.plot,
    )?;
    if args.save_instance {
        instance::write_problem(&out_dir.join("instance.txt"), &problem)?;
    }
    println!(
        "solve: {} converged={} epochs={} gap={:.6e} objective={:.6e} -> {}",
        config::algorithm_name(&opts),
        solution.converged,
        solution.epochs,
        solution.final_gap,
        solution
            .trace
            .last()
            .map(|r| r.objective)
            .unwrap_or(f64::NAN),
        out_dir.display()
    );
    Ok(if solution.converged { 0 } else { 2 })
}

fn resolve_instance(
    args: &SolveArgs,
    cfg: &ConfigFile,
    lambda: Option<f64>,
) -> Result<SemiRelaxedProblem> {
    let gen_spec = args
        .gen
        .clone()
        .or_else(|| cfg.get("gen").map(str::to_string));
    match (&args.instance, gen_spec) {
        (Some(path), None) => {
            let p = instance::read_problem(path)?;
            match lambda {
                // --lambda overrides the file's lambda so sweeps can reuse
                // one instance file
                Some(lambda) if lambda != p.lambda() => SemiRelaxedProblem::new(
                    p.cost().clone(),
                    p.source().clone(),
                    p.target().clone(),
                    lambda,
                )
                .map_err(Into::into),
                _ => Ok(p),
            }
        }
        (None, Some(spec)) => {
            if spec != "random" {
                bail!("unknown generator {spec:?} (expected \"random\")");
            }
            let lambda = config::resolve_required(lambda, None, "lambda")?;
            let m = config::resolve_required(args.m, config::parse_from_config(cfg, "m")?, "m")?;
            let n = config::resolve_required(args.n, config::parse_from_config(cfg, "n")?, "n")?;
            let seed = args
                .gen_seed
                .or(args.solver.seed)
                .or(config::parse_from_config(cfg, "seed")?)
                .unwrap_or(0);
            Ok(gen::random_problem(m, n, lambda, seed))
        }
        (Some(_), Some(_)) => bail!("--instance and --gen are mutually exclusive"),
        (None, None) => bail!("one of --instance or --gen is required"),
    }
}

pub fn write_artifacts(
    out_dir: &std::path::Path,
    problem: &SemiRelaxedProblem,
    opts: &solvers::SolverOptions,
    solution: &Solution,
    lp_cost: Option<f64>,
    plot: bool,
) -> Result<()> {
    instance::write_plan(&out_dir.join("plan.txt"), &solution.plan)?;
    csvio::write_trace(&out_dir.join("trace.csv"), &solution.trace)?;
    let summary = Summary {
        schema: "srot-summary-v1",
        algorithm: config::algorithm_name(opts),
        m: problem.rows(),
        n: problem.cols(),
        lambda: problem.lambda(),
        epsilon: opts.epsilon,
        max_epochs: opts.max_epochs,
        seed: opts.rng_seed,
        instance_digest: gen::instance_digest(problem),
        converged: solution.converged,
        epochs: solution.epochs,
        final_gap: solution.final_gap,
        final_objective: solution
            .trace
            .last()
            .map(|r| r.objective)
            .unwrap_or(f64::NAN),
        lp_cost,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(out_dir.join("summary.json"), json + "\n")?;
    if plot {
        let gap_series = svg::Series {
            label: "gap",
            points: solution
                .trace
                .records
                .iter()
                .map(|r| (r.epoch as f64, r.gap))
                .collect(),
        };
        let obj_series = svg::Series {
            label: "objective",
            points: solution
                .trace
                .records
                .iter()
                .map(|r| (r.epoch as f64, r.objective))
                .collect(),
        };
        let chart = svg::line_chart("solver trace", "epoch", "value", &[obj_series, gap_series]);
        std::fs::write(out_dir.join("trace.svg"), chart)?;
    }
    Ok(())
}
