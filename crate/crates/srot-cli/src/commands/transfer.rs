//! `srot transfer`: quantize both images, solve the semi-relaxed problem
//! between their palettes, project, and recolor.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use srot::baselines;
use srot::color::{self, QuantizedImage};
use srot::problem::SemiRelaxedProblem;
use srot::solvers;

use crate::config;
use crate::csvio;
use crate::TransferArgs;

pub fn run(args: TransferArgs) -> Result<u8> {
    let cfg = super::load_config(&args.config)?;
    let (opts, lambda) = super::resolve_solver_options(&args.solver, &cfg, 2_000)?;
    let lambda = config::resolve_required(lambda, None, "lambda")?;
    let k = config::resolve(args.k, config::parse_from_config(&cfg, "k")?, 32);
    let out_path = args
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("transferred.ppm"));
    let trace_path = args
        .trace
        .clone()
        .unwrap_or_else(|| out_path.with_extension("trace.csv"));
    let snapshots: Vec<usize> = match &args.snapshots {
        None => Vec::new(),
        Some(raw) => raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .context("bad epoch in --snapshots")
            })
            .collect::<Result<_>>()?,
    };

    let src_img = read_image(&args.src)?;
    let ref_img = read_image(&args.reference)?;
    let seed = opts.rng_seed;
    let src = color::kmeans_quantize(&src_img, k, seed, 200)?;
    let reference = color::kmeans_quantize(&ref_img, k, seed.wrapping_add(1), 200)?;
    if src.reduced_k || reference.reduced_k {
        eprintln!(
            "note: palette reduced to {} source / {} reference distinct colors",
            src.quantized.centroids.len(),
            reference.quantized.centroids.len()
        );
    }
    let src = src.quantized;
    let reference_q = reference.quantized;

    let cost = color::build_cost(&src, &reference_q);
    let problem = SemiRelaxedProblem::new(
        cost.clone(),
        src.histogram.clone(),
        reference_q.histogram.clone(),
        lambda,
    )?;

    let lp_reference = if args.no_lp {
        None
    } else {
        let lp = baselines::lp_transport_solve(&cost, &src.histogram, &reference_q.histogram)?;
        Some(lp.reference())
    };

    let mut snapshot_errors: Vec<String> = Vec::new();
    let solution =
        solvers::solve_with_observer(&problem, &opts, lp_reference.as_ref(), |epoch, plan| {
            if snapshots.contains(&epoch) {
                let path = snapshot_path(&out_path, epoch);
                if let Err(e) = write_recolored(&src, &reference_q, plan, &path) {
                    snapshot_errors.push(format!("snapshot at epoch {epoch}: {e:#}"));
                }
            }
        })?;
    for msg in &snapshot_errors {
        eprintln!("warning: {msg}");
    }

    write_recolored(&src, &reference_q, &solution.plan, &out_path)?;
    csvio::write_trace(&trace_path, &solution.trace)?;
    println!(
        "transfer: {} converged={} epochs={} gap={:.3e} -> {}",
        config::algorithm_name(&opts),
        solution.converged,
        solution.epochs,
        solution.final_gap,
        out_path.display()
    );
    Ok(if solution.converged { 0 } else { 2 })
}

fn read_image(path: &Path) -> Result<color::RgbImage> {
    let file = File::open(path).with_context(|| format!("opening image {}", path.display()))?;
    color::read_ppm(std::io::BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))
}

fn write_recolored(
    src: &QuantizedImage,
    reference: &QuantizedImage,
    plan: &srot::problem::TransportPlan,
    path: &Path,
) -> Result<()> {
    let projected = color::barycentric_project(plan, &src.centroids, &reference.centroids)?;
    if !projected.starved_rows.is_empty() {
        eprintln!(
            "note: {} starved palette rows kept their original color",
            projected.starved_rows.len()
        );
    }
    let img = color::recolor(src, &projected.centroids)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    color::write_ppm(&img, BufWriter::new(file))?;
    Ok(())
}

fn snapshot_path(out: &Path, epoch: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "transferred".to_string());
    out.with_file_name(format!("{stem}_epoch{epoch}.ppm"))
}
