//! `srot verify`: randomized invariant batteries with a pass/fail table.
//!
//! Each battery checks one family of invariants against its independent
//! oracle. `--perturb-gradient` corrupts the gradient used inside the
//! gap-equivalence battery; a healthy suite must notice and fail.

use anyhow::{bail, Result};
use ndarray::Array1;
use rand::Rng;

use srot::baselines;
use srot::gen;
use srot::oracle;
use srot::solvers::{self, SolverOptions, StepRule, Variant};

use crate::VerifyArgs;

struct Battery {
    name: &'static str,
    passed: bool,
    detail: String,
}

pub fn run(args: VerifyArgs) -> Result<u8> {
    let (size_lo, size_hi) = parse_sizes(&args.sizes)?;
    let seeds = args.seeds.max(1);

    let batteries = vec![
        gap_equivalence(seeds, size_hi, args.perturb_gradient),
        curvature(seeds.min(8), size_hi),
        conservation(size_hi),
        line_search(seeds, size_hi),
        lp_equivalence(seeds, size_lo, size_hi),
    ];

    let mut all_pass = true;
    println!("battery                     result  detail");
    for b in &batteries {
        println!(
            "{:<26}  {:<6}  {}",
            b.name,
            if b.passed { "PASS" } else { "FAIL" },
            b.detail
        );
        all_pass &= b.passed;
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn parse_sizes(raw: &str) -> Result<(usize, usize)> {
    let Some((lo, hi)) = raw.split_once("..") else {
        bail!("--sizes expects LO..HI, got {raw:?}");
    };
    let lo: usize = lo.parse()?;
    let hi: usize = hi.parse()?;
    if lo < 2 || hi < lo {
        bail!("--sizes range {raw:?} is empty or starts below 2");
    }
    Ok((lo, hi))
}

fn gap_equivalence(seeds: u64, size_cap: usize, perturb: bool) -> Battery {
    let mut rng = gen::seeded_rng(11);
    let mut worst: f64 = 0.0;
    for trial in 0..seeds {
        let m = rng.random_range(2..=size_cap.max(2));
        let n = rng.random_range(2..=size_cap.max(2));
        let lambda = 10f64.powf(-3.0 * rng.random::<f64>());
        let p = gen::random_problem(m, n, lambda, 7_000 + trial);
        let t = gen::random_feasible_plan(&p, 8_000 + trial);
        let f = p.objective(&t).unwrap();
        let g = p.duality_gap(&t).unwrap().total;
        // the battery recomputes the Lagrangian dual from its own gradient;
        // fault injection perturbs exactly that gradient
        let mut w = f;
        for i in 0..n {
            let mut grad = p.gradient_column(&t, i).unwrap();
            if perturb && i == 0 {
                grad[0] += 1e-3;
            }
            let mut dot = 0.0;
            let mut min_g = f64::INFINITY;
            for j in 0..m {
                dot += t.matrix()[(j, i)] * grad[j];
                min_g = min_g.min(grad[j]);
            }
            w += p.target()[i] * min_g - dot;
        }
        let err = (g - (f - w)).abs() / (1.0 + f.abs());
        worst = worst.max(err);
    }
    Battery {
        name: "gap-equivalence",
        passed: worst <= 1e-9,
        detail: format!("worst relative error {worst:.2e} over {seeds} instances"),
    }
}

fn curvature(instances: u64, size_cap: usize) -> Battery {
    let mut rng = gen::seeded_rng(22);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..instances {
        let m = rng.random_range(2..=size_cap.max(2));
        let n = rng.random_range(2..=size_cap.max(2));
        let lambda = 10f64.powf(-2.0 * rng.random::<f64>());
        let p = gen::random_problem(m, n, lambda, 17_000 + trial);
        worst = worst.max(oracle::worst_curvature_excess(&p, 2_000, &mut rng));
    }
    Battery {
        name: "curvature-bound",
        passed: worst <= 1e-9,
        detail: format!("worst excess over block bound {worst:.2e}"),
    }
}

fn conservation(size_cap: usize) -> Battery {
    let n = size_cap.max(4);
    let mut worst_dev: f64 = 0.0;
    let mut worst_entry = f64::INFINITY;
    for (idx, variant) in [Variant::Plain, Variant::AwayStep, Variant::PairwiseStep]
        .into_iter()
        .enumerate()
    {
        let p = gen::random_problem(n, n, 0.05, 27_000 + idx as u64);
        let opts = SolverOptions {
            variant,
            step_rule: StepRule::ExactLineSearch,
            epsilon: 1e-12,
            max_epochs: 300,
            rng_seed: idx as u64,
            ..SolverOptions::default()
        };
        let outcome = solvers::solve_with_observer(&p, &opts, None, |_, plan| {
            worst_dev = worst_dev.max(plan.max_column_mass_deviation());
            worst_entry = worst_entry.min(plan.min_entry());
        });
        if outcome.is_err() {
            return Battery {
                name: "feasibility-conservation",
                passed: false,
                detail: "solver error".into(),
            };
        }
    }
    Battery {
        name: "feasibility-conservation",
        passed: worst_dev <= 1e-10 && worst_entry >= -1e-15,
        detail: format!("worst column deviation {worst_dev:.2e}, min entry {worst_entry:.2e}"),
    }
}

fn line_search(seeds: u64, size_cap: usize) -> Battery {
    let mut rng = gen::seeded_rng(33);
    let mut worst_slack = f64::NEG_INFINITY;
    for trial in 0..seeds {
        let m = rng.random_range(3..=size_cap.max(3));
        let n = rng.random_range(3..=size_cap.max(3));
        let lambda = 10f64.powf(-3.0 * rng.random::<f64>());
        let p = gen::random_problem(m, n, lambda, 37_000 + trial);
        let t = gen::random_feasible_plan(&p, 38_000 + trial);
        let col = rng.random_range(0..n);
        let atom = p.lmo_column(&t, col).unwrap();
        let mut d = Array1::zeros(m);
        for j in 0..m {
            let s_j = if j == atom.row { atom.value } else { 0.0 };
            d[j] = s_j - t.matrix()[(j, col)];
        }
        let Some(gamma) = solvers::line_search_block(&p, &t, col, &d, 1.0) else {
            continue;
        };
        let f = oracle::objective_along_column_direction(&p, t.matrix(), col, &d, gamma);
        let best = oracle::grid_line_search_column(&p, t.matrix(), col, &d, 1.0, 1001);
        worst_slack = worst_slack.max(f - best.1);
    }
    Battery {
        name: "line-search-optimality",
        passed: worst_slack <= 1e-12,
        detail: format!("worst slack vs 1001-point grid {worst_slack:.2e}"),
    }
}

fn lp_equivalence(seeds: u64, size_lo: usize, size_hi: usize) -> Battery {
    let mut sizes = Vec::new();
    for m in size_lo..=size_hi {
        for n in size_lo..=size_hi {
            if oracle::basis_count(m, n) <= 150_000 {
                sizes.push((m, n));
            }
        }
    }
    if sizes.is_empty() {
        return Battery {
            name: "lp-oracle-equivalence",
            passed: false,
            detail: format!("no enumerable sizes in {size_lo}..{size_hi}"),
        };
    }
    let mut rng = gen::seeded_rng(44);
    let mut worst: f64 = 0.0;
    for trial in 0..seeds {
        let (m, n) = sizes[rng.random_range(0..sizes.len())];
        let (cost, a_int, b_int) = gen::random_lp_instance(m, n, 9, 47_000 + trial);
        let total = a_int.sum();
        let a = a_int.mapv(|x| x / total);
        let b = b_int.mapv(|x| x / total);
        let lp = match baselines::lp_transport_solve(&cost, &a, &b) {
            Ok(lp) => lp,
            Err(e) => {
                return Battery {
                    name: "lp-oracle-equivalence",
                    passed: false,
                    detail: format!("simplex error: {e}"),
                }
            }
        };
        let brute = oracle::lp_min_cost_by_basis_enumeration(&cost, &a, &b);
        worst = worst.max((lp.cost - brute).abs());
        if lp.min_reduced_cost < -1e-9 {
            return Battery {
                name: "lp-oracle-equivalence",
                passed: false,
                detail: format!("reduced-cost certificate {:.2e}", lp.min_reduced_cost),
            };
        }
    }
    Battery {
        name: "lp-oracle-equivalence",
        passed: worst <= 1e-9,
        detail: format!("worst |simplex - enumeration| {worst:.2e} over {seeds} instances"),
    }
}
