//! Cross-module invariants, mostly property-based.

use ndarray::Array1;
use proptest::prelude::*;
use rand::Rng;

use srot::baselines;
use srot::color;
use srot::gen;
use srot::metrics;
use srot::problem::SemiRelaxedProblem;
use srot::solvers::{self, Sampling, SolverOptions, StepRule, Variant};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ppm_round_trip_is_bit_exact(
        width in 1usize..24,
        height in 1usize..24,
        seed in any::<u64>(),
    ) {
        let mut rng = gen::seeded_rng(seed);
        let pixels: Vec<u8> = (0..3 * width * height).map(|_| rng.random()).collect();
        let img = color::RgbImage::new(width, height, pixels).unwrap();
        let mut bytes = Vec::new();
        color::write_ppm(&img, &mut bytes).unwrap();
        let back = color::read_ppm(bytes.as_slice()).unwrap();
        prop_assert_eq!(img, back);
    }

    #[test]
    fn simplex_projection_is_feasible_and_idempotent(
        len in 1usize..12,
        mass in 0.01f64..4.0,
        seed in any::<u64>(),
    ) {
        let mut rng = gen::seeded_rng(seed);
        let v: Array1<f64> = (0..len).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
        let x = baselines::project_scaled_simplex(&v, mass);
        prop_assert!(x.iter().all(|&xi| xi >= 0.0));
        prop_assert!((x.sum() - mass).abs() <= 1e-10 * (1.0 + mass));
        let again = baselines::project_scaled_simplex(&x, mass);
        for j in 0..len {
            prop_assert!((again[j] - x[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn gap_identities_hold_on_random_instances(
        m in 2usize..10,
        n in 2usize..10,
        lambda_exp in -3.0f64..0.0,
        seed in any::<u64>(),
    ) {
        let lambda = 10f64.powf(lambda_exp);
        let p = gen::random_problem(m, n, lambda, seed);
        let t = gen::random_feasible_plan(&p, seed.wrapping_add(1));
        let report = p.duality_gap(&t).unwrap();
        let f = p.objective(&t).unwrap();
        let w = p.lagrangian_dual_value(&t).unwrap();
        // gap equivalence and weak duality
        prop_assert!((report.total - (f - w)).abs() <= 1e-9 * (1.0 + f.abs()));
        prop_assert!(w <= f + 1e-12);
        // decomposition and per-column nonnegativity
        let sum: f64 = report.per_column.sum();
        prop_assert!((sum - report.total).abs() <= 1e-10 * (1.0 + report.total.abs()));
        for g in report.per_column.iter() {
            prop_assert!(*g >= -1e-12);
        }
        // the gap itself is nonnegative up to round-off
        prop_assert!(report.total >= -1e-10 * (1.0 + f.abs()));
    }

    #[test]
    fn non_uniformity_measure_identity_and_range(
        len in 1usize..24,
        seed in any::<u64>(),
    ) {
        // the measure driving the gap-adaptive complexity analysis:
        // chi(x) = sqrt(1 + n^2 Var[x/||x||_1]) satisfies
        // ||x||_2 = chi(x)/sqrt(n) ||x||_1 and lives in [1, sqrt(n)]
        let mut rng = gen::seeded_rng(seed);
        let x: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 3.0).collect();
        let l1: f64 = x.iter().sum();
        prop_assume!(l1 > 1e-9);
        let l2: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n = len as f64;
        let p: Vec<f64> = x.iter().map(|v| v / l1).collect();
        let mean = 1.0 / n;
        let var: f64 = p.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let chi = (1.0 + n * n * var).sqrt();
        prop_assert!((l2 - chi / n.sqrt() * l1).abs() <= 1e-9 * (1.0 + l2));
        prop_assert!((1.0 - 1e-12..=n.sqrt() + 1e-12).contains(&chi));
    }

    #[test]
    fn projected_centroids_stay_in_the_reference_box(
        n in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = gen::seeded_rng(seed);
        let refs: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let srcs: Vec<[f64; 3]> = (0..3)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let masses: Array1<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
        let mut t = ndarray::Array2::zeros((3, n));
        for j in 0..n {
            let col = gen::random_scaled_simplex_point(&mut rng, 3, masses[j]);
            for i in 0..3 {
                t[(i, j)] = col[i];
            }
        }
        let plan = srot::problem::TransportPlan::from_matrix(t, masses).unwrap();
        let out = color::barycentric_project(&plan, &srcs, &refs).unwrap();
        for (i, c) in out.centroids.iter().enumerate() {
            if out.starved_rows.contains(&i) {
                continue;
            }
            for ch in 0..3 {
                let lo = refs.iter().map(|r| r[ch]).fold(f64::INFINITY, f64::min);
                let hi = refs.iter().map(|r| r[ch]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(c[ch] >= lo - 1e-12 && c[ch] <= hi + 1e-12);
            }
        }
    }
}

#[test]
fn recorded_gap_is_fresh_at_every_epoch() {
    let p = gen::random_problem(8, 8, 0.05, 99);
    let opts = SolverOptions {
        step_rule: StepRule::ExactLineSearch,
        epsilon: 1e-9,
        max_epochs: 300,
        ..SolverOptions::default()
    };
    let mut recomputed: Vec<(usize, f64)> = Vec::new();
    let sol = solvers::solve_with_observer(&p, &opts, None, |epoch, plan| {
        recomputed.push((epoch, p.duality_gap(plan).unwrap().total));
    })
    .unwrap();
    assert_eq!(recomputed.len(), sol.trace.records.len());
    for (record, (epoch, fresh)) in sol.trace.records.iter().zip(recomputed.iter()) {
        assert_eq!(record.epoch, *epoch);
        assert!(
            (record.gap - fresh).abs() <= 1e-12 * (1.0 + fresh.abs()),
            "stale gap at epoch {epoch}: recorded {} vs fresh {fresh}",
            record.gap
        );
    }
}

#[test]
fn optimum_point_identities() {
    // at a certified optimum: strong duality holds, the duality gap
    // vanishes, and the full line search has nowhere to go (the residual
    // gamma scales like lambda*gap/||T1-S1||^2, so the certificate must be
    // tight for the 1e-8 stationarity tolerance)
    let p = gen::random_problem(6, 6, 0.2, 314);
    let reference = baselines::reference_optimum(&p, 1e-12).unwrap();
    assert!(reference.certified);
    let plan = &reference.plan;
    let f = p.objective(plan).unwrap();
    let w = p.lagrangian_dual_value(plan).unwrap();
    assert!((f - w).abs() <= 1e-8, "strong duality off by {}", f - w);
    let gap = p.duality_gap(plan).unwrap();
    assert!(gap.total <= 1e-8);
    let mut s_mat = ndarray::Array2::zeros((6, 6));
    for (i, &row) in gap.argmin_rows.iter().enumerate() {
        s_mat[(row, i)] = p.target()[i];
    }
    let s_plan = srot::problem::TransportPlan::from_matrix(s_mat, p.target().clone()).unwrap();
    let ls = solvers::line_search_full(&p, plan, &s_plan);
    assert!(ls.gamma.abs() <= 1e-8, "gamma {} at the optimum", ls.gamma);
}

#[test]
fn certified_convergence_bounds_suboptimality() {
    for seed in 0..5u64 {
        let p = gen::random_problem(10, 10, 0.05, 500 + seed);
        let reference = baselines::reference_optimum(&p, 1e-11).unwrap();
        assert!(reference.certified);
        let opts = SolverOptions {
            variant: Variant::PairwiseStep,
            step_rule: StepRule::ExactLineSearch,
            epsilon: 1e-6,
            max_epochs: 30_000,
            rng_seed: seed,
            ..SolverOptions::default()
        };
        let sol = solvers::solve(&p, &opts).unwrap();
        assert!(sol.converged);
        let f = p.objective(&sol.plan).unwrap();
        assert!(
            f - reference.f_star <= sol.final_gap + 1e-11,
            "suboptimality {} above the gap certificate {}",
            f - reference.f_star,
            sol.final_gap
        );
    }
}

#[test]
fn sparsity_growth_tracks_plain_step_counts() {
    // nonzeros in a column never exceed 1 + (plain FW steps applied to it)
    let p = gen::random_problem(32, 8, 0.1, 42);
    let mut plan = p.vertex_init();
    let mut rng = gen::seeded_rng(43);
    let mut steps_per_column = [0usize; 8];
    for k in 0..500 {
        let col = gen::uniform_index(&mut rng, 8);
        solvers::bcfw_step(&p, &mut plan, col, Variant::Plain, StepRule::Decay, k, None).unwrap();
        steps_per_column[col] += 1;
        let nnz = plan.column(col).iter().filter(|v| **v > 0.0).count();
        assert!(
            nnz <= 1 + steps_per_column[col],
            "column {col} has {nnz} nonzeros after {} steps",
            steps_per_column[col]
        );
    }
}

#[test]
fn away_and_pairwise_runs_keep_reconstructible_active_sets() {
    let p = gen::random_problem(12, 6, 0.02, 7);
    for variant in [Variant::AwayStep, Variant::PairwiseStep] {
        let mut plan = p.vertex_init();
        let mut active = solvers::ActiveSetState::vertex_init(6);
        let mut rng = gen::seeded_rng(8);
        for k in 0..3000 {
            let col = gen::uniform_index(&mut rng, 6);
            solvers::bcfw_step(
                &p,
                &mut plan,
                col,
                variant,
                StepRule::ExactLineSearch,
                k,
                Some(&mut active),
            )
            .unwrap();
            // weights sum to one
            let sum: f64 = active.column(col).values().sum();
            assert!((sum - 1.0).abs() <= 1e-10, "{variant:?} weights sum {sum}");
        }
        for i in 0..6 {
            let rebuilt = active.reconstruct_column(i, 12, p.target()[i]);
            for j in 0..12 {
                assert!(
                    (rebuilt[j] - plan.matrix()[(j, i)]).abs() <= 1e-9,
                    "{variant:?} reconstruction drift at ({j}, {i})"
                );
            }
        }
    }
}

#[test]
fn permutation_sampling_covers_every_column_each_epoch() {
    let p = gen::random_problem(6, 6, 0.1, 11);
    let opts = SolverOptions {
        sampling: Sampling::Permutation,
        epsilon: 1e-14,
        max_epochs: 4,
        ..SolverOptions::default()
    };
    // with permutation sampling and the decay rule, an epoch applies exactly
    // one step per column, so every column of the final plan differs from
    // the vertex initialization
    let sol = solvers::solve(&p, &opts).unwrap();
    for i in 0..6 {
        let nnz = sol.plan.column(i).iter().filter(|v| **v > 0.0).count();
        assert!(nnz >= 1);
    }
    assert_eq!(sol.trace.records.len(), 5);
}

#[test]
fn metrics_are_pure_functions() {
    let p = gen::random_problem(6, 6, 0.3, 21);
    let t = gen::random_feasible_plan(&p, 22);
    let lp = baselines::lp_transport_solve(p.cost(), p.source(), p.target()).unwrap();
    let a = (
        metrics::marginal_error(&t, p.source(), p.target()),
        metrics::sparsity(t.matrix(), metrics::SPARSITY_THRESHOLD),
        metrics::matrix_error(t.matrix(), &lp.plan),
        metrics::value_error(t.matrix(), &lp.plan, p.cost()),
    );
    let b = (
        metrics::marginal_error(&t, p.source(), p.target()),
        metrics::sparsity(t.matrix(), metrics::SPARSITY_THRESHOLD),
        metrics::matrix_error(t.matrix(), &lp.plan),
        metrics::value_error(t.matrix(), &lp.plan, p.cost()),
    );
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
    assert_eq!(a.3, b.3);
}

#[test]
fn non_finite_arithmetic_fails_loudly() {
    // a subnormal lambda overflows 1/lambda; the solver must error out, not
    // return garbage
    let p = SemiRelaxedProblem::new(
        ndarray::arr2(&[[0.0, 1.0], [1.0, 0.0]]),
        ndarray::arr1(&[0.5, 0.5]),
        ndarray::arr1(&[0.5, 0.5]),
        1e-320,
    )
    .unwrap();
    match solvers::solve(&p, &SolverOptions::default()) {
        Ok(sol) => panic!("expected an error, got gap {}", sol.final_gap),
        Err(srot::SrotError::Numeric(_)) | Err(srot::SrotError::Divergence { .. }) => {}
        Err(other) => panic!("unexpected error kind: {other}"),
    }
}
