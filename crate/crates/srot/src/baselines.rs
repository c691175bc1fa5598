//! Reference solvers: projected gradient, FISTA, an exact LP transport
//! oracle, and a gap-certified reference optimum.
//!
//! PGD and FISTA solve the same semi-relaxed problem as the Frank-Wolfe
//! solvers but through column-wise Euclidean projections, so cross-solver
//! agreement is a meaningful check. The LP oracle solves the *unrelaxed*
//! transportation problem exactly with the transportation simplex; the
//! matrix/value error metrics compare against its plan.

use std::time::Instant;

use ndarray::{Array1, Array2};

use crate::error::{Result, SrotError};
use crate::gen;
use crate::metrics::{self, MetricRecord, SolverTrace, TraceMeta};
use crate::problem::{SemiRelaxedProblem, TransportPlan};
use crate::solvers::{self, Solution, SolverOptions};

/// Euclidean projection of `v` onto the scaled simplex
/// `{x >= 0 : sum x = mass}` by the sort-and-threshold method.
pub fn project_scaled_simplex(v: &Array1<f64>, mass: f64) -> Array1<f64> {
    debug_assert!(mass >= 0.0, "mass must be nonnegative");
    if mass == 0.0 {
        return Array1::zeros(v.len());
    }
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - mass) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.mapv(|x| (x - theta).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GradientScheme {
    Plain,
    Accelerated,
}

/// Projected gradient descent on the semi-relaxed problem. The default
/// stepsize is `lambda / n`, the inverse of the penalty Hessian bound; a
/// custom stepsize must not exceed it.
pub fn pgd_solve(
    p: &SemiRelaxedProblem,
    stepsize: Option<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<Solution> {
    projected_gradient(p, stepsize, max_iters, tol, GradientScheme::Plain)
}

/// FISTA (accelerated projected gradient) on the semi-relaxed problem.
pub fn fista_solve(
    p: &SemiRelaxedProblem,
    stepsize: Option<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<Solution> {
    projected_gradient(p, stepsize, max_iters, tol, GradientScheme::Accelerated)
}

fn projected_gradient(
    p: &SemiRelaxedProblem,
    stepsize: Option<f64>,
    max_iters: usize,
    tol: f64,
    scheme: GradientScheme,
) -> Result<Solution> {
    let (m, n) = (p.rows(), p.cols());
    let lipschitz_inv = p.lambda() / n as f64;
    let eta = stepsize.unwrap_or(lipschitz_inv);
    if !(eta.is_finite() && eta > 0.0 && eta <= lipschitz_inv * (1.0 + 1e-12)) {
        return Err(SrotError::Config(format!(
            "stepsize {eta} outside (0, lambda/n = {lipschitz_inv}]"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SrotError::Config(format!(
            "tolerance must be positive, got {tol}"
        )));
    }

    let start = Instant::now();
    let mut trace = SolverTrace {
        records: Vec::new(),
        meta: TraceMeta {
            options: format!(
                "{} stepsize={eta:e} max_iters={max_iters} tol={tol:e}",
                match scheme {
                    GradientScheme::Plain => "pgd",
                    GradientScheme::Accelerated => "fista",
                }
            ),
            seed: 0,
            instance_digest: gen::instance_digest(p),
            ..TraceMeta::default()
        },
    };

    let mut x = p.vertex_init();
    let mut x_prev = x.matrix().clone();
    let mut y = x.matrix().clone();
    let mut momentum = 1.0_f64;
    let mut final_gap = f64::INFINITY;
    let mut converged = false;
    let mut epochs = 0;

    for k in 0..=max_iters {
        let gap_started = Instant::now();
        let report = p.duality_gap(&x)?;
        trace.meta.gap_eval_seconds += gap_started.elapsed().as_secs_f64();
        let objective = p.objective(&x)?;
        if !objective.is_finite() || !report.total.is_finite() {
            return Err(SrotError::Divergence {
                epoch: k,
                trace: Box::new(trace),
            });
        }
        trace.push(MetricRecord {
            epoch: k,
            wall_seconds: start.elapsed().as_secs_f64(),
            objective,
            gap: report.total,
            marginal_error: metrics::marginal_error(&x, p.source(), p.target()),
            sparsity: metrics::sparsity(x.matrix(), metrics::SPARSITY_THRESHOLD),
            matrix_error: None,
            value_error: None,
        });
        final_gap = report.total;
        epochs = k;
        if report.total <= tol {
            converged = true;
            break;
        }
        if k == max_iters {
            break;
        }

        // gradient at the extrapolated point (or the iterate itself for PGD)
        let at = match scheme {
            GradientScheme::Plain => x.matrix().clone(),
            GradientScheme::Accelerated => y.clone(),
        };
        let mut row_sums = vec![0.0_f64; m];
        for j in 0..m {
            for i in 0..n {
                row_sums[j] += at[(j, i)];
            }
        }
        let inv_lambda = 1.0 / p.lambda();
        let mut next = Array2::zeros((m, n));
        let mut col = Array1::zeros(m);
        for i in 0..n {
            for j in 0..m {
                let g = p.cost()[(j, i)] + inv_lambda * (row_sums[j] - p.source()[j]);
                col[j] = at[(j, i)] - eta * g;
            }
            let projected = project_scaled_simplex(&col, p.target()[i]);
            for j in 0..m {
                next[(j, i)] = projected[j];
            }
        }

        match scheme {
            GradientScheme::Plain => {
                x = TransportPlan::new_unchecked(next, p.target().clone());
            }
            GradientScheme::Accelerated => {
                let momentum_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                let beta = (momentum - 1.0) / momentum_next;
                y = &next + &((&next - &x_prev) * beta);
                momentum = momentum_next;
                x_prev = next.clone();
                x = TransportPlan::new_unchecked(next, p.target().clone());
            }
        }
    }

    Ok(Solution {
        plan: x,
        final_gap,
        epochs,
        trace,
        converged,
    })
}

/// Exact optimal transport plan for the unrelaxed problem.
#[derive(Debug, Clone)]
pub struct LpPlan {
    pub plan: Array2<f64>,
    pub cost: f64,
    pub basis_size: usize,
    /// Basic cells of the final spanning-tree basis.
    pub basis: Vec<(usize, usize)>,
    /// Smallest reduced cost over nonbasic cells (the optimality certificate;
    /// it must be >= -1e-9).
    pub min_reduced_cost: f64,
}

impl LpPlan {
    pub fn reference(&self) -> metrics::PlanReference {
        metrics::PlanReference {
            plan: self.plan.clone(),
            cost: self.cost,
        }
    }
}

/// Reduced costs must exceed this for a basis to count as optimal.
const LP_ENTER_TOL: f64 = 1e-10;

/// Exact transportation simplex: northwest-corner start, MODI (u/v) pricing,
/// Bland's anti-cycling rule. Degeneracy is handled by an index-scaled
/// perturbation of the marginals; the perturbation is removed by re-solving
/// the final basis tree against the original marginals.
pub fn lp_transport_solve(cost: &Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) -> Result<LpPlan> {
    let (m, n) = cost.dim();
    if a.len() != m || b.len() != n {
        return Err(SrotError::Config(format!(
            "cost is {m}x{n} but marginals have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(SrotError::Config(
            "marginals must be finite and nonnegative".into(),
        ));
    }
    let total_a: f64 = a.sum();
    let total_b: f64 = b.sum();
    if (total_a - total_b).abs() > 1e-10 * (1.0 + total_a.abs()) {
        return Err(SrotError::Config(format!(
            "unbalanced marginals: {total_a} vs {total_b}"
        )));
    }

    // Work at probability scale so the 1e-12-scale perturbation is
    // representable regardless of the input magnitudes.
    let scale = total_a;
    if scale <= 0.0 {
        return Err(SrotError::Config(
            "marginals must carry positive mass".into(),
        ));
    }
    let a_norm = a.mapv(|x| x / scale);
    let b_norm = b.mapv(|x| x / scale);

    let mut a_pert = a_norm.clone();
    let mut b_pert = b_norm.clone();
    let mut added = 0.0;
    for i in 0..m {
        let delta = 1e-12 * (i + 1) as f64;
        a_pert[i] += delta;
        added += delta;
    }
    b_pert[n - 1] += added;

    let (basis, duals) = simplex_core(cost, &a_pert, &b_pert)?;
    let mut flows = solve_basis_flows(&basis, &a_norm, &b_norm)?;

    // The perturbed-optimal basis can leave marginally negative flows once
    // the perturbation is removed; anything beyond noise means the basis is
    // not optimal for the original marginals, so re-solve without the
    // perturbation (Bland's rule alone guarantees termination).
    let (basis, duals, flows) = if flows.iter().any(|&f| f < -1e-10) {
        let (basis, duals) = simplex_core(cost, &a_norm, &b_norm)?;
        let flows = solve_basis_flows(&basis, &a_norm, &b_norm)?;
        (basis, duals, flows)
    } else {
        for f in flows.iter_mut() {
            if *f < 0.0 {
                *f = 0.0;
            }
        }
        (basis, duals, flows)
    };

    let mut plan = Array2::zeros((m, n));
    for (&(i, j), &f) in basis.iter().zip(flows.iter()) {
        plan[(i, j)] = f * scale;
    }
    let cost_value: f64 = plan.iter().zip(cost.iter()).map(|(t, c)| t * c).sum();
    let min_reduced_cost = min_reduced_cost(cost, &basis, &duals);
    Ok(LpPlan {
        plan,
        cost: cost_value,
        basis_size: basis.len(),
        basis,
        min_reduced_cost,
    })
}

/// Recomputes the optimality certificate of a basis: the smallest reduced
/// cost over nonbasic cells under the MODI duals.
pub fn certificate_min_reduced_cost(cost: &Array2<f64>, basis: &[(usize, usize)]) -> Result<f64> {
    let duals = modi_duals(cost, basis)?;
    Ok(min_reduced_cost(cost, basis, &duals))
}

fn min_reduced_cost(cost: &Array2<f64>, basis: &[(usize, usize)], duals: &Duals) -> f64 {
    let (m, n) = cost.dim();
    let mut basic = vec![false; m * n];
    for &(i, j) in basis {
        basic[i * n + j] = true;
    }
    let mut min = f64::INFINITY;
    for i in 0..m {
        for j in 0..n {
            if !basic[i * n + j] {
                min = min.min(cost[(i, j)] - duals.u[i] - duals.v[j]);
            }
        }
    }
    min
}

struct Duals {
    u: Vec<f64>,
    v: Vec<f64>,
}

/// Runs the simplex to optimality and returns the final basis plus duals.
fn simplex_core(
    cost: &Array2<f64>,
    a: &Array1<f64>,
    b: &Array1<f64>,
) -> Result<(Vec<(usize, usize)>, Duals)> {
    let (m, n) = cost.dim();
    let (mut basis, mut flows) = northwest_corner(a, b);
    let pivot_cap = 200 * m * n + 1000;

    for _pivot in 0..pivot_cap {
        let duals = modi_duals(cost, &basis)?;
        // Bland: the entering cell is the first (row-major) with negative
        // reduced cost
        let mut entering = None;
        let mut basic = vec![false; m * n];
        for &(i, j) in &basis {
            basic[i * n + j] = true;
        }
        'scan: for i in 0..m {
            for j in 0..n {
                if !basic[i * n + j] && cost[(i, j)] - duals.u[i] - duals.v[j] < -LP_ENTER_TOL {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok((basis, duals));
        };

        // unique cycle: tree path from row node ei to column node m+ej
        let path = tree_path(&basis, m, n, ei, m + ej)?;
        // edges along the path alternate -, +, -, ... after the entering +
        let mut minus_cells: Vec<usize> = Vec::new();
        let mut plus_cells: Vec<usize> = Vec::new();
        for (step, pair) in path.windows(2).enumerate() {
            let cell = basis_edge_index(&basis, m, pair[0], pair[1])
                .ok_or_else(|| SrotError::Internal("path edge not in basis".into()))?;
            if step % 2 == 0 {
                minus_cells.push(cell);
            } else {
                plus_cells.push(cell);
            }
        }
        // theta: smallest flow on a minus edge; ties leave the
        // smallest-indexed cell (Bland)
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        let mut leaving_cell_order = usize::MAX;
        for &cell in &minus_cells {
            let f = flows[cell];
            let order = basis[cell].0 * n + basis[cell].1;
            if f < theta - 1e-18 || (f <= theta + 1e-18 && order < leaving_cell_order) {
                theta = f.min(theta);
                leaving = cell;
                leaving_cell_order = order;
            }
        }
        if leaving == usize::MAX {
            return Err(SrotError::Internal("no leaving variable found".into()));
        }
        for &cell in &minus_cells {
            flows[cell] -= theta;
        }
        for &cell in &plus_cells {
            flows[cell] += theta;
        }
        basis[leaving] = (ei, ej);
        flows[leaving] = theta;
    }
    Err(SrotError::Internal(format!(
        "transportation simplex exceeded {pivot_cap} pivots"
    )))
}

/// Northwest-corner initial basis: a staircase walk producing exactly
/// `m + n - 1` basic cells.
fn northwest_corner(a: &Array1<f64>, b: &Array1<f64>) -> (Vec<(usize, usize)>, Vec<f64>) {
    let (m, n) = (a.len(), b.len());
    let mut basis = Vec::with_capacity(m + n - 1);
    let mut flows = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0usize, 0usize);
    let mut ra = a[0];
    let mut rb = b[0];
    loop {
        let x = ra.min(rb);
        basis.push((i, j));
        flows.push(x);
        ra -= x;
        rb -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if ra <= rb && i < m - 1 {
            i += 1;
            ra = a[i];
        } else if j < n - 1 {
            j += 1;
            rb = b[j];
        } else {
            i += 1;
            ra = a[i];
        }
    }
    (basis, flows)
}

/// Dual potentials on the basis tree: `u_i + v_j = c_ij` for basic cells,
/// anchored at `u_0 = 0`.
fn modi_duals(cost: &Array2<f64>, basis: &[(usize, usize)]) -> Result<Duals> {
    let (m, n) = cost.dim();
    let adjacency = adjacency(basis, m, n);
    let mut u = vec![f64::NAN; m];
    let mut v = vec![f64::NAN; n];
    u[0] = 0.0;
    let mut stack = vec![0usize];
    let mut seen = vec![false; m + n];
    seen[0] = true;
    while let Some(node) = stack.pop() {
        for &(other, cell) in &adjacency[node] {
            if seen[other] {
                continue;
            }
            seen[other] = true;
            let (i, j) = basis[cell];
            if other >= m {
                v[other - m] = cost[(i, j)] - u[i];
            } else {
                u[other] = cost[(i, j)] - v[j];
            }
            stack.push(other);
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(SrotError::Internal("basis does not span the graph".into()));
    }
    Ok(Duals { u, v })
}

fn adjacency(basis: &[(usize, usize)], m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut adjacency = vec![Vec::new(); m + n];
    for (cell, &(i, j)) in basis.iter().enumerate() {
        adjacency[i].push((m + j, cell));
        adjacency[m + j].push((i, cell));
    }
    adjacency
}

/// Path between two nodes in the basis tree (BFS over the adjacency lists).
fn tree_path(
    basis: &[(usize, usize)],
    m: usize,
    n: usize,
    from: usize,
    to: usize,
) -> Result<Vec<usize>> {
    let adjacency = adjacency(basis, m, n);
    let mut parent = vec![usize::MAX; m + n];
    let mut queue = std::collections::VecDeque::from([from]);
    parent[from] = from;
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &(other, _) in &adjacency[node] {
            if parent[other] == usize::MAX {
                parent[other] = node;
                queue.push_back(other);
            }
        }
    }
    if parent[to] == usize::MAX {
        return Err(SrotError::Internal("basis tree is disconnected".into()));
    }
    let mut path = vec![to];
    let mut node = to;
    while node != from {
        node = parent[node];
        path.push(node);
    }
    path.reverse();
    Ok(path)
}

fn basis_edge_index(
    basis: &[(usize, usize)],
    m: usize,
    node_a: usize,
    node_b: usize,
) -> Option<usize> {
    let (row, col) = if node_a < m {
        (node_a, node_b - m)
    } else {
        (node_b, node_a - m)
    };
    basis.iter().position(|&(i, j)| i == row && j == col)
}

/// Unique flows on a basis tree satisfying the marginals (leaf elimination).
fn solve_basis_flows(
    basis: &[(usize, usize)],
    a: &Array1<f64>,
    b: &Array1<f64>,
) -> Result<Vec<f64>> {
    let (m, n) = (a.len(), b.len());
    let nodes = m + n;
    let mut residual: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let mut degree = vec![0usize; nodes];
    let adjacency = adjacency(basis, m, n);
    for lists in adjacency.iter().enumerate() {
        degree[lists.0] = lists.1.len();
    }
    let mut flows = vec![0.0_f64; basis.len()];
    let mut done = vec![false; basis.len()];
    let mut leaves: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut solved = 0usize;
    while let Some(v) = leaves.pop() {
        let Some(&(other, cell)) = adjacency[v].iter().find(|&&(_, cell)| !done[cell]) else {
            continue;
        };
        flows[cell] = residual[v];
        residual[other] -= residual[v];
        residual[v] = 0.0;
        done[cell] = true;
        solved += 1;
        degree[v] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            leaves.push(other);
        }
    }
    if solved != basis.len() {
        return Err(SrotError::Internal("basis tree flow solve failed".into()));
    }
    Ok(flows)
}

/// A gap-certified (near-)optimal solution of the semi-relaxed problem.
#[derive(Debug, Clone)]
pub struct ReferenceOptimum {
    pub f_star: f64,
    pub plan: TransportPlan,
    pub gap: f64,
    /// False when the iteration budgets ran out before the gap certificate
    /// reached `tol`; `f_star` is then only an upper bound with slack `gap`.
    pub certified: bool,
}

/// Computes a reference optimum: FISTA gets close, then pairwise-step BCFW
/// with exact line search polishes until the duality gap is at most `tol`.
/// The gap certificate bounds `f_star - f(T*)` by `tol`, so no external
/// optimum is needed.
pub fn reference_optimum(p: &SemiRelaxedProblem, tol: f64) -> Result<ReferenceOptimum> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SrotError::Config(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let fista = fista_solve(p, None, 5_000, tol)?;
    if fista.converged {
        return Ok(ReferenceOptimum {
            f_star: p.objective(&fista.plan)?,
            gap: fista.final_gap,
            plan: fista.plan,
            certified: true,
        });
    }
    // polish from scratch with the pairwise variant; it reuses nothing from
    // the FISTA iterate but converges linearly in practice on this problem
    let opts = SolverOptions {
        algorithm: solvers::Algorithm::Bcfw,
        sampling: solvers::Sampling::Permutation,
        step_rule: solvers::StepRule::ExactLineSearch,
        variant: solvers::Variant::PairwiseStep,
        epsilon: tol,
        max_epochs: 200_000,
        gap_check_period: 1,
        global_refresh_m: 1,
        rng_seed: 0x5eed,
    };
    let polished = solvers::solve(p, &opts)?;
    let fista_f = p.objective(&fista.plan)?;
    let polished_f = p.objective(&polished.plan)?;
    let (best, gap, certified) = if polished_f <= fista_f {
        (polished.plan, polished.final_gap, polished.converged)
    } else {
        (fista.plan, fista.final_gap, false)
    };
    Ok(ReferenceOptimum {
        f_star: if polished_f <= fista_f {
            polished_f
        } else {
            fista_f
        },
        plan: best,
        gap,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn projection_identity_and_vertex() {
        let on_simplex = array![0.25, 0.75];
        let projected = project_scaled_simplex(&on_simplex, 1.0);
        for j in 0..2 {
            assert!((projected[j] - on_simplex[j]).abs() < 1e-15);
        }
        let v = array![2.0, 0.0];
        let projected = project_scaled_simplex(&v, 1.0);
        assert!((projected[0] - 1.0).abs() < 1e-15);
        assert_eq!(projected[1], 0.0);
    }

    #[test]
    fn projection_beats_random_candidates_and_satisfies_kkt() {
        let mut rng = gen::seeded_rng(17);
        let v: Array1<f64> = (0..6).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let mass = 1.3;
        let x = project_scaled_simplex(&v, mass);
        assert!(oracle::projection_satisfies_kkt(&v, &x, mass, 1e-9));
        let dist = |y: &Array1<f64>| -> f64 {
            y.iter().zip(v.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let ours = dist(&x);
        for _ in 0..100_000 {
            let candidate = gen::random_scaled_simplex_point(&mut rng, 6, mass);
            assert!(dist(&candidate) >= ours - 1e-12);
        }
    }

    #[test]
    fn pgd_and_fista_agree_with_bcfw_on_tiny_instance() {
        let p = SemiRelaxedProblem::new(
            array![[0.0, 1.0], [1.0, 0.0]],
            array![0.5, 0.5],
            array![0.5, 0.5],
            0.1,
        )
        .unwrap();
        let pgd = pgd_solve(&p, None, 100_000, 1e-9).unwrap();
        let fista = fista_solve(&p, None, 100_000, 1e-9).unwrap();
        assert!(pgd.converged && fista.converged);
        let opts = SolverOptions {
            step_rule: solvers::StepRule::ExactLineSearch,
            epsilon: 1e-9,
            max_epochs: 100_000,
            ..SolverOptions::default()
        };
        let bcfw = solvers::solve(&p, &opts).unwrap();
        assert!(bcfw.converged);
        let f_pgd = p.objective(&pgd.plan).unwrap();
        let f_fista = p.objective(&fista.plan).unwrap();
        let f_bcfw = p.objective(&bcfw.plan).unwrap();
        // each objective is within its own gap certificate of the optimum
        assert!((f_pgd - f_bcfw).abs() <= 2e-9);
        assert!((f_fista - f_bcfw).abs() <= 2e-9);
    }

    #[test]
    fn fista_is_a_fixed_point_at_the_optimum() {
        let p = gen::random_problem(4, 4, 0.5, 77);
        let reference = reference_optimum(&p, 1e-11).unwrap();
        assert!(reference.certified);
        // one projected-gradient step from the optimum moves nowhere
        let eta = p.lambda() / 4.0;
        let inv_lambda = 1.0 / p.lambda();
        let t = reference.plan.matrix();
        for i in 0..4 {
            let mut col = Array1::zeros(4);
            for j in 0..4 {
                let g =
                    p.cost()[(j, i)] + inv_lambda * (reference.plan.row_sums()[j] - p.source()[j]);
                col[j] = t[(j, i)] - eta * g;
            }
            let projected = project_scaled_simplex(&col, p.target()[i]);
            for j in 0..4 {
                assert!(
                    (projected[j] - t[(j, i)]).abs() <= 1e-5,
                    "column {i} moved at row {j}: {} -> {}",
                    t[(j, i)],
                    projected[j]
                );
            }
        }
    }

    #[test]
    fn pgd_on_zero_costs_minimizes_penalty_only() {
        let p = SemiRelaxedProblem::new(
            Array2::zeros((3, 3)),
            array![0.2, 0.3, 0.5],
            array![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            1.0,
        )
        .unwrap();
        let sol = pgd_solve(&p, None, 50_000, 1e-9).unwrap();
        assert!(sol.converged);
        assert!(sol.final_gap <= 1e-9);
    }

    #[test]
    fn gradient_solvers_reject_oversized_stepsizes() {
        let p = gen::random_problem(4, 4, 0.1, 3);
        let limit = p.lambda() / 4.0;
        assert!(pgd_solve(&p, Some(limit * 2.0), 100, 1e-6).is_err());
        assert!(fista_solve(&p, Some(-1.0), 100, 1e-6).is_err());
        assert!(pgd_solve(&p, Some(limit), 100, 1e-6).is_ok());
        assert!(pgd_solve(&p, None, 100, 0.0).is_err());
    }

    #[test]
    fn lp_zero_cost_matching() {
        let cost = array![[0.0, 1.0], [1.0, 0.0]];
        let a = array![0.5, 0.5];
        let b = array![0.5, 0.5];
        let lp = lp_transport_solve(&cost, &a, &b).unwrap();
        assert!(lp.cost.abs() < 1e-12);
        assert!((lp.plan[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((lp.plan[(1, 1)] - 0.5).abs() < 1e-12);
        assert!(lp.min_reduced_cost >= -1e-9);
    }

    #[test]
    fn lp_constant_costs_give_total_mass() {
        let cost = Array2::from_elem((3, 3), 1.0);
        let a = array![0.2, 0.5, 0.3];
        let b = array![0.4, 0.4, 0.2];
        let lp = lp_transport_solve(&cost, &a, &b).unwrap();
        assert!((lp.cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_matches_basis_enumeration_on_small_instances() {
        for seed in 0..10u64 {
            let (cost, a, b) = gen::random_lp_instance(3, 4, 7, seed);
            let lp = lp_transport_solve(&cost, &a, &b).unwrap();
            let brute = oracle::lp_min_cost_by_basis_enumeration(&cost, &a, &b);
            assert!(
                (lp.cost - brute).abs() <= 1e-9 * (1.0 + brute.abs()),
                "seed {seed}: simplex {} vs brute {brute}",
                lp.cost
            );
            assert!(lp.basis_size <= 3 + 4 - 1);
            assert!(lp.min_reduced_cost >= -1e-9);
        }
    }

    #[test]
    fn lp_feasibility_and_certificate_on_larger_instances() {
        let p = gen::random_problem(32, 24, 1.0, 5);
        let lp = lp_transport_solve(p.cost(), p.source(), p.target()).unwrap();
        let row = lp.plan.sum_axis(ndarray::Axis(1));
        let col = lp.plan.sum_axis(ndarray::Axis(0));
        for j in 0..32 {
            assert!((row[j] - p.source()[j]).abs() <= 1e-9);
        }
        for i in 0..24 {
            assert!((col[i] - p.target()[i]).abs() <= 1e-9);
        }
        assert!(lp.plan.iter().all(|&x| x >= 0.0));
        assert!(lp.min_reduced_cost >= -1e-9);
        let recomputed = certificate_min_reduced_cost(p.cost(), &lp.basis).unwrap();
        assert!((recomputed - lp.min_reduced_cost).abs() <= 1e-9);
    }

    #[test]
    fn lp_rejects_unbalanced_marginals() {
        let cost = Array2::zeros((2, 2));
        let err = lp_transport_solve(&cost, &array![1.0, 1.0], &array![1.0, 0.5]).unwrap_err();
        assert!(matches!(err, SrotError::Config(_)));
    }

    #[test]
    fn reference_optimum_certificates() {
        let p = gen::random_problem(4, 4, 0.3, 31);
        let reference = reference_optimum(&p, 1e-10).unwrap();
        assert!(reference.certified);
        assert!(reference.gap <= 1e-10);

        // feasible LP plan bounds the relaxed optimum from above
        let lp = lp_transport_solve(p.cost(), p.source(), p.target()).unwrap();
        assert!(reference.f_star <= lp.cost + 1e-10);

        // stability across the two entry paths
        let fista_only = fista_solve(&p, None, 400_000, 1e-10).unwrap();
        assert!(fista_only.converged);
        let f_fista = p.objective(&fista_only.plan).unwrap();
        assert!((reference.f_star - f_fista).abs() <= 1e-8);
    }

    #[test]
    fn reference_optimum_in_large_lambda_limit() {
        // with a huge lambda the penalty vanishes and the optimum is the sum
        // of per-column minimum costs
        let p = gen::random_problem(5, 5, 1e6, 13);
        let reference = reference_optimum(&p, 1e-9).unwrap();
        let mut expected = 0.0;
        for i in 0..5 {
            let min_c = (0..5)
                .map(|j| p.cost()[(j, i)])
                .fold(f64::INFINITY, f64::min);
            expected += p.target()[i] * min_c;
        }
        assert!(
            (reference.f_star - expected).abs() <= 1e-6,
            "f* {} vs column-min sum {expected}",
            reference.f_star
        );
    }
}
