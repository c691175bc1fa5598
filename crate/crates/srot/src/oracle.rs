//! Brute-force reference computations for verification.
//!
//! Nothing here shares code with the fast paths it checks: objectives are
//! re-evaluated from the formula, gaps come from exhaustive vertex
//! enumeration, gradients from finite differences, line searches from grid
//! scans, LP optima from basis enumeration, and simplex projections from KKT
//! conditions. The `verify` command and the acceptance suite both run on top
//! of these.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::gen::{self, SrotRng};
use crate::problem::{SemiRelaxedProblem, TransportPlan};

/// Objective evaluated from scratch, without any cached row sums.
pub fn objective_raw(
    cost: &Array2<f64>,
    source: &Array1<f64>,
    lambda: f64,
    t: &Array2<f64>,
) -> f64 {
    let (m, n) = t.dim();
    let mut transport = 0.0;
    let mut row_sums = vec![0.0_f64; m];
    for j in 0..m {
        for i in 0..n {
            transport += t[(j, i)] * cost[(j, i)];
            row_sums[j] += t[(j, i)];
        }
    }
    let penalty: f64 = row_sums
        .iter()
        .zip(source.iter())
        .map(|(r, a)| (r - a) * (r - a))
        .sum();
    transport + penalty / (2.0 * lambda)
}

/// Central finite differences of the raw objective with respect to column
/// `col`, with step `h` on each coordinate.
pub fn finite_difference_column_gradient(
    cost: &Array2<f64>,
    source: &Array1<f64>,
    lambda: f64,
    t: &Array2<f64>,
    col: usize,
    h: f64,
) -> Array1<f64> {
    let m = t.nrows();
    let mut grad = Array1::zeros(m);
    for j in 0..m {
        let mut plus = t.clone();
        plus[(j, col)] += h;
        let mut minus = t.clone();
        minus[(j, col)] -= h;
        grad[j] = (objective_raw(cost, source, lambda, &plus)
            - objective_raw(cost, source, lambda, &minus))
            / (2.0 * h);
    }
    grad
}

/// Full gradient of the raw objective, entry by entry.
pub fn gradient_raw(
    cost: &Array2<f64>,
    source: &Array1<f64>,
    lambda: f64,
    t: &Array2<f64>,
) -> Array2<f64> {
    let (m, n) = t.dim();
    let mut row_sums = vec![0.0_f64; m];
    for j in 0..m {
        for i in 0..n {
            row_sums[j] += t[(j, i)];
        }
    }
    Array2::from_shape_fn((m, n), |(j, i)| {
        cost[(j, i)] + (row_sums[j] - source[j]) / lambda
    })
}

/// `max_{S'} <T - S', grad f(T)>` by enumerating all `m^n` vertex
/// combinations. Only sensible for tiny instances.
pub fn max_linearization_gap_exhaustive(p: &SemiRelaxedProblem, plan: &TransportPlan) -> f64 {
    let (m, n) = (p.rows(), p.cols());
    assert!(
        (m as f64).powi(n as i32) <= 1e7,
        "exhaustive enumeration is only for tiny instances"
    );
    let grad = gradient_raw(p.cost(), p.source(), p.lambda(), plan.matrix());
    let mut rows = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut value = 0.0;
        for i in 0..n {
            for j in 0..m {
                let s_j = if j == rows[i] { p.target()[i] } else { 0.0 };
                value += (plan.matrix()[(j, i)] - s_j) * grad[(j, i)];
            }
        }
        best = best.max(value);
        // odometer over vertex choices
        let mut carry = 0;
        while carry < n {
            rows[carry] += 1;
            if rows[carry] < m {
                break;
            }
            rows[carry] = 0;
            carry += 1;
        }
        if carry == n {
            break;
        }
    }
    best
}

/// Objective along `column + gamma * direction` in column `col`, evaluated
/// from scratch. Used by the grid-search line-search checks.
pub fn objective_along_column_direction(
    p: &SemiRelaxedProblem,
    t: &Array2<f64>,
    col: usize,
    direction: &Array1<f64>,
    gamma: f64,
) -> f64 {
    let mut moved = t.clone();
    for j in 0..t.nrows() {
        moved[(j, col)] += gamma * direction[j];
    }
    objective_raw(p.cost(), p.source(), p.lambda(), &moved)
}

/// Objective along the full-matrix segment `(1-gamma) T + gamma S`.
pub fn objective_along_full_direction(
    p: &SemiRelaxedProblem,
    t: &Array2<f64>,
    s: &Array2<f64>,
    gamma: f64,
) -> f64 {
    let moved = t * (1.0 - gamma) + s * gamma;
    objective_raw(p.cost(), p.source(), p.lambda(), &moved)
}

/// Argmin of `f` over an even grid of `points` gammas in `[0, gamma_max]`.
pub fn grid_line_search_column(
    p: &SemiRelaxedProblem,
    t: &Array2<f64>,
    col: usize,
    direction: &Array1<f64>,
    gamma_max: f64,
    points: usize,
) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    for k in 0..points {
        let gamma = gamma_max * k as f64 / (points - 1) as f64;
        let f = objective_along_column_direction(p, t, col, direction, gamma);
        if f < best.1 {
            best = (gamma, f);
        }
    }
    best
}

/// KKT check for the Euclidean projection of `v` onto
/// `{x >= 0 : sum x = mass}`: a feasible `x` is the projection iff there is a
/// threshold `theta` with `x_i = v_i - theta` wherever `x_i > 0` and
/// `v_i <= theta` wherever `x_i = 0`.
pub fn projection_satisfies_kkt(v: &Array1<f64>, x: &Array1<f64>, mass: f64, tol: f64) -> bool {
    let sum: f64 = x.sum();
    if (sum - mass).abs() > tol || x.iter().any(|&xi| xi < -tol) {
        return false;
    }
    // theta from any strictly positive coordinate
    let mut theta = None;
    for i in 0..x.len() {
        if x[i] > tol {
            theta = Some(v[i] - x[i]);
            break;
        }
    }
    let theta = match theta {
        Some(t) => t,
        None => return mass.abs() <= tol,
    };
    for i in 0..x.len() {
        if x[i] > tol {
            if (v[i] - x[i] - theta).abs() > 1e-9 {
                return false;
            }
        } else if v[i] > theta + 1e-9 {
            return false;
        }
    }
    true
}

/// Exact minimum transport cost by enumerating every spanning-tree basis of
/// the bipartite supply/demand graph and keeping the feasible ones. Cost is
/// exponential; guard with [`basis_count`] before calling.
pub fn lp_min_cost_by_basis_enumeration(
    cost: &Array2<f64>,
    a: &Array1<f64>,
    b: &Array1<f64>,
) -> f64 {
    let (m, n) = cost.dim();
    let nodes = m + n;
    let edges: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(nodes - 1);
    let mut best = f64::INFINITY;
    let mut dsu = DisjointSet::new(nodes);
    enumerate_trees(
        &edges,
        m,
        0,
        nodes - 1,
        &mut chosen,
        &mut dsu,
        &mut |tree: &[(usize, usize)]| {
            if let Some(flows) = solve_tree_flows(tree, a, b) {
                if flows.iter().all(|&f| f >= -1e-9) {
                    let c: f64 = tree
                        .iter()
                        .zip(flows.iter())
                        .map(|(&(i, j), &f)| cost[(i, j)] * f)
                        .sum();
                    if c < best {
                        best = c;
                    }
                }
            }
        },
    );
    best
}

/// Number of spanning trees of the complete bipartite graph `K_{m,n}`
/// (`m^(n-1) * n^(m-1)`), saturating at `u128::MAX`.
pub fn basis_count(m: usize, n: usize) -> u128 {
    let mut count: u128 = 1;
    for _ in 0..n - 1 {
        count = count.saturating_mul(m as u128);
    }
    for _ in 0..m - 1 {
        count = count.saturating_mul(n as u128);
    }
    count
}

fn enumerate_trees(
    edges: &[(usize, usize)],
    row_count: usize,
    start: usize,
    needed: usize,
    chosen: &mut Vec<(usize, usize)>,
    dsu: &mut DisjointSet,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    if needed == 0 {
        visit(chosen);
        return;
    }
    if edges.len() - start < needed {
        return;
    }
    for e in start..edges.len() {
        let (i, j) = edges[e];
        let (ri, rj) = (dsu.find(i), dsu.find(row_count + j));
        if ri == rj {
            continue;
        }
        let undo = dsu.union(ri, rj);
        chosen.push((i, j));
        enumerate_trees(edges, row_count, e + 1, needed - 1, chosen, dsu, visit);
        chosen.pop();
        dsu.undo(undo);
    }
}

/// Unique flows on a spanning tree satisfying the marginals, by leaf
/// elimination. Returns `None` if the tree is malformed.
fn solve_tree_flows(tree: &[(usize, usize)], a: &Array1<f64>, b: &Array1<f64>) -> Option<Vec<f64>> {
    let m = a.len();
    let n = b.len();
    let nodes = m + n;
    let mut residual: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let mut degree = vec![0usize; nodes];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (idx, &(i, j)) in tree.iter().enumerate() {
        degree[i] += 1;
        degree[m + j] += 1;
        incident[i].push(idx);
        incident[m + j].push(idx);
    }
    let mut flows = vec![f64::NAN; tree.len()];
    let mut done = vec![false; tree.len()];
    let mut leaves: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut solved = 0;
    while let Some(v) = leaves.pop() {
        let Some(&e) = incident[v].iter().find(|&&e| !done[e]) else {
            continue;
        };
        let (i, j) = tree[e];
        let other = if v == i { m + j } else { i };
        flows[e] = residual[v];
        residual[other] -= residual[v];
        residual[v] = 0.0;
        done[e] = true;
        solved += 1;
        degree[other] -= 1;
        degree[v] -= 1;
        if degree[other] == 1 {
            leaves.push(other);
        }
    }
    (solved == tree.len()).then_some(flows)
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

struct UnionUndo {
    child: usize,
    parent_rank_bumped: Option<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&self, mut v: usize) -> usize {
        // no path compression: unions must be undoable
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, ra: usize, rb: usize) -> UnionUndo {
        let (child, parent) = if self.rank[ra] < self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[child] = parent;
        let bumped = if self.rank[ra] == self.rank[rb] {
            self.rank[parent] += 1;
            Some(parent)
        } else {
            None
        };
        UnionUndo {
            child,
            parent_rank_bumped: bumped,
        }
    }

    fn undo(&mut self, undo: UnionUndo) {
        self.parent[undo.child] = undo.child;
        if let Some(p) = undo.parent_rank_bumped {
            self.rank[p] -= 1;
        }
    }
}

/// 3-sigma multinomial bound check: are the observed counts consistent with
/// the given probabilities?
pub fn multinomial_within_3_sigma(counts: &[u64], probs: &[f64]) -> bool {
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    counts.iter().zip(probs.iter()).all(|(&c, &p)| {
        let sigma = (p * (1.0 - p) / n).sqrt();
        (c as f64 / n - p).abs() <= 3.0 * sigma + 1e-15
    })
}

/// Draws a random sample of curvature quotients
/// `2/gamma^2 (f(Y) - f(T) - <y_i - t_i, grad_i f(T)>)` and reports the
/// largest ratio against the per-block bound `4 b_i^2 / lambda`.
pub fn worst_curvature_excess(p: &SemiRelaxedProblem, samples: usize, rng: &mut SrotRng) -> f64 {
    let (block_bounds, _) = p.curvature_bounds();
    let m = p.rows();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let base = gen::random_feasible_plan_with(rng, p);
        let i = gen::uniform_index(rng, p.cols());
        if p.target()[i] == 0.0 {
            continue;
        }
        let gamma = 0.05 + 0.95 * gen::uniform(rng);
        // mix vertices and interior points as the candidate s_i
        let s_i = if rng.random::<bool>() {
            let mut s = Array1::zeros(m);
            s[gen::uniform_index(rng, m)] = p.target()[i];
            s
        } else {
            gen::random_scaled_simplex_point(rng, m, p.target()[i])
        };
        let t = base.matrix();
        let grad = finite_free_gradient_column(p, t, i);
        let mut moved = t.clone();
        let mut linear = 0.0;
        for j in 0..m {
            let step = gamma * (s_i[j] - t[(j, i)]);
            moved[(j, i)] += step;
            linear += step * grad[j];
        }
        let f_t = objective_raw(p.cost(), p.source(), p.lambda(), t);
        let f_y = objective_raw(p.cost(), p.source(), p.lambda(), &moved);
        let quotient = 2.0 / (gamma * gamma) * (f_y - f_t - linear);
        worst = worst.max(quotient - block_bounds[i]);
    }
    worst
}

fn finite_free_gradient_column(p: &SemiRelaxedProblem, t: &Array2<f64>, col: usize) -> Array1<f64> {
    let m = t.nrows();
    let mut row_sums = vec![0.0_f64; m];
    for j in 0..m {
        for i in 0..t.ncols() {
            row_sums[j] += t[(j, i)];
        }
    }
    Array1::from_shape_fn(m, |j| {
        p.cost()[(j, col)] + (row_sums[j] - p.source()[j]) / p.lambda()
    })
}
