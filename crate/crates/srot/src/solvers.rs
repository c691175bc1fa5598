//! Frank-Wolfe and block-coordinate Frank-Wolfe solvers.
//!
//! The solvers share one state machine: start from the vertex plan (all
//! column mass on row 0), repeatedly move a column (or the whole plan, for
//! FW) toward an LMO vertex, and stop once the duality gap certified at a
//! gap check drops below epsilon. The away and pairwise variants track the
//! active atom set per column so they can also move mass *off* bad vertices,
//! which is what breaks the sublinear zig-zag of plain Frank-Wolfe.
//!
//! One solver run is strictly single-threaded; distinct runs are independent
//! and can execute concurrently.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::Array1;
use rand::Rng;

use crate::error::{Result, SrotError};
use crate::gen::{self, SrotRng};
use crate::metrics::{self, MetricRecord, PlanReference, SolverTrace, TraceMeta};
use crate::problem::{SemiRelaxedProblem, TransportPlan};

/// Weights below this are dropped from an active set and the remaining
/// weights renormalized, preventing round-off bloat.
pub const ATOM_DROP_THRESHOLD: f64 = 1e-12;
/// Initial stored gap for gap-adaptive sampling; guarantees every column is
/// visited before the stored values mean anything.
pub const GAP_INIT: f64 = 1e18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Fw,
    Bcfw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Uniform,
    Permutation,
    GapAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    Decay,
    ExactLineSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plain,
    AwayStep,
    PairwiseStep,
}

/// Everything that configures a run.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub algorithm: Algorithm,
    pub sampling: Sampling,
    pub step_rule: StepRule,
    pub variant: Variant,
    /// Stopping tolerance on the duality gap.
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Epochs between gap evaluations (1 = every epoch).
    pub gap_check_period: usize,
    /// Gap-adaptive sampling refreshes every stored gap after `M * n` inner
    /// iterations.
    pub global_refresh_m: usize,
    pub rng_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Bcfw,
            sampling: Sampling::Uniform,
            step_rule: StepRule::Decay,
            variant: Variant::Plain,
            epsilon: 1e-6,
            max_epochs: 1000,
            gap_check_period: 1,
            global_refresh_m: 1,
            rng_seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(SrotError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_epochs == 0 {
            return Err(SrotError::Config("maxEpochs must be at least 1".into()));
        }
        if self.gap_check_period == 0 {
            return Err(SrotError::Config(
                "gapCheckPeriod must be at least 1".into(),
            ));
        }
        if self.global_refresh_m == 0 {
            return Err(SrotError::Config(
                "globalRefreshM must be at least 1".into(),
            ));
        }
        if self.variant != Variant::Plain {
            if self.algorithm != Algorithm::Bcfw {
                return Err(SrotError::Config(
                    "away/pairwise variants require the BCFW algorithm".into(),
                ));
            }
            if self.step_rule != StepRule::ExactLineSearch {
                return Err(SrotError::Config(
                    "away/pairwise variants require exact line search".into(),
                ));
            }
        }
        Ok(())
    }

    fn summary(&self) -> String {
        format!(
            "algorithm={:?} sampling={:?} step={:?} variant={:?} eps={:e} max_epochs={} gap_check_period={} global_refresh_m={} seed={}",
            self.algorithm,
            self.sampling,
            self.step_rule,
            self.variant,
            self.epsilon,
            self.max_epochs,
            self.gap_check_period,
            self.global_refresh_m,
            self.rng_seed
        )
    }
}

/// Decay stepsize for full Frank-Wolfe: `2 / (k + 2)`.
pub fn step_decay_fw(k: usize) -> f64 {
    2.0 / (k as f64 + 2.0)
}

/// Decay stepsize for BCFW: `2n / (k + 2n)`; reduces to the FW rule at n=1.
pub fn step_decay_bcfw(k: usize, n: usize) -> f64 {
    let n = n as f64;
    2.0 * n / (k as f64 + 2.0 * n)
}

/// Closed-form exact line search along `t_i + gamma * d` for one column,
/// clamped to `[0, gamma_max]`. The unclamped minimizer of the quadratic is
/// `-(lambda <d, c_i> + <d, T 1_n - a>) / ||d||^2`; with `d = s_i - t_i`
/// this is the plain block line-search formula.
///
/// Returns `None` for a zero direction (the caller skips the step).
pub fn line_search_block(
    p: &SemiRelaxedProblem,
    plan: &TransportPlan,
    col: usize,
    direction: &Array1<f64>,
    gamma_max: f64,
) -> Option<f64> {
    let mut d_dot_c = 0.0;
    let mut d_dot_residual = 0.0;
    let mut d_norm_sq = 0.0;
    for j in 0..p.rows() {
        let d = direction[j];
        d_dot_c += d * p.cost()[(j, col)];
        d_dot_residual += d * (plan.row_sums()[j] - p.source()[j]);
        d_norm_sq += d * d;
    }
    if d_norm_sq == 0.0 {
        return None;
    }
    let unclamped = -(p.lambda() * d_dot_c + d_dot_residual) / d_norm_sq;
    Some(unclamped.clamp(0.0, gamma_max))
}

/// Exact line search for the full FW step `(1-gamma) T + gamma S`, clamped
/// to `[0, 1]`. `flat` is set when `S 1_n = T 1_n` leaves the quadratic term
/// without curvature; gamma is 0 in that case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullLineSearch {
    pub gamma: f64,
    pub flat: bool,
}

pub fn line_search_full(
    p: &SemiRelaxedProblem,
    plan: &TransportPlan,
    s_plan: &TransportPlan,
) -> FullLineSearch {
    let mut transport_diff = 0.0;
    for (t, (s, c)) in plan
        .matrix()
        .iter()
        .zip(s_plan.matrix().iter().zip(p.cost().iter()))
    {
        transport_diff += (t - s) * c;
    }
    let mut marg_dot_residual = 0.0;
    let mut marg_norm_sq = 0.0;
    for j in 0..p.rows() {
        let diff = plan.row_sums()[j] - s_plan.row_sums()[j];
        marg_dot_residual += diff * (plan.row_sums()[j] - p.source()[j]);
        marg_norm_sq += diff * diff;
    }
    if marg_norm_sq == 0.0 {
        return FullLineSearch {
            gamma: 0.0,
            flat: true,
        };
    }
    let unclamped = (p.lambda() * transport_diff + marg_dot_residual) / marg_norm_sq;
    FullLineSearch {
        gamma: unclamped.clamp(0.0, 1.0),
        flat: false,
    }
}

/// Per-column atom weights for the away/pairwise variants. Column `i` is the
/// convex combination `t_i = b_i * sum_j alpha_j e_j` with the alphas
/// summing to one.
#[derive(Debug, Clone)]
pub struct ActiveSetState {
    per_column: Vec<BTreeMap<usize, f64>>,
}

impl ActiveSetState {
    /// Active sets matching the vertex initialization: `{e_0: 1}` per column.
    pub fn vertex_init(cols: usize) -> Self {
        Self {
            per_column: (0..cols).map(|_| BTreeMap::from([(0usize, 1.0)])).collect(),
        }
    }

    pub fn column(&self, i: usize) -> &BTreeMap<usize, f64> {
        &self.per_column[i]
    }

    pub fn column_len(&self, i: usize) -> usize {
        self.per_column[i].len()
    }

    /// Rebuilds column `i` of a plan from its weights.
    pub fn reconstruct_column(&self, i: usize, rows: usize, mass: f64) -> Array1<f64> {
        let mut col = Array1::zeros(rows);
        for (&row, &alpha) in &self.per_column[i] {
            col[row] = alpha * mass;
        }
        col
    }

    fn drop_and_renormalize(&mut self, i: usize) {
        let weights = &mut self.per_column[i];
        weights.retain(|_, alpha| *alpha >= ATOM_DROP_THRESHOLD);
        let sum: f64 = weights.values().sum();
        debug_assert!(sum > 0.0, "active set for column {i} emptied out");
        for alpha in weights.values_mut() {
            *alpha /= sum;
        }
    }
}

/// Worst active atom of column `i`: the vertex maximizing the block gradient
/// over the active set, ties broken by smallest row index (the BTreeMap
/// iterates rows in increasing order).
pub fn away_atom(
    p: &SemiRelaxedProblem,
    plan: &TransportPlan,
    col: usize,
    active: &ActiveSetState,
) -> Result<crate::problem::Atom> {
    let weights = active.column(col);
    if weights.is_empty() {
        return Err(SrotError::Internal(format!(
            "empty active set for column {col}"
        )));
    }
    let inv_lambda = 1.0 / p.lambda();
    let mut best_row = usize::MAX;
    let mut best = f64::NEG_INFINITY;
    for &row in weights.keys() {
        let g = p.cost()[(row, col)] + inv_lambda * (plan.row_sums()[row] - p.source()[row]);
        if g > best {
            best = g;
            best_row = row;
        }
    }
    Ok(crate::problem::Atom {
        column: col,
        row: best_row,
        value: p.target()[col],
    })
}

/// What a single BCFW step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Plain FW direction toward the LMO vertex.
    Forward,
    /// Away direction, moving mass off the worst active atom.
    Away,
    /// Pairwise transfer from the worst active atom to the LMO vertex.
    Pairwise,
    /// Zero direction or zero-mass column; nothing moved.
    Skipped,
}

#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub column: usize,
    pub kind: StepKind,
    pub gamma: f64,
    pub gamma_max: f64,
}

/// One BCFW inner iteration on column `col`. `k` is the global inner
/// iteration count (it drives the decay rule). The away/pairwise variants
/// require the active set and keep it consistent with the plan.
pub fn bcfw_step(
    p: &SemiRelaxedProblem,
    plan: &mut TransportPlan,
    col: usize,
    variant: Variant,
    step_rule: StepRule,
    k: usize,
    mut active: Option<&mut ActiveSetState>,
) -> Result<StepRecord> {
    if col >= p.cols() {
        return Err(SrotError::IndexOutOfRange(format!(
            "column {col} of {}",
            p.cols()
        )));
    }
    let mass = p.target()[col];
    if mass == 0.0 {
        return Ok(StepRecord {
            column: col,
            kind: StepKind::Skipped,
            gamma: 0.0,
            gamma_max: 0.0,
        });
    }
    let m = p.rows();
    let s_row = p.lmo_row(plan, col)?;

    match variant {
        Variant::Plain => {
            let gamma = match step_rule {
                StepRule::Decay => step_decay_bcfw(k, p.cols()),
                StepRule::ExactLineSearch => {
                    let mut d = Array1::zeros(m);
                    for j in 0..m {
                        let s_j = if j == s_row { mass } else { 0.0 };
                        d[j] = s_j - plan.matrix()[(j, col)];
                    }
                    match line_search_block(p, plan, col, &d, 1.0) {
                        Some(g) => g,
                        None => {
                            return Ok(StepRecord {
                                column: col,
                                kind: StepKind::Skipped,
                                gamma: 0.0,
                                gamma_max: 1.0,
                            })
                        }
                    }
                }
            };
            let mut new_col = Array1::zeros(m);
            for j in 0..m {
                new_col[j] = (1.0 - gamma) * plan.matrix()[(j, col)];
            }
            new_col[s_row] += gamma * mass;
            plan.update_column(col, &new_col)?;
            if let Some(active) = active.as_deref_mut() {
                apply_forward_weights(active, col, s_row, gamma);
            }
            Ok(StepRecord {
                column: col,
                kind: StepKind::Forward,
                gamma,
                gamma_max: 1.0,
            })
        }
        Variant::AwayStep => {
            let active =
                active.ok_or_else(|| SrotError::Internal("away step without active set".into()))?;
            let away = away_atom(p, plan, col, active)?;
            let alpha_v = *active.column(col).get(&away.row).unwrap_or(&0.0);
            let inv_lambda = 1.0 / p.lambda();
            // compare <-grad, d_fw> against <-grad, d_away>
            let mut fw_score = 0.0;
            let mut away_score = 0.0;
            for j in 0..m {
                let g = p.cost()[(j, col)] + inv_lambda * (plan.row_sums()[j] - p.source()[j]);
                let t_j = plan.matrix()[(j, col)];
                let s_j = if j == s_row { mass } else { 0.0 };
                let v_j = if j == away.row { mass } else { 0.0 };
                fw_score += -g * (s_j - t_j);
                away_score += -g * (t_j - v_j);
            }
            // a singleton active set has no room to move away from its atom
            let singleton = active.column_len(col) == 1;
            if fw_score >= away_score || singleton {
                let mut d = Array1::zeros(m);
                for j in 0..m {
                    let s_j = if j == s_row { mass } else { 0.0 };
                    d[j] = s_j - plan.matrix()[(j, col)];
                }
                let Some(gamma) = line_search_block(p, plan, col, &d, 1.0) else {
                    return Ok(StepRecord {
                        column: col,
                        kind: StepKind::Skipped,
                        gamma: 0.0,
                        gamma_max: 1.0,
                    });
                };
                apply_forward_weights(active, col, s_row, gamma);
                let rebuilt = active.reconstruct_column(col, m, mass);
                plan.update_column(col, &rebuilt)?;
                Ok(StepRecord {
                    column: col,
                    kind: StepKind::Forward,
                    gamma,
                    gamma_max: 1.0,
                })
            } else {
                let gamma_max = alpha_v / (1.0 - alpha_v);
                let mut d = Array1::zeros(m);
                for j in 0..m {
                    let v_j = if j == away.row { mass } else { 0.0 };
                    d[j] = plan.matrix()[(j, col)] - v_j;
                }
                let Some(gamma) = line_search_block(p, plan, col, &d, gamma_max) else {
                    return Ok(StepRecord {
                        column: col,
                        kind: StepKind::Skipped,
                        gamma: 0.0,
                        gamma_max,
                    });
                };
                {
                    let weights = &mut active.per_column[col];
                    for alpha in weights.values_mut() {
                        *alpha *= 1.0 + gamma;
                    }
                    let entry = weights.entry(away.row).or_insert(0.0);
                    *entry = (*entry - gamma).max(0.0);
                }
                active.drop_and_renormalize(col);
                let rebuilt = active.reconstruct_column(col, m, mass);
                plan.update_column(col, &rebuilt)?;
                Ok(StepRecord {
                    column: col,
                    kind: StepKind::Away,
                    gamma,
                    gamma_max,
                })
            }
        }
        Variant::PairwiseStep => {
            let active = active
                .ok_or_else(|| SrotError::Internal("pairwise step without active set".into()))?;
            let away = away_atom(p, plan, col, active)?;
            if away.row == s_row {
                return Ok(StepRecord {
                    column: col,
                    kind: StepKind::Skipped,
                    gamma: 0.0,
                    gamma_max: 0.0,
                });
            }
            let alpha_v = *active.column(col).get(&away.row).unwrap_or(&0.0);
            let gamma_max = alpha_v;
            let mut d = Array1::zeros(m);
            d[s_row] = mass;
            d[away.row] = -mass;
            let Some(gamma) = line_search_block(p, plan, col, &d, gamma_max) else {
                return Ok(StepRecord {
                    column: col,
                    kind: StepKind::Skipped,
                    gamma: 0.0,
                    gamma_max,
                });
            };
            {
                let weights = &mut active.per_column[col];
                let entry = weights.entry(away.row).or_insert(0.0);
                *entry = (*entry - gamma).max(0.0);
                *weights.entry(s_row).or_insert(0.0) += gamma;
            }
            active.drop_and_renormalize(col);
            let rebuilt = active.reconstruct_column(col, m, mass);
            plan.update_column(col, &rebuilt)?;
            Ok(StepRecord {
                column: col,
                kind: StepKind::Pairwise,
                gamma,
                gamma_max,
            })
        }
    }
}

/// FW-direction weight update: scale everything by `1-gamma`, add `gamma`
/// to the entering atom.
fn apply_forward_weights(active: &mut ActiveSetState, col: usize, s_row: usize, gamma: f64) {
    let weights = &mut active.per_column[col];
    for alpha in weights.values_mut() {
        *alpha *= 1.0 - gamma;
    }
    *weights.entry(s_row).or_insert(0.0) += gamma;
    active.drop_and_renormalize(col);
}

/// Stored per-column gaps and the cumulative-sum sampler for gap-adaptive
/// column selection.
#[derive(Debug, Clone)]
pub struct GapState {
    stored: Array1<f64>,
    cumulative: Vec<f64>,
    stale_count: Vec<usize>,
    dirty: bool,
    /// Draws that fell back to uniform because all stored gaps clamp to 0.
    pub uniform_fallbacks: usize,
}

impl GapState {
    pub fn new(cols: usize) -> Self {
        Self {
            stored: Array1::from_elem(cols, GAP_INIT),
            cumulative: vec![0.0; cols],
            stale_count: vec![0; cols],
            dirty: true,
            uniform_fallbacks: 0,
        }
    }

    pub fn stored(&self) -> &Array1<f64> {
        &self.stored
    }

    pub fn stale_count(&self, i: usize) -> usize {
        self.stale_count[i]
    }

    /// Records a freshly computed gap for column `i`; all other columns age.
    pub fn store(&mut self, i: usize, gap: f64) {
        self.stored[i] = gap;
        for (j, c) in self.stale_count.iter_mut().enumerate() {
            if j == i {
                *c = 0;
            } else {
                *c += 1;
            }
        }
        self.dirty = true;
    }

    /// Replaces every stored gap at once (a global refresh).
    pub fn store_all(&mut self, gaps: &Array1<f64>) {
        self.stored.assign(gaps);
        self.stale_count.iter_mut().for_each(|c| *c = 0);
        self.dirty = true;
    }

    fn rebuild_cumulative(&mut self) {
        let mut acc = 0.0;
        for (i, g) in self.stored.iter().enumerate() {
            // stale gaps can drift slightly negative; clamp for sampling
            acc += g.max(0.0);
            self.cumulative[i] = acc;
        }
        self.dirty = false;
    }

    pub fn total_weight(&mut self) -> f64 {
        if self.dirty {
            self.rebuild_cumulative();
        }
        *self.cumulative.last().unwrap_or(&0.0)
    }
}

/// Draws a column index with probability proportional to the clamped stored
/// gaps (binary search over the prefix sums). Falls back to uniform when all
/// gaps clamp to zero; the fallback is counted on the state.
pub fn gap_sampler_draw(state: &mut GapState, rng: &mut SrotRng) -> usize {
    let n = state.stored.len();
    let total = state.total_weight();
    if total <= 0.0 {
        state.uniform_fallbacks += 1;
        return rng.random_range(0..n);
    }
    let u: f64 = rng.random::<f64>() * total;
    let cumulative = &state.cumulative;
    let mut lo = 0usize;
    let mut hi = n - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if cumulative[mid] > u {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub plan: TransportPlan,
    pub final_gap: f64,
    pub epochs: usize,
    pub trace: SolverTrace,
    pub converged: bool,
}

/// Solves with default tracing (no LP reference columns).
pub fn solve(p: &SemiRelaxedProblem, opts: &SolverOptions) -> Result<Solution> {
    solve_traced(p, opts, None)
}

/// Solves and fills the matrix/value error trace columns from `reference`.
pub fn solve_traced(
    p: &SemiRelaxedProblem,
    opts: &SolverOptions,
    reference: Option<&PlanReference>,
) -> Result<Solution> {
    solve_with_observer(p, opts, reference, |_, _| {})
}

/// Full-control entry point: `observer` is called at every recorded epoch
/// with the current plan (the verification suites use it to watch
/// feasibility along the run).
pub fn solve_with_observer(
    p: &SemiRelaxedProblem,
    opts: &SolverOptions,
    reference: Option<&PlanReference>,
    mut observer: impl FnMut(usize, &TransportPlan),
) -> Result<Solution> {
    opts.validate()?;
    match opts.algorithm {
        Algorithm::Fw => solve_fw(p, opts, reference, &mut observer),
        Algorithm::Bcfw => solve_bcfw(p, opts, reference, &mut observer),
    }
}

struct Recorder<'a> {
    start: Instant,
    reference: Option<&'a PlanReference>,
    trace: SolverTrace,
}

impl<'a> Recorder<'a> {
    fn new(
        p: &SemiRelaxedProblem,
        opts: &SolverOptions,
        reference: Option<&'a PlanReference>,
    ) -> Self {
        Self {
            start: Instant::now(),
            reference,
            trace: SolverTrace {
                records: Vec::new(),
                meta: TraceMeta {
                    options: opts.summary(),
                    seed: opts.rng_seed,
                    instance_digest: gen::instance_digest(p),
                    ..TraceMeta::default()
                },
            },
        }
    }

    fn record(
        &mut self,
        p: &SemiRelaxedProblem,
        plan: &TransportPlan,
        epoch: usize,
        gap: f64,
    ) -> Result<f64> {
        let objective = p.objective(plan)?;
        if !objective.is_finite() || !gap.is_finite() {
            return Err(SrotError::Divergence {
                epoch,
                trace: Box::new(std::mem::take(&mut self.trace)),
            });
        }
        let (me, ve) = match self.reference {
            Some(r) => (
                Some(metrics::matrix_error(plan.matrix(), &r.plan)),
                Some(metrics::value_error(plan.matrix(), &r.plan, p.cost()).value),
            ),
            None => (None, None),
        };
        self.trace.push(MetricRecord {
            epoch,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            objective,
            gap,
            marginal_error: metrics::marginal_error(plan, p.source(), p.target()),
            sparsity: metrics::sparsity(plan.matrix(), metrics::SPARSITY_THRESHOLD),
            matrix_error: me,
            value_error: ve,
        });
        Ok(objective)
    }
}

fn solve_fw(
    p: &SemiRelaxedProblem,
    opts: &SolverOptions,
    reference: Option<&PlanReference>,
    observer: &mut impl FnMut(usize, &TransportPlan),
) -> Result<Solution> {
    let mut plan = p.vertex_init();
    let mut recorder = Recorder::new(p, opts, reference);
    let (m, n) = (p.rows(), p.cols());
    let mut final_gap = f64::INFINITY;
    let mut converged = false;
    let mut epochs = 0;

    for k in 0..=opts.max_epochs {
        // the LMO plan computed for the step doubles as the gap certificate
        let gap_started = Instant::now();
        let report = p.duality_gap(&plan)?;
        recorder.trace.meta.gap_eval_seconds += gap_started.elapsed().as_secs_f64();
        recorder.record(p, &plan, k, report.total)?;
        observer(k, &plan);
        final_gap = report.total;
        epochs = k;
        if report.total <= opts.epsilon {
            converged = true;
            break;
        }
        if k == opts.max_epochs {
            break;
        }

        let mut s_mat = ndarray::Array2::zeros((m, n));
        for (i, &row) in report.argmin_rows.iter().enumerate() {
            s_mat[(row, i)] = p.target()[i];
        }
        let s_plan = TransportPlan::new_unchecked(s_mat, p.target().clone());
        let gamma = match opts.step_rule {
            StepRule::Decay => step_decay_fw(k),
            StepRule::ExactLineSearch => line_search_full(p, &plan, &s_plan).gamma,
        };
        for i in 0..n {
            let mut new_col = Array1::zeros(m);
            for j in 0..m {
                new_col[j] = (1.0 - gamma) * plan.matrix()[(j, i)];
            }
            new_col[report.argmin_rows[i]] += gamma * p.target()[i];
            plan.update_column(i, &new_col)?;
        }
    }

    Ok(Solution {
        plan,
        final_gap,
        epochs,
        trace: recorder.trace,
        converged,
    })
}

fn solve_bcfw(
    p: &SemiRelaxedProblem,
    opts: &SolverOptions,
    reference: Option<&PlanReference>,
    observer: &mut impl FnMut(usize, &TransportPlan),
) -> Result<Solution> {
    let n = p.cols();
    let mut plan = p.vertex_init();
    let mut active = (opts.variant != Variant::Plain).then(|| ActiveSetState::vertex_init(n));
    let mut gap_state = (opts.sampling == Sampling::GapAdaptive).then(|| GapState::new(n));
    let mut rng = gen::seeded_rng(opts.rng_seed);
    let mut recorder = Recorder::new(p, opts, reference);
    let mut permutation: Vec<usize> = (0..n).collect();

    let mut k_inner = 0usize;
    let mut final_gap = f64::INFINITY;
    let mut converged = false;
    let mut epochs = 0;

    for epoch in 0..=opts.max_epochs {
        if epoch % opts.gap_check_period == 0 || epoch == opts.max_epochs {
            let gap_started = Instant::now();
            let report = p.duality_gap(&plan)?;
            recorder.trace.meta.gap_eval_seconds += gap_started.elapsed().as_secs_f64();
            recorder.record(p, &plan, epoch, report.total)?;
            observer(epoch, &plan);
            final_gap = report.total;
            epochs = epoch;
            if report.total <= opts.epsilon {
                converged = true;
                break;
            }
        }
        if epoch == opts.max_epochs {
            epochs = epoch;
            break;
        }

        if opts.sampling == Sampling::Permutation {
            shuffle(&mut permutation, &mut rng);
        }
        // `inner` only indexes the permutation arm; the other samplers draw
        #[allow(clippy::needless_range_loop)]
        for inner in 0..n {
            let col = match opts.sampling {
                Sampling::Uniform => rng.random_range(0..n),
                Sampling::Permutation => permutation[inner],
                Sampling::GapAdaptive => {
                    let state = gap_state.as_mut().expect("gap state exists");
                    gap_sampler_draw(state, &mut rng)
                }
            };
            bcfw_step(
                p,
                &mut plan,
                col,
                opts.variant,
                opts.step_rule,
                k_inner,
                active.as_mut(),
            )?;
            k_inner += 1;
            if let Some(state) = gap_state.as_mut() {
                state.store(col, p.column_gap(&plan, col)?);
                if k_inner.is_multiple_of(opts.global_refresh_m * n) {
                    let report = p.duality_gap(&plan)?;
                    state.store_all(&report.per_column);
                    if recorder.trace.meta.first_global_refresh.is_none() {
                        recorder.trace.meta.first_global_refresh = Some(k_inner);
                    }
                }
            }
        }
    }

    if let Some(state) = gap_state {
        recorder.trace.meta.uniform_fallbacks = state.uniform_fallbacks;
    }
    Ok(Solution {
        plan,
        final_gap,
        epochs,
        trace: recorder.trace,
        converged,
    })
}

/// Fisher-Yates on the shared RNG so permutation runs are reproducible.
fn shuffle(items: &mut [usize], rng: &mut SrotRng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}
