//! Problem data, transport plans, and the duality-gap machinery.
//!
//! The objective is `f(T) = <T, C> + 1/(2 lambda) * ||T 1_n - a||^2` over the
//! product of scaled simplices `b_1 D_m x ... x b_n D_m` (column `i` of `T`
//! must be nonnegative and sum to `b_i`). The block gradient, the per-column
//! linear minimization oracle, and the linearization duality gap all follow
//! from that split.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Result, SrotError};

/// Histogram sums must be this close to 1 before ingest renormalization.
pub const HISTOGRAM_TOL: f64 = 1e-12;
/// Column mass conservation tolerance for transport plans.
pub const COLUMN_MASS_TOL: f64 = 1e-10;
/// Cached row sums are recomputed from scratch after this many column
/// updates to bound floating-point drift.
const ROW_SUM_REFRESH_PERIOD: usize = 1024;

/// Semi-relaxed optimal transport instance: cost matrix, two histograms, and
/// the relaxation parameter weighting the source-marginal penalty.
#[derive(Debug, Clone)]
pub struct SemiRelaxedProblem {
    cost: Array2<f64>,
    source: Array1<f64>,
    target: Array1<f64>,
    lambda: f64,
}

impl SemiRelaxedProblem {
    /// Validates and ingests an instance. Histogram sums must be within
    /// `1e-12` of one; both are then renormalized exactly once (image-derived
    /// histograms carry quantization noise).
    pub fn new(
        cost: Array2<f64>,
        source: Array1<f64>,
        target: Array1<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let (m, n) = cost.dim();
        if m == 0 || n == 0 {
            return Err(SrotError::Config("cost matrix must be nonempty".into()));
        }
        if source.len() != m || target.len() != n {
            return Err(SrotError::Config(format!(
                "dimension mismatch: cost is {m}x{n}, source has {} entries, target has {}",
                source.len(),
                target.len()
            )));
        }
        if !cost.iter().all(|c| c.is_finite() && *c >= 0.0) {
            return Err(SrotError::Config(
                "cost entries must be finite and nonnegative".into(),
            ));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(SrotError::Config(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        let mut source = source;
        let mut target = target;
        for (name, h) in [("source", &mut source), ("target", &mut target)] {
            if !h.iter().all(|x| x.is_finite() && *x >= 0.0) {
                return Err(SrotError::Config(format!(
                    "{name} histogram entries must be finite and nonnegative"
                )));
            }
            let sum: f64 = h.sum();
            if (sum - 1.0).abs() > HISTOGRAM_TOL {
                return Err(SrotError::Config(format!(
                    "{name} histogram sums to {sum}, expected 1 within {HISTOGRAM_TOL:e}"
                )));
            }
            h.mapv_inplace(|x| x / sum);
        }
        Ok(Self {
            cost,
            source,
            target,
            lambda,
        })
    }

    pub fn rows(&self) -> usize {
        self.cost.nrows()
    }

    pub fn cols(&self) -> usize {
        self.cost.ncols()
    }

    pub fn cost(&self) -> &Array2<f64> {
        &self.cost
    }

    /// Source histogram `a` (length `m`).
    pub fn source(&self) -> &Array1<f64> {
        &self.source
    }

    /// Target histogram `b` (length `n`); its entries are the column masses.
    pub fn target(&self) -> &Array1<f64> {
        &self.target
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `f(T) = <T, C> + 1/(2 lambda) ||T 1_n - a||^2`, using the plan's
    /// cached row sums for the penalty term.
    pub fn objective(&self, plan: &TransportPlan) -> Result<f64> {
        self.check_plan_dims(plan)?;
        let transport: f64 = self
            .cost
            .iter()
            .zip(plan.matrix().iter())
            .map(|(c, t)| c * t)
            .sum();
        let penalty: f64 = plan
            .row_sums()
            .iter()
            .zip(self.source.iter())
            .map(|(r, a)| (r - a) * (r - a))
            .sum();
        Ok(transport + penalty / (2.0 * self.lambda))
    }

    /// Block gradient `grad_i f(T) = c_i + 1/lambda (T 1_n - a)`.
    pub fn gradient_column(&self, plan: &TransportPlan, col: usize) -> Result<Array1<f64>> {
        self.check_plan_dims(plan)?;
        self.check_col(col)?;
        let inv_lambda = 1.0 / self.lambda;
        let mut grad = Array1::zeros(self.rows());
        for j in 0..self.rows() {
            grad[j] = self.cost[(j, col)] + inv_lambda * (plan.row_sums()[j] - self.source[j]);
        }
        Ok(grad)
    }

    /// Per-column LMO: the scaled vertex `b_i e_j` minimizing the linearized
    /// objective over column `i`'s simplex.
    pub fn lmo_column(&self, plan: &TransportPlan, col: usize) -> Result<Atom> {
        self.check_plan_dims(plan)?;
        self.check_col(col)?;
        let row = self.lmo_row(plan, col)?;
        Ok(Atom {
            column: col,
            row,
            value: self.target[col],
        })
    }

    /// Argmin row of the block gradient without materializing it.
    pub(crate) fn lmo_row(&self, plan: &TransportPlan, col: usize) -> Result<usize> {
        let inv_lambda = 1.0 / self.lambda;
        let mut best = f64::INFINITY;
        let mut best_row = 0usize;
        for j in 0..self.rows() {
            let g = self.cost[(j, col)] + inv_lambda * (plan.row_sums()[j] - self.source[j]);
            if !g.is_finite() {
                return Err(SrotError::Numeric(format!(
                    "non-finite gradient entry at row {j}, column {col}"
                )));
            }
            if g < best {
                best = g;
                best_row = j;
            }
        }
        Ok(best_row)
    }

    /// Per-column duality gap
    /// `g_i(T) = <t_i - s_i, c_i> + 1/lambda <t_i - s_i, T 1_n - a>`.
    pub fn column_gap(&self, plan: &TransportPlan, col: usize) -> Result<f64> {
        self.check_plan_dims(plan)?;
        self.check_col(col)?;
        let atom = self.lmo_column(plan, col)?;
        Ok(self.column_gap_with_atom(plan, &atom))
    }

    pub(crate) fn column_gap_with_atom(&self, plan: &TransportPlan, atom: &Atom) -> f64 {
        let col = atom.column;
        let inv_lambda = 1.0 / self.lambda;
        let mut gap = 0.0;
        for j in 0..self.rows() {
            let s_j = if j == atom.row { atom.value } else { 0.0 };
            let diff = plan.matrix()[(j, col)] - s_j;
            gap +=
                diff * (self.cost[(j, col)] + inv_lambda * (plan.row_sums()[j] - self.source[j]));
        }
        gap
    }

    /// Total duality gap plus its per-column decomposition. The total is
    /// computed from the matrix formula
    /// `g(T) = <T - S, C> + 1/lambda <T 1_n - S 1_n, T 1_n - a>`
    /// while the per-column entries use the block formula, so the
    /// decomposition identity is a genuine cross-check.
    pub fn duality_gap(&self, plan: &TransportPlan) -> Result<GapReport> {
        self.check_plan_dims(plan)?;
        let (m, n) = (self.rows(), self.cols());
        let mut per_column = Array1::zeros(n);
        let mut argmin_rows = vec![0usize; n];
        let mut s_row_sums = Array1::<f64>::zeros(m);
        let mut transport_diff = 0.0;
        for i in 0..n {
            let row = self.lmo_row(plan, i)?;
            let atom = Atom {
                column: i,
                row,
                value: self.target[i],
            };
            argmin_rows[i] = row;
            s_row_sums[row] += atom.value;
            per_column[i] = self.column_gap_with_atom(plan, &atom);
            for j in 0..m {
                let s_j = if j == row { atom.value } else { 0.0 };
                transport_diff += (plan.matrix()[(j, i)] - s_j) * self.cost[(j, i)];
            }
        }
        let inv_lambda = 1.0 / self.lambda;
        let mut penalty_diff = 0.0;
        for j in 0..m {
            penalty_diff +=
                (plan.row_sums()[j] - s_row_sums[j]) * (plan.row_sums()[j] - self.source[j]);
        }
        Ok(GapReport {
            total: transport_diff + inv_lambda * penalty_diff,
            per_column,
            argmin_rows,
        })
    }

    /// Lagrangian dual value
    /// `w(T) = f(T) - sum_i <t_i, grad_i f(T)> + sum_i b_i min_j (grad_i f(T))_j`.
    ///
    /// `f(T) - w(T)` equals the linearization duality gap, which is what the
    /// gap-equivalence checks exercise.
    pub fn lagrangian_dual_value(&self, plan: &TransportPlan) -> Result<f64> {
        self.check_plan_dims(plan)?;
        let f = self.objective(plan)?;
        let inv_lambda = 1.0 / self.lambda;
        let mut inner = 0.0;
        let mut mins = 0.0;
        for i in 0..self.cols() {
            let mut min_g = f64::INFINITY;
            let mut dot = 0.0;
            for j in 0..self.rows() {
                let g = self.cost[(j, i)] + inv_lambda * (plan.row_sums()[j] - self.source[j]);
                dot += plan.matrix()[(j, i)] * g;
                if g < min_g {
                    min_g = g;
                }
            }
            inner += dot;
            mins += self.target[i] * min_g;
        }
        Ok(f - inner + mins)
    }

    /// Per-block curvature bounds `4 b_i^2 / lambda` and the total bound
    /// `min(4/lambda, sum_i 4 b_i^2 / lambda)`.
    pub fn curvature_bounds(&self) -> (Array1<f64>, f64) {
        let block: Array1<f64> = self
            .target
            .iter()
            .map(|b| 4.0 * b * b / self.lambda)
            .collect();
        let total = (4.0 / self.lambda).min(block.sum());
        (block, total)
    }

    /// Initial plan with all column mass on row 0 (first row equals `b`).
    pub fn vertex_init(&self) -> TransportPlan {
        let mut t = Array2::zeros((self.rows(), self.cols()));
        for i in 0..self.cols() {
            t[(0, i)] = self.target[i];
        }
        TransportPlan::new_unchecked(t, self.target.clone())
    }

    fn check_plan_dims(&self, plan: &TransportPlan) -> Result<()> {
        if plan.matrix().dim() != self.cost.dim() {
            return Err(SrotError::Config(format!(
                "plan is {:?}, cost is {:?}",
                plan.matrix().dim(),
                self.cost.dim()
            )));
        }
        Ok(())
    }

    fn check_col(&self, col: usize) -> Result<()> {
        if col >= self.cols() {
            return Err(SrotError::IndexOutOfRange(format!(
                "column {col} of {}",
                self.cols()
            )));
        }
        Ok(())
    }
}

/// A scaled simplex vertex `b_i e_j`: all of column `i`'s mass on row `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub column: usize,
    pub row: usize,
    pub value: f64,
}

/// Argmin of a gradient vector with deterministic tie-breaking (smallest row
/// index wins). This is the vertex-selection rule behind the LMO.
pub fn lmo_row_of(grad: ArrayView1<f64>) -> Result<usize> {
    if grad.is_empty() {
        return Err(SrotError::Numeric("empty gradient".into()));
    }
    let mut best = f64::INFINITY;
    let mut best_row = 0usize;
    for (j, g) in grad.iter().enumerate() {
        if !g.is_finite() {
            return Err(SrotError::Numeric(format!(
                "non-finite gradient entry at index {j}"
            )));
        }
        if *g < best {
            best = *g;
            best_row = j;
        }
    }
    Ok(best_row)
}

/// LMO against an explicit gradient vector: returns `b_i e_j` with `j` the
/// argmin row. Requires `bi > 0` (a zero-mass column has no meaningful LMO).
pub fn lmo_column(grad: ArrayView1<f64>, column: usize, bi: f64) -> Result<Atom> {
    if !(bi.is_finite() && bi > 0.0) {
        return Err(SrotError::Numeric(format!(
            "column mass must be positive, got {bi}"
        )));
    }
    let row = lmo_row_of(grad)?;
    Ok(Atom {
        column,
        row,
        value: bi,
    })
}

/// Total duality gap, its per-column decomposition, and the LMO row indices
/// it was computed from.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub total: f64,
    pub per_column: Array1<f64>,
    pub argmin_rows: Vec<usize>,
}

/// Nonnegative transport plan with cached row sums `T 1_n`, maintained
/// incrementally across column updates.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    t: Array2<f64>,
    row_sums: Array1<f64>,
    col_mass: Array1<f64>,
    updates_since_refresh: usize,
}

impl TransportPlan {
    /// Validates column mass conservation against `col_mass` and entrywise
    /// nonnegativity, then caches the row sums.
    pub fn from_matrix(t: Array2<f64>, col_mass: Array1<f64>) -> Result<Self> {
        let (m, n) = t.dim();
        if col_mass.len() != n {
            return Err(SrotError::Config(format!(
                "plan has {n} columns but {} column masses were given",
                col_mass.len()
            )));
        }
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..m {
                let v = t[(j, i)];
                if !v.is_finite() || v < 0.0 {
                    return Err(SrotError::Constraint(format!(
                        "plan entry ({j}, {i}) = {v} is negative or non-finite"
                    )));
                }
                sum += v;
            }
            if (sum - col_mass[i]).abs() > COLUMN_MASS_TOL {
                return Err(SrotError::Constraint(format!(
                    "column {i} sums to {sum}, expected {} within {COLUMN_MASS_TOL:e}",
                    col_mass[i]
                )));
            }
        }
        Ok(Self::new_unchecked(t, col_mass))
    }

    pub(crate) fn new_unchecked(t: Array2<f64>, col_mass: Array1<f64>) -> Self {
        let row_sums = t.sum_axis(ndarray::Axis(1));
        Self {
            t,
            row_sums,
            col_mass,
            updates_since_refresh: 0,
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.t
    }

    /// Cached `T 1_n`.
    pub fn row_sums(&self) -> &Array1<f64> {
        &self.row_sums
    }

    /// The column masses `b` this plan conserves.
    pub fn column_masses(&self) -> &Array1<f64> {
        &self.col_mass
    }

    pub fn rows(&self) -> usize {
        self.t.nrows()
    }

    pub fn cols(&self) -> usize {
        self.t.ncols()
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, f64> {
        self.t.column(i)
    }

    /// Replaces column `i`, updating the cached row sums incrementally. The
    /// cache is rebuilt from scratch every 1024 updates to bound drift.
    pub fn update_column(&mut self, i: usize, new_column: &Array1<f64>) -> Result<()> {
        if i >= self.cols() {
            return Err(SrotError::IndexOutOfRange(format!(
                "column {i} of {}",
                self.cols()
            )));
        }
        if new_column.len() != self.rows() {
            return Err(SrotError::Config(format!(
                "column has {} entries, plan has {} rows",
                new_column.len(),
                self.rows()
            )));
        }
        let mut sum = 0.0;
        for v in new_column.iter() {
            if !v.is_finite() || *v < 0.0 {
                return Err(SrotError::Constraint(format!(
                    "new column entry {v} is negative or non-finite"
                )));
            }
            sum += v;
        }
        if (sum - self.col_mass[i]).abs() > COLUMN_MASS_TOL {
            return Err(SrotError::Constraint(format!(
                "new column sums to {sum}, expected {} within {COLUMN_MASS_TOL:e}",
                self.col_mass[i]
            )));
        }
        for j in 0..self.rows() {
            self.row_sums[j] += new_column[j] - self.t[(j, i)];
            self.t[(j, i)] = new_column[j];
        }
        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= ROW_SUM_REFRESH_PERIOD {
            self.refresh_row_sums();
        }
        Ok(())
    }

    /// Rebuilds the row-sum cache from the matrix.
    pub fn refresh_row_sums(&mut self) {
        self.row_sums = self.t.sum_axis(ndarray::Axis(1));
        self.updates_since_refresh = 0;
    }

    /// Largest column-mass deviation `|sum_j T_ji - b_i|` over all columns.
    pub fn max_column_mass_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.cols() {
            let sum: f64 = self.t.column(i).sum();
            worst = worst.max((sum - self.col_mass[i]).abs());
        }
        worst
    }

    /// Smallest entry of the plan (feasible plans keep this >= 0).
    pub fn min_entry(&self) -> f64 {
        self.t.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
