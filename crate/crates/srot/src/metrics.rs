//! Evaluation metrics and per-epoch trace recording.
//!
//! All metric functions are pure: identical inputs give identical outputs.
//! The matrix/value errors compare a plan against the exact LP transport plan
//! of the unrelaxed problem; they are optional in a record because a
//! reference plan is not always available.

use ndarray::{Array1, Array2};

use crate::problem::TransportPlan;

/// Default threshold below which a plan entry counts as zero for sparsity.
pub const SPARSITY_THRESHOLD: f64 = 1e-12;

/// Marginal constraint error `e_c = ||T 1_n - a|| + ||T^T 1_m - b||`
/// (Euclidean norms).
pub fn marginal_error(plan: &TransportPlan, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let t = plan.matrix();
    let row_err: f64 = t
        .sum_axis(ndarray::Axis(1))
        .iter()
        .zip(a.iter())
        .map(|(r, ai)| (r - ai) * (r - ai))
        .sum();
    let col_err: f64 = t
        .sum_axis(ndarray::Axis(0))
        .iter()
        .zip(b.iter())
        .map(|(c, bi)| (c - bi) * (c - bi))
        .sum();
    row_err.sqrt() + col_err.sqrt()
}

/// Fraction of plan entries with magnitude at most `threshold`.
pub fn sparsity(t: &Array2<f64>, threshold: f64) -> f64 {
    let zeros = t.iter().filter(|v| v.abs() <= threshold).count();
    zeros as f64 / t.len() as f64
}

/// Transport matrix error `e_m = ||T - T_lp|| / ||T_lp||` (Frobenius).
pub fn matrix_error(t: &Array2<f64>, t_lp: &Array2<f64>) -> f64 {
    let diff: f64 = t
        .iter()
        .zip(t_lp.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let norm: f64 = t_lp.iter().map(|y| y * y).sum();
    diff.sqrt() / norm.sqrt()
}

/// Value error `e_v = |<T, C> - <T_lp, C>| / |<T_lp, C>|`. When the LP cost
/// is zero the relative form is undefined; the absolute difference is
/// returned instead and flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueError {
    pub value: f64,
    /// True when the LP cost was zero and `value` is an absolute difference.
    pub absolute_fallback: bool,
}

pub fn value_error(t: &Array2<f64>, t_lp: &Array2<f64>, cost: &Array2<f64>) -> ValueError {
    let dot = |x: &Array2<f64>| -> f64 { x.iter().zip(cost.iter()).map(|(v, c)| v * c).sum() };
    let ours = dot(t);
    let lp = dot(t_lp);
    if lp == 0.0 {
        ValueError {
            value: (ours - lp).abs(),
            absolute_fallback: true,
        }
    } else {
        ValueError {
            value: (ours - lp).abs() / lp.abs(),
            absolute_fallback: false,
        }
    }
}

/// LP reference used for the matrix/value error columns of a trace.
#[derive(Debug, Clone)]
pub struct PlanReference {
    pub plan: Array2<f64>,
    pub cost: f64,
}

/// One per-epoch measurement row.
#[derive(Debug, Clone)]
pub struct MetricRecord {
    pub epoch: usize,
    pub wall_seconds: f64,
    pub objective: f64,
    pub gap: f64,
    pub marginal_error: f64,
    pub sparsity: f64,
    pub matrix_error: Option<f64>,
    pub value_error: Option<f64>,
}

/// Metadata a trace carries about the run that produced it.
#[derive(Debug, Clone, Default)]
pub struct TraceMeta {
    /// Human-readable snapshot of the solver options.
    pub options: String,
    pub seed: u64,
    pub instance_digest: String,
    /// Wall time spent inside duality-gap evaluations, reported separately
    /// because the gap check's LMO work is excluded from iteration counts.
    pub gap_eval_seconds: f64,
    /// Times the gap-adaptive sampler fell back to uniform because every
    /// stored gap clamped to zero.
    pub uniform_fallbacks: usize,
    /// Inner iteration of the first gap-adaptive global refresh.
    pub first_global_refresh: Option<usize>,
}

/// Ordered per-epoch records plus run metadata.
#[derive(Debug, Clone, Default)]
pub struct SolverTrace {
    pub records: Vec<MetricRecord>,
    pub meta: TraceMeta,
}

impl SolverTrace {
    pub fn push(&mut self, record: MetricRecord) {
        if let Some(last) = self.records.last() {
            debug_assert!(record.epoch > last.epoch, "epochs must strictly increase");
        }
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }

    /// First recorded epoch whose gap is at most `threshold`.
    pub fn epochs_to_gap(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.gap <= threshold)
            .map(|r| r.epoch)
    }
}
