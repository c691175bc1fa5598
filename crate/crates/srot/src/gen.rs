//! Seeded random instance generators.
//!
//! Everything here runs on ChaCha8, a named generator with identical streams
//! on every platform, so benchmark and test instances are bitwise
//! reproducible from a 64-bit seed.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::problem::{SemiRelaxedProblem, TransportPlan};

/// The toolkit-wide RNG.
pub type SrotRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SrotRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut SrotRng) -> f64 {
    rng.random::<f64>()
}

pub fn uniform_index(rng: &mut SrotRng, n: usize) -> usize {
    rng.random_range(0..n)
}

/// Random instance: uniform costs in [0, 1), histograms drawn uniformly from
/// the simplex interior.
pub fn random_problem(m: usize, n: usize, lambda: f64, seed: u64) -> SemiRelaxedProblem {
    let mut rng = seeded_rng(seed);
    let cost = Array2::from_shape_fn((m, n), |_| rng.random::<f64>());
    let a = random_histogram(&mut rng, m);
    let b = random_histogram(&mut rng, n);
    SemiRelaxedProblem::new(cost, a, b, lambda).expect("generated instance is valid")
}

/// Uniform point in the interior of the probability simplex (exponential
/// spacings, normalized).
pub fn random_histogram(rng: &mut SrotRng, len: usize) -> Array1<f64> {
    let mut h: Array1<f64> = (0..len).map(|_| exp_sample(rng)).collect();
    let sum = h.sum();
    h.mapv_inplace(|x| x / sum);
    h
}

/// Uniform point on the scaled simplex `{x >= 0 : sum x = mass}`.
pub fn random_scaled_simplex_point(rng: &mut SrotRng, len: usize, mass: f64) -> Array1<f64> {
    if mass == 0.0 {
        return Array1::zeros(len);
    }
    let mut x: Array1<f64> = (0..len).map(|_| exp_sample(rng)).collect();
    let sum = x.sum();
    x.mapv_inplace(|v| v / sum * mass);
    x
}

/// Random feasible plan: each column drawn uniformly from its scaled simplex.
pub fn random_feasible_plan(p: &SemiRelaxedProblem, seed: u64) -> TransportPlan {
    random_feasible_plan_with(&mut seeded_rng(seed), p)
}

/// Same as [`random_feasible_plan`], drawing from an existing stream.
pub fn random_feasible_plan_with(rng: &mut SrotRng, p: &SemiRelaxedProblem) -> TransportPlan {
    let (m, n) = (p.rows(), p.cols());
    let mut t = Array2::zeros((m, n));
    for i in 0..n {
        let col = random_scaled_simplex_point(rng, m, p.target()[i]);
        for j in 0..m {
            t[(j, i)] = col[j];
        }
    }
    TransportPlan::from_matrix(t, p.target().clone()).expect("generated plan is feasible")
}

/// Balanced transportation instance with integer marginals in `1..=max_unit`
/// (the total supply equals the total demand exactly).
pub fn random_lp_instance(
    m: usize,
    n: usize,
    max_unit: u64,
    seed: u64,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let mut rng = seeded_rng(seed);
    let cost = Array2::from_shape_fn((m, n), |_| rng.random::<f64>());
    let supplies: Vec<u64> = (0..m).map(|_| rng.random_range(1..=max_unit)).collect();
    let total: u64 = supplies.iter().sum();
    // split the same total across n demands, each at least 1
    let mut demands = vec![1u64; n];
    let mut remaining = total - n as u64;
    for d in demands.iter_mut().take(n - 1) {
        let take = rng.random_range(0..=remaining);
        *d += take;
        remaining -= take;
    }
    demands[n - 1] += remaining;
    let a: Array1<f64> = supplies.iter().map(|&u| u as f64).collect();
    let b: Array1<f64> = demands.iter().map(|&u| u as f64).collect();
    (cost, a, b)
}

fn exp_sample(rng: &mut SrotRng) -> f64 {
    let u: f64 = rng.random::<f64>();
    -(1.0 - u).ln().max(1e-12)
}

/// FNV-1a digest of the instance data; used to tag traces with the instance
/// they came from.
pub fn instance_digest(p: &SemiRelaxedProblem) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            hash ^= u64::from(*b);
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    eat(&(p.rows() as u64).to_le_bytes());
    eat(&(p.cols() as u64).to_le_bytes());
    eat(&p.lambda().to_le_bytes());
    for v in p.cost().iter() {
        eat(&v.to_le_bytes());
    }
    for v in p.source().iter() {
        eat(&v.to_le_bytes());
    }
    for v in p.target().iter() {
        eat(&v.to_le_bytes());
    }
    format!("{hash:016x}")
}
