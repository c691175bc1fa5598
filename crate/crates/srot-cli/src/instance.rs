//! Plain-text problem instances and dense plan matrices.
//!
//! Instance format (`# srot-problem v1`): after optional comment lines, the
//! header `m n`, then `lambda`, then the `m` source weights, the `n` target
//! weights, and `m` rows of `n` cost entries, all whitespace-separated.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::{Array1, Array2};

use srot::problem::{SemiRelaxedProblem, TransportPlan};

pub fn read_problem(path: &Path) -> Result<SemiRelaxedProblem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading instance {}", path.display()))?;
    let mut tokens = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split_whitespace());
    let mut next = |what: &str| -> Result<f64> {
        tokens
            .next()
            .with_context(|| format!("instance truncated while reading {what}"))?
            .parse::<f64>()
            .with_context(|| format!("bad number while reading {what}"))
    };
    let m = next("m")? as usize;
    let n = next("n")? as usize;
    if m == 0 || n == 0 {
        bail!("instance has empty dimensions {m}x{n}");
    }
    let lambda = next("lambda")?;
    let mut a = Array1::zeros(m);
    for j in 0..m {
        a[j] = next("source weight")?;
    }
    let mut b = Array1::zeros(n);
    for i in 0..n {
        b[i] = next("target weight")?;
    }
    let mut c = Array2::zeros((m, n));
    for j in 0..m {
        for i in 0..n {
            c[(j, i)] = next("cost entry")?;
        }
    }
    SemiRelaxedProblem::new(c, a, b, lambda).map_err(Into::into)
}

pub fn write_problem(path: &Path, p: &SemiRelaxedProblem) -> Result<()> {
    let mut out = String::from("# srot-problem v1\n");
    out.push_str(&format!("{} {}\n{:.17e}\n", p.rows(), p.cols(), p.lambda()));
    push_row(&mut out, p.source().iter());
    push_row(&mut out, p.target().iter());
    for j in 0..p.rows() {
        push_row(&mut out, p.cost().row(j).into_iter());
    }
    std::fs::write(path, out).with_context(|| format!("writing instance {}", path.display()))
}

/// Dense whitespace-separated plan matrix, one row per line.
pub fn write_plan(path: &Path, plan: &TransportPlan) -> Result<()> {
    let mut out = String::new();
    for j in 0..plan.rows() {
        push_row(&mut out, plan.matrix().row(j).into_iter());
    }
    std::fs::write(path, out).with_context(|| format!("writing plan {}", path.display()))
}

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        out.push_str(&format!("{v:.17e}"));
        first = false;
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use srot::gen;

    #[test]
    fn problem_round_trip() {
        let dir = std::env::temp_dir().join(format!("srot-inst-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.txt");
        let p = gen::random_problem(3, 4, 0.25, 9);
        write_problem(&path, &p).unwrap();
        let back = read_problem(&path).unwrap();
        assert_eq!(p.cost(), back.cost());
        assert_eq!(p.source(), back.source());
        assert_eq!(p.target(), back.target());
        assert_eq!(p.lambda(), back.lambda());
        std::fs::remove_dir_all(&dir).ok();
    }
}
