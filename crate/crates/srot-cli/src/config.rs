//! Flat key=value config files and flag/config/default precedence.
//!
//! A config file holds one `key = value` pair per line, `#` comments, blank
//! lines allowed. Keys are the long flag names without the leading dashes.
//! Command-line flags override config values, which override defaults.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use srot::solvers::{Algorithm, Sampling, SolverOptions, StepRule, Variant};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {} is not key=value: {raw}", lineno + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Flag beats config beats default.
pub fn resolve<T: Clone>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

/// Flag beats config; errors when neither is present.
pub fn resolve_required<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T> {
    flag.or(config).with_context(|| {
        format!(
            "missing required option --{name} (or config key {name}); run with --help for usage"
        )
    })
}

pub fn parse_from_config<T: std::str::FromStr>(cfg: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match cfg.get(key) {
        None => Ok(None),
        Some(raw) => match raw.parse::<T>() {
            Ok(v) => Ok(Some(v)),
            Err(e) => bail!("config key {key}={raw}: {e}"),
        },
    }
}

pub fn parse_algorithm(s: &str) -> Result<Algorithm> {
    match s {
        "fw" => Ok(Algorithm::Fw),
        "bcfw" => Ok(Algorithm::Bcfw),
        _ => bail!("unknown algorithm {s:?} (expected fw or bcfw)"),
    }
}

pub fn parse_sampling(s: &str) -> Result<Sampling> {
    match s {
        "uniform" => Ok(Sampling::Uniform),
        "permutation" => Ok(Sampling::Permutation),
        "gap" | "gap-adaptive" => Ok(Sampling::GapAdaptive),
        _ => bail!("unknown sampling {s:?} (expected uniform, permutation, or gap)"),
    }
}

pub fn parse_step(s: &str) -> Result<StepRule> {
    match s {
        "dec" | "decay" => Ok(StepRule::Decay),
        "els" | "line-search" => Ok(StepRule::ExactLineSearch),
        _ => bail!("unknown step rule {s:?} (expected dec or els)"),
    }
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    match s {
        "plain" => Ok(Variant::Plain),
        "away" => Ok(Variant::AwayStep),
        "pairwise" => Ok(Variant::PairwiseStep),
        _ => bail!("unknown variant {s:?} (expected plain, away, or pairwise)"),
    }
}

pub fn algorithm_name(opts: &SolverOptions) -> String {
    let algo = match opts.algorithm {
        Algorithm::Fw => "fw",
        Algorithm::Bcfw => match opts.variant {
            Variant::Plain => "bcfw",
            Variant::AwayStep => "bcafw",
            Variant::PairwiseStep => "bcpfw",
        },
    };
    let sampling = match (opts.algorithm, opts.sampling) {
        (Algorithm::Fw, _) => "",
        (_, Sampling::Uniform) => "-u",
        (_, Sampling::Permutation) => "-p",
        (_, Sampling::GapAdaptive) => "-ga",
    };
    let step = match opts.step_rule {
        StepRule::Decay => "-dec",
        StepRule::ExactLineSearch => "-els",
    };
    format!("{algo}{sampling}{step}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let dir = std::env::temp_dir().join(format!("srot-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "# comment\nlambda = 1e-2\n\nm=16\n").unwrap();
        let cfg = ConfigFile::load(&path).unwrap();
        assert_eq!(cfg.get("lambda"), Some("1e-2"));
        let lambda: Option<f64> = parse_from_config(&cfg, "lambda").unwrap();
        assert_eq!(lambda, Some(1e-2));
        let m: Option<usize> = parse_from_config(&cfg, "m").unwrap();
        assert_eq!(m, Some(16));
        assert_eq!(resolve(Some(3usize), m, 1), 3);
        assert_eq!(resolve(None, m, 1), 16);
        assert!(resolve_required::<f64>(None, None, "lambda").is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
