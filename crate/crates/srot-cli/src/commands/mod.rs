pub mod bench;
pub mod report;
pub mod solve;
pub mod transfer;
pub mod verify;

use anyhow::Result;

use crate::config::{self, ConfigFile};
use crate::SolverFlags;
use srot::solvers::SolverOptions;

/// Applies flag > config > default precedence to the shared solver flags.
/// `default_max_epochs` differs per command: `solve` runs long enough to
/// certify, `transfer` stops once images stop changing visibly. Lambda may
/// be absent here when an instance file can still supply it.
pub fn resolve_solver_options(
    flags: &SolverFlags,
    cfg: &ConfigFile,
    default_max_epochs: usize,
) -> Result<(SolverOptions, Option<f64>)> {
    let defaults = SolverOptions::default();
    let algorithm = match flags
        .algo
        .clone()
        .or_else(|| cfg.get("algo").map(str::to_string))
    {
        Some(s) => config::parse_algorithm(&s)?,
        None => defaults.algorithm,
    };
    let sampling = match flags
        .sampling
        .clone()
        .or_else(|| cfg.get("sampling").map(str::to_string))
    {
        Some(s) => config::parse_sampling(&s)?,
        None => defaults.sampling,
    };
    let step_rule = match flags
        .step
        .clone()
        .or_else(|| cfg.get("step").map(str::to_string))
    {
        Some(s) => config::parse_step(&s)?,
        None => defaults.step_rule,
    };
    let variant = match flags
        .variant
        .clone()
        .or_else(|| cfg.get("variant").map(str::to_string))
    {
        Some(s) => config::parse_variant(&s)?,
        None => defaults.variant,
    };
    let lambda = flags.lambda.or(config::parse_from_config(cfg, "lambda")?);
    let opts = SolverOptions {
        algorithm,
        sampling,
        step_rule,
        variant,
        epsilon: config::resolve(
            flags.eps,
            config::parse_from_config(cfg, "eps")?,
            defaults.epsilon,
        ),
        max_epochs: config::resolve(
            flags.max_epochs,
            config::parse_from_config(cfg, "max-epochs")?,
            default_max_epochs,
        ),
        gap_check_period: config::resolve(
            flags.gap_check_period,
            config::parse_from_config(cfg, "gap-check-period")?,
            defaults.gap_check_period,
        ),
        global_refresh_m: config::resolve(
            flags.refresh_m,
            config::parse_from_config(cfg, "refresh-m")?,
            defaults.global_refresh_m,
        ),
        rng_seed: config::resolve(
            flags.seed,
            config::parse_from_config(cfg, "seed")?,
            defaults.rng_seed,
        ),
    };
    Ok((opts, lambda))
}

pub fn load_config(path: &Option<std::path::PathBuf>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}
