//! Declarative experiments over the other modules, each producing a
//! [`Report`] of numeric checks.
//!
//! Reports depend only on the serialized [`ExperimentConfig`]: every random
//! choice is derived from the seed and every Monte Carlo sum runs in sample
//! order, so the worker count never changes a report beyond its wall time.

mod commands;
mod config;
mod report;

use std::time::Instant;

pub use commands::{lsi_probe, Probe};
pub use config::{parse_t_grid, resolve_group, Experiment, ExperimentConfig};
pub use report::{Check, Report, Verdict};

use crate::error::{Error, Result};
use crate::mc::{sample_heat_kernel, write_batch, SampleBatch};

/// Process exit code for an error: 2 for configuration and input errors,
/// 3 for numerical failures at run time.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::PoisonedEstimate { .. } | Error::Quadrature { .. } => 3,
        Error::Domain(_)
        | Error::Structural(_)
        | Error::Dimension { .. }
        | Error::IncompatibleAlgebra
        | Error::Parse(_)
        | Error::Io(_) => 2,
    }
}

/// Exit code for a finished report.
pub fn report_exit_code(report: &Report) -> i32 {
    if report.passed() {
        0
    } else {
        1
    }
}

/// Runs an experiment, sampling a fresh batch at `s = a` when it needs one.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    with_workers(cfg.workers, || run_inner(cfg, None))
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start {w} workers: {e}")))?
            .install(f),
        None => f(),
    }
}

/// Runs an experiment on an existing batch at `s = a`. The sampler fields of
/// the recorded config are taken from the batch.
pub fn run_with_batch(cfg: &ExperimentConfig, batch: &SampleBatch) -> Result<Report> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    let used = &batch.provenance().config;
    cfg.n = batch.len();
    cfg.steps = used.steps;
    cfg.seed = used.seed;
    cfg.scheme = used.scheme;
    with_workers(cfg.workers, || run_inner(&cfg, Some(batch)))
}

fn run_inner(cfg: &ExperimentConfig, given: Option<&SampleBatch>) -> Result<Report> {
    let start = Instant::now();
    let alg = cfg.algebra()?;
    let needs_batch = !matches!(cfg.experiment, Experiment::Validate | Experiment::Nonholo);
    let owned;
    let batch = match given {
        Some(b) => {
            if **b.algebra() != *alg {
                return Err(Error::IncompatibleAlgebra);
            }
            if (b.s() - cfg.a).abs() > 1e-12 * cfg.a {
                return Err(Error::Domain(format!(
                    "batch is at s = {}, experiment needs s = a = {}",
                    b.s(),
                    cfg.a
                )));
            }
            Some(b)
        }
        None if needs_batch => {
            owned = sample_heat_kernel(&alg, &cfg.sampler(cfg.a))?;
            Some(&owned)
        }
        None => None,
    };
    let checks = match (cfg.experiment, batch) {
        (Experiment::Validate, _) => commands::validate_checks(cfg, &alg)?,
        (Experiment::Nonholo, _) => commands::nonholo_checks(cfg, &alg)?,
        (Experiment::Sample, Some(b)) => {
            if let Some(path) = &cfg.out {
                write_batch(path, b)?;
            }
            commands::sample_checks(cfg, b)?
        }
        (Experiment::Identities, Some(b)) => commands::identity_checks(cfg, b)?,
        (Experiment::Contractivity, Some(b)) => commands::contractivity_checks(cfg, b)?,
        (Experiment::Shc, Some(b)) => commands::shc_checks(cfg, b)?,
        (Experiment::LsiProbe, Some(b)) => lsi_probe(cfg, b)?.checks,
        (Experiment::KernelCheck, Some(b)) => commands::kernel_checks(cfg, b)?,
        (_, None) => unreachable!("batch experiments always have a batch"),
    };
    Ok(Report::new(cfg, checks, start.elapsed().as_secs_f64()))
}
