//! Monte Carlo studies built on the core integrators.
//!
//! Every study derives path `i`'s Brownian increments from
//! `(master_seed, i)` alone, computes per-path partial results in parallel
//! and reduces them in path order, so results do not depend on the number of
//! worker threads.

mod convergence;
mod diagnostics;
mod positivity;

pub use convergence::{
    fit_order, rms_error, run_convergence_study, ConvergenceConfig, ErrorRow, ErrorTable, ExactSolution, OrderFit,
    Reference,
};
pub use diagnostics::{
    increment_scaling_diagnostic, moment_diagnostic, IncrementRow, IncrementScalingConfig, IncrementScalingReport,
    MomentDiagnosticConfig, MomentReport, MomentRow,
};
pub use positivity::{
    positivity_stats, positivity_table, Counting, PositivityConfig, PositivityRow, PositivityTableConfig,
};

use crate::Error;

/// Runs `f` on a pool with `workers` threads, or on the global pool.
pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Error> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Number of steps `t_end / delta`, which must be a whole number.
pub fn step_count(t_end: f64, delta: f64) -> Result<usize, Error> {
    if !(delta > 0.0 && t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("need positive horizon and step, got T = {t_end}, delta = {delta}")));
    }
    let n = (t_end / delta).round();
    if (n * delta - t_end).abs() > 1e-9 * t_end || n < 1.0 {
        return Err(Error::Config(format!("T = {t_end} is not a whole number of steps of {delta}")));
    }
    Ok(n as usize)
}
