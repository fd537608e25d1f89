use pptem_core::scheme::integrate;
use pptem_core::{IncrementGrid, ModelSpec, SchemeKind, TruncationPolicy};
use rayon::prelude::*;

use super::{fit_order, step_count, with_workers, OrderFit};
use crate::Error;

/// Settings of [`moment_diagnostic`].
#[derive(Debug, Clone)]
pub struct MomentDiagnosticConfig {
    /// Moment exponent `p̄ > 1`.
    pub p_bar: f64,
    /// Inverse-moment exponent `q̄ > 0`.
    pub q_bar: f64,
    /// Equally spaced sample times in `[0, T]`, endpoints included.
    pub sample_times: usize,
    /// Number of paths.
    pub paths: usize,
    /// Seed.
    pub master_seed: u64,
    /// Largest accepted ratio between estimates at consecutive step sizes.
    pub max_ratio: f64,
    /// Worker threads.
    pub workers: Option<usize>,
}

impl Default for MomentDiagnosticConfig {
    fn default() -> Self {
        Self { p_bar: 4.0, q_bar: 1.0, sample_times: 17, paths: 10_000, master_seed: 0, max_ratio: 2.0, workers: None }
    }
}

/// Moment estimates at one step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    /// Step size.
    pub delta: f64,
    /// `sup_t E|X(t)|^p̄` over the sample times.
    pub sup_moment: f64,
    /// `sup_t E|X(t)|^-q̄` over the sample times.
    pub sup_inverse_moment: f64,
    /// Paths that diverged.
    pub diverged_paths: usize,
}

/// Output of [`moment_diagnostic`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// Rows in the order the step sizes were given.
    pub rows: Vec<MomentRow>,
    /// Largest ratio `max(a/b, b/a)` between consecutive rows, over both
    /// estimates; NaN or infinite if an estimate is.
    pub worst_ratio: f64,
    /// `worst_ratio ≤ max_ratio`.
    pub stable: bool,
}

/// Estimates `sup_t E|X_Δ(t)|^p̄` and `sup_t E|X_Δ(t)|^-q̄` per step size and
/// reports whether they stay within a bounded ratio as `Δ` shrinks.
/// Sample times are rounded to the nearest grid time.
#[allow(clippy::too_many_arguments)]
pub fn moment_diagnostic(
    model: &ModelSpec,
    x0: &[f64],
    t_end: f64,
    scheme: SchemeKind,
    deltas: &[f64],
    policy: &TruncationPolicy,
    cfg: &MomentDiagnosticConfig,
) -> Result<MomentReport, Error> {
    if !(cfg.p_bar > 1.0 && cfg.q_bar > 0.0) {
        return Err(Error::Config(format!("need p_bar > 1 and q_bar > 0, got {} and {}", cfg.p_bar, cfg.q_bar)));
    }
    if cfg.sample_times < 2 || cfg.paths == 0 {
        return Err(Error::Config("moment diagnostic needs at least 2 sample times and 1 path".into()));
    }
    let s = cfg.sample_times;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let n = step_count(t_end, delta)?;
        let iv = policy.clamp_interval(delta)?;
        let marks: Vec<usize> = (0..s).map(|j| ((j * n) as f64 / (s - 1) as f64).round() as usize).collect();
        let per_path: Vec<(Vec<f64>, bool)> = with_workers(cfg.workers, || {
            (0..cfg.paths as u64)
                .into_par_iter()
                .map(|p| {
                    let inc = IncrementGrid::generate(cfg.master_seed, p, n, model.noise_dim(), delta)?;
                    let mut acc = vec![f64::NAN; 2 * s];
                    let record = |acc: &mut [f64], step: usize, x: &[f64]| {
                        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                        for (j, &m) in marks.iter().enumerate() {
                            if m == step {
                                acc[2 * j] = r.powf(cfg.p_bar);
                                acc[2 * j + 1] = r.powf(-cfg.q_bar);
                            }
                        }
                    };
                    record(&mut acc, 0, x0);
                    let mut obs = |k: usize, _: &[f64], post: &[f64]| record(&mut acc, k, post);
                    let summary = integrate(model, scheme, delta, n, &inc, x0, &iv, &mut obs)?;
                    Ok((acc, summary.diverged()))
                })
                .collect::<Result<Vec<_>, Error>>()
        })??;
        let mut sums = vec![0.0; 2 * s];
        for (acc, _) in &per_path {
            for (a, v) in sums.iter_mut().zip(acc) {
                *a += v;
            }
        }
        let m = cfg.paths as f64;
        let sup = |offset: usize| {
            (0..s).map(|j| sums[2 * j + offset] / m).fold(f64::NEG_INFINITY, |a, b| {
                if a.is_nan() || b.is_nan() {
                    f64::NAN
                } else {
                    a.max(b)
                }
            })
        };
        rows.push(MomentRow {
            delta,
            sup_moment: sup(0),
            sup_inverse_moment: sup(1),
            diverged_paths: per_path.iter().filter(|(_, d)| *d).count(),
        });
    }
    let mut worst_ratio: f64 = 1.0;
    for w in rows.windows(2) {
        for (a, b) in [(w[0].sup_moment, w[1].sup_moment), (w[0].sup_inverse_moment, w[1].sup_inverse_moment)] {
            let r = (a / b).max(b / a);
            worst_ratio = if r.is_nan() || worst_ratio.is_nan() { f64::NAN } else { worst_ratio.max(r) };
        }
    }
    Ok(MomentReport { stable: worst_ratio <= cfg.max_ratio, worst_ratio, rows })
}

/// Settings of [`increment_scaling_diagnostic`].
#[derive(Debug, Clone)]
pub struct IncrementScalingConfig {
    /// Moment order `p ≥ 2`.
    pub p: f64,
    /// Scheme generating the fine proxy path.
    pub scheme: SchemeKind,
    /// Number of paths.
    pub paths: usize,
    /// Seed.
    pub master_seed: u64,
    /// Worker threads.
    pub workers: Option<usize>,
}

/// One row of [`IncrementScalingReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementRow {
    /// Step size `Δ`.
    pub delta: f64,
    /// Estimate of `E|X(tₖ + Δ/2) - X(tₖ)|^p`, averaged over `k`.
    pub moment: f64,
}

/// Output of [`increment_scaling_diagnostic`].
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementScalingReport {
    /// Rows in the order the step sizes were given.
    pub rows: Vec<IncrementRow>,
    /// Log-log fit of the moments against `Δ`.
    pub fit: OrderFit,
    /// `p/2`, the slope the bound predicts.
    pub target: f64,
}

/// Estimates `E|X(t) - X(tₖ)|^p` at mid-interval times `t = tₖ + Δ/2` from a
/// fine path with step `min Δ / 2`, which stands in for the exact solution.
pub fn increment_scaling_diagnostic(
    model: &ModelSpec,
    x0: &[f64],
    t_end: f64,
    deltas: &[f64],
    policy: &TruncationPolicy,
    cfg: &IncrementScalingConfig,
) -> Result<IncrementScalingReport, Error> {
    if cfg.p.is_nan() || cfg.p < 2.0 {
        return Err(Error::Config(format!("increment moment order must be at least 2, got {}", cfg.p)));
    }
    if deltas.len() < 2 || cfg.paths == 0 {
        return Err(Error::Config("increment diagnostic needs two step sizes and one path".into()));
    }
    let fine = deltas.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
    let n_fine = step_count(t_end, fine)?;
    let ratios = deltas
        .iter()
        .map(|&d| {
            let r = (d / fine).round() as usize;
            if (r as f64 * fine - d).abs() > 1e-12 * d || !r.is_power_of_two() || n_fine % r != 0 {
                Err(Error::Config(format!("step {d} is not a power-of-two multiple of {fine} dividing T")))
            } else {
                Ok(r)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let iv = policy.clamp_interval(fine)?;
    let d = model.dim();
    let per_path: Vec<Vec<f64>> = with_workers(cfg.workers, || {
        (0..cfg.paths as u64)
            .into_par_iter()
            .map(|p| {
                let inc = IncrementGrid::generate(cfg.master_seed, p, n_fine, model.noise_dim(), fine)?;
                let mut path = Vec::with_capacity((n_fine + 1) * d);
                path.extend_from_slice(x0);
                let mut obs = |_: usize, _: &[f64], post: &[f64]| path.extend_from_slice(post);
                integrate(model, cfg.scheme, fine, n_fine, &inc, x0, &iv, &mut obs)?;
                path.resize((n_fine + 1) * d, f64::NAN);
                let at = |k: usize| &path[k * d..(k + 1) * d];
                Ok(ratios
                    .iter()
                    .map(|&r| {
                        let intervals = n_fine / r;
                        (0..intervals)
                            .map(|k| {
                                let (a, b) = (at(k * r), at(k * r + r / 2));
                                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt().powf(cfg.p)
                            })
                            .sum::<f64>()
                            / intervals as f64
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>, Error>>()
    })??;
    let mut sums = vec![0.0; deltas.len()];
    for v in &per_path {
        for (s, x) in sums.iter_mut().zip(v) {
            *s += x;
        }
    }
    let rows: Vec<IncrementRow> =
        deltas.iter().zip(&sums).map(|(&delta, s)| IncrementRow { delta, moment: s / cfg.paths as f64 }).collect();
    let moments: Vec<f64> = rows.iter().map(|r| r.moment).collect();
    let fit = fit_order(&moments, deltas)?;
    Ok(IncrementScalingReport { rows, fit, target: cfg.p / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frozen() -> ModelSpec {
        ModelSpec::from_fns("frozen", 1, 1, |_, _, o| o[0] = 0.0, |_, _, o| o[0] = 0.0)
    }

    #[test]
    fn frozen_dynamics_have_constant_moments() {
        let policy = TruncationPolicy::with_defaults(1.0, 1.5).unwrap();
        let cfg = MomentDiagnosticConfig { paths: 20, ..Default::default() };
        let deltas = [0.25, 0.125, 0.0625];
        let r = moment_diagnostic(&frozen(), &[1.5], 1.0, SchemeKind::Pptem, &deltas, &policy, &cfg).unwrap();
        for row in &r.rows {
            approx::assert_relative_eq!(row.sup_moment, 1.5f64.powi(4), max_relative = 1e-14);
            approx::assert_relative_eq!(row.sup_inverse_moment, 1.0 / 1.5, max_relative = 1e-14);
        }
        approx::assert_relative_eq!(r.worst_ratio, 1.0, max_relative = 1e-14);
        assert!(r.stable);
    }

    #[test]
    fn rejects_bad_exponents() {
        let policy = TruncationPolicy::with_defaults(1.0, 1.5).unwrap();
        let cfg = MomentDiagnosticConfig { p_bar: 1.0, ..Default::default() };
        assert!(moment_diagnostic(&frozen(), &[1.0], 1.0, SchemeKind::Em, &[0.5], &policy, &cfg).is_err());
        let inc = IncrementScalingConfig { p: 1.5, scheme: SchemeKind::Em, paths: 1, master_seed: 0, workers: None };
        assert!(increment_scaling_diagnostic(&frozen(), &[1.0], 1.0, &[0.5, 0.25], &policy, &inc).is_err());
    }
}
