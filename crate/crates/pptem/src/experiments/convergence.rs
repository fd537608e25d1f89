use std::fmt;
use std::sync::Arc;

use pptem_core::scheme::{integrate, NoObserver};
use pptem_core::{IncrementGrid, ModelSpec, SchemeKind, StateVector, TruncationPolicy};
use rayon::prelude::*;

use super::{step_count, with_workers};
use crate::Error;

/// Exact terminal value computed from the finest increments and `x0`.
pub type ExactSolution = dyn Fn(&IncrementGrid, &[f64]) -> StateVector + Send + Sync;

/// What the test runs are compared against.
#[derive(Clone, Default)]
pub enum Reference {
    /// The same scheme on the reference grid.
    #[default]
    SameScheme,
    /// A closed-form solution evaluated on the reference increments.
    Exact(Arc<ExactSolution>),
}

impl fmt::Debug for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SameScheme => f.write_str("SameScheme"),
            Self::Exact(_) => f.write_str("Exact(..)"),
        }
    }
}

/// Settings of a strong-error study.
#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    /// Scheme under test.
    pub scheme: SchemeKind,
    /// Horizon `T`.
    pub t_end: f64,
    /// Step of the reference grid.
    pub ref_delta: f64,
    /// Steps under test; each a power-of-two multiple of `ref_delta`.
    pub test_deltas: Vec<f64>,
    /// Number of paths `M`.
    pub paths: usize,
    /// Seed shared by all paths.
    pub master_seed: u64,
    /// Clamp policy (PPTEM) and truncation radius (TEM).
    pub policy: TruncationPolicy,
    /// Reference solution.
    pub reference: Reference,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl ConvergenceConfig {
    /// Reference step `2⁻¹⁴` and test steps `2⁻⁸ … 2⁻¹²`, `T = 1`, `10⁵` paths.
    pub fn new(scheme: SchemeKind, policy: TruncationPolicy) -> Self {
        Self {
            scheme,
            t_end: 1.0,
            ref_delta: 2f64.powi(-14),
            test_deltas: (8..=12).map(|k| 2f64.powi(-k)).collect(),
            paths: 100_000,
            master_seed: 0,
            policy,
            reference: Reference::SameScheme,
            workers: None,
        }
    }

    fn factors(&self) -> Result<(usize, Vec<usize>), Error> {
        let n_ref = step_count(self.t_end, self.ref_delta)?;
        if self.test_deltas.is_empty() {
            return Err(Error::Config("no test step sizes given".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("path count must be positive".into()));
        }
        let factors = self
            .test_deltas
            .iter()
            .map(|&d| {
                let r = (d / self.ref_delta).round();
                let exact = (r * self.ref_delta - d).abs() <= 1e-12 * d;
                if !(exact && r >= 1.0 && (r as usize).is_power_of_two() && n_ref % (r as usize) == 0) {
                    return Err(Error::Config(format!(
                        "test step {d} is not a power-of-two multiple of the reference step {} dividing T",
                        self.ref_delta
                    )));
                }
                Ok(r as usize)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((n_ref, factors))
    }
}

/// One row of an [`ErrorTable`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    /// Step size.
    pub delta: f64,
    /// Root-mean-square terminal error; NaN if any path diverged.
    pub rms_error: f64,
    /// Paths whose test run (or reference) diverged.
    pub diverged_count: usize,
}

/// Least-squares fit of `log₂ error = slope · log₂ Δ + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    /// Empirical strong order.
    pub slope: f64,
    /// Intercept in log₂ units.
    pub intercept: f64,
    /// Points used.
    pub used: usize,
    /// Non-finite points left out.
    pub excluded: usize,
}

/// Result of [`run_convergence_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    /// Rows by decreasing step size.
    pub rows: Vec<ErrorRow>,
    /// Fit over the finite rows; `None` with fewer than two.
    pub fit: Option<OrderFit>,
    /// Paths whose reference run diverged.
    pub reference_diverged: usize,
    /// Number of paths.
    pub paths: usize,
}

impl ErrorTable {
    /// Row for a given step size.
    pub fn row(&self, delta: f64) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| (r.delta - delta).abs() <= 1e-12 * delta)
    }
}

/// Root-mean-square Euclidean distance between paired terminal values.
///
/// A non-finite component anywhere makes the result NaN.
pub fn rms_error(numeric: &[StateVector], reference: &[StateVector]) -> Result<f64, Error> {
    if numeric.len() != reference.len() || numeric.is_empty() {
        return Err(Error::Config(format!(
            "rms_error needs equally long, nonempty lists (got {} and {})",
            numeric.len(),
            reference.len()
        )));
    }
    let mut sum = 0.0;
    for (a, b) in numeric.iter().zip(reference) {
        if a.dim() != b.dim() {
            return Err(Error::Config("rms_error: state dimensions differ".into()));
        }
        sum += squared_distance(a, b);
    }
    Ok((sum / numeric.len() as f64).sqrt())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        if !(x.is_finite() && y.is_finite()) {
            return f64::NAN;
        }
        s += (x - y) * (x - y);
    }
    s
}

/// Fits `log₂ error` against `log₂ Δ` by least squares.
///
/// Non-finite errors are excluded and counted. Fails on mismatched lengths,
/// nonpositive values or fewer than two usable points.
pub fn fit_order(errors: &[f64], deltas: &[f64]) -> Result<OrderFit, Error> {
    if errors.len() != deltas.len() {
        return Err(Error::Config("fit_order: errors and deltas differ in length".into()));
    }
    let mut pts = Vec::with_capacity(errors.len());
    let mut excluded = 0;
    for (&e, &d) in errors.iter().zip(deltas) {
        if !e.is_finite() {
            excluded += 1;
            continue;
        }
        if !(e > 0.0 && d > 0.0 && d.is_finite()) {
            return Err(Error::Config(format!("fit_order: need positive values, got error {e} at delta {d}")));
        }
        pts.push((d.log2(), e.log2()));
    }
    if pts.len() < 2 {
        return Err(Error::Config(format!("fit_order: {} usable points, need at least 2", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("fit_order: all step sizes are equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(OrderFit { slope, intercept: my - slope * mx, used: pts.len(), excluded })
}

struct PathResult {
    squared: Vec<f64>,
    diverged: Vec<bool>,
    reference_diverged: bool,
}

fn run_path(
    model: &ModelSpec,
    x0: &[f64],
    cfg: &ConvergenceConfig,
    n_ref: usize,
    factors: &[usize],
    path: u64,
) -> Result<PathResult, Error> {
    let fine = IncrementGrid::generate(cfg.master_seed, path, n_ref, model.noise_dim(), cfg.ref_delta)?;
    let (reference, reference_diverged) = match &cfg.reference {
        Reference::SameScheme => {
            let iv = cfg.policy.clamp_interval(cfg.ref_delta)?;
            let s = integrate(model, cfg.scheme, cfg.ref_delta, n_ref, &fine, x0, &iv, &mut NoObserver)?;
            let div = s.diverged();
            (s.terminal, div)
        }
        Reference::Exact(exact) => {
            let v = exact(&fine, x0);
            let div = !v.is_finite();
            (v, div)
        }
    };
    let mut squared = Vec::with_capacity(factors.len());
    let mut diverged = Vec::with_capacity(factors.len());
    for (&factor, &delta) in factors.iter().zip(&cfg.test_deltas) {
        let coarse;
        let grid = if factor == 1 {
            &fine
        } else {
            coarse = fine.coarsen(factor)?;
            &coarse
        };
        let iv = cfg.policy.clamp_interval(delta)?;
        let s = integrate(model, cfg.scheme, delta, n_ref / factor, grid, x0, &iv, &mut NoObserver)?;
        diverged.push(s.diverged() || reference_diverged);
        squared.push(squared_distance(&s.terminal, &reference));
    }
    Ok(PathResult { squared, diverged, reference_diverged })
}

/// Strong-error study: for every path the reference and every test run share
/// one Brownian path, the coarse increments being block sums of the fine ones.
///
/// A cell with any diverged path reports NaN together with the count.
pub fn run_convergence_study(model: &ModelSpec, x0: &[f64], cfg: &ConvergenceConfig) -> Result<ErrorTable, Error> {
    let (n_ref, factors) = cfg.factors()?;
    if x0.len() != model.dim() {
        return Err(Error::Config(format!("initial state has {} components, model needs {}", x0.len(), model.dim())));
    }
    let results: Vec<PathResult> = with_workers(cfg.workers, || {
        (0..cfg.paths as u64)
            .into_par_iter()
            .map(|i| run_path(model, x0, cfg, n_ref, &factors, i))
            .collect::<Result<Vec<_>, _>>()
    })??;

    let k = factors.len();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    let mut reference_diverged = 0;
    for r in &results {
        for j in 0..k {
            sums[j] += r.squared[j];
            counts[j] += r.diverged[j] as usize;
        }
        reference_diverged += r.reference_diverged as usize;
    }
    let m = cfg.paths as f64;
    let mut rows: Vec<ErrorRow> = (0..k)
        .map(|j| ErrorRow { delta: cfg.test_deltas[j], rms_error: (sums[j] / m).sqrt(), diverged_count: counts[j] })
        .collect();
    rows.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let errors: Vec<f64> = rows.iter().map(|r| r.rms_error).collect();
    let deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    Ok(ErrorTable { fit: fit_order(&errors, &deltas).ok(), rows, reference_diverged, paths: cfg.paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use pptem_core::models::{lookup, GinzburgLandauParams};
    use pptem_core::NegativeArgument;

    #[test]
    fn rms_examples() {
        let a = vec![StateVector::from([1.0]), StateVector::from([2.0])];
        assert_eq!(rms_error(&a, &a).unwrap(), 0.0);
        let b = vec![StateVector::from([1.3]), StateVector::from([2.4])];
        assert_relative_eq!(rms_error(&a, &b).unwrap(), 0.3535533906, epsilon = 1e-10);
        let c = vec![StateVector::from([f64::NAN]), StateVector::from([2.0])];
        assert!(rms_error(&c, &a).unwrap().is_nan());
        assert!(rms_error(&a, &a[..1]).is_err());
    }

    #[test]
    fn rms_is_permutation_invariant() {
        let a: Vec<_> = (0..7).map(|i| StateVector::from([i as f64, 1.0])).collect();
        let b: Vec<_> = (0..7).map(|i| StateVector::from([(i * i) as f64 * 0.1, -1.0])).collect();
        let (mut pa, mut pb) = (a.clone(), b.clone());
        pa.reverse();
        pb.reverse();
        pa.swap(1, 4);
        pb.swap(1, 4);
        assert_relative_eq!(rms_error(&a, &b).unwrap(), rms_error(&pa, &pb).unwrap(), max_relative = 1e-15);
    }

    #[test]
    fn fit_examples() {
        let deltas: Vec<f64> = (8..=12).map(|k| 2f64.powi(-k)).collect();
        let exact: Vec<f64> = deltas.iter().map(|d| 3.0 * d.sqrt()).collect();
        assert!((fit_order(&exact, &deltas).unwrap().slope - 0.5).abs() < 1e-12);
        let table = [0.4538, 0.2570, 0.1417, 0.0897, 0.0568];
        assert!((fit_order(&table, &deltas).unwrap().slope - 0.7515).abs() < 5e-4);
        let two = fit_order(&[0.3, 0.1], &[0.5, 0.25]).unwrap();
        assert_relative_eq!(two.slope, 3f64.log2(), epsilon = 1e-12);
        let gaps = fit_order(&[f64::NAN, 0.2, 0.1], &[1.0, 0.5, 0.25]).unwrap();
        assert_eq!((gaps.used, gaps.excluded), (2, 1));
        assert!(fit_order(&[0.0, 0.1], &[0.5, 0.25]).is_err());
        assert!(fit_order(&[f64::NAN, 0.1], &[0.5, 0.25]).is_err());
    }

    #[test]
    fn rejects_misaligned_steps() {
        let m = GinzburgLandauParams::default().build().unwrap();
        let mut cfg = ConvergenceConfig::new(SchemeKind::Pptem, TruncationPolicy::for_model(&m).unwrap());
        cfg.paths = 2;
        cfg.test_deltas = vec![3.0 * 2f64.powi(-10)];
        assert!(run_convergence_study(&m, &[1.0], &cfg).is_err());
        cfg.test_deltas = vec![2f64.powi(-15)];
        assert!(run_convergence_study(&m, &[1.0], &cfg).is_err());
        cfg.test_deltas = vec![2f64.powi(-8)];
        assert!(run_convergence_study(&m, &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn table_is_sorted_and_deterministic() {
        let e = lookup("gl", &[], NegativeArgument::Absolute).unwrap();
        let mut cfg = ConvergenceConfig::new(SchemeKind::Pptem, TruncationPolicy::for_model(&e.spec).unwrap());
        cfg.paths = 40;
        cfg.ref_delta = 2f64.powi(-10);
        cfg.test_deltas = vec![2f64.powi(-8), 2f64.powi(-6), 2f64.powi(-7)];
        cfg.workers = Some(1);
        let a = run_convergence_study(&e.spec, &e.x0, &cfg).unwrap();
        cfg.workers = Some(3);
        let b = run_convergence_study(&e.spec, &e.x0, &cfg).unwrap();
        assert_eq!(a, b);
        let d: Vec<f64> = a.rows.iter().map(|r| r.delta).collect();
        assert_eq!(d, vec![2f64.powi(-6), 2f64.powi(-7), 2f64.powi(-8)]);
        assert!(a.rows.iter().all(|r| r.rms_error >= 0.0 && r.diverged_count == 0));
    }
}
