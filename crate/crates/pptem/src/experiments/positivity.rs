use std::str::FromStr;

use pptem_core::models::lookup;
use pptem_core::scheme::integrate;
use pptem_core::truncation::PolicyOverrides;
use pptem_core::{IncrementGrid, ModelSpec, NegativeArgument, SchemeKind, TruncationPolicy};
use rayon::prelude::*;

use super::{step_count, with_workers};
use crate::Error;

/// How nonpositive iterates are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Counting {
    /// Share of all monitored values `(path, step, component)` that are `≤ 0`.
    #[default]
    PerValue,
    /// Share of paths with at least one monitored value `≤ 0`.
    PerPath,
}

impl Counting {
    /// Config spelling.
    pub fn name(&self) -> &'static str {
        match self {
            Self::PerValue => "per_value",
            Self::PerPath => "per_path",
        }
    }
}

impl FromStr for Counting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "per_value" | "values" => Ok(Self::PerValue),
            "per_path" | "paths" => Ok(Self::PerPath),
            _ => Err(Error::Config(format!("unknown counting mode `{s}` (expected per_value or per_path)"))),
        }
    }
}

/// Settings of one positivity cell.
#[derive(Debug, Clone)]
pub struct PositivityConfig {
    /// Scheme.
    pub scheme: SchemeKind,
    /// Step size.
    pub delta: f64,
    /// Horizon.
    pub t_end: f64,
    /// Number of paths.
    pub paths: usize,
    /// Seed shared by all paths.
    pub master_seed: u64,
    /// Clamp policy (PPTEM) and truncation radius (TEM).
    pub policy: TruncationPolicy,
    /// Which percentage is reported as `percent_nonpositive`.
    pub counting: Counting,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

/// One positivity cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityRow {
    /// Model actually simulated.
    pub model: String,
    /// Scheme.
    pub scheme: SchemeKind,
    /// Step size.
    pub delta: f64,
    /// Percentage under the configured counting mode.
    pub percent_nonpositive: f64,
    /// Percentage of nonpositive monitored values.
    pub percent_values: f64,
    /// Percentage of paths with a nonpositive monitored value.
    pub percent_paths: f64,
    /// Percentage of nonpositive values after the step (the clamped state for
    /// PPTEM, the iterate otherwise).
    pub post_step_percent: f64,
    /// Paths that diverged.
    pub diverged_paths: usize,
    /// Counting mode used for `percent_nonpositive`.
    pub counting: Counting,
}

#[derive(Default)]
struct Tally {
    values: u64,
    post: u64,
    hit: bool,
    diverged: bool,
}

/// Runs `paths` paths and counts nonpositive monitored iterates: the
/// pre-clamp value `X̃ₖ` for PPTEM and the iterate for EM and TEM.
pub fn positivity_stats(model: &ModelSpec, x0: &[f64], cfg: &PositivityConfig) -> Result<PositivityRow, Error> {
    let n = step_count(cfg.t_end, cfg.delta)?;
    if cfg.paths == 0 {
        return Err(Error::Config("path count must be positive".into()));
    }
    let iv = cfg.policy.clamp_interval(cfg.delta)?;
    let tallies: Vec<Tally> = with_workers(cfg.workers, || {
        (0..cfg.paths as u64)
            .into_par_iter()
            .map(|p| {
                let inc = IncrementGrid::generate(cfg.master_seed, p, n, model.noise_dim(), cfg.delta)?;
                let mut t = Tally::default();
                let mut count = |_: usize, pre: &[f64], post: &[f64]| {
                    t.values += pre.iter().filter(|&&v| v <= 0.0).count() as u64;
                    t.post += post.iter().filter(|&&v| v <= 0.0).count() as u64;
                };
                let s = integrate(model, cfg.scheme, cfg.delta, n, &inc, x0, &iv, &mut count)?;
                t.hit = t.values > 0;
                t.diverged = s.diverged();
                Ok(t)
            })
            .collect::<Result<Vec<_>, Error>>()
    })??;
    let total_values = (cfg.paths * n * model.dim()) as f64;
    let values: u64 = tallies.iter().map(|t| t.values).sum();
    let post: u64 = tallies.iter().map(|t| t.post).sum();
    let hits = tallies.iter().filter(|t| t.hit).count();
    let percent_values = 100.0 * values as f64 / total_values;
    let percent_paths = 100.0 * hits as f64 / cfg.paths as f64;
    Ok(PositivityRow {
        model: model.name().to_string(),
        scheme: cfg.scheme,
        delta: cfg.delta,
        percent_nonpositive: match cfg.counting {
            Counting::PerValue => percent_values,
            Counting::PerPath => percent_paths,
        },
        percent_values,
        percent_paths,
        post_step_percent: 100.0 * post as f64 / total_values,
        diverged_paths: tallies.iter().filter(|t| t.diverged).count(),
        counting: cfg.counting,
    })
}

/// A scheme × step-size positivity table for a catalog model.
#[derive(Debug, Clone)]
pub struct PositivityTableConfig<'a> {
    /// Catalog name.
    pub model: &'a str,
    /// Parameter overrides.
    pub params: &'a [(&'a str, f64)],
    /// Negative-argument convention for the explicit schemes.
    pub negative_argument: NegativeArgument,
    /// Policy overrides.
    pub policy: PolicyOverrides,
    /// Schemes, one block of rows each.
    pub schemes: &'a [SchemeKind],
    /// Step sizes.
    pub deltas: &'a [f64],
    /// Horizon; the model default when `None`.
    pub t_end: Option<f64>,
    /// Number of paths.
    pub paths: usize,
    /// Seed.
    pub master_seed: u64,
    /// Counting mode.
    pub counting: Counting,
    /// Worker threads.
    pub workers: Option<usize>,
}

/// Runs [`positivity_stats`] for every scheme and step size.
///
/// For the CEV model PPTEM runs on the Lamperti form `Y = X^(1-θ)`; since
/// `X > 0 ⇔ Y > 0` the counts carry over. EM and TEM run on the original
/// equation.
pub fn positivity_table(spec: &PositivityTableConfig<'_>) -> Result<Vec<PositivityRow>, Error> {
    let mut rows = Vec::with_capacity(spec.schemes.len() * spec.deltas.len());
    for &scheme in spec.schemes {
        let name = if scheme == SchemeKind::Pptem && matches!(spec.model, "cev") { "cev_lamperti" } else { spec.model };
        let entry = lookup(name, spec.params, spec.negative_argument)?;
        let policy = TruncationPolicy::for_model_with(&entry.spec, &spec.policy)?;
        for &delta in spec.deltas {
            let cfg = PositivityConfig {
                scheme,
                delta,
                t_end: spec.t_end.unwrap_or(entry.t_end),
                paths: spec.paths,
                master_seed: spec.master_seed,
                policy,
                counting: spec.counting,
                workers: spec.workers,
            };
            rows.push(positivity_stats(&entry.spec, &entry.x0, &cfg)?);
        }
    }
    Ok(rows)
}
