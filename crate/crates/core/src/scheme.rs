//! One-step integrators and path simulation.
//!
//! All three schemes share the explicit Euler–Maruyama update
//! `base + f(t, z) Δ + g(t, z) ΔB` and differ in where the coefficients are
//! evaluated and what is done afterwards:
//!
//! | scheme | `base` | `z` | post-processing |
//! |--------|--------|-----|-----------------|
//! | PPTEM  | `X_k`  | `X_k` | `X_{k+1} = π_Δ(X̃_{k+1})` |
//! | EM     | `X_k`  | `X_k` | none |
//! | TEM    | `X_k`  | norm-truncated `X_k` | none |
//!
//! PPTEM iterates start from a strictly positive state and are clamped into
//! `[1/L(Δ), L(Δ)]` after every step, so coefficients are only ever evaluated
//! inside the positive cone.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::noise::IncrementGrid;
use crate::state::{distance, in_positive_cone};
use crate::truncation::{norm_truncate_in_place, ClampInterval};
use crate::{Error, ModelSpec, NegativeArgument, Result, StateVector};

/// The available integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    /// Explicit Euler–Maruyama.
    Em,
    /// Euler–Maruyama with coefficients evaluated at the norm-truncated state.
    TemNorm,
    /// Positivity-preserving truncated Euler–Maruyama.
    Pptem,
}

impl SchemeKind {
    /// Every scheme, in table order.
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Pptem, SchemeKind::Em, SchemeKind::TemNorm];

    /// Short lowercase name used in file names and configs.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Em => "em",
            Self::TemNorm => "tem",
            Self::Pptem => "pptem",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(Self::Em),
            "tem" | "tem_norm" => Ok(Self::TemNorm),
            "pptem" => Ok(Self::Pptem),
            _ => Err(Error::OutOfDomain { name: "scheme", value: f64::NAN, expected: "em, tem or pptem" }),
        }
    }
}

/// A step produced a NaN or infinite state, or evaluated singular
/// coefficients off the positive cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("iterate diverged")]
pub struct Diverged;

/// Reusable coefficient buffers for stepping one model.
#[derive(Debug)]
pub struct Stepper<'m> {
    model: &'m ModelSpec,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    point: Vec<f64>,
}

impl<'m> Stepper<'m> {
    /// Buffers sized for `model`.
    pub fn new(model: &'m ModelSpec) -> Self {
        let d = model.dim();
        Self { model, drift: vec![0.0; d], diffusion: vec![0.0; d * model.noise_dim()], point: vec![0.0; d] }
    }

    /// The model being stepped.
    pub fn model(&self) -> &'m ModelSpec {
        self.model
    }

    /// `out = base + f(t, z) Δ + g(t, z) dw` with `z = self.point`.
    #[inline]
    fn euler_at_point(&mut self, t: f64, base: &[f64], delta: f64, dw: &[f64], out: &mut [f64]) {
        let m = self.model.noise_dim();
        self.model.drift_into(t, &self.point, &mut self.drift);
        self.model.diffusion_into(t, &self.point, &mut self.diffusion);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.diffusion[i * m..(i + 1) * m];
            let noise: f64 = row.iter().zip(dw).map(|(g, w)| g * w).sum();
            *o = base[i] + self.drift[i] * delta + noise;
        }
    }

    fn off_domain(&self, z: &[f64]) -> bool {
        self.model.has_singular_terms()
            && self.model.negative_argument() == NegativeArgument::Undefined
            && !in_positive_cone(z)
    }

    /// One PPTEM step from the clamped state `x`.
    ///
    /// Writes `X̃ = x + f(x)Δ + g(x)dw` into `tilde` and `π(X̃)` into `next`.
    /// A non-finite `X̃` is reported as [`Diverged`]; `next` then holds the
    /// clamp of whatever was computed.
    #[allow(clippy::too_many_arguments)]
    pub fn pptem(
        &mut self,
        t: f64,
        x: &[f64],
        delta: f64,
        dw: &[f64],
        iv: &ClampInterval,
        tilde: &mut [f64],
        next: &mut [f64],
    ) -> Result<(), Diverged> {
        self.point.copy_from_slice(x);
        self.euler_at_point(t, x, delta, dw, tilde);
        iv.apply(tilde, next);
        if tilde.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Diverged)
        }
    }

    /// One explicit Euler–Maruyama step.
    pub fn em(&mut self, t: f64, x: &[f64], delta: f64, dw: &[f64], out: &mut [f64]) -> Result<(), Diverged> {
        self.point.copy_from_slice(x);
        self.explicit(t, x, delta, dw, out)
    }

    /// One norm-truncated EM step with coefficients evaluated at the
    /// projection of `x` onto the ball of radius `bound`.
    pub fn tem(
        &mut self,
        t: f64,
        x: &[f64],
        delta: f64,
        dw: &[f64],
        bound: f64,
        out: &mut [f64],
    ) -> Result<(), Diverged> {
        self.point.copy_from_slice(x);
        norm_truncate_in_place(&mut self.point, bound);
        self.explicit(t, x, delta, dw, out)
    }

    fn explicit(&mut self, t: f64, x: &[f64], delta: f64, dw: &[f64], out: &mut [f64]) -> Result<(), Diverged> {
        if !x.iter().all(|v| v.is_finite()) || self.off_domain(&self.point) {
            out.fill(f64::NAN);
            return Err(Diverged);
        }
        self.euler_at_point(t, x, delta, dw, out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Diverged)
        }
    }

    /// The one-step map `Ψ(x) = π(x) + f(π(x))Δ + g(π(x))dw`.
    pub fn psi(&mut self, t: f64, x: &[f64], delta: f64, dw: &[f64], iv: &ClampInterval, out: &mut [f64]) {
        iv.apply(x, &mut self.point);
        let base = self.point.clone();
        self.euler_at_point(t, &base, delta, dw, out);
    }

    /// One step of `scheme`. `tilde` receives the pre-clamp value (the
    /// iterate itself for EM/TEM) and `next` the new state.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    pub fn step(
        &mut self,
        scheme: SchemeKind,
        t: f64,
        x: &[f64],
        delta: f64,
        dw: &[f64],
        iv: &ClampInterval,
        tilde: &mut [f64],
        next: &mut [f64],
    ) -> Result<(), Diverged> {
        let res = match scheme {
            SchemeKind::Pptem => return self.pptem(t, x, delta, dw, iv, tilde, next),
            SchemeKind::Em => self.em(t, x, delta, dw, tilde),
            SchemeKind::TemNorm => self.tem(t, x, delta, dw, iv.upper(), tilde),
        };
        next.copy_from_slice(tilde);
        res
    }
}

/// One PPTEM step: returns `(X̃_{k+1}, X_{k+1})`.
pub fn pptem_step(
    model: &ModelSpec,
    t: f64,
    x: &[f64],
    delta: f64,
    dw: &[f64],
    iv: &ClampInterval,
) -> Result<(StateVector, StateVector), Diverged> {
    let mut tilde = StateVector::zeros(model.dim());
    let mut next = StateVector::zeros(model.dim());
    Stepper::new(model).pptem(t, x, delta, dw, iv, &mut tilde, &mut next)?;
    Ok((tilde, next))
}

/// One explicit Euler–Maruyama step.
///
/// Diverges when the result is not finite, or when `x` leaves the positive
/// cone for a model with singular terms and
/// [`NegativeArgument::Undefined`] coefficients.
pub fn em_step(model: &ModelSpec, t: f64, x: &[f64], delta: f64, dw: &[f64]) -> Result<StateVector, Diverged> {
    let mut out = StateVector::zeros(model.dim());
    Stepper::new(model).em(t, x, delta, dw, &mut out)?;
    Ok(out)
}

/// One norm-truncated EM step with truncation radius `bound`.
pub fn tem_step(
    model: &ModelSpec,
    t: f64,
    x: &[f64],
    delta: f64,
    dw: &[f64],
    bound: f64,
) -> Result<StateVector, Diverged> {
    let mut out = StateVector::zeros(model.dim());
    Stepper::new(model).tem(t, x, delta, dw, bound, &mut out)?;
    Ok(out)
}

/// The one-step map `Ψ(x, Δ) = π(x) + f(π(x))Δ + g(π(x))ΔB`.
///
/// Unlike [`pptem_step`], `Ψ` clamps its input first; iterating it on the
/// pre-clamp values reproduces the PPTEM chain.
pub fn one_step_psi(model: &ModelSpec, t: f64, x: &[f64], delta: f64, dw: &[f64], iv: &ClampInterval) -> StateVector {
    let mut out = StateVector::zeros(model.dim());
    Stepper::new(model).psi(t, x, delta, dw, iv, &mut out);
    out
}

/// Receives every step of [`integrate`]: the step number `k ≥ 1`, the
/// pre-clamp value and the state after the step.
pub trait PathObserver {
    /// Called once per completed step.
    fn observe(&mut self, step: usize, pre_clamp: &[f64], post_clamp: &[f64]);
}

impl<F: FnMut(usize, &[f64], &[f64])> PathObserver for F {
    fn observe(&mut self, step: usize, pre_clamp: &[f64], post_clamp: &[f64]) {
        self(step, pre_clamp, post_clamp)
    }
}

/// Ignores every step.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl PathObserver for NoObserver {
    fn observe(&mut self, _: usize, _: &[f64], _: &[f64]) {}
}

/// What a path run reports besides what its observer saw.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    /// State after the last step; NaN components if the path diverged.
    pub terminal: StateVector,
    /// Step at which the path diverged.
    pub diverged_at: Option<usize>,
    /// First step whose monitored value had a component `≤ 0`. The monitored
    /// value is the pre-clamp iterate for PPTEM and the iterate otherwise.
    pub first_nonpositive_step: Option<usize>,
    /// Number of steps whose monitored value had a component `≤ 0`.
    pub nonpositive_steps: usize,
    /// Steps carried out, including a diverging one.
    pub steps_taken: usize,
}

impl PathSummary {
    /// True when the path diverged.
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

fn check_inputs(model: &ModelSpec, delta: f64, n_steps: usize, increments: &IncrementGrid, x0: &[f64]) -> Result<()> {
    if x0.len() != model.dim() {
        return Err(Error::DimensionMismatch { what: "initial state", expected: model.dim(), found: x0.len() });
    }
    if increments.noise_dim() != model.noise_dim() {
        return Err(Error::DimensionMismatch {
            what: "increment columns",
            expected: model.noise_dim(),
            found: increments.noise_dim(),
        });
    }
    if increments.n_steps() < n_steps {
        return Err(Error::DimensionMismatch {
            what: "increment rows",
            expected: n_steps,
            found: increments.n_steps(),
        });
    }
    if (increments.delta() - delta).abs() > 1e-12 * delta {
        return Err(Error::OutOfDomain {
            name: "delta",
            value: delta,
            expected: "delta equal to the increment grid step",
        });
    }
    if !in_positive_cone(x0) || !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::OutOfDomain { name: "x0", value: f64::NAN, expected: "a finite, strictly positive state" });
    }
    Ok(())
}

/// Runs `n_steps` of `scheme` from `x0` on the uniform grid `t_k = kΔ`,
/// feeding every step to `observer`. Stops at the first divergence.
///
/// `iv` is the clamp interval for PPTEM; its upper edge is the truncation
/// radius for TEM; EM ignores it.
#[allow(clippy::too_many_arguments)]
pub fn integrate<O: PathObserver + ?Sized>(
    model: &ModelSpec,
    scheme: SchemeKind,
    delta: f64,
    n_steps: usize,
    increments: &IncrementGrid,
    x0: &[f64],
    iv: &ClampInterval,
    observer: &mut O,
) -> Result<PathSummary> {
    check_inputs(model, delta, n_steps, increments, x0)?;
    let d = model.dim();
    let mut stepper = Stepper::new(model);
    let mut x = x0.to_vec();
    let mut tilde = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut summary = PathSummary {
        terminal: StateVector::zeros(d),
        diverged_at: None,
        first_nonpositive_step: None,
        nonpositive_steps: 0,
        steps_taken: 0,
    };
    for k in 0..n_steps {
        let t = k as f64 * delta;
        let res = stepper.step(scheme, t, &x, delta, increments.step(k), iv, &mut tilde, &mut next);
        summary.steps_taken = k + 1;
        observer.observe(k + 1, &tilde, &next);
        if tilde.iter().any(|&v| v <= 0.0) {
            summary.nonpositive_steps += 1;
            summary.first_nonpositive_step.get_or_insert(k + 1);
        }
        if res.is_err() {
            summary.diverged_at = Some(k + 1);
            summary.terminal = StateVector::filled(d, f64::NAN);
            return Ok(summary);
        }
        core::mem::swap(&mut x, &mut next);
    }
    summary.terminal = StateVector::new(x);
    Ok(summary)
}

/// A full discrete path of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `t_k = kΔ`, `k = 0..=N`.
    pub times: Vec<f64>,
    /// `X̃_k`; equal to `post_clamp` for EM and TEM.
    pub pre_clamp: Vec<StateVector>,
    /// `X_k`.
    pub post_clamp: Vec<StateVector>,
    /// Whether the iteration diverged. Entries after the diverging step are NaN.
    pub diverged: bool,
    /// First step whose monitored value had a nonpositive component.
    pub first_nonpositive_step: Option<usize>,
}

impl Trajectory {
    /// Number of steps `N`.
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Final state.
    pub fn terminal(&self) -> &StateVector {
        self.post_clamp.last().expect("trajectory holds at least the initial state")
    }
}

/// Simulates one path and keeps every state.
#[allow(clippy::too_many_arguments)]
pub fn simulate_path(
    model: &ModelSpec,
    scheme: SchemeKind,
    delta: f64,
    n_steps: usize,
    increments: &IncrementGrid,
    x0: &[f64],
    iv: &ClampInterval,
) -> Result<Trajectory> {
    let mut pre = Vec::with_capacity(n_steps + 1);
    let mut post = Vec::with_capacity(n_steps + 1);
    pre.push(StateVector::from(x0));
    post.push(StateVector::from(x0));
    let mut record = |_: usize, a: &[f64], b: &[f64]| {
        pre.push(StateVector::from(a));
        post.push(StateVector::from(b));
    };
    let summary = integrate(model, scheme, delta, n_steps, increments, x0, iv, &mut record)?;
    let d = model.dim();
    while pre.len() < n_steps + 1 {
        pre.push(StateVector::filled(d, f64::NAN));
        post.push(StateVector::filled(d, f64::NAN));
    }
    Ok(Trajectory {
        times: (0..=n_steps).map(|k| k as f64 * delta).collect(),
        pre_clamp: pre,
        post_clamp: post,
        diverged: summary.diverged(),
        first_nonpositive_step: summary.first_nonpositive_step,
    })
}

/// Smallest `C` with
/// `|π(x) - π(y) + (f(π x) - f(π y))Δ|² + Δ|g(π x) - g(π y)|² ≤ (1 + CΔ)|x - y|²`
/// over the given pairs. Pairs with `x = y` are skipped; returns `-∞` if
/// none remain.
pub fn empirical_contraction_constant<'a, I>(model: &ModelSpec, t: f64, delta: f64, iv: &ClampInterval, pairs: I) -> f64
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let d = model.dim();
    let (mut px, mut py) = (vec![0.0; d], vec![0.0; d]);
    let (mut fx, mut fy) = (vec![0.0; d], vec![0.0; d]);
    let m = model.noise_dim();
    let (mut gx, mut gy) = (vec![0.0; d * m], vec![0.0; d * m]);
    let mut worst = f64::NEG_INFINITY;
    for (x, y) in pairs {
        let dist = distance(x, y);
        if dist == 0.0 {
            continue;
        }
        iv.apply(x, &mut px);
        iv.apply(y, &mut py);
        model.drift_into(t, &px, &mut fx);
        model.drift_into(t, &py, &mut fy);
        model.diffusion_into(t, &px, &mut gx);
        model.diffusion_into(t, &py, &mut gy);
        let drift_part: f64 = (0..d)
            .map(|i| {
                let v = px[i] - py[i] + (fx[i] - fy[i]) * delta;
                v * v
            })
            .sum();
        let noise_part: f64 = gx.iter().zip(&gy).map(|(a, b)| (a - b) * (a - b)).sum();
        let ratio = (drift_part + delta * noise_part) / (dist * dist);
        worst = worst.max((ratio - 1.0) / delta);
    }
    worst
}
