//! Bound functions and truncation mappings.
//!
//! With `γ = α ∨ (β + 1)` the bound function is `φ(R) = 2 H0 R^γ` for
//! `R > 1`. The step-size function `h` is fixed implicitly by choosing the
//! clamp edge directly,
//!
//! ```text
//! L(Δ) = φ⁻¹(h(Δ)) = K̂0 · Δ^(-k̄/γ),    h(Δ) = 2 H0 K̂0^γ Δ^(-k̄),
//! ```
//!
//! so `Δ^½ h(Δ) = 2 H0 K̂0^γ Δ^(½-k̄)` sits between `φ(K̂0) Δ^(½-k̄)` and
//! `Û = 2 H0 K̂0^γ` whenever `0 < k̄ ≤ ½`.
//!
//! [`ClampInterval::apply`] is the componentwise clamp into `[1/L, L]` used by
//! the positivity-preserving scheme; [`norm_truncate`] is the Euclidean-ball
//! projection used by the classic truncated EM comparator.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, ModelSpec, Result, StateVector};

/// Constants that define `φ`, `h` and the clamp interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    h0: f64,
    gamma: f64,
    k0_hat: f64,
    k_bar: f64,
    u_hat: f64,
}

/// Optional replacements for the model-derived policy constants.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PolicyOverrides {
    /// `H0`.
    pub h0: Option<f64>,
    /// `K̂0`.
    pub k0_hat: Option<f64>,
    /// `k̄`.
    pub k_bar: Option<f64>,
    /// `Û`; defaults to `2 H0 K̂0^γ` after the other overrides.
    pub u_hat: Option<f64>,
}

impl TruncationPolicy {
    /// Default `K̂0`.
    pub const DEFAULT_K0_HAT: f64 = 1.0;
    /// Default `k̄`.
    pub const DEFAULT_K_BAR: f64 = 0.5;

    /// Validated constructor.
    pub fn new(h0: f64, gamma: f64, k0_hat: f64, k_bar: f64, u_hat: f64) -> Result<Self> {
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(Error::OutOfDomain { name: "H0", value: h0, expected: "H0 > 0" });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::OutOfDomain { name: "gamma", value: gamma, expected: "gamma > 0" });
        }
        if !(k0_hat >= 1.0 && k0_hat.is_finite()) {
            return Err(Error::OutOfDomain { name: "K0_hat", value: k0_hat, expected: "K0_hat >= 1" });
        }
        if !(k_bar > 0.0 && k_bar <= 0.5) {
            return Err(Error::OutOfDomain { name: "k_bar", value: k_bar, expected: "0 < k_bar <= 1/2" });
        }
        if !(u_hat > 0.0 && u_hat.is_finite()) {
            return Err(Error::OutOfDomain { name: "U_hat", value: u_hat, expected: "U_hat > 0" });
        }
        Ok(Self { h0, gamma, k0_hat, k_bar, u_hat })
    }

    /// Policy with `K̂0 = 1`, `k̄ = ½` and `Û = 2 H0 K̂0^γ`.
    pub fn with_defaults(h0: f64, gamma: f64) -> Result<Self> {
        let k0 = Self::DEFAULT_K0_HAT;
        Self::new(h0, gamma, k0, Self::DEFAULT_K_BAR, 2.0 * h0 * math::powf(k0, gamma))
    }

    /// Default policy for `model`: `γ` from its declared exponents and `H0`
    /// from [`default_h0`].
    pub fn for_model(model: &ModelSpec) -> Result<Self> {
        Self::for_model_with(model, &PolicyOverrides::default())
    }

    /// As [`for_model`](Self::for_model) with selected constants replaced.
    pub fn for_model_with(model: &ModelSpec, overrides: &PolicyOverrides) -> Result<Self> {
        let gamma = model.growth().gamma();
        let h0 = overrides.h0.unwrap_or_else(|| default_h0(model));
        let k0 = overrides.k0_hat.unwrap_or(Self::DEFAULT_K0_HAT);
        let k_bar = overrides.k_bar.unwrap_or(Self::DEFAULT_K_BAR);
        let u_hat = overrides.u_hat.unwrap_or(2.0 * h0 * math::powf(k0, gamma));
        Self::new(h0, gamma, k0, k_bar, u_hat)
    }

    /// `H0`.
    pub fn h0(&self) -> f64 {
        self.h0
    }

    /// `γ = α ∨ (β + 1)`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `K̂0`.
    pub fn k0_hat(&self) -> f64 {
        self.k0_hat
    }

    /// `k̄`.
    pub fn k_bar(&self) -> f64 {
        self.k_bar
    }

    /// `Û`.
    pub fn u_hat(&self) -> f64 {
        self.u_hat
    }

    /// `φ(R) = 2 H0 R^γ`, defined for `R > 1`.
    pub fn phi(&self, r: f64) -> Result<f64> {
        if !(r > 1.0) {
            return Err(Error::OutOfDomain { name: "R", value: r, expected: "R > 1" });
        }
        Ok(self.phi_unchecked(r))
    }

    fn phi_unchecked(&self, r: f64) -> f64 {
        2.0 * self.h0 * math::powf(r, self.gamma)
    }

    /// `φ⁻¹(y) = (y / 2H0)^(1/γ)`, defined for `y > φ(1) = 2 H0`.
    pub fn phi_inv(&self, y: f64) -> Result<f64> {
        if !(y > 2.0 * self.h0) {
            return Err(Error::OutOfDomain { name: "y", value: y, expected: "y > phi(1) = 2*H0" });
        }
        Ok(math::powf(y / (2.0 * self.h0), 1.0 / self.gamma))
    }

    /// `h(Δ) = 2 H0 K̂0^γ Δ^(-k̄)` for `Δ ∈ (0, 1)`.
    pub fn h(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        Ok(2.0 * self.h0 * math::powf(self.k0_hat, self.gamma) * math::powf(delta, -self.k_bar))
    }

    /// Clamp edge `L(Δ) = K̂0 Δ^(-k̄/γ)`.
    pub fn clamp_upper(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        Ok(self.k0_hat * math::powf(delta, -self.k_bar / self.gamma))
    }

    /// The interval `[1/L(Δ), L(Δ)]` for step size `delta`.
    pub fn clamp_interval(&self, delta: f64) -> Result<ClampInterval> {
        ClampInterval::new(self.clamp_upper(delta)?)
    }

    /// Checks the admissibility constraints of `h` on the given step sizes.
    ///
    /// For every `Δ`: `h(Δ) > φ(1)` and
    /// `φ(K̂0) Δ^(½-k̄) ≤ Δ^½ h(Δ) ≤ Û`; across the sorted step sizes `h` must
    /// be strictly decreasing. Comparisons allow a relative rounding slack of
    /// `1e-12`.
    pub fn validate(&self, deltas: &[f64]) -> PolicyReport {
        let mut sorted: Vec<f64> = deltas.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut checks = Vec::with_capacity(sorted.len());
        let mut previous_h: Option<f64> = None;
        let phi_one = 2.0 * self.h0;
        let phi_k0 = 2.0 * self.h0 * math::powf(self.k0_hat, self.gamma);
        for &delta in &sorted {
            let Ok(h) = self.h(delta) else {
                checks.push(PolicyCheck::out_of_range(delta));
                continue;
            };
            let scaled = math::sqrt(delta) * h;
            let lower_bound = phi_k0 * math::powf(delta, 0.5 - self.k_bar);
            // Sorted ascending, so h of the previous (smaller) delta must be larger.
            let decreasing_margin = previous_h.map(|prev| relative_margin(prev, h));
            previous_h = Some(h);
            checks.push(PolicyCheck {
                delta,
                h,
                above_phi_one_margin: relative_margin(h, phi_one),
                lower_margin: relative_margin(scaled, lower_bound),
                upper_margin: relative_margin(self.u_hat, scaled),
                decreasing_margin,
            });
        }
        PolicyReport { checks }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain { name: "delta", value: delta, expected: "0 < delta < 1" })
    }
}

/// `(a - b) / max(|a|, |b|)`, so that `≥ -1e-12` means `a ≥ b` up to rounding.
fn relative_margin(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b) / scale
    }
}

/// `max(21 d^((α+1)/2) K1, |f(1)|)`, with `f(1)` the drift at the all-ones
/// state at time zero.
pub fn default_h0(model: &ModelSpec) -> f64 {
    let d = model.dim() as f64;
    let g = model.growth();
    let ones = StateVector::filled(model.dim(), 1.0);
    let f1 = model.drift(0.0, &ones).norm();
    let bound = 21.0 * math::powf(d, (g.alpha + 1.0) / 2.0) * model.lipschitz_scale();
    if f1.is_finite() {
        bound.max(f1)
    } else {
        bound
    }
}

/// Relative slack used by [`PolicyCheck::passed`].
pub const POLICY_TOLERANCE: f64 = 1e-12;

/// Outcome of [`TruncationPolicy::validate`] at one step size. Margins are
/// relative; a constraint holds when its margin is `≥ -POLICY_TOLERANCE`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyCheck {
    /// Step size.
    pub delta: f64,
    /// `h(Δ)`, NaN when `Δ ∉ (0, 1)`.
    pub h: f64,
    /// `h(Δ)` against `φ(1)`.
    pub above_phi_one_margin: f64,
    /// `Δ^½ h(Δ)` against `φ(K̂0) Δ^(½-k̄)`.
    pub lower_margin: f64,
    /// `Û` against `Δ^½ h(Δ)`.
    pub upper_margin: f64,
    /// `h` at the next smaller step size against `h(Δ)`; `None` for the smallest.
    pub decreasing_margin: Option<f64>,
}

impl PolicyCheck {
    fn out_of_range(delta: f64) -> Self {
        Self {
            delta,
            h: f64::NAN,
            above_phi_one_margin: f64::NAN,
            lower_margin: f64::NAN,
            upper_margin: f64::NAN,
            decreasing_margin: None,
        }
    }

    /// Whether every constraint holds at this step size.
    pub fn passed(&self) -> bool {
        let ok = |m: f64| m >= -POLICY_TOLERANCE;
        // Strict inequalities need a positive margin.
        self.above_phi_one_margin > 0.0
            && ok(self.lower_margin)
            && ok(self.upper_margin)
            && self.decreasing_margin.is_none_or(|m| m > 0.0)
    }
}

/// Per-step-size constraint checks, in ascending step size order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyReport {
    /// One entry per step size.
    pub checks: Vec<PolicyCheck>,
}

impl PolicyReport {
    /// True when every entry passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(PolicyCheck::passed)
    }

    /// The failing entries.
    pub fn failures(&self) -> impl Iterator<Item = &PolicyCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// The closed interval `[1/L, L]` with `L > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampInterval {
    lower: f64,
    upper: f64,
}

impl ClampInterval {
    /// Interval with the given upper edge; the lower edge is its reciprocal.
    pub fn new(upper: f64) -> Result<Self> {
        if !(upper > 1.0 && upper.is_finite()) {
            return Err(Error::OutOfDomain { name: "upper", value: upper, expected: "1 < upper < inf" });
        }
        Ok(Self { lower: 1.0 / upper, upper })
    }

    /// `1/L`.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// `L`.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Clamps one component. NaN maps to the lower edge.
    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }

    /// Writes `π(x)` into `out`.
    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), out.len());
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.clamp(v);
        }
    }

    /// Replaces `x` by `π(x)`.
    #[inline]
    pub fn apply_in_place(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = self.clamp(*v);
        }
    }

    /// True when every component lies strictly between the edges.
    pub fn contains_strictly(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v > self.lower && v < self.upper)
    }
}

/// The componentwise truncation `π_Δ(x)`: every component is clamped into
/// `[iv.lower(), iv.upper()]`, so the result is strictly positive for any
/// input in `ℝ^d`.
pub fn pi_delta(x: &[f64], iv: &ClampInterval) -> StateVector {
    x.iter().map(|&v| iv.clamp(v)).collect()
}

/// Projection onto the closed Euclidean ball of radius `bound`.
///
/// Returns `x` when `|x| ≤ bound` (including the zero vector), otherwise
/// `(bound/|x|) x`. Signs are preserved, so this cannot restore positivity.
pub fn norm_truncate(x: &[f64], bound: f64) -> StateVector {
    let mut out = StateVector::from(x);
    norm_truncate_in_place(&mut out, bound);
    out
}

/// In-place variant of [`norm_truncate`].
#[inline]
pub fn norm_truncate_in_place(x: &mut [f64], bound: f64) {
    let n = crate::state::norm(x);
    if n > bound && n > 0.0 {
        for v in x.iter_mut() {
            *v = *v * bound / n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::StreamRng;
    use approx::assert_relative_eq;

    fn unit_policy() -> TruncationPolicy {
        TruncationPolicy::new(1.0, 2.0, 1.0, 0.5, 2.0).unwrap()
    }

    #[test]
    fn phi_matches_formula() {
        let p = unit_policy();
        assert_eq!(p.phi(3.0).unwrap(), 18.0);
        assert_relative_eq!(p.phi(1.0 + 1e-12).unwrap(), 2.0, max_relative = 1e-10);
        assert!(p.phi(1.0).is_err());
        assert!(p.phi(0.5).is_err());
    }

    #[test]
    fn phi_is_strictly_increasing() {
        let p = TruncationPolicy::new(3.7, 2.5, 1.0, 0.5, 10.0).unwrap();
        let mut rng = StreamRng::new(11, 0);
        for _ in 0..10_000 {
            let a = 1.0 + 1e3 * rng.uniform_open();
            let b = 1.0 + 1e3 * rng.uniform_open();
            if a == b {
                continue;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            assert!(p.phi(lo).unwrap() < p.phi(hi).unwrap(), "{lo} {hi}");
        }
    }

    #[test]
    fn phi_inv_inverts_phi() {
        let p = unit_policy();
        assert_relative_eq!(p.phi_inv(18.0).unwrap(), 3.0, max_relative = 1e-15);
        assert!(p.phi_inv(2.0).is_err());

        let q = TruncationPolicy::new(12.5, 2.2, 1.0, 0.5, 25.0).unwrap();
        let mut rng = StreamRng::new(12, 0);
        for _ in 0..10_000 {
            // log-uniform over (1, 1e6)
            let r = math::exp(rng.uniform_open() * math::ln(1e6));
            if r <= 1.0 {
                continue;
            }
            let back = q.phi_inv(q.phi(r).unwrap()).unwrap();
            assert_relative_eq!(back, r, max_relative = 1e-12);
            let y = q.phi(r).unwrap();
            assert_relative_eq!(q.phi(back).unwrap(), y, max_relative = 1e-12);
        }
    }

    #[test]
    fn clamp_interval_examples() {
        let p = unit_policy();
        let iv = p.clamp_interval(1.0 / 16.0).unwrap();
        assert_relative_eq!(iv.upper(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(iv.lower(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(p.clamp_upper(1.0 / 256.0).unwrap(), 4.0, max_relative = 1e-15);
        assert!(p.clamp_interval(0.0).is_err());
        assert!(p.clamp_interval(1.0).is_err());
        assert!(p.clamp_interval(-0.1).is_err());
    }

    #[test]
    fn clamp_edge_realizes_h() {
        // With k̄ = 1/2, Δ^½ h(Δ) = φ(L(Δ)) Δ^½ is the constant 2 H0 K̂0^γ = Û.
        for (h0, gamma, k0) in [(1.0, 2.0, 1.0), (12.5, 2.0, 1.0), (3.0, 4.0, 1.7), (21.0, 1.5, 2.0)] {
            let u = 2.0 * h0 * math::powf(k0, gamma);
            let p = TruncationPolicy::new(h0, gamma, k0, 0.5, u).unwrap();
            for e in 1..=20 {
                let delta = math::powi(2.0, -e);
                let upper = p.clamp_upper(delta).unwrap();
                let implied_h = p.phi(upper).unwrap();
                assert_relative_eq!(implied_h, p.h(delta).unwrap(), max_relative = 1e-12);
                assert_relative_eq!(math::sqrt(delta) * implied_h, u, max_relative = 1e-12);
                assert_relative_eq!(p.phi_inv(p.h(delta).unwrap()).unwrap(), upper, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn clamp_edge_decreases_in_delta_and_diverges() {
        let p = TruncationPolicy::new(5.0, 2.2, 1.0, 0.5, 10.0).unwrap();
        let mut last = 0.0;
        // ascending delta
        for delta in (1..=40).rev().map(|e| math::powi(2.0, -e)) {
            let u = p.clamp_upper(delta).unwrap();
            if last != 0.0 {
                assert!(u < last);
            }
            last = u;
        }
        assert!(p.clamp_upper(math::powi(2.0, -60)).unwrap() > 1e3);
    }

    #[test]
    fn default_policy_validates() {
        let p = TruncationPolicy::with_defaults(12.5, 2.0).unwrap();
        let deltas: Vec<f64> = (1..=14).map(|e| math::powi(2.0, -e)).collect();
        let report = p.validate(&deltas);
        assert_eq!(report.checks.len(), 14);
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn smaller_k_bar_validates_with_slack() {
        let p = TruncationPolicy::new(2.0, 3.0, 1.5, 0.3, 2.0 * 2.0 * math::powf(1.5, 3.0)).unwrap();
        let deltas: Vec<f64> = (1..=14).map(|e| math::powi(2.0, -e)).collect();
        let report = p.validate(&deltas);
        assert!(report.passed());
        assert!(report.checks.iter().all(|c| c.upper_margin > 0.0));
    }

    #[test]
    fn k_bar_above_half_is_rejected() {
        assert!(TruncationPolicy::new(1.0, 2.0, 1.0, 0.6, 2.0).is_err());
        assert!(TruncationPolicy::new(1.0, 2.0, 1.0, 0.0, 2.0).is_err());
        assert!(TruncationPolicy::new(1.0, 2.0, 0.9, 0.5, 2.0).is_err());
        assert!(TruncationPolicy::new(1.0, 0.0, 1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn low_u_hat_fails_upper_constraint() {
        // Û below 2 H0 K̂0^γ = 2.
        let p = TruncationPolicy::new(1.0, 2.0, 1.0, 0.5, 1.5).unwrap();
        let report = p.validate(&[0.5, 0.25, 0.125]);
        assert!(!report.passed());
        for c in &report.checks {
            assert!(c.upper_margin < 0.0);
            assert!(c.lower_margin >= -POLICY_TOLERANCE);
        }
    }

    #[test]
    fn out_of_range_delta_fails_validation() {
        let report = unit_policy().validate(&[0.5, 1.5]);
        assert!(!report.passed());
        assert_eq!(report.failures().count(), 1);
    }

    #[test]
    fn pi_delta_examples() {
        let iv = ClampInterval::new(2.0).unwrap();
        assert_eq!(pi_delta(&[0.1, 1.0, 5.0], &iv).as_slice(), &[0.5, 1.0, 2.0]);
        assert_eq!(pi_delta(&[0.7, 1.9], &iv).as_slice(), &[0.7, 1.9]);
        assert_eq!(pi_delta(&[-3.0], &iv).as_slice(), &[0.5]);
        assert_eq!(pi_delta(&[f64::NEG_INFINITY, f64::INFINITY], &iv).as_slice(), &[0.5, 2.0]);
    }

    #[test]
    fn clamp_interval_edges_are_reciprocal() {
        let iv = ClampInterval::new(3.0).unwrap();
        assert_eq!(iv.lower(), 1.0 / 3.0);
        assert!(ClampInterval::new(1.0).is_err());
        assert!(ClampInterval::new(f64::INFINITY).is_err());
        assert!(iv.contains_strictly(&[1.0, 2.9]));
        assert!(!iv.contains_strictly(&[1.0, 3.0]));
    }

    #[test]
    fn norm_truncate_examples() {
        assert_eq!(norm_truncate(&[3.0, 4.0], 2.0).as_slice(), &[1.2, 1.6]);
        assert_eq!(norm_truncate(&[1.0, 1.0], 2.0).as_slice(), &[1.0, 1.0]);
        assert_eq!(norm_truncate(&[0.0, -5.0], 2.0).as_slice(), &[0.0, -2.0]);
        assert_eq!(norm_truncate(&[0.0, 0.0], 2.0).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn default_h0_uses_lipschitz_bound_or_drift_at_one() {
        let m = ModelSpec::from_fns("big", 1, 1, |_, x, o| o[0] = 1000.0 * x[0], |_, x, o| o[0] = x[0]);
        assert_eq!(default_h0(&m), 1000.0);
        let m = m.with_lipschitz_scale(2.0).unwrap();
        // 21 * 1^((1+1)/2) * 2 = 42 < 1000
        assert_eq!(default_h0(&m), 1000.0);
        let small = ModelSpec::from_fns("small", 3, 1, |_, _, o| o.fill(0.0), |_, _, o| o.fill(0.0))
            .with_growth(1.0, 0.5)
            .unwrap();
        assert_relative_eq!(default_h0(&small), 21.0 * 3.0, max_relative = 1e-14);
    }

    #[test]
    fn overrides_recompute_u_hat() {
        let m =
            ModelSpec::from_fns("m", 1, 1, |_, x, o| o[0] = x[0], |_, x, o| o[0] = x[0]).with_growth(2.0, 0.5).unwrap();
        let p = TruncationPolicy::for_model_with(
            &m,
            &PolicyOverrides { h0: Some(3.0), k0_hat: Some(2.0), ..Default::default() },
        )
        .unwrap();
        assert_eq!(p.u_hat(), 2.0 * 3.0 * 4.0);
        assert_eq!(p.gamma(), 2.0);
    }
}
