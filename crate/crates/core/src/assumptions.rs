//! Sampling and grid checks of the coefficient hypotheses.
//!
//! The checks estimate constants empirically and report a witness for the
//! worst case found. They cannot prove that a hypothesis holds.
//!
//! * [`check_lipschitz_growth`]: the local Lipschitz bound
//!   `|f(x)-f(y)| ∨ |g(x)-g(y)| ≤ K1(1+|x|^α+|y|^α+|x|^-β+|y|^-β)|x-y|`.
//! * [`check_dissipativity`]: per component, a threshold `x̄ᵢ` with
//!   `xᵢfⁱ - (q̄+1)/2·|gᵢ|² ≥ 0` for `xᵢ < x̄ᵢ` and
//!   `xᵢfⁱ + (p̄-1)/2·|gᵢ|² ≤ K₂ᵢ(1+xᵢ²)` for `xᵢ ≥ x̄ᵢ`.
//! * [`check_monotonicity`]: the one-sided bound
//!   `⟨x-y, f(x)-f(y)⟩ + (p-1)/2·|g(x)-g(y)|² ≤ K3|x-y|²`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ln, powf};
use crate::noise::StreamRng;
use crate::state::{distance, norm};
use crate::{Error, GrowthExponents, ModelSpec, Result, StateVector};

/// Absolute tolerance on margins.
pub const TOLERANCE: f64 = 1e-9;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Which hypothesis was checked.
    pub id: &'static str,
    /// `worst_margin ≥ -TOLERANCE`.
    pub pass: bool,
    /// Smallest margin found; negative means violated.
    pub worst_margin: f64,
    /// Input(s) at which the worst margin occurred.
    pub witness: Vec<StateVector>,
    /// Time at which the worst margin occurred.
    pub witness_time: f64,
    /// Estimated constants by name.
    pub constants: Vec<(String, f64)>,
}

impl AssumptionReport {
    fn new(id: &'static str, worst_margin: f64, witness: Vec<StateVector>, witness_time: f64) -> Self {
        Self { id, pass: worst_margin >= -TOLERANCE, worst_margin, witness, witness_time, constants: Vec::new() }
    }

    /// Looks up an estimated constant.
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// A componentwise box `[lowerᵢ, upperᵢ]` inside the positive cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Region {
    /// Box with the given corners; needs `0 < lowerᵢ ≤ upperᵢ < ∞`.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { what: "region corners", expected: lower.len(), found: upper.len() });
        }
        for (&l, &u) in lower.iter().zip(&upper) {
            if !(l > 0.0 && l <= u && u.is_finite()) {
                return Err(Error::OutOfDomain { name: "region", value: l, expected: "0 < lower <= upper < inf" });
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| {
                let (a, b) = (ln(l), ln(u));
                exp(a + (b - a) * rng.uniform()).clamp(l, u)
            })
            .collect()
    }
}

/// Sample count, seed and evaluation times for the pair-sampling checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampling {
    /// Number of pairs.
    pub n_samples: usize,
    /// Seed of the sampling stream.
    pub seed: u64,
    /// Times at which coefficients are evaluated, cycled over samples.
    pub times: Vec<f64>,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { n_samples: 10_000, seed: 0, times: vec![0.0] }
    }
}

/// Draws pairs: half independent, half with `y` a relative perturbation of
/// `x` (where suprema of difference quotients tend to sit).
fn pairs<'a>(region: &'a Region, sampling: &'a Sampling) -> impl Iterator<Item = (Vec<f64>, Vec<f64>, f64)> + 'a {
    let mut rng = StreamRng::new(sampling.seed, 0xA55);
    let times = if sampling.times.is_empty() { &[0.0][..] } else { &sampling.times[..] };
    (0..sampling.n_samples).map(move |k| {
        let x = region.sample(&mut rng);
        let y = if k % 2 == 0 {
            region.sample(&mut rng)
        } else {
            let scale = powf(10.0, -1.0 - 5.0 * rng.uniform());
            x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    (v * (1.0 + scale * (2.0 * rng.uniform() - 1.0))).clamp(region.lower[i], region.upper[i])
                })
                .collect()
        };
        (x, y, times[k % times.len()])
    })
}

fn check_dim(model: &ModelSpec, region: &Region) -> Result<()> {
    if region.dim() != model.dim() {
        return Err(Error::DimensionMismatch { what: "region", expected: model.dim(), found: region.dim() });
    }
    Ok(())
}

/// Samples the difference quotient of the local Lipschitz bound and compares
/// its supremum (the empirical `K1`) with the declared `K1`.
///
/// Margin: `declared K1 - empirical K1`.
pub fn check_lipschitz_growth(model: &ModelSpec, region: &Region, sampling: &Sampling) -> Result<AssumptionReport> {
    check_dim(model, region)?;
    let GrowthExponents { alpha, beta } = model.growth();
    let (mut worst, mut witness, mut at) = (0.0f64, Vec::new(), 0.0);
    for (x, y, t) in pairs(region, sampling) {
        let dist = distance(&x, &y);
        if dist == 0.0 {
            continue;
        }
        let df = distance(&model.drift(t, &x), &model.drift(t, &y));
        let dg = distance(&model.diffusion(t, &x), &model.diffusion(t, &y));
        let (nx, ny) = (norm(&x), norm(&y));
        let weight = 1.0 + powf(nx, alpha) + powf(ny, alpha) + powf(nx, -beta) + powf(ny, -beta);
        let ratio = df.max(dg) / (weight * dist);
        if !(ratio <= worst) {
            worst = ratio;
            witness = vec![StateVector::new(x), StateVector::new(y)];
            at = t;
            if ratio.is_nan() {
                break;
            }
        }
    }
    let declared = model.lipschitz_scale();
    let mut report = AssumptionReport::new("lipschitz_growth", declared - worst, witness, at);
    report.constants = vec![("K1".into(), worst), ("K1_declared".into(), declared)];
    Ok(report)
}

/// Grid for [`check_dissipativity`].
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityGrid {
    /// Log-spaced points per component.
    pub points: usize,
    /// Smallest grid value.
    pub lower: f64,
    /// Largest grid value.
    pub upper: f64,
    /// Times at which coefficients are evaluated.
    pub times: Vec<f64>,
    /// Bisection steps used to refine each threshold between grid points.
    pub refine_steps: usize,
}

impl Default for DissipativityGrid {
    fn default() -> Self {
        Self { points: 64, lower: 1e-3, upper: 1e3, times: vec![0.0], refine_steps: 60 }
    }
}

impl DissipativityGrid {
    fn values(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let (a, b) = (ln(self.lower), ln(self.upper));
        (0..n).map(|k| exp(a + (b - a) * k as f64 / (n - 1) as f64)).collect()
    }
}

struct Margins<'a> {
    model: &'a ModelSpec,
    p_bar: f64,
    q_bar: f64,
    grid: Vec<f64>,
    times: &'a [f64],
    f: Vec<f64>,
    g: Vec<f64>,
}

impl Margins<'_> {
    /// Worst small-x margin and worst large-x quotient over all grid states
    /// whose `i`th component equals `xi`.
    fn slice(&mut self, i: usize, xi: f64) -> ((f64, Vec<f64>, f64), f64) {
        let d = self.model.dim();
        let m = self.model.noise_dim();
        let others = d - 1;
        let n = self.grid.len();
        let total = n.pow(others as u32);
        let mut x = vec![0.0; d];
        let mut small = (f64::INFINITY, Vec::new(), 0.0);
        let mut large = f64::NEG_INFINITY;
        for idx in 0..total {
            let mut rest = idx;
            for (j, slot) in x.iter_mut().enumerate() {
                if j == i {
                    *slot = xi;
                } else {
                    *slot = self.grid[rest % n];
                    rest /= n;
                }
            }
            for &t in self.times {
                self.model.drift_into(t, &x, &mut self.f);
                self.model.diffusion_into(t, &x, &mut self.g);
                let gi2: f64 = self.g[i * m..(i + 1) * m].iter().map(|v| v * v).sum();
                let xf = xi * self.f[i];
                let s = xf - 0.5 * (self.q_bar + 1.0) * gi2;
                if !(s >= small.0) {
                    small = (s, x.clone(), t);
                }
                let l = (xf + 0.5 * (self.p_bar - 1.0) * gi2) / (1.0 + xi * xi);
                if !(l <= large) {
                    large = l;
                }
            }
        }
        (small, large)
    }
}

/// Searches each component for the largest threshold `x̄ᵢ` such that the
/// small-`x` inequality holds on every grid state with `xᵢ < x̄ᵢ`, refines it
/// by bisection, and estimates `K₂ᵢ` on the states with `xᵢ ≥ x̄ᵢ`.
///
/// Other components range over the full grid. A component fails when the
/// small-`x` inequality is already violated at the smallest grid value, or
/// when `K₂ᵢ` is not finite. Constants are reported as `xbar_i` and `K2_i`
/// (1-based `i`).
pub fn check_dissipativity(
    model: &ModelSpec,
    p_bar: f64,
    q_bar: f64,
    grid: &DissipativityGrid,
) -> Result<AssumptionReport> {
    if !(p_bar > 1.0) {
        return Err(Error::OutOfDomain { name: "p_bar", value: p_bar, expected: "p_bar > 1" });
    }
    if !(q_bar > 0.0) {
        return Err(Error::OutOfDomain { name: "q_bar", value: q_bar, expected: "q_bar > 0" });
    }
    if !(grid.lower > 0.0 && grid.lower < grid.upper && grid.upper.is_finite()) {
        return Err(Error::OutOfDomain { name: "grid", value: grid.lower, expected: "0 < lower < upper < inf" });
    }
    let times = if grid.times.is_empty() { &[0.0][..] } else { &grid.times[..] };
    let mut m = Margins {
        model,
        p_bar,
        q_bar,
        grid: grid.values(),
        times,
        f: vec![0.0; model.dim()],
        g: vec![0.0; model.dim() * model.noise_dim()],
    };
    let values = m.grid.clone();
    let mut constants = Vec::new();
    let mut worst = (f64::INFINITY, Vec::new(), 0.0);
    for i in 0..model.dim() {
        let slices: Vec<_> = values.iter().map(|&v| m.slice(i, v)).collect();
        let accepted = slices.iter().take_while(|(s, _)| s.0 >= -TOLERANCE).count();
        let component_worst;
        let xbar;
        if accepted == 0 {
            component_worst = slices[0].0.clone();
            xbar = f64::NAN;
        } else {
            component_worst = slices[..accepted]
                .iter()
                .map(|(s, _)| s.clone())
                .fold((f64::INFINITY, Vec::new(), 0.0), |a, b| if b.0 < a.0 { b } else { a });
            if accepted == values.len() {
                xbar = values[accepted - 1];
            } else {
                let (mut ok, mut bad) = (values[accepted - 1], values[accepted]);
                for _ in 0..grid.refine_steps {
                    let mid = 0.5 * (ok + bad);
                    if m.slice(i, mid).0 .0 >= -TOLERANCE {
                        ok = mid;
                    } else {
                        bad = mid;
                    }
                }
                xbar = ok;
            }
        }
        let k2 = if xbar.is_nan() {
            f64::NAN
        } else {
            let at_threshold = m.slice(i, xbar).1;
            slices[accepted..].iter().map(|(_, l)| *l).fold(at_threshold, f64::max)
        };
        let margin = if k2.is_finite() { component_worst.0 } else { component_worst.0.min(-f64::INFINITY) };
        if !(margin >= worst.0) {
            worst = (margin, component_worst.1, component_worst.2);
        }
        constants.push((format!("xbar_{}", i + 1), xbar));
        constants.push((format!("K2_{}", i + 1), k2));
    }
    let witness = if worst.1.is_empty() { Vec::new() } else { vec![StateVector::new(worst.1)] };
    let mut report = AssumptionReport::new("dissipativity", worst.0, witness, worst.2);
    report.constants = constants;
    Ok(report)
}

/// Samples the one-sided Lipschitz quotient
/// `(⟨x-y, f(x)-f(y)⟩ + (p-1)/2·|g(x)-g(y)|²)/|x-y|²` and reports its
/// supremum as `K3`.
///
/// With a `budget` the margin is `budget - K3`; otherwise the check passes
/// whenever `K3` is finite and the margin is `0`.
pub fn check_monotonicity(
    model: &ModelSpec,
    p: f64,
    region: &Region,
    sampling: &Sampling,
    budget: Option<f64>,
) -> Result<AssumptionReport> {
    if !(p > 2.0) {
        return Err(Error::OutOfDomain { name: "p", value: p, expected: "p > 2" });
    }
    check_dim(model, region)?;
    let (mut k3, mut witness, mut at) = (f64::NEG_INFINITY, Vec::new(), 0.0);
    for (x, y, t) in pairs(region, sampling) {
        let dist = distance(&x, &y);
        if dist == 0.0 {
            continue;
        }
        let (fx, fy) = (model.drift(t, &x), model.drift(t, &y));
        let inner: f64 = (0..x.len()).map(|i| (x[i] - y[i]) * (fx[i] - fy[i])).sum();
        let dg = distance(&model.diffusion(t, &x), &model.diffusion(t, &y));
        let q = (inner + 0.5 * (p - 1.0) * dg * dg) / (dist * dist);
        if !(q <= k3) {
            k3 = q;
            witness = vec![StateVector::new(x), StateVector::new(y)];
            at = t;
            if q.is_nan() {
                break;
            }
        }
    }
    let margin = match budget {
        Some(b) => b - k3,
        None if k3.is_finite() => 0.0,
        None => f64::NEG_INFINITY,
    };
    let mut report = AssumptionReport::new("monotonicity", margin, witness, at);
    report.constants = vec![("K3".into(), k3)];
    if let Some(b) = budget {
        report.constants.push(("K3_budget".into(), b));
    }
    Ok(report)
}

/// One arithmetic relation between the exponents required by the rate result.
#[derive(Debug, Clone, PartialEq)]
pub struct Precondition {
    /// Human-readable relation.
    pub relation: &'static str,
    /// Left side.
    pub lhs: f64,
    /// Right side.
    pub rhs: f64,
    /// Whether `lhs ≤ rhs` holds (up to [`TOLERANCE`]).
    pub holds: bool,
}

/// The relations `2(α+1) ≤ p̄`, `2β ≤ q̄` and `α ∨ (β+1) ≤ p̄ + q̄`.
pub fn theorem_preconditions(growth: GrowthExponents, p_bar: f64, q_bar: f64) -> Vec<Precondition> {
    let rel = |relation, lhs: f64, rhs: f64| Precondition { relation, lhs, rhs, holds: lhs <= rhs + TOLERANCE };
    vec![
        rel("2(alpha + 1) <= p_bar", 2.0 * (growth.alpha + 1.0), p_bar),
        rel("2 beta <= q_bar", 2.0 * growth.beta, q_bar),
        rel("alpha v (beta + 1) <= p_bar + q_bar", growth.gamma(), p_bar + q_bar),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GinzburgLandauParams, SirsParams};

    fn scalar(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> ModelSpec {
        ModelSpec::from_fns("scalar", 1, 1, move |_, x, o| o[0] = f(x[0]), move |_, x, o| o[0] = g(x[0]))
    }

    fn gl() -> ModelSpec {
        GinzburgLandauParams::default().build().unwrap()
    }

    fn sampling(n: usize) -> Sampling {
        Sampling { n_samples: n, ..Sampling::default() }
    }

    #[test]
    fn gl_growth_constant_is_finite_and_stabilizes() {
        let region = Region::cube(1, 0.01, 100.0).unwrap();
        let small = check_lipschitz_growth(&gl(), &region, &sampling(1_000)).unwrap();
        let large = check_lipschitz_growth(&gl(), &region, &sampling(20_000)).unwrap();
        let (a, b) = (small.constant("K1").unwrap(), large.constant("K1").unwrap());
        assert!(a.is_finite() && b.is_finite());
        assert!(b >= a);
        assert!(b <= 1.2 * a, "K1 keeps growing: {a} -> {b}");
        assert_eq!(large.witness.len(), 2);
    }

    #[test]
    fn linear_model_bounded_by_operator_norm() {
        let a = -3.0;
        let m = scalar(move |x| a * x, |_| 0.0);
        let r = check_lipschitz_growth(&m, &Region::cube(1, 0.1, 10.0).unwrap(), &sampling(5_000)).unwrap();
        // weight ≥ 1 so the quotient is at most |A|
        assert!(r.constant("K1").unwrap() <= 3.0 + 1e-12);
    }

    #[test]
    fn exponential_drift_violates_polynomial_growth() {
        let m = scalar(f64::exp, |_| 0.0).with_growth(2.0, 0.5).unwrap();
        let narrow = check_lipschitz_growth(&m, &Region::cube(1, 0.01, 10.0).unwrap(), &sampling(5_000)).unwrap();
        let wide = check_lipschitz_growth(&m, &Region::cube(1, 0.01, 100.0).unwrap(), &sampling(5_000)).unwrap();
        let (a, b) = (narrow.constant("K1").unwrap(), wide.constant("K1").unwrap());
        assert!(b > 1e30 * a, "{a} {b}");
        assert!(!wide.pass);
    }

    #[test]
    fn gl_threshold_matches_closed_form() {
        // x f - (q̄+1)/2 σ² x² = x²(13.5 - 12.5(q̄+1) - x²)
        let r = check_dissipativity(&gl(), 4.0, 0.05, &DissipativityGrid::default()).unwrap();
        assert!(r.pass);
        let xbar = r.constant("xbar_1").unwrap();
        assert!((xbar - 0.375f64.sqrt()).abs() < 1e-6, "xbar = {xbar}");
        assert!(r.constant("K2_1").unwrap().is_finite());
    }

    #[test]
    fn gl_fails_when_q_bar_too_large() {
        let r = check_dissipativity(&gl(), 4.0, 0.1, &DissipativityGrid::default()).unwrap();
        assert!(!r.pass);
        assert!(r.constant("xbar_1").unwrap().is_nan());
        assert_eq!(r.witness.len(), 1);
    }

    #[test]
    fn pure_growth_has_unit_k2() {
        let m = scalar(|x| x, |_| 0.0);
        let r = check_dissipativity(&m, 2.0, 1.0, &DissipativityGrid::default()).unwrap();
        assert!(r.pass);
        let k2 = r.constant("K2_1").unwrap();
        assert!(k2 <= 1.0 && k2 > 0.99, "{k2}");
    }

    #[test]
    fn sirs_dissipativity_is_reported() {
        let m = SirsParams::default().build().unwrap();
        let grid =
            DissipativityGrid { points: 12, times: (0..8).map(|k| k as f64 * 0.25).collect(), ..Default::default() };
        let r = check_dissipativity(&m, 2.0, 0.5, &grid).unwrap();
        assert_eq!(r.constants.len(), 6);
        assert!(r.worst_margin.is_finite() || r.worst_margin == f64::NEG_INFINITY);
    }

    #[test]
    fn gl_monotonicity_below_analytic_bound() {
        let (c, sigma, p) = (13.5, 5.0, 3.0);
        let bound = c + (p - 1.0) * sigma * sigma / 2.0;
        let r = check_monotonicity(&gl(), p, &Region::cube(1, 0.01, 100.0).unwrap(), &sampling(20_000), Some(bound))
            .unwrap();
        assert!(r.pass, "K3 = {:?}", r.constant("K3"));
        assert!(r.constant("K3").unwrap() <= bound + TOLERANCE);
    }

    #[test]
    fn contractive_linear_model() {
        let m = scalar(|x| -x, |_| 0.0);
        let r =
            check_monotonicity(&m, 3.0, &Region::cube(1, 0.1, 10.0).unwrap(), &sampling(2_000), Some(-1.0)).unwrap();
        assert!(r.pass);
        assert!((r.constant("K3").unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_drift_fails_fixed_budget() {
        let m = scalar(|x| x * x, |_| 0.0);
        let narrow =
            check_monotonicity(&m, 3.0, &Region::cube(1, 0.01, 10.0).unwrap(), &sampling(5_000), Some(25.0)).unwrap();
        let wide =
            check_monotonicity(&m, 3.0, &Region::cube(1, 0.01, 100.0).unwrap(), &sampling(5_000), Some(25.0)).unwrap();
        assert!(wide.constant("K3").unwrap() > 5.0 * narrow.constant("K3").unwrap());
        assert!(!wide.pass);
    }

    #[test]
    fn checks_are_deterministic() {
        let region = Region::cube(1, 0.01, 100.0).unwrap();
        let a = check_monotonicity(&gl(), 3.0, &region, &sampling(500), None).unwrap();
        let b = check_monotonicity(&gl(), 3.0, &region, &sampling(500), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn preconditions() {
        let g = GrowthExponents::new(2.0, 0.5).unwrap();
        let pre = theorem_preconditions(g, 8.0, 8.0);
        assert!(pre.iter().all(|p| p.holds));
        let pre = theorem_preconditions(g, 4.0, 1.0);
        assert!(!pre[0].holds && pre[1].holds && pre[2].holds);
    }

    #[test]
    fn bad_inputs() {
        assert!(Region::cube(1, 0.0, 1.0).is_err());
        assert!(check_dissipativity(&gl(), 1.0, 1.0, &DissipativityGrid::default()).is_err());
        assert!(check_monotonicity(&gl(), 2.0, &Region::cube(1, 1.0, 2.0).unwrap(), &sampling(10), None).is_err());
        assert!(check_lipschitz_growth(&gl(), &Region::cube(2, 1.0, 2.0).unwrap(), &sampling(10)).is_err());
    }
}
