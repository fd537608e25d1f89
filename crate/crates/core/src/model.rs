use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result, StateVector};

/// Drift and diffusion of an SDE `dX = f(t, X) dt + g(t, X) dB`.
///
/// Implementations must be pure: the same `(t, x)` always produces the same
/// bits, from any thread. Autonomous models ignore `t`.
pub trait Coefficients: Send + Sync {
    /// Writes `f(t, x)` into `out` (length `d`).
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Writes `g(t, x)` into `out` as a row-major `d × m` matrix.
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]);
}

struct FnCoefficients<F, G> {
    drift: F,
    diffusion: G,
}

impl<F, G> Coefficients for FnCoefficients<F, G>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
    G: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, out)
    }

    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(t, x, out)
    }
}

/// Declared growth exponents `(α, β)` of the coefficient bound
/// `K1 (1 + |x|^α + |y|^α + |x|^-β + |y|^-β) |x - y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthExponents {
    /// Polynomial growth exponent, `α > 0`.
    pub alpha: f64,
    /// Singular exponent near the boundary, `β > 0`.
    pub beta: f64,
}

impl GrowthExponents {
    /// Validated constructor.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::OutOfDomain { name: "alpha", value: alpha, expected: "alpha > 0" });
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::OutOfDomain { name: "beta", value: beta, expected: "beta > 0" });
        }
        Ok(Self { alpha, beta })
    }

    /// `α ∨ (β + 1)`, the exponent of the bound function `φ`.
    pub fn gamma(&self) -> f64 {
        self.alpha.max(self.beta + 1.0)
    }
}

/// How coefficients with fractional powers treat a negative argument.
///
/// Only explicit schemes (EM, norm-truncated EM) ever evaluate coefficients
/// outside the positive cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativeArgument {
    /// `x^θ` is evaluated as `|x|^θ`; integer powers and `x⁻¹` keep their sign.
    #[default]
    Absolute,
    /// Fractional powers of negative numbers are NaN and a model with singular
    /// terms reports divergence as soon as it is evaluated off the cone.
    Undefined,
}

impl NegativeArgument {
    /// Config spelling.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Absolute => "absolute",
            Self::Undefined => "undefined",
        }
    }
}

impl core::str::FromStr for NegativeArgument {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" | "abs" => Ok(Self::Absolute),
            "undefined" | "nan" => Ok(Self::Undefined),
            _ => Err(Error::OutOfDomain {
                name: "negative_argument",
                value: f64::NAN,
                expected: "`absolute` or `undefined`",
            }),
        }
    }
}

/// An SDE on `ℝ^d` driven by an `m`-dimensional Brownian motion.
///
/// Cloning is cheap; coefficients are shared.
#[derive(Clone)]
pub struct ModelSpec {
    name: String,
    dim: usize,
    noise_dim: usize,
    growth: GrowthExponents,
    lipschitz_scale: f64,
    singular: bool,
    negative_argument: NegativeArgument,
    coefficients: Arc<dyn Coefficients>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("growth", &self.growth)
            .field("lipschitz_scale", &self.lipschitz_scale)
            .field("singular", &self.singular)
            .field("negative_argument", &self.negative_argument)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    /// New model with growth `(α, β) = (1, 0.5)`, `K1 = 1` and no singular terms.
    ///
    /// # Panics
    /// If `dim` or `noise_dim` is zero.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        noise_dim: usize,
        coefficients: impl Coefficients + 'static,
    ) -> Self {
        assert!(dim > 0 && noise_dim > 0, "model dimensions must be positive");
        Self {
            name: name.into(),
            dim,
            noise_dim,
            growth: GrowthExponents { alpha: 1.0, beta: 0.5 },
            lipschitz_scale: 1.0,
            singular: false,
            negative_argument: NegativeArgument::default(),
            coefficients: Arc::new(coefficients),
        }
    }

    /// Model from a pair of closures with the [`Coefficients`] signatures.
    pub fn from_fns<F, G>(name: impl Into<String>, dim: usize, noise_dim: usize, drift: F, diffusion: G) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        G: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(name, dim, noise_dim, FnCoefficients { drift, diffusion })
    }

    /// Sets the declared growth exponents.
    pub fn with_growth(mut self, alpha: f64, beta: f64) -> Result<Self> {
        self.growth = GrowthExponents::new(alpha, beta)?;
        Ok(self)
    }

    /// Sets the declared constant `K1`.
    pub fn with_lipschitz_scale(mut self, k1: f64) -> Result<Self> {
        if !(k1 > 0.0 && k1.is_finite()) {
            return Err(Error::OutOfDomain { name: "K1", value: k1, expected: "K1 > 0" });
        }
        self.lipschitz_scale = k1;
        Ok(self)
    }

    /// Marks the coefficients as having poles or fractional powers at the
    /// boundary of the positive cone.
    pub fn with_singular_terms(mut self, singular: bool) -> Self {
        self.singular = singular;
        self
    }

    /// Records how the coefficients treat negative arguments.
    pub fn with_negative_argument(mut self, mode: NegativeArgument) -> Self {
        self.negative_argument = mode;
        self
    }

    /// Identifier.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// State dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Brownian dimension `m`.
    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// Declared `(α, β)`.
    pub fn growth(&self) -> GrowthExponents {
        self.growth
    }

    /// Declared `K1`.
    pub fn lipschitz_scale(&self) -> f64 {
        self.lipschitz_scale
    }

    /// Whether the coefficients are singular on the boundary of the cone.
    pub fn has_singular_terms(&self) -> bool {
        self.singular
    }

    /// Negative-argument convention of the coefficients.
    pub fn negative_argument(&self) -> NegativeArgument {
        self.negative_argument
    }

    /// Writes `f(t, x)` into `out`.
    #[inline]
    pub fn drift_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        self.coefficients.drift(t, x, out)
    }

    /// Writes `g(t, x)` (row-major `d × m`) into `out`.
    #[inline]
    pub fn diffusion_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim * self.noise_dim);
        self.coefficients.diffusion(t, x, out)
    }

    /// `f(t, x)` as a new vector.
    pub fn drift(&self, t: f64, x: &[f64]) -> StateVector {
        let mut out = StateVector::zeros(self.dim);
        self.drift_into(t, x, &mut out);
        out
    }

    /// `g(t, x)` as a new row-major matrix.
    pub fn diffusion(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.noise_dim];
        self.diffusion_into(t, x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> ModelSpec {
        ModelSpec::from_fns(
            "linear",
            2,
            1,
            |_, x, out| {
                out[0] = -x[0];
                out[1] = 2.0 * x[1];
            },
            |_, x, out| {
                out[0] = x[0];
                out[1] = 0.5;
            },
        )
    }

    #[test]
    fn closures_are_evaluated() {
        let m = linear();
        assert_eq!(m.drift(0.0, &[1.0, 3.0]).as_slice(), &[-1.0, 6.0]);
        assert_eq!(m.diffusion(0.0, &[2.0, 3.0]), vec![2.0, 0.5]);
        assert_eq!((m.dim(), m.noise_dim()), (2, 1));
    }

    #[test]
    fn growth_must_be_positive() {
        assert!(linear().with_growth(0.0, 1.0).is_err());
        assert!(linear().with_growth(1.0, -0.5).is_err());
        let m = linear().with_growth(2.0, 0.5).unwrap();
        assert_eq!(m.growth().gamma(), 2.0);
        assert_eq!(GrowthExponents::new(1.0, 0.5).unwrap().gamma(), 1.5);
    }

    #[test]
    fn evaluation_is_reproducible_across_threads() {
        let m = linear();
        let x = [0.123456789, 9.87654321];
        let here = (m.drift(0.3, &x), m.diffusion(0.3, &x));
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let m = m.clone();
                std::thread::spawn(move || (m.drift(0.3, &x), m.diffusion(0.3, &x)))
            })
            .collect();
        for h in handles {
            let there = h.join().unwrap();
            assert_eq!(here.0.as_slice(), there.0.as_slice());
            assert_eq!(here.1, there.1);
        }
    }

    #[test]
    fn negative_argument_parses() {
        assert_eq!("abs".parse::<NegativeArgument>().unwrap(), NegativeArgument::Absolute);
        assert_eq!("undefined".parse::<NegativeArgument>().unwrap(), NegativeArgument::Undefined);
        assert!("zero".parse::<NegativeArgument>().is_err());
    }
}
