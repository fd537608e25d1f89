use crate::math::signed_power;
use crate::models::{param_set, positive, require};
use crate::{ModelSpec, NegativeArgument, Result};

param_set! {
    /// Generalized Aït-Sahalia model
    /// `dX = (a₋₁X⁻¹ - a₀ + a₁X - a₂X^r) dt + σX^ρ dB`.
    AitSahaliaParams for "ait_sahalia" {
        /// `a₋₁`.
        a_m1: "a_m1" = 3.0,
        /// `a₀`.
        a0: "a0" = 2.0,
        /// `a₁`.
        a1: "a1" = 1.0,
        /// `a₂`.
        a2: "a2" = 5.0,
        /// `σ`.
        sigma: "sigma" = 2.0,
        /// Drift exponent `r`.
        r: "r" = 4.0,
        /// Diffusion exponent `ρ`.
        rho: "rho" = 2.0,
    }
}

impl AitSahaliaParams {
    /// Validated model with `|x|^p` for fractional powers of negatives.
    pub fn build(&self) -> Result<ModelSpec> {
        self.build_with(NegativeArgument::Absolute)
    }

    /// Validated model: all constants positive, `r, ρ > 1`, `r + 1 > 2ρ`.
    pub fn build_with(&self, negative: NegativeArgument) -> Result<ModelSpec> {
        const M: &str = "ait_sahalia";
        for (k, v) in self.values() {
            positive(M, k, v)?;
        }
        require(M, "r", self.r, self.r > 1.0, "must exceed 1")?;
        require(M, "rho", self.rho, self.rho > 1.0, "must exceed 1")?;
        require(M, "rho", self.rho, self.r + 1.0 > 2.0 * self.rho, "needs r + 1 > 2 rho")?;
        self.build_unchecked(negative)
    }

    /// The model without parameter checks. Degenerate settings such as
    /// `a₋₁ = 0` or `ρ = 1` are allowed.
    pub fn build_unchecked(&self, negative: NegativeArgument) -> Result<ModelSpec> {
        let Self { a_m1, a0, a1, a2, sigma, r, rho } = *self;
        ModelSpec::from_fns(
            "ait_sahalia",
            1,
            1,
            move |_, x, out| {
                let x = x[0];
                let pole = if a_m1 == 0.0 { 0.0 } else { a_m1 / x };
                out[0] = pole - a0 + a1 * x - a2 * signed_power(x, r, negative);
            },
            move |_, x, out| out[0] = sigma * signed_power(x[0], rho, negative),
        )
        .with_growth(r.max(rho), 1.0)?
        .with_singular_terms(true)
        .with_negative_argument(negative)
        .with_lipschitz_scale(1.0)
    }
}
