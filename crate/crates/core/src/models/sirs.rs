use core::f64::consts::PI;

use crate::math::sin_cos;
use crate::models::{param_set, positive, require, NOMINAL_BETA};
use crate::{ModelSpec, Result};

/// `mean + a·cos(ωt) + b·sin(ωt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    /// Constant part.
    pub mean: f64,
    /// Cosine amplitude.
    pub cos: f64,
    /// Sine amplitude.
    pub sin: f64,
    /// Angular frequency.
    pub omega: f64,
}

impl Harmonic {
    /// Value at `t`.
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        let (s, c) = sin_cos(self.omega * t);
        self.mean + self.cos * c + self.sin * s
    }

    /// Smallest value over a period.
    pub fn minimum(&self) -> f64 {
        self.mean - crate::math::sqrt(self.cos * self.cos + self.sin * self.sin)
    }
}

param_set! {
    /// SIRS epidemic model with rates `μ(t)`, `ξ(t)`, `γ(t)` of the form
    /// `mean + a·cos(ωt) + b·sin(ωt)`:
    ///
    /// ```text
    /// dS = [μ - μS - ξSI] dt - σSI dB
    /// dI = [ξSI - (μ + γ)I] dt + σSI dB
    /// dR = [γI - μR] dt
    /// ```
    SirsParams for "sirs" {
        /// Mean of `μ`.
        mu_mean: "mu_mean" = 1.0,
        /// Cosine amplitude of `μ`.
        mu_cos: "mu_cos" = 0.3,
        /// Sine amplitude of `μ`.
        mu_sin: "mu_sin" = 0.0,
        /// Mean of `ξ`.
        xi_mean: "xi_mean" = 2.0,
        /// Cosine amplitude of `ξ`.
        xi_cos: "xi_cos" = 0.0,
        /// Sine amplitude of `ξ`.
        xi_sin: "xi_sin" = 1.0,
        /// Mean of `γ`.
        gamma_mean: "gamma_mean" = 0.6,
        /// Cosine amplitude of `γ`.
        gamma_cos: "gamma_cos" = 0.0,
        /// Sine amplitude of `γ`.
        gamma_sin: "gamma_sin" = 0.1,
        /// Shared angular frequency of the rates.
        omega: "omega" = PI,
        /// Noise intensity `σ`.
        sigma: "sigma" = 1.0,
    }
}

impl SirsParams {
    /// The three rate functions `(μ, ξ, γ)`.
    pub fn rates(&self) -> (Harmonic, Harmonic, Harmonic) {
        let h = |mean, cos, sin| Harmonic { mean, cos, sin, omega: self.omega };
        (
            h(self.mu_mean, self.mu_cos, self.mu_sin),
            h(self.xi_mean, self.xi_cos, self.xi_sin),
            h(self.gamma_mean, self.gamma_cos, self.gamma_sin),
        )
    }

    /// Validated model: every rate stays positive and `σ > 0`.
    pub fn build(&self) -> Result<ModelSpec> {
        for (k, v) in self.values() {
            require("sirs", k, v, true, "must be finite")?;
        }
        positive("sirs", "sigma", self.sigma)?;
        positive("sirs", "omega", self.omega)?;
        let (mu, xi, gamma) = self.rates();
        for (name, h) in [("mu_mean", mu), ("xi_mean", xi), ("gamma_mean", gamma)] {
            require("sirs", name, h.mean, h.minimum() > 0.0, "rate must stay positive over a period")?;
        }
        sirs(move |t| mu.at(t), move |t| xi.at(t), move |t| gamma.at(t), self.sigma)
    }
}

/// SIRS model with arbitrary rate functions.
pub fn sirs<M, X, G>(mu: M, xi: X, gamma: G, sigma: f64) -> Result<ModelSpec>
where
    M: Fn(f64) -> f64 + Send + Sync + 'static,
    X: Fn(f64) -> f64 + Send + Sync + 'static,
    G: Fn(f64) -> f64 + Send + Sync + 'static,
{
    positive("sirs", "sigma", sigma)?;
    ModelSpec::from_fns(
        "sirs",
        3,
        1,
        move |t, x, out| {
            let (m, k, g) = (mu(t), xi(t), gamma(t));
            let (s, i, r) = (x[0], x[1], x[2]);
            let infection = k * s * i;
            out[0] = m - m * s - infection;
            out[1] = infection - (m + g) * i;
            out[2] = g * i - m * r;
        },
        move |_, x, out| {
            let si = sigma * x[0] * x[1];
            out[0] = -si;
            out[1] = si;
            out[2] = 0.0;
        },
    )
    .with_growth(1.0, NOMINAL_BETA)
}
