use crate::models::{param_set, positive, NOMINAL_BETA};
use crate::{ModelSpec, Result};

param_set! {
    /// Stochastic HIV/AIDS model in `(S, I, A)`:
    ///
    /// ```text
    /// dS = [N - μ₁S - ξSI] dt - σSI dB
    /// dI = [ξSI - μ₁I - γI] dt + σSI dB
    /// dA = [γI - μ₁A - μ₂A] dt
    /// ```
    HivParams for "hiv_aids" {
        /// Recruitment `N`.
        n: "n" = 1.0,
        /// Natural death rate `μ₁`.
        mu1: "mu1" = 0.5,
        /// Disease death rate `μ₂`.
        mu2: "mu2" = 0.4,
        /// Transmission rate `ξ`.
        xi: "xi" = 0.5,
        /// Progression rate `γ`.
        gamma: "gamma" = 0.3,
        /// Noise intensity `σ`.
        sigma: "sigma" = 1.0,
    }
}

impl HivParams {
    /// Validated model; every constant must be positive.
    pub fn build(&self) -> Result<ModelSpec> {
        for (k, v) in self.values() {
            positive("hiv_aids", k, v)?;
        }
        let Self { n, mu1, mu2, xi, gamma, sigma } = *self;
        ModelSpec::from_fns(
            "hiv_aids",
            3,
            1,
            move |_, x, out| {
                let (s, i, a) = (x[0], x[1], x[2]);
                out[0] = n - mu1 * s - xi * s * i;
                out[1] = xi * s * i - (mu1 + gamma) * i;
                out[2] = gamma * i - (mu1 + mu2) * a;
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
}
