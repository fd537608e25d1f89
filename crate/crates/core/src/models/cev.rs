use crate::math::{ceil, powf, signed_power};
use crate::models::{param_set, positive, require};
use crate::{ModelSpec, NegativeArgument, Result};

param_set! {
    /// Constant elasticity of variance process
    /// `dX = κ(μ - X) dt + ξ X^θ dB`, `θ ∈ (1/2, 1)`.
    CevParams for "cev" {
        /// Mean-reversion speed `κ`.
        kappa: "kappa" = 4.0,
        /// Long-run mean `μ`.
        mu: "mu" = 0.5,
        /// Volatility scale `ξ`.
        xi: "xi" = 1.0,
        /// Elasticity `θ`.
        theta: "theta" = 0.55,
    }
}

impl CevParams {
    /// Default initial value of `X`.
    pub const X0: f64 = 2.0;

    fn validate(&self) -> Result<()> {
        positive("cev", "kappa", self.kappa)?;
        positive("cev", "mu", self.mu)?;
        positive("cev", "xi", self.xi)?;
        require("cev", "theta", self.theta, self.theta > 0.5 && self.theta < 1.0, "must lie in (1/2, 1)")
    }

    /// `(α, β)` declared for the Lamperti form. `α` is `θ/(1-θ)` rounded up
    /// and `β = max(1, θ/(1-θ))` covers both singular terms.
    pub fn growth(&self) -> (f64, f64) {
        let e = self.theta / (1.0 - self.theta);
        (ceil(e), e.max(1.0))
    }

    /// The SDE for `Y = X^(1-θ)`:
    ///
    /// `dY = (1-θ)[κμ Y^(-θ/(1-θ)) - κY - (θξ²/2) Y^(-1)] dt + (1-θ)ξ dB`.
    pub fn build_lamperti(&self, negative: NegativeArgument) -> Result<ModelSpec> {
        self.validate()?;
        let Self { kappa, mu, xi, theta } = *self;
        let s = 1.0 - theta;
        let e = -theta / s;
        let (alpha, beta) = self.growth();
        ModelSpec::from_fns(
            "cev_lamperti",
            1,
            1,
            move |_, y, out| {
                let y = y[0];
                out[0] = s * (kappa * mu * signed_power(y, e, negative) - kappa * y - 0.5 * theta * xi * xi / y);
            },
            move |_, _, out| out[0] = s * xi,
        )
        .with_growth(alpha, beta)?
        .with_singular_terms(true)
        .with_negative_argument(negative)
        .with_lipschitz_scale(1.0)
    }

    /// The SDE in the original coordinates. Used only by the explicit
    /// comparator schemes; it declares the Lamperti exponents so that
    /// norm truncation uses the same radius as the PPTEM clamp edge.
    pub fn build_original(&self, negative: NegativeArgument) -> Result<ModelSpec> {
        self.validate()?;
        let Self { kappa, mu, xi, theta } = *self;
        let (alpha, beta) = self.growth();
        ModelSpec::from_fns(
            "cev",
            1,
            1,
            move |_, x, out| out[0] = kappa * (mu - x[0]),
            move |_, x, out| out[0] = xi * signed_power(x[0], theta, negative),
        )
        .with_growth(alpha, beta)?
        .with_singular_terms(true)
        .with_negative_argument(negative)
        .with_lipschitz_scale(1.0)
    }
}

/// `X = Y^(1/(1-θ))`.
pub fn lamperti_to_original(y: f64, theta: f64) -> f64 {
    powf(y, 1.0 / (1.0 - theta))
}

/// `Y = X^(1-θ)`.
pub fn original_to_lamperti(x: f64, theta: f64) -> f64 {
    powf(x, 1.0 - theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::IncrementGrid;
    use approx::assert_relative_eq;

    #[test]
    fn initial_value_in_lamperti_coordinates() {
        assert_relative_eq!(original_to_lamperti(2.0, 0.55), 1.366040, epsilon = 1e-6);
        assert_relative_eq!(lamperti_to_original(original_to_lamperti(2.0, 0.55), 0.55), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn transformed_diffusion_is_constant() {
        let m = CevParams::default().build_lamperti(NegativeArgument::Absolute).unwrap();
        for y in [0.01, 1.0, 50.0] {
            assert_relative_eq!(m.diffusion(0.0, &[y])[0], 0.45, epsilon = 1e-15);
        }
    }

    // Ito's formula for Y = X^(1-θ), evaluated through the original
    // coefficients: dY = [(1-θ)X^(-θ) f + ½(1-θ)(-θ)X^(-θ-1) g²] dt + (1-θ)X^(-θ) g dB.
    #[test]
    fn drift_matches_ito_formula() {
        let p = CevParams::default();
        let lam = p.build_lamperti(NegativeArgument::Absolute).unwrap();
        let orig = p.build_original(NegativeArgument::Absolute).unwrap();
        let th = p.theta;
        for x in [0.05, 0.3, 1.0, 2.0, 7.5] {
            let f = orig.drift(0.0, &[x])[0];
            let g = orig.diffusion(0.0, &[x])[0];
            let ito_drift = (1.0 - th) * x.powf(-th) * f - 0.5 * (1.0 - th) * th * x.powf(-th - 1.0) * g * g;
            let ito_diff = (1.0 - th) * x.powf(-th) * g;
            let y = original_to_lamperti(x, th);
            assert_relative_eq!(lam.drift(0.0, &[y])[0], ito_drift, max_relative = 1e-12);
            assert_relative_eq!(lam.diffusion(0.0, &[y])[0], ito_diff, max_relative = 1e-12);
        }
    }

    #[test]
    fn pathwise_coupling_with_original_equation() {
        let p = CevParams::default();
        let lam = p.build_lamperti(NegativeArgument::Absolute).unwrap();
        let orig = p.build_original(NegativeArgument::Absolute).unwrap();
        let mut worst = [0.0f64; 2];
        for (slot, n) in [(0, 1usize << 12), (1, 1 << 14)] {
            let delta = 1.0 / n as f64;
            for path in 0..30 {
                let inc = IncrementGrid::generate(11, path, n, 1, delta).unwrap();
                let (mut x, mut y) = (CevParams::X0, original_to_lamperti(CevParams::X0, p.theta));
                let mut min_x = x;
                for k in 0..n {
                    let db = inc.step(k)[0];
                    x += orig.drift(0.0, &[x])[0] * delta + orig.diffusion(0.0, &[x])[0] * db;
                    y += lam.drift(0.0, &[y])[0] * delta + lam.diffusion(0.0, &[y])[0] * db;
                    min_x = min_x.min(x);
                }
                if min_x > 0.1 {
                    worst[slot] = worst[slot].max((original_to_lamperti(x, p.theta) - y).abs());
                }
            }
        }
        assert!(worst[0] < 0.05, "coupling gap {worst:?}");
        assert!(worst[1] < worst[0], "gap does not shrink with the step: {worst:?}");
    }

    #[test]
    fn undefined_mode_gives_nan_off_cone() {
        let m = CevParams::default().build_original(NegativeArgument::Undefined).unwrap();
        assert!(m.diffusion(0.0, &[-0.1])[0].is_nan());
        let a = CevParams::default().build_original(NegativeArgument::Absolute).unwrap();
        assert_relative_eq!(a.diffusion(0.0, &[-0.1])[0], 0.1f64.powf(0.55));
    }

    #[test]
    fn constraints_rejected() {
        for (k, v) in [("theta", 0.5), ("theta", 1.0), ("kappa", 0.0), ("xi", -1.0), ("mu", f64::NAN)] {
            let mut p = CevParams::default();
            p.set(k, v).unwrap();
            assert!(p.build_lamperti(NegativeArgument::Absolute).is_err(), "{k}={v}");
        }
    }
}
