use crate::models::{param_set, require, NOMINAL_BETA};
use crate::{ModelSpec, Result};

param_set! {
    /// Scalar stochastic Ginzburg–Landau equation
    /// `dX = (-X³ + (λ + σ²/2) X) dt + σX dB`.
    GinzburgLandauParams for "ginzburg_landau" {
        /// `λ ≥ 0`.
        lambda: "lambda" = 1.0,
        /// `σ ≥ 0`.
        sigma: "sigma" = 5.0,
    }
}

impl GinzburgLandauParams {
    /// Validated model.
    pub fn build(&self) -> Result<ModelSpec> {
        require("ginzburg_landau", "lambda", self.lambda, self.lambda >= 0.0, "must be nonnegative")?;
        require("ginzburg_landau", "sigma", self.sigma, self.sigma >= 0.0, "must be nonnegative")?;
        let Self { lambda, sigma } = *self;
        let c = lambda + 0.5 * sigma * sigma;
        ModelSpec::from_fns(
            "ginzburg_landau",
            1,
            1,
            move |_, x, out| out[0] = -x[0] * x[0] * x[0] + c * x[0],
            move |_, x, out| out[0] = sigma * x[0],
        )
        .with_growth(2.0, NOMINAL_BETA)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::AitSahaliaParams;
    use crate::NegativeArgument;

    #[test]
    fn benchmark_values() {
        let m = GinzburgLandauParams::default().build().unwrap();
        assert_eq!(m.drift(0.0, &[1.0])[0], 12.5);
        assert_eq!(m.diffusion(0.0, &[1.0]), [5.0]);
        let tiny = 1e-300;
        assert!(m.drift(0.0, &[tiny])[0].abs() < 1e-298);
        assert!(m.diffusion(0.0, &[tiny])[0].abs() < 1e-298);
    }

    #[test]
    fn special_case_of_ait_sahalia() {
        for (lambda, sigma) in [(1.0, 5.0), (0.3, 0.7), (0.0, 2.0)] {
            let gl = GinzburgLandauParams { lambda, sigma }.build().unwrap();
            let a = AitSahaliaParams {
                a_m1: 0.0,
                a0: 0.0,
                a1: lambda + 0.5 * sigma * sigma,
                a2: 1.0,
                sigma,
                r: 3.0,
                rho: 1.0,
            }
            .build_unchecked(NegativeArgument::Absolute)
            .unwrap();
            let mut worst = 0.0f64;
            for i in 0..1000 {
                let x = 1e-3 * 10f64.powf(4.0 * i as f64 / 999.0);
                worst = worst.max((gl.drift(0.0, &[x])[0] - a.drift(0.0, &[x])[0]).abs());
                worst = worst.max((gl.diffusion(0.0, &[x])[0] - a.diffusion(0.0, &[x])[0]).abs());
            }
            assert!(worst < 1e-12, "worst {worst}");
        }
    }

    #[test]
    fn negative_parameters_rejected() {
        assert!(GinzburgLandauParams { lambda: -0.1, sigma: 1.0 }.build().is_err());
        assert!(GinzburgLandauParams { lambda: 0.0, sigma: 0.0 }.build().is_ok());
    }
}
