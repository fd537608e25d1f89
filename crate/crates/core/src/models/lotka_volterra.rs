use crate::math::{cos, sin};
use crate::models::{param_set, NOMINAL_BETA};
use crate::{ModelSpec, Result};

param_set! {
    /// Three-species stochastic Lotka–Volterra system with diagonal
    /// interaction matrix, driven by one scalar Brownian motion:
    ///
    /// `dXᵢ = Xᵢ(cᵢ + aᵢᵢXᵢ) dt + Xᵢ(σᵢ + ζᵢ(X)) dB`
    ///
    /// with
    /// `ζ₁ = (sin X₁ + sin X₂ + sin X₃)/(1 + X₁ + X₂ + X₃)`,
    /// `ζ₂ = (X₁ + X₂ + X₃)/(1 + (X₁ + X₂ + X₃)²)`,
    /// `ζ₃ = (cos X₁ + cos X₂)/(1 + X₃²)`.
    LotkaVolterraParams for "lotka_volterra_3d" {
        /// Growth rate `c₁`.
        c1: "c1" = 50.0,
        /// Growth rate `c₂`.
        c2: "c2" = 30.0,
        /// Growth rate `c₃`.
        c3: "c3" = 20.0,
        /// Self-interaction `a₁₁`.
        a11: "a11" = -55.0,
        /// Self-interaction `a₂₂`.
        a22: "a22" = -10.0,
        /// Self-interaction `a₃₃`.
        a33: "a33" = -15.0,
        /// Noise level `σ₁`.
        sigma1: "sigma1" = 7.0,
        /// Noise level `σ₂`.
        sigma2: "sigma2" = 2.0,
        /// Noise level `σ₃`.
        sigma3: "sigma3" = 5.0,
    }
}

/// `(ζ₁, ζ₂, ζ₃)` at `x`.
pub(crate) fn zeta(x: &[f64]) -> [f64; 3] {
    let s = x[0] + x[1] + x[2];
    [(sin(x[0]) + sin(x[1]) + sin(x[2])) / (1.0 + s), s / (1.0 + s * s), (cos(x[0]) + cos(x[1])) / (1.0 + x[2] * x[2])]
}

impl LotkaVolterraParams {
    /// The model. Any finite parameters are accepted.
    pub fn build(&self) -> Result<ModelSpec> {
        for (k, v) in self.values() {
            crate::models::require("lotka_volterra_3d", k, v, true, "must be finite")?;
        }
        let c = [self.c1, self.c2, self.c3];
        let a = [self.a11, self.a22, self.a33];
        let sigma = [self.sigma1, self.sigma2, self.sigma3];
        ModelSpec::from_fns(
            "lotka_volterra_3d",
            3,
            1,
            move |_, x, out| {
                for i in 0..3 {
                    out[i] = x[i] * (c[i] + a[i] * x[i]);
                }
            },
            move |_, x, out| {
                let z = zeta(x);
                for i in 0..3 {
                    out[i] = x[i] * (sigma[i] + z[i]);
                }
            },
        )
        .with_growth(1.0, NOMINAL_BETA)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::StreamRng;
    use approx::assert_relative_eq;

    #[test]
    fn values_at_ones() {
        let m = LotkaVolterraParams::default().build().unwrap();
        assert_eq!(m.drift(0.0, &[1.0, 1.0, 1.0]).as_slice(), &[-5.0, 20.0, 5.0]);
        let z = zeta(&[1.0, 1.0, 1.0]);
        assert_relative_eq!(z[1], 0.3, epsilon = 1e-15);
        assert_relative_eq!(m.diffusion(0.0, &[1.0, 1.0, 1.0])[1], 2.3, epsilon = 1e-15);
    }

    // Hand-derived Jacobians compared with central differences.
    #[test]
    fn jacobians_match_finite_differences() {
        let p = LotkaVolterraParams::default();
        let m = p.build().unwrap();
        let mut rng = StreamRng::new(3, 0);
        for _ in 0..200 {
            let x: [f64; 3] = core::array::from_fn(|_| 0.05 + 5.0 * rng.uniform());
            let s = x[0] + x[1] + x[2];
            let z = zeta(&x);
            let c = [p.c1, p.c2, p.c3];
            let a = [p.a11, p.a22, p.a33];
            let sig = [p.sigma1, p.sigma2, p.sigma3];
            // ∂ζᵢ/∂xⱼ
            let sin_sum = x[0].sin() + x[1].sin() + x[2].sin();
            let dz1: [f64; 3] = core::array::from_fn(|j| x[j].cos() / (1.0 + s) - sin_sum / ((1.0 + s) * (1.0 + s)));
            let dz2 = [(1.0 - s * s) / ((1.0 + s * s) * (1.0 + s * s)); 3];
            let q = 1.0 + x[2] * x[2];
            let dz3 = [-x[0].sin() / q, -x[1].sin() / q, -(x[0].cos() + x[1].cos()) * 2.0 * x[2] / (q * q)];
            let dz = [dz1, dz2, dz3];
            for j in 0..3 {
                let h = 1e-6 * x[j].max(1.0);
                let (mut xp, mut xm) = (x, x);
                xp[j] += h;
                xm[j] -= h;
                let (fp, fm) = (m.drift(0.0, &xp), m.drift(0.0, &xm));
                let gp = m.diffusion(0.0, &xp);
                let gm = m.diffusion(0.0, &xm);
                for i in 0..3 {
                    let kron = if i == j { 1.0 } else { 0.0 };
                    let jf = kron * (c[i] + 2.0 * a[i] * x[i]);
                    let jg = kron * (sig[i] + z[i]) + x[i] * dz[i][j];
                    let fd_g = (gp[i] - gm[i]) / (2.0 * h);
                    let fd_f = (fp[i] - fm[i]) / (2.0 * h);
                    assert!((fd_f - jf).abs() <= 1e-6 * jf.abs().max(1.0), "df{i}/dx{j}: {fd_f} vs {jf}");
                    assert!((fd_g - jg).abs() <= 1e-6 * jg.abs().max(1.0), "dg{i}/dx{j}: {fd_g} vs {jg}");
                }
            }
        }
    }
}
