//! Benchmark models with their default parameters, initial states and
//! horizons.
//!
//! Every model has a parameter struct whose `Default` holds the benchmark
//! values and whose `build` validates them. [`lookup`] resolves a catalog name
//! plus string-keyed overrides to a [`CatalogEntry`].
//!
//! Unless stated otherwise the declared constant `K1` is `1`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, ModelSpec, NegativeArgument, Result, StateVector};

mod ait_sahalia;
mod cev;
mod ginzburg_landau;
mod hiv;
mod lotka_volterra;
mod sirs;

pub use ait_sahalia::AitSahaliaParams;
pub use cev::{lamperti_to_original, original_to_lamperti, CevParams};
pub use ginzburg_landau::GinzburgLandauParams;
pub use hiv::HivParams;
pub use lotka_volterra::LotkaVolterraParams;
pub use sirs::{sirs, Harmonic, SirsParams};

/// Nominal `β` for models without singular terms. It only enters the clamp
/// rate through `γ = α ∨ (β + 1)`.
pub const NOMINAL_BETA: f64 = 0.5;

/// Catalog names in listing order.
pub const MODEL_NAMES: [&str; 7] =
    ["cev", "cev_lamperti", "ait_sahalia", "ginzburg_landau", "lotka_volterra_3d", "sirs", "hiv_aids"];

/// Declares a parameter struct with string-keyed access.
macro_rules! param_set {
    (
        $(#[$meta:meta])*
        $ty:ident for $model:literal {
            $( $(#[doc = $doc:literal])* $field:ident : $key:literal = $default:expr ),* $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $ty {
            $( $(#[doc = $doc])* pub $field: f64, )*
        }

        impl Default for $ty {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        impl $ty {
            /// Accepted override keys.
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            /// Sets one parameter by key.
            pub fn set(&mut self, key: &str, value: f64) -> $crate::Result<()> {
                match key {
                    $( $key => self.$field = value, )*
                    _ => {
                        return Err($crate::Error::UnknownParameter {
                            model: $model,
                            name: key.into(),
                            expected: Self::KEYS.join(", "),
                        })
                    }
                }
                Ok(())
            }

            /// `(key, value)` pairs in declaration order.
            pub fn values(&self) -> alloc::vec::Vec<(&'static str, f64)> {
                alloc::vec![$( ($key, self.$field) ),*]
            }
        }
    };
}
pub(crate) use param_set;

pub(crate) fn require(
    model: &'static str,
    name: &'static str,
    value: f64,
    ok: bool,
    reason: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { model, name, value, reason })
    }
}

pub(crate) fn positive(model: &'static str, name: &'static str, value: f64) -> Result<()> {
    require(model, name, value, value > 0.0, "must be positive")
}

/// A resolved catalog model.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    /// Catalog name, one of [`MODEL_NAMES`].
    pub name: &'static str,
    /// Short name used in output file names.
    pub short_name: &'static str,
    /// One-line description.
    pub description: &'static str,
    /// The model.
    pub spec: ModelSpec,
    /// Effective parameters after overrides.
    pub params: Vec<(&'static str, f64)>,
    /// Default initial state.
    pub x0: StateVector,
    /// Default horizon.
    pub t_end: f64,
    /// Studies this model takes part in.
    pub studies: &'static [&'static str],
}

fn apply<P>(mut params: P, overrides: &[(&str, f64)], set: impl Fn(&mut P, &str, f64) -> Result<()>) -> Result<P> {
    for (k, v) in overrides {
        set(&mut params, k, *v)?;
    }
    Ok(params)
}

fn canonical(name: &str) -> Option<&'static str> {
    Some(match name {
        "cev" => "cev",
        "cev_lamperti" | "cevl" => "cev_lamperti",
        "ait_sahalia" | "as" => "ait_sahalia",
        "ginzburg_landau" | "gl" => "ginzburg_landau",
        "lotka_volterra_3d" | "lv" | "lv3" => "lotka_volterra_3d",
        "sirs" => "sirs",
        "hiv_aids" | "hiv" => "hiv_aids",
        _ => return None,
    })
}

/// Resolves a catalog name (or its short alias) with parameter overrides.
///
/// `negative_argument` sets how fractional powers treat negative arguments;
/// it only matters for the explicit comparator schemes.
pub fn lookup(name: &str, overrides: &[(&str, f64)], negative_argument: NegativeArgument) -> Result<CatalogEntry> {
    let Some(name) = canonical(name) else {
        return Err(Error::UnknownModel { name: name.to_string(), available: MODEL_NAMES.join(", ") });
    };
    let entry = match name {
        "cev" | "cev_lamperti" => {
            let p = apply(CevParams::default(), overrides, CevParams::set)?;
            let original = StateVector::from([CevParams::X0]);
            if name == "cev" {
                CatalogEntry {
                    name,
                    short_name: "cev",
                    description: "CEV process dX = kappa (mu - X) dt + xi X^theta dB",
                    spec: p.build_original(negative_argument)?,
                    params: p.values(),
                    x0: original,
                    t_end: 1.0,
                    studies: &["positivity"],
                }
            } else {
                CatalogEntry {
                    name,
                    short_name: "cev_lamperti",
                    description: "CEV process in Lamperti coordinates Y = X^(1 - theta)",
                    spec: p.build_lamperti(negative_argument)?,
                    params: p.values(),
                    x0: StateVector::from([original_to_lamperti(CevParams::X0, p.theta)]),
                    t_end: 1.0,
                    studies: &["convergence", "positivity"],
                }
            }
        }
        "ait_sahalia" => {
            let p = apply(AitSahaliaParams::default(), overrides, AitSahaliaParams::set)?;
            CatalogEntry {
                name,
                short_name: "as",
                description: "generalized Ait-Sahalia interest rate model",
                spec: p.build_with(negative_argument)?,
                params: p.values(),
                x0: StateVector::from([2.0]),
                t_end: 1.0,
                studies: &["convergence", "positivity"],
            }
        }
        "ginzburg_landau" => {
            let p = apply(GinzburgLandauParams::default(), overrides, GinzburgLandauParams::set)?;
            CatalogEntry {
                name,
                short_name: "gl",
                description: "scalar stochastic Ginzburg-Landau equation",
                spec: p.build()?,
                params: p.values(),
                x0: StateVector::from([1.0]),
                t_end: 1.0,
                studies: &["convergence"],
            }
        }
        "lotka_volterra_3d" => {
            let p = apply(LotkaVolterraParams::default(), overrides, LotkaVolterraParams::set)?;
            CatalogEntry {
                name,
                short_name: "lv",
                description: "three-species stochastic Lotka-Volterra system, one shared Brownian motion",
                spec: p.build()?,
                params: p.values(),
                x0: StateVector::from([0.5, 2.0, 1.0]),
                t_end: 1.0,
                studies: &["convergence"],
            }
        }
        "sirs" => {
            let p = apply(SirsParams::default(), overrides, SirsParams::set)?;
            CatalogEntry {
                name,
                short_name: "sirs",
                description: "SIRS epidemic model with periodic rates",
                spec: p.build()?,
                params: p.values(),
                x0: StateVector::from([3.0, 0.5, 0.5]),
                t_end: 1.0,
                studies: &["convergence"],
            }
        }
        "hiv_aids" => {
            let p = apply(HivParams::default(), overrides, HivParams::set)?;
            CatalogEntry {
                name,
                short_name: "hiv",
                description: "stochastic HIV/AIDS model (S, I, A)",
                spec: p.build()?,
                params: p.values(),
                x0: StateVector::from([2.0, 1.0, 1.0]),
                t_end: 1.0,
                studies: &["convergence"],
            }
        }
        _ => unreachable!("canonical names are exhaustive"),
    };
    Ok(entry)
}

/// Every catalog model with default parameters.
pub fn catalog() -> Vec<CatalogEntry> {
    MODEL_NAMES
        .iter()
        .map(|n| lookup(n, &[], NegativeArgument::default()).expect("default parameters are valid"))
        .collect()
}

/// Joins `(key, value)` pairs as `key=value` separated by spaces.
pub fn format_params(params: &[(&str, f64)]) -> String {
    let mut out = String::new();
    for (i, (k, v)) in params.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(k);
        out.push('=');
        out.push_str(&alloc::format!("{v}"));
    }
    out
}
