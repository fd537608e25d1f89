//! Run configuration: a flat key/value file with optional sections,
//! overridden by command-line flags.
//!
//! ```text
//! # comments start with '#'
//! model = ginzburg_landau
//! paths = 2000
//! seed = 7
//!
//! [params]
//! sigma = 5
//!
//! [policy]
//! k0_hat = 1
//!
//! [converge]
//! scheme = pptem
//! ref_delta = 2^-14
//! test_deltas = 2^-12, 2^-11, 2^-10, 2^-9, 2^-8
//! ```
//!
//! Numbers accept the power notation `a^b`. Unknown sections and keys are
//! rejected with the line number.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use pptem_core::models::{lookup, MODEL_NAMES};
use pptem_core::truncation::PolicyOverrides;
use pptem_core::{NegativeArgument, SchemeKind};

use crate::experiments::Counting;
use crate::Error;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PPTEM_OUT_DIR";

/// Subcommand to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// One path, written out in full.
    Simulate,
    /// Strong-error study.
    Converge,
    /// Positivity table.
    Positivity,
    /// Hypothesis checks and diagnostics.
    Diagnose,
    /// Catalog listing.
    ListModels,
}

/// Settings of `converge`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeSettings {
    /// Scheme under test.
    pub scheme: SchemeKind,
    /// Reference step.
    pub ref_delta: f64,
    /// Steps under test.
    pub test_deltas: Vec<f64>,
}

/// Settings of `positivity`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivitySettings {
    /// Schemes, in table order.
    pub schemes: Vec<SchemeKind>,
    /// Step sizes.
    pub deltas: Vec<f64>,
    /// Counting mode.
    pub counting: Counting,
}

/// Settings of `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSettings {
    /// Scheme.
    pub scheme: SchemeKind,
    /// Step size.
    pub delta: f64,
    /// Path index within the seed's stream family.
    pub path: u64,
    /// Treat divergence as an error.
    pub strict: bool,
}

/// Settings of `diagnose`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseSettings {
    /// Moment exponent `p̄`.
    pub p_bar: f64,
    /// Inverse-moment exponent `q̄`.
    pub q_bar: f64,
    /// Exponent `p > 2` of the monotonicity check.
    pub p: f64,
    /// Sampled pairs for the pair checks.
    pub samples: usize,
    /// Grid points per component for the dissipativity check.
    pub grid_points: usize,
    /// Lower edge of the sampling region and grid.
    pub lower: f64,
    /// Upper edge of the sampling region and grid.
    pub upper: f64,
    /// Also run the moment and increment diagnostics.
    pub moments: bool,
    /// Step sizes for the policy and moment checks.
    pub deltas: Vec<f64>,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Subcommand.
    pub command: Command,
    /// Catalog model name as given.
    pub model: Option<String>,
    /// Parameter overrides.
    pub params: Vec<(String, f64)>,
    /// Negative-argument convention for the explicit schemes.
    pub negative_argument: NegativeArgument,
    /// Initial state; the model default when `None`.
    pub x0: Option<Vec<f64>>,
    /// Horizon; the model default when `None`.
    pub t_end: Option<f64>,
    /// Number of paths.
    pub paths: usize,
    /// Master seed.
    pub seed: u64,
    /// Worker threads; all cores when `None`.
    pub workers: Option<usize>,
    /// Policy overrides.
    pub policy: PolicyOverrides,
    /// Output directory.
    pub out_dir: PathBuf,
    /// `converge` settings.
    pub converge: ConvergeSettings,
    /// `positivity` settings.
    pub positivity: PositivitySettings,
    /// `simulate` settings.
    pub simulate: SimulateSettings,
    /// `diagnose` settings.
    pub diagnose: DiagnoseSettings,
}

fn pow2_range(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

impl RunConfig {
    /// Defaults for `command`, with the output directory from
    /// [`OUT_DIR_ENV`] or the current directory.
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            model: None,
            params: Vec::new(),
            negative_argument: NegativeArgument::default(),
            x0: None,
            t_end: None,
            paths: 100_000,
            seed: 1,
            workers: None,
            policy: PolicyOverrides::default(),
            out_dir: std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
            converge: ConvergeSettings {
                scheme: SchemeKind::Pptem,
                ref_delta: 2f64.powi(-14),
                test_deltas: pow2_range(8, 12),
            },
            positivity: PositivitySettings {
                schemes: vec![SchemeKind::Pptem, SchemeKind::Em, SchemeKind::TemNorm],
                deltas: pow2_range(2, 5),
                counting: Counting::PerValue,
            },
            simulate: SimulateSettings { scheme: SchemeKind::Pptem, delta: 2f64.powi(-8), path: 0, strict: false },
            diagnose: DiagnoseSettings {
                p_bar: 4.0,
                q_bar: 1.0,
                p: 3.0,
                samples: 10_000,
                grid_points: 64,
                lower: 1e-3,
                upper: 1e3,
                moments: false,
                deltas: pow2_range(6, 10),
            },
        }
    }

    /// Parameter overrides in the form the catalog expects.
    pub fn param_refs(&self) -> Vec<(&str, f64)> {
        self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }
}

/// Parses a number, accepting `a^b`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = if let Some((a, b)) = s.split_once('^') {
        let base: f64 = a.trim().parse().map_err(|_| format!("malformed number `{s}`"))?;
        let exp: f64 = b
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .parse()
            .map_err(|_| format!("malformed number `{s}`"))?;
        base.powf(exp)
    } else {
        s.parse().map_err(|_| format!("malformed number `{s}`"))?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("number `{s}` is not finite"))
    }
}

/// Parses a nonnegative whole number, accepting `1e5` and `10^5`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    let v = parse_number(s)?;
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
        Ok(v as u64)
    } else {
        Err(format!("`{s}` is not a whole number"))
    }
}

/// Parses a comma separated list of numbers.
pub fn parse_number_list(s: &str) -> Result<Vec<f64>, String> {
    let out = s.split(',').map(parse_number).collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        Err("empty list".into())
    } else {
        Ok(out)
    }
}

/// Parses a comma separated list of scheme names.
pub fn parse_schemes(s: &str) -> Result<Vec<SchemeKind>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<SchemeKind>()
                .map_err(|_| format!("unknown scheme `{}` (expected em, tem or pptem)", t.trim()))
        })
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

/// One `key = value` line of a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Section, empty for the top level.
    pub section: String,
    /// Key.
    pub key: String,
    /// Raw value.
    pub value: String,
    /// 1-based line number.
    pub line: usize,
}

/// A parsed but unresolved config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// Where it came from, for messages.
    pub path: String,
    /// Entries in file order.
    pub entries: Vec<Entry>,
}

const SECTIONS: [&str; 7] = ["", "params", "policy", "converge", "positivity", "simulate", "diagnose"];

impl ConfigFile {
    /// Parses config text. `path` is only used in messages.
    pub fn parse(path: &str, text: &str) -> Result<Self, Error> {
        let err = |line: usize, message: String| Error::ConfigLine { path: path.to_string(), line, message };
        let mut section = String::new();
        let mut entries = Vec::new();
        let mut seen: HashMap<(String, String), usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("malformed section header `{content}`")))?
                    .trim();
                if !SECTIONS.contains(&name) || name.is_empty() {
                    return Err(err(
                        line,
                        format!("unknown section `[{name}]`; expected one of {}", SECTIONS[1..].join(", ")),
                    ));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) =
                content.split_once('=').ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(err(line, format!("expected `key = value`, got `{content}`")));
            }
            if let Some(first) = seen.insert((section.clone(), key.to_string()), line) {
                return Err(err(line, format!("`{key}` already set on line {first}")));
            }
            entries.push(Entry { section: section.clone(), key: key.to_string(), value: value.to_string(), line });
        }
        Ok(Self { path: path.to_string(), entries })
    }

    /// Reads and parses a file.
    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&path.display().to_string(), &text)
    }

    /// Applies every entry on top of `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), Error> {
        for e in &self.entries {
            apply_entry(cfg, e).map_err(|message| Error::ConfigLine {
                path: self.path.clone(),
                line: e.line,
                message,
            })?;
        }
        if let Some(name) = &cfg.model {
            let refs = cfg.param_refs();
            if let Err(err) = lookup(name, &refs, cfg.negative_argument) {
                let line = match &err {
                    pptem_core::Error::UnknownParameter { name, .. } => self.line_of("params", name),
                    pptem_core::Error::InvalidParameter { name, .. } => self.line_of("params", name),
                    _ => self.line_of("", "model"),
                };
                return Err(match line {
                    Some(line) => Error::ConfigLine { path: self.path.clone(), line, message: err.to_string() },
                    None => err.into(),
                });
            }
        }
        Ok(())
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.section == section && e.key == key).map(|e| e.line)
    }
}

fn apply_entry(cfg: &mut RunConfig, e: &Entry) -> Result<(), String> {
    let v = e.value.as_str();
    let num = || parse_number(v);
    match (e.section.as_str(), e.key.as_str()) {
        ("", "model") => {
            if lookup(v, &[], NegativeArgument::Absolute).is_err() {
                return Err(format!("unknown model `{v}`; available models: {}", MODEL_NAMES.join(", ")));
            }
            cfg.model = Some(v.to_string());
        }
        ("", "paths") => cfg.paths = parse_count(v)? as usize,
        ("", "seed") => cfg.seed = parse_count(v)?,
        ("", "workers") => cfg.workers = Some(parse_count(v)? as usize),
        ("", "t_end") => cfg.t_end = Some(num()?),
        ("", "x0") => cfg.x0 = Some(parse_number_list(v)?),
        ("", "out_dir") => cfg.out_dir = PathBuf::from(v),
        ("", "negative_argument") => {
            cfg.negative_argument = v.parse().map_err(|_| format!("expected absolute or undefined, got `{v}`"))?
        }
        ("params", key) => {
            let value = num()?;
            match cfg.params.iter_mut().find(|(k, _)| k == key) {
                Some(slot) => slot.1 = value,
                None => cfg.params.push((key.to_string(), value)),
            }
        }
        ("policy", "h0") => cfg.policy.h0 = Some(num()?),
        ("policy", "k0_hat") => cfg.policy.k0_hat = Some(num()?),
        ("policy", "k_bar") => cfg.policy.k_bar = Some(num()?),
        ("policy", "u_hat") => cfg.policy.u_hat = Some(num()?),
        ("converge", "scheme") => cfg.converge.scheme = single_scheme(v)?,
        ("converge", "ref_delta") => cfg.converge.ref_delta = num()?,
        ("converge", "test_deltas") => cfg.converge.test_deltas = parse_number_list(v)?,
        ("positivity", "schemes") => cfg.positivity.schemes = parse_schemes(v)?,
        ("positivity", "deltas") => cfg.positivity.deltas = parse_number_list(v)?,
        ("positivity", "counting") => cfg.positivity.counting = v.parse().map_err(|e: Error| e.to_string())?,
        ("simulate", "scheme") => cfg.simulate.scheme = single_scheme(v)?,
        ("simulate", "delta") => cfg.simulate.delta = num()?,
        ("simulate", "path") => cfg.simulate.path = parse_count(v)?,
        ("simulate", "strict") => cfg.simulate.strict = parse_bool(v)?,
        ("diagnose", "p_bar") => cfg.diagnose.p_bar = num()?,
        ("diagnose", "q_bar") => cfg.diagnose.q_bar = num()?,
        ("diagnose", "p") => cfg.diagnose.p = num()?,
        ("diagnose", "samples") => cfg.diagnose.samples = parse_count(v)? as usize,
        ("diagnose", "grid_points") => cfg.diagnose.grid_points = parse_count(v)? as usize,
        ("diagnose", "lower") => cfg.diagnose.lower = num()?,
        ("diagnose", "upper") => cfg.diagnose.upper = num()?,
        ("diagnose", "moments") => cfg.diagnose.moments = parse_bool(v)?,
        ("diagnose", "deltas") => cfg.diagnose.deltas = parse_number_list(v)?,
        (section, key) => {
            let place = if section.is_empty() { "at top level".to_string() } else { format!("in [{section}]") };
            return Err(format!("unknown key `{key}` {place}"));
        }
    }
    Ok(())
}

fn single_scheme(v: &str) -> Result<SchemeKind, String> {
    v.parse().map_err(|_| format!("unknown scheme `{v}` (expected em, tem or pptem)"))
}
