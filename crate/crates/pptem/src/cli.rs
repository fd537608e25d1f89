//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pptem_core::assumptions::{
    check_dissipativity, check_lipschitz_growth, check_monotonicity, theorem_preconditions, DissipativityGrid, Region,
    Sampling,
};
use pptem_core::models::{catalog, format_params, lookup, CatalogEntry};
use pptem_core::scheme::simulate_path;
use pptem_core::{IncrementGrid, TruncationPolicy};

use crate::config::{parse_count, parse_number, parse_number_list, parse_schemes, Command, ConfigFile, RunConfig};
use crate::experiments::{
    increment_scaling_diagnostic, moment_diagnostic, positivity_table, run_convergence_study, step_count,
    ConvergenceConfig, IncrementScalingConfig, MomentDiagnosticConfig, PositivityTableConfig,
};
use crate::output::{self, Metadata};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "pptem", version, about = "Positivity-preserving truncated Euler-Maruyama experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Simulate one path and write it out.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scheme: pptem, em or tem.
        #[arg(long)]
        scheme: Option<String>,
        /// Step size, e.g. 2^-8.
        #[arg(long)]
        delta: Option<String>,
        /// Path index.
        #[arg(long)]
        path: Option<u64>,
        /// Exit with status 3 if the path diverges.
        #[arg(long)]
        strict: bool,
    },
    /// Estimate strong errors and the fitted order.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Scheme: pptem, em or tem.
        #[arg(long)]
        scheme: Option<String>,
        /// Reference step size.
        #[arg(long)]
        ref_delta: Option<String>,
        /// Comma separated test step sizes.
        #[arg(long)]
        deltas: Option<String>,
    },
    /// Count nonpositive iterates per scheme and step size.
    Positivity {
        #[command(flatten)]
        common: Common,
        /// Comma separated schemes.
        #[arg(long)]
        schemes: Option<String>,
        /// Comma separated step sizes.
        #[arg(long)]
        deltas: Option<String>,
        /// per_value or per_path.
        #[arg(long)]
        counting: Option<String>,
    },
    /// Check the coefficient hypotheses and the clamp policy.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Moment exponent.
        #[arg(long)]
        p_bar: Option<String>,
        /// Inverse-moment exponent.
        #[arg(long)]
        q_bar: Option<String>,
        /// Also run the moment and increment diagnostics.
        #[arg(long)]
        moments: bool,
    },
    /// List the catalog models.
    ListModels,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog model name.
    #[arg(long)]
    model: Option<String>,
    /// Number of paths.
    #[arg(long)]
    paths: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Horizon T.
    #[arg(long)]
    t_end: Option<String>,
    /// Model parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Policy override (h0, k0_hat, k_bar, u_hat), repeatable.
    #[arg(long = "policy", value_name = "KEY=VALUE")]
    policy: Vec<String>,
    /// absolute or undefined.
    #[arg(long)]
    negative_argument: Option<String>,
}

fn flag<T>(name: &str, r: Result<T, String>) -> Result<T, Error> {
    r.map_err(|m| Error::Config(format!("--{name}: {m}")))
}

fn key_value(name: &str, s: &str) -> Result<(String, f64), Error> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("--{name}: expected KEY=VALUE, got `{s}`")))?;
    Ok((k.trim().to_string(), flag(name, parse_number(v))?))
}

fn resolve_common(command: Command, c: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &c.config {
        ConfigFile::read(path)?.apply(&mut cfg)?;
    }
    if let Some(m) = &c.model {
        cfg.model = Some(m.clone());
    }
    if let Some(p) = &c.paths {
        cfg.paths = flag("paths", parse_count(p))? as usize;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(w) = c.workers {
        cfg.workers = Some(w);
    }
    if let Some(d) = &c.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(t) = &c.t_end {
        cfg.t_end = Some(flag("t-end", parse_number(t))?);
    }
    if let Some(n) = &c.negative_argument {
        cfg.negative_argument = n.parse()?;
    }
    for s in &c.set {
        let (k, v) = key_value("set", s)?;
        match cfg.params.iter_mut().find(|(key, _)| *key == k) {
            Some(slot) => slot.1 = v,
            None => cfg.params.push((k, v)),
        }
    }
    for s in &c.policy {
        let (k, v) = key_value("policy", s)?;
        let slot = match k.as_str() {
            "h0" => &mut cfg.policy.h0,
            "k0_hat" => &mut cfg.policy.k0_hat,
            "k_bar" => &mut cfg.policy.k_bar,
            "u_hat" => &mut cfg.policy.u_hat,
            _ => {
                return Err(Error::Config(format!("--policy: unknown key `{k}` (expected h0, k0_hat, k_bar or u_hat)")))
            }
        };
        *slot = Some(v);
    }
    Ok(cfg)
}

/// Parses `args` (program name first) into a resolved configuration.
pub fn parse_args<I, T>(args: I) -> Result<Option<RunConfig>, Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(None);
        }
        Err(e) => {
            let text = e.render().to_string();
            return Err(Error::Config(text.trim_start_matches("error: ").trim_end().to_string()));
        }
    };
    let cfg = match &cli.command {
        Cmd::ListModels => RunConfig::defaults(Command::ListModels),
        Cmd::Simulate { common, scheme, delta, path, strict } => {
            let mut cfg = resolve_common(Command::Simulate, common)?;
            if let Some(s) = scheme {
                cfg.simulate.scheme = s.parse()?;
            }
            if let Some(d) = delta {
                cfg.simulate.delta = flag("delta", parse_number(d))?;
            }
            if let Some(p) = path {
                cfg.simulate.path = *p;
            }
            cfg.simulate.strict |= *strict;
            cfg
        }
        Cmd::Converge { common, scheme, ref_delta, deltas } => {
            let mut cfg = resolve_common(Command::Converge, common)?;
            if let Some(s) = scheme {
                cfg.converge.scheme = s.parse()?;
            }
            if let Some(d) = ref_delta {
                cfg.converge.ref_delta = flag("ref-delta", parse_number(d))?;
            }
            if let Some(d) = deltas {
                cfg.converge.test_deltas = flag("deltas", parse_number_list(d))?;
            }
            cfg
        }
        Cmd::Positivity { common, schemes, deltas, counting } => {
            let mut cfg = resolve_common(Command::Positivity, common)?;
            if let Some(s) = schemes {
                cfg.positivity.schemes = flag("schemes", parse_schemes(s))?;
            }
            if let Some(d) = deltas {
                cfg.positivity.deltas = flag("deltas", parse_number_list(d))?;
            }
            if let Some(c) = counting {
                cfg.positivity.counting = c.parse()?;
            }
            cfg
        }
        Cmd::Diagnose { common, p_bar, q_bar, moments } => {
            let mut cfg = resolve_common(Command::Diagnose, common)?;
            if let Some(p) = p_bar {
                cfg.diagnose.p_bar = flag("p-bar", parse_number(p))?;
            }
            if let Some(q) = q_bar {
                cfg.diagnose.q_bar = flag("q-bar", parse_number(q))?;
            }
            cfg.diagnose.moments |= *moments;
            cfg
        }
    };
    Ok(Some(cfg))
}

/// Entry point of the `pptem` binary.
pub fn main_with_args<I, T>(args: I) -> Result<(), Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(args)? {
        Some(cfg) => run(&cfg).map(|_| ()),
        None => Ok(()),
    }
}

/// Runs a resolved configuration and returns the files written.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>, Error> {
    if cfg.command == Command::ListModels {
        list_models();
        return Ok(Vec::new());
    }
    let Some(model) = cfg.model.as_deref() else {
        return Err(Error::Config(format!(
            "no model given (use --model or `model =` in the config file); available models: {}",
            pptem_core::models::MODEL_NAMES.join(", ")
        )));
    };
    let entry = lookup(model, &cfg.param_refs(), cfg.negative_argument)?;
    match cfg.command {
        Command::Simulate => simulate(cfg, &entry),
        Command::Converge => converge(cfg, &entry),
        Command::Positivity => positivity(cfg, &entry),
        Command::Diagnose => diagnose(cfg, &entry),
        Command::ListModels => unreachable!(),
    }
}

fn list_models() {
    let mut out = std::io::stdout().lock();
    for e in catalog() {
        let x0: Vec<String> = e.x0.as_slice().iter().map(|v| format!("{v}")).collect();
        let g = e.spec.growth();
        let text = format!(
            "{:<18} {:<13} {}\n{:<18} params: {}\n{:<18} x0 = ({}), T = {}, alpha = {}, beta = {}, studies: {}\n",
            e.name,
            e.short_name,
            e.description,
            "",
            format_params(&e.params),
            "",
            x0.join(", "),
            e.t_end,
            g.alpha,
            g.beta,
            e.studies.join(", ")
        );
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        if out.write_all(text.as_bytes()).is_err() {
            return;
        }
    }
}

fn metadata(cfg: &RunConfig, entry: &CatalogEntry, t_end: f64) -> Metadata {
    let mut m = Metadata::new();
    m.push("model", entry.name)
        .push("params", format_params(&entry.params))
        .push("negative_argument", format!("{:?}", cfg.negative_argument).to_lowercase())
        .push("seed", cfg.seed)
        .push("paths", cfg.paths)
        .push("t_end", output::num(t_end));
    m
}

fn x0_of(cfg: &RunConfig, entry: &CatalogEntry) -> Vec<f64> {
    cfg.x0.clone().unwrap_or_else(|| entry.x0.as_slice().to_vec())
}

fn simulate(cfg: &RunConfig, entry: &CatalogEntry) -> Result<Vec<PathBuf>, Error> {
    let s = &cfg.simulate;
    let t_end = cfg.t_end.unwrap_or(entry.t_end);
    let policy = TruncationPolicy::for_model_with(&entry.spec, &cfg.policy)?;
    let n = step_count(t_end, s.delta)?;
    let inc = IncrementGrid::generate(cfg.seed, s.path, n, entry.spec.noise_dim(), s.delta)?;
    let iv = policy.clamp_interval(s.delta)?;
    let traj = simulate_path(&entry.spec, s.scheme, s.delta, n, &inc, &x0_of(cfg, entry), &iv)?;
    let mut meta = metadata(cfg, entry, t_end);
    meta.push("scheme", s.scheme).push("delta", output::num(s.delta)).push("path", s.path).push_policy(&policy);
    meta.push("clamp_upper", output::num(iv.upper()));
    let name = format!("{}_{}_path.csv", entry.short_name, s.scheme.name());
    let file = output::write_file(&cfg.out_dir, &name, &output::trajectory_csv(&meta, &traj))?;
    let last = traj.post_clamp.last().map(|x| format!("{:?}", x.as_slice())).unwrap_or_default();
    println!("{} {} delta={} steps={} X(T)={last}", entry.name, s.scheme, s.delta, n);
    if let Some(k) = traj.first_nonpositive_step {
        println!("first nonpositive monitored value at step {k}");
    }
    println!("wrote {}", file.display());
    if traj.diverged {
        let step = traj.post_clamp.iter().position(|x| !x.is_finite()).unwrap_or(n);
        println!("path diverged at step {step}");
        if s.strict {
            return Err(Error::Diverged { step });
        }
    }
    Ok(vec![file])
}

fn converge(cfg: &RunConfig, entry: &CatalogEntry) -> Result<Vec<PathBuf>, Error> {
    let c = &cfg.converge;
    let t_end = cfg.t_end.unwrap_or(entry.t_end);
    let policy = TruncationPolicy::for_model_with(&entry.spec, &cfg.policy)?;
    let mut study = ConvergenceConfig::new(c.scheme, policy);
    study.t_end = t_end;
    study.ref_delta = c.ref_delta;
    study.test_deltas = c.test_deltas.clone();
    study.paths = cfg.paths;
    study.master_seed = cfg.seed;
    study.workers = cfg.workers;
    let table = run_convergence_study(&entry.spec, &x0_of(cfg, entry), &study)?;
    let mut meta = metadata(cfg, entry, t_end);
    meta.push("scheme", c.scheme)
        .push("ref_delta", output::num(c.ref_delta))
        .push("reference", "same scheme at ref_delta")
        .push("reference_diverged", table.reference_diverged)
        .push_policy(&policy);
    let stem = format!("{}_{}_convergence", entry.short_name, c.scheme.name());
    let csv = output::write_file(&cfg.out_dir, &format!("{stem}.csv"), &output::error_table_csv(&meta, &table))?;
    let plot = output::write_file(&cfg.out_dir, &format!("{stem}_plot.csv"), &output::plot_data(&meta, &table))?;
    println!("{} {} M={} reference diverged on {} paths", entry.name, c.scheme, cfg.paths, table.reference_diverged);
    println!("{:>14} {:>14} {:>9}", "delta", "rms_error", "diverged");
    for r in &table.rows {
        println!("{:>14.6e} {:>14.6e} {:>9}", r.delta, r.rms_error, r.diverged_count);
    }
    println!("{}", output::describe_fit(table.fit.as_ref()));
    println!("wrote {} and {}", csv.display(), plot.display());
    Ok(vec![csv, plot])
}

fn positivity(cfg: &RunConfig, entry: &CatalogEntry) -> Result<Vec<PathBuf>, Error> {
    let p = &cfg.positivity;
    let params = cfg.param_refs();
    let rows = positivity_table(&PositivityTableConfig {
        model: entry.name,
        params: &params,
        negative_argument: cfg.negative_argument,
        policy: cfg.policy,
        schemes: &p.schemes,
        deltas: &p.deltas,
        t_end: cfg.t_end,
        paths: cfg.paths,
        master_seed: cfg.seed,
        counting: p.counting,
        workers: cfg.workers,
    })?;
    let mut meta = metadata(cfg, entry, cfg.t_end.unwrap_or(entry.t_end));
    meta.push("counting", p.counting.name());
    let file = output::write_file(
        &cfg.out_dir,
        &format!("{}_positivity.csv", entry.short_name),
        &output::positivity_csv(&meta, &rows),
    )?;
    println!("{:<14} {:<6} {:>12} {:>12} {:>12} {:>9}", "model", "scheme", "delta", "% values", "% paths", "diverged");
    for r in &rows {
        println!(
            "{:<14} {:<6} {:>12.6e} {:>12.4} {:>12.4} {:>9}",
            r.model,
            r.scheme.name(),
            r.delta,
            r.percent_values,
            r.percent_paths,
            r.diverged_paths
        );
    }
    println!("wrote {}", file.display());
    Ok(vec![file])
}

fn diagnose(cfg: &RunConfig, entry: &CatalogEntry) -> Result<Vec<PathBuf>, Error> {
    let d = &cfg.diagnose;
    let model = &entry.spec;
    let region = Region::cube(model.dim(), d.lower, d.upper)?;
    let sampling = Sampling { n_samples: d.samples, seed: cfg.seed, times: vec![0.0] };
    let grid = DissipativityGrid { points: d.grid_points, lower: d.lower, upper: d.upper, ..Default::default() };
    let reports = vec![
        check_lipschitz_growth(model, &region, &sampling)?,
        check_dissipativity(model, d.p_bar, d.q_bar, &grid)?,
        check_monotonicity(model, d.p, &region, &sampling, None)?,
    ];
    println!("{} on [{}, {}]^{}", entry.name, d.lower, d.upper, model.dim());
    for r in &reports {
        let consts: Vec<String> = r.constants.iter().map(|(k, v)| format!("{k} = {v:.6}")).collect();
        println!(
            "  {:<16} {} margin {:.6e}  {}",
            r.id,
            if r.pass { "pass" } else { "FAIL" },
            r.worst_margin,
            consts.join(", ")
        );
    }
    for p in theorem_preconditions(model.growth(), d.p_bar, d.q_bar) {
        println!("  {:<36} {:.4} <= {:.4}: {}", p.relation, p.lhs, p.rhs, if p.holds { "holds" } else { "fails" });
    }
    let policy = TruncationPolicy::for_model_with(model, &cfg.policy)?;
    let policy_report = policy.validate(&d.deltas);
    println!(
        "  clamp policy over {} step sizes: {}",
        d.deltas.len(),
        if policy_report.passed() { "pass" } else { "FAIL" }
    );
    for c in policy_report.failures() {
        println!("    delta {:e}: {:?}", c.delta, c);
    }
    let t_end = cfg.t_end.unwrap_or(entry.t_end);
    if d.moments {
        let x0 = x0_of(cfg, entry);
        let mcfg = MomentDiagnosticConfig {
            p_bar: d.p_bar,
            q_bar: d.q_bar,
            paths: cfg.paths,
            master_seed: cfg.seed,
            workers: cfg.workers,
            ..Default::default()
        };
        let m = moment_diagnostic(model, &x0, t_end, pptem_core::SchemeKind::Pptem, &d.deltas, &policy, &mcfg)?;
        println!("  moments: worst ratio {:.4}, {}", m.worst_ratio, if m.stable { "stable" } else { "UNSTABLE" });
        let icfg = IncrementScalingConfig {
            p: d.p.max(2.0),
            scheme: pptem_core::SchemeKind::Pptem,
            paths: cfg.paths,
            master_seed: cfg.seed,
            workers: cfg.workers,
        };
        let inc = increment_scaling_diagnostic(model, &x0, t_end, &d.deltas, &policy, &icfg)?;
        println!("  increments: slope {:.4} (bound predicts {:.4})", inc.fit.slope, inc.target);
    }
    let mut meta = metadata(cfg, entry, t_end);
    meta.push("p_bar", d.p_bar)
        .push("q_bar", d.q_bar)
        .push("p", d.p)
        .push("region", format!("[{}, {}]", d.lower, d.upper));
    meta.push("policy_valid", policy_report.passed()).push_policy(&policy);
    let file = output::write_file(
        &cfg.out_dir,
        &format!("{}_diagnose.csv", entry.short_name),
        &output::assumptions_csv(&meta, &reports),
    )?;
    println!("wrote {}", file.display());
    Ok(vec![file])
}
