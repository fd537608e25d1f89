//! CSV writers. Every file starts with `# key: value` metadata lines followed
//! by a header row and data rows. Floats are written with 17 significant
//! digits so that they round-trip exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use pptem_core::assumptions::AssumptionReport;
use pptem_core::truncation::TruncationPolicy;
use pptem_core::Trajectory;

use crate::experiments::{ErrorRow, ErrorTable, OrderFit, PositivityRow};
use crate::Error;

/// Ordered `key: value` metadata written as comment lines.
#[derive(Debug, Clone, Default)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    /// Metadata starting with the tool version and a timestamp.
    pub fn new() -> Self {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut m = Self::default();
        m.push("tool", concat!("pptem ", env!("CARGO_PKG_VERSION")));
        m.push("created_unix", secs);
        m
    }

    /// Appends an entry.
    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string().replace('\n', " ")));
        self
    }

    /// Appends the policy constants.
    pub fn push_policy(&mut self, policy: &TruncationPolicy) -> &mut Self {
        self.push("policy_h0", num(policy.h0()))
            .push("policy_gamma", num(policy.gamma()))
            .push("policy_k0_hat", num(policy.k0_hat()))
            .push("policy_k_bar", num(policy.k_bar()))
            .push("policy_u_hat", num(policy.u_hat()))
    }

    fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
    }
}

/// Formats a float with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Strips metadata lines, leaving the header row and the data.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

/// Convergence table: one row per step size and a trailing fit row.
pub fn error_table_csv(meta: &Metadata, table: &ErrorTable) -> String {
    let mut s = meta.render();
    s.push_str("delta,rms_error,diverged_count\n");
    for r in &table.rows {
        let _ = writeln!(s, "{},{},{}", num(r.delta), num(r.rms_error), r.diverged_count);
    }
    if let Some(fit) = &table.fit {
        let _ = writeln!(s, "fitted_order,{},{}", num(fit.slope), num(fit.intercept));
    }
    s
}

/// Rows and `(slope, intercept)` read back from a convergence CSV.
pub type ParsedErrorTable = (Vec<ErrorRow>, Option<(f64, f64)>);

/// Parses the output of [`error_table_csv`].
pub fn parse_error_table(text: &str) -> Result<ParsedErrorTable, Error> {
    let bad = |l: &str| Error::Config(format!("malformed convergence row `{l}`"));
    let mut rows = Vec::new();
    let mut fit = None;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some("delta,rms_error,diverged_count") {
        return Err(Error::Config("missing convergence header".into()));
    }
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        if cols.len() != 3 {
            return Err(bad(l));
        }
        let f = |c: &str| c.parse::<f64>().map_err(|_| bad(l));
        if cols[0] == "fitted_order" {
            fit = Some((f(cols[1])?, f(cols[2])?));
        } else {
            rows.push(ErrorRow {
                delta: f(cols[0])?,
                rms_error: f(cols[1])?,
                diverged_count: cols[2].parse().map_err(|_| bad(l))?,
            });
        }
    }
    Ok((rows, fit))
}

/// Plot data: base-2 logs of step and error, plus a slope-½ guide through
/// the first finite point.
pub fn plot_data(meta: &Metadata, table: &ErrorTable) -> String {
    let mut s = meta.render();
    s.push_str("log2_delta,log2_rms_error,log2_reference_half\n");
    let anchor = table.rows.iter().find(|r| r.rms_error.is_finite() && r.rms_error > 0.0);
    for r in &table.rows {
        let guide = anchor.map_or(f64::NAN, |a| a.rms_error.log2() + 0.5 * (r.delta.log2() - a.delta.log2()));
        let _ = writeln!(s, "{},{},{}", num(r.delta.log2()), num(r.rms_error.log2()), num(guide));
    }
    s
}

/// Positivity table.
pub fn positivity_csv(meta: &Metadata, rows: &[PositivityRow]) -> String {
    let mut s = meta.render();
    s.push_str("model,scheme,delta,percent_nonpositive,percent_values,percent_paths,post_step_percent,diverged_paths,counting\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.model,
            r.scheme.name(),
            num(r.delta),
            num(r.percent_nonpositive),
            num(r.percent_values),
            num(r.percent_paths),
            num(r.post_step_percent),
            r.diverged_paths,
            r.counting.name()
        );
    }
    s
}

/// One path: time, pre-clamp and post-clamp components.
pub fn trajectory_csv(meta: &Metadata, traj: &Trajectory) -> String {
    let mut s = meta.render();
    let d = traj.post_clamp.first().map_or(0, |x| x.dim());
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("pre_{i}")));
    header.extend((0..d).map(|i| format!("x_{i}")));
    s.push_str(&header.join(","));
    s.push('\n');
    for ((t, pre), post) in traj.times.iter().zip(&traj.pre_clamp).zip(&traj.post_clamp) {
        let mut row = vec![num(*t)];
        row.extend(pre.as_slice().iter().map(|v| num(*v)));
        row.extend(post.as_slice().iter().map(|v| num(*v)));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Hypothesis checks: one row per estimated constant.
pub fn assumptions_csv(meta: &Metadata, reports: &[AssumptionReport]) -> String {
    let mut s = meta.render();
    s.push_str("check,pass,worst_margin,constant,value\n");
    for r in reports {
        if r.constants.is_empty() {
            let _ = writeln!(s, "{},{},{},,", r.id, r.pass, num(r.worst_margin));
        }
        for (name, v) in &r.constants {
            let _ = writeln!(s, "{},{},{},{},{}", r.id, r.pass, num(r.worst_margin), name, num(*v));
        }
    }
    s
}

/// Short description of a fit for terminal output.
pub fn describe_fit(fit: Option<&OrderFit>) -> String {
    match fit {
        Some(f) => format!(
            "fitted order {:.4} (intercept {:.4}, {} points, {} excluded)",
            f.slope, f.intercept, f.used, f.excluded
        ),
        None => "no fit (fewer than two finite errors)".into(),
    }
}

/// Writes `contents` to `dir/name`, creating `dir`.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ErrorTable {
        ErrorTable {
            rows: vec![
                ErrorRow { delta: 0.25, rms_error: 0.1 + 1e-17, diverged_count: 0 },
                ErrorRow { delta: 0.125, rms_error: f64::NAN, diverged_count: 3 },
                ErrorRow { delta: 0.0625, rms_error: 1.0 / 3.0, diverged_count: 0 },
            ],
            fit: Some(OrderFit { slope: 0.5123456789012345, intercept: -1.0, used: 2, excluded: 1 }),
            reference_diverged: 0,
            paths: 10,
        }
    }

    #[test]
    fn convergence_csv_round_trips() {
        let mut meta = Metadata::new();
        meta.push("model", "gl").push("seed", 3);
        let text = error_table_csv(&meta, &table());
        assert!(text.starts_with("# tool: pptem "));
        let (rows, fit) = parse_error_table(&text).unwrap();
        let t = table();
        assert_eq!(rows.len(), 3);
        for (a, b) in rows.iter().zip(&t.rows) {
            assert_eq!(a.delta, b.delta);
            assert!(a.rms_error == b.rms_error || (a.rms_error.is_nan() && b.rms_error.is_nan()));
            assert_eq!(a.diverged_count, b.diverged_count);
        }
        assert_eq!(fit, Some((0.5123456789012345, -1.0)));
    }

    #[test]
    fn body_drops_metadata_only() {
        let text = error_table_csv(&Metadata::new(), &table());
        let body = csv_body(&text);
        assert!(body.starts_with("delta,rms_error,diverged_count\n"));
        assert_eq!(body.lines().count(), 5);
    }

    #[test]
    fn plot_guide_has_slope_half() {
        let text = plot_data(&Metadata::default(), &table());
        let rows: Vec<Vec<f64>> =
            csv_body(&text).lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
        assert_eq!(rows[0][0], -2.0);
        assert!(((rows[2][2] - rows[0][2]) / (rows[2][0] - rows[0][0]) - 0.5).abs() < 1e-12);
    }
}
