use std::path::Path;
use std::process::{Command, Output};

fn pptem(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pptem"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PPTEM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).skip(1).map(String::from).collect()
}

#[test]
fn list_models_prints_the_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let o = pptem(&["list-models"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> =
        text.lines().filter(|l| !l.starts_with(' ')).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(
        names,
        ["cev", "cev_lamperti", "ait_sahalia", "ginzburg_landau", "lotka_volterra_3d", "sirs", "hiv_aids"]
    );
}

#[test]
fn converge_from_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "model = ginzburg_landau\npaths = 20\n").unwrap();
    let o = pptem(&["converge", "--config", "run.cfg", "--out-dir", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("out/gl_pptem_convergence.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# model: ginzburg_landau"));
    assert!(text.contains("# paths: 20"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 6);
    let deltas: Vec<f64> = rows[..5].iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(deltas, (8..=12).map(|k| 2f64.powi(-k)).collect::<Vec<_>>());
    assert!(rows[5].starts_with("fitted_order,"));
    assert!(dir.path().join("out/gl_pptem_convergence_plot.csv").exists());
}

#[test]
fn flags_override_config_and_env_sets_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "model = gl\npaths = 20\n[converge]\nscheme = pptem\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pptem"))
        .args([
            "converge",
            "--config",
            "run.cfg",
            "--scheme",
            "em",
            "--paths",
            "5",
            "--deltas",
            "2^-6,2^-7",
            "--ref-delta",
            "2^-9",
        ])
        .current_dir(dir.path())
        .env("PPTEM_OUT_DIR", "envout")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("envout/gl_em_convergence.csv");
    assert!(std::fs::read_to_string(&csv).unwrap().contains("# paths: 5"));
    assert_eq!(data_rows(&csv).len(), 3);
}

#[test]
fn positivity_table_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let o = pptem(&["positivity", "--model", "cev", "--paths", "50", "--out-dir", "."], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_rows(&dir.path().join("cev_positivity.csv"));
    assert_eq!(rows.len(), 12);
    for r in rows.iter().filter(|r| r.contains(",pptem,")) {
        let post: f64 = r.split(',').nth(6).unwrap().parse().unwrap();
        assert_eq!(post, 0.0, "{r}");
    }
}

#[test]
fn simulate_writes_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = pptem(&["simulate", "--model", "lv", "--delta", "2^-6", "--out-dir", "."], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("lv_pptem_path.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l == "t,pre_0,pre_1,pre_2,x_0,x_1,x_2"));
    assert_eq!(data_rows(&path).len(), 65);
}

#[test]
fn diagnose_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = pptem(&["diagnose", "--model", "gl", "--out-dir", "."], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("dissipativity"));
    assert!(dir.path().join("gl_diagnose.csv").exists());
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "model = gl\n\n[params]\nsigmaa = 3\n").unwrap();
    let o = pptem(&["converge", "--config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.cfg:4:"), "{}", stderr(&o));
    assert!(stderr(&o).contains("sigmaa"));

    let o = pptem(&["converge", "--model", "heston"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ginzburg_landau"));

    let o = pptem(&["converge"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = pptem(&["converge", "--model", "gl", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = pptem(&["converge", "--model", "gl", "--deltas", "0.3", "--paths", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--model",
        "cev",
        "--scheme",
        "em",
        "--delta",
        "0.25",
        "--negative-argument",
        "undefined",
        "--path",
        "1",
    ];
    let lenient = pptem(&args, dir.path());
    assert!(lenient.status.success(), "{}", stderr(&lenient));
    assert!(String::from_utf8_lossy(&lenient.stdout).contains("diverged"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    let o = pptem(&strict, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("file"), "").unwrap();
    let o = pptem(&["simulate", "--model", "gl", "--out-dir", "file/sub"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
