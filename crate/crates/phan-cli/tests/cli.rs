// The thickness is given to ten digits, as a user would type it.
#![allow(clippy::approx_constant)]

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use phan_cli::{parse_config, sweep_trajectory_name, CliError, Workflow, DEFAULT_OUT};

fn phan(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phan"));
    cmd.args(args).env_remove("NEMATIC_PHAN_OUT");
    if let Some(dir) = env_out {
        cmd.env("NEMATIC_PHAN_OUT", dir);
    }
    cmd.output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn diagnostic(out: &Output) -> (String, String) {
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    let (code, msg) = err.trim_end().split_once('\t').unwrap();
    (code.to_string(), msg.to_string())
}

fn argv(s: &str) -> Vec<&str> {
    std::iter::once("phan")
        .chain(s.split_whitespace())
        .collect()
}

#[test]
fn eigen_flags_become_a_config() {
    let cfg = parse_config(argv("eigen --h 1 --lh 1 --d 0.7853981634"), None).unwrap();
    assert_eq!(cfg.workflow, Workflow::Eigen);
    assert_eq!(
        (cfg.params.h, cfg.params.l_h, cfg.params.d),
        (1.0, 1.0, 0.7853981634)
    );
    assert_eq!(cfg.output_dir, Path::new(DEFAULT_OUT));
    assert_eq!((cfg.dim, cfg.n_normal, cfg.n_tangential), (1, 128, 32));
    assert_eq!((cfg.dt, cfg.t_end, cfg.sample_every), (1e-3, 100.0, 100));
    assert_eq!(cfg.jobs, None);
}

#[test]
fn negative_thickness_is_a_bad_value() {
    match parse_config(argv("flow --d -1"), None) {
        Err(CliError::BadValue { name, reason }) => {
            assert_eq!(name, "d");
            assert_eq!(reason, "must be positive");
        }
        other => panic!("{other:?}"),
    }
    let out = phan(&["flow", "--d", "-1"], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        diagnostic(&out),
        ("BadValue".into(), "d: must be positive".into())
    );
}

#[test]
fn flags_override_the_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    fs::write(
        &file,
        r#"{"dt": 0.001, "n_normal": 64, "t-end": 7, "d_list": [0.4, 0.9]}"#,
    )
    .unwrap();
    let f = file.to_str().unwrap();
    let cfg = parse_config(["phan", "flow", "--config", f, "--dt", "0.0005"], None).unwrap();
    assert_eq!(cfg.dt, 0.0005);
    assert_eq!(cfg.n_normal, 64);
    assert_eq!(cfg.t_end, 7.0);
    assert_eq!(cfg.d_list, vec![0.4, 0.9]);
    assert_eq!(cfg.sample_every, 100);
}

#[test]
fn unknown_keys_and_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    fs::write(&file, r#"{"dt": 0.001, "viscosity": 2}"#).unwrap();
    let out = phan(&["flow", "--config", file.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(diagnostic(&out).0, "UnknownKey");

    let out = phan(&["flow", "--viscosity", "2"], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(diagnostic(&out).0, "BadFlag");

    fs::write(&file, r#"{"dt": "small"}"#).unwrap();
    assert!(matches!(
        parse_config(["phan", "flow", "--config", file.to_str().unwrap()], None),
        Err(CliError::BadValue { .. })
    ));
}

#[test]
fn value_checks() {
    for (args, name) in [
        ("flow --dim 4", "dim"),
        ("flow --n-normal 2", "n-normal"),
        ("flow --dt 0", "dt"),
        ("flow --lh -2", "lh"),
        ("sweep --d-list 0.9,0.5", "d-list"),
        ("sweep --d-list 0.5,x", "d-list"),
        ("sweep --jobs 0", "jobs"),
        ("flow --sample-every 0", "sample-every"),
        ("flow --dim two", "dim"),
    ] {
        match parse_config(argv(args), None) {
            Err(CliError::BadValue { name: n, .. }) => assert_eq!(n, name, "{args}"),
            other => panic!("{args}: {other:?}"),
        }
    }
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let cfg = parse_config(argv("equilibrium"), Some("/tmp/elsewhere")).unwrap();
    assert_eq!(cfg.output_dir, Path::new("/tmp/elsewhere"));
    let cfg = parse_config(argv("equilibrium --out here"), Some("/tmp/elsewhere")).unwrap();
    assert_eq!(cfg.output_dir, Path::new("here"));
}

#[test]
fn eigen_at_the_critical_thickness() {
    let out = phan(
        &["eigen", "--h", "1", "--lh", "1", "--d", "0.7853981634"],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((num(&v, "lambda1") - 1.0).abs() < 1e-9);
    assert!((num(&v, "d_c") - FRAC_PI_4).abs() < 1e-15);
    assert!(num(&v, "residual") < 1e-12);
}

#[test]
fn equilibrium_writes_profile_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = phan(
        &[
            "equilibrium",
            "--h",
            "1",
            "--lh",
            "1",
            "--d",
            "1.2",
            "--n-normal",
            "256",
        ],
        Some(dir.path()),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x3,phi"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, p) = l.split_once(',').unwrap();
            (x.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 257);
    assert!(rows[0].1 > 0.0 && rows[0].1 < FRAC_PI_2);
    assert_eq!(rows[256], (1.2, 0.0));

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("equilibrium.json")).unwrap())
            .unwrap();
    assert_eq!(summary, stdout_json(&out));
    assert!(num(&summary, "bvp_residual") < 1e-7);
    assert_eq!(summary["iterations"].as_u64().map(|n| n > 0), Some(true));
    assert!(num(&summary, "energy") < 1.1);
}

#[test]
fn sweep_brackets_the_critical_thickness() {
    let dir = tempfile::tempdir().unwrap();
    let out = phan(
        &[
            "sweep",
            "--h",
            "1",
            "--lh",
            "1",
            "--d-list",
            "0.5,0.7,0.9,1.1",
            "--jobs",
            "2",
        ],
        Some(dir.path()),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    let bracket = &report["d_transition_empirical"];
    let (lo, hi) = (num(bracket, "lower"), num(bracket, "upper"));
    assert!(lo <= 0.7854 && 0.7854 <= hi, "[{lo}, {hi}]");
    let classes: Vec<&str> = report["classifications"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert_eq!(classes, ["P", "P", "HAN", "HAN"]);
    for key in [
        "d_values",
        "classifications",
        "d_transition_empirical",
        "d_c_theory",
        "kappa_by_d",
    ] {
        assert!(report.get(key).is_some(), "{key}");
    }
    for d in [0.5, 0.7, 0.9, 1.1] {
        assert!(dir.path().join(sweep_trajectory_name(d)).exists());
    }
}

#[test]
fn stability_signs() {
    let below = stdout_json(&phan(&["stability", "--d", "0.5"], None));
    assert!(num(&below, "mu1") > 0.0 && num(&below, "nu1") > 0.0);
    let above = stdout_json(&phan(&["stability", "--d", "1.2"], None));
    assert!(num(&above, "mu1") > 0.0 && num(&above, "nu1") < 0.0);
}

#[test]
fn flow_outputs_are_reproducible() {
    let args = |dir: &Path| {
        vec![
            "flow".to_string(),
            "--d=1.2".into(),
            "--dim=2".into(),
            "--n-tangential=8".into(),
            "--n-normal=16".into(),
            "--dt=0.01".into(),
            "--t-end=3".into(),
            "--sample-every=10".into(),
            "--seed=11".into(),
            format!("--out={}", dir.display()),
        ]
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = |dir: &Path| {
        let out = Command::new(env!("CARGO_BIN_EXE_phan"))
            .args(args(dir))
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    assert_eq!(run(a.path()), run(b.path()));
    for f in ["trajectory.csv", "flow.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap()
        );
    }
    let csv = fs::read_to_string(a.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,total_energy,dissipation,u_l2,u_linf,phi_min,phi_max,dist_to_zero,dist_to_star,div_residual\n"));
    assert_eq!(csv.lines().count(), 1 + 1 + 30);

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("flow.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "Completed");
    assert_eq!(summary["angle_band_ok"], true);
}

#[test]
fn failures_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // a numerical failure: the equilibrium cannot meet an impossible residual bound
    let out = phan(
        &["equilibrium", "--d", "1.2", "--tol-eq", "1e-30"],
        Some(dir.path()),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out).0, "ResidualTooLarge");

    // an output directory that is a regular file
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = phan(
        &[
            "equilibrium",
            "--d",
            "1.2",
            "--out",
            blocker.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(diagnostic(&out).0, "Io");

    let out = phan(&["eigen", "--config", "/nonexistent/config.json"], None);
    assert_eq!(out.status.code(), Some(3));

    let out = phan(&["flow", "--dt", "1"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(diagnostic(&out).0, "TimestepTooLarge");
}

#[test]
fn help_is_not_an_error() {
    let out = phan(&["--help"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("sweep"));
    let out = phan(&["flow", "--help"], None);
    assert!(String::from_utf8_lossy(&out.stdout).contains("--n-tangential"));
}
