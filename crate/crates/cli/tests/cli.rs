use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tepai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tepai")).args(args).output().expect("binary runs")
}

fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn unknown_preset_fails_and_lists_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = tepai(&["run", "--preset", "no-such-thing", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("variance-growth"), "{err}");
}

#[test]
fn presets_lists_every_name() {
    let out = tepai(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "resource-estimation",
        "variance-growth",
        "locality-variance",
        "hybrid",
        "full-tepai",
        "truncation",
        "delta-sweep",
        "switch-study",
    ] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn variance_growth_writes_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = tepai(&["run", "--preset", "variance-growth", "--samples", "8", "--out-dir", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("variance-growth.csv")).unwrap();
    assert!(text.lines().next().unwrap().starts_with("# preset: variance-growth"));
    assert!(text.contains("# seed: 1"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    for col in ["t", "estimate", "std_error", "var_o", "var_v", "g_norm"] {
        assert!(header.split(',').any(|c| c == col), "{col} not in {header}");
    }
}

#[test]
fn tables_do_not_depend_on_worker_count() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (w, dir) in ["1", "4", "16"].iter().zip(&dirs) {
        let out = tepai(&[
            "run",
            "--preset",
            "hybrid",
            "--samples",
            "6",
            "--seed",
            "7",
            "--workers",
            w,
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let name = "hybrid.csv";
    let first = body(&dirs[0].path().join(name));
    assert!(!first.is_empty());
    for dir in &dirs[1..] {
        assert_eq!(body(&dir.path().join(name)), first);
    }
}

#[test]
fn verify_battery_passes() {
    let out = tepai(&["verify"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
}

#[test]
fn verify_skips_dense_comparison_under_truncation() {
    let out = tepai(&["verify", "--chi-cut", "1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().any(|l| l.starts_with("SKIP")), "{text}");
}

const PLAN: &str = r#"
[hamiltonian]
n = 4
coupling = 0.5
omega_seed = 3

[initial]
state = "domain_wall"

[grid]
times = [0.5, 1.0]
steps_per_time = 200

[[segment]]
method = "trotter"
until_time = 0.5

[[segment]]
method = "tepai_unbiased"

[tepai]
delta = "pi/2^6"

[run]
samples = 12
seed = 5
observables = ["X0", "Z1Z2"]
"#;

#[test]
fn config_run_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plan.toml");
    fs::write(&cfg, PLAN).unwrap();
    let out_dir = dir.path().join("out");
    let out = tepai(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["results_X0.csv", "results_Z1Z2.csv", "bound.csv", "cost.csv"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let results = body(&out_dir.join("results_X0.csv"));
    assert_eq!(results.lines().count(), 3);
    assert!(body(&out_dir.join("cost.csv")).starts_with("point,sample_id,nu,sum_chi_cubed,wall_ms,chi_max"));
}

#[test]
fn config_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, PLAN.replace("delta = \"pi/2^6\"", "delta = 4.0")).unwrap();
    let out = tepai(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn dry_run_validates_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = tepai(&[
        "run",
        "--preset",
        "truncation",
        "--paper-scale",
        "--dry-run",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("# preset: truncation"));
    assert!(!out_dir.exists());
}
