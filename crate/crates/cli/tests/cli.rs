use std::path::Path;
use std::process::{Command, Output};

const CHEAP: &str = r#"
eps_list = [1e-2, 1e-3, 1e-4]

[geometry]
kind = "power"
alpha = 0.5

[mesh]
n_layers = 4
h_max = 0.08

[sweep]
refinement = 1.5
certify_tol = 0.05
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapstress"))
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn cheap_config(dir: &Path) -> String {
    let p = dir.join("cheap.toml");
    std::fs::write(&p, CHEAP).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Exit status 0 exactly when no printed check failed.
fn consistent(o: &Output) -> bool {
    let s = stdout(o);
    let failed = s.lines().any(|l| l.starts_with("FAIL"));
    o.status.code() == Some(if failed { 1 } else { 0 })
}

#[test]
fn constants_pass_and_are_tabulated() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["constants"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let t = std::fs::read_to_string(dir.path().join("out/constants.csv")).unwrap();
    assert!(t.starts_with("name,alpha,tau,value"));
    assert!(t.contains("gamma_alpha"));
}

#[test]
fn geometry_validation_passes_for_the_power_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cheap_config(dir.path());
    let o = run(dir.path(), &["--config", &cfg, "validate-geometry"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for f in ["validation.csv", "outer_boundary.csv", "inclusion_boundary.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn sweep_fit_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cheap_config(dir.path());
    let o = run(dir.path(), &["--config", &cfg, "--workers", "2", "sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let sweep = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
    assert!(dir.path().join("out/starred.toml").exists());

    let o = run(dir.path(), &["--config", &cfg, "fit"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("out/fits.csv").exists());

    let o = run(dir.path(), &["--config", &cfg, "compare"]);
    assert!(consistent(&o), "{}", stdout(&o));
    assert!(stdout(&o).contains("bounds bracket observations"));
    assert_eq!(std::fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap().lines().count(), 4);
    assert!(dir.path().join("out/bounds.csv").exists());
}

#[test]
fn sweep_output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cheap_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, w) in [(&a, "1"), (&b, "3")] {
        let o = Command::new(env!("CARGO_BIN_EXE_gapstress"))
            .args(["--config", &cfg, "--workers", w, "--out"])
            .arg(d)
            .arg("sweep")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(a.join("sweep.csv")).unwrap(), std::fs::read(b.join("sweep.csv")).unwrap());
}

#[test]
fn solve_reports_oracle_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cheap_config(dir.path());
    let o = run(dir.path(), &["--config", &cfg, "--seed", "7", "solve", "--eps", "1e-3"]);
    assert!(consistent(&o), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("PASS monolithic oracle (50 random points)"), "{s}");
    let sol = std::fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert!(sol.starts_with("node,x1,x2,u1,u2"));
}

#[test]
fn errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    // no sweep.csv yet
    let o = run(dir.path(), &["fit"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "eps_list = [1e-3, 1e-2]\n[geometry]\nkind = \"power\"\nalpha = 0.5\n").unwrap();
    let o = run(dir.path(), &["--config", bad.to_str().unwrap(), "constants"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("decreasing"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["default.toml", "curvilinear.toml", "rigid.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = root.join(name);
        let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "constants"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    }
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--config", root.join("curvilinear.toml").to_str().unwrap(), "validate-geometry"]);
    let s = stdout(&o);
    assert!(s.contains("PASS curvilinear boundary equations"), "{s}");
    assert!(consistent(&o), "{s}");
}
