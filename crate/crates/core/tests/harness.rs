use gapstress::harness::*;
use std::sync::OnceLock;

fn cheap(phi: PhiConfig) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_scenario();
    cfg.eps_list = vec![1e-2, 1e-3, 1e-4];
    cfg.mesh.n_layers = 4;
    cfg.mesh.h_max = 0.08;
    cfg.sweep.refinement = 1.5;
    cfg.sweep.certify_tol = 0.05;
    cfg.phi = phi;
    cfg
}

fn generic() -> &'static SweepOutput {
    static OUT: OnceLock<SweepOutput> = OnceLock::new();
    OUT.get_or_init(|| run_sweep(&cheap(PhiConfig::Generic)))
}

#[test]
fn three_point_sweep_emits_three_records() {
    let out = generic();
    assert_eq!(out.records.len(), 3);
    assert_eq!(out.timings.len(), 3);
    for r in &out.records {
        assert!(r.is_certified(), "{r:?}");
        assert!(r.residual <= 1e-10 && r.min_eigenvalue > 0.0);
    }
    assert!(out.starred.is_some(), "{:?}", out.note);
    assert!(out.records.iter().all(|r| r.predicted_center.is_finite() && r.rel_error_center.is_finite()));
}

#[test]
fn records_are_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let again = run_sweep(&cheap(PhiConfig::Generic));
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_csv(&a, &generic().records).unwrap();
    write_csv(&b, &again.records).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let back: Vec<SweepRecord> = read_csv(&a).unwrap();
    assert_eq!(back, generic().records);
}

#[test]
fn failed_points_are_recorded() {
    let mut cfg = cheap(PhiConfig::Generic);
    // at this gap the inclusion no longer fits inside the matrix
    cfg.eps_list = vec![0.9, 1e-2, 1e-3];
    let out = run_sweep(&cfg);
    assert_eq!(out.records.len(), 3);
    assert!(out.records[0].status.starts_with("error"), "{}", out.records[0].status);
    assert!(out.records[1].is_certified() && out.records[2].is_certified());
    // two certified points are not enough for starred data
    assert!(out.starred.is_none() && out.note.is_some());
}

#[test]
fn rigid_data_does_not_blow_up() {
    let out = run_sweep(&cheap(PhiConfig::Rigid { k: 3 }));
    let g: Vec<f64> = out.records.iter().map(|r| r.max_grad_axis).collect();
    for v in &g {
        assert!((v - 2f64.sqrt()).abs() < 1e-6, "{g:?}");
    }
    let f = fit_rate(&out.records, Quantity::MaxGradAxis).unwrap();
    assert!(f.slope.abs() < 0.05);
    assert!(out.note.as_deref().unwrap_or("").contains("hypotheses unmet"), "{:?}", out.note);
}

#[test]
fn zero_data_leaves_the_comparison_empty() {
    let cfg = cheap(PhiConfig::Zero);
    let out = run_sweep(&cfg);
    let st = out.starred.as_ref().unwrap();
    let table = compare_asymptotics(&cfg, &out.records, st).unwrap();
    assert!(table.rows.is_empty());
    assert!(table.note.unwrap().contains("hypotheses unmet"));
    assert!(rate_checks(&cfg, &out.records).iter().all(|c| c.pass));
}

#[test]
fn energies_scale_with_the_gap() {
    let cfg = cheap(PhiConfig::Generic);
    for c in rate_checks(&cfg, &generic().records) {
        assert!(c.slope.is_finite() && c.r2 > 0.99, "{c:?}");
    }
    let a = fit_rate(&generic().records, Quantity::A(1, 1)).unwrap();
    assert!((a.slope + 1.0 / 3.0).abs() < 0.1, "{a:?}");
}

#[test]
fn bounds_bracket_the_sweep() {
    let cfg = cheap(PhiConfig::Generic);
    let out = generic();
    let b = bounds_table(&cfg, &out.records, out.starred.as_ref().unwrap()).unwrap();
    assert!(b.calibration >= 1.0);
    assert!(b.rows.iter().all(|r| r.inside));
    assert!((b.midpoint_slope + 2.0 / 3.0).abs() < 1e-9);
}
