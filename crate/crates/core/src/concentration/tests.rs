use super::*;
use crate::auxiliary::{ubar, Phi};
use crate::constants::{lame_row, m_alpha_tau, Entry, Lame};
use crate::geometry::GapGeometry;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const ALPHA: f64 = 0.5;

fn lame() -> Lame {
    Lame::new(1.0, 1.0)
}

/// 2-D systems with prescribed ε-laws: principal entries follow
/// `L^i M ε^{-1/3} + b_i`, a12 a log law, everything else `v* + c ε^p`
/// with the entry's own pinned rate.
fn synthetic_systems(eps: &[f64]) -> Vec<ConcentrationSystem> {
    let m = m_alpha_tau(ALPHA, 1.0).unwrap();
    let row = lame_row(2, lame());
    eps.iter()
        .map(|&e| {
            let a11 = row[0] * m * e.powf(-1.0 / 3.0) + 3.0;
            let a22 = row[1] * m * e.powf(-1.0 / 3.0) + 5.0;
            let a12 = 0.1 * e.ln().abs();
            let a13 = 2.0 + 0.5 * e.powf(0.0278);
            let a33 = 9.5 - 0.2 * e.powf(0.125);
            let a23 = 0.0;
            let a = DMatrix::from_row_slice(3, 3, &[a11, a12, a13, a12, a22, a23, a13, a23, a33]);
            let y = DVector::from_vec(vec![20.0 + e.powf(0.0625), 2.0 - e.powf(0.0625), 11.0 + 0.1 * e.powf(0.375)]);
            ConcentrationSystem::from_parts(2, a, y, e).unwrap()
        })
        .collect()
}

fn rate_exact(e: Entry) -> f64 {
    match e {
        Entry::A(1, 3) => 0.0278,
        Entry::A(3, 3) => 0.125,
        Entry::Q(3) => 0.375,
        _ => 0.0625,
    }
}

#[test]
fn residual_and_symmetry_are_enforced() {
    let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
    let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let s = ConcentrationSystem::from_parts(2, a.clone(), y.clone(), 1e-3).unwrap();
    assert!((&a * &s.c - &y).norm() <= 1e-10 * y.norm());
    assert!(s.min_eigenvalue > 0.0);
    let mut bad = a.clone();
    bad[(0, 1)] += 1e-6;
    assert!(matches!(ConcentrationSystem::from_parts(2, bad, y.clone(), 1e-3), Err(Error::Indefinite(_))));
    let indefinite = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(matches!(ConcentrationSystem::from_parts(2, indefinite, y, 1e-3), Err(Error::Indefinite(_))));
    let zero = ConcentrationSystem::from_parts(2, a, DVector::zeros(3), 1e-3).unwrap();
    assert_eq!(zero.c.amax(), 0.0);
}

#[test]
fn pinned_fit_recovers_exact_laws() {
    let eps = [1e-3, 1e-4, 1e-5];
    let v: Vec<f64> = eps.iter().map(|e: &f64| 4.0 + 2.5 * e.powf(0.125)).collect();
    let f = rate_pinned_fit(&eps, &v, 0.125).unwrap();
    assert!((f.value - 4.0).abs() < 1e-12 && (f.coeff - 2.5).abs() < 1e-10 && f.residual < 1e-13);
}

#[test]
fn starred_estimates_on_exact_laws() {
    let sys = synthetic_systems(&[1e-3, 1e-4, 1e-5]);
    let st = estimate_starred(&sys, ALPHA, 1.0, lame(), FitOptions::default()).unwrap();
    for (name, entry, expect) in [
        ("a13", Entry::A(1, 3), 2.0),
        ("a33", Entry::A(3, 3), 9.5),
        ("q1", Entry::Q(1), 20.0),
        ("q2", Entry::Q(2), 2.0),
        ("q3", Entry::Q(3), 11.0),
    ] {
        let e = st.entry(name).unwrap();
        assert_eq!(e.status, EntryStatus::Starred, "{name}");
        assert!((e.rate - rate_exact(entry)).abs() < 1e-3, "{name} rate {}", e.rate);
        assert!((e.value - expect).abs() < 1e-3 * expect.abs(), "{name}: {} vs {expect}", e.value);
        assert!((e.two_point - e.all_points).abs() < 1e-3 * expect.abs(), "{name}");
    }
    assert_eq!(st.entry("a23").unwrap().status, EntryStatus::Vanishing);
    assert_eq!(st.a(2, 3).unwrap(), 0.0);
    // divergent entries are fitted, not starred
    for (i, j) in [(1, 1), (2, 2), (1, 2), (2, 1)] {
        assert!(matches!(st.a(i, j), Err(Error::DivergentEntry(_))), "a{i}{j}");
    }
    let power: Vec<&DivergentFit> = st.divergent.iter().filter(|d| d.form == DivergentForm::Power).collect();
    assert_eq!(power.len(), 2);
    let m = m_alpha_tau(ALPHA, 1.0).unwrap();
    let row = lame_row(2, lame());
    for d in power {
        let (i, bulk) = if d.name == "a11" { (0, 3.0) } else { (1, 5.0) };
        let expect = 1.0 + bulk * 1e-5f64.powf(1.0 / 3.0) / (row[i] * m);
        assert!((d.indicator - expect).abs() < 1e-10, "{}: {}", d.name, d.indicator);
    }
    let log = st.divergent.iter().find(|d| d.form == DivergentForm::Log).unwrap();
    assert!((log.leading - 0.1).abs() < 1e-9, "{}", log.leading);
}

#[test]
fn starred_needs_three_decreasing_points() {
    let sys = synthetic_systems(&[1e-3, 1e-4]);
    assert!(estimate_starred(&sys, ALPHA, 1.0, lame(), FitOptions::default()).is_err());
    let sys = synthetic_systems(&[1e-3, 1e-5, 1e-4]);
    assert!(estimate_starred(&sys, ALPHA, 1.0, lame(), FitOptions::default()).is_err());
}

#[test]
fn non_monotone_sequence_is_rejected() {
    let mut sys = synthetic_systems(&[1e-3, 1e-4, 1e-5]);
    sys[1].y[2] += 0.5;
    let sys: Vec<_> = sys
        .into_iter()
        .map(|s| ConcentrationSystem::from_parts(2, s.a, s.y, s.epsilon).unwrap())
        .collect();
    let st = estimate_starred(&sys, ALPHA, 1.0, lame(), FitOptions::default()).unwrap();
    assert!(matches!(st.entry("q3").unwrap().status, EntryStatus::Rejected(_)));
    assert!(matches!(st.q(3), Err(Error::FitRejected { .. })));
    assert!(blowup_matrices(&st).is_err());
}

#[test]
fn starred_toml_round_trip() {
    let sys = synthetic_systems(&[1e-3, 1e-4, 1e-5]);
    let st = estimate_starred(&sys, ALPHA, 1.0, lame(), FitOptions::default()).unwrap();
    let text = st.to_toml().unwrap();
    let back = StarredData::from_toml(&text).unwrap();
    assert_eq!(back.to_toml().unwrap(), text);
    assert_eq!(back.eps, st.eps);
    assert_eq!(back.q(1).unwrap(), st.q(1).unwrap());
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.2, 0.1, 3.0, 0.3, 0.2, 0.3, 4.0]);
    let syn = StarredData::synthetic(2, ALPHA, &a, &DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
    let text = syn.to_toml().unwrap();
    let back = StarredData::from_toml(&text).unwrap();
    assert_eq!(back.to_toml().unwrap(), text);
    assert_eq!(back.q(3).unwrap(), 3.0);
}

#[test]
fn zero_q_makes_every_f_singular() {
    let a = DMatrix::from_row_slice(6, 6, &{
        let mut v = [0.0; 36];
        for i in 0..6 {
            v[7 * i] = 2.0 + i as f64;
        }
        v
    });
    let st = StarredData::synthetic(3, ALPHA, &a, &DVector::zeros(6)).unwrap();
    let BlowupMatrices::HigherD { det_f, det_a, .. } = blowup_matrices(&st).unwrap() else { panic!() };
    assert!(det_a > 0.0 && det_f.iter().all(|d| *d == 0.0));
}

#[test]
fn f_matrices_replace_one_column() {
    let a = DMatrix::from_fn(6, 6, |i, j| if i == j { 3.0 } else { 0.2 / (1.0 + (i + j) as f64) });
    let q = DVector::from_fn(6, |i, _| i as f64 - 2.5);
    let st = StarredData::synthetic(3, ALPHA, &a, &q).unwrap();
    let BlowupMatrices::HigherD { f, a: a_star, .. } = blowup_matrices(&st).unwrap() else { panic!() };
    for (i, fi) in f.iter().enumerate() {
        for c in 0..6 {
            let expect = if c == i { q.clone() } else { a_star.column(c).into_owned() };
            assert_eq!(fi.column(c), expect.column(0));
        }
    }
}

#[test]
fn triangular_b_on_symmetric_data() {
    let a = DMatrix::from_row_slice(3, 3, &[9.0, 0.0, 0.0, 0.0, 9.0, 0.0, 0.0, 0.0, 4.0]);
    let st = StarredData::synthetic(2, ALPHA, &a, &DVector::from_vec(vec![1.5, -2.0, 3.0])).unwrap();
    let BlowupMatrices::TwoD { det_b, .. } = blowup_matrices(&st).unwrap() else { panic!() };
    assert!((det_b[0] - 1.5 * 4.0).abs() < 1e-14 && (det_b[1] + 2.0 * 4.0).abs() < 1e-14);
    assert!(matches!(st.a(1, 1), Err(Error::DivergentEntry(_))));
    let neg = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
    let st = StarredData::synthetic(2, ALPHA, &neg, &DVector::from_vec(vec![1.0, 1.0, 1.0])).unwrap();
    assert!(matches!(blowup_matrices(&st), Err(Error::Indefinite(_))));
}

fn two_d_starred(q: [f64; 3]) -> StarredData {
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 2.0, 0.0, 0.0, 0.5, 2.0, 0.5, 9.0]);
    StarredData::synthetic(2, ALPHA, &a, &DVector::from_vec(q.to_vec())).unwrap()
}

#[test]
fn hypothesis_violations_are_refused() {
    let g = GapGeometry::power_2d(ALPHA, 0.5, 1.0, 0.3, 0.25, 1e-4).unwrap();
    let phi = Phi::generic_2d().normalized();
    let x = [0.0, 5e-5];
    let ok = two_d_starred([20.0, 2.0, 11.0]);
    assert!(asymptotic_gradient_2d(&ok, &g, lame(), &phi, &x, true).is_ok());
    // Q3* = 0
    let st = two_d_starred([20.0, 2.0, 0.0]);
    assert!(matches!(asymptotic_gradient_2d(&st, &g, lame(), &phi, &x, true), Err(Error::Hypothesis(_))));
    // det B1* = Q1 a33 − a13 Q3 = 0
    let st = two_d_starred([2.0 * 11.0 / 9.0, 2.0, 11.0]);
    assert!(matches!(asymptotic_gradient_2d(&st, &g, lame(), &phi, &x, true), Err(Error::Hypothesis(_))));
    assert!(asymptotic_gradient_2d(&st, &g, lame(), &phi, &x, false).is_ok());
}

#[test]
fn axis_prediction_uses_rotation_and_drops_u0() {
    let g = GapGeometry::power_2d(ALPHA, 0.5, 1.0, 0.3, 0.25, 1e-4).unwrap();
    let phi = Phi::generic_2d().normalized();
    let st = two_d_starred([20.0, 2.0, 11.0]);
    let x = [0.0, 3e-5];
    let p = asymptotic_gradient_2d(&st, &g, lame(), &phi, &x, true).unwrap();
    let c = &p.coefficients;
    assert!((c[2] - 11.0 / 9.0).abs() < 1e-14);
    // at x' = 0: v̄ = x₂/ε, ∂₂v̄ = 1/ε, ψ₃ = (x₂, 0), and ∇ū₀ has no ∂₂ part
    let expect_12 = c[0] / g.epsilon + c[2] * (2.0 * x[1] / g.epsilon);
    assert!((p.gradient[(0, 1)] - expect_12).abs() < 1e-9 * expect_12.abs(), "{} {expect_12}", p.gradient[(0, 1)]);
    assert!((p.gradient[(1, 1)] - c[1] / g.epsilon).abs() < 1e-9 * (c[1] / g.epsilon).abs());
    assert!(p.rest.translation > 0.0 && p.rest.rotation > 0.0 && p.rest.delta_power < 0.0);
}

#[test]
fn doubling_tau_scales_translation_terms() {
    let phi = Phi::generic_2d().normalized();
    let st = two_d_starred([20.0, 2.0, 11.0]);
    let eps = 1e-4;
    let x = [0.0, 0.5 * eps];
    let term = |tau: f64, i: usize| {
        let g = GapGeometry::power_2d(ALPHA, 0.5, tau, 0.3, 0.25, eps).unwrap();
        let p = asymptotic_gradient_2d(&st, &g, lame(), &phi, &x, true).unwrap();
        ubar(&g, i + 1, &x).unwrap().grad * p.coefficients[i]
    };
    // M_{α,2τ} = 2^{−1/(1+α)} M_{α,τ} and ∇ū_i(0', x₂) does not depend on τ
    let factor = 2f64.powf(1.0 / (1.0 + ALPHA));
    for i in 0..2 {
        let (a, b) = (term(1.0, i), term(2.0, i));
        let (r, c) = if i == 0 { (0, 1) } else { (1, 1) };
        assert!((b[(r, c)] / a[(r, c)] - factor).abs() < 1e-12, "{}", b[(r, c)] / a[(r, c)]);
    }
}

#[test]
fn zero_correction_reduces_to_the_plain_evaluator() {
    let st = two_d_starred([20.0, 2.0, 11.0]);
    let bm = blowup_matrices(&st).unwrap();
    for eps in [1e-2, 1e-4, 1e-6] {
        let plain = leading_coefficients_2d(&bm, ALPHA, 0.3, lame(), eps, None, true).unwrap();
        let zero = leading_coefficients_2d(&bm, ALPHA, 0.3, lame(), eps, Some([0.0, 0.0]), true).unwrap();
        assert_eq!(plain, zero);
    }
    // the correction factor tends to 1 monotonically
    let g = [-2.9, 1.7];
    let mut last = [f64::INFINITY; 2];
    for k in 3..=9 {
        let eps = 10f64.powi(-k);
        let plain = leading_coefficients_2d(&bm, ALPHA, 0.3, lame(), eps, None, true).unwrap();
        let corr = leading_coefficients_2d(&bm, ALPHA, 0.3, lame(), eps, Some(g), true).unwrap();
        for i in 0..2 {
            let dev = (corr[i] / plain[i] - 1.0).abs();
            assert!(dev < last[i]);
            last[i] = dev;
        }
        assert_eq!(corr[2], plain[2]);
    }
}

#[test]
fn synthetic_identity_in_three_dimensions() {
    let g = GapGeometry::new(
        crate::geometry::GapProfile::power(ALPHA, 0.5, 1.0, 0.3, 0.25),
        1e-3,
        3,
        crate::geometry::Closure::Open,
    )
    .unwrap();
    let phi = Phi::zero(3);
    let mut q = DVector::zeros(6);
    q[0] = 1.0;
    let st = StarredData::synthetic(3, ALPHA, &DMatrix::identity(6, 6), &q).unwrap();
    let x = [0.0, 0.0, 4e-4];
    // det F_i* = 0 for i ≥ 2 violates the theorem's hypothesis
    assert!(matches!(asymptotic_gradient_hd(&st, &g, &phi, &x, true), Err(Error::Hypothesis(_))));
    let p = asymptotic_gradient_hd(&st, &g, &phi, &x, false).unwrap();
    assert_eq!(p.coefficients, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let u1 = ubar(&g, 1, &x).unwrap().grad;
    assert!((p.gradient - &u1).amax() < 1e-12);
    // ∂₃ū₁ at x' = 0 is 1/ε
    assert!((u1[(0, 2)] - 1.0 / g.epsilon).abs() < 1e-9 / g.epsilon);
}

#[test]
fn bounds_with_equal_curvatures() {
    let st = two_d_starred([20.0, 2.0, 11.0]);
    let b = gradient_bounds(&st, lame(), ALPHA, 1.0, 1.0).unwrap();
    let BlowupMatrices::TwoD { det_b, .. } = blowup_matrices(&st).unwrap() else { panic!() };
    let row = lame_row(2, lame());
    let w = [det_b[0].abs() / row[0], det_b[1].abs() / row[1]];
    let ratio = w[0].max(w[1]) / w[0].min(w[1]);
    for c in [1.0, 1.7, 3.0] {
        let eps = 1e-4;
        assert!((b.upper(eps, c) / b.lower(eps, c) / (ratio * c * c) - 1.0).abs() < 1e-12);
    }
    assert!((b.exponent + 1.0 / (1.0 + ALPHA)).abs() < 1e-15);
    let obs = [(1e-3, 0.5 * b.lower(1e-3, 1.0)), (1e-4, b.midpoint(1e-4)), (1e-5, 3.0 * b.upper(1e-5, 1.0))];
    let c = calibrate(&b, &obs);
    assert!((c - 3.0).abs() < 1e-12);
    for (e, o) in obs {
        assert!(b.lower(e, c) <= o * (1.0 + 1e-12) && o <= b.upper(e, c) * (1.0 + 1e-12));
    }
    assert!(matches!(gradient_bounds(&two_d_starred([0.0, 0.0, 0.0]), lame(), ALPHA, 1.0, 1.0), Err(Error::Hypothesis(_))));
}

fn spd(n: usize, seed: Vec<f64>) -> DMatrix<f64> {
    let b = DMatrix::from_iterator(n, n, seed.into_iter());
    &b * b.transpose() + DMatrix::identity(n, n) * 0.5
}

proptest! {
    #[test]
    fn cramer_matches_the_inverse(seed in prop::collection::vec(-1.0f64..1.0, 36), q in prop::collection::vec(-2.0f64..2.0, 6)) {
        let a = spd(6, seed);
        let q = DVector::from_vec(q);
        let st = StarredData::synthetic(3, ALPHA, &a, &q).unwrap();
        let c = blowup_matrices(&st).unwrap().cramer_coefficients().unwrap();
        let direct = a.clone().cholesky().unwrap().solve(&q);
        for i in 0..6 {
            prop_assert!((c[i] - direct[i]).abs() <= 1e-8 * (1.0 + direct.amax()));
        }
    }

    #[test]
    fn assembled_constants_satisfy_the_system(seed in prop::collection::vec(-1.0f64..1.0, 9), y in prop::collection::vec(-5.0f64..5.0, 3)) {
        let a = spd(3, seed);
        let y = DVector::from_vec(y);
        let s = ConcentrationSystem::from_parts(2, a.clone(), y.clone(), 1e-3).unwrap();
        let r = &a * &s.c - &y;
        prop_assert!(r.norm() <= 1e-10 * y.norm().max(1e-300));
    }
}
