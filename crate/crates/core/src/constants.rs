//! Closed-form constants and exponents of the gradient asymptotics.

use crate::error::{Error, Result};
use crate::geometry::{CurvilinearSquareGeometry, GapProfile};
use crate::quadrature::{geometric_breakpoints, integrate, QuadOptions};
use crate::special::gamma;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Lamé pair (λ, μ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

impl Lame {
    pub fn new(lambda: f64, mu: f64) -> Self {
        Self { lambda, mu }
    }

    /// Strong ellipticity in dimension `d`: μ > 0 and dλ + 2μ > 0.
    pub fn check(&self, d: usize) -> Result<()> {
        if !(self.mu > 0.0) || !(d as f64 * self.lambda + 2.0 * self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Lamé pair (λ, μ) = ({}, {}) violates μ > 0, {d}λ + 2μ > 0",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }

    /// Largest κ₃ with κ₃ ≤ μ and dλ + 2μ ≤ 1/κ₃.
    pub fn kappa3(&self, d: usize) -> f64 {
        self.mu.min(1.0 / (d as f64 * self.lambda + 2.0 * self.mu))
    }
}

impl Default for Lame {
    fn default() -> Self {
        Self { lambda: 1.0, mu: 1.0 }
    }
}

fn check_alpha(alpha: f64, allow_one: bool) -> Result<()> {
    let ok = alpha > 0.0 && (alpha < 1.0 || (allow_one && alpha == 1.0));
    if !ok {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} out of range")));
    }
    Ok(())
}

/// Γ_α = Γ(1/(1+α)) Γ(α/(1+α)), α ∈ (0, 1].
pub fn gamma_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha, true)?;
    Ok(gamma(1.0 / (1.0 + alpha)) * gamma(alpha / (1.0 + alpha)))
}

/// π / sin(π/(1+α)), equal to [`gamma_alpha`] by the reflection formula.
pub fn gamma_alpha_reflection(alpha: f64) -> f64 {
    PI / (PI / (1.0 + alpha)).sin()
}

/// M_{α,τ} = 2Γ_α / ((1+α) τ^{1/(1+α)}).
pub fn m_alpha_tau(alpha: f64, tau: f64) -> Result<f64> {
    check_alpha(alpha, true)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
    }
    Ok(2.0 * gamma_alpha(alpha)? / ((1.0 + alpha) * tau.powf(1.0 / (1.0 + alpha))))
}

/// (μ, …, μ, λ+2μ) of length d.
pub fn lame_row(d: usize, lame: Lame) -> Vec<f64> {
    let mut row = vec![lame.mu; d];
    if let Some(last) = row.last_mut() {
        *last = lame.lambda + 2.0 * lame.mu;
    }
    row
}

/// Exponent of the remainder in the two-dimensional expansion.
pub fn rest_exponent_2d(alpha: f64, beta: f64) -> f64 {
    let a = alpha;
    let t2 = (1.0 - a) * a / (2.0 * (1.0 + 2.0 * a));
    let t3 = a * a / (2.0 * (1.0 + 2.0 * a) * (1.0 + a).powi(2));
    let base = t2.min(t3);
    if alpha > beta {
        base.min(beta / (1.0 + a))
    } else {
        base
    }
}

/// Exponent of the remainder for d ≥ 3.
pub fn rest_exponent_hd(alpha: f64, d: usize) -> Result<f64> {
    check_alpha(alpha, false)?;
    let a = alpha;
    let den = 2.0 * (1.0 + 2.0 * a);
    match d {
        0..=2 => Err(Error::InvalidParameter(format!("dimension {d} < 3"))),
        3 => Ok(a * a * (1.0 - a) / (den * (1.0 + a).powi(2))),
        4 => Ok(a * a / (den * (1.0 + a).powi(2)) * (1.0 + a).min(2.0 - a)),
        _ => Ok(a * a / (den * (1.0 + a))),
    }
}

/// Exponent (and logarithmic flag) of the relative correction in the
/// two-dimensional principal energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TildeEps {
    pub exponent: f64,
    /// True when the correction is `ε^{α/(1+α)}|ln ε|` (the case α = β).
    pub has_log_factor: bool,
}

impl TildeEps {
    pub fn value(&self, eps: f64) -> f64 {
        let v = eps.powf(self.exponent);
        if self.has_log_factor {
            v * eps.ln().abs()
        } else {
            v
        }
    }
}

pub fn tilde_eps(alpha: f64, beta: f64) -> TildeEps {
    if alpha > beta {
        TildeEps { exponent: beta / (1.0 + alpha), has_log_factor: false }
    } else {
        TildeEps { exponent: alpha / (1.0 + alpha), has_log_factor: alpha == beta }
    }
}

/// Which limit entry a convergence rate refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Entry {
    /// Q_j (1-based).
    Q(usize),
    /// a_ij (1-based, any order).
    A(usize, usize),
}

/// How an entry behaves as ε → 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Behaviour {
    /// value(ε) = v* + O(ε^p).
    Converges { rate: f64 },
    /// value(ε) ≈ L M ε^{-α/(1+α)} (d = 2, i = j ≤ 2).
    PowerDivergent { exponent: f64 },
    /// value(ε) = O(|ln ε|) (d = 2, a_12).
    LogDivergent,
}

/// Convergence rate of each limit entry as established for the energies and
/// the functionals Q_j.
pub fn entry_behaviour(entry: Entry, d: usize, alpha: f64) -> Result<Behaviour> {
    let n = d * (d + 1) / 2;
    let a = alpha;
    let df = d as f64;
    let g1 = a * a / (2.0 * (1.0 + 2.0 * a) * (1.0 + a).powi(2));
    let g2 = a * a / (2.0 * (1.0 + 2.0 * a) * (1.0 + a));
    let rot = a / (2.0 * (1.0 + 2.0 * a));
    let bad = || Error::InvalidParameter(format!("entry {entry:?} out of range for d = {d}"));
    match entry {
        Entry::Q(j) => {
            if j == 0 || j > n {
                return Err(bad());
            }
            let rate = if j <= d {
                (df - 1.0 - a) * a / (df * (1.0 + 2.0 * a))
            } else {
                (df - a) * (1.0 + a) / ((df + 1.0) * (1.0 + 2.0 * a))
            };
            Ok(Behaviour::Converges { rate })
        }
        Entry::A(i0, j0) => {
            let (i, j) = (i0.min(j0), i0.max(j0));
            if i == 0 || j > n {
                return Err(bad());
            }
            let rate = match (i <= d, j <= d) {
                (true, true) if i == j => {
                    if d == 2 {
                        return Ok(Behaviour::PowerDivergent { exponent: -a / (1.0 + a) });
                    }
                    rest_exponent_hd(a, d)?
                }
                (true, true) => match d {
                    2 => return Ok(Behaviour::LogDivergent),
                    3 => g1,
                    _ => g2,
                },
                (true, false) => {
                    if d == 2 {
                        g1
                    } else {
                        g2
                    }
                }
                _ => rot,
            };
            Ok(Behaviour::Converges { rate })
        }
    }
}

/// Gap integral with its leading-order comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapIntegral {
    pub value: f64,
    pub error: f64,
    /// M_{α,τ} ε^{-α/(1+α)}.
    pub leading: f64,
    /// value / leading.
    pub ratio: f64,
    /// The ε-independent correction −2/(ατR^α).
    pub tail_correction: f64,
}

fn peak_scale(alpha: f64, tau: f64, eps: f64) -> f64 {
    (eps / tau).powf(1.0 / (1.0 + alpha))
}

/// ∫_{|x|<R} dx / (ε + τ|x|^{1+α}) in one dimension.
pub fn gap_integral(alpha: f64, tau: f64, eps: f64, r: f64) -> Result<GapIntegral> {
    let m = m_alpha_tau(alpha, tau)?;
    if !(eps > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter("eps and R must be positive".into()));
    }
    let p = 1.0 + alpha;
    let bp = geometric_breakpoints(peak_scale(alpha, tau, eps), 4.0, r);
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, ..Default::default() };
    let half = integrate(|x| 1.0 / (eps + tau * x.powf(p)), 0.0, r, &bp, opts)?;
    let leading = m * eps.powf(-alpha / p);
    Ok(GapIntegral {
        value: 2.0 * half.value,
        error: 2.0 * half.error,
        leading,
        ratio: 2.0 * half.value / leading,
        tail_correction: -2.0 / (alpha * tau * r.powf(alpha)),
    })
}

/// ∫_ℝ dx / (ε + τ|x|^{1+α}), computed after scaling out ε and folding the
/// half-line onto (0, 1].
pub fn gap_integral_line(alpha: f64, tau: f64, eps: f64) -> Result<f64> {
    check_alpha(alpha, false)?;
    let p = 1.0 + alpha;
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, ..Default::default() };
    let bp = geometric_breakpoints(1e-12, 10.0, 1.0);
    let near = integrate(|y| 1.0 / (1.0 + y.powf(p)), 0.0, 1.0, &[], opts)?;
    // y = 1/t on (1, ∞)
    let far = integrate(|t| if t > 0.0 { t.powf(p - 2.0) / (1.0 + t.powf(p)) } else { 0.0 }, 0.0, 1.0, &bp, opts)?;
    Ok(2.0 * peak_scale(alpha, tau, eps) / eps * (near.value + far.value))
}

/// ∫_{|x'|<R} dx / (ε + h₁ - h) for a one-dimensional profile pair.
pub fn profile_gap_integral(profile: &GapProfile, eps: f64) -> Result<f64> {
    let bp = geometric_breakpoints(peak_scale(profile.alpha, profile.tau, eps), 4.0, profile.r);
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, ..Default::default() };
    let f = |x: f64| 1.0 / (eps + profile.difference(&[x]));
    let right = integrate(f, 0.0, profile.r, &bp, opts)?;
    let left = integrate(|x| f(-x), 0.0, profile.r, &bp, opts)?;
    Ok(right.value + left.value)
}

/// Geometry constants of the curvilinear-square example.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExampleConstants {
    pub tau0: f64,
    pub m: f64,
    /// ∫_{|x₁|<r₀} (1/(h₁−h) − 1/(τ₀|x₁|^{1+α})) dx₁.
    pub c_star: f64,
    /// K*_i = C* − 2L^i/(ατ₀r₀^α), i = 1, 2.
    pub k_star: [f64; 2],
    /// G*_i = K*_i / (L^i M_{α,τ₀}).
    pub g_star: [f64; 2],
}

/// Integrand of C*, evaluated without cancellation near the origin.
pub fn c_star_integrand(geom: &CurvilinearSquareGeometry, x: f64) -> f64 {
    let p = 1.0 + geom.alpha;
    let lead = geom.tau0() * x.abs().powf(p);
    let diff = geom.profile_difference(x);
    geom.leading_term_defect(x) / (diff * lead)
}

pub fn example_constants(geom: &CurvilinearSquareGeometry, lame: Lame) -> Result<ExampleConstants> {
    lame.check(2)?;
    let (alpha, r0) = (geom.alpha, geom.r0);
    let tau0 = geom.tau0();
    let m = m_alpha_tau(alpha, tau0)?;
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, ..Default::default() };
    let bp = geometric_breakpoints(r0 * 1e-8, 10.0, r0);
    let half = integrate(|x| if x > 0.0 { c_star_integrand(geom, x) } else { 0.0 }, 0.0, r0, &bp, opts)?;
    let c_star = 2.0 * half.value;
    let row = lame_row(2, lame);
    let tail = 2.0 / (alpha * tau0 * r0.powf(alpha));
    let k_star = [c_star - row[0] * tail, c_star - row[1] * tail];
    let g_star = [k_star[0] / (row[0] * m), k_star[1] / (row[1] * m)];
    Ok(ExampleConstants { tau0, m, c_star, k_star, g_star })
}

/// Profile and material constants shared by the asymptotic evaluators.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticConstants {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub d: usize,
    pub lame: Lame,
}

impl AsymptoticConstants {
    pub fn new(alpha: f64, beta: f64, tau: f64, d: usize, lame: Lame) -> Result<Self> {
        check_alpha(alpha, false)?;
        if !(beta > 0.0 && tau > 0.0) {
            return Err(Error::InvalidParameter("beta and tau must be positive".into()));
        }
        if d < 2 {
            return Err(Error::InvalidParameter("dimension must be at least 2".into()));
        }
        lame.check(d)?;
        Ok(Self { alpha, beta, tau, d, lame })
    }

    pub fn m(&self) -> f64 {
        m_alpha_tau(self.alpha, self.tau).expect("validated")
    }

    pub fn lame_row(&self) -> Vec<f64> {
        lame_row(self.d, self.lame)
    }

    /// ε^{α/(1+α)}.
    pub fn energy_scale(&self, eps: f64) -> f64 {
        eps.powf(self.alpha / (1.0 + self.alpha))
    }

    /// Exponent of the theorem's remainder in this dimension.
    pub fn rest_exponent(&self) -> f64 {
        if self.d == 2 {
            rest_exponent_2d(self.alpha, self.beta)
        } else {
            rest_exponent_hd(self.alpha, self.d).expect("validated")
        }
    }

    pub fn kappa3(&self) -> f64 {
        self.lame.kappa3(self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_alpha_examples() {
        assert_relative_eq!(gamma_alpha(1.0).unwrap(), PI, max_relative = 1e-13);
        assert_relative_eq!(gamma_alpha(0.5).unwrap(), 2.0 * PI / 3f64.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma_alpha(0.5).unwrap(), 3.627_599, epsilon = 1e-6);
        // π/sin(0.8π) = 5.3447967...
        assert_relative_eq!(gamma_alpha(0.25).unwrap(), 5.344_796_66, epsilon = 1e-8);
        assert!(gamma_alpha(0.0).is_err());
        assert!(gamma_alpha(-0.3).is_err());
    }

    #[test]
    fn m_examples() {
        assert_relative_eq!(m_alpha_tau(1.0, 1.0).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(m_alpha_tau(0.5, 1.0).unwrap(), 4.836_799, epsilon = 1e-6);
        assert!(m_alpha_tau(0.5, 0.0).is_err());
    }

    #[test]
    fn line_integral_matches_m() {
        for &(a, t) in &[(0.5, 1.0), (0.3, 2.5), (0.8, 0.4)] {
            let eps = 1e-6;
            let v = gap_integral_line(a, t, eps).unwrap();
            let lead = m_alpha_tau(a, t).unwrap() * eps.powf(-a / (1.0 + a));
            assert_relative_eq!(v, lead, max_relative = 1e-6);
        }
    }

    #[test]
    fn lame_rows() {
        assert_eq!(lame_row(2, Lame::new(1.0, 1.0)), vec![1.0, 3.0]);
        assert_eq!(lame_row(3, Lame::new(0.0, 2.0)), vec![2.0, 2.0, 4.0]);
        assert!(Lame::new(-1.5, 1.0).check(2).is_err());
        assert!(Lame::new(-0.9, 1.0).check(2).is_ok());
    }

    #[test]
    fn exponent_examples() {
        assert_relative_eq!(rest_exponent_2d(0.5, 0.2), 0.25 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(rest_exponent_2d(0.5, 1.0), 0.25 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(rest_exponent_2d(0.5, 0.01), 0.01 / 1.5, epsilon = 1e-12);
        assert_relative_eq!(rest_exponent_hd(0.5, 3).unwrap(), 0.125 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(rest_exponent_hd(0.5, 4).unwrap(), 0.25 * 1.5 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(rest_exponent_hd(0.5, 5).unwrap(), 0.25 / 6.0, epsilon = 1e-12);
        assert!(rest_exponent_hd(0.5, 2).is_err());
        let t = tilde_eps(0.5, 0.5);
        assert!(t.has_log_factor);
        assert_relative_eq!(t.exponent, 1.0 / 3.0, epsilon = 1e-15);
        assert!(!tilde_eps(0.5, 0.2).has_log_factor);
        assert_relative_eq!(tilde_eps(0.5, 0.2).exponent, 0.2 / 1.5, epsilon = 1e-15);
    }

    #[test]
    fn gap_integral_examples() {
        let g = gap_integral(0.5, 1.0, 1e-6, 1.0).unwrap();
        assert!((g.ratio - 1.0).abs() < 0.01);
        // ratio - 1 is explained by the tail correction up to higher order
        let predicted = 1.0 + g.tail_correction / g.leading;
        assert!((g.ratio - predicted).abs() < 1e-4);
        let g2 = gap_integral(0.5, 1.0, 1e-6, 2.0).unwrap();
        let tail = 2.0 * 2.0 * (1.0 - 2f64.powf(-0.5)); // 2∫_1^2 x^{-3/2}
        assert!((g2.value - g.value - tail).abs() < 1e-4);
    }

    #[test]
    fn entry_behaviours() {
        let a = 0.5;
        assert_eq!(entry_behaviour(Entry::A(1, 1), 2, a).unwrap(), Behaviour::PowerDivergent { exponent: -1.0 / 3.0 });
        assert_eq!(entry_behaviour(Entry::A(2, 1), 2, a).unwrap(), Behaviour::LogDivergent);
        assert_eq!(entry_behaviour(Entry::A(3, 3), 2, a).unwrap(), Behaviour::Converges { rate: 0.125 });
        assert_eq!(entry_behaviour(Entry::A(1, 3), 2, a).unwrap(), Behaviour::Converges { rate: 0.25 / 9.0 });
        assert_eq!(entry_behaviour(Entry::Q(1), 2, a).unwrap(), Behaviour::Converges { rate: 0.25 / 4.0 });
        assert_eq!(entry_behaviour(Entry::Q(3), 2, a).unwrap(), Behaviour::Converges { rate: 1.5 * 1.5 / 6.0 });
        assert!(entry_behaviour(Entry::Q(4), 2, a).is_err());
        assert!(matches!(entry_behaviour(Entry::A(1, 2), 3, a).unwrap(), Behaviour::Converges { .. }));
    }

    fn example_geom(r0: f64) -> CurvilinearSquareGeometry {
        CurvilinearSquareGeometry::new(1.0, 2.0, 0.5, 1e-3, r0).unwrap()
    }

    #[test]
    fn c_star_integrand_is_bounded_at_origin() {
        let g = example_geom(0.3);
        let vals: Vec<f64> = [1e-4, 1e-3, 1e-2].iter().map(|&x| c_star_integrand(&g, x)).collect();
        let lim = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(lim.is_finite() && lim < 100.0, "{vals:?}");
        // direct subtraction agrees where it is not yet cancellation-limited
        let x = 0.1;
        let direct = 1.0 / g.profile_difference(x) - 1.0 / (g.tau0() * x.powf(1.5));
        assert_relative_eq!(c_star_integrand(&g, x), direct, max_relative = 1e-8);
    }

    #[test]
    fn example_constant_relations() {
        let lame = Lame::new(1.0, 1.0);
        let g = example_geom(0.3);
        let c = example_constants(&g, lame).unwrap();
        let diff = 2.0 * (lame.lambda + lame.mu) / (0.5 * c.tau0 * 0.3f64.powf(0.5));
        assert_relative_eq!(c.k_star[0] - c.k_star[1], diff, max_relative = 1e-12);
        for i in 0..2 {
            assert_eq!(c.g_star[i].signum(), c.k_star[i].signum());
        }
    }
}
