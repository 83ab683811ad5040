//! Leading-order gradient asymptotics and the pointwise bounds on `{x' = 0}`.
//!
//! The remainders are never evaluated; their exponents travel with each
//! prediction as metadata.

use super::{blowup_matrices, BlowupMatrices, StarredData};
use crate::auxiliary::{rigid_count, ubar, ubar0, Phi};
use crate::constants::{example_constants, lame_row, m_alpha_tau, rest_exponent_2d, rest_exponent_hd, Lame};
use crate::error::{Error, Result};
use crate::geometry::{Closure, CurvilinearSquareGeometry, GapGeometry};
use nalgebra::DMatrix;

/// Relative threshold of the hypothesis checks (against the Hadamard bound).
pub const HYPOTHESIS_TOL: f64 = 1e-8;

/// Exponents of the dropped remainder terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestExponents {
    /// Relative remainder of the translation coefficients.
    pub translation: f64,
    /// Relative remainder of the rotation coefficients.
    pub rotation: f64,
    /// Power of δ in the absolute remainder `O(1) δ^p ‖φ‖_{C¹}`.
    pub delta_power: f64,
}

#[derive(Clone, Debug)]
pub struct Prediction {
    /// Entry (a, b) = ∂_b u^a.
    pub gradient: DMatrix<f64>,
    /// Coefficients of `∇ū_1, …, ∇ū_n`.
    pub coefficients: Vec<f64>,
    pub rest: RestExponents,
}

fn hadamard(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.norm()).product()
}

fn check_nonzero(det: f64, bound: f64, what: &str) -> Result<()> {
    if !(det.abs() > HYPOTHESIS_TOL * bound) {
        return Err(Error::Hypothesis(format!("{what} = {det:.3e} is zero to relative {HYPOTHESIS_TOL:e}")));
    }
    Ok(())
}

/// Coefficients `(det B_i*/a33*)·ε^{α/(1+α)}/(L^i M_{α,τ} (1 + G_i ε^{α/(1+α)}))`
/// for i = 1, 2 and `Q3*/a33*` for the rotation. `g_star = None` means no
/// second-order correction.
pub fn leading_coefficients_2d(
    bm: &BlowupMatrices,
    alpha: f64,
    tau: f64,
    lame: Lame,
    eps: f64,
    g_star: Option<[f64; 2]>,
    enforce_hypotheses: bool,
) -> Result<[f64; 3]> {
    let BlowupMatrices::TwoD { b, det_b, a33, q3 } = bm else {
        return Err(Error::InvalidParameter("two-dimensional blow-up matrices expected".into()));
    };
    if enforce_hypotheses {
        let qscale = b[0][(0, 0)].abs().max(b[1][(0, 0)].abs()).max(q3.abs());
        check_nonzero(*q3, qscale, "Q3*")?;
        for i in 0..2 {
            let m = DMatrix::from_column_slice(2, 2, b[i].as_slice());
            check_nonzero(det_b[i], hadamard(&m), &format!("det B{}*", i + 1))?;
        }
    }
    let m = m_alpha_tau(alpha, tau)?;
    let row = lame_row(2, lame);
    let s = eps.powf(alpha / (1.0 + alpha));
    let g = g_star.unwrap_or([0.0, 0.0]);
    let c = |i: usize| det_b[i] / a33 * s / (row[i] * m) / (1.0 + g[i] * s);
    Ok([c(0), c(1), q3 / a33])
}

fn combine(g: &GapGeometry, phi: &Phi, coefficients: &[f64], x: &[f64]) -> Result<DMatrix<f64>> {
    let mut grad = ubar0(g, phi, x)?.grad;
    for (i, c) in coefficients.iter().enumerate() {
        grad += ubar(g, i + 1, x)?.grad * *c;
    }
    Ok(grad)
}

fn rest_2d(alpha: f64, beta: f64) -> RestExponents {
    RestExponents {
        translation: rest_exponent_2d(alpha, beta),
        rotation: alpha / (2.0 * (1.0 + 2.0 * alpha)),
        delta_power: -(1.0 - alpha) / (1.0 + alpha),
    }
}

/// Leading-order `∇u(x)` for x in the gap, two dimensions.
pub fn asymptotic_gradient_2d(
    starred: &StarredData,
    g: &GapGeometry,
    lame: Lame,
    phi: &Phi,
    x: &[f64],
    enforce_hypotheses: bool,
) -> Result<Prediction> {
    if g.dim != 2 || starred.dim != 2 {
        return Err(Error::InvalidParameter("two-dimensional geometry and data expected".into()));
    }
    let bm = blowup_matrices(starred)?;
    let p = &g.profile;
    let c = leading_coefficients_2d(&bm, p.alpha, p.tau, lame, g.epsilon, None, enforce_hypotheses)?;
    Ok(Prediction { gradient: combine(g, phi, &c, x)?, coefficients: c.to_vec(), rest: rest_2d(p.alpha, p.beta) })
}

/// Leading-order `∇u(x)` in dimension d ≥ 3: `Σ (det F_i*/det A*) ∇ū_i + ∇ū₀`.
pub fn asymptotic_gradient_hd(
    starred: &StarredData,
    g: &GapGeometry,
    phi: &Phi,
    x: &[f64],
    enforce_hypotheses: bool,
) -> Result<Prediction> {
    let d = g.dim;
    if d < 3 || starred.dim != d {
        return Err(Error::InvalidParameter("geometry and starred data must share a dimension ≥ 3".into()));
    }
    let bm = blowup_matrices(starred)?;
    let BlowupMatrices::HigherD { f, det_f, .. } = &bm else { unreachable!() };
    if enforce_hypotheses {
        for (i, (fi, di)) in f.iter().zip(det_f).enumerate() {
            check_nonzero(*di, hadamard(fi), &format!("det F{}*", i + 1))?;
        }
    }
    let c = bm.cramer_coefficients()?;
    debug_assert_eq!(c.len(), rigid_count(d));
    let alpha = g.profile.alpha;
    let hd = rest_exponent_hd(alpha, d)?;
    let rest = RestExponents { translation: hd, rotation: hd, delta_power: -1.0 / (1.0 + alpha) };
    Ok(Prediction { gradient: combine(g, phi, &c, x)?, coefficients: c, rest })
}

/// Curvilinear-square example: τ → τ₀ and each translation coefficient
/// divided by `1 + G_i* ε^{α/(1+α)}`. With `corrected = false` this is the
/// plain two-dimensional evaluation on the same geometry.
pub fn example_asymptotic(
    geom: &CurvilinearSquareGeometry,
    lame: Lame,
    phi: &Phi,
    starred: &StarredData,
    x: &[f64],
    corrected: bool,
) -> Result<Prediction> {
    let consts = example_constants(geom, lame)?;
    let bm = blowup_matrices(starred)?;
    let g_star = corrected.then_some(consts.g_star);
    let c = leading_coefficients_2d(&bm, geom.alpha, consts.tau0, lame, geom.epsilon, g_star, true)?;
    let gg = geom.to_gap_geometry()?;
    let open = GapGeometry::new(gg.profile.clone(), geom.epsilon, 2, Closure::Open)?;
    let rest = RestExponents {
        translation: {
            let a = geom.alpha;
            (a * a / (2.0 * (1.0 + 2.0 * a) * (1.0 + a).powi(2))).min((1.0 - a) * a / (2.0 * (1.0 + 2.0 * a)))
        },
        ..rest_2d(geom.alpha, gg.profile.beta)
    };
    Ok(Prediction { gradient: combine(&open, phi, &c, x)?, coefficients: c.to_vec(), rest })
}

/// Bracket `lower/C · ε^p ≤ |∇u| ≤ C · upper · ε^p` on `{x' = 0}` with
/// `p = −1/(1+α)` (d = 2) or `−1` (d ≥ 3). The universal constant `C` is not
/// known and has to be calibrated (see [`calibrate`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientBounds {
    pub lower_base: f64,
    pub upper_base: f64,
    pub exponent: f64,
    /// Index (1-based) whose determinant drives the lower bound.
    pub i0: usize,
}

impl GradientBounds {
    pub fn lower(&self, eps: f64, c: f64) -> f64 {
        self.lower_base / c * eps.powf(self.exponent)
    }

    pub fn upper(&self, eps: f64, c: f64) -> f64 {
        c * self.upper_base * eps.powf(self.exponent)
    }

    /// Geometric midpoint of the bracket (independent of `C`).
    pub fn midpoint(&self, eps: f64) -> f64 {
        (self.lower_base * self.upper_base).sqrt() * eps.powf(self.exponent)
    }
}

/// Corollary bracket from the starred data. `tau1 ≤ (h₁−h)/|x'|^{1+α} ≤ tau2`.
/// The lower bound uses the smallest nonzero determinant, so that the
/// envelope ratio is (max/min determinant)·C².
pub fn gradient_bounds(starred: &StarredData, lame: Lame, alpha: f64, tau1: f64, tau2: f64) -> Result<GradientBounds> {
    if !(tau1 > 0.0 && tau2 >= tau1) {
        return Err(Error::InvalidParameter("need 0 < tau1 ≤ tau2".into()));
    }
    let d = starred.dim;
    let bm = blowup_matrices(starred)?;
    let (weights, exponent, lower_scale, upper_scale): (Vec<f64>, f64, f64, f64) = match &bm {
        BlowupMatrices::TwoD { det_b, a33, .. } => {
            let row = lame_row(2, lame);
            let p = 1.0 / (1.0 + alpha);
            let w = vec![det_b[0].abs() / row[0] / a33.abs(), det_b[1].abs() / row[1] / a33.abs()];
            (w, -p, tau2.powf(-p), tau1.powf(-p))
        }
        BlowupMatrices::HigherD { det_a, det_f, .. } => {
            let w = det_f[..d].iter().map(|x| x.abs() / det_a.abs()).collect();
            (w, -1.0, 1.0, 1.0)
        }
    };
    let max = weights.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Hypothesis("all leading determinants vanish; bounds unavailable".into()));
    }
    let (i0, min) = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > HYPOTHESIS_TOL * max)
        .fold((0, f64::INFINITY), |acc, (i, w)| if *w < acc.1 { (i, *w) } else { acc });
    Ok(GradientBounds { lower_base: min * lower_scale, upper_base: max * upper_scale, exponent, i0: i0 + 1 })
}

/// Smallest `C ≥ 1` for which every observation `(ε, |∇u|)` lies inside the
/// bracket.
pub fn calibrate(bounds: &GradientBounds, samples: &[(f64, f64)]) -> f64 {
    samples.iter().fold(1.0f64, |c, &(eps, obs)| {
        let s = eps.powf(bounds.exponent);
        c.max(bounds.lower_base * s / obs).max(obs / (bounds.upper_base * s))
    })
}
