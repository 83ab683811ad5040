//! Core-shell gap geometries: profile functions, structural-condition checks,
//! gap thickness and boundary normals.

mod curves;
mod profile;
mod validate;

pub use curves::{point_in_polygon, Annulus, AnnularDomain, ArcTable, ClosedCurve, ClosureArc, CurvePair};
pub use profile::{PowerTerm, Profile, ProfileFn};
pub use validate::{validate_conditions, ConditionCheck, ValidationReport};

pub(crate) use profile::{one_minus_root, root_remainder};

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// The two gap profiles and their structural constants.
///
/// `lower` is the matrix boundary `x_d = h(x')`, `upper` the inclusion
/// boundary `x_d = ε + h₁(x')`, both on `|x'| < 2R`.
#[derive(Clone, Debug)]
pub struct GapProfile {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    /// Half-width R of the analysis window; profiles are defined on B'_{2R}.
    pub r: f64,
    pub lower: Profile,
    pub upper: Profile,
}

impl GapProfile {
    /// `h = κ|x'|^{1+α+β}`, `h₁ = h + τ|x'|^{1+α}`, so that `h₁ - h` is an
    /// exact power.
    pub fn power(alpha: f64, beta: f64, tau: f64, kappa: f64, r: f64) -> Self {
        let lower = Profile::power(kappa, 1.0 + alpha + beta);
        let upper = Profile::Power(vec![
            PowerTerm { coeff: kappa, exponent: 1.0 + alpha + beta },
            PowerTerm { coeff: tau, exponent: 1.0 + alpha },
        ]);
        GapProfile { alpha, beta, tau, r, lower, upper }
    }

    /// `h₁(x') - h(x')`.
    pub fn difference(&self, xp: &[f64]) -> f64 {
        self.upper.value(xp) - self.lower.value(xp)
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {} must lie in (0,1)", self.alpha)));
        }
        if !(self.beta > 0.0) || !(self.tau > 0.0) || !(self.r > 0.0) {
            return Err(Error::InvalidParameter("beta, tau and R must be positive".into()));
        }
        Ok(())
    }
}

/// How the boundaries continue outside the gap window (two dimensions).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Closure {
    /// Circular arcs glued C¹ at `|x₁| = 2R`: the outer boundary closes with a
    /// single circle, the inclusion with a stadium whose corner radius is
    /// `inner_radius_fraction` of the single-circle radius.
    Stadium { inner_radius_fraction: f64 },
    /// Superellipses `|x₁|^{1+α} + |x₂ - c|^{1+α} = r^{1+α}`.
    Superellipse { inner_radius: f64, outer_radius: f64 },
    /// No closed curves (formula-level use, any dimension).
    Open,
}

/// Matrix domain D and inclusion D₁ separated by a gap of width ε.
#[derive(Clone, Debug)]
pub struct GapGeometry {
    pub profile: GapProfile,
    pub epsilon: f64,
    pub dim: usize,
    pub closure: Closure,
    curves: Option<Arc<CurvePair>>,
}

impl GapGeometry {
    pub fn new(profile: GapProfile, epsilon: f64, dim: usize, closure: Closure) -> Result<Self> {
        profile.check()?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
        }
        if dim < 2 {
            return Err(Error::InvalidParameter("dimension must be at least 2".into()));
        }
        let zero = vec![0.0; dim - 1];
        if profile.lower.value(&zero).abs() > 1e-14 || profile.upper.value(&zero).abs() > 1e-14 {
            return Err(Error::InvalidParameter("profiles must vanish at the origin".into()));
        }
        let mut g = GapGeometry { profile, epsilon, dim, closure, curves: None };
        if dim == 2 && closure != Closure::Open {
            let pair = g.build_curves()?;
            g.curves = Some(Arc::new(pair));
            g.check_nesting()?;
        }
        Ok(g)
    }

    /// Default two-dimensional power-profile geometry.
    pub fn power_2d(alpha: f64, beta: f64, tau: f64, kappa: f64, r: f64, epsilon: f64) -> Result<Self> {
        GapGeometry::new(
            GapProfile::power(alpha, beta, tau, kappa, r),
            epsilon,
            2,
            Closure::Stadium { inner_radius_fraction: 0.5 },
        )
    }

    /// Same shapes, different gap distance.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        GapGeometry::new(self.profile.clone(), epsilon, self.dim, self.closure)
    }

    /// Width `2R` of the window on which the profiles are given.
    pub fn window(&self) -> f64 {
        2.0 * self.profile.r
    }

    pub fn curves(&self) -> Option<&CurvePair> {
        self.curves.as_deref()
    }

    fn check_window(&self, xp: &[f64]) -> Result<()> {
        let r = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
        if xp.len() != self.dim - 1 || r > self.window() * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain {
                point: xp.to_vec(),
                reason: format!("|x'| must not exceed 2R = {}", self.window()),
            });
        }
        Ok(())
    }

    /// δ(x') = ε + h₁(x') - h(x').
    pub fn gap_thickness(&self, xp: &[f64]) -> Result<f64> {
        self.check_window(xp)?;
        Ok(self.epsilon + self.profile.difference(xp))
    }

    /// Unit outer normal of D on the lower profile: `(∇h, -1)/√(1+|∇h|²)`.
    pub fn outer_normal(&self, xp: &[f64]) -> Vec<f64> {
        let (_, g) = self.profile.lower.eval(xp);
        let n = (1.0 + g.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let mut out: Vec<f64> = g.iter().map(|v| v / n).collect();
        out.push(-1.0 / n);
        out
    }

    fn build_curves(&self) -> Result<CurvePair> {
        let x = self.window();
        let eps = self.epsilon;
        let (y0, m0) = self.profile.lower.eval1(x);
        let (y1, m1) = self.profile.upper.eval1(x);
        if !(y0.is_finite() && y1.is_finite()) {
            return Err(Error::InvalidParameter("profiles undefined at |x'| = 2R".into()));
        }
        let (outer_arc, inner_arc) = match self.closure {
            Closure::Stadium { inner_radius_fraction } => {
                let r0 = ClosureArc::max_stadium_radius(x, m0);
                let r1 = inner_radius_fraction * ClosureArc::max_stadium_radius(x, m1);
                if !r0.is_finite() || !r1.is_finite() || !(inner_radius_fraction > 0.0 && inner_radius_fraction <= 1.0) {
                    return Err(Error::InvalidParameter(
                        "stadium closure needs increasing profiles at |x'| = 2R and a fraction in (0,1]".into(),
                    ));
                }
                (ClosureArc::stadium(x, y0, m0, r0), ClosureArc::stadium(x, eps + y1, m1, r1))
            }
            Closure::Superellipse { inner_radius, outer_radius } => {
                let p = 1.0 + self.profile.alpha;
                (
                    ClosureArc::superellipse(outer_radius, outer_radius, p, x),
                    ClosureArc::superellipse(eps + inner_radius, inner_radius, p, x),
                )
            }
            Closure::Open => unreachable!("open closure has no curves"),
        };
        let graph_len = {
            let n = 2000;
            let mut acc = 0.0;
            let mut prev = [-x, self.profile.lower.value(&[-x])];
            for k in 1..=n {
                let xi = -x + 2.0 * x * k as f64 / n as f64;
                let p = [xi, self.profile.lower.value(&[xi])];
                acc += ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt();
                prev = p;
            }
            acc
        };
        let split = graph_len / (graph_len + outer_arc.length());
        Ok(CurvePair {
            outer: ClosedCurve { half_width: x, offset: 0.0, graph: self.profile.lower.clone(), closure: outer_arc, split },
            inner: ClosedCurve { half_width: x, offset: eps, graph: self.profile.upper.clone(), closure: inner_arc, split },
        })
    }

    /// Sampled check that the inclusion lies strictly inside D.
    fn check_nesting(&self) -> Result<()> {
        let pair = self.curves().expect("curves built");
        let outer_poly = pair.outer.polygon(8000);
        let n = 4000;
        for k in 0..n {
            let s = k as f64 / n as f64;
            let p = pair.inner.point(s);
            let inside = if s < pair.inner.split {
                p[1] > self.profile.lower.value(&[p[0]])
            } else {
                point_in_polygon(p, &outer_poly)
            };
            if !inside {
                return Err(Error::InvalidParameter(format!("inclusion boundary leaves D near {p:?}")));
            }
        }
        Ok(())
    }

    /// Write both boundary polylines as CSV with columns `s,x1,x2`.
    pub fn export_boundaries_csv(&self, dir: &Path, samples: usize) -> Result<()> {
        let pair = self
            .curves()
            .ok_or_else(|| Error::InvalidParameter("geometry has no closed curves".into()))?;
        for (name, curve) in [("outer_boundary.csv", &pair.outer), ("inclusion_boundary.csv", &pair.inner)] {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            writeln!(f, "s,x1,x2")?;
            for k in 0..=samples {
                let s = k as f64 / samples as f64;
                let p = curve.point(s);
                writeln!(f, "{s:.9},{:.15e},{:.15e}", p[0], p[1])?;
            }
        }
        Ok(())
    }
}

impl AnnularDomain for GapGeometry {
    fn outer_point(&self, s: f64) -> [f64; 2] {
        self.curves().expect("two-dimensional closed geometry").outer.point(s)
    }
    fn inner_point(&self, s: f64) -> [f64; 2] {
        self.curves().expect("two-dimensional closed geometry").inner.point(s)
    }
    fn anchor(&self) -> f64 {
        self.curves().map(|c| c.anchor()).unwrap_or(0.0)
    }
}

/// τ₀ = (r₁^{-α} - r₂^{-α})/(1+α), the curvature coefficient of the
/// curvilinear-square gap.
pub fn effective_tau0(r1: f64, r2: f64, alpha: f64) -> Result<f64> {
    if !(r1 > 0.0 && r1 < r2) {
        return Err(Error::InvalidParameter(format!("need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0,1)")));
    }
    Ok((r1.powf(-alpha) - r2.powf(-alpha)) / (1.0 + alpha))
}

/// Core and shell bounded by curvilinear squares with rounded-off angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvilinearSquareGeometry {
    pub r1: f64,
    pub r2: f64,
    pub alpha: f64,
    pub epsilon: f64,
    /// Analysis window, `0 < r0 < min(r1, r2)/2`.
    pub r0: f64,
}

impl CurvilinearSquareGeometry {
    pub fn new(r1: f64, r2: f64, alpha: f64, epsilon: f64, r0: f64) -> Result<Self> {
        effective_tau0(r1, r2, alpha)?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if !(r0 > 0.0 && r0 < 0.5 * r1.min(r2)) {
            return Err(Error::InvalidParameter(format!("r0 = {r0} must lie in (0, min(r1,r2)/2)")));
        }
        Ok(Self { r1, r2, alpha, epsilon, r0 })
    }

    pub fn tau0(&self) -> f64 {
        effective_tau0(self.r1, self.r2, self.alpha).expect("validated at construction")
    }

    /// h₁(x₁) - h(x₁) with the cancellation-free form of both arcs.
    pub fn profile_difference(&self, x: f64) -> f64 {
        let p = 1.0 + self.alpha;
        let u1 = (x.abs() / self.r1).powf(p);
        let u2 = (x.abs() / self.r2).powf(p);
        self.r1 * one_minus_root(u1, p) - self.r2 * one_minus_root(u2, p)
    }

    /// `τ₀|x|^{1+α} - (h₁ - h)(x)`, accurate for small |x|.
    pub fn leading_term_defect(&self, x: f64) -> f64 {
        let p = 1.0 + self.alpha;
        let u1 = (x.abs() / self.r1).powf(p);
        let u2 = (x.abs() / self.r2).powf(p);
        // r(u/p - (1 - (1-u)^{1/p})) = r * root_remainder(u)
        self.r1 * root_remainder(u1, p) - self.r2 * root_remainder(u2, p)
    }

    /// The equivalent general geometry with window R = r0.
    pub fn to_gap_geometry(&self) -> Result<GapGeometry> {
        let p = 1.0 + self.alpha;
        let profile = GapProfile {
            alpha: self.alpha,
            beta: 1.0 + self.alpha,
            tau: self.tau0(),
            r: self.r0,
            lower: Profile::Superellipse { radius: self.r2, exponent: p },
            upper: Profile::Superellipse { radius: self.r1, exponent: p },
        };
        GapGeometry::new(
            profile,
            self.epsilon,
            2,
            Closure::Superellipse { inner_radius: self.r1, outer_radius: self.r2 },
        )
    }

    /// Largest residual of the two implicit boundary equations over sampled
    /// points of the meshing curves.
    pub fn boundary_residual(&self, samples: usize) -> Result<f64> {
        let g = self.to_gap_geometry()?;
        let pair = g.curves().expect("closed");
        let p = 1.0 + self.alpha;
        let mut worst: f64 = 0.0;
        for k in 0..samples {
            let s = k as f64 / samples as f64;
            let a = pair.inner.point(s);
            let b = pair.outer.point(s);
            let ri = a[0].abs().powf(p) + (a[1] - self.epsilon - self.r1).abs().powf(p) - self.r1.powf(p);
            let ro = b[0].abs().powf(p) + (b[1] - self.r2).abs().powf(p) - self.r2.powf(p);
            worst = worst.max(ri.abs()).max(ro.abs());
        }
        Ok(worst)
    }
}
