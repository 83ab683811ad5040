//! Experiment configuration (TOML).

use crate::auxiliary::{Monomial, Phi};
use crate::concentration::FitOptions;
use crate::constants::Lame;
use crate::error::{Error, Result};
use crate::fem::{MeshParams, SolverOptions};
use crate::geometry::{Closure, CurvilinearSquareGeometry, GapGeometry, GapProfile, PowerTerm, Profile};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    0.3
}
fn default_r() -> f64 {
    0.25
}

/// Shapes of the matrix and the inclusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryConfig {
    /// `h = κ|x₁|^{1+α+β}`, `h₁ = h + τ|x₁|^{1+α}`, closed by circular arcs.
    Power {
        alpha: f64,
        #[serde(default = "half")]
        beta: f64,
        #[serde(default = "one")]
        tau: f64,
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_r")]
        r: f64,
        #[serde(default = "half")]
        inner_radius_fraction: f64,
    },
    /// Core and shell bounded by curvilinear squares.
    CurvilinearSquare { r1: f64, r2: f64, alpha: f64, r0: f64 },
    /// Sums of power terms for `h` (lower) and `h₁` (upper).
    Custom {
        alpha: f64,
        beta: f64,
        tau: f64,
        #[serde(default = "default_r")]
        r: f64,
        lower: Vec<PowerTerm>,
        upper: Vec<PowerTerm>,
        #[serde(default = "half")]
        inner_radius_fraction: f64,
    },
}

impl GeometryConfig {
    pub fn alpha(&self) -> f64 {
        match self {
            GeometryConfig::Power { alpha, .. }
            | GeometryConfig::CurvilinearSquare { alpha, .. }
            | GeometryConfig::Custom { alpha, .. } => *alpha,
        }
    }

    /// Leading curvature coefficient (τ₀ for the curvilinear squares).
    pub fn tau(&self) -> Result<f64> {
        match self {
            GeometryConfig::Power { tau, .. } | GeometryConfig::Custom { tau, .. } => Ok(*tau),
            GeometryConfig::CurvilinearSquare { r1, r2, alpha, .. } => {
                crate::geometry::effective_tau0(*r1, *r2, *alpha)
            }
        }
    }

    pub fn geometry(&self, eps: f64) -> Result<GapGeometry> {
        match self {
            GeometryConfig::Power { alpha, beta, tau, kappa, r, inner_radius_fraction } => GapGeometry::new(
                GapProfile::power(*alpha, *beta, *tau, *kappa, *r),
                eps,
                2,
                Closure::Stadium { inner_radius_fraction: *inner_radius_fraction },
            ),
            GeometryConfig::CurvilinearSquare { .. } => self.curvilinear(eps)?.expect("kind checked").to_gap_geometry(),
            GeometryConfig::Custom { alpha, beta, tau, r, lower, upper, inner_radius_fraction } => {
                let profile = GapProfile {
                    alpha: *alpha,
                    beta: *beta,
                    tau: *tau,
                    r: *r,
                    lower: Profile::Power(lower.clone()),
                    upper: Profile::Power(upper.clone()),
                };
                GapGeometry::new(profile, eps, 2, Closure::Stadium { inner_radius_fraction: *inner_radius_fraction })
            }
        }
    }

    /// The example geometry at gap `eps`, when this is one.
    pub fn curvilinear(&self, eps: f64) -> Result<Option<CurvilinearSquareGeometry>> {
        match self {
            GeometryConfig::CurvilinearSquare { r1, r2, alpha, r0 } => {
                CurvilinearSquareGeometry::new(*r1, *r2, *alpha, eps, *r0).map(Some)
            }
            _ => Ok(None),
        }
    }

    /// `(τ₁, τ₂)` bracketing `(h₁ − h)/|x₁|^{1+α}` over the window.
    pub fn tau_bracket(&self, g: &GapGeometry) -> (f64, f64) {
        if let GeometryConfig::Power { tau, .. } = self {
            return (*tau, *tau);
        }
        let p = &g.profile;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..=400 {
            let x = p.r * 10f64.powf(-8.0 * (1.0 - k as f64 / 400.0));
            for s in [x, -x] {
                let q = p.difference(&[s]) / x.powf(1.0 + p.alpha);
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        (lo, hi)
    }
}

fn default_rigid_index() -> usize {
    3
}

/// Boundary datum φ on the matrix boundary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiConfig {
    /// Quadratic field with all blow-up factors nonzero.
    #[default]
    Generic,
    /// `(x₂, x₁)`.
    Shear,
    /// `(1 + x₁)(x₂, −x₁)`.
    RotationLike,
    Zero,
    /// Trace of the rigid displacement ψ_k (not offset-normalized).
    Rigid {
        #[serde(default = "default_rigid_index")]
        k: usize,
    },
    /// Custom vector polynomial; `powers` has one entry per coordinate.
    Polynomial { terms: Vec<Monomial> },
}

/// Which hypotheses of the gradient asymptotics a datum satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Generic,
    Rigid,
    Zero,
}

impl PhiConfig {
    pub fn phi(&self) -> Result<Phi> {
        Ok(match self {
            PhiConfig::Generic => Phi::generic_2d().normalized(),
            PhiConfig::Shear => Phi::linear_shear_2d().normalized(),
            PhiConfig::RotationLike => Phi::rotation_like_2d().normalized(),
            PhiConfig::Zero => Phi::zero(2),
            PhiConfig::Rigid { k } => Phi::rigid(*k, 2)?,
            PhiConfig::Polynomial { terms } => Phi::polynomial("polynomial", 2, terms.clone())?.normalized(),
        })
    }

    pub fn regime(&self) -> Regime {
        match self {
            PhiConfig::Zero => Regime::Zero,
            PhiConfig::Rigid { .. } => Regime::Rigid,
            _ => Regime::Generic,
        }
    }
}

/// Per-point solve and certification settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    /// Factor between the certification mesh and the reported (finer) mesh.
    pub refinement: f64,
    /// Largest relative change between the two meshes for a certified point.
    pub certify_tol: f64,
    /// Sample count of the `{x₁ = 0}` gradient scan.
    pub axis_samples: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { refinement: 2.0, certify_tol: 1e-2, axis_samples: 41 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    /// Emit SVG log-log plots next to the CSV files.
    pub plots: bool,
}

fn default_lame() -> Lame {
    Lame::new(1.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    #[serde(default = "default_lame")]
    pub lame: Lame,
    #[serde(default)]
    pub phi: PhiConfig,
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub mesh: MeshParams,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub sweep: SweepOptions,
    #[serde(default)]
    pub output: OutputOptions,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for sweep points (0: all cores).
    #[serde(default)]
    pub workers: usize,
}

impl ExperimentConfig {
    /// α = β = 0.5, τ = 1 power profile, λ = μ = 1, generic φ,
    /// ε ∈ {10⁻³, 10⁻⁴, 10⁻⁵}.
    pub fn default_scenario() -> Self {
        ExperimentConfig {
            geometry: GeometryConfig::Power {
                alpha: 0.5,
                beta: 0.5,
                tau: 1.0,
                kappa: default_kappa(),
                r: default_r(),
                inner_radius_fraction: 0.5,
            },
            lame: default_lame(),
            phi: PhiConfig::Generic,
            eps_list: vec![1e-3, 1e-4, 1e-5],
            mesh: MeshParams::default(),
            solver: SolverOptions::default(),
            fit: FitOptions::default(),
            sweep: SweepOptions::default(),
            output: OutputOptions::default(),
            seed: 0,
            workers: 0,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::Config("eps_list is empty".into()));
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(e.is_finite() && **e >= self.mesh.eps_floor)) {
            return Err(Error::Config(format!("gap {e} is below the floor {}", self.mesh.eps_floor)));
        }
        if self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("eps_list must be strictly decreasing".into()));
        }
        if !(self.sweep.refinement > 1.0) || !(self.sweep.certify_tol > 0.0) || self.sweep.axis_samples == 0 {
            return Err(Error::Config("sweep needs refinement > 1, certify_tol > 0, axis_samples ≥ 1".into()));
        }
        self.lame.check(2)?;
        self.phi.phi()?;
        self.geometry.tau()?;
        self.geometry.geometry(self.eps_list[0])?;
        Ok(())
    }

    pub fn phi(&self) -> Phi {
        self.phi.phi().expect("validated")
    }

    pub fn alpha(&self) -> f64 {
        self.geometry.alpha()
    }

    pub fn tau(&self) -> f64 {
        self.geometry.tau().expect("validated")
    }

    pub fn tensor(&self) -> crate::fem::ElasticityTensor {
        crate::fem::ElasticityTensor::new(self.lame.lambda, self.lame.mu, 2).expect("validated")
    }
}
