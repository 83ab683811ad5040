//! P2 finite elements for the pure-displacement Lamé problems on the
//! annular domain between the matrix boundary and the inclusion.

mod element;
mod locate;
mod mesh;
mod scalar;
mod solve;
mod sparse;

pub use element::{
    element_energy, element_stiffness, field_gradient, invert_map, map_point, shape, shape_grad, Element,
    MapPoint, LINE_QUAD, REF_NODES, TRI_QUAD,
};
pub use locate::Locator;
pub use mesh::{build_annular_mesh, build_gap_mesh, GapMesh, MeshParams, MeshStats, NodeTag};
pub use scalar::{scalar_laplace_selftest, ScalarSelfTest};
pub use solve::{
    assemble_stiffness, boundary_flux_functional, energy_inner, gradient_at, gradients_at_all, l2_norm, rigid_values, strain_norm, value_at,
    ElasticProblem, FieldSolution,
    SolverKind, SolverOptions,
};
pub use sparse::{conjugate_gradient, CsrMatrix, SkylineCholesky};

use crate::error::Result;
use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

/// Isotropic elasticity tensor C_{ijkl} = λδ_ijδ_kl + μ(δ_ikδ_jl + δ_ilδ_jk).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticityTensor {
    pub lambda: f64,
    pub mu: f64,
    pub dim: usize,
}

impl ElasticityTensor {
    pub fn new(lambda: f64, mu: f64, dim: usize) -> Result<Self> {
        crate::constants::Lame::new(lambda, mu).check(dim)?;
        Ok(Self { lambda, mu, dim })
    }

    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        self.lambda * d(i, j) * d(k, l) + self.mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k))
    }

    /// (C ξ, ζ) for d×d matrices.
    pub fn contract(&self, xi: &DMatrix<f64>, zeta: &DMatrix<f64>) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        acc += self.component(i, j, k, l) * xi[(k, l)] * zeta[(i, j)];
                    }
                }
            }
        }
        acc
    }

    /// (C e(u), e(v)) from two displacement gradients in 2-D.
    pub fn energy_density(&self, gu: &Matrix2<f64>, gv: &Matrix2<f64>) -> f64 {
        let eu = (gu + gu.transpose()) * 0.5;
        let ev = (gv + gv.transpose()) * 0.5;
        self.lambda * eu.trace() * ev.trace() + 2.0 * self.mu * eu.component_mul(&ev).sum()
    }

    /// Traction (C e(u)) n in 2-D.
    pub fn traction(&self, gu: &Matrix2<f64>, n: [f64; 2]) -> [f64; 2] {
        let e = (gu + gu.transpose()) * 0.5;
        let tr = e.trace();
        let s = e * (2.0 * self.mu) + Matrix2::identity() * (self.lambda * tr);
        [s[(0, 0)] * n[0] + s[(0, 1)] * n[1], s[(1, 0)] * n[0] + s[(1, 1)] * n[1]]
    }

    /// Ellipticity bounds on symmetric matrices: min{2μ, dλ+2μ}, max{2μ, dλ+2μ}.
    pub fn ellipticity_bounds(&self) -> (f64, f64) {
        let a = 2.0 * self.mu;
        let b = self.dim as f64 * self.lambda + 2.0 * self.mu;
        (a.min(b), a.max(b))
    }
}
