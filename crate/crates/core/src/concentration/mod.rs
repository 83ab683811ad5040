//! The free-constant system, its starred limits, the blow-up factor matrices
//! and the leading-order gradient asymptotics.
//!
//! Decomposition: `u = Σ Cⁱ uᵢ + u₀` with `A C = Y`, where
//! `a_ij = ∫_Ω (C⁰e(uᵢ), e(u_j))` and `Y_j = −∫_Ω (C⁰e(u₀), e(u_j))`.

mod asymptotic;
mod blowup;
mod monolithic;
mod starred;

pub use asymptotic::{
    asymptotic_gradient_2d, asymptotic_gradient_hd, calibrate, example_asymptotic, gradient_bounds,
    leading_coefficients_2d, GradientBounds, Prediction, RestExponents,
};
pub use blowup::{blowup_matrices, BlowupMatrices};
pub use monolithic::{monolithic_solve, MonolithicSolution};
pub use starred::{
    estimate_starred, rate_pinned_fit, DivergentFit, DivergentForm, EntryStatus, FitOptions, PinnedFit, StarredData,
    StarredEntry,
};

use crate::auxiliary::rigid_count;
use crate::error::{Error, Result};
use crate::fem::{energy_inner, gradient_at, FieldSolution};
use crate::geometry::GapGeometry;
use nalgebra::{DMatrix, DVector, Matrix2};

/// Relative symmetry tolerance of the assembled matrix.
const SYMMETRY_TOL: f64 = 1e-10;
/// Relative residual required of the solved constants.
const RESIDUAL_TOL: f64 = 1e-10;

/// `A X = Y` at one gap distance.
#[derive(Clone, Debug)]
pub struct ConcentrationSystem {
    pub dim: usize,
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub c: DVector<f64>,
    pub epsilon: f64,
    /// ‖AC − Y‖/‖Y‖ (absolute when Y = 0).
    pub residual: f64,
    /// Smallest eigenvalue of A.
    pub min_eigenvalue: f64,
}

impl ConcentrationSystem {
    /// Validate `A` (symmetric, positive definite) and solve for `C`.
    pub fn from_parts(dim: usize, a: DMatrix<f64>, y: DVector<f64>, epsilon: f64) -> Result<Self> {
        let n = rigid_count(dim);
        if a.nrows() != n || a.ncols() != n || y.len() != n {
            return Err(Error::InvalidParameter(format!("system must be {n}×{n} in dimension {dim}")));
        }
        let scale = a.amax();
        let asym = (&a - a.transpose()).amax();
        if !(asym <= SYMMETRY_TOL * scale) {
            return Err(Error::Indefinite(format!("matrix asymmetric: {asym:.3e} vs scale {scale:.3e}")));
        }
        let a = (&a + a.transpose()) * 0.5;
        let min_eigenvalue = a.clone().symmetric_eigenvalues().min();
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Indefinite(format!("smallest eigenvalue {min_eigenvalue:.3e}")))?;
        if !(min_eigenvalue > 0.0) {
            return Err(Error::Indefinite(format!("smallest eigenvalue {min_eigenvalue:.3e}")));
        }
        let mut c = chol.solve(&y);
        // one step of iterative refinement
        let r = &y - &a * &c;
        c += chol.solve(&r);
        let rn = (&a * &c - &y).norm();
        let yn = y.norm();
        let residual = if yn > 0.0 { rn / yn } else { rn };
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::Solver(format!("free-constant residual {residual:.3e}")));
        }
        Ok(ConcentrationSystem { dim, a, y, c, epsilon, residual, min_eigenvalue })
    }

    /// `a_ij` (1-based).
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[(i - 1, j - 1)]
    }

    /// `Q_j` (1-based).
    pub fn q(&self, j: usize) -> f64 {
        self.y[j - 1]
    }

    /// Finite-ε counterpart of the 2-D blow-up matrix `B_i`.
    pub fn b_matrix(&self, i: usize) -> Result<Matrix2<f64>> {
        if self.dim != 2 || !(1..=2).contains(&i) {
            return Err(Error::InvalidParameter("B_i exists for i = 1, 2 in two dimensions".into()));
        }
        Ok(Matrix2::new(self.q(i), self.a(i, 3), self.q(3), self.a(3, 3)))
    }
}

/// Build `A` and `Y` from the solved sub-problems `u₀, u₁, …` (all on one
/// mesh, `solutions[k].index == k`) and solve for the free constants.
pub fn assemble_system(solutions: &[FieldSolution], epsilon: f64) -> Result<ConcentrationSystem> {
    let dim = 2;
    let n = rigid_count(dim);
    if solutions.len() != n + 1 || solutions.iter().enumerate().any(|(k, s)| s.index != k) {
        return Err(Error::InvalidParameter(format!("expected sub-problems 0..={n} in order")));
    }
    let mut a = DMatrix::zeros(n, n);
    let mut y = DVector::zeros(n);
    for i in 1..=n {
        for j in 1..=n {
            a[(i - 1, j - 1)] = energy_inner(&solutions[i], &solutions[j])?;
        }
        y[i - 1] = -energy_inner(&solutions[0], &solutions[i])?;
    }
    ConcentrationSystem::from_parts(dim, a, y, epsilon)
}

/// `Σ Cⁱ uᵢ + u₀` as one discrete field.
pub fn total_field(solutions: &[FieldSolution], c: &DVector<f64>) -> Result<FieldSolution> {
    let terms: Vec<(f64, &FieldSolution)> = c.iter().copied().zip(solutions.iter().skip(1)).collect();
    FieldSolution::combine(&solutions[0], &terms)
}

/// `∇u(x) = Σ Cⁱ ∇uᵢ(x) + ∇u₀(x)`.
pub fn reconstruct_gradient(solutions: &[FieldSolution], c: &DVector<f64>, x: [f64; 2]) -> Result<Matrix2<f64>> {
    let mut g = gradient_at(&solutions[0], x)?;
    for (ci, s) in c.iter().zip(solutions.iter().skip(1)) {
        g += gradient_at(s, x)? * *ci;
    }
    Ok(g)
}

/// Largest `|∇u|` (Frobenius) sampled along the segment `{x₁ = 0}` of the gap.
#[derive(Clone, Copy, Debug)]
pub struct AxisMaximum {
    pub value: f64,
    pub at: [f64; 2],
}

pub fn axis_maximum(field: &FieldSolution, g: &GapGeometry, samples: usize) -> Result<AxisMaximum> {
    let bottom = g.profile.lower.value(&[0.0]);
    let top = g.epsilon + g.profile.upper.value(&[0.0]);
    let mut best = AxisMaximum { value: f64::NEG_INFINITY, at: [0.0, bottom] };
    for k in 0..samples.max(1) {
        let t = (k as f64 + 0.5) / samples.max(1) as f64;
        let x = [0.0, bottom + t * (top - bottom)];
        let v = gradient_at(field, x)?.norm();
        if v > best.value {
            best = AxisMaximum { value: v, at: x };
        }
    }
    Ok(best)
}

/// Location and value of the largest `|∇u|` over the mesh part of `Ω_R`,
/// sampled at element vertices and centroids.
pub fn argmax_gradient(field: &FieldSolution, radius: f64) -> ([f64; 2], f64) {
    use crate::fem::{field_gradient, map_point};
    let mesh = &field.mesh;
    let refs = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0 / 3.0, 1.0 / 3.0]];
    let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
    for (e, el) in mesh.elements.iter().enumerate() {
        if el.iter().any(|&n| mesh.nodes[n][0].abs() > radius) {
            continue;
        }
        let coords = mesh.element_coords(e);
        let vals = el.map(|n| field.nodal(n));
        for r in refs {
            let mp = map_point(&coords, r[0], r[1]);
            let v = field_gradient(&mp, &vals).norm();
            if v > best.1 {
                best = ([mp.x[0], mp.x[1]], v);
            }
        }
    }
    best
}

/// `max |∇a − ∇b| / max |∇a|` over the elements inside `{|x₁| ≤ radius}`,
/// sampled at vertices and centroids (both fields on one mesh).
pub fn gradient_discrepancy(a: &FieldSolution, b: &FieldSolution, radius: f64) -> Result<f64> {
    use crate::fem::{field_gradient, map_point};
    if !std::sync::Arc::ptr_eq(&a.mesh, &b.mesh) {
        return Err(Error::MeshMismatch);
    }
    let mesh = &a.mesh;
    let refs = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0 / 3.0, 1.0 / 3.0]];
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (e, el) in mesh.elements.iter().enumerate() {
        if el.iter().any(|&n| mesh.nodes[n][0].abs() > radius) {
            continue;
        }
        let coords = mesh.element_coords(e);
        let va = el.map(|n| a.nodal(n));
        let vb = el.map(|n| b.nodal(n));
        for r in refs {
            let mp = map_point(&coords, r[0], r[1]);
            let ga = field_gradient(&mp, &va);
            diff = diff.max((ga - field_gradient(&mp, &vb)).norm());
            scale = scale.max(ga.norm());
        }
    }
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

#[cfg(test)]
mod tests;
