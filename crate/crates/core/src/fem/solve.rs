//! Assembly and solution of the pure-displacement sub-problems, energy
//! inner products, boundary tractions and point gradients.

use super::element::{edge_point, element_energy, field_gradient, map_point, shape, ElementMatrix, EDGES, LINE_QUAD};
use super::mesh::{GapMesh, NodeTag};
use super::sparse::{conjugate_gradient, dot, CsrMatrix, SkylineCholesky};
use super::ElasticityTensor;
use crate::auxiliary::{psi, Phi};
use crate::error::{Error, Result};
use crate::exec;
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Cg,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub solver: SolverKind,
    /// Relative residual target of the iterative solver.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { solver: SolverKind::Direct, tol: 1e-10, max_iter: 200_000 }
    }
}

/// Discrete displacement field (two components per node).
#[derive(Clone, Debug)]
pub struct FieldSolution {
    pub mesh: Arc<GapMesh>,
    pub tensor: ElasticityTensor,
    pub values: Vec<f64>,
    /// 0 for the boundary-data problem, i ≥ 1 for the rigid-mode problems.
    pub index: usize,
    /// Relative algebraic residual of the interior system.
    pub residual: f64,
}

impl FieldSolution {
    pub fn nodal(&self, n: usize) -> [f64; 2] {
        [self.values[2 * n], self.values[2 * n + 1]]
    }

    fn element_values(&self, e: usize) -> [[f64; 2]; 6] {
        self.mesh.elements[e].map(|n| self.nodal(n))
    }

    /// Σ cᵢ uᵢ + base on the same mesh.
    pub fn combine(base: &FieldSolution, terms: &[(f64, &FieldSolution)]) -> Result<FieldSolution> {
        let mut values = base.values.clone();
        for (c, f) in terms {
            if !Arc::ptr_eq(&f.mesh, &base.mesh) {
                return Err(Error::MeshMismatch);
            }
            values.iter_mut().zip(&f.values).for_each(|(v, w)| *v += c * w);
        }
        Ok(FieldSolution { values, index: base.index, residual: f64::NAN, ..base.clone() })
    }
}

/// Nodal values of the rigid displacement ψ_i on every node.
pub fn rigid_values(mesh: &GapMesh, i: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; 2 * mesh.nodes.len()];
    for (n, p) in mesh.nodes.iter().enumerate() {
        let r = psi(i, p)?;
        v[2 * n] = r[0];
        v[2 * n + 1] = r[1];
    }
    Ok(v)
}

/// The assembled pure-Dirichlet Lamé problem on one mesh; the interior
/// block is factored once and shared by every right-hand side.
pub struct ElasticProblem {
    pub mesh: Arc<GapMesh>,
    pub tensor: ElasticityTensor,
    pub options: SolverOptions,
    /// Stiffness over all dofs (`2·node + component`).
    pub stiffness: CsrMatrix,
    interior_map: Vec<Option<usize>>,
    interior: Vec<usize>,
    k_ii: CsrMatrix,
    factor: Option<SkylineCholesky>,
}

const BLOCK: usize = 4096;

/// Stiffness pattern of all dofs, from element connectivity.
fn stiffness_pattern(mesh: &GapMesh) -> CsrMatrix {
    let nn = mesh.nodes.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nn];
    for e in &mesh.elements {
        for &a in e {
            adj[a].extend_from_slice(e);
        }
    }
    let mut rows = Vec::with_capacity(2 * nn);
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
        let r: Vec<usize> = a.iter().flat_map(|&b| [2 * b, 2 * b + 1]).collect();
        rows.push(r.clone());
        rows.push(r);
    }
    CsrMatrix::from_pattern(rows)
}

/// Global stiffness: element matrices computed in parallel blocks, scattered
/// sequentially in element order (deterministic).
pub fn assemble_stiffness(mesh: &GapMesh, tensor: &ElasticityTensor, parallel: bool) -> CsrMatrix {
    let mut k = stiffness_pattern(mesh);
    let ne = mesh.elements.len();
    let compute = |e: usize| -> ElementMatrix { super::element::element_stiffness(&mesh.element_coords(e), tensor).0 };
    for lo in (0..ne).step_by(BLOCK) {
        let hi = (lo + BLOCK).min(ne);
        let mats: Vec<ElementMatrix> = if parallel {
            exec::map_range(hi - lo, |i| compute(lo + i))
        } else {
            exec::seq::map_range(hi - lo, |i| compute(lo + i))
        };
        for (off, m) in mats.iter().enumerate() {
            let el = &mesh.elements[lo + off];
            for a in 0..6 {
                for i in 0..2 {
                    let row = 2 * el[a] + i;
                    for b in 0..6 {
                        for kk in 0..2 {
                            k.add(row, 2 * el[b] + kk, m[(2 * a + i, 2 * b + kk)]);
                        }
                    }
                }
            }
        }
    }
    k
}

impl ElasticProblem {
    pub fn new(mesh: Arc<GapMesh>, tensor: ElasticityTensor, options: SolverOptions) -> Result<Self> {
        if tensor.dim != 2 {
            return Err(Error::InvalidParameter("the finite element solver is two-dimensional".into()));
        }
        let stiffness = assemble_stiffness(&mesh, &tensor, true);
        let mut interior_map = vec![None; stiffness.n];
        let mut interior = Vec::new();
        for (n, t) in mesh.tags.iter().enumerate() {
            if *t == NodeTag::Interior {
                for c in 0..2 {
                    interior_map[2 * n + c] = Some(interior.len());
                    interior.push(2 * n + c);
                }
            }
        }
        let k_ii = stiffness.submatrix(&interior_map);
        let factor = match options.solver {
            SolverKind::Direct => Some(SkylineCholesky::factor(&k_ii).map_err(|e| match e {
                Error::Indefinite(m) => Error::Solver(format!("interior stiffness not positive definite: {m}")),
                other => other,
            })?),
            SolverKind::Cg => None,
        };
        Ok(ElasticProblem { mesh, tensor, options, stiffness, interior_map, interior, k_ii, factor })
    }

    pub fn dofs(&self) -> usize {
        self.stiffness.n
    }

    pub fn interior_dofs(&self) -> usize {
        self.interior.len()
    }

    pub fn interior_stiffness(&self) -> &CsrMatrix {
        &self.k_ii
    }

    pub fn interior_map(&self) -> &[Option<usize>] {
        &self.interior_map
    }

    /// Boundary data: sub-problem 0 carries φ on ∂D and 0 on ∂D₁, sub-problem
    /// i ≥ 1 carries ψ_i on ∂D₁ and 0 on ∂D.
    pub fn boundary_values(&self, index: usize, phi: Option<&Phi>) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.stiffness.n];
        if index == 0 {
            let phi = phi.ok_or_else(|| Error::InvalidParameter("sub-problem 0 needs a boundary field".into()))?;
            for (n, p) in self.mesh.nodes.iter().enumerate() {
                if self.mesh.tags[n] == NodeTag::Outer {
                    let f = phi.value(p);
                    v[2 * n] = f[0];
                    v[2 * n + 1] = f[1];
                }
            }
        } else {
            for (n, p) in self.mesh.nodes.iter().enumerate() {
                if self.mesh.tags[n] == NodeTag::Inclusion {
                    let f = psi(index, p)?;
                    v[2 * n] = f[0];
                    v[2 * n + 1] = f[1];
                }
            }
        }
        Ok(v)
    }

    /// Solve the interior system for the right-hand side `rhs`.
    pub fn solve_interior(&self, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let x = match &self.factor {
            Some(f) => f.solve(rhs),
            None => conjugate_gradient(&self.k_ii, rhs, self.options.tol, self.options.max_iter)?.x,
        };
        let r = self.k_ii.mul_vec(&x);
        let rn = dot(rhs, rhs).sqrt();
        let diff: Vec<f64> = r.iter().zip(rhs).map(|(a, b)| a - b).collect();
        let res = if rn > 0.0 { dot(&diff, &diff).sqrt() / rn } else { dot(&diff, &diff).sqrt() };
        if !(res <= 1e-8) {
            return Err(Error::Solver(format!("relative residual {res:.3e} too large")));
        }
        Ok((x, res))
    }

    /// Solve with prescribed boundary values (interior entries ignored).
    pub fn solve_dirichlet(&self, mut values: Vec<f64>, index: usize) -> Result<FieldSolution> {
        for &g in &self.interior {
            values[g] = 0.0;
        }
        let kb = self.stiffness.mul_vec(&values);
        let rhs: Vec<f64> = self.interior.iter().map(|&g| -kb[g]).collect();
        let (x, residual) = self.solve_interior(&rhs)?;
        for (k, &g) in self.interior.iter().enumerate() {
            values[g] = x[k];
        }
        Ok(FieldSolution { mesh: self.mesh.clone(), tensor: self.tensor, values, index, residual })
    }

    pub fn solve_subproblem(&self, index: usize, phi: Option<&Phi>) -> Result<FieldSolution> {
        let b = self.boundary_values(index, phi)?;
        self.solve_dirichlet(b, index)
    }

    /// u₀, u₁, …, u_{d(d+1)/2}, solved concurrently against the shared factor.
    pub fn solve_all(&self, phi: &Phi) -> Result<Vec<FieldSolution>> {
        exec::map_range(4, |i| self.solve_subproblem(i, Some(phi))).into_iter().collect()
    }

    /// uᵀ K v with the assembled stiffness.
    pub fn stiffness_inner(&self, u: &FieldSolution, v: &FieldSolution) -> f64 {
        let kv = self.stiffness.mul_vec(&v.values);
        dot(&u.values, &kv)
    }
}

/// ∫_Ω (C e(u), e(v)) by element quadrature.
pub fn energy_inner(u: &FieldSolution, v: &FieldSolution) -> Result<f64> {
    if !Arc::ptr_eq(&u.mesh, &v.mesh) || u.tensor != v.tensor {
        return Err(Error::MeshMismatch);
    }
    let mesh = &u.mesh;
    Ok(exec::chunked_sum(mesh.elements.len(), |e| {
        element_energy(&mesh.element_coords(e), &u.element_values(e), &v.element_values(e), &u.tensor)
    }))
}

/// ∫_{∂D₁} (C e(u)) ν · ψ_j with ν the unit normal of ∂D₁ pointing into Ω
/// (outward from the inclusion); the Green identity gives
/// `−boundary_flux_functional(u_i, j) = a_ij`.
pub fn boundary_flux_functional(u: &FieldSolution, j: usize) -> Result<f64> {
    let mesh = &u.mesh;
    let mut acc = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        for (k, edge) in EDGES.iter().enumerate() {
            if !edge.iter().all(|&l| mesh.tags[el[l]] == NodeTag::Inclusion) {
                continue;
            }
            let coords = mesh.element_coords(e);
            let vals = u.element_values(e);
            let centre = map_point(&coords, 1.0 / 3.0, 1.0 / 3.0).x;
            let dref = match k {
                0 => [1.0, 0.0],
                1 => [-1.0, 1.0],
                _ => [0.0, -1.0],
            };
            for &(s, w) in LINE_QUAD.iter() {
                let r = edge_point(k, s);
                let mp = map_point(&coords, r[0], r[1]);
                let t = [
                    mp.jac[(0, 0)] * dref[0] + mp.jac[(0, 1)] * dref[1],
                    mp.jac[(1, 0)] * dref[0] + mp.jac[(1, 1)] * dref[1],
                ];
                let len = t[0].hypot(t[1]);
                let mut n = [t[1] / len, -t[0] / len];
                if (centre[0] - mp.x[0]) * n[0] + (centre[1] - mp.x[1]) * n[1] < 0.0 {
                    n = [-n[0], -n[1]];
                }
                let g = field_gradient(&mp, &vals);
                let tr = u.tensor.traction(&g, n);
                let p = psi(j, &[mp.x[0], mp.x[1]])?;
                acc += w * len * (tr[0] * p[0] + tr[1] * p[1]);
            }
        }
    }
    Ok(acc)
}

/// Gradient (entry (a, b) = ∂_b u^a) of the discrete field at `x`.
pub fn gradient_at(u: &FieldSolution, x: [f64; 2]) -> Result<Matrix2<f64>> {
    let (e, r) = u.mesh.locate(x).ok_or(Error::PointLocation(x))?;
    let mp = map_point(&u.mesh.element_coords(e), r[0], r[1]);
    Ok(field_gradient(&mp, &u.element_values(e)))
}

/// Gradients from every element containing `x` (several on shared edges).
pub fn gradients_at_all(u: &FieldSolution, x: [f64; 2]) -> Vec<Matrix2<f64>> {
    u.mesh
        .locate_all(x)
        .into_iter()
        .map(|(e, r)| field_gradient(&map_point(&u.mesh.element_coords(e), r[0], r[1]), &u.element_values(e)))
        .collect()
}

/// Value of the discrete field at `x`.
pub fn value_at(u: &FieldSolution, x: [f64; 2]) -> Result<[f64; 2]> {
    let (e, r) = u.mesh.locate(x).ok_or(Error::PointLocation(x))?;
    let n = shape(r[0], r[1]);
    let vals = u.element_values(e);
    let mut out = [0.0; 2];
    for k in 0..6 {
        out[0] += n[k] * vals[k][0];
        out[1] += n[k] * vals[k][1];
    }
    Ok(out)
}

/// L² norm of the strain, ‖e(u)‖.
pub fn strain_norm(u: &FieldSolution) -> f64 {
    let mesh = &u.mesh;
    exec::chunked_sum(mesh.elements.len(), |e| {
        let coords = mesh.element_coords(e);
        let vals = u.element_values(e);
        super::element::TRI_QUAD
            .iter()
            .map(|&([a, b], w)| {
                let mp = map_point(&coords, a, b);
                let g = field_gradient(&mp, &vals);
                let s = (g + g.transpose()) * 0.5;
                w * mp.det * s.norm_squared()
            })
            .sum::<f64>()
    })
    .sqrt()
}

/// L² norm of the displacement.
pub fn l2_norm(u: &FieldSolution) -> f64 {
    let mesh = &u.mesh;
    exec::chunked_sum(mesh.elements.len(), |e| {
        let coords = mesh.element_coords(e);
        let vals = u.element_values(e);
        super::element::TRI_QUAD
            .iter()
            .map(|&([a, b], w)| {
                let mp = map_point(&coords, a, b);
                let mut v = [0.0; 2];
                for k in 0..6 {
                    v[0] += mp.n[k] * vals[k][0];
                    v[1] += mp.n[k] * vals[k][1];
                }
                w * mp.det * (v[0] * v[0] + v[1] * v[1])
            })
            .sum::<f64>()
    })
    .sqrt()
}
