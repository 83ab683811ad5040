//! Direct solve of the rigid-inclusion problem without the decomposition:
//! the inclusion trace is constrained to `Σ Cᵢ ψᵢ` by eliminating its dofs
//! in favour of the constants `Cᵢ`, and the zero-net-traction conditions
//! are the stationarity equations for those constants. Test oracle only.

use crate::auxiliary::{psi, rigid_count, Phi};
use crate::error::Result;
use crate::fem::{CsrMatrix, ElasticProblem, FieldSolution, NodeTag, SkylineCholesky};

pub struct MonolithicSolution {
    pub field: FieldSolution,
    /// Rigid-motion coefficients of the inclusion.
    pub c: Vec<f64>,
}

pub fn monolithic_solve(problem: &ElasticProblem, phi: &Phi) -> Result<MonolithicSolution> {
    let mesh = &problem.mesh;
    let k = &problem.stiffness;
    let imap = problem.interior_map();
    let ni = problem.interior_dofs();
    let nc = rigid_count(2);
    let n = ni + nc;

    // rigid columns restricted to inclusion dofs
    let mut rigid = vec![vec![0.0; k.n]; nc];
    for (node, p) in mesh.nodes.iter().enumerate() {
        if mesh.tags[node] == NodeTag::Inclusion {
            for (i, col) in rigid.iter_mut().enumerate() {
                let v = psi(i + 1, p)?;
                col[2 * node] = v[0];
                col[2 * node + 1] = v[1];
            }
        }
    }
    let g = problem.boundary_values(0, Some(phi))?;
    let kg = k.mul_vec(&g);
    let krig: Vec<Vec<f64>> = rigid.iter().map(|c| k.mul_vec(c)).collect();

    let mut trip = Vec::with_capacity(k.vals.len() + 2 * nc * ni + nc * nc);
    let mut rhs = vec![0.0; n];
    for row in 0..k.n {
        if let Some(r) = imap[row] {
            for (col, v) in k.row(row) {
                if let Some(c) = imap[col] {
                    trip.push((r, c, v));
                }
            }
            for (i, kr) in krig.iter().enumerate() {
                if kr[row] != 0.0 {
                    trip.push((r, ni + i, kr[row]));
                    trip.push((ni + i, r, kr[row]));
                }
            }
            rhs[r] = -kg[row];
        }
    }
    for i in 0..nc {
        for j in 0..nc {
            let v: f64 = rigid[i].iter().zip(&krig[j]).map(|(a, b)| a * b).sum();
            trip.push((ni + i, ni + j, v));
        }
        rhs[ni + i] = -rigid[i].iter().zip(&kg).map(|(a, b)| a * b).sum::<f64>();
    }
    let s = CsrMatrix::from_triplets(n, &trip);
    let z = SkylineCholesky::factor(&s)?.solve(&rhs);
    let c: Vec<f64> = z[ni..].to_vec();

    let mut values = g;
    for (dof, m) in imap.iter().enumerate() {
        if let Some(r) = m {
            values[dof] = z[*r];
        }
    }
    for (i, col) in rigid.iter().enumerate() {
        for (v, r) in values.iter_mut().zip(col) {
            *v += c[i] * r;
        }
    }
    let field = FieldSolution { mesh: mesh.clone(), tensor: problem.tensor, values, index: 0, residual: f64::NAN };
    Ok(MonolithicSolution { field, c })
}
