//! Scalar Laplace self-test on the P1 sub-mesh: the solution with data 0 on
//! ∂D and 1 on ∂D₁ (a discrete analogue of v̄) must stay in [0, 1].

use super::mesh::{GapMesh, NodeTag};
use super::sparse::{CsrMatrix, SkylineCholesky};
use crate::error::Result;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalarSelfTest {
    pub min: f64,
    pub max: f64,
    pub unknowns: usize,
}

impl ScalarSelfTest {
    pub fn satisfies_maximum_principle(&self, tol: f64) -> bool {
        self.min >= -tol && self.max <= 1.0 + tol
    }
}

pub fn scalar_laplace_selftest(mesh: &GapMesh) -> Result<ScalarSelfTest> {
    let tris = mesh.vertex_triangles();
    let nn = mesh.nodes.len();
    let mut is_vertex = vec![false; nn];
    tris.iter().flatten().for_each(|&v| is_vertex[v] = true);
    let mut map = vec![None; nn];
    let mut unknowns = 0;
    for n in 0..nn {
        if is_vertex[n] && mesh.tags[n] == NodeTag::Interior {
            map[n] = Some(unknowns);
            unknowns += 1;
        }
    }
    let data = |n: usize| if mesh.tags[n] == NodeTag::Inclusion { 1.0 } else { 0.0 };
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; unknowns];
    for t in &tris {
        let p = t.map(|v| mesh.nodes[v]);
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        // ∇λ_k = perp(opposite edge) / 2|T|
        let g: Vec<[f64; 2]> = (0..3)
            .map(|k| {
                let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2]
            })
            .collect();
        for i in 0..3 {
            let Some(ri) = map[t[i]] else { continue };
            for j in 0..3 {
                let kij = 0.5 * area2.abs() * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                match map[t[j]] {
                    Some(cj) => trip.push((ri, cj, kij)),
                    None => rhs[ri] -= kij * data(t[j]),
                }
            }
        }
    }
    let a = CsrMatrix::from_triplets(unknowns, &trip);
    let x = SkylineCholesky::factor(&a)?.solve(&rhs);
    let (min, max) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(ScalarSelfTest { min, max, unknowns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_gap_mesh, MeshParams};
    use crate::geometry::GapGeometry;

    #[test]
    fn maximum_principle_holds() {
        for eps in [1e-2, 1e-4] {
            let g = GapGeometry::power_2d(0.5, 0.5, 1.0, 1.0, 0.25, eps).unwrap();
            let m = build_gap_mesh(&g, MeshParams::default()).unwrap();
            let r = scalar_laplace_selftest(&m).unwrap();
            assert!(r.satisfies_maximum_principle(1e-12), "{r:?}");
        }
    }
}
