//! Six-node isoparametric triangle: shape functions, quadrature rules and
//! the element stiffness of the Lamé operator.

use super::ElasticityTensor;
use nalgebra::{Matrix2, SMatrix, Vector2};

/// Local node order: three vertices, then the midpoints of edges 01, 12, 20.
pub type Element = [usize; 6];

/// Element stiffness with local dof order `2·node + component`.
pub type ElementMatrix = SMatrix<f64, 12, 12>;

/// 7-point degree-5 rule on the reference triangle (weights sum to 1/2).
pub const TRI_QUAD: [([f64; 2], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W0: f64 = 0.5 * 0.225;
    const W1: f64 = 0.5 * 0.132_394_152_788_506;
    const W2: f64 = 0.5 * 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1], W1),
        ([B1, A1], W1),
        ([B1, B1], W1),
        ([A2, B2], W2),
        ([B2, A2], W2),
        ([B2, B2], W2),
    ]
};

/// 5-point Gauss–Legendre rule on [0, 1].
pub const LINE_QUAD: [(f64, f64); 5] = {
    const X1: f64 = 0.538_469_310_105_683_1;
    const X2: f64 = 0.906_179_845_938_664;
    const W0: f64 = 0.568_888_888_888_888_9;
    const W1: f64 = 0.478_628_670_499_366_5;
    const W2: f64 = 0.236_926_885_056_189_1;
    [
        (0.5, 0.5 * W0),
        (0.5 * (1.0 - X1), 0.5 * W1),
        (0.5 * (1.0 + X1), 0.5 * W1),
        (0.5 * (1.0 - X2), 0.5 * W2),
        (0.5 * (1.0 + X2), 0.5 * W2),
    ]
};

/// Shape function values at reference point (ξ, η).
pub fn shape(xi: f64, eta: f64) -> [f64; 6] {
    let l = [1.0 - xi - eta, xi, eta];
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Reference gradients `[∂_ξ N, ∂_η N]` of the shape functions.
pub fn shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 6] {
    let l = [1.0 - xi - eta, xi, eta];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut g = [[0.0; 2]; 6];
    for r in 0..2 {
        for v in 0..3 {
            g[v][r] = (4.0 * l[v] - 1.0) * dl[v][r];
        }
        for (m, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            g[3 + m][r] = 4.0 * (dl[i][r] * l[j] + l[i] * dl[j][r]);
        }
    }
    g
}

/// Reference coordinates of the six nodes.
pub const REF_NODES: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];

/// Local edges as (vertex, vertex, midpoint) triples.
pub const EDGES: [[usize; 3]; 3] = [[0, 1, 3], [1, 2, 4], [2, 0, 5]];

/// Reference point at parameter `s ∈ [0,1]` along local edge `e`.
pub fn edge_point(e: usize, s: f64) -> [f64; 2] {
    match e {
        0 => [s, 0.0],
        1 => [1.0 - s, s],
        _ => [0.0, 1.0 - s],
    }
}

/// Geometry of one element at a reference point.
#[derive(Clone, Copy, Debug)]
pub struct MapPoint {
    pub x: Vector2<f64>,
    /// J[a][r] = ∂x_a/∂ξ_r.
    pub jac: Matrix2<f64>,
    pub det: f64,
    /// Physical shape gradients ∇N_n.
    pub grad: [Vector2<f64>; 6],
    pub n: [f64; 6],
}

pub fn map_point(coords: &[[f64; 2]; 6], xi: f64, eta: f64) -> MapPoint {
    let n = shape(xi, eta);
    let g = shape_grad(xi, eta);
    let mut x = Vector2::zeros();
    let mut jac = Matrix2::zeros();
    for k in 0..6 {
        x += Vector2::new(coords[k][0], coords[k][1]) * n[k];
        for a in 0..2 {
            for r in 0..2 {
                jac[(a, r)] += coords[k][a] * g[k][r];
            }
        }
    }
    let det = jac.determinant();
    let inv_t = jac.try_inverse().map(|m| m.transpose()).unwrap_or_else(Matrix2::zeros);
    let mut grad = [Vector2::zeros(); 6];
    for k in 0..6 {
        grad[k] = inv_t * Vector2::new(g[k][0], g[k][1]);
    }
    MapPoint { x, jac, det, grad, n }
}

/// Physical gradient of a nodal vector field at a mapped point; entry
/// (a, b) = ∂_b u^a.
pub fn field_gradient(mp: &MapPoint, u: &[[f64; 2]; 6]) -> Matrix2<f64> {
    let mut g = Matrix2::zeros();
    for k in 0..6 {
        for a in 0..2 {
            g[(a, 0)] += u[k][a] * mp.grad[k][0];
            g[(a, 1)] += u[k][a] * mp.grad[k][1];
        }
    }
    g
}

/// Element stiffness: K_(a,i),(b,k) = ∫ λ∂_iN_a∂_kN_b + μ∂_kN_a∂_iN_b + μδ_ik∇N_a·∇N_b.
pub fn element_stiffness(coords: &[[f64; 2]; 6], tensor: &ElasticityTensor) -> (ElementMatrix, f64) {
    let (lam, mu) = (tensor.lambda, tensor.mu);
    let mut k = ElementMatrix::zeros();
    let mut min_det = f64::INFINITY;
    for &([xi, eta], w) in TRI_QUAD.iter() {
        let mp = map_point(coords, xi, eta);
        min_det = min_det.min(mp.det);
        let wd = w * mp.det;
        for a in 0..6 {
            let ga = mp.grad[a];
            for b in 0..6 {
                let gb = mp.grad[b];
                let dot = ga.dot(&gb);
                for i in 0..2 {
                    for kk in 0..2 {
                        let mut v = lam * ga[i] * gb[kk] + mu * ga[kk] * gb[i];
                        if i == kk {
                            v += mu * dot;
                        }
                        k[(2 * a + i, 2 * b + kk)] += wd * v;
                    }
                }
            }
        }
    }
    (k, min_det)
}

/// ∫ (C e(u), e(v)) over one element.
pub fn element_energy(coords: &[[f64; 2]; 6], u: &[[f64; 2]; 6], v: &[[f64; 2]; 6], tensor: &ElasticityTensor) -> f64 {
    let mut acc = 0.0;
    for &([xi, eta], w) in TRI_QUAD.iter() {
        let mp = map_point(coords, xi, eta);
        let gu = field_gradient(&mp, u);
        let gv = field_gradient(&mp, v);
        acc += w * mp.det * tensor.energy_density(&gu, &gv);
    }
    acc
}

/// Newton inversion of the isoparametric map; returns reference coordinates.
pub fn invert_map(coords: &[[f64; 2]; 6], p: [f64; 2]) -> Option<[f64; 2]> {
    let mut r = [1.0 / 3.0, 1.0 / 3.0];
    let target = Vector2::new(p[0], p[1]);
    let scale = {
        let mut m: f64 = 0.0;
        for c in coords.iter().skip(1) {
            m = m.max((c[0] - coords[0][0]).abs()).max((c[1] - coords[0][1]).abs());
        }
        m
    };
    for _ in 0..40 {
        let mp = map_point(coords, r[0], r[1]);
        let res = target - mp.x;
        let step = mp.jac.try_inverse()? * res;
        r[0] += step[0];
        r[1] += step[1];
        if !(r[0].is_finite() && r[1].is_finite()) || r[0].abs() > 10.0 || r[1].abs() > 10.0 {
            return None;
        }
        if res.norm() <= 1e-14 * scale.max(1e-300) || step.norm() < 1e-14 {
            break;
        }
    }
    let mp = map_point(coords, r[0], r[1]);
    if (target - mp.x).norm() > 1e-10 * scale.max(1e-300) {
        return None;
    }
    Some(r)
}

/// Whether reference coordinates lie in the triangle up to `tol`.
pub fn inside_reference(r: [f64; 2], tol: f64) -> bool {
    r[0] >= -tol && r[1] >= -tol && r[0] + r[1] <= 1.0 + tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(v: [[f64; 2]; 3]) -> [[f64; 2]; 6] {
        let m = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        [v[0], v[1], v[2], m(v[0], v[1]), m(v[1], v[2]), m(v[2], v[0])]
    }

    #[test]
    fn quadrature_integrates_quintics() {
        // ∫_T ξ^a η^b = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let q: f64 = TRI_QUAD.iter().map(|&([x, y], w)| w * x.powi(a as i32) * y.powi(b as i32)).sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-14, "{a} {b}");
            }
        }
        let s: f64 = LINE_QUAD.iter().map(|&(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-15);
    }

    #[test]
    fn shape_functions_partition_unity_and_kronecker() {
        for (k, r) in REF_NODES.iter().enumerate() {
            let n = shape(r[0], r[1]);
            for (m, v) in n.iter().enumerate() {
                assert!((v - if m == k { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let g = shape_grad(0.2, 0.3);
        for r in 0..2 {
            assert!(g.iter().map(|v| v[r]).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn affine_fields_have_exact_gradients() {
        let c = straight([[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]]);
        let u: Vec<[f64; 2]> = c.iter().map(|p| [p[1], -p[0]]).collect();
        let u: [[f64; 2]; 6] = u.try_into().unwrap();
        let mp = map_point(&c, 0.3, 0.2);
        let g = field_gradient(&mp, &u);
        assert!((g - Matrix2::new(0.0, 1.0, -1.0, 0.0)).amax() < 1e-13);
    }

    #[test]
    fn stiffness_is_symmetric_with_rigid_kernel() {
        let mut c = straight([[0.0, 0.0], [1.0, 0.1], [0.2, 0.8]]);
        c[4] = [0.62, 0.5]; // curved edge
        let t = ElasticityTensor::new(1.0, 1.0, 2).unwrap();
        let (k, det) = element_stiffness(&c, &t);
        assert!(det > 0.0);
        assert!((k - k.transpose()).amax() < 1e-13 * k.amax());
        for rigid in 0..3 {
            let mut v = nalgebra::SVector::<f64, 12>::zeros();
            for n in 0..6 {
                let (a, b) = match rigid {
                    0 => (1.0, 0.0),
                    1 => (0.0, 1.0),
                    _ => (c[n][1], -c[n][0]),
                };
                v[2 * n] = a;
                v[2 * n + 1] = b;
            }
            assert!((k * v).amax() < 1e-12 * k.amax());
        }
    }

    #[test]
    fn inversion_roundtrip() {
        let mut c = straight([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        c[4] = [0.55, 0.55];
        let mp = map_point(&c, 0.25, 0.4);
        let r = invert_map(&c, [mp.x[0], mp.x[1]]).unwrap();
        assert!((r[0] - 0.25).abs() < 1e-12 && (r[1] - 0.4).abs() < 1e-12);
    }
}
