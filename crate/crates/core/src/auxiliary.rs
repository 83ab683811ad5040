//! Rigid displacements and the explicit auxiliary fields `v̄`, `ū_i`, `ū_0`
//! living in the thin gap.

use crate::error::{Error, Result};
use crate::geometry::GapGeometry;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Number of rigid displacements in dimension `d`.
pub fn rigid_count(d: usize) -> usize {
    d * (d + 1) / 2
}

/// The (j, k), j < k, pair of the rotation with 1-based index `i > d`.
fn rotation_pair(d: usize, i: usize) -> (usize, usize) {
    let mut idx = d;
    for j in 0..d {
        for k in j + 1..d {
            idx += 1;
            if idx == i {
                return (j, k);
            }
        }
    }
    unreachable!("index checked by caller")
}

fn check_index(d: usize, i: usize) -> Result<()> {
    if i == 0 || i > rigid_count(d) {
        return Err(Error::InvalidParameter(format!("rigid index {i} out of 1..={}", rigid_count(d))));
    }
    Ok(())
}

/// ψ_i(x), 1-based: translations e_1 … e_d, then `x_k e_j − x_j e_k` for
/// j < k in lexicographic order. In two dimensions ψ₃ = (x₂, −x₁).
pub fn psi(i: usize, x: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    check_index(d, i)?;
    let mut v = vec![0.0; d];
    if i <= d {
        v[i - 1] = 1.0;
    } else {
        let (j, k) = rotation_pair(d, i);
        v[j] = x[k];
        v[k] = -x[j];
    }
    Ok(v)
}

/// ∇ψ_i (constant), entry (a, b) = ∂_b ψ_i^a.
pub fn psi_grad(i: usize, d: usize) -> Result<DMatrix<f64>> {
    check_index(d, i)?;
    let mut g = DMatrix::zeros(d, d);
    if i > d {
        let (j, k) = rotation_pair(d, i);
        g[(j, k)] = 1.0;
        g[(k, j)] = -1.0;
    }
    Ok(g)
}

/// Symmetric part ½(G + Gᵀ).
pub fn strain(g: &DMatrix<f64>) -> DMatrix<f64> {
    (g + g.transpose()) * 0.5
}

/// A vector polynomial term `coeff · x^powers` in component `component`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub component: usize,
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Boundary displacement φ on the matrix boundary, a vector polynomial with
/// a constant offset that enforces φ(0) = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi {
    pub name: String,
    pub dim: usize,
    pub terms: Vec<Monomial>,
    pub offset: Vec<f64>,
}

fn mono(component: usize, coeff: f64, powers: &[u32]) -> Monomial {
    Monomial { component, coeff, powers: powers.to_vec() }
}

impl Phi {
    pub fn polynomial(name: &str, dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            if t.component >= dim || t.powers.len() != dim {
                return Err(Error::InvalidParameter(format!("monomial {t:?} does not fit dimension {dim}")));
            }
        }
        Ok(Phi { name: name.into(), dim, terms, offset: vec![0.0; dim] })
    }

    pub fn zero(dim: usize) -> Self {
        Phi { name: "zero".into(), dim, terms: vec![], offset: vec![0.0; dim] }
    }

    /// The trace of the rigid displacement ψ_k.
    pub fn rigid(k: usize, dim: usize) -> Result<Self> {
        check_index(dim, k)?;
        let mut terms = vec![];
        if k <= dim {
            let p = vec![0; dim];
            terms.push(Monomial { component: k - 1, coeff: 1.0, powers: p });
        } else {
            let (j, l) = rotation_pair(dim, k);
            let mut pl = vec![0; dim];
            pl[l] = 1;
            let mut pj = vec![0; dim];
            pj[j] = 1;
            terms.push(Monomial { component: j, coeff: 1.0, powers: pl });
            terms.push(Monomial { component: l, coeff: -1.0, powers: pj });
        }
        // translations are deliberately not normalized: φ = e_k is the
        // rigid test datum itself
        Ok(Phi { name: format!("rigid{k}"), dim, terms, offset: vec![0.0; dim] })
    }

    /// Nonsymmetric quadratic field with all blow-up factors nonzero on
    /// symmetric geometries.
    pub fn generic_2d() -> Self {
        Phi::polynomial(
            "generic",
            2,
            vec![
                mono(0, 1.0, &[1, 0]),
                mono(0, 0.7, &[0, 1]),
                mono(0, 0.8, &[2, 0]),
                mono(1, 0.6, &[1, 0]),
                mono(1, -0.4, &[0, 1]),
                mono(1, 1.2, &[1, 1]),
                mono(1, 0.9, &[2, 0]),
            ],
        )
        .expect("valid")
    }

    /// φ = (x₂, x₁), a pure shear.
    pub fn linear_shear_2d() -> Self {
        Phi::polynomial("shear", 2, vec![mono(0, 1.0, &[0, 1]), mono(1, 1.0, &[1, 0])]).expect("valid")
    }

    /// φ = (1 + x₁)(x₂, −x₁), a rotation with a linearly varying angle.
    pub fn rotation_like_2d() -> Self {
        Phi::polynomial(
            "rotation_like",
            2,
            vec![
                mono(0, 1.0, &[0, 1]),
                mono(0, 1.0, &[1, 1]),
                mono(1, -1.0, &[1, 0]),
                mono(1, -1.0, &[2, 0]),
            ],
        )
        .expect("valid")
    }

    /// Subtract φ(0) so that the normalized field vanishes at the origin.
    pub fn normalized(mut self) -> Self {
        let zero = vec![0.0; self.dim];
        let raw = self.raw_value(&zero);
        self.offset = raw.iter().map(|v| -v).collect();
        self
    }

    fn raw_value(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for t in &self.terms {
            let mut m = t.coeff;
            for (xi, &p) in x.iter().zip(&t.powers) {
                m *= xi.powi(p as i32);
            }
            v[t.component] += m;
        }
        v
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.raw_value(x);
        v.iter_mut().zip(&self.offset).for_each(|(a, b)| *a += b);
        v
    }

    /// Jacobian, entry (a, b) = ∂_b φ^a.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut g = DMatrix::zeros(d, d);
        for t in &self.terms {
            for b in 0..d {
                if t.powers[b] == 0 {
                    continue;
                }
                let mut m = t.coeff * t.powers[b] as f64;
                for (c, (xi, &p)) in x.iter().zip(&t.powers).enumerate() {
                    let e = if c == b { p - 1 } else { p } as i32;
                    m *= xi.powi(e);
                }
                g[(t.component, b)] += m;
            }
        }
        g
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0) && self.offset.iter().all(|&o| o == 0.0)
    }
}

/// Value and gradient of a scalar field.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Value and gradient (entry (a, b) = ∂_b u^a) of a vector field.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub value: Vec<f64>,
    pub grad: DMatrix<f64>,
}

/// Tolerance for "inside the closed gap", relative to the local thickness.
const GAP_SLACK: f64 = 1e-10;

fn gap_frame(g: &GapGeometry, x: &[f64]) -> Result<(f64, Vec<f64>, f64, Vec<f64>)> {
    if x.len() != g.dim {
        return Err(Error::OutOfDomain { point: x.to_vec(), reason: format!("expected {} coordinates", g.dim) });
    }
    let xp = &x[..g.dim - 1];
    let delta = g.gap_thickness(xp)?;
    let (h, gh) = g.profile.lower.eval(xp);
    let (h1, gh1) = g.profile.upper.eval(xp);
    let xd = x[g.dim - 1];
    let slack = GAP_SLACK * delta;
    if xd < h - slack || xd > g.epsilon + h1 + slack {
        return Err(Error::OutOfDomain { point: x.to_vec(), reason: "outside the closed gap".into() });
    }
    let gdelta: Vec<f64> = gh1.iter().zip(&gh).map(|(a, b)| a - b).collect();
    Ok((h, gh, delta, gdelta))
}

/// v̄ = (x_d − h(x'))/δ(x') with its gradient.
pub fn vbar(g: &GapGeometry, x: &[f64]) -> Result<ScalarField> {
    let (h, gh, delta, gdelta) = gap_frame(g, x)?;
    let d = g.dim;
    let v = (x[d - 1] - h) / delta;
    let mut grad = vec![0.0; d];
    for m in 0..d - 1 {
        grad[m] = -gh[m] / delta - v * gdelta[m] / delta;
    }
    grad[d - 1] = 1.0 / delta;
    Ok(ScalarField { value: v, grad })
}

/// ū_i = ψ_i v̄, i ≥ 1.
pub fn ubar(g: &GapGeometry, i: usize, x: &[f64]) -> Result<VectorField> {
    let d = g.dim;
    check_index(d, i)?;
    let vb = vbar(g, x)?;
    let p = psi(i, x)?;
    let gp = psi_grad(i, d)?;
    let mut grad = gp * vb.value;
    for a in 0..d {
        for b in 0..d {
            grad[(a, b)] += p[a] * vb.grad[b];
        }
    }
    Ok(VectorField { value: p.iter().map(|c| c * vb.value).collect(), grad })
}

/// ū₀ = φ(x', h(x'))(1 − v̄).
pub fn ubar0(g: &GapGeometry, phi: &Phi, x: &[f64]) -> Result<VectorField> {
    let d = g.dim;
    if phi.dim != d {
        return Err(Error::InvalidParameter("boundary field dimension mismatch".into()));
    }
    let vb = vbar(g, x)?;
    let xp = &x[..d - 1];
    let (h, gh) = g.profile.lower.eval(xp);
    let mut xb = xp.to_vec();
    xb.push(h);
    let f = phi.value(&xb);
    let jf = phi.jacobian(&xb);
    let w = 1.0 - vb.value;
    let mut grad = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            // tangential derivative of the trace φ(x', h(x'))
            let dtrace = if b < d - 1 { jf[(a, b)] + jf[(a, d - 1)] * gh[b] } else { 0.0 };
            grad[(a, b)] = dtrace * w - f[a] * vb.grad[b];
        }
    }
    Ok(VectorField { value: f.iter().map(|c| c * w).collect(), grad })
}
