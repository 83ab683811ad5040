//! Blow-up factor matrices built from starred data.

use super::StarredData;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, Matrix2};

#[derive(Clone, Debug)]
pub enum BlowupMatrices {
    /// `B_i* = [[Q_i*, a_i3*], [Q_3*, a_33*]]`, i = 1, 2.
    TwoD { b: [Matrix2<f64>; 2], det_b: [f64; 2], a33: f64, q3: f64 },
    /// `A*` and `F_i*` (A* with column i replaced by Q*).
    HigherD { a: DMatrix<f64>, f: Vec<DMatrix<f64>>, det_a: f64, det_f: Vec<f64> },
}

impl BlowupMatrices {
    /// `det F_i*/det A*` (dimension ≥ 3).
    pub fn cramer_coefficients(&self) -> Result<Vec<f64>> {
        match self {
            BlowupMatrices::HigherD { det_a, det_f, .. } => Ok(det_f.iter().map(|d| d / det_a).collect()),
            BlowupMatrices::TwoD { .. } => {
                Err(Error::InvalidParameter("Cramer coefficients are defined for d ≥ 3".into()))
            }
        }
    }
}

pub fn blowup_matrices(s: &StarredData) -> Result<BlowupMatrices> {
    if s.dim == 2 {
        let a33 = s.a(3, 3)?;
        if !(a33 > 0.0) {
            return Err(Error::Indefinite(format!("a33* = {a33:.6e} must be positive")));
        }
        let q3 = s.q(3)?;
        let b1 = Matrix2::new(s.q(1)?, s.a(1, 3)?, q3, a33);
        let b2 = Matrix2::new(s.q(2)?, s.a(2, 3)?, q3, a33);
        Ok(BlowupMatrices::TwoD { det_b: [b1.determinant(), b2.determinant()], b: [b1, b2], a33, q3 })
    } else {
        let a = s.a_matrix()?;
        let q = s.q_vector()?;
        if a.clone().cholesky().is_none() {
            return Err(Error::Indefinite("A* is not positive definite".into()));
        }
        let det_a = a.determinant();
        if !(det_a > 0.0) {
            return Err(Error::Indefinite(format!("det A* = {det_a:.6e}")));
        }
        let f: Vec<DMatrix<f64>> = (0..a.ncols())
            .map(|i| {
                let mut fi = a.clone();
                fi.set_column(i, &q);
                fi
            })
            .collect();
        let det_f = f.iter().map(|m| m.determinant()).collect();
        Ok(BlowupMatrices::HigherD { a, f, det_a, det_f })
    }
}
