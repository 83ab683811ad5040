//! Sparse symmetric storage and the two linear solvers: an envelope
//! (skyline) Cholesky factorization and block-Jacobi conjugate gradients.

use crate::error::{Error, Result};
use crate::exec;

/// Compressed sparse rows with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given (unsorted, possibly repeated) row patterns.
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        CsrMatrix { n, row_ptr, cols, vals: vec![0.0; nnz] }
    }

    /// Sum duplicate `(i, j, v)` entries.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Add to an existing pattern entry; panics if `(i, j)` is not stored.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.position(i, j).unwrap_or_else(|| panic!("entry ({i},{j}) not in pattern"));
        self.vals[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map(|k| self.vals[k]).unwrap_or(0.0)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].iter().cloned().zip(self.vals[lo..hi].iter().cloned())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        exec::map_range(self.n, |i| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    /// Rows/columns with `map[i] = Some(new index)`, renumbered.
    pub fn submatrix(&self, map: &[Option<usize>]) -> CsrMatrix {
        let m = map.iter().filter(|v| v.is_some()).count();
        let mut row_ptr = vec![0; m + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..self.n {
            if let Some(ni) = map[i] {
                let mut row: Vec<(usize, f64)> = self.row(i).filter_map(|(j, v)| map[j].map(|nj| (nj, v))).collect();
                row.sort_unstable_by_key(|e| e.0);
                for (j, v) in row {
                    cols.push(j);
                    vals.push(v);
                }
                row_ptr[ni + 1] = cols.len();
            }
        }
        CsrMatrix { n: m, row_ptr, cols, vals }
    }

    /// Largest |a_ij − a_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    exec::chunked_sum(a.len(), |i| a[i] * b[i])
}

/// L Lᵀ factorization stored row-wise over each row's envelope.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl SkylineCholesky {
    /// Factor the symmetric matrix `a` (its lower triangle is read).
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let first: Vec<usize> = (0..n).map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j <= i).min().unwrap_or(i)).collect();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut vals = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    vals[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (before, row_i) = vals.split_at_mut(start[i]);
            let row_i = &mut row_i[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &before[start[j]..start[j] + j - fj + 1];
                let s: f64 = row_i[lo - fi..j - fi].iter().zip(&row_j[lo - fj..j - fj]).map(|(x, y)| x * y).sum();
                row_i[j - fi] = (row_i[j - fi] - s) / row_j[j - fj];
            }
            let s: f64 = row_i[..i - fi].iter().map(|x| x * x).sum();
            let d = row_i[i - fi] - s;
            if !(d > 0.0) {
                return Err(Error::Indefinite(format!("non-positive pivot {d:.3e} at row {i} of {n}")));
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(SkylineCholesky { n, first, start, vals })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (k, l) in (fi..i).zip(&row[..i - fi]) {
                y[k] -= l * xi;
            }
        }
        y
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients with 2×2 block-Jacobi preconditioning (blocks are
/// the two displacement components of a node).
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgResult> {
    let n = a.n;
    let nb = n.div_ceil(2);
    let blocks: Vec<[f64; 4]> = (0..nb)
        .map(|k| {
            let i = 2 * k;
            if i + 1 < n {
                let (p, q, r, s) = (a.get(i, i), a.get(i, i + 1), a.get(i + 1, i), a.get(i + 1, i + 1));
                let det = p * s - q * r;
                [s / det, -q / det, -r / det, p / det]
            } else {
                [1.0 / a.get(i, i), 0.0, 0.0, 0.0]
            }
        })
        .collect();
    let precond = |r: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; n];
        for (k, m) in blocks.iter().enumerate() {
            let i = 2 * k;
            if i + 1 < n {
                z[i] = m[0] * r[i] + m[1] * r[i + 1];
                z[i + 1] = m[2] * r[i] + m[3] * r[i + 1];
            } else {
                z[i] = m[0] * r[i];
            }
        }
        z
    };
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgResult { x, iterations: 0, relative_residual: 0.0 });
    }
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return Ok(CgResult { x, iterations: it, relative_residual: rel });
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("conjugate gradients did not reach {tol:e} in {max_iter} iterations")))
}
