//! Limit ("starred") quantities by rate-pinned extrapolation over a
//! decreasing sequence of gap distances.

use super::ConcentrationSystem;
use crate::auxiliary::rigid_count;
use crate::constants::{entry_behaviour, lame_row, m_alpha_tau, Behaviour, Entry, Lame};
use crate::error::{Error, Result};
use crate::stats::line_fit;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Largest accepted RMS fit residual, relative to the entry scale.
    pub max_residual: f64,
    /// Changes below this fraction of the entry scale count as noise.
    pub noise_floor: f64,
    /// Entries whose values all stay below this fraction of the scale are
    /// reported as vanishing (zero by symmetry).
    pub vanish_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_residual: 1e-2, noise_floor: 1e-7, vanish_tol: 1e-8 }
    }
}

/// `value(ε) = v* + c ε^p` with the exponent `p` held fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinnedFit {
    pub value: f64,
    pub coeff: f64,
    /// RMS residual (absolute).
    pub residual: f64,
}

/// Least-squares fit of `v* + c ε^p` (exact interpolation for two points).
pub fn rate_pinned_fit(eps: &[f64], values: &[f64], rate: f64) -> Result<PinnedFit> {
    if eps.len() != values.len() || eps.len() < 2 {
        return Err(Error::InvalidParameter("need at least two (ε, value) pairs".into()));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.powf(rate)).collect();
    let f = line_fit(&x, values);
    let residual = (x
        .iter()
        .zip(values)
        .map(|(xi, v)| (v - f.intercept - f.slope * xi).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    Ok(PinnedFit { value: f.intercept, coeff: f.slope, residual })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum EntryStatus {
    Starred,
    /// All values are at round-off level; the limit is zero.
    Vanishing,
    Rejected(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarredEntry {
    /// `a13`, `q2`, ….
    pub name: String,
    pub entry: Entry,
    pub value: f64,
    /// Pinned convergence exponent.
    pub rate: f64,
    pub coeff: f64,
    /// RMS fit residual relative to the entry scale.
    pub residual: f64,
    /// Fit through the two smallest gap distances only.
    pub two_point: f64,
    /// Least-squares fit through all points (reported as `value`).
    pub all_points: f64,
    #[serde(flatten)]
    pub status: EntryStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergentForm {
    /// `k ε^{-α/(1+α)} + b`.
    Power,
    /// `k |ln ε| + b`.
    Log,
}

/// Two-dimensional entries without a finite limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergentFit {
    pub name: String,
    pub entry: Entry,
    pub form: DivergentForm,
    pub leading: f64,
    pub constant: f64,
    /// `L^i M_{α,τ}` for the power form.
    pub expected_leading: Option<f64>,
    /// Power form: `a_ii ε^{α/(1+α)}/(L^i M)` at the smallest ε; log form:
    /// `max |a_12|/|ln ε|`.
    pub indicator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarredData {
    pub dim: usize,
    pub alpha: f64,
    /// Gap distances used (empty for externally supplied data).
    pub eps: Vec<f64>,
    pub entries: Vec<StarredEntry>,
    pub divergent: Vec<DivergentFit>,
}

fn entry_name(e: Entry) -> String {
    match e {
        Entry::Q(j) => format!("q{j}"),
        Entry::A(i, j) => format!("a{i}{j}"),
    }
}

fn same_entry(a: Entry, b: Entry) -> bool {
    match (a, b) {
        (Entry::Q(i), Entry::Q(j)) => i == j,
        (Entry::A(i, j), Entry::A(k, l)) => (i.min(j), i.max(j)) == (k.min(l), k.max(l)),
        _ => false,
    }
}

impl StarredData {
    fn lookup(&self, e: Entry) -> Result<f64> {
        if let Some(d) = self.divergent.iter().find(|d| same_entry(d.entry, e)) {
            return Err(Error::DivergentEntry(d.name.clone()));
        }
        if self.dim == 2 {
            if let Entry::A(i, j) = e {
                if i <= 2 && j <= 2 {
                    return Err(Error::DivergentEntry(entry_name(Entry::A(i.min(j), i.max(j)))));
                }
            }
        }
        let s = self
            .entries
            .iter()
            .find(|s| same_entry(s.entry, e))
            .ok_or_else(|| Error::InvalidParameter(format!("entry {} not available", entry_name(e))))?;
        match &s.status {
            EntryStatus::Rejected(reason) => Err(Error::FitRejected { entry: s.name.clone(), reason: reason.clone() }),
            _ => Ok(s.value),
        }
    }

    /// `a*_ij` (1-based); divergent two-dimensional entries are an error.
    pub fn a(&self, i: usize, j: usize) -> Result<f64> {
        self.lookup(Entry::A(i, j))
    }

    /// `Q*_j` (1-based).
    pub fn q(&self, j: usize) -> Result<f64> {
        self.lookup(Entry::Q(j))
    }

    pub fn entry(&self, name: &str) -> Option<&StarredEntry> {
        self.entries.iter().find(|s| s.name == name)
    }

    /// Full `A*` (dimension ≥ 3 only).
    pub fn a_matrix(&self) -> Result<DMatrix<f64>> {
        let n = rigid_count(self.dim);
        let mut m = DMatrix::zeros(n, n);
        for i in 1..=n {
            for j in 1..=n {
                m[(i - 1, j - 1)] = self.a(i, j)?;
            }
        }
        Ok(m)
    }

    pub fn q_vector(&self) -> Result<DVector<f64>> {
        let n = rigid_count(self.dim);
        (1..=n).map(|j| self.q(j)).collect::<Result<Vec<_>>>().map(DVector::from_vec)
    }

    /// Externally supplied limits (no fit provenance). In two dimensions the
    /// entries a11, a22, a12 of `a` are ignored and marked divergent.
    pub fn synthetic(dim: usize, alpha: f64, a: &DMatrix<f64>, q: &DVector<f64>) -> Result<Self> {
        let n = rigid_count(dim);
        if a.nrows() != n || a.ncols() != n || q.len() != n {
            return Err(Error::InvalidParameter(format!("starred data must be {n}×{n} in dimension {dim}")));
        }
        if (a - a.transpose()).amax() > 1e-12 * a.amax().max(1e-300) {
            return Err(Error::InvalidParameter("A* must be symmetric".into()));
        }
        let mut entries = Vec::new();
        let mut divergent = Vec::new();
        let mk = |entry: Entry, value: f64| StarredEntry {
            name: entry_name(entry),
            entry,
            value,
            rate: f64::NAN,
            coeff: 0.0,
            residual: 0.0,
            two_point: value,
            all_points: value,
            status: EntryStatus::Starred,
        };
        for i in 1..=n {
            for j in i..=n {
                let e = Entry::A(i, j);
                if dim == 2 && j <= 2 {
                    divergent.push(DivergentFit {
                        name: entry_name(e),
                        entry: e,
                        form: if i == j { DivergentForm::Power } else { DivergentForm::Log },
                        leading: f64::NAN,
                        constant: f64::NAN,
                        expected_leading: None,
                        indicator: f64::NAN,
                    });
                } else {
                    entries.push(mk(e, a[(i - 1, j - 1)]));
                }
            }
        }
        for j in 1..=n {
            entries.push(mk(Entry::Q(j), q[j - 1]));
        }
        Ok(StarredData { dim, alpha, eps: Vec::new(), entries, divergent })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Extrapolate every convergent entry to ε = 0 with its pinned rate and fit
/// the two-dimensional divergent entries to their asymptotic forms.
pub fn estimate_starred(
    systems: &[ConcentrationSystem],
    alpha: f64,
    tau: f64,
    lame: Lame,
    opts: FitOptions,
) -> Result<StarredData> {
    if systems.len() < 3 {
        return Err(Error::InvalidParameter("need at least three gap distances".into()));
    }
    let dim = systems[0].dim;
    if systems.iter().any(|s| s.dim != dim) {
        return Err(Error::InvalidParameter("systems of different dimensions".into()));
    }
    if systems.windows(2).any(|w| !(w[1].epsilon < w[0].epsilon)) {
        return Err(Error::InvalidParameter("gap distances must be strictly decreasing".into()));
    }
    let n = rigid_count(dim);
    let eps: Vec<f64> = systems.iter().map(|s| s.epsilon).collect();
    let row = lame_row(dim, lame);
    let m = m_alpha_tau(alpha, tau)?;

    let mut candidates: Vec<Entry> = Vec::new();
    for i in 1..=n {
        for j in i..=n {
            candidates.push(Entry::A(i, j));
        }
    }
    candidates.extend((1..=n).map(Entry::Q));
    let series = |e: Entry| -> Vec<f64> {
        systems
            .iter()
            .map(|s| match e {
                Entry::Q(j) => s.q(j),
                Entry::A(i, j) => s.a(i, j),
            })
            .collect()
    };
    // one scale per kind so that symmetry zeros are recognised as such
    let mut scale_a: f64 = 0.0;
    let mut scale_q: f64 = 0.0;
    for &e in &candidates {
        let v = series(e).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        match (e, entry_behaviour(e, dim, alpha)?) {
            (Entry::Q(_), _) => scale_q = scale_q.max(v),
            (Entry::A(..), Behaviour::Converges { .. }) => scale_a = scale_a.max(v),
            _ => {}
        }
    }

    let mut entries = Vec::new();
    let mut divergent = Vec::new();
    for &e in &candidates {
        let vals = series(e);
        let name = entry_name(e);
        match entry_behaviour(e, dim, alpha)? {
            Behaviour::Converges { rate } => {
                let scale = match e {
                    Entry::Q(_) => scale_q,
                    Entry::A(..) => scale_a,
                };
                entries.push(fit_convergent(e, name, &eps, &vals, rate, scale, opts)?);
            }
            Behaviour::PowerDivergent { exponent } => {
                let i = match e {
                    Entry::A(i, _) => i,
                    Entry::Q(_) => unreachable!(),
                };
                let x: Vec<f64> = eps.iter().map(|e| e.powf(exponent)).collect();
                let f = line_fit(&x, &vals);
                let expected = row[i - 1] * m;
                let last = vals.len() - 1;
                divergent.push(DivergentFit {
                    name,
                    entry: e,
                    form: DivergentForm::Power,
                    leading: f.slope,
                    constant: f.intercept,
                    expected_leading: Some(expected),
                    indicator: vals[last] / x[last] / expected,
                });
            }
            Behaviour::LogDivergent => {
                let x: Vec<f64> = eps.iter().map(|e| e.ln().abs()).collect();
                let f = line_fit(&x, &vals);
                let indicator = vals.iter().zip(&x).map(|(v, l)| v.abs() / l).fold(0.0, f64::max);
                divergent.push(DivergentFit {
                    name,
                    entry: e,
                    form: DivergentForm::Log,
                    leading: f.slope,
                    constant: f.intercept,
                    expected_leading: None,
                    indicator,
                });
            }
        }
    }
    Ok(StarredData { dim, alpha, eps, entries, divergent })
}

fn fit_convergent(
    entry: Entry,
    name: String,
    eps: &[f64],
    vals: &[f64],
    rate: f64,
    scale: f64,
    opts: FitOptions,
) -> Result<StarredEntry> {
    let last = *vals.last().expect("non-empty");
    let base = StarredEntry {
        name,
        entry,
        value: last,
        rate,
        coeff: 0.0,
        residual: 0.0,
        two_point: last,
        all_points: last,
        status: EntryStatus::Starred,
    };
    if scale == 0.0 || vals.iter().all(|v| v.abs() <= opts.vanish_tol * scale) {
        return Ok(StarredEntry { value: 0.0, two_point: 0.0, all_points: 0.0, status: EntryStatus::Vanishing, ..base });
    }
    let diffs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let significant: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > opts.noise_floor * scale).collect();
    if significant.is_empty() {
        return Ok(base);
    }
    if significant.iter().any(|d| d.signum() != significant[0].signum()) {
        let reason = format!("non-monotone sequence {vals:?}");
        return Ok(StarredEntry { status: EntryStatus::Rejected(reason), ..base });
    }
    let all = rate_pinned_fit(eps, vals, rate)?;
    let k = eps.len();
    let two = rate_pinned_fit(&eps[k - 2..], &vals[k - 2..], rate)?;
    let residual = all.residual / scale;
    let status = if residual <= opts.max_residual {
        EntryStatus::Starred
    } else {
        EntryStatus::Rejected(format!("fit residual {residual:.3e} exceeds {:.3e}", opts.max_residual))
    };
    Ok(StarredEntry {
        value: all.value,
        coeff: all.coeff,
        residual,
        two_point: two.value,
        all_points: all.value,
        status,
        ..base
    })
}
