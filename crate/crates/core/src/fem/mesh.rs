//! Structured, anisotropically graded P2 meshes of annular domains.
//!
//! Columns are straight segments joining `outer(s)` to `inner(s)`; each is
//! split into `n_layers` equal layers, so inside the gap window (where both
//! curves share the abscissa) the layer parameter coincides with `v̄`.
//! Column widths follow `min(h_max, c_g · thickness(s))`, equidistributed
//! around the loop starting from the thinnest cross-section. The P2 nodes
//! are the half-index points of the (column, layer) lattice: boundary edge
//! midpoints lie on the curves, interior edges are straight.

use super::element::{element_stiffness, invert_map, inside_reference, map_point, Element, TRI_QUAD};
use super::locate::Locator;
use super::ElasticityTensor;
use crate::error::{Error, Result};
use crate::geometry::{AnnularDomain, GapGeometry};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshParams {
    /// Element layers across every cross-section.
    pub n_layers: usize,
    /// Column width relative to the local thickness.
    pub c_g: f64,
    /// Largest column width.
    pub h_max: f64,
    /// Smallest gap width accepted by [`build_gap_mesh`].
    pub eps_floor: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self { n_layers: 6, c_g: 0.5, h_max: 0.05, eps_floor: 1e-6 }
    }
}

impl MeshParams {
    /// Uniformly finer (factor > 1) parameters.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            n_layers: ((self.n_layers as f64) * factor).round().max(1.0) as usize,
            c_g: self.c_g / factor,
            h_max: self.h_max / factor,
            eps_floor: self.eps_floor,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_layers == 0 || !(self.c_g > 0.0) || !(self.h_max > 0.0) {
            return Err(Error::InvalidParameter("mesh parameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeTag {
    Interior,
    /// Matrix boundary ∂D.
    Outer,
    /// Inclusion boundary ∂D₁.
    Inclusion,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeshStats {
    pub nodes: usize,
    pub elements: usize,
    pub columns: usize,
    pub layers: usize,
    /// Smallest Jacobian at a quadrature point relative to the element mean.
    pub min_jacobian_ratio: f64,
    /// Smallest vertex-triangle angle (degrees).
    pub min_angle_deg: f64,
    /// Largest width ratio between neighbouring columns.
    pub max_width_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct GapMesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<Element>,
    pub tags: Vec<NodeTag>,
    /// Layer index of each element (0 at the matrix boundary).
    pub element_layer: Vec<u32>,
    /// Lattice column parameter `s` (length 2K).
    pub column_params: Vec<f64>,
    /// Lattice rows (2·n_layers + 1).
    pub rows: usize,
    pub params: MeshParams,
    pub stats: MeshStats,
    column_pos: Vec<usize>,
    locator: Locator,
}

const MIN_ANGLE_DEG: f64 = 1.0;

fn wrap(s: f64) -> f64 {
    s.rem_euclid(1.0)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn thickness(d: &dyn AnnularDomain, s: f64) -> f64 {
    dist(d.outer_point(wrap(s)), d.inner_point(wrap(s)))
}

fn speed(d: &dyn AnnularDomain, s: f64) -> f64 {
    let h = 1e-7;
    let o = dist(d.outer_point(wrap(s + h)), d.outer_point(wrap(s - h)));
    let i = dist(d.inner_point(wrap(s + h)), d.inner_point(wrap(s - h)));
    o.max(i) / (2.0 * h)
}

/// Column parameters `u_k ∈ [0,1)` measured from the anchor.
fn place_columns(d: &dyn AnnularDomain, p: &MeshParams) -> Vec<f64> {
    let anchor = d.anchor();
    let target = |u: f64| p.h_max.min(p.c_g * thickness(d, anchor + u));
    let t0 = thickness(d, anchor);
    let du0 = 0.02 * t0 / speed(d, anchor).max(1e-300);
    let mut grid: Vec<f64> = (0..=8000).map(|k| k as f64 / 8000.0).collect();
    let mut du = du0;
    while du < 0.02 {
        grid.push(du);
        grid.push(1.0 - du);
        du *= 1.05;
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let rho: Vec<f64> = grid.iter().map(|&u| speed(d, anchor + u) / target(u)).collect();
    let mut cum = vec![0.0; grid.len()];
    for k in 1..grid.len() {
        cum[k] = cum[k - 1] + 0.5 * (rho[k] + rho[k - 1]) * (grid[k] - grid[k - 1]);
    }
    let total = *cum.last().unwrap();
    let n = (total.ceil() as usize).max(16);
    (0..n)
        .map(|k| {
            let c = total * k as f64 / n as f64;
            let m = cum.partition_point(|&v| v < c).clamp(1, grid.len() - 1);
            let w = if cum[m] > cum[m - 1] { (c - cum[m - 1]) / (cum[m] - cum[m - 1]) } else { 0.0 };
            grid[m - 1] + w * (grid[m] - grid[m - 1])
        })
        .collect()
}

/// Lattice column positions for the folded ordering 0, 1, L−1, 2, L−2, …
fn folded_positions(l: usize) -> Vec<usize> {
    let mut pos = vec![0; l];
    let mut next = 0;
    pos[0] = next;
    next += 1;
    let mut k = 1;
    while next < l {
        pos[k] = next;
        next += 1;
        if next < l {
            pos[l - k] = next;
            next += 1;
        }
        k += 1;
    }
    pos
}

fn angle(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let u = [a[0] - p[0], a[1] - p[1]];
    let v = [b[0] - p[0], b[1] - p[1]];
    let c = (u[0] * v[0] + u[1] * v[1]) / ((u[0].hypot(u[1])) * (v[0].hypot(v[1])));
    c.clamp(-1.0, 1.0).acos()
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Point of the curve between parameters `s0 < s1` at equal distance from
/// both end points.
fn equidistant_point<F: Fn(f64) -> [f64; 2]>(f: F, s0: f64, s1: f64) -> [f64; 2] {
    let (pa, pb) = (f(s0), f(s1));
    let (mut lo, mut hi) = (s0, s1);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = f(mid);
        if dist(p, pa) < dist(p, pb) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    f(0.5 * (lo + hi))
}

/// Mesh any annular domain described by two periodic boundary curves.
pub fn build_annular_mesh(domain: &dyn AnnularDomain, params: MeshParams) -> Result<GapMesh> {
    params.check()?;
    let anchor = domain.anchor();
    let u = place_columns(domain, &params);
    let k_cols = u.len();
    let l = 2 * k_cols;
    let rows = 2 * params.n_layers + 1;
    let column_params: Vec<f64> = (0..l)
        .map(|a| {
            let k = a / 2;
            let uk = u[k];
            let un = if k + 1 < k_cols { u[k + 1] } else { 1.0 };
            wrap(anchor + if a % 2 == 0 { uk } else { 0.5 * (uk + un) })
        })
        .collect();
    let column_pos = folded_positions(l);
    let mut nodes = vec![[0.0; 2]; l * rows];
    let mut tags = vec![NodeTag::Interior; l * rows];
    for a in 0..l {
        let s = column_params[a];
        let (o, i) = (domain.outer_point(s), domain.inner_point(s));
        for b in 0..rows {
            let t = b as f64 / (rows - 1) as f64;
            let id = column_pos[a] * rows + b;
            nodes[id] = [(1.0 - t) * o[0] + t * i[0], (1.0 - t) * o[1] + t * i[1]];
            tags[id] = if b == 0 {
                NodeTag::Outer
            } else if b == rows - 1 {
                NodeTag::Inclusion
            } else {
                NodeTag::Interior
            };
        }
    }
    let id = |a: usize, b: usize| column_pos[a % l] * rows + b;
    // interior row edges are straight; boundary edge midpoints are the curve
    // points equidistant from both ends (the parametrizations are only C⁰ in
    // speed at the glue points)
    for k in 0..k_cols {
        let a = 2 * k + 1;
        let s0 = anchor + u[k];
        let s1 = anchor + if k + 1 < k_cols { u[k + 1] } else { 1.0 };
        nodes[id(a, 0)] = equidistant_point(|s| domain.outer_point(wrap(s)), s0, s1);
        nodes[id(a, rows - 1)] = equidistant_point(|s| domain.inner_point(wrap(s)), s0, s1);
        for b in (2..rows - 1).step_by(2) {
            let (p, q) = (nodes[id(a - 1, b)], nodes[id(a + 1, b)]);
            nodes[id(a, b)] = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        }
    }

    let mut elements = Vec::with_capacity(2 * k_cols * params.n_layers);
    let mut element_layer = Vec::with_capacity(elements.capacity());
    let mut min_angle = f64::INFINITY;
    for k in 0..k_cols {
        let (a0, a1, a2) = (2 * k, 2 * k + 1, 2 * k + 2);
        for j in 0..params.n_layers {
            let (b0, b1, b2) = (2 * j, 2 * j + 1, 2 * j + 2);
            let (p00, p10, p11, p01) = (id(a0, b0), id(a2, b0), id(a2, b2), id(a0, b2));
            let c = id(a1, b1);
            // Delaunay diagonal: the angles opposite the diagonal sum to ≤ π
            let opp = angle(nodes[p10], nodes[p00], nodes[p11]) + angle(nodes[p01], nodes[p11], nodes[p00]);
            let (tris, diag): ([Element; 2], _) = if opp <= std::f64::consts::PI {
                ([[p00, p10, p11, id(a1, b0), id(a2, b1), c], [p00, p11, p01, c, id(a1, b2), id(a0, b1)]], (p00, p11))
            } else {
                ([[p00, p10, p01, id(a1, b0), c, id(a0, b1)], [p10, p11, p01, id(a2, b1), id(a1, b2), c]], (p10, p01))
            };
            // the centre node belongs to this quad only: keep the diagonal straight
            let (d0, d1) = (nodes[diag.0], nodes[diag.1]);
            nodes[c] = [0.5 * (d0[0] + d1[0]), 0.5 * (d0[1] + d1[1])];
            for mut e in tris {
                let area = signed_area(nodes[e[0]], nodes[e[1]], nodes[e[2]]);
                if area < 0.0 {
                    e = [e[0], e[2], e[1], e[5], e[4], e[3]];
                }
                let (p, q, r) = (nodes[e[0]], nodes[e[1]], nodes[e[2]]);
                let m = angle(p, q, r).min(angle(q, r, p)).min(angle(r, p, q)).to_degrees();
                if !(m >= MIN_ANGLE_DEG) {
                    return Err(Error::Meshing { location: p, reason: format!("minimum angle {m:.3}° below {MIN_ANGLE_DEG}°") });
                }
                min_angle = min_angle.min(m);
                elements.push(e);
                element_layer.push(j as u32);
            }
        }
    }

    let mut min_ratio = f64::INFINITY;
    for e in &elements {
        let coords = e.map(|n| nodes[n]);
        let dets: Vec<f64> = TRI_QUAD.iter().map(|&([x, y], _)| map_point(&coords, x, y).det).collect();
        let mean = dets.iter().sum::<f64>() / dets.len() as f64;
        let lo = dets.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(lo > 0.0) {
            return Err(Error::Meshing { location: coords[0], reason: format!("inverted element (Jacobian {lo:.3e})") });
        }
        min_ratio = min_ratio.min(lo / mean);
    }

    let widths: Vec<f64> = (0..k_cols)
        .map(|k| dist(nodes[id(2 * k, 0)], nodes[id(2 * k + 2, 0)]).max(dist(nodes[id(2 * k, rows - 1)], nodes[id(2 * k + 2, rows - 1)])))
        .collect();
    let max_width_ratio = (0..k_cols)
        .map(|k| {
            let (w0, w1) = (widths[k], widths[(k + 1) % k_cols]);
            w0.max(w1) / w0.min(w1)
        })
        .fold(1.0, f64::max);

    let boxes: Vec<[f64; 4]> = elements
        .iter()
        .map(|e| {
            let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
            for &n in e {
                bb[0] = bb[0].min(nodes[n][0]);
                bb[1] = bb[1].min(nodes[n][1]);
                bb[2] = bb[2].max(nodes[n][0]);
                bb[3] = bb[3].max(nodes[n][1]);
            }
            let pad = 0.1 * ((bb[2] - bb[0]) + (bb[3] - bb[1]));
            [bb[0] - pad, bb[1] - pad, bb[2] + pad, bb[3] + pad]
        })
        .collect();
    let locator = Locator::build(&boxes);

    let stats = MeshStats {
        nodes: nodes.len(),
        elements: elements.len(),
        columns: k_cols,
        layers: params.n_layers,
        min_jacobian_ratio: min_ratio,
        min_angle_deg: min_angle,
        max_width_ratio,
    };
    Ok(GapMesh { nodes, elements, tags, element_layer, column_params, rows, params, stats, column_pos, locator })
}

/// Mesh Ω = D \ D̄₁ of a two-dimensional closed gap geometry.
pub fn build_gap_mesh(g: &GapGeometry, params: MeshParams) -> Result<GapMesh> {
    if g.dim != 2 || g.curves().is_none() {
        return Err(Error::InvalidParameter("meshing needs a closed two-dimensional geometry".into()));
    }
    if g.epsilon < params.eps_floor {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {:e} is below the meshing floor {:e}",
            g.epsilon, params.eps_floor
        )));
    }
    build_annular_mesh(g, params)
}

impl GapMesh {
    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 6] {
        self.elements[e].map(|n| self.nodes[n])
    }

    /// Node id of lattice point (column a, row b).
    pub fn lattice_node(&self, a: usize, b: usize) -> usize {
        self.column_pos[a % self.column_pos.len()] * self.rows + b
    }

    pub fn lattice_columns(&self) -> usize {
        self.column_pos.len()
    }

    /// Element containing `p` with its reference coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 2])> {
        self.locate_all(p).into_iter().next()
    }

    /// All elements containing `p` (several on shared edges).
    pub fn locate_all(&self, p: [f64; 2]) -> Vec<(usize, [f64; 2])> {
        let mut cand = Vec::new();
        self.locator.candidates(p, &mut cand);
        cand.sort_unstable();
        cand.into_iter()
            .filter_map(|e| {
                let r = invert_map(&self.element_coords(e), p)?;
                inside_reference(r, 1e-9).then_some((e, r))
            })
            .collect()
    }

    /// Vertex triangles (the P1 sub-mesh on the same vertices).
    pub fn vertex_triangles(&self) -> Vec<[usize; 3]> {
        self.elements.iter().map(|e| [e[0], e[1], e[2]]).collect()
    }

    /// Smallest number of distinct element layers met along vertical
    /// cross-sections of the gap window `|x₁| ≤ R`.
    pub fn check_layers(&self, g: &GapGeometry) -> Result<usize> {
        let r = g.profile.r;
        let n = self.params.n_layers;
        let mut worst = usize::MAX;
        for k in 0..=50 {
            let x1 = -r + 2.0 * r * k as f64 / 50.0;
            let h = g.profile.lower.value(&[x1]);
            let delta = g.gap_thickness(&[x1])?;
            let mut layers: Vec<u32> = (0..4 * n)
                .filter_map(|m| {
                    let t = (m as f64 + 0.5) / (4 * n) as f64;
                    self.locate([x1, h + t * delta]).map(|(e, _)| self.element_layer[e])
                })
                .collect();
            layers.sort_unstable();
            layers.dedup();
            worst = worst.min(layers.len());
        }
        if worst < n {
            return Err(Error::Meshing { location: [0.0, 0.0], reason: format!("only {worst} layers across the gap") });
        }
        Ok(worst)
    }

    /// Assemble the element stiffness matrices (used by tests and benches).
    pub fn element_matrices(&self, tensor: &ElasticityTensor) -> Vec<super::element::ElementMatrix> {
        crate::exec::map_range(self.elements.len(), |e| element_stiffness(&self.element_coords(e), tensor).0)
    }

    /// Write `nodes.csv` (id,x1,x2,tag) and `elements.csv` (id,n0..n5).
    pub fn export_csv(&self, dir: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("nodes.csv"))?);
        writeln!(f, "id,x1,x2,tag")?;
        for (i, (p, t)) in self.nodes.iter().zip(&self.tags).enumerate() {
            let tag = match t {
                NodeTag::Interior => "interior",
                NodeTag::Outer => "outer",
                NodeTag::Inclusion => "inclusion",
            };
            writeln!(f, "{i},{:.15e},{:.15e},{tag}", p[0], p[1])?;
        }
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("elements.csv"))?);
        writeln!(f, "id,n0,n1,n2,n3,n4,n5")?;
        for (i, e) in self.elements.iter().enumerate() {
            writeln!(f, "{i},{},{},{},{},{},{}", e[0], e[1], e[2], e[3], e[4], e[5])?;
        }
        Ok(())
    }
}
