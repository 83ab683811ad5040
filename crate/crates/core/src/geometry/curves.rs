//! Closed boundary curves for two-dimensional meshing.
//!
//! Each boundary is a graph `x₂ = offset + f(x₁)` over `|x₁| ≤ X` (the gap
//! window) closed by an arc running counterclockwise from `(X, ·)` back to
//! `(-X, ·)`. Both curves of a domain share one parameter `s ∈ [0,1)`: on the
//! graph part `s` is affine in `x₁`, on the closure it is normalized arc length.

use super::profile::Profile;
use std::f64::consts::PI;

/// Periodic parametrization of the two boundary components of an annular
/// domain. `s` runs counterclockwise; the mesher connects `outer_point(s)` to
/// `inner_point(s)` with straight segments.
pub trait AnnularDomain: Send + Sync {
    fn outer_point(&self, s: f64) -> [f64; 2];
    fn inner_point(&self, s: f64) -> [f64; 2];
    /// Parameter of the thinnest cross-section; column marching starts here.
    fn anchor(&self) -> f64 {
        0.0
    }
}

/// Arc-length lookup for a curve given by a native parameter.
#[derive(Clone, Debug)]
pub struct ArcTable {
    t: Vec<f64>,
    len: Vec<f64>,
}

impl ArcTable {
    pub fn build<F: Fn(f64) -> [f64; 2]>(f: F, t0: f64, t1: f64, samples: usize) -> Self {
        let mut t = Vec::with_capacity(samples + 1);
        let mut len = Vec::with_capacity(samples + 1);
        let mut prev = f(t0);
        let mut acc = 0.0;
        for k in 0..=samples {
            let tk = t0 + (t1 - t0) * k as f64 / samples as f64;
            let p = f(tk);
            acc += ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt();
            prev = p;
            t.push(tk);
            len.push(acc);
        }
        let total = acc;
        for l in &mut len {
            *l /= total;
        }
        ArcTable { t, len }
    }

    /// Native parameter at normalized arc length `sigma`.
    pub fn param(&self, sigma: f64) -> f64 {
        let sigma = sigma.clamp(0.0, 1.0);
        let k = self.len.partition_point(|&l| l < sigma).clamp(1, self.len.len() - 1);
        let (l0, l1) = (self.len[k - 1], self.len[k]);
        let w = if l1 > l0 { (sigma - l0) / (l1 - l0) } else { 0.0 };
        self.t[k - 1] + w * (self.t[k] - self.t[k - 1])
    }
}

fn sgnpow(v: f64, e: f64) -> f64 {
    v.signum() * v.abs().powf(e)
}

/// The part of a boundary away from the gap.
#[derive(Clone, Debug)]
pub enum ClosureArc {
    /// Two circular arcs of radius `radius` tangent to the graph at `x₁ = ±X`,
    /// joined by a horizontal segment over the top.
    Stadium { right_center: [f64; 2], radius: f64, theta0: f64 },
    /// Upper part of the superellipse `|x₁|^p + |x₂ - center_y|^p = r^p`.
    Superellipse { center_y: f64, radius: f64, exponent: f64, t0: f64, t1: f64, table: ArcTable },
}

impl ClosureArc {
    /// Stadium closure tangent to the graph point `(x, y)` with slope `m`.
    /// `radius` must not exceed [`ClosureArc::max_stadium_radius`].
    pub fn stadium(x: f64, y: f64, m: f64, radius: f64) -> Self {
        let n = (1.0 + m * m).sqrt();
        let right_center = [x - radius * m / n, y + radius / n];
        let theta0 = (-1.0f64).atan2(m);
        ClosureArc::Stadium { right_center, radius, theta0 }
    }

    /// Radius for which the two arcs meet on the axis (a single circle).
    pub fn max_stadium_radius(x: f64, m: f64) -> f64 {
        if m <= 0.0 {
            f64::INFINITY
        } else {
            x * (1.0 + m * m).sqrt() / m
        }
    }

    pub fn superellipse(center_y: f64, radius: f64, exponent: f64, x: f64) -> Self {
        let c = (x / radius).powf(exponent / 2.0).acos();
        let (t0, t1) = (-c, PI + c);
        let native = |t: f64| {
            [radius * sgnpow(t.cos(), 2.0 / exponent), center_y + radius * sgnpow(t.sin(), 2.0 / exponent)]
        };
        let table = ArcTable::build(native, t0, t1, 8192);
        ClosureArc::Superellipse { center_y, radius, exponent, t0, t1, table }
    }

    /// Point at normalized arc length `sigma ∈ [0,1]`, from the right glue
    /// point to the left one.
    pub fn point(&self, sigma: f64) -> [f64; 2] {
        match self {
            ClosureArc::Stadium { right_center, radius, theta0 } => {
                let [cx, cy] = *right_center;
                let arc = radius * (PI / 2.0 - theta0);
                let total = 2.0 * arc + 2.0 * cx;
                let l = sigma.clamp(0.0, 1.0) * total;
                if l <= arc {
                    let th = theta0 + l / radius;
                    [cx + radius * th.cos(), cy + radius * th.sin()]
                } else if l <= arc + 2.0 * cx {
                    [cx - (l - arc), cy + radius]
                } else {
                    let th = PI / 2.0 + (l - arc - 2.0 * cx) / radius;
                    [-cx + radius * th.cos(), cy + radius * th.sin()]
                }
            }
            ClosureArc::Superellipse { center_y, radius, exponent, table, .. } => {
                let t = table.param(sigma);
                [radius * sgnpow(t.cos(), 2.0 / exponent), center_y + radius * sgnpow(t.sin(), 2.0 / exponent)]
            }
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            ClosureArc::Stadium { right_center, radius, theta0 } => {
                2.0 * radius * (PI / 2.0 - theta0) + 2.0 * right_center[0]
            }
            ClosureArc::Superellipse { .. } => {
                let n = 4096;
                let mut acc = 0.0;
                let mut prev = self.point(0.0);
                for k in 1..=n {
                    let p = self.point(k as f64 / n as f64);
                    acc += ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt();
                    prev = p;
                }
                acc
            }
        }
    }
}

/// One closed boundary: graph over the gap window plus a closure arc.
#[derive(Clone, Debug)]
pub struct ClosedCurve {
    pub half_width: f64,
    pub offset: f64,
    pub graph: Profile,
    pub closure: ClosureArc,
    /// Fraction of the parameter range spent on the graph part.
    pub split: f64,
}

impl ClosedCurve {
    pub fn point(&self, s: f64) -> [f64; 2] {
        let s = s.rem_euclid(1.0);
        if s < self.split {
            let x = -self.half_width + 2.0 * self.half_width * s / self.split;
            [x, self.offset + self.graph.value(&[x])]
        } else {
            self.closure.point((s - self.split) / (1.0 - self.split))
        }
    }

    /// Dense polygon (`n` points, not closed) for inside tests and export.
    pub fn polygon(&self, n: usize) -> Vec<[f64; 2]> {
        (0..n).map(|k| self.point(k as f64 / n as f64)).collect()
    }
}

/// The pair of boundaries of Ω = D \ D̄₁ in two dimensions.
#[derive(Clone, Debug)]
pub struct CurvePair {
    pub outer: ClosedCurve,
    pub inner: ClosedCurve,
}

impl AnnularDomain for CurvePair {
    fn outer_point(&self, s: f64) -> [f64; 2] {
        self.outer.point(s)
    }
    fn inner_point(&self, s: f64) -> [f64; 2] {
        self.inner.point(s)
    }
    fn anchor(&self) -> f64 {
        0.5 * self.outer.split
    }
}

/// Concentric circles; the smoke-test domain with a wide gap.
#[derive(Clone, Copy, Debug)]
pub struct Annulus {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl AnnularDomain for Annulus {
    fn outer_point(&self, s: f64) -> [f64; 2] {
        let th = 2.0 * PI * s - PI / 2.0;
        [self.outer_radius * th.cos(), self.outer_radius * th.sin()]
    }
    fn inner_point(&self, s: f64) -> [f64; 2] {
        let th = 2.0 * PI * s - PI / 2.0;
        [self.inner_radius * th.cos(), self.inner_radius * th.sin()]
    }
}

/// Winding-number point-in-polygon test.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut wn = 0i32;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}
