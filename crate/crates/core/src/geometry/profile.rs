use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Closed-form profile function h(x') with analytic gradient.
pub type ProfileFn = dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync;

/// A single term `coeff * |x'|^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

/// Graph of one boundary near the gap, as a function of the tangential
/// variable x' (length d-1).
#[derive(Clone)]
pub enum Profile {
    /// Sum of radial power terms.
    Power(Vec<PowerTerm>),
    /// Lower arc `r - (r^p - |x'|^p)^{1/p}` of the superellipse
    /// `|x'|^p + |x_d - r|^p = r^p`; defined for `|x'| < r`.
    Superellipse { radius: f64, exponent: f64 },
    /// Arbitrary callable returning value and gradient.
    Custom(Arc<ProfileFn>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Power(t) => f.debug_tuple("Power").field(t).finish(),
            Profile::Superellipse { radius, exponent } => f
                .debug_struct("Superellipse")
                .field("radius", radius)
                .field("exponent", exponent)
                .finish(),
            Profile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `1 - (1-u)^{1/p}` without cancellation for small u.
pub(crate) fn one_minus_root(u: f64, p: f64) -> f64 {
    -((-u).ln_1p() / p).exp_m1()
}

/// `(1-u)^{1/p} - 1 + u/p`, the second-order remainder, accurate for small u.
pub(crate) fn root_remainder(u: f64, p: f64) -> f64 {
    if u < 1e-3 {
        // binomial series: sum_{k>=2} binom(1/p, k) (-u)^k
        let q = 1.0 / p;
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut coef = 1.0;
        for k in 1..12 {
            coef *= (q - (k - 1) as f64) / k as f64;
            term *= -u;
            if k >= 2 {
                sum += coef * term;
            }
        }
        sum
    } else {
        (1.0 - u).powf(1.0 / p) - 1.0 + u / p
    }
}

impl Profile {
    /// Single-term power profile `coeff |x'|^exponent`.
    pub fn power(coeff: f64, exponent: f64) -> Self {
        Profile::Power(vec![PowerTerm { coeff, exponent }])
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync + 'static,
    {
        Profile::Custom(Arc::new(f))
    }

    /// Value and gradient at x'.
    pub fn eval(&self, xp: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Profile::Power(terms) => {
                let r = norm(xp);
                let mut v = 0.0;
                let mut g = vec![0.0; xp.len()];
                for t in terms {
                    v += t.coeff * r.powf(t.exponent);
                    if r > 0.0 {
                        let s = t.coeff * t.exponent * r.powf(t.exponent - 2.0);
                        for (gi, xi) in g.iter_mut().zip(xp) {
                            *gi += s * xi;
                        }
                    }
                }
                (v, g)
            }
            Profile::Superellipse { radius, exponent } => {
                let r = norm(xp);
                let p = *exponent;
                if r >= *radius {
                    return (f64::NAN, vec![f64::NAN; xp.len()]);
                }
                let u = (r / radius).powf(p);
                let v = radius * one_minus_root(u, p);
                let mut g = vec![0.0; xp.len()];
                if r > 0.0 {
                    // d/dr = (r_0^p - r^p)^{1/p-1} r^{p-1}
                    let dr = (1.0 - u).powf(1.0 / p - 1.0) * (r / radius).powf(p - 1.0);
                    for (gi, xi) in g.iter_mut().zip(xp) {
                        *gi = dr * xi / r;
                    }
                }
                (v, g)
            }
            Profile::Custom(f) => f(xp),
        }
    }

    pub fn value(&self, xp: &[f64]) -> f64 {
        self.eval(xp).0
    }

    /// Two-dimensional convenience: value and slope at scalar x₁.
    pub fn eval1(&self, x: f64) -> (f64, f64) {
        let (v, g) = self.eval(&[x]);
        (v, g[0])
    }
}
