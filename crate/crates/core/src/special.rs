//! Gamma function (Lanczos approximation, g = 7, nine terms).

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real x, using the reflection formula below 1/2.
///
/// Returns `NaN` at the poles (non-positive integers).
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_and_half_integer_values() {
        let mut fact = 1.0;
        for n in 1..15 {
            assert!((gamma(n as f64) - fact).abs() <= 1e-13 * fact, "n = {n}");
            fact *= n as f64;
        }
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn reflection_identity() {
        for k in 1..100 {
            let x = k as f64 / 100.0;
            let lhs = gamma(x) * gamma(1.0 - x);
            let rhs = PI / (PI * x).sin();
            assert!((lhs - rhs).abs() <= 1e-13 * rhs, "x = {x}");
        }
    }

    #[test]
    fn recurrence_and_log() {
        for k in 1..60 {
            let x = 0.17 * k as f64;
            assert!((gamma(x + 1.0) - x * gamma(x)).abs() <= 1e-12 * gamma(x + 1.0).abs());
            assert!((ln_gamma(x) - gamma(x).ln()).abs() < 1e-12 * (1.0 + ln_gamma(x).abs()));
        }
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-2.0).is_nan());
    }
}
