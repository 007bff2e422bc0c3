// SPDX-License-Identifier: Apache-2.0

//! Reference values for the visibility formulas.

use num_complex::Complex64;

use super::csimpson;

pub fn gauss_phi(mean: f64, std: f64, x: f64) -> Complex64 {
    Complex64::from_polar((-0.5 * std * std * x * x).exp(), mean * x)
}

pub fn midpoint_alpha_beta(mean: f64, std: f64, d: f64) -> (f64, f64) {
    let n = 1_000_000;
    let h = 1.0 / n as f64;
    let sum: Complex64 = (0..n).map(|k| gauss_phi(mean, std, d * ((k as f64 + 0.5) * h - 1.0))).sum();
    let v = sum * h;
    (v.re, v.im)
}

/// The inelastic visibility with every integral done by nested composite
/// Simpson rules, exponentials kept apart as written.
pub fn inelastic_oracle(g11: f64, g12: f64, (m11, s11): (f64, f64), (m12, s12): (f64, f64), d: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let one_minus = |x: f64| Complex64::new(1.0, 0.0) - gauss_phi(m11, s11, x);
    let a = csimpson(0.0, 1.0, 2000, |s| one_minus(d * (s - 1.0)));
    let outer = csimpson(0.0, t, 2000, |tp| {
        let inner = if tp == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            csimpson(0.0, tp, 60, |tpp| one_minus(d * (tpp - t) / t))
        };
        let growth = Complex64::new(-g12 * tp, 0.0) + inner * g11;
        growth.exp() * gauss_phi(m12, s12, d * (tp - t) / t)
    });
    (Complex64::new((-g12 * t).exp(), 0.0) + (-a * (g11 * t)).exp() * outer * g12).norm()
}
