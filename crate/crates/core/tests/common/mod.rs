// SPDX-License-Identifier: Apache-2.0

//! Fixtures and reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

pub mod dynamics;
pub mod visibility;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use qbb_core::channels::{ChannelSpace, GasModel};
use qbb_core::rates::JumpFunctionParams;
use qbb_core::scattering::{GaussianAmplitudeModel, ScatteringAmplitudeModel};
use qbb_core::PhysicalConstants;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type V3 = Vector3<f64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec<R: Rng>(rng: &mut R, half: f64) -> V3 {
    V3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

/// Gas used throughout: n = 0.8, m = 1, M = 5, T = 0.7, hbar = k_b = 1.
pub fn gas() -> GasModel {
    GasModel::new(0.8, 1.0, 5.0, 0.7, PhysicalConstants::default()).unwrap()
}

pub fn amplitudes3() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            c(-0.5, 0.1),
            c(0.2, 0.3),
            c(0.05, -0.1),
            c(0.1, -0.2),
            c(-0.7, 0.0),
            c(0.15, 0.05),
            c(-0.08, 0.02),
            c(0.3, -0.1),
            c(-0.4, 0.2),
        ],
    )
}

/// Amplitude that depends on both momenta separately, not only on their
/// difference, so that every argument of the jump function is exercised.
#[derive(Debug, Clone)]
pub struct Probe {
    pub c: DMatrix<Complex64>,
    pub width: f64,
    pub twist: V3,
}

impl Probe {
    pub fn new(n: usize) -> Self {
        let full = amplitudes3();
        Probe {
            c: full.view((0, 0), (n, n)).into_owned(),
            width: 1.7,
            twist: V3::new(0.3, -0.2, 0.5),
        }
    }

    pub fn value(&self, k: usize, j: usize, p_f: &V3, p_i: &V3) -> Complex64 {
        let w2 = self.width * self.width;
        let envelope = (-(p_f.norm_squared() + 0.5 * p_i.norm_squared()) / (2.0 * w2)).exp();
        let phase = self.twist.dot(&(p_f * 2.0 - p_i)) + 0.1 * (k as f64 - j as f64);
        self.c[(k, j)] * envelope * Complex64::from_polar(1.0, phase) * (1.0 + 0.2 * p_i.x)
    }
}

impl ScatteringAmplitudeModel for Probe {
    fn channels(&self) -> usize {
        self.c.nrows()
    }

    fn amplitude(&self, k: usize, j: usize, p_f: &V3, p_i: &V3) -> Complex64 {
        self.value(k, j, p_f, p_i)
    }
}

pub fn probe_params(energies: Vec<f64>) -> (JumpFunctionParams, Probe) {
    let probe = Probe::new(energies.len());
    let params = JumpFunctionParams::new(gas(), Arc::new(probe.clone()), ChannelSpace::new(energies).unwrap()).unwrap();
    (params, probe)
}

pub const KAPPA: f64 = 1.3;

pub fn gaussian_params(energies: Vec<f64>) -> JumpFunctionParams {
    let n = energies.len();
    let c = amplitudes3().view((0, 0), (n, n)).into_owned();
    JumpFunctionParams::new(
        gas(),
        Arc::new(GaussianAmplitudeModel::new(c, KAPPA).unwrap()),
        ChannelSpace::new(energies).unwrap(),
    )
    .unwrap()
}

pub fn p_beta(g: &GasModel) -> f64 {
    (2.0 * g.gas_mass * g.constants.k_b * g.temperature).sqrt()
}

pub fn mb(g: &GasModel, p: &V3) -> f64 {
    let pb = p_beta(g);
    (-p.norm_squared() / (pb * pb)).exp() / (PI.powf(1.5) * pb.powi(3))
}

pub fn reduced(g: &GasModel) -> f64 {
    g.gas_mass * g.test_mass / (g.gas_mass + g.test_mass)
}

/// Any unit pair orthogonal to `q`.
pub fn plane(q: &V3) -> (V3, V3) {
    let n = q.normalize();
    let trial = if n.x.abs() < 0.9 { V3::x() } else { V3::y() };
    let e1 = (trial - n * n.dot(&trial)).normalize();
    (e1, n.cross(&e1))
}

/// The jump function written out term by term:
///
/// sqrt(n m / (m*^2 Q)) sqrt(mu(p + (m/M) P_par + (1 + m/M) Q/2 + E m Q / Q^2))
///   * f(rel(p, P_perp) - Q/2 + E m* Q / Q^2, rel(p, P_perp) + Q/2 + E m* Q / Q^2)
pub fn jump_oracle(
    g: &GasModel,
    amp: &dyn Fn(&V3, &V3) -> Complex64,
    gap: f64,
    p: &V3,
    big_p: &V3,
    q: &V3,
) -> Complex64 {
    let (m, big_m) = (g.gas_mass, g.test_mass);
    let ms = reduced(g);
    let q2 = q.norm_squared();
    let qh = q / q2.sqrt();
    let p_par = qh * big_p.dot(&qh);
    let p_perp = big_p - p_par;
    let mu_arg = p + p_par * (m / big_m) + q * ((1.0 + m / big_m) / 2.0) + q * (gap * m / q2);
    let rel = p * (ms / m) - p_perp * (ms / big_m);
    let shift = q * (gap * ms / q2);
    let pf = rel - q / 2.0 + shift;
    let pi = rel + q / 2.0 + shift;
    let pre = (g.n_gas * m / (ms * ms * q2.sqrt())).sqrt();
    amp(&pf, &pi) * pre * mb(g, &mu_arg).sqrt()
}

/// Trapezoid sum over the square `[-half, half]^2` in the plane `(e1, e2)`.
/// Spectrally accurate for smooth integrands that decay at the edges.
pub fn plane_trapezoid(e1: &V3, e2: &V3, half: f64, points: usize, mut f: impl FnMut(&V3) -> Complex64) -> Complex64 {
    let h = 2.0 * half / (points - 1) as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for a in 0..points {
        let x = -half + a as f64 * h;
        for b in 0..points {
            let y = -half + b as f64 * h;
            sum += f(&(e1 * x + e2 * y));
        }
    }
    sum * h * h
}

/// Trapezoid sum over the cube `[-half, half]^3`.
pub fn cube_trapezoid(half: f64, points: usize, mut f: impl FnMut(&V3) -> f64) -> f64 {
    let h = 2.0 * half / (points - 1) as f64;
    let mut sum = 0.0;
    for a in 0..points {
        for b in 0..points {
            for k in 0..points {
                let p = V3::new(-half + a as f64 * h, -half + b as f64 * h, -half + k as f64 * h);
                sum += f(&p);
            }
        }
    }
    sum * h * h * h
}

/// Composite Simpson rule with `panels` (even) panels.
pub fn simpson(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    assert!(panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Composite Simpson rule for complex integrands.
pub fn csimpson(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> Complex64) -> Complex64 {
    assert!(panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += f(a + k as f64 * h) * w;
    }
    sum * (h / 3.0)
}

/// Angular integrals of `exp(-|p_f - p_i|^2 / kappa^2)` over the direction
/// of `p_f`: returns `(int dOmega, int dOmega cos(theta))` with `theta` the
/// angle to `p_i`.
pub fn gaussian_sphere_moments(pf: f64, pi: f64, kappa: f64) -> (f64, f64) {
    let k2 = kappa * kappa;
    let a = 2.0 * pf * pi / k2;
    let minus = (-(pf - pi).powi(2) / k2).exp();
    let plus = (-(pf + pi).powi(2) / k2).exp();
    if a < 1e-4 {
        let base = (-(pf * pf + pi * pi) / k2).exp();
        // series in a
        let i0 = 4.0 * PI * base * (1.0 + a * a / 6.0);
        let i1 = 4.0 * PI * base * (a / 3.0 + a * a * a / 30.0);
        return (i0, i1);
    }
    let sinh = 0.5 * (minus - plus);
    let cosh = 0.5 * (minus + plus);
    let i0 = 2.0 * PI * 2.0 * sinh / a;
    let i1 = 2.0 * PI * (2.0 * cosh / a - 2.0 * sinh / (a * a));
    (i0, i1)
}

pub fn assert_close(a: Complex64, b: Complex64, rel: f64, what: &str) {
    let scale = a.norm().max(b.norm());
    assert!(
        (a - b).norm() <= rel * scale,
        "{what}: {a} vs {b} (rel {:.3e})",
        (a - b).norm() / scale
    );
}
