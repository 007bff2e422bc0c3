// SPDX-License-Identifier: Apache-2.0

//! Reference solutions for the channel dynamics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qbb_core::dynamics::pde::ResidualGrid;
use qbb_core::dynamics::{DecoherenceChannelSet, GaussianCf, SigmaConvention};

use super::V3;

/// `(mean, std)` of the z kick for each `(i, j)`.
pub const KICKS: [[(f64, f64); 2]; 2] = [[(0.3, 0.2), (-0.5, 0.4)], [(0.8, 0.1), (0.0, 0.6)]];

pub fn mixing_set() -> DecoherenceChannelSet {
    let gamma = DMatrix::from_row_slice(2, 2, &[0.8, 1.2, 0.5, 0.3]);
    let mut set = DecoherenceChannelSet::new(vec![0.3, 0.7], gamma, 2.0).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let (m, s) = KICKS[i][j];
            set = set.with_phi(i, j, GaussianCf::along_z(m, s, SigmaConvention::StdDev).unwrap()).unwrap();
        }
    }
    set
}

pub fn phi_oracle(mean: f64, std: f64, x: &V3) -> Complex64 {
    Complex64::from_polar((-0.5 * std * std * x.z * x.z).exp(), mean * x.z)
}

/// Raw moments `E[dz^k 1{channel = i}]`, `k = 0..=4`, from the linear
/// equations they obey under Gaussian kicks.
pub fn moment_oracle(t: f64) -> Vec<[f64; 5]> {
    let g = [[0.8, 1.2], [0.5, 0.3]];
    let n = 2;
    let raw = |m: f64, s: f64| [1.0, m, m * m + s * s, m.powi(3) + 3.0 * m * s * s, m.powi(4) + 6.0 * m * m * s * s + 3.0 * s.powi(4)];
    let binom = |k: usize, r: usize| -> f64 {
        let f = |x: usize| (1..=x).map(|v| v as f64).product::<f64>();
        f(k) / (f(r) * f(k - r))
    };
    let mut a = DMatrix::<f64>::zeros(5 * n, 5 * n);
    for k in 0..5 {
        for i in 0..n {
            let out_i: f64 = (0..n).map(|d| g[d][i]).sum();
            a[(k * n + i, k * n + i)] -= out_i;
            for j in 0..n {
                let y = raw(KICKS[i][j].0, KICKS[i][j].1);
                for r in 0..=k {
                    a[(k * n + i, r * n + j)] += g[i][j] * binom(k, r) * y[k - r];
                }
            }
        }
    }
    let mut x0 = DVector::zeros(5 * n);
    x0[0] = 0.3;
    x0[1] = 0.7;
    let x = (a * t).exp() * x0;
    (0..n).map(|i| [x[i], x[n + i], x[2 * n + i], x[3 * n + i], x[4 * n + i]]).collect()
}

pub fn chi0_a(_: &V3, mu: &V3) -> Complex64 {
    Complex64::new(-0.2 * mu.z * mu.z, 0.7 * mu.z).exp()
}

pub fn chi0_b(l: &V3, mu: &V3) -> Complex64 {
    Complex64::new(0.6, 0.1 * l.z) * Complex64::new(-0.1 * mu.z * mu.z, -0.4 * mu.z).exp()
}

/// Integrates `dy/dtau = G(mu + lambda (t - tau) / M, y)` from the initial
/// data at `mu + lambda t / M`; `y(t)` is the solution at `(mu, t)`.
pub fn characteristic_oracle(
    gamma: [[f64; 2]; 2],
    kicks: [[(f64, f64); 2]; 2],
    mass: f64,
    lambda: &V3,
    mu: &V3,
    t: f64,
) -> [Complex64; 2] {
    let gen = |tau: f64, y: [Complex64; 2]| -> [Complex64; 2] {
        let x = mu + lambda * ((t - tau) / mass);
        let mut d = [Complex64::new(0.0, 0.0); 2];
        for i in 0..2 {
            let out: f64 = (0..2).map(|k| gamma[k][i]).sum();
            d[i] -= y[i] * out;
            for j in 0..2 {
                if gamma[i][j] != 0.0 {
                    d[i] += phi_oracle(kicks[i][j].0, kicks[i][j].1, &x) * y[j] * gamma[i][j];
                }
            }
        }
        d
    };
    let start = mu + lambda * (t / mass);
    let mut y = [chi0_a(lambda, &start), chi0_b(lambda, &start)];
    let steps = 4000;
    let h = t / steps as f64;
    let add = |a: [Complex64; 2], b: [Complex64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
    for s in 0..steps {
        let tau = s as f64 * h;
        let k1 = gen(tau, y);
        let k2 = gen(tau + h / 2.0, add(y, k1, h / 2.0));
        let k3 = gen(tau + h / 2.0, add(y, k2, h / 2.0));
        let k4 = gen(tau + h, add(y, k3, h));
        for c in 0..2 {
            y[c] += (k1[c] + (k2[c] + k3[c]) * 2.0 + k4[c]) * (h / 6.0);
        }
    }
    y
}

pub fn elastic_pair() -> (DecoherenceChannelSet, [[f64; 2]; 2], [[(f64, f64); 2]; 2]) {
    let gamma = [[1.1, 0.0], [0.0, 0.6]];
    let kicks = [[(0.4, 0.3), (0.0, 0.0)], [(0.0, 0.0), (-0.9, 0.5)]];
    let set = DecoherenceChannelSet::new(vec![0.5, 0.5], DMatrix::from_row_slice(2, 2, &[1.1, 0.0, 0.0, 0.6]), 1.5)
        .unwrap()
        .with_phi(0, 0, GaussianCf::along_z(0.4, 0.3, SigmaConvention::StdDev).unwrap())
        .unwrap()
        .with_phi(1, 1, GaussianCf::along_z(-0.9, 0.5, SigmaConvention::StdDev).unwrap())
        .unwrap();
    (set, gamma, kicks)
}

pub fn decaying_pair() -> (DecoherenceChannelSet, [[f64; 2]; 2], [[(f64, f64); 2]; 2]) {
    let gamma = [[0.9, 1.4], [0.0, 0.5]];
    let kicks = [[(0.3, 0.2), (-1.0, 0.4)], [(0.0, 0.0), (0.5, 0.1)]];
    let set = DecoherenceChannelSet::new(vec![0.4, 0.6], DMatrix::from_row_slice(2, 2, &[0.9, 1.4, 0.0, 0.5]), 2.0)
        .unwrap()
        .with_phi(0, 0, GaussianCf::along_z(0.3, 0.2, SigmaConvention::StdDev).unwrap())
        .unwrap()
        .with_phi(0, 1, GaussianCf::along_z(-1.0, 0.4, SigmaConvention::StdDev).unwrap())
        .unwrap()
        .with_phi(1, 1, GaussianCf::along_z(0.5, 0.1, SigmaConvention::StdDev).unwrap())
        .unwrap();
    (set, gamma, kicks)
}

pub fn grid64() -> ResidualGrid {
    ResidualGrid {
        lambda: V3::new(0.0, 0.0, 1.2),
        mu0: V3::new(0.0, 0.0, 0.2),
        s_range: (-0.4, 0.4),
        t_range: (0.0, 1.0),
        n_t: 64,
        n_s: 64,
    }
}
