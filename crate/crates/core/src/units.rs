// SPDX-License-Identifier: Apache-2.0

//! Unit conventions and small vector helpers.
//!
//! All quantities are in a consistent but otherwise arbitrary unit system.
//! Momenta, masses, lengths and times combine through `hbar` and `k_b`,
//! which both default to one. Energies are `E = hbar * omega`.

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Reduced Planck constant and Boltzmann constant of the chosen unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { hbar: 1.0, k_b: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, k_b: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::invalid("hbar", format!("must be positive, got {hbar}")));
        }
        if !(k_b.is_finite() && k_b > 0.0) {
            return Err(Error::invalid("k_b", format!("must be positive, got {k_b}")));
        }
        Ok(PhysicalConstants { hbar, k_b })
    }
}

/// Orthonormal pair spanning the plane perpendicular to `axis`.
///
/// The first vector is built from the two largest-magnitude components of
/// `axis`; ties are broken in x, y, z order. The triple `(e1, e2, axis_hat)`
/// is right-handed. Returns `None` for a zero vector.
pub fn perpendicular_basis(axis: &Vec3) -> Option<(Vec3, Vec3)> {
    let norm = axis.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let n = axis / norm;
    let mut idx = [0usize, 1, 2];
    // stable sort keeps lexicographic order among equal magnitudes
    idx.sort_by(|&a, &b| n[b].abs().partial_cmp(&n[a].abs()).unwrap());
    let (a, b) = if idx[0] < idx[1] {
        (idx[0], idx[1])
    } else {
        (idx[1], idx[0])
    };
    let mut e1 = Vec3::zeros();
    e1[a] = -n[b];
    e1[b] = n[a];
    let e1 = e1.normalize();
    let e2 = n.cross(&e1);
    Some((e1, e2))
}
