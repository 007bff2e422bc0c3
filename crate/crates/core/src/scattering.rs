// SPDX-License-Identifier: Apache-2.0

//! Multichannel scattering amplitudes and the cross sections derived from
//! them.
//!
//! An amplitude `f_kj(p_f, p_i)` describes a collision taking relative
//! momentum `p_i` in channel `j` to `p_f` in channel `k`; it has units of
//! length. The built-in models are test fixtures. They are not required to
//! satisfy the optical theorem.

use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channels::{ChannelSpace, GasModel};
use crate::error::{Error, Result};
use crate::quadrature::{self, Estimate, Tolerance};
use crate::units::{perpendicular_basis, Vec3};

/// Multichannel amplitude `f_kj(p_f, p_i)`.
pub trait ScatteringAmplitudeModel: Send + Sync + Debug {
    /// Number of internal channels the model is defined for.
    fn channels(&self) -> usize;

    /// Amplitude for `(p_i, j) -> (p_f, k)`.
    fn amplitude(&self, k: usize, j: usize, p_f: &Vec3, p_i: &Vec3) -> Complex64;

    /// An upper bound on `|f_kj|` over all arguments, if one is known.
    ///
    /// Needed only for exact rejection sampling of momentum transfers.
    fn modulus_bound(&self) -> Option<f64> {
        None
    }
}

fn check_matrix(c: &DMatrix<Complex64>) -> Result<()> {
    if c.nrows() == 0 || c.nrows() != c.ncols() {
        return Err(Error::invalid(
            "amplitudes",
            format!("expected a square nonempty matrix, got {}x{}", c.nrows(), c.ncols()),
        ));
    }
    if c.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::invalid("amplitudes", "entries must be finite"));
    }
    Ok(())
}

fn max_modulus(c: &DMatrix<Complex64>) -> f64 {
    c.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Momentum-independent amplitudes, an s-wave model.
///
/// A real negative diagonal entry `c_ii = -a` describes scattering length `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantAmplitudeModel {
    c: DMatrix<Complex64>,
}

impl ConstantAmplitudeModel {
    pub fn new(c: DMatrix<Complex64>) -> Result<Self> {
        check_matrix(&c)?;
        Ok(ConstantAmplitudeModel { c })
    }

    /// Single channel with amplitude `c`.
    pub fn scalar(c: Complex64) -> Self {
        ConstantAmplitudeModel {
            c: DMatrix::from_element(1, 1, c),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.c
    }
}

impl ScatteringAmplitudeModel for ConstantAmplitudeModel {
    fn channels(&self) -> usize {
        self.c.nrows()
    }

    fn amplitude(&self, k: usize, j: usize, _p_f: &Vec3, _p_i: &Vec3) -> Complex64 {
        self.c[(k, j)]
    }

    fn modulus_bound(&self) -> Option<f64> {
        Some(max_modulus(&self.c))
    }
}

/// `f_kj = c_kj exp(-|p_f - p_i|^2 / (2 kappa^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianAmplitudeModel {
    c: DMatrix<Complex64>,
    kappa: f64,
}

impl GaussianAmplitudeModel {
    pub fn new(c: DMatrix<Complex64>, kappa: f64) -> Result<Self> {
        check_matrix(&c)?;
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
        }
        Ok(GaussianAmplitudeModel { c, kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.c
    }
}

impl ScatteringAmplitudeModel for GaussianAmplitudeModel {
    fn channels(&self) -> usize {
        self.c.nrows()
    }

    fn amplitude(&self, k: usize, j: usize, p_f: &Vec3, p_i: &Vec3) -> Complex64 {
        let d2 = (p_f - p_i).norm_squared();
        self.c[(k, j)] * (-d2 / (2.0 * self.kappa * self.kappa)).exp()
    }

    fn modulus_bound(&self) -> Option<f64> {
        Some(max_modulus(&self.c))
    }
}

/// `sigma_kj(p_f, p_i) = (|p_f| / |p_i|) |f_kj(p_f, p_i)|^2`.
pub fn differential_cross_section(
    model: &dyn ScatteringAmplitudeModel,
    k: usize,
    j: usize,
    p_f: &Vec3,
    p_i: &Vec3,
) -> Result<f64> {
    let pi = p_i.norm();
    if !(pi > 0.0) {
        return Err(Error::invalid("p_i", "initial relative momentum must be nonzero"));
    }
    Ok(p_f.norm() / pi * model.amplitude(k, j, p_f, p_i).norm_sqr())
}

/// Magnitude of the outgoing relative momentum in channel `k` for incoming
/// `|p_i|` in channel `j`, or `None` when the channel is closed.
pub fn on_shell_momentum(
    gas: &GasModel,
    channels: &ChannelSpace,
    p_i: f64,
    k: usize,
    j: usize,
) -> Option<f64> {
    let radicand = p_i * p_i - 2.0 * gas.reduced_mass() * channels.gap(k, j);
    (radicand >= 0.0).then(|| radicand.sqrt())
}

/// Cross section for `j -> k` alone: `(|p_f| / |p_i|) * integral of |f_kj|^2`
/// over the on-shell sphere. Zero for a closed channel.
pub fn channel_cross_section(
    model: &dyn ScatteringAmplitudeModel,
    gas: &GasModel,
    channels: &ChannelSpace,
    p_i: &Vec3,
    k: usize,
    j: usize,
    order: usize,
) -> Result<f64> {
    let pi = p_i.norm();
    if !(pi > 0.0) {
        return Err(Error::invalid("p_i", "initial relative momentum must be nonzero"));
    }
    let Some(pf) = on_shell_momentum(gas, channels, pi, k, j) else {
        return Ok(0.0);
    };
    let v = sphere_rule(p_i, order, |dir| {
        Complex64::new(model.amplitude(k, j, &(dir * pf), p_i).norm_sqr(), 0.0)
    });
    Ok(pf / pi * v.re)
}

/// Integral of `g(p_hat)` over the unit sphere using a Gauss–Legendre rule
/// in `cos(theta)` about `axis` and the trapezoid rule in `phi`.
pub fn sphere_rule<F>(axis: &Vec3, order: usize, mut g: F) -> Complex64
where
    F: FnMut(&Vec3) -> Complex64,
{
    let (e1, e2) = perpendicular_basis(axis).unwrap_or((Vec3::x(), Vec3::y()));
    let n = if axis.norm() > 0.0 {
        axis.normalize()
    } else {
        Vec3::z()
    };
    let n_phi = 2 * order;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for &(c, w) in quadrature::legendre(order).iter() {
        let s = (1.0 - c * c).max(0.0).sqrt();
        let mut ring = Complex64::new(0.0, 0.0);
        for b in 0..n_phi {
            let phi = (b as f64 + 0.5) * dphi;
            let dir = n * c + (e1 * phi.cos() + e2 * phi.sin()) * s;
            ring += g(&dir);
        }
        sum += ring * (w * dphi);
    }
    sum
}

/// Total cross section out of channel `j` at incoming relative momentum
/// `p_i`, summed over all open final channels on their energy shells.
pub fn total_cross_section(
    model: &dyn ScatteringAmplitudeModel,
    gas: &GasModel,
    channels: &ChannelSpace,
    p_i: &Vec3,
    j: usize,
) -> Result<Estimate<f64>> {
    total_cross_section_with(model, gas, channels, p_i, j, Tolerance::default(), 8, 512)
}

#[allow(clippy::too_many_arguments)]
pub fn total_cross_section_with(
    model: &dyn ScatteringAmplitudeModel,
    gas: &GasModel,
    channels: &ChannelSpace,
    p_i: &Vec3,
    j: usize,
    tol: Tolerance,
    initial_order: usize,
    max_order: usize,
) -> Result<Estimate<f64>> {
    let pi = p_i.norm();
    if !(pi > 0.0) {
        return Err(Error::invalid("p_i", "initial relative momentum must be nonzero"));
    }
    let mut value = 0.0;
    let mut error = 0.0;
    for k in 0..channels.len() {
        let Some(pf) = on_shell_momentum(gas, channels, pi, k, j) else {
            continue;
        };
        let est = quadrature::refine_order(initial_order, max_order, tol, |order| {
            sphere_rule(p_i, order, |dir| {
                let p_f = dir * pf;
                Complex64::new(model.amplitude(k, j, &p_f, p_i).norm_sqr(), 0.0)
            })
        })?;
        value += pf / pi * est.value.re;
        error += pf / pi * est.error;
    }
    Ok(Estimate { value, error })
}
