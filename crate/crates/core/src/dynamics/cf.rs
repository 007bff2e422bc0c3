// SPDX-License-Identifier: Apache-2.0

//! Characteristic functions of momentum-transfer densities,
//! `Phi(x) = integral dQ exp(i x.Q / hbar) P(Q)`, and their integrals along
//! straight lines in `x`.

use std::fmt;
use std::sync::Arc;

use errorfunctions::erfcx_with_relerror;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::units::Vec3;

/// How the `sigma` parameters of a Gaussian transfer density are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaConvention {
    /// `sigma` is the standard deviation along each axis.
    #[default]
    StdDev,
    /// `sigma` is the variance along each axis.
    Variance,
}

/// Gaussian momentum-transfer density with independent axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCf {
    pub mean: Vec3,
    /// Standard deviation per axis.
    pub std: Vec3,
}

impl GaussianCf {
    pub fn new(mean: Vec3, sigma: Vec3, convention: SigmaConvention) -> Result<Self> {
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mu", "mean must be finite"));
        }
        if sigma.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("sigma", "must be finite and nonnegative"));
        }
        let std = match convention {
            SigmaConvention::StdDev => sigma,
            SigmaConvention::Variance => sigma.map(f64::sqrt),
        };
        Ok(GaussianCf { mean, std })
    }

    /// Transfers along `z` only, as used for the slit axis.
    pub fn along_z(mean: f64, sigma: f64, convention: SigmaConvention) -> Result<Self> {
        GaussianCf::new(Vec3::new(0.0, 0.0, mean), Vec3::new(0.0, 0.0, sigma), convention)
    }

    /// No momentum transfer at all; `Phi = 1`.
    pub fn trivial() -> Self {
        GaussianCf {
            mean: Vec3::zeros(),
            std: Vec3::zeros(),
        }
    }

    pub fn eval(&self, x: &Vec3, hbar: f64) -> Complex64 {
        gaussian_cf(&self.mean, &self.std, x, hbar)
    }
}

/// `exp(i mu.x / hbar) * exp(-sum_a sigma_a^2 x_a^2 / (2 hbar^2))`.
pub fn gaussian_cf(mu: &Vec3, sigma: &Vec3, x: &Vec3, hbar: f64) -> Complex64 {
    let phase = mu.dot(x) / hbar;
    let damp: f64 = sigma
        .iter()
        .zip(x.iter())
        .map(|(s, xa)| (s * xa) * (s * xa))
        .sum::<f64>()
        / (2.0 * hbar * hbar);
    Complex64::from_polar((-damp).exp(), phase)
}

pub type CfCallable = Arc<dyn Fn(&Vec3) -> Complex64 + Send + Sync>;

/// A characteristic function: Gaussian, or any user-supplied function with
/// `Phi(0) = 1` and `|Phi| <= 1`.
#[derive(Clone)]
pub enum CharacteristicFunction {
    Gaussian(GaussianCf),
    Callable(CfCallable),
}

impl fmt::Debug for CharacteristicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharacteristicFunction::Gaussian(g) => f.debug_tuple("Gaussian").field(g).finish(),
            CharacteristicFunction::Callable(_) => f.write_str("Callable(..)"),
        }
    }
}

impl From<GaussianCf> for CharacteristicFunction {
    fn from(g: GaussianCf) -> Self {
        CharacteristicFunction::Gaussian(g)
    }
}

impl CharacteristicFunction {
    pub fn trivial() -> Self {
        CharacteristicFunction::Gaussian(GaussianCf::trivial())
    }

    pub fn callable<F>(f: F) -> Self
    where
        F: Fn(&Vec3) -> Complex64 + Send + Sync + 'static,
    {
        CharacteristicFunction::Callable(Arc::new(f))
    }

    pub fn eval(&self, x: &Vec3, hbar: f64) -> Complex64 {
        match self {
            CharacteristicFunction::Gaussian(g) => g.eval(x, hbar),
            CharacteristicFunction::Callable(f) => f(x),
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianCf> {
        match self {
            CharacteristicFunction::Gaussian(g) => Some(g),
            CharacteristicFunction::Callable(_) => None,
        }
    }

    /// Checks `Phi(0) = 1` to `1e-12`.
    pub fn validate(&self, hbar: f64) -> Result<()> {
        let v = self.eval(&Vec3::zeros(), hbar);
        if (v - 1.0).norm() > 1e-12 {
            return Err(Error::invalid("phi", format!("Phi(0) must be 1, got {v}")));
        }
        Ok(())
    }

    /// `integral_{s1}^{s2} Phi(x0 + v s) ds`.
    ///
    /// Closed form through the Faddeeva function for Gaussians, adaptive
    /// Gauss–Kronrod otherwise.
    pub fn line_integral(&self, x0: &Vec3, v: &Vec3, s1: f64, s2: f64, hbar: f64) -> Result<Complex64> {
        self.line_integral_with(x0, v, s1, s2, hbar, Tolerance::new(1e-12, 1e-300))
    }

    pub fn line_integral_with(
        &self,
        x0: &Vec3,
        v: &Vec3,
        s1: f64,
        s2: f64,
        hbar: f64,
        tol: Tolerance,
    ) -> Result<Complex64> {
        match self {
            CharacteristicFunction::Gaussian(g) => Ok(gaussian_line_integral(g, x0, v, s1, s2, hbar)),
            CharacteristicFunction::Callable(f) => {
                quadrature::integrate(s1, s2, tol, |s| f(&(x0 + v * s))).map(|e| e.value)
            }
        }
    }
}

/// Closed form of `integral_{s1}^{s2} Phi(x0 + v s) ds` for a Gaussian.
///
/// The exponent is `-A s^2 + B s + C`; the antiderivative is written with
/// the scaled complementary error function so no intermediate overflows.
pub fn gaussian_line_integral(g: &GaussianCf, x0: &Vec3, v: &Vec3, s1: f64, s2: f64, hbar: f64) -> Complex64 {
    if s1 == s2 {
        return Complex64::new(0.0, 0.0);
    }
    let h2 = hbar * hbar;
    let mut a = 0.0;
    let mut b_re = 0.0;
    let mut c_re = 0.0;
    for k in 0..3 {
        let s2k = g.std[k] * g.std[k];
        a += s2k * v[k] * v[k] / (2.0 * h2);
        b_re -= s2k * x0[k] * v[k] / h2;
        c_re -= s2k * x0[k] * x0[k] / (2.0 * h2);
    }
    let b = Complex64::new(b_re, g.mean.dot(v) / hbar);
    let c = Complex64::new(c_re, g.mean.dot(x0) / hbar);
    let exponent = |s: f64| -a * s * s + b * s + c;
    let len = (s2 - s1).abs();

    if a * len * len < 1e-6 {
        // Nearly pure exponential: panel Gauss–Legendre resolves any phase winding.
        let panels = ((b.norm() * len / 2.0).ceil() as usize).clamp(1, 1 << 20);
        let width = (s2 - s1) / panels as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let lo = s1 + width * p as f64;
            sum += quadrature::gauss_legendre(lo, lo + width, 20, |s| exponent(s).exp());
        }
        return sum;
    }

    let ra = a.sqrt();
    let shift = b / (2.0 * ra);
    let peak = (c + b * b / (4.0 * a)).exp();
    // exp(C + B^2/4A) * erfc(z) at z = sqrt(A) s - B / (2 sqrt(A))
    let scaled_erfc = |s: f64| -> Complex64 {
        let z = ra * s - shift;
        if z.re >= 0.0 {
            exponent(s).exp() * erfcx_with_relerror(z, 0.0)
        } else {
            peak * 2.0 - exponent(s).exp() * erfcx_with_relerror(-z, 0.0)
        }
    };
    (scaled_erfc(s1) - scaled_erfc(s2)) * (std::f64::consts::PI.sqrt() / (2.0 * ra))
}
