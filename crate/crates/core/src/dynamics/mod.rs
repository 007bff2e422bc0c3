// SPDX-License-Identifier: Apache-2.0

//! Non-Markovian channel dynamics in the characteristic-function
//! representation, plus classical population and momentum-grid solvers.

pub mod cf;
pub mod mc;
pub mod pde;
pub mod population;
pub mod propagate;
pub mod semiclassical;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::units::Vec3;

pub use cf::{gaussian_cf, CharacteristicFunction, GaussianCf, SigmaConvention};

/// Internal channels with their initial weights, rates and transfer
/// characteristic functions.
///
/// `gamma[(i, j)]` is the rate from channel `j` into channel `i`; the same
/// index order is used for `phi(i, j)`.
#[derive(Debug, Clone)]
pub struct DecoherenceChannelSet {
    weights: Vec<f64>,
    gamma: DMatrix<f64>,
    phi: Vec<CharacteristicFunction>,
    p0: Vec3,
    mass: f64,
    hbar: f64,
}

impl DecoherenceChannelSet {
    /// Channels with `Phi = 1` everywhere, `hbar = 1` and zero beam momentum.
    pub fn new(weights: Vec<f64>, gamma: DMatrix<f64>, mass: f64) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::invalid("p", "at least one channel is required"));
        }
        if gamma.nrows() != n || gamma.ncols() != n {
            return Err(Error::invalid(
                "gamma",
                format!("expected {n}x{n}, got {}x{}", gamma.nrows(), gamma.ncols()),
            ));
        }
        if weights.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("p", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("p", format!("weights must sum to 1, got {total}")));
        }
        if gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::invalid("gamma", "rates must be finite and nonnegative"));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("mass", "must be positive"));
        }
        Ok(DecoherenceChannelSet {
            weights,
            gamma,
            phi: vec![CharacteristicFunction::trivial(); n * n],
            p0: Vec3::zeros(),
            mass,
            hbar: 1.0,
        })
    }

    pub fn with_phi(mut self, i: usize, j: usize, phi: impl Into<CharacteristicFunction>) -> Result<Self> {
        let n = self.len();
        if i >= n || j >= n {
            return Err(Error::invalid("phi", format!("index ({i}, {j}) out of range for {n} channels")));
        }
        let phi = phi.into();
        phi.validate(self.hbar)?;
        self.phi[i * n + j] = phi;
        Ok(self)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::invalid("hbar", "must be positive"));
        }
        self.hbar = hbar;
        for phi in &self.phi {
            phi.validate(hbar)?;
        }
        Ok(self)
    }

    pub fn with_p0(mut self, p0: Vec3) -> Self {
        self.p0 = p0;
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[(i, j)]
    }

    pub fn gamma_matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn phi(&self, i: usize, j: usize) -> &CharacteristicFunction {
        &self.phi[i * self.len() + j]
    }

    pub fn p0(&self) -> Vec3 {
        self.p0
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Total rate out of channel `j`, elastic events included.
    pub fn out_rate(&self, j: usize) -> f64 {
        self.gamma.column(j).sum()
    }

    /// No transitions between different channels.
    pub fn is_elastic(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..n).all(|j| i == j || self.gamma[(i, j)] == 0.0))
    }

    pub(crate) fn require_elastic(&self, what: &'static str) -> Result<()> {
        if self.is_elastic() {
            Ok(())
        } else {
            Err(Error::invalid(what, "off-diagonal rates must vanish for elastic channels"))
        }
    }
}
