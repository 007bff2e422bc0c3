// SPDX-License-Identifier: Apache-2.0

//! Internal levels, gas thermodynamics, the Maxwell–Boltzmann momentum
//! density and its dynamic structure factor, and pressure/rate conversions.
//!
//! Unit conventions: energies `E_i = hbar * omega_i`; temperature enters only
//! through `beta = 1 / (k_b T)`; the pressure of the ideal gas is
//! `n_gas * k_b * T`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::{PhysicalConstants, Vec3};

/// Internal energy levels of the test particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpace {
    energies: Vec<f64>,
    labels: Option<Vec<String>>,
    tolerance: f64,
}

impl ChannelSpace {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::invalid("energies", "at least one level is required"));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::invalid("energies", format!("non-finite energy {e}")));
        }
        let scale = energies.iter().fold(1.0f64, |acc, e| acc.max(e.abs()));
        Ok(ChannelSpace {
            energies,
            labels: None,
            tolerance: 1e-9 * scale,
        })
    }

    /// A single structureless level at zero energy.
    pub fn single() -> Self {
        ChannelSpace::new(vec![0.0]).unwrap()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.energies.len() {
            return Err(Error::invalid(
                "labels",
                format!("expected {} labels, got {}", self.energies.len(), labels.len()),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    /// Energy gap `E_i - E_j`.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        self.energies[i] - self.energies[j]
    }

    /// Tolerance used when comparing gaps.
    pub fn gap_tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Rotating-wave selector: true iff `E_i - E_j` equals `E_k - E_l`.
    pub fn chi_selector(&self, i: usize, j: usize, k: usize, l: usize) -> bool {
        (self.gap(i, j) - self.gap(k, l)).abs() < self.tolerance
    }

    /// True iff the gap `E_i - E_j` vanishes within tolerance.
    pub fn is_degenerate(&self, i: usize, j: usize) -> bool {
        self.gap(i, j).abs() < self.tolerance
    }
}

/// Ideal background gas plus the test-particle mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    /// Number density.
    pub n_gas: f64,
    /// Gas-particle mass `m`.
    pub gas_mass: f64,
    /// Test-particle mass `M`.
    pub test_mass: f64,
    pub temperature: f64,
    pub constants: PhysicalConstants,
}

impl GasModel {
    pub fn new(
        n_gas: f64,
        gas_mass: f64,
        test_mass: f64,
        temperature: f64,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        for (name, v) in [
            ("n_gas", n_gas),
            ("gas_mass", gas_mass),
            ("test_mass", test_mass),
            ("temperature", temperature),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(GasModel {
            n_gas,
            gas_mass,
            test_mass,
            temperature,
            constants,
        })
    }

    pub fn beta(&self) -> f64 {
        1.0 / (self.constants.k_b * self.temperature)
    }

    /// Reduced mass `m M / (M + m)`.
    pub fn reduced_mass(&self) -> f64 {
        self.gas_mass * self.test_mass / (self.gas_mass + self.test_mass)
    }

    /// Most probable gas momentum `sqrt(2 m / beta)`.
    pub fn p_beta(&self) -> f64 {
        (2.0 * self.gas_mass / self.beta()).sqrt()
    }

    pub fn pressure(&self) -> f64 {
        self.n_gas * self.constants.k_b * self.temperature
    }

    /// Copy of the model with the density rescaled to reach `pressure`.
    pub fn with_pressure(&self, pressure: f64) -> Result<Self> {
        GasModel::new(
            pressure / (self.constants.k_b * self.temperature),
            self.gas_mass,
            self.test_mass,
            self.temperature,
            self.constants,
        )
    }

    /// Relative momentum `(m*/m) p - (m*/M) P` of a gas particle with momentum
    /// `p` and a test particle with momentum `big_p`.
    pub fn rel(&self, p: &Vec3, big_p: &Vec3) -> Vec3 {
        let ms = self.reduced_mass();
        p * (ms / self.gas_mass) - big_p * (ms / self.test_mass)
    }
}

/// Stationary momentum distribution of the gas particles.
///
/// Implementations return a probability density normalised over all of
/// momentum space.
pub trait GasDistribution: Send + Sync + std::fmt::Debug {
    fn density(&self, p: &Vec3) -> f64;

    /// Characteristic momentum scale of the distribution.
    fn momentum_scale(&self) -> f64;

    /// `Some(width)` when the density is exactly
    /// `pi^{-3/2} width^{-3} exp(-p^2 / width^2)`.
    fn gaussian_width(&self) -> Option<f64> {
        None
    }
}

/// Maxwell–Boltzmann momentum distribution at the gas temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellBoltzmann {
    pub p_beta: f64,
}

impl MaxwellBoltzmann {
    pub fn of(gas: &GasModel) -> Self {
        MaxwellBoltzmann {
            p_beta: gas.p_beta(),
        }
    }

    /// Two-dimensional marginal `pi^{-1} p_beta^{-2} exp(-p^2/p_beta^2)` in a plane.
    pub fn in_plane_density(&self, p_sq: f64) -> f64 {
        let pb2 = self.p_beta * self.p_beta;
        (-p_sq / pb2).exp() / (PI * pb2)
    }
}

impl GasDistribution for MaxwellBoltzmann {
    fn density(&self, p: &Vec3) -> f64 {
        let pb = self.p_beta;
        (-p.norm_squared() / (pb * pb)).exp() / (PI.powf(1.5) * pb * pb * pb)
    }

    fn momentum_scale(&self) -> f64 {
        self.p_beta
    }

    fn gaussian_width(&self) -> Option<f64> {
        Some(self.p_beta)
    }
}

/// Maxwell–Boltzmann density `mu_beta(p)` (units 1/momentum^3).
pub fn mb_density(gas: &GasModel, p: &Vec3) -> f64 {
    MaxwellBoltzmann::of(gas).density(p)
}

/// Dynamic structure factor of a Maxwell–Boltzmann gas (units 1/energy):
///
/// `S(Q, E) = sqrt(beta m / 2 pi) / Q * exp(-beta (Q^2 + 2 m E)^2 / (8 m Q^2))`.
///
/// Underflows to zero for small `Q` at nonzero `E`.
pub fn dynamic_structure_factor(gas: &GasModel, q: &Vec3, energy: f64) -> Result<f64> {
    let q_abs = q.norm();
    if !(q_abs > 0.0) {
        return Err(Error::invalid("Q", "momentum transfer must be nonzero"));
    }
    Ok(structure_factor_scalar(gas, q_abs, energy))
}

pub(crate) fn structure_factor_scalar(gas: &GasModel, q_abs: f64, energy: f64) -> f64 {
    let beta = gas.beta();
    let m = gas.gas_mass;
    let q2 = q_abs * q_abs;
    let shifted = q2 + 2.0 * m * energy;
    (beta * m / (2.0 * PI)).sqrt() / q_abs * (-beta * shifted * shifted / (8.0 * m * q2)).exp()
}

/// Kinetic energy transferred to a test particle of mass `mass` whose
/// momentum changes from `p` to `p + q`: `((P + Q)^2 - P^2) / 2M`.
pub fn energy_transfer(mass: f64, p: &Vec3, q: &Vec3) -> f64 {
    // Q.(2P + Q) avoids cancellation between the two squares.
    q.dot(&(p * 2.0 + q)) / (2.0 * mass)
}

/// Collision rate, reference pressure and dimensionless strength for a
/// beam of momentum `P0` with effective cross section `sigma_eff` and time
/// of flight `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureMap {
    /// `Gamma = n_gas P0 sigma_eff / M = p P0 sigma_eff / (M k_b T)`.
    pub gamma: f64,
    /// `p0 = M k_b T / (P0 sigma_eff t)`.
    pub p0_ref: f64,
    /// `Gamma * t`.
    pub gamma_t: f64,
}

impl PressureMap {
    /// `p / p0`, which equals `gamma_t` up to rounding.
    pub fn pressure_ratio(&self, gas: &GasModel) -> f64 {
        gas.pressure() / self.p0_ref
    }
}

pub fn pressure_map(gas: &GasModel, p0: f64, sigma_eff: f64, t: f64) -> Result<PressureMap> {
    for (name, v) in [("P0", p0), ("sigma_eff", sigma_eff), ("t", t)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
        }
    }
    let kt = gas.constants.k_b * gas.temperature;
    let gamma = gas.pressure() / (gas.test_mass * kt) * p0 * sigma_eff;
    let p0_ref = gas.test_mass * kt / (p0 * sigma_eff * t);
    Ok(PressureMap {
        gamma,
        p0_ref,
        gamma_t: gamma * t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn gas() -> GasModel {
        GasModel::new(1.0, 1.0, 10.0, 0.5, PhysicalConstants::default()).unwrap()
    }

    #[test]
    fn channel_space_validation() {
        assert!(ChannelSpace::new(vec![]).is_err());
        assert!(ChannelSpace::new(vec![0.0, f64::INFINITY]).is_err());
        let c = ChannelSpace::new(vec![0.0, 1.0]).unwrap();
        assert!(c.clone().with_labels(vec!["g".into()]).is_err());
        let c = c.with_labels(vec!["g".into(), "e".into()]).unwrap();
        assert_eq!(c.label(1), Some("e"));
    }

    #[test]
    fn gap_is_exactly_antisymmetric() {
        let c = ChannelSpace::new(vec![0.1, 0.7, -3.3, 1e5]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.gap(i, j), -c.gap(j, i));
            }
        }
    }

    #[test]
    fn selector_tolerance_scales_with_energies() {
        let c = ChannelSpace::new(vec![0.0, 1000.0, 2000.0 + 1e-7]).unwrap();
        assert!(c.chi_selector(1, 0, 2, 1));
        assert!(!c.chi_selector(1, 0, 2, 0));
        assert!(c.chi_selector(0, 0, 2, 2));
    }

    #[test]
    fn gas_rejects_invalid() {
        let k = PhysicalConstants::default();
        assert!(GasModel::new(0.0, 1.0, 1.0, 1.0, k).is_err());
        assert!(GasModel::new(1.0, -1.0, 1.0, 1.0, k).is_err());
        assert!(GasModel::new(1.0, 1.0, 1.0, f64::NAN, k).is_err());
        let g = gas();
        assert!(g.reduced_mass() < g.gas_mass.min(g.test_mass));
    }

    #[test]
    fn mb_peak_value() {
        let g = gas();
        let pb = g.p_beta();
        assert_relative_eq!(
            mb_density(&g, &Vec3::zeros()),
            PI.powf(-1.5) * pb.powi(-3),
            max_relative = 1e-15
        );
    }

    #[test]
    fn mb_normalisation_on_cube() {
        let g = gas();
        let half = 8.0 * g.p_beta();
        let rule = quadrature::legendre(64);
        let mut total = 0.0;
        for &(x, wx) in rule.iter() {
            for &(y, wy) in rule.iter() {
                for &(z, wz) in rule.iter() {
                    let p = Vec3::new(x, y, z) * half;
                    total += wx * wy * wz * mb_density(&g, &p);
                }
            }
        }
        total *= half.powi(3);
        assert!((total - 1.0).abs() < 1e-8, "normalisation {total}");
    }

    #[test]
    fn structure_factor_at_zero_energy() {
        let g = gas();
        let q = Vec3::new(0.3, -0.4, 1.2);
        let qa = q.norm();
        let beta = g.beta();
        let m = g.gas_mass;
        let expected = (beta * m / (2.0 * PI)).sqrt() / qa * (-beta * qa * qa / (8.0 * m)).exp();
        assert_relative_eq!(
            dynamic_structure_factor(&g, &q, 0.0).unwrap(),
            expected,
            max_relative = 1e-15
        );
    }

    #[test]
    fn structure_factor_reference_value() {
        // Q = 1, E = 0.3, beta = 2, m = 1: exp(-0.64) / sqrt(pi), evaluated at
        // 30 digits with mpmath.
        let g = GasModel::new(1.0, 1.0, 1.0, 0.5, PhysicalConstants::default()).unwrap();
        let s = dynamic_structure_factor(&g, &Vec3::new(0.0, 0.0, 1.0), 0.3).unwrap();
        assert_relative_eq!(s, 0.297_492_893_128_734_48, max_relative = 1e-14);
    }

    #[test]
    fn structure_factor_rejects_zero_q_and_underflows_near_zero() {
        let g = gas();
        assert!(dynamic_structure_factor(&g, &Vec3::zeros(), 0.1).is_err());
        let tiny = dynamic_structure_factor(&g, &Vec3::new(1e-150, 0.0, 0.0), 1.0).unwrap();
        assert_eq!(tiny, 0.0);
    }

    #[test]
    fn energy_transfer_limits() {
        let p = Vec3::new(0.3, 2.0, -1.0);
        let q = Vec3::new(0.5, -0.25, 1.5);
        assert_eq!(energy_transfer(3.0, &p, &Vec3::zeros()), 0.0);
        assert_relative_eq!(
            energy_transfer(3.0, &Vec3::zeros(), &q),
            q.norm_squared() / 6.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn pressure_map_reference_point() {
        let g = GasModel::new(1.0, 1.0, 1.0, 1.0, PhysicalConstants::default()).unwrap();
        let m = pressure_map(&g, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((m.gamma, m.p0_ref, m.gamma_t), (1.0, 1.0, 1.0));
        assert!(pressure_map(&g, 1.0, 0.0, 1.0).is_err());
        assert!(pressure_map(&g, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn pressure_map_is_linear_in_pressure() {
        let g = gas();
        let a = pressure_map(&g, 2.0, 0.7, 3.0).unwrap();
        let b = pressure_map(&g.with_pressure(2.0 * g.pressure()).unwrap(), 2.0, 0.7, 3.0).unwrap();
        assert_relative_eq!(b.gamma, 2.0 * a.gamma, max_relative = 1e-15);
        assert_eq!(a.p0_ref, b.p0_ref);
    }

    proptest! {
        #[test]
        fn detailed_balance(qx in -3.0..3.0f64, qy in -3.0..3.0f64, qz in -3.0..3.0f64, e in -2.0..2.0f64) {
            let g = gas();
            let q = Vec3::new(qx, qy, qz);
            prop_assume!(q.norm() > 0.05);
            let plus = dynamic_structure_factor(&g, &q, e).unwrap();
            let minus = dynamic_structure_factor(&g, &q, -e).unwrap();
            prop_assume!(plus > 1e-250 && minus > 1e-250);
            let beta = g.beta();
            let lhs = plus * (beta * e / 2.0).exp();
            let rhs = minus * (-beta * e / 2.0).exp();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
        }

        #[test]
        fn mb_is_even_and_rotation_invariant(
            x in -4.0..4.0f64, y in -4.0..4.0f64, z in -4.0..4.0f64,
            ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in -1.0..1.0f64, angle in 0.0..6.3f64,
        ) {
            let g = gas();
            let p = Vec3::new(x, y, z);
            let v = mb_density(&g, &p);
            prop_assert_eq!(v, mb_density(&g, &(-p)));
            let axis = Vec3::new(ax, ay, az);
            prop_assume!(axis.norm() > 1e-3);
            let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
            let w = mb_density(&g, &(rot * p));
            prop_assert!((v - w).abs() <= 1e-12 * v.max(1e-300));
            prop_assert!(v <= mb_density(&g, &Vec3::zeros()));
        }

        #[test]
        fn energy_transfer_antisymmetry_on_dyadic_grid(
            p in prop::array::uniform3(-512i32..512), q in prop::array::uniform3(-512i32..512),
            mass in 1u32..64,
        ) {
            // Dyadic inputs keep P + Q - Q == P, so the identity holds bit for bit.
            let p = Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64) / 64.0;
            let q = Vec3::new(q[0] as f64, q[1] as f64, q[2] as f64) / 64.0;
            let m = mass as f64;
            prop_assert_eq!(energy_transfer(m, &p, &q) + energy_transfer(m, &(p + q), &(-q)), 0.0);
        }

        #[test]
        fn energy_transfer_antisymmetry_general(
            p in prop::array::uniform3(-10.0..10.0f64), q in prop::array::uniform3(-10.0..10.0f64),
        ) {
            let p = Vec3::from(p);
            let q = Vec3::from(q);
            let a = energy_transfer(2.5, &p, &q);
            let b = energy_transfer(2.5, &(p + q), &(-q));
            let scale = (p.norm() + q.norm()).powi(2);
            prop_assert!((a + b).abs() <= 1e-14 * scale);
        }

        #[test]
        fn gamma_t_two_ways(n in 0.01..10.0f64, t_gas in 0.1..10.0f64, p0 in 0.1..10.0f64,
                            sigma in 0.01..5.0f64, t in 0.01..10.0f64) {
            let g = GasModel::new(n, 1.3, 7.0, t_gas, PhysicalConstants::default()).unwrap();
            let m = pressure_map(&g, p0, sigma, t).unwrap();
            prop_assert!((m.gamma_t - m.pressure_ratio(&g)).abs() <= 1e-14 * m.gamma_t);
        }
    }
}
