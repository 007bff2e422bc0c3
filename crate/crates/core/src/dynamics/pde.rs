// SPDX-License-Identifier: Apache-2.0

//! Finite-difference residuals of the characteristic-function equations
//! `d_t chi = (lambda / M) . grad_mu chi + G(mu, chi)`.
//!
//! The solution is sampled on a `(t, s)` grid with `mu = mu0 + s lambda_hat`,
//! so the transport term is `(|lambda| / M) d_s chi`. Central differences make
//! the residual of an exact solution shrink like `h^2`.

use num_complex::Complex64;

use super::DecoherenceChannelSet;
use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::units::Vec3;

/// Sampling window in `(t, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualGrid {
    pub lambda: Vec3,
    pub mu0: Vec3,
    pub s_range: (f64, f64),
    pub t_range: (f64, f64),
    pub n_t: usize,
    pub n_s: usize,
}

impl ResidualGrid {
    fn direction(&self) -> Vec3 {
        let norm = self.lambda.norm();
        if norm > 0.0 {
            self.lambda / norm
        } else {
            Vec3::z()
        }
    }

    fn refined(&self) -> Self {
        ResidualGrid {
            n_t: 2 * self.n_t - 1,
            n_s: 2 * self.n_s - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeResidual {
    /// Largest residual on the requested grid.
    pub max_residual: f64,
    /// Largest residual with both spacings halved.
    pub refined_residual: f64,
    /// `max_residual / refined_residual`; close to 4 for second-order differences.
    pub richardson_ratio: f64,
    /// False when the ratio says the grid is not yet in the asymptotic regime.
    pub asymptotic: bool,
}

/// Local terms of the equations for `set`:
/// `G_i = sum_j Gamma^{ij} Phi^{ij}(mu) chi_j - (sum_j Gamma^{ji}) chi_i`.
pub fn cf_generator(set: &DecoherenceChannelSet) -> impl Fn(&Vec3, &[Complex64]) -> Vec<Complex64> + Sync + '_ {
    move |mu, chi| {
        let n = set.len();
        (0..n)
            .map(|i| {
                let gain: Complex64 = (0..n)
                    .filter(|&j| set.gamma(i, j) != 0.0)
                    .map(|j| set.phi(i, j).eval(mu, set.hbar()) * chi[j] * set.gamma(i, j))
                    .sum();
                gain - chi[i] * set.out_rate(i)
            })
            .collect()
    }
}

fn max_residual<S, G>(solution: &S, generator: &G, mass: f64, grid: &ResidualGrid, exec: Execution) -> Result<f64>
where
    S: Fn(&Vec3, f64) -> Result<Vec<Complex64>> + Sync,
    G: Fn(&Vec3, &[Complex64]) -> Vec<Complex64> + Sync,
{
    if grid.n_t < 3 || grid.n_s < 3 {
        return Err(Error::invalid("grid", "at least three points per axis are required"));
    }
    let dir = grid.direction();
    let (t0, t1) = grid.t_range;
    let (s0, s1) = grid.s_range;
    let ht = (t1 - t0) / (grid.n_t - 1) as f64;
    let hs = (s1 - s0) / (grid.n_s - 1) as f64;
    let point = |m: usize| grid.mu0 + dir * (s0 + hs * m as f64);
    let values: Vec<Result<Vec<Complex64>>> = map_indices(exec, grid.n_t * grid.n_s, |idx| {
        let (k, m) = (idx / grid.n_s, idx % grid.n_s);
        solution(&point(m), t0 + ht * k as f64)
    });
    let values: Vec<Vec<Complex64>> = values.into_iter().collect::<Result<_>>()?;
    let at = |k: usize, m: usize| &values[k * grid.n_s + m];
    let speed = grid.lambda.norm() / mass;

    let mut worst: f64 = 0.0;
    for k in 1..grid.n_t - 1 {
        for m in 1..grid.n_s - 1 {
            let local = generator(&point(m), at(k, m));
            for (c, g) in local.iter().enumerate() {
                let dt = (at(k + 1, m)[c] - at(k - 1, m)[c]) / (2.0 * ht);
                let ds = (at(k, m + 1)[c] - at(k, m - 1)[c]) / (2.0 * hs);
                worst = worst.max((dt - ds * speed - g).norm());
            }
        }
    }
    Ok(worst)
}

/// Residual of `solution(mu, t)` on `grid` and on the grid refined by two.
pub fn pde_residual<S, G>(solution: S, generator: G, mass: f64, grid: &ResidualGrid, exec: Execution) -> Result<PdeResidual>
where
    S: Fn(&Vec3, f64) -> Result<Vec<Complex64>> + Sync,
    G: Fn(&Vec3, &[Complex64]) -> Vec<Complex64> + Sync,
{
    let coarse = max_residual(&solution, &generator, mass, grid, exec)?;
    let fine = max_residual(&solution, &generator, mass, &grid.refined(), exec)?;
    let ratio = coarse / fine;
    Ok(PdeResidual {
        max_residual: coarse,
        refined_residual: fine,
        richardson_ratio: ratio,
        asymptotic: ratio > 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_flight_is_second_order() {
        // chi(mu, t) = f(mu + lambda t / M) solves the transport part exactly.
        let lambda = Vec3::new(0.0, 0.0, 1.5);
        let mass = 2.0;
        let solution = |mu: &Vec3, t: f64| Ok(vec![Complex64::new(0.0, (mu + lambda * (t / mass)).z).exp()]);
        let generator = |_: &Vec3, _: &[Complex64]| vec![Complex64::new(0.0, 0.0)];
        let grid = ResidualGrid {
            lambda,
            mu0: Vec3::zeros(),
            s_range: (-1.0, 1.0),
            t_range: (0.0, 1.0),
            n_t: 33,
            n_s: 33,
        };
        let r = pde_residual(solution, generator, mass, &grid, Execution::Sequential).unwrap();
        assert!(r.max_residual < 1e-3);
        assert!(r.asymptotic, "{r:?}");
    }
}
