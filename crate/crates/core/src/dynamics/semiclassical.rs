// SPDX-License-Identifier: Apache-2.0

//! Internal density matrices on a one-dimensional momentum grid.
//!
//! For every bin `b` the state holds `rho_b`, an `n x n` density over the
//! internal channels, normalised so that `sum_b Tr rho_b dp = 1`. Collisions
//! enter through kernels `K_e[b][q]` for operator entries `e = (i, j, k, l)`:
//! bin `b - q` feeds bin `b` with `K rho_{b-q}(j, l)` into element `(i, k)`,
//! and the matching loss is the anticommutator with
//! `Lambda_b = sum_{e: k = i} sum_q K_e[b + q][q] |l><j|`.
//! Kernel values already include the bin width.

use errorfunctions::RealErrorFunctions;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::DecoherenceChannelSet;
use crate::error::{Error, Result};

/// Uniform bins `[p_min + b dp, p_min + (b + 1) dp)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    pub p_min: f64,
    pub dp: f64,
    pub bins: usize,
}

impl MomentumGrid {
    pub fn new(p_min: f64, p_max: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(p_max > p_min) || !p_min.is_finite() || !p_max.is_finite() {
            return Err(Error::invalid("grid", "needs bins > 0 and finite p_max > p_min"));
        }
        Ok(MomentumGrid {
            p_min,
            dp: (p_max - p_min) / bins as f64,
            bins,
        })
    }

    pub fn center(&self, b: usize) -> f64 {
        self.p_min + (b as f64 + 0.5) * self.dp
    }

    pub fn bin_of(&self, p: f64) -> Option<usize> {
        let b = ((p - self.p_min) / self.dp).floor();
        (b >= 0.0 && b < self.bins as f64).then_some(b as usize)
    }
}

/// Discretised collision kernels and the internal Hamiltonian.
#[derive(Debug, Clone)]
pub struct SemiclassicalKernels {
    grid: MomentumGrid,
    n: usize,
    entries: Vec<[usize; 4]>,
    max_offset: usize,
    /// `values[e][(b + m) * (2m + 1) + (q + m)]` for destination bins `b` in `-m..bins + m`.
    values: Vec<Vec<Complex64>>,
    loss: Vec<DMatrix<Complex64>>,
    hamiltonian: DMatrix<Complex64>,
    hbar: f64,
    /// Largest tolerated cumulative probability loss through the grid edges.
    pub leak_bound: f64,
}

impl SemiclassicalKernels {
    /// Builds kernels from `f(p_dest, q) -> [K_e]`, `p_dest` the destination
    /// bin centre and `q` the transfer, both on bin units times `dp`.
    pub fn from_fn<F>(grid: MomentumGrid, n: usize, entries: Vec<[usize; 4]>, max_offset: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Vec<Complex64>,
    {
        if entries.iter().flatten().any(|&x| x >= n) {
            return Err(Error::invalid("entries", "channel index out of range"));
        }
        let m = max_offset as i64;
        let width = 2 * max_offset + 1;
        let ext = grid.bins + 2 * max_offset;
        let mut values = vec![vec![Complex64::new(0.0, 0.0); ext * width]; entries.len()];
        for be in 0..ext {
            let p_dest = grid.p_min + (be as f64 - m as f64 + 0.5) * grid.dp;
            for qi in 0..width {
                let q = (qi as i64 - m) as f64 * grid.dp;
                let k = f(p_dest, q);
                if k.len() != entries.len() {
                    return Err(Error::invalid("kernels", "one value per entry is required"));
                }
                for (e, v) in k.into_iter().enumerate() {
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::invalid("kernels", "values must be finite"));
                    }
                    values[e][be * width + qi] = v;
                }
            }
        }
        let mut loss = vec![DMatrix::zeros(n, n); grid.bins];
        for (b, lambda) in loss.iter_mut().enumerate() {
            for (e, &[i, j, k, l]) in entries.iter().enumerate() {
                if k != i {
                    continue;
                }
                for qi in 0..width {
                    // destination b + q lives at extended index b + q + m = b + qi
                    lambda[(l, j)] += values[e][(b + qi) * width + qi];
                }
            }
        }
        Ok(SemiclassicalKernels {
            grid,
            n,
            entries,
            max_offset,
            values,
            loss,
            hamiltonian: DMatrix::zeros(n, n),
            hbar: 1.0,
            leak_bound: 1e-6,
        })
    }

    /// Classical kernels of `set` projected on one momentum axis: channel
    /// `j` jumps to `i` at rate `Gamma^{ij}` with Gaussian kicks integrated
    /// over each bin and renormalised over `|q| <= max_offset`.
    pub fn classical(set: &DecoherenceChannelSet, grid: MomentumGrid, axis: usize, max_offset: usize) -> Result<Self> {
        if axis > 2 {
            return Err(Error::invalid("axis", "must be 0, 1 or 2"));
        }
        let n = set.len();
        let mut entries = Vec::new();
        let mut masses = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if set.gamma(i, j) == 0.0 {
                    continue;
                }
                let g = set.phi(i, j).as_gaussian().ok_or_else(|| {
                    Error::invalid("phi", "grid kernels need Gaussian transfer densities")
                })?;
                let w = bin_masses(g.mean[axis], g.std[axis], grid.dp, max_offset);
                entries.push([i, j, i, j]);
                masses.push(w.into_iter().map(|x| x * set.gamma(i, j)).collect::<Vec<_>>());
            }
        }
        let m = max_offset as f64;
        let kernels = SemiclassicalKernels::from_fn(grid, n, entries, max_offset, |_, q| {
            let qi = (q / grid.dp + m).round() as usize;
            masses.iter().map(|w| Complex64::new(w[qi], 0.0)).collect()
        })?;
        kernels.with_hbar(set.hbar())
    }

    pub fn with_hamiltonian(mut self, h: DMatrix<Complex64>) -> Result<Self> {
        if h.nrows() != self.n || h.ncols() != self.n {
            return Err(Error::invalid("hamiltonian", "shape must match the channel count"));
        }
        if (&h - h.adjoint()).norm() > 1e-12 * h.norm().max(1.0) {
            return Err(Error::invalid("hamiltonian", "must be Hermitian"));
        }
        self.hamiltonian = h;
        Ok(self)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::invalid("hbar", "must be positive"));
        }
        self.hbar = hbar;
        Ok(self)
    }

    pub fn grid(&self) -> MomentumGrid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.n
    }
}

fn erf(x: f64) -> f64 {
    RealErrorFunctions::erf(x)
}

fn erfc(x: f64) -> f64 {
    RealErrorFunctions::erfc(x)
}

/// Probability of a Gaussian kick landing in each offset bin `-m..=m`,
/// renormalised to one.
fn bin_masses(mean: f64, std: f64, dp: f64, m: usize) -> Vec<f64> {
    let width = 2 * m + 1;
    let mut w = vec![0.0; width];
    if std == 0.0 {
        let q = (mean / dp).round().clamp(-(m as f64), m as f64);
        w[(q + m as f64) as usize] = 1.0;
        return w;
    }
    let scale = std * std::f64::consts::SQRT_2;
    for (qi, slot) in w.iter_mut().enumerate() {
        let centre = (qi as f64 - m as f64) * dp;
        let a = (centre - 0.5 * dp - mean) / scale;
        let b = (centre + 0.5 * dp - mean) / scale;
        *slot = if a >= 0.0 {
            0.5 * (erfc(a) - erfc(b))
        } else if b <= 0.0 {
            0.5 * (erfc(-b) - erfc(-a))
        } else {
            0.5 * (erf(b) - erf(a))
        };
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

#[derive(Debug, Clone)]
pub struct SemiclassicalState {
    pub grid: MomentumGrid,
    pub rho: Vec<DMatrix<Complex64>>,
    pub t: f64,
    /// Probability that has left through the grid edges so far.
    pub leaked: f64,
}

impl SemiclassicalState {
    /// All probability in the bin containing `p`, with internal state `rho`.
    pub fn localized(grid: MomentumGrid, p: f64, internal: DMatrix<Complex64>) -> Result<Self> {
        let b = grid
            .bin_of(p)
            .ok_or_else(|| Error::invalid("p", "initial momentum is off the grid"))?;
        let tr = internal.trace();
        if (tr - 1.0).norm() > 1e-12 {
            return Err(Error::invalid("rho", "internal state must have unit trace"));
        }
        let n = internal.nrows();
        let mut rho = vec![DMatrix::zeros(n, n); grid.bins];
        rho[b] = internal.map(|z| z / grid.dp);
        Ok(SemiclassicalState {
            grid,
            rho,
            t: 0.0,
            leaked: 0.0,
        })
    }

    pub fn trace(&self) -> f64 {
        self.rho.iter().map(|r| r.trace().re).sum::<f64>() * self.grid.dp
    }

    /// Probability of channel `i` in every bin.
    pub fn bin_probabilities(&self, i: usize) -> Vec<f64> {
        self.rho.iter().map(|r| r[(i, i)].re * self.grid.dp).collect()
    }

    /// Internal density matrix integrated over momentum.
    pub fn internal(&self) -> DMatrix<Complex64> {
        let n = self.rho[0].nrows();
        self.rho.iter().fold(DMatrix::zeros(n, n), |acc, r| acc + r) * Complex64::new(self.grid.dp, 0.0)
    }
}

fn derivative(kernels: &SemiclassicalKernels, rho: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
    let g = kernels.grid;
    let m = kernels.max_offset as i64;
    let width = 2 * kernels.max_offset + 1;
    let h = &kernels.hamiltonian;
    let minus_i_over_hbar = Complex64::new(0.0, -1.0 / kernels.hbar);
    (0..g.bins)
        .map(|b| {
            let r = &rho[b];
            let lambda = &kernels.loss[b];
            let mut d = (h * r - r * h) * minus_i_over_hbar - (lambda * r + r * lambda) * Complex64::new(0.5, 0.0);
            let be = b + kernels.max_offset;
            for (e, &[i, j, k, l]) in kernels.entries.iter().enumerate() {
                let row = &kernels.values[e][be * width..(be + 1) * width];
                for (qi, kv) in row.iter().enumerate() {
                    let src = b as i64 - (qi as i64 - m);
                    if src >= 0 && (src as usize) < g.bins {
                        d[(i, k)] += kv * rho[src as usize][(j, l)];
                    }
                }
            }
            d
        })
        .collect()
}

fn axpy(base: &[DMatrix<Complex64>], k: &[DMatrix<Complex64>], s: f64) -> Vec<DMatrix<Complex64>> {
    base.iter().zip(k).map(|(a, d)| a + d * Complex64::new(s, 0.0)).collect()
}

/// One classical Runge–Kutta step of length `dt`.
///
/// Fails with [`Error::GridLeak`] once the cumulative loss through the grid
/// edges exceeds `kernels.leak_bound`.
pub fn semiclassical_step(state: &SemiclassicalState, kernels: &SemiclassicalKernels, dt: f64) -> Result<SemiclassicalState> {
    if state.grid != kernels.grid || state.rho[0].nrows() != kernels.n {
        return Err(Error::invalid("state", "grid or channel count differs from the kernels"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let k1 = derivative(kernels, &state.rho);
    let k2 = derivative(kernels, &axpy(&state.rho, &k1, 0.5 * dt));
    let k3 = derivative(kernels, &axpy(&state.rho, &k2, 0.5 * dt));
    let k4 = derivative(kernels, &axpy(&state.rho, &k3, dt));
    let rho: Vec<DMatrix<Complex64>> = (0..state.rho.len())
        .map(|b| &state.rho[b] + (&k1[b] + (&k2[b] + &k3[b]) * Complex64::new(2.0, 0.0) + &k4[b]) * Complex64::new(dt / 6.0, 0.0))
        .collect();
    let mut next = SemiclassicalState {
        grid: state.grid,
        rho,
        t: state.t + dt,
        leaked: state.leaked,
    };
    next.leaked += (state.trace() - next.trace()).max(0.0);
    if next.leaked > kernels.leak_bound {
        return Err(Error::GridLeak {
            leaked: next.leaked,
            bound: kernels.leak_bound,
        });
    }
    Ok(next)
}
