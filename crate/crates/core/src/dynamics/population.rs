// SPDX-License-Identifier: Apache-2.0

//! Classical channel populations, `dp_i/dt = sum_j Gamma^{ij} p_j - sum_j Gamma^{ji} p_i`.

use nalgebra::{DMatrix, DVector};

use super::DecoherenceChannelSet;
use crate::error::{Error, Result};

/// Generator with columns summing to zero; elastic rates drop out.
pub fn population_generator(set: &DecoherenceChannelSet) -> DMatrix<f64> {
    let n = set.len();
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                g[(i, j)] = set.gamma(i, j);
                g[(j, j)] -= set.gamma(i, j);
            }
        }
    }
    g
}

/// Populations at time `t` from the weights of `set`.
pub fn population_ode(set: &DecoherenceChannelSet, t: f64) -> Result<Vec<f64>> {
    population_from(set, set.weights(), t)
}

/// Populations at time `t` from arbitrary initial populations.
pub fn population_from(set: &DecoherenceChannelSet, initial: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", "must be finite and nonnegative"));
    }
    if initial.len() != set.len() {
        return Err(Error::invalid("p", "one initial population per channel is required"));
    }
    let propagator = (population_generator(set) * t).exp();
    let p = propagator * DVector::from_column_slice(initial);
    Ok(p.iter().copied().collect())
}
