// SPDX-License-Identifier: Apache-2.0

//! Analytic solutions for the characteristic functions `chi_i(lambda, mu, t)`.
//!
//! The initial data are given as functions `chi_i(lambda, mu, 0)`; free flight
//! enters through the shift `mu -> mu + lambda t / M`.

use num_complex::Complex64;

use super::DecoherenceChannelSet;
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::units::Vec3;

/// Initial characteristic function `chi(lambda, mu, 0)`.
pub type InitialCf<'a> = &'a (dyn Fn(&Vec3, &Vec3) -> Complex64 + Sync);

const FEED_TOLERANCE: Tolerance = Tolerance {
    rel: 1e-12,
    abs: 1e-300,
    max_subdivisions: 4096,
};

/// `integral_{u1}^{u2} (1 - Phi^{ii}(mu + lambda u / M)) du`.
pub(crate) fn decay_integral(set: &DecoherenceChannelSet, i: usize, lambda: &Vec3, mu: &Vec3, u1: f64, u2: f64) -> Result<Complex64> {
    let v = lambda / set.mass();
    let line = set.phi(i, i).line_integral(mu, &v, u1, u2, set.hbar())?;
    Ok(Complex64::new(u2 - u1, 0.0) - line)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("t", "must be finite and nonnegative"))
    }
}

/// Elastic channels: every channel decays independently.
pub fn elastic_cf_propagate(
    set: &DecoherenceChannelSet,
    chi0: &[InitialCf<'_>],
    lambda: &Vec3,
    mu: &Vec3,
    t: f64,
) -> Result<Vec<Complex64>> {
    set.require_elastic("gamma")?;
    check_time(t)?;
    if chi0.len() != set.len() {
        return Err(Error::invalid("chi0", "one initial function per channel is required"));
    }
    let shifted = mu + lambda * (t / set.mass());
    (0..set.len())
        .map(|i| {
            let decay = decay_integral(set, i, lambda, mu, 0.0, t)?;
            Ok(chi0[i](lambda, &shifted) * (-set.gamma(i, i) * decay).exp())
        })
        .collect()
}

fn require_two_level(set: &DecoherenceChannelSet) -> Result<()> {
    if set.len() != 2 {
        return Err(Error::invalid("gamma", "two channels are required"));
    }
    if set.gamma(1, 0) != 0.0 {
        return Err(Error::invalid("gamma", "the upward rate from channel 1 to channel 2 must vanish"));
    }
    Ok(())
}

/// Two channels where the upper level (index 1) decays into the lower one
/// (index 0) but not back. Returns `[chi_lower, chi_upper]`.
pub fn twolevel_inelastic_propagate(
    set: &DecoherenceChannelSet,
    chi0_lower: InitialCf<'_>,
    chi0_upper: InitialCf<'_>,
    lambda: &Vec3,
    mu: &Vec3,
    t: f64,
) -> Result<[Complex64; 2]> {
    twolevel_inelastic_propagate_with(set, chi0_lower, chi0_upper, lambda, mu, t, FEED_TOLERANCE)
}

pub fn twolevel_inelastic_propagate_with(
    set: &DecoherenceChannelSet,
    chi0_lower: InitialCf<'_>,
    chi0_upper: InitialCf<'_>,
    lambda: &Vec3,
    mu: &Vec3,
    t: f64,
    tol: Tolerance,
) -> Result<[Complex64; 2]> {
    require_two_level(set)?;
    check_time(t)?;
    let shifted = mu + lambda * (t / set.mass());
    let c1 = chi0_lower(lambda, &shifted);
    let c2 = chi0_upper(lambda, &shifted);
    let k = twolevel_factors(set, lambda, mu, t, tol)?;
    Ok([c1 * k.lower + c2 * k.feed, c2 * k.upper])
}

/// `chi_lower = lower chi0_lower + feed chi0_upper`, `chi_upper = upper chi0_upper`,
/// all initial data taken at the shifted `mu`.
struct TwoLevelFactors {
    lower: Complex64,
    feed: Complex64,
    upper: Complex64,
}

fn twolevel_factors(set: &DecoherenceChannelSet, lambda: &Vec3, mu: &Vec3, t: f64, tol: Tolerance) -> Result<TwoLevelFactors> {
    let g11 = set.gamma(0, 0);
    let g12 = set.gamma(0, 1);
    let g22 = set.gamma(1, 1);
    let d1_total = decay_integral(set, 0, lambda, mu, 0.0, t)?;
    let d2_total = decay_integral(set, 1, lambda, mu, 0.0, t)?;
    let k_lower = (-g11 * d1_total).exp();
    let k_upper = (-g12 * t - g22 * d2_total).exp();

    let feed = if g12 == 0.0 || t == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        let v = lambda / set.mass();
        let phi12 = set.phi(0, 1);
        let hbar = set.hbar();
        let mut failure = None;
        // u = t - t' is the time left after the jump into the lower level.
        let est = quadrature::integrate(0.0, t, tol, |u| {
            let inner = (|| -> Result<Complex64> {
                let d1 = decay_integral(set, 0, lambda, mu, 0.0, u)?;
                let d2 = d2_total - decay_integral(set, 1, lambda, mu, 0.0, u)?;
                let x = mu + v * u;
                Ok((-g11 * d1 - g12 * (t - u) - g22 * d2).exp() * phi12.eval(&x, hbar))
            })();
            inner.unwrap_or_else(|e| {
                failure.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            })
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        est.value * g12
    };
    Ok(TwoLevelFactors {
        lower: k_lower,
        feed,
        upper: k_upper,
    })
}

/// Decoherence kernel per initial channel at position separation `sep`.
///
/// For uniform initial data `chi0_j = p_j`, the interference term is
/// `sum_j p_j K_j`. Elastic channels give `K_i = exp(-Gamma^{ii} int (1 - Phi^{ii}))`;
/// a two-level system with one-way decay also carries the feed term.
pub fn decoherence_kernel(set: &DecoherenceChannelSet, sep: &Vec3, t: f64, lambda: &Vec3) -> Result<Vec<Complex64>> {
    check_time(t)?;
    if set.is_elastic() {
        return (0..set.len())
            .map(|i| Ok((-set.gamma(i, i) * decay_integral(set, i, lambda, sep, 0.0, t)?).exp()))
            .collect();
    }
    require_two_level(set).map_err(|_| {
        Error::invalid(
            "gamma",
            "the kernel needs elastic channels or two levels with one-way decay",
        )
    })?;
    let k = twolevel_factors(set, lambda, sep, t, FEED_TOLERANCE)?;
    Ok(vec![k.lower, k.feed + k.upper])
}
