// SPDX-License-Identifier: Apache-2.0

//! Built-in parameter sets for the three reference visibility plots, with
//! `hbar = 1`, `M = 1`, `d = z_hat` and transfers along `z`.
//!
//! The width parameter of these sets is a variance. Read as a standard
//! deviation, the inelastic curve loses its dip and revival. The presets
//! therefore use [`SigmaConvention::Variance`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::dynamics::{DecoherenceChannelSet, GaussianCf, SigmaConvention};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::units::Vec3;
use crate::visibility::{
    elastic_channels, elastic_curve, inelastic_curve, markov_envelopes, visibility_from_channels, InelasticTwoLevel,
    VisibilityCurve,
};

/// Samples per curve.
pub const POINTS: usize = 400;

/// Time window of the inelastic plot.
pub const FIGURE3_T_MAX: f64 = 10.0;

/// Width convention of the presets.
pub const FIGURE_SIGMA: SigmaConvention = SigmaConvention::Variance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig1a,
    Fig1b,
    Fig3,
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1a" => Ok(FigureId::Fig1a),
            "1b" => Ok(FigureId::Fig1b),
            "3" => Ok(FigureId::Fig3),
            other => Err(Error::invalid("figure", format!("unknown figure `{other}`, expected 1a, 1b or 3"))),
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureId::Fig1a => "1a",
            FigureId::Fig1b => "1b",
            FigureId::Fig3 => "3",
        })
    }
}

pub fn slit_separation() -> Vec3 {
    Vec3::z()
}

/// Elastic channels with equal weights, `Gamma = 10` and the given means.
pub fn elastic_set(means: &[f64], sigma: f64, convention: SigmaConvention) -> Result<DecoherenceChannelSet> {
    let n = means.len();
    let mut set = DecoherenceChannelSet::new(vec![1.0 / n as f64; n], DMatrix::from_diagonal_element(n, n, 10.0), 1.0)?;
    for (i, &mu) in means.iter().enumerate() {
        set = set.with_phi(i, i, GaussianCf::along_z(mu, sigma, convention)?)?;
    }
    Ok(set)
}

pub fn figure1a_set() -> DecoherenceChannelSet {
    elastic_set(&[-0.2, 0.3], 0.1, FIGURE_SIGMA).expect("valid built-in parameters")
}

/// `n` channels with means equally spaced in `[-0.2, 0.3]`.
pub fn figure1b_set(n: usize) -> Result<DecoherenceChannelSet> {
    figure1b_set_with(n, FIGURE_SIGMA)
}

pub fn figure1b_set_with(n: usize, convention: SigmaConvention) -> Result<DecoherenceChannelSet> {
    if n < 2 {
        return Err(Error::invalid("n", "at least two channels"));
    }
    let means: Vec<f64> = (0..n).map(|i| -0.2 + 0.5 * i as f64 / (n - 1) as f64).collect();
    elastic_set(&means, 0.1, convention)
}

pub fn figure3_system() -> InelasticTwoLevel {
    let phi11 = GaussianCf::along_z(1.0, 1.0, FIGURE_SIGMA).expect("valid");
    let phi12 = GaussianCf::along_z(5.0, 3.0, FIGURE_SIGMA).expect("valid");
    InelasticTwoLevel::new(0.75, 1.75, phi11, phi12, 1.0).expect("valid built-in parameters")
}

/// `points` uniform samples of `[0, t_max]`.
pub fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect(),
    }
}

/// Time at which the slowest Markovian envelope of `set` has fallen to `e^-3`.
pub fn elastic_window(set: &DecoherenceChannelSet) -> Result<f64> {
    let ch = elastic_channels(set, &slit_separation())?;
    let slowest = ch.iter().map(|c| c.decay_rate()).fold(f64::INFINITY, f64::min);
    if !(slowest > 0.0) {
        return Err(Error::invalid("gamma", "no channel decays"));
    }
    Ok(3.0 / slowest)
}

/// A reference curve and its dashed Markovian companions.
#[derive(Debug, Clone)]
pub struct FigureData {
    pub id: FigureId,
    pub curve: VisibilityCurve,
    pub columns: Vec<&'static str>,
    /// Rows of `columns`, starting with `t` and `V`.
    pub rows: Vec<Vec<f64>>,
}

/// Departures from the built-in presets, for parameter sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureOverrides {
    /// Channel count of the multichannel plot.
    pub channels: usize,
    pub points: usize,
    /// End of the time window; the preset window when `None`.
    pub t_max: Option<f64>,
    pub convention: SigmaConvention,
}

impl Default for FigureOverrides {
    fn default() -> Self {
        FigureOverrides {
            channels: 8,
            points: POINTS,
            t_max: None,
            convention: FIGURE_SIGMA,
        }
    }
}

pub fn run_figure(id: FigureId, exec: Execution) -> Result<FigureData> {
    run_figure_with(id, &FigureOverrides::default(), exec)
}

pub fn run_figure_with(id: FigureId, o: &FigureOverrides, exec: Execution) -> Result<FigureData> {
    let d = slit_separation();
    if let Some(t) = o.t_max {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid("t_max", "must be positive and finite"));
        }
    }
    match id {
        FigureId::Fig1a | FigureId::Fig1b => {
            let set = if id == FigureId::Fig1a {
                elastic_set(&[-0.2, 0.3], 0.1, o.convention)?
            } else {
                figure1b_set_with(o.channels, o.convention)?
            };
            let t_max = match o.t_max {
                Some(t) => t,
                None => elastic_window(&set)?,
            };
            let times = time_grid(t_max, o.points);
            let curve = elastic_curve(&set, &d, &times, exec)?;
            let ch = elastic_channels(&set, &d)?;
            let rows = times
                .iter()
                .zip(&curve.v)
                .map(|(&t, &v)| {
                    let (low, high) = markov_envelopes(&ch, t);
                    vec![t, v, low, high]
                })
                .collect();
            Ok(FigureData {
                id,
                curve,
                columns: vec!["t", "V", "env_low", "env_high"],
                rows,
            })
        }
        FigureId::Fig3 => {
            let phi11 = GaussianCf::along_z(1.0, 1.0, o.convention)?;
            let phi12 = GaussianCf::along_z(5.0, 3.0, o.convention)?;
            let sys = InelasticTwoLevel::new(0.75, 1.75, phi11, phi12, 1.0)?;
            let times = time_grid(o.t_max.unwrap_or(FIGURE3_T_MAX), o.points);
            let curve = inelastic_curve(&sys, &d, &times, exec)?;
            let reference = [sys.elastic_reference(&d)?];
            let env = map_slice(exec, &times, |&t| visibility_from_channels(&reference, t));
            let rows = times
                .iter()
                .zip(&curve.v)
                .zip(&env)
                .map(|((&t, &v), &e)| vec![t, v, e])
                .collect();
            Ok(FigureData {
                id,
                curve,
                columns: vec!["t", "V", "env_elastic"],
                rows,
            })
        }
    }
}
