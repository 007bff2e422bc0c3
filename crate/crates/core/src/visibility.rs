// SPDX-License-Identifier: Apache-2.0

//! Far-field double-slit visibility from the channel decoherence factors.

use num_complex::Complex64;

use crate::channels::{pressure_map, GasModel};
use crate::dynamics::{CharacteristicFunction, DecoherenceChannelSet};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::quadrature::{self, Tolerance};
use crate::units::Vec3;

/// `(alpha, beta)` = real and imaginary parts of `integral_0^1 Phi(d (s - 1)) ds`.
pub fn alpha_beta(phi: &CharacteristicFunction, d: &Vec3, hbar: f64) -> Result<(f64, f64)> {
    let v = phi.line_integral_with(&(-d), d, 0.0, 1.0, hbar, Tolerance::new(1e-12, 1e-300))?;
    Ok((v.re, v.im))
}

/// One elastic channel as it enters the visibility sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticChannel {
    pub weight: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ElasticChannel {
    /// Markovian decay rate `Gamma (1 - alpha)`.
    pub fn decay_rate(&self) -> f64 {
        self.gamma * (1.0 - self.alpha)
    }

    fn factor(&self, gamma_t: f64) -> Complex64 {
        (-Complex64::new(1.0 - self.alpha, -self.beta) * gamma_t).exp()
    }
}

pub fn elastic_channels(set: &DecoherenceChannelSet, d: &Vec3) -> Result<Vec<ElasticChannel>> {
    set.require_elastic("gamma")?;
    (0..set.len())
        .map(|i| {
            let (alpha, beta) = alpha_beta(set.phi(i, i), d, set.hbar())?;
            Ok(ElasticChannel {
                weight: set.weights()[i],
                gamma: set.gamma(i, i),
                alpha,
                beta,
            })
        })
        .collect()
}

/// `|sum_i p_i exp(-Gamma_i (1 - alpha_i - i beta_i) t)|`.
pub fn visibility_from_channels(channels: &[ElasticChannel], t: f64) -> f64 {
    channels
        .iter()
        .map(|c| c.factor(c.gamma * t) * c.weight)
        .sum::<Complex64>()
        .norm()
}

pub fn visibility_elastic(set: &DecoherenceChannelSet, d: &Vec3, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(visibility_from_channels(&elastic_channels(set, d)?, t))
}

/// Markovian single-channel decays: `(fastest, slowest)`.
pub fn markov_envelopes(channels: &[ElasticChannel], t: f64) -> (f64, f64) {
    let rates = channels.iter().map(ElasticChannel::decay_rate);
    let fastest = rates.clone().fold(f64::NEG_INFINITY, f64::max);
    let slowest = rates.fold(f64::INFINITY, f64::min);
    ((-fastest * t).exp(), (-slowest * t).exp())
}

/// Two channels written out with the cosine cross term.
#[allow(clippy::too_many_arguments)]
pub fn visibility_twolevel_closed(
    p1: f64,
    p2: f64,
    gamma11: f64,
    gamma22: f64,
    ab1: (f64, f64),
    ab2: (f64, f64),
    t: f64,
) -> f64 {
    let a = (-gamma11 * (1.0 - ab1.0) * t).exp();
    let b = (-gamma22 * (1.0 - ab2.0) * t).exp();
    let cross = 2.0 * p1 * p2 * a * b * ((gamma11 * ab1.1 - gamma22 * ab2.1) * t).cos();
    (p1 * p1 * a * a + p2 * p2 * b * b + cross).max(0.0).sqrt()
}

/// Two levels, all weight initially in the upper one, which decays into the
/// lower one and scatters nowhere else; the lower level scatters elastically.
#[derive(Debug, Clone)]
pub struct InelasticTwoLevel {
    pub gamma11: f64,
    pub gamma12: f64,
    pub phi11: CharacteristicFunction,
    pub phi12: CharacteristicFunction,
    pub hbar: f64,
}

impl InelasticTwoLevel {
    pub fn new(
        gamma11: f64,
        gamma12: f64,
        phi11: impl Into<CharacteristicFunction>,
        phi12: impl Into<CharacteristicFunction>,
        hbar: f64,
    ) -> Result<Self> {
        for (name, g) in [("gamma11", gamma11), ("gamma12", gamma12)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::invalid(name, "must be finite and nonnegative"));
            }
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::invalid("hbar", "must be positive"));
        }
        let (phi11, phi12) = (phi11.into(), phi12.into());
        phi11.validate(hbar)?;
        phi12.validate(hbar)?;
        Ok(InelasticTwoLevel {
            gamma11,
            gamma12,
            phi11,
            phi12,
            hbar,
        })
    }

    /// Reads the rates and characteristic functions of a two-channel set
    /// with `Gamma^{21} = Gamma^{22} = 0`.
    pub fn from_set(set: &DecoherenceChannelSet) -> Result<Self> {
        if set.len() != 2 || set.gamma(1, 0) != 0.0 || set.gamma(1, 1) != 0.0 {
            return Err(Error::invalid("gamma", "needs two channels with Gamma^21 = Gamma^22 = 0"));
        }
        InelasticTwoLevel::new(
            set.gamma(0, 0),
            set.gamma(0, 1),
            set.phi(0, 0).clone(),
            set.phi(0, 1).clone(),
            set.hbar(),
        )
    }

    /// The lower channel alone.
    pub fn elastic_reference(&self, d: &Vec3) -> Result<ElasticChannel> {
        let (alpha, beta) = alpha_beta(&self.phi11, d, self.hbar)?;
        Ok(ElasticChannel {
            weight: 1.0,
            gamma: self.gamma11,
            alpha,
            beta,
        })
    }
}

/// Visibility when the upper level decays into the lower one on the way.
pub fn visibility_inelastic(sys: &InelasticTwoLevel, d: &Vec3, t: f64) -> Result<f64> {
    visibility_inelastic_with(sys, d, t, Tolerance::new(1e-12, 1e-300))
}

pub fn visibility_inelastic_with(sys: &InelasticTwoLevel, d: &Vec3, t: f64, tol: Tolerance) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let (g11, g12) = (sys.gamma11, sys.gamma12);
    let direct = Complex64::new((-g12 * t).exp(), 0.0);
    if g12 == 0.0 {
        return Ok(direct.norm());
    }
    let x0 = -d;
    let v = d / t;
    let mut failure = None;
    // exp(-G11 t int_0^1 (1 - Phi11)) exp(+G11 int_0^{t'} (1 - Phi11)) combined
    // into exp(-G11 int_{t'}^t (1 - Phi11)), which cannot overflow.
    let feed = quadrature::integrate(0.0, t, tol, |tp| {
        match sys.phi11.line_integral(&x0, &v, tp, t, sys.hbar) {
            Ok(line) => {
                let remaining = Complex64::new(t - tp, 0.0) - line;
                (-g12 * tp - g11 * remaining).exp() * sys.phi12.eval(&(x0 + v * tp), sys.hbar)
            }
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((direct + feed.value * g12).norm())
}

/// Same visibility through the decoherence kernel of a two-level set at
/// zero separation and `lambda = -M d / t`.
pub fn visibility_from_kernel(set: &DecoherenceChannelSet, d: &Vec3, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(set.weights().iter().sum());
    }
    let lambda = -d * (set.mass() / t);
    let k = crate::dynamics::propagate::decoherence_kernel(set, &Vec3::zeros(), t, &lambda)?;
    Ok(k.iter()
        .zip(set.weights())
        .map(|(k, p)| k * p)
        .sum::<Complex64>()
        .norm())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("t", "must be finite and nonnegative"))
    }
}

/// Slit and flight parameters for the far-field test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitGeometry {
    pub d: Vec3,
    pub sigma_slit: f64,
    pub mass: f64,
    pub p0: Vec3,
    pub t_flight: f64,
    pub hbar: f64,
}

impl SlitGeometry {
    pub fn new(d: Vec3, sigma_slit: f64, mass: f64, p0: Vec3, t_flight: f64, hbar: f64) -> Result<Self> {
        if !(d.norm() > 0.0 && d.iter().all(|x| x.is_finite())) {
            return Err(Error::invalid("d", "slit separation must be nonzero and finite"));
        }
        for (name, v, strict) in [("sigma_slit", sigma_slit, false), ("mass", mass, true), ("t_flight", t_flight, true), ("hbar", hbar, true)] {
            if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
                return Err(Error::invalid(name, "out of range"));
            }
        }
        Ok(SlitGeometry {
            d,
            sigma_slit,
            mass,
            p0,
            t_flight,
            hbar,
        })
    }

    /// Grating–detector distance `p_z t / M`.
    pub fn detector_distance(&self) -> f64 {
        self.p0.z * self.t_flight / self.mass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarField {
    pub ok: bool,
    pub margin: f64,
}

/// `margin = hbar t / (M max(sigma^2, sigma d))`, acceptable above 10.
pub fn far_field_check(geom: &SlitGeometry) -> FarField {
    let s = geom.sigma_slit;
    let scale = (s * s).max(s * geom.d.norm());
    let margin = if scale == 0.0 {
        f64::INFINITY
    } else {
        geom.hbar * geom.t_flight / (geom.mass * scale)
    };
    FarField {
        ok: margin > 10.0,
        margin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    Elastic,
    TwoLevel,
    Inelastic,
}

impl Formula {
    pub fn as_str(self) -> &'static str {
        match self {
            Formula::Elastic => "elastic",
            Formula::TwoLevel => "twolevel",
            Formula::Inelastic => "inelastic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abscissa {
    Time,
    Pressure,
}

impl Abscissa {
    pub fn as_str(self) -> &'static str {
        match self {
            Abscissa::Time => "t",
            Abscissa::Pressure => "p",
        }
    }
}

/// Sampled visibility with the settings that produced it. Values are raw,
/// not clipped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityCurve {
    pub abscissa: Abscissa,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub formula: Formula,
    pub parameters: Vec<(String, String)>,
    pub far_field: Option<FarField>,
}

impl VisibilityCurve {
    pub fn with_far_field(mut self, geom: &SlitGeometry) -> Self {
        self.far_field = Some(far_field_check(geom));
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn snapshot_elastic(channels: &[ElasticChannel], d: &Vec3) -> Vec<(String, String)> {
    let mut out = vec![("d".to_string(), format!("{} {} {}", d.x, d.y, d.z))];
    for (i, c) in channels.iter().enumerate() {
        out.push((
            format!("channel{i}"),
            format!("p={} gamma={} alpha={} beta={}", c.weight, c.gamma, c.alpha, c.beta),
        ));
    }
    out
}

pub fn elastic_curve(set: &DecoherenceChannelSet, d: &Vec3, times: &[f64], exec: Execution) -> Result<VisibilityCurve> {
    times.iter().try_for_each(|&t| check_time(t))?;
    let channels = elastic_channels(set, d)?;
    let v = map_slice(exec, times, |&t| visibility_from_channels(&channels, t));
    Ok(VisibilityCurve {
        abscissa: Abscissa::Time,
        x: times.to_vec(),
        v,
        formula: if channels.len() == 2 { Formula::TwoLevel } else { Formula::Elastic },
        parameters: snapshot_elastic(&channels, d),
        far_field: None,
    })
}

pub fn inelastic_curve(sys: &InelasticTwoLevel, d: &Vec3, times: &[f64], exec: Execution) -> Result<VisibilityCurve> {
    let v = map_slice(exec, times, |&t| visibility_inelastic(sys, d, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(VisibilityCurve {
        abscissa: Abscissa::Time,
        x: times.to_vec(),
        v,
        formula: Formula::Inelastic,
        parameters: vec![
            ("d".into(), format!("{} {} {}", d.x, d.y, d.z)),
            ("gamma11".into(), sys.gamma11.to_string()),
            ("gamma12".into(), sys.gamma12.to_string()),
            ("phi11".into(), format!("{:?}", sys.phi11)),
            ("phi12".into(), format!("{:?}", sys.phi12)),
        ],
        far_field: None,
    })
}

/// Visibility at fixed flight time as a function of gas pressure, with
/// `Gamma_i t = p / p0_i` and `p0_i = M k_b T / (P0 sigma_eff_i t)`.
pub fn visibility_vs_pressure(
    channels: &[ElasticChannel],
    gas: &GasModel,
    beam_momentum: f64,
    sigma_eff: &[f64],
    t_flight: f64,
    pressures: &[f64],
    exec: Execution,
) -> Result<VisibilityCurve> {
    if sigma_eff.len() != channels.len() {
        return Err(Error::invalid("sigma_eff", "one effective cross section per channel is required"));
    }
    if pressures.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::invalid("pressure", "must be finite and nonnegative"));
    }
    let p0: Vec<f64> = sigma_eff
        .iter()
        .map(|&s| pressure_map(gas, beam_momentum, s, t_flight).map(|m| m.p0_ref))
        .collect::<Result<_>>()?;
    let v = map_slice(exec, pressures, |&p| {
        channels
            .iter()
            .zip(&p0)
            .map(|(c, p0i)| c.factor(p / p0i) * c.weight)
            .sum::<Complex64>()
            .norm()
    });
    let mut parameters = snapshot_elastic(channels, &Vec3::zeros());
    parameters.retain(|(k, _)| k != "d");
    parameters.push(("t_flight".into(), t_flight.to_string()));
    parameters.push(("p0_ref".into(), format!("{p0:?}")));
    Ok(VisibilityCurve {
        abscissa: Abscissa::Pressure,
        x: pressures.to_vec(),
        v,
        formula: Formula::Elastic,
        parameters,
        far_field: None,
    })
}
