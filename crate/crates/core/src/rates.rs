// SPDX-License-Identifier: Apache-2.0

//! Jump functions, complex rate functions and the quantities built from
//! them: classical rates, momentum-transfer distributions and total rates,
//! rates for an immobile tracer, and the forward-scattering energy shift.
//!
//! Notation: `P` is the test-particle momentum, `Q` the momentum transfer,
//! `p` a gas momentum in the plane perpendicular to `Q`. Channel index order
//! follows the amplitudes: `L_ij` and `f_ij` take channel `j` to channel `i`.
//! Rates are per unit volume of `Q`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, UnitSphere};

use crate::channels::{
    energy_transfer, structure_factor_scalar, ChannelSpace, GasDistribution, GasModel,
    MaxwellBoltzmann,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::quadrature::{self, Estimate, Tolerance};
use crate::scattering::{sphere_rule, ScatteringAmplitudeModel};
use crate::units::{perpendicular_basis, Vec3};

/// Orders and tolerances for the product rules used in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuadrature {
    pub tol: Tolerance,
    /// Nodes per axis of the first evaluation; doubled until converged.
    pub initial_order: usize,
    pub max_order: usize,
}

impl Default for RateQuadrature {
    fn default() -> Self {
        RateQuadrature {
            tol: Tolerance::new(1e-8, 1e-300),
            initial_order: 32,
            max_order: 128,
        }
    }
}

/// Everything the jump functions depend on.
#[derive(Debug, Clone)]
pub struct JumpFunctionParams {
    pub gas: GasModel,
    pub model: Arc<dyn ScatteringAmplitudeModel>,
    pub channels: ChannelSpace,
    /// Gas momentum distribution; Maxwell–Boltzmann unless replaced.
    pub distribution: Arc<dyn GasDistribution>,
    pub quadrature: RateQuadrature,
}

impl JumpFunctionParams {
    pub fn new(
        gas: GasModel,
        model: Arc<dyn ScatteringAmplitudeModel>,
        channels: ChannelSpace,
    ) -> Result<Self> {
        if model.channels() != channels.len() {
            return Err(Error::invalid(
                "model",
                format!(
                    "amplitude model has {} channels but the channel space has {}",
                    model.channels(),
                    channels.len()
                ),
            ));
        }
        Ok(JumpFunctionParams {
            distribution: Arc::new(MaxwellBoltzmann::of(&gas)),
            gas,
            model,
            channels,
            quadrature: RateQuadrature::default(),
        })
    }

    pub fn with_distribution(mut self, distribution: Arc<dyn GasDistribution>) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn with_quadrature(mut self, quadrature: RateQuadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    fn check_channel(&self, name: &'static str, i: usize) -> Result<()> {
        if i >= self.channels.len() {
            return Err(Error::invalid(
                name,
                format!("channel {i} out of range (n = {})", self.channels.len()),
            ));
        }
        Ok(())
    }
}

/// Geometry attached to a fixed momentum transfer `Q`.
#[derive(Debug, Clone, Copy)]
struct Frame {
    q: Vec3,
    q_abs: f64,
    q_hat: Vec3,
    e1: Vec3,
    e2: Vec3,
}

impl Frame {
    fn new(q: &Vec3) -> Result<Self> {
        let q_abs = q.norm();
        let Some((e1, e2)) = perpendicular_basis(q) else {
            return Err(Error::invalid("Q", "momentum transfer must be nonzero and finite"));
        };
        Ok(Frame {
            q: *q,
            q_abs,
            q_hat: q / q_abs,
            e1,
            e2,
        })
    }

    fn lift(&self, p: &Vector2<f64>) -> Vec3 {
        self.e1 * p.x + self.e2 * p.y
    }
}

/// Pieces of `L_ij(p, P; Q)` for one channel pair and one `P`.
struct JumpKinematics {
    /// Coefficient of `Q_hat` in the argument of `mu`.
    along: f64,
    /// `-(m*/M) P_perp + (E_ij m*/Q^2) Q`, the `p`-independent part of
    /// both amplitude arguments apart from `-+ Q/2`.
    shift: Vec3,
    prefactor: f64,
}

impl JumpKinematics {
    fn new(params: &JumpFunctionParams, frame: &Frame, gap: f64, big_p: &Vec3) -> Self {
        let gas = &params.gas;
        let (m, big_m, ms) = (gas.gas_mass, gas.test_mass, gas.reduced_mass());
        let p_par = big_p.dot(&frame.q_hat);
        let p_perp = big_p - frame.q_hat * p_par;
        let along = (m / big_m) * p_par + (1.0 + m / big_m) * frame.q_abs / 2.0 + gap * m / frame.q_abs;
        let shift = -p_perp * (ms / big_m) + frame.q_hat * (gap * ms / frame.q_abs);
        let prefactor = (gas.n_gas * m / (ms * ms * frame.q_abs)).sqrt();
        JumpKinematics {
            along,
            shift,
            prefactor,
        }
    }

    fn amplitude_arguments(&self, params: &JumpFunctionParams, frame: &Frame, p3: &Vec3) -> (Vec3, Vec3) {
        let base = p3 * (params.gas.reduced_mass() / params.gas.gas_mass) + self.shift;
        let half = frame.q * 0.5;
        (base - half, base + half)
    }
}

/// Jump function `L_ij(p, P; Q)` with `p = p_perp.x e1 + p_perp.y e2`, where
/// `(e1, e2)` is the basis returned by [`perpendicular_basis`] for `Q`.
pub fn jump_function(
    params: &JumpFunctionParams,
    i: usize,
    j: usize,
    p_perp: &Vector2<f64>,
    big_p: &Vec3,
    q: &Vec3,
) -> Result<Complex64> {
    params.check_channel("i", i)?;
    params.check_channel("j", j)?;
    let frame = Frame::new(q)?;
    let kin = JumpKinematics::new(params, &frame, params.channels.gap(i, j), big_p);
    let p3 = frame.lift(p_perp);
    let mu = params.distribution.density(&(p3 + frame.q_hat * kin.along));
    let (pf, pi) = kin.amplitude_arguments(params, &frame, &p3);
    Ok(params.model.amplitude(i, j, &pf, &pi) * (kin.prefactor * mu.sqrt()))
}

/// The same jump function written through the Maxwell–Boltzmann dynamic
/// structure factor. Always uses the Maxwell–Boltzmann gas of `params.gas`,
/// whose density in the `Q_perp` plane is the two-dimensional marginal.
pub fn jump_function_structure_factor(
    params: &JumpFunctionParams,
    i: usize,
    j: usize,
    p_perp: &Vector2<f64>,
    big_p: &Vec3,
    q: &Vec3,
) -> Result<Complex64> {
    params.check_channel("i", i)?;
    params.check_channel("j", j)?;
    let frame = Frame::new(q)?;
    let gas = &params.gas;
    let ms = gas.reduced_mass();
    let gap = params.channels.gap(i, j);
    let mb = MaxwellBoltzmann::of(gas);
    let s = structure_factor_scalar(gas, frame.q_abs, energy_transfer(gas.test_mass, big_p, q) + gap);
    let weight = gas.n_gas / (ms * ms) * mb.in_plane_density(p_perp.norm_squared());
    let p3 = frame.lift(p_perp);
    let big_p_perp = big_p - frame.q_hat * big_p.dot(&frame.q_hat);
    let rel = gas.rel(&p3, &big_p_perp);
    let shift = frame.q_hat * (gap * ms / frame.q_abs);
    let pf = rel - frame.q * 0.5 + shift;
    let pi = rel + frame.q * 0.5 + shift;
    Ok(params.model.amplitude(i, j, &pf, &pi) * (weight * s).sqrt())
}

/// Node set for integrals over the `Q_perp` plane.
///
/// For a Gaussian gas the Gaussian factor of `L L*` is absorbed into
/// Gauss–Hermite weights; otherwise Gauss–Legendre covers the square of
/// half-width six momentum scales.
struct PlaneRule {
    nodes: Vec<(Vector2<f64>, f64)>,
    gaussian: Option<f64>,
}

impl PlaneRule {
    fn new(distribution: &dyn GasDistribution, order: usize) -> Self {
        match distribution.gaussian_width() {
            Some(w) => {
                let rule = quadrature::hermite(order);
                let mut nodes = Vec::with_capacity(order * order);
                for &(x, wx) in rule.iter() {
                    for &(y, wy) in rule.iter() {
                        nodes.push((Vector2::new(x, y) * w, wx * wy * w * w));
                    }
                }
                PlaneRule {
                    nodes,
                    gaussian: Some(w),
                }
            }
            None => {
                let half = 6.0 * distribution.momentum_scale();
                let rule = quadrature::legendre(order);
                let mut nodes = Vec::with_capacity(order * order);
                for &(x, wx) in rule.iter() {
                    for &(y, wy) in rule.iter() {
                        nodes.push((Vector2::new(x, y) * half, wx * wy * half * half));
                    }
                }
                PlaneRule {
                    nodes,
                    gaussian: None,
                }
            }
        }
    }

    /// `L_ij` at every node, divided by `exp(-p^2 / 2 w^2)` in the Gaussian case.
    fn jump_values(
        &self,
        params: &JumpFunctionParams,
        frame: &Frame,
        i: usize,
        j: usize,
        big_p: &Vec3,
    ) -> Vec<Complex64> {
        let kin = JumpKinematics::new(params, frame, params.channels.gap(i, j), big_p);
        let gaussian_factor = self.gaussian.map(|w| {
            let a = kin.along / w;
            kin.prefactor * PI.powf(-0.75) * w.powf(-1.5) * (-0.5 * a * a).exp()
        });
        self.nodes
            .iter()
            .map(|(p, _)| {
                let p3 = frame.lift(p);
                let (pf, pi) = kin.amplitude_arguments(params, frame, &p3);
                let f = params.model.amplitude(i, j, &pf, &pi);
                match gaussian_factor {
                    Some(g) => f * g,
                    None => {
                        let mu = params.distribution.density(&(p3 + frame.q_hat * kin.along));
                        f * (kin.prefactor * mu.sqrt())
                    }
                }
            })
            .collect()
    }

    fn pair(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        self.nodes
            .iter()
            .zip(a.iter().zip(b))
            .map(|((_, w), (x, y))| x * y.conj() * *w)
            .sum()
    }
}

/// A single complex rate `M^{jl}_{ik}(P, P'; Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRate {
    pub value: Complex64,
    pub error: f64,
    /// `(i, j, k, l)`.
    pub indices: [usize; 4],
    pub p: Vec3,
    pub p_prime: Vec3,
    pub q: Vec3,
    /// False when the energy gaps differ; the value is then exactly zero.
    pub selector_passed: bool,
}

/// `M^{jl}_{ik}(P, P'; Q) = chi * integral over Q_perp of L_ij(p, P - Q; Q) conj(L_kl(p, P' - Q; Q))`.
#[allow(clippy::too_many_arguments)]
pub fn complex_rate(
    params: &JumpFunctionParams,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    big_p: &Vec3,
    big_p_prime: &Vec3,
    q: &Vec3,
) -> Result<ComplexRate> {
    for (name, c) in [("i", i), ("j", j), ("k", k), ("l", l)] {
        params.check_channel(name, c)?;
    }
    let frame = Frame::new(q)?;
    let mut out = ComplexRate {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
        indices: [i, j, k, l],
        p: *big_p,
        p_prime: *big_p_prime,
        q: *q,
        selector_passed: params.channels.chi_selector(i, j, k, l),
    };
    if !out.selector_passed {
        return Ok(out);
    }
    let (pa, pb) = (big_p - q, big_p_prime - q);
    let quad = params.quadrature;
    let est = quadrature::refine_order(quad.initial_order, quad.max_order, quad.tol, |order| {
        let rule = PlaneRule::new(params.distribution.as_ref(), order);
        let a = rule.jump_values(params, &frame, i, j, &pa);
        let b = rule.jump_values(params, &frame, k, l, &pb);
        rule.pair(&a, &b)
    })?;
    out.value = est.value;
    out.error = est.error;
    Ok(out)
}

/// All complex rates at fixed `(P, P', Q)`, evaluated on one node set.
///
/// Row `i n + j` and column `k n + l` hold `M^{jl}_{ik}`. Because every
/// entry shares the same nodes, positivity of the Gram form holds for the
/// discrete values too.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pub n: usize,
    pub values: DMatrix<Complex64>,
    pub order: usize,
    pub error: f64,
}

impl RateMatrix {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.values[(i * self.n + j, k * self.n + l)]
    }
}

/// Rate matrix at a fixed plane order.
pub fn rate_matrix_at_order(
    params: &JumpFunctionParams,
    big_p: &Vec3,
    big_p_prime: &Vec3,
    q: &Vec3,
    order: usize,
) -> Result<RateMatrix> {
    let frame = Frame::new(q)?;
    let n = params.channels.len();
    let rule = PlaneRule::new(params.distribution.as_ref(), order);
    let (pa, pb) = (big_p - q, big_p_prime - q);
    let mut left = Vec::with_capacity(n * n);
    let mut right = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            left.push(rule.jump_values(params, &frame, i, j, &pa));
            right.push(rule.jump_values(params, &frame, i, j, &pb));
        }
    }
    let mut values = DMatrix::zeros(n * n, n * n);
    for a in 0..n * n {
        for b in 0..n * n {
            if params.channels.chi_selector(a / n, a % n, b / n, b % n) {
                values[(a, b)] = rule.pair(&left[a], &right[b]);
            }
        }
    }
    Ok(RateMatrix {
        n,
        values,
        order,
        error: 0.0,
    })
}

/// Rate matrix with order doubling until every entry has converged.
pub fn rate_matrix(
    params: &JumpFunctionParams,
    big_p: &Vec3,
    big_p_prime: &Vec3,
    q: &Vec3,
) -> Result<RateMatrix> {
    let quad = params.quadrature;
    let mut order = quad.initial_order.max(1);
    let mut previous = rate_matrix_at_order(params, big_p, big_p_prime, q, order)?;
    loop {
        let next = order * 2;
        let mut current = rate_matrix_at_order(params, big_p, big_p_prime, q, next)?;
        let scale = current.values.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let diff = (&current.values - &previous.values)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()))
            .max(64.0 * f64::EPSILON * scale);
        current.error = diff;
        if diff <= quad.tol.abs.max(quad.tol.rel * scale) {
            return Ok(current);
        }
        if next * 2 > quad.max_order {
            return Err(Error::NonConvergence {
                value: Complex64::new(scale, 0.0),
                error: diff,
            });
        }
        order = next;
        previous = current;
    }
}

/// Classical rate `M^{jj}_{ii}(P, P; Q)` for the transition
/// `(P - Q, j) -> (P, i)`.
pub fn classical_rate(
    params: &JumpFunctionParams,
    i: usize,
    j: usize,
    big_p: &Vec3,
    q: &Vec3,
) -> Result<Estimate<f64>> {
    let r = complex_rate(params, i, j, i, j, big_p, big_p, q)?;
    Ok(Estimate {
        value: r.value.re.max(0.0),
        error: r.error,
    })
}

/// One requested entry of a rate table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRequest {
    pub indices: [usize; 4],
    pub p: Vec3,
    pub p_prime: Vec3,
    pub q: Vec3,
}

/// Evaluates many complex rates; results keep the request order.
pub fn rate_table(
    params: &JumpFunctionParams,
    requests: &[RateRequest],
    exec: Execution,
) -> Vec<Result<ComplexRate>> {
    exec::map_slice(exec, requests, |r| {
        let [i, j, k, l] = r.indices;
        complex_rate(params, i, j, k, l, &r.p, &r.p_prime, &r.q)
    })
}

/// Largest `|Q|` that carries weight for the transition `j -> i` from `P`.
fn q_cutoff(params: &JumpFunctionParams, gap: f64, big_p: &Vec3) -> f64 {
    let gas = &params.gas;
    let ratio = gas.gas_mass / gas.test_mass;
    let scale = params.distribution.momentum_scale();
    2.0 * (8.0 * scale + ratio * big_p.norm()) / (1.0 + ratio)
        + (2.0 * gas.gas_mass * gap.abs() / (1.0 + ratio)).sqrt()
}

/// `Gamma^{ij}_P = integral over Q of M^{jj}_{ii}(P + Q, P + Q; Q)`.
fn total_rate(params: &JumpFunctionParams, i: usize, j: usize, big_p: &Vec3) -> Result<Estimate<f64>> {
    let gap = params.channels.gap(i, j);
    let q_max = q_cutoff(params, gap, big_p);
    let quad = params.quadrature;
    let inner_tol = Tolerance {
        rel: quad.tol.rel * 0.1,
        ..quad.tol
    };
    let axis = if big_p.norm() > 0.0 { *big_p } else { Vec3::z() };
    let mut failure = None;
    let est = quadrature::refine_order(4, quad.max_order, quad.tol, |order| {
        let rule = PlaneRule::new(params.distribution.as_ref(), order);
        sphere_rule(&axis, 2 * order, |dir| {
            let radial = quadrature::integrate(0.0, q_max, inner_tol, |r| {
                if r == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let frame = match Frame::new(&(dir * r)) {
                    Ok(f) => f,
                    Err(_) => return Complex64::new(0.0, 0.0),
                };
                let v = rule.jump_values(params, &frame, i, j, big_p);
                rule.pair(&v, &v) * (r * r)
            });
            match radial {
                Ok(e) => e.value,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        })
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Estimate {
        value: est.value.re.max(0.0),
        error: est.error,
    })
}

/// Momentum-transfer density `P^{ij}_P(Q)` together with the rate
/// `Gamma^{ij}_P` that normalises it.
#[derive(Debug, Clone)]
pub struct TransferDistribution {
    params: JumpFunctionParams,
    pub i: usize,
    pub j: usize,
    pub p: Vec3,
    pub rate: Estimate<f64>,
}

/// Gives up after this many rejected proposals in a row.
const MAX_REJECTIONS: usize = 10_000_000;

impl TransferDistribution {
    pub fn is_defined(&self) -> bool {
        self.rate.value > 0.0
    }

    /// Probability density of the transfer `Q` (units 1/momentum^3).
    pub fn density(&self, q: &Vec3) -> Result<f64> {
        if !self.is_defined() {
            return Err(Error::ZeroRate);
        }
        let m = classical_rate(&self.params, self.i, self.j, &(self.p + q), q)?;
        Ok(m.value / self.rate.value)
    }

    /// Draws one transfer `Q` by sampling a collision partner.
    ///
    /// The gas momentum is proposed from a mixture that dominates
    /// `mu(p0) |p_i|`, the scattering direction uniformly, and both are
    /// accepted with the ratio to `mu(p0) |p_f| |f(p_f, p_i)|^2`. Requires a
    /// Gaussian gas and an amplitude bound.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec3> {
        if !self.is_defined() {
            return Err(Error::ZeroRate);
        }
        let params = &self.params;
        let Some(width) = params.distribution.gaussian_width() else {
            return Err(Error::invalid("distribution", "sampling needs a Gaussian gas distribution"));
        };
        let Some(bound) = params.model.modulus_bound().filter(|b| *b > 0.0) else {
            return Err(Error::invalid("model", "sampling needs a positive amplitude bound"));
        };
        let gas = &params.gas;
        let ms = gas.reduced_mass();
        let gap = params.channels.gap(self.i, self.j);
        let e0 = (2.0 * ms * (-gap).max(0.0)).sqrt();
        let a = ms / gas.gas_mass;
        let b = ms / gas.test_mass * self.p.norm() + e0;
        let mean_abs = 2.0 * width / PI.sqrt();
        let w_speed = a * mean_abs / (a * mean_abs + b);
        let radial = Gamma::new(2.0, width * width).expect("valid gamma parameters");
        let sd = width / 2f64.sqrt();
        for _ in 0..MAX_REJECTIONS {
            let p0 = if rng.random::<f64>() < w_speed {
                let dir: [f64; 3] = UnitSphere.sample(rng);
                Vec3::from(dir) * radial.sample(rng).sqrt()
            } else {
                let n: [f64; 3] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                Vec3::from(n) * sd
            };
            let p_i = gas.rel(&p0, &self.p);
            let pi_abs = p_i.norm();
            let radicand = pi_abs * pi_abs - 2.0 * ms * gap;
            let dir: [f64; 3] = UnitSphere.sample(rng);
            if radicand < 0.0 {
                continue;
            }
            let pf_abs = radicand.sqrt();
            let p_f = Vec3::from(dir) * pf_abs;
            let f = params.model.amplitude(self.i, self.j, &p_f, &p_i).norm_sqr();
            let accept = pf_abs / (a * p0.norm() + b) * f / (bound * bound);
            if rng.random::<f64>() < accept {
                return Ok(p_i - p_f);
            }
        }
        Err(Error::NonConvergence {
            value: Complex64::new(0.0, 0.0),
            error: f64::INFINITY,
        })
    }
}

/// Rate `Gamma^{ij}_P` and transfer density `P^{ij}_P(Q)` for the
/// transition `j -> i` at momentum `P`.
pub fn transfer_distribution_and_rate(
    params: &JumpFunctionParams,
    i: usize,
    j: usize,
    big_p: &Vec3,
) -> Result<TransferDistribution> {
    params.check_channel("i", i)?;
    params.check_channel("j", j)?;
    let rate = total_rate(params, i, j, big_p)?;
    Ok(TransferDistribution {
        params: params.clone(),
        i,
        j,
        p: *big_p,
        rate,
    })
}

/// Rates of an infinitely massive tracer, integrated over `Q`:
///
/// `(n/m) chi * integral d^3p0 mu(p0) |p| * integral dOmega f_ij(p, p0) conj(f_kl(p, p0))`
///
/// with `|p| = sqrt(p0^2 - 2 m (E_i - E_j))` on shell.
pub fn immobile_rates(
    params: &JumpFunctionParams,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> Result<Estimate<Complex64>> {
    for (name, c) in [("i", i), ("j", j), ("k", k), ("l", l)] {
        params.check_channel(name, c)?;
    }
    let zero = Estimate {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
    };
    if !params.channels.chi_selector(i, j, k, l) {
        return Ok(zero);
    }
    let gas = &params.gas;
    let m = gas.gas_mass;
    let gap = params.channels.gap(i, j);
    let r_max = 8.0 * params.distribution.momentum_scale();
    let two_m_gap = 2.0 * m * gap;
    // integrate in r = |p0| when every p0 is open, else in s = |p|
    let (upper, open_everywhere) = if gap <= 0.0 {
        (r_max, true)
    } else if r_max * r_max > two_m_gap {
        ((r_max * r_max - two_m_gap).sqrt(), false)
    } else {
        return Ok(zero);
    };
    let model = params.model.as_ref();
    let quad = params.quadrature;
    let inner_tol = Tolerance {
        rel: quad.tol.rel * 0.1,
        ..quad.tol
    };
    let mut failure = None;
    // Direction of p0, then |p0| adaptively, then the direction of p. Each
    // level refines on its own: an isotropic gas needs few outer nodes while
    // forward peaks in the amplitude need many inner ones.
    let est = quadrature::refine_order(2, quad.max_order, quad.tol, |order| {
        sphere_rule(&Vec3::z(), order, |n0| {
            let radial = quadrature::integrate(0.0, upper, inner_tol, |x| {
                let (r, s, jac) = if open_everywhere {
                    let s = (x * x - two_m_gap).sqrt();
                    (x, s, x * x)
                } else {
                    let r = (x * x + two_m_gap).sqrt();
                    (r, x, r * x)
                };
                if r == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let p0 = n0 * r;
                let mu = params.distribution.density(&p0);
                let inner = quadrature::refine_order(8, 1024, inner_tol, |o| {
                    sphere_rule(&p0, o, |n| {
                        let p = n * s;
                        model.amplitude(i, j, &p, &p0) * model.amplitude(k, l, &p, &p0).conj()
                    })
                });
                match inner {
                    Ok(e) => e.value * (mu * jac * s),
                    Err(e) => {
                        failure.get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                }
            });
            match radial {
                Ok(e) => e.value,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        })
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let scale = gas.n_gas / m;
    Ok(Estimate {
        value: est.value * scale,
        error: est.error * scale,
    })
}

/// Forward-scattering energy shifts `E_n^{ij}(P)`; zero unless `E_i = E_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyShiftMatrix {
    pub values: DMatrix<f64>,
    pub error: f64,
}

/// `E_n^{ij}(P) = -2 pi hbar^2 (n/m*) * integral d^3p0 mu(p0) Re f_ij(rel(p0, P), rel(p0, P))`
/// for degenerate pairs.
pub fn energy_shift(params: &JumpFunctionParams, big_p: &Vec3) -> Result<EnergyShiftMatrix> {
    let gas = &params.gas;
    let n = params.channels.len();
    let hbar = gas.constants.hbar;
    let prefactor = -2.0 * PI * hbar * hbar * gas.n_gas / gas.reduced_mass();
    let mut values = DMatrix::zeros(n, n);
    let mut error = 0.0f64;
    let quad = params.quadrature;
    for i in 0..n {
        for j in 0..n {
            if !params.channels.is_degenerate(i, j) {
                continue;
            }
            let average = |order: usize| -> Complex64 {
                gas_average(params.distribution.as_ref(), order, |p0| {
                    let rel = gas.rel(p0, big_p);
                    params.model.amplitude(i, j, &rel, &rel).re
                })
            };
            let est = quadrature::refine_order(quad.initial_order.min(16), quad.max_order, quad.tol, average)?;
            values[(i, j)] = prefactor * est.value.re;
            error = error.max(prefactor.abs() * est.error);
        }
    }
    Ok(EnergyShiftMatrix { values, error })
}

/// `integral d^3p mu(p) g(p)` with Gauss–Hermite nodes for a Gaussian gas,
/// Gauss–Legendre on a cube of half-width six momentum scales otherwise.
pub fn gas_average<F>(distribution: &dyn GasDistribution, order: usize, mut g: F) -> Complex64
where
    F: FnMut(&Vec3) -> f64,
{
    let mut sum = 0.0;
    match distribution.gaussian_width() {
        Some(w) => {
            let rule = quadrature::hermite(order);
            for &(x, wx) in rule.iter() {
                for &(y, wy) in rule.iter() {
                    for &(z, wz) in rule.iter() {
                        sum += wx * wy * wz * g(&(Vec3::new(x, y, z) * w));
                    }
                }
            }
            sum *= PI.powf(-1.5);
        }
        None => {
            let half = 6.0 * distribution.momentum_scale();
            let rule = quadrature::legendre(order);
            for &(x, wx) in rule.iter() {
                for &(y, wy) in rule.iter() {
                    for &(z, wz) in rule.iter() {
                        let p = Vec3::new(x, y, z) * half;
                        sum += wx * wy * wz * distribution.density(&p) * g(&p);
                    }
                }
            }
            sum *= half * half * half;
        }
    }
    Complex64::new(sum, 0.0)
}
