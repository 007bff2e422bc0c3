// SPDX-License-Identifier: Apache-2.0

//! Quadrature building blocks.
//!
//! Gauss–Legendre and Gauss–Hermite node sets are cached per order. The 1D
//! adaptive integrator is a globally adaptive 7/15-point Gauss–Kronrod scheme
//! that works directly on complex-valued integrands. Multi-dimensional product
//! rules are refined by order doubling through [`refine_order`].

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Rule = Arc<[(f64, f64)]>;

/// An integral value together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// Tolerances and limits shared by the adaptive routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    /// Maximum number of subintervals (1D) or maximum order (product rules).
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-8,
            abs: 1e-300,
            max_subdivisions: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Tolerance {
            rel,
            abs,
            ..Tolerance::default()
        }
    }

    fn accepts(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * value.abs())
    }
}

fn cache(kind: u8) -> &'static Mutex<HashMap<usize, Rule>> {
    static LEGENDRE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    static HERMITE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    match kind {
        0 => LEGENDRE.get_or_init(Default::default),
        _ => HERMITE.get_or_init(Default::default),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn legendre(order: usize) -> Rule {
    let order = order.max(1);
    let mut map = cache(0).lock().unwrap();
    map.entry(order)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(NonZeroUsize::new(order).unwrap());
            rule.as_node_weight_pairs().to_vec().into()
        })
        .clone()
}

/// Gauss–Hermite nodes and weights for the weight `exp(-x^2)` on the real line.
pub fn hermite(order: usize) -> Rule {
    let order = order.max(1);
    let mut map = cache(1).lock().unwrap();
    map.entry(order)
        .or_insert_with(|| {
            let rule = GaussHermite::new(NonZeroUsize::new(order).unwrap());
            rule.as_node_weight_pairs().to_vec().into()
        })
        .clone()
}

/// Fixed-order Gauss–Legendre integral of a complex integrand over `[a, b]`.
pub fn gauss_legendre<F>(a: f64, b: f64, order: usize, mut f: F) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut sum = Complex64::new(0.0, 0.0);
    for &(x, w) in legendre(order).iter() {
        sum += w * f(mid + half * x);
    }
    sum * half
}

// 7-point Gauss / 15-point Kronrod abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_9,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

fn kronrod15<F>(a: f64, b: f64, f: &mut F) -> (Complex64, f64)
where
    F: FnMut(f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let fc = f(mid);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).norm())
}

/// Globally adaptive Gauss–Kronrod integration of a complex integrand over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// error satisfies the tolerance. On failure the partial value is returned
/// inside [`Error::NonConvergence`].
pub fn integrate<F>(a: f64, b: f64, tol: Tolerance, mut f: F) -> Result<Estimate<Complex64>>
where
    F: FnMut(f64) -> Complex64,
{
    if a == b {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let (v, e) = kronrod15(a, b, &mut f);
    let mut segments = vec![(a, b, v, e)];
    loop {
        let value: Complex64 = segments.iter().map(|s| s.2).sum();
        let error: f64 = segments.iter().map(|s| s.3).sum();
        let floor = 50.0 * f64::EPSILON * segments.iter().map(|s| s.2.norm()).sum::<f64>();
        if tol.accepts(value.norm(), error) || error <= floor {
            return Ok(Estimate { value, error });
        }
        if segments.len() >= tol.max_subdivisions {
            return Err(Error::NonConvergence { value, error });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let m = 0.5 * (lo + hi);
        let (v1, e1) = kronrod15(lo, m, &mut f);
        let (v2, e2) = kronrod15(m, hi, &mut f);
        segments.push((lo, m, v1, e1));
        segments.push((m, hi, v2, e2));
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(a: f64, b: f64, tol: Tolerance, mut f: F) -> Result<Estimate<f64>>
where
    F: FnMut(f64) -> f64,
{
    match integrate(a, b, tol, |x| Complex64::new(f(x), 0.0)) {
        Ok(e) => Ok(Estimate {
            value: e.value.re,
            error: e.error,
        }),
        Err(e) => Err(e),
    }
}

/// Order-doubling refinement for product rules.
///
/// `eval(order)` computes the integral at the given order. The order starts
/// at `initial` and doubles until two successive values agree to the
/// tolerance or `max_order` is passed. The error estimate is the difference
/// of the last two evaluations, floored at a few ulps of the value.
pub fn refine_order<F>(
    initial: usize,
    max_order: usize,
    tol: Tolerance,
    mut eval: F,
) -> Result<Estimate<Complex64>>
where
    F: FnMut(usize) -> Complex64,
{
    let mut order = initial.max(1);
    let mut previous = eval(order);
    loop {
        let next_order = order * 2;
        let current = eval(next_order);
        let error = (current - previous)
            .norm()
            .max(64.0 * f64::EPSILON * current.norm());
        if tol.accepts(current.norm(), error) {
            return Ok(Estimate {
                value: current,
                error,
            });
        }
        if next_order * 2 > max_order {
            return Err(Error::NonConvergence {
                value: current,
                error,
            });
        }
        order = next_order;
        previous = current;
    }
}
