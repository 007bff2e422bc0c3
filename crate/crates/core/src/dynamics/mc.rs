// SPDX-License-Identifier: Apache-2.0

//! Classical jump process for channel and momentum: exact (Gillespie) event
//! sampling with Gaussian momentum kicks.
//!
//! Trajectory `r` draws from its own ChaCha stream, `seed_from_u64(seed)` with
//! `set_stream(r)`, and blocks of trajectories are reduced in a fixed order,
//! so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{DecoherenceChannelSet, GaussianCf};
use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::units::Vec3;

const BLOCK: usize = 4096;

/// Histogram of one momentum component at the final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let b = ((x - self.lo) / self.width()).floor();
        (b >= 0.0 && b < self.bins as f64).then_some(b as usize)
    }
}

#[derive(Debug, Clone)]
pub struct McOptions {
    /// Number of equal intervals in `[0, T]`; statistics are taken at all
    /// `n_samples + 1` grid times.
    pub n_samples: usize,
    pub exec: Execution,
    pub histogram: Option<HistogramSpec>,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            n_samples: 10,
            exec: Execution::Parallel,
            histogram: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Histogram {
    pub spec: HistogramSpec,
    /// `counts[channel][bin]`.
    pub counts: Vec<Vec<u64>>,
    pub out_of_range: u64,
}

#[derive(Debug, Clone)]
pub struct McStatistics {
    pub n_trajectories: usize,
    pub times: Vec<f64>,
    /// `populations[k][i]` at `times[k]`.
    pub populations: Vec<Vec<f64>>,
    pub population_stderr: Vec<Vec<f64>>,
    /// Mean momentum change `P - P0`.
    pub mean_dp: Vec<Vec3>,
    /// Unbiased sample variance of `P - P0` per axis.
    pub var_dp: Vec<Vec3>,
    pub histogram: Option<Histogram>,
}

impl McStatistics {
    /// Standard error of `mean_dp[k]` per axis.
    pub fn mean_stderr(&self, k: usize) -> Vec3 {
        (self.var_dp[k] / self.n_trajectories as f64).map(f64::sqrt)
    }
}

#[derive(Clone)]
struct Accumulator {
    counts: Vec<Vec<u64>>,
    sum: Vec<Vec3>,
    sum_sq: Vec<Vec3>,
    hist: Vec<Vec<u64>>,
    out_of_range: u64,
}

impl Accumulator {
    fn new(n_times: usize, n: usize, bins: usize) -> Self {
        Accumulator {
            counts: vec![vec![0; n]; n_times],
            sum: vec![Vec3::zeros(); n_times],
            sum_sq: vec![Vec3::zeros(); n_times],
            hist: vec![vec![0; bins]; n],
            out_of_range: 0,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for k in 0..self.counts.len() {
            for (a, b) in self.counts[k].iter_mut().zip(&other.counts[k]) {
                *a += b;
            }
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
        for (row, orow) in self.hist.iter_mut().zip(&other.hist) {
            for (a, b) in row.iter_mut().zip(orow) {
                *a += b;
            }
        }
        self.out_of_range += other.out_of_range;
    }
}

fn kick_laws(set: &DecoherenceChannelSet) -> Result<Vec<Option<GaussianCf>>> {
    let n = set.len();
    let mut laws = vec![None; n * n];
    for i in 0..n {
        for j in 0..n {
            if set.gamma(i, j) > 0.0 {
                let g = set.phi(i, j).as_gaussian().ok_or_else(|| {
                    Error::invalid("phi", "Monte Carlo kicks need Gaussian transfer densities")
                })?;
                laws[i * n + j] = Some(*g);
            }
        }
    }
    Ok(laws)
}

fn pick(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64> + Clone, total: f64) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Simulates `n_traj` trajectories up to time `t_final`.
pub fn classical_mc_simulate(
    set: &DecoherenceChannelSet,
    n_traj: usize,
    t_final: f64,
    seed: u64,
    options: &McOptions,
) -> Result<McStatistics> {
    if n_traj == 0 {
        return Err(Error::invalid("n_traj", "at least one trajectory is required"));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::invalid("t_final", "must be finite and nonnegative"));
    }
    if options.n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be positive"));
    }
    if let Some(h) = options.histogram {
        if h.axis > 2 || h.bins == 0 || !(h.hi > h.lo) {
            return Err(Error::invalid("histogram", "needs axis < 3, bins > 0 and hi > lo"));
        }
    }
    let laws = kick_laws(set)?;
    let n = set.len();
    let times: Vec<f64> = (0..=options.n_samples)
        .map(|k| t_final * k as f64 / options.n_samples as f64)
        .collect();
    let bins = options.histogram.map_or(0, |h| h.bins);
    let p0 = set.p0();
    let out: Vec<f64> = (0..n).map(|j| set.out_rate(j)).collect();

    let run_block = |b: usize| {
        let mut acc = Accumulator::new(times.len(), n, bins);
        let end = ((b + 1) * BLOCK).min(n_traj);
        for r in b * BLOCK..end {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut i = pick(&mut rng, set.weights().iter().copied(), 1.0);
            let mut p = p0;
            let mut t = 0.0;
            let mut k = 0;
            while k < times.len() {
                let dwell = if out[i] > 0.0 {
                    rng.sample::<f64, _>(Exp1) / out[i]
                } else {
                    f64::INFINITY
                };
                while k < times.len() && times[k] < t + dwell {
                    let dp = p - p0;
                    acc.counts[k][i] += 1;
                    acc.sum[k] += dp;
                    acc.sum_sq[k] += dp.component_mul(&dp);
                    k += 1;
                }
                if k == times.len() {
                    break;
                }
                t += dwell;
                let j = pick(&mut rng, (0..n).map(|f| set.gamma(f, i)), out[i]);
                let law = laws[j * n + i].as_ref().expect("positive rate has a kick law");
                let mut q = law.mean;
                for a in 0..3 {
                    if law.std[a] > 0.0 {
                        q[a] += law.std[a] * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                p += q;
                i = j;
            }
            if let Some(h) = options.histogram {
                match h.bin_of(p[h.axis]) {
                    Some(bin) => acc.hist[i][bin] += 1,
                    None => acc.out_of_range += 1,
                }
            }
        }
        acc
    };

    let n_blocks = n_traj.div_ceil(BLOCK);
    let blocks = map_indices(options.exec, n_blocks, run_block);
    let mut total = Accumulator::new(times.len(), n, bins);
    for block in &blocks {
        total.merge(block);
    }

    let nf = n_traj as f64;
    let populations: Vec<Vec<f64>> = total
        .counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / nf).collect())
        .collect();
    let population_stderr = populations
        .iter()
        .map(|row| row.iter().map(|&p| (p * (1.0 - p) / nf).sqrt()).collect())
        .collect();
    let mean_dp: Vec<Vec3> = total.sum.iter().map(|s| s / nf).collect();
    let var_dp = total
        .sum_sq
        .iter()
        .zip(&mean_dp)
        .map(|(s2, m)| {
            if n_traj > 1 {
                (s2 / nf - m.component_mul(m)) * (nf / (nf - 1.0))
            } else {
                Vec3::zeros()
            }
        })
        .collect();
    Ok(McStatistics {
        n_trajectories: n_traj,
        times,
        populations,
        population_stderr,
        mean_dp,
        var_dp,
        histogram: options.histogram.map(|spec| Histogram {
            spec,
            counts: total.hist,
            out_of_range: total.out_of_range,
        }),
    })
}
