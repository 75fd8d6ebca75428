//! Expected testing cost of a fixed order under concrete probabilities.
//!
//! Three routes: the exact O(n²) prefix-pmf evaluator, the 2^n outcome
//! enumeration it is checked against, and a seeded Monte-Carlo simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{non_stopping_window, Instance, Permutation, ProbVector};
use crate::pbd::{window_mass, Kahan, PrefixPmf};

/// Largest n accepted by [`brute_force_cost`].
pub const BRUTE_FORCE_COST_LIMIT: usize = 25;

/// Trials per independent RNG stream in [`monte_carlo_cost`].
pub const MC_BLOCK: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StageCost {
    /// Probability that the stage's test is performed.
    pub probability: f64,
    /// Cost of the stage's test times that probability.
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub total: f64,
    pub per_stage: Vec<StageCost>,
}

fn check_dims(inst: &Instance, sigma: &Permutation, p: &ProbVector) -> Result<()> {
    sigma.check_len(inst.n())?;
    if p.len() != inst.n() {
        return Err(Error::DimensionMismatch {
            expected: inst.n(),
            actual: p.len(),
        });
    }
    Ok(())
}

/// Exact expected cost `Σ_ν c_{σ_ν} · Pr[PBD_{ν-1} ∈ N_{ν-1}]`.
///
/// `p` need not lie in the instance's uncertainty box.
pub fn expected_cost(inst: &Instance, sigma: &Permutation, p: &ProbVector) -> Result<CostBreakdown> {
    check_dims(inst, sigma, p)?;
    Ok(stage_costs(inst, sigma, p.as_slice()))
}

pub(crate) fn stage_costs(inst: &Instance, sigma: &Permutation, p: &[f64]) -> CostBreakdown {
    let (n, k) = (inst.n(), inst.k());
    let mut row = PrefixPmf::empty();
    let mut total = Kahan::default();
    let mut per_stage = Vec::with_capacity(n);
    for (stage, &test) in sigma.as_slice().iter().enumerate() {
        let probability = window_mass(&row, &non_stopping_window(stage, n, k));
        let contribution = inst.cost(test) * probability;
        total.add(contribution);
        per_stage.push(StageCost {
            probability,
            contribution,
        });
        row.push(p[test]);
    }
    CostBreakdown {
        total: total.value(),
        per_stage,
    }
}

/// Expected cost by enumerating every outcome vector in `{0,1}^n`.
pub fn brute_force_cost(inst: &Instance, sigma: &Permutation, p: &ProbVector) -> Result<f64> {
    check_dims(inst, sigma, p)?;
    let n = inst.n();
    if n > BRUTE_FORCE_COST_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_COST_LIMIT,
        });
    }
    let k = inst.k();
    let fail_stop = n - k + 1;
    let p = p.as_slice();
    let order = sigma.as_slice();

    let outcome_cost = |mask: u64| -> f64 {
        let mut weight = 1.0;
        for (i, &pi) in p.iter().enumerate() {
            weight *= if mask >> i & 1 == 1 { pi } else { 1.0 - pi };
        }
        if weight == 0.0 {
            return 0.0;
        }
        let (mut passes, mut fails, mut cost) = (0, 0, 0.0);
        for &t in order {
            cost += inst.cost(t);
            if mask >> t & 1 == 1 {
                passes += 1;
            } else {
                fails += 1;
            }
            if passes >= k || fails >= fail_stop {
                break;
            }
        }
        weight * cost
    };

    let low_bits = n.min(12);
    let chunks = 1u64 << (n - low_bits);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|hi| {
            let base = hi << low_bits;
            let mut acc = Kahan::default();
            for lo in 0..(1u64 << low_bits) {
                acc.add(outcome_cost(base | lo));
            }
            acc.value()
        })
        .collect();
    Ok(pairwise_sum(&partials))
}

/// Fixed-shape pairwise summation, independent of thread scheduling.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Monte-Carlo estimate of the expected cost and its standard error.
///
/// Trials are split into blocks of [`MC_BLOCK`]; block `b` draws from
/// ChaCha20 seeded with `seed` on stream `b`. A test passes when a uniform
/// `[0, 1)` draw is below its probability. Results are bit-identical for a
/// given seed regardless of thread count.
pub fn monte_carlo_cost(
    inst: &Instance,
    sigma: &Permutation,
    p: &ProbVector,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    check_dims(inst, sigma, p)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let n = inst.n();
    let k = inst.k();
    let fail_stop = n - k + 1;
    let stages: Vec<(f64, f64)> = sigma
        .as_slice()
        .iter()
        .map(|&t| (inst.cost(t), p.as_slice()[t]))
        .collect();

    let blocks = trials.div_ceil(MC_BLOCK);
    let stats: Vec<Welford> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = MC_BLOCK.min(trials - b * MC_BLOCK);
            let mut w = Welford::default();
            for _ in 0..count {
                let (mut passes, mut fails, mut cost) = (0, 0, 0.0);
                for &(c, pi) in &stages {
                    cost += c;
                    if rng.gen::<f64>() < pi {
                        passes += 1;
                    } else {
                        fails += 1;
                    }
                    if passes >= k || fails >= fail_stop {
                        break;
                    }
                }
                w.push(cost);
            }
            w
        })
        .collect();

    let merged = stats
        .into_iter()
        .fold(Welford::default(), |acc, w| acc.merge(&w));
    let stderr = if merged.count > 1 {
        (merged.m2 / (merged.count - 1) as f64).sqrt() / (merged.count as f64).sqrt()
    } else {
        0.0
    };
    Ok((merged.mean, stderr))
}

#[derive(Clone, Copy, Debug, Default)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: &Welford) -> Welford {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Welford { count, mean, m2 }
    }
}
