//! Moment-compressed dynamic program over extreme points.
//!
//! Prefix choices are keyed by the first `d` power sums of their low
//! (`p <= 1/2`) and high (`p > 1/2`) probabilities. On the `1/n^3` grid a
//! probability is `z / n^3`, so `p^a` scaled by `n^{3a}` is the exact integer
//! `z^a` and states compare exactly. Each state keeps the pmf of the first
//! prefix that reached it; that representative prices the stage.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;

use super::{AdvMethod, AdvResult};
use crate::error::{Error, Result};
use crate::model::{grid_numerator, non_stopping_window, Instance, Permutation, ProbVector};
use crate::pbd::{window_mass, PrefixPmf};

/// Cap on the default moment count.
pub const MAX_DEFAULT_MOMENTS: usize = 40;

/// Largest number of compressed states held at one stage.
pub const STATE_LIMIT: usize = 1 << 21;

/// Power-sum key of a prefix: `low[a-1] = Σ z_i^a` over low choices and
/// `high[a-1]` likewise, for `a = 1..=d`, at `stage` (tests performed + 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompressedState {
    pub stage: usize,
    pub low: Vec<BigUint>,
    pub high: Vec<BigUint>,
}

/// Additive TV error of matching `d` moments on both halves:
/// `26·(d+1)^{1/4}·2^{-(d+1)/2}`.
pub fn moment_error_bound(d: usize) -> f64 {
    let d1 = (d + 1) as f64;
    26.0 * d1.powf(0.25) * 2f64.powf(-d1 / 2.0)
}

/// Smallest `d` with `moment_error_bound(d) <= c_min / (n^2 c_max)`, capped
/// at [`MAX_DEFAULT_MOMENTS`].
pub fn default_moment_count(inst: &Instance) -> usize {
    let n = inst.n() as f64;
    let c_max = inst.max_cost();
    if c_max <= 0.0 {
        return 1;
    }
    let target = inst.min_cost() / (n * n * c_max);
    (1..=MAX_DEFAULT_MOMENTS)
        .find(|&d| moment_error_bound(d) <= target)
        .unwrap_or(MAX_DEFAULT_MOMENTS)
}

#[derive(Clone, Debug)]
pub struct QptasOutcome {
    pub result: AdvResult,
    pub moments: usize,
    /// Value of the compressed program (representative-priced).
    pub dp_value: f64,
    /// Number of distinct compressed states at each stage `1..=n`.
    pub states_per_stage: Vec<usize>,
}

/// Compressed-DP adversary. The instance must already lie on the `1/n^3`
/// grid (see [`Instance::round_to_grid`]) and have positive costs.
pub fn qptas_adversary(
    inst: &Instance,
    sigma: &Permutation,
    moments: Option<usize>,
) -> Result<AdvResult> {
    qptas_search(inst, sigma, moments).map(|o| o.result)
}

struct Choice {
    value: f64,
    high: bool,
    powers: Vec<BigUint>,
}

struct Node {
    low: Vec<BigUint>,
    high: Vec<BigUint>,
    row: PrefixPmf,
    /// Best accumulated cost of the stages before this one.
    best: f64,
    back: Option<(usize, bool)>,
}

pub fn qptas_search(
    inst: &Instance,
    sigma: &Permutation,
    moments: Option<usize>,
) -> Result<QptasOutcome> {
    sigma.check_len(inst.n())?;
    let (n, k) = (inst.n(), inst.k());
    if let Some(index) = inst.tests().iter().position(|t| t.cost <= 0.0) {
        return Err(Error::NonPositiveCost { index: index + 1 });
    }
    let d = moments.unwrap_or_else(|| default_moment_count(inst));
    if d == 0 {
        return Err(Error::ZeroMoments);
    }
    let slack = n as f64 * moment_error_bound(d) * inst.max_cost();
    // d >= n keys on the whole multiset, so no compression error arises
    if d < n && slack > inst.min_cost() / n as f64 {
        log::warn!(
            "d = {d} gives additive error bound {slack:.3e}, above c_min/n = {:.3e}",
            inst.min_cost() / n as f64
        );
    }

    let scale = BigUint::from(n as u64).pow(3u32);
    let choices = |value: f64, index: usize| -> Result<Choice> {
        let z = grid_numerator(value, n).ok_or(Error::OffGrid { index: index + 1 })?;
        let z = BigUint::from(z);
        let high = z.clone() * 2u32 > scale;
        let mut powers = Vec::with_capacity(d);
        let mut acc = z.clone();
        for _ in 0..d {
            powers.push(acc.clone());
            acc *= &z;
        }
        Ok(Choice {
            value,
            high,
            powers,
        })
    };
    let per_test: Vec<[Choice; 2]> = inst
        .tests()
        .iter()
        .enumerate()
        .map(|(i, t)| Ok([choices(t.lo, i)?, choices(t.hi, i)?]))
        .collect::<Result<_>>()?;

    let zeros = vec![BigUint::zero(); d];
    let mut stage_nodes = vec![Node {
        low: zeros.clone(),
        high: zeros,
        row: PrefixPmf::empty(),
        best: 0.0,
        back: None,
    }];
    let mut history: Vec<Vec<Option<(usize, bool)>>> = Vec::with_capacity(n);
    let mut states_per_stage = Vec::with_capacity(n);

    for stage in 1..=n {
        let test = sigma.as_slice()[stage - 1];
        let window = non_stopping_window(stage - 1, n, k);
        let totals: Vec<f64> = stage_nodes
            .iter()
            .map(|node| node.best + inst.cost(test) * window_mass(&node.row, &window))
            .collect();
        states_per_stage.push(stage_nodes.len());
        history.push(stage_nodes.iter().map(|node| node.back).collect());
        if stage == n {
            let (best_idx, &dp_value) = totals
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            let p = reconstruct(inst, sigma, &history, best_idx);
            let result = AdvResult::evaluate(inst, sigma, p, AdvMethod::Qptas)?;
            return Ok(QptasOutcome {
                result,
                moments: d,
                dp_value,
                states_per_stage,
            });
        }

        let [lo_choice, hi_choice] = &per_test[test];
        let options: &[(bool, &Choice)] = if lo_choice.powers == hi_choice.powers {
            &[(false, lo_choice)]
        } else {
            &[(false, lo_choice), (true, hi_choice)]
        };
        let mut index: HashMap<(Vec<BigUint>, Vec<BigUint>), usize> = HashMap::new();
        let mut next: Vec<Node> = Vec::new();
        for (idx, node) in stage_nodes.iter().enumerate() {
            for &(upper, choice) in options {
                let (mut low, mut high) = (node.low.clone(), node.high.clone());
                let target = if choice.high { &mut high } else { &mut low };
                for (s, pw) in target.iter_mut().zip(&choice.powers) {
                    *s += pw;
                }
                let key = (low, high);
                match index.get(&key) {
                    Some(&j) => {
                        if totals[idx] > next[j].best {
                            next[j].best = totals[idx];
                            next[j].back = Some((idx, upper));
                        }
                    }
                    None => {
                        if next.len() >= STATE_LIMIT {
                            return Err(Error::StateLimit {
                                stage: stage + 1,
                                limit: STATE_LIMIT,
                            });
                        }
                        index.insert(key.clone(), next.len());
                        next.push(Node {
                            low: key.0,
                            high: key.1,
                            row: node.row.pushed(choice.value),
                            best: totals[idx],
                            back: Some((idx, upper)),
                        });
                    }
                }
            }
        }
        stage_nodes = next;
    }
    unreachable!("loop returns at the last stage")
}

/// Walks best-predecessor pointers back from the chosen last-stage state.
/// The last test's probability never affects the cost and is set to `lo`.
fn reconstruct(
    inst: &Instance,
    sigma: &Permutation,
    history: &[Vec<Option<(usize, bool)>>],
    mut idx: usize,
) -> ProbVector {
    let order = sigma.as_slice();
    let n = order.len();
    let mut p = vec![0.0; n];
    p[order[n - 1]] = inst.lo(order[n - 1]);
    for stage in (1..n).rev() {
        // history[stage] holds pointers of states at stage + 1.
        let (prev, upper) = history[stage][idx].expect("non-root state has a predecessor");
        let test = order[stage - 1];
        p[test] = if upper { inst.hi(test) } else { inst.lo(test) };
        idx = prev;
    }
    ProbVector::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::brute_force_adversary;
    use crate::model::Test;

    #[test]
    fn error_bound_values() {
        assert!((moment_error_bound(1) - 26.0 * 2f64.powf(0.25) / 2.0).abs() < 1e-12);
        assert!(moment_error_bound(30) < moment_error_bound(10));
    }

    #[test]
    fn default_moments_capped() {
        let inst = Instance::new(1, vec![Test::new(1.0, 0.0, 1.0); 4]).unwrap();
        let d = default_moment_count(&inst);
        assert!(moment_error_bound(d) <= 1.0 / 16.0);
        assert!(moment_error_bound(d - 1) > 1.0 / 16.0);
        let skewed = Instance::new(
            1,
            vec![Test::new(1e-30, 0.0, 1.0), Test::new(1.0, 0.0, 1.0)],
        )
        .unwrap();
        assert_eq!(default_moment_count(&skewed), MAX_DEFAULT_MOMENTS);
    }

    #[test]
    fn single_test_exact_for_any_d() {
        let inst = Instance::new(1, vec![Test::new(2.5, 0.3, 0.6)])
            .unwrap()
            .round_to_grid();
        for d in 1..4 {
            let r = qptas_adversary(&inst, &Permutation::identity(1), Some(d)).unwrap();
            assert_eq!(r.value, 2.5);
        }
    }

    #[test]
    fn enough_moments_is_exact() {
        let inst = Instance::new(
            2,
            vec![
                Test::new(1.0, 0.1, 0.6),
                Test::new(2.0, 0.3, 0.8),
                Test::new(0.5, 0.2, 0.4),
                Test::new(1.5, 0.55, 0.9),
                Test::new(1.0, 0.05, 0.7),
            ],
        )
        .unwrap()
        .round_to_grid();
        let sigma = Permutation::from_one_based(&[3, 1, 5, 2, 4]).unwrap();
        let exact = brute_force_adversary(&inst, &sigma).unwrap();
        let out = qptas_search(&inst, &sigma, Some(5)).unwrap();
        assert!((out.result.value - exact.value).abs() < 1e-9);
        assert!((out.dp_value - exact.value).abs() < 1e-9);
        assert!(out.result.p.is_member(&inst));
    }

    #[test]
    fn input_checks() {
        let off = Instance::new(1, vec![Test::new(1.0, 0.3, 0.6); 2]).unwrap();
        assert!(matches!(
            qptas_adversary(&off, &Permutation::identity(2), Some(2)),
            Err(Error::OffGrid { .. })
        ));
        let grid = off.round_to_grid();
        assert!(matches!(
            qptas_adversary(&grid, &Permutation::identity(2), Some(0)),
            Err(Error::ZeroMoments)
        ));
        let free = Instance::new(1, vec![Test::new(0.0, 0.25, 0.5); 2]).unwrap();
        assert!(matches!(
            qptas_adversary(&free, &Permutation::identity(2), Some(2)),
            Err(Error::NonPositiveCost { index: 1 })
        ));
    }

    #[test]
    fn one_moment_merges_states() {
        // (1/8, 1/2) and (3/8, 1/4) share a mean but not a second moment
        let inst = Instance::new(
            2,
            vec![
                Test::new(1.0, 0.125, 0.375),
                Test::new(1.0, 0.25, 0.5),
                Test::new(1.0, 0.25, 0.25),
                Test::new(1.0, 0.25, 0.5),
            ],
        )
        .unwrap();
        let sigma = Permutation::identity(4);
        let coarse = qptas_search(&inst, &sigma, Some(1)).unwrap();
        let fine = qptas_search(&inst, &sigma, Some(4)).unwrap();
        assert!(coarse.states_per_stage[2] < fine.states_per_stage[2]);
    }
}
