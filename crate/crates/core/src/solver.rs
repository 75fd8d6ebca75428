//! Orders that minimize the worst-case expected cost.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::{brute_force_adversary, classify, solve_adversary, AdvMethod, Case};
use crate::error::{Error, Result};
use crate::model::{non_stopping_window, Instance, Permutation};
use crate::pbd::{window_mass, PrefixPmf};

pub const BRUTE_FORCE_DRST_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Unit,
    General,
    Brute,
}

impl std::str::FromStr for SolveMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unit" => Ok(Self::Unit),
            "general" => Ok(Self::General),
            "brute" => Ok(Self::Brute),
            other => Err(format!("unknown solve method {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    pub order: Permutation,
    /// Value the designated adversary attains on `order`.
    pub adversary_value: f64,
    pub method: SolveMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<Case>,
}

/// Indices sorted by `key` ascending; ties keep index order.
fn sorted_by(n: usize, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    idx
}

/// Sorting rule for unit costs: decreasing `lo` when `k <= n/2`, increasing
/// `hi` otherwise. Non-unit costs are accepted with a warning.
pub fn unit_cost_solve(inst: &Instance, adv: AdvMethod) -> Result<SolveResult> {
    if !inst.has_unit_costs() {
        log::warn!("unit-cost rule applied to an instance with non-unit costs");
    }
    let n = inst.n();
    let order = if 2 * inst.k() <= n {
        sorted_by(n, |i| -inst.lo(i))
    } else {
        sorted_by(n, |i| inst.hi(i))
    };
    finish(inst, Permutation::new(order)?, SolveMethod::Unit, adv, None)
}

/// `c/q` with zero or NaN denominators (and `0/0`) mapped to `+∞`.
fn ratio(c: f64, q: f64) -> f64 {
    let r = c / q;
    if r.is_nan() || q <= 0.0 {
        f64::INFINITY
    } else {
        r
    }
}

/// Round-robin sequential-testing order for known probabilities.
///
/// List A ranks tests by `c/(1-p)`, list B by `c/p`, both increasing with
/// infinite ratios last and ties by index. `k = n` returns A, `k = 1` returns
/// B, and otherwise A and B are interleaved starting with A, skipping tests
/// already emitted.
pub fn classical_sst(costs: &[f64], p: &[f64], k: usize) -> Permutation {
    let n = costs.len();
    let a = sorted_by(n, |i| ratio(costs[i], 1.0 - p[i]));
    let b = sorted_by(n, |i| ratio(costs[i], p[i]));
    let order = if k >= n {
        a
    } else if k <= 1 {
        b
    } else {
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(n);
        let (mut ia, mut ib) = (0, 0);
        let mut from_a = true;
        while out.len() < n {
            let (list, pos) = if from_a { (&a, &mut ia) } else { (&b, &mut ib) };
            while *pos < n && seen[list[*pos]] {
                *pos += 1;
            }
            if *pos < n {
                seen[list[*pos]] = true;
                out.push(list[*pos]);
            }
            from_a = !from_a;
        }
        out
    };
    Permutation::new(order).expect("both lists are permutations")
}

/// Three-case robust order for general costs.
///
/// Above: the sequential-testing order at `p = lo`. Below: at `p = hi`.
/// Overlap: increasing cost, ties by index.
pub fn general_solve(inst: &Instance, adv: AdvMethod) -> Result<SolveResult> {
    let case = classify(inst);
    let costs = inst.costs();
    let order = match case {
        Case::Above => classical_sst(&costs, inst.lows().as_slice(), inst.k()),
        Case::Below => classical_sst(&costs, inst.highs().as_slice(), inst.k()),
        Case::Overlap => Permutation::new(sorted_by(inst.n(), |i| costs[i]))?,
    };
    finish(inst, order, SolveMethod::General, adv, Some(case))
}

fn finish(
    inst: &Instance,
    order: Permutation,
    method: SolveMethod,
    adv: AdvMethod,
    case: Option<Case>,
) -> Result<SolveResult> {
    let adversary_value = solve_adversary(inst, &order, adv, None)?.value;
    Ok(SolveResult {
        order,
        adversary_value,
        method,
        case,
    })
}

/// Exact min-max order for `n <= 8`.
///
/// Orders are explored as a prefix tree; each prefix carries the pmf row and
/// accumulated cost of every extreme-point choice on it, and a prefix whose
/// worst accumulated cost already reaches the best complete order is cut.
/// Ties go to the lexicographically smallest order.
pub fn brute_force_drst(inst: &Instance) -> Result<SolveResult> {
    let n = inst.n();
    if n > BRUTE_FORCE_DRST_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_DRST_LIMIT,
        });
    }
    let root = vec![(PrefixPmf::empty(), 0.0)];
    let (_, order) = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut best = (f64::INFINITY, Vec::new());
            let mut prefix = vec![first];
            let states = extend(inst, &root, 0, first);
            descend(inst, &mut prefix, 1u32 << first, states, &mut best);
            best
        })
        .reduce(
            || (f64::INFINITY, Vec::new()),
            |a, b| match a.0.total_cmp(&b.0) {
                Ordering::Less => a,
                Ordering::Greater => b,
                Ordering::Equal => {
                    if b.1.is_empty() || (!a.1.is_empty() && a.1 <= b.1) {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    let order = Permutation::new(order)?;
    let adversary_value = brute_force_adversary(inst, &order)?.value;
    Ok(SolveResult {
        order,
        adversary_value,
        method: SolveMethod::Brute,
        case: None,
    })
}

type State = (PrefixPmf, f64);

/// Charges `test` at `stage` and branches every state on its probability.
/// At the last stage only the charge is applied.
fn extend(inst: &Instance, states: &[State], stage: usize, test: usize) -> Vec<State> {
    let (n, k) = (inst.n(), inst.k());
    let window = non_stopping_window(stage, n, k);
    let (lo, hi) = (inst.lo(test), inst.hi(test));
    let mut out = Vec::with_capacity(states.len() * 2);
    for (row, acc) in states {
        let acc = acc + inst.cost(test) * window_mass(row, &window);
        if stage + 1 == n {
            out.push((PrefixPmf::empty(), acc));
            continue;
        }
        out.push((row.pushed(lo), acc));
        if hi != lo {
            out.push((row.pushed(hi), acc));
        }
    }
    out
}

fn descend(
    inst: &Instance,
    prefix: &mut Vec<usize>,
    used: u32,
    states: Vec<State>,
    best: &mut (f64, Vec<usize>),
) {
    let worst = states.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    if worst >= best.0 {
        return;
    }
    let n = inst.n();
    if prefix.len() == n {
        *best = (worst, prefix.clone());
        return;
    }
    for test in 0..n {
        if used >> test & 1 == 1 {
            continue;
        }
        let next = extend(inst, &states, prefix.len(), test);
        prefix.push(test);
        descend(inst, prefix, used | 1 << test, next, best);
        prefix.pop();
    }
}
