use rayon::prelude::*;

use super::{AdvMethod, AdvResult};
use crate::error::{Error, Result};
use crate::model::{non_stopping_window, Instance, Permutation, ProbVector};
use crate::pbd::{window_mass, PrefixPmf};

pub const BRUTE_FORCE_ADVERSARY_LIMIT: usize = 25;

/// Stages branched on before handing subtrees to worker threads.
const SPLIT_DEPTH: usize = 8;

/// Exact adversary by enumerating every extreme point `p_i ∈ {lo_i, hi_i}`.
///
/// The enumeration walks the order depth-first, extending one pmf row per
/// branch. Ties go to the numerically smallest bitmask (bit i set means
/// `p_i = hi_i`), so degenerate intervals and the last stage, whose
/// probability never affects the cost, resolve to `lo`.
pub fn brute_force_adversary(inst: &Instance, sigma: &Permutation) -> Result<AdvResult> {
    sigma.check_len(inst.n())?;
    let n = inst.n();
    if n > BRUTE_FORCE_ADVERSARY_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_ADVERSARY_LIMIT,
        });
    }
    let (_, mask) = best_extreme_point(inst, sigma);
    let p = (0..n)
        .map(|i| if mask >> i & 1 == 1 { inst.hi(i) } else { inst.lo(i) })
        .collect();
    AdvResult::evaluate(inst, sigma, ProbVector::new(p), AdvMethod::Brute)
}

#[derive(Clone)]
struct Node {
    stage: usize,
    row: PrefixPmf,
    acc: f64,
    mask: u64,
}

fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Maximum over extreme points of the expected cost, with its bitmask.
pub(crate) fn best_extreme_point(inst: &Instance, sigma: &Permutation) -> (f64, u64) {
    let root = Node {
        stage: 0,
        row: PrefixPmf::empty(),
        acc: 0.0,
        mask: 0,
    };
    let mut frontier = vec![root];
    for _ in 0..SPLIT_DEPTH.min(inst.n()) {
        frontier = frontier
            .into_iter()
            .flat_map(|node| children(inst, sigma, node))
            .collect();
    }
    frontier
        .into_par_iter()
        .map(|node| dfs(inst, sigma, node))
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), better)
}

/// Charges the node's stage and branches on its test's probability.
/// At the last stage the node becomes a leaf.
fn children(inst: &Instance, sigma: &Permutation, node: Node) -> Vec<Node> {
    let (n, k) = (inst.n(), inst.k());
    if node.stage == n {
        return vec![node];
    }
    let test = sigma.as_slice()[node.stage];
    let acc = node.acc
        + inst.cost(test) * window_mass(&node.row, &non_stopping_window(node.stage, n, k));
    let stage = node.stage + 1;
    if stage == n {
        return vec![Node { stage, acc, ..node }];
    }
    let (lo, hi) = (inst.lo(test), inst.hi(test));
    let mut out = vec![Node {
        stage,
        row: node.row.pushed(lo),
        acc,
        mask: node.mask,
    }];
    if hi != lo {
        out.push(Node {
            stage,
            row: node.row.pushed(hi),
            acc,
            mask: node.mask | 1 << test,
        });
    }
    out
}

fn dfs(inst: &Instance, sigma: &Permutation, node: Node) -> (f64, u64) {
    if node.stage == inst.n() {
        return (node.acc, node.mask);
    }
    children(inst, sigma, node)
        .into_iter()
        .map(|child| dfs(inst, sigma, child))
        .fold((f64::NEG_INFINITY, u64::MAX), better)
}
