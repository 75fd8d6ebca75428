#![allow(dead_code)]

use drkofn::{Instance, Permutation, ProbVector, Test};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// Expected cost by walking the outcome tree with pass/fail counters.
pub fn tree_cost(inst: &Instance, sigma: &Permutation, p: &[f64]) -> f64 {
    fn walk(inst: &Instance, order: &[usize], p: &[f64], stage: usize, pass: usize, fail: usize) -> f64 {
        let n = inst.n();
        if pass >= inst.k() || fail > n - inst.k() || stage == n {
            return 0.0;
        }
        let t = order[stage];
        let mut total = inst.cost(t);
        if p[t] > 0.0 {
            total += p[t] * walk(inst, order, p, stage + 1, pass + 1, fail);
        }
        if p[t] < 1.0 {
            total += (1.0 - p[t]) * walk(inst, order, p, stage + 1, pass, fail + 1);
        }
        total
    }
    walk(inst, sigma.as_slice(), p, 0, 0, 0)
}

/// Exact PBD mass by enumerating outcome vectors.
pub fn enumerated_pmf(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut mass = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut w = 1.0;
        for (i, &pi) in p.iter().enumerate() {
            w *= if mask >> i & 1 == 1 { pi } else { 1.0 - pi };
        }
        mass[mask.count_ones() as usize] += w;
    }
    mass
}

pub fn random_instance<R: Rng>(rng: &mut R, n: usize, k: usize, eps: f64, unit: bool) -> Instance {
    let tests = (0..n)
        .map(|_| {
            let a = rng.gen_range(eps..=1.0 - eps);
            let b = rng.gen_range(eps..=1.0 - eps);
            let c = if unit { 1.0 } else { rng.gen_range(0.0..=1.0) };
            Test::new(c, a.min(b), a.max(b))
        })
        .collect();
    Instance::new(k, tests).unwrap()
}

pub fn random_order<R: Rng>(rng: &mut R, n: usize) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Permutation::new(v).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R, inst: &Instance) -> ProbVector {
    ProbVector::new(
        inst.tests()
            .iter()
            .map(|t| t.lo + (t.hi - t.lo) * rng.gen::<f64>())
            .collect(),
    )
}

/// An instance, an order and a point of its box.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub inst: Instance,
    pub sigma: Permutation,
    pub p: ProbVector,
}

/// Scenarios with `1 <= n <= max_n`, intervals inside `[eps, 1-eps]` and
/// costs in `[0, 1]` (or all 1).
pub fn scenario(max_n: usize, eps: f64, unit: bool) -> impl Strategy<Value = Scenario> {
    (1..=max_n).prop_flat_map(move |n| {
        (
            1..=n,
            prop::collection::vec((eps..=1.0 - eps, eps..=1.0 - eps, 0.0..=1.0f64, 0.0..=1.0f64), n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(move |(k, raw, order)| {
                let tests: Vec<Test> = raw
                    .iter()
                    .map(|&(a, b, c, _)| Test::new(if unit { 1.0 } else { c }, a.min(b), a.max(b)))
                    .collect();
                let p = raw
                    .iter()
                    .zip(&tests)
                    .map(|(&(_, _, _, t), test)| test.lo + (test.hi - test.lo) * t)
                    .collect();
                Scenario {
                    inst: Instance::new(k, tests).unwrap(),
                    sigma: Permutation::new(order).unwrap(),
                    p: ProbVector::new(p),
                }
            })
    })
}
