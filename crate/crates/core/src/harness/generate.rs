//! Seeded instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Test};

/// Random instance with intervals inside `[eps, 1-eps]`.
///
/// Each interval is the sorted pair of two uniform draws from that range;
/// costs are uniform on `[0, 1]` or all 1 when `unit` is set.
pub fn gen_random(n: usize, k: usize, eps: f64, seed: u64, unit: bool) -> Result<Instance> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in [0, 1/2), got {eps}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let tests = (0..n)
        .map(|_| {
            let a = rng.gen_range(eps..=1.0 - eps);
            let b = rng.gen_range(eps..=1.0 - eps);
            let cost = if unit { 1.0 } else { rng.gen::<f64>() };
            Test::new(cost, a.min(b), a.max(b))
        })
        .collect();
    Instance::new(k, tests)
}

/// Parameters of the adversarial family for the cost-ratio greedy rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadExampleParams {
    pub n: usize,
    pub epsilon: f64,
}

/// Pass probability of the free tests: `1 - γ` with `γ = 15/16`.
pub const FREE_TEST_PROB: f64 = 1.0 / 16.0;

/// Point-probability instance with threshold `k = n/4` and three blocks in
/// index order: `0.8n` free tests passing with probability 1/16, `0.1n` unit
/// tests with probability 1/2, `0.1n` unit tests with probability `1-ε`.
pub fn gen_bad_example(params: BadExampleParams) -> Result<Instance> {
    let BadExampleParams { n, epsilon } = params;
    if n == 0 || n % 20 != 0 {
        return Err(Error::InvalidParameter(format!(
            "n must be a positive multiple of 20, got {n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1/2), got {epsilon}"
        )));
    }
    let tenth = n / 10;
    let tests = std::iter::repeat_n(Test::point(0.0, FREE_TEST_PROB), 8 * tenth)
        .chain(std::iter::repeat_n(Test::point(1.0, 0.5), tenth))
        .chain(std::iter::repeat_n(Test::point(1.0, 1.0 - epsilon), tenth))
        .collect();
    Instance::new(n / 4, tests)
}
