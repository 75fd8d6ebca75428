//! Worst-case probability vectors for a fixed testing order.
//!
//! Every solver returns an [`AdvResult`] whose `value` is recomputed from the
//! chosen `p` with the exact evaluator, never taken from the search itself.

mod advbar;
mod approx;
mod brute;
mod qptas;

use serde::Serialize;

pub use advbar::{advbar_adversary, advbar_cost, advbar_horizon};
pub use approx::{
    approx_adversary, beta_bound, classify, straddling_path, window_bounds, AlphaBeta, Case,
};
pub use brute::{brute_force_adversary, BRUTE_FORCE_ADVERSARY_LIMIT};
pub use qptas::{
    default_moment_count, moment_error_bound, qptas_adversary, qptas_search, CompressedState,
    QptasOutcome, MAX_DEFAULT_MOMENTS, STATE_LIMIT,
};

use crate::cost::expected_cost;
use crate::error::Result;
use crate::model::{Instance, Permutation, ProbVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdvMethod {
    Brute,
    Advbar,
    Approx,
    Qptas,
}

impl std::str::FromStr for AdvMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "brute" => Ok(Self::Brute),
            "advbar" => Ok(Self::Advbar),
            "approx" => Ok(Self::Approx),
            "qptas" => Ok(Self::Qptas),
            other => Err(format!("unknown adversary method {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdvResult {
    pub method: AdvMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<Case>,
    pub p: ProbVector,
    /// Exact expected cost of `p` under the order.
    pub value: f64,
    /// Objective of the surrogate problem the method optimizes, when it has
    /// one (the truncated-horizon cost for `advbar`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surrogate: Option<f64>,
    /// Set when the overlap-case path had to leave the modified windows at
    /// some stage (see [`approx_adversary`]).
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub relaxed: bool,
}

impl AdvResult {
    pub(crate) fn evaluate(
        inst: &Instance,
        sigma: &Permutation,
        p: ProbVector,
        method: AdvMethod,
    ) -> Result<Self> {
        let value = expected_cost(inst, sigma, &p)?.total;
        Ok(Self {
            method,
            case: None,
            p,
            value,
            surrogate: None,
            relaxed: false,
        })
    }
}

/// Runs the named adversary. `moments` is only used by `Qptas`, which also
/// expects an instance already on the `1/n^3` grid.
pub fn solve_adversary(
    inst: &Instance,
    sigma: &Permutation,
    method: AdvMethod,
    moments: Option<usize>,
) -> Result<AdvResult> {
    match method {
        AdvMethod::Brute => brute_force_adversary(inst, sigma),
        AdvMethod::Advbar => advbar_adversary(inst, sigma),
        AdvMethod::Approx => approx_adversary(inst, sigma),
        AdvMethod::Qptas => qptas_adversary(inst, sigma, moments),
    }
}
