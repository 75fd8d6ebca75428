use super::{AdvMethod, AdvResult};
use crate::error::Result;
use crate::model::{Instance, Permutation, ProbVector, Window};
use crate::pbd::{window_mass, Kahan, PrefixPmf};

/// Number of tests after which the truncated process stops: `⌈n/2⌉`.
pub fn advbar_horizon(n: usize) -> usize {
    n.div_ceil(2)
}

/// Cost of the truncated process that stops after k passes or after the
/// first `⌈n/2⌉` tests: `Σ_{ν ≤ ⌈n/2⌉} c_{σ_ν} · Pr[PBD_{ν-1} < k]`.
///
/// Uses the instance as given; no complement reduction.
pub fn advbar_cost(inst: &Instance, sigma: &Permutation, p: &ProbVector) -> Result<f64> {
    sigma.check_len(inst.n())?;
    if p.len() != inst.n() {
        return Err(crate::error::Error::DimensionMismatch {
            expected: inst.n(),
            actual: p.len(),
        });
    }
    let below_k = Window::new(0.0, inst.k() as f64 - 1.0);
    let mut row = PrefixPmf::empty();
    let mut total = Kahan::default();
    for &test in &sigma.as_slice()[..advbar_horizon(inst.n())] {
        total.add(inst.cost(test) * window_mass(&row, &below_k));
        row.push(p.as_slice()[test]);
    }
    Ok(total.value())
}

/// Exact optimum of the truncated problem: every probability at its lower
/// end (after reducing to k ≤ n/2, so `hi` when the instance was complemented).
///
/// `surrogate` holds the truncated cost on the reduced instance; `value` is
/// the full expected cost of the returned `p`.
pub fn advbar_adversary(inst: &Instance, sigma: &Permutation) -> Result<AdvResult> {
    let (reduced, flipped) = inst.complement_reduce();
    let surrogate = advbar_cost(&reduced, sigma, &reduced.lows())?;
    let p = if flipped { inst.highs() } else { inst.lows() };
    let mut result = AdvResult::evaluate(inst, sigma, p, AdvMethod::Advbar)?;
    result.surrogate = Some(surrogate);
    Ok(result)
}
