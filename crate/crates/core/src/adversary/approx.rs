//! Window-based approximate adversary for ε-bounded instances.
//!
//! The last-stage expected-value window `E_n` (independent of the order) is
//! compared with the widened window `[k-1, k]`. Disjoint above means every
//! probability at its lower end, disjoint below means every probability at
//! its upper end, and otherwise the adversary follows a path whose prefix
//! means stay inside the modified windows at every stage.

use serde::Serialize;

use super::{AdvMethod, AdvResult};
use crate::error::{Error, Result};
use crate::model::{
    expected_value_windows, modified_window, Instance, Permutation, ProbVector, Window, WINDOW_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Above,
    Below,
    Overlap,
}

/// Lower and upper bounds on the continuation probability at one stage when
/// the prefix mean lies in the modified window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

/// `w_ν = min(n-ν, k-1)`.
fn window_width(nu: usize, n: usize, k: usize) -> f64 {
    (n - nu).min(k - 1) as f64
}

/// `α_ν` and `β_ν` for stage `1 <= nu <= n-1`.
///
/// With `k = 1` the width `w_ν` is zero and both bounds collapse to 0.
pub fn window_bounds(inst: &Instance, nu: usize, eps: f64) -> Result<AlphaBeta> {
    let n = inst.n();
    if nu == 0 || nu >= n {
        return Err(Error::StageOutOfRange {
            nu,
            max: n.saturating_sub(1),
        });
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    let w = window_width(nu, n, inst.k());
    let root = (nu as f64).sqrt();
    let alpha = if 3.0 * root <= (w / 2.0).ceil() {
        0.25
    } else {
        (w / 4.0) / (6.0 * root)
    };
    Ok(AlphaBeta {
        alpha,
        beta: beta_bound(nu, n, inst.k(), eps),
    })
}

/// `β_ν = min(2√2·w_ν/√(εν), 1)`, with `β_0 = 1` for the first test.
pub fn beta_bound(nu: usize, n: usize, k: usize, eps: f64) -> f64 {
    if nu == 0 {
        return 1.0;
    }
    let w = window_width(nu.min(n), n, k);
    (2.0 * std::f64::consts::SQRT_2 * w / (eps * nu as f64).sqrt()).min(1.0)
}

/// A probability vector in the box whose prefix means lie in the modified
/// window at every stage.
///
/// Built backward from the midpoint of `E_n ∩ [k-1, k]`: at each stage the
/// test's probability is taken at the middle of the range that keeps the
/// remaining prefix mean inside both `E_{ν-1}` and the modified window.
pub fn straddling_path(inst: &Instance, sigma: &Permutation) -> Result<ProbVector> {
    sigma.check_len(inst.n())?;
    backward_path(inst, sigma, false).map(|(p, _)| p)
}

/// Backward construction. With `relax` set, a stage whose modified-window
/// range is empty falls back to the range that only keeps the prefix mean
/// inside `E_{ν-1}`, which is never empty; the flag in the result records it.
fn backward_path(inst: &Instance, sigma: &Permutation, relax: bool) -> Result<(ProbVector, bool)> {
    let (n, k) = (inst.n(), inst.k());
    let expected = expected_value_windows(inst, sigma);
    let last = expected[n].intersect(&modified_window(n, n, k));
    if last.is_empty() {
        return Err(Error::NotOverlapCase);
    }

    let order = sigma.as_slice();
    let mut p = vec![0.0; n];
    let mut target = last.midpoint();
    let mut relaxed = false;
    for stage in (1..=n).rev() {
        let test = order[stage - 1];
        let (lo, hi) = (inst.lo(test), inst.hi(test));
        let prev = expected[stage - 1];
        let allowed = prev.intersect(&modified_window(stage - 1, n, k));
        let strict = Window::new((target - allowed.hi).max(lo), (target - allowed.lo).min(hi));
        let range = if !allowed.is_empty() && strict.lo <= strict.hi + WINDOW_TOL {
            strict
        } else if relax {
            relaxed = true;
            Window::new((target - prev.hi).max(lo), (target - prev.lo).min(hi))
        } else {
            return Err(Error::PathInfeasible { stage });
        };
        let choice = if range.lo <= range.hi {
            range.midpoint()
        } else {
            range.lo
        };
        p[test] = choice.clamp(lo, hi);
        target -= p[test];
    }

    if !relaxed {
        let mut mean = 0.0;
        for (stage, &test) in order.iter().enumerate() {
            mean += p[test];
            if !modified_window(stage + 1, n, k).contains(mean) {
                return Err(Error::PathInfeasible { stage: stage + 1 });
            }
        }
    }
    Ok((ProbVector::new(p), relaxed))
}

/// Three-case approximate adversary.
///
/// The case is read off the instance as given; it is invariant under
/// complementation, so `Above` always means every probability at `lo` and
/// `Below` every probability at `hi`. The overlap path is built on the
/// instance reduced to `k <= n/2` and mapped back. Ties `E_n^lo = k` or
/// `E_n^hi = k-1` count as overlap. When the strict path is infeasible
/// (possible on small instances with `n < 2/ε`), the relaxed construction is
/// used and `relaxed` is set on the result.
pub fn approx_adversary(inst: &Instance, sigma: &Permutation) -> Result<AdvResult> {
    sigma.check_len(inst.n())?;
    if inst.epsilon_bound() <= 0.0 {
        log::warn!("approximate adversary on an instance that is not ε-bounded for any ε > 0");
    }
    let case = classify(inst);
    let (p, relaxed) = match case {
        Case::Above => (inst.lows(), false),
        Case::Below => (inst.highs(), false),
        Case::Overlap => {
            let (reduced, flipped) = inst.complement_reduce();
            let (q, relaxed) = backward_path(&reduced, sigma, true)?;
            (if flipped { q.complement() } else { q }, relaxed)
        }
    };
    let mut result = AdvResult::evaluate(inst, sigma, p, AdvMethod::Approx)?;
    result.case = Some(case);
    result.relaxed = relaxed;
    Ok(result)
}

/// Position of `E_n` relative to `[k-1, k]`; independent of the order.
pub fn classify(inst: &Instance) -> Case {
    let e = inst.full_expected_window();
    let k = inst.k() as f64;
    if e.lo > k {
        Case::Above
    } else if e.hi < k - 1.0 {
        Case::Below
    } else {
        Case::Overlap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Test;

    fn uniform(n: usize, k: usize, lo: f64, hi: f64) -> Instance {
        Instance::new(k, vec![Test::new(1.0, lo, hi); n]).unwrap()
    }

    #[test]
    fn window_bounds_second_branch() {
        let inst = uniform(400, 50, 0.25, 0.75);
        let ab = window_bounds(&inst, 100, 0.25).unwrap();
        assert!((ab.alpha - 12.25 / 60.0).abs() < 1e-15);
        assert_eq!(ab.beta, 1.0);
    }

    #[test]
    fn window_bounds_first_branch() {
        // w = min(19, 9) = 9, ⌈4.5⌉ = 5 >= 3
        let inst = uniform(20, 10, 0.25, 0.75);
        assert_eq!(window_bounds(&inst, 1, 0.25).unwrap().alpha, 0.25);
    }

    #[test]
    fn window_bounds_last_stage_beta() {
        let n = 1000;
        let eps = 0.25;
        let inst = uniform(n, 10, 0.25, 0.75);
        let ab = window_bounds(&inst, n - 1, eps).unwrap();
        let expected = (2.0 * 2f64.sqrt() / (eps * (n - 1) as f64).sqrt()).min(1.0);
        assert!((ab.beta - expected).abs() < 1e-15);
        assert!(ab.beta < 1.0);
    }

    #[test]
    fn window_bounds_errors() {
        let inst = uniform(10, 3, 0.25, 0.75);
        assert!(matches!(window_bounds(&inst, 1, 0.0), Err(Error::ZeroEpsilon)));
        assert!(window_bounds(&inst, 0, 0.25).is_err());
        assert!(window_bounds(&inst, 10, 0.25).is_err());
    }

    #[test]
    fn straddling_path_uniform_example() {
        let inst = uniform(4, 2, 0.3, 0.7);
        let p = straddling_path(&inst, &Permutation::identity(4)).unwrap();
        assert!(p.is_member(&inst));
        let mut mean = 0.0;
        for (nu, &pi) in p.as_slice().iter().enumerate() {
            mean += pi;
            assert!(modified_window(nu + 1, 4, 2).contains(mean));
        }
        // the all-lower vector is itself such a path
        let mut mean = 0.0;
        for nu in 1..=4 {
            mean += 0.3;
            assert!(modified_window(nu, 4, 2).contains(mean));
        }
    }

    #[test]
    fn straddling_path_degenerate() {
        let inst = Instance::new(
            2,
            vec![Test::point(1.0, 0.3), Test::point(1.0, 0.4), Test::point(1.0, 0.5), Test::point(1.0, 0.6)],
        )
        .unwrap();
        let p = straddling_path(&inst, &Permutation::identity(4)).unwrap();
        assert_eq!(p, inst.lows());
    }

    #[test]
    fn straddling_path_requires_overlap() {
        let inst = uniform(10, 1, 0.9, 0.95);
        assert!(matches!(
            straddling_path(&inst, &Permutation::identity(10)),
            Err(Error::NotOverlapCase)
        ));
    }

    #[test]
    fn approx_case_dispatch() {
        let above = uniform(10, 1, 0.9, 0.95);
        let r = approx_adversary(&above, &Permutation::identity(10)).unwrap();
        assert_eq!(r.case, Some(Case::Above));
        assert_eq!(r.p, above.lows());

        let below = uniform(10, 5, 0.01, 0.02);
        let r = approx_adversary(&below, &Permutation::identity(10)).unwrap();
        assert_eq!(r.case, Some(Case::Below));
        assert_eq!(r.p, below.highs());
    }

    #[test]
    fn approx_boundary_tie_is_overlap() {
        // E_n^lo = 4 * 0.5 = 2 = k
        let inst = uniform(4, 2, 0.5, 0.6);
        assert_eq!(classify(&inst), Case::Overlap);
        let r = approx_adversary(&inst, &Permutation::identity(4)).unwrap();
        assert_eq!(r.case, Some(Case::Overlap));
        assert!(r.p.is_member(&inst));
    }

    #[test]
    fn small_or_instance_relaxes() {
        // k = 1, n = 3: the modified window before stage n/2 is [0, 0], which a
        // positive lower end cannot meet.
        let inst = uniform(3, 1, 0.2, 0.4);
        let sigma = Permutation::identity(3);
        assert!(matches!(
            straddling_path(&inst, &sigma),
            Err(Error::PathInfeasible { .. })
        ));
        let r = approx_adversary(&inst, &sigma).unwrap();
        assert!(r.relaxed);
        assert!(r.p.is_member(&inst));
    }

    #[test]
    fn beta_non_increasing() {
        for (n, k) in [(10, 3), (50, 25), (200, 7)] {
            let mut prev = beta_bound(0, n, k, 0.1);
            for nu in 1..n {
                let b = beta_bound(nu, n, k, 0.1);
                assert!(b <= prev);
                prev = b;
            }
        }
    }
}
