//! Instances, orders, probability vectors and the stage windows built on them.
//!
//! Indices are 0-based in the library. Files and the CLI use 1-based test
//! numbers; conversion happens at those boundaries only.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for checking that a probability vector lies in the uncertainty box.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Tolerance for membership in real-valued windows (expected-value and modified windows).
pub const WINDOW_TOL: f64 = 1e-9;

/// One test: its cost and the interval containing its pass probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Test {
    pub cost: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Test {
    pub fn new(cost: f64, lo: f64, hi: f64) -> Self {
        Self { cost, lo, hi }
    }

    /// A test whose pass probability is known exactly.
    pub fn point(cost: f64, p: f64) -> Self {
        Self { cost, lo: p, hi: p }
    }
}

/// A k-of-n instance with per-test probability intervals.
///
/// Always valid once constructed: `0 <= lo <= hi <= 1`, finite non-negative
/// costs, `1 <= k <= n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    k: usize,
    tests: Vec<Test>,
}

/// On-disk layout: `{"n": .., "k": .., "tests": [{"cost", "lo", "hi"}, ..]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    k: usize,
    tests: Vec<Test>,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.n != file.tests.len() {
            return Err(Error::CountMismatch {
                declared: file.n,
                actual: file.tests.len(),
            });
        }
        Instance::new(file.k, file.tests)
    }
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        InstanceFile {
            n: inst.tests.len(),
            k: inst.k,
            tests: inst.tests,
        }
    }
}

impl Instance {
    pub fn new(k: usize, tests: Vec<Test>) -> Result<Self> {
        let inst = Self { k, tests };
        inst.validate()?;
        Ok(inst)
    }

    /// Builds an instance from parallel cost / lower / upper sequences.
    pub fn from_parts(k: usize, costs: &[f64], lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != costs.len() {
            return Err(Error::DimensionMismatch {
                expected: costs.len(),
                actual: lo.len(),
            });
        }
        if hi.len() != costs.len() {
            return Err(Error::DimensionMismatch {
                expected: costs.len(),
                actual: hi.len(),
            });
        }
        let tests = costs
            .iter()
            .zip(lo)
            .zip(hi)
            .map(|((&c, &l), &h)| Test::new(c, l, h))
            .collect();
        Self::new(k, tests)
    }

    /// Checks every instance invariant and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        let n = self.tests.len();
        if n == 0 {
            return Err(Error::EmptyInstance);
        }
        if self.k == 0 || self.k > n {
            return Err(Error::KOutOfRange { k: self.k, n });
        }
        for (i, t) in self.tests.iter().enumerate() {
            let index = i + 1;
            if !t.cost.is_finite() || t.cost < 0.0 {
                return Err(Error::InvalidCost { index });
            }
            let in_unit = |x: f64| (0.0..=1.0).contains(&x);
            if !in_unit(t.lo) || !in_unit(t.hi) {
                return Err(Error::ProbabilityOutOfRange { index });
            }
            if t.lo > t.hi {
                return Err(Error::IntervalInverted { index });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.tests.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tests(&self) -> &[Test] {
        &self.tests
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.tests[i].cost
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.tests[i].lo
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.tests[i].hi
    }

    pub fn costs(&self) -> Vec<f64> {
        self.tests.iter().map(|t| t.cost).collect()
    }

    pub fn lows(&self) -> ProbVector {
        ProbVector(self.tests.iter().map(|t| t.lo).collect())
    }

    pub fn highs(&self) -> ProbVector {
        ProbVector(self.tests.iter().map(|t| t.hi).collect())
    }

    pub fn max_cost(&self) -> f64 {
        self.tests.iter().map(|t| t.cost).fold(0.0, f64::max)
    }

    pub fn min_cost(&self) -> f64 {
        self.tests.iter().map(|t| t.cost).fold(f64::INFINITY, f64::min)
    }

    pub fn has_unit_costs(&self) -> bool {
        self.tests.iter().all(|t| t.cost == 1.0)
    }

    /// Largest ε such that every interval lies in `[ε, 1-ε]`.
    pub fn epsilon_bound(&self) -> f64 {
        self.tests
            .iter()
            .map(|t| t.lo.min(1.0 - t.hi))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_epsilon_bounded(&self, eps: f64) -> bool {
        self.epsilon_bound() >= eps
    }

    /// Same tests with unit costs.
    pub fn with_unit_costs(&self) -> Instance {
        Instance {
            k: self.k,
            tests: self
                .tests
                .iter()
                .map(|t| Test::new(1.0, t.lo, t.hi))
                .collect(),
        }
    }

    /// The (n-k+1)-of-n instance on failure indicators: intervals become `[1-hi, 1-lo]`.
    ///
    /// Unconditional; see [`Instance::complement_reduce`] for the k > n/2 dispatch.
    pub fn complemented(&self) -> Instance {
        let n = self.n();
        Instance {
            k: n - self.k + 1,
            tests: self
                .tests
                .iter()
                .map(|t| Test::new(t.cost, 1.0 - t.hi, 1.0 - t.lo))
                .collect(),
        }
    }

    /// Reduces to `k <= n/2` when needed. The flag reports whether the
    /// returned instance is complemented (and so probabilities must be mapped
    /// through `1 - p` to return to the original).
    pub fn complement_reduce(&self) -> (Instance, bool) {
        if 2 * self.k > self.n() {
            (self.complemented(), true)
        } else {
            (self.clone(), false)
        }
    }

    /// Rounds every `lo` down and every `hi` up to the grid `Z / n^3`.
    pub fn round_to_grid(&self) -> Instance {
        let scale = grid_scale(self.n());
        let tests = self
            .tests
            .iter()
            .map(|t| {
                let lo = snapped(t.lo * scale, f64::floor) / scale;
                let hi = snapped(t.hi * scale, f64::ceil) / scale;
                Test::new(t.cost, lo.max(0.0), hi.min(1.0))
            })
            .collect();
        Instance { k: self.k, tests }
    }

    /// Sum of `lo` and `hi` over all tests: the last-stage expected-value
    /// window, identical for every order.
    pub fn full_expected_window(&self) -> Window {
        let lo = self.tests.iter().map(|t| t.lo).sum();
        let hi = self.tests.iter().map(|t| t.hi).sum();
        Window::new(lo, hi)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Instance> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `n^3` as a float.
pub fn grid_scale(n: usize) -> f64 {
    let n = n as f64;
    n * n * n
}

/// Rounds `scaled` with `round`, but snaps values that are already integers
/// up to float noise so grid points stay fixed.
fn snapped(scaled: f64, round: fn(f64) -> f64) -> f64 {
    let nearest = scaled.round();
    if (scaled - nearest).abs() <= 64.0 * f64::EPSILON * scaled.abs().max(1.0) {
        nearest
    } else {
        round(scaled)
    }
}

/// Numerator `z` with `x = z / n^3`, if `x` lies on the grid.
pub fn grid_numerator(x: f64, n: usize) -> Option<u64> {
    let scaled = x * grid_scale(n);
    let nearest = scaled.round();
    ((scaled - nearest).abs() <= 1e-9 * scaled.abs().max(1.0) && nearest >= 0.0)
        .then_some(nearest as u64)
}

/// A testing order over all n tests (0-based indices; serialized 1-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n {
                return Err(Error::InvalidPermutation(format!(
                    "index {} out of range 1..={n}",
                    i + 1
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPermutation(format!(
                    "index {} repeated",
                    i + 1
                )));
            }
        }
        Ok(Self(order))
    }

    pub fn from_one_based(order: &[usize]) -> Result<Self> {
        let zero_based = order
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| Error::InvalidPermutation("test numbers start at 1".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(zero_based)
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    /// Stage-ordered view of per-test values.
    pub fn apply<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.0.iter().map(|&i| values[i]).collect()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

/// Concrete pass probabilities, indexed by test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbVector(pub Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn complement(&self) -> ProbVector {
        ProbVector(self.0.iter().map(|p| 1.0 - p).collect())
    }

    /// Checks `lo_i <= p_i <= hi_i` up to [`MEMBERSHIP_TOL`].
    pub fn check_member(&self, inst: &Instance) -> Result<()> {
        if self.len() != inst.n() {
            return Err(Error::DimensionMismatch {
                expected: inst.n(),
                actual: self.len(),
            });
        }
        for (i, (&p, t)) in self.0.iter().zip(inst.tests()).enumerate() {
            if !(p >= t.lo - MEMBERSHIP_TOL && p <= t.hi + MEMBERSHIP_TOL) {
                return Err(Error::OutsideUncertaintySet { index: i + 1 });
            }
        }
        Ok(())
    }

    pub fn is_member(&self, inst: &Instance) -> bool {
        self.check_member(inst).is_ok()
    }
}

/// Closed interval. `lo > hi` means empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    /// Real-valued membership, tolerant by [`WINDOW_TOL`].
    pub fn contains(&self, x: f64) -> bool {
        !self.is_empty() && x >= self.lo - WINDOW_TOL && x <= self.hi + WINDOW_TOL
    }

    pub fn intersect(&self, other: &Window) -> Window {
        Window::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        !self.is_empty() && !other.is_empty() && self.lo <= other.hi && other.lo <= self.hi
    }

    /// Number of integers in the window.
    pub fn integer_count(&self) -> usize {
        let lo = self.lo.ceil();
        let hi = self.hi.floor();
        if hi < lo {
            0
        } else {
            (hi - lo) as usize + 1
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// `N_ν = [(ν-n+k)^+, k-1]`: pass counts after ν tests that leave the outcome
/// undetermined. Empty at ν = n.
pub fn non_stopping_window(nu: usize, n: usize, k: usize) -> Window {
    let lo = (nu + k).saturating_sub(n);
    Window::new(lo as f64, k as f64 - 1.0)
}

/// Continuation window widened by one on each side from stage n/2 onward:
/// `[0, k-1]` if 2ν < n, else `[(ν-n+k-1)^+, k]`.
pub fn modified_window(nu: usize, n: usize, k: usize) -> Window {
    if 2 * nu < n {
        Window::new(0.0, k as f64 - 1.0)
    } else {
        let lo = (nu + k).saturating_sub(n + 1);
        Window::new(lo as f64, k as f64)
    }
}

/// Range of the prefix mean over the first ν tests of `sigma`.
pub fn expected_value_window(inst: &Instance, sigma: &Permutation, nu: usize) -> Window {
    let prefix = &sigma.as_slice()[..nu];
    let lo = prefix.iter().map(|&i| inst.lo(i)).sum();
    let hi = prefix.iter().map(|&i| inst.hi(i)).sum();
    Window::new(lo, hi)
}

/// All prefix windows `E_0..=E_n` for `sigma`.
pub fn expected_value_windows(inst: &Instance, sigma: &Permutation) -> Vec<Window> {
    let mut out = Vec::with_capacity(inst.n() + 1);
    let (mut lo, mut hi) = (0.0, 0.0);
    out.push(Window::new(0.0, 0.0));
    for &i in sigma.as_slice() {
        lo += inst.lo(i);
        hi += inst.hi(i);
        out.push(Window::new(lo, hi));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, k: usize, lo: f64, hi: f64) -> Instance {
        Instance::new(k, vec![Test::new(1.0, lo, hi); n]).unwrap()
    }

    #[test]
    fn validate_accepts_single_test() {
        assert!(Instance::from_parts(1, &[1.0], &[0.2], &[0.8]).is_ok());
    }

    #[test]
    fn validate_reports_inverted_interval() {
        let err = Instance::from_parts(1, &[1.0], &[0.9], &[0.1]).unwrap_err();
        assert_eq!(err.to_string(), "interval inverted at index 1");
    }

    #[test]
    fn validate_reports_k_out_of_range() {
        let err = Instance::from_parts(0, &[1.0], &[0.2], &[0.8]).unwrap_err();
        assert!(err.to_string().starts_with("k out of range"));
        assert!(matches!(
            Instance::from_parts(3, &[1.0, 1.0], &[0.2; 2], &[0.8; 2]),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn validate_rejects_bad_costs_and_probabilities() {
        assert!(matches!(
            Instance::from_parts(1, &[-1.0], &[0.2], &[0.8]),
            Err(Error::InvalidCost { index: 1 })
        ));
        assert!(matches!(
            Instance::from_parts(1, &[f64::NAN], &[0.2], &[0.8]),
            Err(Error::InvalidCost { .. })
        ));
        assert!(matches!(
            Instance::from_parts(1, &[1.0, 1.0], &[0.2, -0.1], &[0.8, 0.5]),
            Err(Error::ProbabilityOutOfRange { index: 2 })
        ));
        assert!(matches!(
            Instance::from_parts(1, &[1.0], &[0.2], &[1.5]),
            Err(Error::ProbabilityOutOfRange { index: 1 })
        ));
    }

    #[test]
    fn complement_reduce_flips_large_k() {
        let (c, flag) = uniform(4, 3, 0.2, 0.5).complement_reduce();
        assert!(flag);
        assert_eq!(c.k(), 2);
        for t in c.tests() {
            assert!((t.lo - 0.5).abs() < 1e-15 && (t.hi - 0.8).abs() < 1e-15);
        }
    }

    #[test]
    fn complement_reduce_keeps_small_k() {
        let inst = uniform(4, 2, 0.2, 0.5);
        let (c, flag) = inst.complement_reduce();
        assert!(!flag);
        assert_eq!(c, inst);
    }

    #[test]
    fn complement_reduce_odd_n_middle_k() {
        let (c, flag) = uniform(3, 2, 0.1, 0.3).complement_reduce();
        assert!(flag);
        assert_eq!(c.k(), 2);
        assert!((c.lo(0) - 0.7).abs() < 1e-15 && (c.hi(0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn round_to_grid_eighths() {
        let inst = Instance::from_parts(1, &[1.0, 1.0], &[0.30, 0.5], &[0.30, 0.5]).unwrap();
        let r = inst.round_to_grid();
        assert_eq!(r.lo(0), 0.25);
        assert_eq!(r.hi(0), 0.375);
        // already on the grid
        assert_eq!(r.lo(1), 0.5);
        assert_eq!(r.hi(1), 0.5);
    }

    #[test]
    fn round_to_grid_widens() {
        let inst = Instance::from_parts(1, &[1.0, 1.0], &[0.1, 0.9], &[0.1, 0.9]).unwrap();
        let r = inst.round_to_grid();
        assert_eq!(r.lows().0, vec![0.0, 0.875]);
        assert_eq!(r.highs().0, vec![0.125, 1.0]);
    }

    #[test]
    fn round_to_grid_keeps_thirds_of_cubes() {
        // 7/27 is not exactly representable; it must still be treated as on-grid.
        let x = 7.0 / 27.0;
        let inst = Instance::from_parts(1, &[1.0; 3], &[x; 3], &[x; 3]).unwrap();
        let r = inst.round_to_grid();
        assert_eq!(r.lo(0), x);
        assert_eq!(r.hi(0), x);
        assert_eq!(grid_numerator(x, 3), Some(7));
        assert_eq!(grid_numerator(0.3, 3), None);
    }

    #[test]
    fn non_stopping_window_examples() {
        assert_eq!(non_stopping_window(0, 10, 3), Window::new(0.0, 2.0));
        assert_eq!(non_stopping_window(9, 10, 3), Window::new(2.0, 2.0));
        assert_eq!(non_stopping_window(2, 3, 2), Window::new(1.0, 1.0));
        assert!(non_stopping_window(10, 10, 3).is_empty());
    }

    #[test]
    fn modified_window_examples() {
        assert_eq!(modified_window(9, 20, 9), Window::new(0.0, 8.0));
        assert_eq!(modified_window(10, 20, 9), Window::new(0.0, 9.0));
        assert_eq!(modified_window(4, 4, 2), Window::new(1.0, 2.0));
        // odd n: 2ν >= n decides, no rounding
        assert_eq!(modified_window(2, 5, 2), Window::new(0.0, 1.0));
        assert_eq!(modified_window(3, 5, 2), Window::new(0.0, 2.0));
    }

    #[test]
    fn expected_value_window_examples() {
        let inst =
            Instance::from_parts(1, &[1.0; 3], &[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6]).unwrap();
        let id = Permutation::identity(3);
        assert_eq!(expected_value_window(&inst, &id, 0), Window::new(0.0, 0.0));
        let w = expected_value_window(&inst, &id, 2);
        assert!((w.lo - 0.3).abs() < 1e-15 && (w.hi - 0.9).abs() < 1e-15);

        let point = Instance::from_parts(1, &[1.0; 2], &[0.3, 0.6], &[0.3, 0.6]).unwrap();
        let w = expected_value_window(&point, &Permutation::identity(2), 2);
        assert_eq!(w.lo, w.hi);
    }

    #[test]
    fn permutation_rejects_repeats() {
        assert!(Permutation::from_one_based(&[1, 1, 2]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        assert!(Permutation::from_one_based(&[4, 1, 2]).is_err());
        let p = Permutation::from_one_based(&[3, 1, 2]).unwrap();
        assert_eq!(p.as_slice(), &[2, 0, 1]);
        assert_eq!(p.to_string(), "<3,1,2>");
    }

    #[test]
    fn membership_tolerance() {
        let inst = uniform(2, 1, 0.2, 0.4);
        assert!(ProbVector::new(vec![0.2 - 1e-13, 0.4 + 1e-13]).is_member(&inst));
        assert!(!ProbVector::new(vec![0.2 - 1e-9, 0.3]).is_member(&inst));
    }

    #[test]
    fn json_rejects_unknown_fields_and_bad_counts() {
        let ok = r#"{"n":1,"k":1,"tests":[{"cost":1.0,"lo":0.2,"hi":0.8}]}"#;
        assert!(Instance::from_json(ok).is_ok());
        let extra = r#"{"n":1,"k":1,"tests":[{"cost":1.0,"lo":0.2,"hi":0.8,"x":1}]}"#;
        assert!(Instance::from_json(extra).is_err());
        let top = r#"{"n":1,"k":1,"m":2,"tests":[{"cost":1.0,"lo":0.2,"hi":0.8}]}"#;
        assert!(Instance::from_json(top).is_err());
        let count = r#"{"n":2,"k":1,"tests":[{"cost":1.0,"lo":0.2,"hi":0.8}]}"#;
        assert!(Instance::from_json(count).is_err());
        let inverted = r#"{"n":1,"k":1,"tests":[{"cost":1.0,"lo":0.9,"hi":0.1}]}"#;
        assert!(Instance::from_json(inverted).is_err());
    }

    #[test]
    fn json_field_order() {
        let inst = uniform(1, 1, 0.25, 0.5);
        let s = serde_json::to_string(&inst).unwrap();
        assert_eq!(s, r#"{"n":1,"k":1,"tests":[{"cost":1.0,"lo":0.25,"hi":0.5}]}"#);
    }
}
