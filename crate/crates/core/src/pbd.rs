//! Poisson-binomial prefix distributions.
//!
//! `PrefixPmf` holds the distribution of the number of passes among the first
//! ν tests. Rows are built by the O(ν²) recurrence
//! `D_ν[j] = D_{ν-1}[j-1]·p_ν + D_{ν-1}[j]·(1-p_ν)`.

use statrs::function::erf::erfc;

use crate::model::Window;

/// Distribution of the pass count after `nu` tests; `mass[j] = Pr[count = j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixPmf {
    mass: Vec<f64>,
}

impl Default for PrefixPmf {
    fn default() -> Self {
        Self::empty()
    }
}

impl PrefixPmf {
    /// Stage 0: no tests performed, zero passes with certainty.
    pub fn empty() -> Self {
        Self { mass: vec![1.0] }
    }

    /// Wraps raw masses. No normalization is applied.
    pub fn from_mass(mass: Vec<f64>) -> Self {
        assert!(!mass.is_empty(), "a pmf row has at least one entry");
        Self { mass }
    }

    pub fn nu(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Pr[count = j], zero outside the support.
    pub fn at(&self, j: i64) -> f64 {
        if j < 0 {
            0.0
        } else {
            self.mass.get(j as usize).copied().unwrap_or(0.0)
        }
    }

    /// Convolves in one more Bernoulli(p) test.
    pub fn push(&mut self, p: f64) {
        let q = 1.0 - p;
        self.mass.push(0.0);
        for j in (1..self.mass.len()).rev() {
            self.mass[j] = self.mass[j] * q + self.mass[j - 1] * p;
        }
        self.mass[0] *= q;
    }

    pub fn pushed(&self, p: f64) -> Self {
        let mut next = self.clone();
        next.push(p);
        next
    }

    /// Cumulative sums `Pr[count <= j]` for `j = 0..=nu`.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = Kahan::default();
        self.mass
            .iter()
            .map(|&m| {
                acc.add(m);
                acc.value()
            })
            .collect()
    }
}

/// Exact pmf of the pass count for independent tests with pass
/// probabilities `p`.
pub fn pmf(p: &[f64]) -> PrefixPmf {
    let mut row = PrefixPmf::empty();
    row.mass.reserve(p.len());
    for &pi in p {
        row.push(pi);
    }
    row
}

/// Probability that the pass count lands in `w` (integer points only),
/// clamped to `[0, 1]` against accumulated rounding.
pub fn window_mass(row: &PrefixPmf, w: &Window) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    let lo = w.lo.ceil().max(0.0);
    let hi = w.hi.floor().min(row.nu() as f64);
    if hi < lo {
        return 0.0;
    }
    let mut acc = Kahan::default();
    for &m in &row.mass[lo as usize..=hi as usize] {
        acc.add(m);
    }
    acc.value().clamp(0.0, 1.0)
}

/// Mean and variance of a Poisson-binomial variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

pub fn moments(p: &[f64]) -> Moments {
    Moments {
        mean: p.iter().sum(),
        variance: p.iter().map(|&x| x * (1.0 - x)).sum(),
    }
}

/// Total-variation distance; the shorter row is padded with zeros.
pub fn tv_distance(a: &PrefixPmf, b: &PrefixPmf) -> f64 {
    let len = a.mass.len().max(b.mass.len());
    let mut acc = Kahan::default();
    for j in 0..len as i64 {
        acc.add((a.at(j) - b.at(j)).abs());
    }
    0.5 * acc.value()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Normal density with the given mean and standard deviation.
pub fn normal_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}
