//! Experiment drivers and report persistence.
//!
//! Every point of an experiment derives its own seed from the configuration,
//! runs independently on the rayon pool, and is collected in input order, so
//! a report is a pure function of its configuration.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{gen_bad_example, gen_random, BadExampleParams};
use crate::adversary::{
    advbar_adversary, approx_adversary, brute_force_adversary, qptas_adversary,
};
use crate::cost::{brute_force_cost, expected_cost};
use crate::error::Result;
use crate::model::{Instance, Permutation, ProbVector};
use crate::solver::{brute_force_drst, general_solve, unit_cost_solve};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    UniformRandom,
    EpsilonBoundedRandom,
    AppendixGreedy,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform-random" => Ok(Self::UniformRandom),
            "epsilon-bounded-random" => Ok(Self::EpsilonBoundedRandom),
            "appendix-greedy" => Ok(Self::AppendixGreedy),
            other => Err(format!("unknown family {other:?}")),
        }
    }
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Self::UniformRandom => "uniform-random",
            Self::EpsilonBoundedRandom => "epsilon-bounded-random",
            Self::AppendixGreedy => "appendix-greedy",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub epsilons: Vec<f64>,
    /// Directory receiving `report.json` and `report.csv`.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::EpsilonBoundedRandom,
            sizes: vec![3, 5, 7],
            trials: 8,
            seed: 1,
            epsilons: vec![0.2, 0.3],
            output: None,
        }
    }
}

/// One CSV record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub family: String,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub seed: u64,
    pub method: String,
    pub value: f64,
    pub ratio: f64,
}

/// Header of every CSV report.
pub const CSV_COLUMNS: [&str; 8] = ["family", "n", "k", "eps", "seed", "method", "value", "ratio"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyPoint {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub greedy: f64,
    pub alternative: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyReport {
    pub points: Vec<GreedyPoint>,
    /// Per size, `min over ε of ratio·ε`.
    pub fitted_constants: Vec<(usize, f64)>,
}

/// Greedy order for the adversarial family: increasing `c/lo`, zero-cost
/// tests first, ties by index.
pub fn greedy_ratio_order(inst: &Instance) -> Permutation {
    let key = |i: usize| {
        if inst.cost(i) == 0.0 {
            0.0
        } else if inst.lo(i) > 0.0 {
            inst.cost(i) / inst.lo(i)
        } else {
            f64::INFINITY
        }
    };
    let mut idx: Vec<usize> = (0..inst.n()).collect();
    idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    Permutation::new(idx).expect("sorted indices form a permutation")
}

/// Compares the greedy order with the block order I, II, III on the
/// adversarial family, for every size and ε of the configuration.
pub fn run_greedy_ratio_experiment(cfg: &ExperimentConfig) -> Result<GreedyReport> {
    let grid: Vec<(usize, f64)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| cfg.epsilons.iter().map(move |&e| (n, e)))
        .collect();
    let points = grid
        .par_iter()
        .map(|&(n, eps)| {
            let inst = gen_bad_example(BadExampleParams { n, epsilon: eps })?;
            let p = inst.lows();
            let greedy = expected_cost(&inst, &greedy_ratio_order(&inst), &p)?.total;
            let alternative = expected_cost(&inst, &Permutation::identity(n), &p)?.total;
            Ok(GreedyPoint {
                n,
                k: inst.k(),
                eps,
                greedy,
                alternative,
                ratio: greedy / alternative,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted_constants = cfg
        .sizes
        .iter()
        .map(|&n| {
            let c = points
                .iter()
                .filter(|pt| pt.n == n)
                .map(|pt| pt.ratio * pt.eps)
                .fold(f64::INFINITY, f64::min);
            (n, c)
        })
        .collect();
    Ok(GreedyReport {
        points,
        fitted_constants,
    })
}

impl GreedyReport {
    pub fn rows(&self, seed: u64) -> Vec<Row> {
        self.points
            .iter()
            .flat_map(|pt| {
                [("greedy", pt.greedy), ("alternative", pt.alternative)].map(|(m, v)| Row {
                    family: Family::AppendixGreedy.name().into(),
                    n: pt.n,
                    k: pt.k,
                    eps: pt.eps,
                    seed,
                    method: m.into(),
                    value: v,
                    ratio: pt.ratio,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckCount {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioSummary {
    pub eps: f64,
    pub count: usize,
    pub min: f64,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<CheckCount>,
    /// Approximate-adversary value over the exact adversary value, per ε.
    pub approx_ratios: Vec<RatioSummary>,
    pub rows: Vec<Row>,
}

impl OracleReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().map(|c| c.failed).sum()
    }
}

/// Per-instance outcome: `(check name, passed)` pairs and CSV rows.
struct PointOutcome {
    checks: Vec<(&'static str, bool)>,
    approx_ratio: Option<f64>,
    rows: Vec<Row>,
}

const EXACT_ADVERSARY_MAX_N: usize = 12;
const QPTAS_MAX_N: usize = 8;
const DRST_MAX_N: usize = 7;
const TOL: f64 = 1e-9;

/// Runs the cross-module oracle checks on random instances of the
/// configured family. Points with `n` too large for an exact oracle skip
/// the checks that need it.
pub fn run_oracle_suite(cfg: &ExperimentConfig) -> Result<OracleReport> {
    let epsilons: Vec<f64> = match cfg.family {
        Family::UniformRandom => vec![0.0],
        _ => cfg.epsilons.clone(),
    };
    let mut grid = Vec::new();
    for &n in &cfg.sizes {
        for (ei, &eps) in epsilons.iter().enumerate() {
            for t in 0..cfg.trials {
                let seed = point_seed(cfg.seed, n, ei, t);
                grid.push((n, eps, seed));
            }
        }
    }
    let outcomes = grid
        .par_iter()
        .map(|&(n, eps, seed)| oracle_point(cfg.family, n, eps, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut checks: Vec<CheckCount> = Vec::new();
    let mut rows = Vec::new();
    let mut ratios: Vec<Vec<f64>> = vec![Vec::new(); epsilons.len()];
    for ((_, eps, _), out) in grid.iter().zip(outcomes) {
        for (name, ok) in out.checks {
            let entry = match checks.iter_mut().position(|c| c.name == name) {
                Some(i) => &mut checks[i],
                None => {
                    checks.push(CheckCount {
                        name: name.into(),
                        ..Default::default()
                    });
                    checks.last_mut().expect("just pushed")
                }
            };
            if ok {
                entry.passed += 1;
            } else {
                entry.failed += 1;
            }
        }
        if let Some(r) = out.approx_ratio {
            let ei = epsilons.iter().position(|e| e == eps).expect("eps from grid");
            ratios[ei].push(r);
        }
        rows.extend(out.rows);
    }
    let approx_ratios = epsilons
        .iter()
        .zip(ratios)
        .filter(|(_, r)| !r.is_empty())
        .map(|(&eps, mut r)| {
            r.sort_by(f64::total_cmp);
            let m = r.len();
            let median = if m % 2 == 1 {
                r[m / 2]
            } else {
                (r[m / 2 - 1] + r[m / 2]) / 2.0
            };
            RatioSummary {
                eps,
                count: m,
                min: r[0],
                median,
            }
        })
        .collect();
    Ok(OracleReport {
        checks,
        approx_ratios,
        rows,
    })
}

fn point_seed(seed: u64, n: usize, eps_index: usize, trial: usize) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 40) ^ ((eps_index as u64) << 24) ^ trial as u64);
    rng.gen()
}

fn oracle_point(family: Family, n: usize, eps: f64, seed: u64) -> Result<PointOutcome> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=n);
    let inst = gen_random(n, k, eps, seed, false)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut approx_ratio = None;
    let row = |method: &str, value: f64, ratio: f64| Row {
        family: family.name().into(),
        n,
        k,
        eps,
        seed,
        method: method.into(),
        value,
        ratio,
    };

    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let sigma = Permutation::new(order)?;
    let p = ProbVector::new(
        inst.tests()
            .iter()
            .map(|t| t.lo + (t.hi - t.lo) * rng.gen::<f64>())
            .collect(),
    );
    let cost = expected_cost(&inst, &sigma, &p)?.total;
    if n <= EXACT_ADVERSARY_MAX_N {
        let brute = brute_force_cost(&inst, &sigma, &p)?;
        checks.push(("cost-oracle", (cost - brute).abs() <= TOL));
    }

    let approx = approx_adversary(&inst, &sigma)?;
    checks.push(("approx-feasible", approx.p.is_member(&inst)));
    if n <= EXACT_ADVERSARY_MAX_N {
        let exact = brute_force_adversary(&inst, &sigma)?;
        checks.push(("exact-dominates-random", cost <= exact.value + TOL));
        checks.push(("approx-below-exact", approx.value <= exact.value + TOL));
        let ratio = approx.value / exact.value;
        approx_ratio = Some(ratio);
        rows.push(row("brute-adversary", exact.value, 1.0));
        rows.push(row("approx-adversary", approx.value, ratio));

        let unit = inst.with_unit_costs();
        let bar = advbar_adversary(&unit, &sigma)?;
        let full = brute_force_adversary(&unit, &sigma)?.value;
        let surrogate = bar.surrogate.expect("advbar reports its surrogate");
        checks.push((
            "advbar-sandwich",
            0.5 * full <= surrogate + TOL && surrogate <= full + TOL,
        ));
        rows.push(row("advbar-surrogate", surrogate, surrogate / full));

        if n <= QPTAS_MAX_N && inst.min_cost() > 0.0 {
            let rounded = inst.round_to_grid();
            let q = qptas_adversary(&rounded, &sigma, Some(n))?;
            let e = brute_force_adversary(&rounded, &sigma)?;
            checks.push(("qptas-exact", (q.value - e.value).abs() <= TOL));
        }
    }

    if n <= DRST_MAX_N {
        let best = brute_force_drst(&inst)?;
        let general = general_solve(&inst, crate::adversary::AdvMethod::Brute)?;
        checks.push((
            "drst-optimal-below-general",
            best.adversary_value <= general.adversary_value + TOL,
        ));
        rows.push(row("brute-drst", best.adversary_value, 1.0));
        rows.push(row(
            "general",
            general.adversary_value,
            general.adversary_value / best.adversary_value,
        ));

        let unit = inst.with_unit_costs();
        let unit_best = brute_force_drst(&unit)?;
        let rule = unit_cost_solve(&unit, crate::adversary::AdvMethod::Brute)?;
        let ratio = rule.adversary_value / unit_best.adversary_value;
        checks.push(("unit-rule-2-approx", ratio <= 2.0 + TOL));
        rows.push(row("unit", rule.adversary_value, ratio));
    }
    Ok(PointOutcome {
        checks,
        approx_ratio,
        rows,
    })
}

/// CSV text with the fixed header.
pub fn rows_to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `report.json` and `report.csv` into `dir`, creating it if needed.
pub fn write_report<T: Serialize>(dir: &Path, report: &T, rows: &[Row]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    fs::write(dir.join("report.csv"), rows_to_csv(rows)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_order_on_small_family() {
        let inst = gen_bad_example(BadExampleParams { n: 20, epsilon: 0.1 }).unwrap();
        let order = greedy_ratio_order(&inst).one_based();
        // free tests, then c/lo = 1/0.9 before 1/0.5
        let expected: Vec<usize> = (1..=16).chain(19..=20).chain(17..=18).collect();
        assert_eq!(order, expected);
    }

    #[test]
    fn greedy_report_small_n() {
        let cfg = ExperimentConfig {
            family: Family::AppendixGreedy,
            sizes: vec![20],
            epsilons: vec![0.1, 0.05],
            ..Default::default()
        };
        let report = run_greedy_ratio_experiment(&cfg).unwrap();
        assert_eq!(report.points.len(), 2);
        assert!(report.points.iter().all(|p| p.ratio.is_finite() && p.ratio > 0.0));
        assert_eq!(report.rows(1).len(), 4);
    }

    #[test]
    fn empty_sizes_give_empty_report() {
        let cfg = ExperimentConfig {
            sizes: vec![],
            ..Default::default()
        };
        let report = run_oracle_suite(&cfg).unwrap();
        assert!(report.checks.is_empty() && report.rows.is_empty());
        assert_eq!(report.failures(), 0);
        let csv = rows_to_csv(&report.rows).unwrap();
        assert_eq!(csv.trim(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn oracle_suite_passes_and_is_deterministic() {
        let cfg = ExperimentConfig {
            sizes: vec![3, 5],
            trials: 3,
            ..Default::default()
        };
        let a = run_oracle_suite(&cfg).unwrap();
        assert_eq!(a.failures(), 0, "{:?}", a.checks);
        assert!(!a.approx_ratios.is_empty());
        let b = run_oracle_suite(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn csv_header_fixed() {
        let r = Row {
            family: "f".into(),
            n: 1,
            k: 1,
            eps: 0.0,
            seed: 0,
            method: "m".into(),
            value: 1.0,
            ratio: 1.0,
        };
        let csv = rows_to_csv(&[r]).unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
    }
}
