use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use drkofn::adversary::{solve_adversary, AdvMethod};
use drkofn::cost::{brute_force_cost, expected_cost, monte_carlo_cost};
use drkofn::harness::{
    gen_bad_example, gen_random, rows_to_csv, run_greedy_ratio_experiment, run_oracle_suite,
    write_report, BadExampleParams, ExperimentConfig, Family,
};
use drkofn::solver::{brute_force_drst, general_solve, unit_cost_solve, SolveMethod};
use drkofn::{Error, Instance, Permutation, ProbVector};

const EXIT_INVARIANT: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "drkofn", version, about = "Robust k-of-n testing toolkit")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Expected cost of an order at a fixed probability vector.
    Eval(EvalArgs),
    /// Worst-case probability vector for an order.
    Adversary(AdversaryArgs),
    /// Robust order for an instance.
    Solve(SolveArgs),
    /// Run an experiment family and write its report.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Threshold; ignored with --bad, which uses n/4.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// All costs 1.
    #[arg(long)]
    unit: bool,
    /// Adversarial family for the greedy ratio rule (n divisible by 20).
    #[arg(long)]
    bad: bool,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated 1-based order; identity when omitted.
    #[arg(long)]
    order: Option<String>,
    /// Comma-separated probabilities, one per test.
    #[arg(long)]
    p: String,
    /// Also enumerate all outcome vectors and compare.
    #[arg(long)]
    brute: bool,
    /// Also run a Monte-Carlo estimate with this many trials.
    #[arg(long)]
    mc: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AdversaryArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    order: Option<String>,
    #[arg(long, default_value = "brute")]
    method: AdvMethod,
    /// Moment count for qptas (instance is rounded to the 1/n^3 grid first).
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "general")]
    method: SolveMethod,
    /// Adversary used to report the value of the chosen order.
    #[arg(long, default_value = "brute")]
    adv: AdvMethod,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "epsilon-bounded-random")]
    family: Family,
    /// Comma-separated sizes; may be empty.
    #[arg(long, default_value = "3,5,7")]
    sizes: String,
    #[arg(long, default_value_t = 8)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated ε values.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.2f64, 0.3])]
    eps: Vec<f64>,
    /// Directory for report.json and report.csv.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("DRKOFN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("could not size thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(EXIT_INVARIANT)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Eval(a) => eval(a, cli.format),
        Command::Adversary(a) => adversary(a, cli.format),
        Command::Solve(a) => solve(a, cli.format),
        Command::Experiment(a) => experiment(a, cli.format),
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(Instance::from_json(&text)?)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<T>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Input(format!("cannot parse {what} {s:?}")))
}

fn order_arg(order: &Option<String>, n: usize) -> Result<Permutation, Failure> {
    match order {
        None => Ok(Permutation::identity(n)),
        Some(s) => {
            let sigma = Permutation::from_one_based(&parse_list::<usize>(s, "order")?)?;
            if sigma.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: sigma.len(),
                }
                .into());
            }
            Ok(sigma)
        }
    }
}

/// JSON object, or `field,value` CSV with vectors joined by `;`.
fn emit(value: &Value, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("json value")),
        Format::Csv => {
            println!("field,value");
            if let Value::Object(map) = value {
                for (key, v) in map {
                    let text = match v {
                        Value::Array(items) => items
                            .iter()
                            .map(|x| x.to_string())
                            .collect::<Vec<_>>()
                            .join(";"),
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    println!("{key},{text}");
                }
            }
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable report")
}

fn gen(a: &GenArgs) -> Result<(), Failure> {
    let inst = if a.bad {
        gen_bad_example(BadExampleParams {
            n: a.n,
            epsilon: a.eps,
        })?
    } else {
        gen_random(a.n, a.k, a.eps, a.seed, a.unit)?
    };
    let text = serde_json::to_string_pretty(&inst).map_err(Error::from)?;
    match &a.out {
        Some(path) => std::fs::write(path, text + "\n").map_err(Error::from)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn eval(a: &EvalArgs, format: Format) -> Result<(), Failure> {
    let inst = load(&a.instance)?;
    let sigma = order_arg(&a.order, inst.n())?;
    let p = ProbVector::new(parse_list(&a.p, "probabilities")?);
    p.check_member(&inst)?;
    let exact = expected_cost(&inst, &sigma, &p)?;
    let mut out = json!({
        "order": sigma,
        "value": exact.total,
        "stage_probabilities": exact.per_stage.iter().map(|s| s.probability).collect::<Vec<_>>(),
    });
    let mut broken = Vec::new();
    if a.brute {
        let brute = brute_force_cost(&inst, &sigma, &p)?;
        out["brute"] = json!(brute);
        if (brute - exact.total).abs() > 1e-9 {
            broken.push(format!("exact {} vs enumeration {brute}", exact.total));
        }
    }
    if let Some(trials) = a.mc {
        let (mean, stderr) = monte_carlo_cost(&inst, &sigma, &p, trials, a.seed)?;
        out["mc_mean"] = json!(mean);
        out["mc_stderr"] = json!(stderr);
    }
    emit(&out, format);
    if broken.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(broken.join("; ")))
    }
}

fn adversary(a: &AdversaryArgs, format: Format) -> Result<(), Failure> {
    let mut inst = load(&a.instance)?;
    if a.method == AdvMethod::Qptas {
        inst = inst.round_to_grid();
    }
    let sigma = order_arg(&a.order, inst.n())?;
    let result = solve_adversary(&inst, &sigma, a.method, a.d)?;
    if !result.p.is_member(&inst) {
        return Err(Failure::Invariant("adversary left the uncertainty box".into()));
    }
    let mut out = to_value(&result);
    out["order"] = to_value(&sigma);
    emit(&out, format);
    Ok(())
}

fn solve(a: &SolveArgs, format: Format) -> Result<(), Failure> {
    let inst = load(&a.instance)?;
    let result = match a.method {
        SolveMethod::Unit => unit_cost_solve(&inst, a.adv)?,
        SolveMethod::General => general_solve(&inst, a.adv)?,
        SolveMethod::Brute => brute_force_drst(&inst)?,
    };
    emit(&to_value(&result), format);
    Ok(())
}

fn experiment(a: &ExperimentArgs, format: Format) -> Result<(), Failure> {
    let sizes: Vec<usize> = if a.sizes.trim().is_empty() {
        Vec::new()
    } else {
        parse_list(&a.sizes, "sizes")?
    };
    if sizes.contains(&0) {
        return Err(Failure::Input("sizes must be positive".into()));
    }
    let cfg = ExperimentConfig {
        family: a.family,
        sizes,
        trials: a.trials,
        seed: a.seed,
        epsilons: a.eps.clone(),
        output: a.output.clone(),
    };
    let (report, rows, failures) = if cfg.family == Family::AppendixGreedy {
        let r = run_greedy_ratio_experiment(&cfg)?;
        let rows = r.rows(cfg.seed);
        (to_value(&r), rows, 0)
    } else {
        let r = run_oracle_suite(&cfg)?;
        let failures = r.failures();
        (to_value(&r), r.rows.clone(), failures)
    };
    if let Some(dir) = &cfg.output {
        write_report(dir, &report, &rows)?;
    }
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).expect("json")),
        Format::Csv => print!("{}", rows_to_csv(&rows)?),
    }
    if failures > 0 {
        return Err(Failure::Invariant(format!("{failures} oracle checks failed")));
    }
    Ok(())
}
