use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use noisy_quicksort::error::Error;
use noisy_quicksort::fragmentation::{sample_x_hat_with, FragmentationTree, DEFAULT_DEPTH, DEFAULT_MIN_WIDTH};
use noisy_quicksort::harness::config::{ExperimentConfig, OutputFormat, Regime};
use noisy_quicksort::harness::oracle::DEFAULT_ORACLE_RUNS;
use noisy_quicksort::harness::{run_oracle_suite, run_regime, simulate_x, EmpiricalDistribution, Summary};
use noisy_quicksort::limit_laws::{
    optimal_width_decay, rho_residual, sample_theta, sample_x_lambda_many, sample_xc_pool, sample_xi,
    solve_rho, DEFAULT_GENERATIONS, MIN_POOL_SIZE,
};
use noisy_quicksort::moments::{mergesort_series, MomentTables, MAX_ORDER};
use noisy_quicksort::rng::{par_draws, SeedPath};

const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "noisy-quicksort", version, about = "Quicksort with erring comparisons: simulations, limit laws, exact moments")]
struct Cli {
    /// Master seed; every random stream is derived from it [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Replicates, sample count or Monte Carlo runs, depending on the command.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Fragmentation tree depth.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    pool_size: Option<usize>,
    #[arg(long, global = true)]
    generations: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate X_{n,p} = I(n,p)/(n^2 p) for one (n, p) cell.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Draw from a limit law or one of its building blocks.
    Sample {
        #[arg(value_enum)]
        law: Law,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        u: f64,
    },
    /// Exact moment tables g_n, psi_n, P_n and lambda^n E[X(lambda)^n].
    Moments {
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Exact enumeration against Monte Carlo for n <= 6.
    Oracle,
    /// Run a regime sweep.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Replace the configured regime by an exploratory one.
        #[arg(long, value_enum)]
        exploratory: Option<Exploratory>,
        /// n grid (overrides the config).
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
    },
    /// The growth constant rho and related constants.
    Rho,
    /// Dump one fragmentation tree.
    Fragtree,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Law {
    /// X_c by population iteration.
    Xc,
    /// Half the FIND area (p -> 0, np -> infinity).
    Xhat,
    /// X(lambda) (np -> lambda).
    Xlambda,
    Theta,
    Xi,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Exploratory {
    Np0,
}

enum Failure {
    Gate(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Gate(msg)) => {
            eprintln!("gate failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn samples_text(values: &[f64], format: OutputFormat, header: Value) -> Result<String, Failure> {
    let dist = EmpiricalDistribution::new(values.to_vec())?;
    Ok(match format {
        OutputFormat::Csv => dist.samples().iter().map(|x| format!("{x}\n")).collect(),
        OutputFormat::Json => {
            let mut v = header;
            v["summary"] = json!(dist.summary());
            v["samples"] = json!(dist.samples());
            to_json(&v)
        }
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let format = cli.format.unwrap_or_default();
    let out = cli.out.as_deref();
    let master = cli.seed.unwrap_or(DEFAULT_SEED);
    let root = SeedPath::new(master);
    match cli.command {
        Command::Simulate { n, p } => {
            let replicates = cli.replicates.unwrap_or(10_000);
            if n == 0 || replicates == 0 {
                return Err(Failure::Config("n and replicates must be positive".into()));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Failure::Config(format!("p = {p} must lie in (0, 1]")));
            }
            let seed = root.label("simulate").child(n as u64).child(p.to_bits());
            let xs = simulate_x(n, p, replicates, seed)?;
            let s = Summary::of(&xs);
            let text = match format {
                OutputFormat::Csv => format!(
                    "n,p,replicates,mean,variance,se_mean,se_variance,seed\n{n},{p},{},{},{},{},{},{}\n",
                    s.count,
                    s.mean,
                    s.variance,
                    s.se_mean,
                    s.se_variance,
                    seed.value()
                ),
                OutputFormat::Json => to_json(&json!({
                    "n": n, "p": p, "master_seed": master, "seed": seed.value(), "summary": s,
                })),
            };
            emit(out, &text)
        }
        Command::Sample { law, c, lambda, u } => {
            let count = cli.replicates.unwrap_or(10_000);
            if count == 0 {
                return Err(Failure::Config("sample count must be positive".into()));
            }
            let depth = cli.depth.unwrap_or(DEFAULT_DEPTH);
            let seed = root.label("sample");
            let (values, params) = match law {
                Law::Xc => {
                    let size = cli.pool_size.unwrap_or(count.max(MIN_POOL_SIZE));
                    let generations = cli.generations.unwrap_or(DEFAULT_GENERATIONS);
                    let pool = sample_xc_pool(c, size, generations, seed)?;
                    (pool.samples().to_vec(), json!({ "c": c, "pool_size": size, "generations": generations }))
                }
                Law::Xhat => {
                    sample_x_hat_with(depth, DEFAULT_MIN_WIDTH, &mut seed.stream())?;
                    let v = par_draws(count, seed, |r| sample_x_hat_with(depth, DEFAULT_MIN_WIDTH, r).expect("checked"));
                    (v, json!({ "depth": depth, "min_width": DEFAULT_MIN_WIDTH }))
                }
                Law::Xlambda => (sample_x_lambda_many(lambda, depth, count, seed)?, json!({ "lambda": lambda, "depth": depth })),
                Law::Theta => {
                    sample_theta(lambda, u, &mut seed.stream())?;
                    let v = par_draws(count, seed, |r| sample_theta(lambda, u, r).expect("checked"));
                    (v, json!({ "lambda": lambda, "u": u }))
                }
                Law::Xi => {
                    sample_xi(lambda, &mut seed.stream())?;
                    let v = par_draws(count, seed, |r| sample_xi(lambda, r).expect("checked"));
                    (v, json!({ "t": lambda }))
                }
            };
            let header = json!({
                "law": format!("{law:?}").to_lowercase(),
                "parameters": params,
                "master_seed": master,
                "seed": seed.value(),
            });
            emit(out, &samples_text(&values, format, header)?)
        }
        Command::Moments { order } => {
            if order > MAX_ORDER {
                return Err(Failure::Config(format!("order {order} exceeds {MAX_ORDER}")));
            }
            let tables = MomentTables::compute(order)?;
            let text = match format {
                OutputFormat::Json => to_json(&tables.to_json()),
                OutputFormat::Csv => {
                    let mut s = String::from("table,n,k,numerator,denominator\n");
                    for (name, polys) in [("g", &tables.g), ("psi", &tables.psi), ("P", &tables.p), ("lambda_pow_n_moment_X", &tables.x)] {
                        for (n, poly) in polys.iter().enumerate() {
                            for (k, coef) in poly.coeffs().iter().enumerate() {
                                s.push_str(&format!("{name},{n},{k},{},{}\n", coef.numer(), coef.denom()));
                            }
                        }
                    }
                    s
                }
            };
            emit(out, &text)
        }
        Command::Oracle => {
            let runs = cli.replicates.unwrap_or(DEFAULT_ORACLE_RUNS);
            if runs < 2 {
                return Err(Failure::Config("at least two runs are needed".into()));
            }
            let report = run_oracle_suite(runs, master)?;
            let text = match format {
                OutputFormat::Csv => report.csv(),
                OutputFormat::Json => to_json(&report.json()),
            };
            emit(out, &text)?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Gate(format!("{} oracle rows failed", report.failures().len())))
            }
        }
        Command::Compare { config, exploratory, n, kappa, gamma } => {
            let mut cfg = match (&config, exploratory) {
                (Some(path), _) => ExperimentConfig::load(path)?,
                (None, Some(Exploratory::Np0)) => ExperimentConfig {
                    regime: Regime::Np0Exploratory { kappa, gamma },
                    n_values: n.clone().unwrap_or_else(|| vec![1_000, 10_000]),
                    replicates: 1_000,
                    seed: master,
                    pool_size: None,
                    generations: DEFAULT_GENERATIONS,
                    depth: DEFAULT_DEPTH,
                    output: None,
                    format: OutputFormat::Csv,
                },
                (None, None) => return Err(Failure::Config("compare needs --config or --exploratory".into())),
            };
            if let Some(Exploratory::Np0) = exploratory {
                cfg.regime = Regime::Np0Exploratory { kappa, gamma };
            }
            if let Some(n) = n {
                cfg.n_values = n;
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(r) = cli.replicates {
                cfg.replicates = r;
            }
            if let Some(d) = cli.depth {
                cfg.depth = d;
            }
            if let Some(s) = cli.pool_size {
                cfg.pool_size = Some(s);
            }
            if let Some(g) = cli.generations {
                cfg.generations = g;
            }
            if let Some(o) = &cli.out {
                cfg.output = Some(o.clone());
            }
            if let Some(f) = cli.format {
                cfg.format = f;
            }
            cfg.validate()?;
            let report = run_regime(&cfg)?;
            match &cfg.output {
                Some(path) => {
                    report.write(path, cfg.format)?;
                }
                None => {
                    let text = match cfg.format {
                        OutputFormat::Csv => report.csv(),
                        OutputFormat::Json => to_json(&report.json()),
                    };
                    emit(None, &text)?;
                    for (row, t) in report.rows.iter().zip(&report.timings) {
                        eprintln!("n = {}, param = {}: {t:.2} s", row.n, row.param);
                    }
                }
            }
            if report.passed() {
                Ok(())
            } else {
                let failed = report.rows.iter().filter(|r| !r.passed()).count();
                Err(Failure::Gate(format!("{failed} grid points failed their gates")))
            }
        }
        Command::Rho => {
            let rho = solve_rho();
            let (one_plus_alpha, rate) = optimal_width_decay();
            let series = mergesort_series(1e-12)?;
            let v = json!({
                "rho": rho,
                "residual": rho_residual(rho),
                "minimizing_one_plus_alpha": one_plus_alpha,
                "minimal_decay_rate": rate,
                "mergesort_series": series,
            });
            let text = match format {
                OutputFormat::Json => to_json(&v),
                OutputFormat::Csv => v
                    .as_object()
                    .expect("object")
                    .iter()
                    .fold(String::from("name,value\n"), |acc, (k, x)| acc + &format!("{k},{x}\n")),
            };
            emit(out, &text)
        }
        Command::Fragtree => {
            let depth = cli.depth.unwrap_or(8);
            let tree = FragmentationTree::build(depth, &mut root.label("fragtree").stream())?;
            let text = match format {
                OutputFormat::Json => to_json(&serde_json::to_value(&tree).map_err(Error::from)?),
                OutputFormat::Csv => {
                    let mut s = String::from("k,j,y\n");
                    for k in 0..=depth {
                        for (j, y) in tree.level(k).iter().enumerate() {
                            s.push_str(&format!("{k},{j},{y}\n"));
                        }
                    }
                    s
                }
            };
            emit(out, &text)
        }
    }
}
