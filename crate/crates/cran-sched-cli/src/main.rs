//! Command-line front end: single runs, paired comparisons, parameter
//! sweeps with CSV output, and schedule validation.

use clap::{Args, Parser, Subcommand};
use cran_sched::config::{self, FullConfig};
use cran_sched::harness::{self, fmt_sig, Algorithm, RunError, SweepSpec};
use cran_sched::model::{validate_schedule, SINR_REL_TOL};
use cran_sched::scenario::{gen_instance, SinrSpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cran-sched",
    version,
    about = "Power-efficient joint user scheduling and power allocation for C-RAN downlinks"
)]
struct Cli {
    /// Configuration file ([network]/[scenario]/[sweep] sections); reference
    /// defaults apply for every omitted key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Structure overrides shared by every run command; each maps onto one
/// config key.
#[derive(Args, Debug, Default)]
struct NetOverrides {
    /// Subcarrier count.
    #[arg(long)]
    subcarriers: Option<usize>,
    /// Horizon length in slots.
    #[arg(long)]
    horizon: Option<usize>,
    /// Usable head ids, comma separated (e.g. 1,5).
    #[arg(long, value_delimiter = ',')]
    rrhs: Option<Vec<usize>>,
}

/// Single-value scenario overrides for the non-sweep commands; sweeps set
/// these through their parameter grids instead.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[command(flatten)]
    net: NetOverrides,
    /// Orthogonality threshold (linear gain units).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Common minimum SINR in dB for every generated request.
    #[arg(long)]
    gamma_db: Option<f64>,
    /// Maximum number of users per run.
    #[arg(long)]
    r_max: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one seeded instance and print its metrics.
    Simulate {
        /// optimal, greedy-p1, greedy-p2, or heuristic.
        #[arg(long, default_value = "greedy-p1")]
        algo: String,
        /// Instance seed; defaults to the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the computed schedule (with its instance) as JSON.
        #[arg(long)]
        dump_schedule: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run several algorithms on identical seeded instances and print a
    /// summary table.
    Compare {
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',', default_value = "optimal,heuristic")]
        algo: Vec<String>,
        /// Number of paired runs.
        #[arg(long)]
        runs: Option<usize>,
        /// First seed; run i uses base_seed + i.
        #[arg(long)]
        base_seed: Option<u64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the full parameter sweep and emit one CSV row per cell.
    Sweep {
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',')]
        algo: Option<Vec<String>>,
        /// Gamma grid in dB, comma separated.
        #[arg(long, value_delimiter = ',')]
        gamma_db: Option<Vec<f64>>,
        /// Epsilon grid, comma separated.
        #[arg(long = "epsilon-values", value_delimiter = ',')]
        epsilon_values: Option<Vec<f64>>,
        /// R_max grid, comma separated.
        #[arg(long = "r-max-values", value_delimiter = ',')]
        r_max_values: Option<Vec<usize>>,
        /// Runs per cell.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: NetOverrides,
    },
    /// Check a schedule bundle against every constraint and print the
    /// violations.
    Validate {
        /// JSON schedule bundle produced by simulate --dump-schedule.
        #[arg(long)]
        schedule: PathBuf,
    },
}

enum AppError {
    /// Exit code 1.
    Usage(String),
    /// Exit code 2.
    Infeasible(String),
    /// Exit code 3.
    Solver(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Infeasible(_) => 2,
            AppError::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Infeasible(m) | AppError::Solver(m) => m,
        }
    }
}

impl From<config::ConfigError> for AppError {
    fn from(e: config::ConfigError) -> Self {
        AppError::Usage(e.to_string())
    }
}

impl From<RunError> for AppError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Infeasible => AppError::Infeasible(e.to_string()),
            RunError::TooLarge(m) => AppError::Usage(m),
            RunError::Solver(m) => AppError::Solver(m),
        }
    }
}

fn load(cli_config: &Option<PathBuf>) -> Result<FullConfig, AppError> {
    match cli_config {
        Some(path) => Ok(config::load_config(path)?),
        None => Ok(config::load_config_str("")?),
    }
}

fn apply_net_overrides(cfg: &mut FullConfig, ov: &NetOverrides) -> Result<(), AppError> {
    if let Some(s) = ov.subcarriers {
        if s < 1 {
            return Err(AppError::Usage("subcarriers must be at least 1".into()));
        }
        cfg.network.num_subcarriers = s;
    }
    if let Some(t) = ov.horizon {
        if t < 1 {
            return Err(AppError::Usage("horizon must be at least 1".into()));
        }
        cfg.network.horizon = t;
    }
    if let Some(ids) = &ov.rrhs {
        let roster: Vec<_> =
            cfg.network.rrhs.iter().filter(|r| ids.contains(&r.id)).cloned().collect();
        if roster.is_empty() {
            return Err(AppError::Usage(format!(
                "no usable heads among ids {ids:?}; configured ids are {:?}",
                cfg.network.rrhs.iter().map(|r| r.id).collect::<Vec<_>>()
            )));
        }
        cfg.network.rrhs = roster;
    }
    Ok(())
}

fn apply_overrides(cfg: &mut FullConfig, ov: &Overrides) -> Result<(), AppError> {
    apply_net_overrides(cfg, &ov.net)?;
    if let Some(e) = ov.epsilon {
        if e < 0.0 {
            return Err(AppError::Usage("epsilon must be non-negative".into()));
        }
        cfg.network.epsilon = e;
    }
    if let Some(db) = ov.gamma_db {
        cfg.scenario.min_sinr_db = SinrSpec::FixedDb(db);
    }
    if let Some(r) = ov.r_max {
        cfg.scenario.max_users = r;
    }
    Ok(())
}

fn parse_algorithms(names: &[String]) -> Result<Vec<Algorithm>, AppError> {
    names
        .iter()
        .map(|name| {
            Algorithm::parse(name).ok_or_else(|| {
                AppError::Usage(format!(
                    "unknown algorithm '{name}' (expected optimal, greedy-p1, greedy-p2, heuristic)"
                ))
            })
        })
        .collect()
}

fn cmd_simulate(
    cfg: FullConfig,
    algo: &str,
    seed: Option<u64>,
    dump: Option<PathBuf>,
) -> Result<(), AppError> {
    let algorithm = parse_algorithms(&[algo.to_string()])?[0];
    let seed = seed.unwrap_or(cfg.scenario.seed);
    let requests = gen_instance(&cfg.scenario, &cfg.network, seed);
    let report = harness::run_once(&requests, &cfg.network, algorithm)?;
    let m = &report.metrics;

    println!("algorithm: {algorithm}");
    println!("seed: {seed}");
    println!("requests: {}", requests.len());
    println!("satisfied ratio: {}", fmt_sig(m.satisfied_ratio));
    println!("weighted cost [W]: {}", fmt_sig(m.weighted_cost));
    println!("  transmit [W]: {}", fmt_sig(m.breakdown.tx));
    println!("  head activation, unweighted [W]: {}", fmt_sig(m.breakdown.rrh_activation));
    println!("  pool processing, unweighted [W]: {}", fmt_sig(m.breakdown.bbu));
    for (rrh, frac) in cfg.network.rrhs.iter().zip(&m.rrh_activation) {
        println!("activation fraction rrh{}: {}", rrh.id, fmt_sig(*frac));
    }

    if let Some(path) = dump {
        let bundle = config::ScheduleBundle {
            network: cfg.network.clone(),
            requests,
            schedule: report.schedule,
        };
        config::write_bundle(&bundle, &path)?;
        println!("schedule written to {}", path.display());
    }
    Ok(())
}

fn cmd_compare(
    cfg: FullConfig,
    algos: &[String],
    runs: Option<usize>,
    base_seed: Option<u64>,
) -> Result<(), AppError> {
    let algorithms = parse_algorithms(algos)?;
    let runs = runs.unwrap_or(cfg.sweep.runs);
    let base_seed = base_seed.unwrap_or(cfg.sweep.base_seed);

    println!("paired comparison: {} runs, seeds {}..{}", runs, base_seed, base_seed + runs as u64);
    println!("{:<12} {:>8} {:>16} {:>16}", "algo", "solved", "mean_cost_w", "mean_ratio");
    for algorithm in algorithms {
        let mut costs = Vec::new();
        let mut ratios = Vec::new();
        for i in 0..runs {
            let requests = gen_instance(&cfg.scenario, &cfg.network, base_seed + i as u64);
            match harness::run_once(&requests, &cfg.network, algorithm) {
                Ok(report) => {
                    costs.push(report.metrics.weighted_cost);
                    ratios.push(report.metrics.satisfied_ratio);
                }
                Err(RunError::Infeasible) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let n = costs.len().max(1) as f64;
        println!(
            "{:<12} {:>8} {:>16} {:>16}",
            algorithm.name(),
            costs.len(),
            fmt_sig(costs.iter().sum::<f64>() / n),
            fmt_sig(ratios.iter().sum::<f64>() / n),
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    cfg: FullConfig,
    algo: Option<Vec<String>>,
    gamma_db: Option<Vec<f64>>,
    epsilon_values: Option<Vec<f64>>,
    r_max_values: Option<Vec<usize>>,
    runs: Option<usize>,
    base_seed: Option<u64>,
    output: Option<PathBuf>,
) -> Result<(), AppError> {
    let mut spec: SweepSpec = cfg.sweep.clone();
    if let Some(names) = algo {
        spec.algorithms = parse_algorithms(&names)?;
    }
    if let Some(g) = gamma_db {
        spec.gamma_db_values = g;
    }
    if let Some(e) = epsilon_values {
        spec.epsilon_values = e;
    }
    if let Some(r) = r_max_values {
        spec.r_max_values = r;
    }
    if let Some(n) = runs {
        if n < 1 {
            return Err(AppError::Usage("runs must be at least 1".into()));
        }
        spec.runs = n;
    }
    if let Some(s) = base_seed {
        spec.base_seed = s;
    }

    let table = harness::run_sweep(&spec, &cfg.scenario, &cfg.network).map_err(AppError::from)?;
    for note in &table.skipped {
        eprintln!("skipped cell {note}");
    }
    let csv = table.to_csv();
    match output {
        Some(path) => std::fs::write(&path, csv)
            .map_err(|e| AppError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_validate(path: &PathBuf) -> Result<(), AppError> {
    let bundle = config::read_bundle(path)?;
    let violations = validate_schedule(&bundle.schedule, &bundle.requests, &bundle.network)
        .map_err(|e| AppError::Usage(e.to_string()))?;
    if violations.is_empty() {
        println!(
            "schedule is valid: {} slots, {} requests, tolerances rel {:.0e}",
            bundle.schedule.slots.len(),
            bundle.requests.len(),
            SINR_REL_TOL
        );
        Ok(())
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Err(AppError::Infeasible(format!("{} violations found", violations.len())))
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Simulate { ref algo, seed, ref dump_schedule, ref overrides } => {
            let mut cfg = load(&cli.config)?;
            apply_overrides(&mut cfg, overrides)?;
            cmd_simulate(cfg, algo, seed, dump_schedule.clone())
        }
        Command::Compare { ref algo, runs, base_seed, ref overrides } => {
            let mut cfg = load(&cli.config)?;
            apply_overrides(&mut cfg, overrides)?;
            cmd_compare(cfg, algo, runs, base_seed)
        }
        Command::Sweep {
            ref algo,
            ref gamma_db,
            ref epsilon_values,
            ref r_max_values,
            runs,
            base_seed,
            ref output,
            ref overrides,
        } => {
            let mut cfg = load(&cli.config)?;
            apply_net_overrides(&mut cfg, overrides)?;
            cmd_sweep(
                cfg,
                algo.clone(),
                gamma_db.clone(),
                epsilon_values.clone(),
                r_max_values.clone(),
                runs,
                base_seed,
                output.clone(),
            )
        }
        Command::Validate { ref schedule } => cmd_validate(schedule),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
