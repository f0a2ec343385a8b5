//! Monte Carlo experiment driver: runs the schedulers over seeded random
//! instances and aggregates weighted power cost, satisfied-user ratio,
//! per-head activation fractions, and the power breakdown across parameter
//! sweeps.
//!
//! All algorithms inside one sweep cell consume identical instances (seed =
//! base seed + run index), so comparisons are paired. Runs execute in
//! parallel; aggregation folds an order-preserving vector, so output is
//! reproducible bit for bit.

use crate::baseline;
use crate::cost::{horizon_breakdown, horizon_cost, CostBreakdown};
use crate::dp::{self, DpError, DpOutcome};
use crate::greedy::{self, AdmissionOrder, Fallback, GreedyOptions};
use crate::model::{db_to_linear, Network, Request, Schedule};
use crate::scenario::{gen_instance, ScenarioConfig, SinrSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Optimal,
    GreedyP1,
    GreedyP2,
    Heuristic,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Optimal => "optimal",
            Algorithm::GreedyP1 => "greedy-p1",
            Algorithm::GreedyP2 => "greedy-p2",
            Algorithm::Heuristic => "heuristic",
        }
    }

    pub fn parse(name: &str) -> Option<Algorithm> {
        match name {
            "optimal" => Some(Algorithm::Optimal),
            "greedy-p1" => Some(Algorithm::GreedyP1),
            "greedy-p2" => Some(Algorithm::GreedyP2),
            "heuristic" => Some(Algorithm::Heuristic),
            _ => None,
        }
    }

    pub fn all() -> [Algorithm; 4] {
        [Algorithm::Optimal, Algorithm::GreedyP1, Algorithm::GreedyP2, Algorithm::Heuristic]
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("no feasible schedule exists for this instance")]
    Infeasible,
    #[error("{0}")]
    TooLarge(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl From<DpError> for RunError {
    fn from(e: DpError) -> Self {
        match e {
            DpError::TooLarge { .. } => RunError::TooLarge(e.to_string()),
            DpError::Lp(inner) => RunError::Solver(inner.to_string()),
        }
    }
}

/// Metrics of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Weighted power consumption over the horizon, W.
    pub weighted_cost: f64,
    /// Fraction of requests scheduled within their window; 1.0 for empty
    /// instances.
    pub satisfied_ratio: f64,
    /// Per-head fraction of slots spent active.
    pub rrh_activation: Vec<f64>,
    /// Power totals per source over the horizon.
    pub breakdown: CostBreakdown,
}

/// Schedule plus derived metrics.
#[derive(Debug)]
pub struct RunReport {
    pub schedule: Schedule,
    pub metrics: RunMetrics,
}

/// Derives the run metrics of a committed schedule.
pub fn metrics_for(schedule: &Schedule, requests: &[Request], network: &Network) -> RunMetrics {
    let satisfied_ratio = if requests.is_empty() {
        1.0
    } else {
        schedule.satisfied.len() as f64 / requests.len() as f64
    };
    let slots = network.horizon.max(1) as f64;
    let rrh_activation = (0..network.num_rrhs())
        .map(|j| schedule.slots.iter().filter(|s| s.active[j]).count() as f64 / slots)
        .collect();
    RunMetrics {
        weighted_cost: horizon_cost(schedule, requests, network),
        satisfied_ratio,
        rrh_activation,
        breakdown: horizon_breakdown(schedule, requests, network),
    }
}

/// Runs one algorithm on one instance.
pub fn run_once(
    requests: &[Request],
    network: &Network,
    algorithm: Algorithm,
) -> Result<RunReport, RunError> {
    let schedule = match algorithm {
        Algorithm::Optimal => match dp::solve_offline(requests, network)? {
            DpOutcome::Solved(solution) => solution.schedule,
            DpOutcome::Infeasible => return Err(RunError::Infeasible),
        },
        Algorithm::GreedyP1 => greedy::run_online(
            requests,
            network,
            &GreedyOptions { fallback: Fallback::ShedRequests, admission_order: AdmissionOrder::default() },
        ),
        Algorithm::GreedyP2 => greedy::run_online(
            requests,
            network,
            &GreedyOptions { fallback: Fallback::ActivateHeads, admission_order: AdmissionOrder::default() },
        ),
        Algorithm::Heuristic => baseline::run_heuristic(requests, network),
    };
    let metrics = metrics_for(&schedule, requests, network);
    Ok(RunReport { schedule, metrics })
}

/// Parameter grid of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub algorithms: Vec<Algorithm>,
    pub gamma_db_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub r_max_values: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            algorithms: vec![Algorithm::GreedyP1],
            gamma_db_values: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            epsilon_values: vec![0.0],
            r_max_values: vec![7],
            runs: 500,
            base_seed: 1,
        }
    }
}

/// Aggregated metrics of one sweep cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub algorithm: Algorithm,
    pub gamma_db: f64,
    pub epsilon: f64,
    pub r_max: usize,
    /// Number of runs aggregated (instances the algorithm solved).
    pub runs: usize,
    pub mean_cost: f64,
    pub stderr_cost: f64,
    pub mean_ratio: f64,
    pub stderr_ratio: f64,
    /// Mean per-head activation fraction, in head roster order.
    pub activation: Vec<f64>,
    /// Mean per-source power totals.
    pub tx_w: f64,
    pub activation_w: f64,
    pub bbu_w: f64,
}

#[derive(Debug)]
pub struct SweepTable {
    /// Head ids, in roster order, naming the activation columns.
    pub rrh_ids: Vec<usize>,
    pub cells: Vec<SweepCell>,
    /// Human-readable notes for cells that were skipped.
    pub skipped: Vec<String>,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs the full parameter grid. Cells are ordered lexicographically by
/// (algorithm name, gamma, epsilon, r_max); instances are seeded
/// `base_seed + run index`, identically for every algorithm sharing the
/// remaining parameters.
pub fn run_sweep(
    spec: &SweepSpec,
    scenario: &ScenarioConfig,
    network: &Network,
) -> Result<SweepTable, RunError> {
    let mut algorithms = spec.algorithms.clone();
    algorithms.sort_by_key(|a| a.name());
    algorithms.dedup();
    let mut gammas = spec.gamma_db_values.clone();
    gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut epsilons = spec.epsilon_values.clone();
    epsilons.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut r_maxes = spec.r_max_values.clone();
    r_maxes.sort_unstable();

    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for algorithm in &algorithms {
        for &gamma_db in &gammas {
            for &epsilon in &epsilons {
                for &r_max in &r_maxes {
                    match run_cell(*algorithm, gamma_db, epsilon, r_max, spec, scenario, network) {
                        Ok(cell) => cells.push(cell),
                        Err(RunError::TooLarge(why)) => skipped.push(format!(
                            "{},{},{},{}: skipped ({})",
                            algorithm.name(),
                            gamma_db,
                            epsilon,
                            r_max,
                            why
                        )),
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(SweepTable { rrh_ids: network.rrhs.iter().map(|r| r.id).collect(), cells, skipped })
}

fn run_cell(
    algorithm: Algorithm,
    gamma_db: f64,
    epsilon: f64,
    r_max: usize,
    spec: &SweepSpec,
    scenario: &ScenarioConfig,
    network: &Network,
) -> Result<SweepCell, RunError> {
    let mut cell_scenario = scenario.clone();
    cell_scenario.min_sinr_db = SinrSpec::FixedDb(gamma_db);
    cell_scenario.max_users = r_max;
    let mut cell_network = network.clone();
    cell_network.epsilon = epsilon;

    // The exact solver cannot take arbitrarily many requests; surface the
    // guard as a per-cell skip instead of failing the sweep.
    if algorithm == Algorithm::Optimal {
        let limits = dp::DpLimits::default();
        if r_max > limits.max_requests || cell_network.num_rrhs() > limits.max_rrhs {
            return Err(RunError::TooLarge(format!(
                "exact solver guard: up to {} requests and {} heads",
                limits.max_requests, limits.max_rrhs
            )));
        }
    }

    let outcomes: Vec<Option<RunMetrics>> = (0..spec.runs)
        .into_par_iter()
        .map(|i| {
            let requests = gen_instance(&cell_scenario, &cell_network, spec.base_seed + i as u64);
            match run_once(&requests, &cell_network, algorithm) {
                Ok(report) => Ok(Some(report.metrics)),
                Err(RunError::Infeasible) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, RunError>>()?;

    let metrics: Vec<RunMetrics> = outcomes.into_iter().flatten().collect();
    let (mean_cost, stderr_cost) =
        mean_and_stderr(&metrics.iter().map(|m| m.weighted_cost).collect::<Vec<_>>());
    let (mean_ratio, stderr_ratio) =
        mean_and_stderr(&metrics.iter().map(|m| m.satisfied_ratio).collect::<Vec<_>>());
    let n = metrics.len().max(1) as f64;
    let activation = (0..cell_network.num_rrhs())
        .map(|j| metrics.iter().map(|m| m.rrh_activation[j]).sum::<f64>() / n)
        .collect();
    Ok(SweepCell {
        algorithm,
        gamma_db,
        epsilon,
        r_max,
        runs: metrics.len(),
        mean_cost,
        stderr_cost,
        mean_ratio,
        stderr_ratio,
        activation,
        tx_w: metrics.iter().map(|m| m.breakdown.tx).sum::<f64>() / n,
        activation_w: metrics.iter().map(|m| m.breakdown.rrh_activation).sum::<f64>() / n,
        bbu_w: metrics.iter().map(|m| m.breakdown.bbu).sum::<f64>() / n,
    })
}

/// Six significant digits, scientific notation; stable across runs.
pub fn fmt_sig(value: f64) -> String {
    format!("{value:.5e}")
}

impl SweepTable {
    pub fn csv_header(&self) -> String {
        let mut header = String::from(
            "algo,gamma_db,epsilon,r_max,runs,mean_cost_w,stderr_cost_w,satisfied_ratio,stderr_ratio",
        );
        for id in &self.rrh_ids {
            header.push_str(&format!(",act_rrh{id}"));
        }
        header.push_str(",tx_w,activation_w,bbu_w");
        header
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for cell in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}",
                cell.algorithm.name(),
                cell.gamma_db,
                cell.epsilon,
                cell.r_max,
                cell.runs,
                fmt_sig(cell.mean_cost),
                fmt_sig(cell.stderr_cost),
                fmt_sig(cell.mean_ratio),
                fmt_sig(cell.stderr_ratio),
            ));
            for a in &cell.activation {
                out.push(',');
                out.push_str(&fmt_sig(*a));
            }
            out.push_str(&format!(
                ",{},{},{}\n",
                fmt_sig(cell.tx_w),
                fmt_sig(cell.activation_w),
                fmt_sig(cell.bbu_w)
            ));
        }
        out
    }
}

/// Gamma override helper used by the CLI: rewrites every request's SINR
/// target and compute demand. Kept here so single runs and sweeps share it.
pub fn override_gamma(requests: &mut [Request], gamma_db: f64, network: &Network) {
    for req in requests.iter_mut() {
        req.min_sinr = db_to_linear(gamma_db);
        req.resources =
            crate::model::resources_for_request(req.min_sinr, network.vm_base, network.theta)
                .expect("linear SINR is non-negative");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rrh;
    use crate::scenario::{default_fiber_power, default_rrh_layout, DeadlinePolicy, PathLossModel};

    fn network(horizon: usize, num_subcarriers: usize, usable: &[usize]) -> Network {
        let layout = default_rrh_layout(500.0);
        let fiber = default_fiber_power();
        Network {
            rrhs: usable
                .iter()
                .map(|&id| Rrh {
                    id,
                    max_power: crate::model::dbm_to_watts(48.0),
                    activation_power: 130.0,
                    sleep_power: 75.0,
                    fiber_power: fiber[id - 1],
                    position: layout[id - 1],
                })
                .collect(),
            num_subcarriers,
            horizon,
            bbu_capacity: 100.0,
            bbu_power_per_unit: 1.0,
            noise_power: 1e-13,
            weight_rrh: 0.01,
            weight_bbu: 0.1,
            vm_base: 5.0,
            theta: 1.0,
            epsilon: 0.0,
        }
    }

    fn scenario(max_users: usize) -> ScenarioConfig {
        ScenarioConfig {
            radius: 500.0,
            max_users,
            arrival_prob: 0.5,
            min_sinr_db: SinrSpec::FixedDb(10.0),
            deadline_policy: DeadlinePolicy::EndOfHorizon,
            rrh_layout: default_rrh_layout(500.0),
            path_loss: PathLossModel::default(),
            seed: 1,
        }
    }

    #[test]
    fn zero_request_run_metrics() {
        let net = network(3, 2, &[1, 5]);
        let report = run_once(&[], &net, Algorithm::GreedyP1).unwrap();
        assert_eq!(report.metrics.satisfied_ratio, 1.0);
        assert!((report.metrics.weighted_cost - 3.0 * 0.01 * 150.0).abs() < 1e-9);
        assert!(report.metrics.rrh_activation.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn optimal_feasible_run_satisfies_everyone() {
        let net = network(3, 2, &[1, 5]);
        let cfg = scenario(4);
        for seed in 0..5 {
            let requests = gen_instance(&cfg, &net, seed);
            match run_once(&requests, &net, Algorithm::Optimal) {
                Ok(report) => assert_eq!(report.metrics.satisfied_ratio, 1.0),
                Err(RunError::Infeasible) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    #[test]
    fn greedy_cost_at_least_optimal_when_all_satisfied() {
        let net = network(3, 2, &[1, 5]);
        let cfg = scenario(4);
        let mut compared = 0;
        for seed in 0..20 {
            let requests = gen_instance(&cfg, &net, seed);
            let optimal = match run_once(&requests, &net, Algorithm::Optimal) {
                Ok(r) => r,
                Err(RunError::Infeasible) => continue,
                Err(e) => panic!("{e}"),
            };
            let greedy = run_once(&requests, &net, Algorithm::GreedyP1).unwrap();
            if greedy.metrics.satisfied_ratio == 1.0 {
                compared += 1;
                assert!(
                    optimal.metrics.weighted_cost <= greedy.metrics.weighted_cost + 1e-9,
                    "seed {seed}"
                );
            }
        }
        assert!(compared >= 5);
    }

    #[test]
    fn sweep_single_run_matches_run_once() {
        let net = network(3, 2, &[1, 5]);
        let cfg = scenario(4);
        let spec = SweepSpec {
            algorithms: vec![Algorithm::GreedyP1],
            gamma_db_values: vec![10.0],
            epsilon_values: vec![0.0],
            r_max_values: vec![4],
            runs: 1,
            base_seed: 7,
        };
        let table = run_sweep(&spec, &cfg, &net).unwrap();
        assert_eq!(table.cells.len(), 1);
        let requests = gen_instance(&scenario_with_gamma(&cfg, 10.0, 4), &net, 7);
        let report = run_once(&requests, &net, Algorithm::GreedyP1).unwrap();
        assert_eq!(table.cells[0].mean_cost, report.metrics.weighted_cost);
        assert_eq!(table.cells[0].stderr_cost, 0.0);
    }

    fn scenario_with_gamma(cfg: &ScenarioConfig, gamma: f64, r_max: usize) -> ScenarioConfig {
        let mut c = cfg.clone();
        c.min_sinr_db = SinrSpec::FixedDb(gamma);
        c.max_users = r_max;
        c
    }

    #[test]
    fn sweep_is_reproducible() {
        let net = network(3, 2, &[1, 5]);
        let cfg = scenario(4);
        let spec = SweepSpec {
            algorithms: vec![Algorithm::GreedyP1, Algorithm::Heuristic],
            gamma_db_values: vec![0.0, 10.0],
            epsilon_values: vec![0.0],
            r_max_values: vec![4],
            runs: 20,
            base_seed: 3,
        };
        let a = run_sweep(&spec, &cfg, &net).unwrap().to_csv();
        let b = run_sweep(&spec, &cfg, &net).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.lines().count() == 5); // header + 4 cells
    }

    #[test]
    fn oversized_optimal_cell_is_skipped() {
        let net = network(3, 2, &[1, 5]);
        let cfg = scenario(30);
        let spec = SweepSpec {
            algorithms: vec![Algorithm::Optimal],
            gamma_db_values: vec![0.0],
            epsilon_values: vec![0.0],
            r_max_values: vec![30],
            runs: 2,
            base_seed: 1,
        };
        let table = run_sweep(&spec, &cfg, &net).unwrap();
        assert!(table.cells.is_empty());
        assert_eq!(table.skipped.len(), 1);
    }

    #[test]
    fn csv_shape_and_header() {
        let net = network(3, 2, &[1, 5]);
        let cfg = scenario(3);
        let spec = SweepSpec {
            algorithms: vec![Algorithm::GreedyP2],
            gamma_db_values: vec![5.0],
            epsilon_values: vec![0.0],
            r_max_values: vec![3],
            runs: 3,
            base_seed: 11,
        };
        let table = run_sweep(&spec, &cfg, &net).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "algo,gamma_db,epsilon,r_max,runs,mean_cost_w,stderr_cost_w,satisfied_ratio,stderr_ratio,act_rrh1,act_rrh5,tx_w,activation_w,bbu_w"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("greedy-p2,5,0,3,3,"));
    }
}
