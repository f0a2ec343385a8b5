//! Text configuration for the CLI: a sectioned key-value file with
//! `[network]`, `[scenario]`, and `[sweep]` tables. Every key carries a
//! reference default, so an empty file is a complete configuration; any
//! field can be overridden individually.
//!
//! Powers are in watts, except the head transmit cap which may be given as
//! `max_power_dbm`. SINR enters in dB and is converted to linear scale at
//! this boundary. Also hosts the JSON schedule bundle consumed by the
//! `validate` command.

use crate::harness::{Algorithm, SweepSpec};
use crate::model::{dbm_to_watts, Network, Request, Rrh, Schedule};
use crate::scenario::{
    default_fiber_power, default_rrh_layout, DeadlinePolicy, PathLossModel, ScenarioConfig,
    SinrSpec,
};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Unknown keys and type mismatches; the message carries the offending
    /// line and the valid keys.
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    sweep: RawSweep,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    num_subcarriers: Option<usize>,
    horizon: Option<usize>,
    bbu_capacity: Option<f64>,
    bbu_power_per_unit: Option<f64>,
    noise_power: Option<f64>,
    weight_rrh: Option<f64>,
    weight_bbu: Option<f64>,
    vm_base: Option<f64>,
    theta: Option<f64>,
    epsilon: Option<f64>,
    max_power: Option<f64>,
    max_power_dbm: Option<f64>,
    activation_power: Option<f64>,
    sleep_power: Option<f64>,
    fiber_power: Option<Vec<f64>>,
    /// 1-based ids into the scenario layout; heads outside this list are
    /// absent from the network.
    usable_rrhs: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    radius: Option<f64>,
    max_users: Option<usize>,
    arrival_prob: Option<f64>,
    min_sinr_db: Option<f64>,
    /// `[lo, hi]` dB: heterogeneous per-request targets.
    min_sinr_db_range: Option<[f64; 2]>,
    deadline_policy: Option<String>,
    rrh_layout: Option<Vec<[f64; 2]>>,
    seed: Option<u64>,
    pl_intercept_db: Option<f64>,
    pl_exponent: Option<f64>,
    min_distance_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    algorithms: Option<Vec<String>>,
    gamma_db_values: Option<Vec<f64>>,
    epsilon_values: Option<Vec<f64>>,
    r_max_values: Option<Vec<usize>>,
    runs: Option<usize>,
    base_seed: Option<u64>,
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FullConfig {
    pub network: Network,
    pub scenario: ScenarioConfig,
    pub sweep: SweepSpec,
}

fn parse_deadline_policy(text: &str) -> Result<DeadlinePolicy, ConfigError> {
    if text == "end-of-horizon" {
        return Ok(DeadlinePolicy::EndOfHorizon);
    }
    if let Some(rest) = text.strip_prefix("fixed:") {
        let delta = rest
            .parse::<usize>()
            .map_err(|_| ConfigError::Invalid(format!("deadline_policy: bad window '{rest}'")))?;
        return Ok(DeadlinePolicy::Fixed(delta));
    }
    if let Some(rest) = text.strip_prefix("uniform:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() == 2 {
            let lo = parts[0].parse::<usize>();
            let hi = parts[1].parse::<usize>();
            if let (Ok(lo), Ok(hi)) = (lo, hi) {
                if lo <= hi {
                    return Ok(DeadlinePolicy::Uniform { lo, hi });
                }
            }
        }
        return Err(ConfigError::Invalid(format!("deadline_policy: bad range '{rest}'")));
    }
    Err(ConfigError::Invalid(format!(
        "deadline_policy: '{text}' (expected end-of-horizon, fixed:<k>, or uniform:<lo>:<hi>)"
    )))
}

fn deadline_policy_str(policy: DeadlinePolicy) -> String {
    match policy {
        DeadlinePolicy::EndOfHorizon => "end-of-horizon".into(),
        DeadlinePolicy::Fixed(k) => format!("fixed:{k}"),
        DeadlinePolicy::Uniform { lo, hi } => format!("uniform:{lo}:{hi}"),
    }
}

fn build(raw: RawConfig) -> Result<FullConfig, ConfigError> {
    let n = raw.network;
    let s = raw.scenario;
    let w = raw.sweep;

    let radius = s.radius.unwrap_or(500.0);
    if radius <= 0.0 {
        return Err(ConfigError::Invalid("radius must be positive".into()));
    }
    let layout = s.rrh_layout.map_or_else(
        || default_rrh_layout(radius),
        |v| v.into_iter().map(|[x, y]| (x, y)).collect(),
    );
    let fiber = n.fiber_power.unwrap_or_else(default_fiber_power);
    if fiber.len() != layout.len() {
        return Err(ConfigError::Invalid(format!(
            "fiber_power has {} entries for {} head positions",
            fiber.len(),
            layout.len()
        )));
    }

    let max_power = match (n.max_power, n.max_power_dbm) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "set either max_power or max_power_dbm, not both".into(),
            ))
        }
        (Some(w), None) => w,
        (None, Some(dbm)) => dbm_to_watts(dbm),
        (None, None) => dbm_to_watts(48.0),
    };
    let activation_power = n.activation_power.unwrap_or(130.0);
    let sleep_power = n.sleep_power.unwrap_or(75.0);

    let mut usable = n.usable_rrhs.unwrap_or_else(|| (1..=layout.len()).collect());
    usable.sort_unstable();
    usable.dedup();
    if usable.is_empty() {
        return Err(ConfigError::Invalid("usable_rrhs must not be empty".into()));
    }
    for &id in &usable {
        if id == 0 || id > layout.len() {
            return Err(ConfigError::Invalid(format!(
                "usable_rrhs id {id} outside 1..={}",
                layout.len()
            )));
        }
    }

    let rrhs: Vec<Rrh> = usable
        .iter()
        .map(|&id| Rrh {
            id,
            max_power,
            activation_power,
            sleep_power,
            fiber_power: fiber[id - 1],
            position: layout[id - 1],
        })
        .collect();

    let network = Network {
        rrhs,
        num_subcarriers: n.num_subcarriers.unwrap_or(2),
        horizon: n.horizon.unwrap_or(3),
        bbu_capacity: n.bbu_capacity.unwrap_or(100.0),
        bbu_power_per_unit: n.bbu_power_per_unit.unwrap_or(1.0),
        noise_power: n.noise_power.unwrap_or(1e-13),
        weight_rrh: n.weight_rrh.unwrap_or(0.01),
        weight_bbu: n.weight_bbu.unwrap_or(0.1),
        vm_base: n.vm_base.unwrap_or(5.0),
        theta: n.theta.unwrap_or(1.0),
        epsilon: n.epsilon.unwrap_or(0.0),
    };
    if network.num_subcarriers < 1 || network.horizon < 1 {
        return Err(ConfigError::Invalid("num_subcarriers and horizon must be at least 1".into()));
    }
    if network.bbu_capacity <= 0.0 || network.noise_power <= 0.0 {
        return Err(ConfigError::Invalid("bbu_capacity and noise_power must be positive".into()));
    }
    if network.weight_rrh < 0.0 || network.weight_bbu < 0.0 || network.theta < 0.0 {
        return Err(ConfigError::Invalid("weights and theta must be non-negative".into()));
    }
    if network.epsilon < 0.0 {
        return Err(ConfigError::Invalid("epsilon must be non-negative".into()));
    }

    let min_sinr_db = match (s.min_sinr_db, s.min_sinr_db_range) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "set either min_sinr_db or min_sinr_db_range, not both".into(),
            ))
        }
        (Some(db), None) => SinrSpec::FixedDb(db),
        (None, Some([lo, hi])) => {
            if lo > hi {
                return Err(ConfigError::Invalid("min_sinr_db_range: lo > hi".into()));
            }
            SinrSpec::UniformDb { lo, hi }
        }
        (None, None) => SinrSpec::FixedDb(10.0),
    };
    let arrival_prob = s.arrival_prob.unwrap_or(0.5);
    if !(0.0..=1.0).contains(&arrival_prob) {
        return Err(ConfigError::Invalid("arrival_prob must lie in [0, 1]".into()));
    }

    let scenario = ScenarioConfig {
        radius,
        max_users: s.max_users.unwrap_or(7),
        arrival_prob,
        min_sinr_db,
        deadline_policy: s
            .deadline_policy
            .as_deref()
            .map_or(Ok(DeadlinePolicy::EndOfHorizon), parse_deadline_policy)?,
        rrh_layout: layout,
        path_loss: PathLossModel {
            intercept_db: s.pl_intercept_db.unwrap_or(128.1),
            exponent: s.pl_exponent.unwrap_or(3.76),
            min_distance_m: s.min_distance_m.unwrap_or(1.0),
        },
        seed: s.seed.unwrap_or(1),
    };

    let algorithms = match w.algorithms {
        None => vec![Algorithm::GreedyP1],
        Some(names) => {
            let mut parsed = Vec::new();
            for name in names {
                parsed.push(Algorithm::parse(&name).ok_or_else(|| {
                    ConfigError::Invalid(format!(
                        "unknown algorithm '{name}' (expected optimal, greedy-p1, greedy-p2, heuristic)"
                    ))
                })?);
            }
            parsed
        }
    };
    let runs = w.runs.unwrap_or(500);
    if runs < 1 {
        return Err(ConfigError::Invalid("runs must be at least 1".into()));
    }
    let sweep = SweepSpec {
        algorithms,
        gamma_db_values: w.gamma_db_values.unwrap_or_else(|| vec![0.0, 5.0, 10.0, 15.0, 20.0]),
        epsilon_values: w.epsilon_values.unwrap_or_else(|| vec![0.0]),
        r_max_values: w.r_max_values.unwrap_or_else(|| vec![7]),
        runs,
        base_seed: w.base_seed.unwrap_or(1),
    };

    Ok(FullConfig { network, scenario, sweep })
}

/// Parses a configuration from text; an empty string yields the reference
/// defaults.
pub fn load_config_str(text: &str) -> Result<FullConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    build(raw)
}

/// Parses a configuration file.
pub fn load_config(path: &Path) -> Result<FullConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    load_config_str(&text)
}

fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

fn fmt_list<T: std::fmt::Display>(values: impl IntoIterator<Item = T>) -> String {
    let inner: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
    format!("[{}]", inner.join(", "))
}

/// Renders a configuration back to the canonical text form: every key
/// explicit, sections and keys in a fixed order. `load(dump(c))` equals `c`.
pub fn dump_config(config: &FullConfig) -> String {
    let net = &config.network;
    let sc = &config.scenario;
    let sw = &config.sweep;
    let mut out = String::new();

    out.push_str("[network]\n");
    out.push_str(&format!("num_subcarriers = {}\n", net.num_subcarriers));
    out.push_str(&format!("horizon = {}\n", net.horizon));
    out.push_str(&format!("bbu_capacity = {}\n", fmt_f64(net.bbu_capacity)));
    out.push_str(&format!("bbu_power_per_unit = {}\n", fmt_f64(net.bbu_power_per_unit)));
    out.push_str(&format!("noise_power = {}\n", net.noise_power));
    out.push_str(&format!("weight_rrh = {}\n", net.weight_rrh));
    out.push_str(&format!("weight_bbu = {}\n", net.weight_bbu));
    out.push_str(&format!("vm_base = {}\n", fmt_f64(net.vm_base)));
    out.push_str(&format!("theta = {}\n", fmt_f64(net.theta)));
    out.push_str(&format!("epsilon = {}\n", fmt_f64(net.epsilon)));
    out.push_str(&format!("max_power = {}\n", net.rrhs[0].max_power));
    out.push_str(&format!("activation_power = {}\n", fmt_f64(net.rrhs[0].activation_power)));
    out.push_str(&format!("sleep_power = {}\n", fmt_f64(net.rrhs[0].sleep_power)));
    // Fiber powers are stored per layout position; reconstruct the full
    // list with defaults in the gaps left by unusable heads.
    let mut fiber = vec![0.0; sc.rrh_layout.len()];
    let defaults = default_fiber_power();
    for (i, f) in fiber.iter_mut().enumerate() {
        *f = if i < defaults.len() { defaults[i] } else { 1.0 };
    }
    for rrh in &net.rrhs {
        fiber[rrh.id - 1] = rrh.fiber_power;
    }
    out.push_str(&format!("fiber_power = {}\n", fmt_list(fiber.iter().map(|f| fmt_f64(*f)))));
    out.push_str(&format!(
        "usable_rrhs = {}\n",
        fmt_list(net.rrhs.iter().map(|r| r.id))
    ));

    out.push_str("\n[scenario]\n");
    out.push_str(&format!("radius = {}\n", fmt_f64(sc.radius)));
    out.push_str(&format!("max_users = {}\n", sc.max_users));
    out.push_str(&format!("arrival_prob = {}\n", sc.arrival_prob));
    match sc.min_sinr_db {
        SinrSpec::FixedDb(db) => out.push_str(&format!("min_sinr_db = {}\n", fmt_f64(db))),
        SinrSpec::UniformDb { lo, hi } => out.push_str(&format!(
            "min_sinr_db_range = [{}, {}]\n",
            fmt_f64(lo),
            fmt_f64(hi)
        )),
    }
    out.push_str(&format!(
        "deadline_policy = \"{}\"\n",
        deadline_policy_str(sc.deadline_policy)
    ));
    out.push_str(&format!(
        "rrh_layout = {}\n",
        fmt_list(sc.rrh_layout.iter().map(|(x, y)| format!("[{}, {}]", fmt_f64(*x), fmt_f64(*y))))
    ));
    out.push_str(&format!("seed = {}\n", sc.seed));
    out.push_str(&format!("pl_intercept_db = {}\n", fmt_f64(sc.path_loss.intercept_db)));
    out.push_str(&format!("pl_exponent = {}\n", sc.path_loss.exponent));
    out.push_str(&format!("min_distance_m = {}\n", fmt_f64(sc.path_loss.min_distance_m)));

    out.push_str("\n[sweep]\n");
    out.push_str(&format!(
        "algorithms = {}\n",
        fmt_list(sw.algorithms.iter().map(|a| format!("\"{}\"", a.name())))
    ));
    out.push_str(&format!(
        "gamma_db_values = {}\n",
        fmt_list(sw.gamma_db_values.iter().map(|v| fmt_f64(*v)))
    ));
    out.push_str(&format!(
        "epsilon_values = {}\n",
        fmt_list(sw.epsilon_values.iter().map(|v| fmt_f64(*v)))
    ));
    out.push_str(&format!("r_max_values = {}\n", fmt_list(sw.r_max_values.iter())));
    out.push_str(&format!("runs = {}\n", sw.runs));
    out.push_str(&format!("base_seed = {}\n", sw.base_seed));
    out
}

/// Self-contained schedule file: the instance it was computed for plus the
/// decisions, so it can be validated in isolation.
#[derive(Debug, Serialize, Deserialize)]
pub struct ScheduleBundle {
    pub network: Network,
    pub requests: Vec<Request>,
    pub schedule: Schedule,
}

pub fn write_bundle(bundle: &ScheduleBundle, path: &Path) -> Result<(), ConfigError> {
    let json = serde_json::to_string_pretty(bundle)
        .map_err(|e| ConfigError::Invalid(format!("serialize schedule: {e}")))?;
    std::fs::write(path, json)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })
}

pub fn read_bundle(path: &Path) -> Result<ScheduleBundle, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(format!("parse schedule: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let cfg = load_config_str("").unwrap();
        let net = &cfg.network;
        assert_eq!(net.rrhs.len(), 5);
        assert_eq!(net.num_subcarriers, 2);
        assert_eq!(net.horizon, 3);
        assert!((net.rrhs[0].max_power - dbm_to_watts(48.0)).abs() < 1e-12);
        assert_eq!(net.rrhs.iter().map(|r| r.fiber_power).collect::<Vec<_>>(), vec![
            2.0, 1.0, 1.0, 2.0, 1.0
        ]);
        for rrh in &net.rrhs {
            assert_eq!(rrh.activation_power, 130.0);
            assert_eq!(rrh.sleep_power, 75.0);
        }
        assert_eq!(net.weight_rrh, 0.01);
        assert_eq!(net.weight_bbu, 0.1);
        assert_eq!(net.bbu_power_per_unit, 1.0);
        assert_eq!(net.vm_base, 5.0);
        assert_eq!(net.theta, 1.0);
        assert_eq!(cfg.scenario.radius, 500.0);
        assert_eq!(cfg.scenario.arrival_prob, 0.5);
        assert_eq!(cfg.sweep.runs, 500);
        // Center head sits at the origin.
        assert_eq!(net.rrhs[2].position, (0.0, 0.0));
    }

    #[test]
    fn overrides_apply() {
        let cfg = load_config_str(
            "[network]\nnum_subcarriers = 8\nhorizon = 10\n\n[scenario]\nmax_users = 30\n",
        )
        .unwrap();
        assert_eq!(cfg.network.num_subcarriers, 8);
        assert_eq!(cfg.network.horizon, 10);
        assert_eq!(cfg.scenario.max_users, 30);
        // Untouched keys keep their defaults.
        assert_eq!(cfg.network.rrhs.len(), 5);
    }

    #[test]
    fn usable_subset_restricts_roster() {
        let cfg = load_config_str("[network]\nusable_rrhs = [1, 5]\n").unwrap();
        let ids: Vec<usize> = cfg.network.rrhs.iter().map(|r| r.id).collect();
        assert_eq!(ids, vec![1, 5]);
        assert_eq!(cfg.network.rrhs[0].fiber_power, 2.0);
        assert_eq!(cfg.network.rrhs[1].fiber_power, 1.0);
    }

    #[test]
    fn unknown_key_lists_valid_ones() {
        let err = load_config_str("[network]\nhorizont = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("horizont"), "{msg}");
        assert!(msg.contains("horizon"), "{msg}");
    }

    #[test]
    fn malformed_numeric_reports_line() {
        let err = load_config_str("[network]\nhorizon = \"three\"\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn both_power_keys_rejected() {
        let err =
            load_config_str("[network]\nmax_power = 63.0\nmax_power_dbm = 48.0\n").unwrap_err();
        assert!(err.to_string().contains("not both"));
    }

    #[test]
    fn dbm_power_key() {
        let cfg = load_config_str("[network]\nmax_power_dbm = 30.0\n").unwrap();
        assert!((cfg.network.rrhs[0].max_power - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deadline_policies_parse() {
        let fixed = load_config_str("[scenario]\ndeadline_policy = \"fixed:2\"\n").unwrap();
        assert_eq!(fixed.scenario.deadline_policy, DeadlinePolicy::Fixed(2));
        let range = load_config_str("[scenario]\ndeadline_policy = \"uniform:1:3\"\n").unwrap();
        assert_eq!(range.scenario.deadline_policy, DeadlinePolicy::Uniform { lo: 1, hi: 3 });
        assert!(load_config_str("[scenario]\ndeadline_policy = \"sometimes\"\n").is_err());
    }

    #[test]
    fn sweep_algorithms_parse() {
        let cfg = load_config_str(
            "[sweep]\nalgorithms = [\"optimal\", \"heuristic\"]\nruns = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.sweep.algorithms, vec![Algorithm::Optimal, Algorithm::Heuristic]);
        assert_eq!(cfg.sweep.runs, 10);
        assert!(load_config_str("[sweep]\nalgorithms = [\"magic\"]\n").is_err());
    }

    #[test]
    fn dump_round_trips() {
        let source = "[network]\nnum_subcarriers = 8\nhorizon = 10\nusable_rrhs = [1, 3, 5]\n\n[scenario]\nmax_users = 15\nmin_sinr_db_range = [0.0, 20.0]\ndeadline_policy = \"fixed:4\"\n\n[sweep]\nruns = 50\n";
        let cfg = load_config_str(source).unwrap();
        let dumped = dump_config(&cfg);
        let reloaded = load_config_str(&dumped).unwrap();
        assert_eq!(cfg, reloaded);
        // Dumping the reloaded config is a fixed point.
        assert_eq!(dumped, dump_config(&reloaded));
    }

    #[test]
    fn semantic_checks() {
        assert!(load_config_str("[scenario]\narrival_prob = 1.5\n").is_err());
        assert!(load_config_str("[network]\nbbu_capacity = 0.0\n").is_err());
        assert!(load_config_str("[network]\nusable_rrhs = [9]\n").is_err());
        assert!(load_config_str("[sweep]\nruns = 0\n").is_err());
    }
}
