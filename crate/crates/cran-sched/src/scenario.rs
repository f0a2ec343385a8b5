//! Randomized instance generation: users placed uniformly on a disk, channel
//! gains from a distance path-loss model with Rayleigh (exponential power)
//! fading i.i.d. per subcarrier, and request arrivals drawn per user as
//! independent Bernoulli trials.
//!
//! Generation is fully deterministic given a seed, so paired experiments can
//! feed identical instances to different algorithms.

use crate::model::{db_to_linear, resources_for_request, GainMatrix, Network, Request};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Distance path loss in dB: `intercept_db + 10 * exponent * log10(d / 1 km)`.
/// Distances are clamped below at `min_distance_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub intercept_db: f64,
    pub exponent: f64,
    pub min_distance_m: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        // Standard macro-cell urban profile.
        PathLossModel { intercept_db: 128.1, exponent: 3.76, min_distance_m: 1.0 }
    }
}

impl PathLossModel {
    /// Mean linear power gain at distance `d` meters.
    pub fn gain(&self, d: f64) -> f64 {
        let d = d.max(self.min_distance_m);
        let pl_db = self.intercept_db + 10.0 * self.exponent * (d / 1000.0).log10();
        10f64.powf(-pl_db / 10.0)
    }
}

/// How each request's deadline window is assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeadlinePolicy {
    /// Arrival uniform in the horizon, window stretching to the last slot.
    EndOfHorizon,
    /// Fixed window length, clamped to the horizon end.
    Fixed(usize),
    /// Window length uniform in `lo..=hi`, clamped to the horizon end.
    Uniform { lo: usize, hi: usize },
}

/// Minimum-SINR assignment for generated requests, in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SinrSpec {
    /// Every request demands the same level.
    FixedDb(f64),
    /// Per-request level uniform in `[lo, hi]` dB.
    UniformDb { lo: f64, hi: f64 },
}

/// Parameters of the random scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Cell radius in meters.
    pub radius: f64,
    /// Maximum number of users (Bernoulli trials per run).
    pub max_users: usize,
    /// Probability that a user submits a request in a run.
    pub arrival_prob: f64,
    pub min_sinr_db: SinrSpec,
    pub deadline_policy: DeadlinePolicy,
    /// Planar positions of all radio heads, meters.
    pub rrh_layout: Vec<(f64, f64)>,
    pub path_loss: PathLossModel,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// The five-head layout used by the reference experiments: one head in the
/// center of the cell and four on the diagonal axes at 0.6 of the radius.
pub fn default_rrh_layout(radius: f64) -> Vec<(f64, f64)> {
    let d = 0.6 * radius * std::f64::consts::FRAC_1_SQRT_2;
    vec![(-d, d), (d, d), (0.0, 0.0), (-d, -d), (d, -d)]
}

/// Fiber power costs matching [`default_rrh_layout`]: heads farther from the
/// pool pay more.
pub fn default_fiber_power() -> Vec<f64> {
    vec![2.0, 1.0, 1.0, 2.0, 1.0]
}

/// Draws `count` positions uniformly over the disk of the given radius
/// (area-uniform: radial coordinate `L * sqrt(u)`, angle uniform).
pub fn place_users(count: usize, radius: f64, rng: &mut impl Rng) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let angle = 2.0 * PI * rng.gen::<f64>();
            (r * angle.cos(), r * angle.sin())
        })
        .collect()
}

/// Unit-mean exponential draw (Rayleigh power fading).
fn exp_fade(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln()
}

/// Channel gains of one user towards every head on every subcarrier:
/// deterministic distance path loss times an i.i.d. unit-mean exponential
/// fade per (head, subcarrier) pair.
pub fn gen_channel_gains(
    user_pos: (f64, f64),
    rrh_positions: &[(f64, f64)],
    num_subcarriers: usize,
    model: &PathLossModel,
    rng: &mut impl Rng,
) -> GainMatrix {
    let mut data = Vec::with_capacity(rrh_positions.len() * num_subcarriers);
    for &(x, y) in rrh_positions {
        let d = ((user_pos.0 - x).powi(2) + (user_pos.1 - y).powi(2)).sqrt();
        let pl = model.gain(d);
        for _ in 0..num_subcarriers {
            data.push(pl * exp_fade(rng));
        }
    }
    GainMatrix::new(rrh_positions.len(), num_subcarriers, data)
}

/// Generates one run's request set: each of `max_users` potential users
/// submits independently with probability `arrival_prob`; positions, gains,
/// arrival slots and SINR targets are drawn per submitting user.
///
/// Channel gains are generated towards the heads actually present in
/// `network`, in roster order.
pub fn gen_requests(config: &ScenarioConfig, network: &Network, rng: &mut impl Rng) -> Vec<Request> {
    let rrh_positions: Vec<(f64, f64)> = network.rrhs.iter().map(|r| r.position).collect();
    let horizon = network.horizon;
    let mut requests = Vec::new();
    for user in 0..config.max_users {
        if rng.gen::<f64>() >= config.arrival_prob {
            continue;
        }
        let pos = place_users(1, config.radius, rng)[0];
        let gains =
            gen_channel_gains(pos, &rrh_positions, network.num_subcarriers, &config.path_loss, rng);
        let arrival_slot = rng.gen_range(1..=horizon);
        let window_len = match config.deadline_policy {
            DeadlinePolicy::EndOfHorizon => horizon - arrival_slot,
            DeadlinePolicy::Fixed(delta) => delta.min(horizon - arrival_slot),
            DeadlinePolicy::Uniform { lo, hi } => {
                rng.gen_range(lo..=hi.max(lo)).min(horizon - arrival_slot)
            }
        };
        let sinr_db = match config.min_sinr_db {
            SinrSpec::FixedDb(db) => db,
            SinrSpec::UniformDb { lo, hi } => rng.gen_range(lo..=hi),
        };
        let min_sinr = db_to_linear(sinr_db);
        let resources = resources_for_request(min_sinr, network.vm_base, network.theta)
            .expect("linear SINR is non-negative");
        requests.push(Request {
            id: requests.len(),
            user_id: user,
            arrival_slot,
            window_len,
            min_sinr,
            resources,
            gains,
        });
    }
    requests
}

/// Convenience wrapper: generates the instance for a specific seed,
/// ignoring `config.seed`.
pub fn gen_instance(config: &ScenarioConfig, network: &Network, seed: u64) -> Vec<Request> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_requests(config, network, &mut rng)
}
