//! Domain types for transmission requests, radio heads, the processing pool,
//! and per-slot scheduling decisions, together with SINR evaluation and
//! constraint validation.
//!
//! All SINR values are stored and compared in linear scale; dB enters only at
//! configuration boundaries via [`db_to_linear`] and friends.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Relative tolerance used when checking SINR targets against achieved
/// values. Power solutions put active constraints exactly on the boundary,
/// so validation must absorb floating-point round-off.
pub const SINR_REL_TOL: f64 = 1e-6;

/// Absolute slack granted to power-cap and capacity checks.
pub const CAP_ABS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("minimum SINR must be non-negative, got {0}")]
    NegativeSinr(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Converts a dB ratio to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Channel power gains of one user towards every radio head on every
/// subcarrier, laid out row-major as `(rrh, subcarrier)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMatrix {
    num_rrhs: usize,
    num_subcarriers: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn new(num_rrhs: usize, num_subcarriers: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), num_rrhs * num_subcarriers, "gain matrix shape");
        Self { num_rrhs, num_subcarriers, data }
    }

    pub fn uniform(num_rrhs: usize, num_subcarriers: usize, gain: f64) -> Self {
        Self::new(num_rrhs, num_subcarriers, vec![gain; num_rrhs * num_subcarriers])
    }

    #[inline]
    pub fn g(&self, rrh: usize, subcarrier: usize) -> f64 {
        self.data[rrh * self.num_subcarriers + subcarrier]
    }

    pub fn num_rrhs(&self) -> usize {
        self.num_rrhs
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }
}

/// A user transmission demand: when it arrives, how long it may wait, the
/// minimum SINR it must be served at, how much compute it occupies in the
/// pool, and its channel gains towards every radio head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: usize,
    pub user_id: usize,
    /// Arrival slot, 1-based.
    pub arrival_slot: usize,
    /// Number of additional slots after arrival within which the request may
    /// still be served; the last admissible slot is `arrival_slot + window_len`.
    pub window_len: usize,
    /// Minimum SINR in linear scale.
    pub min_sinr: f64,
    /// Compute units the request occupies in the processing pool.
    pub resources: f64,
    pub gains: GainMatrix,
}

impl Request {
    /// Last slot (inclusive) at which the request may be scheduled.
    pub fn deadline_slot(&self) -> usize {
        self.arrival_slot + self.window_len
    }

    /// Whether the request may be scheduled at slot `t` (1-based).
    pub fn in_window(&self, t: usize) -> bool {
        t >= self.arrival_slot && t <= self.deadline_slot()
    }
}

/// A remote radio head with its transmit-power cap and the power constants of
/// its activation, fiber link, and sleep states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rrh {
    pub id: usize,
    /// Per-slot transmit power cap in W.
    pub max_power: f64,
    /// Power drawn while switched on, in W.
    pub activation_power: f64,
    /// Power drawn while sleeping, in W.
    pub sleep_power: f64,
    /// Power drawn by the fronthaul fiber while the head is on, in W.
    pub fiber_power: f64,
    /// Planar position in meters.
    pub position: (f64, f64),
}

/// Static description of the network: the radio-head roster, subcarrier and
/// slot counts, pool capacity, noise power, and cost weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub rrhs: Vec<Rrh>,
    pub num_subcarriers: usize,
    /// Number of slots in the scheduling horizon.
    pub horizon: usize,
    /// Compute capacity of the processing pool, in abstract units.
    pub bbu_capacity: f64,
    /// Power per allocated compute unit, in W.
    pub bbu_power_per_unit: f64,
    /// Noise power per subcarrier, in W.
    pub noise_power: f64,
    /// Weight on radio-head activation/sleep/fiber power.
    pub weight_rrh: f64,
    /// Weight on pool processing power.
    pub weight_bbu: f64,
    /// Base compute units needed to stand up one VM.
    pub vm_base: f64,
    /// Slope of compute demand in achievable spectral efficiency.
    pub theta: f64,
    /// Orthogonality threshold for the online scheduler, in linear gain units.
    pub epsilon: f64,
}

impl Network {
    pub fn num_rrhs(&self) -> usize {
        self.rrhs.len()
    }
}

/// Compute units required to serve a request with minimum SINR `min_sinr`
/// (linear): a fixed VM activation term plus a term growing with the
/// achievable spectral efficiency.
pub fn resources_for_request(min_sinr: f64, vm_base: f64, theta: f64) -> Result<f64, ModelError> {
    if min_sinr < 0.0 {
        return Err(ModelError::NegativeSinr(min_sinr));
    }
    Ok(vm_base + theta * (1.0 + min_sinr).log2())
}

/// One slot's decisions: which subcarrier each request is allocated to (if
/// any), which radio heads are active, and the transmit power of each head
/// towards each request on each subcarrier.
///
/// Each request occupies at most one subcarrier per slot, so the allocation
/// is stored as an optional subcarrier index per request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotAssignment {
    /// `alloc[r]` is the subcarrier serving request `r`, if scheduled here.
    pub alloc: Vec<Option<usize>>,
    /// `active[j]` is true when radio head `j` transmits this slot.
    pub active: Vec<bool>,
    num_rrhs: usize,
    num_subcarriers: usize,
    /// Power tensor, row-major over `(request, rrh, subcarrier)`, in W.
    power: Vec<f64>,
}

impl SlotAssignment {
    pub fn empty(num_requests: usize, num_rrhs: usize, num_subcarriers: usize) -> Self {
        Self {
            alloc: vec![None; num_requests],
            active: vec![false; num_rrhs],
            num_rrhs,
            num_subcarriers,
            power: vec![0.0; num_requests * num_rrhs * num_subcarriers],
        }
    }

    #[inline]
    pub fn p(&self, request: usize, rrh: usize, subcarrier: usize) -> f64 {
        self.power[(request * self.num_rrhs + rrh) * self.num_subcarriers + subcarrier]
    }

    #[inline]
    pub fn set_p(&mut self, request: usize, rrh: usize, subcarrier: usize, watts: f64) {
        self.power[(request * self.num_rrhs + rrh) * self.num_subcarriers + subcarrier] = watts;
    }

    pub fn num_requests(&self) -> usize {
        self.alloc.len()
    }

    pub fn num_rrhs(&self) -> usize {
        self.num_rrhs
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    /// Total transmit power of radio head `j` this slot.
    pub fn rrh_power(&self, rrh: usize) -> f64 {
        let mut sum = 0.0;
        for r in 0..self.num_requests() {
            for s in 0..self.num_subcarriers {
                sum += self.p(r, rrh, s);
            }
        }
        sum
    }

    /// Indices of requests scheduled in this slot with their subcarriers.
    pub fn scheduled(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.alloc.iter().enumerate().filter_map(|(r, s)| s.map(|s| (r, s)))
    }
}

/// The full horizon's decisions plus the set of request ids that were
/// scheduled exactly once within their window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub slots: Vec<SlotAssignment>,
    pub satisfied: BTreeSet<usize>,
}

impl Schedule {
    pub fn empty(network: &Network, num_requests: usize) -> Self {
        let slots = (0..network.horizon)
            .map(|_| SlotAssignment::empty(num_requests, network.num_rrhs(), network.num_subcarriers))
            .collect();
        Self { slots, satisfied: BTreeSet::new() }
    }

    /// Recomputes the satisfied set from the allocation variables: request
    /// ids scheduled exactly once within their window.
    pub fn mark_satisfied(&mut self, requests: &[Request]) {
        self.satisfied.clear();
        for req in requests {
            let mut count = 0usize;
            let mut in_window = true;
            for (t0, slot) in self.slots.iter().enumerate() {
                if slot.alloc[req.id].is_some() {
                    count += 1;
                    in_window &= req.in_window(t0 + 1);
                }
            }
            if count == 1 && in_window {
                self.satisfied.insert(req.id);
            }
        }
    }
}

/// Average SINR of `request` on `subcarrier` under the given slot decisions.
///
/// The numerator sums the victim's received signal power over all radio
/// heads; the denominator adds noise plus every other request's power on the
/// same subcarrier, weighted by the victim's own channel gains. All-zero
/// powers yield 0.
pub fn compute_sinr(
    slot: &SlotAssignment,
    request: usize,
    subcarrier: usize,
    requests: &[Request],
    noise: f64,
) -> f64 {
    let gains = &requests[request].gains;
    let mut signal = 0.0;
    let mut interference = 0.0;
    for j in 0..slot.num_rrhs() {
        let g = gains.g(j, subcarrier);
        signal += slot.p(request, j, subcarrier) * g;
        for other in 0..slot.num_requests() {
            if other != request {
                interference += slot.p(other, j, subcarrier) * g;
            }
        }
    }
    signal / (noise + interference)
}

/// A single constraint violation found by [`validate_schedule`]. Violations
/// are values, never errors: validation is total and the harness aggregates
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Radio head transmit power exceeds `y_j * P_j` at a slot.
    PowerCap { slot: usize, rrh: usize, excess_w: f64 },
    /// Request not scheduled exactly once over the horizon.
    ScheduleCount { request: usize, count: usize },
    /// Achieved SINR below the request's minimum at a scheduled slot.
    Sinr { slot: usize, request: usize, subcarrier: usize, achieved: f64, target: f64 },
    /// Pool compute demand exceeds capacity at a slot.
    BbuCapacity { slot: usize, used: f64, capacity: f64 },
    /// Allocation set outside the request's admissible window.
    WindowAlloc { slot: usize, request: usize },
    /// Power spent on a request outside its admissible window.
    WindowPower { slot: usize, request: usize, watts: f64 },
    /// Power spent on a request that is not allocated in the slot.
    UnallocatedPower { slot: usize, request: usize, watts: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::PowerCap { slot, rrh, excess_w } => {
                write!(f, "slot {slot}: rrh {rrh} exceeds its power cap by {excess_w:.3e} W")
            }
            Violation::ScheduleCount { request, count } => {
                write!(f, "request {request} scheduled {count} times (expected exactly 1)")
            }
            Violation::Sinr { slot, request, subcarrier, achieved, target } => write!(
                f,
                "slot {slot}: request {request} on subcarrier {subcarrier} reaches SINR {achieved:.6e} < target {target:.6e}"
            ),
            Violation::BbuCapacity { slot, used, capacity } => {
                write!(f, "slot {slot}: pool demand {used:.3} exceeds capacity {capacity:.3}")
            }
            Violation::WindowAlloc { slot, request } => {
                write!(f, "slot {slot}: request {request} allocated outside its window")
            }
            Violation::WindowPower { slot, request, watts } => {
                write!(f, "slot {slot}: {watts:.3e} W spent on request {request} outside its window")
            }
            Violation::UnallocatedPower { slot, request, watts } => {
                write!(f, "slot {slot}: {watts:.3e} W spent on request {request} without an allocation")
            }
        }
    }
}

fn check_dims(
    schedule: &Schedule,
    requests: &[Request],
    network: &Network,
) -> Result<(), ModelError> {
    if schedule.slots.len() != network.horizon {
        return Err(ModelError::Dimension(format!(
            "schedule has {} slots, horizon is {}",
            schedule.slots.len(),
            network.horizon
        )));
    }
    for (t, slot) in schedule.slots.iter().enumerate() {
        if slot.num_requests() != requests.len()
            || slot.num_rrhs() != network.num_rrhs()
            || slot.num_subcarriers() != network.num_subcarriers
        {
            return Err(ModelError::Dimension(format!(
                "slot {} shaped ({}, {}, {}), expected ({}, {}, {})",
                t,
                slot.num_requests(),
                slot.num_rrhs(),
                slot.num_subcarriers(),
                requests.len(),
                network.num_rrhs(),
                network.num_subcarriers
            )));
        }
    }
    for req in requests {
        if req.gains.num_rrhs() != network.num_rrhs()
            || req.gains.num_subcarriers() != network.num_subcarriers
        {
            return Err(ModelError::Dimension(format!(
                "request {} gains shaped ({}, {}), expected ({}, {})",
                req.id,
                req.gains.num_rrhs(),
                req.gains.num_subcarriers(),
                network.num_rrhs(),
                network.num_subcarriers
            )));
        }
    }
    Ok(())
}

/// Checks the per-slot constraints of one slot: power caps, SINR targets,
/// pool capacity, window membership, and power without allocation. `t` is
/// the 1-based slot index.
pub fn validate_slot(
    slot: &SlotAssignment,
    t: usize,
    requests: &[Request],
    network: &Network,
) -> Vec<Violation> {
    let mut violations = Vec::new();

    for (j, rrh) in network.rrhs.iter().enumerate() {
        let cap = if slot.active[j] { rrh.max_power } else { 0.0 };
        let used = slot.rrh_power(j);
        if used > cap * (1.0 + SINR_REL_TOL) + CAP_ABS_TOL {
            violations.push(Violation::PowerCap { slot: t, rrh: rrh.id, excess_w: used - cap });
        }
    }

    let mut pool_used = 0.0;
    for (r, req) in requests.iter().enumerate() {
        if let Some(s) = slot.alloc[r] {
            pool_used += req.resources;
            if !req.in_window(t) {
                violations.push(Violation::WindowAlloc { slot: t, request: req.id });
            }
            let achieved = compute_sinr(slot, r, s, requests, network.noise_power);
            if achieved < req.min_sinr * (1.0 - SINR_REL_TOL) {
                violations.push(Violation::Sinr {
                    slot: t,
                    request: req.id,
                    subcarrier: s,
                    achieved,
                    target: req.min_sinr,
                });
            }
        }
        // Power is admissible only toward the allocated subcarrier within
        // the window.
        let mut stray = 0.0;
        for j in 0..slot.num_rrhs() {
            for s in 0..slot.num_subcarriers() {
                if slot.alloc[r] != Some(s) {
                    stray += slot.p(r, j, s);
                }
            }
        }
        if stray > CAP_ABS_TOL {
            if !req.in_window(t) {
                violations.push(Violation::WindowPower { slot: t, request: req.id, watts: stray });
            } else {
                violations.push(Violation::UnallocatedPower { slot: t, request: req.id, watts: stray });
            }
        }
    }
    if pool_used > network.bbu_capacity + CAP_ABS_TOL {
        violations.push(Violation::BbuCapacity {
            slot: t,
            used: pool_used,
            capacity: network.bbu_capacity,
        });
    }

    violations
}

/// Validates a full schedule against every constraint of the joint problem:
/// per-slot caps, SINR and capacity, window membership, and the requirement
/// that each request is accommodated exactly once.
///
/// Returns the (possibly empty) violation list; a structural error is
/// returned only when dimensions are inconsistent.
pub fn validate_schedule(
    schedule: &Schedule,
    requests: &[Request],
    network: &Network,
) -> Result<Vec<Violation>, ModelError> {
    check_dims(schedule, requests, network)?;

    let mut violations = Vec::new();
    for (t0, slot) in schedule.slots.iter().enumerate() {
        violations.extend(validate_slot(slot, t0 + 1, requests, network));
    }
    for (r, req) in requests.iter().enumerate() {
        let count: usize =
            schedule.slots.iter().filter(|slot| slot.alloc[r].is_some()).count();
        if count != 1 {
            violations.push(Violation::ScheduleCount { request: req.id, count });
        }
    }
    Ok(violations)
}
