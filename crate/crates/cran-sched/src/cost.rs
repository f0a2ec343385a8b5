//! Weighted power-cost accounting for radio heads and the processing pool.
//!
//! Per slot, the system pays the transmit power of every active radio head,
//! an activation term (activation plus fiber power for heads that are on,
//! sleep power for heads that are not), and a processing term proportional to
//! the compute units of the requests scheduled in the slot. The activation
//! and processing terms enter the objective scaled by the weights `w_R` and
//! `w_B`.

use crate::model::{Network, Request, Rrh, Schedule, SlotAssignment};
use serde::{Deserialize, Serialize};

/// One slot's power cost split into its sources. `weighted_total` is
/// `tx + w_R * rrh_activation + w_B * bbu`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Total transmit power, W.
    pub tx: f64,
    /// Activation/fiber/sleep power before weighting, W.
    pub rrh_activation: f64,
    /// Pool processing power before weighting, W.
    pub bbu: f64,
    /// Weighted sum of the three components, W.
    pub weighted_total: f64,
}

impl CostBreakdown {
    pub fn add(&mut self, other: &CostBreakdown) {
        self.tx += other.tx;
        self.rrh_activation += other.rrh_activation;
        self.bbu += other.bbu;
        self.weighted_total += other.weighted_total;
    }
}

/// Transmit and activation power of all radio heads in one slot, both
/// unweighted. Sleeping heads charge their sleep power every slot.
pub fn rrh_slot_cost(slot: &SlotAssignment, rrhs: &[Rrh]) -> (f64, f64) {
    let mut tx = 0.0;
    let mut activation = 0.0;
    for (j, rrh) in rrhs.iter().enumerate() {
        if slot.active[j] {
            tx += slot.rrh_power(j);
            activation += rrh.activation_power + rrh.fiber_power;
        } else {
            activation += rrh.sleep_power;
        }
    }
    (tx, activation)
}

/// Unweighted processing power of the pool in one slot: power per compute
/// unit times the units of every request scheduled in the slot.
pub fn bbu_slot_cost(slot: &SlotAssignment, requests: &[Request], bbu_power_per_unit: f64) -> f64 {
    let units: f64 = slot
        .scheduled()
        .map(|(r, _)| requests[r].resources)
        .sum();
    bbu_power_per_unit * units
}

/// Full weighted cost of one slot.
pub fn total_slot_cost(slot: &SlotAssignment, requests: &[Request], network: &Network) -> CostBreakdown {
    let (tx, rrh_activation) = rrh_slot_cost(slot, &network.rrhs);
    let bbu = bbu_slot_cost(slot, requests, network.bbu_power_per_unit);
    CostBreakdown {
        tx,
        rrh_activation,
        bbu,
        weighted_total: tx + network.weight_rrh * rrh_activation + network.weight_bbu * bbu,
    }
}

/// Weighted cost of the whole horizon: the sum of per-slot weighted totals.
pub fn horizon_cost(schedule: &Schedule, requests: &[Request], network: &Network) -> f64 {
    schedule
        .slots
        .iter()
        .map(|slot| total_slot_cost(slot, requests, network).weighted_total)
        .sum()
}

/// Per-source totals over the whole horizon.
pub fn horizon_breakdown(schedule: &Schedule, requests: &[Request], network: &Network) -> CostBreakdown {
    let mut total = CostBreakdown::default();
    for slot in &schedule.slots {
        total.add(&total_slot_cost(slot, requests, network));
    }
    total
}
