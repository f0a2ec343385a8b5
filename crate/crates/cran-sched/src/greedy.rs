//! Polynomial-time per-slot scheduler. Each slot runs two phases followed by
//! power control:
//!
//! - Phase one builds a greedy orthogonal scheduling: heads are activated one
//!   at a time, each taking the request/subcarrier pairs that fit its power
//!   budget, and later candidates are restricted to heads whose gain towards
//!   every already-scheduled pair stays below the orthogonality threshold
//!   `epsilon`.
//! - Phase two spends the activated heads' residual power on additional
//!   requests, allowing channel sharing and joint transmission.
//! - The combined scheduling is priced by the power-control LP. When that
//!   turns out infeasible, one of two fallbacks applies: shed phase-two
//!   requests (most expensive first), or activate additional heads before
//!   shedding anything.
//!
//! Requests that reach their deadline unscheduled are dropped and counted
//! unsatisfied.

use crate::lp::{self, SolveStatus};
use crate::model::{Network, Request, Schedule, SlotAssignment};

/// What to do when the combined phase-one/phase-two scheduling admits no
/// feasible power allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// Drop phase-two requests with the largest minimum power first.
    ShedRequests,
    /// Activate further heads (cheapest first) before shedding anything.
    ActivateHeads,
}

/// Order in which candidate (request, subcarrier) pairs are scanned during
/// admission. Priority-descending serves urgent and cheap requests first;
/// the ascending variant is kept for compatibility with schedulers that scan
/// the sorted list the other way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdmissionOrder {
    #[default]
    PriorityDescending,
    PriorityAscending,
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyOptions {
    pub fallback: Fallback,
    pub admission_order: AdmissionOrder,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions { fallback: Fallback::ShedRequests, admission_order: AdmissionOrder::default() }
    }
}

/// Per-slot scheduler input: the outstanding requests with their waiting
/// times, the slot index, and the orthogonality threshold.
#[derive(Debug, Clone)]
pub struct GreedyState {
    /// Outstanding request indices, ascending.
    pub outstanding: Vec<usize>,
    /// Waiting time per outstanding request: slots spent queued so far.
    pub waiting: Vec<usize>,
    /// Current slot, 1-based.
    pub slot: usize,
    /// Orthogonality threshold in linear gain units.
    pub epsilon: f64,
}

impl GreedyState {
    /// Collects the in-window unscheduled requests at slot `t`.
    pub fn collect(unscheduled: &[bool], requests: &[Request], t: usize, epsilon: f64) -> Self {
        let mut outstanding = Vec::new();
        let mut waiting = Vec::new();
        for (r, req) in requests.iter().enumerate() {
            if unscheduled[r] && req.in_window(t) {
                outstanding.push(r);
                waiting.push(t - req.arrival_slot);
            }
        }
        GreedyState { outstanding, waiting, slot: t, epsilon }
    }
}

/// Minimum transmit power for `request` to meet its SINR target on one
/// isolated link: `gamma * noise / gain`. Zero-SINR requests need no power;
/// zero-gain links can never serve and report infinity.
pub fn min_power_requirement(request: &Request, rrh: usize, subcarrier: usize, noise: f64) -> f64 {
    if request.min_sinr == 0.0 {
        return 0.0;
    }
    let g = request.gains.g(rrh, subcarrier);
    if g <= 0.0 {
        f64::INFINITY
    } else {
        request.min_sinr * noise / g
    }
}

/// Admission priority: high for requests that waited long and are cheap to
/// serve. An unserveable link (infinite power) has priority zero.
pub fn priority_metric(waited: usize, xi: f64) -> f64 {
    if xi.is_infinite() {
        return 0.0;
    }
    (waited as f64 + 1.0) / xi
}

/// Phase-one output: activated heads in selection order and their admitted
/// (request, subcarrier, xi) triples.
#[derive(Debug, Clone, Default)]
pub struct PhaseOne {
    pub active: Vec<usize>,
    pub sched: Vec<Vec<(usize, usize, f64)>>,
}

impl PhaseOne {
    pub fn scheduled_requests(&self) -> impl Iterator<Item = usize> + '_ {
        self.sched.iter().flatten().map(|&(r, _, _)| r)
    }

    pub fn resources(&self, requests: &[Request]) -> f64 {
        self.scheduled_requests().map(|r| requests[r].resources).sum()
    }
}

/// Phase-two output: admitted (request, head, subcarrier, xi) tuples in
/// admission order, plus the residual power every phase-one head ended with.
#[derive(Debug, Clone, Default)]
pub struct PhaseTwo {
    pub sched: Vec<(usize, usize, usize, f64)>,
    /// (head, residual watts) for every phase-one head, post admission.
    pub residual: Vec<(usize, f64)>,
}

/// Greedy per-head admission: scan the candidate (request, subcarrier)
/// pairs with `xi <= P_j` in priority order and take every pair that fits
/// the remaining power budget, an unused subcarrier, an unadmitted request,
/// and the pool capacity.
fn admit_for_head(
    head: usize,
    remaining: &[usize],
    waiting_of: &dyn Fn(usize) -> usize,
    committed_m: f64,
    requests: &[Request],
    network: &Network,
    order: AdmissionOrder,
) -> Vec<(usize, usize, f64)> {
    let cap = network.rrhs[head].max_power;
    let mut candidates: Vec<(usize, usize, f64, f64)> = Vec::new();
    for &r in remaining {
        for s in 0..network.num_subcarriers {
            let xi = min_power_requirement(&requests[r], head, s, network.noise_power);
            if xi <= cap {
                candidates.push((r, s, xi, priority_metric(waiting_of(r), xi)));
            }
        }
    }
    match order {
        AdmissionOrder::PriorityDescending => candidates.sort_by(|a, b| {
            b.3.partial_cmp(&a.3).unwrap().then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
        }),
        AdmissionOrder::PriorityAscending => candidates.sort_by(|a, b| {
            a.3.partial_cmp(&b.3).unwrap().then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
        }),
    }

    let mut used_power = 0.0;
    let mut used_sub = vec![false; network.num_subcarriers];
    let mut taken = vec![false; requests.len()];
    let mut tentative_m = 0.0;
    let mut policy = Vec::new();
    for (r, s, xi, _) in candidates {
        if taken[r] || used_sub[s] || used_power + xi > cap {
            continue;
        }
        if committed_m + tentative_m + requests[r].resources > network.bbu_capacity {
            continue;
        }
        policy.push((r, s, xi));
        used_power += xi;
        used_sub[s] = true;
        taken[r] = true;
        tentative_m += requests[r].resources;
    }
    policy
}

/// Phase one: iteratively pick the head that can schedule the most requests
/// (ties by lowest admitted power plus activation cost, then by index),
/// commit its admissions, and restrict future candidates to the heads whose
/// gain towards every committed pair is at most `epsilon`.
pub fn phase1(
    state: &GreedyState,
    requests: &[Request],
    network: &Network,
    order: AdmissionOrder,
) -> PhaseOne {
    let waiting_of = |r: usize| -> usize {
        state
            .outstanding
            .iter()
            .position(|&x| x == r)
            .map(|i| state.waiting[i])
            .unwrap_or(0)
    };

    let mut remaining = state.outstanding.clone();
    let mut h_perp: Vec<usize> = (0..network.num_rrhs()).collect();
    let mut committed_m = 0.0;
    let mut result = PhaseOne::default();

    loop {
        if remaining.is_empty() || h_perp.is_empty() {
            break;
        }
        let min_m =
            remaining.iter().map(|&r| requests[r].resources).fold(f64::INFINITY, f64::min);
        if committed_m + min_m > network.bbu_capacity {
            break;
        }

        // Tentative policy per candidate head; best by |policy|, then cost.
        let mut best: Option<(usize, Vec<(usize, usize, f64)>, f64)> = None;
        for &j in &h_perp {
            let policy =
                admit_for_head(j, &remaining, &waiting_of, committed_m, requests, network, order);
            let power: f64 = policy.iter().map(|&(_, _, xi)| xi).sum::<f64>()
                + network.rrhs[j].activation_power
                + network.rrhs[j].fiber_power;
            let better = match &best {
                None => true,
                Some((bj, bp, bc)) => {
                    policy.len() > bp.len()
                        || (policy.len() == bp.len() && (power < *bc || (power == *bc && j < *bj)))
                }
            };
            if better {
                best = Some((j, policy, power));
            }
        }
        let (j_star, policy, _) = match best {
            Some(b) if !b.1.is_empty() => b,
            _ => break, // no head can schedule anything
        };

        committed_m += policy.iter().map(|&(r, _, _)| requests[r].resources).sum::<f64>();
        remaining.retain(|r| !policy.iter().any(|&(pr, _, _)| pr == *r));
        h_perp.retain(|&j| {
            j != j_star
                && policy.iter().all(|&(r, s, _)| requests[r].gains.g(j, s) <= state.epsilon)
        });
        result.active.push(j_star);
        result.sched.push(policy);
    }
    result
}

/// Phase two: repeatedly admit the globally cheapest (request, head,
/// subcarrier) among the phase-one heads with positive residual power,
/// subject to `xi` strictly below the head's residual and to pool capacity
/// counting both phases. Channel sharing on an already-used subcarrier is
/// allowed here.
pub fn phase2(
    state: &GreedyState,
    phase_one: &PhaseOne,
    requests: &[Request],
    network: &Network,
) -> PhaseTwo {
    let mut residual: Vec<(usize, f64)> = phase_one
        .active
        .iter()
        .zip(&phase_one.sched)
        .map(|(&j, policy)| {
            (j, network.rrhs[j].max_power - policy.iter().map(|&(_, _, xi)| xi).sum::<f64>())
        })
        .collect();

    let scheduled: Vec<usize> = phase_one.scheduled_requests().collect();
    let mut remaining: Vec<usize> =
        state.outstanding.iter().copied().filter(|r| !scheduled.contains(r)).collect();
    let mut used_m = phase_one.resources(requests);
    let mut result = PhaseTwo::default();

    loop {
        if remaining.is_empty() || residual.iter().all(|&(_, p)| p <= 0.0) {
            break;
        }
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for &r in &remaining {
            if used_m + requests[r].resources > network.bbu_capacity {
                continue;
            }
            for &(j, p_res) in &residual {
                if p_res <= 0.0 {
                    continue;
                }
                for s in 0..network.num_subcarriers {
                    let xi = min_power_requirement(&requests[r], j, s, network.noise_power);
                    if xi < p_res {
                        let candidate = (xi, r, j, s);
                        if best.map_or(true, |b| candidate < b) {
                            best = Some(candidate);
                        }
                    }
                }
            }
        }
        let (xi, r, j, s) = match best {
            Some(b) => b,
            None => break,
        };
        result.sched.push((r, j, s, xi));
        remaining.retain(|&x| x != r);
        used_m += requests[r].resources;
        for entry in residual.iter_mut() {
            if entry.0 == j {
                entry.1 -= xi;
            }
        }
    }
    result.residual = residual;
    result
}

fn build_slot(
    scheduled: &[(usize, usize)],
    active: &[usize],
    requests: &[Request],
    network: &Network,
) -> Option<SlotAssignment> {
    let mut slot =
        SlotAssignment::empty(requests.len(), network.num_rrhs(), network.num_subcarriers);
    for &(r, s) in scheduled {
        slot.alloc[r] = Some(s);
    }
    for &j in active {
        slot.active[j] = true;
    }
    let problem = lp::build_problem(&slot.alloc, &slot.active, requests, network)
        .expect("phase outputs are structurally consistent");
    let solution = lp::solve(&problem).expect("power LP solve");
    match solution.status {
        SolveStatus::Optimal => {
            solution.apply_to_slot(&problem, &mut slot);
            Some(slot)
        }
        SolveStatus::Infeasible => None,
    }
}

/// Removes and returns the entry with the largest `xi`; among ties the
/// latest admitted one goes first.
fn drop_max_xi(entries: &mut Vec<(usize, usize, usize, f64)>) -> (usize, usize, usize, f64) {
    let mut idx = 0;
    for (i, entry) in entries.iter().enumerate() {
        if entry.3 >= entries[idx].3 {
            idx = i;
        }
    }
    entries.remove(idx)
}

/// Turns the two phases' scheduling into a committed slot assignment,
/// applying the configured fallback when power control is infeasible.
///
/// Termination is guaranteed: shedding eventually reaches the phase-one
/// scheduling, a zero orthogonality threshold almost surely activates a
/// single head whose admissions are feasible in isolation, and as a last
/// resort entries are shed until the (always feasible) empty slot remains.
pub fn finalize_slot(
    state: &GreedyState,
    phase_one: &PhaseOne,
    phase_two: &PhaseTwo,
    requests: &[Request],
    network: &Network,
    options: &GreedyOptions,
) -> SlotAssignment {
    let base: Vec<(usize, usize)> =
        phase_one.sched.iter().flatten().map(|&(r, s, _)| (r, s)).collect();
    let mut extras: Vec<(usize, usize, usize, f64)> = phase_two.sched.clone();

    let combined = |extras: &[(usize, usize, usize, f64)]| -> Vec<(usize, usize)> {
        base.iter().copied().chain(extras.iter().map(|&(r, _, s, _)| (r, s))).collect()
    };

    if let Some(slot) = build_slot(&combined(&extras), &phase_one.active, requests, network) {
        return slot;
    }

    let mut active = phase_one.active.clone();
    if options.fallback == Fallback::ActivateHeads {
        // Activate the cheapest heads outside the phase-one set, re-solving
        // after each.
        let mut spare: Vec<usize> =
            (0..network.num_rrhs()).filter(|j| !active.contains(j)).collect();
        spare.sort_by(|&a, &b| {
            let ca = network.rrhs[a].activation_power + network.rrhs[a].fiber_power;
            let cb = network.rrhs[b].activation_power + network.rrhs[b].fiber_power;
            ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
        });
        for j in spare {
            active.push(j);
            if let Some(slot) = build_slot(&combined(&extras), &active, requests, network) {
                return slot;
            }
        }
        // Everything is on and power control still fails: fall through to
        // shedding while keeping the heads activated.
    }

    while !extras.is_empty() {
        drop_max_xi(&mut extras);
        if let Some(slot) = build_slot(&combined(&extras), &active, requests, network) {
            return slot;
        }
    }

    // Phase-one scheduling alone is infeasible. With a positive threshold,
    // rebuild it fully orthogonal.
    if state.epsilon > 0.0 {
        let strict = GreedyState { epsilon: 0.0, ..state.clone() };
        let p1 = phase1(&strict, requests, network, options.admission_order);
        let sched: Vec<(usize, usize)> =
            p1.sched.iter().flatten().map(|&(r, s, _)| (r, s)).collect();
        if let Some(slot) = build_slot(&sched, &p1.active, requests, network) {
            return slot;
        }
        return shed_until_feasible(&p1, requests, network);
    }

    shed_until_feasible(phase_one, requests, network)
}

/// Safety net: sheds phase-one entries (largest `xi` first) until the power
/// problem is feasible; the empty scheduling always is.
fn shed_until_feasible(
    phase_one: &PhaseOne,
    requests: &[Request],
    network: &Network,
) -> SlotAssignment {
    let mut entries: Vec<(usize, usize, usize, f64)> = phase_one
        .active
        .iter()
        .zip(&phase_one.sched)
        .flat_map(|(&j, policy)| policy.iter().map(move |&(r, s, xi)| (r, j, s, xi)))
        .collect();
    while !entries.is_empty() {
        drop_max_xi(&mut entries);
        let sched: Vec<(usize, usize)> = entries.iter().map(|&(r, _, s, _)| (r, s)).collect();
        if let Some(slot) = build_slot(&sched, &phase_one.active, requests, network) {
            return slot;
        }
    }
    let mut slot =
        SlotAssignment::empty(requests.len(), network.num_rrhs(), network.num_subcarriers);
    for &j in &phase_one.active {
        slot.active[j] = true;
    }
    slot
}

/// Runs the online scheduler over the whole horizon. Per slot, the
/// outstanding in-window requests are scheduled by the two phases plus
/// fallback; scheduled requests are marked satisfied, and requests whose
/// deadline passes unscheduled are dropped.
pub fn run_online(requests: &[Request], network: &Network, options: &GreedyOptions) -> Schedule {
    let mut schedule = Schedule::empty(network, requests.len());
    let mut unscheduled = vec![true; requests.len()];
    for t in 1..=network.horizon {
        let state = GreedyState::collect(&unscheduled, requests, t, network.epsilon);
        let p1 = phase1(&state, requests, network, options.admission_order);
        let p2 = phase2(&state, &p1, requests, network);
        let slot = finalize_slot(&state, &p1, &p2, requests, network, options);
        for (r, _) in slot.scheduled() {
            unscheduled[r] = false;
        }
        schedule.slots[t - 1] = slot;
    }
    schedule.mark_satisfied(requests);
    schedule
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dbm_to_watts, validate_slot, GainMatrix, Rrh};

    fn network(num_rrhs: usize, num_subcarriers: usize, horizon: usize, epsilon: f64) -> Network {
        let fibers = [2.0, 1.0, 1.0, 2.0, 1.0];
        Network {
            rrhs: (0..num_rrhs)
                .map(|j| Rrh {
                    id: j + 1,
                    max_power: dbm_to_watts(48.0),
                    activation_power: 130.0,
                    sleep_power: 75.0,
                    fiber_power: fibers[j % 5],
                    position: (0.0, 0.0),
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
            epsilon,
        }
    }

    fn request(id: usize, arrival: usize, window: usize, min_sinr: f64, gains: GainMatrix) -> Request {
        let resources = crate::model::resources_for_request(min_sinr, 5.0, 1.0).unwrap();
        Request { id, user_id: id, arrival_slot: arrival, window_len: window, min_sinr, resources, gains }
    }

    fn state_for(outstanding: Vec<usize>, requests: &[Request], t: usize, epsilon: f64) -> GreedyState {
        let waiting = outstanding.iter().map(|&r| t - requests[r].arrival_slot).collect();
        GreedyState { outstanding, waiting, slot: t, epsilon }
    }

    #[test]
    fn min_power_examples() {
        let net = network(1, 1, 1, 0.0);
        let req = request(0, 1, 0, 1.0, GainMatrix::uniform(1, 1, 1e-10));
        assert!((min_power_requirement(&req, 0, 0, net.noise_power) - 1e-3).abs() < 1e-15);

        let free = request(1, 1, 0, 0.0, GainMatrix::uniform(1, 1, 1e-10));
        assert_eq!(min_power_requirement(&free, 0, 0, net.noise_power), 0.0);

        let blocked = request(2, 1, 0, 1.0, GainMatrix::uniform(1, 1, 0.0));
        assert!(min_power_requirement(&blocked, 0, 0, net.noise_power).is_infinite());
    }

    #[test]
    fn priority_examples() {
        assert!((priority_metric(0, 1e-3) - 1000.0).abs() < 1e-9);
        assert!((priority_metric(2, 1e-3) - 3000.0).abs() < 1e-9);
        assert_eq!(priority_metric(5, f64::INFINITY), 0.0);
    }

    #[test]
    fn phase1_no_requests() {
        let net = network(3, 2, 1, 0.0);
        let state = state_for(vec![], &[], 1, 0.0);
        let p1 = phase1(&state, &[], &net, AdmissionOrder::default());
        assert!(p1.active.is_empty());
        assert!(p1.sched.is_empty());
    }

    #[test]
    fn phase1_single_request_picks_cheapest_link() {
        let net = network(3, 2, 1, 0.0);
        // Cheapest link (highest gain) is head 2, subcarrier 1.
        let gains = GainMatrix::new(3, 2, vec![1e-12, 2e-12, 5e-13, 1e-12, 3e-12, 9e-11]);
        let reqs = vec![request(0, 1, 0, 1.0, gains)];
        let state = state_for(vec![0], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        assert_eq!(p1.active, vec![2]);
        assert_eq!(p1.sched.len(), 1);
        assert_eq!(p1.sched[0].len(), 1);
        let (r, s, _) = p1.sched[0][0];
        assert_eq!((r, s), (0, 1));
    }

    #[test]
    fn phase1_zero_epsilon_activates_single_head_under_cross_gains() {
        let net = network(2, 2, 1, 0.0);
        // Nonzero gains everywhere: once a head commits, no other head is
        // orthogonal to its victims at epsilon = 0.
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::uniform(2, 2, 1e-11)),
            request(1, 1, 0, 1.0, GainMatrix::uniform(2, 2, 2e-11)),
        ];
        let state = state_for(vec![0, 1], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        assert_eq!(p1.active.len(), 1);
        // Both requests fit the single head on distinct subcarriers.
        assert_eq!(p1.sched[0].len(), 2);
    }

    #[test]
    fn phase1_budget_respected() {
        let mut net = network(1, 2, 1, 0.0);
        net.rrhs[0].max_power = 1.5e-3;
        // Each request needs 1e-3 W; only one fits the budget.
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::uniform(1, 2, 1e-10)),
            request(1, 1, 0, 1.0, GainMatrix::uniform(1, 2, 1e-10)),
        ];
        let state = state_for(vec![0, 1], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        assert_eq!(p1.sched[0].len(), 1);
        let spent: f64 = p1.sched[0].iter().map(|&(_, _, xi)| xi).sum();
        assert!(spent <= net.rrhs[0].max_power);
    }

    #[test]
    fn phase1_urgent_request_admitted_first_on_conflict() {
        let net = network(1, 1, 3, 0.0);
        // Same xi on the only (head, subcarrier) pair; request 1 has waited
        // longer and must win the slot.
        let reqs = vec![
            request(0, 3, 0, 1.0, GainMatrix::uniform(1, 1, 1e-10)),
            request(1, 1, 2, 1.0, GainMatrix::uniform(1, 1, 1e-10)),
        ];
        let state = state_for(vec![0, 1], &reqs, 3, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        assert_eq!(p1.sched[0].len(), 1);
        assert_eq!(p1.sched[0][0].0, 1);
    }

    #[test]
    fn phase2_budget_shared_with_phase1() {
        let mut net = network(1, 2, 1, 0.0);
        let cap = 0.1;
        net.rrhs[0].max_power = cap;
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::new(1, 2, vec![1e-13 / 1e-3, 1e-16])),
            request(1, 1, 0, 1.0, GainMatrix::new(1, 2, vec![1e-13 / 1.5e-3, 1e-16])),
            request(2, 1, 0, 1.0, GainMatrix::new(1, 2, vec![1e-13 / 0.2, 1e-16])),
        ];
        let state = state_for(vec![0, 1, 2], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        let p2 = phase2(&state, &p1, &reqs, &net);
        for &(_, j, _, _) in &p2.sched {
            assert_eq!(j, 0);
        }
        // Request 2 (xi = 0.2 > cap) can never be admitted.
        assert!(p2.sched.iter().all(|&(r, _, _, _)| r != 2));
        let total: f64 = p1.sched[0].iter().map(|&(_, _, xi)| xi).sum::<f64>()
            + p2.sched.iter().map(|&(_, _, _, xi)| xi).sum::<f64>();
        assert!(total <= cap);
    }

    #[test]
    fn phase2_admits_only_below_residual() {
        let mut net = network(1, 2, 1, 0.0);
        // Phase 1 serves request 0 at 1e-3 on subcarrier 0; cap leaves a
        // 2e-3 residual. Candidates: request 1 at 1e-3, request 2 at 1.5e-3.
        // After admitting request 1 the residual drops to 1e-3, so request 2
        // fails the strict test.
        net.rrhs[0].max_power = 3e-3;
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::new(1, 2, vec![1e-10, 1e-16])),
            request(1, 1, 0, 1.0, GainMatrix::new(1, 2, vec![1e-16, 1e-10])),
            request(2, 1, 0, 1.0, GainMatrix::new(1, 2, vec![1e-16, 1e-13 / 1.5e-3])),
        ];
        let state = state_for(vec![0, 1, 2], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        assert_eq!(p1.scheduled_requests().count(), 2); // requests 0 and 1 fit orthogonally
        let p2 = phase2(&state, &p1, &reqs, &net);
        assert!(p2.sched.is_empty(), "1.5e-3 does not fit the 1e-3 residual: {:?}", p2.sched);
    }

    #[test]
    fn phase2_respects_capacity() {
        let mut net = network(1, 2, 1, 0.0);
        net.bbu_capacity = 13.0; // m_r = 6 each: two fit, the third does not
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::uniform(1, 2, 1e-10)),
            request(1, 1, 0, 1.0, GainMatrix::uniform(1, 2, 1e-10)),
            request(2, 1, 0, 1.0, GainMatrix::uniform(1, 2, 1e-10)),
        ];
        let state = state_for(vec![0, 1, 2], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        let p2 = phase2(&state, &p1, &reqs, &net);
        let total = p1.scheduled_requests().count() + p2.sched.len();
        assert_eq!(total, 2);
    }

    #[test]
    fn finalize_feasible_slot_uses_lp_powers() {
        let net = network(2, 2, 1, 0.0);
        let reqs = vec![request(0, 1, 0, 1.0, GainMatrix::uniform(2, 2, 1e-10))];
        let state = state_for(vec![0], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        let p2 = phase2(&state, &p1, &reqs, &net);
        let slot = finalize_slot(&state, &p1, &p2, &reqs, &net, &GreedyOptions::default());
        assert_eq!(slot.scheduled().count(), 1);
        assert!(validate_slot(&slot, 1, &reqs, &net).is_empty());
    }

    #[test]
    fn shed_fallback_drops_shared_channel_extras() {
        // One head, one subcarrier: phase 2 shares the channel, which is
        // infeasible at 0 dB for two co-channel users of one head, so the
        // shed fallback must drop the extra and keep the phase-one request.
        let mut net = network(1, 1, 1, 0.0);
        net.rrhs[0].max_power = 1.0;
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::uniform(1, 1, 1e-10)),
            request(1, 1, 0, 1.0, GainMatrix::uniform(1, 1, 2e-10)),
        ];
        let state = state_for(vec![0, 1], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        assert_eq!(p1.scheduled_requests().count(), 1);
        let p2 = phase2(&state, &p1, &reqs, &net);
        assert_eq!(p2.sched.len(), 1);
        let slot = finalize_slot(&state, &p1, &p2, &reqs, &net, &GreedyOptions::default());
        assert_eq!(slot.scheduled().count(), 1);
        assert!(validate_slot(&slot, 1, &reqs, &net).is_empty());
    }

    #[test]
    fn activate_fallback_rescues_with_spare_head() {
        // Two co-channel requests cannot share one head, but a spare head
        // with clean cross-gains serves the extra request once activated.
        let mut net = network(2, 1, 1, 0.0);
        net.rrhs[0].max_power = 1.0;
        net.rrhs[1].max_power = 1.0;
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::new(2, 1, vec![1e-10, 0.0])),
            request(1, 1, 0, 1.0, GainMatrix::new(2, 1, vec![0.0, 2e-10])),
        ];
        let state = state_for(vec![0, 1], &reqs, 1, 0.0);
        let p1 = phase1(&state, &reqs, &net, AdmissionOrder::default());
        let p2 = phase2(&state, &p1, &reqs, &net);

        let shed = finalize_slot(&state, &p1, &p2, &reqs, &net, &GreedyOptions::default());
        let activate = finalize_slot(
            &state,
            &p1,
            &p2,
            &reqs,
            &net,
            &GreedyOptions { fallback: Fallback::ActivateHeads, ..Default::default() },
        );
        assert!(activate.scheduled().count() >= shed.scheduled().count());
        assert_eq!(activate.scheduled().count(), 2);
        assert!(validate_slot(&activate, 1, &reqs, &net).is_empty());
    }

    #[test]
    fn run_online_light_load_satisfies_all() {
        let net = network(3, 2, 3, 0.0);
        let reqs = vec![
            request(0, 1, 2, 1.0, GainMatrix::uniform(3, 2, 1e-10)),
            request(1, 1, 2, 1.0, GainMatrix::uniform(3, 2, 2e-10)),
            request(2, 2, 1, 1.0, GainMatrix::uniform(3, 2, 5e-11)),
        ];
        let schedule = run_online(&reqs, &net, &GreedyOptions::default());
        assert_eq!(schedule.satisfied.len(), 3);
        for (t0, slot) in schedule.slots.iter().enumerate() {
            assert!(validate_slot(slot, t0 + 1, &reqs, &net).is_empty());
        }
    }

    #[test]
    fn run_online_empty_instance() {
        let net = network(5, 2, 3, 0.0);
        let schedule = run_online(&[], &net, &GreedyOptions::default());
        assert!(schedule.satisfied.is_empty());
        for slot in &schedule.slots {
            assert!(slot.active.iter().all(|&y| !y));
        }
        let cost = crate::cost::horizon_cost(&schedule, &[], &net);
        assert!((cost - 11.25).abs() < 1e-12);
    }

    #[test]
    fn deadline_passed_requests_are_dropped() {
        let net = network(1, 1, 3, 0.0);
        // Two same-deadline requests, one link: only one can make slot 1.
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::uniform(1, 1, 1e-10)),
            request(1, 1, 0, 1.0, GainMatrix::uniform(1, 1, 1e-11)),
        ];
        let schedule = run_online(&reqs, &net, &GreedyOptions::default());
        assert_eq!(schedule.satisfied.len(), 1);
        // The dropped request must not appear in later slots.
        for slot in &schedule.slots[1..] {
            assert_eq!(slot.scheduled().count(), 0);
        }
    }
}
