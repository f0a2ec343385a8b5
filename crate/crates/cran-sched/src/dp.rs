//! Optimal finite-horizon solver: backward-inductive dynamic programming
//! over the set of not-yet-accommodated requests, with the per-slot transmit
//! power priced by the power-control LP. Also provides an exhaustive
//! brute-force oracle for testing and a feasibility test.
//!
//! The state at slot `t` is the set of requests that have not been scheduled
//! yet; requests whose window has passed while still unscheduled make the
//! path infeasible. Per state, every combination of request-to-subcarrier
//! assignment and head-activation subset is considered, so the solver is
//! exponential in the number of requests and heads and guards itself against
//! oversized instances.

use crate::cost::horizon_cost;
use crate::lp::{self, LpError, SolveStatus};
use crate::model::{Network, Request, Schedule};
use std::collections::HashMap;
use thiserror::Error;

/// Size guard for the exact solvers.
#[derive(Debug, Clone, Copy)]
pub struct DpLimits {
    pub max_requests: usize,
    pub max_rrhs: usize,
}

impl Default for DpLimits {
    fn default() -> Self {
        DpLimits { max_requests: 12, max_rrhs: 6 }
    }
}

#[derive(Debug, Error)]
pub enum DpError {
    #[error(
        "instance too large for exact solving ({requests} requests, {rrhs} heads; \
         limits are {max_requests} and {max_rrhs}); raise DpLimits to override"
    )]
    TooLarge { requests: usize, rrhs: usize, max_requests: usize, max_rrhs: usize },
    #[error("power-control solver failed: {0}")]
    Lp(#[from] LpError),
}

/// Result of an exact solve.
#[derive(Debug)]
pub enum DpOutcome {
    Solved(DpSolution),
    /// No policy schedules every request within its window.
    Infeasible,
}

impl DpOutcome {
    pub fn solved(self) -> Option<DpSolution> {
        match self {
            DpOutcome::Solved(s) => Some(s),
            DpOutcome::Infeasible => None,
        }
    }
}

#[derive(Debug)]
pub struct DpSolution {
    pub schedule: Schedule,
    /// Total weighted power cost of the schedule, W.
    pub cost: f64,
    /// Number of distinct (slot, unscheduled-set) states visited.
    pub explored_states: usize,
}

/// One candidate per-slot decision: which requests go on which subcarrier
/// and which heads transmit.
#[derive(Debug, Clone)]
pub struct SlotAction {
    /// Scheduled (request index, subcarrier) pairs, ascending by request.
    pub scheduled: Vec<(usize, usize)>,
    /// Bit `j` set means head `j` transmits.
    pub activation_mask: u64,
    /// Per-outstanding-request choice: 0 = unscheduled, `k` = subcarrier `k-1`.
    pub assignment: Vec<u8>,
    /// Total compute units of the scheduled requests.
    pub resources: f64,
}

/// Enumerates every admissible `(assignment, activation)` pair for one slot:
/// each outstanding request is either skipped or placed on one subcarrier,
/// crossed with every head subset. Assignments that exceed pool capacity or
/// leave a request unscheduled at its deadline slot are pruned; such actions
/// can only lead to infeasible continuations.
pub fn enumerate_actions<'a>(
    outstanding: &'a [usize],
    slot: usize,
    requests: &'a [Request],
    network: &'a Network,
) -> impl Iterator<Item = SlotAction> + 'a {
    let num_y = 1u64 << network.num_rrhs();
    AssignmentIter::new(outstanding, slot, requests, network).flat_map(move |assign| {
        (0..num_y).map(move |mask| SlotAction {
            scheduled: assign.scheduled.clone(),
            activation_mask: mask,
            assignment: assign.assignment.clone(),
            resources: assign.resources,
        })
    })
}

#[derive(Debug, Clone)]
struct Assignment {
    scheduled: Vec<(usize, usize)>,
    assignment: Vec<u8>,
    resources: f64,
}

/// Odometer over per-request choices in `{skip, subcarrier 1..S}`, filtered
/// by pool capacity and the must-schedule-now rule.
struct AssignmentIter<'a> {
    outstanding: &'a [usize],
    slot: usize,
    requests: &'a [Request],
    capacity: f64,
    num_subcarriers: usize,
    digits: Option<Vec<u8>>,
}

impl<'a> AssignmentIter<'a> {
    fn new(
        outstanding: &'a [usize],
        slot: usize,
        requests: &'a [Request],
        network: &'a Network,
    ) -> Self {
        AssignmentIter {
            outstanding,
            slot,
            requests,
            capacity: network.bbu_capacity,
            num_subcarriers: network.num_subcarriers,
            digits: Some(vec![0; outstanding.len()]),
        }
    }

    fn advance(&mut self) {
        let digits = self.digits.as_mut().expect("advance past end");
        for d in digits.iter_mut().rev() {
            if (*d as usize) < self.num_subcarriers {
                *d += 1;
                return;
            }
            *d = 0;
        }
        self.digits = None;
    }

    fn build(&self, digits: &[u8]) -> Option<Assignment> {
        let mut scheduled = Vec::new();
        let mut resources = 0.0;
        for (i, &d) in digits.iter().enumerate() {
            let r = self.outstanding[i];
            if d == 0 {
                if self.requests[r].deadline_slot() == self.slot {
                    return None; // must be scheduled now
                }
            } else {
                scheduled.push((r, (d - 1) as usize));
                resources += self.requests[r].resources;
            }
        }
        if resources > self.capacity {
            return None;
        }
        Some(Assignment { scheduled, assignment: digits.to_vec(), resources })
    }
}

impl<'a> Iterator for AssignmentIter<'a> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        loop {
            let digits = self.digits.clone()?;
            let candidate = self.build(&digits);
            self.advance();
            if let Some(a) = candidate {
                return Some(a);
            }
        }
    }
}

type LpKey = (Vec<(usize, usize)>, u64);
type StateKey = (usize, u64);

struct Solver<'a> {
    requests: &'a [Request],
    network: &'a Network,
    horizon: usize,
    /// Objective of the power LP per (scheduled set, activation mask);
    /// `None` marks infeasible combinations. Gains are time-invariant, so
    /// the value is valid at every slot.
    lp_cache: HashMap<LpKey, Option<f64>>,
    /// Per-activation-mask activation/sleep/fiber power.
    activation_cost: Vec<f64>,
    memo: HashMap<StateKey, Option<f64>>,
    choice: HashMap<StateKey, SlotAction>,
}

impl<'a> Solver<'a> {
    fn new(requests: &'a [Request], network: &'a Network) -> Self {
        let h = network.num_rrhs();
        let mut activation_cost = vec![0.0; 1 << h];
        for (mask, slot_cost) in activation_cost.iter_mut().enumerate() {
            *slot_cost = network
                .rrhs
                .iter()
                .enumerate()
                .map(|(j, rrh)| {
                    if mask as u64 & (1 << j) != 0 {
                        rrh.activation_power + rrh.fiber_power
                    } else {
                        rrh.sleep_power
                    }
                })
                .sum();
        }
        Solver {
            requests,
            network,
            horizon: network.horizon,
            lp_cache: HashMap::new(),
            activation_cost,
            memo: HashMap::new(),
            choice: HashMap::new(),
        }
    }

    fn transmit_power(&mut self, action: &SlotAction) -> Result<Option<f64>, DpError> {
        let key = (action.scheduled.clone(), action.activation_mask);
        if let Some(cached) = self.lp_cache.get(&key) {
            return Ok(*cached);
        }
        let problem = self.build_lp(action);
        let solution = lp::solve(&problem)?;
        let value = match solution.status {
            SolveStatus::Optimal => Some(solution.objective),
            SolveStatus::Infeasible => None,
        };
        self.lp_cache.insert(key, value);
        Ok(value)
    }

    fn build_lp(&self, action: &SlotAction) -> lp::PowerProblem {
        let mut alloc = vec![None; self.requests.len()];
        for &(r, s) in &action.scheduled {
            alloc[r] = Some(s);
        }
        let active: Vec<bool> =
            (0..self.network.num_rrhs()).map(|j| action.activation_mask & (1 << j) != 0).collect();
        lp::build_problem(&alloc, &active, self.requests, self.network)
            .expect("solver-built actions are structurally consistent")
    }

    fn slot_reward(&mut self, action: &SlotAction) -> Result<Option<f64>, DpError> {
        let tx = match self.transmit_power(action)? {
            Some(tx) => tx,
            None => return Ok(None),
        };
        let activation = self.activation_cost[action.activation_mask as usize];
        let bbu = self.network.bbu_power_per_unit * action.resources;
        Ok(Some(tx + self.network.weight_rrh * activation + self.network.weight_bbu * bbu))
    }

    fn outstanding(&self, slot: usize, mask: u64) -> Vec<usize> {
        (0..self.requests.len())
            .filter(|&r| mask & (1 << r) != 0 && self.requests[r].in_window(slot))
            .collect()
    }

    fn expired(&self, slot: usize, mask: u64) -> bool {
        (0..self.requests.len())
            .any(|r| mask & (1 << r) != 0 && self.requests[r].deadline_slot() < slot)
    }

    /// Bellman value of the state `(slot, unscheduled mask)`: the minimal
    /// weighted cost of slots `slot..=T`, or `None` when no feasible
    /// continuation exists. The terminal value at `T+1` is zero.
    fn value(&mut self, slot: usize, mask: u64) -> Result<Option<f64>, DpError> {
        if self.expired(slot, mask) {
            return Ok(None);
        }
        if slot == self.horizon + 1 {
            return Ok(if mask == 0 { Some(0.0) } else { None });
        }
        if let Some(&v) = self.memo.get(&(slot, mask)) {
            return Ok(v);
        }

        let outstanding = self.outstanding(slot, mask);
        let mut best: Option<(f64, SlotAction)> = None;
        let actions: Vec<SlotAction> =
            enumerate_actions(&outstanding, slot, self.requests, self.network).collect();
        for action in actions {
            let reward = match self.slot_reward(&action)? {
                Some(r) => r,
                None => continue,
            };
            let mut next_mask = mask;
            for &(r, _) in &action.scheduled {
                next_mask &= !(1 << r);
            }
            let tail = match self.value(slot + 1, next_mask)? {
                Some(v) => v,
                None => continue,
            };
            let total = reward + tail;
            // Ties break towards the lexicographically smallest
            // (activation mask, assignment vector).
            let better = match &best {
                None => true,
                Some((c, a)) => {
                    total < *c
                        || (total == *c
                            && (action.activation_mask, &action.assignment)
                                < (a.activation_mask, &a.assignment))
                }
            };
            if better {
                best = Some((total, action));
            }
        }

        let value = best.as_ref().map(|(c, _)| *c);
        self.memo.insert((slot, mask), value);
        if let Some((_, action)) = best {
            self.choice.insert((slot, mask), action);
        }
        Ok(value)
    }

    fn reconstruct(&mut self) -> Result<Schedule, DpError> {
        let mut schedule = Schedule::empty(self.network, self.requests.len());
        let mut mask = full_mask(self.requests.len());
        for t in 1..=self.horizon {
            let action = self.choice.get(&(t, mask)).expect("optimal path is recorded").clone();
            let slot = &mut schedule.slots[t - 1];
            for &(r, s) in &action.scheduled {
                slot.alloc[r] = Some(s);
            }
            for j in 0..self.network.num_rrhs() {
                slot.active[j] = action.activation_mask & (1 << j) != 0;
            }
            let problem = self.build_lp(&action);
            let solution = lp::solve(&problem)?;
            debug_assert_eq!(solution.status, SolveStatus::Optimal);
            solution.apply_to_slot(&problem, slot);
            for &(r, _) in &action.scheduled {
                mask &= !(1 << r);
            }
        }
        schedule.mark_satisfied(self.requests);
        Ok(schedule)
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        (1u64 << n) - 1
    }
}

fn check_limits(requests: &[Request], network: &Network, limits: &DpLimits) -> Result<(), DpError> {
    if requests.len() > limits.max_requests || network.num_rrhs() > limits.max_rrhs {
        return Err(DpError::TooLarge {
            requests: requests.len(),
            rrhs: network.num_rrhs(),
            max_requests: limits.max_requests,
            max_rrhs: limits.max_rrhs,
        });
    }
    assert!(requests.len() < 64, "request masks are 64-bit");
    Ok(())
}

/// Solves the joint scheduling and power allocation problem to optimality
/// under the default size guard.
pub fn solve_offline(requests: &[Request], network: &Network) -> Result<DpOutcome, DpError> {
    solve_offline_with(requests, network, &DpLimits::default())
}

/// Solves to optimality with an explicit size guard.
pub fn solve_offline_with(
    requests: &[Request],
    network: &Network,
    limits: &DpLimits,
) -> Result<DpOutcome, DpError> {
    check_limits(requests, network, limits)?;
    let mut solver = Solver::new(requests, network);
    let root = solver.value(1, full_mask(requests.len()))?;
    match root {
        None => Ok(DpOutcome::Infeasible),
        Some(_) => {
            let schedule = solver.reconstruct()?;
            let cost = horizon_cost(&schedule, requests, network);
            Ok(DpOutcome::Solved(DpSolution {
                schedule,
                cost,
                explored_states: solver.memo.len(),
            }))
        }
    }
}

/// Exhaustively enumerates every horizon-wide placement of the requests and
/// every per-slot activation combination, pricing slots with the power LP.
/// This is the test oracle for [`solve_offline`]; it accepts only tiny
/// instances.
pub fn brute_force(requests: &[Request], network: &Network) -> Result<DpOutcome, DpError> {
    let oracle_limits = DpLimits { max_requests: 4, max_rrhs: 3 };
    check_limits(requests, network, &oracle_limits)?;
    assert!(network.horizon <= 3, "brute force accepts horizons up to 3 slots");

    let horizon = network.horizon;
    let num_y = 1u64 << network.num_rrhs();

    // All admissible (slot, subcarrier) placements per request.
    let mut placements: Vec<Vec<(usize, usize)>> = Vec::new();
    for req in requests {
        let mut options = Vec::new();
        for t in 1..=horizon {
            if req.in_window(t) {
                for s in 0..network.num_subcarriers {
                    options.push((t, s));
                }
            }
        }
        if options.is_empty() {
            return Ok(DpOutcome::Infeasible);
        }
        placements.push(options);
    }

    let mut solver = Solver::new(requests, network);
    let mut best: Option<(f64, Vec<(usize, usize)>, Vec<u64>)> = None;

    let mut placement_idx = vec![0usize; requests.len()];
    'placements: loop {
        let chosen: Vec<(usize, usize)> =
            placement_idx.iter().enumerate().map(|(r, &i)| placements[r][i]).collect();

        // Per-slot scheduled sets and capacity screen.
        let mut per_slot: Vec<Vec<(usize, usize)>> = vec![Vec::new(); horizon];
        let mut feasible = true;
        for t in 0..horizon {
            let mut used = 0.0;
            for (r, &(rt, rs)) in chosen.iter().enumerate() {
                if rt == t + 1 {
                    per_slot[t].push((r, rs));
                    used += requests[r].resources;
                }
            }
            if used > network.bbu_capacity {
                feasible = false;
                break;
            }
        }

        if feasible {
            let bbu: Vec<f64> = per_slot
                .iter()
                .map(|sched| {
                    network.bbu_power_per_unit
                        * sched.iter().map(|&(r, _)| requests[r].resources).sum::<f64>()
                })
                .collect();

            // Transmit power per slot and activation mask via the shared LP
            // cache; None when that pairing is infeasible.
            let mut tx: Vec<Vec<Option<f64>>> = Vec::with_capacity(horizon);
            for sched in per_slot.iter() {
                let mut per_mask = Vec::with_capacity(num_y as usize);
                for mask in 0..num_y {
                    let action = SlotAction {
                        scheduled: sched.clone(),
                        activation_mask: mask,
                        assignment: Vec::new(),
                        resources: 0.0,
                    };
                    per_mask.push(solver.transmit_power(&action)?);
                }
                tx.push(per_mask);
            }

            let mut y_combo = vec![0u64; horizon];
            'ycombos: loop {
                let mut total = 0.0;
                let mut ok = true;
                for t in 0..horizon {
                    match tx[t][y_combo[t] as usize] {
                        Some(power) => {
                            total += power
                                + network.weight_rrh * solver.activation_cost[y_combo[t] as usize]
                                + network.weight_bbu * bbu[t];
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && best.as_ref().map_or(true, |(c, _, _)| total < *c) {
                    best = Some((total, chosen.clone(), y_combo.clone()));
                }

                // Advance the per-slot activation odometer.
                for t in (0..horizon).rev() {
                    y_combo[t] += 1;
                    if y_combo[t] < num_y {
                        continue 'ycombos;
                    }
                    y_combo[t] = 0;
                }
                break;
            }
        }

        // Advance the placement odometer.
        for r in (0..requests.len()).rev() {
            placement_idx[r] += 1;
            if placement_idx[r] < placements[r].len() {
                continue 'placements;
            }
            placement_idx[r] = 0;
        }
        break;
    }

    let (_, chosen, y_combo) = match best {
        Some(b) => b,
        None => return Ok(DpOutcome::Infeasible),
    };

    let mut schedule = Schedule::empty(network, requests.len());
    for t in 0..horizon {
        let slot = &mut schedule.slots[t];
        let mut scheduled = Vec::new();
        for (r, &(rt, rs)) in chosen.iter().enumerate() {
            if rt == t + 1 {
                slot.alloc[r] = Some(rs);
                scheduled.push((r, rs));
            }
        }
        for j in 0..network.num_rrhs() {
            slot.active[j] = y_combo[t] & (1 << j) != 0;
        }
        let action = SlotAction {
            scheduled,
            activation_mask: y_combo[t],
            assignment: Vec::new(),
            resources: 0.0,
        };
        let problem = solver.build_lp(&action);
        let solution = lp::solve(&problem)?;
        debug_assert_eq!(solution.status, SolveStatus::Optimal);
        solution.apply_to_slot(&problem, slot);
    }
    schedule.mark_satisfied(requests);
    let cost = horizon_cost(&schedule, requests, network);
    Ok(DpOutcome::Solved(DpSolution { schedule, cost, explored_states: 0 }))
}

/// True iff a feasible schedule exists. Runs the same search as
/// [`solve_offline`] with the objective dropped and an early exit on the
/// first feasible completion.
///
/// Power feasibility is monotone in the activation set (extra heads may
/// transmit nothing), so only the all-on activation needs to be tried per
/// slot.
pub fn feasibility_test(requests: &[Request], network: &Network) -> Result<bool, DpError> {
    check_limits(requests, network, &DpLimits::default())?;
    let mut solver = Solver::new(requests, network);
    let full_y = (1u64 << network.num_rrhs()) - 1;
    let mut failed: std::collections::HashSet<StateKey> = std::collections::HashSet::new();

    fn search(
        solver: &mut Solver,
        failed: &mut std::collections::HashSet<StateKey>,
        slot: usize,
        mask: u64,
        full_y: u64,
    ) -> Result<bool, DpError> {
        if solver.expired(slot, mask) {
            return Ok(false);
        }
        if slot == solver.horizon + 1 {
            return Ok(mask == 0);
        }
        if failed.contains(&(slot, mask)) {
            return Ok(false);
        }
        let outstanding = solver.outstanding(slot, mask);
        let assignments: Vec<Assignment> =
            AssignmentIter::new(&outstanding, slot, solver.requests, solver.network).collect();
        for assign in assignments {
            let action = SlotAction {
                scheduled: assign.scheduled.clone(),
                activation_mask: full_y,
                assignment: assign.assignment,
                resources: assign.resources,
            };
            if solver.transmit_power(&action)?.is_none() {
                continue;
            }
            let mut next_mask = mask;
            for &(r, _) in &action.scheduled {
                next_mask &= !(1 << r);
            }
            if search(solver, failed, slot + 1, next_mask, full_y)? {
                return Ok(true);
            }
        }
        failed.insert((slot, mask));
        Ok(false)
    }

    search(&mut solver, &mut failed, 1, full_mask(requests.len()), full_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dbm_to_watts, validate_schedule, GainMatrix, Rrh};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn network(num_rrhs: usize, num_subcarriers: usize, horizon: usize) -> Network {
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
            epsilon: 0.0,
        }
    }

    fn request(
        id: usize,
        arrival: usize,
        window: usize,
        min_sinr: f64,
        gains: GainMatrix,
    ) -> Request {
        let resources = crate::model::resources_for_request(min_sinr, 5.0, 1.0).unwrap();
        Request {
            id,
            user_id: id,
            arrival_slot: arrival,
            window_len: window,
            min_sinr,
            resources,
            gains,
        }
    }

    fn random_instance(seed: u64, max_requests: usize, network: &Network) -> Vec<Request> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(0..=max_requests);
        (0..n)
            .map(|id| {
                let arrival = rng.gen_range(1..=network.horizon);
                let window = network.horizon - arrival;
                let gamma = 10f64.powf(rng.gen_range(0.0..1.5));
                let gains = GainMatrix::new(
                    network.num_rrhs(),
                    network.num_subcarriers,
                    (0..network.num_rrhs() * network.num_subcarriers)
                        .map(|_| 10f64.powf(rng.gen_range(-13.0..-10.0)))
                        .collect(),
                );
                request(id, arrival, window, gamma, gains)
            })
            .collect()
    }

    #[test]
    fn action_count_no_outstanding() {
        let net = network(2, 2, 1);
        let actions: Vec<_> = enumerate_actions(&[], 1, &[], &net).collect();
        assert_eq!(actions.len(), 4);
    }

    #[test]
    fn action_count_two_outstanding() {
        let net = network(2, 2, 1);
        let reqs = vec![
            request(0, 1, 0, 1.0, GainMatrix::uniform(2, 2, 1e-10)),
            request(1, 1, 0, 1.0, GainMatrix::uniform(2, 2, 1e-10)),
        ];
        // Deadline is slot 1 for both, so the all-skip and single-skip
        // assignments are pruned; the bound before pruning is (S+1)^2 * 2^2.
        let actions: Vec<_> = enumerate_actions(&[0, 1], 1, &reqs, &net).collect();
        assert!(actions.len() <= 36);
        assert_eq!(actions.len(), 16); // 2 subcarriers each, both must schedule
    }

    #[test]
    fn capacity_prunes_everything_but_skip() {
        let mut net = network(2, 2, 2);
        net.bbu_capacity = 1.0; // below any m_r
        let reqs = vec![request(0, 1, 1, 1.0, GainMatrix::uniform(2, 2, 1e-10))];
        let actions: Vec<_> = enumerate_actions(&[0], 1, &reqs, &net).collect();
        assert_eq!(actions.len(), 4); // all-skip crossed with activation sets
        assert!(actions.iter().all(|a| a.scheduled.is_empty()));
    }

    #[test]
    fn empty_instance_sleeps_through_horizon() {
        let net = network(5, 2, 3);
        let limits = DpLimits { max_requests: 12, max_rrhs: 6 };
        let outcome = solve_offline_with(&[], &net, &limits).unwrap();
        let solution = outcome.solved().expect("feasible");
        assert!((solution.cost - 11.25).abs() < 1e-9);
        for slot in &solution.schedule.slots {
            assert!(slot.active.iter().all(|&y| !y));
        }
    }

    #[test]
    fn single_request_single_rrh_cost() {
        let net = network(1, 1, 1);
        let reqs = vec![request(0, 1, 0, 1.0, GainMatrix::uniform(1, 1, 1e-10))];
        let outcome = solve_offline(&reqs, &net).unwrap();
        let solution = outcome.solved().expect("feasible");
        // transmit 1e-3, activation 0.01*(130+2), processing 0.1*6
        assert!((solution.cost - 1.921).abs() < 1e-9, "cost {}", solution.cost);
        assert!(validate_schedule(&solution.schedule, &reqs, &net).unwrap().is_empty());
    }

    #[test]
    fn window_outside_horizon_infeasible() {
        let net = network(1, 1, 2);
        let reqs = vec![request(0, 3, 0, 1.0, GainMatrix::uniform(1, 1, 1e-10))];
        assert!(matches!(solve_offline(&reqs, &net).unwrap(), DpOutcome::Infeasible));
        assert!(!feasibility_test(&reqs, &net).unwrap());
    }

    #[test]
    fn size_guard_rejects_large_instances() {
        let net = network(1, 1, 1);
        let reqs: Vec<Request> =
            (0..13).map(|id| request(id, 1, 0, 1.0, GainMatrix::uniform(1, 1, 1e-10))).collect();
        assert!(matches!(solve_offline(&reqs, &net), Err(DpError::TooLarge { .. })));
        let relaxed = DpLimits { max_requests: 16, max_rrhs: 6 };
        // With one subcarrier and 13 same-slot requests the instance is
        // infeasible, but the relaxed guard at least lets the solver run.
        assert!(matches!(solve_offline_with(&reqs, &net, &relaxed).unwrap(), DpOutcome::Infeasible));
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let net = network(3, 2, 3);
        let mut feasible_seen = 0;
        for seed in 0..25 {
            let reqs = random_instance(seed, 4, &net);
            let dp = solve_offline(&reqs, &net).unwrap();
            let bf = brute_force(&reqs, &net).unwrap();
            match (dp, bf) {
                (DpOutcome::Solved(a), DpOutcome::Solved(b)) => {
                    feasible_seen += 1;
                    let scale = a.cost.abs().max(1e-12);
                    assert!(
                        (a.cost - b.cost).abs() <= 1e-6 * scale,
                        "seed {seed}: dp {} vs brute {}",
                        a.cost,
                        b.cost
                    );
                    assert!(validate_schedule(&a.schedule, &reqs, &net).unwrap().is_empty());
                    assert!(validate_schedule(&b.schedule, &reqs, &net).unwrap().is_empty());
                }
                (DpOutcome::Infeasible, DpOutcome::Infeasible) => {}
                (a, b) => panic!("seed {seed}: feasibility disagreement {a:?} vs {b:?}"),
            }
        }
        assert!(feasible_seen >= 10, "only {feasible_seen} feasible instances");
    }

    #[test]
    fn unreachable_sinr_infeasible_for_both() {
        let mut net = network(1, 1, 1);
        net.rrhs[0].max_power = 1.0;
        let reqs = vec![request(0, 1, 0, 1000.0, GainMatrix::uniform(1, 1, 1e-13))];
        assert!(matches!(solve_offline(&reqs, &net).unwrap(), DpOutcome::Infeasible));
        assert!(matches!(brute_force(&reqs, &net).unwrap(), DpOutcome::Infeasible));
        assert!(!feasibility_test(&reqs, &net).unwrap());
    }

    #[test]
    fn capacity_forces_spreading_across_slots() {
        let mut net = network(1, 2, 2);
        net.bbu_capacity = 7.0; // one m_r=6 request per slot
        let reqs = vec![
            request(0, 1, 1, 1.0, GainMatrix::uniform(1, 2, 1e-10)),
            request(1, 1, 1, 1.0, GainMatrix::uniform(1, 2, 2e-10)),
        ];
        assert!(feasibility_test(&reqs, &net).unwrap());
        let solution = solve_offline(&reqs, &net).unwrap().solved().expect("feasible");
        let per_slot: Vec<usize> =
            solution.schedule.slots.iter().map(|s| s.scheduled().count()).collect();
        assert_eq!(per_slot, vec![1, 1]);
    }

    #[test]
    fn explored_states_within_bound() {
        let net = network(2, 2, 3);
        for seed in 0..10 {
            let reqs = random_instance(seed, 4, &net);
            if let DpOutcome::Solved(sol) = solve_offline(&reqs, &net).unwrap() {
                let bound = (1usize << reqs.len()) * net.horizon;
                assert!(sol.explored_states <= bound);
            }
        }
    }

    #[test]
    fn memoized_values_are_path_independent() {
        let net = network(2, 2, 3);
        let reqs = random_instance(3, 4, &net);
        let mut solver = Solver::new(&reqs, &net);
        solver.value(1, full_mask(reqs.len())).unwrap();
        let snapshot: Vec<(StateKey, Option<f64>)> =
            solver.memo.iter().map(|(k, v)| (*k, *v)).collect();
        for ((slot, mask), value) in snapshot {
            let mut fresh = Solver::new(&reqs, &net);
            let recomputed = fresh.value(slot, mask).unwrap();
            match (value, recomputed) {
                (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                (None, None) => {}
                other => panic!("memo mismatch at ({slot}, {mask:b}): {other:?}"),
            }
        }
    }

    #[test]
    fn optimal_cost_below_random_feasible_schedules() {
        let net = network(2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let reqs = loop {
            let candidate = random_instance(rng.gen(), 3, &net);
            if !candidate.is_empty()
                && matches!(solve_offline(&candidate, &net).unwrap(), DpOutcome::Solved(_))
            {
                break candidate;
            }
        };
        let optimal = solve_offline(&reqs, &net).unwrap().solved().unwrap();

        let mut tested = 0;
        let mut attempts = 0;
        while tested < 200 && attempts < 20_000 {
            attempts += 1;
            // Random placement within windows, random activations, powers
            // from the LP.
            let mut schedule = Schedule::empty(&net, reqs.len());
            let mut ok = true;
            let mut slot_scheduled: Vec<Vec<(usize, usize)>> = vec![Vec::new(); net.horizon];
            for (r, req) in reqs.iter().enumerate() {
                let t = rng.gen_range(req.arrival_slot..=req.deadline_slot().min(net.horizon));
                let s = rng.gen_range(0..net.num_subcarriers);
                slot_scheduled[t - 1].push((r, s));
            }
            for t in 0..net.horizon {
                let used: f64 = slot_scheduled[t].iter().map(|&(r, _)| reqs[r].resources).sum();
                if used > net.bbu_capacity {
                    ok = false;
                    break;
                }
                let mut alloc = vec![None; reqs.len()];
                for &(r, s) in &slot_scheduled[t] {
                    alloc[r] = Some(s);
                }
                let active: Vec<bool> = (0..net.num_rrhs()).map(|_| rng.gen_bool(0.75)).collect();
                let problem = lp::build_problem(&alloc, &active, &reqs, &net).unwrap();
                let solution = lp::solve(&problem).unwrap();
                if solution.status != SolveStatus::Optimal {
                    ok = false;
                    break;
                }
                let slot = &mut schedule.slots[t];
                slot.alloc = alloc;
                slot.active = active;
                solution.apply_to_slot(&problem, slot);
            }
            if !ok {
                continue;
            }
            schedule.mark_satisfied(&reqs);
            if !validate_schedule(&schedule, &reqs, &net).unwrap().is_empty() {
                continue;
            }
            tested += 1;
            let cost = horizon_cost(&schedule, &reqs, &net);
            assert!(
                optimal.cost <= cost + 1e-9,
                "random feasible schedule beat the optimum: {} < {}",
                cost,
                optimal.cost
            );
        }
        assert!(tested >= 50, "only {tested} random schedules were feasible");
    }
}
