//! Comparison heuristic: every radio head is turned on whenever at least one
//! request is pending; heads sleep otherwise.
//!
//! Request-to-subcarrier assignment reuses the greedy per-head admission with
//! all heads as candidates and no orthogonality filtering, so the comparison
//! against the smarter schedulers isolates the activation policy. When power
//! control is infeasible, admitted entries are shed most-expensive-first.

use crate::greedy::{self, AdmissionOrder, GreedyState};
use crate::lp::{self, SolveStatus};
use crate::model::{Network, Request, Schedule, SlotAssignment};

/// One slot of the heuristic: all heads on if anything is pending, with
/// admission-based channel assignment and LP powers.
pub fn all_on_slot(state: &GreedyState, requests: &[Request], network: &Network) -> SlotAssignment {
    if state.outstanding.is_empty() {
        return SlotAssignment::empty(requests.len(), network.num_rrhs(), network.num_subcarriers);
    }

    // Admission with the orthogonality filter disabled: every head stays a
    // candidate until it is selected itself.
    let relaxed = GreedyState { epsilon: f64::INFINITY, ..state.clone() };
    let p1 = greedy::phase1(&relaxed, requests, network, AdmissionOrder::default());

    let all_heads: Vec<usize> = (0..network.num_rrhs()).collect();
    let mut entries: Vec<(usize, usize, usize, f64)> = p1
        .active
        .iter()
        .zip(&p1.sched)
        .flat_map(|(&j, policy)| policy.iter().map(move |&(r, s, xi)| (r, j, s, xi)))
        .collect();

    loop {
        let sched: Vec<(usize, usize)> = entries.iter().map(|&(r, _, s, _)| (r, s)).collect();
        if let Some(slot) = solve_all_on(&sched, &all_heads, requests, network) {
            return slot;
        }
        if entries.is_empty() {
            // An empty scheduling is always feasible, so this is unreachable;
            // return the bare all-on slot to keep the loop total.
            let mut slot = SlotAssignment::empty(
                requests.len(),
                network.num_rrhs(),
                network.num_subcarriers,
            );
            slot.active = vec![true; network.num_rrhs()];
            return slot;
        }
        drop_max_xi(&mut entries);
    }
}

fn drop_max_xi(entries: &mut Vec<(usize, usize, usize, f64)>) {
    let mut idx = 0;
    for (i, entry) in entries.iter().enumerate() {
        if entry.3 >= entries[idx].3 {
            idx = i;
        }
    }
    entries.remove(idx);
}

fn solve_all_on(
    scheduled: &[(usize, usize)],
    all_heads: &[usize],
    requests: &[Request],
    network: &Network,
) -> Option<SlotAssignment> {
    let mut slot =
        SlotAssignment::empty(requests.len(), network.num_rrhs(), network.num_subcarriers);
    for &(r, s) in scheduled {
        slot.alloc[r] = Some(s);
    }
    for &j in all_heads {
        slot.active[j] = true;
    }
    let problem = lp::build_problem(&slot.alloc, &slot.active, requests, network)
        .expect("admission output is structurally consistent");
    let solution = lp::solve(&problem).expect("power LP solve");
    match solution.status {
        SolveStatus::Optimal => {
            solution.apply_to_slot(&problem, &mut slot);
            Some(slot)
        }
        SolveStatus::Infeasible => None,
    }
}

/// Runs the heuristic over the whole horizon with the same bookkeeping as
/// the online scheduler.
pub fn run_heuristic(requests: &[Request], network: &Network) -> Schedule {
    let mut schedule = Schedule::empty(network, requests.len());
    let mut unscheduled = vec![true; requests.len()];
    for t in 1..=network.horizon {
        let state = GreedyState::collect(&unscheduled, requests, t, network.epsilon);
        let slot = all_on_slot(&state, requests, network);
        for (r, _) in slot.scheduled() {
            unscheduled[r] = false;
        }
        schedule.slots[t - 1] = slot;
    }
    schedule.mark_satisfied(requests);
    schedule
}
