//! Exact solver for the single-slot power-control problem: minimize total
//! transmit power subject to per-head power caps and linearized SINR
//! constraints.
//!
//! The SINR requirement of a scheduled request is nonlinear in the power
//! variables, but rearranging it against the interference terms gives an
//! equivalent linear inequality, so the whole problem is a small dense LP.
//! It is solved with a two-phase primal simplex; Bland's rule takes over as
//! an anti-cycling fallback once a pivot budget is exhausted. Problems here
//! are tiny (at most `requests x heads` variables), so a dense tableau is
//! the right representation.

use crate::model::{ModelError, Network, Request, SlotAssignment};
use thiserror::Error;

/// Feasibility tolerance on (row-scaled) constraint residuals.
const TOL_FEAS: f64 = 1e-9;
/// Optimality tolerance on reduced costs.
const TOL_OPT: f64 = 1e-9;
/// Pivot magnitude below which a column entry is treated as zero.
const TOL_PIV: f64 = 1e-11;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("pivot budget exhausted; the solver is cycling or ill-conditioned")]
    PivotBudget,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

/// A constructed single-slot power-control problem. Variables exist only for
/// scheduled requests crossed with active radio heads; everything else is
/// fixed to zero by construction.
#[derive(Debug, Clone)]
pub struct PowerProblem {
    /// Scheduled requests as (request index, subcarrier).
    pub scheduled: Vec<(usize, usize)>,
    /// Indices of active radio heads.
    pub active_rrhs: Vec<usize>,
    /// `gains[i][k]`: channel gain of scheduled request `i` towards active
    /// head `k` on the request's own subcarrier.
    gains: Vec<Vec<f64>>,
    /// Power caps of the active heads, W.
    caps: Vec<f64>,
    /// Minimum SINR (linear) per scheduled request.
    sinr_targets: Vec<f64>,
    noise: f64,
}

/// Powers returned by the solver, indexed like the problem's variables.
#[derive(Debug, Clone)]
pub struct PowerSolution {
    pub status: SolveStatus,
    /// Total transmit power at the optimum, W. Zero when infeasible.
    pub objective: f64,
    power: Vec<f64>,
    num_active: usize,
}

impl PowerSolution {
    fn infeasible() -> Self {
        PowerSolution { status: SolveStatus::Infeasible, objective: 0.0, power: Vec::new(), num_active: 0 }
    }

    /// Power of scheduled request `i` from active head `k`, W.
    pub fn power(&self, sched_idx: usize, active_idx: usize) -> f64 {
        self.power[sched_idx * self.num_active + active_idx]
    }

    /// Writes the solved powers into a slot assignment.
    pub fn apply_to_slot(&self, problem: &PowerProblem, slot: &mut SlotAssignment) {
        for (i, &(r, s)) in problem.scheduled.iter().enumerate() {
            for (k, &j) in problem.active_rrhs.iter().enumerate() {
                slot.set_p(r, j, s, self.power(i, k));
            }
        }
    }
}

/// Builds the power-control problem for one slot's allocation and activation
/// decisions.
pub fn build_problem(
    alloc: &[Option<usize>],
    active: &[bool],
    requests: &[Request],
    network: &Network,
) -> Result<PowerProblem, ModelError> {
    if alloc.len() != requests.len() {
        return Err(ModelError::Dimension(format!(
            "allocation has {} rows, instance has {} requests",
            alloc.len(),
            requests.len()
        )));
    }
    if active.len() != network.num_rrhs() {
        return Err(ModelError::Dimension(format!(
            "activation vector has {} entries, network has {} heads",
            active.len(),
            network.num_rrhs()
        )));
    }
    let mut scheduled = Vec::new();
    for (r, slot) in alloc.iter().enumerate() {
        if let Some(s) = *slot {
            if s >= network.num_subcarriers {
                return Err(ModelError::Dimension(format!(
                    "request {} allocated to subcarrier {} of {}",
                    r, s, network.num_subcarriers
                )));
            }
            scheduled.push((r, s));
        }
    }
    let active_rrhs: Vec<usize> =
        active.iter().enumerate().filter_map(|(j, &on)| on.then_some(j)).collect();

    let gains = scheduled
        .iter()
        .map(|&(r, s)| active_rrhs.iter().map(|&j| requests[r].gains.g(j, s)).collect())
        .collect();
    let caps = active_rrhs.iter().map(|&j| network.rrhs[j].max_power).collect();
    let sinr_targets = scheduled.iter().map(|&(r, _)| requests[r].min_sinr).collect();

    Ok(PowerProblem {
        scheduled,
        active_rrhs,
        gains,
        caps,
        sinr_targets,
        noise: network.noise_power,
    })
}

impl PowerProblem {
    pub fn num_variables(&self) -> usize {
        self.scheduled.len() * self.active_rrhs.len()
    }

    /// Cap rows plus one SINR row per scheduled request with a positive
    /// target.
    pub fn num_constraints(&self) -> usize {
        self.active_rrhs.len() + self.sinr_targets.iter().filter(|&&g| g > 0.0).count()
    }

    /// Coefficient of variable `(k, j)` in the SINR row of scheduled request
    /// `i`: the victim's own gain for its signal, minus the target times the
    /// victim's gain for co-channel interference.
    fn sinr_coeff(&self, i: usize, k: usize, j: usize) -> f64 {
        if k == i {
            self.gains[i][j]
        } else if self.scheduled[k].1 == self.scheduled[i].1 {
            -self.sinr_targets[i] * self.gains[i][j]
        } else {
            0.0
        }
    }
}

/// Solves the problem to global optimality; the LP is convex, so any local
/// optimum found by the simplex is global.
pub fn solve(problem: &PowerProblem) -> Result<PowerSolution, LpError> {
    let n_req = problem.scheduled.len();
    let n_act = problem.active_rrhs.len();
    let n = n_req * n_act;

    if n_req == 0 {
        return Ok(PowerSolution { status: SolveStatus::Optimal, objective: 0.0, power: Vec::new(), num_active: n_act });
    }
    // Scheduled requests with a positive target but no variables can never
    // reach it.
    if n == 0 {
        let ok = problem.sinr_targets.iter().all(|&g| g <= 0.0);
        return Ok(if ok {
            PowerSolution { status: SolveStatus::Optimal, objective: 0.0, power: Vec::new(), num_active: 0 }
        } else {
            PowerSolution::infeasible()
        });
    }

    // Row-scaled constraint system over the n variables:
    //   cap rows (<=):  sum_i x[i,k] / P_k <= 1
    //   SINR rows (>=): sum coeff / (gamma_i * noise) >= 1
    // Scaling every right-hand side to 1 keeps the tableau well conditioned
    // even though gains span many orders of magnitude.
    let mut rows_le: Vec<Vec<f64>> = Vec::new();
    for (k, &cap) in problem.caps.iter().enumerate() {
        let mut row = vec![0.0; n];
        for i in 0..n_req {
            row[i * n_act + k] = 1.0 / cap;
        }
        rows_le.push(row);
    }
    let mut rows_ge: Vec<Vec<f64>> = Vec::new();
    for i in 0..n_req {
        let gamma = problem.sinr_targets[i];
        if gamma <= 0.0 {
            continue;
        }
        let rhs = gamma * problem.noise;
        let mut row = vec![0.0; n];
        for k in 0..n_req {
            for j in 0..n_act {
                row[k * n_act + j] = problem.sinr_coeff(i, k, j) / rhs;
            }
        }
        rows_ge.push(row);
    }

    let x = match simplex_min_sum(&rows_le, &rows_ge, n)? {
        Some(x) => x,
        None => return Ok(PowerSolution::infeasible()),
    };

    // Residual check on the scaled system; a solution that drifted past the
    // feasibility tolerance is a solver failure, not an answer.
    for row in &rows_le {
        let lhs: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
        if lhs > 1.0 + 1e-7 {
            return Err(LpError::Numerical(format!("cap residual {:.3e}", lhs - 1.0)));
        }
    }
    for row in &rows_ge {
        let lhs: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
        if lhs < 1.0 - 1e-7 {
            return Err(LpError::Numerical(format!("sinr residual {:.3e}", 1.0 - lhs)));
        }
    }

    let objective = x.iter().sum();
    Ok(PowerSolution { status: SolveStatus::Optimal, objective, power: x, num_active: n_act })
}

/// Minimizes `sum(x)` over `rows_le * x <= 1`, `rows_ge * x >= 1`, `x >= 0`
/// with a dense two-phase simplex. Returns `None` when infeasible.
///
/// Column layout: `n` structural variables, one slack per <= row, one
/// surplus per >= row, one artificial per >= row.
fn simplex_min_sum(
    rows_le: &[Vec<f64>],
    rows_ge: &[Vec<f64>],
    n: usize,
) -> Result<Option<Vec<f64>>, LpError> {
    let m_le = rows_le.len();
    let m_ge = rows_ge.len();
    let m = m_le + m_ge;
    let n_total = n + m_le + m_ge + m_ge;
    let art0 = n + m_le + m_ge;

    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);

    for (i, row) in rows_le.iter().enumerate() {
        let mut t = vec![0.0; n_total];
        t[..n].copy_from_slice(row);
        t[n + i] = 1.0;
        tab.push(t);
        rhs.push(1.0);
        basis.push(n + i);
    }
    for (i, row) in rows_ge.iter().enumerate() {
        let mut t = vec![0.0; n_total];
        t[..n].copy_from_slice(row);
        t[n + m_le + i] = -1.0;
        t[art0 + i] = 1.0;
        tab.push(t);
        rhs.push(1.0);
        basis.push(art0 + i);
    }

    // Phase 1: minimize the sum of artificials. Reduced costs start as the
    // negated sum of the artificial rows.
    let mut obj = vec![0.0; n_total];
    let mut obj_val = 0.0;
    for i in m_le..m {
        for c in 0..n_total {
            obj[c] -= tab[i][c];
        }
        obj_val -= rhs[i];
    }
    for c in art0..n_total {
        obj[c] = 0.0;
    }

    let budget = 200 * (m + n) + 1000;
    run_simplex(&mut tab, &mut rhs, &mut basis, &mut obj, &mut obj_val, n_total, budget)?;

    // obj_val holds -(sum of artificials), one unit per scaled >= row.
    if -obj_val > TOL_FEAS * m_ge.max(1) as f64 {
        return Ok(None);
    }

    // Drive leftover artificials out of the basis; rows where that is
    // impossible are redundant and get dropped.
    let mut keep: Vec<bool> = vec![true; tab.len()];
    for i in 0..tab.len() {
        if basis[i] >= art0 {
            let pivot_col = (0..art0).find(|&c| tab[i][c].abs() > 1e-7);
            match pivot_col {
                Some(c) => pivot(&mut tab, &mut rhs, &mut basis, &mut obj, &mut obj_val, i, c),
                None => keep[i] = false,
            }
        }
    }
    let mut kept_tab = Vec::new();
    let mut kept_rhs = Vec::new();
    let mut kept_basis = Vec::new();
    for i in 0..tab.len() {
        if keep[i] {
            kept_tab.push(std::mem::take(&mut tab[i]));
            kept_rhs.push(rhs[i]);
            kept_basis.push(basis[i]);
        }
    }
    let mut tab = kept_tab;
    let mut rhs = kept_rhs;
    let mut basis = kept_basis;
    // Forbid artificials from re-entering by truncating their columns.
    for row in tab.iter_mut() {
        row.truncate(art0);
    }
    let n_total = art0;

    // Phase 2: minimize the sum of the structural variables.
    let mut obj = vec![0.0; n_total];
    for c in 0..n {
        obj[c] = 1.0;
    }
    let mut obj_val = 0.0;
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            for c in 0..n_total {
                obj[c] -= tab[i][c];
            }
            obj_val -= rhs[i];
        }
    }
    let budget = 200 * (tab.len() + n) + 1000;
    run_simplex(&mut tab, &mut rhs, &mut basis, &mut obj, &mut obj_val, n_total, budget)?;

    let mut x = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = rhs[i].max(0.0);
        }
    }
    Ok(Some(x))
}

/// Runs primal simplex iterations to optimality. Dantzig pricing first, then
/// Bland's rule once `budget` pivots have been spent; a second exhausted
/// budget is reported as an error.
fn run_simplex(
    tab: &mut Vec<Vec<f64>>,
    rhs: &mut Vec<f64>,
    basis: &mut Vec<usize>,
    obj: &mut Vec<f64>,
    obj_val: &mut f64,
    n_total: usize,
    budget: usize,
) -> Result<(), LpError> {
    let mut pivots = 0usize;
    let mut bland = false;
    loop {
        let enter = if bland {
            (0..n_total).find(|&c| obj[c] < -TOL_OPT)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for c in 0..n_total {
                if obj[c] < -TOL_OPT && best.map_or(true, |(_, v)| obj[c] < v) {
                    best = Some((c, obj[c]));
                }
            }
            best.map(|(c, _)| c)
        };
        let enter = match enter {
            Some(c) => c,
            None => return Ok(()),
        };

        // Ratio test; ties prefer the row whose basic variable has the
        // largest index so that slacks and artificials leave first.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..tab.len() {
            let coef = tab[i][enter];
            if coef > TOL_PIV {
                let ratio = rhs[i] / coef;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        if bland {
                            ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && basis[i] < basis[li])
                        } else {
                            ratio < lr - 1e-12 || ((ratio - lr).abs() <= 1e-12 && basis[i] > basis[li])
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (row, _) = leave.ok_or_else(|| {
            LpError::Numerical("unbounded direction in a problem bounded below".into())
        })?;

        pivot(tab, rhs, basis, obj, obj_val, row, enter);
        pivots += 1;
        if pivots >= budget {
            if bland {
                return Err(LpError::PivotBudget);
            }
            bland = true;
            pivots = 0;
        }
    }
}

fn pivot(
    tab: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    obj: &mut [f64],
    obj_val: &mut f64,
    row: usize,
    col: usize,
) {
    let piv = tab[row][col];
    let inv = 1.0 / piv;
    for v in tab[row].iter_mut() {
        *v *= inv;
    }
    rhs[row] *= inv;
    // Clean the pivot column exactly.
    tab[row][col] = 1.0;

    for i in 0..tab.len() {
        if i != row {
            let factor = tab[i][col];
            if factor != 0.0 {
                let (pivot_row, other) = if i < row {
                    let (a, b) = tab.split_at_mut(row);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = tab.split_at_mut(i);
                    (&a[row], &mut b[0])
                };
                for (o, p) in other.iter_mut().zip(pivot_row.iter()) {
                    *o -= factor * p;
                }
                other[col] = 0.0;
                rhs[i] -= factor * rhs[row];
                if rhs[i] < 0.0 && rhs[i] > -1e-12 {
                    rhs[i] = 0.0;
                }
            }
        }
    }
    let factor = obj[col];
    if factor != 0.0 {
        for (o, p) in obj.iter_mut().zip(tab[row].iter()) {
            *o -= factor * p;
        }
        obj[col] = 0.0;
        *obj_val -= factor * rhs[row];
    }
    basis[row] = col;
}
