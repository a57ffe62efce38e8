//! Preventive N−1 SC-DCOPF by contingency screening and constraint
//! generation.
//!
//! 1. Solve the base case with hard normal limits.
//! 2. Build post-contingency flows `F[b,c] = f_b + LODF[b,c]·f_c`.
//! 3. Collect every pair `(b, c)` with `|F[b,c]|` above the contingency limit.
//! 4. Append one row `(PTDF_b + LODF[b,c]·PTDF_c)·(P_G − P_D)` per new pair,
//!    with penalised slack, re-solve, and repeat from step 2 on the new flows.
//!
//! Rows are never dropped, so the objective is nondecreasing across
//! iterations.

use std::collections::HashSet;

use nalgebra::DMatrix;

use crate::dispatch::{
    solve_base_dcopf, solve_penalized_dcopf, DispatchError, DispatchProblem, DispatchResult, FlowRow, HourData,
    RowLabel, DEFAULT_PENALTY,
};
use crate::factors::SensitivityFactors;
use crate::lp::LpSolver;
use crate::network::Network;

/// Relative tolerance on limits when screening.
pub const SCREEN_TOL: f64 = 1e-6;

/// Limit placed on appended post-contingency rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContingencyRowLimit {
    /// The contingency rating, the same limit used for screening.
    #[default]
    Contingency,
    /// The normal rating; stricter than the screen.
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopfOptions {
    pub max_iter: usize,
    pub penalty_price: f64,
    pub row_limit: ContingencyRowLimit,
    /// Also put penalised slacks on base-case rows in the re-solves.
    pub slack_on_base_rows: bool,
}

impl Default for ScopfOptions {
    fn default() -> Self {
        Self {
            max_iter: 20,
            penalty_price: DEFAULT_PENALTY,
            row_limit: ContingencyRowLimit::Contingency,
            slack_on_base_rows: false,
        }
    }
}

/// Post-contingency flows. Column `c` is the network after outage of `c`;
/// columns of radial branches are invalid and left at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyFlows {
    pub flows: DMatrix<f64>,
    pub valid: Vec<bool>,
}

pub fn post_contingency_flows(base_flows: &[f64], factors: &SensitivityFactors) -> ContingencyFlows {
    let l = base_flows.len();
    let mut flows = DMatrix::<f64>::zeros(l, l);
    let valid: Vec<bool> = factors.radial.iter().map(|r| !r).collect();
    for c in 0..l {
        if !valid[c] {
            continue;
        }
        let fc = base_flows[c];
        for b in 0..l {
            if b != c {
                flows[(b, c)] = base_flows[b] + factors.lodf[(b, c)] * fc;
            }
        }
    }
    ContingencyFlows { flows, valid }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub monitored: usize,
    pub outage: usize,
    pub flow: f64,
    /// MW above the limit.
    pub overload: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationSet {
    /// Largest overload first; ties by `(monitored, outage)`.
    pub pairs: Vec<Violation>,
}

impl ViolationSet {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }
}

pub fn screen_violations(cont: &ContingencyFlows, limits: &[f64]) -> ViolationSet {
    let l = limits.len();
    let mut pairs = Vec::new();
    for c in (0..l).filter(|&c| cont.valid[c]) {
        for (b, &limit) in limits.iter().enumerate() {
            if b == c {
                continue;
            }
            let flow = cont.flows[(b, c)];
            if flow.abs() > limit * (1.0 + SCREEN_TOL) {
                pairs.push(Violation { monitored: b, outage: c, flow, overload: flow.abs() - limit });
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.overload
            .total_cmp(&a.overload)
            .then(a.monitored.cmp(&b.monitored))
            .then(a.outage.cmp(&b.outage))
    });
    ViolationSet { pairs }
}

/// Coefficients of branch `b`'s flow after outage of `c`, per bus.
pub fn contingency_row(factors: &SensitivityFactors, b: usize, c: usize) -> Vec<f64> {
    let share = factors.lodf[(b, c)];
    factors
        .ptdf
        .row(b)
        .iter()
        .zip(factors.ptdf.row(c).iter())
        .map(|(pb, pc)| pb + share * pc)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScopfStatus {
    /// No post-contingency violations remain.
    Converged,
    /// Every remaining violation sits on an enforced row and is covered by
    /// penalised slack.
    SlackLimited,
    /// Stopped at `max_iter` with unenforced violations left.
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub violations_added: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopfOutcome {
    pub result: DispatchResult,
    /// Re-solves performed; zero when the base case is already secure.
    pub iterations: usize,
    pub status: ScopfStatus,
    /// Violations in the final dispatch.
    pub residual: ViolationSet,
    pub trace: Vec<TraceEntry>,
    /// Flow rows of the final problem (base rows first).
    pub rows: Vec<FlowRow>,
}

pub fn solve_scdcopf(
    network: &Network,
    factors: &SensitivityFactors,
    data: &HourData,
    normal_limits: &[f64],
    contingency_limits: &[f64],
    opts: &ScopfOptions,
    solver: &dyn LpSolver,
) -> Result<ScopfOutcome, DispatchError> {
    if opts.max_iter == 0 {
        return Err(DispatchError::Invalid("max_iter must be at least 1".into()));
    }
    if contingency_limits.len() != network.num_branches() {
        return Err(DispatchError::Invalid("contingency limits do not match branch count".into()));
    }
    let base = solve_base_dcopf(network, factors, data, normal_limits, opts.penalty_price, solver)?;
    let mut trace = vec![TraceEntry { iteration: 0, violations_added: 0, objective: base.objective }];
    let mut violations = screen_violations(&post_contingency_flows(&base.flows, factors), contingency_limits);

    let mut problem = DispatchProblem::from_network(network, data, opts.penalty_price).with_branch_limits(
        factors,
        normal_limits,
        opts.slack_on_base_rows,
    );
    let mut result = base;
    let mut enforced: HashSet<(usize, usize)> = HashSet::new();
    let mut iterations = 0;
    let mut status = ScopfStatus::Converged;

    while !violations.is_empty() {
        let fresh: Vec<&Violation> =
            violations.pairs.iter().filter(|v| !enforced.contains(&(v.monitored, v.outage))).collect();
        if fresh.is_empty() {
            status = ScopfStatus::SlackLimited;
            break;
        }
        if iterations == opts.max_iter {
            status = ScopfStatus::IterationLimit;
            break;
        }
        iterations += 1;
        for v in &fresh {
            enforced.insert((v.monitored, v.outage));
            let limit = match opts.row_limit {
                ContingencyRowLimit::Contingency => contingency_limits[v.monitored],
                ContingencyRowLimit::Normal => normal_limits[v.monitored],
            };
            problem.flow_rows.push(FlowRow {
                label: RowLabel { monitored: v.monitored, outage: Some(v.outage) },
                coefs: contingency_row(factors, v.monitored, v.outage),
                limit,
                slack_allowed: true,
            });
        }
        let added = fresh.len();
        result = solve_penalized_dcopf(&problem, factors, solver)?;
        trace.push(TraceEntry { iteration: iterations, violations_added: added, objective: result.objective });
        violations = screen_violations(&post_contingency_flows(&result.flows, factors), contingency_limits);
    }

    Ok(ScopfOutcome { result, iterations, status, residual: violations, trace, rows: problem.flow_rows })
}
