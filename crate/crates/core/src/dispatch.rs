//! Hourly DC optimal power flow in PTDF form.
//!
//! Decision variables are the cost-curve blocks of every unit. Constraints
//! are one system power balance plus two-sided flow rows
//! `−limit ≤ coefs·(P_G − P_D) ≤ limit`. Rows may carry a pair of penalised
//! slacks that let the flow exceed the limit at `penalty_price` $/MWh.

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::factors::SensitivityFactors;
use crate::lp::{LinearProgram, LpError, LpSolver};
use crate::network::{format_hour, CostSegment, HourlySeries, Network};

/// Default penalty on flow-limit slacks, $/MWh.
pub const DEFAULT_PENALTY: f64 = 2_000.0;
/// Feasibility tolerance for the post-solve audit, MW.
pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispatchError {
    #[error("hour {hour}: dispatch infeasible")]
    Infeasible { hour: String },
    #[error("hour {hour}: dispatch unbounded (check cost data)")]
    Unbounded { hour: String },
    #[error("hour {hour}: solver failed: {source}")]
    Solver { hour: String, source: LpError },
    #[error("hour {hour}: solution failed audit: {message}")]
    Audit { hour: String, message: String },
    #[error("invalid dispatch problem: {0}")]
    Invalid(String),
}

/// Inputs for one hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourData {
    pub hour: DateTime<Utc>,
    /// MW per bus position.
    pub demand: Vec<f64>,
    /// MW cap per generator position (already ≤ static p_max).
    pub availability: Vec<f64>,
}

impl HourData {
    pub fn from_series(series: &HourlySeries, h: usize) -> Self {
        HourData { hour: series.hours[h], demand: series.demand[h].clone(), availability: series.availability[h].clone() }
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitOffer {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub segments: Vec<CostSegment>,
}

/// What a flow row protects: branch `monitored`, optionally after the outage
/// of branch `outage`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowLabel {
    pub monitored: usize,
    pub outage: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRow {
    pub label: RowLabel,
    /// Flow per MW of net injection at each bus position.
    pub coefs: Vec<f64>,
    pub limit: f64,
    pub slack_allowed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchProblem {
    pub hour: DateTime<Utc>,
    pub demand: Vec<f64>,
    pub units: Vec<UnitOffer>,
    pub flow_rows: Vec<FlowRow>,
    pub penalty_price: f64,
}

impl DispatchProblem {
    /// Problem with no flow rows; unit bounds combine static limits with the
    /// hour's availability.
    pub fn from_network(network: &Network, data: &HourData, penalty_price: f64) -> Self {
        let units = network
            .generators
            .iter()
            .enumerate()
            .map(|(g, gen)| {
                let p_max = data.availability[g].min(gen.p_max).max(0.0);
                UnitOffer {
                    bus: network.bus_position(gen.bus).expect("validated network"),
                    p_min: gen.p_min.min(p_max),
                    p_max,
                    segments: gen.segments.clone(),
                }
            })
            .collect();
        DispatchProblem { hour: data.hour, demand: data.demand.clone(), units, flow_rows: Vec::new(), penalty_price }
    }

    /// Appends the two-sided base-case row for every branch.
    pub fn with_branch_limits(mut self, factors: &SensitivityFactors, limits: &[f64], slack_allowed: bool) -> Self {
        for (b, &limit) in limits.iter().enumerate() {
            self.flow_rows.push(FlowRow {
                label: RowLabel { monitored: b, outage: None },
                coefs: factors.ptdf.row(b).iter().copied().collect(),
                limit,
                slack_allowed,
            });
        }
        self
    }

    fn validate(&self) -> Result<(), DispatchError> {
        let n = self.demand.len();
        if self.demand.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(DispatchError::Invalid("demand must be finite and nonnegative".into()));
        }
        for (r, row) in self.flow_rows.iter().enumerate() {
            if row.coefs.len() != n {
                return Err(DispatchError::Invalid(format!("flow row {r} has {} coefficients for {n} buses", row.coefs.len())));
            }
            if !(row.limit > 0.0) || row.coefs.iter().any(|c| !c.is_finite()) {
                return Err(DispatchError::Invalid(format!("flow row {r} needs a positive limit and finite coefficients")));
            }
        }
        for (u, unit) in self.units.iter().enumerate() {
            if unit.bus >= n || !(unit.p_min >= 0.0 && unit.p_min <= unit.p_max) {
                return Err(DispatchError::Invalid(format!("unit {u} has bad bus or bounds")));
            }
        }
        if !(self.penalty_price > 0.0) {
            return Err(DispatchError::Invalid("penalty price must be positive".into()));
        }
        Ok(())
    }

    /// Block bounds that realise the unit bounds when cheaper blocks fill
    /// first, which convex curves guarantee at an optimum.
    pub fn segment_bounds(unit: &UnitOffer) -> Vec<(f64, f64)> {
        let mut cum = 0.0;
        unit.segments
            .iter()
            .map(|s| {
                let hi = (unit.p_max - cum).clamp(0.0, s.mw);
                let lo = (unit.p_min - cum).clamp(0.0, hi);
                cum += s.mw;
                (lo, hi)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchResult {
    pub hour: DateTime<Utc>,
    /// MW per unit.
    pub p_gen: Vec<f64>,
    /// MW per branch, `PTDF·(P_G − P_D)`.
    pub flows: Vec<f64>,
    /// Production cost plus slack penalties, $.
    pub objective: f64,
    pub penalty_cost: f64,
    /// ∂objective/∂(active flow bound) per flow row: negative when the upper
    /// limit binds, positive for the lower, zero when slack. The magnitude is
    /// the shadow price in $/MWh.
    pub row_duals: Vec<f64>,
    /// System energy price, $/MWh.
    pub balance_dual: f64,
    /// Limit exceedance per flow row, MW.
    pub slack_values: Vec<f64>,
    /// Reduced cost of each unit block, aligned with `segment_bounds`.
    pub segment_reduced_costs: Vec<Vec<f64>>,
    pub lp_iterations: usize,
}

impl DispatchResult {
    pub fn total_slack(&self) -> f64 {
        self.slack_values.iter().sum()
    }
}

/// Solves a dispatch problem with whatever rows it carries.
pub fn solve_penalized_dcopf(
    problem: &DispatchProblem,
    factors: &SensitivityFactors,
    solver: &dyn LpSolver,
) -> Result<DispatchResult, DispatchError> {
    problem.validate()?;
    let hour = format_hour(&problem.hour);
    let mut lp = LinearProgram::new();

    let mut unit_cols = Vec::with_capacity(problem.units.len());
    for unit in &problem.units {
        let cols: Vec<usize> = DispatchProblem::segment_bounds(unit)
            .into_iter()
            .zip(&unit.segments)
            .map(|((lo, hi), s)| lp.add_column(s.marginal_cost, lo, hi))
            .collect();
        unit_cols.push(cols);
    }

    let total_demand: f64 = problem.demand.iter().sum();
    let all_cols: Vec<(usize, f64)> = unit_cols.iter().flatten().map(|&c| (c, 1.0)).collect();
    let balance_row = lp.add_row(all_cols, total_demand, total_demand);

    let mut slack_cols = Vec::with_capacity(problem.flow_rows.len());
    let mut row_ids = Vec::with_capacity(problem.flow_rows.len());
    for row in &problem.flow_rows {
        let offset: f64 = row.coefs.iter().zip(&problem.demand).map(|(a, d)| a * d).sum();
        let mut coefs = Vec::new();
        for (unit, cols) in problem.units.iter().zip(&unit_cols) {
            let a = row.coefs[unit.bus];
            if a != 0.0 {
                coefs.extend(cols.iter().map(|&c| (c, a)));
            }
        }
        let slacks = if row.slack_allowed {
            let up = lp.add_column(problem.penalty_price, 0.0, f64::INFINITY);
            let down = lp.add_column(problem.penalty_price, 0.0, f64::INFINITY);
            coefs.push((up, -1.0));
            coefs.push((down, 1.0));
            Some((up, down))
        } else {
            None
        };
        row_ids.push(lp.add_row(coefs, offset - row.limit, offset + row.limit));
        slack_cols.push(slacks);
    }

    let sol = solver.solve(&lp).map_err(|e| match e {
        LpError::Infeasible { .. } => DispatchError::Infeasible { hour: hour.clone() },
        LpError::Unbounded { .. } => DispatchError::Unbounded { hour: hour.clone() },
        other => DispatchError::Solver { hour: hour.clone(), source: other },
    })?;

    let p_gen: Vec<f64> = unit_cols.iter().map(|cols| cols.iter().map(|&c| sol.x[c]).sum()).collect();
    let slack_values: Vec<f64> = slack_cols
        .iter()
        .map(|s| s.map_or(0.0, |(u, d)| sol.x[u] + sol.x[d]))
        .collect();
    let penalty_cost = slack_values.iter().sum::<f64>() * problem.penalty_price;
    let injections = net_injections(problem, &p_gen);
    let result = DispatchResult {
        hour: problem.hour,
        flows: factors.flows(&injections),
        objective: sol.objective,
        penalty_cost,
        row_duals: row_ids.iter().map(|&r| sol.row_duals[r]).collect(),
        balance_dual: sol.row_duals[balance_row],
        slack_values,
        segment_reduced_costs: unit_cols.iter().map(|cols| cols.iter().map(|&c| sol.reduced_costs[c]).collect()).collect(),
        lp_iterations: sol.iterations,
        p_gen,
    };
    audit(problem, &result).map_err(|message| DispatchError::Audit { hour, message })?;
    Ok(result)
}

pub fn net_injections(problem: &DispatchProblem, p_gen: &[f64]) -> Vec<f64> {
    let mut inj: Vec<f64> = problem.demand.iter().map(|d| -d).collect();
    for (unit, p) in problem.units.iter().zip(p_gen) {
        inj[unit.bus] += p;
    }
    inj
}

/// Independent check of balance, unit bounds and hard flow rows.
pub fn audit(problem: &DispatchProblem, result: &DispatchResult) -> Result<(), String> {
    let scale = |v: f64| AUDIT_TOL * v.abs().max(1.0);
    let total: f64 = problem.demand.iter().sum();
    let produced: f64 = result.p_gen.iter().sum();
    if (produced - total).abs() > scale(total) {
        return Err(format!("balance residual {:.3e} MW", produced - total));
    }
    for (u, (unit, &p)) in problem.units.iter().zip(&result.p_gen).enumerate() {
        if p < unit.p_min - scale(unit.p_min) || p > unit.p_max + scale(unit.p_max) {
            return Err(format!("unit {u} output {p} outside [{}, {}]", unit.p_min, unit.p_max));
        }
    }
    let inj = net_injections(problem, &result.p_gen);
    for (r, row) in problem.flow_rows.iter().enumerate() {
        let flow: f64 = row.coefs.iter().zip(&inj).map(|(a, x)| a * x).sum();
        let allowed = row.limit + result.slack_values[r];
        if flow.abs() > allowed + scale(row.limit) {
            return Err(format!("row {r} flow {flow} exceeds {allowed}"));
        }
    }
    Ok(())
}

/// Base-case DCOPF with hard normal limits on every branch.
pub fn solve_base_dcopf(
    network: &Network,
    factors: &SensitivityFactors,
    data: &HourData,
    limits: &[f64],
    penalty_price: f64,
    solver: &dyn LpSolver,
) -> Result<DispatchResult, DispatchError> {
    if limits.len() != network.num_branches() {
        return Err(DispatchError::Invalid(format!(
            "{} limits for {} branches",
            limits.len(),
            network.num_branches()
        )));
    }
    let problem = DispatchProblem::from_network(network, data, penalty_price).with_branch_limits(factors, limits, false);
    solve_penalized_dcopf(&problem, factors, solver)
}

/// Economic dispatch with no network limits. Flows are reported for
/// information only.
pub fn solve_copperplate(
    network: &Network,
    factors: &SensitivityFactors,
    data: &HourData,
    solver: &dyn LpSolver,
) -> Result<DispatchResult, DispatchError> {
    let problem = DispatchProblem::from_network(network, data, DEFAULT_PENALTY);
    solve_penalized_dcopf(&problem, factors, solver)
}
