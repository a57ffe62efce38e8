//! Linear programming behind a small solver contract.
//!
//! Problems are stated in row-activity form:
//!
//! ```text
//! min  c·x
//! s.t. row_lo ≤ A x ≤ row_hi
//!      col_lo ≤ x   ≤ col_hi
//! ```
//!
//! [`DenseSimplex`] is a bounded-variable primal simplex with an explicit
//! basis inverse. It returns vertex solutions together with row duals and
//! column reduced costs, which the dispatch layer reports as shadow prices.
//! Target sizes are a few hundred columns and a few thousand rows.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("linear program is unbounded (column {column})")]
    Unbounded { column: usize },
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

/// A sparse constraint row `lo ≤ Σ coef·x ≤ hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a column and returns its index.
    pub fn add_column(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.cost.push(cost);
        self.col_lo.push(lo);
        self.col_hi.push(hi);
        self.cost.len() - 1
    }

    /// Adds a row and returns its index.
    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, lo: f64, hi: f64) -> usize {
        self.rows.push(Row { coefs, lo, hi });
        self.rows.len() - 1
    }

    pub fn num_columns(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_columns();
        if self.col_lo.len() != n || self.col_hi.len() != n {
            return Err(LpError::Malformed("column arrays differ in length".into()));
        }
        for (j, (&lo, &hi)) in self.col_lo.iter().zip(&self.col_hi).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || !self.cost[j].is_finite() {
                return Err(LpError::Malformed(format!("column {j} has bounds [{lo}, {hi}]")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.lo.is_nan() || row.hi.is_nan() || row.lo > row.hi {
                return Err(LpError::Malformed(format!(
                    "row {i} has bounds [{}, {}]",
                    row.lo, row.hi
                )));
            }
            for &(j, a) in &row.coefs {
                if j >= n || !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} references column {j}")));
                }
            }
        }
        Ok(())
    }
}

/// Optimal vertex of a [`LinearProgram`].
///
/// `row_duals[i]` is the sensitivity of the objective to the active bound of
/// row `i` (zero for rows strictly inside their range). `reduced_costs[j]` is
/// the same for the active bound of column `j`. Together they satisfy
/// `objective = Σ row_duals·row_bound + Σ reduced_costs·col_bound` over the
/// active bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub row_activity: Vec<f64>,
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Solver contract. Implementations must be reentrant.
pub trait LpSolver: Send + Sync {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;
}

#[derive(Debug, Clone)]
pub struct DenseSimplex {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Basis inverse is rebuilt from scratch after this many updates.
    pub refactor_every: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 50_000,
            refactor_every: 64,
        }
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        lp.validate()?;
        let mut state = Tableau::build(lp, self);
        state.phase_one()?;
        state.phase_two()?;
        Ok(state.extract(lp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
    /// Free column parked at zero.
    Free,
}

/// Working state. Columns are laid out as `[structural | logical | artificial]`;
/// logical `s_i` carries row `i` through `A x - s = 0`.
struct Tableau<'a> {
    opts: &'a DenseSimplex,
    m: usize,
    n_struct: usize,
    n_total: usize,
    /// Sparse columns of the structural part of `A`, sorted by row.
    a_struct: Vec<Vec<(usize, f64)>>,
    /// Artificial column signs; artificial `k` sits in row `art_row[k]`.
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    /// Row-major `m × m` inverse of the basis matrix.
    binv: Vec<f64>,
    updates: usize,
    iterations: usize,
}

impl<'a> Tableau<'a> {
    fn build(lp: &LinearProgram, opts: &'a DenseSimplex) -> Self {
        let m = lp.num_rows();
        let n_struct = lp.num_columns();
        let mut a_struct: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coefs {
                match a_struct[j].last_mut() {
                    Some((r, v)) if *r == i => *v += a,
                    _ => a_struct[j].push((i, a)),
                }
            }
        }
        for col in &mut a_struct {
            col.retain(|&(_, a)| a != 0.0);
        }

        let mut lo = lp.col_lo.clone();
        let mut hi = lp.col_hi.clone();
        let mut cost = lp.cost.clone();
        let mut x = Vec::with_capacity(n_struct + m);
        let mut status = Vec::with_capacity(n_struct + m);
        for j in 0..n_struct {
            let (v, s) = resting_point(lo[j], hi[j]);
            x.push(v);
            status.push(s);
        }

        // Row activities at the starting point decide which rows need an
        // artificial to start feasible.
        let mut activity = vec![0.0; m];
        for (j, col) in a_struct.iter().enumerate() {
            if x[j] != 0.0 {
                for &(i, a) in col {
                    activity[i] += a * x[j];
                }
            }
        }

        let mut basis = Vec::with_capacity(m);
        let mut art_row = Vec::new();
        let mut art_sign = Vec::new();
        let mut art_value = Vec::new();
        for (i, row) in lp.rows.iter().enumerate() {
            lo.push(row.lo);
            hi.push(row.hi);
            cost.push(0.0);
            let r = activity[i];
            if r >= row.lo - opts.primal_tol && r <= row.hi + opts.primal_tol {
                x.push(r);
                status.push(Status::Basic);
                basis.push(n_struct + i);
            } else {
                // Logical parks at the violated bound; the artificial covers
                // the gap: r - s + sign·art = 0 with art ≥ 0.
                let (bound, st) = if r < row.lo {
                    (row.lo, Status::AtLower)
                } else {
                    (row.hi, Status::AtUpper)
                };
                x.push(bound);
                status.push(st);
                let gap = bound - r;
                art_row.push(i);
                art_sign.push(gap.signum());
                art_value.push(gap.abs());
                basis.push(usize::MAX);
            }
        }
        let n_art = art_row.len();
        for k in 0..n_art {
            let col = n_struct + m + k;
            lo.push(0.0);
            hi.push(f64::INFINITY);
            cost.push(0.0);
            x.push(art_value[k]);
            status.push(Status::Basic);
            basis[art_row[k]] = col;
        }

        let n_total = n_struct + m + n_art;
        let mut t = Tableau {
            opts,
            m,
            n_struct,
            n_total,
            a_struct,
            art_row,
            art_sign,
            lo,
            hi,
            cost,
            x,
            status,
            basis,
            binv: vec![0.0; m * m],
            updates: 0,
            iterations: 0,
        };
        // Initial basis is diagonal (±1 per row).
        for i in 0..m {
            let b = t.basis[i];
            let diag = t.column_entry(b, i);
            t.binv[i * m + i] = 1.0 / diag;
        }
        t
    }

    /// Entry of column `j` in row `i`.
    fn column_entry(&self, j: usize, i: usize) -> f64 {
        if j < self.n_struct {
            self.a_struct[j].binary_search_by_key(&i, |&(r, _)| r).map_or(0.0, |k| self.a_struct[j][k].1)
        } else if j < self.n_struct + self.m {
            if j - self.n_struct == i {
                -1.0
            } else {
                0.0
            }
        } else {
            let k = j - self.n_struct - self.m;
            if self.art_row[k] == i {
                self.art_sign[k]
            } else {
                0.0
            }
        }
    }

    fn dense_column(&self, j: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.m];
        if j < self.n_struct {
            for &(i, a) in &self.a_struct[j] {
                col[i] = a;
            }
            col
        } else {
            if j < self.n_struct + self.m {
                col[j - self.n_struct] = -1.0;
            } else {
                let k = j - self.n_struct - self.m;
                col[self.art_row[k]] = self.art_sign[k];
            }
            col
        }
    }

    /// `B⁻¹ a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j < self.n_struct {
            for &(k, a) in &self.a_struct[j] {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.binv[i * m + k] * a;
                }
            }
        } else {
            let (k, a) = if j < self.n_struct + self.m {
                (j - self.n_struct, -1.0)
            } else {
                let q = j - self.n_struct - self.m;
                (self.art_row[q], self.art_sign[q])
            };
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.binv[i * m + k] * a;
            }
        }
        out
    }

    /// Simplex multipliers `y = c_Bᵀ B⁻¹` for the given cost vector.
    fn btran(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, &v) in y.iter_mut().zip(row) {
                    *yi += cb * v;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], y: &[f64]) -> f64 {
        if j < self.n_struct {
            cost[j] - self.a_struct[j].iter().map(|&(i, a)| a * y[i]).sum::<f64>()
        } else if j < self.n_struct + self.m {
            cost[j] + y[j - self.n_struct]
        } else {
            let k = j - self.n_struct - self.m;
            cost[j] - self.art_sign[k] * y[self.art_row[k]]
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        if !self.refactor_structured() {
            self.refactor_dense()?;
        }
        self.updates = 0;
        self.recompute_basic_values();
        Ok(())
    }

    /// Unit column `(row, value)` for logical and artificial columns.
    fn unit_entry(&self, j: usize) -> Option<(usize, f64)> {
        if j < self.n_struct {
            None
        } else if j < self.n_struct + self.m {
            Some((j - self.n_struct, -1.0))
        } else {
            let k = j - self.n_struct - self.m;
            Some((self.art_row[k], self.art_sign[k]))
        }
    }

    /// Inverse by blocks when most basic columns are unit vectors: only the
    /// structural columns restricted to the rows no unit column covers need
    /// a real factorisation. Returns false if the basis does not split.
    fn refactor_structured(&mut self) -> bool {
        let m = self.m;
        let mut covered = vec![false; m];
        let mut struct_pos = Vec::new();
        for (pos, &j) in self.basis.iter().enumerate() {
            match self.unit_entry(j) {
                Some((row, _)) => {
                    if covered[row] {
                        return false;
                    }
                    covered[row] = true;
                }
                None => struct_pos.push(pos),
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&i| !covered[i]).collect();
        let k = struct_pos.len();
        if free_rows.len() != k || k * 4 > m * 3 {
            return false;
        }
        let cols: Vec<Vec<f64>> = struct_pos.iter().map(|&p| self.dense_column(self.basis[p])).collect();
        let mut block = nalgebra::DMatrix::<f64>::zeros(k, k);
        for (q, col) in cols.iter().enumerate() {
            for (p, &row) in free_rows.iter().enumerate() {
                block[(p, q)] = col[row];
            }
        }
        let Some(inv) = block.lu().try_inverse() else { return false };
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for (q, &pos) in struct_pos.iter().enumerate() {
            for (p, &row) in free_rows.iter().enumerate() {
                self.binv[pos * m + row] = inv[(q, p)];
            }
        }
        for (pos, &j) in self.basis.iter().enumerate() {
            let Some((row0, sign)) = self.unit_entry(j) else { continue };
            self.binv[pos * m + row0] = 1.0 / sign;
            for (p, &row) in free_rows.iter().enumerate() {
                let s: f64 = cols.iter().enumerate().map(|(q, col)| col[row0] * inv[(q, p)]).sum();
                if s != 0.0 {
                    self.binv[pos * m + row] = -s / sign;
                }
            }
        }
        true
    }

    fn refactor_dense(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = nalgebra::DMatrix::<f64>::zeros(m, m);
        for (r, &j) in self.basis.iter().enumerate() {
            let col = self.dense_column(j);
            for (i, v) in col.into_iter().enumerate() {
                b[(i, r)] = v;
            }
        }
        let inv = b
            .lu()
            .try_inverse()
            .ok_or_else(|| LpError::Malformed("basis matrix became singular".into()))?;
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = inv[(i, k)];
            }
        }
        Ok(())
    }

    /// Recomputes basic variables from the nonbasic ones: `x_B = -B⁻¹ N x_N`.
    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n_total {
            if self.status[j] == Status::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            if j < self.n_struct {
                for &(i, a) in &self.a_struct[j] {
                    rhs[i] -= a * xj;
                }
            } else if j < self.n_struct + self.m {
                rhs[j - self.n_struct] += xj;
            } else {
                let k = j - self.n_struct - self.m;
                rhs[self.art_row[k]] -= self.art_sign[k] * xj;
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            self.x[self.basis[r]] = v;
        }
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        let n_art = self.n_total - self.n_struct - self.m;
        if n_art == 0 {
            return Ok(());
        }
        let mut cost = vec![0.0; self.n_total];
        for c in cost.iter_mut().skip(self.n_struct + self.m) {
            *c = 1.0;
        }
        self.iterate(&cost)?;
        let residual: f64 = self.x[self.n_struct + self.m..].iter().sum();
        let scale = 1.0 + self.lo.iter().chain(&self.hi).filter(|v| v.is_finite()).fold(0.0_f64, |a, v| a.max(v.abs()));
        if residual > self.opts.primal_tol * scale * 10.0 {
            return Err(LpError::Infeasible { residual });
        }
        // Artificials are pinned at zero from here on; basic ones stay as
        // degenerate placeholders.
        for j in self.n_struct + self.m..self.n_total {
            self.hi[j] = 0.0;
            if self.status[j] != Status::Basic {
                self.status[j] = Status::AtLower;
                self.x[j] = 0.0;
            }
        }
        self.refactor()?;
        Ok(())
    }

    fn phase_two(&mut self) -> Result<(), LpError> {
        let cost = self.cost.clone();
        self.iterate(&cost)
    }

    /// Runs primal simplex iterations to optimality for `cost`.
    fn iterate(&mut self, cost: &[f64]) -> Result<(), LpError> {
        let tol = self.opts.dual_tol;
        let mut stalled = 0usize;
        let mut last_obj = f64::INFINITY;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::IterationLimit(self.opts.max_iterations));
            }
            if self.updates >= self.opts.refactor_every {
                self.refactor()?;
            }
            let y = self.btran(cost);
            // Bland's rule after a run of degenerate pivots prevents cycling.
            let bland = stalled > 50;
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.n_total {
                let st = self.status[j];
                if st == Status::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let d = self.reduced_cost(j, cost, &y);
                let dir = match st {
                    Status::AtLower if d < -tol => 1.0,
                    Status::AtUpper if d > tol => -1.0,
                    Status::Free if d.abs() > tol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                let score = d.abs();
                if score > best {
                    best = score;
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                return Ok(());
            };

            let alpha = self.ftran(q);
            // Moving x_q by t·dir changes basic r by -t·dir·alpha[r].
            let mut step = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, Status)> = None;
            let ptol = self.opts.pivot_tol;
            for (r, &a) in alpha.iter().enumerate() {
                let delta = -dir * a;
                if delta.abs() <= ptol {
                    continue;
                }
                let b = self.basis[r];
                let xb = self.x[b];
                let (limit, st) = if delta > 0.0 {
                    ((self.hi[b] - xb) / delta, Status::AtUpper)
                } else {
                    ((self.lo[b] - xb) / delta, Status::AtLower)
                };
                if !limit.is_finite() {
                    continue;
                }
                let limit = limit.max(0.0);
                let better = match leave {
                    None => limit < step,
                    Some((lr, _)) => {
                        limit < step - 1e-12
                            || (limit <= step + 1e-12
                                && if bland {
                                    b < self.basis[lr]
                                } else {
                                    a.abs() > alpha[lr].abs()
                                })
                    }
                };
                if better {
                    step = limit;
                    leave = Some((r, st));
                }
            }
            if !step.is_finite() {
                return Err(LpError::Unbounded { column: q });
            }

            self.iterations += 1;
            for (r, &a) in alpha.iter().enumerate() {
                let b = self.basis[r];
                self.x[b] -= step * dir * a;
            }
            self.x[q] += step * dir;

            match leave {
                None => {
                    // Bound flip: the entering column crosses to its other bound.
                    self.status[q] = if dir > 0.0 { Status::AtUpper } else { Status::AtLower };
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
                Some((r, st)) => {
                    let out = self.basis[r];
                    self.status[out] = st;
                    self.x[out] = if st == Status::AtUpper { self.hi[out] } else { self.lo[out] };
                    self.status[q] = Status::Basic;
                    self.basis[r] = q;
                    self.pivot(r, &alpha);
                }
            }

            let obj: f64 = (0..self.n_total).map(|j| cost[j] * self.x[j]).sum();
            if obj < last_obj - 1e-12 * (1.0 + obj.abs()) {
                stalled = 0;
                last_obj = obj;
            } else {
                stalled += 1;
            }
        }
    }

    /// Product-form update of `B⁻¹` after column `alpha` replaces basis row `r`.
    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            *v /= piv;
        }
        for (i, row) in before.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (v, &p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
        for (i, row) in after.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + i];
            if f != 0.0 {
                for (v, &p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
        self.updates += 1;
    }

    fn extract(&mut self, lp: &LinearProgram) -> LpSolution {
        let _ = self.refactor();
        let y = self.btran(&self.cost);
        let n = self.n_struct;
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let v = self.x[j];
                v.clamp(self.lo[j], self.hi[j])
            })
            .collect();
        let row_activity: Vec<f64> = lp
            .rows
            .iter()
            .map(|row| row.coefs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect();
        // Row dual is the reduced cost of the row's logical column.
        let row_duals: Vec<f64> = (0..self.m)
            .map(|i| {
                if self.status[n + i] == Status::Basic {
                    0.0
                } else {
                    y[i]
                }
            })
            .collect();
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| {
                if self.status[j] == Status::Basic {
                    0.0
                } else {
                    self.reduced_cost(j, &self.cost, &y)
                }
            })
            .collect();
        let objective = x.iter().zip(&lp.cost).map(|(a, c)| a * c).sum();
        LpSolution {
            x,
            objective,
            row_activity,
            row_duals,
            reduced_costs,
            iterations: self.iterations,
        }
    }
}

fn resting_point(lo: f64, hi: f64) -> (f64, Status) {
    if lo.is_finite() {
        (lo, Status::AtLower)
    } else if hi.is_finite() {
        (hi, Status::AtUpper)
    } else {
        (0.0, Status::Free)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(lp: &LinearProgram) -> LpSolution {
        DenseSimplex::default().solve(lp).unwrap()
    }

    #[test]
    fn two_variable_textbook() {
        // max 3x + 5y st x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new();
        let x = lp.add_column(-3.0, 0.0, f64::INFINITY);
        let y = lp.add_column(-5.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0)], f64::NEG_INFINITY, 4.0);
        lp.add_row(vec![(y, 2.0)], f64::NEG_INFINITY, 12.0);
        lp.add_row(vec![(x, 3.0), (y, 2.0)], f64::NEG_INFINITY, 18.0);
        let s = solve(&lp);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
        assert!((s.x[1] - 6.0).abs() < 1e-9);
        assert!((s.objective + 36.0).abs() < 1e-9);
        // Classic shadow prices 0, 3/2, 1 (sign flipped for minimisation).
        assert!(s.row_duals[0].abs() < 1e-9);
        assert!((s.row_duals[1] + 1.5).abs() < 1e-9);
        assert!((s.row_duals[2] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_row_needs_phase_one() {
        let mut lp = LinearProgram::new();
        let a = lp.add_column(10.0, 0.0, 100.0);
        let b = lp.add_column(20.0, 0.0, 100.0);
        lp.add_row(vec![(a, 1.0), (b, 1.0)], 150.0, 150.0);
        let s = solve(&lp);
        assert!((s.x[a] - 100.0).abs() < 1e-9);
        assert!((s.x[b] - 50.0).abs() < 1e-9);
        assert!((s.row_duals[0] - 20.0).abs() < 1e-9);
        assert!((s.reduced_costs[a] + 10.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut lp = LinearProgram::new();
        let a = lp.add_column(1.0, 0.0, 10.0);
        lp.add_row(vec![(a, 1.0)], 20.0, 20.0);
        assert!(matches!(
            DenseSimplex::default().solve(&lp),
            Err(LpError::Infeasible { .. })
        ));
    }

    #[test]
    fn unbounded_is_reported() {
        let mut lp = LinearProgram::new();
        let a = lp.add_column(-1.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(a, 1.0)], 1.0, f64::INFINITY);
        assert!(matches!(
            DenseSimplex::default().solve(&lp),
            Err(LpError::Unbounded { .. })
        ));
    }

    #[test]
    fn free_column_and_ranged_row() {
        // min |shift| style: x free, -2 ≤ x + y ≤ 3, y ∈ [0, 1], cost x - y
        let mut lp = LinearProgram::new();
        let x = lp.add_column(1.0, f64::NEG_INFINITY, f64::INFINITY);
        let y = lp.add_column(-1.0, 0.0, 1.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], -2.0, 3.0);
        let s = solve(&lp);
        assert!((s.x[y] - 1.0).abs() < 1e-9);
        assert!((s.x[x] + 3.0).abs() < 1e-9);
        assert!((s.objective + 4.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_bounds_rejected() {
        let mut lp = LinearProgram::new();
        lp.add_column(1.0, 2.0, 1.0);
        assert!(matches!(
            DenseSimplex::default().solve(&lp),
            Err(LpError::Malformed(_))
        ));
    }

    #[test]
    fn dual_identity_holds() {
        let mut lp = LinearProgram::new();
        let a = lp.add_column(5.0, 0.0, 60.0);
        let b = lp.add_column(9.0, 0.0, 80.0);
        let c = lp.add_column(30.0, 0.0, 50.0);
        lp.add_row(vec![(a, 1.0), (b, 1.0), (c, 1.0)], 120.0, 120.0);
        lp.add_row(vec![(a, 0.6), (b, -0.2)], -20.0, 20.0);
        let s = solve(&lp);
        let mut dual_obj = 0.0;
        for (i, row) in lp.rows.iter().enumerate() {
            if s.row_duals[i] != 0.0 {
                let bound = if (s.row_activity[i] - row.lo).abs() < 1e-7 { row.lo } else { row.hi };
                dual_obj += s.row_duals[i] * bound;
            }
        }
        for j in 0..3 {
            if s.reduced_costs[j] != 0.0 {
                let bound = if (s.x[j] - lp.col_lo[j]).abs() < 1e-7 { lp.col_lo[j] } else { lp.col_hi[j] };
                dual_obj += s.reduced_costs[j] * bound;
            }
        }
        assert!((dual_obj - s.objective).abs() < 1e-7 * s.objective.abs());
    }
}
