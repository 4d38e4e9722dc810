//! Self-contained linear-program solver.
//!
//! Bounded-variable primal simplex on a dense tableau, two-phase for
//! equality rows, Bland's rule for anti-cycling. Instances in this crate are
//! small (at most a few hundred variables), so exactness and determinism are
//! worth more than asymptotic speed.

use thiserror::Error;

/// Pivot tolerance and constraint-violation acceptance.
pub const PIVOT_TOL: f64 = 1e-9;
/// Acceptance tolerance for post-hoc constraint checks on returned optima.
pub const FEAS_TOL: f64 = 1e-9;

const ITER_CAP_BASE: usize = 20_000;

/// Relation of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

/// Whether to optimize an objective or just find a feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Feasibility,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

/// A linear program over bounded variables.
///
/// Variables are added with [`LinearProgram::add_var`]; rows reference them
/// by the returned index. Bounds may be infinite on either side.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    rows: Vec<Row>,
    sense: Sense,
}

/// Result of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, assignment: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    pub fn optimal(self) -> Option<(f64, Vec<f64>)> {
        match self {
            LpOutcome::Optimal { value, assignment } => Some((value, assignment)),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("variable {var}: lower bound {lower} exceeds upper bound {upper}")]
    BadBounds { var: usize, lower: f64, upper: f64 },
    #[error("row {row} references unknown variable {var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("simplex iteration limit reached ({0} pivots)")]
    IterationLimit(usize),
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
            objective: Vec::new(),
            rows: Vec::new(),
            sense,
        }
    }

    /// Adds a variable with bounds `[lower, upper]` and objective
    /// coefficient `obj`; returns its index.
    pub fn add_var(&mut self, lower: f64, upper: f64, obj: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(obj);
        self.lower.len() - 1
    }

    /// Adds a constraint row `sum coeffs <rel> rhs`. Duplicate variable
    /// entries are summed.
    pub fn add_row(&mut self, relation: Relation, rhs: f64, coeffs: &[(usize, f64)]) {
        self.rows.push(Row {
            coeffs: coeffs.to_vec(),
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        for (j, (&lo, &up)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || up.is_nan() {
                return Err(LpError::NonFinite { what: "bound", index: j });
            }
            if lo > up {
                return Err(LpError::BadBounds { var: j, lower: lo, upper: up });
            }
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::NonFinite { what: "objective coefficient", index: j });
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite { what: "rhs", index: i });
            }
            for &(var, c) in &row.coeffs {
                if var >= self.num_vars() {
                    return Err(LpError::UnknownVariable { row: i, var });
                }
                if !c.is_finite() {
                    return Err(LpError::NonFinite { what: "row coefficient", index: i });
                }
            }
        }
        Ok(())
    }

    /// Solves the program. Deterministic: identical input gives an identical
    /// outcome within one build.
    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        self.validate()?;
        let mut tableau = Tableau::build(self);
        let outcome = tableau.run(self)?;
        if cfg!(debug_assertions) {
            if let LpOutcome::Optimal { assignment, .. } = &outcome {
                self.debug_check(assignment);
            }
        }
        Ok(outcome)
    }

    /// Plain-text tabular dump for failure triage.
    pub fn dump(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "sense: {:?}, vars: {}, rows: {}", self.sense, self.num_vars(), self.num_rows());
        let _ = writeln!(s, "var\tlower\tupper\tobj");
        for j in 0..self.num_vars() {
            let _ = writeln!(s, "x{}\t{}\t{}\t{}", j, self.lower[j], self.upper[j], self.objective[j]);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let terms: Vec<String> = row
                .coeffs
                .iter()
                .map(|(v, c)| format!("{:+}*x{}", c, v))
                .collect();
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            let _ = writeln!(s, "r{}: {} {} {}", i, terms.join(" "), rel, row.rhs);
        }
        s
    }

    fn debug_check(&self, x: &[f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().map(|&(v, c)| c * x[v]).sum();
            let tol = FEAS_TOL * (1.0 + row.rhs.abs());
            let ok = match row.relation {
                Relation::Le => lhs <= row.rhs + tol,
                Relation::Eq => (lhs - row.rhs).abs() <= tol,
            };
            debug_assert!(ok, "row {} violated: lhs={} rhs={}\n{}", i, lhs, row.rhs, self.dump());
        }
        for j in 0..self.num_vars() {
            debug_assert!(
                x[j] >= self.lower[j] - FEAS_TOL && x[j] <= self.upper[j] + FEAS_TOL,
                "variable x{} = {} outside [{}, {}]",
                j,
                x[j],
                self.lower[j],
                self.upper[j]
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic(usize),
    AtLower,
    AtUpper,
    Free,
}

struct Tableau {
    ncols: usize,
    nrows: usize,
    n_struct: usize,
    /// Dense row-major tableau, nrows x ncols.
    a: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<VarStatus>,
    value: Vec<f64>,
    basic: Vec<usize>,
    /// Artificial columns, pinned to zero once they leave the basis.
    artificial_start: usize,
    obj_row: Vec<f64>,
}

enum StepOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n_struct = lp.num_vars();
        let nrows = lp.num_rows();
        let n_slack = lp.rows.iter().filter(|r| r.relation == Relation::Le).count();

        // Column layout: structural | slack | artificial (added on demand).
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut status = Vec::with_capacity(n_struct + n_slack);
        let mut value = Vec::with_capacity(n_struct + n_slack);
        for j in 0..n_struct {
            let (st, v) = if lower[j].is_finite() {
                (VarStatus::AtLower, lower[j])
            } else if upper[j].is_finite() {
                (VarStatus::AtUpper, upper[j])
            } else {
                (VarStatus::Free, 0.0)
            };
            status.push(st);
            value.push(v);
        }

        let max_cols = n_struct + n_slack + nrows;
        let mut a = vec![0.0; nrows * max_cols];
        let mut basic = vec![usize::MAX; nrows];

        let mut next_col = n_struct;
        // Slack columns first so indices are stable before artificials.
        let mut slack_of_row = vec![usize::MAX; nrows];
        for (i, row) in lp.rows.iter().enumerate() {
            if row.relation == Relation::Le {
                slack_of_row[i] = next_col;
                lower.push(0.0);
                upper.push(f64::INFINITY);
                status.push(VarStatus::AtLower);
                value.push(0.0);
                next_col += 1;
            }
        }
        let artificial_start = next_col;

        for (i, row) in lp.rows.iter().enumerate() {
            for &(v, c) in &row.coeffs {
                a[i * max_cols + v] += c;
            }
            if slack_of_row[i] != usize::MAX {
                a[i * max_cols + slack_of_row[i]] = 1.0;
            }
            let residual = row.rhs
                - row
                    .coeffs
                    .iter()
                    .map(|&(v, c)| c * value[v])
                    .sum::<f64>();
            let slack_feasible = slack_of_row[i] != usize::MAX && residual >= -PIVOT_TOL;
            if slack_feasible {
                let s = slack_of_row[i];
                basic[i] = s;
                status[s] = VarStatus::Basic(i);
                value[s] = residual.max(0.0);
            } else {
                // Flip the row when the residual is negative so the basic
                // artificial column is +1 (identity-basis invariant).
                if residual < 0.0 {
                    for j in 0..next_col {
                        a[i * max_cols + j] = -a[i * max_cols + j];
                    }
                }
                let col = next_col;
                next_col += 1;
                lower.push(0.0);
                upper.push(f64::INFINITY);
                status.push(VarStatus::Basic(i));
                value.push(residual.abs());
                a[i * max_cols + col] = 1.0;
                basic[i] = col;
            }
        }

        let ncols = next_col;
        // Compact the tableau to the columns actually used.
        let mut compact = vec![0.0; nrows * ncols];
        for i in 0..nrows {
            compact[i * ncols..(i + 1) * ncols]
                .copy_from_slice(&a[i * max_cols..i * max_cols + ncols]);
        }

        Tableau {
            ncols,
            nrows,
            n_struct,
            a: compact,
            lower,
            upper,
            status,
            value,
            basic,
            artificial_start,
            obj_row: vec![0.0; ncols],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.ncols + j]
    }

    fn run(&mut self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        if self.ncols > self.artificial_start {
            self.load_phase1_objective();
            // The phase-1 objective is bounded; an unbounded report can only
            // be numerical noise and the residual check below still decides.
            self.simplex(true)?;
            let infeasibility: f64 = (self.artificial_start..self.ncols)
                .map(|j| self.value[j])
                .sum();
            if infeasibility > FEAS_TOL {
                return Ok(LpOutcome::Infeasible);
            }
            self.retire_artificials();
        }

        match lp.sense {
            Sense::Feasibility => Ok(LpOutcome::Optimal {
                value: 0.0,
                assignment: self.extract(),
            }),
            Sense::Maximize => {
                self.load_phase2_objective(lp);
                match self.simplex(false)? {
                    StepOutcome::Unbounded => Ok(LpOutcome::Unbounded),
                    StepOutcome::Optimal => {
                        let x = self.extract();
                        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                        Ok(LpOutcome::Optimal { value, assignment: x })
                    }
                }
            }
        }
    }

    fn load_phase1_objective(&mut self) {
        // Maximize -sum(artificials); price out the basic artificials.
        self.obj_row.iter_mut().for_each(|c| *c = 0.0);
        for j in self.artificial_start..self.ncols {
            self.obj_row[j] = -1.0;
        }
        for i in 0..self.nrows {
            if self.basic[i] >= self.artificial_start {
                for j in 0..self.ncols {
                    self.obj_row[j] += self.at(i, j);
                }
            }
        }
        for i in 0..self.nrows {
            let b = self.basic[i];
            self.obj_row[b] = 0.0;
        }
    }

    fn load_phase2_objective(&mut self, lp: &LinearProgram) {
        self.obj_row.iter_mut().for_each(|c| *c = 0.0);
        self.obj_row[..self.n_struct].copy_from_slice(&lp.objective);
        for i in 0..self.nrows {
            let b = self.basic[i];
            if b < self.n_struct && lp.objective[b] != 0.0 {
                let cb = lp.objective[b];
                for j in 0..self.ncols {
                    self.obj_row[j] -= cb * self.at(i, j);
                }
            }
        }
        for i in 0..self.nrows {
            let b = self.basic[i];
            self.obj_row[b] = 0.0;
        }
    }

    /// Pins nonbasic artificials at zero and pivots basic ones out where a
    /// usable pivot exists. A row whose non-artificial coefficients are all
    /// zero is redundant; its artificial stays basic at zero and can never
    /// block a pivot.
    fn retire_artificials(&mut self) {
        for j in self.artificial_start..self.ncols {
            self.upper[j] = 0.0;
            if !matches!(self.status[j], VarStatus::Basic(_)) {
                self.status[j] = VarStatus::AtLower;
                self.value[j] = 0.0;
            }
        }
        for i in 0..self.nrows {
            if self.basic[i] < self.artificial_start {
                continue;
            }
            let mut pivot_col = None;
            for j in 0..self.artificial_start {
                if matches!(self.status[j], VarStatus::Basic(_)) {
                    continue;
                }
                if self.at(i, j).abs() > PIVOT_TOL {
                    pivot_col = Some(j);
                    break;
                }
            }
            if let Some(q) = pivot_col {
                // Degenerate swap: the artificial sat at zero, so the new
                // basic variable keeps its current (bound) value.
                let old = self.basic[i];
                self.value[old] = 0.0;
                self.status[old] = VarStatus::AtLower;
                self.pivot(i, q);
            }
        }
    }

    fn simplex(&mut self, phase1: bool) -> Result<StepOutcome, LpError> {
        let cap = ITER_CAP_BASE + 200 * (self.nrows + self.ncols);
        for _ in 0..cap {
            let entering = self.choose_entering();
            let (q, dir) = match entering {
                None => return Ok(StepOutcome::Optimal),
                Some(e) => e,
            };

            // Ratio test: how far can x_q move in direction `dir`.
            let mut limit = if self.lower[q].is_finite() && self.upper[q].is_finite() {
                self.upper[q] - self.lower[q]
            } else {
                f64::INFINITY
            };
            let mut leaving: Option<(usize, bool)> = None; // (row, leaves_at_upper)
            for i in 0..self.nrows {
                let w = self.at(i, q);
                if w.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basic[i];
                let delta_per_unit = -dir * w;
                let (room, at_upper) = if delta_per_unit > 0.0 {
                    if self.upper[b].is_finite() {
                        ((self.upper[b] - self.value[b]) / delta_per_unit, true)
                    } else {
                        continue;
                    }
                } else if self.lower[b].is_finite() {
                    ((self.value[b] - self.lower[b]) / -delta_per_unit, false)
                } else {
                    continue;
                };
                let room = room.max(0.0);
                // Exact-min ratio test: the step limit never increases, so a
                // tie-break can't push another basic variable past its bound
                // (tolerance-based ties get amplified by large tableau
                // entries). Ties at the exact minimum go to the smallest
                // basic variable index (Bland).
                let take = match leaving {
                    None => room <= limit,
                    Some((r, _)) => {
                        room < limit || (room == limit && b < self.basic[r])
                    }
                };
                if take {
                    limit = room;
                    leaving = Some((i, at_upper));
                }
            }

            if limit.is_infinite() {
                return Ok(StepOutcome::Unbounded);
            }

            // Move the entering variable and update basic values.
            for i in 0..self.nrows {
                let w = self.at(i, q);
                if w != 0.0 {
                    let b = self.basic[i];
                    self.value[b] -= dir * w * limit;
                }
            }
            self.value[q] += dir * limit;

            match leaving {
                None => {
                    // Bound flip.
                    self.status[q] = match self.status[q] {
                        VarStatus::AtLower => VarStatus::AtUpper,
                        VarStatus::AtUpper => VarStatus::AtLower,
                        s => s,
                    };
                    self.value[q] = if matches!(self.status[q], VarStatus::AtUpper) {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                }
                Some((r, at_upper)) => {
                    let p = self.basic[r];
                    self.value[p] = if at_upper { self.upper[p] } else { self.lower[p] };
                    self.status[p] = if at_upper { VarStatus::AtUpper } else { VarStatus::AtLower };
                    if phase1 && p >= self.artificial_start {
                        self.upper[p] = 0.0;
                    }
                    self.pivot(r, q);
                }
            }
        }
        Err(LpError::IterationLimit(cap))
    }

    /// Bland's rule: smallest improving variable index.
    fn choose_entering(&self) -> Option<(usize, f64)> {
        for j in 0..self.ncols {
            match self.status[j] {
                VarStatus::Basic(_) => continue,
                VarStatus::AtLower => {
                    if self.lower[j] >= self.upper[j] {
                        continue; // pinned
                    }
                    if self.obj_row[j] > PIVOT_TOL {
                        return Some((j, 1.0));
                    }
                }
                VarStatus::AtUpper => {
                    if self.lower[j] >= self.upper[j] {
                        continue;
                    }
                    if self.obj_row[j] < -PIVOT_TOL {
                        return Some((j, -1.0));
                    }
                }
                VarStatus::Free => {
                    if self.obj_row[j] > PIVOT_TOL {
                        return Some((j, 1.0));
                    }
                    if self.obj_row[j] < -PIVOT_TOL {
                        return Some((j, -1.0));
                    }
                }
            }
        }
        None
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let ncols = self.ncols;
        let pivot = self.at(r, q);
        debug_assert!(pivot.abs() > PIVOT_TOL, "pivot too small: {}", pivot);
        let inv = 1.0 / pivot;
        for j in 0..ncols {
            self.a[r * ncols + j] *= inv;
        }
        self.a[r * ncols + q] = 1.0;
        for i in 0..self.nrows {
            if i == r {
                continue;
            }
            let factor = self.at(i, q);
            if factor != 0.0 {
                for j in 0..ncols {
                    self.a[i * ncols + j] -= factor * self.a[r * ncols + j];
                }
                self.a[i * ncols + q] = 0.0;
            }
        }
        let factor = self.obj_row[q];
        if factor != 0.0 {
            for j in 0..ncols {
                self.obj_row[j] -= factor * self.a[r * ncols + j];
            }
            self.obj_row[q] = 0.0;
        }
        self.status[q] = VarStatus::Basic(r);
        self.basic[r] = q;
    }

    fn extract(&self) -> Vec<f64> {
        self.value[..self.n_struct].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp_max() -> LinearProgram {
        LinearProgram::new(Sense::Maximize)
    }

    #[test]
    fn single_variable_box() {
        let mut lp = lp_max();
        lp.add_var(0.0, 1.0, 1.0);
        let out = lp.solve().unwrap();
        let (v, x) = out.optimal().unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert!((x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_optimum_value_is_unique() {
        let mut lp = lp_max();
        let x = lp.add_var(0.0, 1.0, 1.0);
        let y = lp.add_var(0.0, 1.0, 1.0);
        lp.add_row(Relation::Le, 1.0, &[(x, 1.0), (y, 1.0)]);
        let (v, _) = lp.solve().unwrap().optimal().unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_box() {
        let mut lp = LinearProgram::new(Sense::Feasibility);
        let x = lp.add_var(0.0, f64::INFINITY, 0.0);
        lp.add_row(Relation::Le, -1.0, &[(x, 1.0)]);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn two_variable_vertex() {
        let mut lp = lp_max();
        let x = lp.add_var(0.0, f64::INFINITY, 3.0);
        let y = lp.add_var(0.0, f64::INFINITY, 2.0);
        lp.add_row(Relation::Le, 4.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(Relation::Le, 6.0, &[(x, 1.0), (y, 3.0)]);
        let (v, sol) = lp.solve().unwrap().optimal().unwrap();
        assert!((v - 12.0).abs() < 1e-9);
        assert!((sol[0] - 4.0).abs() < 1e-9);
        assert!(sol[1].abs() < 1e-9);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = lp_max();
        lp.add_var(0.0, f64::INFINITY, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn equality_rows_two_phase() {
        let mut lp = lp_max();
        let x = lp.add_var(0.0, 10.0, 1.0);
        let y = lp.add_var(0.0, 10.0, 0.0);
        lp.add_row(Relation::Eq, 5.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(Relation::Le, 3.0, &[(x, 1.0)]);
        let (v, sol) = lp.solve().unwrap().optimal().unwrap();
        assert!((v - 3.0).abs() < 1e-9);
        assert!((sol[0] + sol[1] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equality_rows() {
        let mut lp = lp_max();
        let x = lp.add_var(0.0, 2.0, 1.0);
        let y = lp.add_var(0.0, 2.0, 1.0);
        lp.add_row(Relation::Eq, 2.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(Relation::Eq, 4.0, &[(x, 2.0), (y, 2.0)]);
        let (v, _) = lp.solve().unwrap().optimal().unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn inconsistent_equalities_detected() {
        let mut lp = LinearProgram::new(Sense::Feasibility);
        let x = lp.add_var(0.0, 2.0, 0.0);
        let y = lp.add_var(0.0, 2.0, 0.0);
        lp.add_row(Relation::Eq, 2.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(Relation::Eq, 5.0, &[(x, 2.0), (y, 2.0)]);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn nan_coefficient_rejected() {
        let mut lp = lp_max();
        let x = lp.add_var(0.0, 1.0, f64::NAN);
        lp.add_row(Relation::Le, 1.0, &[(x, 1.0)]);
        assert!(lp.solve().is_err());
    }

    #[test]
    fn fixed_variable_participates() {
        let mut lp = lp_max();
        let x = lp.add_var(0.5, 0.5, 0.0);
        let y = lp.add_var(0.0, 1.0, 1.0);
        lp.add_row(Relation::Le, 0.8, &[(x, 1.0), (y, 1.0)]);
        let (v, sol) = lp.solve().unwrap().optimal().unwrap();
        assert!((sol[0] - 0.5).abs() < 1e-9);
        assert!((v - 0.3).abs() < 1e-9);
    }

    #[test]
    fn negative_lower_bounds() {
        let mut lp = lp_max();
        let x = lp.add_var(-2.0, 2.0, -1.0);
        lp.add_row(Relation::Le, 1.0, &[(x, 1.0)]);
        let (v, sol) = lp.solve().unwrap().optimal().unwrap();
        assert!((sol[0] + 2.0).abs() < 1e-9);
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn barely_infeasible_is_not_declared_feasible() {
        // Regression: a program infeasible by ~1e-5 must come back
        // Infeasible, not Optimal-with-violations. The coefficients come
        // from a rate-bisection probe right at the feasibility boundary.
        let za = 0.6666660308837891f64;
        let zb = 0.33333301544189453f64;
        let zc = 0.333343505859375f64;
        let mut lp = LinearProgram::new(Sense::Feasibility);
        for j in 0..6 {
            let upper = if j == 3 { 0.0 } else { 1.0 };
            lp.add_var(0.0, upper, 0.0);
        }
        lp.add_row(Relation::Eq, -1.0, &[(0, -1.0), (2, -1.0)]);
        lp.add_row(Relation::Eq, 0.0, &[(0, 1.0), (1, -1.0)]);
        lp.add_row(Relation::Eq, 0.0, &[(3, -1.0), (5, -1.0)]);
        lp.add_row(Relation::Eq, -1.0, &[(3, 1.0), (4, -1.0)]);
        for c2 in [zb, zc] {
            for e in 0..3 {
                lp.add_row(Relation::Le, 0.5, &[(e, za), (e + 3, c2)]);
            }
        }
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn determinism() {
        let mut lp = lp_max();
        let x = lp.add_var(0.0, 3.0, 1.0);
        let y = lp.add_var(0.0, 3.0, 1.0);
        let z = lp.add_var(0.0, 3.0, 1.0);
        lp.add_row(Relation::Le, 4.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(Relation::Le, 4.0, &[(y, 1.0), (z, 1.0)]);
        lp.add_row(Relation::Eq, 2.0, &[(x, 1.0), (z, -1.0)]);
        let a = lp.solve().unwrap();
        let b = lp.solve().unwrap();
        match (a, b) {
            (
                LpOutcome::Optimal { value: va, assignment: xa },
                LpOutcome::Optimal { value: vb, assignment: xb },
            ) => {
                assert_eq!(va.to_bits(), vb.to_bits());
                for (p, q) in xa.iter().zip(&xb) {
                    assert_eq!(p.to_bits(), q.to_bits());
                }
            }
            _ => panic!("expected optimal"),
        }
    }
}
