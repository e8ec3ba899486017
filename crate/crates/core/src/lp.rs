//! Dense two-phase primal simplex for small and medium linear programs.
//!
//! Problems are `min cᵀx` subject to linear rows (`≤`, `≥`, `=`) and
//! variable bounds `l ≤ x ≤ u` with finite `l`. Entering variables are
//! chosen by the most negative reduced cost; after a run of degenerate
//! pivots the solver switches to Bland's smallest-index rule, which cannot
//! cycle. [`PivotRule::Bland`] uses Bland's rule throughout.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    Bland,
    /// Dantzig pricing with a switch to Bland after degenerate stalls.
    DantzigBland,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<Option<f64>>,
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The final basis violates feasibility by more than the tolerance.
    Numerical,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub rule: PivotRule,
    pub tolerance: f64,
    pub feasibility: f64,
    pub max_iterations: usize,
    pub degenerate_switch: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rule: PivotRule::DantzigBland,
            tolerance: 1e-10,
            feasibility: 1e-8,
            max_iterations: 200_000,
            degenerate_switch: 50,
        }
    }
}

impl LpProblem {
    /// `n` variables with bounds `x ≥ 0` and zero cost.
    pub fn new(n: usize) -> Self {
        Self {
            cost: vec![0.0; n],
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![None; n],
            names: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Solver("bound vectors do not match the variable count".into()));
        }
        let finite = self.cost.iter().chain(&self.lower).all(|x| x.is_finite())
            && self.upper.iter().flatten().all(|x| x.is_finite())
            && self
                .constraints
                .iter()
                .all(|c| c.rhs.is_finite() && c.coeffs.iter().all(|(j, a)| *j < n && a.is_finite()));
        if !finite {
            return Err(Error::Solver("non-finite or out-of-range problem data".into()));
        }
        Ok(())
    }

    /// Largest violation of the constraints and bounds at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|(j, a)| a * x[*j]).sum();
            let v = match c.sense {
                Sense::Le => (lhs - c.rhs).max(0.0),
                Sense::Ge => (c.rhs - lhs).max(0.0),
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for j in 0..x.len() {
            worst = worst.max(self.lower[j] - x[j]);
            if let Some(u) = self.upper[j] {
                worst = worst.max(x[j] - u);
            }
        }
        worst
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn var_name(&self, j: usize) -> String {
        self.names
            .as_ref()
            .and_then(|n| n.get(j).cloned())
            .unwrap_or_else(|| format!("x{j}"))
    }

    /// CPLEX-style LP text, readable by common external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::new();
        let term = |s: &mut String, a: f64, name: &str, first: bool| {
            if first {
                let _ = write!(s, " {a} {name}");
            } else if a < 0.0 {
                let _ = write!(s, " - {} {name}", -a);
            } else {
                let _ = write!(s, " + {a} {name}");
            }
        };
        s.push_str("\\ flat-norm linear program\nMinimize\n obj:");
        let mut first = true;
        for (j, &c) in self.cost.iter().enumerate() {
            if c != 0.0 {
                term(&mut s, c, &self.var_name(j), first);
                first = false;
            }
        }
        if first {
            s.push_str(" 0 x0");
        }
        s.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(s, " c{i}:");
            let mut first = true;
            for &(j, a) in &c.coeffs {
                term(&mut s, a, &self.var_name(j), first);
                first = false;
            }
            if first {
                s.push_str(" 0 x0");
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", c.rhs);
        }
        s.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            match self.upper[j] {
                Some(u) => {
                    let _ = writeln!(s, " {} <= {} <= {u}", self.lower[j], self.var_name(j));
                }
                None => {
                    let _ = writeln!(s, " {} >= {}", self.var_name(j), self.lower[j]);
                }
            }
        }
        s.push_str("End\n");
        s
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.solve_with(&SolverOptions::default())
    }

    pub fn solve_with(&self, opts: &SolverOptions) -> Result<LpSolution> {
        self.validate()?;
        let n = self.num_vars();
        // shift x = l + y, y ≥ 0; upper bounds become rows y_j ≤ u_j − l_j
        let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = self
            .constraints
            .iter()
            .map(|c| {
                let shift: f64 = c.coeffs.iter().map(|(j, a)| a * self.lower[*j]).sum();
                (c.coeffs.clone(), c.sense, c.rhs - shift)
            })
            .collect();
        for j in 0..n {
            if let Some(u) = self.upper[j] {
                rows.push((vec![(j, 1.0)], Sense::Le, u - self.lower[j]));
            }
        }
        let mut tab = Tableau::build(n, &self.cost, &rows, opts);
        let status = tab.run()?;
        let mut x = vec![0.0; n];
        if status == LpStatus::Optimal {
            let y = tab.primal(n);
            for j in 0..n {
                x[j] = self.lower[j] + y[j];
            }
        }
        let residual = if status == LpStatus::Optimal { self.residual(&x) } else { f64::NAN };
        let status = if status == LpStatus::Optimal && !(residual <= opts.feasibility) {
            LpStatus::Numerical
        } else {
            status
        };
        let objective = match status {
            LpStatus::Optimal => self.objective(&x),
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        Ok(LpSolution {
            status,
            objective,
            x,
            iterations: tab.iterations,
            residual,
        })
    }
}

struct Tableau {
    /// Constraint rows `[A | b]`, `m × (cols + 1)`.
    a: DMatrix<f64>,
    /// Original standard-form columns, for the final basis solve.
    original: DMatrix<f64>,
    rhs: DVector<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    artificial_start: usize,
    opts: SolverOptions,
    iterations: usize,
}

impl Tableau {
    fn build(n: usize, cost: &[f64], rows: &[(Vec<(usize, f64)>, Sense, f64)], opts: &SolverOptions) -> Self {
        let m = rows.len();
        let slack_count = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let mut dense = DMatrix::zeros(m, n + slack_count);
        let mut b = DVector::zeros(m);
        let mut k = n;
        for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
            let flip = if *rhs < 0.0 { -1.0 } else { 1.0 };
            for &(j, v) in coeffs {
                dense[(i, j)] += flip * v;
            }
            match sense {
                Sense::Le => {
                    dense[(i, k)] = flip;
                    k += 1;
                }
                Sense::Ge => {
                    dense[(i, k)] = -flip;
                    k += 1;
                }
                Sense::Eq => {}
            }
            b[i] = flip * rhs;
        }
        let structural = n + slack_count;
        // crash basis: a column that is +e_i with zero elsewhere can start
        // basic in row i; remaining rows get artificials
        let mut basis = vec![usize::MAX; m];
        for j in 0..structural {
            let col = dense.column(j);
            let nz: Vec<usize> = (0..m).filter(|&i| col[i] != 0.0).collect();
            if nz.len() == 1 && col[nz[0]] > 0.0 && basis[nz[0]] == usize::MAX {
                basis[nz[0]] = j;
            }
        }
        let missing: Vec<usize> = (0..m).filter(|&i| basis[i] == usize::MAX).collect();
        let cols = structural + missing.len();
        let mut a = DMatrix::zeros(m, cols + 1);
        a.view_mut((0, 0), (m, structural)).copy_from(&dense);
        for (k, &i) in missing.iter().enumerate() {
            a[(i, structural + k)] = 1.0;
            basis[i] = structural + k;
        }
        for i in 0..m {
            // scale crash-basis rows so the basic entry is 1
            let piv = a[(i, basis[i])];
            if piv != 1.0 {
                let inv = 1.0 / piv;
                a.row_mut(i).iter_mut().for_each(|x| *x *= inv);
                b[i] *= inv;
            }
            a[(i, cols)] = b[i];
        }
        let mut full_cost = vec![0.0; cols];
        full_cost[..n].copy_from_slice(cost);
        Self {
            original: a.columns(0, structural).into_owned(),
            rhs: a.column(cols).into_owned(),
            a,
            cost: full_cost,
            basis,
            cols,
            artificial_start: structural,
            opts: *opts,
            iterations: 0,
        }
    }

    fn reduced_costs(&self, c: &[f64], allowed: usize) -> Vec<f64> {
        let m = self.a.nrows();
        let mut d: Vec<f64> = c[..allowed].to_vec();
        for i in 0..m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = self.a.row(i);
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * row[j];
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let m = self.a.nrows();
        let width = self.cols + 1;
        let inv = 1.0 / self.a[(r, q)];
        for j in 0..width {
            self.a[(r, j)] *= inv;
        }
        self.a[(r, q)] = 1.0;
        let pivot_row: Vec<f64> = self.a.row(r).iter().copied().collect();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.a[(i, q)];
            if f != 0.0 {
                for j in 0..width {
                    self.a[(i, j)] -= f * pivot_row[j];
                }
                self.a[(i, q)] = 0.0;
            }
        }
        self.basis[r] = q;
        self.iterations += 1;
    }

    /// Runs simplex iterations for cost `c` over the first `allowed`
    /// columns.
    fn optimize(&mut self, c: &[f64], allowed: usize) -> Result<LpStatus> {
        let tol = self.opts.tolerance;
        let m = self.a.nrows();
        let rhs_col = self.cols;
        let mut degenerate_run = 0usize;
        let mut d = self.reduced_costs(c, allowed);
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Ok(LpStatus::IterationLimit);
            }
            let bland = self.opts.rule == PivotRule::Bland || degenerate_run >= self.opts.degenerate_switch;
            let entering = if bland {
                (0..allowed).find(|&j| d[j] < -tol)
            } else {
                (0..allowed)
                    .filter(|&j| d[j] < -tol)
                    .min_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)))
            };
            let Some(q) = entering else {
                return Ok(LpStatus::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let aiq = self.a[(i, q)];
                if aiq > tol {
                    let ratio = self.a[(i, rhs_col)].max(0.0) / aiq;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 * lr.abs().max(1.0)
                                || (ratio <= lr + 1e-12 * lr.abs().max(1.0) && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            degenerate_run = if ratio <= tol { degenerate_run + 1 } else { 0 };
            self.pivot(r, q);
            // update reduced costs with the new pivot row
            let dq = d[q];
            if dq != 0.0 {
                let row = self.a.row(r);
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= dq * row[j];
                }
            }
            d[q] = 0.0;
            if self.iterations % 64 == 0 {
                d = self.reduced_costs(c, allowed);
            }
        }
    }

    fn run(&mut self) -> Result<LpStatus> {
        let m = self.a.nrows();
        if self.artificial_start < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            phase1[self.artificial_start..].iter_mut().for_each(|c| *c = 1.0);
            let st = self.optimize(&phase1, self.cols)?;
            if st == LpStatus::IterationLimit {
                return Ok(st);
            }
            let infeas: f64 = (0..m)
                .filter(|&i| self.basis[i] >= self.artificial_start)
                .map(|i| self.a[(i, self.cols)])
                .sum();
            let scale = self.rhs.iter().fold(1.0f64, |s, b| s.max(b.abs()));
            if infeas > 1e-9 * scale {
                return Ok(LpStatus::Infeasible);
            }
            // drive remaining (zero-level) artificials out of the basis
            for i in 0..m {
                if self.basis[i] >= self.artificial_start {
                    if let Some(q) = (0..self.artificial_start).find(|&j| self.a[(i, j)].abs() > 1e-9) {
                        self.pivot(i, q);
                    }
                }
            }
        }
        let cost = self.cost.clone();
        self.optimize(&cost, self.artificial_start)
    }

    /// Primal values of the first `n` variables, recomputed from the final
    /// basis with an LU solve on the original columns.
    fn primal(&self, n: usize) -> Vec<f64> {
        let m = self.a.nrows();
        let mut x = vec![0.0; self.cols];
        let basic: Vec<(usize, usize)> = (0..m)
            .filter(|&i| self.basis[i] < self.artificial_start)
            .map(|i| (i, self.basis[i]))
            .collect();
        if basic.len() == m {
            let bmat = DMatrix::from_fn(m, m, |i, k| self.original[(i, basic[k].1)]);
            if let Some(sol) = bmat.lu().solve(&self.rhs) {
                for (k, &(_, j)) in basic.iter().enumerate() {
                    x[j] = sol[k].max(0.0);
                }
                return x[..n].to_vec();
            }
        }
        for &(i, j) in &basic {
            x[j] = self.a[(i, self.cols)].max(0.0);
        }
        x[..n].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lower_bound_row() {
        let mut p = LpProblem::new(1);
        p.cost = vec![1.0];
        p.add_constraint(vec![(0, 1.0)], Sense::Ge, 3.0);
        let s = p.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn simplex_equality() {
        let mut p = LpProblem::new(2);
        p.cost = vec![1.0, 1.0];
        p.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        let s = p.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn statuses_are_distinguished() {
        let mut inf = LpProblem::new(1);
        inf.add_constraint(vec![(0, 1.0)], Sense::Le, -1.0);
        assert_eq!(inf.solve().unwrap().status, LpStatus::Infeasible);
        let mut unb = LpProblem::new(1);
        unb.cost = vec![-1.0];
        unb.add_constraint(vec![(0, 1.0)], Sense::Ge, 0.0);
        assert_eq!(unb.solve().unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_and_textbook_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → 36 at (2, 6)
        let mut p = LpProblem::new(2);
        p.cost = vec![-3.0, -5.0];
        p.upper = vec![Some(4.0), None];
        p.add_constraint(vec![(1, 2.0)], Sense::Le, 12.0);
        p.add_constraint(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0);
        for rule in [PivotRule::Bland, PivotRule::DantzigBland] {
            let s = p.solve_with(&SolverOptions { rule, ..Default::default() }).unwrap();
            assert_abs_diff_eq!(s.objective, -36.0, epsilon = 1e-10);
            assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(s.x[1], 6.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn lp_text_export() {
        let mut p = LpProblem::new(2);
        p.cost = vec![1.0, -2.0];
        p.add_constraint(vec![(0, 1.0), (1, -1.0)], Sense::Eq, 0.5);
        let t = p.to_lp_format();
        assert!(t.contains("Minimize\n obj: 1 x0 - 2 x1"));
        assert!(t.contains(" c0: 1 x0 - 1 x1 = 0.5"));
        assert!(t.trim_end().ends_with("End"));
    }
}
