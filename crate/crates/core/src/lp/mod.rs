//! Linear programming: a problem container with sparse rows, and a dense
//! two-phase primal simplex behind the [`LpSolver`] trait.
//!
//! Problems are always minimizations of `c . x` subject to equality rows,
//! `<=` rows and per-variable bounds.

mod simplex;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub use simplex::DenseSimplex;

/// A sparse row: `sum(coef * x[var]) (=|<=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// Affine expression over problem variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn term(mut self, var: usize, coef: f64) -> Self {
        self.terms.push((var, coef));
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    eq_rows: Vec<Constraint>,
    le_rows: Vec<Constraint>,
}

impl LpProblem {
    /// `n_vars` variables with zero cost and bounds `[0, inf)`.
    pub fn new(n_vars: usize) -> Self {
        LpProblem {
            objective: vec![0.0; n_vars],
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            eq_rows: Vec::new(),
            le_rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Appends `n` non-negative variables with zero cost, returning the first index.
    pub fn add_vars(&mut self, n: usize) -> usize {
        let first = self.n_vars();
        for _ in 0..n {
            self.add_var(0.0, 0.0, f64::INFINITY);
        }
        first
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_eq(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.eq_rows.push(Constraint { terms, rhs });
    }

    pub fn add_le(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.le_rows.push(Constraint { terms, rhs });
    }

    pub fn add_ge(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        let terms = terms.into_iter().map(|(j, a)| (j, -a)).collect();
        self.le_rows.push(Constraint { terms, rhs: -rhs });
    }

    /// Adds `weight * |expr|` to the objective through a split `expr = e_plus - e_minus`.
    ///
    /// Returns the indices of `(e_plus, e_minus)`.
    pub fn add_abs_deviation(&mut self, expr: &LinExpr, weight: f64) -> Result<(usize, usize)> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::input("deviation weight must be finite and non-negative"));
        }
        let plus = self.add_var(weight, 0.0, f64::INFINITY);
        let minus = self.add_var(weight, 0.0, f64::INFINITY);
        let mut terms = expr.terms.clone();
        terms.push((plus, -1.0));
        terms.push((minus, 1.0));
        self.add_eq(terms, -expr.constant);
        Ok((plus, minus))
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn eq_rows(&self) -> &[Constraint] {
        &self.eq_rows
    }

    pub fn le_rows(&self) -> &[Constraint] {
        &self.le_rows
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.eq_rows {
            worst = worst.max((row.activity(x) - row.rhs).abs());
        }
        for row in &self.le_rows {
            worst = worst.max(row.activity(x) - row.rhs);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::input(alloc::format!("invalid bounds on variable {j}")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("objective coefficients must be finite"));
        }
        for row in self.eq_rows.iter().chain(&self.le_rows) {
            if !row.rhs.is_finite() || row.terms.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                return Err(Error::input("constraint rows must be finite and reference existing variables"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_residual: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Feasibility tolerance on rows and bounds.
    pub tol: f64,
    /// Pivot budget across both phases; `None` scales with problem size.
    pub max_iters: Option<usize>,
    /// Consecutive non-improving pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-9, max_iters: None, bland_after: 50 }
    }
}

/// A backend able to solve [`LpProblem`]s.
pub trait LpSolver {
    fn solve(&self, problem: &LpProblem, options: &SolveOptions) -> LpSolution;
}

/// Solves with the built-in [`DenseSimplex`].
pub fn solve(problem: &LpProblem, options: &SolveOptions) -> LpSolution {
    DenseSimplex.solve(problem, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        // min x s.t. x >= 3
        let mut lp = LpProblem::new(1);
        lp.set_cost(0, 1.0);
        lp.add_ge(vec![(0, 1.0)], 3.0);
        let sol = solve(&lp, &SolveOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert!((sol.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_edge() {
        // min -x - y s.t. x + y <= 1
        let mut lp = LpProblem::new(2);
        lp.set_cost(0, -1.0);
        lp.set_cost(1, -1.0);
        lp.add_le(vec![(0, 1.0), (1, 1.0)], 1.0);
        let sol = solve(&lp, &SolveOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-12);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LpProblem::new(1);
        lp.add_le(vec![(0, 1.0)], -1.0);
        assert_eq!(solve(&lp, &SolveOptions::default()).status, LpStatus::Infeasible);

        let mut lp = LpProblem::new(2);
        lp.set_cost(0, -1.0);
        lp.add_le(vec![(0, 1.0), (1, -1.0)], 1.0);
        assert_eq!(solve(&lp, &SolveOptions::default()).status, LpStatus::Unbounded);
    }

    #[test]
    fn abs_deviation_of_free_variable() {
        // min |x - 5| with x free and x <= 2  ->  x = 2, objective 3
        let mut lp = LpProblem::new(0);
        let x = lp.add_var(0.0, f64::NEG_INFINITY, 2.0);
        let expr = LinExpr::new().term(x, 1.0).plus_constant(-5.0);
        let (p, m) = lp.add_abs_deviation(&expr, 1.0).unwrap();
        let sol = solve(&lp, &SolveOptions::default());
        assert!(sol.is_optimal());
        assert!((sol.x[x] - 2.0).abs() < 1e-12);
        assert!((sol.x[p] + sol.x[m] - 3.0).abs() < 1e-12);
        assert!((sol.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_deviation_costs_nothing() {
        let mut lp = LpProblem::new(1);
        lp.set_bounds(0, 7.0, 7.0);
        lp.add_abs_deviation(&LinExpr::new().term(0, 1.0), 0.0).unwrap();
        let sol = solve(&lp, &SolveOptions::default());
        assert!(sol.is_optimal());
        assert_eq!(sol.objective, 0.0);
        assert!(lp.add_abs_deviation(&LinExpr::new(), -1.0).is_err());
    }

    #[test]
    fn heavier_deviation_wins_the_conflict() {
        // min 1*|x - 0| + 10*|x - 1|  ->  x = 1
        let mut lp = LpProblem::new(1);
        lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        lp.add_abs_deviation(&LinExpr::new().term(0, 1.0), 1.0).unwrap();
        lp.add_abs_deviation(&LinExpr::new().term(0, 1.0).plus_constant(-1.0), 10.0).unwrap();
        let sol = solve(&lp, &SolveOptions::default());
        assert!(sol.is_optimal());
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_upper_bounds() {
        // min -x0 - 2 x1 s.t. x0 + x1 = 3, x1 <= 2
        let mut lp = LpProblem::new(2);
        lp.set_cost(0, -1.0);
        lp.set_cost(1, -2.0);
        lp.set_bounds(1, 0.0, 2.0);
        lp.add_eq(vec![(0, 1.0), (1, 1.0)], 3.0);
        let sol = solve(&lp, &SolveOptions::default());
        assert!(sol.is_optimal());
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LpProblem::new(2);
        lp.set_cost(0, 1.0);
        lp.add_eq(vec![(0, 1.0), (1, 1.0)], 1.0);
        lp.add_eq(vec![(0, 2.0), (1, 2.0)], 2.0);
        let sol = solve(&lp, &SolveOptions::default());
        assert!(sol.is_optimal());
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_problem_is_reported_not_panicking() {
        let mut lp = LpProblem::new(1);
        lp.add_le(vec![(3, 1.0)], 1.0);
        assert_eq!(solve(&lp, &SolveOptions::default()).status, LpStatus::Infeasible);
    }
}
