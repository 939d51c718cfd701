//! Dense two-phase primal simplex on an explicit tableau.
//!
//! Pricing is Dantzig's rule with a Harris two-pass ratio test. After
//! `bland_after` consecutive pivots without objective progress the solver
//! switches to Bland's rule until the objective moves again. The optimal basis
//! is re-solved against the original rows with an LU factorization so the
//! returned point does not carry the tableau's accumulated rounding.

use alloc::vec;
use alloc::vec::Vec;

use super::{LpProblem, LpSolution, LpSolver, LpStatus, SolveOptions};
use crate::matrix::{Lu, Matrix};

const PIVOT_TOL: f64 = 1e-9;

/// The built-in solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSimplex;

impl LpSolver for DenseSimplex {
    fn solve(&self, problem: &LpProblem, options: &SolveOptions) -> LpSolution {
        if problem.validate().is_err() {
            return LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; problem.n_vars()],
                objective: f64::NAN,
                max_residual: f64::INFINITY,
                iterations: 0,
            };
        }
        let form = StandardForm::build(problem);
        let mut tableau = Tableau::new(&form);
        let budget = options.max_iters.unwrap_or(20 * (form.rows.len() + form.n_cols) + 1000);

        let status = tableau.run(&form, options, budget);
        let iterations = tableau.iterations;
        let x_std = match status {
            LpStatus::Optimal => {
                let raw = tableau.primal();
                refine(&form, &tableau).unwrap_or(raw)
            }
            _ => tableau.primal(),
        };
        let x = form.recover(&x_std, problem);
        LpSolution { status, objective: problem.objective_value(&x), max_residual: problem.max_residual(&x), x, iterations }
    }
}

/// How an original variable maps onto non-negative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lower + y`
    Shifted { col: usize, lower: f64 },
    /// `x = upper - y`
    Mirrored { col: usize, upper: f64 },
    /// `x = y_plus - y_minus`
    Free { plus: usize, minus: usize },
}

/// `A y = b, y >= 0` with `b >= 0`; every row carries either a `+1` slack that
/// can start in the basis or needs an artificial.
struct StandardForm {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    costs: Vec<f64>,
    /// structural plus slack columns
    n_cols: usize,
    /// column of a `+1` slack usable as initial basic variable, per row
    start_slack: Vec<Option<usize>>,
    maps: Vec<VarMap>,
}

impl StandardForm {
    fn build(problem: &LpProblem) -> Self {
        let mut maps = Vec::with_capacity(problem.n_vars());
        let mut costs = Vec::new();
        for j in 0..problem.n_vars() {
            let (lo, hi, c) = (problem.lower[j], problem.upper[j], problem.objective[j]);
            let map = if lo.is_finite() {
                costs.push(c);
                VarMap::Shifted { col: costs.len() - 1, lower: lo }
            } else if hi.is_finite() {
                costs.push(-c);
                VarMap::Mirrored { col: costs.len() - 1, upper: hi }
            } else {
                costs.push(c);
                costs.push(-c);
                VarMap::Free { plus: costs.len() - 2, minus: costs.len() - 1 }
            };
            maps.push(map);
        }

        let map_row = |terms: &[(usize, f64)], rhs: f64| {
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len() + 1);
            let mut b = rhs;
            for &(j, a) in terms {
                match maps[j] {
                    VarMap::Shifted { col, lower } => {
                        out.push((col, a));
                        b -= a * lower;
                    }
                    VarMap::Mirrored { col, upper } => {
                        out.push((col, -a));
                        b -= a * upper;
                    }
                    VarMap::Free { plus, minus } => {
                        out.push((plus, a));
                        out.push((minus, -a));
                    }
                }
            }
            (out, b)
        };

        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut has_slack = Vec::new();
        for row in &problem.eq_rows {
            let (terms, b) = map_row(&row.terms, row.rhs);
            rows.push(terms);
            rhs.push(b);
            has_slack.push(false);
        }
        for row in &problem.le_rows {
            let (terms, b) = map_row(&row.terms, row.rhs);
            rows.push(terms);
            rhs.push(b);
            has_slack.push(true);
        }
        for (j, map) in maps.iter().enumerate() {
            if let VarMap::Shifted { col, lower } = *map {
                let hi = problem.upper[j];
                if hi.is_finite() {
                    rows.push(vec![(col, 1.0)]);
                    rhs.push(hi - lower);
                    has_slack.push(true);
                }
            }
        }

        let mut n_cols = costs.len();
        let mut start_slack = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter_mut().enumerate() {
            let slack = if has_slack[i] {
                row.push((n_cols, 1.0));
                costs.push(0.0);
                n_cols += 1;
                Some(n_cols - 1)
            } else {
                None
            };
            if rhs[i] < 0.0 {
                rhs[i] = -rhs[i];
                row.iter_mut().for_each(|t| t.1 = -t.1);
                start_slack.push(None);
            } else {
                start_slack.push(slack);
            }
        }

        StandardForm { rows, rhs, costs, n_cols, start_slack, maps }
    }

    fn recover(&self, y: &[f64], problem: &LpProblem) -> Vec<f64> {
        self.maps
            .iter()
            .enumerate()
            .map(|(j, map)| {
                let v = match *map {
                    VarMap::Shifted { col, lower } => lower + y[col],
                    VarMap::Mirrored { col, upper } => upper - y[col],
                    VarMap::Free { plus, minus } => y[plus] - y[minus],
                };
                v.clamp(problem.lower[j], problem.upper[j])
            })
            .collect()
    }
}

struct Tableau {
    m: usize,
    width: usize,
    /// first artificial column; columns below are structural or slack
    n_real: usize,
    t: Vec<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
    obj: f64,
    basis: Vec<usize>,
    /// rows found redundant after phase one
    dead: Vec<bool>,
    iterations: usize,
    scratch: Vec<f64>,
    nonzeros: Vec<usize>,
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn new(form: &StandardForm) -> Self {
        let m = form.rows.len();
        let n_real = form.n_cols;
        let n_art = form.start_slack.iter().filter(|s| s.is_none()).count();
        let width = n_real + n_art;
        let mut t = vec![0.0; m * width];
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n_real;
        for (i, row) in form.rows.iter().enumerate() {
            for &(j, a) in row {
                t[i * width + j] += a;
            }
            match form.start_slack[i] {
                Some(s) => basis.push(s),
                None => {
                    t[i * width + next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
        }
        Tableau {
            m,
            width,
            n_real,
            t,
            b: form.rhs.clone(),
            d: vec![0.0; width],
            obj: 0.0,
            basis,
            dead: vec![false; m],
            iterations: 0,
            scratch: vec![0.0; width],
            nonzeros: Vec::with_capacity(width),
        }
    }

    fn run(&mut self, form: &StandardForm, options: &SolveOptions, budget: usize) -> LpStatus {
        let bmax = self.b.iter().fold(0.0f64, |a, &x| a.max(x.abs()));

        if self.width > self.n_real {
            // phase one: minimize the sum of artificials
            self.d.iter_mut().for_each(|x| *x = 0.0);
            self.obj = 0.0;
            for j in self.n_real..self.width {
                self.d[j] = 1.0;
            }
            for i in 0..self.m {
                if self.basis[i] >= self.n_real {
                    self.obj += self.b[i];
                    for j in 0..self.width {
                        self.d[j] -= self.t[i * self.width + j];
                    }
                }
            }
            match self.iterate(self.width, options, budget, 1.0) {
                Phase::IterationLimit => return LpStatus::IterationLimit,
                Phase::Optimal | Phase::Unbounded => {}
            }
            let infeasibility: f64 = (0..self.m).filter(|&i| self.basis[i] >= self.n_real).map(|i| self.b[i]).sum();
            if infeasibility > options.tol * (1.0 + bmax) {
                return LpStatus::Infeasible;
            }
            self.expel_artificials();
        }

        // phase two on the real columns only
        let cmax = form.costs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        for j in 0..self.width {
            self.d[j] = if j < self.n_real { form.costs[j] } else { 0.0 };
        }
        self.obj = 0.0;
        for i in 0..self.m {
            let bv = self.basis[i];
            let cb = if bv < self.n_real { form.costs[bv] } else { 0.0 };
            if cb != 0.0 {
                self.obj += cb * self.b[i];
                let row = &self.t[i * self.width..(i + 1) * self.width];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            let bv = self.basis[i];
            self.d[bv] = 0.0;
        }
        let remaining = budget.saturating_sub(self.iterations);
        match self.iterate(self.n_real, options, self.iterations + remaining, cmax.max(1.0)) {
            Phase::Optimal => LpStatus::Optimal,
            Phase::Unbounded => LpStatus::Unbounded,
            Phase::IterationLimit => LpStatus::IterationLimit,
        }
    }

    /// Pivots artificials that remain basic at zero level out of the basis;
    /// rows without any usable real entry are redundant and retired.
    fn expel_artificials(&mut self) {
        for i in 0..self.m {
            if self.basis[i] < self.n_real {
                continue;
            }
            let row = &self.t[i * self.width..i * self.width + self.n_real];
            let best = row.iter().enumerate().filter(|(j, _)| !self.is_basic(*j)).map(|(j, a)| (j, a.abs())).fold(
                None,
                |best: Option<(usize, f64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                },
            );
            match best {
                Some((j, a)) if a > 1e-7 => self.pivot(i, j, self.width),
                _ => self.dead[i] = true,
            }
        }
    }

    fn is_basic(&self, j: usize) -> bool {
        self.basis.contains(&j)
    }

    fn iterate(&mut self, active: usize, options: &SolveOptions, budget: usize, cost_scale: f64) -> Phase {
        let dj_tol = 1e-12 * cost_scale;
        let mut stalled = 0usize;
        loop {
            if self.iterations >= budget {
                return Phase::IterationLimit;
            }
            let bland = stalled >= options.bland_after;
            let entering = if bland {
                (0..active).find(|&j| self.d[j] < -dj_tol)
            } else {
                let mut best = None;
                let mut best_d = -dj_tol;
                for j in 0..active {
                    if self.d[j] < best_d {
                        best_d = self.d[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return Phase::Optimal;
            };
            let Some(r) = self.ratio_test(c, bland, options.tol) else {
                return Phase::Unbounded;
            };
            let before = self.obj;
            self.pivot(r, c, active);
            self.iterations += 1;
            if before - self.obj > 1e-13 * (1.0 + before.abs()) {
                stalled = 0;
            } else {
                stalled += 1;
            }
        }
    }

    fn ratio_test(&self, c: usize, bland: bool, tol: f64) -> Option<usize> {
        let w = self.width;
        let candidates = (0..self.m).filter(|&i| !self.dead[i] && self.t[i * w + c] > PIVOT_TOL);
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for i in candidates {
                let ratio = self.b[i].max(0.0) / self.t[i * w + c];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 * (1.0 + br) || (ratio <= br + 1e-12 * (1.0 + br) && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            return best.map(|b| b.0);
        }
        let mut theta_max = f64::INFINITY;
        for i in candidates.clone() {
            theta_max = theta_max.min((self.b[i].max(0.0) + tol) / self.t[i * w + c]);
        }
        if !theta_max.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for i in candidates {
            let a = self.t[i * w + c];
            if self.b[i].max(0.0) / a <= theta_max {
                best = match best {
                    Some((bi, ba)) if ba > a || (ba == a && self.basis[bi] < self.basis[i]) => Some((bi, ba)),
                    _ => Some((i, a)),
                };
            }
        }
        best.map(|b| b.0)
    }

    fn pivot(&mut self, r: usize, c: usize, active: usize) {
        let w = self.width;
        let inv = 1.0 / self.t[r * w + c];
        {
            let row = &mut self.t[r * w..r * w + active];
            row.iter_mut().for_each(|v| *v *= inv);
            row[c] = 1.0;
        }
        self.b[r] *= inv;
        if self.b[r] < 0.0 && self.b[r] > -1e-9 {
            self.b[r] = 0.0;
        }
        self.scratch[..active].copy_from_slice(&self.t[r * w..r * w + active]);
        self.nonzeros.clear();
        for (j, &v) in self.scratch[..active].iter().enumerate() {
            if v != 0.0 {
                self.nonzeros.push(j);
            }
        }
        let sparse = self.nonzeros.len() * 3 < active;
        let br = self.b[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..i * w + active];
            if sparse {
                for &j in &self.nonzeros {
                    row[j] -= f * self.scratch[j];
                }
            } else {
                for (v, &p) in row.iter_mut().zip(&self.scratch[..active]) {
                    *v -= f * p;
                }
            }
            row[c] = 0.0;
            self.b[i] -= f * br;
            if self.b[i] < 0.0 && self.b[i] > -1e-9 {
                self.b[i] = 0.0;
            }
        }
        let dc = self.d[c];
        if dc != 0.0 {
            self.obj += dc * br;
            for &j in &self.nonzeros {
                self.d[j] -= dc * self.scratch[j];
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn primal(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.n_real];
        for i in 0..self.m {
            if !self.dead[i] && self.basis[i] < self.n_real {
                y[self.basis[i]] = self.b[i].max(0.0);
            }
        }
        y
    }
}

/// Recomputes the basic solution directly from the original rows.
fn refine(form: &StandardForm, tableau: &Tableau) -> Option<Vec<f64>> {
    let live: Vec<usize> = (0..tableau.m).filter(|&i| !tableau.dead[i]).collect();
    let n = live.len();
    let mut position = vec![usize::MAX; form.n_cols];
    for (p, &i) in live.iter().enumerate() {
        let bv = tableau.basis[i];
        if bv >= form.n_cols {
            return None;
        }
        position[bv] = p;
    }
    let mut basis = Matrix::zeros(n, n);
    let mut rhs = Vec::with_capacity(n);
    for (r, &i) in live.iter().enumerate() {
        for &(j, a) in &form.rows[i] {
            if position[j] != usize::MAX {
                basis[(r, position[j])] += a;
            }
        }
        rhs.push(form.rhs[i]);
    }
    let lu = Lu::factor(basis).ok()?;
    let xb = lu.solve(&rhs);
    if xb.iter().any(|v| !v.is_finite() || *v < -1e-7) {
        return None;
    }
    let mut y = vec![0.0; form.n_cols];
    for (p, &i) in live.iter().enumerate() {
        y[tableau.basis[i]] = xb[p].max(0.0);
    }
    // dead rows must still hold at the refined point
    for (i, row) in form.rows.iter().enumerate() {
        if tableau.dead[i] {
            let act: f64 = row.iter().map(|&(j, a)| a * y[j]).sum();
            if (act - form.rhs[i]).abs() > 1e-7 * (1.0 + form.rhs[i].abs()) {
                return None;
            }
        }
    }
    Some(y)
}
