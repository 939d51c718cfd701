//! Iterative generalized model with a lognormal increment per strike.
//!
//! Expiry `j` prices are `sum_p Q_j[p] Call(K_j[p], k, eta V_j[p])` over all
//! strike paths `p = (i_j, ..., i_1)`, where `K_j`, `V_j` and `Q_j` are the
//! flattened outer products of strikes, outer sums of variance increments and
//! outer products of densities. The newest index runs fastest. Densities are
//! fitted one expiry at a time with earlier ones held fixed.

use alloc::vec;
use alloc::vec::Vec;

use crate::blackscholes::call_unchecked;
use crate::calibration::{solve_blocks, Block, CalibConfig, Previous};
use crate::error::{Error, Result};
use crate::lp::LpSolution;
use crate::market_data::{ExpirySlice, MarketSnapshot};
use crate::matrix::Matrix;
use crate::noarb::CallSurface;
use crate::time_interp::{AlphaMode, TimeInterpolator};

/// Default limit on flattened tensor entries.
pub const DEFAULT_TENSOR_CAP: usize = 10_000_000;

/// `(a[p] * b[i])` flattened with `i` fastest.
pub fn outer_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// `(a[p] + b[i])` flattened with `i` fastest.
pub fn outer_sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x + y)).collect()
}

/// Accepted densities and the path tensors they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct GnrState {
    /// Products of strikes along each path.
    pub strikes: Vec<f64>,
    /// Sums of variance increments along each path.
    pub variances: Vec<f64>,
    /// Products of densities along each path.
    pub weights: Vec<f64>,
    pub grids: Vec<Vec<f64>>,
    pub increments: Vec<Vec<f64>>,
    pub densities: Vec<Vec<f64>>,
    pub cap: usize,
}

impl GnrState {
    /// The state before the first expiry: a single path at 1 with no variance.
    pub fn new(cap: usize) -> Self {
        GnrState {
            strikes: vec![1.0],
            variances: vec![0.0],
            weights: vec![1.0],
            grids: Vec::new(),
            increments: Vec::new(),
            densities: Vec::new(),
            cap,
        }
    }

    pub fn paths(&self) -> usize {
        self.strikes.len()
    }

    pub fn depth(&self) -> usize {
        self.densities.len()
    }

    /// Fails if adding a grid of `n` strikes would exceed the cap.
    pub fn check_capacity(&self, n: usize) -> Result<usize> {
        let required = self.paths().saturating_mul(n);
        if required > self.cap {
            return Err(Error::TensorCap { required, cap: self.cap });
        }
        Ok(required)
    }

    /// Appends an expiry with strikes `grid`, increments `dv` and density `q`.
    pub fn extend(&mut self, grid: &[f64], dv: &[f64], q: &[f64]) -> Result<()> {
        if grid.is_empty() || dv.len() != grid.len() || q.len() != grid.len() {
            return Err(Error::input("grid, increments and density differ in length"));
        }
        if dv.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::input("variance increments must be finite and non-negative"));
        }
        self.check_capacity(grid.len())?;
        self.strikes = outer_product(&self.strikes, grid);
        self.variances = outer_sum(&self.variances, dv);
        self.weights = outer_product(&self.weights, q);
        self.grids.push(grid.to_vec());
        self.increments.push(dv.to_vec());
        self.densities.push(q.to_vec());
        Ok(())
    }

    /// `sum_p Q[p] Call(K[p], k, eta V[p])` for the current depth.
    pub fn price(&self, k: f64, eta: f64) -> f64 {
        path_price(&self.strikes, &self.variances, &self.weights, k, eta)
    }

    /// Kernel of the next expiry: entry `(l, i)` prices strike `ks[l]` given
    /// all mass on `grid[i]` at the new step.
    pub fn step_kernel(&self, grid: &[f64], dv: &[f64], ks: &[f64], eta: f64) -> Matrix {
        Matrix::from_fn(ks.len(), grid.len(), |l, i| {
            self.strikes
                .iter()
                .zip(&self.variances)
                .zip(&self.weights)
                .filter(|(_, &w)| w != 0.0)
                .map(|((&x, &v), &w)| w * call_unchecked(grid[i] * x, ks[l], eta * (dv[i] + v)))
                .sum()
        })
    }

    /// Payoff kernel `sum_p Q[p] (grid[i] K[p] - grid[l])^+`.
    pub fn step_payoff(&self, grid: &[f64]) -> Matrix {
        Matrix::from_fn(grid.len(), grid.len(), |l, i| {
            self.strikes.iter().zip(&self.weights).map(|(&x, &w)| w * (grid[i] * x - grid[l]).max(0.0)).sum()
        })
    }

    /// Previous intrinsic prices `sum_p Q[p] (K[p] - grid[l])^+`.
    pub fn previous_payoff(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&k| self.strikes.iter().zip(&self.weights).map(|(&x, &w)| w * (x - k).max(0.0)).sum()).collect()
    }
}

fn path_price(strikes: &[f64], variances: &[f64], weights: &[f64], k: f64, eta: f64) -> f64 {
    let p: f64 =
        strikes.iter().zip(variances).zip(weights).filter(|(_, &w)| w != 0.0).map(|((&x, &v), &w)| w * call_unchecked(x, k, eta * v)).sum();
    p.clamp((1.0 - k).max(0.0), 1.0)
}

/// Fits the density of the next expiry and returns it with the LP outcome.
/// Expiry indices in errors count from zero.
pub fn gnr_fit_step(state: &GnrState, slice: &ExpirySlice, dv: &[f64], config: &CalibConfig) -> Result<(Vec<f64>, LpSolution)> {
    config.validate()?;
    let grid = &slice.model_strikes;
    if dv.len() != grid.len() {
        return Err(Error::input("one variance increment per model strike is required"));
    }
    if dv.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::input("variance increments must be finite and non-negative"));
    }
    state.check_capacity(grid.len())?;
    let ks = slice.market_strikes();
    let kernel = state.step_kernel(grid, dv, &ks, config.eta);
    let payoff = state.step_payoff(grid);
    let block = Block {
        strikes: grid,
        kernel: &kernel,
        quotes: &slice.quotes,
        payoff: &payoff,
        previous: Previous::Fixed(state.previous_payoff(grid)),
    };
    let expiry = state.depth();
    match solve_blocks(core::slice::from_ref(&block), config) {
        Ok(mut fit) => Ok((fit.densities.remove(0), fit.solution)),
        Err(Error::Calibration { status, .. }) => Err(Error::Calibration { status, expiry: Some(expiry) }),
        Err(e) => Err(e),
    }
}

fn bid_total_variance(slice: &ExpirySlice) -> Vec<(f64, f64)> {
    slice
        .quotes
        .iter()
        .filter(|q| !q.crossed_intrinsic)
        .filter_map(|q| match q.implied_vol_of(q.bid) {
            Ok(s) if s > 0.0 => Some((q.k, s * s * q.t)),
            _ => None,
        })
        .collect()
}

fn interpolate_flat(points: &[(f64, f64)], k: f64) -> f64 {
    match points.iter().position(|p| p.0 >= k) {
        None => points[points.len() - 1].1,
        Some(0) => points[0].1,
        Some(b) => {
            let (a, c) = (points[b - 1], points[b]);
            a.1 + (c.1 - a.1) * (k - a.0) / (c.0 - a.0)
        }
    }
}

/// Per-strike increments of bid total implied variance, interpolated
/// linearly in strike (flat outside the quotes) and clipped at zero.
pub fn default_increments(snapshot: &MarketSnapshot) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(snapshot.slices.len());
    let mut prev: Option<Vec<(f64, f64)>> = None;
    for (j, s) in snapshot.slices.iter().enumerate() {
        let pts = bid_total_variance(s);
        if pts.is_empty() {
            return Err(Error::MissingAtm { expiry: j });
        }
        out.push(
            s.model_strikes
                .iter()
                .map(|&k| {
                    let earlier = prev.as_ref().map_or(0.0, |p| interpolate_flat(p, k));
                    (interpolate_flat(&pts, k) - earlier).max(0.0)
                })
                .collect(),
        );
        prev = Some(pts);
    }
    Ok(out)
}

/// Fitted generalized model.
#[derive(Debug, Clone, PartialEq)]
pub struct GnrSurface {
    expiries: Vec<f64>,
    grids: Vec<Vec<f64>>,
    densities: Vec<Vec<f64>>,
    increments: Vec<Vec<f64>>,
    eta: f64,
    /// Path tensors per expiry: strikes, variances, weights.
    tensors: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    time: TimeInterpolator,
    pub flat_extrapolation: bool,
    /// Objective of each per-expiry LP when fitted.
    pub objectives: Vec<f64>,
}

impl GnrSurface {
    pub fn new(
        expiries: Vec<f64>,
        grids: Vec<Vec<f64>>,
        densities: Vec<Vec<f64>>,
        increments: Vec<Vec<f64>>,
        eta: f64,
        alpha_mode: AlphaMode,
        cap: usize,
    ) -> Result<Self> {
        let m = expiries.len();
        if grids.len() != m || densities.len() != m || increments.len() != m {
            return Err(Error::input("expiries, grids, densities and increments differ in length"));
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::input("eta must be finite and non-negative"));
        }
        for (g, q) in grids.iter().zip(&densities) {
            if q.iter().any(|x| !(*x >= -1e-12)) {
                return Err(Error::input("densities must be non-negative"));
            }
            let mass: f64 = q.iter().sum();
            let mean: f64 = g.iter().zip(q).map(|(k, x)| k * x).sum();
            if (mass - 1.0).abs() > 1e-9 || (mean - 1.0).abs() > 1e-9 {
                return Err(Error::input("densities must have unit mass and unit mean"));
            }
        }
        let mut state = GnrState::new(cap);
        let mut tensors = Vec::with_capacity(m);
        for j in 0..m {
            let q: Vec<f64> = densities[j].iter().map(|x| x.max(0.0)).collect();
            state.extend(&grids[j], &increments[j], &q)?;
            tensors.push((state.strikes.clone(), state.variances.clone(), state.weights.clone()));
        }
        let atm = tensors.iter().map(|(k, v, w)| path_price(k, v, w, 1.0, eta)).collect();
        let time = TimeInterpolator::new(expiries.clone(), alpha_mode, atm)?;
        Ok(GnrSurface { expiries, grids, densities, increments, eta, tensors, time, flat_extrapolation: false, objectives: Vec::new() })
    }

    pub fn expiries(&self) -> &[f64] {
        &self.expiries
    }

    pub fn grids(&self) -> &[Vec<f64>] {
        &self.grids
    }

    pub fn densities(&self) -> &[Vec<f64>] {
        &self.densities
    }

    pub fn increments(&self) -> &[Vec<f64>] {
        &self.increments
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn tensor_len(&self, j: usize) -> usize {
        self.tensors[j].0.len()
    }

    /// Largest path strike carrying mass at expiry `j`.
    pub fn support_max(&self, j: usize) -> f64 {
        let (s, _, w) = &self.tensors[j];
        s.iter().zip(w).filter(|(_, &x)| x > 0.0).map(|(&k, _)| k).fold(0.0, f64::max)
    }

    pub fn slice_call(&self, j: usize, k: f64) -> f64 {
        let (s, v, w) = &self.tensors[j];
        path_price(s, v, w, k, self.eta)
    }

    pub fn eval_call(&self, t: f64, k: f64) -> Result<f64> {
        if !(k >= 0.0) {
            return Err(Error::input("strike must be non-negative"));
        }
        let b = self.time.blend(t, self.flat_extrapolation)?;
        let upper = self.slice_call(b.upper, k);
        let lower = match b.lower {
            Some(j) => self.slice_call(j, k),
            None => (1.0 - k).max(0.0),
        };
        Ok(b.combine(lower, upper))
    }
}

impl CallSurface for GnrSurface {
    fn call(&self, t: f64, k: f64) -> Result<f64> {
        self.eval_call(t, k)
    }
}

/// Fits every expiry in order. `increments` defaults to
/// [`default_increments`].
pub fn fit_generalized(snapshot: &MarketSnapshot, increments: Option<&[Vec<f64>]>, config: &CalibConfig, cap: usize) -> Result<GnrSurface> {
    config.validate()?;
    let dv = match increments {
        Some(d) => d.to_vec(),
        None => default_increments(snapshot)?,
    };
    if dv.len() != snapshot.slices.len() {
        return Err(Error::input("one increment vector per expiry is required"));
    }
    let mut state = GnrState::new(cap);
    let mut objectives = Vec::with_capacity(dv.len());
    for (slice, d) in snapshot.slices.iter().zip(&dv) {
        let (q, sol) = gnr_fit_step(&state, slice, d, config)?;
        state.extend(&slice.model_strikes, d, &q)?;
        objectives.push(sol.objective);
    }
    let mut surface =
        GnrSurface::new(snapshot.expiries(), state.grids, state.densities, state.increments, config.eta, config.alpha_mode, cap)?;
    surface.objectives = objectives;
    Ok(surface)
}
