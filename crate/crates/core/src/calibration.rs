//! Calibration of mixture densities to bid/ask quotes by one linear program
//! over all expiries.
//!
//! Per expiry `j` the unknowns are the atom weights `q_j` on the model
//! strikes. Model prices at market strikes are `C_j q_j` with
//! `C_j[l][i] = Call(K_j[i], k_j[l], eta V_j)`. Constraints:
//!
//! * `q_j >= 0`, `sum q_j = 1`, `K_j' q_j = 1`;
//! * `U_j q_j >= R_j q_{j-1}` at every model strike, where `U_j` and `R_j`
//!   price the current and previous atoms with variance `eta omega V`. The
//!   first expiry compares against a point mass at 1.
//!
//! With `omega = 0` these rows put consecutive densities in convex order,
//! which makes the blended surface free of calendar arbitrage.

use alloc::vec::Vec;

use crate::blackscholes::call_unchecked;
use crate::error::{Error, Result};
use crate::lp::{self, LinExpr, LpProblem, LpSolution, LpStatus, SolveOptions};
use crate::market_data::{BoundaryOptions, MarketSnapshot, PureQuote, SnapshotOptions, WeightOptions};
use crate::matrix::Matrix;
use crate::smooth_surface::{SmoothSurface, SurfaceMetadata};
use crate::time_interp::AlphaMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveMode {
    /// Weighted absolute deviation from the mid.
    MidFit,
    /// Mid fit with fitted prices confined to `[bid, ask]`.
    HardBidAsk,
    /// Weighted distance outside `[bid, ask]`, plus `epsilon` times the mid
    /// deviation.
    #[default]
    Penalty,
}

impl ObjectiveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveMode::MidFit => "mid",
            ObjectiveMode::HardBidAsk => "hard",
            ObjectiveMode::Penalty => "penalty",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mid" | "mid_fit" => Some(ObjectiveMode::MidFit),
            "hard" | "hard_bid_ask" => Some(ObjectiveMode::HardBidAsk),
            "penalty" => Some(ObjectiveMode::Penalty),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceSource {
    #[default]
    AtmBid,
    AtmMid,
}

impl VarianceSource {
    pub fn as_str(self) -> &'static str {
        match self {
            VarianceSource::AtmBid => "atm_bid",
            VarianceSource::AtmMid => "atm_mid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "atm_bid" | "bid" => Some(VarianceSource::AtmBid),
            "atm_mid" | "mid" => Some(VarianceSource::AtmMid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibConfig {
    /// Smoothness factor in `[0, 1)`.
    pub eta: f64,
    /// Use the backbone variance inside the martingale rows. Not guaranteed
    /// arbitrage-free.
    pub omega: bool,
    pub objective: ObjectiveMode,
    pub epsilon: f64,
    pub weights: WeightOptions,
    pub dk_max: f64,
    pub variance_source: VarianceSource,
    pub alpha_mode: AlphaMode,
    pub solver: SolveOptions,
}

impl Default for CalibConfig {
    fn default() -> Self {
        CalibConfig {
            eta: 0.25,
            omega: false,
            objective: ObjectiveMode::Penalty,
            epsilon: 1e-8,
            weights: WeightOptions::default(),
            dk_max: 0.05,
            variance_source: VarianceSource::AtmBid,
            alpha_mode: AlphaMode::LinearT,
            solver: SolveOptions::default(),
        }
    }
}

impl CalibConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta < 1.0) {
            return Err(Error::input("eta must lie in [0, 1)"));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::input("epsilon must be finite and non-negative"));
        }
        if !(self.dk_max > 0.0) {
            return Err(Error::input("dk_max must be positive"));
        }
        Ok(())
    }

    /// Options for building a [`MarketSnapshot`] consistent with this config.
    pub fn snapshot_options(&self) -> SnapshotOptions {
        SnapshotOptions { dk_max: self.dk_max, weights: self.weights, boundary: BoundaryOptions::default() }
    }
}

/// Total at-the-money variances per expiry.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceBackbone {
    pub variances: Vec<f64>,
    /// Before the monotonicity repair.
    pub raw: Vec<f64>,
    pub repairs: usize,
}

/// Enforces `V[j] > V[j-1]` by lifting offenders to `V[j-1] + 1e-8`.
pub fn repair_backbone(raw: &[f64]) -> (Vec<f64>, usize) {
    let mut out = raw.to_vec();
    let mut repairs = 0;
    for j in 1..out.len() {
        if out[j] <= out[j - 1] {
            out[j] = out[j - 1] + 1e-8;
            repairs += 1;
        }
    }
    (out, repairs)
}

fn atm_variance(quotes: &[PureQuote], source: VarianceSource) -> Option<f64> {
    let points: Vec<(f64, f64)> = quotes
        .iter()
        .filter(|q| !q.crossed_intrinsic)
        .filter_map(|q| {
            let price = match source {
                VarianceSource::AtmBid => q.bid,
                VarianceSource::AtmMid => q.mid(),
            };
            match q.implied_vol_of(price) {
                Ok(s) if s > 0.0 => Some((q.k, s * s * q.t)),
                _ => None,
            }
        })
        .collect();
    let below = points.iter().rev().find(|p| p.0 <= 1.0);
    let above = points.iter().find(|p| p.0 >= 1.0);
    match (below, above) {
        (Some(a), Some(b)) if b.0 > a.0 => Some(a.1 + (b.1 - a.1) * (1.0 - a.0) / (b.0 - a.0)),
        (Some(a), _) | (None, Some(a)) => Some(a.1),
        (None, None) => None,
    }
}

/// At-the-money total variance per slice, interpolated linearly in strike to
/// `k = 1`, then made strictly increasing.
pub fn backbone(snapshot: &MarketSnapshot, source: VarianceSource) -> Result<VarianceBackbone> {
    let raw = snapshot
        .slices
        .iter()
        .enumerate()
        .map(|(j, s)| atm_variance(&s.quotes, source).ok_or(Error::MissingAtm { expiry: j }))
        .collect::<Result<Vec<f64>>>()?;
    let (variances, repairs) = repair_backbone(&raw);
    Ok(VarianceBackbone { variances, raw, repairs })
}

/// Price kernels of the calibration LP.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibMatrices {
    /// Market strikes by model strikes.
    pub c: Vec<Matrix>,
    /// Model strikes by model strikes.
    pub u: Vec<Matrix>,
    /// Model strikes by previous model strikes; the first is a single column
    /// for the point mass at 1.
    pub r: Vec<Matrix>,
}

pub fn build_matrices(snapshot: &MarketSnapshot, backbone: &VarianceBackbone, eta: f64, omega: bool) -> CalibMatrices {
    let w = if omega { eta } else { 0.0 };
    let v = &backbone.variances;
    let mut out = CalibMatrices { c: Vec::new(), u: Vec::new(), r: Vec::new() };
    for (j, s) in snapshot.slices.iter().enumerate() {
        let grid = &s.model_strikes;
        out.c.push(Matrix::from_fn(s.quotes.len(), grid.len(), |l, i| call_unchecked(grid[i], s.quotes[l].k, eta * v[j])));
        out.u.push(Matrix::from_fn(grid.len(), grid.len(), |l, i| call_unchecked(grid[i], grid[l], w * v[j])));
        out.r.push(if j == 0 {
            Matrix::from_fn(grid.len(), 1, |l, _| call_unchecked(1.0, grid[l], 0.0))
        } else {
            let prev = &snapshot.slices[j - 1].model_strikes;
            Matrix::from_fn(grid.len(), prev.len(), |l, i| call_unchecked(prev[i], grid[l], w * v[j - 1]))
        });
    }
    out
}

/// Right-hand side of the martingale rows of one expiry.
pub(crate) enum Previous<'a> {
    /// A fixed price vector at the model strikes.
    Fixed(Vec<f64>),
    /// A kernel applied to the previous block's weights.
    Chained(&'a Matrix),
}

/// One expiry of an LP assembled by [`assemble`].
pub(crate) struct Block<'a> {
    pub strikes: &'a [f64],
    pub kernel: &'a Matrix,
    pub quotes: &'a [PureQuote],
    pub payoff: &'a Matrix,
    pub previous: Previous<'a>,
}

pub(crate) struct Assembled {
    pub problem: LpProblem,
    pub offsets: Vec<usize>,
}

fn row_terms(row: &[f64], offset: usize, scale: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    row.iter().enumerate().filter(|(_, &a)| a != 0.0).map(move |(i, &a)| (offset + i, scale * a))
}

pub(crate) fn assemble(blocks: &[Block<'_>], objective: ObjectiveMode, epsilon: f64) -> Result<Assembled> {
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut n_q = 0;
    for b in blocks {
        offsets.push(n_q);
        n_q += b.strikes.len();
    }
    let mut lp = LpProblem::new(n_q);

    for (j, b) in blocks.iter().enumerate() {
        let off = offsets[j];
        let n = b.strikes.len();
        lp.add_eq((0..n).map(|i| (off + i, 1.0)).collect(), 1.0);
        lp.add_eq(b.strikes.iter().enumerate().map(|(i, &k)| (off + i, k)).collect(), 1.0);

        for l in 0..n {
            let mut terms: Vec<(usize, f64)> = row_terms(b.payoff.row(l), off, 1.0).collect();
            match &b.previous {
                Previous::Fixed(r) => lp.add_ge(terms, r[l]),
                Previous::Chained(r) => {
                    let prev_off = offsets[j.checked_sub(1).ok_or_else(|| Error::input("first block cannot chain"))?];
                    terms.extend(row_terms(r.row(l), prev_off, -1.0));
                    lp.add_ge(terms, 0.0);
                }
            }
        }

        for (l, q) in b.quotes.iter().enumerate() {
            let w = q.weight;
            if !(w > 0.0) || q.crossed_intrinsic {
                continue;
            }
            let price: Vec<(usize, f64)> = row_terms(b.kernel.row(l), off, 1.0).collect();
            let deviation = LinExpr { terms: price.clone(), constant: -q.mid() };
            match objective {
                ObjectiveMode::MidFit => {
                    lp.add_abs_deviation(&deviation, w)?;
                }
                ObjectiveMode::HardBidAsk => {
                    lp.add_abs_deviation(&deviation, w)?;
                    lp.add_le(price.clone(), q.ask);
                    lp.add_ge(price, q.bid);
                }
                ObjectiveMode::Penalty => {
                    lp.add_abs_deviation(&deviation, w * epsilon)?;
                    let above = lp.add_var(w, 0.0, f64::INFINITY);
                    let mut row = price.clone();
                    row.push((above, -1.0));
                    lp.add_le(row, q.ask);
                    let below = lp.add_var(w, 0.0, f64::INFINITY);
                    let mut row: Vec<(usize, f64)> = price.iter().map(|&(i, a)| (i, -a)).collect();
                    row.push((below, -1.0));
                    lp.add_le(row, -q.bid);
                }
            }
        }
    }
    Ok(Assembled { problem: lp, offsets })
}

/// Densities and the raw LP outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LpFit {
    pub densities: Vec<Vec<f64>>,
    pub solution: LpSolution,
}

pub(crate) fn solve_blocks(blocks: &[Block<'_>], config: &CalibConfig) -> Result<LpFit> {
    let asm = assemble(blocks, config.objective, config.epsilon)?;
    let solution = lp::solve(&asm.problem, &config.solver);
    if solution.status != LpStatus::Optimal {
        return Err(Error::Calibration { status: solution.status, expiry: None });
    }
    let densities = blocks
        .iter()
        .zip(&asm.offsets)
        .map(|(b, &off)| solution.x[off..off + b.strikes.len()].iter().map(|&x| x.max(0.0)).collect())
        .collect();
    Ok(LpFit { densities, solution })
}

fn production_blocks<'a>(snapshot: &'a MarketSnapshot, m: &'a CalibMatrices) -> Vec<Block<'a>> {
    snapshot
        .slices
        .iter()
        .enumerate()
        .map(|(j, s)| Block {
            strikes: &s.model_strikes,
            kernel: &m.c[j],
            quotes: &s.quotes,
            payoff: &m.u[j],
            previous: if j == 0 {
                Previous::Fixed((0..s.model_strikes.len()).map(|l| m.r[0][(l, 0)]).collect())
            } else {
                Previous::Chained(&m.r[j])
            },
        })
        .collect()
}

/// Solves growing prefixes of the blocks and returns the first expiry whose
/// inclusion makes the LP fail.
fn first_failing_expiry(blocks: &[Block<'_>], config: &CalibConfig) -> Option<usize> {
    (0..blocks.len()).find(|&j| solve_blocks(&blocks[..=j], config).is_err())
}

/// The calibration LP for `snapshot`, e.g. for export to another solver.
pub fn build_lp(snapshot: &MarketSnapshot, config: &CalibConfig) -> Result<LpProblem> {
    config.validate()?;
    let bb = backbone(snapshot, config.variance_source)?;
    let m = build_matrices(snapshot, &bb, config.eta, config.omega);
    Ok(assemble(&production_blocks(snapshot, &m), config.objective, config.epsilon)?.problem)
}

/// Fits the production model to all expiries at once.
pub fn calibrate(snapshot: &MarketSnapshot, config: &CalibConfig) -> Result<SmoothSurface> {
    config.validate()?;
    let bb = backbone(snapshot, config.variance_source)?;
    calibrate_with_backbone(snapshot, &bb, config)
}

pub fn calibrate_with_backbone(snapshot: &MarketSnapshot, bb: &VarianceBackbone, config: &CalibConfig) -> Result<SmoothSurface> {
    config.validate()?;
    let m = build_matrices(snapshot, bb, config.eta, config.omega);
    let blocks = production_blocks(snapshot, &m);
    let fit = match solve_blocks(&blocks, config) {
        Ok(fit) => fit,
        Err(Error::Calibration { status, .. }) => {
            return Err(Error::Calibration { status, expiry: first_failing_expiry(&blocks, config) });
        }
        Err(e) => return Err(e),
    };
    let grids: Vec<Vec<f64>> = snapshot.slices.iter().map(|s| s.model_strikes.clone()).collect();
    let mut surface = SmoothSurface::new(snapshot.expiries(), grids, fit.densities, bb.variances.clone(), config.eta, config.alpha_mode)?;
    surface.metadata = SurfaceMetadata {
        objective: Some(fit.solution.objective),
        lp_iterations: Some(fit.solution.iterations),
        max_residual: Some(fit.solution.max_residual),
        backbone_repairs: Some(bb.repairs),
        config: Some(config.clone()),
    };
    Ok(surface)
}

/// The homogeneous toy model: every expiry shares the model strikes and the
/// martingale rows compare payoffs on that common grid.
pub fn calibrate_smp(snapshot: &MarketSnapshot, bb: &VarianceBackbone, config: &CalibConfig) -> Result<LpFit> {
    config.validate()?;
    if !snapshot.is_homogeneous() {
        return Err(Error::input("the homogeneous model needs identical strikes across expiries"));
    }
    let grid = &snapshot.slices[0].model_strikes;
    let payoff = Matrix::from_fn(grid.len(), grid.len(), |l, i| (grid[i] - grid[l]).max(0.0));
    let kernels: Vec<Matrix> = snapshot
        .slices
        .iter()
        .zip(&bb.variances)
        .map(|(s, &v)| Matrix::from_fn(s.quotes.len(), grid.len(), |l, i| call_unchecked(grid[i], s.quotes[l].k, config.eta * v)))
        .collect();
    let blocks: Vec<Block<'_>> = snapshot
        .slices
        .iter()
        .enumerate()
        .map(|(j, s)| Block {
            strikes: grid,
            kernel: &kernels[j],
            quotes: &s.quotes,
            payoff: &payoff,
            previous: if j == 0 { Previous::Fixed(grid.iter().map(|&k| (1.0 - k).max(0.0)).collect()) } else { Previous::Chained(&payoff) },
        })
        .collect();
    solve_blocks(&blocks, config).map_err(|e| match e {
        Error::Calibration { status, .. } => Error::Calibration { status, expiry: first_failing_expiry(&blocks, config) },
        other => other,
    })
}

/// Boundary atoms `(q at K_min, q at K_max)` per expiry.
pub fn boundary_mass(surface: &SmoothSurface) -> Vec<(f64, f64)> {
    surface.densities().iter().map(|q| (q[0], q[q.len() - 1])).collect()
}

/// Fitted model price for every quote of every slice.
pub fn fitted_prices(snapshot: &MarketSnapshot, surface: &SmoothSurface) -> Vec<Vec<f64>> {
    snapshot.slices.iter().enumerate().map(|(j, s)| s.quotes.iter().map(|q| surface.slice_call(j, q.k)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::ExpirySlice;
    use crate::noarb::density_from_calls;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn flat_quotes(t: f64, sigma: f64, strikes: &[f64]) -> Vec<PureQuote> {
        strikes
            .iter()
            .map(|&k| {
                let p = call_unchecked(1.0, k, sigma * sigma * t);
                PureQuote::new(t, k, p, p)
            })
            .collect()
    }

    fn slice(t: f64, quotes: Vec<PureQuote>, grid: &[f64]) -> ExpirySlice {
        ExpirySlice::new(t, quotes, grid.to_vec()).unwrap()
    }

    /// Zero-spread quotes from a density on `grid`, priced with `Call(K_i, k, v)`.
    fn quotes_from_density(t: f64, grid: &[f64], q: &[f64], v: f64, strikes: &[f64], weight: f64) -> Vec<PureQuote> {
        strikes
            .iter()
            .map(|&k| {
                let p: f64 = grid.iter().zip(q).map(|(&x, &w)| w * call_unchecked(x, k, v)).sum();
                PureQuote { weight, ..PureQuote::new(t, k, p, p) }
            })
            .collect()
    }

    const GRID: [f64; 9] = [0.2, 0.5, 0.7, 0.9, 1.0, 1.1, 1.3, 1.6, 2.5];

    #[test]
    fn backbone_examples() {
        let ks = [0.8, 0.9, 1.0, 1.1, 1.2];
        let snap = MarketSnapshot::new(vec![slice(0.5, flat_quotes(0.5, 0.2, &ks), &GRID), slice(1.0, flat_quotes(1.0, 0.2, &ks), &GRID)])
            .unwrap();
        let bb = backbone(&snap, VarianceSource::AtmBid).unwrap();
        assert_abs_diff_eq!(bb.variances[0], 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(bb.variances[1], 0.04, epsilon = 1e-12);
        assert_eq!(bb.repairs, 0);

        let (v, n) = repair_backbone(&[0.04, 0.03]);
        assert_eq!(v, vec![0.04, 0.04 + 1e-8]);
        assert_eq!(n, 1);

        // bracketing strikes 0.95 and 1.05 with vols 0.25 and 0.15
        let quotes: Vec<PureQuote> = [(0.95, 0.25), (1.05, 0.15)]
            .iter()
            .map(|&(k, s): &(f64, f64)| {
                let p = call_unchecked(1.0, k, s * s);
                PureQuote::new(1.0, k, p, p)
            })
            .collect();
        let snap = MarketSnapshot::new(vec![slice(1.0, quotes, &GRID)]).unwrap();
        let bb = backbone(&snap, VarianceSource::AtmMid).unwrap();
        assert_abs_diff_eq!(bb.variances[0], 0.5 * (0.0625 + 0.0225), epsilon = 1e-12);

        let dead = vec![PureQuote::new(1.0, 1.2, 0.0, 0.0)];
        let snap = MarketSnapshot::new(vec![slice(1.0, dead, &GRID)]).unwrap();
        assert_eq!(backbone(&snap, VarianceSource::AtmBid), Err(Error::MissingAtm { expiry: 0 }));
    }

    #[test]
    fn matrix_examples() {
        let ks = [0.8, 1.0, 1.2];
        let snap = MarketSnapshot::new(vec![slice(0.5, flat_quotes(0.5, 0.2, &ks), &GRID), slice(1.0, flat_quotes(1.0, 0.2, &ks), &GRID)])
            .unwrap();
        let bb = VarianceBackbone { variances: vec![0.16, 0.32], raw: vec![0.16, 0.32], repairs: 0 };
        let m = build_matrices(&snap, &bb, 0.0, true);
        for l in 0..3 {
            for (i, &x) in GRID.iter().enumerate() {
                assert_eq!(m.c[0][(l, i)], (x - ks[l]).max(0.0));
            }
        }
        let m = build_matrices(&snap, &bb, 0.25, false);
        for l in 0..GRID.len() {
            for i in 0..GRID.len() {
                assert_eq!(m.u[1][(l, i)], (GRID[i] - GRID[l]).max(0.0));
                assert_eq!(m.r[1][(l, i)], (GRID[i] - GRID[l]).max(0.0));
            }
            assert_eq!(m.r[0][(l, 0)], (1.0 - GRID[l]).max(0.0));
        }
        // the model strike 1.0 against market strike 1.0 with eta V = 0.04
        assert_abs_diff_eq!(m.c[0][(1, 4)], 0.0796557, epsilon = 5e-8);
        let m = build_matrices(&snap, &bb, 0.25, true);
        assert_abs_diff_eq!(m.u[0][(4, 4)], 0.0796557, epsilon = 5e-8);
    }

    fn linear_market() -> (Vec<f64>, Vec<f64>) {
        let q = vec![0.0, 0.1, 0.15, 0.2, 0.1, 0.2, 0.15, 0.1, 0.0];
        let mean: f64 = GRID.iter().zip(&q).map(|(k, p)| k * p).sum();
        // shift mass between two atoms to hit mean 1 exactly
        let mut q = q;
        let fix = (1.0 - mean) / (GRID[7] - GRID[1]);
        q[7] += fix;
        q[1] -= fix;
        (GRID.to_vec(), q)
    }

    #[test]
    fn eta_zero_recovers_linear_density() {
        let (grid, q) = linear_market();
        let interior = &grid[1..grid.len() - 1];
        let quotes = quotes_from_density(1.0, &grid, &q, 0.0, interior, 1e6);
        let snap = MarketSnapshot::new(vec![slice(1.0, quotes, &grid)]).unwrap();
        let bb = VarianceBackbone { variances: vec![0.04], raw: vec![0.04], repairs: 0 };
        let config = CalibConfig { eta: 0.0, ..CalibConfig::default() };
        let surface = calibrate_with_backbone(&snap, &bb, &config).unwrap();

        let mut ks = vec![0.0];
        ks.extend_from_slice(&grid);
        let calls: Vec<f64> = ks.iter().map(|&k| grid.iter().zip(&q).map(|(&x, &w)| w * (x - k).max(0.0)).sum()).collect();
        let p = density_from_calls(&ks, &calls).unwrap();
        for (a, b) in surface.densities()[0].iter().zip(&p.masses) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
        }
    }

    #[test]
    fn hard_mode_surfaces_infeasible_expiry() {
        let ks = [0.9, 1.0, 1.1];
        let early = flat_quotes(0.5, 0.3, &ks);
        let late = flat_quotes(1.0, 0.1, &ks);
        let snap = MarketSnapshot::new(vec![slice(0.5, early, &GRID), slice(1.0, late, &GRID)]).unwrap();
        let config = CalibConfig { objective: ObjectiveMode::HardBidAsk, ..CalibConfig::default() };
        match calibrate(&snap, &config) {
            Err(Error::Calibration { status: LpStatus::Infeasible, expiry: Some(1) }) => {}
            other => panic!("expected infeasible second expiry, got {other:?}"),
        }
    }

    #[test]
    fn smp_reduces_to_single_slice_and_identical_slices() {
        let (grid, q) = linear_market();
        let interior = &grid[1..grid.len() - 1];
        let quotes = quotes_from_density(1.0, &grid, &q, 0.0, interior, 1e6);
        let snap = MarketSnapshot::new(vec![slice(1.0, quotes.clone(), &grid)]).unwrap();
        let bb = VarianceBackbone { variances: vec![0.04], raw: vec![0.04], repairs: 0 };
        let config = CalibConfig { eta: 0.0, ..CalibConfig::default() };
        let fit = calibrate_smp(&snap, &bb, &config).unwrap();
        for (a, b) in fit.densities[0].iter().zip(&q) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
        }

        let later: Vec<PureQuote> = quotes.iter().map(|x| PureQuote { t: 2.0, ..*x }).collect();
        let snap = MarketSnapshot::new(vec![slice(1.0, quotes, &grid), slice(2.0, later, &grid)]).unwrap();
        let bb = VarianceBackbone { variances: vec![0.04, 0.08], raw: vec![0.04, 0.08], repairs: 0 };
        let fit = calibrate_smp(&snap, &bb, &config).unwrap();
        assert!(fit.solution.objective.abs() < 1e-9);
        for (a, b) in fit.densities[0].iter().zip(&fit.densities[1]) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
        }
    }

    #[test]
    fn smp_matches_production_model_on_homogeneous_grids() {
        let (grid, q) = linear_market();
        let ks = [0.6, 0.8, 0.95, 1.05, 1.2, 1.4];
        // move mass from 1.0 symmetrically to 0.9 and 1.1 for the later expiry
        let mut q2 = q.clone();
        q2[4] -= 0.06;
        q2[3] += 0.03;
        q2[5] += 0.03;
        let s1 = quotes_from_density(0.5, &grid, &q, 0.25 * 0.02, &ks, 1.0);
        let s2 = quotes_from_density(1.0, &grid, &q2, 0.25 * 0.04, &ks, 1.0);
        let widen = |v: Vec<PureQuote>| -> Vec<PureQuote> {
            v.into_iter().map(|x| PureQuote { bid: x.bid - 2e-3, ask: x.ask + 2e-3, weight: 250.0, ..x }).collect()
        };
        let snap = MarketSnapshot::new(vec![slice(0.5, widen(s1), &grid), slice(1.0, widen(s2), &grid)]).unwrap();
        let bb = VarianceBackbone { variances: vec![0.02, 0.04], raw: vec![0.02, 0.04], repairs: 0 };
        let config = CalibConfig::default();
        let smp = calibrate_smp(&snap, &bb, &config).unwrap();
        let mdl = calibrate_with_backbone(&snap, &bb, &config).unwrap();
        assert_eq!(smp.densities, mdl.densities());
    }

    #[test]
    fn tightening_spreads_never_lowers_the_optimum() {
        let (grid, q) = linear_market();
        let ks = [0.6, 0.8, 0.95, 1.05, 1.2, 1.4];
        let base = quotes_from_density(1.0, &grid, &q, 0.25 * 0.04, &ks, 1.0);
        // perturbed mids so the fit cannot be exact
        let noisy: Vec<PureQuote> = base
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let m = x.bid + if i % 2 == 0 { 3e-3 } else { -3e-3 };
                PureQuote { bid: m, ask: m, weight: 1.0, ..*x }
            })
            .collect();
        let bb = VarianceBackbone { variances: vec![0.04], raw: vec![0.04], repairs: 0 };
        let config = CalibConfig { objective: ObjectiveMode::HardBidAsk, ..CalibConfig::default() };
        let mut last = -1.0;
        for &half in &[1e-2, 5e-3, 4e-3, 3.5e-3] {
            let quotes: Vec<PureQuote> = noisy.iter().map(|x| PureQuote { bid: x.bid - half, ask: x.ask + half, ..*x }).collect();
            let snap = MarketSnapshot::new(vec![slice(1.0, quotes, &grid)]).unwrap();
            let fit = calibrate_smp(&snap, &bb, &config).unwrap();
            assert!(fit.solution.objective >= last - 1e-12);
            last = fit.solution.objective;
        }
    }
}
