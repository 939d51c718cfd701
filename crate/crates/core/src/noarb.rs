//! Discrete no-arbitrage checks on call price slices and on evaluable
//! surfaces.
//!
//! A slice is a strike vector `K[0] < ... < K[N]` with call prices `C[i]`.
//! When `K[0] = 0` the slice carries the boundary convention: `C[0] = 1`
//! (unit expectation), slope `-1` at zero (zero is unattainable) and
//! `C[N] = 0` (no mass beyond the last strike).

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance on pure prices.
pub const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    UnitExpectation,
    ZeroAttainable,
    TailNonzero,
    Nonconvex,
    Calendar,
    SlopeBounds,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::UnitExpectation => "unit_expectation",
            ViolationKind::ZeroAttainable => "zero_attainable",
            ViolationKind::TailNonzero => "tail_nonzero",
            ViolationKind::Nonconvex => "nonconvex",
            ViolationKind::Calendar => "calendar",
            ViolationKind::SlopeBounds => "slope_bounds",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ViolationKind::UnitExpectation,
            ViolationKind::ZeroAttainable,
            ViolationKind::TailNonzero,
            ViolationKind::Nonconvex,
            ViolationKind::Calendar,
            ViolationKind::SlopeBounds,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub expiry: usize,
    pub strike: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArbReport {
    pub violations: Vec<Violation>,
}

impl ArbReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }

    pub fn extend(&mut self, other: ArbReport) {
        self.violations.extend(other.violations);
    }

    /// The largest violation, if any.
    pub fn worst(&self) -> Option<&Violation> {
        self.violations.iter().max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
    }

    fn push(&mut self, kind: ViolationKind, expiry: usize, strike: usize, magnitude: f64) {
        self.violations.push(Violation { kind, expiry, strike, magnitude });
    }

    fn with_expiry(mut self, expiry: usize) -> Self {
        self.violations.iter_mut().for_each(|v| v.expiry = expiry);
        self
    }

    /// Turns the first violation into an error.
    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Arbitrage { expiry: v.expiry, strike: v.strike, kind: v.kind, magnitude: v.magnitude }),
        }
    }
}

fn validate_slice(strikes: &[f64], calls: &[f64]) -> Result<()> {
    if strikes.len() != calls.len() {
        return Err(Error::input("strikes and calls differ in length"));
    }
    if strikes.is_empty() {
        return Err(Error::input("empty slice"));
    }
    if strikes.iter().chain(calls).any(|x| !x.is_finite()) {
        return Err(Error::input("non-finite strike or price"));
    }
    if strikes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("strikes must be strictly increasing"));
    }
    Ok(())
}

/// Forward slopes `(C[i+1] - C[i]) / (K[i+1] - K[i])` with a trailing zero,
/// so the result has the same length as the input.
pub fn slopes(strikes: &[f64], calls: &[f64]) -> Result<Vec<f64>> {
    validate_slice(strikes, calls)?;
    let mut dc: Vec<f64> = strikes.windows(2).zip(calls.windows(2)).map(|(k, c)| (c[1] - c[0]) / (k[1] - k[0])).collect();
    dc.push(0.0);
    Ok(dc)
}

/// Atoms implied by a price slice. `masses[i]` sits at `strikes[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDensity {
    pub strikes: Vec<f64>,
    pub masses: Vec<f64>,
    /// Indices into `masses` whose value is below `-TOL`.
    pub negative: Vec<usize>,
}

impl DiscreteDensity {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.strikes.iter().zip(&self.masses).map(|(k, p)| k * p).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.negative.is_empty()
    }

    /// `sum_i p[i] * (K[i] - k)^+`.
    pub fn reprice(&self, k: f64) -> f64 {
        self.strikes.iter().zip(&self.masses).map(|(&ki, &p)| p * (ki - k).max(0.0)).sum()
    }
}

/// Butterfly masses `dC[i] - dC[i-1]` placed at `K[1..=N]`; `K[0]` only
/// anchors the first slope.
pub fn density_from_calls(strikes: &[f64], calls: &[f64]) -> Result<DiscreteDensity> {
    let dc = slopes(strikes, calls)?;
    if strikes.len() < 2 {
        return Err(Error::input("a density needs at least two strikes"));
    }
    let masses: Vec<f64> = dc.windows(2).map(|w| w[1] - w[0]).collect();
    let negative = masses.iter().enumerate().filter(|(_, &p)| p < -TOL).map(|(i, _)| i).collect();
    Ok(DiscreteDensity { strikes: strikes[1..].to_vec(), masses, negative })
}

/// Checks a single slice. Unit expectation and the slope at zero are only
/// tested when `strikes[0] == 0`.
pub fn check_slice(strikes: &[f64], calls: &[f64]) -> Result<ArbReport> {
    check_slice_with(strikes, calls, TOL)
}

pub fn check_slice_with(strikes: &[f64], calls: &[f64], tol: f64) -> Result<ArbReport> {
    let dc = slopes(strikes, calls)?;
    let n = strikes.len() - 1;
    let mut report = ArbReport::default();

    if strikes[0] == 0.0 {
        let gap = (calls[0] - 1.0).abs();
        if gap > tol {
            report.push(ViolationKind::UnitExpectation, 0, 0, gap);
        }
        if n > 0 {
            // price-unit distance of C[1] from the line 1 - K
            let excess = (calls[1] - (1.0 - strikes[1])).abs();
            if excess > tol {
                report.push(ViolationKind::ZeroAttainable, 0, 0, excess);
            }
        }
    }
    for i in 0..n {
        let width = strikes[i + 1] - strikes[i];
        let drop = calls[i] - calls[i + 1];
        if drop < -tol {
            report.push(ViolationKind::SlopeBounds, 0, i, -drop);
        } else if drop > width + tol {
            report.push(ViolationKind::SlopeBounds, 0, i, drop - width);
        }
    }
    for i in 0..n {
        // scale the slope jump by the local width to compare in price units
        let jump = dc[i] - dc[i + 1];
        let width = if i + 1 < n { strikes[i + 2] - strikes[i] } else { strikes[i + 1] - strikes[i] };
        if jump * width > tol {
            report.push(ViolationKind::Nonconvex, 0, i, jump * width);
        }
    }
    if calls[n].abs() > tol {
        report.push(ViolationKind::TailNonzero, 0, n, calls[n].abs());
    }
    Ok(report)
}

/// Lower envelope of an earlier slice at `k`: its linear interpolant inside
/// the quoted range, the extended edge secant outside (a convexity lower
/// bound), never below intrinsic.
fn earlier_bound(strikes: &[f64], calls: &[f64], k: f64) -> f64 {
    let n = strikes.len();
    let intrinsic = (1.0 - k).max(0.0);
    if n == 1 {
        return if k == strikes[0] { calls[0] } else { intrinsic };
    }
    let seg = match strikes.partition_point(|&s| s <= k) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let (k0, k1, c0, c1) = (strikes[seg], strikes[seg + 1], calls[seg], calls[seg + 1]);
    let line = c0 + (c1 - c0) * (k - k0) / (k1 - k0);
    if k >= strikes[0] && k <= strikes[n - 1] {
        line
    } else {
        line.max(intrinsic)
    }
}

/// Later slices must dominate the linear interpolation of the earlier slice.
pub fn check_calendar(slices: &[(&[f64], &[f64])]) -> Result<ArbReport> {
    check_calendar_with(slices, TOL)
}

pub fn check_calendar_with(slices: &[(&[f64], &[f64])], tol: f64) -> Result<ArbReport> {
    for (k, c) in slices {
        validate_slice(k, c)?;
    }
    let mut report = ArbReport::default();
    for j in 1..slices.len() {
        let (ek, ec) = slices[j - 1];
        let (lk, lc) = slices[j];
        for (l, (&k, &c)) in lk.iter().zip(lc).enumerate() {
            let shortfall = earlier_bound(ek, ec, k) - c;
            if shortfall > tol {
                report.push(ViolationKind::Calendar, j, l, shortfall);
            }
        }
    }
    Ok(report)
}

/// Anything that prices pure calls at `(T, K)`.
pub trait CallSurface {
    fn call(&self, t: f64, k: f64) -> Result<f64>;
}

impl<F: Fn(f64, f64) -> Result<f64>> CallSurface for F {
    fn call(&self, t: f64, k: f64) -> Result<f64> {
        self(t, k)
    }
}

/// Strike offset used for the slope-at-zero test.
pub const ZERO_SLOPE_EPS: f64 = 1e-4;
/// Allowed deviation of the slope at zero from `-1`.
pub const ZERO_SLOPE_TOL: f64 = 1e-6;

/// Samples a surface on a grid. Strike index `usize::MAX` in a violation
/// refers to the probes at `K = 0` and `K = ZERO_SLOPE_EPS`; the tail test
/// uses the last grid strike.
pub fn check_surface<S: CallSurface + ?Sized>(surface: &S, t_grid: &[f64], k_grid: &[f64]) -> Result<ArbReport> {
    check_surface_with(surface, t_grid, k_grid, TOL)
}

pub fn check_surface_with<S: CallSurface + ?Sized>(surface: &S, t_grid: &[f64], k_grid: &[f64], tol: f64) -> Result<ArbReport> {
    if k_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("surface check grids must be strictly increasing"));
    }
    if k_grid.iter().any(|&k| k < 0.0) {
        return Err(Error::input("negative strike in check grid"));
    }
    let mut report = ArbReport::default();
    let mut previous: Option<Vec<f64>> = None;
    for (a, &t) in t_grid.iter().enumerate() {
        let row = k_grid.iter().map(|&k| surface.call(t, k)).collect::<Result<Vec<f64>>>()?;

        let at_zero = surface.call(t, 0.0)?;
        if (at_zero - 1.0).abs() > tol {
            report.push(ViolationKind::UnitExpectation, a, usize::MAX, (at_zero - 1.0).abs());
        }
        let slope = (surface.call(t, ZERO_SLOPE_EPS)? - at_zero) / ZERO_SLOPE_EPS;
        if (slope + 1.0).abs() > ZERO_SLOPE_TOL {
            report.push(ViolationKind::ZeroAttainable, a, usize::MAX, (slope + 1.0).abs());
        }

        for i in 0..row.len().saturating_sub(1) {
            let width = k_grid[i + 1] - k_grid[i];
            let drop = row[i] - row[i + 1];
            if drop < -tol {
                report.push(ViolationKind::SlopeBounds, a, i, -drop);
            } else if drop > width + tol {
                report.push(ViolationKind::SlopeBounds, a, i, drop - width);
            }
        }
        for i in 1..row.len().saturating_sub(1) {
            let w = (k_grid[i + 1] - k_grid[i]) / (k_grid[i + 1] - k_grid[i - 1]);
            let chord = w * row[i - 1] + (1.0 - w) * row[i + 1];
            if row[i] - chord > tol {
                report.push(ViolationKind::Nonconvex, a, i, row[i] - chord);
            }
        }
        if let Some(&tail) = row.last() {
            if tail > tol {
                report.push(ViolationKind::TailNonzero, a, row.len() - 1, tail);
            }
        }
        if let Some(prev) = &previous {
            for (i, (&p, &c)) in prev.iter().zip(&row).enumerate() {
                if p - c > tol {
                    report.push(ViolationKind::Calendar, a, i, p - c);
                }
            }
        }
        previous = Some(row);
    }
    Ok(report)
}

/// Re-labels every violation in a per-slice report with `expiry`.
pub fn relabel(report: ArbReport, expiry: usize) -> ArbReport {
    report.with_expiry(expiry)
}
