//! Fit diagnostics: per-quote errors relative to the spread, per-expiry
//! summaries and an arbitrage check of the input mids.

use std::path::Path;

use serde::{Deserialize, Serialize};
use smoothcall_core::calibration::fitted_prices;
use smoothcall_core::market_data::MarketSnapshot;
use smoothcall_core::noarb::{check_calendar_with, check_slice_with, relabel, ArbReport, TOL};
use smoothcall_core::smooth_surface::SmoothSurface;

use crate::error::Result;
use crate::json::ArbReportDoc;

/// Slack when deciding whether a fitted price lies outside its quote.
pub const OUTSIDE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteFit {
    pub expiry: f64,
    pub strike: f64,
    pub bid: f64,
    pub ask: f64,
    pub fitted: f64,
    pub fitted_vol: Option<f64>,
    pub bid_vol: Option<f64>,
    pub ask_vol: Option<f64>,
    /// `(fitted - mid) / (spread / 2)`: inside the quote exactly when the
    /// magnitude is at most 1. Absent for zero spreads.
    pub err_over_spread: Option<f64>,
    pub density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpirySummary {
    pub expiry: f64,
    pub quotes: usize,
    pub max_abs_err_over_spread: f64,
    pub outside_bid_ask: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McExpiry {
    pub expiry: f64,
    pub max_z: f64,
    pub mean: f64,
    pub mean_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSection {
    pub paths: usize,
    pub seed: u64,
    pub expiries: Vec<McExpiry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub quotes: Vec<QuoteFit>,
    pub expiries: Vec<ExpirySummary>,
    pub mid_arbitrage: ArbReportDoc,
    pub fit_seconds: f64,
    pub lp_objective: Option<f64>,
    pub lp_iterations: Option<usize>,
    pub monte_carlo: Option<McSection>,
}

/// Per-expiry `(strikes, mids)` inside the boundary rows `C(0) = 1`,
/// `C(K^min) = 1 - K^min` and `C(K^max) = 0`.
pub fn mid_rows(snapshot: &MarketSnapshot) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (kmin, kmax) = snapshot.bounds;
    snapshot
        .slices
        .iter()
        .map(|s| {
            let mut k = vec![0.0, kmin];
            let mut c = vec![1.0, 1.0 - kmin];
            for q in s.quotes.iter().filter(|q| q.k > kmin && q.k < kmax) {
                k.push(q.k);
                c.push(q.mid());
            }
            k.push(kmax);
            c.push(0.0);
            (k, c)
        })
        .collect()
}

/// Arbitrage report of the quote mids; strike indices refer to [`mid_rows`].
pub fn mid_arbitrage(snapshot: &MarketSnapshot) -> Result<ArbReport> {
    mid_arbitrage_with(snapshot, TOL)
}

pub fn mid_arbitrage_with(snapshot: &MarketSnapshot, tol: f64) -> Result<ArbReport> {
    let rows = mid_rows(snapshot);
    let mut report = ArbReport::default();
    for (j, (k, c)) in rows.iter().enumerate() {
        report.extend(relabel(check_slice_with(k, c, tol)?, j));
    }
    let slices: Vec<(&[f64], &[f64])> = rows.iter().map(|(k, c)| (&k[..], &c[..])).collect();
    report.extend(check_calendar_with(&slices, tol)?);
    Ok(report)
}

fn vol(price: f64, k: f64, t: f64) -> Option<f64> {
    smoothcall_core::blackscholes::implied_vol(price, 1.0, k, t).ok()
}

pub fn build(snapshot: &MarketSnapshot, surface: &SmoothSurface, fit_seconds: f64) -> Result<FitReport> {
    let fitted = fitted_prices(snapshot, surface);
    let mut quotes = Vec::new();
    let mut expiries = Vec::new();
    for (j, (slice, prices)) in snapshot.slices.iter().zip(&fitted).enumerate() {
        let mut summary = ExpirySummary { expiry: slice.t, quotes: slice.quotes.len(), max_abs_err_over_spread: 0.0, outside_bid_ask: 0 };
        for (q, &p) in slice.quotes.iter().zip(prices) {
            let half = 0.5 * q.spread();
            let ratio = (half > 0.0).then(|| (p - q.mid()) / half);
            if let Some(r) = ratio {
                summary.max_abs_err_over_spread = summary.max_abs_err_over_spread.max(r.abs());
            }
            if p < q.bid - OUTSIDE_SLACK || p > q.ask + OUTSIDE_SLACK {
                summary.outside_bid_ask += 1;
            }
            quotes.push(QuoteFit {
                expiry: q.t,
                strike: q.k,
                bid: q.bid,
                ask: q.ask,
                fitted: p,
                fitted_vol: vol(p, q.k, q.t),
                bid_vol: vol(q.bid, q.k, q.t),
                ask_vol: vol(q.ask, q.k, q.t),
                err_over_spread: ratio,
                density: surface.slice_density(j, q.k).ok(),
            });
        }
        expiries.push(summary);
    }
    Ok(FitReport {
        quotes,
        expiries,
        mid_arbitrage: ArbReportDoc::from_report(&mid_arbitrage(snapshot)?),
        fit_seconds,
        lp_objective: surface.metadata.objective,
        lp_iterations: surface.metadata.lp_iterations,
        monte_carlo: None,
    })
}

/// Monte Carlo repricing of every quoted strike. Expiry `j` uses seed `seed + j`.
pub fn monte_carlo(snapshot: &MarketSnapshot, surface: &SmoothSurface, paths: usize, seed: u64) -> Result<McSection> {
    let mut expiries = Vec::new();
    for (j, slice) in snapshot.slices.iter().enumerate() {
        let strikes = slice.market_strikes();
        let mc = surface.mc_verify(j, &strikes, paths, seed.wrapping_add(j as u64))?;
        let max_z = strikes.iter().zip(&mc.estimates).map(|(&k, e)| e.z_score(surface.slice_call(j, k))).fold(0.0, f64::max);
        expiries.push(McExpiry { expiry: slice.t, max_z, mean: mc.mean.estimate, mean_std_error: mc.mean.std_error });
    }
    Ok(McSection { paths, seed, expiries })
}

#[derive(Serialize)]
struct CsvRow {
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "K")]
    k: f64,
    bid_vol: Option<f64>,
    ask_vol: Option<f64>,
    fit_vol: Option<f64>,
    err_over_spread: Option<f64>,
    density: Option<f64>,
}

/// Plot-ready table; missing values are empty cells.
pub fn write_csv(path: &Path, report: &FitReport) -> Result<()> {
    let rows: Vec<CsvRow> = report
        .quotes
        .iter()
        .map(|q| CsvRow {
            t: q.expiry,
            k: q.strike,
            bid_vol: q.bid_vol,
            ask_vol: q.ask_vol,
            fit_vol: q.fitted_vol,
            err_over_spread: q.err_over_spread,
            density: q.density,
        })
        .collect();
    crate::io::write_rows(path, &CSV_HEADER, &rows)
}

pub const CSV_HEADER: [&str; 7] = ["T", "K", "bid_vol", "ask_vol", "fit_vol", "err_over_spread", "density"];
