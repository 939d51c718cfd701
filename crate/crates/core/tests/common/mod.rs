#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smoothcall_core::blackscholes::{call, implied_vol};
use smoothcall_core::dlv::DlvSurface;
use smoothcall_core::market_data::PureQuote;
use smoothcall_core::smooth_surface::SmoothSurface;
use smoothcall_core::time_interp::AlphaMode;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` strikes log-spaced on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `n` evenly spaced points whose ends are exactly `lo` and `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    out[n - 1] = hi;
    out
}

/// Martingale densities on `grid` driven by random local volatilities around
/// `level`.
pub fn dlv_densities(grid: &[f64], expiries: &[f64], level: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = grid.len();
    let sigma = expiries
        .iter()
        .map(|_| (0..n).map(|i| if i == 0 || i == n - 1 { 0.0 } else { level * (0.7 + 0.6 * rng.random::<f64>()) }).collect())
        .collect();
    let surf = DlvSurface { strikes: grid.to_vec(), expiries: expiries.to_vec(), sigma, variances: expiries.to_vec() };
    surf.densities(None).unwrap()
}

/// A smooth surface with `m` expiries on a common grid of `n` strikes whose
/// total implied volatility is roughly `vol`.
pub fn synthetic_surface(expiries: &[f64], n: usize, eta: f64, vol: f64, seed: u64) -> SmoothSurface {
    let mut r = rng(seed);
    let grid = log_grid(0.3, 3.0, n);
    let dens = dlv_densities(&grid, expiries, vol * (1.0 - eta).sqrt(), &mut r);
    let variances = expiries.iter().map(|t| vol * vol * t).collect();
    SmoothSurface::new(expiries.to_vec(), vec![grid; expiries.len()], dens, variances, eta, AlphaMode::LinearT).unwrap()
}

/// Quotes around the surface's prices at `per_expiry` strikes spanning two
/// standard deviations, widened by `half_spread` in implied volatility.
pub fn market_from_surface(surface: &SmoothSurface, per_expiry: usize, vol: f64, half_spread: f64) -> Vec<PureQuote> {
    let mut out = Vec::new();
    for (j, &t) in surface.expiries().iter().enumerate() {
        let width = 2.0 * vol * t.sqrt();
        for z in linspace(-width, width, per_expiry) {
            let k = z.exp();
            let mid = surface.slice_call(j, k);
            let iv = implied_vol(mid, 1.0, k, t).unwrap();
            let lo = (iv - half_spread).max(1e-4);
            let bid = call(1.0, k, lo * lo * t).unwrap();
            let ask = call(1.0, k, (iv + half_spread).powi(2) * t).unwrap();
            out.push(PureQuote::new(t, k, bid, ask));
        }
    }
    out
}
