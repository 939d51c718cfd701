//! End-to-end acceptance checks. Each test writes one PASS/FAIL line to
//! stderr (uncaptured) before asserting.

mod common;

use std::io::Write;
use std::time::Instant;

use common::*;
use rand::Rng;
use smoothcall_core::blackscholes::call;
use smoothcall_core::calibration::{calibrate, calibrate_smp, CalibConfig, VarianceBackbone};
use smoothcall_core::dlv::{build_qinv, check_transition, dlv_from_prices, prices_from_density};
use smoothcall_core::generalized::{fit_generalized, DEFAULT_TENSOR_CAP};
use smoothcall_core::linear_surface::LinearSlice;
use smoothcall_core::lp::{self, LpProblem, LpStatus, SolveOptions};
use smoothcall_core::market_data::{ExpirySlice, MarketSnapshot, PureQuote, SnapshotOptions};
use smoothcall_core::matrix::Matrix;
use smoothcall_core::noarb::{check_calendar_with, check_surface_with, density_from_calls, ArbReport, CallSurface, ViolationKind};
use smoothcall_core::smooth_surface::SmoothSurface;
use smoothcall_core::time_interp::AlphaMode;
use smoothcall_core::Error;

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {id:>2} {status} {title}: {detail}");
}

// ---------------------------------------------------------------------------
// 1

fn per_strike_slice(q: &[f64], t: f64, ks: &[f64]) -> Vec<f64> {
    let atoms = [0.5, 1.0, 1.5];
    let vols = [0.05, 1.2, 0.05];
    ks.iter().map(|&k| atoms.iter().zip(vols).zip(q).map(|((&x, s), &w)| w * call(x, k, s * s * t).unwrap()).sum()).collect()
}

#[test]
fn a01_per_strike_variance_counterexample() {
    let start = Instant::now();
    let (t1, t2) = (0.01, 0.1);
    let q1 = [0.0, 1.0, 0.0];
    let q2 = [0.5, 0.0, 0.5];

    let body = linspace(0.0, 1.5, 151);
    let b1 = per_strike_slice(&q1, t1, &body);
    let b2 = per_strike_slice(&q2, t2, &body);
    let inside = check_calendar_with(&[(&body, &b1), (&body, &b2)], 1e-10).unwrap();

    // the violation decays below any fixed absolute tolerance in the tail
    let tail = linspace(1.5, 2.5, 11);
    let c1 = per_strike_slice(&q1, t1, &tail);
    let c2 = per_strike_slice(&q2, t2, &tail);
    let outside = check_calendar_with(&[(&tail, &c1), (&tail, &c2)], 0.0).unwrap();
    let flagged: Vec<f64> = outside.of_kind(ViolationKind::Calendar).map(|v| tail[v.strike]).collect();
    let expected: Vec<f64> = tail[1..].to_vec();

    let elapsed = start.elapsed().as_secs_f64();
    let pass = inside.is_clean() && flagged == expected && elapsed < 1.0;
    report(
        1,
        "per-strike variance counterexample",
        pass,
        &format!("{} violations on K<=1.5, flagged {:?} on [1.5,2.5], {:.3}s", inside.count(ViolationKind::Calendar), flagged, elapsed),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 2

/// `E[(s exp(sqrt(v) z - v/2) - k)^+]` by composite Simpson over the
/// in-the-money normal range.
fn lognormal_quadrature(s: f64, k: f64, v: f64) -> f64 {
    let sd = v.sqrt();
    let lo = (((k / s).ln() + 0.5 * v) / sd).max(-40.0);
    let hi = 40.0_f64;
    if lo >= hi {
        return 0.0;
    }
    let n = 40_000;
    let h = (hi - lo) / n as f64;
    let f = |z: f64| {
        let payoff = s * (sd * z - 0.5 * v).exp() - k;
        payoff.max(0.0) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn a02_kernel_against_quadrature() {
    let start = Instant::now();
    let mut worst: (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for &s in &linspace(0.5, 2.0, 20) {
        for &k in &linspace(0.1, 3.0, 20) {
            for &v in &linspace(1e-4, 4.0, 20) {
                let err = (call(s, k, v).unwrap() - lognormal_quadrature(s, k, v)).abs();
                if err > worst.0 {
                    worst = (err, s, k, v);
                }
            }
        }
    }
    let pass = worst.0 <= 1e-8;
    report(
        2,
        "kernel accuracy",
        pass,
        &format!(
            "max abs error {:.2e} at (s,k,v)=({:.3},{:.3},{:.4}), {:.2}s",
            worst.0,
            worst.1,
            worst.2,
            worst.3,
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 3

#[test]
fn a03_linear_limit() {
    let grid = vec![0.4, 0.6, 0.8, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0];
    let mut q = vec![0.02, 0.08, 0.15, 0.2, 0.15, 0.15, 0.12, 0.08, 0.05];
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= total);
    let mean: f64 = grid.iter().zip(&q).map(|(k, x)| k * x).sum();
    let shift = (1.0 - mean) / (grid[8] - grid[0]);
    q[8] += shift;
    q[0] -= shift;

    let mut ks = vec![0.0];
    ks.extend_from_slice(&grid);
    let calls: Vec<f64> = ks.iter().map(|&k| grid.iter().zip(&q).map(|(&x, &w)| w * (x - k).max(0.0)).sum()).collect();
    let linear = LinearSlice::new(1.0, ks, calls).unwrap();

    let sample = linspace(0.0, 3.0, 3001);
    let gaps: Vec<f64> = [0.25, 0.06, 1e-2, 1e-4]
        .iter()
        .map(|&eta| {
            let s = SmoothSurface::new(vec![1.0], vec![grid.clone()], vec![q.clone()], vec![0.04], eta, AlphaMode::LinearT).unwrap();
            sample.iter().map(|&k| (s.slice_call(0, k) - linear.eval(k)).abs()).fold(0.0, f64::max)
        })
        .collect();
    let pass = gaps.windows(2).all(|w| w[1] < w[0]) && gaps[3] <= 1e-3;
    report(3, "linear limit", pass, &format!("sup gaps {:?}", gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>()));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 4

const ROUND_TRIP_EXPIRIES: [f64; 8] = [1.0 / 12.0, 2.0 / 12.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0];

fn round_trip_market() -> (SmoothSurface, Vec<PureQuote>) {
    let truth = synthetic_surface(&ROUND_TRIP_EXPIRIES, 40, 0.25, 0.2, 2024);
    let quotes = market_from_surface(&truth, 15, 0.2, 0.005);
    (truth, quotes)
}

fn fitted_outside(snapshot: &MarketSnapshot, surface: &SmoothSurface, slack: f64) -> usize {
    snapshot
        .slices
        .iter()
        .enumerate()
        .flat_map(|(j, s)| s.quotes.iter().map(move |q| (j, q)))
        .filter(|(j, q)| {
            let p = surface.slice_call(*j, q.k);
            p < q.bid - slack || p > q.ask + slack
        })
        .count()
}

fn k_max(surface: &SmoothSurface) -> f64 {
    surface.grids().iter().map(|g| g[g.len() - 1]).fold(0.0, f64::max)
}

#[test]
fn a04_calibration_round_trip() {
    let (_, quotes) = round_trip_market();
    let start = Instant::now();
    let snapshot = MarketSnapshot::from_quotes(&quotes, &SnapshotOptions::default()).unwrap();
    let surface = calibrate(&snapshot, &CalibConfig::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let outside = fitted_outside(&snapshot, &surface, 1e-12);
    let ts = linspace(0.04, 2.0, 50);
    let mut ks = linspace(0.0, 1.5 * k_max(&surface), 199);
    ks.push(5.0 * k_max(&surface));
    let arb = check_surface_with(&surface, &ts, &ks, 1e-9).unwrap();
    let pass = outside == 0 && arb.is_clean() && elapsed <= 10.0;
    report(
        4,
        "calibration round trip",
        pass,
        &format!(
            "{} quotes, {} fitted outside bid/ask, {} surface violations (worst {:?}), {:.2}s",
            quotes.len(),
            outside,
            arb.violations.len(),
            arb.worst(),
            elapsed
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 5

fn zero_spread_market() -> (Vec<f64>, Vec<Vec<f64>>, MarketSnapshot) {
    let grid = log_grid(0.4, 2.5, 25);
    let expiries = [0.25, 0.5, 1.0];
    let dens = dlv_densities(&grid, &expiries, 0.2, &mut rng(5));
    let slices = expiries
        .iter()
        .zip(&dens)
        .map(|(&t, q)| {
            let calls = prices_from_density(&grid, q);
            let quotes = grid[1..grid.len() - 1]
                .iter()
                .zip(&calls[1..grid.len() - 1])
                .map(|(&k, &c)| PureQuote { weight: 1.0, ..PureQuote::new(t, k, c, c) })
                .collect();
            ExpirySlice::new(t, quotes, grid.clone()).unwrap()
        })
        .collect();
    (grid, dens, MarketSnapshot::new(slices).unwrap())
}

#[test]
fn a05_eta_zero_equivalence() {
    let (grid, _, snapshot) = zero_spread_market();
    let config = CalibConfig { eta: 0.0, ..CalibConfig::default() };
    let surface = calibrate(&snapshot, &config).unwrap();
    let mut worst: f64 = 0.0;
    let mut ks = vec![0.0];
    ks.extend_from_slice(&grid);
    for (j, s) in snapshot.slices.iter().enumerate() {
        let mut calls = vec![1.0, 1.0 - grid[0]];
        calls.extend(s.mids());
        calls.push(0.0);
        let p = density_from_calls(&ks, &calls).unwrap();
        for (a, b) in surface.densities()[j].iter().zip(&p.masses) {
            worst = worst.max((a - b).abs());
        }
    }
    let pass = worst <= 1e-8;
    report(5, "eta = 0 equivalence", pass, &format!("max atom difference {worst:.2e}"));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 6

#[test]
fn a06_dlv_suite() {
    let mut r = rng(6);
    let mut worst_entry: f64 = 0.0;
    let mut worst_col: f64 = 0.0;
    let mut worst_mean: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(3..40);
        let mut k = 0.1 + r.random::<f64>();
        let strikes: Vec<f64> = (0..n)
            .map(|_| {
                k += 0.01 + 0.3 * r.random::<f64>();
                k
            })
            .collect();
        let sigma: Vec<f64> = (0..n).map(|_| 2.0 * r.random::<f64>()).collect();
        let dt = 2.0 * (1.0 - r.random::<f64>());
        let check = check_transition(&build_qinv(&strikes, &sigma, dt).unwrap()).unwrap();
        worst_entry = worst_entry.min(check.min_entry);
        worst_col = worst_col.max(check.max_column_sum_error);
        worst_mean = worst_mean.max(check.max_mean_error);
    }
    let a = worst_entry >= -1e-12 && worst_col <= 1e-10 && worst_mean <= 1e-10;

    let grid = log_grid(0.3, 3.0, 30);
    let expiries = [0.1, 0.3, 0.6, 1.0];
    let dens = dlv_densities(&grid, &expiries, 0.3, &mut r);
    let prices: Vec<Vec<f64>> = dens.iter().map(|q| prices_from_density(&grid, q)).collect();
    let dlv = dlv_from_prices(&grid, &expiries, &prices, &[0.01, 0.03, 0.06, 0.1]).unwrap();
    let back = dlv.densities(None).unwrap();
    let mut round_trip: f64 = 0.0;
    for (a, b) in dens.iter().zip(&back) {
        for (x, y) in a.iter().zip(b) {
            round_trip = round_trip.max((x - y).abs());
        }
    }
    for (p, q) in prices.iter().zip(&back) {
        for (x, y) in p.iter().zip(prices_from_density(&grid, q)) {
            round_trip = round_trip.max((x - y).abs());
        }
    }
    let b = round_trip <= 1e-10;

    let op = build_qinv(&[1.0, 2.0, 3.0], &[0.0, 0.5, 0.0], 1.0).unwrap();
    let inv: Matrix = op.to_dense().inverse().unwrap();
    let col = [inv[(0, 1)], inv[(1, 1)], inv[(2, 1)]];
    let c = col.iter().zip([0.25, 0.5, 0.25]).all(|(x, y)| (x - y).abs() <= 1e-15);

    let pass = a && b && c;
    report(
        6,
        "discrete local volatility suite",
        pass,
        &format!(
            "min Q entry {worst_entry:.1e}, column sum err {worst_col:.1e}, mean err {worst_mean:.1e}; round trip {round_trip:.1e}; middle column {col:?}"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 7 and 8 share the randomly generated calibrations

fn random_calibration(seed: u64) -> (MarketSnapshot, SmoothSurface) {
    let mut r = rng(1000 + seed);
    let m = 3;
    let mut t = 0.0;
    let expiries: Vec<f64> = (0..m)
        .map(|_| {
            t += 0.1 + 0.6 * r.random::<f64>();
            t
        })
        .collect();
    let vol = 0.15 + 0.2 * r.random::<f64>();
    let eta = 0.1 + 0.4 * r.random::<f64>();
    let truth = synthetic_surface(&expiries, 24, eta, vol, seed);
    let quotes = market_from_surface(&truth, 9, vol, 0.005);
    let snapshot = MarketSnapshot::from_quotes(&quotes, &SnapshotOptions::default()).unwrap();
    let config = CalibConfig { eta, ..CalibConfig::default() };
    let surface = calibrate(&snapshot, &config).unwrap();
    (snapshot, surface)
}

#[test]
fn a07_monte_carlo_oracle() {
    let start = Instant::now();
    let mut comparisons = 0;
    let mut misses = Vec::new();
    let mut worst_z: f64 = 0.0;
    for seed in 0..20 {
        let (_, surface) = random_calibration(seed);
        for j in 0..surface.expiries().len() {
            let sd = (surface.variances()[j]).sqrt();
            let strikes: Vec<f64> = linspace(-2.0 * sd, 2.0 * sd, 10).iter().map(|z| z.exp()).collect();
            let mc = surface.mc_verify(j, &strikes, 1_000_000, 77 + seed * 31 + j as u64).unwrap();
            for (est, &k) in mc.estimates.iter().zip(&strikes) {
                let exact = surface.slice_call(j, k);
                let z = est.z_score(exact);
                comparisons += 1;
                worst_z = worst_z.max(z.abs());
                if z.abs() > 3.0 {
                    misses.push((seed, j, k, z));
                }
            }
        }
    }

    let (_, _, snapshot) = zero_spread_market();
    let degenerate = calibrate(&snapshot, &CalibConfig { eta: 0.0, ..CalibConfig::default() }).unwrap();
    let strikes = linspace(0.5, 2.0, 10);
    let mut exact_gap: f64 = 0.0;
    for j in 0..degenerate.expiries().len() {
        let mc = degenerate.mc_verify(j, &strikes, 1_000_000, 3).unwrap();
        for (est, &k) in mc.estimates.iter().zip(&strikes) {
            exact_gap = exact_gap.max((est.estimate - degenerate.slice_call(j, k)).abs());
            assert_eq!(est.std_error, 0.0);
        }
    }

    let pass = misses.is_empty() && exact_gap <= 1e-15;
    report(
        7,
        "Monte Carlo oracle",
        pass,
        &format!(
            "{comparisons} comparisons, max |z| {worst_z:.2}, beyond 3 SE {misses:?}; eta = 0 gap {exact_gap:.1e}; {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

/// Grid invariants with the tail probe at `1.5 * kmax`.
fn invariant_report<S: CallSurface>(surface: &S, t_last: f64, kmax: f64) -> ArbReport {
    let ts = linspace(t_last / 50.0, t_last, 50);
    let mut ks = linspace(0.0, 1.5 * kmax, 400);
    ks.dedup();
    check_surface_with(surface, &ts, &ks, 1e-10).unwrap()
}

#[test]
fn a08_invariants_on_calibrated_surfaces() {
    let mut surfaces: Vec<(String, SmoothSurface)> = Vec::new();
    let (_, quotes) = round_trip_market();
    let snap = MarketSnapshot::from_quotes(&quotes, &SnapshotOptions::default()).unwrap();
    surfaces.push(("round trip".into(), calibrate(&snap, &CalibConfig::default()).unwrap()));
    let (_, _, snap) = zero_spread_market();
    surfaces.push(("eta = 0".into(), calibrate(&snap, &CalibConfig { eta: 0.0, ..CalibConfig::default() }).unwrap()));
    for seed in 0..20 {
        surfaces.push((format!("random {seed}"), random_calibration(seed).1));
    }

    let kinds = [
        ViolationKind::UnitExpectation,
        ViolationKind::ZeroAttainable,
        ViolationKind::SlopeBounds,
        ViolationKind::Nonconvex,
        ViolationKind::TailNonzero,
        ViolationKind::Calendar,
    ];
    let mut counts = [0usize; 6];
    let mut worst_tail: f64 = 0.0;
    let mut failing = 0;
    for (_, s) in &surfaces {
        let t_last = *s.expiries().last().unwrap();
        let rep = invariant_report(s, t_last, k_max(s));
        if !rep.is_clean() {
            failing += 1;
        }
        for (c, &kind) in counts.iter_mut().zip(&kinds) {
            *c += rep.count(kind);
        }
        worst_tail = rep.of_kind(ViolationKind::TailNonzero).map(|v| v.magnitude).fold(worst_tail, f64::max);
    }
    let breakdown: Vec<String> = kinds.iter().zip(&counts).map(|(k, c)| format!("{}={c}", k.as_str())).collect();
    let pass = failing == 0;
    report(
        8,
        "invariant suite",
        pass,
        &format!("{} surfaces, {failing} with violations; {}; worst tail {worst_tail:.1e}", surfaces.len(), breakdown.join(" ")),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 9

fn desk_market() -> MarketSnapshot {
    let grid = vec![0.4, 0.7, 1.0, 1.3, 1.8, 2.6];
    let ks = [0.8, 0.9, 1.0, 1.1, 1.25];
    let slices = [(0.25, 0.22), (0.5, 0.21), (1.0, 0.2)]
        .iter()
        .map(|&(t, sigma)| {
            let quotes = ks
                .iter()
                .map(|&k| {
                    let bid = call(1.0, k, (sigma - 0.005f64).powi(2) * t).unwrap();
                    let ask = call(1.0, k, (sigma + 0.005f64).powi(2) * t).unwrap();
                    PureQuote { weight: 1.0 / (ask - bid), ..PureQuote::new(t, k, bid, ask) }
                })
                .collect();
            ExpirySlice::new(t, quotes, grid.clone()).unwrap()
        })
        .collect();
    MarketSnapshot::new(slices).unwrap()
}

#[test]
fn a09_generalized_desk_scale() {
    let snapshot = desk_market();
    let config = CalibConfig::default();
    let gnr = fit_generalized(&snapshot, None, &config, DEFAULT_TENSOR_CAP).unwrap();
    let entries = gnr.tensor_len(2);
    let capped = matches!(fit_generalized(&snapshot, None, &config, 100), Err(Error::TensorCap { required: 216, cap: 100 }));
    let rep = invariant_report(&gnr, 1.0, gnr.support_max(2));

    let first = MarketSnapshot::new(vec![snapshot.slices[0].clone()]).unwrap();
    let v = 0.04;
    let bb = VarianceBackbone { variances: vec![v], raw: vec![v], repairs: 0 };
    let smp = calibrate_smp(&first, &bb, &config).unwrap();
    let single = fit_generalized(&first, Some(&[vec![v; 6]]), &config, DEFAULT_TENSOR_CAP).unwrap();
    let grid = &first.slices[0].model_strikes;
    let mut gap: f64 = 0.0;
    for k in linspace(0.0, 3.0, 61) {
        let p: f64 = grid.iter().zip(&smp.densities[0]).map(|(&x, &w)| w * call(x, k, config.eta * v).unwrap()).sum();
        gap = gap.max((p - single.slice_call(0, k)).abs());
    }

    let pass = entries == 216 && capped && rep.is_clean() && gap <= 1e-9;
    report(
        9,
        "generalized model at desk scale",
        pass,
        &format!(
            "tensor entries {entries}, cap enforced {capped}, {} invariant violations (worst {:?}), single-expiry gap {gap:.1e}",
            rep.violations.len(),
            rep.worst()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 10

struct Dense {
    c: Vec<f64>,
    eq: Vec<(Vec<f64>, f64)>,
    le: Vec<(Vec<f64>, f64)>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn random_lp(r: &mut rand_chacha::ChaCha8Rng) -> Dense {
    let n = r.random_range(2..=8);
    let x0: Vec<f64> = (0..n).map(|_| 3.0 * r.random::<f64>()).collect();
    let row = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| r.random_range(-2.0..2.0)).collect() };
    let m_eq = r.random_range(0..=2.min(n - 1));
    let m_le = r.random_range(1..=4);
    let eq = (0..m_eq)
        .map(|_| {
            let a = row(r);
            let b = a.iter().zip(&x0).map(|(x, y)| x * y).sum();
            (a, b)
        })
        .collect();
    let le = (0..m_le)
        .map(|_| {
            let a = row(r);
            let b: f64 = a.iter().zip(&x0).map(|(x, y)| x * y).sum::<f64>() + r.random::<f64>();
            (a, b)
        })
        .collect();
    Dense {
        c: row(r),
        eq,
        le,
        lower: (0..n).map(|i| if r.random::<f64>() < 0.3 { x0[i] - 5.0 } else { 0.0 }).collect(),
        upper: (0..n).map(|i| x0[i] + 1.0 + 4.0 * r.random::<f64>()).collect(),
    }
}

fn to_problem(d: &Dense) -> LpProblem {
    let mut lp = LpProblem::new(0);
    for i in 0..d.c.len() {
        lp.add_var(d.c[i], d.lower[i], d.upper[i]);
    }
    let terms = |a: &[f64]| a.iter().enumerate().map(|(i, &x)| (i, x)).collect::<Vec<_>>();
    for (a, b) in &d.eq {
        lp.add_eq(terms(a), *b);
    }
    for (a, b) in &d.le {
        lp.add_le(terms(a), *b);
    }
    lp
}

/// Minimum over all feasible vertices: every choice of `n` active
/// constraints among rows and bounds that contains every equality.
fn vertex_oracle(d: &Dense) -> Option<f64> {
    let n = d.c.len();
    let mut candidates: Vec<(Vec<f64>, f64)> = d.le.clone();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        candidates.push((e.clone(), d.lower[i]));
        candidates.push((e, d.upper[i]));
    }
    let need = n - d.eq.len();
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(need);
    fn visit(d: &Dense, cands: &[(Vec<f64>, f64)], need: usize, from: usize, pick: &mut Vec<usize>, best: &mut Option<f64>) {
        if pick.len() == need {
            let n = d.c.len();
            let rows: Vec<&(Vec<f64>, f64)> = d.eq.iter().chain(pick.iter().map(|&i| &cands[i])).collect();
            let a = Matrix::from_fn(n, n, |r, c| rows[r].0[c]);
            let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let Ok(x) = a.solve(&b) else { return };
            let feasible = d.eq.iter().all(|(a, b)| (dot(a, &x) - b).abs() <= 1e-9)
                && d.le.iter().all(|(a, b)| dot(a, &x) <= b + 1e-9)
                && x.iter().zip(&d.lower).all(|(x, l)| *x >= l - 1e-9)
                && x.iter().zip(&d.upper).all(|(x, u)| *x <= u + 1e-9);
            if feasible {
                let obj = dot(&d.c, &x);
                if best.is_none_or(|b| obj < b) {
                    *best = Some(obj);
                }
            }
            return;
        }
        for i in from..cands.len() {
            pick.push(i);
            visit(d, cands, need, i + 1, pick, best);
            pick.pop();
        }
    }
    visit(d, &candidates, need, 0, &mut pick, &mut best);
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn a10_simplex_against_vertex_enumeration() {
    let mut r = rng(10);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    let mut deterministic = true;
    for _ in 0..50 {
        let d = random_lp(&mut r);
        let problem = to_problem(&d);
        let sol = lp::solve(&problem, &SolveOptions::default());
        let again = lp::solve(&problem, &SolveOptions::default());
        deterministic &= sol.x == again.x && sol.objective.to_bits() == again.objective.to_bits();
        match (vertex_oracle(&d), sol.status) {
            (Some(best), LpStatus::Optimal) => {
                let gap = (best - sol.objective).abs() / (1.0 + best.abs());
                worst = worst.max(gap);
                if gap > 1e-8 || sol.max_residual > 1e-8 {
                    mismatches += 1;
                }
            }
            _ => mismatches += 1,
        }
    }
    let pass = mismatches == 0 && deterministic;
    report(
        10,
        "simplex against vertex enumeration",
        pass,
        &format!("50 instances, {mismatches} mismatches, worst relative gap {worst:.1e}, deterministic {deterministic}"),
    );
    assert!(pass);
}
