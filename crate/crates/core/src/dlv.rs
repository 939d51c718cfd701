//! Discrete local volatilities.
//!
//! On a fixed strike grid `K[0] < ... < K[N-1]` a non-negative volatility
//! `sigma[j][i]` per interior node defines the implicit step
//! `Qinv q_j = q_{j-1}` where `Qinv` is tridiagonal, column-stochastic and
//! preserves `K' q`. Its inverse is a non-negative martingale transition
//! matrix, so any non-negative surface of volatilities yields densities in
//! convex order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::noarb::ViolationKind;
use crate::smooth_surface::SmoothSurface;
use crate::time_interp::AlphaMode;

/// The implicit step matrix in tridiagonal form. Row `r` reads
/// `sub[r] q[r-1] + diag[r] q[r] + sup[r] q[r+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOperator {
    pub strikes: Vec<f64>,
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

fn validate_strikes(strikes: &[f64]) -> Result<()> {
    if strikes.len() < 3 {
        return Err(Error::input("at least three strikes are required"));
    }
    if !(strikes[0] >= 0.0) || strikes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::input("strikes must be non-negative and strictly increasing"));
    }
    Ok(())
}

/// `(omega_minus, omega_plus)` at interior node `i`: `K_i^2` over the
/// product of the centred width and the one-sided gap.
fn omega_pair(strikes: &[f64], i: usize) -> (f64, f64) {
    let k2 = strikes[i] * strikes[i];
    let width = strikes[i + 1] - strikes[i - 1];
    (k2 / (width * (strikes[i] - strikes[i - 1])), k2 / (width * (strikes[i + 1] - strikes[i])))
}

/// Builds `Qinv` for one step of length `dt`. `sigma` has one entry per
/// strike; the two boundary entries are ignored.
pub fn build_qinv(strikes: &[f64], sigma: &[f64], dt: f64) -> Result<TransitionOperator> {
    validate_strikes(strikes)?;
    if sigma.len() != strikes.len() {
        return Err(Error::input("one volatility per strike is required"));
    }
    if sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::input("discrete local volatilities must be finite and non-negative"));
    }
    if !(dt > 0.0) {
        return Err(Error::input("time step must be positive"));
    }
    let n = strikes.len();
    let mut sub = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut sup = vec![0.0; n];
    for i in 1..n - 1 {
        let (om, op) = omega_pair(strikes, i);
        let s2dt = sigma[i] * sigma[i] * dt;
        let (wm, wp) = (om * s2dt, op * s2dt);
        // column i: -wm above the diagonal, -wp below
        diag[i] = 1.0 + wm + wp;
        sup[i - 1] = -wm;
        sub[i + 1] = -wp;
    }
    Ok(TransitionOperator { strikes: strikes.to_vec(), sub, diag, sup })
}

/// The matrix `Omega` with `Qinv = I + Omega diag(sigma^2 dt)`.
pub fn omega_matrix(strikes: &[f64]) -> Result<Matrix> {
    validate_strikes(strikes)?;
    let n = strikes.len();
    let mut m = Matrix::zeros(n, n);
    for i in 1..n - 1 {
        let (om, op) = omega_pair(strikes, i);
        m[(i - 1, i)] = -om;
        m[(i, i)] = om + op;
        m[(i + 1, i)] = -op;
    }
    Ok(m)
}

impl TransitionOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.len();
        Matrix::from_fn(n, n, |r, c| {
            if r == c {
                self.diag[r]
            } else if c + 1 == r {
                self.sub[r]
            } else if r + 1 == c {
                self.sup[r]
            } else {
                0.0
            }
        })
    }

    /// Solves `Qinv q = q_prev` by the Thomas algorithm.
    pub fn propagate(&self, q_prev: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if q_prev.len() != n {
            return Err(Error::input("density length does not match the operator"));
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if !(denom.abs() > 0.0) {
            return Err(Error::Numeric("singular tridiagonal system".into()));
        }
        c[0] = self.sup[0] / denom;
        d[0] = q_prev[0] / denom;
        for r in 1..n {
            denom = self.diag[r] - self.sub[r] * c[r - 1];
            if !(denom.abs() > 1e-300) {
                return Err(Error::Numeric("singular tridiagonal system".into()));
            }
            c[r] = if r + 1 < n { self.sup[r] / denom } else { 0.0 };
            d[r] = (q_prev[r] - self.sub[r] * d[r - 1]) / denom;
        }
        for r in (0..n - 1).rev() {
            d[r] -= c[r] * d[r + 1];
        }
        Ok(d)
    }
}

/// Outcome of [`check_transition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionCheck {
    pub min_entry: f64,
    pub max_column_sum_error: f64,
    pub max_mean_error: f64,
}

impl TransitionCheck {
    pub fn passed(&self) -> bool {
        self.min_entry >= -1e-12 && self.max_column_sum_error <= 1e-10 && self.max_mean_error <= 1e-10
    }
}

/// Inverts `Qinv` densely and measures positivity, column sums and mean
/// preservation of `Q`. Limited to 200 strikes.
pub fn check_transition(op: &TransitionOperator) -> Result<TransitionCheck> {
    let n = op.len();
    if n > 200 {
        return Err(Error::input("dense transition check is limited to 200 strikes"));
    }
    let q = op.to_dense().inverse()?;
    let mut out = TransitionCheck { min_entry: f64::INFINITY, max_column_sum_error: 0.0, max_mean_error: 0.0 };
    for c in 0..n {
        let mut sum = 0.0;
        let mut mean = 0.0;
        for r in 0..n {
            out.min_entry = out.min_entry.min(q[(r, c)]);
            sum += q[(r, c)];
            mean += op.strikes[r] * q[(r, c)];
        }
        out.max_column_sum_error = out.max_column_sum_error.max((sum - 1.0).abs());
        out.max_mean_error = out.max_mean_error.max((mean - op.strikes[c]).abs());
    }
    Ok(out)
}

/// Volatilities on a homogeneous grid with their variance backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct DlvSurface {
    pub strikes: Vec<f64>,
    pub expiries: Vec<f64>,
    /// `sigma[j][i]`; boundary entries are zero.
    pub sigma: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl DlvSurface {
    pub fn validate(&self) -> Result<()> {
        validate_strikes(&self.strikes)?;
        let m = self.expiries.len();
        if m == 0 || self.sigma.len() != m || self.variances.len() != m {
            return Err(Error::input("expiries, volatilities and variances differ in length"));
        }
        if !(self.expiries[0] > 0.0) || self.expiries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::input("expiries must be positive and strictly increasing"));
        }
        for row in &self.sigma {
            if row.len() != self.strikes.len() {
                return Err(Error::input("one volatility per strike is required"));
            }
            if row.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
                return Err(Error::input("discrete local volatilities must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Operator for the step into expiry `j`.
    pub fn operator(&self, j: usize) -> Result<TransitionOperator> {
        let t0 = if j == 0 { 0.0 } else { self.expiries[j - 1] };
        build_qinv(&self.strikes, &self.sigma[j], self.expiries[j] - t0)
    }

    /// Densities `q_1..q_M` from `q0` (default [`default_q0`]).
    pub fn densities(&self, q0: Option<&[f64]>) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut q = match q0 {
            Some(q) => q.to_vec(),
            None => default_q0(&self.strikes)?,
        };
        let mut out = Vec::with_capacity(self.expiries.len());
        for j in 0..self.expiries.len() {
            q = self.operator(j)?.propagate(&q)?;
            out.push(q.clone());
        }
        Ok(out)
    }

    /// A smooth surface whose densities come from these volatilities.
    pub fn to_smooth_surface(&self, q0: Option<&[f64]>, eta: f64, mode: AlphaMode) -> Result<SmoothSurface> {
        let densities = self.densities(q0)?;
        SmoothSurface::new(
            self.expiries.clone(),
            vec![self.strikes.clone(); self.expiries.len()],
            densities,
            self.variances.clone(),
            eta,
            mode,
        )
    }
}

/// Point mass at 1 if 1 is a node; otherwise the two nodes around 1 weighted
/// to have mean exactly 1.
pub fn default_q0(strikes: &[f64]) -> Result<Vec<f64>> {
    validate_strikes(strikes)?;
    let mut q = vec![0.0; strikes.len()];
    let b = strikes.partition_point(|&k| k < 1.0);
    if b == 0 || b == strikes.len() {
        return Err(Error::input("strikes must bracket 1"));
    }
    if strikes[b] == 1.0 {
        q[b] = 1.0;
    } else {
        let (ka, kb) = (strikes[b - 1], strikes[b]);
        q[b - 1] = (kb - 1.0) / (kb - ka);
        q[b] = (1.0 - ka) / (kb - ka);
    }
    Ok(q)
}

/// Backbone variances as cumulative sums of strictly positive increments.
pub fn backbone_from_increments(increments: &[f64]) -> Result<Vec<f64>> {
    if increments.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::input("forward variance increments must be positive"));
    }
    Ok(increments
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect())
}

/// Linear call prices at the nodes, `C(K_l) = sum_i q[i] (K_i - K_l)^+`.
pub fn prices_from_density(strikes: &[f64], q: &[f64]) -> Vec<f64> {
    strikes.iter().map(|&k| strikes.iter().zip(q).map(|(&x, &p)| p * (x - k).max(0.0)).sum()).collect()
}

/// Recovers volatilities from node prices `calls[j][i]`. The slice before the
/// first expiry is the intrinsic `(1 - K)^+`. Each slice must satisfy
/// `C[0] = 1 - K[0]` and `C[N-1] = 0`.
pub fn dlv_from_prices(strikes: &[f64], expiries: &[f64], calls: &[Vec<f64>], variances: &[f64]) -> Result<DlvSurface> {
    validate_strikes(strikes)?;
    let n = strikes.len();
    if calls.len() != expiries.len() || variances.len() != expiries.len() {
        return Err(Error::input("one price row and variance per expiry is required"));
    }
    let mut prev: Vec<f64> = strikes.iter().map(|&k| (1.0 - k).max(0.0)).collect();
    let mut t_prev = 0.0;
    let mut sigma = Vec::with_capacity(expiries.len());
    for (j, (&t, row)) in expiries.iter().zip(calls).enumerate() {
        if row.len() != n {
            return Err(Error::input("price row length does not match the strikes"));
        }
        if !(t > t_prev) {
            return Err(Error::input("expiries must be positive and strictly increasing"));
        }
        let dt = t - t_prev;
        let mut s = vec![0.0; n];
        for i in 1..n - 1 {
            let theta = (row[i] - prev[i]) / dt;
            let slope_up = (row[i + 1] - row[i]) / (strikes[i + 1] - strikes[i]);
            let slope_down = (row[i] - row[i - 1]) / (strikes[i] - strikes[i - 1]);
            let mass = slope_up - slope_down;
            let gamma = mass / (0.5 * (strikes[i + 1] - strikes[i - 1]));
            if theta < -1e-12 {
                return Err(Error::Arbitrage { expiry: j, strike: i, kind: ViolationKind::Calendar, magnitude: -theta });
            }
            if gamma < -1e-12 {
                return Err(Error::Arbitrage { expiry: j, strike: i, kind: ViolationKind::Nonconvex, magnitude: -gamma });
            }
            let (theta, gamma) = (theta.max(0.0), gamma.max(0.0));
            s[i] = if theta == 0.0 {
                0.0
            } else if gamma == 0.0 {
                return Err(Error::Numeric(alloc::format!("price increase without density at expiry {j}, strike {i}")));
            } else {
                libm::sqrt(2.0 * theta / (strikes[i] * strikes[i] * gamma))
            };
        }
        sigma.push(s);
        prev = row.clone();
        t_prev = t;
    }
    Ok(DlvSurface { strikes: strikes.to_vec(), expiries: expiries.to_vec(), sigma, variances: variances.to_vec() })
}
