//! Interpolation weights between expiries.
//!
//! Every surface in this crate blends two adjacent slices along fixed strikes,
//! `(1 - a) C_j(K) + a C_{j+1}(K)`, with the trivial slice `(1 - K)^+` standing
//! in at `T = 0`. Any `a` that increases from 0 to 1 keeps the blend free of
//! calendar arbitrage.

use alloc::vec::Vec;

use crate::blackscholes::{call_unchecked, implied_vol};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaMode {
    /// Linear in calendar time.
    #[default]
    LinearT,
    /// Linear in at-the-money total implied variance, mapped through the
    /// at-the-money prices of the bracketing slices.
    AtmVariance,
}

impl AlphaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AlphaMode::LinearT => "linear",
            AlphaMode::AtmVariance => "atmvar",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" | "linear_t" => Some(AlphaMode::LinearT),
            "atmvar" | "atm_variance" => Some(AlphaMode::AtmVariance),
            _ => None,
        }
    }
}

pub fn alpha_linear(t: f64, t0: f64, t1: f64) -> Result<f64> {
    if !(t0 < t1) {
        return Err(Error::input("expiry bracket must satisfy t0 < t1"));
    }
    if !(t >= t0 && t <= t1) {
        return Err(Error::input("time lies outside the expiry bracket"));
    }
    Ok(((t - t0) / (t1 - t0)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaWeight {
    pub alpha: f64,
    /// Set when equal at-the-money prices forced the linear rule.
    pub fell_back: bool,
}

/// `(Call(1, 1, W(t)) - c0) / (c1 - c0)` with `W` linear in `t` between `w0`
/// and `w1`.
pub fn alpha_atm_variance(t: f64, t0: f64, t1: f64, w0: f64, w1: f64, c0: f64, c1: f64) -> Result<AlphaWeight> {
    let lin = alpha_linear(t, t0, t1)?;
    if !(c1 - c0 > 1e-15) {
        return Ok(AlphaWeight { alpha: lin, fell_back: true });
    }
    let w = w0 + lin * (w1 - w0);
    let alpha = (call_unchecked(1.0, 1.0, w) - c0) / (c1 - c0);
    Ok(AlphaWeight { alpha: alpha.clamp(0.0, 1.0), fell_back: false })
}

/// At-the-money total variance implied by a pure call price at `K = 1`.
pub fn atm_total_variance(price: f64) -> Result<f64> {
    if price <= 0.0 {
        return Ok(0.0);
    }
    let sigma = implied_vol(price, 1.0, 1.0, 1.0)?;
    Ok(sigma * sigma)
}

/// Which slices to blend at a given time. `lower == None` is the trivial
/// slice at `T = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blend {
    pub lower: Option<usize>,
    pub upper: usize,
    pub alpha: f64,
    pub fell_back: bool,
    pub extrapolated: bool,
}

impl Blend {
    /// Combines slice values; `lower_value` is ignored when `alpha == 1`.
    pub fn combine(&self, lower_value: f64, upper_value: f64) -> f64 {
        if self.alpha == 1.0 {
            upper_value
        } else if self.alpha == 0.0 {
            lower_value
        } else {
            (1.0 - self.alpha) * lower_value + self.alpha * upper_value
        }
    }
}

/// Expiries plus the at-the-money data needed by [`AlphaMode::AtmVariance`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeInterpolator {
    expiries: Vec<f64>,
    mode: AlphaMode,
    atm_prices: Vec<f64>,
    atm_variances: Vec<f64>,
}

impl TimeInterpolator {
    /// `atm_prices[j]` is slice `j` evaluated at `K = 1`.
    pub fn new(expiries: Vec<f64>, mode: AlphaMode, atm_prices: Vec<f64>) -> Result<Self> {
        if expiries.is_empty() {
            return Err(Error::input("no expiries"));
        }
        if expiries[0] <= 0.0 || expiries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("expiries must be positive and strictly increasing"));
        }
        if atm_prices.len() != expiries.len() {
            return Err(Error::input("one at-the-money price per expiry required"));
        }
        let atm_variances = match mode {
            AlphaMode::LinearT => Vec::new(),
            AlphaMode::AtmVariance => {
                let w = atm_prices.iter().map(|&c| atm_total_variance(c)).collect::<Result<Vec<_>>>()?;
                if w.windows(2).any(|p| p[1] < p[0] - 1e-14) {
                    return Err(Error::input("at-the-money variances decrease across expiries"));
                }
                w
            }
        };
        Ok(TimeInterpolator { expiries, mode, atm_prices, atm_variances })
    }

    pub fn expiries(&self) -> &[f64] {
        &self.expiries
    }

    pub fn mode(&self) -> AlphaMode {
        self.mode
    }

    pub fn atm_variances(&self) -> &[f64] {
        &self.atm_variances
    }

    pub fn blend(&self, t: f64, flat_extrapolation: bool) -> Result<Blend> {
        if !(t >= 0.0) {
            return Err(Error::input("time must be non-negative"));
        }
        let last = *self.expiries.last().unwrap_or(&0.0);
        let m = self.expiries.len();
        if t > last {
            if !flat_extrapolation {
                return Err(Error::Extrapolation { t, last });
            }
            return Ok(Blend { lower: m.checked_sub(2), upper: m - 1, alpha: 1.0, fell_back: false, extrapolated: true });
        }
        let upper = self.expiries.partition_point(|&e| e < t);
        if self.expiries[upper] == t {
            return Ok(Blend { lower: upper.checked_sub(1), upper, alpha: 1.0, fell_back: false, extrapolated: false });
        }
        let lower = upper.checked_sub(1);
        let (t0, c0, w0) = match lower {
            None => (0.0, 0.0, 0.0),
            Some(j) => (self.expiries[j], self.atm_prices[j], self.atm_variances.get(j).copied().unwrap_or(0.0)),
        };
        let t1 = self.expiries[upper];
        let (alpha, fell_back) = match self.mode {
            AlphaMode::LinearT => (alpha_linear(t, t0, t1)?, false),
            AlphaMode::AtmVariance => {
                let w = alpha_atm_variance(t, t0, t1, w0, self.atm_variances[upper], c0, self.atm_prices[upper])?;
                (w.alpha, w.fell_back)
            }
        };
        Ok(Blend { lower, upper, alpha, fell_back, extrapolated: false })
    }
}
