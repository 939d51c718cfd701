//! Black-Scholes analytics on total variance: normal CDF, the undiscounted call
//! kernel `Call(s, k, v)`, vega and implied volatility.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, PriceBound, Result};

/// Total variances below this are treated as zero (intrinsic value).
pub const MIN_VARIANCE: f64 = 1e-16;

const MAX_IV_ITERATIONS: usize = 100;

/// Standard normal distribution function.
///
/// Evaluated through the complementary error function so both tails keep full
/// relative precision.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// Undiscounted Black-Scholes call on spot `s`, strike `k` and total variance `v`.
///
/// `k = 0` returns `s` and `v = 0` returns the intrinsic value `(s - k)^+`.
pub fn call(s: f64, k: f64, v: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::input("spot must be positive and finite"));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::input("strike must be non-negative and finite"));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::input("variance must be non-negative and finite"));
    }
    Ok(call_unchecked(s, k, v))
}

/// [`call`] without argument validation. Callers guarantee `s > 0`, `k >= 0`
/// and `v >= 0`.
#[inline]
pub fn call_unchecked(s: f64, k: f64, v: f64) -> f64 {
    if k <= 0.0 {
        return s;
    }
    if v < MIN_VARIANCE {
        return (s - k).max(0.0);
    }
    let sd = libm::sqrt(v);
    let d_plus = (libm::log(s / k) + 0.5 * v) / sd;
    let d_minus = d_plus - sd;
    let price = if s >= k {
        // in the money: intrinsic plus the put's time value, both tails small
        (s - k) + (k * norm_cdf(-d_minus) - s * norm_cdf(-d_plus))
    } else {
        s * norm_cdf(d_plus) - k * norm_cdf(d_minus)
    };
    price.clamp((s - k).max(0.0), s)
}

/// Sensitivity of [`call`] to the volatility `sigma = sqrt(v / t)`.
pub fn vega(s: f64, k: f64, v: f64, t: f64) -> f64 {
    if v <= 0.0 || k <= 0.0 || t <= 0.0 {
        return 0.0;
    }
    let sd = libm::sqrt(v);
    let d_plus = (libm::log(s / k) + 0.5 * v) / sd;
    s * norm_pdf(d_plus) * libm::sqrt(t)
}

/// Black-Scholes implied volatility of an undiscounted call price.
///
/// Safeguarded Newton iteration in volatility, falling back to bisection
/// whenever a Newton step leaves the current bracket.
pub fn implied_vol(price: f64, s: f64, k: f64, t: f64) -> Result<f64> {
    if !(s > 0.0) || !(k > 0.0) || !(t > 0.0) || !price.is_finite() {
        return Err(Error::input("implied_vol requires s > 0, k > 0, t > 0 and a finite price"));
    }
    let intrinsic = (s - k).max(0.0);
    let tiny = 1e-15 * s;
    if price < intrinsic - tiny {
        return Err(Error::PriceOutOfBounds { price, limit: intrinsic, bound: PriceBound::Lower });
    }
    if price >= s {
        return Err(Error::PriceOutOfBounds { price, limit: s, bound: PriceBound::Upper });
    }
    if price <= intrinsic + tiny {
        return Ok(0.0);
    }

    let sqrt_t = libm::sqrt(t);
    let price_at = |sigma: f64| call_unchecked(s, k, sigma * sigma * t);

    // bracket [lo, hi] with price_at(lo) <= price <= price_at(hi)
    let mut lo = 0.0;
    let mut hi = 1.0 / sqrt_t;
    while price_at(hi) < price {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 / sqrt_t {
            return Err(Error::Numeric("implied volatility bracket exceeded".into()));
        }
    }

    // Manaster-Koehler start: the inflection point of price in sigma
    let log_moneyness = libm::log(s / k).abs();
    let mut sigma = libm::sqrt(2.0 * log_moneyness / t);
    if !(sigma > lo && sigma < hi) {
        sigma = 0.5 * (lo + hi);
    }

    let tol = 1e-14 * s;
    for _ in 0..MAX_IV_ITERATIONS {
        let diff = price_at(sigma) - price;
        if diff.abs() <= tol {
            return Ok(sigma);
        }
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let slope = vega(s, k, sigma * sigma * t, t);
        let newton = if slope > 0.0 { sigma - diff / slope } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - sigma).abs() <= 1e-15 * sigma.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        sigma = next;
    }
    let diff = price_at(sigma) - price;
    if diff.abs() <= 1e-12 * s {
        Ok(sigma)
    } else {
        Err(Error::Numeric("implied volatility iteration did not converge".into()))
    }
}
