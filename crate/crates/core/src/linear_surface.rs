//! Piecewise-linear call prices: the arbitrage-free baseline.
//!
//! A slice with strikes `0 = K[0] < ... < K[N]` and prices `C` is extended to
//! all strikes by `sum_i p[i] (K[i] - K)^+`, the linear interpolant of the
//! node prices. Slices are blended in time with [`crate::time_interp`].

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::noarb::{check_calendar, check_slice, density_from_calls, CallSurface, DiscreteDensity};
use crate::time_interp::{AlphaMode, TimeInterpolator};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSlice {
    pub t: f64,
    pub strikes: Vec<f64>,
    pub calls: Vec<f64>,
    pub density: DiscreteDensity,
}

impl LinearSlice {
    /// Builds a slice; it must pass [`check_slice`] with `strikes[0] = 0`.
    pub fn new(t: f64, strikes: Vec<f64>, calls: Vec<f64>) -> Result<Self> {
        if strikes.first() != Some(&0.0) {
            return Err(Error::input("linear slices start at strike 0"));
        }
        check_slice(&strikes, &calls)?.into_result()?;
        let density = density_from_calls(&strikes, &calls)?;
        Ok(LinearSlice { t, strikes, calls, density })
    }

    pub fn eval(&self, k: f64) -> f64 {
        self.density.reprice(k.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSurface {
    slices: Vec<LinearSlice>,
    time: TimeInterpolator,
    pub flat_extrapolation: bool,
}

impl LinearSurface {
    pub fn new(slices: Vec<LinearSlice>, mode: AlphaMode) -> Result<Self> {
        let pairs: Vec<(&[f64], &[f64])> = slices.iter().map(|s| (&s.strikes[..], &s.calls[..])).collect();
        check_calendar(&pairs)?.into_result()?;
        let expiries = slices.iter().map(|s| s.t).collect();
        let atm = slices.iter().map(|s| s.eval(1.0)).collect();
        let time = TimeInterpolator::new(expiries, mode, atm)?;
        Ok(LinearSurface { slices, time, flat_extrapolation: false })
    }

    /// Convenience constructor from raw `(T, strikes, calls)` triples.
    pub fn from_slices(data: Vec<(f64, Vec<f64>, Vec<f64>)>, mode: AlphaMode) -> Result<Self> {
        let slices = data
            .into_iter()
            .enumerate()
            .map(|(j, (t, k, c))| {
                LinearSlice::new(t, k, c).map_err(|e| match e {
                    Error::Arbitrage { strike, kind, magnitude, .. } => Error::Arbitrage { expiry: j, strike, kind, magnitude },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(slices, mode)
    }

    pub fn slices(&self) -> &[LinearSlice] {
        &self.slices
    }

    pub fn expiries(&self) -> &[f64] {
        self.time.expiries()
    }

    pub fn alpha_mode(&self) -> AlphaMode {
        self.time.mode()
    }

    pub fn eval(&self, t: f64, k: f64) -> Result<f64> {
        let b = self.time.blend(t, self.flat_extrapolation)?;
        let upper = self.slices[b.upper].eval(k);
        let lower = match b.lower {
            Some(j) => self.slices[j].eval(k),
            None => (1.0 - k).max(0.0),
        };
        Ok(b.combine(lower, upper))
    }
}

impl CallSurface for LinearSurface {
    fn call(&self, t: f64, k: f64) -> Result<f64> {
        self.eval(t, k)
    }
}
