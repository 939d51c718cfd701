use alloc::string::String;
use core::fmt;

use crate::lp::LpStatus;
use crate::noarb::ViolationKind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which side of the admissible price interval a quote fell out of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceBound {
    /// Below intrinsic value `(s - k)^+`.
    Lower,
    /// At or above the spot.
    Upper,
}

impl fmt::Display for PriceBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriceBound::Lower => f.write_str("below the intrinsic lower bound"),
            PriceBound::Upper => f.write_str("at or above the spot upper bound"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("price {price} is {bound} {limit}")]
    PriceOutOfBounds { price: f64, limit: f64, bound: PriceBound },

    #[error("expiry {t} lies beyond the last expiry {last}; flat extrapolation is disabled")]
    Extrapolation { t: f64, last: f64 },

    #[error("calibration failed: LP status {status}{}", fmt_expiry(.expiry))]
    Calibration { status: LpStatus, expiry: Option<usize> },

    #[error("arbitrage at expiry {expiry}, strike {strike}: {kind} (magnitude {magnitude:e})")]
    Arbitrage { expiry: usize, strike: usize, kind: ViolationKind, magnitude: f64 },

    #[error("no usable at-the-money quote for expiry {expiry}")]
    MissingAtm { expiry: usize },

    #[error("zero bid/ask spread at strike {strike} requires a weight cap")]
    ZeroSpread { strike: f64 },

    #[error("tensor would hold {required} entries, above the cap of {cap}")]
    TensorCap { required: usize, cap: usize },

    #[error("density is atomic; use linear baseline densities")]
    AtomicDensity,

    #[error("numerical failure: {0}")]
    Numeric(String),
}

fn fmt_expiry(expiry: &Option<usize>) -> String {
    match expiry {
        Some(j) => alloc::format!(" (first infeasible expiry index {j})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
