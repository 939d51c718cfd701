//! Smooth, strictly arbitrage-free European option price surfaces.
//!
//! Call prices at an expiry are mixtures of Black-Scholes calls anchored at a
//! grid of model strikes,
//!
//! ```text
//! C_j(K) = sum_i q_j[i] * Call(K_j[i], K, eta * V_j)
//! ```
//!
//! where each `q_j` is a discrete density with unit mean, consecutive densities
//! are in convex order, and `V_j` is an increasing variance backbone. The
//! densities are found by a single linear program against bid/ask quotes
//! ([`calibration`]). Setting `eta = 0` recovers the piecewise-linear baseline
//! ([`linear_surface`]).
//!
//! All prices are "pure": normalized by forward and discount factor so the
//! underlying is a unit-mean martingale. See [`market_data`] for the conversion.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats and the command line tool live in the companion
//! `smoothcall` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod blackscholes;
pub mod calibration;
pub mod dlv;
pub mod error;
pub mod generalized;
pub mod linear_surface;
pub mod lp;
pub mod market_data;
pub mod matrix;
pub mod noarb;
pub mod smooth_surface;
pub mod time_interp;

pub use error::{Error, Result};
pub use noarb::CallSurface;
