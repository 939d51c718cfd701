//! The calibrated surface: per expiry a mixture of Black-Scholes calls
//! `C_j(K) = sum_i q_j[i] Call(K_j[i], K, eta V_j)`, blended in time.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blackscholes::{call_unchecked, implied_vol, norm_pdf};
use crate::calibration::CalibConfig;
use crate::error::{Error, Result};
use crate::noarb::CallSurface;
use crate::time_interp::{AlphaMode, TimeInterpolator};

/// Tolerances applied by [`SmoothSurface::validate`].
pub const DENSITY_TOL: f64 = 1e-9;
pub const NEGATIVE_MASS_TOL: f64 = 1e-12;

/// How a surface was produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfaceMetadata {
    pub objective: Option<f64>,
    pub lp_iterations: Option<usize>,
    pub max_residual: Option<f64>,
    pub backbone_repairs: Option<usize>,
    pub config: Option<CalibConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSurface {
    expiries: Vec<f64>,
    grids: Vec<Vec<f64>>,
    densities: Vec<Vec<f64>>,
    variances: Vec<f64>,
    eta: f64,
    time: TimeInterpolator,
    /// Beyond the last expiry, hold the last slice instead of failing.
    pub flat_extrapolation: bool,
    pub metadata: SurfaceMetadata,
}

impl SmoothSurface {
    pub fn new(
        expiries: Vec<f64>,
        grids: Vec<Vec<f64>>,
        densities: Vec<Vec<f64>>,
        variances: Vec<f64>,
        eta: f64,
        alpha_mode: AlphaMode,
    ) -> Result<Self> {
        validate_parts(&expiries, &grids, &densities, &variances, eta)?;
        let atm = (0..expiries.len()).map(|j| slice_price(&grids[j], &densities[j], eta * variances[j], 1.0)).collect();
        let time = TimeInterpolator::new(expiries.clone(), alpha_mode, atm)?;
        Ok(SmoothSurface {
            expiries,
            grids,
            densities,
            variances,
            eta,
            time,
            flat_extrapolation: false,
            metadata: SurfaceMetadata::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        validate_parts(&self.expiries, &self.grids, &self.densities, &self.variances, self.eta)
    }

    pub fn expiries(&self) -> &[f64] {
        &self.expiries
    }

    pub fn grids(&self) -> &[Vec<f64>] {
        &self.grids
    }

    pub fn densities(&self) -> &[Vec<f64>] {
        &self.densities
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn alpha_mode(&self) -> AlphaMode {
        self.time.mode()
    }

    /// Price of slice `j` at strike `k`.
    pub fn slice_call(&self, j: usize, k: f64) -> f64 {
        slice_price(&self.grids[j], &self.densities[j], self.eta * self.variances[j], k)
    }

    pub fn eval_call(&self, t: f64, k: f64) -> Result<f64> {
        if !(k >= 0.0) {
            return Err(Error::input("strike must be non-negative"));
        }
        let b = self.time.blend(t, self.flat_extrapolation)?;
        let upper = self.slice_call(b.upper, k);
        let lower = match b.lower {
            Some(j) => self.slice_call(j, k),
            None => (1.0 - k).max(0.0),
        };
        Ok(b.combine(lower, upper))
    }

    /// Lognormal-mixture density of slice `j` at `k > 0`.
    pub fn slice_density(&self, j: usize, k: f64) -> Result<f64> {
        let v = self.eta * self.variances[j];
        if self.eta == 0.0 || v < crate::blackscholes::MIN_VARIANCE {
            return Err(Error::AtomicDensity);
        }
        if !(k > 0.0) {
            return Err(Error::input("density requires a positive strike"));
        }
        let sd = libm::sqrt(v);
        Ok(self.grids[j]
            .iter()
            .zip(&self.densities[j])
            .filter(|(_, &q)| q != 0.0)
            .map(|(&x, &q)| {
                let d = (libm::log(k / x) + 0.5 * v) / sd;
                q * norm_pdf(d) / (k * sd)
            })
            .sum())
    }

    /// Density in `K` of the blended surface at time `t > 0`.
    pub fn eval_density(&self, t: f64, k: f64) -> Result<f64> {
        let b = self.time.blend(t, self.flat_extrapolation)?;
        if b.alpha < 1.0 && b.lower.is_none() {
            return Err(Error::AtomicDensity);
        }
        let upper = self.slice_density(b.upper, k)?;
        let lower = match b.lower {
            Some(j) if b.alpha < 1.0 => self.slice_density(j, k)?,
            _ => 0.0,
        };
        Ok(b.combine(lower, upper))
    }

    /// Implied volatilities at `(T, K)` points.
    pub fn implied_vol_surface(&self, points: &[(f64, f64)]) -> Result<Vec<f64>> {
        points.iter().map(|&(t, k)| implied_vol(self.eval_call(t, k)?, 1.0, k, t)).collect()
    }

    /// Monte Carlo estimates of slice `j` prices from `Z = X Y`, `X ~ q_j`,
    /// `Y` lognormal with unit mean and variance `eta V_j`.
    pub fn mc_verify(&self, j: usize, strikes: &[f64], n_paths: usize, seed: u64) -> Result<McReport> {
        if j >= self.expiries.len() {
            return Err(Error::input("expiry index out of range"));
        }
        if n_paths < 2 {
            return Err(Error::input("need at least two paths"));
        }
        let atoms = &self.grids[j];
        let q = &self.densities[j];
        let v = self.eta * self.variances[j];

        if v < crate::blackscholes::MIN_VARIANCE {
            // Y is degenerate: the expectation over the atoms is exact
            let exact = |k: f64| atoms.iter().zip(q).map(|(&x, &p)| p * (x - k).max(0.0)).sum();
            let mean: f64 = atoms.iter().zip(q).map(|(&x, &p)| p * x).sum();
            return Ok(McReport {
                estimates: strikes.iter().map(|&k| McEstimate { estimate: exact(k), std_error: 0.0 }).collect(),
                mean: McEstimate { estimate: mean, std_error: 0.0 },
                n_paths,
            });
        }

        let mut cdf: Vec<f64> = q
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p.max(0.0);
                Some(*acc)
            })
            .collect();
        let total = *cdf.last().unwrap_or(&1.0);
        cdf.iter_mut().for_each(|c| *c /= total);

        let sd = libm::sqrt(v);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sums = alloc::vec![0.0; strikes.len()];
        let mut sq_sums = alloc::vec![0.0; strikes.len()];
        let (mut z_sum, mut z_sq) = (0.0, 0.0);
        for _ in 0..n_paths {
            let u: f64 = rng.random();
            let i = cdf.partition_point(|&c| c <= u).min(atoms.len() - 1);
            let n: f64 = rng.sample(StandardNormal);
            let z = atoms[i] * libm::exp(sd * n - 0.5 * v);
            z_sum += z;
            z_sq += z * z;
            for (s, (ss, &k)) in sums.iter_mut().zip(sq_sums.iter_mut().zip(strikes)) {
                let payoff = (z - k).max(0.0);
                *s += payoff;
                *ss += payoff * payoff;
            }
        }
        let summarize = |s: f64, ss: f64| {
            let n = n_paths as f64;
            let mean = s / n;
            let var = ((ss / n - mean * mean) * n / (n - 1.0)).max(0.0);
            McEstimate { estimate: mean, std_error: libm::sqrt(var / n) }
        };
        Ok(McReport {
            estimates: sums.iter().zip(&sq_sums).map(|(&s, &ss)| summarize(s, ss)).collect(),
            mean: summarize(z_sum, z_sq),
            n_paths,
        })
    }
}

impl CallSurface for SmoothSurface {
    fn call(&self, t: f64, k: f64) -> Result<f64> {
        self.eval_call(t, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    /// Distance to `target` in standard errors (0 when both agree exactly).
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.estimate - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub estimates: Vec<McEstimate>,
    /// Estimate of `E[Z]`, which should be 1.
    pub mean: McEstimate,
    pub n_paths: usize,
}

pub(crate) fn slice_price(grid: &[f64], q: &[f64], v: f64, k: f64) -> f64 {
    let price: f64 = grid.iter().zip(q).filter(|(_, &p)| p != 0.0).map(|(&x, &p)| p * call_unchecked(x, k, v)).sum();
    price.clamp((1.0 - k).max(0.0), 1.0)
}

fn validate_parts(expiries: &[f64], grids: &[Vec<f64>], densities: &[Vec<f64>], variances: &[f64], eta: f64) -> Result<()> {
    let m = expiries.len();
    if m == 0 {
        return Err(Error::input("a surface needs at least one expiry"));
    }
    if grids.len() != m || densities.len() != m || variances.len() != m {
        return Err(Error::input("expiries, grids, densities and variances differ in length"));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::input("eta must lie in [0, 1)"));
    }
    if !(expiries[0] > 0.0) || expiries.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::input("expiries must be positive and strictly increasing"));
    }
    if !(variances[0] > 0.0) || variances.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::input("variances must be positive and strictly increasing"));
    }
    for (j, (g, q)) in grids.iter().zip(densities).enumerate() {
        if g.len() != q.len() || g.is_empty() {
            return Err(Error::input(alloc::format!("grid and density of expiry {j} differ in length")));
        }
        if !(g[0] >= 0.0) || g.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::input(alloc::format!("grid of expiry {j} is not non-negative and increasing")));
        }
        if q.iter().any(|&p| !(p >= -NEGATIVE_MASS_TOL)) {
            return Err(Error::input(alloc::format!("density of expiry {j} has negative mass")));
        }
        let mass: f64 = q.iter().sum();
        let mean: f64 = g.iter().zip(q).map(|(k, p)| k * p).sum();
        if (mass - 1.0).abs() > DENSITY_TOL {
            return Err(Error::input(alloc::format!("density of expiry {j} has mass {mass}")));
        }
        if (mean - 1.0).abs() > DENSITY_TOL {
            return Err(Error::input(alloc::format!("density of expiry {j} has mean {mean}")));
        }
    }
    Ok(())
}
