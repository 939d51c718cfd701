//! Quote ingestion: cash quotes to pure call prices, per-expiry slices,
//! boundary strikes, model strike grids and fit weights.
//!
//! A pure price is `C(T, K) = cash(T, F K) / (DF F)`, the price of a call on
//! a unit-mean martingale. Puts are mapped to calls by parity, `C = P + 1 - k`.

use alloc::vec::Vec;

use crate::blackscholes::{implied_vol, vega};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "C" | "c" | "call" => Some(OptionKind::Call),
            "P" | "p" | "put" => Some(OptionKind::Put),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            OptionKind::Call => "C",
            OptionKind::Put => "P",
        }
    }
}

/// A cash quote as delivered by a feed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawQuote {
    pub expiry: f64,
    pub strike: f64,
    pub kind: OptionKind,
    pub bid: f64,
    pub ask: f64,
    pub forward: f64,
    pub discount: f64,
}

impl RawQuote {
    pub fn validate(&self) -> Result<()> {
        if !(self.expiry > 0.0) || !self.expiry.is_finite() {
            return Err(Error::input("expiry must be positive"));
        }
        if !(self.strike > 0.0) || !self.strike.is_finite() {
            return Err(Error::input("strike must be positive"));
        }
        if !(self.forward > 0.0) || !self.forward.is_finite() {
            return Err(Error::input("forward must be positive"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::input("discount factor must lie in (0, 1]"));
        }
        if !(self.bid >= 0.0) || !(self.ask >= self.bid) || !self.ask.is_finite() {
            return Err(Error::input("quotes must satisfy 0 <= bid <= ask"));
        }
        Ok(())
    }
}

/// A pure call quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQuote {
    pub t: f64,
    pub k: f64,
    pub bid: f64,
    pub ask: f64,
    pub weight: f64,
    /// The ask lies below intrinsic value `(1 - k)^+`; the quote is kept for
    /// reporting but carries no weight in a fit.
    pub crossed_intrinsic: bool,
}

impl PureQuote {
    /// A quote with unit weight, flagged if the ask is below intrinsic.
    pub fn new(t: f64, k: f64, bid: f64, ask: f64) -> Self {
        let crossed_intrinsic = ask < (1.0 - k).max(0.0) - 1e-15;
        PureQuote { t, k, bid, ask, weight: 1.0, crossed_intrinsic }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    pub fn spread(&self) -> f64 {
        self.ask - self.bid
    }

    /// Black-Scholes implied volatility of `price` at this quote's strike.
    pub fn implied_vol_of(&self, price: f64) -> Result<f64> {
        implied_vol(price, 1.0, self.k, self.t)
    }
}

/// Converts a cash quote to a pure call quote.
pub fn to_pure(raw: &RawQuote) -> Result<PureQuote> {
    raw.validate()?;
    let scale = raw.discount * raw.forward;
    let k = raw.strike / raw.forward;
    let (bid, ask) = match raw.kind {
        OptionKind::Call => (raw.bid / scale, raw.ask / scale),
        // a put bid can sit below intrinsic, giving a negative call bid
        OptionKind::Put => ((raw.bid / scale + 1.0 - k).max(0.0), raw.ask / scale + 1.0 - k),
    };
    Ok(PureQuote::new(raw.expiry, k, bid, ask))
}

/// Vega per square-root year of the mid implied volatility. Quotes whose mid
/// is not invertible return 0.
pub fn scaled_vega(q: &PureQuote) -> f64 {
    match q.implied_vol_of(q.mid()) {
        Ok(sigma) if sigma > 0.0 => vega(1.0, q.k, sigma * sigma * q.t, q.t) / libm::sqrt(q.t),
        _ => 0.0,
    }
}

/// True when `vega / sqrt(T)` of the mid reaches `threshold`; used to drop
/// quotes that carry no volatility information.
pub fn passes_vega_filter(q: &PureQuote, threshold: f64) -> bool {
    scaled_vega(q) >= threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    #[default]
    InvSpread,
    InvVega,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::InvSpread => "spread",
            WeightMode::InvVega => "vega",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spread" | "inv_spread" => Some(WeightMode::InvSpread),
            "vega" | "inv_vega" => Some(WeightMode::InvVega),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightOptions {
    pub mode: WeightMode,
    /// Upper bound for inverse-spread weights; `None` makes zero spreads an error.
    pub cap: Option<f64>,
    pub vega_floor: f64,
}

impl Default for WeightOptions {
    fn default() -> Self {
        WeightOptions { mode: WeightMode::InvSpread, cap: Some(1e6), vega_floor: 1e-8 }
    }
}

/// Fit weights, one per quote. Quotes flagged `crossed_intrinsic` get 0.
pub fn fit_weights(quotes: &[PureQuote], options: &WeightOptions) -> Result<Vec<f64>> {
    quotes
        .iter()
        .map(|q| {
            if q.crossed_intrinsic {
                return Ok(0.0);
            }
            match options.mode {
                WeightMode::InvSpread => {
                    let spread = q.spread();
                    match options.cap {
                        Some(cap) if spread <= 0.0 || 1.0 / spread > cap => Ok(cap),
                        None if spread <= 0.0 => Err(Error::ZeroSpread { strike: q.k }),
                        _ => Ok(1.0 / spread),
                    }
                }
                WeightMode::InvVega => {
                    let sigma = q.implied_vol_of(q.mid())?;
                    let v = vega(1.0, q.k, sigma * sigma * q.t, q.t);
                    Ok(1.0 / v.max(options.vega_floor))
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    /// Multiplier on the lower zero-crossing strike.
    pub lower_factor: f64,
    /// Multiplier on the upper zero-crossing strike.
    pub upper_factor: f64,
    /// Per-slice fallback as a multiple of the lowest market strike.
    pub lower_fallback: f64,
    /// Per-slice fallback as a multiple of the highest market strike.
    pub upper_fallback: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions { lower_factor: 0.1, upper_factor: 1.5, lower_fallback: 0.5, upper_fallback: 2.0 }
    }
}

/// Boundary strikes `(K_min, K_max)` shared by all slices, from the wing
/// lines through the two outermost quotes of each `(strikes, mids)` slice.
pub fn boundary_strikes(slices: &[(&[f64], &[f64])], options: &BoundaryOptions) -> Result<(f64, f64)> {
    if slices.is_empty() {
        return Err(Error::input("no slices"));
    }
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    let mut k_lo = f64::INFINITY;
    let mut k_hi: f64 = 0.0;
    for (ks, cs) in slices {
        if ks.is_empty() || ks.len() != cs.len() {
            return Err(Error::input("each slice needs matching, non-empty strikes and prices"));
        }
        let n = ks.len();
        k_lo = k_lo.min(ks[0]);
        k_hi = k_hi.max(ks[n - 1]);

        let fallback_lo = options.lower_fallback * ks[0];
        let fallback_hi = options.upper_fallback * ks[n - 1];
        if n < 2 {
            lower = lower.min(fallback_lo);
            upper = upper.max(fallback_hi);
            continue;
        }
        // C1 + dC (K* - K1) = 1 - K*
        let dc = (cs[1] - cs[0]) / (ks[1] - ks[0]);
        let k_star = (1.0 - cs[0] + dc * ks[0]) / (1.0 + dc);
        lower = lower.min(if dc > -1.0 + 1e-12 && dc < 0.0 && k_star.is_finite() && k_star > 0.0 {
            options.lower_factor * k_star
        } else {
            fallback_lo
        });
        // C_N + dC (K# - K_N) = 0
        let dc = (cs[n - 1] - cs[n - 2]) / (ks[n - 1] - ks[n - 2]);
        let k_hash = ks[n - 1] - cs[n - 1] / dc;
        upper = upper.max(if dc < -1e-12 && dc > -1.0 && k_hash.is_finite() { options.upper_factor * k_hash } else { fallback_hi });
    }
    if !(lower < k_lo) {
        lower = options.lower_fallback * k_lo;
    }
    if !(upper > k_hi) {
        upper = options.upper_fallback * k_hi;
    }
    // the unit mean must sit strictly inside the grid
    if lower >= 1.0 {
        lower = 0.5;
    }
    if upper <= 1.0 {
        upper = 2.0;
    }
    Ok((lower, upper))
}

fn same_strike(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Model strikes: the bounds, every market strike, and equally spaced fill-in
/// points so no gap exceeds `dk_max`.
pub fn build_model_grid(market_strikes: &[f64], bounds: (f64, f64), dk_max: f64) -> Result<Vec<f64>> {
    if !(dk_max > 0.0) {
        return Err(Error::input("dk_max must be positive"));
    }
    if !(bounds.0 > 0.0 && bounds.1 > bounds.0) {
        return Err(Error::input("bounds must satisfy 0 < K_min < K_max"));
    }
    let mut nodes: Vec<f64> = market_strikes.to_vec();
    nodes.push(bounds.0);
    nodes.push(bounds.1);
    if nodes.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(Error::input("strikes must be positive and finite"));
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| same_strike(*a, *b));

    let mut grid = Vec::with_capacity(nodes.len());
    grid.push(nodes[0]);
    for w in nodes.windows(2) {
        let gap = w[1] - w[0];
        let pieces = if dk_max.is_finite() { libm::ceil(gap / dk_max - 1e-9).max(1.0) as usize } else { 1 };
        for s in 1..pieces {
            grid.push(w[0] + gap * s as f64 / pieces as f64);
        }
        grid.push(w[1]);
    }
    Ok(grid)
}

/// Quotes and model strikes for one expiry.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpirySlice {
    pub t: f64,
    /// Sorted by strike, one quote per strike.
    pub quotes: Vec<PureQuote>,
    pub model_strikes: Vec<f64>,
}

impl ExpirySlice {
    pub fn new(t: f64, mut quotes: Vec<PureQuote>, model_strikes: Vec<f64>) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::input("expiry must be positive"));
        }
        if quotes.is_empty() {
            return Err(Error::input("a slice needs at least one quote"));
        }
        quotes.sort_by(|a, b| a.k.total_cmp(&b.k));
        if quotes.windows(2).any(|w| w[1].k <= w[0].k) {
            return Err(Error::input("market strikes must be distinct"));
        }
        if model_strikes.len() < 2 || model_strikes.windows(2).any(|w| w[1] <= w[0]) || model_strikes[0] <= 0.0 {
            return Err(Error::input("model strikes must be positive and strictly increasing"));
        }
        let (lo, hi) = (model_strikes[0], model_strikes[model_strikes.len() - 1]);
        if quotes.iter().any(|q| !(q.k > lo && q.k < hi)) {
            return Err(Error::input("market strikes must lie strictly inside the model grid"));
        }
        if !(lo < 1.0 && hi > 1.0) {
            return Err(Error::input("the model grid must bracket 1"));
        }
        Ok(ExpirySlice { t, quotes, model_strikes })
    }

    pub fn market_strikes(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.k).collect()
    }

    pub fn mids(&self) -> Vec<f64> {
        self.quotes.iter().map(PureQuote::mid).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.weight).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotOptions {
    pub dk_max: f64,
    pub weights: WeightOptions,
    pub boundary: BoundaryOptions,
}

impl Default for SnapshotOptions {
    fn default() -> Self {
        SnapshotOptions { dk_max: 0.05, weights: WeightOptions::default(), boundary: BoundaryOptions::default() }
    }
}

/// All slices of one trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSnapshot {
    pub slices: Vec<ExpirySlice>,
    pub bounds: (f64, f64),
}

impl MarketSnapshot {
    /// Validates slices built elsewhere, e.g. with a shared strike grid.
    pub fn new(slices: Vec<ExpirySlice>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::input("a snapshot needs at least one expiry"));
        }
        if slices.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::input("expiries must be strictly increasing"));
        }
        let first = &slices[0].model_strikes;
        let bounds = (first[0], first[first.len() - 1]);
        for s in &slices {
            let g = &s.model_strikes;
            if !same_strike(g[0], bounds.0) || !same_strike(g[g.len() - 1], bounds.1) {
                return Err(Error::input("all slices must share the boundary strikes"));
            }
        }
        Ok(MarketSnapshot { slices, bounds })
    }

    /// Groups quotes by expiry, merges duplicate strikes (keeping the tighter
    /// market), derives bounds and grids, and assigns weights.
    pub fn from_quotes(quotes: &[PureQuote], options: &SnapshotOptions) -> Result<Self> {
        if quotes.is_empty() {
            return Err(Error::input("no quotes"));
        }
        let mut sorted = quotes.to_vec();
        sorted.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.k.total_cmp(&b.k)));
        let mut groups: Vec<Vec<PureQuote>> = Vec::new();
        for q in sorted {
            match groups.last_mut() {
                Some(g) if same_strike(g[0].t, q.t) => match g.last_mut() {
                    Some(prev) if same_strike(prev.k, q.k) => {
                        if better(&q, prev) {
                            *prev = q;
                        }
                    }
                    _ => g.push(q),
                },
                _ => groups.push(alloc::vec![q]),
            }
        }

        let wings: Vec<(Vec<f64>, Vec<f64>)> = groups
            .iter()
            .map(|g| {
                let usable: Vec<&PureQuote> = g.iter().filter(|q| !q.crossed_intrinsic).collect();
                let pick = if usable.is_empty() { g.iter().collect() } else { usable };
                (pick.iter().map(|q| q.k).collect(), pick.iter().map(|q| q.mid()).collect())
            })
            .collect();
        let refs: Vec<(&[f64], &[f64])> = wings.iter().map(|(k, c)| (&k[..], &c[..])).collect();
        let bounds = boundary_strikes(&refs, &options.boundary)?;

        let mut slices = Vec::with_capacity(groups.len());
        for mut g in groups {
            let weights = fit_weights(&g, &options.weights)?;
            for (q, w) in g.iter_mut().zip(weights) {
                q.weight = w;
            }
            let strikes: Vec<f64> = g.iter().map(|q| q.k).collect();
            let grid = build_model_grid(&strikes, bounds, options.dk_max)?;
            slices.push(ExpirySlice::new(g[0].t, g, grid)?);
        }
        Self::new(slices)
    }

    pub fn expiries(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.t).collect()
    }

    /// True when every slice uses the same model strikes.
    pub fn is_homogeneous(&self) -> bool {
        let first = &self.slices[0].model_strikes;
        self.slices.iter().all(|s| s.model_strikes == *first)
    }
}

fn better(candidate: &PureQuote, incumbent: &PureQuote) -> bool {
    match (candidate.crossed_intrinsic, incumbent.crossed_intrinsic) {
        (false, true) => true,
        (true, false) => false,
        _ => candidate.spread() < incumbent.spread(),
    }
}
