//! Flat `key = value` configuration for calibration.
//!
//! ```text
//! # smoothness and objective
//! eta = 0.25
//! objective = penalty
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors.

use std::path::Path;

use smoothcall_core::calibration::{CalibConfig, ObjectiveMode, VarianceSource};
use smoothcall_core::market_data::WeightMode;
use smoothcall_core::time_interp::AlphaMode;

use crate::error::{Error, Result};

/// Keys with their documentation, in file order.
pub const KEYS: [(&str, &str); 13] = [
    ("eta", "smoothness factor in [0, 1)"),
    ("omega", "use backbone variance in the martingale rows (true/false)"),
    ("objective", "mid | hard | penalty"),
    ("epsilon", "mid-fit weight inside the spread in penalty mode"),
    ("dk_max", "largest gap between model strikes"),
    ("weights", "spread | vega"),
    ("weight_cap", "largest inverse-spread weight, or none"),
    ("vega_floor", "smallest vega used by vega weights"),
    ("variance_source", "atm_bid | atm_mid"),
    ("alpha", "linear | atmvar"),
    ("solver_tol", "simplex feasibility tolerance"),
    ("max_iters", "simplex pivot budget, or none for automatic"),
    ("bland_after", "stalled pivots before Bland's rule"),
];

fn opt_to_string<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn float(v: f64) -> String {
    // Debug formatting is the shortest representation that reads back exactly
    format!("{v:?}")
}

/// The value of `key` in `config`.
pub fn get(config: &CalibConfig, key: &str) -> Option<String> {
    Some(match key {
        "eta" => float(config.eta),
        "omega" => config.omega.to_string(),
        "objective" => config.objective.as_str().into(),
        "epsilon" => float(config.epsilon),
        "dk_max" => float(config.dk_max),
        "weights" => config.weights.mode.as_str().into(),
        "weight_cap" => opt_to_string(config.weights.cap.map(float)),
        "vega_floor" => float(config.weights.vega_floor),
        "variance_source" => config.variance_source.as_str().into(),
        "alpha" => config.alpha_mode.as_str().into(),
        "solver_tol" => float(config.solver.tol),
        "max_iters" => opt_to_string(config.solver.max_iters),
        "bland_after" => config.solver.bland_after.to_string(),
        _ => return None,
    })
}

fn parse_f64(value: &str) -> std::result::Result<f64, String> {
    value.parse::<f64>().map_err(|_| format!("expected a number, found {value:?}"))
}

fn parse_opt<T: std::str::FromStr>(value: &str) -> std::result::Result<Option<T>, String> {
    if value == "none" {
        return Ok(None);
    }
    value.parse::<T>().map(Some).map_err(|_| format!("expected a number or none, found {value:?}"))
}

/// Sets one key. Values are validated individually here and as a whole by
/// [`CalibConfig::validate`].
pub fn set(config: &mut CalibConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let bad = |what: &str| format!("unknown {what} {value:?}");
    match key {
        "eta" => config.eta = parse_f64(value)?,
        "omega" => config.omega = value.parse().map_err(|_| bad("boolean"))?,
        "objective" => config.objective = ObjectiveMode::parse(value).ok_or_else(|| bad("objective"))?,
        "epsilon" => config.epsilon = parse_f64(value)?,
        "dk_max" => config.dk_max = parse_f64(value)?,
        "weights" => config.weights.mode = WeightMode::parse(value).ok_or_else(|| bad("weight mode"))?,
        "weight_cap" => config.weights.cap = parse_opt(value)?,
        "vega_floor" => config.weights.vega_floor = parse_f64(value)?,
        "variance_source" => config.variance_source = VarianceSource::parse(value).ok_or_else(|| bad("variance source"))?,
        "alpha" => config.alpha_mode = AlphaMode::parse(value).ok_or_else(|| bad("alpha mode"))?,
        "solver_tol" => config.solver.tol = parse_f64(value)?,
        "max_iters" => config.solver.max_iters = parse_opt(value)?,
        "bland_after" => config.solver.bland_after = value.parse().map_err(|_| bad("count"))?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

/// Renders every key with a comment line above it.
pub fn to_string(config: &CalibConfig) -> String {
    let mut out = String::new();
    for (key, doc) in KEYS {
        out.push_str(&format!("# {doc}\n{key} = {}\n", get(config, key).expect("listed key")));
    }
    out
}

/// Applies `text` on top of `base`.
pub fn parse_into(base: CalibConfig, text: &str, path: &Path) -> Result<CalibConfig> {
    let mut config = base;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::parse(path, n as u64 + 1, "expected key = value"))?;
        set(&mut config, key.trim(), value.trim()).map_err(|m| Error::parse(path, n as u64 + 1, m))?;
    }
    config.validate()?;
    Ok(config)
}

pub fn parse(text: &str, path: &Path) -> Result<CalibConfig> {
    parse_into(CalibConfig::default(), text, path)
}

pub fn read(path: &Path) -> Result<CalibConfig> {
    parse(&crate::io::read_text(path)?, path)
}
