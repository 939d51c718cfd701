#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;

use smoothcall_core::blackscholes::call;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn smoothcall(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_smoothcall")).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Lognormal market with flat volatility `vol`; bid and ask are priced at
/// `vol -/+ half_spread`.
pub fn lognormal_quotes(expiries: &[f64], strikes: &[f64], vol: f64, half_spread: f64) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for &t in expiries {
        for &k in strikes {
            let lo = vol - half_spread;
            let hi = vol + half_spread;
            out.push((t, k, call(1.0, k, lo * lo * t).unwrap(), call(1.0, k, hi * hi * t).unwrap()));
        }
    }
    out
}

pub fn write_pure(path: &Path, quotes: &[(f64, f64, f64, f64)]) {
    let mut text = String::from("expiry_years,pure_strike,pure_bid,pure_ask\n");
    for (t, k, b, a) in quotes {
        writeln!(text, "{t:?},{k:?},{b:?},{a:?}").unwrap();
    }
    std::fs::write(path, text).unwrap();
}

pub fn default_market(path: &Path) {
    let strikes: Vec<f64> = (0..13).map(|i| 0.7 + 0.05 * i as f64).collect();
    write_pure(path, &lognormal_quotes(&[0.25, 0.5, 1.0], &strikes, 0.2, 0.01));
}

/// Rows of a headed CSV as string fields.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}
