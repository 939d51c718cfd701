//! CSV files: raw and pure quotes, evaluation points, node price grids.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use smoothcall_core::market_data::{fit_weights, passes_vega_filter, to_pure, OptionKind, PureQuote, RawQuote, WeightOptions};

use crate::error::{Error, Result};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, line, format!("{other:?}")),
    }
}

/// Reads every row of a headed CSV into `T`, reporting the line of the first
/// malformed row.
fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, input: impl Read) -> Result<Vec<(u64, T)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record.deserialize(Some(&headers)).map_err(|e| Error::parse(path, line, e.to_string()))?;
        out.push((line, row));
    }
    Ok(out)
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        writer.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// A row of the raw quote file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawRow {
    pub expiry_years: f64,
    pub strike: f64,
    pub kind: String,
    pub bid: f64,
    pub ask: f64,
    pub forward: f64,
    pub discount: f64,
}

pub const RAW_HEADER: [&str; 7] = ["expiry_years", "strike", "kind", "bid", "ask", "forward", "discount"];

impl RawRow {
    pub fn to_raw(&self) -> std::result::Result<RawQuote, String> {
        let kind = OptionKind::parse(&self.kind).ok_or_else(|| format!("unknown option kind {:?}", self.kind))?;
        Ok(RawQuote {
            expiry: self.expiry_years,
            strike: self.strike,
            kind,
            bid: self.bid,
            ask: self.ask,
            forward: self.forward,
            discount: self.discount,
        })
    }
}

/// A row of the converted file: the raw columns followed by the pure quote.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PureRow {
    pub expiry_years: f64,
    #[serde(default)]
    pub strike: Option<f64>,
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub bid: Option<f64>,
    #[serde(default)]
    pub ask: Option<f64>,
    #[serde(default)]
    pub forward: Option<f64>,
    #[serde(default)]
    pub discount: Option<f64>,
    pub pure_strike: f64,
    pub pure_bid: f64,
    pub pure_ask: f64,
    #[serde(default)]
    pub weight: Option<f64>,
}

pub const PURE_HEADER: [&str; 11] =
    ["expiry_years", "strike", "kind", "bid", "ask", "forward", "discount", "pure_strike", "pure_bid", "pure_ask", "weight"];

pub fn read_raw_quotes(path: &Path) -> Result<Vec<(u64, RawRow)>> {
    read_rows(path, open(path)?)
}

/// Converts raw rows to pure quotes, drops rows below the `vega / sqrt(T)`
/// threshold and assigns weights per expiry. Output keeps input order.
pub fn convert_rows(path: &Path, rows: &[(u64, RawRow)], min_vega: f64, weights: &WeightOptions) -> Result<Vec<PureRow>> {
    let mut kept: Vec<(RawRow, PureQuote)> = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let raw = row.to_raw().map_err(|m| Error::parse(path, *line, m))?;
        let pure = to_pure(&raw).map_err(|e| Error::parse(path, *line, e.to_string()))?;
        if min_vega > 0.0 && !passes_vega_filter(&pure, min_vega) {
            continue;
        }
        kept.push((row.clone(), pure));
    }

    let mut expiries: Vec<f64> = kept.iter().map(|(_, q)| q.t).collect();
    expiries.sort_by(f64::total_cmp);
    expiries.dedup();
    let mut weight_of = vec![0.0; kept.len()];
    for t in expiries {
        let idx: Vec<usize> = (0..kept.len()).filter(|&i| kept[i].1.t == t).collect();
        let group: Vec<PureQuote> = idx.iter().map(|&i| kept[i].1).collect();
        for (&i, w) in idx.iter().zip(fit_weights(&group, weights)?) {
            weight_of[i] = w;
        }
    }

    Ok(kept
        .into_iter()
        .zip(weight_of)
        .map(|((r, q), w)| PureRow {
            expiry_years: r.expiry_years,
            strike: Some(r.strike),
            kind: Some(r.kind),
            bid: Some(r.bid),
            ask: Some(r.ask),
            forward: Some(r.forward),
            discount: Some(r.discount),
            pure_strike: q.k,
            pure_bid: q.bid,
            pure_ask: q.ask,
            weight: Some(w),
        })
        .collect())
}

pub fn write_pure_rows(path: &Path, rows: &[PureRow]) -> Result<()> {
    write_rows(path, &PURE_HEADER, rows)
}

/// Reads pure quotes. Only `expiry_years`, `pure_strike`, `pure_bid` and
/// `pure_ask` are required; a `weight` column is ignored because fits derive
/// weights from their own configuration.
pub fn read_pure_quotes(path: &Path) -> Result<Vec<PureQuote>> {
    read_rows::<PureRow>(path, open(path)?)?
        .into_iter()
        .map(|(line, r)| {
            if !(r.expiry_years > 0.0) || !(r.pure_strike > 0.0) || !(r.pure_bid >= 0.0) || !(r.pure_ask >= r.pure_bid) {
                return Err(Error::parse(path, line, "pure quotes need T > 0, K > 0 and 0 <= bid <= ask"));
            }
            Ok(PureQuote::new(r.expiry_years, r.pure_strike, r.pure_bid, r.pure_ask))
        })
        .collect()
}

/// An evaluation point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Point {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    Ok(read_rows(path, open(path)?)?.into_iter().map(|(_, p)| p).collect())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Evaluated {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub price: f64,
    pub implied_vol: Option<f64>,
}

pub fn write_evaluated(path: &Path, rows: &[Evaluated]) -> Result<()> {
    write_rows(path, &["T", "K", "price", "implied_vol"], rows)
}

/// A node of a price grid: call price `C` at `(T, K)` and the backbone
/// variance `V` of expiry `T`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridRow {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "V")]
    pub v: f64,
}

/// Homogeneous node prices: `(strikes, expiries, calls[j][i], variances)`.
pub type PriceGrid = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>);

pub fn read_grid(path: &Path) -> Result<PriceGrid> {
    let rows = read_rows::<GridRow>(path, open(path)?)?;
    let mut expiries: Vec<f64> = Vec::new();
    let mut strikes: Vec<Vec<f64>> = Vec::new();
    let mut calls: Vec<Vec<f64>> = Vec::new();
    let mut variances: Vec<f64> = Vec::new();
    for (line, r) in rows {
        match expiries.last() {
            Some(&t) if t == r.t => {}
            Some(&t) if r.t < t => return Err(Error::parse(path, line, "rows must be sorted by T, then K")),
            _ => {
                expiries.push(r.t);
                strikes.push(Vec::new());
                calls.push(Vec::new());
                variances.push(r.v);
            }
        }
        let j = expiries.len() - 1;
        if r.v != variances[j] {
            return Err(Error::parse(path, line, "V must be constant within an expiry"));
        }
        strikes[j].push(r.k);
        calls[j].push(r.c);
    }
    if expiries.is_empty() {
        return Err(Error::parse(path, 1, "empty price grid"));
    }
    if strikes.iter().any(|s| *s != strikes[0]) {
        return Err(Error::parse(path, 1, "every expiry must use the same strikes"));
    }
    Ok((strikes.swap_remove(0), expiries, calls, variances))
}

pub fn write_grid(path: &Path, strikes: &[f64], expiries: &[f64], calls: &[Vec<f64>], variances: &[f64]) -> Result<()> {
    let rows: Vec<GridRow> = expiries
        .iter()
        .zip(calls)
        .zip(variances)
        .flat_map(|((&t, row), &v)| strikes.iter().zip(row).map(move |(&k, &c)| GridRow { t, k, c, v }))
        .collect();
    write_rows(path, &["T", "K", "C", "V"], &rows)
}

/// Writes `text` to `path`.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create(path)?.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
