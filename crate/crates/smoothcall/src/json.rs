//! JSON documents. Floats are written with 17 significant digits in
//! scientific notation so every value reads back bit for bit.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use smoothcall_core::dlv::DlvSurface;
use smoothcall_core::noarb::{ArbReport, Violation, ViolationKind};
use smoothcall_core::smooth_surface::SmoothSurface;
use smoothcall_core::time_interp::AlphaMode;

use crate::error::{Error, Result};

pub const SURFACE_VERSION: u32 = 1;

/// Pretty-printing formatter with fixed 17-digit floats.
struct Precise<'a> {
    inner: PrettyFormatter<'a>,
}

macro_rules! delegate {
    ($($name:ident),*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.inner.$name(w)
        })*
    };
}

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    delegate!(begin_array, end_array, end_array_value, begin_object, end_object, begin_object_value, end_object_value);
}

/// Serializes with [`Precise`]. Non-finite floats are rejected.
pub fn to_string<T: Serialize>(value: &T) -> std::result::Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise { inner: PrettyFormatter::with_indent(b"  ") });
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_string(value).map_err(|source| Error::Json { path: path.into(), source })?;
    crate::io::write_text(path, &text)
}

pub fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = crate::io::read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SurfaceDoc {
    pub version: u32,
    pub eta: f64,
    pub alpha_mode: String,
    pub expiries: Vec<f64>,
    pub grids: Vec<Vec<f64>>,
    pub densities: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl SurfaceDoc {
    pub fn from_surface(s: &SmoothSurface) -> Self {
        SurfaceDoc {
            version: SURFACE_VERSION,
            eta: s.eta(),
            alpha_mode: s.alpha_mode().as_str().to_string(),
            expiries: s.expiries().to_vec(),
            grids: s.grids().to_vec(),
            densities: s.densities().to_vec(),
            variances: s.variances().to_vec(),
        }
    }

    pub fn into_surface(self) -> Result<SmoothSurface> {
        if self.version != SURFACE_VERSION {
            return Err(Error::Version { found: self.version, expected: SURFACE_VERSION });
        }
        let mode = AlphaMode::parse(&self.alpha_mode).ok_or_else(|| Error::Usage(format!("unknown alpha mode {:?}", self.alpha_mode)))?;
        Ok(SmoothSurface::new(self.expiries, self.grids, self.densities, self.variances, self.eta, mode)?)
    }
}

pub fn write_surface(path: &Path, s: &SmoothSurface) -> Result<()> {
    write(path, &SurfaceDoc::from_surface(s))
}

pub fn read_surface(path: &Path) -> Result<SmoothSurface> {
    read::<SurfaceDoc>(path)?.into_surface()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ViolationDoc {
    pub kind: String,
    pub expiry: usize,
    /// `None` for the probes at zero strike.
    pub strike: Option<usize>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ArbReportDoc {
    pub violations: Vec<ViolationDoc>,
}

impl ArbReportDoc {
    pub fn from_report(r: &ArbReport) -> Self {
        ArbReportDoc {
            violations: r
                .violations
                .iter()
                .map(|v| ViolationDoc {
                    kind: v.kind.as_str().to_string(),
                    expiry: v.expiry,
                    strike: (v.strike != usize::MAX).then_some(v.strike),
                    magnitude: v.magnitude,
                })
                .collect(),
        }
    }

    pub fn into_report(self) -> Result<ArbReport> {
        let violations = self
            .violations
            .into_iter()
            .map(|v| {
                let kind = ViolationKind::parse(&v.kind).ok_or_else(|| Error::Usage(format!("unknown violation kind {:?}", v.kind)))?;
                Ok(Violation { kind, expiry: v.expiry, strike: v.strike.unwrap_or(usize::MAX), magnitude: v.magnitude })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ArbReport { violations })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DlvDoc {
    pub strikes: Vec<f64>,
    pub expiries: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl From<&DlvSurface> for DlvDoc {
    fn from(d: &DlvSurface) -> Self {
        DlvDoc { strikes: d.strikes.clone(), expiries: d.expiries.clone(), sigma: d.sigma.clone(), variances: d.variances.clone() }
    }
}

impl DlvDoc {
    pub fn into_dlv(self) -> Result<DlvSurface> {
        let d = DlvSurface { strikes: self.strikes, expiries: self.expiries, sigma: self.sigma, variances: self.variances };
        d.validate()?;
        Ok(d)
    }
}
