//! Command-line interface.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use smoothcall_core::blackscholes::implied_vol;
use smoothcall_core::calibration::{build_lp, calibrate, CalibConfig};
use smoothcall_core::dlv::{dlv_from_prices, prices_from_density};
use smoothcall_core::market_data::{MarketSnapshot, WeightMode, WeightOptions};
use smoothcall_core::noarb::{check_surface_with, ArbReport, TOL};
use smoothcall_core::smooth_surface::SmoothSurface;
use smoothcall_core::time_interp::AlphaMode;

use crate::error::{exit, Error, Result};
use crate::json::{self, ArbReportDoc, DlvDoc};
use crate::{config, io, mps, report};

#[derive(Debug, Parser)]
#[command(name = "smoothcall", version, about = "Smooth arbitrage-free call price surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert raw cash quotes to pure call quotes.
    Convert(ConvertArgs),
    /// Calibrate surfaces to pure quote files.
    Fit(FitArgs),
    /// Evaluate a surface at (T, K) points.
    Eval(EvalArgs),
    /// Check a surface or the mids of a quote file for static arbitrage.
    Check(CheckArgs),
    /// Convert between surfaces, node price grids and discrete local volatilities.
    #[command(subcommand)]
    Dlv(DlvCommand),
    /// Print the effective calibration configuration.
    Config(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Drop quotes whose mid has vega / sqrt(T) below this value (0 keeps all).
    #[arg(long, default_value_t = 0.001)]
    pub min_vega: f64,
    #[arg(long, value_parser = ["spread", "vega"], default_value = "spread")]
    pub weights: String,
}

/// Calibration settings; each flag overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CalibFlags {
    /// key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub omega: Option<bool>,
    #[arg(long, value_parser = ["mid", "hard", "penalty"])]
    pub objective: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub dk_max: Option<f64>,
    #[arg(long, value_parser = ["spread", "vega"])]
    pub weights: Option<String>,
    #[arg(long, value_parser = ["linear", "atmvar"])]
    pub alpha: Option<String>,
}

impl CalibFlags {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<CalibConfig> {
        let mut cfg = match &self.config {
            Some(path) => config::read(path)?,
            None => CalibConfig::default(),
        };
        let flags: [(&str, Option<String>); 7] = [
            ("eta", self.eta.map(|v| v.to_string())),
            ("omega", self.omega.map(|v| v.to_string())),
            ("objective", self.objective.clone()),
            ("epsilon", self.epsilon.map(|v| v.to_string())),
            ("dk_max", self.dk_max.map(|v| v.to_string())),
            ("weights", self.weights.clone()),
            ("alpha", self.alpha.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                config::set(&mut cfg, key, &v).map_err(|m| Error::Usage(format!("--{}: {m}", key.replace('_', "-"))))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Pure quote files, one snapshot each.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Surface file for a single input; a directory for several.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub calib: CalibFlags,
    /// Monte Carlo paths per expiry for the report (0 skips the check).
    #[arg(long, default_value_t = 0)]
    pub mc_paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for independent snapshots.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write the calibration LP in fixed MPS format (single input only).
    #[arg(long)]
    pub export_mps: Option<PathBuf>,
    /// Write the MPS export with exact numbers instead of 12-character fields.
    #[arg(long, requires = "export_mps")]
    pub mps_free: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub surface: PathBuf,
    /// CSV with columns T,K.
    pub points: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Hold the last slice constant beyond the last expiry.
    #[arg(long)]
    pub flat_extrapolation: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// surface .json or pure quote .csv
    pub input: PathBuf,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = TOL)]
    pub tol: f64,
    /// Largest strike sampled on a surface (default 1.5 times its largest node).
    #[arg(long)]
    pub k_max: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub t_points: usize,
    #[arg(long, default_value_t = 400)]
    pub k_points: usize,
}

#[derive(Debug, Subcommand)]
pub enum DlvCommand {
    /// Volatilities from a surface (.json) or node price grid (.csv).
    ToDlv {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smooth surface from volatilities.
    ToSurface {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
        #[arg(long, value_parser = ["linear", "atmvar"], default_value = "linear")]
        alpha: String,
    },
    /// Node price grid from volatilities.
    ToGrid {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Ignore files and flags and print the built-in defaults.
    #[arg(long)]
    pub defaults: bool,
    #[command(flatten)]
    pub calib: CalibFlags,
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Convert(a) => convert(&a),
        Command::Fit(a) => fit(&a),
        Command::Eval(a) => eval(&a),
        Command::Check(a) => check(&a),
        Command::Dlv(c) => dlv(&c),
        Command::Config(a) => {
            let cfg = if a.defaults { CalibConfig::default() } else { a.calib.resolve()? };
            emit(&config::to_string(&cfg));
            Ok(exit::OK)
        }
    }
}

fn convert(a: &ConvertArgs) -> Result<i32> {
    let mode = WeightMode::parse(&a.weights).ok_or_else(|| Error::Usage(format!("unknown weight mode {:?}", a.weights)))?;
    let weights = WeightOptions { mode, ..WeightOptions::default() };
    let rows = io::read_raw_quotes(&a.input)?;
    let pure = io::convert_rows(&a.input, &rows, a.min_vega, &weights)?;
    io::write_pure_rows(&a.output, &pure)?;
    Ok(exit::OK)
}

struct FitOutputs {
    surface: PathBuf,
    report_json: PathBuf,
    report_csv: PathBuf,
}

fn outputs_for(a: &FitArgs, input: &Path) -> FitOutputs {
    if a.inputs.len() == 1 {
        FitOutputs {
            surface: a.out.clone(),
            report_json: a.out.with_file_name("report.json"),
            report_csv: a.out.with_file_name("report.csv"),
        }
    } else {
        let stem = input.file_stem().map_or_else(|| "snapshot".into(), |s| s.to_string_lossy().into_owned());
        FitOutputs {
            surface: a.out.join(format!("{stem}.surface.json")),
            report_json: a.out.join(format!("{stem}.report.json")),
            report_csv: a.out.join(format!("{stem}.report.csv")),
        }
    }
}

fn load_snapshot(path: &Path, cfg: &CalibConfig) -> Result<MarketSnapshot> {
    let quotes = io::read_pure_quotes(path)?;
    if quotes.is_empty() {
        return Err(Error::Usage(format!("{}: no quotes", path.display())));
    }
    Ok(MarketSnapshot::from_quotes(&quotes, &cfg.snapshot_options())?)
}

fn fit_one(a: &FitArgs, cfg: &CalibConfig, input: &Path) -> Result<()> {
    let snapshot = load_snapshot(input, cfg)?;
    if let Some(path) = &a.export_mps {
        let lp = build_lp(&snapshot, cfg)?;
        let format = if a.mps_free { mps::MpsFormat::Free } else { mps::MpsFormat::Fixed };
        io::write_text(path, &mps::to_mps_with(&lp, "SMOOTHC", format)?)?;
    }
    let start = Instant::now();
    let surface = calibrate(&snapshot, cfg)?;
    let seconds = start.elapsed().as_secs_f64();

    let mut fit_report = report::build(&snapshot, &surface, seconds)?;
    if a.mc_paths > 0 {
        fit_report.monte_carlo = Some(report::monte_carlo(&snapshot, &surface, a.mc_paths, a.seed)?);
    }
    let out = outputs_for(a, input);
    json::write_surface(&out.surface, &surface)?;
    json::write(&out.report_json, &fit_report)?;
    report::write_csv(&out.report_csv, &fit_report)?;
    Ok(())
}

fn fit(a: &FitArgs) -> Result<i32> {
    let cfg = a.calib.resolve()?;
    if a.export_mps.is_some() && a.inputs.len() > 1 {
        return Err(Error::Usage("--export-mps takes a single input".into()));
    }
    if a.inputs.len() > 1 {
        std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(a.jobs.unwrap_or(1)).build().map_err(|e| Error::Usage(format!("--jobs: {e}")))?;
    let results: Vec<Result<()>> = pool.install(|| a.inputs.par_iter().map(|p| fit_one(a, &cfg, p)).collect());

    let mut first = None;
    for (path, r) in a.inputs.iter().zip(results) {
        if let Err(e) = r {
            if a.inputs.len() > 1 {
                eprintln!("{}: {e}", path.display());
            }
            first.get_or_insert(e);
        }
    }
    match first {
        Some(e) => Err(e),
        None => Ok(exit::OK),
    }
}

fn eval(a: &EvalArgs) -> Result<i32> {
    let mut surface = json::read_surface(&a.surface)?;
    surface.flat_extrapolation = a.flat_extrapolation;
    let rows = io::read_points(&a.points)?
        .into_iter()
        .map(|p| {
            let price = surface.eval_call(p.t, p.k)?;
            let vol = if p.t > 0.0 && p.k > 0.0 { implied_vol(price, 1.0, p.k, p.t).ok() } else { None };
            Ok(io::Evaluated { t: p.t, k: p.k, price, implied_vol: vol })
        })
        .collect::<Result<Vec<_>>>()?;
    io::write_evaluated(&a.out, &rows)?;
    Ok(exit::OK)
}

/// Output of `check`: the violations plus the grids their indices refer to.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckDoc {
    /// Expiry of each checked row.
    pub expiries: Vec<f64>,
    /// Strikes of each checked row.
    pub strikes: Vec<Vec<f64>>,
    #[serde(flatten)]
    pub report: ArbReportDoc,
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![hi];
    }
    let mut v: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    v[n - 1] = hi;
    v
}

fn check_smooth(surface: &SmoothSurface, a: &CheckArgs) -> Result<(ArbReport, Vec<f64>, Vec<f64>)> {
    let t_last = *surface.expiries().last().expect("validated surface has an expiry");
    let mut t_grid = linspace(t_last / a.t_points.max(1) as f64, t_last, a.t_points);
    t_grid.extend_from_slice(surface.expiries());
    t_grid.sort_by(f64::total_cmp);
    t_grid.dedup();
    let k_top = surface.grids().iter().filter_map(|g| g.last()).fold(0.0, |m: f64, &k| m.max(k));
    let k_max = a.k_max.unwrap_or(1.5 * k_top);
    if !(k_max > 0.0) {
        return Err(Error::Usage("--k-max must be positive".into()));
    }
    let k_grid = linspace(0.0, k_max, a.k_points.max(3));
    let report = check_surface_with(surface, &t_grid, &k_grid, a.tol)?;
    Ok((report, t_grid, k_grid))
}

fn check(a: &CheckArgs) -> Result<i32> {
    let doc = if is_json(&a.input) {
        let surface = json::read_surface(&a.input)?;
        let (report, t_grid, k_grid) = check_smooth(&surface, a)?;
        CheckDoc { strikes: vec![k_grid; t_grid.len()], expiries: t_grid, report: ArbReportDoc::from_report(&report) }
    } else {
        let cfg = CalibConfig::default();
        let snapshot = load_snapshot(&a.input, &cfg)?;
        let report = report::mid_arbitrage_with(&snapshot, a.tol)?;
        CheckDoc {
            expiries: snapshot.expiries(),
            strikes: report::mid_rows(&snapshot).into_iter().map(|(k, _)| k).collect(),
            report: ArbReportDoc::from_report(&report),
        }
    };
    let text = json::to_string(&doc).map_err(|source| Error::Json { path: a.input.clone(), source })?;
    match &a.out {
        Some(path) => io::write_text(path, &text)?,
        None => emit(&text),
    }
    Ok(if doc.report.violations.is_empty() { exit::OK } else { exit::CHECK_FAILED })
}

fn dlv(c: &DlvCommand) -> Result<i32> {
    match c {
        DlvCommand::ToDlv { input, out } => {
            let (strikes, expiries, calls, variances) = if is_json(input) {
                let s = json::read_surface(input)?;
                let grid = s.grids()[0].clone();
                if s.grids().iter().any(|g| *g != grid) {
                    return Err(Error::Usage(format!("{}: surface strikes differ across expiries", input.display())));
                }
                let calls = s.densities().iter().map(|q| prices_from_density(&grid, q)).collect();
                (grid, s.expiries().to_vec(), calls, s.variances().to_vec())
            } else {
                io::read_grid(input)?
            };
            let d = dlv_from_prices(&strikes, &expiries, &calls, &variances)?;
            json::write(out, &DlvDoc::from(&d))?;
        }
        DlvCommand::ToSurface { input, out, eta, alpha } => {
            let d = json::read::<DlvDoc>(input)?.into_dlv()?;
            let mode = AlphaMode::parse(alpha).ok_or_else(|| Error::Usage(format!("unknown alpha mode {alpha:?}")))?;
            json::write_surface(out, &d.to_smooth_surface(None, *eta, mode)?)?;
        }
        DlvCommand::ToGrid { input, out } => {
            let d = json::read::<DlvDoc>(input)?.into_dlv()?;
            let calls: Vec<Vec<f64>> = d.densities(None)?.iter().map(|q| prices_from_density(&d.strikes, q)).collect();
            io::write_grid(out, &d.strikes, &d.expiries, &calls, &d.variances)?;
        }
    }
    Ok(exit::OK)
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// Parses `args` and runs the command, mapping every outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
