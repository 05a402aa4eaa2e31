//! Command-line front end. The binary is a thin wrapper around [`run`].
//!
//! Exit codes: 0 success, 2 configuration, 3 numeric failure,
//! 4 verification failure, 5 monotonicity violation.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_times, ConfigError, RunConfig};
use crate::diff_probe::{
    analytic_jacobian_piecewise, cross_section_check, fd_jacobian, JacobianReport, SectionReport, SECTION_STEP,
};
use crate::equivalence::VerificationRecord;
use crate::error::Error;
use crate::smoothing::{BumpShape, SmoothedEquivalence};
use crate::suspension::{write_trajectory_csv, SuspensionPoint};
use crate::torus::TorusPoint;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
pub const EXIT_MONOTONICITY: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "suspflow",
    version,
    about = "Suspension flows over toral automorphisms and their equivalences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a source-flow trajectory as CSV.
    FlowEval {
        #[command(flatten)]
        common: Common,
        /// Start point `x1,x2,s`; overrides `[flow] point`.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        /// `start:step:end` or a comma-separated list; overrides `[flow] times`.
        #[arg(long, allow_hyphen_values = true)]
        times: Option<String>,
    },
    /// Check the equivalence identity and step counts on random samples.
    EquivCheck {
        #[command(flatten)]
        common: Common,
        /// Adds a constant to every time change (negative control).
        #[arg(long, hide = true, allow_hyphen_values = true)]
        corrupt_tau: Option<f64>,
    },
    /// Tabulate fiber reparametrizations as CSV.
    SmoothBuild {
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference Jacobians in the interior and across the section.
    DerivativeReport {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ShapeArg {
    Exponential,
    Plateau,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    shape: Option<ShapeArg>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Numeric(Error),
    Io(io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

fn flag_error(flag: &str, message: impl Into<String>) -> Failure {
    Failure::Config(ConfigError {
        key: flag.to_string(),
        line: None,
        message: message.into(),
    })
}

impl Common {
    fn load(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(samples) = self.samples {
            cfg.samples = samples;
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(flag_error(
                    "--tolerance",
                    format!("expected a positive number, got {tol}"),
                ));
            }
            cfg.tolerance = tol;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        match self.shape {
            Some(ShapeArg::Exponential) => cfg.shape = BumpShape::Exponential,
            Some(ShapeArg::Plateau) if !matches!(cfg.shape, BumpShape::Plateau { .. }) => {
                cfg.shape = BumpShape::default()
            }
            _ => {}
        }
        if let Some(delta) = self.delta {
            if !matches!(cfg.shape, BumpShape::Plateau { .. }) {
                return Err(flag_error("--delta", "only applies to the plateau shape"));
            }
            if !(delta > 0.0 && delta < 1.0) {
                return Err(flag_error("--delta", format!("delta {delta} not in (0, 1)")));
            }
            cfg.shape = BumpShape::Plateau { delta };
        }
        Ok(cfg)
    }
}

fn open_output<'a>(cfg: &RunConfig, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, Failure> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    })
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::FlowEval { common, point, times } => flow_eval(common, point.as_deref(), times.as_deref(), stdout),
        Command::EquivCheck { common, corrupt_tau } => equiv_check(common, corrupt_tau.unwrap_or(0.0), stdout),
        Command::SmoothBuild { common } => smooth_build(common, stdout, stderr),
        Command::DerivativeReport { common } => derivative_report(common, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            let _ = writeln!(stderr, "config error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Numeric(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            numeric_exit_code(&e)
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(stderr, "i/o error: {e}");
            EXIT_NUMERIC
        }
    }
}

fn numeric_exit_code(e: &Error) -> i32 {
    match e {
        Error::MonotonicityViolation { .. } => EXIT_MONOTONICITY,
        _ => EXIT_NUMERIC,
    }
}

fn flow_eval(
    common: &Common,
    point: Option<&str>,
    times: Option<&str>,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = common.load()?;
    let system = cfg.source()?;
    let start = match point {
        Some(text) => {
            let v: Vec<f64> = text
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| flag_error("--point", format!("expected `x1,x2,s`, got {text:?}")))?;
            if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
                return Err(flag_error(
                    "--point",
                    format!("expected three finite numbers, got {text:?}"),
                ));
            }
            system.normalize(TorusPoint::new(v[0], v[1]), v[2])
        }
        None => cfg
            .flow_point(&system)
            .ok_or_else(|| flag_error("flow.point", "no start point given"))?,
    };
    let times = match times {
        Some(text) => parse_times(text).map_err(|m| flag_error("--times", m))?,
        None => cfg
            .times
            .clone()
            .ok_or_else(|| flag_error("flow.times", "no sample times given"))?,
    };
    let rows = system.trajectory(&start, &times);
    let mut out = open_output(&cfg, stdout)?;
    write_trajectory_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Indexed<T: Serialize> {
    index: usize,
    #[serde(flatten)]
    record: T,
}

fn write_line<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> Result<(), Failure> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Draws `count` source points and flow times in a fixed order, so results
/// depend only on the seed.
fn draw_samples(cfg: &RunConfig, count: usize) -> Result<Vec<(SuspensionPoint, f64)>, Failure> {
    let source = cfg.source()?;
    let mut rng = SplitMix64::seed_from_u64(cfg.seed);
    Ok((0..count)
        .map(|_| {
            let p = source.random_point(&mut rng);
            let t = rng.gen_range(-cfg.max_time..=cfg.max_time);
            (p, t)
        })
        .collect())
}

fn equiv_check(common: &Common, tau_offset: f64, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = common.load()?;
    let pair = cfg.pair()?;
    let samples = draw_samples(&cfg, cfg.samples)?;
    let records: Vec<VerificationRecord> = samples
        .par_iter()
        .map(|(p, t)| pair.verification_record(p, *t, tau_offset))
        .collect();

    let mut out = open_output(&cfg, stdout)?;
    let mut max_residual: f64 = 0.0;
    let mut n_mismatches = 0usize;
    let mut min_slope = f64::INFINITY;
    for (index, record) in records.iter().enumerate() {
        // NaN residuals count as failures
        max_residual = if record.residual.is_nan() {
            f64::INFINITY
        } else {
            max_residual.max(record.residual)
        };
        n_mismatches += usize::from(record.n_src != record.n_tgt);
        min_slope = min_slope.min(record.slope);
        write_line(&mut out, &Indexed { index, record })?;
    }
    let pass = max_residual < cfg.tolerance && n_mismatches == 0 && min_slope > 0.0;
    let summary = json!({
        "summary": "equiv-check",
        "seed": cfg.seed,
        "samples": records.len(),
        "max_residual": max_residual,
        "n_mismatches": n_mismatches,
        "min_slope": if records.is_empty() { None } else { Some(min_slope) },
        "tolerance": cfg.tolerance,
        "pass": pass,
    });
    write_line(&mut out, &summary)?;
    out.flush()?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFICATION })
}

#[derive(Serialize)]
struct TableRow {
    fiber: usize,
    x1: f64,
    x2: f64,
    t: f64,
    phi: f64,
    dphi: f64,
}

fn smooth_build(common: &Common, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = common.load()?;
    let se = SmoothedEquivalence::new(cfg.pair()?, cfg.shape);
    let mut rng = SplitMix64::seed_from_u64(cfg.seed);
    let bases: Vec<TorusPoint> = (0..cfg.fibers)
        .map(|_| TorusPoint::from_raw([rng.gen(), rng.gen()]))
        .collect();

    let mut tables = Vec::with_capacity(bases.len());
    let mut min_derivative = f64::INFINITY;
    let mut endpoint_residual: f64 = 0.0;
    let mut integral_residual: f64 = 0.0;
    for (index, x) in bases.iter().enumerate() {
        let fiber = match se.fiber(x) {
            Ok(f) => f,
            Err(e @ Error::MonotonicityViolation { .. }) => {
                write_line(
                    stderr,
                    &json!({
                        "summary": "smooth-build",
                        "error": "monotonicity",
                        "fiber": index,
                        "x1": x.x1(),
                        "x2": x.x2(),
                        "detail": e.to_string(),
                    }),
                )?;
                return Ok(EXIT_MONOTONICITY);
            }
            Err(e) => return Err(e.into()),
        };
        min_derivative = min_derivative.min(fiber.min_derivative());
        let top = fiber.source_height();
        let rows = (0..cfg.table_rows)
            .map(|j| {
                let t = if j + 1 == cfg.table_rows {
                    top
                } else {
                    top * j as f64 / (cfg.table_rows - 1) as f64
                };
                let (phi, dphi) = fiber.eval(t)?;
                Ok(TableRow {
                    fiber: index,
                    x1: x.x1(),
                    x2: x.x2(),
                    t,
                    phi,
                    dphi,
                })
            })
            .collect::<crate::error::Result<Vec<_>>>()?;
        let (bottom, _) = fiber.eval(0.0)?;
        let (end, _) = fiber.eval(top)?;
        endpoint_residual = endpoint_residual
            .max(bottom.abs())
            .max((end - fiber.target_height()).abs());
        integral_residual = integral_residual.max((fiber.bump().integral()? - fiber.bump().c()).abs());
        tables.push(rows);
    }

    let mut out = open_output(&cfg, stdout)?;
    {
        let mut writer = csv::Writer::from_writer(&mut out);
        for row in tables.iter().flatten() {
            writer.serialize(row)?;
        }
        writer.flush()?;
    }
    out.flush()?;
    let pass = endpoint_residual < cfg.tolerance && integral_residual < cfg.tolerance;
    write_line(
        stderr,
        &json!({
            "summary": "smooth-build",
            "fibers": bases.len(),
            "shape": shape_name(cfg.shape),
            "epsilon": se.epsilon(),
            "min_derivative": if bases.is_empty() { None } else { Some(min_derivative) },
            "max_endpoint_residual": endpoint_residual,
            "max_integral_residual": integral_residual,
            "tolerance": cfg.tolerance,
            "pass": pass,
        }),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFICATION })
}

fn shape_name(shape: BumpShape) -> String {
    match shape {
        BumpShape::Exponential => "exponential".into(),
        BumpShape::Plateau { delta } => format!("plateau({delta})"),
    }
}

#[derive(Serialize)]
struct ProbeLine<T: Serialize> {
    index: usize,
    kind: &'static str,
    map: &'static str,
    #[serde(flatten)]
    report: T,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// Interior FD cross-validation tolerance and smoothed-seam tolerance used
/// for the pass flag.
const INTERIOR_TOLERANCE: f64 = 1e-6;
const SEAM_TOLERANCE: f64 = 1e-4;
/// Piecewise mismatch above which a seam is reported as broken.
const SEAM_BREAK: f64 = 1e-2;

fn derivative_report(common: &Common, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = common.load()?;
    let pair = cfg.pair()?;
    let se = SmoothedEquivalence::new(pair.clone(), cfg.shape);
    let source = pair.source();
    let mut rng = SplitMix64::seed_from_u64(cfg.seed);
    let interior: Vec<SuspensionPoint> = (0..cfg.probes)
        .map(|_| {
            let x = TorusPoint::from_raw([rng.gen(), rng.gen()]);
            let s = rng.gen_range(0.05..0.95) * source.roof(&x);
            SuspensionPoint::new(x, s)
        })
        .collect();
    let section: Vec<TorusPoint> = (0..cfg.section_points)
        .map(|_| TorusPoint::from_raw([rng.gen(), rng.gen()]))
        .collect();

    type Interior = (JacobianReport, JacobianReport);
    let interior_reports: Vec<crate::error::Result<Interior>> = interior
        .par_iter()
        .map(|p| {
            let analytic = analytic_jacobian_piecewise(&pair, p)?;
            let piecewise = fd_jacobian(&pair, source, p, cfg.fd_step)?;
            let smoothed = fd_jacobian(&se, source, p, cfg.fd_step)?;
            Ok((
                JacobianReport::new(p, Some(analytic), piecewise, cfg.fd_step),
                JacobianReport::new(p, None, smoothed, cfg.fd_step),
            ))
        })
        .collect();
    let section_reports: Vec<crate::error::Result<(SectionReport, SectionReport)>> = section
        .par_iter()
        .map(|x| {
            let piecewise = cross_section_check(&pair, &pair, x, SECTION_STEP)?;
            let smoothed = cross_section_check(&se, &pair, x, SECTION_STEP)?;
            Ok((
                SectionReport::new(x, &piecewise, SECTION_STEP),
                SectionReport::new(x, &smoothed, SECTION_STEP),
            ))
        })
        .collect();

    let mut out = open_output(&cfg, stdout)?;
    let mut interior_error: f64 = 0.0;
    let mut min_det = f64::INFINITY;
    for (index, reports) in interior_reports.into_iter().enumerate() {
        let (piecewise, smoothed) = reports?;
        interior_error = interior_error.max(piecewise.max_abs_error.unwrap_or(f64::INFINITY));
        min_det = min_det.min(smoothed.determinant);
        write_line(
            &mut out,
            &ProbeLine {
                index,
                kind: "interior",
                map: "piecewise",
                report: piecewise,
            },
        )?;
        write_line(
            &mut out,
            &ProbeLine {
                index,
                kind: "interior",
                map: "smoothed",
                report: smoothed,
            },
        )?;
    }
    let mut rough = Vec::new();
    let mut smooth = Vec::new();
    for (index, reports) in section_reports.into_iter().enumerate() {
        let (piecewise, smoothed) = reports?;
        rough.push(piecewise.mismatch);
        smooth.push(smoothed.mismatch);
        write_line(
            &mut out,
            &ProbeLine {
                index,
                kind: "section",
                map: "piecewise",
                report: piecewise,
            },
        )?;
        write_line(
            &mut out,
            &ProbeLine {
                index,
                kind: "section",
                map: "smoothed",
                report: smoothed,
            },
        )?;
    }
    let max = |v: &[f64]| {
        v.iter()
            .copied()
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
    };
    let smooth_max = max(&smooth);
    let rough_max = max(&rough);
    let broken = rough.iter().filter(|&&m| m > SEAM_BREAK).count();
    let pass = interior_error < INTERIOR_TOLERANCE
        && (interior.is_empty() || min_det > 0.0)
        && smooth_max.is_none_or(|m| m < SEAM_TOLERANCE);
    let summary = json!({
        "summary": "derivative-report",
        "seed": cfg.seed,
        "probes": interior.len(),
        "section_points": section.len(),
        "interior_max_error": if interior.is_empty() { None } else { Some(interior_error) },
        "smoothed_min_determinant": if interior.is_empty() { None } else { Some(min_det) },
        "smoothed_max_mismatch": smooth_max,
        "smoothed_median_mismatch": median(&mut smooth),
        "piecewise_max_mismatch": rough_max,
        "piecewise_median_mismatch": median(&mut rough),
        "piecewise_broken_seams": broken,
        "pass": pass,
    });
    write_line(&mut out, &summary)?;
    out.flush()?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFICATION })
}
