//! The `homoclinic` command line.
//!
//! Exit codes: 0 success, 1 check or verification failure, 2 configuration
//! error, 3 no orbit found.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{read_orbit_csv, write_bands_csv, write_orbit_csv, ProblemConfig};
use crate::error::Error;
use crate::lattice::Window;
use crate::nonlinearity::{check_hypotheses, HypothesisReport, SamplingPlan, Status};
use crate::operators::assemble;
use crate::solver::{distinct_orbits, run_starts};
use crate::spectral::{band_structure, eigendecompose, floquet_union, inclusion_violation};
use crate::verify::verify_orbit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_ORBIT: i32 = 3;

/// Tolerance for band inclusion and the operator-norm bound.
const SPECTRUM_TOL: f64 = 1e-9;
const CROSS_CHECK_CELLS: usize = 8;

#[derive(Debug, Parser)]
#[command(
    name = "homoclinic",
    version,
    about = "Homoclinic orbits of periodic discrete Hamiltonian lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the config's output.dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the window half width.
    #[arg(long)]
    pub window: Option<usize>,
    /// Overrides the solver and sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check hypotheses (R0)-(R4).
    Check(Common),
    /// Band structure, spectral bounds and the periodic cross-check.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Band structure CSV only.
    Bands {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Multi-start search for homoclinic orbits.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Solve even if the hypothesis check fails.
        #[arg(long)]
        skip_check: bool,
    },
    /// Verify an orbit CSV against the configured problem.
    Verify {
        #[command(flatten)]
        common: Common,
        orbit: PathBuf,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::HypothesisViolation { .. } | Error::SpectralGap { .. } => EXIT_FAILED,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_failure(message: String) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing reports to `stdout` and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load(common: &Common) -> Result<ProblemConfig, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| config_failure(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg = ProblemConfig::from_json(&text)?;
    if let Some(m) = common.window {
        cfg.window.half_width = m;
    }
    if let Some(s) = common.seed {
        cfg.solver.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ProblemConfig) -> Result<Option<PathBuf>, Failure> {
    let dir = common.out.clone().or_else(|| cfg.output.dir.clone());
    if let Some(d) = &dir {
        fs::create_dir_all(d)
            .map_err(|e| config_failure(format!("cannot create {}: {e}", d.display())))?;
    }
    Ok(dir)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .map_err(|e| config_failure(format!("cannot write {}: {e}", path.display())))
}

fn emit(
    value: &impl Serialize,
    name: &str,
    dir: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    if let Some(d) = dir {
        write_file(&d.join(name), text.as_bytes())?;
    }
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| config_failure(format!("stdout: {e}")))
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Check(common) => cmd_check(&common, stdout, stderr),
        Command::Spectrum { common, grid } => cmd_spectrum(&common, grid, stdout),
        Command::Bands { common, grid } => cmd_bands(&common, grid, stdout),
        Command::Solve { common, skip_check } => cmd_solve(&common, skip_check, stdout, stderr),
        Command::Verify { common, orbit } => cmd_verify(&common, &orbit, stdout),
    }
}

fn hypothesis_report(cfg: &ProblemConfig) -> Result<HypothesisReport, Failure> {
    let coeffs = cfg.coefficients()?;
    let nl = cfg.nonlinearity()?;
    Ok(check_hypotheses(
        nl.as_ref(),
        &coeffs,
        &SamplingPlan::with_seed(cfg.solver.seed),
    ))
}

fn warnings(report: &HypothesisReport) -> Vec<String> {
    report
        .entries
        .iter()
        .flat_map(|e| e.findings.iter())
        .filter(|f| f.status == Status::Inconclusive)
        .map(|f| format!("{}: {}", f.check, f.message))
        .collect()
}

fn cmd_check(
    common: &Common,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = load(common)?;
    let dir = out_dir(common, &cfg)?;
    let report = hypothesis_report(&cfg)?;
    let warns = warnings(&report);
    for w in &warns {
        let _ = writeln!(stderr, "warning: {w}");
    }
    for e in &report.entries {
        for f in e.findings.iter().filter(|f| f.status == Status::Fail) {
            let _ = writeln!(stderr, "fail: ({}) {}", e.hypothesis, f.message);
        }
    }
    let failed = report.failed();
    let value = json!({
        "passed": failed.is_empty(),
        "failed": failed,
        "warnings": warns,
        "report": report,
    });
    emit(&value, "check.json", dir.as_deref(), stdout)?;
    Ok(if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn band_samples(
    cfg: &ProblemConfig,
    grid: usize,
) -> Result<Vec<crate::spectral::BandSample>, Failure> {
    let coeffs = cfg.coefficients()?;
    Ok(band_structure(&coeffs, grid)?)
}

fn cmd_bands(common: &Common, grid: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load(common)?;
    let dir = out_dir(common, &cfg)?;
    let samples = band_samples(&cfg, grid)?;
    let mut buf = Vec::new();
    write_bands_csv(&samples, &mut buf)?;
    match dir {
        Some(d) => write_file(&d.join("bands.csv"), &buf)?,
        None => stdout
            .write_all(&buf)
            .map_err(|e| config_failure(format!("stdout: {e}")))?,
    }
    Ok(EXIT_OK)
}

fn cmd_spectrum(common: &Common, grid: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load(common)?;
    let dir = out_dir(common, &cfg)?;
    let coeffs = cfg.coefficients()?;
    let (lambda0, big_lambda0) = coeffs.require_r0()?;
    let samples = band_samples(&cfg, grid)?;
    if let Some(d) = &dir {
        let mut buf = Vec::new();
        write_bands_csv(&samples, &mut buf)?;
        write_file(&d.join("bands.csv"), &buf)?;
    }
    let values: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.eigenvalues.iter().copied())
        .collect();
    let neg: Vec<f64> = values.iter().copied().filter(|v| *v < 0.0).collect();
    let pos: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let extrema = json!({
        "lower_band_min": min(&neg),
        "lower_band_max": max(&neg),
        "upper_band_min": min(&pos),
        "upper_band_max": max(&pos),
    });
    let violation = inclusion_violation(&values, lambda0, big_lambda0);
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norm_ok = max_abs <= big_lambda0 + 2.0 + SPECTRUM_TOL;

    let cells = CROSS_CHECK_CELLS * coeffs.period();
    let cross_check = if cells <= 2 * cfg.window.half_width + 1 {
        let op = assemble(
            Window::periodic_cells(CROSS_CHECK_CELLS, coeffs.period())?,
            &coeffs,
        )?;
        let direct = eigendecompose(&op)?;
        let union = floquet_union(&coeffs, CROSS_CHECK_CELLS);
        let mismatch = direct
            .eigenvalues()
            .iter()
            .zip(&union)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let ok = union.len() == direct.eigenvalues().len() && mismatch < SPECTRUM_TOL;
        json!({
            "nodes": cells,
            "max_mismatch": mismatch,
            "passed": ok,
        })
    } else {
        Value::Null
    };
    let passed = violation <= SPECTRUM_TOL
        && norm_ok
        && cross_check
            .get("passed")
            .and_then(Value::as_bool)
            .unwrap_or(true);
    let value = json!({
        "lambda0": lambda0,
        "big_lambda0": big_lambda0,
        "grid": grid,
        "bands": samples.first().map_or(0, |s| s.eigenvalues.len()),
        "extrema": extrema,
        "inclusion": {
            "lower": [-big_lambda0 - 2.0, -lambda0],
            "upper": [lambda0, big_lambda0 + 2.0],
            "max_violation": violation,
            "passed": violation <= SPECTRUM_TOL,
        },
        "norm_bound": {
            "max_abs": max_abs,
            "bound": big_lambda0 + 2.0,
            "passed": norm_ok,
        },
        "periodic_cross_check": cross_check,
        "passed": passed,
    });
    emit(&value, "spectrum.json", dir.as_deref(), stdout)?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_solve(
    common: &Common,
    skip_check: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = load(common)?;
    let dir = out_dir(common, &cfg)?.unwrap_or_else(|| PathBuf::from("."));
    let report = hypothesis_report(&cfg)?;
    let failed: Vec<String> = report.failed().into_iter().map(String::from).collect();
    if !failed.is_empty() && !skip_check {
        let value = json!({
            "skip_check": false,
            "check_failed": failed,
            "report": report,
        });
        let _ = writeln!(
            stderr,
            "error: hypothesis check failed ({}); use --skip-check to solve anyway",
            failed.join(", ")
        );
        emit(&value, "solve.json", Some(&dir), stdout)?;
        return Ok(EXIT_FAILED);
    }
    let ctx = cfg.solve_context()?;
    let opts = cfg.solver.options()?;
    let attempts = run_starts(&ctx, &opts)?;
    let summary: Vec<Value> = attempts
        .iter()
        .map(|r| {
            json!({
                "start": r.start_used,
                "status": r.status,
                "iterations": r.iterations,
                "grad_inf_norm": r.grad_inf_norm,
                "phi": r.phi_value,
            })
        })
        .collect();
    let orbits = distinct_orbits(&ctx, attempts)?;
    let mut entries = Vec::new();
    for (i, r) in orbits.iter().enumerate() {
        let name = format!("orbit_{}.csv", i + 1);
        let mut buf = Vec::new();
        write_orbit_csv(&r.orbit, &mut buf)?;
        write_file(&dir.join(&name), &buf)?;
        let v = r
            .verification
            .as_ref()
            .expect("successful solves carry a report");
        entries.push(json!({
            "file": name,
            "start": r.start_used,
            "phi": r.phi_value,
            "linf_norm": v.linf_norm,
            "grad_inf_norm": r.grad_inf_norm,
            "iterations": r.iterations,
            "dhs_residual_inf": v.dhs_residual_inf,
            "decay_rate": v.decay.rate,
            "decay_r_squared": v.decay.r_squared,
            "energy_identity_defect": v.energy_identity_defect,
            "window_drift": v.window_stability_inf(),
        }));
    }
    let value = json!({
        "skip_check": skip_check,
        "check_failed": failed,
        "seed": opts.seed,
        "half_width": ctx.window().half_width(),
        "orbits": entries,
        "attempts": summary,
    });
    emit(&value, "solve.json", Some(&dir), stdout)?;
    Ok(if orbits.is_empty() {
        EXIT_NO_ORBIT
    } else {
        EXIT_OK
    })
}

fn cmd_verify(common: &Common, orbit: &Path, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load(common)?;
    let dir = out_dir(common, &cfg)?;
    let file = fs::File::open(orbit)
        .map_err(|e| config_failure(format!("cannot read {}: {e}", orbit.display())))?;
    let x = read_orbit_csv(file, cfg.block_dim)?;
    let ctx = cfg.context_on(x.window())?;
    let opts = cfg.solver.options()?;
    let report = verify_orbit(&ctx, &x, &opts.verify, opts.window_check.then_some(&opts))?;
    let passed = report.passed;
    emit(&report, "verify.json", dir.as_deref(), stdout)?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}
