//! JSON problem configurations and the CSV formats for orbits and bands.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::FunctionalContext;
use crate::lattice::{BlockVector, Boundary, PeriodicCoefficients, Window};
use crate::nonlinearity::{
    family_log_saturating, family_quadratic, family_radial_rational, Nonlinearity, RadialFamily,
};
use crate::operators::assemble;
use crate::solver::{Damping, SolveOptions, Start, Strategy};
use crate::spectral::{eigendecompose, BandSample};
use crate::verify::VerifyTolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub block_dim: usize,
    pub period: usize,
    /// `S(0), …, S(T-1)`, each a row-major `2N×2N` array.
    pub matrices: Vec<Vec<f64>>,
    pub nonlinearity: NonlinearityConfig,
    pub window: WindowConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameters", rename_all = "snake_case")]
pub enum NonlinearityConfig {
    RadialRational { nu: f64 },
    LogSaturating { nu: f64 },
    Quadratic { c: f64 },
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<RadialFamily> {
        match *self {
            NonlinearityConfig::RadialRational { nu } => family_radial_rational(nu),
            NonlinearityConfig::LogSaturating { nu } => family_log_saturating(nu),
            NonlinearityConfig::Quadratic { c } => family_quadratic(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub half_width: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::ZeroPad
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartConfig {
    #[serde(flatten)]
    pub strategy: Strategy,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub trivial_tol: f64,
    pub damping: Damping,
    pub seed: u64,
    /// Empty means [`SolveOptions::default_starts`].
    pub starts: Vec<StartConfig>,
    pub window_check: bool,
    pub verify: VerifyTolerances,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolverConfig {
            max_iter: o.max_iter,
            grad_tol: o.grad_tol,
            trivial_tol: o.trivial_tol,
            damping: o.damping,
            seed: o.seed,
            starts: Vec::new(),
            window_check: o.window_check,
            verify: o.verify,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> Result<SolveOptions> {
        let starts = if self.starts.is_empty() {
            SolveOptions::default_starts()
        } else {
            self.starts
                .iter()
                .map(|s| Start::guess(s.strategy, s.amplitude))
                .collect()
        };
        let opts = SolveOptions {
            max_iter: self.max_iter,
            grad_tol: self.grad_tol,
            trivial_tol: self.trivial_tol,
            damping: self.damping,
            starts,
            seed: self.seed,
            window_check: self.window_check,
            verify: self.verify,
            ..SolveOptions::default()
        };
        opts.validate().map_err(|e| prefix("solver", e))?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

fn prefix(field: &str, e: Error) -> Error {
    Error::Configuration(format!("{field}: {e}"))
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProblemConfig = serde_json::from_str(text)
            .map_err(|e| Error::Configuration(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks. Hypothesis (R0) is not enforced here; it is
    /// reported by the hypothesis check instead.
    pub fn validate(&self) -> Result<()> {
        if self.block_dim == 0 {
            return Err(Error::Configuration("block_dim: must be >= 1".into()));
        }
        if self.period == 0 {
            return Err(Error::Configuration("period: must be >= 1".into()));
        }
        if self.matrices.len() != self.period {
            return Err(Error::Configuration(format!(
                "matrices: {} given for period {}",
                self.matrices.len(),
                self.period
            )));
        }
        self.coefficients()?;
        self.nonlinearity
            .build()
            .map_err(|e| prefix("nonlinearity", e))?;
        self.solver.options()?;
        Ok(())
    }

    pub fn coefficients(&self) -> Result<PeriodicCoefficients> {
        PeriodicCoefficients::from_row_major(self.block_dim, &self.matrices)
            .map_err(|e| prefix("matrices", e))
    }

    pub fn nonlinearity(&self) -> Result<Arc<dyn Nonlinearity>> {
        Ok(Arc::new(
            self.nonlinearity
                .build()
                .map_err(|e| prefix("nonlinearity", e))?,
        ))
    }

    pub fn window(&self) -> Result<Window> {
        let w = match self.window.boundary {
            Boundary::ZeroPad => Window::zero_pad(self.window.half_width),
            Boundary::Periodic => {
                Window::periodic(2 * self.window.half_width + 1).map_err(|e| prefix("window", e))?
            }
        };
        w.check_period(self.period)
            .map_err(|e| prefix("window", e))?;
        Ok(w)
    }

    /// Context on a zero-padded window of the configured half width; solving
    /// always uses zero padding.
    pub fn solve_context(&self) -> Result<FunctionalContext> {
        self.context_on(Window::zero_pad(self.window.half_width))
    }

    pub fn context_on(&self, window: Window) -> Result<FunctionalContext> {
        let coeffs = self.coefficients()?;
        coeffs.require_r0()?;
        let op = assemble(window, &coeffs)?;
        let dec = eigendecompose(&op)?;
        FunctionalContext::new(op, self.nonlinearity()?)?.with_decomposition(dec)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Configuration(format!("csv: {e}"))
}

/// `{:.16e}` keeps 17 significant digits, enough to round-trip any `f64`.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Orbit CSV: `n, x1_1..x1_N, x2_1..x2_N`, one row per node.
pub fn write_orbit_csv<W: std::io::Write>(x: &BlockVector, out: W) -> Result<()> {
    let n = x.block_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string()];
    header.extend((1..=n).map(|k| format!("x1_{k}")));
    header.extend((1..=n).map(|k| format!("x2_{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for (node, z) in x.blocks() {
        let mut row = vec![node.to_string()];
        row.extend(z.iter().map(|v| fmt(*v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Configuration(format!("csv: {e}")))?;
    Ok(())
}

/// Reads an orbit CSV. Nodes must be consecutive and symmetric about 0; the
/// result lives on the matching zero-padded window.
pub fn read_orbit_csv<R: std::io::Read>(input: R, block_dim: usize) -> Result<BlockVector> {
    let mut r = csv::Reader::from_reader(input);
    let width = 2 * block_dim;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.len() != width + 1 {
        return Err(Error::Dimension(format!(
            "orbit has {} columns, expected {} for N = {block_dim}",
            headers.len(),
            width + 1
        )));
    }
    let mut nodes = Vec::new();
    let mut data = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                Error::Configuration(format!("orbit row {}: bad number {s:?}", line + 1))
            })
        };
        let node: i64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Configuration(format!("orbit row {}: bad node index", line + 1)))?;
        nodes.push(node);
        for field in rec.iter().skip(1) {
            data.push(parse(field)?);
        }
    }
    let len = nodes.len();
    if len == 0 || len % 2 == 0 {
        return Err(Error::Dimension(format!(
            "orbit has {len} nodes; expected an odd count 2M+1"
        )));
    }
    let m = len / 2;
    let window = Window::zero_pad(m);
    if nodes.iter().copied().ne(window.nodes()) {
        return Err(Error::Dimension(format!(
            "orbit nodes must run consecutively from -{m} to {m}"
        )));
    }
    BlockVector::from_vec(window, block_dim, data)
}

/// Band CSV: `theta, band_1..band_{2NT}`.
pub fn write_bands_csv<W: std::io::Write>(samples: &[BandSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let bands = samples.first().map_or(0, |s| s.eigenvalues.len());
    let mut header = vec!["theta".to_string()];
    header.extend((1..=bands).map(|k| format!("band_{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for s in samples {
        let mut row = vec![fmt(s.theta)];
        row.extend(s.eigenvalues.iter().map(|v| fmt(*v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Configuration(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = r#"{
        "block_dim": 1,
        "period": 1,
        "matrices": [[0, -1, -1, 0]],
        "nonlinearity": {"family": "radial_rational", "parameters": {"nu": 4}},
        "window": {"half_width": 16}
    }"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = ProblemConfig::from_json(MODEL).unwrap();
        assert_eq!(cfg.window.boundary, Boundary::ZeroPad);
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(
            cfg.solver.options().unwrap().starts.len(),
            SolveOptions::default_starts().len()
        );
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MODEL.replace("[[0, -1, -1, 0]]", "[[0, -1, 1, 0]]");
        let e = ProblemConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("matrices") && e.contains("symmetric"), "{e}");
        let bad = MODEL.replace("\"nu\": 4", "\"nu\": -1");
        let e = ProblemConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("nonlinearity"), "{e}");
        let bad = MODEL.replace("\"period\": 1", "\"period\": 2");
        let e = ProblemConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("matrices"), "{e}");
        let e = ProblemConfig::from_json("{").unwrap_err();
        assert!(matches!(e, Error::Configuration(_)));
    }

    #[test]
    fn r0_violation_is_not_a_parse_error() {
        let cfg = ProblemConfig::from_json(&MODEL.replace("[[0, -1, -1, 0]]", "[[0, 1, 1, 0]]"));
        let cfg = cfg.unwrap();
        assert!(matches!(
            cfg.solve_context().unwrap_err(),
            Error::HypothesisViolation {
                hypothesis: "R0",
                ..
            }
        ));
    }

    #[test]
    fn orbit_csv_round_trip_is_exact() {
        let x = BlockVector::from_fn(Window::zero_pad(3), 2, |n, b| {
            for (k, v) in b.iter_mut().enumerate() {
                *v = (n as f64 + 0.1 * k as f64).sin() / 3.0;
            }
        });
        let mut buf = Vec::new();
        write_orbit_csv(&x, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,x1_1,x1_2,x2_1,x2_2\n-3,"));
        let y = read_orbit_csv(buf.as_slice(), 2).unwrap();
        assert_eq!(x, y);
        assert!(matches!(
            read_orbit_csv(buf.as_slice(), 1),
            Err(Error::Dimension(_))
        ));
    }
}
