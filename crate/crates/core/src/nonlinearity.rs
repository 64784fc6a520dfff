//! The nonlinear part `R(n, z)` of the Hamiltonian, built-in asymptotically
//! quadratic families, and a sampling-based checker for the structural
//! hypotheses (R0)–(R4).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dot, PeriodicCoefficients};

/// `R(n, z)` together with its derivatives and asymptotic matrix `S∞(n)`.
///
/// Implementations must be pure; the checker and multi-start solver call
/// them from several threads.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    /// Period in `n`.
    fn period(&self) -> usize {
        1
    }

    fn value(&self, n: i64, z: &[f64]) -> f64;

    /// Writes `∇R(n, z)` into `out`.
    fn gradient(&self, n: i64, z: &[f64], out: &mut [f64]);

    /// Closed-form Hessian, when available.
    fn hessian(&self, _n: i64, _z: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// `R̃(n, z) = ½∇R(n, z)·z - R(n, z)`. Override when a form without
    /// cancellation at large `|z|` is known.
    fn tilde_r(&self, n: i64, z: &[f64]) -> f64 {
        let mut g = vec![0.0; z.len()];
        self.gradient(n, z, &mut g);
        0.5 * dot(&g, z) - self.value(n, z)
    }

    /// `S∞(n)` as a `dim × dim` matrix.
    fn s_infinity(&self, n: i64, dim: usize) -> DMatrix<f64>;

    /// Short human-readable description.
    fn describe(&self) -> String {
        format!("{self:?}")
    }
}

/// `R̃(n, z) = ½∇R(n, z)·z - R(n, z)`.
pub fn eval_tilde_r(nl: &dyn Nonlinearity, n: i64, z: &[f64]) -> f64 {
    nl.tilde_r(n, z)
}

/// `λ∞`: smallest eigenvalue of `S∞(n)` over one period.
pub fn lambda_infinity(nl: &dyn Nonlinearity, dim: usize) -> f64 {
    (0..nl.period() as i64)
        .map(|n| nl.s_infinity(n, dim).symmetric_eigenvalues().min())
        .fold(f64::INFINITY, f64::min)
}

/// Hessian of `R(n, ·)` at `z`: the closed form when provided, otherwise
/// central differences of the gradient with step `1e-6·(1 + |z|)`.
pub fn hessian_or_fd(nl: &dyn Nonlinearity, n: i64, z: &[f64]) -> DMatrix<f64> {
    if let Some(h) = nl.hessian(n, z) {
        return h;
    }
    let dim = z.len();
    let h = 1e-6 * (1.0 + dot(z, z).sqrt());
    let mut out = DMatrix::zeros(dim, dim);
    let mut zp = z.to_vec();
    let mut gp = vec![0.0; dim];
    let mut gm = vec![0.0; dim];
    for c in 0..dim {
        zp[c] = z[c] + h;
        nl.gradient(n, &zp, &mut gp);
        zp[c] = z[c] - h;
        nl.gradient(n, &zp, &mut gm);
        zp[c] = z[c];
        for r in 0..dim {
            out[(r, c)] = (gp[r] - gm[r]) / (2.0 * h);
        }
    }
    (&out + out.transpose()) * 0.5
}

/// Shape of a radial family `R(z) = F(|z|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialKind {
    /// `(ν/2)|z|⁴/(1+|z|²)`.
    Rational,
    /// `(ν/2)(|z|² - ln(1+|z|²))`.
    LogSaturating,
    /// `(ν/2)|z|²`; violates (R2), used to probe the checker.
    Quadratic,
}

/// `R(n, z) = F(|z|²)`, independent of `n`, with `∇R = φ(r)z` and
/// `S∞ = νI`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialFamily {
    kind: RadialKind,
    nu: f64,
}

/// `R = (ν/2)|z|⁴/(1+|z|²)`, `S∞ = νI`.
pub fn family_radial_rational(nu: f64) -> Result<RadialFamily> {
    RadialFamily::new(RadialKind::Rational, nu)
}

/// `R = (ν/2)(|z|² - ln(1+|z|²))`, `S∞ = νI`.
pub fn family_log_saturating(nu: f64) -> Result<RadialFamily> {
    RadialFamily::new(RadialKind::LogSaturating, nu)
}

/// `R = (c/2)|z|²`. `c = 0` gives the zero nonlinearity.
pub fn family_quadratic(c: f64) -> Result<RadialFamily> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "quadratic coefficient must be >= 0, got {c}"
        )));
    }
    Ok(RadialFamily {
        kind: RadialKind::Quadratic,
        nu: c,
    })
}

impl RadialFamily {
    pub fn new(kind: RadialKind, nu: f64) -> Result<Self> {
        if kind == RadialKind::Quadratic {
            return family_quadratic(nu);
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!(
                "family parameter nu must be > 0, got {nu}"
            )));
        }
        Ok(RadialFamily { kind, nu })
    }

    pub fn kind(&self) -> RadialKind {
        self.kind
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn profile(&self, r: f64) -> f64 {
        let nu = self.nu;
        match self.kind {
            RadialKind::Rational => 0.5 * nu * r * r / (1.0 + r),
            RadialKind::LogSaturating => 0.5 * nu * (r - r.ln_1p()),
            RadialKind::Quadratic => 0.5 * nu * r,
        }
    }

    /// `φ(r)` with `∇R = φ(|z|²) z`.
    fn phi(&self, r: f64) -> f64 {
        let nu = self.nu;
        match self.kind {
            RadialKind::Rational => nu * r * (r + 2.0) / ((1.0 + r) * (1.0 + r)),
            RadialKind::LogSaturating => nu * r / (1.0 + r),
            RadialKind::Quadratic => nu,
        }
    }

    fn phi_prime(&self, r: f64) -> f64 {
        let nu = self.nu;
        match self.kind {
            RadialKind::Rational => 2.0 * nu / (1.0 + r).powi(3),
            RadialKind::LogSaturating => nu / ((1.0 + r) * (1.0 + r)),
            RadialKind::Quadratic => 0.0,
        }
    }

    /// Closed form of `R̃` as a function of `r = |z|²`.
    pub fn tilde_r_closed_form(&self, r: f64) -> f64 {
        let nu = self.nu;
        match self.kind {
            RadialKind::Rational => 0.5 * nu * r * r / ((1.0 + r) * (1.0 + r)),
            RadialKind::LogSaturating => 0.5 * nu * (r.ln_1p() - r / (1.0 + r)),
            RadialKind::Quadratic => 0.0,
        }
    }
}

impl Nonlinearity for RadialFamily {
    fn value(&self, _n: i64, z: &[f64]) -> f64 {
        self.profile(dot(z, z))
    }

    fn gradient(&self, _n: i64, z: &[f64], out: &mut [f64]) {
        let phi = self.phi(dot(z, z));
        for (o, zi) in out.iter_mut().zip(z) {
            *o = phi * zi;
        }
    }

    fn hessian(&self, _n: i64, z: &[f64]) -> Option<DMatrix<f64>> {
        let r = dot(z, z);
        let phi = self.phi(r);
        let dphi = self.phi_prime(r);
        let dim = z.len();
        Some(DMatrix::from_fn(dim, dim, |i, j| {
            let diag = if i == j { phi } else { 0.0 };
            diag + 2.0 * dphi * z[i] * z[j]
        }))
    }

    fn tilde_r(&self, _n: i64, z: &[f64]) -> f64 {
        self.tilde_r_closed_form(dot(z, z))
    }

    fn s_infinity(&self, _n: i64, dim: usize) -> DMatrix<f64> {
        DMatrix::identity(dim, dim) * self.nu
    }

    fn describe(&self) -> String {
        let name = match self.kind {
            RadialKind::Rational => "radial_rational",
            RadialKind::LogSaturating => "log_saturating",
            RadialKind::Quadratic => "quadratic",
        };
        format!("{name}(nu={})", self.nu)
    }
}

type ValueFn = dyn Fn(i64, &[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(i64, &[f64], &mut [f64]) + Send + Sync;
type HessianFn = dyn Fn(i64, &[f64]) -> DMatrix<f64> + Send + Sync;

/// A nonlinearity supplied as closures.
#[derive(Clone)]
pub struct FnNonlinearity {
    period: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
    hessian: Option<Arc<HessianFn>>,
    s_infinity: Vec<DMatrix<f64>>,
    label: String,
}

impl FnNonlinearity {
    /// `s_infinity` holds `S∞(0..T)`; its length is the period.
    pub fn new(
        label: impl Into<String>,
        s_infinity: Vec<DMatrix<f64>>,
        value: impl Fn(i64, &[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(i64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if s_infinity.is_empty() {
            return Err(Error::Domain("S_infinity needs at least one matrix".into()));
        }
        Ok(FnNonlinearity {
            period: s_infinity.len(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: None,
            s_infinity,
            label: label.into(),
        })
    }

    pub fn with_hessian(
        mut self,
        hessian: impl Fn(i64, &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }
}

impl fmt::Debug for FnNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnNonlinearity")
            .field("label", &self.label)
            .field("period", &self.period)
            .field("has_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl Nonlinearity for FnNonlinearity {
    fn period(&self) -> usize {
        self.period
    }

    fn value(&self, n: i64, z: &[f64]) -> f64 {
        (self.value)(n, z)
    }

    fn gradient(&self, n: i64, z: &[f64], out: &mut [f64]) {
        (self.gradient)(n, z, out)
    }

    fn hessian(&self, n: i64, z: &[f64]) -> Option<DMatrix<f64>> {
        self.hessian.as_ref().map(|h| h(n, z))
    }

    fn s_infinity(&self, n: i64, dim: usize) -> DMatrix<f64> {
        let m = &self.s_infinity[n.rem_euclid(self.period as i64) as usize];
        assert_eq!(m.nrows(), dim, "S_infinity dimension mismatch");
        m.clone()
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

// ---------------------------------------------------------------------------
// hypothesis checking

/// Sampling plan for [`check_hypotheses`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub radius_min: f64,
    pub radius_max: f64,
    pub radii: usize,
    pub directions: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            radius_min: 1e-8,
            radius_max: 1e8,
            radii: 64,
            directions: 32,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn with_seed(seed: u64) -> Self {
        SamplingPlan {
            seed,
            ..Self::default()
        }
    }

    fn radius_grid(&self) -> Vec<f64> {
        log_grid(self.radius_min, self.radius_max, self.radii)
    }
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Outcome of one hypothesis or sub-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

/// A concrete sample `(n, z)` and the quantity measured there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub n: i64,
    pub z: Vec<f64>,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub check: String,
    pub status: Status,
    pub message: String,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisEntry {
    pub hypothesis: String,
    pub status: Status,
    pub findings: Vec<Finding>,
}

impl HypothesisEntry {
    fn new(hypothesis: &str, findings: Vec<Finding>) -> Self {
        let status = findings
            .iter()
            .map(|f| f.status)
            .max()
            .unwrap_or(Status::Pass);
        HypothesisEntry {
            hypothesis: hypothesis.to_string(),
            status,
            findings,
        }
    }
}

/// Fitted constant of `|∇R(n,z)| ≤ ε|z| + C_ε|z|^{p-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub epsilon: f64,
    pub exponent: f64,
    pub constant: f64,
    /// Largest `|∇R| - ε|z| - C_ε|z|^{p-1}` over an interleaved validation grid.
    pub max_excess: f64,
    pub holds: bool,
}

/// Result of [`check_hypotheses`].
///
/// Sampling can falsify a hypothesis but never prove it: a `pass` entry means
/// no violation was found on the recorded plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub nonlinearity: String,
    pub plan: SamplingPlan,
    pub lambda0: f64,
    pub big_lambda0: f64,
    pub lambda_infinity: f64,
    pub entries: Vec<HypothesisEntry>,
    pub delta0_estimate: Option<f64>,
    pub growth_envelope: GrowthEnvelope,
}

impl HypothesisReport {
    pub fn entry(&self, hypothesis: &str) -> Option<&HypothesisEntry> {
        self.entries.iter().find(|e| e.hypothesis == hypothesis)
    }

    pub fn status(&self, hypothesis: &str) -> Option<Status> {
        self.entry(hypothesis).map(|e| e.status)
    }

    pub fn has_failure(&self) -> bool {
        self.entries.iter().any(|e| e.status == Status::Fail)
    }

    /// Names of the hypotheses with a failing check.
    pub fn failed(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.status == Status::Fail)
            .map(|e| e.hypothesis.as_str())
            .collect()
    }

    pub fn is_clean(&self) -> bool {
        self.entries.iter().all(|e| e.status == Status::Pass)
    }
}

/// `|∇R|/|z|` at or below this counts as vanished (R2) and
/// `|∇R - S∞z|/|z|` as vanished (R3).
pub const DECAY_TOL: f64 = 1e-6;
/// A ratio that shrinks by this factor across the probed radii is treated as
/// decaying but unresolved.
const DECAY_TREND: f64 = 1e-2;
const GROWTH_EPSILON: f64 = 0.1;
const GROWTH_EXPONENT: f64 = 4.0;
const DELTA_GRID: usize = 50;

struct Sample {
    n: i64,
    radius: f64,
    z: Vec<f64>,
    value: f64,
    grad_norm: f64,
    tilde_r: f64,
    asym_residual: f64,
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

fn sample_points(
    nl: &dyn Nonlinearity,
    dim: usize,
    period: usize,
    radii: &[f64],
    directions: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Sample> {
    let mut out = Vec::with_capacity(period * radii.len() * directions);
    let s_inf: Vec<DMatrix<f64>> = (0..period as i64).map(|n| nl.s_infinity(n, dim)).collect();
    let mut g = vec![0.0; dim];
    for &radius in radii {
        for _ in 0..directions {
            let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dot(&dir, &dir).sqrt();
            dir.iter_mut().for_each(|v| *v *= radius / norm);
            for n in 0..period as i64 {
                let z = dir.clone();
                nl.gradient(n, &z, &mut g);
                let value = nl.value(n, &z);
                let s = &s_inf[n as usize];
                let asym: f64 = (0..dim)
                    .map(|r| {
                        let sz: f64 = (0..dim).map(|c| s[(r, c)] * z[c]).sum();
                        (g[r] - sz).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt();
                out.push(Sample {
                    n,
                    radius,
                    value,
                    grad_norm: dot(&g, &g).sqrt(),
                    tilde_r: nl.tilde_r(n, &z),
                    asym_residual: asym,
                    z,
                });
            }
        }
    }
    out
}

fn witness(s: &Sample, quantity: &str, value: f64) -> Witness {
    Witness {
        n: s.n,
        z: s.z.clone(),
        quantity: quantity.to_string(),
        value,
    }
}

/// Classifies `ratio(ρ) → 0` as `ρ` approaches the end of `radii` given per
/// sample ratios; returns the status and the sample with the largest ratio
/// at the extreme radius.
fn decay_finding(
    check: &str,
    quantity: &str,
    samples: &[&Sample],
    ratio: impl Fn(&Sample) -> f64,
    toward_zero: bool,
) -> Finding {
    if samples.is_empty() {
        return Finding {
            check: check.into(),
            status: Status::Inconclusive,
            message: "no samples in range".into(),
            witness: None,
        };
    }
    let extreme = if toward_zero {
        samples
            .iter()
            .map(|s| s.radius)
            .fold(f64::INFINITY, f64::min)
    } else {
        samples.iter().map(|s| s.radius).fold(0.0, f64::max)
    };
    let farthest = if toward_zero {
        samples.iter().map(|s| s.radius).fold(0.0, f64::max)
    } else {
        samples
            .iter()
            .map(|s| s.radius)
            .fold(f64::INFINITY, f64::min)
    };
    let worst_at = |r: f64| {
        samples
            .iter()
            .filter(|s| s.radius == r)
            .max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
            .copied()
            .expect("radius present")
    };
    let end = worst_at(extreme);
    let start = worst_at(farthest);
    let end_ratio = ratio(end);
    let start_ratio = ratio(start);
    let (status, message) = if end_ratio <= DECAY_TOL {
        (
            Status::Pass,
            format!("{quantity} = {end_ratio:.3e} at |z| = {extreme:.1e} (<= {DECAY_TOL:e})"),
        )
    } else if end_ratio <= DECAY_TREND * start_ratio {
        (
            Status::Inconclusive,
            format!(
                "{quantity} decreases from {start_ratio:.3e} to {end_ratio:.3e} but has not reached {DECAY_TOL:e}"
            ),
        )
    } else {
        (
            Status::Fail,
            format!("{quantity} = {end_ratio:.3e} at |z| = {extreme:.1e} does not vanish"),
        )
    };
    Finding {
        check: check.into(),
        status,
        message,
        witness: (status != Status::Pass).then(|| witness(end, quantity, end_ratio)),
    }
}

/// Checks (R0)–(R4) for `nl` with coefficients `coeffs` on the sampling plan.
pub fn check_hypotheses(
    nl: &dyn Nonlinearity,
    coeffs: &PeriodicCoefficients,
    plan: &SamplingPlan,
) -> HypothesisReport {
    let dim = 2 * coeffs.block_dim();
    let period = lcm(coeffs.period(), nl.period());
    let lambda0 = coeffs.lambda0();
    let big_lambda0 = coeffs.big_lambda0();
    let lambda_inf = lambda_infinity(nl, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let radii = plan.radius_grid();
    let samples = sample_points(nl, dim, period, &radii, plan.directions, &mut rng);

    let mut entries = Vec::new();

    // (R0)
    let r0 = match coeffs.require_r0() {
        Ok((lo, hi)) => Finding {
            check: "J0*S(n) symmetric positive definite".into(),
            status: Status::Pass,
            message: format!("lambda0 = {lo}, Lambda0 = {hi}"),
            witness: None,
        },
        Err(Error::HypothesisViolation { node, detail, .. }) => {
            let s = coeffs.at(node);
            let j0s = &crate::lattice::StructureMatrices::new(coeffs.block_dim()).j0 * s;
            let sym = (&j0s + j0s.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            let imin = eig.eigenvalues.imin();
            Finding {
                check: "J0*S(n) symmetric positive definite".into(),
                status: Status::Fail,
                message: format!("(R0) violated at n={node}: {detail}"),
                witness: Some(Witness {
                    n: node,
                    z: eig.eigenvectors.column(imin).iter().copied().collect(),
                    quantity: "min eigenvalue of J0*S(n)".into(),
                    value: eig.eigenvalues[imin],
                }),
            }
        }
        Err(e) => Finding {
            check: "J0*S(n) symmetric positive definite".into(),
            status: Status::Fail,
            message: e.to_string(),
            witness: None,
        },
    };
    entries.push(HypothesisEntry::new("R0", vec![r0]));

    // (R1)
    let mut worst_period: Option<(&Sample, f64)> = None;
    let mut g_shift = vec![0.0; dim];
    let mut g_base = vec![0.0; dim];
    for s in &samples {
        let shifted = nl.value(s.n + period as i64, &s.z);
        nl.gradient(s.n + period as i64, &s.z, &mut g_shift);
        nl.gradient(s.n, &s.z, &mut g_base);
        let gdiff = g_shift
            .iter()
            .zip(&g_base)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = 1.0 + s.value.abs() + s.grad_norm;
        let defect = ((shifted - s.value).abs() + gdiff) / scale;
        if worst_period.is_none_or(|(_, d)| defect > d) {
            worst_period = Some((s, defect));
        }
    }
    let r1 = match worst_period {
        Some((s, d)) if d > 1e-12 => Finding {
            check: "R(n+T, z) = R(n, z)".into(),
            status: Status::Fail,
            message: format!("relative periodicity defect {d:.3e}"),
            witness: Some(witness(s, "periodicity defect", d)),
        },
        Some((_, d)) => Finding {
            check: "R(n+T, z) = R(n, z)".into(),
            status: Status::Pass,
            message: format!("max relative periodicity defect {d:.3e}"),
            witness: None,
        },
        None => Finding {
            check: "R(n+T, z) = R(n, z)".into(),
            status: Status::Inconclusive,
            message: "no samples".into(),
            witness: None,
        },
    };
    entries.push(HypothesisEntry::new("R1", vec![r1]));

    // (R2)
    let mut r2 = Vec::new();
    let negative = samples
        .iter()
        .filter(|s| s.value < -1e-12 * (1.0 + s.radius * s.radius))
        .min_by(|a, b| a.value.total_cmp(&b.value));
    r2.push(match negative {
        Some(s) => Finding {
            check: "R(n, z) >= 0".into(),
            status: Status::Fail,
            message: format!("R = {:.3e} < 0", s.value),
            witness: Some(witness(s, "R(n,z)", s.value)),
        },
        None => Finding {
            check: "R(n, z) >= 0".into(),
            status: Status::Pass,
            message: "no negative value sampled".into(),
            witness: None,
        },
    });
    let origin = vec![0.0; dim];
    let mut g0 = vec![0.0; dim];
    let origin_defect = (0..period as i64)
        .map(|n| {
            nl.gradient(n, &origin, &mut g0);
            (n, nl.value(n, &origin).abs() + dot(&g0, &g0).sqrt())
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("period >= 1");
    r2.push(if origin_defect.1 > 0.0 {
        Finding {
            check: "R(n, 0) = 0 and grad R(n, 0) = 0".into(),
            status: Status::Fail,
            message: format!("|R(n,0)| + |grad R(n,0)| = {:.3e}", origin_defect.1),
            witness: Some(Witness {
                n: origin_defect.0,
                z: origin.clone(),
                quantity: "|R(n,0)| + |grad R(n,0)|".into(),
                value: origin_defect.1,
            }),
        }
    } else {
        Finding {
            check: "R(n, 0) = 0 and grad R(n, 0) = 0".into(),
            status: Status::Pass,
            message: "exact at the origin".into(),
            witness: None,
        }
    });
    let small: Vec<&Sample> = samples.iter().filter(|s| s.radius < 1.0).collect();
    r2.push(decay_finding(
        "grad R(n, z) = o(|z|) as |z| -> 0",
        "|grad R|/|z|",
        &small,
        |s| s.grad_norm / s.radius,
        true,
    ));
    entries.push(HypothesisEntry::new("R2", r2));

    // (R3)
    let mut r3 = Vec::new();
    let large: Vec<&Sample> = samples.iter().filter(|s| s.radius > 1.0).collect();
    r3.push(decay_finding(
        "grad R(n, z) - S_inf(n) z = o(|z|) as |z| -> inf",
        "|grad R - S_inf z|/|z|",
        &large,
        |s| s.asym_residual / s.radius,
        false,
    ));
    let bound = 2.0 + big_lambda0;
    r3.push(if lambda_inf > bound {
        Finding {
            check: "lambda_inf > 2 + Lambda0".into(),
            status: Status::Pass,
            message: format!("lambda_inf = {lambda_inf} > 2 + Lambda0 = {bound}"),
            witness: None,
        }
    } else {
        let (n, ev, vec) = (0..nl.period() as i64)
            .map(|n| {
                let e = nl.s_infinity(n, dim).symmetric_eigen();
                let i = e.eigenvalues.imin();
                (n, e.eigenvalues[i], e.eigenvectors.column(i).iter().copied().collect::<Vec<_>>())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("period >= 1");
        Finding {
            check: "lambda_inf > 2 + Lambda0".into(),
            status: Status::Fail,
            message: format!(
                "lambda_inf = {lambda_inf} does not satisfy the required bound lambda_inf > 2 + Lambda0 = {bound}"
            ),
            witness: Some(Witness {
                n,
                z: vec,
                quantity: "min eigenvalue of S_inf(n)".into(),
                value: ev,
            }),
        }
    });
    entries.push(HypothesisEntry::new("R3", r3));

    // (R4)
    let mut r4 = Vec::new();
    let neg_tilde = samples
        .iter()
        .filter(|s| s.tilde_r < -1e-12 * (1.0 + s.radius * s.radius))
        .min_by(|a, b| a.tilde_r.total_cmp(&b.tilde_r));
    r4.push(match neg_tilde {
        Some(s) => Finding {
            check: "tilde R(n, z) >= 0".into(),
            status: Status::Fail,
            message: format!("tilde R = {:.3e} < 0", s.tilde_r),
            witness: Some(witness(s, "tilde R(n,z)", s.tilde_r)),
        },
        None => Finding {
            check: "tilde R(n, z) >= 0".into(),
            status: Status::Pass,
            message: "no negative value sampled".into(),
            witness: None,
        },
    });
    let delta0 = if lambda0 > 0.0 {
        log_grid(1e-4 * lambda0, 0.999 * lambda0, DELTA_GRID)
            .into_iter()
            .rev()
            .find(|&delta| {
                samples
                    .iter()
                    .all(|s| s.grad_norm < (lambda0 - delta) * s.radius || s.tilde_r >= delta)
            })
    } else {
        None
    };
    r4.push(match delta0 {
        Some(d) => Finding {
            check: "uniform delta0 in (0, lambda0)".into(),
            status: Status::Pass,
            message: format!(
                "|grad R| >= (lambda0 - delta0)|z| implies tilde R >= delta0 for delta0 = {d:.6e}"
            ),
            witness: None,
        },
        None => Finding {
            check: "uniform delta0 in (0, lambda0)".into(),
            status: Status::Inconclusive,
            message: "no delta0 on the scan grid satisfies the implication".into(),
            witness: None,
        },
    });
    entries.push(HypothesisEntry::new("R4", r4));

    let growth_envelope = fit_growth(nl, dim, period, plan, &samples, &mut rng);

    HypothesisReport {
        nonlinearity: nl.describe(),
        plan: plan.clone(),
        lambda0,
        big_lambda0,
        lambda_infinity: lambda_inf,
        entries,
        delta0_estimate: delta0,
        growth_envelope,
    }
}

fn fit_growth(
    nl: &dyn Nonlinearity,
    dim: usize,
    period: usize,
    plan: &SamplingPlan,
    samples: &[Sample],
    rng: &mut ChaCha8Rng,
) -> GrowthEnvelope {
    let eps = GROWTH_EPSILON;
    let p = GROWTH_EXPONENT;
    let fitted = samples
        .iter()
        .map(|s| (s.grad_norm - eps * s.radius).max(0.0) / s.radius.powf(p - 1.0))
        .fold(0.0, f64::max);
    // 5% headroom; validated on the geometric midpoints of the plan's radii
    let constant = 1.05 * fitted;
    let grid = plan.radius_grid();
    let mids: Vec<f64> = grid.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let check = sample_points(nl, dim, period, &mids, plan.directions.min(8), rng);
    let max_excess = samples
        .iter()
        .chain(check.iter())
        .map(|s| s.grad_norm - eps * s.radius - constant * s.radius.powf(p - 1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    GrowthEnvelope {
        epsilon: eps,
        exponent: p,
        constant,
        max_excess,
        holds: max_excess <= 0.0,
    }
}
