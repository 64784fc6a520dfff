//! Damped Newton iteration for nontrivial critical points of `Φ`, with
//! linking-inspired initial guesses, multi-start and parameter continuation.
//!
//! Each Newton step solves `J(x)δ = -F(x)` where `F = grad Φ` and
//! `J = (A+S) - blockdiag(Hess R)`, then backtracks on `‖F‖²`. The zero
//! sequence is always a critical point; converged points with
//! `‖x‖_∞ ≤ trivial_tol` are rejected rather than deflated.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::functional::{
    grad_phi, gradient_jacobian, gradient_jacobian_band, phi, FunctionalContext,
};
use crate::lattice::BlockVector;
use crate::spectral::eigendecompose;
use crate::verify::{verify_orbit, VerificationReport, VerifyTolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub min_step: f64,
}

impl Default for Damping {
    fn default() -> Self {
        Damping {
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            min_step: 1e-10,
        }
    }
}

/// How an initial guess is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    /// Eigenvector of the smallest positive eigenvalue of the truncated
    /// `A + S`, scaled to the given `l²` norm.
    LinkingDirection,
    /// `amplitude · exp(-n²/w²) · u` with a fixed unit block `u`;
    /// `w` defaults to `M/8`.
    GaussianBump { width: Option<f64> },
    /// I.i.d. standard normal blocks scaled to the given `l²` norm.
    Random,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::LinkingDirection => write!(f, "linking_direction"),
            Strategy::GaussianBump { width: None } => write!(f, "gaussian_bump"),
            Strategy::GaussianBump { width: Some(w) } => write!(f, "gaussian_bump(w={w})"),
            Strategy::Random => write!(f, "random"),
        }
    }
}

/// A start for [`newton_solve`] / [`multi_start`].
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Guess {
        strategy: Strategy,
        amplitude: f64,
    },
    /// An explicit initial vector, e.g. a previous orbit.
    Seed(BlockVector),
}

impl Start {
    pub fn guess(strategy: Strategy, amplitude: f64) -> Self {
        Start::Guess {
            strategy,
            amplitude,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Start::Guess {
                strategy,
                amplitude,
            } => format!("{strategy}@{amplitude}"),
            Start::Seed(_) => "seed".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Tolerance on `‖grad Φ‖_∞`.
    pub grad_tol: f64,
    /// Converged points with `‖x‖_∞` at or below this count as trivial.
    pub trivial_tol: f64,
    pub damping: Damping,
    pub starts: Vec<Start>,
    pub seed: u64,
    /// Initial Tikhonov shift for singular Newton matrices (doubled on repeat).
    pub regularization: f64,
    /// Consecutive singular Newton matrices before switching to descent on `½‖F‖²`.
    pub fallback_after: usize,
    /// Run the doubled-window re-solve as part of verification.
    pub window_check: bool,
    pub verify: VerifyTolerances,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 200,
            grad_tol: 1e-10,
            trivial_tol: 1e-6,
            damping: Damping::default(),
            starts: Vec::new(),
            seed: 0,
            regularization: 1e-8,
            fallback_after: 3,
            window_check: true,
            verify: VerifyTolerances::default(),
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Configuration("max_iter must be >= 1".into()));
        }
        for (name, v) in [
            ("grad_tol", self.grad_tol),
            ("trivial_tol", self.trivial_tol),
            ("regularization", self.regularization),
            ("damping.min_step", self.damping.min_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Configuration(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.damping.shrink > 0.0 && self.damping.shrink < 1.0) {
            return Err(Error::Configuration(
                "damping.shrink must lie in (0, 1)".into(),
            ));
        }
        if !(self.damping.sufficient_decrease > 0.0 && self.damping.sufficient_decrease < 0.5) {
            return Err(Error::Configuration(
                "damping.sufficient_decrease must lie in (0, 0.5)".into(),
            ));
        }
        Ok(())
    }

    /// A mix of linking-direction, bump and random starts over a range of
    /// amplitudes.
    pub fn default_starts() -> Vec<Start> {
        let mut starts = Vec::new();
        for a in [0.5, 1.0, 2.0, 4.0, 8.0] {
            starts.push(Start::guess(Strategy::LinkingDirection, a));
        }
        for a in [0.5, 1.0, 2.0, 4.0, 8.0] {
            starts.push(Start::guess(Strategy::GaussianBump { width: None }, a));
        }
        for a in [0.3, 0.5, 0.7] {
            starts.push(Start::guess(Strategy::GaussianBump { width: Some(1.0) }, a));
        }
        for a in [1.0, 3.0, 6.0] {
            starts.push(Start::guess(Strategy::Random, a));
        }
        starts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Gradient below tolerance, nontrivial, verified.
    Converged,
    /// Converged to (numerically) the zero solution.
    RejectedTrivial,
    /// Gradient below tolerance but an independent check failed.
    VerificationFailed,
    NotConverged,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub orbit: BlockVector,
    pub phi_value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub start_used: String,
    pub status: SolveStatus,
    pub regularizations: usize,
    pub fallback_steps: usize,
    /// `‖F‖_{l²}` before every iteration and at the end.
    pub residual_history: Vec<f64>,
    pub verification: Option<VerificationReport>,
}

impl SolveResult {
    pub fn is_success(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Builds the initial vector for a strategy.
pub fn initial_guess(
    strategy: Strategy,
    ctx: &FunctionalContext,
    amplitude: f64,
    seed: u64,
) -> Result<BlockVector> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::Configuration(format!(
            "amplitude must be nonnegative, got {amplitude}"
        )));
    }
    let window = ctx.window();
    let n = ctx.block_dim();
    match strategy {
        Strategy::LinkingDirection => {
            let owned;
            let dec = match ctx.decomposition() {
                Some(d) => d,
                None => {
                    owned = eigendecompose(ctx.op())?;
                    &owned
                }
            };
            if dec.split_index() >= dec.eigenvalues().len() {
                return Err(Error::Numerical(
                    "operator has no positive eigenvalue".into(),
                ));
            }
            let mut e = dec.eigenvector(dec.split_index());
            // fix the sign by the largest entry
            let big = e
                .as_slice()
                .iter()
                .copied()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(1.0);
            let norm = e.l2_norm();
            let scale = if big < 0.0 { -amplitude } else { amplitude } / norm;
            e = e.scaled(scale);
            Ok(e)
        }
        Strategy::GaussianBump { width } => {
            let w = width
                .unwrap_or(window.half_width() as f64 / 8.0)
                .max(f64::MIN_POSITIVE);
            let u = 1.0 / ((2 * n) as f64).sqrt();
            Ok(BlockVector::from_fn(window, n, |node, b| {
                let g = amplitude * (-(node as f64).powi(2) / (w * w)).exp();
                b.iter_mut().for_each(|v| *v = g * u);
            }))
        }
        Strategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = BlockVector::from_fn(window, n, |_, b| {
                b.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            });
            let norm = x.l2_norm();
            if norm > 0.0 {
                x = x.scaled(amplitude / norm);
            }
            Ok(x)
        }
    }
}

fn start_vector(ctx: &FunctionalContext, start: &Start, seed: u64) -> Result<BlockVector> {
    match start {
        Start::Guess {
            strategy,
            amplitude,
        } => initial_guess(*strategy, ctx, *amplitude, seed),
        Start::Seed(x) => {
            if x.window() != ctx.window() || x.block_dim() != ctx.block_dim() {
                return Err(Error::Dimension(
                    "seed vector does not live on the context's window".into(),
                ));
            }
            Ok(x.clone())
        }
    }
}

fn sq_norm(v: &BlockVector) -> f64 {
    let s = v.as_slice();
    s.iter().map(|a| a * a).sum()
}

enum Jacobian {
    Dense(DMatrix<f64>),
    Band(BandMatrix),
}

impl Jacobian {
    fn at(ctx: &FunctionalContext, x: &BlockVector) -> Result<Self> {
        Ok(match gradient_jacobian_band(ctx, x)? {
            Some(b) => Jacobian::Band(b),
            None => Jacobian::Dense(gradient_jacobian(ctx, x)?),
        })
    }

    fn solve_shifted(&self, rhs: &[f64], shift: f64) -> Option<Vec<f64>> {
        match self {
            Jacobian::Band(b) => b.solve_shifted(rhs, shift),
            Jacobian::Dense(j) => {
                let m = if shift > 0.0 {
                    j + DMatrix::identity(j.nrows(), j.ncols()) * shift
                } else {
                    j.clone()
                };
                let sol = m.lu().solve(&DVector::from_column_slice(rhs))?;
                sol.iter()
                    .all(|v| v.is_finite())
                    .then(|| sol.as_slice().to_vec())
            }
        }
    }

    fn matvec(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Jacobian::Band(b) => b.matvec(v),
            Jacobian::Dense(j) => (j * DVector::from_column_slice(v)).as_slice().to_vec(),
        }
    }
}

/// Damped Newton from one start.
///
/// Never fails for numerical reasons: non-convergence and trivial limits are
/// reported through [`SolveResult::status`]. Errors are reserved for
/// inconsistent inputs.
pub fn newton_solve(
    ctx: &FunctionalContext,
    start: &Start,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    newton_solve_seeded(ctx, start, opts, opts.seed)
}

fn newton_solve_seeded(
    ctx: &FunctionalContext,
    start: &Start,
    opts: &SolveOptions,
    seed: u64,
) -> Result<SolveResult> {
    opts.validate()?;
    let mut x = start_vector(ctx, start, seed)?;
    let mut f = grad_phi(ctx, &x)?;
    let mut f2 = sq_norm(&f);
    let mut history = vec![f2.sqrt()];
    let mut iterations = 0;
    let mut regularizations = 0;
    let mut fallback_steps = 0;
    let mut singular_streak = 0;
    let c = opts.damping.sufficient_decrease;

    while f.linf_norm() > opts.grad_tol && iterations < opts.max_iter {
        iterations += 1;
        let j = Jacobian::at(ctx, &x)?;
        let rhs: Vec<f64> = f.as_slice().iter().map(|v| -v).collect();

        let mut newton_dir = j.solve_shifted(&rhs, 0.0);
        if newton_dir.is_none() {
            let mut tau = opts.regularization;
            for _ in 0..30 {
                regularizations += 1;
                newton_dir = j.solve_shifted(&rhs, tau);
                if newton_dir.is_some() {
                    break;
                }
                tau *= 2.0;
            }
            singular_streak += 1;
        } else {
            singular_streak = 0;
        }

        let mut accepted = false;
        if singular_streak < opts.fallback_after {
            if let Some(d) = &newton_dir {
                let dir = BlockVector::from_vec(x.window(), x.block_dim(), d.clone())?;
                if let Some((xn, fn_, f2n)) =
                    backtrack(ctx, &x, &dir, f2, |alpha| 2.0 * c * alpha * f2, opts)?
                {
                    x = xn;
                    f = fn_;
                    f2 = f2n;
                    accepted = true;
                }
            }
        }
        if !accepted {
            // descent on ½‖F‖²: direction -JᵀF = -JF
            let g: Vec<f64> = j.matvec(f.as_slice()).iter().map(|v| -v).collect();
            let g2: f64 = g.iter().map(|v| v * v).sum();
            if g2 == 0.0 || !g2.is_finite() {
                break;
            }
            let dir = BlockVector::from_vec(x.window(), x.block_dim(), g)?;
            match backtrack(ctx, &x, &dir, f2, |alpha| 2.0 * c * alpha * g2, opts)? {
                Some((xn, fn_, f2n)) => {
                    x = xn;
                    f = fn_;
                    f2 = f2n;
                    fallback_steps += 1;
                }
                None => break,
            }
        }
        history.push(f2.sqrt());
    }

    let grad_inf = f.linf_norm();
    let phi_value = phi(ctx, &x)?;
    let mut result = SolveResult {
        phi_value,
        grad_inf_norm: grad_inf,
        iterations,
        start_used: start.tag(),
        status: SolveStatus::NotConverged,
        regularizations,
        fallback_steps,
        residual_history: history,
        verification: None,
        orbit: x,
    };
    if grad_inf > opts.grad_tol {
        return Ok(result);
    }
    if result.orbit.linf_norm() <= opts.trivial_tol {
        result.status = SolveStatus::RejectedTrivial;
        return Ok(result);
    }
    let report = verify_orbit(
        ctx,
        &result.orbit,
        &opts.verify,
        opts.window_check.then_some(opts),
    )?;
    result.status = if report.passed {
        SolveStatus::Converged
    } else {
        SolveStatus::VerificationFailed
    };
    result.verification = Some(report);
    Ok(result)
}

/// Backtracking along `dir`: accept the first `α = shrinkᵏ` with
/// `‖F(x+αd)‖² ≤ ‖F(x)‖² - decrease(α)`.
fn backtrack(
    ctx: &FunctionalContext,
    x: &BlockVector,
    dir: &BlockVector,
    f2: f64,
    decrease: impl Fn(f64) -> f64,
    opts: &SolveOptions,
) -> Result<Option<(BlockVector, BlockVector, f64)>> {
    let mut alpha = 1.0;
    while alpha >= opts.damping.min_step {
        let mut trial = x.clone();
        trial.axpy(alpha, dir)?;
        let ft = grad_phi(ctx, &trial)?;
        let f2t = sq_norm(&ft);
        if f2t.is_finite() && f2t <= f2 - decrease(alpha) {
            return Ok(Some((trial, ft, f2t)));
        }
        alpha *= opts.damping.shrink;
    }
    Ok(None)
}

/// Smallest `‖shift(a, kT) - b‖_∞` over whole-period shifts `k`.
pub fn aligned_distance(a: &BlockVector, b: &BlockVector, period: usize) -> Result<f64> {
    let len = a.window().len() as i64;
    let t = period as i64;
    let mut best = a.linf_distance(b)?;
    let mut k = t;
    while k < len {
        best = best
            .min(a.shift(k).linf_distance(b)?)
            .min(a.shift(-k).linf_distance(b)?);
        k += t;
    }
    Ok(best)
}

/// Orbits closer than this (after alignment) are duplicates.
pub const DEDUP_TOL: f64 = 1e-6;

/// Runs [`newton_solve`] from every start in `opts.starts`, keeps the
/// verified nontrivial orbits, removes duplicates up to period shifts, and
/// sorts by `Φ`.
pub fn multi_start(ctx: &FunctionalContext, opts: &SolveOptions) -> Result<Vec<SolveResult>> {
    distinct_orbits(ctx, run_starts(ctx, opts)?)
}

/// Every start's result, in start order.
pub fn run_starts(ctx: &FunctionalContext, opts: &SolveOptions) -> Result<Vec<SolveResult>> {
    opts.validate()?;
    if opts.starts.is_empty() {
        return Err(Error::Configuration("no starts given".into()));
    }
    opts.starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| newton_solve_seeded(ctx, s, opts, opts.seed.wrapping_add(i as u64)))
        .collect()
}

/// The verified results of `results`, without duplicates up to period
/// shifts, sorted by `Φ`.
pub fn distinct_orbits(
    ctx: &FunctionalContext,
    results: Vec<SolveResult>,
) -> Result<Vec<SolveResult>> {
    let period = ctx.op().coeffs().period();
    let mut kept: Vec<SolveResult> = Vec::new();
    for r in results.into_iter().filter(|r| r.is_success()) {
        let mut dup = false;
        for k in &kept {
            if aligned_distance(&r.orbit, &k.orbit, period)? < DEDUP_TOL {
                dup = true;
                break;
            }
        }
        if !dup {
            kept.push(r);
        }
    }
    kept.sort_by(|a, b| a.phi_value.total_cmp(&b.phi_value));
    Ok(kept)
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub entries: Vec<(f64, SolveResult)>,
    /// Last parameter value with a verified orbit.
    pub last_good: f64,
    pub stopped_early: bool,
}

/// Follows an orbit along a parameter walked geometrically from `from` to
/// `to` in `steps` steps, seeding each solve with the previous orbit.
///
/// The initial orbit is the lowest-`Φ` result of [`multi_start`] at `from`.
pub fn continuation(
    family: &(dyn Fn(f64) -> Result<FunctionalContext> + Sync),
    from: f64,
    to: f64,
    steps: usize,
    opts: &SolveOptions,
) -> Result<ContinuationResult> {
    if steps == 0 {
        return Err(Error::Configuration("continuation needs steps >= 1".into()));
    }
    if !(from > 0.0 && to > 0.0) {
        return Err(Error::Domain(
            "continuation endpoints must be positive".into(),
        ));
    }
    let ctx0 = family(from)?;
    let first = multi_start(&ctx0, opts)?
        .into_iter()
        .next()
        .ok_or_else(|| {
            Error::Numerical(format!("no verified orbit at the starting value {from}"))
        })?;
    let mut prev = first.orbit;
    let mut last_good = from;
    let mut entries = Vec::with_capacity(steps);
    let ratio = to / from;
    for k in 1..=steps {
        let value = from * ratio.powf(k as f64 / steps as f64);
        let ctx = family(value)?;
        let res = newton_solve(&ctx, &Start::Seed(prev.clone()), opts)?;
        let ok = res.is_success();
        if ok {
            prev = res.orbit.clone();
            last_good = value;
        }
        entries.push((value, res));
        if !ok {
            return Ok(ContinuationResult {
                entries,
                last_good,
                stopped_early: k < steps || !ok,
            });
        }
    }
    Ok(ContinuationResult {
        entries,
        last_good,
        stopped_early: false,
    })
}
