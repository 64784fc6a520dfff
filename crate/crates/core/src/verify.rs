//! Independent checks of candidate orbits: the raw difference equations,
//! exponential decay, the energy identity and truncation stability.
//!
//! The difference-equation residual is computed directly from
//! `x₁(n+1) - x₁(n) = -H_{x₂}(n, x(n))`, `x₂(n) - x₂(n-1) = H_{x₁}(n, x(n))`
//! with `∇H(n, z) = S(n)z + ∇R(n, z)`, without going through the functional.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functional::{phi, tilde_r_sum, FunctionalContext};
use crate::lattice::{BlockVector, PeriodicCoefficients};
use crate::nonlinearity::Nonlinearity;
use crate::solver::{newton_solve, SolveOptions, SolveStatus, Start};

/// Per-node residual of the difference equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DhsResidual {
    /// `(r₁(n), r₂(n))` for every window node, node-major.
    pub per_node: Vec<Vec<f64>>,
    /// Euclidean norm of each node's residual.
    pub node_norms: Vec<f64>,
    pub inf_norm: f64,
    pub worst_node: i64,
}

pub fn residual_dhs(
    coeffs: &PeriodicCoefficients,
    nl: &dyn Nonlinearity,
    x: &BlockVector,
) -> DhsResidual {
    let n = x.block_dim();
    let w = 2 * n;
    let zero = vec![0.0; w];
    let window = x.window();
    let mut grad_r = vec![0.0; w];
    let mut per_node = Vec::with_capacity(window.len());
    let mut node_norms = Vec::with_capacity(window.len());
    let mut inf_norm = 0.0;
    let mut worst_node = window.first();
    for node in window.nodes() {
        let cur = x.at(node).expect("node inside window");
        let next = x.at(node + 1).unwrap_or(&zero);
        let prev = x.at(node - 1).unwrap_or(&zero);
        let s = coeffs.at(node);
        nl.gradient(node, cur, &mut grad_r);
        let grad_h: Vec<f64> = (0..w)
            .map(|r| (0..w).map(|c| s[(r, c)] * cur[c]).sum::<f64>() + grad_r[r])
            .collect();
        let mut r = vec![0.0; w];
        for k in 0..n {
            r[k] = next[k] - cur[k] + grad_h[n + k];
            r[n + k] = cur[n + k] - prev[n + k] - grad_h[k];
        }
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > inf_norm {
            inf_norm = norm;
            worst_node = node;
        }
        node_norms.push(norm);
        per_node.push(r);
    }
    DhsResidual {
        per_node,
        node_norms,
        inf_norm,
        worst_node,
    }
}

/// Blocks with norm below this are excluded from the decay fit.
pub const DECAY_FLOOR: f64 = 1e-14;
const MIN_TAIL_NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayStatus {
    Decaying,
    NotDecaying,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Geometric decay factor per node, `exp(slope)`.
    pub rate: f64,
    pub r_squared: f64,
    pub nodes_used: usize,
    /// Outermost `|n|` with `|x(n)| >= DECAY_FLOOR`.
    pub support_half_width: usize,
    pub status: DecayStatus,
}

/// Least-squares fit of `ln|x(n)|` against `|n|` over the tails.
///
/// The tails are the outer `tail_fraction · (2M' + 1)` nodes on each side of
/// the numerical support `[-M', M']` (the nodes whose blocks are at least
/// [`DECAY_FLOOR`]); for slowly decaying sequences `M'` is the window half
/// width.
pub fn decay_fit(x: &BlockVector, tail_fraction: f64) -> DecayFit {
    let tail_fraction = tail_fraction.clamp(f64::MIN_POSITIVE, 0.5);
    let norms: Vec<(i64, f64)> = x.window().nodes().zip(x.block_norms()).collect();
    let support = norms
        .iter()
        .filter(|(_, r)| *r >= DECAY_FLOOR)
        .map(|(n, _)| n.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let k = (tail_fraction * (2 * support + 1) as f64).ceil() as usize;
    let inner = support.saturating_sub(k);
    // (side, |n|, ln|x(n)|)
    let points: Vec<(usize, f64, f64)> = norms
        .iter()
        .filter(|(n, r)| {
            let a = n.unsigned_abs() as usize;
            a > inner && a <= support && *r >= DECAY_FLOOR
        })
        .map(|(n, r)| (usize::from(*n > 0), n.unsigned_abs() as f64, r.ln()))
        .collect();
    let inconclusive = |used: usize| DecayFit {
        rate: f64::NAN,
        r_squared: f64::NAN,
        nodes_used: used,
        support_half_width: support,
        status: DecayStatus::Inconclusive,
    };
    if points.len() < MIN_TAIL_NODES {
        return inconclusive(points.len());
    }
    // common slope, one intercept per side, so an orbit centred off n = 0
    // still fits a single line on each tail
    let mut means = [(0.0, 0.0, 0.0); 2];
    for &(side, x, y) in &points {
        means[side].0 += 1.0;
        means[side].1 += x;
        means[side].2 += y;
    }
    let centre = |side: usize| {
        let (c, sx, sy) = means[side];
        (sx / c, sy / c)
    };
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(side, x, y) in &points {
        let (mx, my) = centre(side);
        sxx += (x - mx).powi(2);
        sxy += (x - mx) * (y - my);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 {
        return inconclusive(points.len());
    }
    let slope = sxy / sxx;
    let ss_res: f64 = points
        .iter()
        .map(|&(side, x, y)| {
            let (mx, my) = centre(side);
            (y - my - slope * (x - mx)).powi(2)
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let rate = slope.exp();
    let status = if rate < 1.0 && r_squared > 0.99 {
        DecayStatus::Decaying
    } else {
        DecayStatus::NotDecaying
    };
    DecayFit {
        rate,
        r_squared,
        nodes_used: points.len(),
        support_half_width: support,
        status,
    }
}

/// `|Φ(x) - Σₙ R̃(n, x(n))|`, which equals `½|Φ'(x)x|` for every `x`.
pub fn energy_identity_check(ctx: &FunctionalContext, x: &BlockVector) -> Result<f64> {
    Ok((phi(ctx, x)? - tilde_r_sum(ctx, x)?).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStability {
    /// `l∞` difference on the original nodes, `None` if the re-solve failed.
    pub drift: Option<f64>,
    pub doubled_half_width: usize,
    pub resolve_status: SolveStatus,
    pub resolve_iterations: usize,
    pub resolve_grad_inf_norm: f64,
}

/// Re-solves on the doubled window from the zero-padded orbit and measures
/// how far the orbit moves on its original nodes.
pub fn window_stability(
    ctx: &FunctionalContext,
    x: &BlockVector,
    opts: &SolveOptions,
) -> Result<WindowStability> {
    let big = ctx.doubled()?;
    let seed = x.reembed(big.window())?;
    let mut inner = opts.clone();
    inner.window_check = false;
    let res = newton_solve(&big, &Start::Seed(seed), &inner)?;
    let drift = if res.status == SolveStatus::Converged {
        Some(res.orbit.restrict(x.window())?.linf_distance(x)?)
    } else {
        None
    };
    Ok(WindowStability {
        drift,
        doubled_half_width: big.window().half_width(),
        resolve_status: res.status,
        resolve_iterations: res.iterations,
        resolve_grad_inf_norm: res.grad_inf_norm,
    })
}

/// Tolerances applied by [`verify_orbit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyTolerances {
    pub dhs_residual: f64,
    pub energy_identity: f64,
    pub window_drift: f64,
    pub trivial: f64,
    pub tail_fraction: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            dhs_residual: 1e-9,
            energy_identity: 1e-8,
            window_drift: 1e-8,
            trivial: 1e-6,
            tail_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckFlags {
    pub nontrivial: bool,
    pub dhs_residual: bool,
    pub decay: bool,
    pub energy_identity: bool,
    pub window_stability: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub linf_norm: f64,
    pub phi: f64,
    pub dhs_residual_inf: f64,
    pub dhs_worst_node: i64,
    pub dhs_residual_nodes: Vec<f64>,
    pub decay: DecayFit,
    pub energy_identity_defect: f64,
    pub window_stability: Option<WindowStability>,
    pub tolerances: VerifyTolerances,
    pub checks: CheckFlags,
    pub passed: bool,
}

impl VerificationReport {
    pub fn window_stability_inf(&self) -> Option<f64> {
        self.window_stability.as_ref().and_then(|w| w.drift)
    }
}

/// Runs every check on `x`. With `window_check`, the doubled-window re-solve
/// is included (skipped for trivial inputs).
pub fn verify_orbit(
    ctx: &FunctionalContext,
    x: &BlockVector,
    tol: &VerifyTolerances,
    window_check: Option<&SolveOptions>,
) -> Result<VerificationReport> {
    let linf = x.linf_norm();
    let nontrivial = linf > tol.trivial;
    let res = residual_dhs(ctx.op().coeffs(), ctx.nonlinearity(), x);
    let decay = decay_fit(x, tol.tail_fraction);
    let energy = energy_identity_check(ctx, x)?;
    let phi_value = phi(ctx, x)?;
    let stability = match window_check {
        Some(opts) if nontrivial => Some(window_stability(ctx, x, opts)?),
        _ => None,
    };
    let checks = CheckFlags {
        nontrivial,
        dhs_residual: res.inf_norm < tol.dhs_residual,
        decay: decay.status == DecayStatus::Decaying,
        energy_identity: energy < tol.energy_identity,
        window_stability: stability
            .as_ref()
            .map(|s| s.drift.is_some_and(|d| d < tol.window_drift)),
    };
    let passed = checks.nontrivial
        && checks.dhs_residual
        && checks.decay
        && checks.energy_identity
        && checks.window_stability.unwrap_or(true);
    Ok(VerificationReport {
        linf_norm: linf,
        phi: phi_value,
        dhs_residual_inf: res.inf_norm,
        dhs_worst_node: res.worst_node,
        dhs_residual_nodes: res.node_norms,
        decay,
        energy_identity_defect: energy,
        window_stability: stability,
        tolerances: *tol,
        checks,
        passed,
    })
}
