//! The functional `Φ(x) = ½((A+S)x, x) - Ψ(x)` with `Ψ(x) = Σₙ R(n, x(n))`,
//! its `l²` gradient, and the split form `½‖x⁺‖² - ½‖x⁻‖² - Ψ(x)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::lattice::BlockVector;
use crate::nonlinearity::{eval_tilde_r, hessian_or_fd, Nonlinearity};
use crate::operators::TruncatedOperator;
use crate::spectral::{e_norm, projectors, SpectralDecomposition};

/// Everything needed to evaluate `Φ` on one window.
#[derive(Debug, Clone)]
pub struct FunctionalContext {
    op: Arc<TruncatedOperator>,
    dec: Option<Arc<SpectralDecomposition>>,
    nl: Arc<dyn Nonlinearity>,
}

impl FunctionalContext {
    pub fn new(op: TruncatedOperator, nl: Arc<dyn Nonlinearity>) -> Result<Self> {
        let window = op.window();
        window.check_period(nl.period())?;
        Ok(FunctionalContext {
            op: Arc::new(op),
            dec: None,
            nl,
        })
    }

    /// Attaches a decomposition of the same operator, enabling [`phi_split`].
    pub fn with_decomposition(mut self, dec: SpectralDecomposition) -> Result<Self> {
        if dec.window() != self.op.window() || dec.block_dim() != self.op.block_dim() {
            return Err(Error::Configuration(
                "decomposition was computed on a different window".into(),
            ));
        }
        self.dec = Some(Arc::new(dec));
        Ok(self)
    }

    pub fn op(&self) -> &TruncatedOperator {
        &self.op
    }

    pub fn decomposition(&self) -> Option<&SpectralDecomposition> {
        self.dec.as_deref()
    }

    pub fn nonlinearity(&self) -> &dyn Nonlinearity {
        self.nl.as_ref()
    }

    pub fn nonlinearity_arc(&self) -> Arc<dyn Nonlinearity> {
        Arc::clone(&self.nl)
    }

    pub fn window(&self) -> crate::lattice::Window {
        self.op.window()
    }

    pub fn block_dim(&self) -> usize {
        self.op.block_dim()
    }

    /// The same problem on a window with twice the half width.
    pub fn doubled(&self) -> Result<Self> {
        let op = crate::operators::assemble(self.window().doubled(), self.op.coeffs())?;
        Self::new(op, Arc::clone(&self.nl))
    }

    /// The same problem on another window.
    pub fn on_window(&self, window: crate::lattice::Window) -> Result<Self> {
        let op = crate::operators::assemble(window, self.op.coeffs())?;
        Self::new(op, Arc::clone(&self.nl))
    }

    fn check(&self, x: &BlockVector) -> Result<()> {
        if x.window() != self.op.window() || x.block_dim() != self.op.block_dim() {
            return Err(Error::Dimension(
                "vector does not live on the context's window".into(),
            ));
        }
        Ok(())
    }
}

pub fn psi(ctx: &FunctionalContext, x: &BlockVector) -> Result<f64> {
    ctx.check(x)?;
    Ok(x.blocks().map(|(n, z)| ctx.nl.value(n, z)).sum())
}

pub fn phi(ctx: &FunctionalContext, x: &BlockVector) -> Result<f64> {
    Ok(0.5 * ctx.op.quadratic_form(x)? - psi(ctx, x)?)
}

/// `g(n) = ((A+S)x)(n) - ∇R(n, x(n))`, the `l²` representer of `Φ'(x)`.
pub fn grad_phi(ctx: &FunctionalContext, x: &BlockVector) -> Result<BlockVector> {
    let mut g = ctx.op.apply(x)?;
    let w = x.width();
    let mut buf = vec![0.0; w];
    for i in 0..x.window().len() {
        let n = x.window().node(i);
        ctx.nl.gradient(n, x.block(i), &mut buf);
        for (gi, bi) in g.block_mut(i).iter_mut().zip(&buf) {
            *gi -= bi;
        }
    }
    Ok(g)
}

/// `(½‖x⁺‖², ½‖x⁻‖², Ψ(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSplit {
    pub plus_part: f64,
    pub minus_part: f64,
    pub psi: f64,
}

impl PhiSplit {
    pub fn phi(&self) -> f64 {
        self.plus_part - self.minus_part - self.psi
    }
}

pub fn phi_split(ctx: &FunctionalContext, x: &BlockVector) -> Result<PhiSplit> {
    let dec = ctx
        .decomposition()
        .ok_or_else(|| Error::Configuration("split form needs a spectral decomposition".into()))?;
    let (minus, plus) = projectors(dec, x)?;
    let np = e_norm(dec, &plus)?;
    let nm = e_norm(dec, &minus)?;
    Ok(PhiSplit {
        plus_part: 0.5 * np * np,
        minus_part: 0.5 * nm * nm,
        psi: psi(ctx, x)?,
    })
}

/// `Σₙ R̃(n, x(n))`.
pub fn tilde_r_sum(ctx: &FunctionalContext, x: &BlockVector) -> Result<f64> {
    ctx.check(x)?;
    Ok(x.blocks()
        .map(|(n, z)| eval_tilde_r(ctx.nonlinearity(), n, z))
        .sum())
}

/// `[Φ(x) - ½Φ'(x)x] - Σₙ R̃(n, x(n))`; zero up to rounding for every `x`.
pub fn energy_defect(ctx: &FunctionalContext, x: &BlockVector) -> Result<f64> {
    let g = grad_phi(ctx, x)?;
    Ok(phi(ctx, x)? - 0.5 * g.l2_inner(x)? - tilde_r_sum(ctx, x)?)
}

/// Jacobian of the gradient map: `(A+S) - blockdiag(Hess R(n, x(n)))`.
pub fn gradient_jacobian(ctx: &FunctionalContext, x: &BlockVector) -> Result<DMatrix<f64>> {
    ctx.check(x)?;
    let mut m = ctx.op.to_dense();
    let w = x.width();
    for i in 0..x.window().len() {
        let h = hessian_or_fd(ctx.nonlinearity(), x.window().node(i), x.block(i));
        let mut view = m.view_mut((i * w, i * w), (w, w));
        view -= h;
    }
    Ok(m)
}

/// [`gradient_jacobian`] in band form, when the operator has one.
pub(crate) fn gradient_jacobian_band(
    ctx: &FunctionalContext,
    x: &BlockVector,
) -> Result<Option<BandMatrix>> {
    ctx.check(x)?;
    let Some(mut band) = ctx.op.to_band() else {
        return Ok(None);
    };
    let w = x.width();
    for i in 0..x.window().len() {
        let h = hessian_or_fd(ctx.nonlinearity(), x.window().node(i), x.block(i));
        for r in 0..w {
            for c in 0..w {
                band.add(i * w + r, i * w + c, -h[(r, c)]);
            }
        }
    }
    Ok(Some(band))
}
