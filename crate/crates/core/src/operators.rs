//! The linear operators `A` and `S`, their truncated assembly, and the Bloch
//! symbol of `A + S`.
//!
//! `A` acts by `(Ax)(n) = (x₂(n) - x₂(n-1), x₁(n) - x₁(n+1))` and `S` by
//! `(Sx)(n) = -S(n)x(n)`. Note the sign: the operator `S` is the negative of
//! the coefficient matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::lattice::{BlockVector, PeriodicCoefficients, Window};

/// Windows with more nodes than this use block-banded storage.
pub const DENSE_NODE_LIMIT: usize = 512;

pub fn apply_a(x: &BlockVector) -> BlockVector {
    let n = x.block_dim();
    let window = x.window();
    let zero = vec![0.0; 2 * n];
    BlockVector::from_fn(window, n, |node, z| {
        let cur = x.at(node).unwrap_or(&zero);
        let prev = x.at(node - 1).unwrap_or(&zero);
        let next = x.at(node + 1).unwrap_or(&zero);
        for k in 0..n {
            z[k] = cur[n + k] - prev[n + k];
            z[n + k] = cur[k] - next[k];
        }
    })
}

pub fn apply_s(x: &BlockVector, coeffs: &PeriodicCoefficients) -> Result<BlockVector> {
    if x.block_dim() != coeffs.block_dim() {
        return Err(Error::Dimension(format!(
            "vector has N={}, coefficients have N={}",
            x.block_dim(),
            coeffs.block_dim()
        )));
    }
    let window = x.window();
    Ok(BlockVector::from_fn(window, x.block_dim(), |node, z| {
        let s = coeffs.at(node);
        let xn = x.at(node).expect("node inside window");
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = -(0..xn.len()).map(|c| s[(r, c)] * xn[c]).sum::<f64>();
        }
    }))
}

/// `(λ₀, Λ₀)`: extreme eigenvalues of `J₀S(n)` over one period, or the
/// `(R0)` violation naming the offending node.
pub fn coercivity_bounds(coeffs: &PeriodicCoefficients) -> Result<(f64, f64)> {
    coeffs.require_r0()
}

/// Block-tridiagonal (plus periodic corner) storage.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBanded {
    width: usize,
    diag: Vec<DMatrix<f64>>,
    /// `(i, j, B)`: block `B` at block-row `i`, block-column `j`, and `Bᵀ` at `(j, i)`.
    couplings: Vec<(usize, usize, DMatrix<f64>)>,
}

impl BlockBanded {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let w = self.width;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, d) in self.diag.iter().enumerate() {
            gemv_add(
                d,
                &x[i * w..(i + 1) * w],
                &mut out[i * w..(i + 1) * w],
                false,
            );
        }
        for (i, j, b) in &self.couplings {
            let (i, j) = (*i, *j);
            let xi = x[i * w..(i + 1) * w].to_vec();
            let xj = x[j * w..(j + 1) * w].to_vec();
            gemv_add(b, &xj, &mut out[i * w..(i + 1) * w], false);
            gemv_add(b, &xi, &mut out[j * w..(j + 1) * w], true);
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let w = self.width;
        let dim = w * self.diag.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, d) in self.diag.iter().enumerate() {
            let mut view = m.view_mut((i * w, i * w), (w, w));
            view += d;
        }
        for (i, j, b) in &self.couplings {
            {
                let mut view = m.view_mut((i * w, j * w), (w, w));
                view += b;
            }
            let mut view = m.view_mut((j * w, i * w), (w, w));
            view += b.transpose();
        }
        m
    }
}

fn gemv_add(m: &DMatrix<f64>, x: &[f64], out: &mut [f64], transpose: bool) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if transpose {
                out[c] += m[(r, c)] * x[r];
            } else {
                out[r] += m[(r, c)] * x[c];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(DMatrix<f64>),
    Banded(BlockBanded),
}

/// The matrix of `A + S` on a finite window, node-major and block-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    window: Window,
    coeffs: PeriodicCoefficients,
    storage: Storage,
    stencil: BlockBanded,
}

impl TruncatedOperator {
    pub fn window(&self) -> Window {
        self.window
    }

    pub fn coeffs(&self) -> &PeriodicCoefficients {
        &self.coeffs
    }

    pub fn block_dim(&self) -> usize {
        self.coeffs.block_dim()
    }

    /// Matrix dimension `2N · nodes`.
    pub fn dim(&self) -> usize {
        2 * self.block_dim() * self.window.len()
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.storage, Storage::Banded(_))
    }

    /// Dense copy of the matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Banded(b) => b.to_dense(),
        }
    }

    /// `(A + S)x` through the assembled matrix.
    pub fn apply(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.window() != self.window || x.block_dim() != self.block_dim() {
            return Err(Error::Dimension(
                "vector does not live on the operator's window".into(),
            ));
        }
        let mut out = vec![0.0; self.dim()];
        self.stencil.apply(x.as_slice(), &mut out);
        BlockVector::from_vec(self.window, self.block_dim(), out)
    }

    /// Band form when every coupling joins neighbouring slots (always for
    /// zero padding); `None` for periodic windows with a wrap-around block.
    pub(crate) fn to_band(&self) -> Option<BandMatrix> {
        let st = &self.stencil;
        let w = st.width;
        if st.couplings.iter().any(|(i, j, _)| i.abs_diff(*j) > 1) {
            return None;
        }
        let k = if st.couplings.is_empty() {
            w - 1
        } else {
            2 * w - 1
        };
        let mut band = BandMatrix::zeros(self.dim(), k);
        for (b, d) in st.diag.iter().enumerate() {
            for r in 0..w {
                for c in 0..w {
                    band.add(b * w + r, b * w + c, d[(r, c)]);
                }
            }
        }
        for (i, j, m) in &st.couplings {
            for r in 0..w {
                for c in 0..w {
                    band.add(i * w + r, j * w + c, m[(r, c)]);
                    band.add(j * w + c, i * w + r, m[(r, c)]);
                }
            }
        }
        Some(band)
    }

    /// `((A+S)x, x)_{l²}`.
    pub fn quadratic_form(&self, x: &BlockVector) -> Result<f64> {
        self.apply(x)?.l2_inner(x)
    }
}

/// Assembles `A + S` on `window`.
pub fn assemble(window: Window, coeffs: &PeriodicCoefficients) -> Result<TruncatedOperator> {
    window.check_period(coeffs.period())?;
    let n = coeffs.block_dim();
    let w = 2 * n;

    // same-node part of A: z₁ += x₂, z₂ += x₁
    let mut a_diag = DMatrix::zeros(w, w);
    // coupling from node i to node i+1: z₂(i) -= x₁(i+1)
    let mut a_up = DMatrix::zeros(w, w);
    for k in 0..n {
        a_diag[(k, n + k)] = 1.0;
        a_diag[(n + k, k)] = 1.0;
        a_up[(n + k, k)] = -1.0;
    }

    let diag: Vec<DMatrix<f64>> = window
        .nodes()
        .map(|node| &a_diag - coeffs.at(node))
        .collect();
    let couplings: Vec<(usize, usize, DMatrix<f64>)> = (0..window.len())
        .filter_map(|i| {
            window
                .slot(window.node(i) + 1)
                .map(|j| (i, j, a_up.clone()))
        })
        .collect();
    let banded = BlockBanded {
        width: w,
        diag,
        couplings,
    };
    let storage = if window.len() > DENSE_NODE_LIMIT {
        Storage::Banded(banded.clone())
    } else {
        Storage::Dense(banded.to_dense())
    };
    Ok(TruncatedOperator {
        window,
        coeffs: coeffs.clone(),
        storage,
        stencil: banded,
    })
}

/// Bloch symbol of `A + S` at quasimomentum `theta`: the operator restricted
/// to sequences with `x(n + T) = e^{iθ} x(n)`, written on the cell `0..T`.
///
/// Columns are obtained by applying the stencil to each of the `2NT`
/// canonical Bloch basis vectors.
pub fn floquet_symbol(theta: f64, coeffs: &PeriodicCoefficients) -> DMatrix<Complex64> {
    let n = coeffs.block_dim();
    let t = coeffs.period();
    let w = 2 * n;
    let dim = w * t;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let cell = col / w;
        let comp = col % w;
        // Bloch basis vector: e_comp at nodes cell + qT, with phase e^{iθq}
        let x = |node: i64, k: usize| -> Complex64 {
            if k != comp || node.rem_euclid(t as i64) as usize != cell {
                return Complex64::new(0.0, 0.0);
            }
            let q = node.div_euclid(t as i64) as f64;
            Complex64::from_polar(1.0, theta * q)
        };
        for row_node in 0..t as i64 {
            let s = coeffs.at(row_node);
            for k in 0..n {
                let z1 = x(row_node, n + k) - x(row_node - 1, n + k);
                let z2 = x(row_node, k) - x(row_node + 1, k);
                let base = row_node as usize * w;
                m[(base + k, col)] += z1;
                m[(base + n + k, col)] += z2;
            }
            for r in 0..w {
                let sx: Complex64 = (0..w).map(|c| x(row_node, c) * s[(r, c)]).sum();
                m[(row_node as usize * w + r, col)] -= sx;
            }
        }
    }
    m
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
