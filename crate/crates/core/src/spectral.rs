//! Eigendecomposition of the truncated `A + S` and the splitting
//! `E = E⁻ ⊕ E⁺` it induces.
//!
//! Spectral statements are certified on periodic windows, where the truncation
//! is spectrally exact (the eigenvalues are Bloch band samples). On
//! zero-padded windows the decomposition is still available, but eigenvalues
//! inside the gap are truncation artifacts; [`gap_mode_report`] lists them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BlockVector, Boundary, PeriodicCoefficients, Window};
use crate::operators::{floquet_symbol, hermitian_eigenvalues, TruncatedOperator};

/// Eigenvalues with `|λ|` below this are treated as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

/// Margin used when deciding whether an eigenvalue lies inside the gap.
pub const GAP_TOL: f64 = 1e-9;

/// Nodes at each end of a window counted as the boundary layer.
pub const BOUNDARY_LAYER: usize = 5;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    window: Window,
    block_dim: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    split_index: usize,
    lambda0: f64,
    big_lambda0: f64,
}

impl SpectralDecomposition {
    pub fn window(&self) -> Window {
        self.window
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Index of the first eigenvalue `> 0`.
    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn big_lambda0(&self) -> f64 {
        self.big_lambda0
    }

    /// The `i`-th eigenvector as a lattice sequence.
    pub fn eigenvector(&self, i: usize) -> BlockVector {
        BlockVector::from_vec(
            self.window,
            self.block_dim,
            self.eigenvectors.column(i).iter().copied().collect(),
        )
        .expect("eigenvector length matches window")
    }

    fn check_vector(&self, x: &BlockVector) -> Result<()> {
        if x.window() != self.window || x.block_dim() != self.block_dim {
            return Err(Error::Dimension(
                "vector does not live on the decomposition's window".into(),
            ));
        }
        Ok(())
    }

    fn check_gap(&self) -> Result<()> {
        for (index, &eigenvalue) in self.eigenvalues.iter().enumerate() {
            if eigenvalue.abs() < ZERO_EIGENVALUE_TOL {
                return Err(Error::SpectralGap { index, eigenvalue });
            }
        }
        Ok(())
    }

    /// Eigenbasis coordinates `cᵢ = vᵢ·x`.
    pub fn coordinates(&self, x: &BlockVector) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        let xv = DVector::from_column_slice(x.as_slice());
        Ok((self.eigenvectors.tr_mul(&xv)).iter().copied().collect())
    }

    /// Eigenvalue residual `max_i |(A+S)vᵢ - λᵢvᵢ|`, for diagnostics.
    pub fn max_residual(&self, op: &TruncatedOperator) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (i, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvector(i);
            let mut r = op.apply(&v)?;
            r.axpy(-lambda, &v)?;
            worst = worst.max(r.l2_norm());
        }
        Ok(worst)
    }

    /// `max |VᵀV - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.eigenvectors.tr_mul(&self.eigenvectors);
        let id = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
        (gram - id).amax()
    }
}

/// Full symmetric eigendecomposition of the assembled operator.
pub fn eigendecompose(op: &TruncatedOperator) -> Result<SpectralDecomposition> {
    let dense = op.to_dense();
    let norm = dense.amax();
    let eig = SymmetricEigen::try_new(dense, f64::EPSILON, 10_000).ok_or_else(|| {
        Error::Numerical(format!(
            "symmetric eigensolver did not converge (dimension {}, max |entry| {norm:.3e})",
            op.dim()
        ))
    })?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(op.dim(), op.dim());
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let split_index = eigenvalues.partition_point(|&l| l <= 0.0);
    Ok(SpectralDecomposition {
        window: op.window(),
        block_dim: op.block_dim(),
        eigenvalues,
        eigenvectors,
        split_index,
        lambda0: op.coeffs().lambda0(),
        big_lambda0: op.coeffs().big_lambda0(),
    })
}

/// `(x⁻, x⁺)`, the components of `x` in the negative and positive spectral
/// subspaces. `x⁺` is formed as `x - x⁻` so that the parts recompose `x`.
pub fn projectors(
    dec: &SpectralDecomposition,
    x: &BlockVector,
) -> Result<(BlockVector, BlockVector)> {
    dec.check_gap()?;
    let c = dec.coordinates(x)?;
    let mut minus = vec![0.0; x.as_slice().len()];
    for (i, &ci) in c.iter().enumerate().take(dec.split_index) {
        for (m, v) in minus.iter_mut().zip(dec.eigenvectors.column(i).iter()) {
            *m += ci * v;
        }
    }
    let minus = BlockVector::from_vec(x.window(), x.block_dim(), minus)?;
    let mut plus = x.clone();
    plus.axpy(-1.0, &minus)?;
    Ok((minus, plus))
}

/// The norm `‖x‖ = (|A+S| x, x)^{1/2}`.
pub fn e_norm(dec: &SpectralDecomposition, x: &BlockVector) -> Result<f64> {
    dec.check_gap()?;
    let c = dec.coordinates(x)?;
    Ok(c.iter()
        .zip(&dec.eigenvalues)
        .map(|(ci, l)| l.abs() * ci * ci)
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSample {
    pub theta: f64,
    pub eigenvalues: Vec<f64>,
}

/// Bloch band values at `θ_j = 2πj / grid_size`, sorted per `θ`.
pub fn band_structure(coeffs: &PeriodicCoefficients, grid_size: usize) -> Result<Vec<BandSample>> {
    if grid_size < 2 {
        return Err(Error::Domain(format!(
            "band grid needs at least 2 points, got {grid_size}"
        )));
    }
    Ok((0..grid_size)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / grid_size as f64;
            BandSample {
                theta,
                eigenvalues: hermitian_eigenvalues(&floquet_symbol(theta, coeffs)),
            }
        })
        .collect())
}

/// Sorted union of the symbol eigenvalues at the `cells` momenta
/// commensurate with a periodic window of `cells` periods.
pub fn floquet_union(coeffs: &PeriodicCoefficients, cells: usize) -> Vec<f64> {
    let mut all: Vec<f64> = (0..cells)
        .flat_map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / cells as f64;
            hermitian_eigenvalues(&floquet_symbol(theta, coeffs))
        })
        .collect();
    all.sort_by(f64::total_cmp);
    all
}

/// Largest distance of any value from `[-Λ₀-2, -λ₀] ∪ [λ₀, Λ₀+2]`;
/// zero when every value lies inside.
pub fn inclusion_violation(values: &[f64], lambda0: f64, big_lambda0: f64) -> f64 {
    let outer = big_lambda0 + 2.0;
    values
        .iter()
        .map(|&v| {
            let a = v.abs();
            if a < lambda0 {
                lambda0 - a
            } else if a > outer {
                a - outer
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapMode {
    pub index: usize,
    pub eigenvalue: f64,
    /// Fraction of the eigenvector's `l²` mass on the outermost
    /// [`BOUNDARY_LAYER`] nodes at either end.
    pub boundary_mass_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapModeReport {
    pub boundary: Boundary,
    pub lambda0: f64,
    pub tolerance: f64,
    pub modes: Vec<GapMode>,
}

/// Eigenvalues inside `(-λ₀ + tol, λ₀ - tol)` together with how much of
/// each eigenvector sits in the boundary layer.
pub fn gap_mode_report(dec: &SpectralDecomposition) -> GapModeReport {
    let w = 2 * dec.block_dim;
    let len = dec.window.len();
    let modes = dec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.abs() < dec.lambda0 - GAP_TOL)
        .map(|(index, &eigenvalue)| {
            let v = dec.eigenvectors.column(index);
            let mut edge = 0.0;
            let mut total = 0.0;
            for slot in 0..len {
                let mass: f64 = (0..w).map(|k| v[slot * w + k].powi(2)).sum();
                total += mass;
                if slot < BOUNDARY_LAYER || slot + BOUNDARY_LAYER >= len {
                    edge += mass;
                }
            }
            GapMode {
                index,
                eigenvalue,
                boundary_mass_fraction: if total > 0.0 { edge / total } else { 0.0 },
            }
        })
        .collect();
    GapModeReport {
        boundary: dec.window.boundary(),
        lambda0: dec.lambda0,
        tolerance: GAP_TOL,
        modes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::assemble;

    #[test]
    fn single_node_eigenvalues() {
        let op = assemble(Window::zero_pad(0), &PeriodicCoefficients::model()).unwrap();
        let dec = eigendecompose(&op).unwrap();
        assert!((dec.eigenvalues()[0] + 2.0).abs() < 1e-14);
        assert!((dec.eigenvalues()[1] - 2.0).abs() < 1e-14);
        assert_eq!(dec.split_index(), 1);
    }

    #[test]
    fn eigenvector_projects_onto_itself() {
        let op = assemble(Window::periodic(8).unwrap(), &PeriodicCoefficients::model()).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let v = dec.eigenvector(dec.split_index() + 2);
        let (minus, plus) = projectors(&dec, &v).unwrap();
        assert!(minus.l2_norm() < 1e-12);
        assert!(plus.linf_distance(&v).unwrap() < 1e-12);
        let zero = BlockVector::zeros(op.window(), 1);
        let (m0, p0) = projectors(&dec, &zero).unwrap();
        assert_eq!(m0.l2_norm(), 0.0);
        assert_eq!(p0.l2_norm(), 0.0);
        let lambda = dec.eigenvalues()[dec.split_index() + 2];
        assert!((e_norm(&dec, &v).unwrap() - lambda.abs().sqrt()).abs() < 1e-12);
        assert_eq!(e_norm(&dec, &zero).unwrap(), 0.0);
    }

    #[test]
    fn zero_eigenvalue_is_an_error() {
        // J₀S = 0 at the single periodic node: A + S vanishes identically
        let c = PeriodicCoefficients::from_row_major(1, &[vec![0.0, 0.0, 0.0, 0.0]]).unwrap();
        let op = assemble(Window::periodic(1).unwrap(), &c).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let x = BlockVector::zeros(op.window(), 1);
        assert!(matches!(
            projectors(&dec, &x),
            Err(Error::SpectralGap { .. })
        ));
        assert!(matches!(e_norm(&dec, &x), Err(Error::SpectralGap { .. })));
    }

    #[test]
    fn band_grid_validation() {
        let c = PeriodicCoefficients::model();
        assert!(band_structure(&c, 1).is_err());
        let bands = band_structure(&c, 2).unwrap();
        assert_eq!(bands.len(), 2);
        assert!((bands[1].theta - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn inclusion_measure() {
        assert_eq!(inclusion_violation(&[-3.0, -1.0, 1.0, 3.0], 1.0, 1.0), 0.0);
        assert!((inclusion_violation(&[0.5], 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((inclusion_violation(&[-3.25], 1.0, 1.0) - 0.25).abs() < 1e-15);
    }
}
