use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Absolute tolerance for symmetry and definiteness checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// The symplectic matrix `J = [[0, -I], [I, 0]]` and its companion
/// `J₀ = [[0, -I], [-I, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrices {
    pub j: DMatrix<f64>,
    pub j0: DMatrix<f64>,
}

impl StructureMatrices {
    pub fn new(block_dim: usize) -> Self {
        let n = block_dim;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        let mut j0 = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = -1.0;
            j[(n + i, i)] = 1.0;
            j0[(i, n + i)] = -1.0;
            j0[(n + i, i)] = -1.0;
        }
        StructureMatrices { j, j0 }
    }
}

/// The period-`T` family `S(0), …, S(T-1)` of symmetric `2N×2N` matrices.
///
/// Construction checks shape and symmetry. Whether `J₀S(n)` is symmetric
/// positive definite is recorded rather than enforced, so that a hypothesis
/// report can describe the failure; see [`PeriodicCoefficients::require_r0`].
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCoefficients {
    block_dim: usize,
    matrices: Vec<DMatrix<f64>>,
    lambda0: f64,
    big_lambda0: f64,
    r0_violation: Option<Error>,
}

impl PeriodicCoefficients {
    pub fn new(block_dim: usize, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        if block_dim == 0 {
            return Err(Error::Domain("block dimension N must be positive".into()));
        }
        if matrices.is_empty() {
            return Err(Error::Domain("period T must be positive".into()));
        }
        let dim = 2 * block_dim;
        for (n, s) in matrices.iter().enumerate() {
            if s.nrows() != dim || s.ncols() != dim {
                return Err(Error::Dimension(format!(
                    "S({n}) is {}x{}, expected {dim}x{dim}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("S({n}) has non-finite entries")));
            }
            if let Some((r, c)) = asymmetry(s) {
                return Err(Error::Domain(format!(
                    "S({n}) is not symmetric: entry ({r},{c}) differs from ({c},{r})"
                )));
            }
        }

        let structure = StructureMatrices::new(block_dim);
        let mut lambda0 = f64::INFINITY;
        let mut big_lambda0 = f64::NEG_INFINITY;
        let mut r0_violation = None;
        for (n, s) in matrices.iter().enumerate() {
            let product = &structure.j0 * s;
            if r0_violation.is_none() {
                if let Some((r, c)) = asymmetry(&product) {
                    r0_violation = Some(Error::HypothesisViolation {
                        hypothesis: "R0",
                        node: n as i64,
                        detail: format!("J0*S(n) is not symmetric at entry ({r},{c})"),
                    });
                }
            }
            let sym = (&product + product.transpose()) * 0.5;
            let eig = sym.symmetric_eigenvalues();
            let lo = eig.min();
            let hi = eig.max();
            if r0_violation.is_none() && lo <= SYMMETRY_TOL {
                r0_violation = Some(Error::HypothesisViolation {
                    hypothesis: "R0",
                    node: n as i64,
                    detail: format!("J0*S(n) is not positive definite (min eigenvalue {lo:.6e})"),
                });
            }
            lambda0 = lambda0.min(lo);
            big_lambda0 = big_lambda0.max(hi);
        }
        Ok(PeriodicCoefficients {
            block_dim,
            matrices,
            lambda0,
            big_lambda0,
            r0_violation,
        })
    }

    /// Builds the family from row-major `2N×2N` arrays.
    pub fn from_row_major(block_dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = 2 * block_dim;
        let matrices = rows
            .iter()
            .enumerate()
            .map(|(n, r)| {
                if r.len() != dim * dim {
                    Err(Error::Dimension(format!(
                        "S({n}) has {} entries, expected {}",
                        r.len(),
                        dim * dim
                    )))
                } else {
                    Ok(DMatrix::from_row_slice(dim, dim, r))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(block_dim, matrices)
    }

    /// The `N = T = 1` model with `S(0) = [[0, -1], [-1, 0]]`, for which
    /// `J₀S(0) = I`.
    pub fn model() -> Self {
        Self::from_row_major(1, &[vec![0.0, -1.0, -1.0, 0.0]]).expect("model coefficients")
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn period(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    /// Coefficient index used at node `n`.
    pub fn phase(&self, n: i64) -> usize {
        n.rem_euclid(self.period() as i64) as usize
    }

    /// `S(n mod T)`.
    pub fn at(&self, n: i64) -> &DMatrix<f64> {
        &self.matrices[self.phase(n)]
    }

    /// Smallest eigenvalue of `J₀S(n)` over one period.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Largest eigenvalue of `J₀S(n)` over one period.
    pub fn big_lambda0(&self) -> f64 {
        self.big_lambda0
    }

    /// `Ok((λ₀, Λ₀))` when every `J₀S(n)` is symmetric positive definite.
    pub fn require_r0(&self) -> Result<(f64, f64)> {
        match &self.r0_violation {
            Some(e) => Err(e.clone()),
            None => Ok((self.lambda0, self.big_lambda0)),
        }
    }

    /// Row-major entries of every `S(n)`.
    pub fn to_row_major(&self) -> Vec<Vec<f64>> {
        self.matrices
            .iter()
            .map(|m| {
                let mut out = Vec::with_capacity(m.len());
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        out.push(m[(r, c)]);
                    }
                }
                out
            })
            .collect()
    }
}

fn asymmetry(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for r in 0..m.nrows() {
        for c in (r + 1)..m.ncols() {
            if (m[(r, c)] - m[(c, r)]).abs() > SYMMETRY_TOL {
                return Some((r, c));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_matrices_square_to_identity() {
        for n in 1..4 {
            let s = StructureMatrices::new(n);
            let id = DMatrix::<f64>::identity(2 * n, 2 * n);
            assert!((&s.j * &s.j + &id).amax() < 1e-14);
            assert!((&s.j0 * &s.j0 - &id).amax() < 1e-14);
        }
    }

    #[test]
    fn model_bounds() {
        let c = PeriodicCoefficients::model();
        assert_eq!(c.require_r0().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn rejects_asymmetric_and_misshaped() {
        let bad = PeriodicCoefficients::from_row_major(1, &[vec![0.0, 1.0, 2.0, 0.0]]);
        assert!(matches!(bad, Err(Error::Domain(_))));
        let short = PeriodicCoefficients::from_row_major(1, &[vec![0.0, 1.0, 1.0]]);
        assert!(matches!(short, Err(Error::Dimension(_))));
    }

    #[test]
    fn r0_violation_names_node() {
        let c = PeriodicCoefficients::from_row_major(
            1,
            &[vec![0.0, -1.0, -1.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]],
        )
        .unwrap();
        match c.require_r0() {
            Err(Error::HypothesisViolation {
                hypothesis, node, ..
            }) => {
                assert_eq!(hypothesis, "R0");
                assert_eq!(node, 1);
            }
            other => panic!("expected R0 violation, got {other:?}"),
        }
    }

    #[test]
    fn phase_is_euclidean() {
        let c = PeriodicCoefficients::from_row_major(
            1,
            &[
                vec![0.0, -1.0, -1.0, 0.0],
                vec![0.0, -2.0, -2.0, 0.0],
                vec![0.0, -3.0, -3.0, 0.0],
            ],
        )
        .unwrap();
        assert_eq!(c.phase(-1), 2);
        assert_eq!(c.phase(-3), 0);
        assert_eq!(c.phase(4), 1);
    }
}
