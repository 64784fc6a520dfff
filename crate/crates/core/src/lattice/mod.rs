//! Finite windows of the integer lattice and block-vector sequences on them.
//!
//! A [`BlockVector`] stores one real vector `x(n) ∈ ℝ^{2N}` per node, laid out
//! node-major, block-minor: the `x₁` components of a node come first, then its
//! `x₂` components. The same layout is used for every assembled matrix.

mod coefficients;

pub use coefficients::{PeriodicCoefficients, StructureMatrices};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How references outside the window are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Nodes outside the window carry the zero vector.
    ZeroPad,
    /// Indices wrap modulo the node count.
    Periodic,
}

/// A contiguous range of lattice nodes plus a boundary rule.
///
/// Zero-padded windows are always the symmetric range `[-M, M]`. Periodic
/// windows may hold any positive node count `L` and cover
/// `-⌊L/2⌋ ..= L - 1 - ⌊L/2⌋`, so that a whole number of coefficient periods
/// fits even when the period is even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    first: i64,
    len: usize,
    boundary: Boundary,
}

impl Window {
    /// The zero-padded window `[-half_width, half_width]`.
    pub fn zero_pad(half_width: usize) -> Self {
        Window {
            first: -(half_width as i64),
            len: 2 * half_width + 1,
            boundary: Boundary::ZeroPad,
        }
    }

    /// A periodic window with `len` nodes.
    pub fn periodic(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Domain(
                "periodic window needs at least one node".into(),
            ));
        }
        Ok(Window {
            first: -((len / 2) as i64),
            len,
            boundary: Boundary::Periodic,
        })
    }

    /// A periodic window of `cells` whole coefficient periods of length `period`.
    pub fn periodic_cells(cells: usize, period: usize) -> Result<Self> {
        Self::periodic(cells * period)
    }

    /// `[-half_width, half_width]` under the given boundary rule.
    pub fn symmetric(half_width: usize, boundary: Boundary) -> Self {
        Window {
            first: -(half_width as i64),
            len: 2 * half_width + 1,
            boundary,
        }
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn first(&self) -> i64 {
        self.first
    }

    pub fn last(&self) -> i64 {
        self.first + self.len as i64 - 1
    }

    /// `M` for symmetric windows; `⌊L/2⌋` in general.
    pub fn half_width(&self) -> usize {
        self.len / 2
    }

    pub fn nodes(&self) -> impl Iterator<Item = i64> + '_ {
        self.first..=self.last()
    }

    /// Node label of the storage slot `i`.
    pub fn node(&self, i: usize) -> i64 {
        self.first + i as i64
    }

    /// Storage slot of node `n` after applying the boundary rule, or `None`
    /// when `n` falls into zero padding.
    pub fn slot(&self, n: i64) -> Option<usize> {
        let offset = n - self.first;
        match self.boundary {
            Boundary::ZeroPad => {
                if offset >= 0 && (offset as usize) < self.len {
                    Some(offset as usize)
                } else {
                    None
                }
            }
            Boundary::Periodic => Some(offset.rem_euclid(self.len as i64) as usize),
        }
    }

    /// Checks that the window is compatible with a coefficient period.
    pub fn check_period(&self, period: usize) -> Result<()> {
        if self.boundary == Boundary::Periodic && !self.len.is_multiple_of(period) {
            return Err(Error::Configuration(format!(
                "periodic window of {} nodes is not a multiple of the period T={}",
                self.len, period
            )));
        }
        Ok(())
    }

    /// The zero-padded or periodic window with twice the half width.
    pub fn doubled(&self) -> Self {
        match self.boundary {
            Boundary::ZeroPad => Window::zero_pad(2 * self.half_width()),
            Boundary::Periodic => Window {
                first: -(self.len as i64),
                len: 2 * self.len,
                boundary: Boundary::Periodic,
            },
        }
    }
}

/// A finitely supported lattice sequence `x(n) ∈ ℝ^{2N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    window: Window,
    block_dim: usize,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn zeros(window: Window, block_dim: usize) -> Self {
        BlockVector {
            window,
            block_dim,
            data: vec![0.0; window.len() * 2 * block_dim],
        }
    }

    /// Wraps node-major, block-minor data.
    pub fn from_vec(window: Window, block_dim: usize, data: Vec<f64>) -> Result<Self> {
        let expected = window.len() * 2 * block_dim;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "expected {} entries ({} nodes x {}), got {}",
                expected,
                window.len(),
                2 * block_dim,
                data.len()
            )));
        }
        Ok(BlockVector {
            window,
            block_dim,
            data,
        })
    }

    /// Builds a vector by evaluating `f(n, block)` at every node.
    pub fn from_fn(window: Window, block_dim: usize, mut f: impl FnMut(i64, &mut [f64])) -> Self {
        let mut v = Self::zeros(window, block_dim);
        let width = v.width();
        for (i, chunk) in v.data.chunks_exact_mut(width).enumerate() {
            f(window.node(i), chunk);
        }
        v
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// `N`; each block has `2N` entries.
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Entries per node, `2N`.
    pub fn width(&self) -> usize {
        2 * self.block_dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Block stored in slot `i`.
    pub fn block(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.width();
        &mut self.data[i * w..(i + 1) * w]
    }

    /// `x(n)` under the boundary rule; `None` means the zero block.
    pub fn at(&self, n: i64) -> Option<&[f64]> {
        self.window.slot(n).map(|i| self.block(i))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i64, &[f64])> {
        let window = self.window;
        self.data
            .chunks_exact(self.width())
            .enumerate()
            .map(move |(i, b)| (window.node(i), b))
    }

    fn check_compatible(&self, other: &BlockVector) -> Result<()> {
        if self.window != other.window || self.block_dim != other.block_dim {
            return Err(Error::Dimension(format!(
                "window/block mismatch: {:?} N={} vs {:?} N={}",
                self.window, self.block_dim, other.window, other.block_dim
            )));
        }
        Ok(())
    }

    /// `∑_n x(n)·y(n)`.
    pub fn l2_inner(&self, other: &BlockVector) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn l2_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    /// `max_n |x(n)|` with Euclidean block norms.
    pub fn linf_norm(&self) -> f64 {
        self.block_norms().fold(0.0, f64::max)
    }

    /// Euclidean norm of every block, in node order.
    pub fn block_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.data
            .chunks_exact(self.width())
            .map(|b| dot(b, b).sqrt())
    }

    /// The `l^p` norm over nodes of the Euclidean block norms; `p = ∞` allowed.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 2.0 {
            return Err(Error::Domain(format!("l^p norm requires p >= 2, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.linf_norm());
        }
        if p == 2.0 {
            return Ok(self.l2_norm());
        }
        // scale by the max block to avoid overflow for large p
        let max = self.linf_norm();
        if max == 0.0 {
            return Ok(0.0);
        }
        let sum: f64 = self.block_norms().map(|r| (r / max).powf(p)).sum();
        Ok(max * sum.powf(1.0 / p))
    }

    /// `y(n) = x(n + k)` under the window's boundary rule.
    pub fn shift(&self, k: i64) -> BlockVector {
        let mut out = BlockVector::zeros(self.window, self.block_dim);
        let w = self.width();
        for i in 0..self.window.len() {
            if let Some(src) = self.window.slot(self.window.node(i) + k) {
                out.data[i * w..(i + 1) * w].copy_from_slice(self.block(src));
            }
        }
        out
    }

    /// Zero-padded copy on a window that contains this one.
    pub fn reembed(&self, target: Window) -> Result<BlockVector> {
        if target.first() > self.window.first() || target.last() < self.window.last() {
            return Err(Error::Domain(format!(
                "cannot re-embed a window of half width {} into half width {}",
                self.window.half_width(),
                target.half_width()
            )));
        }
        let mut out = BlockVector::zeros(target, self.block_dim);
        let w = self.width();
        let offset = (self.window.first() - target.first()) as usize;
        out.data[offset * w..(offset + self.window.len()) * w].copy_from_slice(&self.data);
        Ok(out)
    }

    /// Restriction to a sub-window (entries outside are dropped).
    pub fn restrict(&self, target: Window) -> Result<BlockVector> {
        if target.first() < self.window.first() || target.last() > self.window.last() {
            return Err(Error::Domain(
                "restriction target is not a sub-window".into(),
            ));
        }
        let w = self.width();
        let offset = (target.first() - self.window.first()) as usize;
        BlockVector::from_vec(
            target,
            self.block_dim,
            self.data[offset * w..(offset + target.len()) * w].to_vec(),
        )
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &BlockVector) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> BlockVector {
        BlockVector {
            window: self.window,
            block_dim: self.block_dim,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `max_n |x(n) - y(n)|`.
    pub fn linf_distance(&self, other: &BlockVector) -> Result<f64> {
        self.check_compatible(other)?;
        let w = self.width();
        Ok(self
            .data
            .chunks_exact(w)
            .zip(other.data.chunks_exact(w))
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
