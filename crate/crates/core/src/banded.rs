//! Square band matrices with an LU solve using partial pivoting.
//!
//! Row `i` stores columns `i-k ..= i+2k`; the extra `k` super-diagonals hold
//! the fill produced by row interchanges.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BandMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, k: usize) -> Self {
        BandMatrix {
            n,
            k,
            data: vec![0.0; n * (3 * k + 1)],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.k >= i && j <= i + 2 * self.k);
        i * (3 * self.k + 1) + (j + self.k - i)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let p = self.idx(i, j);
        &mut self.data[p]
    }

    /// Adds `v` at `(i, j)`; panics outside the band.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i.abs_diff(j) <= self.k, "entry ({i}, {j}) outside the band");
        *self.get_mut(i, j) += v;
    }

    fn cols(&self, i: usize, upper: usize) -> std::ops::RangeInclusive<usize> {
        i.saturating_sub(self.k)..=(i + upper).min(self.n - 1)
    }

    pub(crate) fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.cols(i, self.k).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Solves `(M + shift·I) y = rhs`. `None` on an exactly zero pivot or a
    /// non-finite solution.
    pub(crate) fn solve_shifted(&self, rhs: &[f64], shift: f64) -> Option<Vec<f64>> {
        let (n, k) = (self.n, self.k);
        let mut m = self.clone();
        if shift != 0.0 {
            for i in 0..n {
                *m.get_mut(i, i) += shift;
            }
        }
        let mut b = rhs.to_vec();
        for c in 0..n {
            let last = (c + k).min(n - 1);
            let mut p = c;
            for r in c + 1..=last {
                if m.get(r, c).abs() > m.get(p, c).abs() {
                    p = r;
                }
            }
            let pivot = m.get(p, c);
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            let right = (c + 2 * k).min(n - 1);
            if p != c {
                for j in c..=right {
                    let (a, bb) = (m.idx(c, j), m.idx(p, j));
                    m.data.swap(a, bb);
                }
                b.swap(c, p);
            }
            for r in c + 1..=last {
                let l = m.get(r, c) / pivot;
                if l == 0.0 {
                    continue;
                }
                *m.get_mut(r, c) = 0.0;
                for j in c + 1..=right {
                    let u = m.get(c, j);
                    *m.get_mut(r, j) -= l * u;
                }
                b[r] -= l * b[c];
            }
        }
        for i in (0..n).rev() {
            let upper: f64 = (i + 1..=(i + 2 * k).min(n - 1))
                .map(|j| m.get(i, j) * b[j])
                .sum();
            b[i] = (b[i] - upper) / m.get(i, i);
        }
        b.iter().all(|v| v.is_finite()).then_some(b)
    }
}
