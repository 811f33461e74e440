//! Minimal CSR storage for complex operators.

use crate::real::{czero, Real, C};
use crate::CMatrix;

#[derive(Debug, Clone)]
pub struct CsrMatrix<T: Real> {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C<T>>,
}

/// Row-wise triplet builder; duplicates are summed, exact zeros dropped.
#[derive(Debug, Clone)]
pub struct CsrBuilder<T: Real> {
    n: usize,
    rows: Vec<Vec<(usize, C<T>)>>,
}

impl<T: Real> CsrBuilder<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, v: C<T>) {
        debug_assert!(row < self.n && col < self.n);
        self.rows[row].push((col, v));
    }

    pub fn build(self) -> CsrMatrix<T> {
        let mut indptr = Vec::with_capacity(self.n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut r in self.rows {
            r.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < r.len() {
                let c = r[i].0;
                let mut acc = czero::<T>();
                while i < r.len() && r[i].0 == c {
                    acc += r[i].1;
                    i += 1;
                }
                if acc != czero() {
                    indices.push(c);
                    values.push(acc);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n: self.n,
            indptr,
            indices,
            values,
        }
    }
}

impl<T: Real> CsrMatrix<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C<T>)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    /// y = A x
    pub fn matvec_into(&self, x: &[C<T>], y: &mut [C<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = czero::<T>();
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut y = vec![czero(); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> CMatrix<T> {
        let mut m = CMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Linear combination Σ cᵢ Aᵢ of operators of equal dimension.
    pub fn combine(parts: &[(C<T>, &CsrMatrix<T>)]) -> CsrMatrix<T> {
        let n = parts.first().map(|p| p.1.n).unwrap_or(0);
        let mut b = CsrBuilder::new(n);
        for (c, m) in parts {
            assert_eq!(m.n, n);
            for i in 0..n {
                for (j, v) in m.row(i) {
                    b.push(i, j, *c * v);
                }
            }
        }
        b.build()
    }

    /// Max |A - A†| entry.
    pub fn hermiticity_error(&self) -> T {
        let d = self.to_dense();
        crate::dense::hermiticity_error(&d)
    }

    /// Crude bound max_i Σ_j |A_ij| (row sums), enough for Krylov step control.
    pub fn inf_norm(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.n {
            let s = self.row(i).fold(T::zero(), |a, (_, v)| a + v.re.hypot(v.im));
            best = best.max(s);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_sums_duplicates() {
        let mut b = CsrBuilder::<f64>::new(2);
        b.push(0, 1, C::new(1.0, 0.0));
        b.push(0, 1, C::new(2.0, 0.0));
        b.push(1, 1, C::new(0.0, 0.0));
        let m = b.build();
        assert_eq!(m.nnz(), 1);
        let y = m.matvec(&[C::new(0.0, 0.0), C::new(1.0, 1.0)]);
        assert_eq!(y[0], C::new(3.0, 3.0));
    }
}
