//! Square complex CSR matrices.
//!
//! Entries that become exactly zero are dropped after every operation, so
//! integer-structured operators stay integer-structured.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        CsrMatrix { n, indptr: vec![0; n + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, Complex64::new(1.0, 0.0))
    }

    pub fn scaled_identity(n: usize, z: Complex64) -> Self {
        if z == ZERO {
            return Self::zeros(n);
        }
        CsrMatrix { n, indptr: (0..=n).collect(), indices: (0..n).collect(), data: vec![z; n] }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, Complex64)>) -> Self {
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut data: Vec<Complex64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            assert!(r < n && c < n, "triplet ({r},{c}) out of range for dim {n}");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { n, indptr, indices, data }.pruned()
    }

    pub fn from_dense(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "dense input must be square");
            for (j, &v) in row.iter().enumerate() {
                if v != ZERO {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, trip)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b].iter().copied().zip(self.data[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[a..b].binary_search(&j) {
            Ok(k) => self.data[a + k],
            Err(_) => ZERO,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![ZERO; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    fn pruned(mut self) -> Self {
        if self.data.iter().all(|&v| v != ZERO) {
            return self;
        }
        let mut w = 0;
        let mut start = 0;
        for i in 0..self.n {
            let end = self.indptr[i + 1];
            for k in start..end {
                if self.data[k] != ZERO {
                    self.indices[w] = self.indices[k];
                    self.data[w] = self.data[k];
                    w += 1;
                }
            }
            start = end;
            self.indptr[i + 1] = w;
        }
        self.indices.truncate(w);
        self.data.truncate(w);
        self
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= z);
        out.pruned()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut counts = vec![0usize; self.n + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![ZERO; self.nnz()];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let k = next[j];
                indices[k] = i;
                data[k] = v.conj();
                next[j] += 1;
            }
        }
        CsrMatrix { n: self.n, indptr, indices, data }
    }

    /// alpha * self + beta * other.
    pub fn axpby(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch in sparse sum");
        let mut indptr = Vec::with_capacity(self.n + 1);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        indptr.push(0);
        for i in 0..self.n {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                let (j, v) = match (a.peek(), b.peek()) {
                    (None, None) => break,
                    (Some(&(ja, va)), Some(&(jb, vb))) => {
                        if ja == jb {
                            a.next();
                            b.next();
                            (ja, alpha * va + beta * vb)
                        } else if ja < jb {
                            a.next();
                            (ja, alpha * va)
                        } else {
                            b.next();
                            (jb, beta * vb)
                        }
                    }
                    (Some(&(ja, va)), None) => {
                        a.next();
                        (ja, alpha * va)
                    }
                    (None, Some(&(jb, vb))) => {
                        b.next();
                        (jb, beta * vb)
                    }
                };
                if v != ZERO {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { n: self.n, indptr, indices, data }
    }

    pub fn add(&self, other: &Self) -> Self {
        let one = Complex64::new(1.0, 0.0);
        self.axpby(one, other, one)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpby(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// Matrix product by row-wise accumulation.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch in sparse product");
        let n = self.n;
        let mut acc = vec![ZERO; n];
        let mut mark = vec![usize::MAX; n];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for i in 0..n {
            cols.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = ZERO;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                if acc[j] != ZERO {
                    indices.push(j);
                    data.push(acc[j]);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { n, indptr, indices, data }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "dimension mismatch in matrix-vector product");
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (&j, v) in self.indices.iter().zip(&self.data) {
            col[j] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = a.len();
        let mut out = vec![vec![ZERO; n]; n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn sample(seed: u64, n: usize) -> CsrMatrix {
        let mut trip = Vec::new();
        let mut s = seed;
        for i in 0..n {
            for j in 0..n {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                if (s >> 60) < 6 {
                    let re = ((s >> 20) % 7) as f64 - 3.0;
                    let im = ((s >> 30) % 5) as f64 - 2.0;
                    trip.push((i, j, c(re, im)));
                }
            }
        }
        CsrMatrix::from_triplets(n, trip)
    }

    #[test]
    fn product_matches_dense() {
        let a = sample(1, 9);
        let b = sample(2, 9);
        assert_eq!(a.matmul(&b).to_dense(), dense_mul(&a.to_dense(), &b.to_dense()));
    }

    #[test]
    fn adjoint_involutive_and_reverses_products() {
        let a = sample(3, 8);
        let b = sample(4, 8);
        assert_eq!(a.adjoint().adjoint(), a);
        assert_eq!(a.matmul(&b).adjoint(), b.adjoint().matmul(&a.adjoint()));
    }

    #[test]
    fn triplets_sum_and_prune() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0)), (2, 2, c(0.0, 2.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(2, 2), c(0.0, 2.0));
        assert_eq!(m.get(0, 1), ZERO);
    }

    #[test]
    fn difference_with_self_is_empty() {
        let a = sample(5, 7);
        assert_eq!(a.sub(&a).nnz(), 0);
    }

    #[test]
    fn norms() {
        let i = CsrMatrix::identity(4);
        assert_eq!(i.frobenius_norm(), 2.0);
        assert_eq!(i.one_norm(), 1.0);
        assert_eq!(i.trace(), c(4.0, 0.0));
    }
}
