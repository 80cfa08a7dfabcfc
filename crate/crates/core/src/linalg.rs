//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Largest entry modulus, used as a scale for relative tolerances.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m).max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in i..n {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn eigh(m: &CMat) -> (RVec, CMat) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = RVec::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMat) -> RVec {
    let mut v: Vec<f64> = hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    RVec::from_vec(v)
}

/// Operator (spectral) norm.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.is_square() {
        if is_hermitian(m, 1e-13) {
            return eigvalsh(m).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        }
        let rotated = m * I;
        if is_hermitian(&rotated, 1e-13) {
            return eigvalsh(&rotated)
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        }
    }
    m.clone().singular_values().max()
}

/// Outcome of a positive-semidefiniteness test on a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
    /// Unit eigenvector for the smallest eigenvalue.
    pub witness: CVec,
}

/// PSD test with an eigenvalue floor relative to the largest eigenvalue modulus.
pub fn psd_report(m: &CMat, rel_eps: f64) -> PsdReport {
    let (values, vectors) = eigh(m);
    let n = values.len();
    if n == 0 {
        return PsdReport {
            is_psd: true,
            min_eigenvalue: 0.0,
            max_abs_eigenvalue: 0.0,
            witness: CVec::zeros(0),
        };
    }
    let min = values[0];
    let max_abs = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    PsdReport {
        is_psd: min >= -rel_eps * max_abs.max(f64::MIN_POSITIVE),
        min_eigenvalue: min,
        max_abs_eigenvalue: max_abs,
        witness: vectors.column(0).into_owned(),
    }
}

/// Solve a square complex system, `None` when singular.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

/// Orthonormal basis (columns) of the eigenspace of a real symmetric PSD
/// matrix whose eigenvalues fall below `rel_tol` times the largest one.
pub fn real_kernel(gram: &RMat, rel_tol: f64) -> RMat {
    let n = gram.nrows();
    if n == 0 {
        return RMat::zeros(0, 0);
    }
    let sym = (gram + gram.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cols: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] <= rel_tol * max.max(f64::MIN_POSITIVE))
        .collect();
    let mut out = RMat::zeros(n, cols.len());
    for (c, &k) in cols.iter().enumerate() {
        out.set_column(c, &eig.eigenvectors.column(k));
    }
    out
}

/// Greedy pivoted Cholesky on a real PSD Gram matrix: indices of a maximal
/// well-conditioned independent subset of the underlying vectors.
pub fn independent_subset(gram: &RMat, rel_tol: f64) -> Vec<usize> {
    let n = gram.nrows();
    let mut residual: Vec<f64> = (0..n).map(|i| gram[(i, i)]).collect();
    let max_diag = residual.iter().fold(0.0_f64, |a, &v| a.max(v));
    let mut chosen: Vec<usize> = Vec::new();
    let mut factors: Vec<Vec<f64>> = Vec::new();
    if max_diag <= 0.0 {
        return chosen;
    }
    loop {
        let mut best = None;
        let mut best_val = rel_tol * max_diag;
        for i in 0..n {
            if !chosen.contains(&i) && residual[i] > best_val {
                best_val = residual[i];
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        let pivot = residual[p].sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            let mut v = gram[(i, p)];
            for f in &factors {
                v -= f[i] * f[p];
            }
            col[i] = v / pivot;
        }
        for i in 0..n {
            residual[i] -= col[i] * col[i];
        }
        residual[p] = 0.0;
        chosen.push(p);
        factors.push(col);
    }
    chosen.sort_unstable();
    chosen
}

/// Complex product through four real GEMMs, much faster than the generic
/// complex kernel for the dense blocks of the solver.
pub fn cmatmul(a: &CMat, b: &CMat) -> CMat {
    if a.nrows() * a.ncols() * b.ncols() < 4096 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMat::from_fn(a.nrows(), b.ncols(), |i, j| {
        C64::new(re[(i, j)], im[(i, j)])
    })
}

/// Hilbert-Schmidt inner product `tr(a* b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Row-compressed complex matrix for the sparse operators that appear in
/// representations and constraint matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    pub nrows: usize,
    pub ncols: usize,
    /// Per row, `(column, value)` pairs in increasing column order.
    pub rows: Vec<Vec<(usize, C64)>>,
}

impl SparseMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMat {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    /// Keep entries whose modulus exceeds `tol`.
    pub fn from_dense(m: &CMat, tol: f64) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)].norm() > tol)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        SparseMat {
            nrows: m.nrows(),
            ncols: m.ncols(),
            rows,
        }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.nrows, self.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    /// `self * m` for dense `m`.
    pub fn mul_dense(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.nrows, m.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                for j in 0..m.ncols() {
                    out[(i, j)] += v * m[(k, j)];
                }
            }
        }
        out
    }

    /// `Re tr(self * m)`.
    pub fn re_trace_with(&self, m: &CMat) -> f64 {
        self.entries().map(|(i, j, v)| (v * m[(j, i)]).re).sum()
    }

    /// Add `alpha * self` into the dense `out`.
    pub fn axpy_into(&self, alpha: C64, out: &mut CMat) {
        for (i, j, v) in self.entries() {
            out[(i, j)] += alpha * v;
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.entries()
            .map(|(_, _, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn identity(n: usize) -> Self {
        SparseMat {
            nrows: n,
            ncols: n,
            rows: (0..n).map(|i| vec![(i, ONE)]).collect(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// `m * self` for dense `m`.
    pub fn left_mul_dense(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(m.nrows(), self.ncols);
        for (k, j, v) in self.entries() {
            for i in 0..m.nrows() {
                out[(i, j)] += m[(i, k)] * v;
            }
        }
        out
    }

    /// Linear combination `Σ coeff · mat` of equally sized sparse matrices.
    pub fn combine(nrows: usize, ncols: usize, terms: &[(C64, &SparseMat)]) -> SparseMat {
        let mut buf = vec![ZERO; ncols];
        let mut touched = vec![false; ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut rows = Vec::with_capacity(nrows);
        for r in 0..nrows {
            for &(alpha, m) in terms {
                if alpha == ZERO {
                    continue;
                }
                for &(j, v) in &m.rows[r] {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    buf[j] += alpha * v;
                }
            }
            cols.sort_unstable();
            let mut row = Vec::with_capacity(cols.len());
            for &j in &cols {
                if buf[j] != ZERO {
                    row.push((j, buf[j]));
                }
                buf[j] = ZERO;
                touched[j] = false;
            }
            cols.clear();
            rows.push(row);
        }
        SparseMat { nrows, ncols, rows }
    }

    pub fn mul_sparse(&self, other: &SparseMat) -> SparseMat {
        let mut buf = vec![ZERO; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut rows = Vec::with_capacity(self.nrows);
        for row_a in &self.rows {
            for &(k, v) in row_a {
                for &(j, w) in &other.rows[k] {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    buf[j] += v * w;
                }
            }
            cols.sort_unstable();
            let mut row = Vec::with_capacity(cols.len());
            for &j in &cols {
                if buf[j] != ZERO {
                    row.push((j, buf[j]));
                }
                buf[j] = ZERO;
                touched[j] = false;
            }
            cols.clear();
            rows.push(row);
        }
        SparseMat {
            nrows: self.nrows,
            ncols: other.ncols,
            rows,
        }
    }

    pub fn scale(&self, alpha: C64) -> SparseMat {
        SparseMat {
            nrows: self.nrows,
            ncols: self.ncols,
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|&(j, v)| (j, alpha * v)).collect())
                .collect(),
        }
    }

    pub fn adjoint(&self) -> SparseMat {
        let mut rows = vec![Vec::new(); self.ncols];
        for (i, j, v) in self.entries() {
            rows[j].push((i, v.conj()));
        }
        SparseMat {
            nrows: self.ncols,
            ncols: self.nrows,
            rows,
        }
    }

    pub fn kron(&self, other: &SparseMat) -> SparseMat {
        let mut rows = Vec::with_capacity(self.nrows * other.nrows);
        for ra in &self.rows {
            for rb in &other.rows {
                let mut row = Vec::with_capacity(ra.len() * rb.len());
                for &(ja, va) in ra {
                    for &(jb, vb) in rb {
                        row.push((ja * other.ncols + jb, va * vb));
                    }
                }
                rows.push(row);
            }
        }
        SparseMat {
            nrows: self.nrows * other.nrows,
            ncols: self.ncols * other.ncols,
            rows,
        }
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &SparseMat) -> SparseMat {
        let ab = self.mul_sparse(other);
        let ba = other.mul_sparse(self);
        SparseMat::combine(self.nrows, other.ncols, &[(ONE, &ab), (-ONE, &ba)])
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0_f64, |a, (_, _, v)| a.max(v.norm()))
    }

    /// Hermitian up to `tol` relative to the largest entry.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let diff = SparseMat::combine(
            self.nrows,
            self.ncols,
            &[(ONE, self), (-ONE, &self.adjoint())],
        );
        self.is_square() && diff.max_abs() <= tol * self.max_abs().max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_swap_and_rectangular() {
        let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!((spectral_norm(&x) - 1.0).abs() < 1e-14);
        let r = CMat::from_row_slice(1, 2, &[c(3.0, 0.0), c(0.0, 4.0)]);
        assert!((spectral_norm(&r) - 5.0).abs() < 1e-12);
        let skew = CMat::from_row_slice(2, 2, &[ZERO, c(-2.0, 0.0), c(2.0, 0.0), ZERO]);
        assert!((spectral_norm(&skew) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psd_report_flags_negative_eigenvalue() {
        let swap = CMat::from_row_slice(
            4,
            4,
            &[
                ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO,
                ZERO, ONE,
            ],
        );
        let rep = psd_report(&swap, 1e-9);
        assert!(!rep.is_psd);
        assert!((rep.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_products_match_dense() {
        let a = CMat::from_fn(3, 3, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.5));
        let b = CMat::from_fn(3, 3, |i, j| c((i + 2 * j) as f64, 1.0 - i as f64));
        let (sa, sb) = (
            SparseMat::from_dense(&a, 0.0),
            SparseMat::from_dense(&b, 0.0),
        );
        assert!(max_abs(&(sa.mul_sparse(&sb).to_dense() - &a * &b)) < 1e-12);
        assert!(max_abs(&(sa.commutator(&sb).to_dense() - commutator(&a, &b))) < 1e-12);
        assert!(max_abs(&(sa.kron(&sb).to_dense() - kron(&a, &b))) < 1e-12);
        assert!(max_abs(&(sa.mul_dense(&b) - &a * &b)) < 1e-12);
        assert!(max_abs(&(sb.left_mul_dense(&a) - &a * &b)) < 1e-12);
        assert!(max_abs(&(sa.adjoint().to_dense() - a.adjoint())) < 1e-12);
    }

    #[test]
    fn independent_subset_drops_duplicates() {
        let gram = RMat::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(independent_subset(&gram, 1e-12).len(), 2);
    }
}
