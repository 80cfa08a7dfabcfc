//! Finite-dimensional C*-algebras realized as spans of matrices.
//!
//! An algebra stores its basis, sparse structure constants, the coordinates
//! of every basis adjoint and of the unit. Tensor products keep a flat list
//! of atomic factors so that factor permutations act on multi-indices.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, c, hs_inner, CMat, CVec, PsdReport, C64, ONE, ZERO};
use crate::{EPS_PSD, EPS_STRUCT};

pub type Algebra = Arc<ConcreteAlgebra>;

/// Sparse coordinate vector: `(index, coefficient)` pairs.
pub type Sparse = Vec<(usize, C64)>;

pub struct ConcreteAlgebra {
    name: String,
    ambient_dim: usize,
    basis: Vec<CMat>,
    unit: CVec,
    products: Vec<Sparse>,
    adjoints: Vec<Sparse>,
    gram_inv: CMat,
    factors: Vec<Algebra>,
    opposite: bool,
    op_source: Option<Algebra>,
}

impl fmt::Debug for ConcreteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConcreteAlgebra")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("ambient_dim", &self.ambient_dim)
            .finish()
    }
}

fn sparsify(x: &CVec) -> Sparse {
    let scale = x.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
    x.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 1e-14 * scale)
        .map(|(k, z)| (k, *z))
        .collect()
}

fn clean(x: &mut CVec) {
    // Snap to integers so that exact units print as such.
    for z in x.iter_mut() {
        if (z.re - z.re.round()).abs() < 1e-12 {
            z.re = z.re.round();
        }
        if (z.im - z.im.round()).abs() < 1e-12 {
            z.im = z.im.round();
        }
    }
}

/// Validate a span of matrices and derive its algebraic data.
pub fn build_algebra(name: &str, ambient_dim: usize, basis: Vec<CMat>) -> Result<Algebra> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    if ambient_dim == 0 {
        return Err(Error::DimensionMismatch(
            "ambient dimension must be positive".into(),
        ));
    }
    for (k, b) in basis.iter().enumerate() {
        if b.nrows() != ambient_dim || b.ncols() != ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "basis element {k} is {}x{}, expected {ambient_dim}x{ambient_dim}",
                b.nrows(),
                b.ncols()
            )));
        }
    }
    let d = basis.len();
    let gram = CMat::from_fn(d, d, |i, j| hs_inner(&basis[i], &basis[j]));
    let eig = linalg::eigvalsh(&gram);
    let (min, max) = (eig[0], eig[d - 1]);
    if min <= EPS_STRUCT * max.max(f64::MIN_POSITIVE) {
        return Err(Error::LinearlyDependentBasis {
            min_eigenvalue: min,
        });
    }
    let gram_inv =
        gram.clone()
            .cholesky()
            .map(|ch| ch.inverse())
            .ok_or(Error::LinearlyDependentBasis {
                min_eigenvalue: min,
            })?;

    let project = |m: &CMat| -> (CVec, f64) {
        let rhs = CVec::from_fn(d, |i, _| hs_inner(&basis[i], m));
        let x = &gram_inv * rhs;
        let mut back = m.clone();
        for (k, b) in basis.iter().enumerate() {
            back -= b * x[k];
        }
        (x, linalg::frobenius(&back) / linalg::frobenius(m).max(1.0))
    };

    let mut products = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let (x, residual) = project(&(&basis[i] * &basis[j]));
            if residual > EPS_STRUCT {
                return Err(Error::NotClosedUnderProduct { i, j, residual });
            }
            products.push(sparsify(&x));
        }
    }
    let mut adjoints = Vec::with_capacity(d);
    for (index, b) in basis.iter().enumerate() {
        let (x, residual) = project(&b.adjoint());
        if residual > EPS_STRUCT {
            return Err(Error::NotClosedUnderAdjoint { index, residual });
        }
        adjoints.push(sparsify(&x));
    }

    // Two-sided unit: u with u·B_j = B_j·u = B_j for every j, solved in coordinates.
    let mut system = CMat::zeros(2 * d * d, d);
    let mut target = CVec::zeros(2 * d * d);
    for j in 0..d {
        for k in 0..d {
            for &(l, coeff) in &products[k * d + j] {
                system[(j * d + l, k)] += coeff;
            }
            for &(l, coeff) in &products[j * d + k] {
                system[(d * d + j * d + l, k)] += coeff;
            }
        }
        target[j * d + j] = ONE;
        target[d * d + j * d + j] = ONE;
    }
    let svd = system.clone().svd(true, true);
    let mut unit = svd.solve(&target, 1e-12).map_err(|_| Error::NoUnit {
        residual: f64::INFINITY,
    })?;
    clean(&mut unit);
    let residual = (&system * &unit - &target).norm();
    if residual > EPS_STRUCT * (d as f64).sqrt().max(1.0) {
        return Err(Error::NoUnit { residual });
    }

    Ok(Arc::new(ConcreteAlgebra {
        name: name.to_string(),
        ambient_dim,
        basis,
        unit,
        products,
        adjoints,
        gram_inv,
        factors: Vec::new(),
        opposite: false,
        op_source: None,
    }))
}

/// `M_n` in the matrix-unit basis `e_{ij}`, row-major.
pub fn matrix_algebra(n: usize) -> Algebra {
    let basis = (0..n * n)
        .map(|k| linalg::matrix_unit(n, k / n, k % n))
        .collect();
    build_algebra(&format!("M_{n}"), n, basis).expect("matrix units span M_n")
}

/// Diagonal `n x n` matrices, the functions on an `n`-point space.
pub fn diagonal_algebra(n: usize) -> Algebra {
    let basis = (0..n).map(|k| linalg::matrix_unit(n, k, k)).collect();
    build_algebra(&format!("diag_{n}"), n, basis)
        .expect("diagonal units span a commutative algebra")
}

/// The one-dimensional algebra of scalars.
pub fn scalar_algebra() -> Algebra {
    build_algebra("C", 1, vec![CMat::identity(1, 1)]).expect("scalars")
}

fn sparse_kron(a: &Sparse, b: &Sparse, db: usize) -> Sparse {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &(i, x) in a {
        for &(j, y) in b {
            out.push((i * db + j, x * y));
        }
    }
    out
}

fn flat_factors(a: &Algebra) -> Vec<Algebra> {
    if a.factors.is_empty() {
        vec![a.clone()]
    } else {
        a.factors.clone()
    }
}

/// Tensor product with basis `B_i ⊗ C_j` in row-major pair order.
pub fn tensor_algebra(a: &Algebra, b: &Algebra) -> Algebra {
    let (da, db) = (a.dim(), b.dim());
    let d = da * db;
    let basis: Vec<CMat> = (0..d)
        .map(|k| linalg::kron(&a.basis[k / db], &b.basis[k % db]))
        .collect();
    let mut products = vec![Vec::new(); d * d];
    for i1 in 0..da {
        for j1 in 0..da {
            let pa = &a.products[i1 * da + j1];
            for i2 in 0..db {
                for j2 in 0..db {
                    let pb = &b.products[i2 * db + j2];
                    products[(i1 * db + i2) * d + (j1 * db + j2)] = sparse_kron(pa, pb, db);
                }
            }
        }
    }
    let adjoints = (0..d)
        .map(|k| sparse_kron(&a.adjoints[k / db], &b.adjoints[k % db], db))
        .collect();
    let unit = CVec::from_fn(d, |k, _| a.unit[k / db] * b.unit[k % db]);
    let mut factors = flat_factors(a);
    factors.extend(flat_factors(b));
    Arc::new(ConcreteAlgebra {
        name: format!("{}⊗{}", a.name, b.name),
        ambient_dim: a.ambient_dim * b.ambient_dim,
        basis,
        unit,
        products,
        adjoints,
        gram_inv: linalg::kron(&a.gram_inv, &b.gram_inv),
        factors,
        opposite: false,
        op_source: None,
    })
}

/// Left-to-right tensor product of a non-empty list.
pub fn tensor_all(list: &[Algebra]) -> Algebra {
    let mut it = list.iter();
    let first = it
        .next()
        .expect("tensor_all needs at least one factor")
        .clone();
    it.fold(first, |acc, f| tensor_algebra(&acc, f))
}

/// Opposite algebra realized by transposing every basis matrix.
pub fn opposite_algebra(a: &Algebra) -> Algebra {
    if !a.factors.is_empty() {
        let ops: Vec<Algebra> = a.factors.iter().map(opposite_algebra).collect();
        return tensor_all(&ops);
    }
    if let Some(src) = &a.op_source {
        return src.clone();
    }
    let d = a.dim();
    let products = (0..d * d)
        .map(|p| a.products[(p % d) * d + p / d].clone())
        .collect();
    Arc::new(ConcreteAlgebra {
        name: format!("{}^op", a.name),
        ambient_dim: a.ambient_dim,
        basis: a.basis.iter().map(|b| b.transpose()).collect(),
        unit: a.unit.clone(),
        products,
        adjoints: a.adjoints.clone(),
        gram_inv: a.gram_inv.clone(),
        factors: Vec::new(),
        opposite: !a.opposite,
        op_source: Some(a.clone()),
    })
}

/// Pointer equality, else structural equality of the factor data.
pub fn same_algebra(a: &Algebra, b: &Algebra) -> bool {
    if Arc::ptr_eq(a, b) {
        return true;
    }
    if a.dim() != b.dim() || a.ambient_dim != b.ambient_dim {
        return false;
    }
    let (fa, fb) = (flat_factors(a), flat_factors(b));
    if fa.len() != fb.len() {
        return false;
    }
    if fa.len() > 1 {
        return fa.iter().zip(&fb).all(|(x, y)| same_algebra(x, y));
    }
    a.opposite == b.opposite
        && a.basis
            .iter()
            .zip(&b.basis)
            .all(|(x, y)| linalg::max_abs(&(x - y)) <= EPS_STRUCT)
}

pub(crate) fn check_same(expected: &Algebra, found: &Algebra) -> Result<()> {
    if same_algebra(expected, found) {
        Ok(())
    } else {
        Err(Error::AlgebraMismatch {
            expected: expected.name.clone(),
            found: found.name.clone(),
        })
    }
}

impl ConcreteAlgebra {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    pub fn unit(&self) -> &CVec {
        &self.unit
    }

    /// Coordinates of `B_i B_j`.
    pub fn product(&self, i: usize, j: usize) -> &Sparse {
        &self.products[i * self.dim() + j]
    }

    /// Coordinates of `B_i*`.
    pub fn adjoint_of(&self, i: usize) -> &Sparse {
        &self.adjoints[i]
    }

    pub fn is_opposite(&self) -> bool {
        self.opposite
    }

    pub fn is_tensor(&self) -> bool {
        !self.factors.is_empty()
    }

    pub fn basis_vector(&self, i: usize) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[i] = ONE;
        v
    }

    pub fn multiply(&self, x: &CVec, y: &CVec) -> CVec {
        let d = self.dim();
        let mut out = CVec::zeros(d);
        for i in 0..d {
            if x[i] == ZERO {
                continue;
            }
            for j in 0..d {
                if y[j] == ZERO {
                    continue;
                }
                let w = x[i] * y[j];
                for &(k, coeff) in &self.products[i * d + j] {
                    out[k] += w * coeff;
                }
            }
        }
        out
    }

    pub fn adjoint(&self, x: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim());
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for &(k, coeff) in &self.adjoints[i] {
                out[k] += xi.conj() * coeff;
            }
        }
        out
    }

    pub fn commutator(&self, x: &CVec, y: &CVec) -> CVec {
        self.multiply(x, y) - self.multiply(y, x)
    }

    /// Ambient matrix `Σ x_i B_i`.
    pub fn realize(&self, x: &CVec) -> CMat {
        let n = self.ambient_dim;
        let mut m = CMat::zeros(n, n);
        for (b, xi) in self.basis.iter().zip(x.iter()) {
            if *xi != ZERO {
                m += b * *xi;
            }
        }
        m
    }

    /// Least-squares coordinates of an ambient matrix and the relative residual.
    pub fn coords_of(&self, m: &CMat) -> (CVec, f64) {
        let d = self.dim();
        let rhs = CVec::from_fn(d, |i, _| hs_inner(&self.basis[i], m));
        let x = &self.gram_inv * rhs;
        let back = self.realize(&x);
        (
            x,
            linalg::frobenius(&(m - back)) / linalg::frobenius(m).max(1.0),
        )
    }

    pub fn is_self_adjoint(&self, x: &CVec) -> bool {
        let diff = self.adjoint(x) - x;
        let scale = x.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
        diff.iter().all(|z| z.norm() <= EPS_STRUCT * scale)
    }

    /// Ambient trace of every basis element.
    pub fn ambient_traces(&self) -> CVec {
        CVec::from_iterator(self.dim(), self.basis.iter().map(|b| b.trace()))
    }
}

/// Atomic factors of a tensor algebra (a single entry for an atomic algebra).
pub fn factor_list(a: &Algebra) -> Vec<Algebra> {
    flat_factors(a)
}

/// An element together with its algebra.
#[derive(Debug, Clone)]
pub struct Element {
    pub algebra: Algebra,
    pub coords: CVec,
}

impl Element {
    pub fn new(algebra: &Algebra, coords: CVec) -> Result<Self> {
        if coords.len() != algebra.dim() {
            return Err(Error::DimensionMismatch(format!(
                "element has {} coordinates, algebra `{}` has dimension {}",
                coords.len(),
                algebra.name(),
                algebra.dim()
            )));
        }
        Ok(Element {
            algebra: algebra.clone(),
            coords,
        })
    }

    pub fn unit(algebra: &Algebra) -> Self {
        Element {
            algebra: algebra.clone(),
            coords: algebra.unit().clone(),
        }
    }

    pub fn realize(&self) -> CMat {
        self.algebra.realize(&self.coords)
    }

    pub fn adjoint(&self) -> Self {
        Element {
            algebra: self.algebra.clone(),
            coords: self.algebra.adjoint(&self.coords),
        }
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.algebra.is_self_adjoint(&self.coords)
    }
}

/// Linear functional stored by its values on the basis.
#[derive(Debug, Clone)]
pub struct LinearFunctional {
    pub algebra: Algebra,
    pub values: CVec,
}

impl LinearFunctional {
    pub fn new(algebra: &Algebra, values: CVec) -> Result<Self> {
        if values.len() != algebra.dim() {
            return Err(Error::DimensionMismatch(format!(
                "functional has {} values, algebra `{}` has dimension {}",
                values.len(),
                algebra.name(),
                algebra.dim()
            )));
        }
        Ok(LinearFunctional {
            algebra: algebra.clone(),
            values,
        })
    }

    pub fn zero(algebra: &Algebra) -> Self {
        LinearFunctional {
            algebra: algebra.clone(),
            values: CVec::zeros(algebra.dim()),
        }
    }

    pub fn eval(&self, coords: &CVec) -> C64 {
        self.values
            .iter()
            .zip(coords.iter())
            .map(|(v, x)| v * x)
            .sum()
    }

    /// `[φ(B_i* B_j)]`.
    pub fn gns_gram(&self) -> CMat {
        let alg = &self.algebra;
        let d = alg.dim();
        // p[a][j] = φ(B_a B_j)
        let p = CMat::from_fn(d, d, |a, j| {
            alg.product(a, j)
                .iter()
                .map(|&(k, coeff)| coeff * self.values[k])
                .sum()
        });
        let mut g = CMat::zeros(d, d);
        for i in 0..d {
            for &(a, coeff) in alg.adjoint_of(i) {
                for j in 0..d {
                    g[(i, j)] += coeff * p[(a, j)];
                }
            }
        }
        g
    }

    pub fn positivity(&self) -> PsdReport {
        linalg::psd_report(&self.gns_gram(), EPS_PSD)
    }

    pub fn is_positive(&self) -> bool {
        self.positivity().is_psd
    }

    pub fn unit_value(&self) -> C64 {
        self.eval(self.algebra.unit())
    }

    pub fn is_state(&self) -> bool {
        (self.unit_value() - ONE).norm() < EPS_STRUCT && self.is_positive()
    }

    /// `x ↦ φ(x*)^-`, equal to `φ` exactly when `φ` is Hermitian.
    pub fn is_hermitian(&self) -> bool {
        let d = self.algebra.dim();
        let scale = self.values.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
        (0..d).all(|i| {
            let star = self.eval(&self.algebra.adjoint(&self.algebra.basis_vector(i)));
            (star.conj() - self.values[i]).norm() <= EPS_STRUCT * scale
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        LinearFunctional {
            algebra: self.algebra.clone(),
            values: &self.values * s,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same(&self.algebra, &other.algebra)?;
        Ok(LinearFunctional {
            algebra: self.algebra.clone(),
            values: &self.values - &other.values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same(&self.algebra, &other.algebra)?;
        Ok(LinearFunctional {
            algebra: self.algebra.clone(),
            values: &self.values + &other.values,
        })
    }
}

/// `φ ⊗ ψ` on the tensor algebra.
pub fn tensor_functional(phi: &LinearFunctional, psi: &LinearFunctional) -> LinearFunctional {
    let alg = tensor_algebra(&phi.algebra, &psi.algebra);
    let db = psi.values.len();
    let values = CVec::from_fn(alg.dim(), |k, _| phi.values[k / db] * psi.values[k % db]);
    LinearFunctional {
        algebra: alg,
        values,
    }
}

/// A validated trace with cached faithfulness.
#[derive(Debug, Clone)]
pub struct TraceFunctional {
    pub name: String,
    pub functional: LinearFunctional,
    faithful: bool,
    gram_min: f64,
}

impl TraceFunctional {
    pub fn new(name: &str, functional: LinearFunctional) -> Result<Self> {
        let alg = functional.algebra.clone();
        let d = alg.dim();
        let scale = functional
            .values
            .iter()
            .fold(0.0_f64, |a, z| a.max(z.norm()));
        if scale == 0.0 {
            return Err(Error::NotATrace(format!("`{name}` is the zero functional")));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let xy: C64 = alg
                    .product(i, j)
                    .iter()
                    .map(|&(k, c)| c * functional.values[k])
                    .sum();
                let yx: C64 = alg
                    .product(j, i)
                    .iter()
                    .map(|&(k, c)| c * functional.values[k])
                    .sum();
                if (xy - yx).norm() > EPS_STRUCT * scale.max(1.0) {
                    return Err(Error::NotATrace(format!(
                        "`{name}` does not vanish on the commutator of basis elements {i} and {j}"
                    )));
                }
            }
        }
        let report = functional.positivity();
        if !report.is_psd {
            return Err(Error::NotATrace(format!(
                "`{name}` is not positive (Gram eigenvalue {:.3e})",
                report.min_eigenvalue
            )));
        }
        let faithful = report.min_eigenvalue > EPS_PSD * report.max_abs_eigenvalue;
        Ok(TraceFunctional {
            name: name.to_string(),
            functional,
            faithful,
            gram_min: report.min_eigenvalue,
        })
    }

    /// `scale · Tr` evaluated on the ambient realization.
    pub fn ambient(algebra: &Algebra, scale: f64, name: &str) -> Result<Self> {
        let values = algebra.ambient_traces() * c(scale, 0.0);
        Self::new(name, LinearFunctional::new(algebra, values)?)
    }

    pub fn algebra(&self) -> &Algebra {
        &self.functional.algebra
    }

    pub fn values(&self) -> &CVec {
        &self.functional.values
    }

    pub fn eval(&self, coords: &CVec) -> C64 {
        self.functional.eval(coords)
    }

    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    pub fn gram_min_eigenvalue(&self) -> f64 {
        self.gram_min
    }

    pub fn require_faithful(&self) -> Result<()> {
        if self.faithful {
            Ok(())
        } else {
            Err(Error::NotFaithful(self.name.clone()))
        }
    }

    /// `T_ij = τ(B_i B_j)`.
    pub fn pairing(&self) -> CMat {
        let alg = self.algebra();
        let d = alg.dim();
        CMat::from_fn(d, d, |i, j| {
            alg.product(i, j)
                .iter()
                .map(|&(k, coeff)| coeff * self.values()[k])
                .sum()
        })
    }

    pub fn tensor(&self, other: &TraceFunctional) -> TraceFunctional {
        let functional = tensor_functional(&self.functional, &other.functional);
        TraceFunctional {
            name: format!("{}⊗{}", self.name, other.name),
            functional,
            faithful: self.faithful && other.faithful,
            gram_min: self.gram_min.min(other.gram_min),
        }
    }

    /// The same values read on the opposite algebra.
    pub fn opposite(&self) -> TraceFunctional {
        let alg = opposite_algebra(self.algebra());
        TraceFunctional {
            name: format!("{}^op", self.name),
            functional: LinearFunctional {
                algebra: alg,
                values: self.values().clone(),
            },
            faithful: self.faithful,
            gram_min: self.gram_min,
        }
    }
}

/// `μ_τ(B_i ⊗ B_j^op) = τ(B_i B_j)` on `B ⊗ B^op`.
pub fn evaluate_mu_tau(tau: &TraceFunctional) -> LinearFunctional {
    let b = tau.algebra();
    let alg = tensor_algebra(b, &opposite_algebra(b));
    let t = tau.pairing();
    let d = b.dim();
    LinearFunctional {
        algebra: alg,
        values: CVec::from_fn(d * d, |k, _| t[(k / d, k % d)]),
    }
}

/// Density `b` with `φ = τ(b ·)` and its membership in the density set.
#[derive(Debug, Clone)]
pub struct Density {
    pub element: Element,
    pub in_density_set: bool,
}

pub fn density_from_functional(phi: &LinearFunctional, tau: &TraceFunctional) -> Result<Density> {
    check_same(tau.algebra(), &phi.algebra)?;
    tau.require_faithful()?;
    let t = tau.pairing();
    let rhs = CMat::from_column_slice(phi.values.len(), 1, phi.values.as_slice());
    let b =
        linalg::solve(&t.transpose(), &rhs).ok_or_else(|| Error::NotFaithful(tau.name.clone()))?;
    let coords = b.column(0).into_owned();
    let element = Element::new(&phi.algebra, coords)?;
    let realized = element.realize();
    let positive = linalg::is_hermitian(&realized, EPS_STRUCT)
        && linalg::psd_report(&realized, EPS_PSD).is_psd;
    let normalized = (tau.eval(&element.coords) - ONE).norm() < EPS_STRUCT;
    Ok(Density {
        element,
        in_density_set: positive && normalized,
    })
}

/// A coordinate permutation between two tensor algebras induced by reordering
/// (and possibly op-flipping) the atomic factors.
#[derive(Debug, Clone)]
pub struct FactorPermutation {
    pub source: Algebra,
    pub target: Algebra,
    /// `map[s]` is the target index of source basis element `s`.
    pub map: Vec<usize>,
}

impl FactorPermutation {
    pub fn apply(&self, x: &CVec) -> CVec {
        let mut out = CVec::zeros(x.len());
        for (s, &t) in self.map.iter().enumerate() {
            out[t] = x[s];
        }
        out
    }

    pub fn apply_inverse(&self, y: &CVec) -> CVec {
        CVec::from_fn(y.len(), |s, _| y[self.map[s]])
    }

    /// `φ ∘ Σ` for a functional `φ` on the target.
    pub fn pullback(&self, phi: &LinearFunctional) -> Result<LinearFunctional> {
        check_same(&self.target, &phi.algebra)?;
        Ok(LinearFunctional {
            algebra: self.source.clone(),
            values: self.apply_inverse(&phi.values),
        })
    }

    /// `φ ∘ Σ⁻¹` for a functional on the source (the dual pushforward).
    pub fn pushforward(&self, phi: &LinearFunctional) -> Result<LinearFunctional> {
        check_same(&self.source, &phi.algebra)?;
        Ok(LinearFunctional {
            algebra: self.target.clone(),
            values: self.apply(&phi.values),
        })
    }

    pub fn inverse(&self) -> FactorPermutation {
        let mut map = vec![0; self.map.len()];
        for (s, &t) in self.map.iter().enumerate() {
            map[t] = s;
        }
        FactorPermutation {
            source: self.target.clone(),
            target: self.source.clone(),
            map,
        }
    }

    /// The permutation as a dense coordinate matrix (target × source).
    pub fn matrix(&self) -> CMat {
        let d = self.map.len();
        let mut m = CMat::zeros(d, d);
        for (s, &t) in self.map.iter().enumerate() {
            m[(t, s)] = ONE;
        }
        m
    }
}

/// Reorder factors: target factor `s` is source factor `order[s]`, replaced
/// by its opposite when `flip[s]` holds.
pub fn permute_factors(alg: &Algebra, order: &[usize], flip: &[bool]) -> Result<FactorPermutation> {
    let fs = factor_list(alg);
    let k = fs.len();
    if k < 2 {
        return Err(Error::NotATensorAlgebra(alg.name().to_string()));
    }
    let mut seen = vec![false; k];
    if order.len() != k || flip.len() != k {
        return Err(Error::FactorMismatch(format!(
            "expected a permutation of {k} factors"
        )));
    }
    for &o in order {
        if o >= k || seen[o] {
            return Err(Error::FactorMismatch(format!(
                "{order:?} is not a permutation of 0..{k}"
            )));
        }
        seen[o] = true;
    }
    let targets: Vec<Algebra> = order
        .iter()
        .zip(flip)
        .map(|(&o, &f)| {
            if f {
                opposite_algebra(&fs[o])
            } else {
                fs[o].clone()
            }
        })
        .collect();
    let target = tensor_all(&targets);
    let dims: Vec<usize> = fs.iter().map(|f| f.dim()).collect();
    let tdims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let total = alg.dim();
    let mut map = vec![0; total];
    let mut digits = vec![0usize; k];
    for (s, slot) in map.iter_mut().enumerate() {
        let mut rem = s;
        for p in (0..k).rev() {
            digits[p] = rem % dims[p];
            rem /= dims[p];
        }
        let mut t = 0;
        for p in 0..k {
            t = t * tdims[p] + digits[order[p]];
        }
        *slot = t;
    }
    Ok(FactorPermutation {
        source: alg.clone(),
        target,
        map,
    })
}

fn check_positions(alg: &Algebra, i: usize, j: usize) -> Result<usize> {
    let k = factor_list(alg).len();
    if k < 2 {
        return Err(Error::NotATensorAlgebra(alg.name().to_string()));
    }
    if i >= k || j >= k || i == j {
        return Err(Error::FactorMismatch(format!(
            "positions ({i}, {j}) are not two distinct factors of a {k}-fold tensor product"
        )));
    }
    Ok(k)
}

/// `Σ_[ij]`: exchange factors `i` and `j` (zero-based).
pub fn swap_map(alg: &Algebra, i: usize, j: usize) -> Result<FactorPermutation> {
    let k = check_positions(alg, i, j)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.swap(i, j);
    permute_factors(alg, &order, &vec![false; k])
}

/// `Σ^op` on factors `i` and `j`: `a ⊗ b^op ↦ b ⊗ a^op` in those slots.
pub fn swap_op_map(alg: &Algebra, i: usize, j: usize) -> Result<FactorPermutation> {
    let k = check_positions(alg, i, j)?;
    let fs = factor_list(alg);
    if fs[i].is_opposite() == fs[j].is_opposite() {
        return Err(Error::FactorMismatch(format!(
            "factors `{}` and `{}` must be an algebra and an opposite algebra",
            fs[i].name(),
            fs[j].name()
        )));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.swap(i, j);
    let mut flip = vec![false; k];
    flip[i] = true;
    flip[j] = true;
    permute_factors(alg, &order, &flip)
}

/// Block form of `Σ^op`: `X ⊗ Y^op ↦ Y ⊗ X^op` where `X` is the first `split`
/// atomic factors.
pub fn block_swap_op_map(alg: &Algebra, split: usize) -> Result<FactorPermutation> {
    let k = factor_list(alg).len();
    if k < 2 {
        return Err(Error::NotATensorAlgebra(alg.name().to_string()));
    }
    if split == 0 || split >= k {
        return Err(Error::FactorMismatch(format!(
            "split {split} out of range for {k} factors"
        )));
    }
    let order: Vec<usize> = (split..k).chain(0..split).collect();
    permute_factors(alg, &order, &vec![true; k])
}

pub fn swap_factors(x: &Element, i: usize, j: usize) -> Result<Element> {
    let map = swap_map(&x.algebra, i, j)?;
    Ok(Element {
        algebra: map.target.clone(),
        coords: map.apply(&x.coords),
    })
}

pub fn swap_op_factors(x: &Element, i: usize, j: usize) -> Result<Element> {
    let map = swap_op_map(&x.algebra, i, j)?;
    Ok(Element {
        algebra: map.target.clone(),
        coords: map.apply(&x.coords),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cv(v: &[(f64, f64)]) -> CVec {
        CVec::from_iterator(v.len(), v.iter().map(|&(a, b)| c(a, b)))
    }

    #[test]
    fn matrix_and_diagonal_units() {
        let m2 = matrix_algebra(2);
        assert_eq!(m2.unit(), &cv(&[(1., 0.), (0., 0.), (0., 0.), (1., 0.)]));
        let d2 = diagonal_algebra(2);
        assert_eq!(d2.unit(), &cv(&[(1., 0.), (1., 0.)]));
    }

    #[test]
    fn non_self_adjoint_span_is_rejected() {
        let b = vec![linalg::matrix_unit(2, 0, 0), linalg::matrix_unit(2, 0, 1)];
        match build_algebra("upper", 2, b) {
            Err(Error::NotClosedUnderAdjoint { index, residual }) => {
                assert_eq!(index, 1);
                // e21 is orthogonal to the span, so the whole matrix is residual.
                assert!((residual - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dependent_and_empty_bases_are_rejected() {
        let e = linalg::matrix_unit(2, 0, 0);
        assert!(matches!(
            build_algebra("dup", 2, vec![e.clone(), e * c(2.0, 0.0)]),
            Err(Error::LinearlyDependentBasis { .. })
        ));
        assert!(matches!(
            build_algebra("none", 2, vec![]),
            Err(Error::EmptyBasis)
        ));
    }

    #[test]
    fn opposite_transposes_and_reverses_products() {
        let m2 = matrix_algebra(2);
        let op = opposite_algebra(&m2);
        assert_eq!(op.basis()[1], linalg::matrix_unit(2, 1, 0));
        assert!(Arc::ptr_eq(&opposite_algebra(&op), &m2));
        let x = cv(&[(1., 2.), (0.5, 0.), (-1., 1.), (3., 0.)]);
        let y = cv(&[(0., 1.), (2., -1.), (0.25, 0.), (1., 1.)]);
        assert!((op.multiply(&x, &y) - m2.multiply(&y, &x)).norm() < 1e-12);
    }

    #[test]
    fn swap_23_reindexes_triples() {
        let a = tensor_all(&[matrix_algebra(2), matrix_algebra(2), diagonal_algebra(2)]);
        let map = swap_map(&a, 1, 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..2 {
                    assert_eq!(map.map[i * 8 + j * 2 + k], i * 8 + k * 4 + j);
                }
            }
        }
        assert_eq!(map.target.dim(), 32);
        assert!(matches!(
            swap_map(&matrix_algebra(2), 0, 1),
            Err(Error::NotATensorAlgebra(_))
        ));
    }

    #[test]
    fn mu_tau_on_matrix_units() {
        let m2 = matrix_algebra(2);
        let tr = TraceFunctional::ambient(&m2, 1.0, "Tr").unwrap();
        let mu = evaluate_mu_tau(&tr);
        assert_eq!(mu.values[0], ONE);
        assert_eq!(mu.values[3], ZERO);
        assert!(mu.is_positive());
        let d2 = diagonal_algebra(2);
        let t = TraceFunctional::ambient(&d2, 1.0, "Tr").unwrap();
        assert_eq!(
            evaluate_mu_tau(&t).values,
            cv(&[(1., 0.), (0., 0.), (0., 0.), (1., 0.)])
        );
    }

    #[test]
    fn densities_of_simple_functionals() {
        let m2 = matrix_algebra(2);
        let tr = TraceFunctional::ambient(&m2, 1.0, "Tr").unwrap();
        let phi = LinearFunctional::new(&m2, m2.basis_vector(0)).unwrap();
        let d = density_from_functional(&phi, &tr).unwrap();
        assert!((d.element.coords.clone() - m2.basis_vector(0)).norm() < 1e-12);
        assert!(d.in_density_set);
        let d = density_from_functional(&tr.functional, &tr).unwrap();
        assert!((d.element.coords.clone() - m2.unit()).norm() < 1e-12);
        assert!(!d.in_density_set);
    }

    #[test]
    fn commutator_functional_is_not_a_trace() {
        let m2 = matrix_algebra(2);
        let phi = LinearFunctional::new(&m2, m2.basis_vector(0)).unwrap();
        assert!(matches!(
            TraceFunctional::new("e11", phi),
            Err(Error::NotATrace(_))
        ));
    }

    fn arb_c() -> impl Strategy<Value = C64> {
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c(a, b))
    }

    fn arb_vec(n: usize) -> impl Strategy<Value = CVec> {
        proptest::collection::vec(arb_c(), n).prop_map(CVec::from_vec)
    }

    proptest! {
        #[test]
        fn structure_constants_reproduce_ambient_products(x in arb_vec(9), y in arb_vec(9)) {
            let m3 = matrix_algebra(3);
            let prod = m3.realize(&m3.multiply(&x, &y));
            let direct = m3.realize(&x) * m3.realize(&y);
            prop_assert!(linalg::max_abs(&(prod - direct)) < 1e-12);
            let adj = m3.realize(&m3.adjoint(&x));
            prop_assert!(linalg::max_abs(&(adj - m3.realize(&x).adjoint())) < 1e-12);
        }

        #[test]
        fn opposite_product_law(x in arb_vec(9), y in arb_vec(9)) {
            let m3 = matrix_algebra(3);
            let op = opposite_algebra(&m3);
            let lhs = m3.multiply(&x, &y);
            let rhs = op.multiply(&y, &x);
            prop_assert!((lhs - rhs).norm() < 1e-12);
            let realized = op.realize(&op.multiply(&y, &x));
            prop_assert!(linalg::max_abs(&(realized - op.realize(&y) * op.realize(&x))) < 1e-12);
        }

        #[test]
        fn swaps_are_involutive(x in arb_vec(8)) {
            let a = tensor_all(&[matrix_algebra(2), diagonal_algebra(2)]);
            let e = Element::new(&a, x.clone()).unwrap();
            let back = swap_factors(&swap_factors(&e, 0, 1).unwrap(), 0, 1).unwrap();
            prop_assert_eq!(back.coords, x);
        }

        #[test]
        fn product_traces_factorize(i in 0usize..4, j in 0usize..2) {
            let m2 = matrix_algebra(2);
            let d2 = diagonal_algebra(2);
            let t1 = TraceFunctional::ambient(&m2, 0.5, "tr").unwrap();
            let t2 = TraceFunctional::ambient(&d2, 1.0, "Tr").unwrap();
            let t = t1.tensor(&t2);
            let joint = t.eval(&t.algebra().basis_vector(i * 2 + j));
            prop_assert!((joint - t1.values()[i] * t2.values()[j]).norm() < EPS_STRUCT);
        }

        #[test]
        fn swap_preserves_positivity(w in proptest::collection::vec(0.01..1.0f64, 4)) {
            // product of positive diagonal functionals, pulled back along the flip
            let d2 = diagonal_algebra(2);
            let p = LinearFunctional::new(&d2, cv(&[(w[0], 0.), (w[1], 0.)])).unwrap();
            let q = LinearFunctional::new(&matrix_algebra(2), cv(&[(w[2], 0.), (0., 0.), (0., 0.), (w[3], 0.)])).unwrap();
            let pq = tensor_functional(&p, &q);
            let flip = swap_map(&pq.algebra, 0, 1).unwrap();
            let pulled = flip.inverse().pullback(&pq).unwrap();
            prop_assert!(pulled.is_positive());
        }

        #[test]
        fn gram_positivity_matches_density(h in arb_vec(9), shift in -3.0..3.0f64) {
            let m3 = matrix_algebra(3);
            let tr = TraceFunctional::ambient(&m3, 1.0, "Tr").unwrap();
            let mut rho = m3.realize(&h);
            rho = linalg::hermitian_part(&rho) + CMat::identity(3, 3) * c(shift, 0.0);
            let (coords, _) = m3.coords_of(&rho.transpose());
            let phi = LinearFunctional::new(&m3, coords).unwrap();
            // φ(x) = Tr(ρ x) has values Tr(ρ e_ij) = ρ_ji.
            let dens = density_from_functional(&phi, &tr).unwrap().element.realize();
            prop_assert!(linalg::max_abs(&(dens.clone() - rho)) < 1e-10);
            let gram_psd = phi.is_positive();
            let dens_psd = linalg::psd_report(&dens, EPS_PSD).is_psd;
            prop_assert_eq!(gram_psd, dens_psd);
        }
    }
}
