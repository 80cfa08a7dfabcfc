//! Spectral triples, their commutator seminorms and Kasparov products.

use std::fmt;

use crate::algebra::{
    check_same, opposite_algebra, tensor_algebra, Algebra, Element, FactorPermutation,
};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, RMat, SparseMat, C64, I, ONE, ZERO};
use crate::EPS_STRUCT;

/// A finite-dimensional spectral triple `(A, H, D)` with optional grading.
///
/// Representation, Dirac operator and grading are stored sparsely since
/// product triples are Kronecker-structured.
#[derive(Clone)]
pub struct SpectralTriple {
    pub algebra: Algebra,
    pub hilbert_dim: usize,
    pub rep: Vec<SparseMat>,
    pub dirac: SparseMat,
    pub grading: Option<SparseMat>,
}

impl fmt::Debug for SpectralTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralTriple")
            .field("algebra", &self.algebra.name())
            .field("hilbert_dim", &self.hilbert_dim)
            .field("even", &self.grading.is_some())
            .finish()
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidTriple(msg.into())
}

/// Largest entry of `Σ coeff_k · m_k` minus `target`, row by row.
fn residual_of_combination(target: &SparseMat, terms: &[(C64, &SparseMat)]) -> f64 {
    let mut all: Vec<(C64, &SparseMat)> = terms.to_vec();
    all.push((-ONE, target));
    SparseMat::combine(target.nrows, target.ncols, &all).max_abs()
}

impl SpectralTriple {
    pub fn new(
        algebra: &Algebra,
        rep: Vec<CMat>,
        dirac: CMat,
        grading: Option<CMat>,
    ) -> Result<Self> {
        let sparse = rep.iter().map(|m| SparseMat::from_dense(m, 0.0)).collect();
        Self::from_sparse(
            algebra,
            sparse,
            SparseMat::from_dense(&dirac, 0.0),
            grading.map(|g| SparseMat::from_dense(&g, 0.0)),
        )
    }

    pub fn from_sparse(
        algebra: &Algebra,
        rep: Vec<SparseMat>,
        dirac: SparseMat,
        grading: Option<SparseMat>,
    ) -> Result<Self> {
        let t = SpectralTriple {
            algebra: algebra.clone(),
            hilbert_dim: dirac.nrows,
            rep,
            dirac,
            grading,
        };
        t.validate()?;
        Ok(t)
    }

    pub(crate) fn new_unchecked(
        algebra: &Algebra,
        rep: Vec<SparseMat>,
        dirac: SparseMat,
        grading: Option<SparseMat>,
    ) -> Self {
        SpectralTriple {
            algebra: algebra.clone(),
            hilbert_dim: dirac.nrows,
            rep,
            dirac,
            grading,
        }
    }

    /// Check every structural invariant: unital faithful *-representation,
    /// Hermitian Dirac operator, and grading axioms when a grading is present.
    pub fn validate(&self) -> Result<()> {
        let alg = &self.algebra;
        let h = self.hilbert_dim;
        let d = alg.dim();
        if !self.dirac.is_square() || h == 0 {
            return Err(invalid("Dirac operator must be a nonempty square matrix"));
        }
        if self.rep.len() != d {
            return Err(invalid(format!(
                "{} representation matrices for an algebra of dimension {d}",
                self.rep.len()
            )));
        }
        if self.rep.iter().any(|r| r.nrows != h || r.ncols != h) {
            return Err(invalid(format!("representation matrices must be {h}x{h}")));
        }
        if !self.dirac.is_hermitian(EPS_STRUCT) {
            return Err(invalid("Dirac operator is not Hermitian"));
        }
        let scale = self.rep.iter().fold(1.0_f64, |a, r| a.max(r.max_abs()));
        let tol = EPS_STRUCT * scale * scale;
        for i in 0..d {
            for j in 0..d {
                let prod = self.rep[i].mul_sparse(&self.rep[j]);
                let terms: Vec<(C64, &SparseMat)> = alg
                    .product(i, j)
                    .iter()
                    .map(|&(k, coeff)| (coeff, &self.rep[k]))
                    .collect();
                if residual_of_combination(&prod, &terms) > tol {
                    return Err(invalid(format!(
                        "representation breaks the product of basis elements {i} and {j}"
                    )));
                }
            }
            let adj = self.rep[i].adjoint();
            let terms: Vec<(C64, &SparseMat)> = alg
                .adjoint_of(i)
                .iter()
                .map(|&(k, coeff)| (coeff, &self.rep[k]))
                .collect();
            if residual_of_combination(&adj, &terms) > EPS_STRUCT * scale {
                return Err(invalid(format!(
                    "representation breaks the adjoint of basis element {i}"
                )));
            }
        }
        let unit_terms: Vec<(C64, &SparseMat)> = alg
            .unit()
            .iter()
            .enumerate()
            .map(|(k, &u)| (u, &self.rep[k]))
            .collect();
        if residual_of_combination(&SparseMat::identity(h), &unit_terms) > EPS_STRUCT * scale {
            return Err(invalid("representation is not unital"));
        }
        let gram = self.rep_gram();
        let eig = linalg::eigvalsh(&gram);
        if eig[0] <= EPS_STRUCT * eig[d - 1] {
            return Err(invalid("representation is not faithful"));
        }
        if let Some(g) = &self.grading {
            if g.nrows != h || g.ncols != h {
                return Err(invalid("grading has the wrong size"));
            }
            if !g.is_hermitian(EPS_STRUCT) {
                return Err(invalid("grading is not Hermitian"));
            }
            if residual_of_combination(&g.mul_sparse(g), &[(ONE, &SparseMat::identity(h))])
                > EPS_STRUCT
            {
                return Err(invalid("grading does not square to the identity"));
            }
            for (i, r) in self.rep.iter().enumerate() {
                if g.commutator(r).max_abs() > EPS_STRUCT * scale {
                    return Err(invalid(format!(
                        "grading does not commute with basis element {i}"
                    )));
                }
            }
            let gd = g.mul_sparse(&self.dirac);
            let dg = self.dirac.mul_sparse(g);
            let anti = SparseMat::combine(h, h, &[(ONE, &gd), (ONE, &dg)]);
            if anti.max_abs() > EPS_STRUCT * self.dirac.max_abs().max(1.0) {
                return Err(invalid(
                    "grading does not anticommute with the Dirac operator",
                ));
            }
        }
        Ok(())
    }

    /// Hilbert-Schmidt Gram matrix of the representation, accumulated by
    /// matrix position so that sparse representations stay cheap.
    fn rep_gram(&self) -> CMat {
        let d = self.rep.len();
        let h = self.hilbert_dim;
        let mut buckets: Vec<Vec<(usize, C64)>> = vec![Vec::new(); h * h];
        for (k, r) in self.rep.iter().enumerate() {
            for (i, j, v) in r.entries() {
                buckets[i * h + j].push((k, v));
            }
        }
        let mut g = CMat::zeros(d, d);
        for bucket in &buckets {
            for &(a, va) in bucket {
                for &(b, vb) in bucket {
                    g[(a, b)] += va.conj() * vb;
                }
            }
        }
        g
    }

    pub fn is_even(&self) -> bool {
        self.grading.is_some()
    }

    /// `π(x)` for a coordinate vector.
    pub fn represent(&self, x: &CVec) -> SparseMat {
        let terms: Vec<(C64, &SparseMat)> = x.iter().copied().zip(self.rep.iter()).collect();
        SparseMat::combine(self.hilbert_dim, self.hilbert_dim, &terms)
    }

    pub fn dirac_dense(&self) -> CMat {
        self.dirac.to_dense()
    }

    pub fn grading_dense(&self) -> Option<CMat> {
        self.grading.as_ref().map(SparseMat::to_dense)
    }

    /// `‖[D, π(x)]‖`.
    pub fn lipschitz(&self, x: &CVec) -> f64 {
        linalg::spectral_norm(&self.dirac.commutator(&self.represent(x)).to_dense())
    }
}

fn ambient_sparse(alg: &Algebra) -> Vec<SparseMat> {
    alg.basis()
        .iter()
        .map(|b| SparseMat::from_dense(b, 0.0))
        .collect()
}

/// Triple on `H = C^n ⊗ C^N` with `π(a) = a ⊗ 1_N` and `D = Σ L_i ⊗ e_ii`,
/// using the ambient realization of `alg` (transposed for opposite algebras).
pub fn ambient_triple(alg: &Algebra, ls: &[CMat]) -> Result<SpectralTriple> {
    let n = alg.ambient_dim();
    let big_n = ls.len();
    if big_n == 0 {
        return Err(invalid("need at least one operator L_i"));
    }
    if ls.iter().any(|l| l.nrows() != n || l.ncols() != n) {
        return Err(invalid(format!("each L_i must be {n}x{n}")));
    }
    let id = SparseMat::identity(big_n);
    let rep = ambient_sparse(alg).iter().map(|b| b.kron(&id)).collect();
    let mut dirac = CMat::zeros(n * big_n, n * big_n);
    for (i, l) in ls.iter().enumerate() {
        dirac += linalg::kron(l, &linalg::matrix_unit(big_n, i, i));
    }
    SpectralTriple::from_sparse(alg, rep, SparseMat::from_dense(&dirac, 0.0), None)
}

/// Finite metric space on `n` points: one `C^2` summand per pair `p < q`
/// carrying `f ↦ diag(f(p), f(q))` and `D = offdiag(1/d_pq)`, so that
/// `L(f) = max |f(p) - f(q)| / d_pq`.
pub fn metric_space_triple(alg: &Algebra, dist: &RMat) -> Result<SpectralTriple> {
    let n = dist.nrows();
    if alg.dim() != n || alg.ambient_dim() != n || alg.is_tensor() {
        return Err(invalid(
            "metric space triple needs the diagonal algebra on the same points",
        ));
    }
    let mut pairs = Vec::new();
    for p in 0..n {
        for q in (p + 1)..n {
            let d = dist[(p, q)];
            if !(d > 0.0) || (d - dist[(q, p)]).abs() > EPS_STRUCT {
                return Err(invalid(format!(
                    "distance between {p} and {q} must be positive and symmetric"
                )));
            }
            pairs.push((p, q, d));
        }
    }
    let h = 2 * pairs.len().max(1);
    let mut dirac = CMat::zeros(h, h);
    let mut rep = vec![CMat::zeros(h, h); n];
    // A single point still needs a Hilbert space; use C^2 with D = 0.
    if pairs.is_empty() {
        rep[0] = CMat::identity(2, 2);
    }
    for (k, &(p, q, d)) in pairs.iter().enumerate() {
        dirac[(2 * k, 2 * k + 1)] = c(1.0 / d, 0.0);
        dirac[(2 * k + 1, 2 * k)] = c(1.0 / d, 0.0);
        // basis element p of diag_n is the indicator of point p
        for (point, slot) in [(p, 2 * k), (q, 2 * k + 1)] {
            let idx = (0..n)
                .find(|&b| alg.basis()[b][(point, point)].norm() > 0.5)
                .unwrap_or(point);
            rep[idx][(slot, slot)] = ONE;
        }
    }
    SpectralTriple::new(alg, rep, dirac, None)
}

/// Even triple `(A, H ⊗ C^2, D ⊗ σ_x, 1 ⊗ σ_z)` built from any triple.
pub fn doubled_even(t: &SpectralTriple) -> SpectralTriple {
    let sx = SparseMat::from_dense(&CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]), 0.0);
    let sz = SparseMat::from_dense(&CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]), 0.0);
    let id2 = SparseMat::identity(2);
    SpectralTriple::new_unchecked(
        &t.algebra,
        t.rep.iter().map(|r| r.kron(&id2)).collect(),
        t.dirac.kron(&sx),
        Some(SparseMat::identity(t.hilbert_dim).kron(&sz)),
    )
}

/// Kasparov exterior product, parity read off the gradings.
pub fn kasparov_product(a: &SpectralTriple, b: &SpectralTriple) -> SpectralTriple {
    let ha = SparseMat::identity(a.hilbert_dim);
    let hb = SparseMat::identity(b.hilbert_dim);
    let algebra = tensor_algebra(&a.algebra, &b.algebra);
    let kron_rep = || -> Vec<SparseMat> {
        let mut out = Vec::with_capacity(a.rep.len() * b.rep.len());
        for ra in &a.rep {
            for rb in &b.rep {
                out.push(ra.kron(rb));
            }
        }
        out
    };
    let h = a.hilbert_dim * b.hilbert_dim;
    match (&a.grading, &b.grading) {
        (Some(ga), Some(gb)) => {
            let d1 = a.dirac.kron(&hb);
            let d2 = ga.kron(&b.dirac);
            let dirac = SparseMat::combine(h, h, &[(ONE, &d1), (ONE, &d2)]);
            SpectralTriple::new_unchecked(&algebra, kron_rep(), dirac, Some(ga.kron(gb)))
        }
        (None, None) => {
            let d1 = a.dirac.kron(&hb);
            let d2 = ha.kron(&b.dirac);
            let upper = SparseMat::combine(h, h, &[(ONE, &d1), (I, &d2)]);
            let lower = SparseMat::combine(h, h, &[(ONE, &d1), (-I, &d2)]);
            let e01 = SparseMat::from_dense(&linalg::matrix_unit(2, 0, 1), 0.0);
            let e10 = SparseMat::from_dense(&linalg::matrix_unit(2, 1, 0), 0.0);
            let dirac = SparseMat::combine(
                2 * h,
                2 * h,
                &[(ONE, &e01.kron(&upper)), (ONE, &e10.kron(&lower))],
            );
            let id2 = SparseMat::identity(2);
            let rep = kron_rep().iter().map(|r| id2.kron(r)).collect();
            let z =
                SparseMat::from_dense(&CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]), 0.0);
            SpectralTriple::new_unchecked(
                &algebra,
                rep,
                dirac,
                Some(z.kron(&SparseMat::identity(h))),
            )
        }
        (None, Some(gb)) => {
            let d1 = a.dirac.kron(gb);
            let d2 = ha.kron(&b.dirac);
            let dirac = SparseMat::combine(h, h, &[(ONE, &d1), (ONE, &d2)]);
            SpectralTriple::new_unchecked(&algebra, kron_rep(), dirac, None)
        }
        (Some(ga), None) => {
            let d1 = a.dirac.kron(&hb);
            let d2 = ga.kron(&b.dirac);
            let dirac = SparseMat::combine(h, h, &[(ONE, &d1), (ONE, &d2)]);
            SpectralTriple::new_unchecked(&algebra, kron_rep(), dirac, None)
        }
    }
}

/// Kasparov product with the parities stated by the caller.
pub fn kasparov_product_with_parity(
    a: &SpectralTriple,
    b: &SpectralTriple,
    a_even: bool,
    b_even: bool,
) -> Result<SpectralTriple> {
    for (t, even) in [(a, a_even), (b, b_even)] {
        match (even, t.is_even()) {
            (true, false) => return Err(Error::GradingMissing(t.algebra.name().to_string())),
            (false, true) => return Err(Error::GradingUnexpected(t.algebra.name().to_string())),
            _ => {}
        }
    }
    Ok(kasparov_product(a, b))
}

/// What a single seminorm term measures.
#[derive(Debug, Clone)]
pub enum TermKind {
    /// `‖[D, π(x)]‖`, with the grading kept when `D` has one.
    Commutator {
        dirac: SparseMat,
        grading: Option<SparseMat>,
    },
    /// `‖π(x)‖`.
    OperatorNorm,
}

#[derive(Debug, Clone)]
pub struct SeminormTerm {
    pub rep: Vec<SparseMat>,
    pub kind: TermKind,
}

impl SeminormTerm {
    pub fn dim(&self) -> usize {
        self.rep.first().map_or(0, |r| r.nrows)
    }

    /// The operator whose norm is this term's value at `x`.
    pub fn operator(&self, x: &CVec) -> SparseMat {
        let h = self.dim();
        let terms: Vec<(C64, &SparseMat)> = x.iter().copied().zip(self.rep.iter()).collect();
        let pi = SparseMat::combine(h, h, &terms);
        match &self.kind {
            TermKind::Commutator { dirac, .. } => dirac.commutator(&pi),
            TermKind::OperatorNorm => pi,
        }
    }

    pub fn eval(&self, x: &CVec) -> f64 {
        linalg::spectral_norm(&self.operator(x).to_dense())
    }

    pub fn grading(&self) -> Option<&SparseMat> {
        match &self.kind {
            TermKind::Commutator { grading, .. } => grading.as_ref(),
            TermKind::OperatorNorm => None,
        }
    }
}

/// A seminorm `L(x) = Σ_k ‖T_k(x)‖` on an algebra. Every construction
/// (commutator, tensor, opposite, pullback, sum) reduces to this form.
#[derive(Debug, Clone)]
pub struct Seminorm {
    pub algebra: Algebra,
    pub terms: Vec<SeminormTerm>,
    pub label: String,
}

impl Seminorm {
    pub fn commutator(t: &SpectralTriple) -> Self {
        Seminorm {
            algebra: t.algebra.clone(),
            terms: vec![SeminormTerm {
                rep: t.rep.clone(),
                kind: TermKind::Commutator {
                    dirac: t.dirac.clone(),
                    grading: t.grading.clone(),
                },
            }],
            label: format!("L[{}]", t.algebra.name()),
        }
    }

    /// Operator norm in the ambient realization.
    pub fn operator_norm(alg: &Algebra) -> Self {
        Seminorm {
            algebra: alg.clone(),
            terms: vec![SeminormTerm {
                rep: ambient_sparse(alg),
                kind: TermKind::OperatorNorm,
            }],
            label: format!("norm[{}]", alg.name()),
        }
    }

    pub fn eval_coords(&self, x: &CVec) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn eval(&self, x: &Element) -> Result<f64> {
        check_same(&self.algebra, &x.algebra)?;
        Ok(self.eval_coords(&x.coords))
    }

    fn single_term(&self) -> Result<&SeminormTerm> {
        match self.terms.as_slice() {
            [t] => Ok(t),
            _ => Err(Error::SeminormNotCommutatorForm(format!(
                "`{}` has {} terms; tensor lifting needs exactly one",
                self.label,
                self.terms.len()
            ))),
        }
    }

    /// `L ⊗ 1` on `A ⊗ B`: the term becomes `[D ⊗ 1, ·]` on `H ⊗ C^{N_B}`.
    pub fn left_tensor(&self, b: &Algebra) -> Result<Seminorm> {
        let t = self.single_term()?;
        let amb = ambient_sparse(b);
        let nb = SparseMat::identity(b.ambient_dim());
        let rep = t
            .rep
            .iter()
            .flat_map(|r| amb.iter().map(move |s| r.kron(s)))
            .collect();
        let kind = match &t.kind {
            TermKind::Commutator { dirac, grading } => TermKind::Commutator {
                dirac: dirac.kron(&nb),
                grading: grading.as_ref().map(|g| g.kron(&nb)),
            },
            TermKind::OperatorNorm => TermKind::OperatorNorm,
        };
        Ok(Seminorm {
            algebra: tensor_algebra(&self.algebra, b),
            terms: vec![SeminormTerm { rep, kind }],
            label: format!("({})⊗1", self.label),
        })
    }

    /// `1 ⊗ L` on `A ⊗ B`.
    pub fn right_tensor(&self, a: &Algebra) -> Result<Seminorm> {
        let t = self.single_term()?;
        let amb = ambient_sparse(a);
        let na = SparseMat::identity(a.ambient_dim());
        let rep = amb
            .iter()
            .flat_map(|s| t.rep.iter().map(move |r| s.kron(r)))
            .collect();
        let kind = match &t.kind {
            TermKind::Commutator { dirac, grading } => TermKind::Commutator {
                dirac: na.kron(dirac),
                grading: grading.as_ref().map(|g| na.kron(g)),
            },
            TermKind::OperatorNorm => TermKind::OperatorNorm,
        };
        Ok(Seminorm {
            algebra: tensor_algebra(a, &self.algebra),
            terms: vec![SeminormTerm { rep, kind }],
            label: format!("1⊗({})", self.label),
        })
    }

    /// Sum of two seminorms on the same algebra.
    pub fn sum(&self, other: &Seminorm) -> Result<Seminorm> {
        check_same(&self.algebra, &other.algebra)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Seminorm {
            algebra: self.algebra.clone(),
            terms,
            label: format!("{}+{}", self.label, other.label),
        })
    }

    /// `L_A ⊗ 1 + 1 ⊗ L_B`.
    pub fn sum_tensor(la: &Seminorm, lb: &Seminorm) -> Result<Seminorm> {
        la.left_tensor(&lb.algebra)?
            .sum(&lb.right_tensor(&la.algebra)?)
    }

    /// `L^op(a^op) = L(a)` on the opposite algebra.
    pub fn opposite(&self) -> Seminorm {
        Seminorm {
            algebra: opposite_algebra(&self.algebra),
            terms: self.terms.clone(),
            label: format!("({})^op", self.label),
        }
    }

    /// `L ∘ Σ` for a factor permutation landing in this seminorm's algebra.
    pub fn pullback_permutation(&self, p: &FactorPermutation) -> Result<Seminorm> {
        check_same(&self.algebra, &p.target)?;
        let terms = self
            .terms
            .iter()
            .map(|t| SeminormTerm {
                rep: p.map.iter().map(|&k| t.rep[k].clone()).collect(),
                kind: t.kind.clone(),
            })
            .collect();
        Ok(Seminorm {
            algebra: p.source.clone(),
            terms,
            label: format!("{}∘Σ", self.label),
        })
    }

    /// `L ∘ P` for a coordinate map `P` (`dim L.algebra × dim source`).
    pub fn pullback(&self, source: &Algebra, map: &CMat) -> Result<Seminorm> {
        if map.nrows() != self.algebra.dim() || map.ncols() != source.dim() {
            return Err(Error::DimensionMismatch(
                "pullback map has the wrong shape".into(),
            ));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let h = t.dim();
                let rep = (0..source.dim())
                    .map(|j| {
                        let parts: Vec<(C64, &SparseMat)> =
                            (0..map.nrows()).map(|i| (map[(i, j)], &t.rep[i])).collect();
                        SparseMat::combine(h, h, &parts)
                    })
                    .collect();
                SeminormTerm {
                    rep,
                    kind: t.kind.clone(),
                }
            })
            .collect();
        Ok(Seminorm {
            algebra: source.clone(),
            terms,
            label: format!("{}∘P", self.label),
        })
    }
}

/// Slice `(id ⊗ ψ)(x)` for `x` on `A ⊗ B` and values of `ψ` on `B`'s basis.
pub fn slice_right(x: &CVec, psi: &CVec) -> CVec {
    let db = psi.len();
    let da = x.len() / db;
    CVec::from_fn(da, |i, _| (0..db).map(|j| x[i * db + j] * psi[j]).sum())
}

/// Slice `(φ ⊗ id)(x)`.
pub fn slice_left(x: &CVec, phi: &CVec) -> CVec {
    let da = phi.len();
    let db = x.len() / da;
    CVec::from_fn(db, |j, _| (0..da).map(|i| x[i * db + j] * phi[i]).sum())
}

/// State-supremum form of `L_A ⊗ 1` over the supplied states of `B`: a
/// lower bound for the commutator evaluation.
pub fn left_tensor_state_bound(la: &Seminorm, x: &CVec, states: &[CVec]) -> f64 {
    states
        .iter()
        .map(|psi| la.eval_coords(&slice_right(x, psi)))
        .fold(0.0, f64::max)
}

/// State-supremum form of `1 ⊗ L_B`.
pub fn right_tensor_state_bound(lb: &Seminorm, x: &CVec, states: &[CVec]) -> f64 {
    states
        .iter()
        .map(|phi| lb.eval_coords(&slice_left(x, phi)))
        .fold(0.0, f64::max)
}

/// Outcome of the domination audit `(L_A ⊗ 1), (1 ⊗ L_B) ≤ L_{A×B}`.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct DominationReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen (negative when every sample has room).
    pub max_excess: f64,
}

pub fn seminorm_domination_check(
    ta: &SpectralTriple,
    tb: &SpectralTriple,
    samples: &[CVec],
) -> Result<DominationReport> {
    let product = Seminorm::commutator(&kasparov_product(ta, tb));
    let left = Seminorm::commutator(ta).left_tensor(&tb.algebra)?;
    let right = Seminorm::commutator(tb).right_tensor(&ta.algebra)?;
    let mut report = DominationReport {
        samples: samples.len(),
        violations: 0,
        max_excess: f64::NEG_INFINITY,
    };
    for x in samples {
        let rhs = product.eval_coords(x);
        for lhs in [left.eval_coords(x), right.eval_coords(x)] {
            let excess = lhs - rhs;
            report.max_excess = report.max_excess.max(excess);
            if excess > EPS_STRUCT * rhs.max(1.0) {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{diagonal_algebra, matrix_algebra, tensor_all, Element};
    use proptest::prelude::*;

    fn offdiag() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    fn two_point(d: f64) -> SpectralTriple {
        let d2 = diagonal_algebra(2);
        SpectralTriple::new(&d2, d2.basis().to_vec(), offdiag() * c(1.0 / d, 0.0), None).unwrap()
    }

    fn z2_algebra_triple() -> SpectralTriple {
        let lam = offdiag();
        let alg = crate::algebra::build_algebra("Z2", 2, vec![CMat::identity(2, 2), lam.clone()])
            .unwrap();
        let dirac = CMat::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
        SpectralTriple::new(&alg, vec![CMat::identity(2, 2), lam], dirac, None).unwrap()
    }

    fn toy_even() -> SpectralTriple {
        let d2 = diagonal_algebra(2);
        let z = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        // diag2 commutes with σ_z, and σ_x anticommutes with it.
        SpectralTriple::new(&d2, d2.basis().to_vec(), offdiag(), Some(z)).unwrap()
    }

    #[test]
    fn two_point_seminorm_is_difference() {
        let t = two_point(1.0);
        let x = CVec::from_vec(vec![c(0.3, 0.), c(-1.2, 0.)]);
        assert!((t.lipschitz(&x) - 1.5).abs() < 1e-12);
        assert!(t.lipschitz(t.algebra.unit()) < 1e-14);
    }

    #[test]
    fn z2_length_seminorm_of_generator() {
        let t = z2_algebra_triple();
        assert!((t.lipschitz(&CVec::from_vec(vec![ZERO, ONE])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn even_even_dirac_squares_to_two() {
        let p = kasparov_product(&toy_even(), &toy_even());
        p.validate().unwrap();
        let eig = linalg::eigvalsh(&p.dirac_dense());
        for (k, e) in eig.iter().enumerate() {
            let expect = if k < 2 { -2f64.sqrt() } else { 2f64.sqrt() };
            assert!((e - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_odd_length_product_value() {
        let t = z2_algebra_triple();
        let p = kasparov_product(&t, &t);
        p.validate().unwrap();
        let mut x = CVec::zeros(4);
        x[3] = ONE;
        assert!((p.lipschitz(&x) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn all_parities_validate_and_anticommute() {
        let odd = z2_algebra_triple();
        let even = doubled_even(&two_point(0.7));
        for (a, b) in [(&odd, &odd), (&odd, &even), (&even, &odd), (&even, &even)] {
            let p = kasparov_product(a, b);
            p.validate().unwrap();
            if let Some(g) = p.grading_dense() {
                let d = p.dirac_dense();
                assert!(linalg::max_abs(&(&g * &d + &d * &g)) < 1e-12);
            }
        }
        assert!(matches!(
            kasparov_product_with_parity(&odd, &even, true, true),
            Err(Error::GradingMissing(_))
        ));
        assert!(matches!(
            kasparov_product_with_parity(&odd, &even, false, false),
            Err(Error::GradingUnexpected(_))
        ));
    }

    #[test]
    fn broken_triples_are_rejected() {
        let d2 = diagonal_algebra(2);
        let bad_d = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(SpectralTriple::new(&d2, d2.basis().to_vec(), bad_d, None).is_err());
        let swapped = vec![d2.basis()[0].clone(), d2.basis()[0].clone()];
        assert!(SpectralTriple::new(&d2, swapped, offdiag(), None).is_err());
        let z = CMat::identity(2, 2);
        assert!(SpectralTriple::new(&d2, d2.basis().to_vec(), offdiag(), Some(z)).is_err());
    }

    #[test]
    fn domination_on_unit_and_slices() {
        let ta = two_point(1.0);
        let tb = z2_algebra_triple();
        let unit = tensor_algebra(&ta.algebra, &tb.algebra).unit().clone();
        let r = seminorm_domination_check(&ta, &tb, &[unit]).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_excess.abs() < 1e-12);
        // 1 ⊗ b: left side equals L_B(b)
        let b = CVec::from_vec(vec![c(0.2, 0.), c(1.0, 0.)]);
        let x = linalg::kron(
            &CMat::from_column_slice(2, 1, ta.algebra.unit().as_slice()),
            &CMat::from_column_slice(2, 1, b.as_slice()),
        );
        let x = x.column(0).into_owned();
        let right = Seminorm::commutator(&tb).right_tensor(&ta.algebra).unwrap();
        assert!((right.eval_coords(&x) - tb.lipschitz(&b)).abs() < 1e-12);
        let prod = Seminorm::commutator(&kasparov_product(&ta, &tb));
        assert!(prod.eval_coords(&x) >= tb.lipschitz(&b) - 1e-12);
    }

    #[test]
    fn metric_space_triple_reproduces_distances() {
        let d3 = diagonal_algebra(3);
        let dist = RMat::from_row_slice(3, 3, &[0., 1., 2., 1., 0., 1., 2., 1., 0.]);
        let t = metric_space_triple(&d3, &dist).unwrap();
        let f = CVec::from_vec(vec![c(0., 0.), c(1., 0.), c(2., 0.)]);
        assert!((t.lipschitz(&f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn opposite_seminorm_matches() {
        let m2 = matrix_algebra(2);
        let t =
            ambient_triple(&m2, &[CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])]).unwrap();
        let l = Seminorm::commutator(&t);
        let lop = l.opposite();
        let x = CVec::from_vec(vec![c(1., 0.), c(0.5, 0.2), c(-0.3, 1.), c(2., 0.)]);
        assert_eq!(l.eval_coords(&x), lop.eval_coords(&x));
        let e = Element::new(&m2, x).unwrap();
        assert!(lop.eval(&e).is_err());
    }

    #[test]
    fn multi_term_tensor_is_rejected() {
        let l = Seminorm::commutator(&two_point(1.0));
        let s = l.sum(&l).unwrap();
        assert!(matches!(
            s.left_tensor(&diagonal_algebra(2)),
            Err(Error::SeminormNotCommutatorForm(_))
        ));
    }

    #[test]
    fn kernel_identity_for_amplified_products() {
        // L_{(∂2×∂2)×(∂A×∂B)}(1 ⊗ 1^op ⊗ x) = L_{∂A×∂B}(x)
        let m2 = matrix_algebra(2);
        let l2 = [CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])];
        let t2 = ambient_triple(&m2, &l2).unwrap();
        let t2op = ambient_triple(&opposite_algebra(&m2), &l2).unwrap();
        let inner = kasparov_product(&t2, &t2op);
        let base = kasparov_product(&z2_algebra_triple(), &two_point(0.5));
        let big = kasparov_product(&inner, &base);
        let x = CVec::from_vec(vec![c(0.3, 0.1), c(-1., 0.), c(0.5, 0.5), c(2., -1.)]);
        let unit = inner.algebra.unit();
        let lifted = CVec::from_fn(unit.len() * 4, |k, _| unit[k / 4] * x[k % 4]);
        let lhs = big.lipschitz(&lifted);
        assert!((lhs - base.lipschitz(&x)).abs() < 1e-10);
        assert_eq!(tensor_all(&[m2.clone(), m2]).dim(), 16);
    }

    proptest! {
        #[test]
        fn seminorm_axioms(
            a in proptest::collection::vec(-1.0..1.0f64, 8),
            b in proptest::collection::vec(-1.0..1.0f64, 8),
            s in -3.0..3.0f64,
        ) {
            let t = kasparov_product(&z2_algebra_triple(), &two_point(0.8));
            let l = Seminorm::commutator(&t);
            let x = CVec::from_fn(4, |k, _| c(a[k], a[k + 4]));
            let y = CVec::from_fn(4, |k, _| c(b[k], b[k + 4]));
            let (lx, ly) = (l.eval_coords(&x), l.eval_coords(&y));
            prop_assert!(l.eval_coords(&(&x + &y)) <= lx + ly + 1e-9 * (1.0 + lx + ly));
            let alpha = c(s, 0.5 * s);
            prop_assert!((l.eval_coords(&(&x * alpha)) - alpha.norm() * lx).abs() < 1e-9 * (1.0 + lx));
            prop_assert!((l.eval_coords(&t.algebra.adjoint(&x)) - lx).abs() < 1e-9 * (1.0 + lx));
            prop_assert!(l.eval_coords(t.algebra.unit()) < 1e-12);
        }
    }
}
