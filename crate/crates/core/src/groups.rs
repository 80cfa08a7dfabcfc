//! Finite groups, 2-cocycles, length functions and twisted group algebras.

use std::collections::VecDeque;

use crate::algebra::{build_algebra, opposite_algebra, Algebra, TraceFunctional};
use crate::channels::ChannelMap;
use crate::error::{Error, Result};
use crate::geometry::{Seminorm, SpectralTriple};
use crate::linalg::{self, c, CMat, CVec, SparseMat, C64, ONE};
use crate::{EPS_PSD, EPS_STRUCT};

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    pub name: String,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
    generators: Vec<usize>,
}

impl FiniteGroup {
    /// Validate a multiplication table (`table[g][h] = gh`).
    pub fn from_table(name: &str, table: Vec<Vec<usize>>, identity: usize) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        if table
            .iter()
            .any(|row| row.len() != n || row.iter().any(|&x| x >= n))
        {
            return Err(Error::InvalidGroup(format!(
                "table must be {n}x{n} with entries below {n}"
            )));
        }
        if identity >= n {
            return Err(Error::InvalidGroup(format!(
                "identity index {identity} out of range"
            )));
        }
        for g in 0..n {
            if table[identity][g] != g || table[g][identity] != g {
                return Err(Error::InvalidGroup(format!(
                    "{identity} is not a two-sided identity at {g}"
                )));
            }
        }
        let mut inverse = vec![0; n];
        for g in 0..n {
            let inv = (0..n).find(|&h| table[g][h] == identity && table[h][g] == identity);
            inverse[g] =
                inv.ok_or_else(|| Error::InvalidGroup(format!("element {g} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    if table[table[a][b]][cc] != table[a][table[b][cc]] {
                        return Err(Error::InvalidGroup(format!(
                            "associativity fails at ({a}, {b}, {cc})"
                        )));
                    }
                }
            }
        }
        let generators = (0..n).filter(|&g| g != identity).collect();
        Ok(FiniteGroup {
            name: name.to_string(),
            table,
            identity,
            inverse,
            generators,
        })
    }

    /// Replace the generating set used for word lengths.
    pub fn with_generators(mut self, generators: Vec<usize>) -> Result<Self> {
        if generators.iter().any(|&g| g >= self.order()) {
            return Err(Error::InvalidGroup("generator index out of range".into()));
        }
        self.generators = generators;
        // Reject sets that do not generate.
        self.word_length()?;
        Ok(self)
    }

    pub fn cyclic(n: usize) -> Self {
        let table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        Self::from_table(&format!("Z{n}"), table, 0)
            .and_then(|g| g.with_generators(if n > 1 { vec![1] } else { vec![] }))
            .expect("cyclic group")
    }

    /// Dihedral group of order `2n`; element `k + n·e` is `r^k s^e`.
    pub fn dihedral(n: usize) -> Self {
        let order = 2 * n;
        let table = (0..order)
            .map(|a| {
                (0..order)
                    .map(|b| {
                        let (k1, e1) = (a % n, a / n);
                        let (k2, e2) = (b % n, b / n);
                        // s r^k = r^{-k} s
                        let k = if e1 == 0 {
                            (k1 + k2) % n
                        } else {
                            (k1 + n - k2) % n
                        };
                        k + n * ((e1 + e2) % 2)
                    })
                    .collect()
            })
            .collect();
        Self::from_table(&format!("D{n}"), table, 0)
            .and_then(|g| g.with_generators(vec![1 % order, n]))
            .expect("dihedral group")
    }

    /// Symmetric group on `n` letters, permutations in lexicographic order,
    /// generated by adjacent transpositions.
    pub fn symmetric(n: usize) -> Self {
        let mut perms: Vec<Vec<usize>> = Vec::new();
        let mut p: Vec<usize> = (0..n).collect();
        permutations(&mut p, 0, &mut perms);
        perms.sort();
        let index = |q: &Vec<usize>| perms.iter().position(|r| r == q).expect("closed");
        // (gh)(i) = g(h(i))
        let table = perms
            .iter()
            .map(|g| {
                perms
                    .iter()
                    .map(|h| index(&h.iter().map(|&i| g[i]).collect()))
                    .collect()
            })
            .collect();
        let gens = (0..n.saturating_sub(1))
            .map(|k| {
                let mut t: Vec<usize> = (0..n).collect();
                t.swap(k, k + 1);
                index(&t)
            })
            .collect();
        Self::from_table(&format!("S{n}"), table, 0)
            .and_then(|g| g.with_generators(gens))
            .expect("symmetric group")
    }

    /// `G × H` with index `g·|H| + h`; generators embedded from both sides.
    pub fn direct_product(g: &FiniteGroup, h: &FiniteGroup) -> Self {
        let (n, m) = (g.order(), h.order());
        let table = (0..n * m)
            .map(|a| {
                (0..n * m)
                    .map(|b| g.mul(a / m, b / m) * m + h.mul(a % m, b % m))
                    .collect()
            })
            .collect();
        let mut gens: Vec<usize> = g.generators.iter().map(|&x| x * m + h.identity).collect();
        gens.extend(h.generators.iter().map(|&y| g.identity * m + y));
        Self::from_table(
            &format!("{}x{}", g.name, h.name),
            table,
            g.identity * m + h.identity,
        )
        .and_then(|p| p.with_generators(gens))
        .expect("direct product")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    /// Word length with respect to the generators and their inverses.
    pub fn word_length(&self) -> Result<LengthFunction> {
        let n = self.order();
        let mut dist = vec![usize::MAX; n];
        dist[self.identity] = 0;
        let mut queue = VecDeque::from([self.identity]);
        let mut steps: Vec<usize> = self.generators.clone();
        steps.extend(self.generators.iter().map(|&g| self.inv(g)));
        while let Some(x) = queue.pop_front() {
            for &s in &steps {
                let y = self.mul(x, s);
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        if dist.contains(&usize::MAX) {
            return Err(Error::InvalidGroup(format!(
                "generators {:?} do not generate {}",
                self.generators, self.name
            )));
        }
        LengthFunction::new(self, dist.into_iter().map(|d| d as f64).collect())
    }
}

fn permutations(p: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == p.len() {
        out.push(p.clone());
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, out);
        p.swap(k, i);
    }
}

/// Normalized unit-modulus 2-cocycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Cocycle {
    table: Vec<Vec<C64>>,
}

impl Cocycle {
    pub fn new(group: &FiniteGroup, table: Vec<Vec<C64>>) -> Result<Self> {
        let n = group.order();
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidCocycle(format!("table must be {n}x{n}")));
        }
        let e = group.identity();
        for g in 0..n {
            for h in 0..n {
                if (table[g][h].norm() - 1.0).abs() > EPS_STRUCT {
                    return Err(Error::InvalidCocycle(format!("|σ({g}, {h})| ≠ 1")));
                }
            }
            if (table[g][e] - ONE).norm() > EPS_STRUCT || (table[e][g] - ONE).norm() > EPS_STRUCT {
                return Err(Error::InvalidCocycle(format!("σ is not normalized at {g}")));
            }
        }
        for g in 0..n {
            for h in 0..n {
                for k in 0..n {
                    let lhs = table[g][h] * table[group.mul(g, h)][k];
                    let rhs = table[g][group.mul(h, k)] * table[h][k];
                    if (lhs - rhs).norm() > EPS_STRUCT {
                        return Err(Error::InvalidCocycle(format!(
                            "cocycle identity fails at ({g}, {h}, {k})"
                        )));
                    }
                }
            }
        }
        Ok(Cocycle { table })
    }

    pub fn trivial(group: &FiniteGroup) -> Self {
        let n = group.order();
        Cocycle {
            table: vec![vec![ONE; n]; n],
        }
    }

    pub fn from_fn(group: &FiniteGroup, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let n = group.order();
        Self::new(
            group,
            (0..n).map(|g| (0..n).map(|h| f(g, h)).collect()).collect(),
        )
    }

    pub fn at(&self, g: usize, h: usize) -> C64 {
        self.table[g][h]
    }

    pub fn table(&self) -> &[Vec<C64>] {
        &self.table
    }
}

/// Nonnegative, symmetric, subadditive, zero at the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthFunction {
    pub values: Vec<f64>,
}

impl LengthFunction {
    pub fn new(group: &FiniteGroup, values: Vec<f64>) -> Result<Self> {
        let n = group.order();
        if values.len() != n {
            return Err(Error::InvalidLength(format!("expected {n} values")));
        }
        if values[group.identity()].abs() > EPS_STRUCT {
            return Err(Error::InvalidLength("l(e) must vanish".into()));
        }
        for g in 0..n {
            if !(values[g] >= 0.0) || !values[g].is_finite() {
                return Err(Error::InvalidLength(format!(
                    "l({g}) must be finite and nonnegative"
                )));
            }
            if (values[g] - values[group.inv(g)]).abs() > EPS_STRUCT {
                return Err(Error::InvalidLength(format!("l({g}) ≠ l({g}⁻¹)")));
            }
            for h in 0..n {
                if values[group.mul(g, h)] > values[g] + values[h] + EPS_STRUCT {
                    return Err(Error::InvalidLength(format!(
                        "l({}) = {} exceeds l({g}) + l({h}) = {}",
                        group.mul(g, h),
                        values[group.mul(g, h)],
                        values[g] + values[h]
                    )));
                }
            }
        }
        Ok(LengthFunction { values })
    }
}

/// Positive definite function on a group, `[φ(g_j⁻¹ g_i)] ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveDefiniteFunction {
    pub values: CVec,
}

impl PositiveDefiniteFunction {
    pub fn new(group: &FiniteGroup, values: CVec) -> Result<Self> {
        let n = group.order();
        if values.len() != n {
            return Err(Error::InvalidInput(format!("expected {n} values")));
        }
        let report = linalg::psd_report(&Self::kernel_matrix(group, &values), EPS_PSD);
        let herm = linalg::is_hermitian(&Self::kernel_matrix(group, &values), EPS_STRUCT);
        if !herm || !report.is_psd {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: report.min_eigenvalue,
            });
        }
        Ok(PositiveDefiniteFunction { values })
    }

    pub fn kernel_matrix(group: &FiniteGroup, values: &CVec) -> CMat {
        let n = group.order();
        CMat::from_fn(n, n, |i, j| values[group.mul(group.inv(j), i)])
    }

    pub fn is_normalized(&self, group: &FiniteGroup) -> bool {
        (self.values[group.identity()] - ONE).norm() < EPS_STRUCT
    }

    /// `φ°(g) = φ(g⁻¹)`.
    pub fn reversed(&self, group: &FiniteGroup) -> Self {
        PositiveDefiniteFunction {
            values: CVec::from_fn(group.order(), |g, _| self.values[group.inv(g)]),
        }
    }

    pub fn constant_one(group: &FiniteGroup) -> Self {
        PositiveDefiniteFunction {
            values: CVec::from_element(group.order(), ONE),
        }
    }
}

/// `C*_r(G, σ)` with its left and right twisted regular representations.
#[derive(Debug, Clone)]
pub struct TwistedGroupAlgebra {
    pub group: FiniteGroup,
    pub cocycle: Cocycle,
    /// Span of `λ^σ_g`, basis index `g`.
    pub algebra: Algebra,
    /// `ρ^σ_g`, the representation used for the opposite algebra.
    pub right: Vec<CMat>,
}

impl TwistedGroupAlgebra {
    pub fn new(group: &FiniteGroup, cocycle: &Cocycle) -> Result<Self> {
        let n = group.order();
        if cocycle.table.len() != n {
            return Err(Error::InvalidCocycle(
                "cocycle does not match the group order".into(),
            ));
        }
        // (λ_g)_{x,y} = σ(g,y)[x = gy],  (ρ_g)_{x,y} = σ(y,g)[x = yg]
        let left: Vec<CMat> = (0..n)
            .map(|g| {
                let mut m = CMat::zeros(n, n);
                for y in 0..n {
                    m[(group.mul(g, y), y)] = cocycle.at(g, y);
                }
                m
            })
            .collect();
        let right = (0..n)
            .map(|g| {
                let mut m = CMat::zeros(n, n);
                for y in 0..n {
                    m[(group.mul(y, g), y)] = cocycle.at(y, g);
                }
                m
            })
            .collect();
        let trivial = cocycle
            .table
            .iter()
            .flatten()
            .all(|z| (*z - ONE).norm() < EPS_STRUCT);
        let name = if trivial {
            group.name.clone()
        } else {
            format!("{}_σ", group.name)
        };
        let algebra = build_algebra(&format!("C*({name})"), n, left)?;
        Ok(TwistedGroupAlgebra {
            group: group.clone(),
            cocycle: cocycle.clone(),
            algebra,
            right,
        })
    }

    pub fn untwisted(group: &FiniteGroup) -> Self {
        Self::new(group, &Cocycle::trivial(group)).expect("regular representation")
    }

    pub fn left(&self) -> &[CMat] {
        self.algebra.basis()
    }

    pub fn opposite_algebra(&self) -> Algebra {
        opposite_algebra(&self.algebra)
    }

    /// `τ_σ`: 1 on `λ_e`, 0 elsewhere.
    pub fn canonical_trace(&self) -> TraceFunctional {
        let mut values = CVec::zeros(self.group.order());
        values[self.group.identity()] = ONE;
        let f = crate::algebra::LinearFunctional {
            algebra: self.algebra.clone(),
            values,
        };
        TraceFunctional::new("tau", f).expect("canonical trace is a faithful trace")
    }

    /// Multiplier `λ_g ↦ φ(g) λ_g`.
    pub fn multiplier(&self, phi: &PositiveDefiniteFunction) -> Result<ChannelMap> {
        if phi.values.len() != self.group.order() {
            return Err(Error::DimensionMismatch(
                "function does not match the group order".into(),
            ));
        }
        ChannelMap::new(
            &self.algebra,
            &self.algebra,
            CMat::from_diagonal(&phi.values),
        )
    }

    /// Check a function and build its multiplier.
    pub fn multiplier_from_values(&self, values: CVec) -> Result<ChannelMap> {
        let phi = PositiveDefiniteFunction::new(&self.group, values)?;
        self.multiplier(&phi)
    }

    /// Length Dirac operator `δ_g ↦ l(g) δ_g` with the left representation.
    pub fn length_triple(&self, l: &LengthFunction) -> Result<SpectralTriple> {
        let dirac = self.length_dirac(l)?;
        SpectralTriple::new(&self.algebra, self.left().to_vec(), dirac, None)
    }

    /// The same Dirac operator with the right representation, over the opposite algebra.
    pub fn length_triple_op(&self, l: &LengthFunction) -> Result<SpectralTriple> {
        let dirac = self.length_dirac(l)?;
        SpectralTriple::new(&self.opposite_algebra(), self.right.clone(), dirac, None)
    }

    fn length_dirac(&self, l: &LengthFunction) -> Result<CMat> {
        let l = LengthFunction::new(&self.group, l.values.clone())?;
        Ok(CMat::from_diagonal(&CVec::from_iterator(
            l.values.len(),
            l.values.iter().map(|&v| c(v, 0.0)),
        )))
    }
}

/// Result of sampling `L(M_φ(x)) ≤ L(x)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ContractionReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `L(M_φ x) / L(x)` over samples with `L(x) > 0`.
    pub max_ratio: f64,
}

pub fn multiplier_contraction_check(
    multiplier: &ChannelMap,
    seminorm: &Seminorm,
    samples: &[CVec],
) -> ContractionReport {
    let mut report = ContractionReport {
        samples: samples.len(),
        violations: 0,
        max_ratio: 0.0,
    };
    for x in samples {
        let before = seminorm.eval_coords(x);
        let after = seminorm.eval_coords(&multiplier.apply(x));
        if after > before * (1.0 + EPS_STRUCT) + EPS_STRUCT {
            report.violations += 1;
        }
        if before > EPS_STRUCT {
            report.max_ratio = report.max_ratio.max(after / before);
        }
    }
    report
}

/// Sparse copy of a matrix list, used by callers that assemble triples by hand.
pub fn sparse_list(ms: &[CMat]) -> Vec<SparseMat> {
    ms.iter().map(|m| SparseMat::from_dense(m, 0.0)).collect()
}

/// The Klein four-group `Z2 × Z2` with the cocycle `(-1)^{a_2 b_1}`.
pub fn klein_twisted() -> (FiniteGroup, Cocycle) {
    let g = FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2));
    let sigma = Cocycle::from_fn(&g, |a, b| {
        let (a2, b1) = (a % 2, b / 2);
        if a2 * b1 == 1 {
            -ONE
        } else {
            ONE
        }
    })
    .expect("sign cocycle");
    (g, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{compose, is_completely_positive, is_unital, trace_adjoint};
    use crate::linalg::ZERO;
    use proptest::prelude::*;

    #[test]
    fn z2_regular_representation() {
        let a = TwistedGroupAlgebra::untwisted(&FiniteGroup::cyclic(2));
        let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert_eq!(a.left()[1], x);
        assert_eq!(a.algebra.unit(), &CVec::from_vec(vec![ONE, ZERO]));
    }

    #[test]
    fn klein_generators_anticommute() {
        let (g, s) = klein_twisted();
        let a = TwistedGroupAlgebra::new(&g, &s).unwrap();
        let (x, y) = (&a.left()[2], &a.left()[1]);
        assert!(linalg::max_abs(&(x * y + y * x)) < 1e-14);
    }

    #[test]
    fn regular_laws_over_all_pairs() {
        for (g, s) in [
            (FiniteGroup::symmetric(3), None),
            (FiniteGroup::cyclic(4), None),
            (klein_twisted().0, Some(klein_twisted().1)),
        ] {
            let s = s.unwrap_or_else(|| Cocycle::trivial(&g));
            let a = TwistedGroupAlgebra::new(&g, &s).unwrap();
            let n = g.order();
            for x in 0..n {
                for y in 0..n {
                    let lhs = &a.left()[x] * &a.left()[y];
                    let rhs = &a.left()[g.mul(x, y)] * s.at(x, y);
                    assert!(linalg::max_abs(&(lhs - rhs)) < 1e-12);
                    // right representation is an anti-homomorphism
                    let lhs = &a.right[x] * &a.right[y];
                    let rhs = &a.right[g.mul(y, x)] * s.at(y, x);
                    assert!(linalg::max_abs(&(lhs - rhs)) < 1e-12);
                    assert!(
                        linalg::max_abs(&linalg::commutator(&a.left()[x], &a.right[y])) < 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn canonical_trace_properties() {
        let a = TwistedGroupAlgebra::untwisted(&FiniteGroup::symmetric(3));
        let tau = a.canonical_trace();
        assert!(tau.is_faithful());
        let gram = tau.functional.gns_gram();
        assert!(linalg::max_abs(&(gram - CMat::identity(6, 6))) < 1e-12);
        let amb = a.algebra.ambient_traces() / c(6.0, 0.0);
        assert!((amb - tau.values()).norm() < 1e-12);
    }

    #[test]
    fn length_functions() {
        let z4 = FiniteGroup::cyclic(4);
        let l = z4.word_length().unwrap();
        assert_eq!(l.values, vec![0., 1., 2., 1.]);
        assert!(matches!(
            LengthFunction::new(&z4, vec![0., 1., 3., 1.]),
            Err(Error::InvalidLength(_))
        ));
        let s3 = FiniteGroup::symmetric(3);
        let l = s3.word_length().unwrap();
        assert_eq!(l.values.iter().filter(|&&v| v == 1.0).count(), 2);
        assert_eq!(l.values.iter().cloned().fold(0.0, f64::max), 3.0);
    }

    #[test]
    fn z2_length_triple() {
        let z2 = FiniteGroup::cyclic(2);
        let a = TwistedGroupAlgebra::untwisted(&z2);
        let t = a.length_triple(&z2.word_length().unwrap()).unwrap();
        assert!((t.lipschitz(&CVec::from_vec(vec![ZERO, ONE])) - 1.0).abs() < 1e-12);
        let zero = LengthFunction::new(&z2, vec![0., 0.]).unwrap();
        let t0 = a.length_triple(&zero).unwrap();
        assert_eq!(t0.lipschitz(&CVec::from_vec(vec![ONE, ONE])), 0.0);
        a.length_triple_op(&z2.word_length().unwrap()).unwrap();
    }

    #[test]
    fn multiplier_examples() {
        let z2 = FiniteGroup::cyclic(2);
        let a = TwistedGroupAlgebra::untwisted(&z2);
        match a.multiplier_from_values(CVec::from_vec(vec![ONE, c(1.5, 0.)])) {
            Err(Error::NotPositiveDefinite { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.5).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        let m = a
            .multiplier_from_values(CVec::from_vec(vec![ONE, c(-0.4, 0.)]))
            .unwrap();
        let tau = a.canonical_trace();
        assert!(is_completely_positive(&m, &tau).unwrap().is_cp);
        assert!(is_unital(&m));
        let adj = trace_adjoint(&m, &tau, &tau).unwrap();
        assert!(linalg::max_abs(&(adj.matrix - &m.matrix)) < 1e-14);
        let id = a
            .multiplier(&PositiveDefiniteFunction::constant_one(&z2))
            .unwrap();
        assert_eq!(id.matrix, CMat::identity(2, 2));
    }

    #[test]
    fn s3_multiplier_adjoint_is_reversed_function() {
        let s3 = FiniteGroup::symmetric(3);
        let a = TwistedGroupAlgebra::untwisted(&s3);
        // φ(g) = ⟨ξ, λ_g ξ⟩ for a fixed complex vector
        let xi = CVec::from_fn(6, |k, _| c(1.0 + k as f64, 0.5 * k as f64 - 1.0));
        let xi = &xi / c(xi.norm(), 0.0);
        let vals = CVec::from_fn(6, |g, _| (xi.adjoint() * &a.left()[g] * &xi)[(0, 0)]);
        let phi = PositiveDefiniteFunction::new(&s3, vals).unwrap();
        let m = a.multiplier(&phi).unwrap();
        let tau = a.canonical_trace();
        let adj = trace_adjoint(&m, &tau, &tau).unwrap();
        let expected = a.multiplier(&phi.reversed(&s3)).unwrap();
        assert!(linalg::max_abs(&(adj.matrix - expected.matrix)) < 1e-12);
        let sq = compose(&m, &m).unwrap();
        let prod = CMat::from_diagonal(&phi.values.component_mul(&phi.values));
        assert!(linalg::max_abs(&(sq.matrix - prod)) < 1e-14);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(FiniteGroup::from_table("bad", vec![vec![0, 1], vec![1, 1]], 0).is_err());
        let z2 = FiniteGroup::cyclic(2);
        assert!(Cocycle::new(&z2, vec![vec![ONE, ONE], vec![ONE, c(0.0, 1.0)]]).is_ok());
        assert!(matches!(
            Cocycle::new(&z2, vec![vec![ONE, ONE], vec![ONE, c(2.0, 0.0)]]),
            Err(Error::InvalidCocycle(_))
        ));
        assert!(matches!(
            Cocycle::new(&z2, vec![vec![ONE, -ONE], vec![ONE, ONE]]),
            Err(Error::InvalidCocycle(_))
        ));
    }

    proptest! {
        #[test]
        fn pd_set_is_convex_and_reversible(t in -1.0..1.0f64, s in -1.0..1.0f64, w in 0.0..1.0f64) {
            let z3 = FiniteGroup::cyclic(3);
            let mk = |a: f64| {
                let xi = CVec::from_vec(vec![c(1.0, 0.), c(a, 0.3), c(0.2, -a)]);
                let xi = &xi / c(xi.norm(), 0.0);
                let lam = TwistedGroupAlgebra::untwisted(&z3);
                CVec::from_fn(3, |g, _| (xi.adjoint() * &lam.left()[g] * &xi)[(0, 0)])
            };
            let (p, q) = (mk(t), mk(s));
            let mid = &p * c(w, 0.) + &q * c(1.0 - w, 0.);
            let phi = PositiveDefiniteFunction::new(&z3, mid).unwrap();
            prop_assert!(phi.is_normalized(&z3));
            let rev = phi.reversed(&z3);
            prop_assert!(PositiveDefiniteFunction::new(&z3, rev.values.clone()).is_ok());
            prop_assert!(rev.is_normalized(&z3));
        }
    }
}
