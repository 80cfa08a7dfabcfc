//! Linear maps between concrete algebras and their Choi-Jamiolkowski data.

use crate::algebra::{
    check_same, matrix_algebra, opposite_algebra, tensor_algebra, Algebra, Element,
    LinearFunctional, TraceFunctional,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, ONE};
use crate::{EPS_PSD, EPS_STRUCT};

/// A linear map stored by its action on coordinates (`d_target × d_source`).
#[derive(Debug, Clone)]
pub struct ChannelMap {
    pub source: Algebra,
    pub target: Algebra,
    pub matrix: CMat,
}

impl ChannelMap {
    pub fn new(source: &Algebra, target: &Algebra, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != target.dim() || matrix.ncols() != source.dim() {
            return Err(Error::DimensionMismatch(format!(
                "coordinate matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                target.dim(),
                source.dim()
            )));
        }
        Ok(ChannelMap {
            source: source.clone(),
            target: target.clone(),
            matrix,
        })
    }

    pub fn identity(alg: &Algebra) -> Self {
        ChannelMap {
            source: alg.clone(),
            target: alg.clone(),
            matrix: CMat::identity(alg.dim(), alg.dim()),
        }
    }

    pub fn zero(source: &Algebra, target: &Algebra) -> Self {
        ChannelMap {
            source: source.clone(),
            target: target.clone(),
            matrix: CMat::zeros(target.dim(), source.dim()),
        }
    }

    /// Tabulate a map given on ambient matrices; images must lie in the target span.
    pub fn from_ambient_fn(
        source: &Algebra,
        target: &Algebra,
        f: impl Fn(&CMat) -> CMat,
    ) -> Result<Self> {
        let mut matrix = CMat::zeros(target.dim(), source.dim());
        for (i, b) in source.basis().iter().enumerate() {
            let image = f(b);
            if image.nrows() != target.ambient_dim() || image.ncols() != target.ambient_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "image of basis element {i} has the wrong ambient size"
                )));
            }
            let (coords, residual) = target.coords_of(&image);
            if residual > EPS_STRUCT {
                return Err(Error::InvalidInput(format!(
                    "image of basis element {i} leaves `{}` (residual {residual:.3e})",
                    target.name()
                )));
            }
            matrix.set_column(i, &coords);
        }
        Ok(ChannelMap {
            source: source.clone(),
            target: target.clone(),
            matrix,
        })
    }

    /// `a ↦ Σ K a K*` between ambient realizations.
    pub fn from_kraus(source: &Algebra, target: &Algebra, kraus: &[CMat]) -> Result<Self> {
        Self::from_ambient_fn(source, target, |a| {
            let mut out = CMat::zeros(target.ambient_dim(), target.ambient_dim());
            for k in kraus {
                out += k * a * k.adjoint();
            }
            out
        })
    }

    pub fn apply(&self, coords: &CVec) -> CVec {
        &self.matrix * coords
    }

    pub fn apply_element(&self, x: &Element) -> Result<Element> {
        check_same(&self.source, &x.algebra)?;
        Element::new(&self.target, self.apply(&x.coords))
    }

    /// `t·self + (1-t)·other`.
    pub fn affine(&self, other: &ChannelMap, t: f64) -> Result<Self> {
        check_same(&self.source, &other.source)?;
        check_same(&self.target, &other.target)?;
        let matrix = &self.matrix * linalg::c(t, 0.0) + &other.matrix * linalg::c(1.0 - t, 0.0);
        Ok(ChannelMap {
            source: self.source.clone(),
            target: self.target.clone(),
            matrix,
        })
    }

    pub fn sub(&self, other: &ChannelMap) -> Result<Self> {
        check_same(&self.source, &other.source)?;
        check_same(&self.target, &other.target)?;
        Ok(ChannelMap {
            source: self.source.clone(),
            target: self.target.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }
}

/// `ω_τ(F)` on `A ⊗ B^op`, tagged with its trace.
#[derive(Debug, Clone)]
pub struct OmegaFunctional {
    pub functional: LinearFunctional,
    pub trace_name: String,
}

fn check_trace_target(f: &ChannelMap, tau: &TraceFunctional) -> Result<()> {
    if crate::algebra::same_algebra(&f.target, tau.algebra()) {
        Ok(())
    } else {
        Err(Error::TraceMismatch {
            trace: tau.algebra().name().to_string(),
            target: f.target.name().to_string(),
        })
    }
}

/// `ω_τ(F)(B_i ⊗ C_j^op) = τ(F(B_i) C_j)`.
pub fn omega_tau(f: &ChannelMap, tau: &TraceFunctional) -> Result<OmegaFunctional> {
    check_trace_target(f, tau)?;
    let pairing = tau.pairing();
    let omega = f.matrix.transpose() * pairing;
    let (da, db) = (f.source.dim(), f.target.dim());
    let algebra = tensor_algebra(&f.source, &opposite_algebra(&f.target));
    let values = CVec::from_fn(da * db, |k, _| omega[(k / db, k % db)]);
    Ok(OmegaFunctional {
        functional: LinearFunctional { algebra, values },
        trace_name: tau.name.clone(),
    })
}

/// Verdict of the complete-positivity test.
#[derive(Debug, Clone)]
pub struct CpVerdict {
    pub is_cp: bool,
    pub min_eigenvalue: f64,
    /// Coordinates of `x` in `A ⊗ B^op` with `ω(x* x)` equal to `min_eigenvalue`.
    pub witness: Element,
}

pub fn is_completely_positive(f: &ChannelMap, tau: &TraceFunctional) -> Result<CpVerdict> {
    tau.require_faithful()?;
    let omega = omega_tau(f, tau)?;
    let report = omega.functional.positivity();
    Ok(CpVerdict {
        is_cp: report.is_psd,
        min_eigenvalue: report.min_eigenvalue,
        witness: Element {
            algebra: omega.functional.algebra.clone(),
            coords: report.witness,
        },
    })
}

pub fn is_trace_channel(f: &ChannelMap, tau: &TraceFunctional) -> Result<bool> {
    let cp = is_completely_positive(f, tau)?.is_cp;
    Ok(cp && trace_of_unit_image_is_one(f, tau))
}

fn trace_of_unit_image_is_one(f: &ChannelMap, tau: &TraceFunctional) -> bool {
    (tau.eval(&f.apply(f.source.unit())) - ONE).norm() < EPS_STRUCT
}

pub fn is_unital(f: &ChannelMap) -> bool {
    let image = f.apply(f.source.unit());
    (image - f.target.unit())
        .iter()
        .all(|z| z.norm() < EPS_STRUCT)
}

pub fn is_trace_preserving(
    f: &ChannelMap,
    tau_src: &TraceFunctional,
    tau_tgt: &TraceFunctional,
) -> Result<bool> {
    check_same(&f.source, tau_src.algebra())?;
    check_trace_target(f, tau_tgt)?;
    let pushed = f.matrix.transpose() * tau_tgt.values();
    Ok((pushed - tau_src.values())
        .iter()
        .all(|z| z.norm() < EPS_STRUCT))
}

/// All classification flags at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Classification {
    pub completely_positive: bool,
    pub trace_channel: bool,
    pub unital: bool,
    pub trace_preserving: Option<bool>,
}

pub fn classify(
    f: &ChannelMap,
    tau_tgt: &TraceFunctional,
    tau_src: Option<&TraceFunctional>,
) -> Result<Classification> {
    let cp = is_completely_positive(f, tau_tgt)?.is_cp;
    let trace_preserving = match tau_src {
        Some(ts) => Some(is_trace_preserving(f, ts, tau_tgt)?),
        None => None,
    };
    Ok(Classification {
        completely_positive: cp,
        trace_channel: cp && trace_of_unit_image_is_one(f, tau_tgt),
        unital: is_unital(f),
        trace_preserving,
    })
}

/// `G ∘ F`.
pub fn compose(g: &ChannelMap, f: &ChannelMap) -> Result<ChannelMap> {
    check_same(&g.source, &f.target)?;
    Ok(ChannelMap {
        source: f.source.clone(),
        target: g.target.clone(),
        matrix: &g.matrix * &f.matrix,
    })
}

/// `F ⊗ G` between tensor algebras.
pub fn tensor_channel(f: &ChannelMap, g: &ChannelMap) -> ChannelMap {
    ChannelMap {
        source: tensor_algebra(&f.source, &g.source),
        target: tensor_algebra(&f.target, &g.target),
        matrix: linalg::kron(&f.matrix, &g.matrix),
    }
}

/// `id_{M_n} ⊗ F`.
pub fn amplify(n: usize, f: &ChannelMap) -> ChannelMap {
    if n == 1 {
        return f.clone();
    }
    tensor_channel(&ChannelMap::identity(&matrix_algebra(n)), f)
}

/// `F♯` with `τ_B(F(a) b) = τ_A(a F♯(b))`.
pub fn trace_adjoint(
    f: &ChannelMap,
    tau_src: &TraceFunctional,
    tau_tgt: &TraceFunctional,
) -> Result<ChannelMap> {
    check_same(&f.source, tau_src.algebra())?;
    check_trace_target(f, tau_tgt)?;
    tau_src.require_faithful()?;
    tau_tgt.require_faithful()?;
    let rhs = f.matrix.transpose() * tau_tgt.pairing();
    let matrix = linalg::solve(&tau_src.pairing(), &rhs)
        .ok_or_else(|| Error::NotFaithful(tau_src.name.clone()))?;
    Ok(ChannelMap {
        source: f.target.clone(),
        target: f.source.clone(),
        matrix,
    })
}

/// Side length `n` when `alg` is `M_n` in the row-major matrix-unit basis.
pub fn matrix_units_size(alg: &Algebra) -> Option<usize> {
    let n = alg.ambient_dim();
    if alg.is_tensor() || alg.is_opposite() || alg.dim() != n * n {
        return None;
    }
    let ok =
        alg.basis().iter().enumerate().all(|(k, b)| {
            linalg::max_abs(&(b - linalg::matrix_unit(n, k / n, k % n))) <= EPS_STRUCT
        });
    ok.then_some(n)
}

/// `C_F = Σ e_ij ⊗ F(e_ij)`.
pub fn choi_matrix(f: &ChannelMap) -> Result<CMat> {
    let n = matrix_units_size(&f.source)
        .ok_or_else(|| Error::NotMatrixUnitsBasis(f.source.name().to_string()))?;
    let m = f.target.ambient_dim();
    let mut out = CMat::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let image = f.target.realize(&f.matrix.column(i * n + j).into_owned());
            out.view_mut((i * m, j * m), (m, m)).copy_from(&image);
        }
    }
    Ok(out)
}

/// Basis of `A` orthonormal for `⟨x, y⟩ = τ(x* y)`, as coordinate columns.
pub fn kms_orthonormal_basis(tau: &TraceFunctional) -> Result<CMat> {
    tau.require_faithful()?;
    let gram = tau.functional.gns_gram();
    let chol = linalg::hermitian_part(&gram)
        .cholesky()
        .ok_or_else(|| Error::NotFaithful(tau.name.clone()))?;
    // V = L^{-*} gives V* G V = I.
    let d = gram.nrows();
    let linv = chol
        .l()
        .solve_lower_triangular(&CMat::identity(d, d))
        .ok_or_else(|| Error::NotFaithful(tau.name.clone()))?;
    Ok(linv.adjoint())
}

/// `τ^KMS(F) = Σ F(b_i) ⊗ (b_i*)^op` for an orthonormal basis `b_i`.
pub fn kms_choi_element(f: &ChannelMap, tau: &TraceFunctional) -> Result<Element> {
    check_same(&f.source, &f.target)?;
    check_trace_target(f, tau)?;
    let a = &f.source;
    let v = kms_orthonormal_basis(tau)?;
    let d = a.dim();
    let images = &f.matrix * &v;
    let mut stars = CMat::zeros(d, d);
    for i in 0..d {
        stars.set_column(i, &a.adjoint(&v.column(i).into_owned()));
    }
    let k = images * stars.transpose();
    let algebra = tensor_algebra(a, &opposite_algebra(a));
    let coords = CVec::from_fn(d * d, |s, _| k[(s / d, s % d)]);
    Element::new(&algebra, coords)
}

/// True when the ambient realization of `x` is PSD.
pub fn ambient_positive(x: &Element) -> bool {
    let m = x.realize();
    linalg::is_hermitian(&m, EPS_STRUCT) && linalg::psd_report(&m, EPS_PSD).is_psd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{diagonal_algebra, swap_op_map, tensor_functional};
    use crate::linalg::{c, ZERO};
    use proptest::prelude::*;

    fn tr(a: &Algebra) -> TraceFunctional {
        TraceFunctional::ambient(a, 1.0, "Tr").unwrap()
    }

    fn transpose_map(n: usize) -> ChannelMap {
        let m = matrix_algebra(n);
        ChannelMap::from_ambient_fn(&m, &m, |a| a.transpose()).unwrap()
    }

    #[test]
    fn omega_of_identity_on_matrix_units() {
        let m2 = matrix_algebra(2);
        let om = omega_tau(&ChannelMap::identity(&m2), &tr(&m2))
            .unwrap()
            .functional;
        // (e11 ⊗ e11^op), (e11 ⊗ e22^op), (e12 ⊗ e21^op)
        assert_eq!(om.values[0], ONE);
        assert_eq!(om.values[3], ZERO);
        assert_eq!(om.values[4 + 2], ONE);
        let zero = omega_tau(&ChannelMap::zero(&m2, &m2), &tr(&m2)).unwrap();
        assert!(zero.functional.values.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn transpose_is_rejected_with_swap_witness() {
        let m2 = matrix_algebra(2);
        let v = is_completely_positive(&transpose_map(2), &tr(&m2)).unwrap();
        assert!(!v.is_cp);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-10);
        let om = omega_tau(&transpose_map(2), &tr(&m2)).unwrap().functional;
        let alg = &om.algebra;
        let x = &v.witness.coords;
        let val = om.eval(&alg.multiply(&alg.adjoint(x), x));
        assert!((val.re + 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_channel_examples() {
        let m2 = matrix_algebra(2);
        let rho =
            CMat::from_row_slice(2, 2, &[c(0.75, 0.), c(0., 0.25), c(0., -0.25), c(0.25, 0.)]);
        let f = ChannelMap::from_ambient_fn(&m2, &m2, |a| &rho * (a.trace() * c(0.5, 0.))).unwrap();
        assert!(is_trace_channel(&f, &tr(&m2)).unwrap());
        let id = ChannelMap::identity(&m2);
        assert!(!is_trace_channel(&id, &tr(&m2)).unwrap());
        let half = TraceFunctional::ambient(&m2, 0.5, "tr").unwrap();
        assert!(is_trace_channel(&id, &half).unwrap());
    }

    #[test]
    fn unital_and_trace_preserving_examples() {
        let m2 = matrix_algebra(2);
        let t = tr(&m2);
        let dep = ChannelMap::from_ambient_fn(&m2, &m2, |a| {
            CMat::identity(2, 2) * (a.trace() * c(0.5, 0.))
        })
        .unwrap();
        assert!(is_unital(&dep));
        assert!(is_trace_preserving(&dep, &t, &t).unwrap());
        let e11 = linalg::matrix_unit(2, 0, 0);
        let f = ChannelMap::from_ambient_fn(&m2, &m2, |a| &e11 * a.trace()).unwrap();
        assert!(!is_unital(&f));
        assert!(is_trace_preserving(&f, &t, &t).unwrap());
    }

    #[test]
    fn choi_matrix_examples() {
        let id = choi_matrix(&ChannelMap::identity(&matrix_algebra(2))).unwrap();
        let e = linalg::eigvalsh(&id);
        assert!((e[3] - 2.0).abs() < 1e-12 && e[0].abs() < 1e-12);
        let t = linalg::eigvalsh(&choi_matrix(&transpose_map(2)).unwrap());
        assert!((t[0] + 1.0).abs() < 1e-12 && (t[1] - 1.0).abs() < 1e-12);
        let m2 = matrix_algebra(2);
        let dep = ChannelMap::from_ambient_fn(&m2, &m2, |a| {
            CMat::identity(2, 2) * (a.trace() * c(0.5, 0.))
        })
        .unwrap();
        let cd = choi_matrix(&dep).unwrap();
        assert!(linalg::max_abs(&(cd - CMat::identity(4, 4) * c(0.5, 0.))) < 1e-14);
        let d2 = diagonal_algebra(2);
        assert!(matches!(
            choi_matrix(&ChannelMap::identity(&d2)),
            Err(Error::NotMatrixUnitsBasis(_))
        ));
    }

    #[test]
    fn kms_element_of_identity_on_diagonal() {
        let d2 = diagonal_algebra(2);
        let k = kms_choi_element(&ChannelMap::identity(&d2), &tr(&d2)).unwrap();
        let expected = CVec::from_vec(vec![ONE, ZERO, ZERO, ONE]);
        assert!((k.coords - expected).norm() < 1e-12);
        let z = kms_choi_element(&ChannelMap::zero(&d2, &d2), &tr(&d2)).unwrap();
        assert!(z.coords.norm() == 0.0);
    }

    #[test]
    fn kms_element_pairs_to_omega_through_swap() {
        let m2 = matrix_algebra(2);
        let t = TraceFunctional::ambient(&m2, 0.5, "tr").unwrap();
        let kraus = [CMat::from_row_slice(
            2,
            2,
            &[c(1., 0.5), c(0., 1.), c(0.3, 0.), c(-1., 0.)],
        )];
        let f = ChannelMap::from_kraus(&m2, &m2, &kraus).unwrap();
        let k = kms_choi_element(&f, &t).unwrap();
        let alg = k.algebra.clone();
        let sigma = swap_op_map(&alg, 0, 1).unwrap();
        let tt = tensor_functional(&t.functional, &t.opposite().functional);
        let om = omega_tau(&f, &t).unwrap().functional;
        for s in 0..alg.dim() {
            let moved = sigma.apply(&alg.basis_vector(s));
            let rhs = tt.eval(&alg.multiply(&k.coords, &moved));
            assert!((om.values[s] - rhs).norm() < 1e-12, "index {s}");
        }
        assert!(ambient_positive(&k));
        let kt = kms_choi_element(&transpose_map(2), &t).unwrap();
        assert!(!ambient_positive(&kt));
    }

    #[test]
    fn unitary_conjugation_adjoint() {
        let m2 = matrix_algebra(2);
        let s = 0.5f64.sqrt();
        let v = CMat::from_row_slice(2, 2, &[c(s, 0.), c(0., s), c(0., s), c(s, 0.)]);
        let f = ChannelMap::from_kraus(&m2, &m2, std::slice::from_ref(&v)).unwrap();
        let fs = trace_adjoint(&f, &tr(&m2), &tr(&m2)).unwrap();
        let expect = ChannelMap::from_kraus(&m2, &m2, &[v.adjoint()]).unwrap();
        assert!(linalg::max_abs(&(fs.matrix - expect.matrix)) < 1e-12);
        assert!(is_completely_positive(&f, &tr(&m2)).unwrap().is_cp);
    }

    #[test]
    fn trace_mismatch_is_reported() {
        let m2 = matrix_algebra(2);
        let d2 = diagonal_algebra(2);
        let f = ChannelMap::zero(&m2, &m2);
        assert!(matches!(
            omega_tau(&f, &tr(&d2)),
            Err(Error::TraceMismatch { .. })
        ));
        assert!(matches!(
            compose(&ChannelMap::identity(&d2), &f),
            Err(Error::AlgebraMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn omega_is_affine(
            a in proptest::collection::vec(-1.0..1.0f64, 32),
            t in 0.0..1.0f64,
        ) {
            let m2 = matrix_algebra(2);
            let mk = |o: usize| CMat::from_fn(4, 4, |i, j| c(a[o + 4 * i + j], a[o + 16 - 4 * i - j - 1]));
            let f = ChannelMap::new(&m2, &m2, mk(0)).unwrap();
            let g = ChannelMap::new(&m2, &m2, mk(16)).unwrap();
            let t_ = tr(&m2);
            let lhs = omega_tau(&f.affine(&g, t).unwrap(), &t_).unwrap().functional.values;
            let rhs = omega_tau(&f, &t_).unwrap().functional.values * c(t, 0.)
                + omega_tau(&g, &t_).unwrap().functional.values * c(1.0 - t, 0.);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn double_adjoint_round_trips(a in proptest::collection::vec(-1.0..1.0f64, 18)) {
            let m3 = matrix_algebra(3);
            let d2 = diagonal_algebra(2);
            let f = ChannelMap::new(&m3, &d2, CMat::from_fn(2, 9, |i, j| c(a[i * 9 + j], a[17 - i * 9 - j]))).unwrap();
            let (t3, t2) = (TraceFunctional::ambient(&m3, 1.0 / 3.0, "tr").unwrap(), tr(&d2));
            let fs = trace_adjoint(&f, &t3, &t2).unwrap();
            let fss = trace_adjoint(&fs, &t2, &t3).unwrap();
            prop_assert!(linalg::max_abs(&(fss.matrix - &f.matrix)) < 1e-10);
        }
    }
}
