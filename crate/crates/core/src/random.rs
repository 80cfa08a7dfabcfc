//! Seeded generators for states, channels and positive definite functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{
    opposite_algebra, tensor_algebra, Algebra, LinearFunctional, TraceFunctional,
};
use crate::channels::ChannelMap;
use crate::error::{Error, Result};
use crate::groups::{FiniteGroup, PositiveDefiniteFunction, TwistedGroupAlgebra};
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::metrics::self_adjoint_basis;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut Rng64) -> f64 {
    StandardNormal.sample(rng)
}

pub fn complex_gaussian(rng: &mut Rng64) -> C64 {
    c(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_matrix(rng: &mut Rng64, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn unit_vector(rng: &mut Rng64, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| complex_gaussian(rng));
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Random density matrix `G G* / tr` of full rank.
pub fn density_matrix(rng: &mut Rng64, n: usize) -> CMat {
    let g = complex_matrix(rng, n, n);
    let p = &g * g.adjoint() + CMat::identity(n, n) * c(1e-3, 0.0);
    let t = p.trace();
    p / t
}

/// Random Hermitian matrix with at least one clearly negative eigenvalue.
pub fn indefinite_hermitian(rng: &mut Rng64, n: usize) -> CMat {
    loop {
        let g = complex_matrix(rng, n, n);
        let h = linalg::hermitian_part(&g);
        let ev = linalg::eigvalsh(&h);
        let (min, max) = (ev.min(), ev.max());
        if min < -0.05 * max.abs().max(min.abs()) {
            return h;
        }
    }
}

/// State `x ↦ tr(ρ x)` with a random full-rank ambient density `ρ`.
pub fn random_state(rng: &mut Rng64, alg: &Algebra) -> LinearFunctional {
    let rho = density_matrix(rng, alg.ambient_dim());
    ambient_functional(alg, &rho)
}

/// `x ↦ tr(m x)` on the basis.
pub fn ambient_functional(alg: &Algebra, m: &CMat) -> LinearFunctional {
    let values = CVec::from_iterator(alg.dim(), alg.basis().iter().map(|b| (m * b).trace()));
    LinearFunctional {
        algebra: alg.clone(),
        values,
    }
}

/// Random self-adjoint element.
pub fn random_self_adjoint(rng: &mut Rng64, alg: &Algebra) -> CVec {
    let mut x = CVec::zeros(alg.dim());
    for s in self_adjoint_basis(alg) {
        x += s * c(gaussian(rng), 0.0);
    }
    x
}

/// Random complex element.
pub fn random_element(rng: &mut Rng64, alg: &Algebra) -> CVec {
    CVec::from_fn(alg.dim(), |_, _| complex_gaussian(rng))
}

/// The map `F` with `ω_τ(F)` equal to the given functional on `A ⊗ B^op`.
pub fn map_from_omega(source: &Algebra, tau: &TraceFunctional, omega: &CVec) -> Result<ChannelMap> {
    let target = tau.algebra();
    let (da, db) = (source.dim(), target.dim());
    if omega.len() != da * db {
        return Err(Error::DimensionMismatch(
            "functional does not live on A ⊗ B^op".into(),
        ));
    }
    tau.require_faithful()?;
    let om = CMat::from_fn(da, db, |i, j| omega[i * db + j]);
    let t = tau.pairing();
    // Ω = Fᵀ T
    let ft = linalg::solve(&t.transpose(), &om.transpose())
        .ok_or_else(|| Error::NotFaithful(tau.name.clone()))?;
    ChannelMap::new(source, target, ft)
}

/// Which kind of map to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// Completely positive, normalized so that `τ(F(1)) = 1`.
    TraceChannel,
    /// Completely positive with a random normalization.
    CompletelyPositive,
    /// Hermitian-preserving but not completely positive.
    NotCompletelyPositive,
    /// Random coordinates.
    Generic,
}

/// Random map through a random functional on `A ⊗ B^op`.
pub fn random_map(
    rng: &mut Rng64,
    source: &Algebra,
    tau: &TraceFunctional,
    kind: MapKind,
) -> Result<ChannelMap> {
    let joint = tensor_algebra(source, &opposite_algebra(tau.algebra()));
    let n = joint.ambient_dim();
    let omega = match kind {
        MapKind::TraceChannel | MapKind::CompletelyPositive => {
            let f = ambient_functional(&joint, &density_matrix(rng, n));
            let scale = if kind == MapKind::TraceChannel {
                1.0
            } else {
                0.5 + 2.0 * rng.random::<f64>()
            };
            f.values * c(scale, 0.0)
        }
        MapKind::NotCompletelyPositive => loop {
            let f = ambient_functional(&joint, &indefinite_hermitian(rng, n));
            if !f.is_positive() {
                break f.values;
            }
        },
        MapKind::Generic => random_element(rng, &joint),
    };
    map_from_omega(source, tau, &omega)
}

/// Kraus channel `x ↦ Σ K_i x K_i*` between full matrix algebras, rescaled so
/// that `Tr(F(1)) = 1`.
pub fn random_kraus_channel(
    rng: &mut Rng64,
    source: &Algebra,
    target: &Algebra,
    count: usize,
) -> Result<ChannelMap> {
    let (n, m) = (source.ambient_dim(), target.ambient_dim());
    let ks: Vec<CMat> = (0..count).map(|_| complex_matrix(rng, m, n)).collect();
    let f = ChannelMap::from_kraus(source, target, &ks)?;
    let img = target.realize(&f.apply(source.unit()));
    let t = img.trace().re;
    let ks: Vec<CMat> = ks.into_iter().map(|k| k / c(t.sqrt(), 0.0)).collect();
    ChannelMap::from_kraus(source, target, &ks)
}

/// `φ(g) = ⟨ξ, λ_g ξ⟩` for a random unit vector, normalized at the identity.
pub fn random_pd_function(rng: &mut Rng64, group: &FiniteGroup) -> PositiveDefiniteFunction {
    let lam = TwistedGroupAlgebra::untwisted(group);
    let xi = unit_vector(rng, group.order());
    let values = CVec::from_iterator(
        group.order(),
        lam.left().iter().map(|l| (xi.adjoint() * l * &xi)[(0, 0)]),
    );
    PositiveDefiniteFunction::new(group, values).expect("vector functionals are positive definite")
}

/// Real `φ_t` on `Z/2` with `φ_t(1) = t`.
pub fn z2_pd_function(t: f64) -> Result<PositiveDefiniteFunction> {
    PositiveDefiniteFunction::new(
        &FiniteGroup::cyclic(2),
        CVec::from_vec(vec![c(1.0, 0.0), c(t, 0.0)]),
    )
}
