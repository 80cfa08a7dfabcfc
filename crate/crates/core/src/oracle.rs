//! Independent checks used to cross-validate the main computations.

use crate::algebra::{check_same, LinearFunctional};
use crate::channels::ChannelMap;
use crate::error::{Error, Result};
use crate::geometry::Seminorm;
use crate::linalg::{self, c, CMat, CVec, PsdReport, RVec};
use crate::metrics::{mk_sup, self_adjoint_basis, Distance, MkOptions};
use crate::EPS_PSD;

/// Complete positivity through the block matrix `[F(B_i* B_j)]_{ij}` over the
/// basis of the source, realized in the target's ambient space. Every positive
/// element of `M_n(A)` is a sum of `[a_i* a_j]`, and each family `a_i` reduces
/// to the basis, so this one matrix decides complete positivity.
pub fn cp_oracle_npositivity(f: &ChannelMap) -> PsdReport {
    let a = &f.source;
    let d = a.dim();
    let n = f.target.ambient_dim();
    let mut big = CMat::zeros(d * n, d * n);
    for i in 0..d {
        let bi = a.adjoint(&a.basis_vector(i));
        for j in 0..d {
            let prod = a.multiply(&bi, &a.basis_vector(j));
            let img = f.target.realize(&f.apply(&prod));
            big.view_mut((i * n, j * n), (n, n)).copy_from(&img);
        }
    }
    linalg::psd_report(&linalg::hermitian_part(&big), EPS_PSD)
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Golden-section steps per line search.
    pub iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { iterations: 120 }
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimum of a convex function of one variable. The bracket grows until both
/// ends are no lower than the origin, which pins every minimizer inside it.
fn convex_min(g: &dyn Fn(f64) -> f64, iterations: usize) -> f64 {
    let g0 = g(0.0);
    let mut r = 1.0;
    for _ in 0..80 {
        if g(r) >= g0 && g(-r) >= g0 {
            break;
        }
        r *= 2.0;
    }
    let (mut lo, mut hi) = (-r, r);
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..iterations {
        if g1 <= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - GOLDEN * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + GOLDEN * (hi - lo);
            g2 = g(x2);
        }
    }
    g0.min(g1).min(g2)
}

/// `sup{Re f(a) / L(a)}` over self-adjoint `a`, computed without the SDP as
/// `1 / min{L(a) : Re f(a) = 1}`: a convex minimization over a line or a
/// plane, done by nested golden-section searches. Works up to three
/// directions outside ker L.
pub fn search_mk_sup(
    f: &LinearFunctional,
    seminorm: &Seminorm,
    opts: &SearchOptions,
) -> Result<Distance> {
    check_same(&seminorm.algebra, &f.algebra)?;
    let basis = self_adjoint_basis(&f.algebra);
    let m = basis.len();
    let d = f.algebra.dim();
    // Split coordinates y ↦ Σ y_j s_j into ker L and its complement through
    // the operator Gram matrix.
    let ops: Vec<Vec<CMat>> = seminorm
        .terms
        .iter()
        .map(|t| basis.iter().map(|s| t.operator(s).to_dense()).collect())
        .collect();
    let gram = crate::linalg::RMat::from_fn(m, m, |i, j| {
        ops.iter().map(|o| linalg::hs_inner(&o[i], &o[j]).re).sum()
    });
    let cvec = RVec::from_iterator(m, basis.iter().map(|s| f.eval(s).re));
    let eig = gram.symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut dirs = Vec::new();
    for k in 0..m {
        let v = eig.eigenvectors.column(k).into_owned();
        if eig.eigenvalues[k] <= 1e-12 * max.max(1e-300) {
            if cvec.dot(&v).abs() > crate::EPS_STRUCT {
                return Ok(Distance::Infinite);
            }
        } else {
            dirs.push(v);
        }
    }
    let k = dirs.len();
    if k > 3 {
        return Err(Error::InvalidInput(format!(
            "search oracle handles at most 3 directions, got {k}"
        )));
    }
    // f in direction coordinates
    let w = RVec::from_iterator(k, dirs.iter().map(|v| cvec.dot(v)));
    let wn = w.norm();
    if wn <= crate::EPS_STRUCT {
        return Ok(Distance::Finite(0.0));
    }
    let lip = |u: &RVec| -> f64 {
        let mut y = RVec::zeros(m);
        for (ui, v) in u.iter().zip(&dirs) {
            y += v * *ui;
        }
        let mut a = CVec::zeros(d);
        for j in 0..m {
            a += &basis[j] * c(y[j], 0.0);
        }
        seminorm.eval_coords(&a)
    };
    // u = w/|w|² + t_1 e_1 + t_2 e_2 with e_i an orthonormal basis of w⊥
    let base = &w / (wn * wn);
    let mut perp: Vec<RVec> = Vec::new();
    for i in 0..k {
        let mut e = RVec::zeros(k);
        e[i] = 1.0;
        e -= &w * (w.dot(&e) / (wn * wn));
        for p in &perp {
            e -= p * p.dot(&e);
        }
        if e.norm() > 1e-8 {
            perp.push(e.normalize());
        }
    }
    let it = opts.iterations;
    let min_l = match perp.len() {
        0 => lip(&base),
        1 => convex_min(&|t| lip(&(&base + &perp[0] * t)), it),
        _ => convex_min(
            &|t1| {
                let b1 = &base + &perp[0] * t1;
                convex_min(&|t2| lip(&(&b1 + &perp[1] * t2)), it)
            },
            it,
        ),
    };
    if min_l <= 0.0 {
        return Ok(Distance::Infinite);
    }
    Ok(Distance::Finite(1.0 / min_l))
}

/// Largest `mk_L(ψ ∘ F, ψ ∘ G)` over the listed states `ψ` of the target.
pub fn dl_extreme_points(
    f: &ChannelMap,
    g: &ChannelMap,
    seminorm: &Seminorm,
    states: &[LinearFunctional],
    opts: &MkOptions,
) -> Result<Distance> {
    let diff = f.sub(g)?;
    let mut best = Distance::Finite(0.0);
    for psi in states {
        check_same(&psi.algebra, &f.target)?;
        let pulled = LinearFunctional {
            algebra: f.source.clone(),
            values: diff.matrix.transpose() * &psi.values,
        };
        let r = mk_sup(&pulled, seminorm, opts)?.require_converged()?;
        best = match (best, r.value) {
            (Distance::Finite(a), Distance::Finite(b)) => Distance::Finite(a.max(b)),
            _ => Distance::Infinite,
        };
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{diagonal_algebra, matrix_algebra};
    use crate::geometry::metric_space_triple;
    use crate::linalg::{RMat, ONE, ZERO};

    #[test]
    fn transpose_fails_identity_passes() {
        let a = matrix_algebra(2);
        let t = ChannelMap::from_ambient_fn(&a, &a, |m| m.transpose()).unwrap();
        let r = cp_oracle_npositivity(&t);
        assert!(!r.is_psd);
        assert!(cp_oracle_npositivity(&ChannelMap::identity(&a)).is_psd);
    }

    #[test]
    fn three_point_path_metric() {
        let alg = diagonal_algebra(3);
        let dist = RMat::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
        let l = Seminorm::commutator(&metric_space_triple(&alg, &dist).unwrap());
        let f = LinearFunctional {
            algebra: alg.clone(),
            values: CVec::from_vec(vec![ONE, ZERO, -ONE]),
        };
        let g = search_mk_sup(&f, &l, &SearchOptions::default())
            .unwrap()
            .finite()
            .unwrap();
        assert!((g - 2.0).abs() < 1e-6, "{g}");
        let s = mk_sup(&f, &l, &MkOptions::default())
            .unwrap()
            .value
            .finite()
            .unwrap();
        assert!((g - s).abs() < 1e-5);
    }
}
