//! Dense primal-dual interior-point method for complex Hermitian
//! block-diagonal semidefinite programs.
//!
//! Primal: minimize `Σ_b Re tr(C_b X_b)` subject to `Σ_b Re tr(A_jb X_b) = b_j`, `X ⪰ 0`.
//! Dual:   maximize `b·y` subject to `S_b = C_b − Σ_j y_j A_jb ⪰ 0`.
//!
//! Search directions use Nesterov-Todd scaling with a Mehrotra
//! predictor-corrector. The Schur complement is assembled in real arithmetic.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{self, c, cmatmul as mm, CMat, RMat, RVec, SparseMat};

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    /// Hermitian cost, one dense matrix per block.
    pub c: Vec<CMat>,
    /// `a[j][b]`: Hermitian constraint matrix of variable `j` on block `b`.
    pub a: Vec<Vec<SparseMat>>,
    pub b: RVec,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tolerance: crate::EPS_SOLVER,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<CMat>,
    pub s: Vec<CMat>,
    pub y: RVec,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `⟨X, S⟩ / (1 + |p| + |d|)`.
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

impl SdpProblem {
    pub fn num_vars(&self) -> usize {
        self.b.len()
    }

    fn check(&self) -> Result<()> {
        let nb = self.block_sizes.len();
        if self.c.len() != nb {
            return Err(Error::DimensionMismatch(format!(
                "{} cost blocks for {nb} block sizes",
                self.c.len()
            )));
        }
        if self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraints for {} right-hand sides",
                self.a.len(),
                self.b.len()
            )));
        }
        for (k, &n) in self.block_sizes.iter().enumerate() {
            if self.c[k].nrows() != n || self.c[k].ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "cost block {k} is not {n}x{n}"
                )));
            }
        }
        for (j, row) in self.a.iter().enumerate() {
            if row.len() != nb
                || row
                    .iter()
                    .zip(&self.block_sizes)
                    .any(|(m, &n)| m.nrows != n || m.ncols != n)
            {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {j} has the wrong block shapes"
                )));
            }
        }
        Ok(())
    }

    /// `y ↦ Σ_j y_j A_j`.
    pub fn adjoint_op(&self, y: &RVec) -> Vec<CMat> {
        let mut out: Vec<CMat> = self
            .block_sizes
            .iter()
            .map(|&n| CMat::zeros(n, n))
            .collect();
        for (j, row) in self.a.iter().enumerate() {
            if y[j] != 0.0 {
                for (b, m) in row.iter().enumerate() {
                    m.axpy_into(c(y[j], 0.0), &mut out[b]);
                }
            }
        }
        out
    }

    /// `X ↦ (Re tr(A_j X))_j`.
    pub fn op(&self, x: &[CMat]) -> RVec {
        RVec::from_iterator(
            self.a.len(),
            self.a.iter().map(|row| {
                row.iter()
                    .zip(x)
                    .map(|(m, xb)| m.re_trace_with(xb))
                    .sum::<f64>()
            }),
        )
    }
}

fn inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| linalg::hs_inner(x, y).re)
        .sum()
}

fn norm(a: &[CMat]) -> f64 {
    a.iter()
        .map(|m| linalg::frobenius(m).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn herm(m: CMat) -> CMat {
    (&m + m.adjoint()) * c(0.5, 0.0)
}

/// Per-block Nesterov-Todd scaling data.
struct Scaling {
    /// `W = G G*`, with `W S W = X`.
    w: CMat,
    g: CMat,
    g_inv: CMat,
    /// Common eigenvalues of the scaled iterates `G⁻¹ X G⁻* = G* S G`.
    d: Vec<f64>,
}

fn chol_lower(m: &CMat) -> Option<CMat> {
    Cholesky::new(herm(m.clone())).map(|ch| ch.l())
}

fn nt_scaling(x: &CMat, s: &CMat) -> Option<Scaling> {
    let lx = chol_lower(x)?;
    let ls = chol_lower(s)?;
    let n = x.nrows();
    let svd = mm(&ls.adjoint(), &lx).svd(false, true);
    let vt = svd.v_t?;
    let d: Vec<f64> = svd.singular_values.iter().copied().collect();
    if d.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let v = vt.adjoint();
    let mut g = mm(&lx, &v);
    for k in 0..n {
        g.column_mut(k).scale_mut(1.0 / d[k].sqrt());
    }
    // G⁻¹ = D^{1/2} V* L_X⁻¹
    let lx_inv = lx.solve_lower_triangular(&CMat::identity(n, n))?;
    let mut g_inv = mm(&vt, &lx_inv);
    for k in 0..n {
        g_inv.row_mut(k).scale_mut(d[k].sqrt());
    }
    let w = herm(mm(&g, &g.adjoint()));
    Some(Scaling { w, g, g_inv, d })
}

/// Largest step in `(0, 1]` keeping `x + α dx ⪰ 0`, damped by `tau`.
fn step_length(x: &CMat, dx: &CMat, tau: f64) -> Option<f64> {
    let l = chol_lower(x)?;
    let t = l.solve_lower_triangular(dx)?;
    let t2 = l.solve_lower_triangular(&t.adjoint())?;
    let ev = linalg::eigvalsh(&herm(t2));
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    Some(if min >= 0.0 {
        1.0
    } else {
        (tau * (-1.0 / min)).min(1.0)
    })
}

/// Real Schur complement `M_ij = Σ_b Re tr(A_ib W_b A_jb W_b)`.
fn schur(p: &SdpProblem, scal: &[Scaling]) -> RMat {
    let m = p.num_vars();
    let mut out = RMat::zeros(m, m);
    for (b, sc) in scal.iter().enumerate() {
        let n = p.block_sizes[b];
        let active: Vec<usize> = (0..m).filter(|&j| p.a[j][b].nnz() > 0).collect();
        if active.is_empty() {
            continue;
        }
        // Rows of r hold [Re vec P, −Im vec P], columns of q hold
        // [Re vec Pᵀ, Im vec Pᵀ], with P_j = A_j W; one real GEMM gives the block.
        let na = active.len();
        let nn = n * n;
        let mut r = RMat::zeros(na, 2 * nn);
        let mut q = RMat::zeros(2 * nn, na);
        for (t, &j) in active.iter().enumerate() {
            let pj = p.a[j][b].mul_dense(&sc.w);
            for col in 0..n {
                for row in 0..n {
                    let z = pj[(row, col)];
                    let k = col * n + row;
                    r[(t, k)] = z.re;
                    r[(t, nn + k)] = -z.im;
                    let kt = row * n + col;
                    q[(kt, t)] = z.re;
                    q[(nn + kt, t)] = z.im;
                }
            }
        }
        let block = r * q;
        for i in 0..na {
            for k in 0..na {
                out[(active[i], active[k])] += 0.5 * (block[(i, k)] + block[(k, i)]);
            }
        }
    }
    out
}

fn solve_schur(m: &RMat, rhs: &RVec) -> Option<RVec> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        let sol = ch.solve(rhs);
        if sol.iter().all(|v| v.is_finite()) {
            return Some(sol);
        }
    }
    m.clone()
        .lu()
        .solve(rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
}

struct Direction {
    dx: Vec<CMat>,
    ds: Vec<CMat>,
    dy: RVec,
}

fn direction(
    p: &SdpProblem,
    scal: &[Scaling],
    schur_m: &RMat,
    rp: &RVec,
    rd: &[CMat],
    rc: &[CMat],
) -> Option<Direction> {
    let wrw: Vec<CMat> = scal
        .iter()
        .zip(rd)
        .map(|(s, r)| mm(&mm(&s.w, r), &s.w))
        .collect();
    let rhs = rp - p.op(rc) + p.op(&wrw);
    let dy = solve_schur(schur_m, &rhs)?;
    let aty = p.adjoint_op(&dy);
    let ds: Vec<CMat> = rd.iter().zip(&aty).map(|(r, a)| herm(r - a)).collect();
    let dx: Vec<CMat> = rc
        .iter()
        .zip(scal)
        .zip(&ds)
        .map(|((r, s), d)| herm(r - mm(&mm(&s.w, d), &s.w)))
        .collect();
    Some(Direction { dx, ds, dy })
}

/// Solve the block SDP. Iterate breakdown is reported as `SolverDivergence`;
/// exhausting the iteration cap returns the last iterate with `MaxIter`.
pub fn solve(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    p.check()?;
    let m = p.num_vars();
    let n_total: usize = p.block_sizes.iter().sum();
    let nb = p.block_sizes.len();
    if n_total == 0 {
        return Err(Error::InvalidInput(
            "semidefinite program without blocks".into(),
        ));
    }

    // Starting point in the style of SDPT3: X = ξI, S = ηI, y = 0.
    let c_norm = norm(&p.c);
    let mut xi = 10.0_f64.max((n_total as f64).sqrt());
    let mut eta = xi;
    for j in 0..m {
        let an = p.a[j]
            .iter()
            .map(|a| a.frobenius().powi(2))
            .sum::<f64>()
            .sqrt();
        xi = xi.max(n_total as f64 * (1.0 + p.b[j].abs()) / (1.0 + an));
        eta = eta.max(an);
    }
    eta = eta.max(c_norm);
    let mut x: Vec<CMat> = p
        .block_sizes
        .iter()
        .map(|&n| CMat::identity(n, n) * c(xi, 0.0))
        .collect();
    let mut s: Vec<CMat> = p
        .block_sizes
        .iter()
        .map(|&n| CMat::identity(n, n) * c(eta, 0.0))
        .collect();
    let mut y = RVec::zeros(m);

    let b_norm = p.b.norm();
    let target = opts.tolerance * 0.1;
    let tau = 0.98;

    for iter in 0..=opts.max_iter {
        let aty = p.adjoint_op(&y);
        let rp = &p.b - p.op(&x);
        let rd: Vec<CMat> = (0..nb).map(|k| herm(&p.c[k] - &aty[k] - &s[k])).collect();
        let pobj: f64 =
            p.c.iter()
                .zip(&x)
                .map(|(cb, xb)| linalg::hs_inner(cb, xb).re)
                .sum();
        let dobj = p.b.dot(&y);
        let xs = inner(&x, &s);
        let rel_gap = xs / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = norm(&rd) / (1.0 + c_norm);
        let snapshot = |status, iterations| SdpSolution {
            x: x.clone(),
            s: s.clone(),
            y: y.clone(),
            primal_objective: pobj,
            dual_objective: dobj,
            relative_gap: rel_gap,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            iterations,
            status,
        };
        if rel_gap <= target && pinf <= target && dinf <= target {
            return Ok(snapshot(SdpStatus::Optimal, iter));
        }
        if iter == opts.max_iter {
            return Ok(snapshot(SdpStatus::MaxIter, iter));
        }
        let mu = xs / n_total as f64;

        let scal: Option<Vec<Scaling>> = (0..nb).map(|k| nt_scaling(&x[k], &s[k])).collect();
        let Some(scal) = scal else {
            return breakdown(iter, rel_gap);
        };
        let schur_m = schur(p, &scal);

        // Predictor.
        let rc: Vec<CMat> = x.iter().map(|xb| -xb).collect();
        let Some(aff) = direction(p, &scal, &schur_m, &rp, &rd, &rc) else {
            return breakdown(iter, rel_gap);
        };
        let (Some(ap), Some(ad)) = (max_step(&x, &aff.dx, 1.0), max_step(&s, &aff.ds, 1.0)) else {
            return breakdown(iter, rel_gap);
        };
        let x_aff: Vec<CMat> = x
            .iter()
            .zip(&aff.dx)
            .map(|(a, d)| a + d * c(ap, 0.0))
            .collect();
        let s_aff: Vec<CMat> = s
            .iter()
            .zip(&aff.ds)
            .map(|(a, d)| a + d * c(ad, 0.0))
            .collect();
        let mu_aff = inner(&x_aff, &s_aff) / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector in the scaled frame.
        let rc: Vec<CMat> = (0..nb)
            .map(|k| {
                let sc = &scal[k];
                let dxs = mm(&mm(&sc.g_inv, &aff.dx[k]), &sc.g_inv.adjoint());
                let dss = mm(&mm(&sc.g.adjoint(), &aff.ds[k]), &sc.g);
                let second = mm(&dxs, &dss) + mm(&dss, &dxs);
                let n = sc.d.len();
                let rsc = CMat::from_fn(n, n, |i, j| {
                    let mut v = -second[(i, j)];
                    if i == j {
                        v += c(2.0 * sigma * mu - 2.0 * sc.d[i] * sc.d[i], 0.0);
                    }
                    v / c(sc.d[i] + sc.d[j], 0.0)
                });
                herm(mm(&mm(&sc.g, &rsc), &sc.g.adjoint()))
            })
            .collect();
        let Some(dir) = direction(p, &scal, &schur_m, &rp, &rd, &rc) else {
            return breakdown(iter, rel_gap);
        };
        let (Some(ap), Some(ad)) = (max_step(&x, &dir.dx, tau), max_step(&s, &dir.ds, tau)) else {
            return breakdown(iter, rel_gap);
        };
        for k in 0..nb {
            x[k] = herm(&x[k] + &dir.dx[k] * c(ap, 0.0));
            s[k] = herm(&s[k] + &dir.ds[k] * c(ad, 0.0));
        }
        y += &dir.dy * ad;
    }
    unreachable!("loop returns at the iteration cap")
}

fn max_step(x: &[CMat], dx: &[CMat], tau: f64) -> Option<f64> {
    let mut a = 1.0_f64;
    for (xb, db) in x.iter().zip(dx) {
        a = a.min(step_length(xb, db, tau)?);
    }
    Some(a)
}

fn breakdown(iterations: usize, gap: f64) -> Result<SdpSolution> {
    Err(Error::SolverDivergence { iterations, gap })
}

/// Residual of `Re tr(A_j X) = b_j` plus PSD check, used by tests.
pub fn certify(p: &SdpProblem, sol: &SdpSolution) -> (f64, f64) {
    let rp = (&p.b - p.op(&sol.x)).norm();
    let s = p.c.iter().zip(p.adjoint_op(&sol.y)).map(|(cb, a)| cb - a);
    let min_eig = s
        .map(|m| linalg::eigvalsh(&herm(m)).min())
        .fold(f64::INFINITY, f64::min);
    (rp, min_eig)
}
