//! Monge-Kantorovich distances from seminorms, the Δ metrics on trace
//! channels, the D_L metric on unital CP maps and the Wasserstein-1 dual.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{check_same, Algebra, Element, LinearFunctional, TraceFunctional};
use crate::channels::{amplify, is_completely_positive, omega_tau, ChannelMap};
use crate::error::{Error, Result};
use crate::geometry::{Seminorm, TermKind};
use crate::linalg::{self, c, CMat, CVec, RMat, RVec, SparseMat, C64, I, ONE};
use crate::sdp::{self, SdpOptions, SdpProblem, SdpStatus};
use crate::{EPS_SOLVER, EPS_STRUCT};

/// Relative eigenvalue floor of the operator Gram matrix below which a
/// direction counts as a seminorm kernel direction.
const KERNEL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct MkOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for MkOptions {
    fn default() -> Self {
        MkOptions {
            tolerance: EPS_SOLVER,
            max_iter: 200,
        }
    }
}

impl MkOptions {
    fn sdp(&self) -> SdpOptions {
        SdpOptions {
            tolerance: self.tolerance,
            max_iter: self.max_iter,
        }
    }
}

/// Extended nonnegative real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Finite(f64),
    Infinite,
}

impl Distance {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Distance::Finite(v) => Some(*v),
            Distance::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Distance::Infinite)
    }

    /// `+∞` maps to `f64::INFINITY`; only for arithmetic in reports.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl Serialize for Distance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Distance::Finite(v) => s.serialize_f64(*v),
            Distance::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MkStatus {
    Optimal,
    Infinite,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct MkResult {
    pub value: Distance,
    /// Self-adjoint maximizer with `L ≤ 1`, or the kernel witness when infinite.
    pub optimizer: Element,
    pub dual_gap: f64,
    pub status: MkStatus,
    pub kernel_witness: Option<Element>,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl MkResult {
    /// Turn an iteration-capped result into `SolverDivergence`.
    pub fn require_converged(self) -> Result<Self> {
        match self.status {
            MkStatus::MaxIter => Err(Error::SolverDivergence {
                iterations: self.iterations,
                gap: self.dual_gap,
            }),
            _ => Ok(self),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MkProblem {
    pub phi: LinearFunctional,
    pub psi: LinearFunctional,
    pub seminorm: Seminorm,
    pub options: MkOptions,
}

impl MkProblem {
    pub fn new(phi: LinearFunctional, psi: LinearFunctional, seminorm: Seminorm) -> Self {
        MkProblem {
            phi,
            psi,
            seminorm,
            options: MkOptions::default(),
        }
    }
}

/// `mk_L(φ, ψ) = sup{|φ(a) − ψ(a)| : L(a) ≤ 1}`.
pub fn mk_distance(p: &MkProblem) -> Result<MkResult> {
    check_same(&p.seminorm.algebra, &p.phi.algebra)?;
    check_same(&p.seminorm.algebra, &p.psi.algebra)?;
    let mut warnings = Vec::new();
    for (name, f) in [("phi", &p.phi), ("psi", &p.psi)] {
        if !f.is_state() {
            warnings.push(format!(
                "{name} is not a state; using the difference functional"
            ));
        }
    }
    let mut res = mk_sup(&p.phi.sub(&p.psi)?, &p.seminorm, &p.options)?;
    res.warnings.extend(warnings);
    Ok(res)
}

/// Self-adjoint elements spanning the algebra over the reals.
pub fn self_adjoint_basis(alg: &Algebra) -> Vec<CVec> {
    let d = alg.dim();
    let mut cands = Vec::with_capacity(2 * d);
    for k in 0..d {
        let e = alg.basis_vector(k);
        let a = alg.adjoint(&e);
        for v in [&e + &a, (&e - &a) * I] {
            let n = v.norm();
            if n > EPS_STRUCT {
                cands.push(v / c(n, 0.0));
            }
        }
    }
    let real: Vec<RVec> = cands
        .iter()
        .map(|v| RVec::from_iterator(2 * d, v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im))))
        .collect();
    let gram = RMat::from_fn(real.len(), real.len(), |i, j| real[i].dot(&real[j]));
    linalg::independent_subset(&gram, 1e-10)
        .into_iter()
        .map(|k| cands[k].clone())
        .collect()
}

/// Operators of one seminorm term, as a function of real variables.
struct TermOps {
    ops: Vec<SparseMat>,
    hermitian: bool,
    /// Symmetry `γ O γ = −O` for all operators, when available.
    grading: Option<SparseMat>,
}

fn term_ops(ops: Vec<SparseMat>, grading: Option<&SparseMat>) -> TermOps {
    let scale = ops
        .iter()
        .map(SparseMat::max_abs)
        .fold(0.0, f64::max)
        .max(1.0);
    let hermitian = ops.iter().all(|o| o.is_hermitian(1e-12 * scale));
    let grading = grading.filter(|g| {
        ops.iter().all(|o| {
            let t = g.mul_sparse(o).mul_sparse(g);
            SparseMat::combine(o.nrows, o.ncols, &[(ONE, &t), (ONE, o)]).max_abs() <= 1e-12 * scale
        })
    });
    TermOps {
        ops,
        hermitian,
        grading: grading.cloned(),
    }
}

/// Real Gram matrix `Σ_k Re tr(O_kj* O_kl)`.
fn operator_gram(terms: &[TermOps], nvars: usize) -> RMat {
    let mut g = RMat::zeros(nvars, nvars);
    for t in terms {
        let h = t.ops.first().map_or(0, |o| o.nrows);
        let rows: Vec<Vec<f64>> = (0..nvars)
            .into_par_iter()
            .map(|i| {
                let mut dense = vec![C64::new(0.0, 0.0); h * h];
                for (r, c, z) in t.ops[i].entries() {
                    dense[r * h + c] += z;
                }
                (0..nvars)
                    .map(|j| {
                        t.ops[j]
                            .entries()
                            .map(|(r, c, z)| (dense[r * h + c].conj() * z).re)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        for i in 0..nvars {
            for j in 0..nvars {
                g[(i, j)] += 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
    }
    g
}

fn dilation(o: &SparseMat) -> SparseMat {
    let h = o.nrows;
    let mut out = SparseMat::zeros(2 * h, 2 * h);
    for (i, j, z) in o.entries() {
        out.rows[i].push((h + j, z));
        out.rows[h + j].push((i, z.conj()));
    }
    for r in &mut out.rows {
        r.sort_by_key(|e| e.0);
    }
    out
}

enum NormProgram {
    Infinite { direction: RVec },
    Solved { y: RVec, sol: sdp::SdpSolution },
}

/// `sup{b·y : Σ_k ‖Σ_j y_j O_kj‖ ≤ 1}` over real `y`.
fn solve_norm_program(b: &RVec, terms: &[TermOps], opts: &MkOptions) -> Result<NormProgram> {
    let n = b.len();
    let gram = operator_gram(terms, n);
    let kernel = linalg::real_kernel(&gram, KERNEL_REL_TOL);
    let mut best: Option<(f64, RVec)> = None;
    for k in 0..kernel.ncols() {
        let v = kernel.column(k).into_owned();
        let val = b.dot(&v);
        if val.abs() > EPS_STRUCT && best.as_ref().is_none_or(|(bv, _)| val.abs() > *bv) {
            best = Some((val.abs(), if val < 0.0 { -v } else { v }));
        }
    }
    if let Some((_, direction)) = best {
        return Ok(NormProgram::Infinite { direction });
    }
    let sel = linalg::independent_subset(&gram, KERNEL_REL_TOL);
    let m = sel.len();
    let multi = terms.len() > 1;
    let nv = m + if multi { terms.len() } else { 0 };

    let mut block_sizes = Vec::new();
    let mut cmat = Vec::new();
    // a[var] collects one sparse matrix per block.
    let mut a: Vec<Vec<SparseMat>> = vec![Vec::new(); nv];
    let push_block = |size: usize,
                      cb: CMat,
                      per_var: &dyn Fn(usize) -> SparseMat,
                      block_sizes: &mut Vec<usize>,
                      cmat: &mut Vec<CMat>,
                      a: &mut Vec<Vec<SparseMat>>| {
        block_sizes.push(size);
        cmat.push(cb);
        for (v, row) in a.iter_mut().enumerate() {
            row.push(per_var(v));
        }
    };
    for (k, t) in terms.iter().enumerate() {
        let h = t.ops.first().map_or(0, |o| o.nrows);
        let epi = |size: usize| {
            if multi {
                CMat::zeros(size, size)
            } else {
                CMat::identity(size, size)
            }
        };
        let t_var = m + k;
        let var_op = |v: usize, size: usize, f: &dyn Fn(&SparseMat) -> SparseMat| -> SparseMat {
            if v < m {
                f(&t.ops[sel[v]])
            } else if v == t_var && multi {
                SparseMat::identity(size).scale(-ONE)
            } else {
                SparseMat::zeros(size, size)
            }
        };
        if !t.hermitian {
            let f = |o: &SparseMat| dilation(o);
            push_block(
                2 * h,
                epi(2 * h),
                &|v| var_op(v, 2 * h, &f),
                &mut block_sizes,
                &mut cmat,
                &mut a,
            );
        } else {
            let plus = |o: &SparseMat| o.clone();
            push_block(
                h,
                epi(h),
                &|v| var_op(v, h, &plus),
                &mut block_sizes,
                &mut cmat,
                &mut a,
            );
            if t.grading.is_none() {
                let minus = |o: &SparseMat| o.scale(-ONE);
                push_block(
                    h,
                    epi(h),
                    &|v| var_op(v, h, &minus),
                    &mut block_sizes,
                    &mut cmat,
                    &mut a,
                );
            }
        }
    }
    if multi {
        // Σ_k t_k ≤ 1
        let one = |v: usize| {
            let mut s = SparseMat::zeros(1, 1);
            if v >= m {
                s.rows[0].push((0, ONE));
            }
            s
        };
        push_block(
            1,
            CMat::identity(1, 1),
            &one,
            &mut block_sizes,
            &mut cmat,
            &mut a,
        );
    }
    let mut bb = RVec::zeros(nv);
    for (i, &j) in sel.iter().enumerate() {
        bb[i] = b[j];
    }
    let problem = SdpProblem {
        block_sizes,
        c: cmat,
        a,
        b: bb,
    };
    let sol = sdp::solve(&problem, &opts.sdp())?;
    let mut y = RVec::zeros(n);
    for (i, &j) in sel.iter().enumerate() {
        y[j] = sol.y[i];
    }
    Ok(NormProgram::Solved { y, sol })
}

fn combine_coords(basis: &[CVec], y: &RVec, dim: usize) -> CVec {
    let mut out = CVec::zeros(dim);
    for (v, &w) in basis.iter().zip(y.iter()) {
        if w != 0.0 {
            out += v * c(w, 0.0);
        }
    }
    out
}

fn build_terms(seminorm: &Seminorm, elems: &[CVec], complex: bool) -> Vec<TermOps> {
    seminorm
        .terms
        .iter()
        .map(|t| {
            let base: Vec<SparseMat> = elems.par_iter().map(|x| t.operator(x)).collect();
            let ops: Vec<SparseMat> = match (&t.kind, complex) {
                // i[D, π(a)] is Hermitian for self-adjoint a.
                (TermKind::Commutator { .. }, false) => base.iter().map(|o| o.scale(I)).collect(),
                (_, false) => base,
                (_, true) => base
                    .iter()
                    .cloned()
                    .chain(base.iter().map(|o| o.scale(I)))
                    .collect(),
            };
            term_ops(ops, t.grading())
        })
        .collect()
}

/// `sup{Re f(a) : a self-adjoint, L(a) ≤ 1}`, which equals `sup |f(a)|`
/// when `f` is Hermitian.
pub fn mk_sup(f: &LinearFunctional, seminorm: &Seminorm, opts: &MkOptions) -> Result<MkResult> {
    check_same(&seminorm.algebra, &f.algebra)?;
    let alg = &f.algebra;
    let d = alg.dim();
    let basis = self_adjoint_basis(alg);
    let mut b = RVec::from_iterator(basis.len(), basis.iter().map(|s| f.eval(s).re));
    let mut warnings = Vec::new();
    if !f.is_hermitian() {
        warnings.push("functional is not Hermitian; maximizing its real part".into());
    }
    let zero = Element {
        algebra: alg.clone(),
        coords: CVec::zeros(d),
    };
    if b.iter().all(|v| v.abs() < 1e-15) {
        return Ok(MkResult {
            value: Distance::Finite(0.0),
            optimizer: zero,
            dual_gap: 0.0,
            status: MkStatus::Optimal,
            kernel_witness: None,
            iterations: 0,
            warnings,
        });
    }
    // The program is symmetric under b ↦ −b; fix the sign so that swapping
    // the two functionals reproduces the same floating-point path.
    let flip = b
        .iter()
        .find(|v| v.abs() >= 1e-15)
        .is_some_and(|v| *v < 0.0);
    if flip {
        b = -b;
    }
    let sign = if flip { -1.0 } else { 1.0 };
    let terms = build_terms(seminorm, &basis, false);
    match solve_norm_program(&b, &terms, opts)? {
        NormProgram::Infinite { direction } => {
            let k = combine_coords(&basis, &(direction * sign), d);
            let witness = Element {
                algebra: alg.clone(),
                coords: k,
            };
            Ok(MkResult {
                value: Distance::Infinite,
                optimizer: witness.clone(),
                dual_gap: 0.0,
                status: MkStatus::Infinite,
                kernel_witness: Some(witness),
                iterations: 0,
                warnings,
            })
        }
        NormProgram::Solved { y, sol } => {
            let a = combine_coords(&basis, &(y * sign), d);
            Ok(MkResult {
                value: Distance::Finite(sol.dual_objective.max(0.0)),
                optimizer: Element {
                    algebra: alg.clone(),
                    coords: a,
                },
                dual_gap: sol.primal_objective - sol.dual_objective,
                status: match sol.status {
                    SdpStatus::Optimal => MkStatus::Optimal,
                    SdpStatus::MaxIter => MkStatus::MaxIter,
                },
                kernel_witness: None,
                iterations: sol.iterations,
                warnings,
            })
        }
    }
}

/// `sup{|f(a)| : a arbitrary, L(a) ≤ 1}`, through the dilation
/// `[[I, T(a)], [T(a)*, I]] ⪰ 0` of every term.
pub fn mk_complex_domain(
    f: &LinearFunctional,
    seminorm: &Seminorm,
    opts: &MkOptions,
) -> Result<MkResult> {
    check_same(&seminorm.algebra, &f.algebra)?;
    let alg = &f.algebra;
    let d = alg.dim();
    let basis = self_adjoint_basis(alg);
    let n = basis.len();
    // a = Σ (y_j + i z_j) s_j, Re f(a) = Σ y_j Re f(s_j) − z_j Im f(s_j).
    let vals: Vec<C64> = basis.iter().map(|s| f.eval(s)).collect();
    let b = RVec::from_iterator(
        2 * n,
        vals.iter().map(|v| v.re).chain(vals.iter().map(|v| -v.im)),
    );
    let elems = |y: &RVec| -> CVec {
        let mut out = CVec::zeros(d);
        for j in 0..n {
            out += &basis[j] * c(y[j], y[n + j]);
        }
        out
    };
    let mut terms = build_terms(seminorm, &basis, true);
    for t in &mut terms {
        t.hermitian = false;
        t.grading = None;
    }
    if b.iter().all(|v| v.abs() < 1e-15) {
        return Ok(MkResult {
            value: Distance::Finite(0.0),
            optimizer: Element {
                algebra: alg.clone(),
                coords: CVec::zeros(d),
            },
            dual_gap: 0.0,
            status: MkStatus::Optimal,
            kernel_witness: None,
            iterations: 0,
            warnings: Vec::new(),
        });
    }
    match solve_norm_program(&b, &terms, opts)? {
        NormProgram::Infinite { direction } => {
            let w = Element {
                algebra: alg.clone(),
                coords: elems(&direction),
            };
            Ok(MkResult {
                value: Distance::Infinite,
                optimizer: w.clone(),
                dual_gap: 0.0,
                status: MkStatus::Infinite,
                kernel_witness: Some(w),
                iterations: 0,
                warnings: Vec::new(),
            })
        }
        NormProgram::Solved { y, sol } => Ok(MkResult {
            value: Distance::Finite(sol.dual_objective.max(0.0)),
            optimizer: Element {
                algebra: alg.clone(),
                coords: elems(&y),
            },
            dual_gap: sol.primal_objective - sol.dual_objective,
            status: if sol.status == SdpStatus::Optimal {
                MkStatus::Optimal
            } else {
                MkStatus::MaxIter
            },
            kernel_witness: None,
            iterations: sol.iterations,
            warnings: Vec::new(),
        }),
    }
}

fn require_trace_channel(label: &str, f: &ChannelMap, tau: &TraceFunctional) -> Result<()> {
    let cp = is_completely_positive(f, tau)?;
    let t = tau.eval(&f.apply(f.source.unit()));
    let normalized = (t - ONE).norm() < EPS_STRUCT;
    if cp.is_cp && normalized {
        return Ok(());
    }
    let mut failed = Vec::new();
    if !cp.is_cp {
        failed.push(format!(
            "not completely positive (min eigenvalue {:.3e})",
            cp.min_eigenvalue
        ));
    }
    if !normalized {
        failed.push(format!("τ(F(1)) = {:.6} + {:.6}i, expected 1", t.re, t.im));
    }
    Err(Error::NotTraceChannel(format!(
        "{label}: {}",
        failed.join("; ")
    )))
}

/// `Δ_{τ,L}(F, G) = mk_L(ω_τ(F), ω_τ(G))`.
pub fn delta_distance(
    f: &ChannelMap,
    g: &ChannelMap,
    tau: &TraceFunctional,
    seminorm: &Seminorm,
    opts: &MkOptions,
) -> Result<MkResult> {
    require_trace_channel("F", f, tau)?;
    require_trace_channel("G", g, tau)?;
    let wf = omega_tau(f, tau)?.functional;
    let wg = omega_tau(g, tau)?.functional;
    check_same(&seminorm.algebra, &wf.algebra)?;
    mk_sup(&wf.sub(&wg)?, seminorm, opts)
}

/// Outcome of the Wasserstein-1 dual program.
#[derive(Debug, Clone)]
pub struct WassersteinResult {
    /// `Σ_i ‖u_i‖₁` at the optimum.
    pub value: f64,
    pub u: Vec<CMat>,
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

/// `inf{Σ_i ‖u_i‖₁ : Σ_i [L_i, u_i] = ρ₁ − ρ₂}` as a semidefinite program.
pub fn wasserstein_dual(
    rho1: &Element,
    rho2: &Element,
    ls: &[CMat],
    opts: &MkOptions,
) -> Result<WassersteinResult> {
    check_same(&rho1.algebra, &rho2.algebra)?;
    let n = rho1.algebra.ambient_dim();
    if rho1.algebra.dim() != n * n {
        return Err(Error::InvalidInput(
            "wasserstein_dual needs a full matrix algebra".into(),
        ));
    }
    let (r1, r2) = (rho1.realize(), rho2.realize());
    for (name, r) in [("rho1", &r1), ("rho2", &r2)] {
        let psd =
            linalg::is_hermitian(r, EPS_STRUCT) && linalg::psd_report(r, crate::EPS_PSD).is_psd;
        if !psd || (r.trace() - ONE).norm() > EPS_STRUCT {
            return Err(Error::InvalidInput(format!(
                "{name} is not a density matrix"
            )));
        }
    }
    if ls.is_empty()
        || ls
            .iter()
            .any(|l| l.nrows() != n || l.ncols() != n || !linalg::is_hermitian(l, EPS_STRUCT))
    {
        return Err(Error::InvalidInput(format!(
            "expected Hermitian {n}x{n} operators L_i"
        )));
    }
    let nb = ls.len();
    let delta = &r1 - &r2;
    let zero_result = || WassersteinResult {
        value: 0.0,
        u: vec![CMat::zeros(n, n); nb],
        gap: 0.0,
        status: SdpStatus::Optimal,
        iterations: 0,
    };
    if linalg::max_abs(&delta) < 1e-15 {
        return Ok(zero_result());
    }

    // Constraint (r, c, part): part of tr(K u_i) summed over i, K = [e_cr, L_i].
    // Hermitian A with α at (n+a, b) and conj(α) at (b, n+a) gives Re tr(A X) = Re Σ α_ab u_ba.
    let ncons = 2 * n * n;
    let nparams = 2 * n * n * nb;
    let mut tmat = RMat::zeros(ncons, nparams);
    let mut rhs = RVec::zeros(ncons);
    let mut raw: Vec<Vec<SparseMat>> = Vec::with_capacity(ncons);
    for r in 0..n {
        for cc in 0..n {
            for part in 0..2 {
                let row = (r * n + cc) * 2 + part;
                rhs[row] = if part == 0 {
                    delta[(r, cc)].re
                } else {
                    delta[(r, cc)].im
                };
                let mut blocks = Vec::with_capacity(nb);
                for (i, l) in ls.iter().enumerate() {
                    let e = linalg::matrix_unit(n, cc, r);
                    let k = linalg::commutator(&e, l);
                    let k = if part == 0 { k } else { k * c(0.0, -1.0) };
                    let mut a = SparseMat::zeros(2 * n, 2 * n);
                    for aa in 0..n {
                        for bb in 0..n {
                            let alpha = k[(aa, bb)];
                            if alpha.norm() == 0.0 {
                                continue;
                            }
                            a.rows[n + aa].push((bb, alpha * 0.5));
                            a.rows[bb].push((n + aa, alpha.conj() * 0.5));
                            // u_ba = x + i y contributes Re(α)x − Im(α)y
                            let p = ((i * n + bb) * n + aa) * 2;
                            tmat[(row, p)] += alpha.re;
                            tmat[(row, p + 1)] -= alpha.im;
                        }
                    }
                    for rr in &mut a.rows {
                        rr.sort_by_key(|e| e.0);
                    }
                    blocks.push(a);
                }
                raw.push(blocks);
            }
        }
    }
    // Orthonormal basis of the constraint range.
    let svd = tmat.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > 1e-10 * smax.max(1e-300))
        .collect();
    let mut proj = RVec::zeros(ncons);
    let mut b = RVec::zeros(keep.len());
    for (t, &k) in keep.iter().enumerate() {
        let col = u.column(k);
        b[t] = col.dot(&rhs);
        proj += col * b[t];
    }
    let residual = (&rhs - proj).norm();
    if residual > EPS_STRUCT * rhs.norm().max(1.0) {
        return Err(Error::Infeasible { residual });
    }
    let a: Vec<Vec<SparseMat>> = keep
        .iter()
        .map(|&k| {
            (0..nb)
                .map(|i| {
                    let parts: Vec<(C64, &SparseMat)> = (0..ncons)
                        .filter(|&j| u[(j, k)] != 0.0)
                        .map(|j| (c(u[(j, k)], 0.0), &raw[j][i]))
                        .collect();
                    SparseMat::combine(2 * n, 2 * n, &parts)
                })
                .collect()
        })
        .collect();
    let problem = SdpProblem {
        block_sizes: vec![2 * n; nb],
        c: vec![CMat::identity(2 * n, 2 * n) * c(0.5, 0.0); nb],
        a,
        b,
    };
    let sol = sdp::solve(&problem, &opts.sdp())?;
    let u = sol
        .x
        .iter()
        .map(|x| x.view((0, n), (n, n)).into_owned())
        .collect();
    Ok(WassersteinResult {
        value: sol.primal_objective,
        u,
        gap: sol.primal_objective - sol.dual_objective,
        status: sol.status,
        iterations: sol.iterations,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct DlOptions {
    pub mk: MkOptions,
    pub starts: usize,
    pub seed: u64,
    pub max_rounds: usize,
}

impl Default for DlOptions {
    fn default() -> Self {
        DlOptions {
            mk: MkOptions::default(),
            starts: 8,
            seed: 0,
            max_rounds: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DlResult {
    /// Certified lower bound on `D_L(F, G)`.
    pub value: Distance,
    /// False when some start hit the round cap before its value settled.
    pub converged: bool,
    pub best_seed: u64,
    pub status: MkStatus,
    pub rounds: usize,
}

fn dl_single_start(
    diff: &ChannelMap,
    seminorm: &Seminorm,
    opts: &DlOptions,
    seed: u64,
) -> Result<(DlResult, Option<f64>)> {
    let nb = diff.target.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi = CVec::from_fn(nb, |_, _| {
        c(
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        )
    });
    xi /= c(xi.norm(), 0.0);
    let realized: Vec<CMat> = (0..diff.source.dim())
        .map(|j| diff.target.realize(&diff.matrix.column(j).into_owned()))
        .collect();
    let mut best = 0.0_f64;
    let mut prev = -1.0_f64;
    let mut status = MkStatus::Optimal;
    for round in 0..opts.max_rounds {
        let values = CVec::from_iterator(
            realized.len(),
            realized.iter().map(|m| (xi.adjoint() * m * &xi)[(0, 0)]),
        );
        let phi = LinearFunctional {
            algebra: diff.source.clone(),
            values,
        };
        let res = mk_sup(&phi, seminorm, &opts.mk)?;
        match res.status {
            MkStatus::Infinite => {
                return Ok((
                    DlResult {
                        value: Distance::Infinite,
                        converged: true,
                        best_seed: seed,
                        status: res.status,
                        rounds: round + 1,
                    },
                    None,
                ));
            }
            MkStatus::MaxIter => status = MkStatus::MaxIter,
            MkStatus::Optimal => {}
        }
        let a = &res.optimizer.coords;
        let la = seminorm.eval_coords(a).max(1.0);
        let img = diff.target.realize(&diff.apply(a));
        let (vals, vecs) = linalg::eigh(&linalg::hermitian_part(&img));
        let k = if vals[0].abs() >= vals[vals.len() - 1].abs() {
            0
        } else {
            vals.len() - 1
        };
        let bound = vals[k].abs() / la;
        best = best.max(bound);
        xi = vecs.column(k).into_owned();
        if (bound - prev).abs() <= 1e-10 * bound.max(1.0) {
            return Ok((
                DlResult {
                    value: Distance::Finite(best),
                    converged: true,
                    best_seed: seed,
                    status,
                    rounds: round + 1,
                },
                Some(best),
            ));
        }
        prev = bound;
    }
    Ok((
        DlResult {
            value: Distance::Finite(best),
            converged: false,
            best_seed: seed,
            status,
            rounds: opts.max_rounds,
        },
        Some(best),
    ))
}

/// Multi-start alternating ascent for
/// `D_L(F, G) = sup{‖(F − G)(a)‖ : a self-adjoint, L(a) ≤ 1}`.
pub fn dl_distance(
    f: &ChannelMap,
    g: &ChannelMap,
    seminorm: &Seminorm,
    opts: &DlOptions,
) -> Result<DlResult> {
    check_same(&f.source, &g.source)?;
    check_same(&f.target, &g.target)?;
    check_same(&seminorm.algebra, &f.source)?;
    let diff = f.sub(g)?;
    let zero_image = linalg::max_abs(&diff.matrix) == 0.0;
    if zero_image {
        return Ok(DlResult {
            value: Distance::Finite(0.0),
            converged: true,
            best_seed: opts.seed,
            status: MkStatus::Optimal,
            rounds: 0,
        });
    }
    let starts = opts.starts.max(1);
    let runs: Vec<Result<(DlResult, Option<f64>)>> = (0..starts as u64)
        .into_par_iter()
        .map(|s| dl_single_start(&diff, seminorm, opts, opts.seed.wrapping_add(s)))
        .collect();
    let mut best: Option<DlResult> = None;
    let mut converged = true;
    let mut status = MkStatus::Optimal;
    for run in runs {
        let (r, _) = run?;
        converged &= r.converged;
        if r.status == MkStatus::MaxIter {
            status = MkStatus::MaxIter;
        }
        let better = match &best {
            None => true,
            Some(b) => match (r.value, b.value) {
                (Distance::Infinite, Distance::Finite(_)) => true,
                (Distance::Finite(x), Distance::Finite(y)) => {
                    x > y || (x == y && r.best_seed < b.best_seed)
                }
                _ => false,
            },
        };
        if better {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one start");
    best.converged = converged;
    if best.status != MkStatus::Infinite {
        best.status = status;
    }
    Ok(best)
}

/// Seminorm on `M_m ⊗ A` for each amplification depth.
pub type SeminormFamily<'a> = dyn Fn(usize, &Algebra) -> Result<Seminorm> + Sync + 'a;

/// Operator norm at every depth.
pub fn operator_norm_family(_m: usize, alg: &Algebra) -> Result<Seminorm> {
    Ok(Seminorm::operator_norm(alg))
}

#[derive(Debug, Clone, Serialize)]
pub struct DlStabilized {
    pub value: Distance,
    pub per_depth: Vec<DlResult>,
}

/// `max_{m ≤ m_max} D_{L_m}(id_m ⊗ F, id_m ⊗ G)`.
pub fn dl_stabilized(
    f: &ChannelMap,
    g: &ChannelMap,
    family: &SeminormFamily<'_>,
    m_max: usize,
    opts: &DlOptions,
) -> Result<DlStabilized> {
    if m_max == 0 {
        return Err(Error::InvalidInput("m_max must be at least 1".into()));
    }
    let mut per_depth = Vec::with_capacity(m_max);
    let mut value = Distance::Finite(0.0);
    for m in 1..=m_max {
        let (fm, gm) = (amplify(m, f), amplify(m, g));
        let l = family(m, &fm.source)?;
        let r = dl_distance(&fm, &gm, &l, opts)?;
        value = match (value, r.value) {
            (Distance::Finite(a), Distance::Finite(b)) => Distance::Finite(a.max(b)),
            _ => Distance::Infinite,
        };
        per_depth.push(r);
    }
    Ok(DlStabilized { value, per_depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{diagonal_algebra, matrix_algebra, tensor_algebra};
    use crate::geometry::{ambient_triple, metric_space_triple};
    use crate::linalg::ZERO;

    fn point_state(alg: &Algebra, k: usize) -> LinearFunctional {
        let mut v = CVec::zeros(alg.dim());
        v[k] = ONE;
        LinearFunctional {
            algebra: alg.clone(),
            values: v,
        }
    }

    fn two_point(d: f64) -> (Algebra, Seminorm) {
        let alg = diagonal_algebra(2);
        let dist = RMat::from_row_slice(2, 2, &[0.0, d, d, 0.0]);
        let t = metric_space_triple(&alg, &dist).unwrap();
        (alg, Seminorm::commutator(&t))
    }

    #[test]
    fn two_point_space_reproduces_distance() {
        for d in [0.5, 1.0, 2.0] {
            let (alg, l) = two_point(d);
            let r = mk_distance(&MkProblem::new(
                point_state(&alg, 0),
                point_state(&alg, 1),
                l.clone(),
            ))
            .unwrap();
            assert_eq!(r.status, MkStatus::Optimal);
            let v = r.value.finite().unwrap();
            assert!((v - d).abs() < 1e-7, "{v} vs {d}");
            assert!(l.eval_coords(&r.optimizer.coords) <= 1.0 + 1e-7);
            assert!(r.optimizer.is_self_adjoint());
        }
    }

    #[test]
    fn identical_states_give_zero() {
        let (alg, l) = two_point(1.0);
        let r = mk_distance(&MkProblem::new(
            point_state(&alg, 0),
            point_state(&alg, 0),
            l,
        ))
        .unwrap();
        assert_eq!(r.value, Distance::Finite(0.0));
        assert_eq!(r.optimizer.coords, CVec::zeros(2));
    }

    #[test]
    fn kernel_of_one_sided_tensor_seminorm() {
        let (b, lb) = two_point(1.0);
        let a = diagonal_algebra(2);
        let l = lb.right_tensor(&a).unwrap();
        let ab = tensor_algebra(&a, &b);
        // product states differing only on A
        let phi = crate::algebra::tensor_functional(&point_state(&a, 0), &point_state(&b, 0));
        let psi = crate::algebra::tensor_functional(&point_state(&a, 1), &point_state(&b, 0));
        assert!(crate::algebra::same_algebra(&phi.algebra, &ab));
        let r = mk_distance(&MkProblem::new(phi.clone(), psi.clone(), l.clone())).unwrap();
        assert!(r.value.is_infinite());
        let k = r.kernel_witness.unwrap();
        assert!(l.eval_coords(&k.coords) < EPS_STRUCT);
        assert!((phi.eval(&k.coords) - psi.eval(&k.coords)).norm() > EPS_STRUCT);
    }

    #[test]
    fn symmetric_to_the_last_bit() {
        let alg = matrix_algebra(2);
        let t = ambient_triple(
            &alg,
            &[CMat::from_diagonal(&CVec::from_vec(vec![ONE, -ONE]))],
        )
        .unwrap();
        let l = Seminorm::commutator(&t);
        let rho = |p: f64, z: C64| {
            let m = CMat::from_row_slice(2, 2, &[c(p, 0.0), z, z.conj(), c(1.0 - p, 0.0)]);
            let vals = CVec::from_fn(4, |k, _| (&m * &alg.basis()[k]).trace());
            LinearFunctional {
                algebra: alg.clone(),
                values: vals,
            }
        };
        let (p, q) = (rho(0.7, c(0.1, 0.2)), rho(0.4, c(-0.2, 0.05)));
        let a = mk_distance(&MkProblem::new(p.clone(), q.clone(), l.clone())).unwrap();
        let b = mk_distance(&MkProblem::new(q, p, l)).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn wasserstein_examples() {
        let alg = matrix_algebra(2);
        let e = |i: usize| Element {
            algebra: alg.clone(),
            coords: alg.coords_of(&linalg::matrix_unit(2, i, i)).0,
        };
        let z = CMat::from_diagonal(&CVec::from_vec(vec![ONE, -ONE]));
        let same = wasserstein_dual(
            &e(0),
            &e(0),
            std::slice::from_ref(&z),
            &MkOptions::default(),
        )
        .unwrap();
        assert_eq!(same.value, 0.0);
        match wasserstein_dual(&e(0), &e(1), &[CMat::identity(2, 2)], &MkOptions::default()) {
            Err(Error::Infeasible { residual }) => assert!(residual > 0.5),
            other => panic!("expected Infeasible, got {other:?}"),
        }
        // With L = σz the diagonal difference is outside the commutator range as well.
        assert!(matches!(
            wasserstein_dual(
                &e(0),
                &e(1),
                std::slice::from_ref(&z),
                &MkOptions::default()
            ),
            Err(Error::Infeasible { .. })
        ));
        let t = ambient_triple(&alg, &[z]).unwrap();
        let l = Seminorm::commutator(&t);
        let r = mk_distance(&MkProblem::new(
            point_functional(&alg, 0),
            point_functional(&alg, 3),
            l,
        ))
        .unwrap();
        assert!(r.value.is_infinite());
    }

    fn point_functional(alg: &Algebra, k: usize) -> LinearFunctional {
        // Vector state on e_k for k in {0, 3} of the matrix-unit basis.
        let m = if k == 0 {
            linalg::matrix_unit(2, 0, 0)
        } else {
            linalg::matrix_unit(2, 1, 1)
        };
        let vals = CVec::from_fn(alg.dim(), |j, _| (&m * &alg.basis()[j]).trace());
        LinearFunctional {
            algebra: alg.clone(),
            values: vals,
        }
    }

    #[test]
    fn primal_matches_dual_for_offdiagonal_dirac() {
        let alg = matrix_algebra(2);
        let sx = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let t = ambient_triple(&alg, std::slice::from_ref(&sx)).unwrap();
        let l = Seminorm::commutator(&t);
        let e = |i: usize| Element {
            algebra: alg.clone(),
            coords: alg.coords_of(&linalg::matrix_unit(2, i, i)).0,
        };
        let w = wasserstein_dual(&e(0), &e(1), &[sx], &MkOptions::default()).unwrap();
        let r = mk_distance(&MkProblem::new(
            point_functional(&alg, 0),
            point_functional(&alg, 3),
            l,
        ))
        .unwrap();
        let v = r.value.finite().unwrap();
        assert!((v - w.value).abs() < 1e-6, "{v} vs {}", w.value);
        // [σx, a] for diagonal a = diag(1, −1)/2 has norm 1 and pairs to 1.
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn complex_domain_agrees_on_hermitian_difference() {
        let (alg, l) = two_point(1.5);
        let f = point_state(&alg, 0).sub(&point_state(&alg, 1)).unwrap();
        let a = mk_sup(&f, &l, &MkOptions::default()).unwrap();
        let b = mk_complex_domain(&f, &l, &MkOptions::default()).unwrap();
        assert!((a.value.finite().unwrap() - b.value.finite().unwrap()).abs() < 1e-7);
    }

    #[test]
    fn dl_on_diagonal_target_matches_pure_states() {
        let (alg, l) = two_point(1.0);
        let swap = ChannelMap::new(
            &alg,
            &alg,
            CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        )
        .unwrap();
        let id = ChannelMap::identity(&alg);
        let r = dl_distance(&id, &swap, &l, &DlOptions::default()).unwrap();
        // (id − swap)(a) = (a1 − a2, a2 − a1): norm |a1 − a2| ≤ 1 → value 1
        let v = r.value.finite().unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
        let zero = dl_distance(&id, &id, &l, &DlOptions::default()).unwrap();
        assert_eq!(zero.value, Distance::Finite(0.0));
    }

    #[test]
    fn stabilized_monotone() {
        let alg = matrix_algebra(2);
        let id = ChannelMap::identity(&alg);
        let tr =
            ChannelMap::from_ambient_fn(&alg, &alg, |m| CMat::identity(2, 2) * (m.trace() * 0.5))
                .unwrap();
        let opts = DlOptions {
            starts: 2,
            ..Default::default()
        };
        let s1 = dl_stabilized(&id, &tr, &operator_norm_family, 1, &opts).unwrap();
        let plain = dl_distance(&id, &tr, &Seminorm::operator_norm(&alg), &opts).unwrap();
        assert_eq!(s1.value, plain.value);
        let s2 = dl_stabilized(&id, &tr, &operator_norm_family, 2, &opts).unwrap();
        assert!(s2.value.as_f64() >= s1.value.as_f64());
    }
}
