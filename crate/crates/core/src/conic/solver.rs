//! Homogeneous self-dual embedding with Nesterov-Todd scaling and Mehrotra
//! predictor-corrector steps.
//!
//! Residuals of the embedding at `(x, y, z, s, tau, kappa)`:
//!
//! ```text
//!   r_x = A^T y + G^T z + c tau
//!   r_y = b tau - A x
//!   r_z = h tau - G x - s
//!   r_t = kappa + c^T x + b^T y + h^T z
//! ```

use super::cones::{dot, jordan, jordan_solve, max_step_lambda, norm, LambdaBlock, Op, Scaling};
use super::{Cone, ConicProblem, ConicSolution, ConicStatus, SolverOptions};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use std::ops::Range;

/// Rows whose residual after orthogonalization falls below this fraction of
/// their norm are treated as dependent.
const RANK_TOL: f64 = 1e-10;

/// Extra iterations allowed to push `s^T z` below `comp_tol` after the
/// optimality tolerances are met.
const MAX_POLISH: usize = 8;

struct Block {
    range: Range<usize>,
    cone: Cone,
    w: Scaling,
    lam: LambdaBlock,
}

struct Blocks(Vec<Block>);

impl Blocks {
    fn identity(p: &ConicProblem) -> Self {
        let blocks = p
            .cone_ranges()
            .into_iter()
            .zip(&p.cones)
            .map(|(range, &cone)| {
                let w = match cone {
                    Cone::NonNeg(d) => Scaling::NonNeg { d: vec![1.0; d] },
                    Cone::SecondOrder(d) => {
                        let mut v = vec![0.0; d];
                        v[0] = 1.0;
                        Scaling::Soc { beta: 1.0, v }
                    }
                    Cone::Psd(n) => Scaling::Psd { r: DMatrix::identity(n, n), rinv: DMatrix::identity(n, n) },
                };
                let mut e = vec![0.0; cone.dim()];
                cone.identity_into(&mut e);
                Block { range, cone, w, lam: LambdaBlock::Vector(e) }
            })
            .collect();
        Blocks(blocks)
    }

    fn nt(p: &ConicProblem, s: &[f64], z: &[f64]) -> Option<Self> {
        let mut out = Vec::with_capacity(p.cones.len());
        for (range, &cone) in p.cone_ranges().into_iter().zip(&p.cones) {
            let (w, lam) = Scaling::compute(cone, &s[range.clone()], &z[range.clone()])?;
            out.push(Block { range, cone, w, lam });
        }
        Some(Blocks(out))
    }

    fn apply(&self, op: Op, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for b in &self.0 {
            b.w.apply(op, &x[b.range.clone()], &mut out[b.range.clone()]);
        }
        out
    }

    fn lambda(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for b in &self.0 {
            out[b.range.clone()].copy_from_slice(&b.lam.to_vec(b.cone));
        }
        out
    }

    /// `lambda \ y` blockwise.
    fn lambda_solve(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for b in &self.0 {
            jordan_solve(b.cone, &b.lam, &y[b.range.clone()], &mut out[b.range.clone()]);
        }
        out
    }

    fn jordan(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for b in &self.0 {
            let r = b.range.clone();
            jordan(b.cone, &x[r.clone()], &y[r.clone()], &mut out[r]);
        }
        out
    }

    fn identity_vec(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for b in &self.0 {
            b.cone.identity_into(&mut out[b.range.clone()]);
        }
        out
    }

    /// Largest step keeping `lambda + alpha d` in the cone.
    fn max_step(&self, d: &[f64]) -> f64 {
        self.0.iter().map(|b| max_step_lambda(b.cone, &b.lam, &d[b.range.clone()])).fold(f64::INFINITY, f64::min)
    }
}

enum Factor {
    /// Upper-triangular `R` of `W^{-T} G = Q R`, so `H = R^T R` is never formed.
    Qr(DMatrix<f64>),
    Chol(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

/// Solver for `[0 A^T G^T; A 0 0; G 0 -W^T W] u = r` at fixed scaling.
struct Kkt<'a> {
    g: &'a DMatrix<f64>,
    a: &'a DMatrix<f64>,
    blocks: &'a Blocks,
    /// `W^{-T} G`
    gt: DMatrix<f64>,
    factor: Factor,
    refine: usize,
}

struct Dir {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl<'a> Kkt<'a> {
    fn new(g: &'a DMatrix<f64>, a: &'a DMatrix<f64>, blocks: &'a Blocks, refine: usize) -> Option<Self> {
        let (m, n) = g.shape();
        let p = a.nrows();
        let mut gt = DMatrix::zeros(m, n);
        for j in 0..n {
            let col: Vec<f64> = g.column(j).iter().copied().collect();
            let t = blocks.apply(Op::Wtinv, &col);
            gt.column_mut(j).copy_from_slice(&t);
        }
        let factor = if p == 0 {
            let r = gt.clone().qr().r();
            let dmax = r.diagonal().amax();
            if m >= n && r.diagonal().iter().all(|d| d.abs() > 1e-14 * dmax) {
                Factor::Qr(r)
            } else {
                let h = gt.tr_mul(&gt);
                match Cholesky::new(h.clone()) {
                    Some(c) => Factor::Chol(c),
                    None => {
                        let reg = 1e-13 * h.diagonal().amax().max(1.0);
                        Factor::Lu((&h + DMatrix::identity(n, n) * reg).lu())
                    }
                }
            }
        } else {
            let h = gt.tr_mul(&gt);
            let mut k = DMatrix::zeros(n + p, n + p);
            k.view_mut((0, 0), (n, n)).copy_from(&h);
            k.view_mut((n, 0), (p, n)).copy_from(a);
            k.view_mut((0, n), (n, p)).copy_from(&a.transpose());
            Factor::Lu(k.lu())
        };
        if let Factor::Lu(lu) = &factor {
            if !lu.is_invertible() {
                return None;
            }
        }
        Some(Self { g, a, blocks, gt, factor, refine })
    }

    fn solve_once(&self, bx: &[f64], by: &[f64], bz: &[f64]) -> Option<Dir> {
        let n = self.g.ncols();
        let p = self.a.nrows();
        let t = DVector::from_vec(self.blocks.apply(Op::Wtinv, bz));
        let rx = DVector::from_column_slice(bx) + self.gt.tr_mul(&t);
        let (ux, uy) = match &self.factor {
            Factor::Qr(r) => {
                let v = r.tr_solve_upper_triangular(&rx)?;
                (r.solve_upper_triangular(&v)?, DVector::zeros(0))
            }
            Factor::Chol(c) => (c.solve(&rx), DVector::zeros(0)),
            Factor::Lu(lu) => {
                let mut rhs = DVector::zeros(n + p);
                rhs.rows_mut(0, n).copy_from(&rx);
                rhs.rows_mut(n, p).copy_from_slice(by);
                let sol = lu.solve(&rhs)?;
                (sol.rows(0, n).into_owned(), sol.rows(n, p).into_owned())
            }
        };
        let v = &self.gt * &ux - t;
        let uz = self.blocks.apply(Op::Winv, v.as_slice());
        Some(Dir { x: ux.as_slice().to_vec(), y: uy.as_slice().to_vec(), z: uz })
    }

    /// Residual `r - K u`.
    fn residual(&self, u: &Dir, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ux = DVector::from_column_slice(&u.x);
        let uy = DVector::from_column_slice(&u.y);
        let uz = DVector::from_column_slice(&u.z);
        let r1 = DVector::from_column_slice(bx) - self.a.tr_mul(&uy) - self.g.tr_mul(&uz);
        let r2 = DVector::from_column_slice(by) - self.a * &ux;
        let wz = self.blocks.apply(Op::W, &u.z);
        let wtwz = DVector::from_vec(self.blocks.apply(Op::Wt, &wz));
        let r3 = DVector::from_column_slice(bz) - self.g * &ux + wtwz;
        (r1.as_slice().to_vec(), r2.as_slice().to_vec(), r3.as_slice().to_vec())
    }

    fn solve(&self, bx: &[f64], by: &[f64], bz: &[f64]) -> Option<Dir> {
        let mut u = self.solve_once(bx, by, bz)?;
        let scale = 1.0 + norm(bx) + norm(by) + norm(bz);
        for _ in 0..self.refine {
            let (r1, r2, r3) = self.residual(&u, bx, by, bz);
            let rn = norm(&r1) + norm(&r2) + norm(&r3);
            if rn <= 1e-14 * scale {
                break;
            }
            let d = self.solve_once(&r1, &r2, &r3)?;
            axpy(1.0, &d.x, &mut u.x);
            axpy(1.0, &d.y, &mut u.y);
            axpy(1.0, &d.z, &mut u.z);
        }
        if u.x.iter().chain(&u.y).chain(&u.z).any(|v| !v.is_finite()) {
            return None;
        }
        Some(u)
    }
}

const BACKTRACK_STEPS: usize = 20;

fn trace(opts: &SolverOptions, reason: &str) {
    if opts.verbose {
        eprintln!("    stop: {reason}");
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).as_slice().to_vec()
}

fn mat_tvec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    m.tr_mul(&DVector::from_column_slice(x)).as_slice().to_vec()
}

enum Presolve {
    Reduced {
        a: DMatrix<f64>,
        b: Vec<f64>,
        kept: Vec<usize>,
    },
    /// `A^T y = 0` with `b^T y = -1`.
    Inconsistent {
        y: Vec<f64>,
    },
}

/// Drops linearly dependent equality rows by Gram-Schmidt, detecting
/// inconsistent right-hand sides.
fn presolve(a: &DMatrix<f64>, b: &[f64]) -> Presolve {
    let (p, n) = a.shape();
    // orthonormal rows q_j with their expression in the original rows
    let mut q: Vec<DVector<f64>> = Vec::new();
    let mut coef: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for i in 0..p {
        let row = a.row(i).transpose();
        let rn = row.norm();
        let mut r = row.clone();
        let mut cr = DVector::zeros(p);
        cr[i] = 1.0;
        for _ in 0..2 {
            for (qj, cj) in q.iter().zip(&coef) {
                let d = qj.dot(&r);
                r.axpy(-d, qj, 1.0);
                cr.axpy(-d, cj, 1.0);
            }
        }
        let res = r.norm();
        if res > RANK_TOL * rn.max(1.0) && res > 0.0 {
            q.push(r / res);
            coef.push(cr / res);
            kept.push(i);
        } else {
            let bres: f64 = (0..p).map(|k| cr[k] * b[k]).sum();
            if bres.abs() > 1e-8 * (1.0 + b[i].abs()) {
                let y: Vec<f64> = cr.iter().map(|v| -v / bres).collect();
                return Presolve::Inconsistent { y };
            }
        }
    }
    let a_red = DMatrix::from_fn(kept.len(), n, |r, c| a[(kept[r], c)]);
    let b_red = kept.iter().map(|&i| b[i]).collect();
    Presolve::Reduced { a: a_red, b: b_red, kept }
}

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

fn shift_into_interior(blocks: &Blocks, v: &mut [f64]) {
    let min_eig = blocks.0.iter().map(|b| b.cone.min_eig(&v[b.range.clone()])).fold(f64::INFINITY, f64::min);
    let t = -min_eig;
    if t >= -1e-8 * norm(v).max(1.0) {
        let e = blocks.identity_vec(v.len());
        axpy(1.0 + t, &e, v);
    }
}

/// Solves the cone program. Never panics on infeasible or unbounded input;
/// those outcomes are reported through [`ConicStatus`].
/// Direction plus `(ds, W dz, W^-T ds, dtau, dkappa)`.
type Step = (Dir, Vec<f64>, Vec<f64>, Vec<f64>, f64, f64);

pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> ConicSolution {
    let sol = solve_hsde(problem, opts);
    super::health::record(problem, &sol);
    sol
}

fn solve_hsde(problem: &ConicProblem, opts: &SolverOptions) -> ConicSolution {
    let n = problem.n_vars();
    let m = problem.cone_dim();
    let p_full = problem.n_eq();
    let (a, b, kept) = match presolve(&problem.a, &problem.b) {
        Presolve::Reduced { a, b, kept } => (a, b, kept),
        Presolve::Inconsistent { y } => {
            return ConicSolution {
                status: ConicStatus::PrimalInfeasible,
                x: vec![0.0; n],
                s: vec![0.0; m],
                y,
                z: vec![0.0; m],
                primal_objective: f64::NAN,
                dual_objective: f64::NAN,
                gap: f64::NAN,
                relative_gap: f64::NAN,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                iterations: 0,
            };
        }
    };
    let expand_y = |y: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; p_full];
        for (k, &i) in kept.iter().enumerate() {
            full[i] = y[k];
        }
        full
    };

    let c = &problem.c;
    let g = &problem.g;
    let h = &problem.h;
    let nu = problem.degree() as f64;
    let (cn, bn, hn) = (norm(c), norm(&b), norm(h));
    let zeros_n = vec![0.0; n];
    let zeros_p = vec![0.0; a.nrows()];
    let zeros_m = vec![0.0; m];

    let fail = |status: ConicStatus, it: &Iterate, iters: usize| -> ConicSolution {
        finish(problem, &a, &b, status, it, &expand_y, iters)
    };

    // starting point from least-squares solves with W = I
    let ident = Blocks::identity(problem);
    let mut it = {
        let Some(kkt) = Kkt::new(g, &a, &ident, opts.refinement_steps) else {
            let it0 = Iterate {
                x: zeros_n.clone(),
                y: zeros_p.clone(),
                z: ident.identity_vec(m),
                s: ident.identity_vec(m),
                tau: 1.0,
                kappa: 1.0,
            };
            return fail(ConicStatus::NumericalTrouble, &it0, 0);
        };
        let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
        let primal = kkt.solve(&zeros_n, &b, h);
        let dual = kkt.solve(&neg_c, &zeros_p, &zeros_m);
        let (Some(primal), Some(dual)) = (primal, dual) else {
            let it0 = Iterate {
                x: zeros_n.clone(),
                y: zeros_p.clone(),
                z: ident.identity_vec(m),
                s: ident.identity_vec(m),
                tau: 1.0,
                kappa: 1.0,
            };
            return fail(ConicStatus::NumericalTrouble, &it0, 0);
        };
        let mut s: Vec<f64> = primal.z.iter().map(|v| -v).collect();
        let mut z = dual.z;
        shift_into_interior(&ident, &mut s);
        shift_into_interior(&ident, &mut z);
        Iterate { x: primal.x, y: dual.y, z, s, tau: 1.0, kappa: 1.0 }
    };

    // last iterate meeting the optimality tolerances, kept while polishing
    let mut accepted: Option<(Iterate, usize)> = None;
    let mut first_accept: Option<usize> = None;
    let done =
        |accepted: &Option<(Iterate, usize)>, status: ConicStatus, it: &Iterate, iters: usize| match (accepted, status)
        {
            (Some((good, k)), ConicStatus::NumericalTrouble | ConicStatus::MaxIter) => {
                fail(ConicStatus::Optimal, good, *k)
            }
            _ => fail(status, it, iters),
        };

    for iter in 0..=opts.max_iter {
        // residuals
        let aty = mat_tvec(&a, &it.y);
        let gtz = mat_tvec(g, &it.z);
        let ax = mat_vec(&a, &it.x);
        let gx = mat_vec(g, &it.x);
        let hrx: Vec<f64> = (0..n).map(|i| aty[i] + gtz[i]).collect();
        let rx: Vec<f64> = (0..n).map(|i| hrx[i] + c[i] * it.tau).collect();
        let ry: Vec<f64> = (0..a.nrows()).map(|i| b[i] * it.tau - ax[i]).collect();
        let rz: Vec<f64> = (0..m).map(|i| h[i] * it.tau - gx[i] - it.s[i]).collect();
        let cx = dot(c, &it.x);
        let by_hz = dot(&b, &it.y) + dot(h, &it.z);
        let rt = it.kappa + cx + by_hz;

        let sz = dot(&it.s, &it.z);
        let mu = (sz + it.tau * it.kappa) / (nu + 1.0);
        let pcost = cx / it.tau;
        let dcost = -by_hz / it.tau;
        let gap = sz / (it.tau * it.tau);
        let relgap = gap.max((pcost - dcost).abs()) / (1.0 + pcost.abs());
        let pres = (norm(&ry) / it.tau / (1.0 + bn)).max(norm(&rz) / it.tau / (1.0 + hn));
        let dres = norm(&rx) / it.tau / (1.0 + cn);

        if opts.verbose {
            eprintln!(
                "{iter:3} pcost {pcost:+.9e} dcost {dcost:+.9e} gap {gap:.2e} pres {pres:.2e} dres {dres:.2e} tau {:.2e} kappa {:.2e}",
                it.tau, it.kappa
            );
        }
        if !(mu.is_finite() && pres.is_finite() && dres.is_finite()) {
            trace(opts, "non-finite residuals");
            return done(&accepted, ConicStatus::NumericalTrouble, &it, iter);
        }
        if pres <= opts.feas_tol && dres <= opts.feas_tol && relgap <= opts.gap_tol {
            let polished = gap / (1.0 + pcost.abs()) <= opts.comp_tol;
            let first = *first_accept.get_or_insert(iter);
            if polished || iter - first >= MAX_POLISH {
                return done(&None, ConicStatus::Optimal, &it, iter);
            }
            accepted = Some((it.clone(), iter));
        }
        if by_hz < 0.0 && norm(&hrx) / (1.0 + cn) / (-by_hz) <= opts.feas_tol {
            return done(&accepted, ConicStatus::PrimalInfeasible, &it, iter);
        }
        if cx < 0.0 {
            let gxs: Vec<f64> = (0..m).map(|i| gx[i] + it.s[i]).collect();
            let dinf = (norm(&ax) / (1.0 + bn)).max(norm(&gxs) / (1.0 + hn)) / (-cx);
            if dinf <= opts.feas_tol {
                return done(&accepted, ConicStatus::DualInfeasible, &it, iter);
            }
        }
        if iter == opts.max_iter {
            return done(&accepted, ConicStatus::MaxIter, &it, iter);
        }

        let Some(blocks) = Blocks::nt(problem, &it.s, &it.z) else {
            trace(opts, "scaling failed");
            return done(&accepted, ConicStatus::NumericalTrouble, &it, iter);
        };
        let Some(kkt) = Kkt::new(g, &a, &blocks, opts.refinement_steps) else {
            trace(opts, "KKT factorization failed");
            return done(&accepted, ConicStatus::NumericalTrouble, &it, iter);
        };
        let lam = blocks.lambda(m);
        let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
        let Some(q) = kkt.solve(&neg_c, &b, h) else {
            trace(opts, "KKT solve failed");
            return done(&accepted, ConicStatus::NumericalTrouble, &it, iter);
        };
        let q_den = dot(c, &q.x) + dot(&b, &q.y) + dot(h, &q.z) - it.kappa / it.tau;

        // one Newton direction for complementarity targets (d_s, d_kappa)
        let step = |eta: f64, ds_target: &[f64], dk_target: f64| -> Option<Step> {
            let lds = blocks.lambda_solve(ds_target);
            let wt_lds = blocks.apply(Op::Wt, &lds);
            let bx: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let by: Vec<f64> = ry.iter().map(|v| eta * v).collect();
            let bz: Vec<f64> = (0..m).map(|i| eta * rz[i] - wt_lds[i]).collect();
            let pd = kkt.solve(&bx, &by, &bz)?;
            let r4 = -eta * rt - dk_target / it.tau;
            let dtau = (r4 - dot(c, &pd.x) - dot(&b, &pd.y) - dot(h, &pd.z)) / q_den;
            let mut d = pd;
            axpy(dtau, &q.x, &mut d.x);
            axpy(dtau, &q.y, &mut d.y);
            axpy(dtau, &q.z, &mut d.z);
            let wdz = blocks.apply(Op::W, &d.z);
            // ds from the linearized primal equation keeps the residual
            // contraction exact when the scaling is ill-conditioned
            let gdx = mat_vec(g, &d.x);
            let ds: Vec<f64> = (0..m).map(|i| eta * rz[i] + dtau * h[i] - gdx[i]).collect();
            let wtinv_ds = blocks.apply(Op::Wtinv, &ds);
            let dkappa = (dk_target - it.kappa * dtau) / it.tau;
            Some((d, ds, wdz, wtinv_ds, dtau, dkappa))
        };
        let max_alpha = |wdz: &[f64], wds: &[f64], dtau: f64, dkappa: f64| -> f64 {
            let mut a = blocks.max_step(wdz).min(blocks.max_step(wds));
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-it.kappa / dkappa);
            }
            a
        };

        // predictor
        let ds_aff: Vec<f64> = blocks.jordan(&lam, &lam).iter().map(|v| -v).collect();
        let Some((_, _, wdz_a, wds_a, dtau_a, dkappa_a)) = step(1.0, &ds_aff, -it.tau * it.kappa) else {
            trace(opts, "predictor failed");
            return done(&accepted, ConicStatus::NumericalTrouble, &it, iter);
        };
        let alpha_a = max_alpha(&wdz_a, &wds_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_a).powi(3);

        // corrector
        let e = blocks.identity_vec(m);
        let cross = blocks.jordan(&wds_a, &wdz_a);
        let ds_cc: Vec<f64> = (0..m).map(|i| ds_aff[i] - cross[i] + sigma * mu * e[i]).collect();
        let dk_cc = -it.tau * it.kappa - dtau_a * dkappa_a + sigma * mu;
        let Some((d, ds, wdz, wds, dtau, dkappa)) = step(1.0 - sigma, &ds_cc, dk_cc) else {
            trace(opts, "corrector failed");
            return done(&accepted, ConicStatus::NumericalTrouble, &it, iter);
        };
        let alpha = (opts.step_fraction * max_alpha(&wdz, &wds, dtau, dkappa)).min(1.0);
        if opts.verbose {
            eprintln!("    alpha_aff {alpha_a:.3e} sigma {sigma:.3e} alpha {alpha:.3e}");
        }
        if !(alpha > 1e-12) {
            trace(opts, "step length vanished");
            return done(&accepted, ConicStatus::NumericalTrouble, &it, iter);
        }
        // a near-singular block can round onto the boundary; backtrack until
        // the next iterate admits a scaling
        let mut alpha = alpha;
        let mut next = it.clone();
        for _ in 0..BACKTRACK_STEPS {
            next.clone_from(&it);
            axpy(alpha, &d.x, &mut next.x);
            axpy(alpha, &d.y, &mut next.y);
            axpy(alpha, &d.z, &mut next.z);
            axpy(alpha, &ds, &mut next.s);
            next.tau += alpha * dtau;
            next.kappa += alpha * dkappa;
            if next.tau > 0.0 && next.kappa > 0.0 && Blocks::nt(problem, &next.s, &next.z).is_some() {
                break;
            }
            alpha *= 0.5;
        }
        if !(next.tau > 0.0 && next.kappa > 0.0 && alpha > 1e-12) {
            trace(opts, "tau or kappa left the cone");
            return done(&accepted, ConicStatus::NumericalTrouble, &it, iter + 1);
        }
        it = next;
    }
    unreachable!("loop returns at max_iter")
}

fn finish(
    problem: &ConicProblem,
    a: &DMatrix<f64>,
    b: &[f64],
    status: ConicStatus,
    it: &Iterate,
    expand_y: &dyn Fn(&[f64]) -> Vec<f64>,
    iterations: usize,
) -> ConicSolution {
    let c = &problem.c;
    let h = &problem.h;
    let (x, s, y, z) = match status {
        ConicStatus::PrimalInfeasible => {
            let d = -(dot(b, &it.y) + dot(h, &it.z));
            (vec![0.0; it.x.len()], vec![0.0; it.s.len()], scaled(&it.y, 1.0 / d), scaled(&it.z, 1.0 / d))
        }
        ConicStatus::DualInfeasible => {
            let d = -dot(c, &it.x);
            (scaled(&it.x, 1.0 / d), scaled(&it.s, 1.0 / d), vec![0.0; it.y.len()], vec![0.0; it.z.len()])
        }
        _ => {
            let t = 1.0 / it.tau;
            (scaled(&it.x, t), scaled(&it.s, t), scaled(&it.y, t), scaled(&it.z, t))
        }
    };
    let pobj = dot(c, &x);
    let dobj = -(dot(b, &y) + dot(h, &z));
    let gap = dot(&s, &z);
    let ax = mat_vec(a, &x);
    let gx = mat_vec(&problem.g, &x);
    let ry: Vec<f64> = (0..b.len()).map(|i| ax[i] - b[i]).collect();
    let rz: Vec<f64> = (0..h.len()).map(|i| gx[i] + s[i] - h[i]).collect();
    let aty = mat_tvec(a, &y);
    let gtz = mat_tvec(&problem.g, &z);
    let rx: Vec<f64> = (0..c.len()).map(|i| aty[i] + gtz[i] + c[i]).collect();
    ConicSolution {
        status,
        x,
        s,
        y: expand_y(&y),
        z,
        primal_objective: pobj,
        dual_objective: dobj,
        gap,
        relative_gap: gap.max((pobj - dobj).abs()) / (1.0 + pobj.abs()),
        primal_residual: (norm(&ry) / (1.0 + norm(b))).max(norm(&rz) / (1.0 + norm(h))),
        dual_residual: norm(&rx) / (1.0 + norm(c)),
        iterations,
    }
}

fn scaled(v: &[f64], f: f64) -> Vec<f64> {
    v.iter().map(|x| x * f).collect()
}

#[cfg(test)]
mod tests {
    use super::super::Segment;
    use super::*;
    use crate::conic::smat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn one_dimensional_lp() {
        // min x s.t. x - 1 >= 0
        let p = ConicProblem::new(
            vec![1.0],
            DMatrix::from_element(1, 1, -1.0),
            vec![-1.0],
            DMatrix::zeros(0, 1),
            vec![],
            vec![Cone::NonNeg(1)],
        )
        .unwrap();
        let sol = solve(&p, &opts());
        assert_eq!(sol.status, ConicStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
        assert!(sol.gap <= 1e-9);
    }

    #[test]
    fn real_two_by_two_sdp() {
        // min Tr(W) s.t. Tr(diag(2,1) W) >= 1, W psd, in standard form with
        // x = [svec(W); slack]
        let mut a = DMatrix::zeros(1, 4);
        a[(0, 0)] = 2.0;
        a[(0, 2)] = 1.0;
        a[(0, 3)] = -1.0;
        let p = ConicProblem::standard_form(
            vec![1.0, 0.0, 1.0, 0.0],
            a,
            vec![1.0],
            &[Segment::Cone(Cone::Psd(2)), Segment::Cone(Cone::NonNeg(1))],
        )
        .unwrap();
        let sol = solve(&p, &opts());
        assert_eq!(sol.status, ConicStatus::Optimal);
        assert!((sol.primal_objective - 0.5).abs() < 1e-7);
        let w = smat(2, &sol.x[..3]);
        assert!((w[(0, 0)] - 0.5).abs() < 1e-6);
        assert!(w[(1, 1)].abs() < 1e-6 && w[(0, 1)].abs() < 1e-6);
    }

    #[test]
    fn impossible_sign_is_infeasible() {
        // Tr(-W) >= 1 with W psd
        let mut g = DMatrix::zeros(4, 3);
        g[(0, 0)] = 1.0;
        g[(0, 2)] = 1.0;
        for i in 0..3 {
            g[(1 + i, i)] = -1.0;
        }
        let p = ConicProblem::new(
            vec![1.0, 0.0, 1.0],
            g,
            vec![-1.0, 0.0, 0.0, 0.0],
            DMatrix::zeros(0, 3),
            vec![],
            vec![Cone::NonNeg(1), Cone::Psd(2)],
        )
        .unwrap();
        let sol = solve(&p, &opts());
        assert_eq!(sol.status, ConicStatus::PrimalInfeasible);
        let hz: f64 = dot(&p.h, &sol.z);
        assert!((hz + 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_is_dual_infeasible() {
        // min -x s.t. x >= 0
        let p = ConicProblem::new(
            vec![-1.0],
            DMatrix::from_element(1, 1, -1.0),
            vec![0.0],
            DMatrix::zeros(0, 1),
            vec![],
            vec![Cone::NonNeg(1)],
        )
        .unwrap();
        assert_eq!(solve(&p, &opts()).status, ConicStatus::DualInfeasible);
    }

    #[test]
    fn dependent_and_inconsistent_equalities() {
        // x1 + x2 = 1 twice, x >= 0, min x1 + 2 x2
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let p =
            ConicProblem::standard_form(vec![1.0, 2.0], a.clone(), vec![1.0, 2.0], &[Segment::Cone(Cone::NonNeg(2))])
                .unwrap();
        let sol = solve(&p, &opts());
        assert_eq!(sol.status, ConicStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
        let q =
            ConicProblem::standard_form(vec![1.0, 2.0], a, vec![1.0, 3.0], &[Segment::Cone(Cone::NonNeg(2))]).unwrap();
        let sol = solve(&q, &opts());
        assert_eq!(sol.status, ConicStatus::PrimalInfeasible);
        let by: f64 = dot(&q.b, &sol.y);
        assert!((by + 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_cone() {
        // min t s.t. ||(x - 3, y + 4)|| <= t  -> 0 at (3,-4)... use fixed point:
        // min t s.t. ||(3, 4)|| <= t
        let g = DMatrix::from_row_slice(3, 1, &[-1.0, 0.0, 0.0]);
        let p = ConicProblem::new(
            vec![1.0],
            g,
            vec![0.0, 3.0, 4.0],
            DMatrix::zeros(0, 1),
            vec![],
            vec![Cone::SecondOrder(3)],
        )
        .unwrap();
        let sol = solve(&p, &opts());
        assert_eq!(sol.status, ConicStatus::Optimal);
        assert!((sol.x[0] - 5.0).abs() < 1e-6);
    }

    /// Random SDP `min <C,X> s.t. <A_i,X> = b_i, X psd` built to be strictly
    /// feasible on both sides, and its dual `max b^T y s.t. C - sum y_i A_i psd`
    /// posed as a separate problem.
    #[test]
    fn dual_problem_matches_primal_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..20 {
            let n = 2 + trial % 4;
            let k = 1 + trial % 3;
            let (pp, dp) = super::super::random_sdp_pair(&mut rng, n, k);
            let ps = solve(&pp, &opts());
            let ds = solve(&dp, &opts());
            assert_eq!(ps.status, ConicStatus::Optimal, "trial {trial}");
            assert_eq!(ds.status, ConicStatus::Optimal, "trial {trial}");
            assert!((ps.primal_objective + ds.primal_objective).abs() < 1e-6, "trial {trial}");
            assert!(ps.primal_objective >= ps.dual_objective - 1e-7 * (1.0 + ps.primal_objective.abs()));
        }
    }

    #[test]
    fn scaling_cost_scales_objective_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (pp, _) = super::super::random_sdp_pair(&mut rng, 3, 2);
        let a = solve(&pp, &opts());
        let mut p10 = pp.clone();
        p10.c.iter_mut().for_each(|v| *v *= 10.0);
        let b = solve(&p10, &opts());
        assert_eq!(b.status, ConicStatus::Optimal);
        assert!((b.primal_objective - 10.0 * a.primal_objective).abs() < 1e-6 * (1.0 + b.primal_objective.abs()));
        for (xa, xb) in a.x.iter().zip(&b.x) {
            assert!((xa - xb).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (pp, _) = super::super::random_sdp_pair(&mut rng, 4, 2);
        let a = solve(&pp, &opts());
        let b = solve(&pp, &opts());
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }
}
