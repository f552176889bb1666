//! Cone algebra: Jordan products, Nesterov-Todd scalings and step lengths
//! for the nonnegative orthant, second-order cones and real PSD cones.
//!
//! PSD cones store symmetric matrices in scaled-vectorized form: the lower
//! triangle column by column with off-diagonal entries multiplied by
//! `sqrt(2)`, so the Euclidean inner product equals `Tr(XY)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cone {
    /// `dim` independent nonnegative scalars.
    NonNeg(usize),
    /// `{(t, u) : ||u|| <= t}` of total dimension `dim`.
    SecondOrder(usize),
    /// Real symmetric PSD matrices of the given side.
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNeg(d) | Cone::SecondOrder(d) => d,
            Cone::Psd(n) => n * (n + 1) / 2,
        }
    }

    /// Barrier degree.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg(d) => d,
            Cone::SecondOrder(_) => 1,
            Cone::Psd(n) => n,
        }
    }

    /// Identity element `e`.
    pub fn identity_into(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match *self {
            Cone::NonNeg(_) => out.iter_mut().for_each(|v| *v = 1.0),
            Cone::SecondOrder(_) => out[0] = 1.0,
            Cone::Psd(n) => {
                for j in 0..n {
                    out[svec_index(n, j, j)] = 1.0;
                }
            }
        }
    }

    /// Smallest "eigenvalue" of `x` with respect to the cone (negative when
    /// `x` lies outside it).
    pub fn min_eig(&self, x: &[f64]) -> f64 {
        match *self {
            Cone::NonNeg(_) => x.iter().copied().fold(f64::INFINITY, f64::min),
            Cone::SecondOrder(_) => x[0] - norm(&x[1..]),
            Cone::Psd(n) => SymmetricEigen::new(smat(n, x)).eigenvalues.min(),
        }
    }

    /// Euclidean distance from `x` to the cone.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match *self {
            Cone::NonNeg(_) => x.iter().map(|v| v.min(0.0).powi(2)).sum::<f64>().sqrt(),
            Cone::SecondOrder(_) => {
                let t = x[0];
                let u = norm(&x[1..]);
                if u <= t {
                    0.0
                } else if u <= -t {
                    norm(x)
                } else {
                    (u - t) / SQRT_2
                }
            }
            Cone::Psd(n) => {
                let ev = SymmetricEigen::new(smat(n, x)).eigenvalues;
                ev.iter().map(|l| l.min(0.0).powi(2)).sum::<f64>().sqrt()
            }
        }
    }
}

/// Position of `(i, j)`, `i >= j`, inside an svec of side `n`.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    // column j starts after sum_{k<j} (n - k) entries
    j * n - j * j.saturating_sub(1) / 2 + (i - j)
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            out.push(if i == j { m[(i, j)] } else { SQRT_2 * m[(i, j)] });
        }
    }
    out
}

pub fn smat(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jordan product `x o y`.
pub fn jordan(cone: Cone, x: &[f64], y: &[f64], out: &mut [f64]) {
    match cone {
        Cone::NonNeg(_) => {
            for i in 0..x.len() {
                out[i] = x[i] * y[i];
            }
        }
        Cone::SecondOrder(_) => {
            out[0] = dot(x, y);
            for i in 1..x.len() {
                out[i] = x[0] * y[i] + y[0] * x[i];
            }
        }
        Cone::Psd(n) => {
            let (xm, ym) = (smat(n, x), smat(n, y));
            let p = (&xm * &ym + &ym * &xm) * 0.5;
            out.copy_from_slice(&svec(&p));
        }
    }
}

/// Solves `lambda o x = y` for `x`, where `lambda` is the scaled point
/// (diagonal for PSD cones, so it is passed as its eigenvalues).
pub fn jordan_solve(cone: Cone, lambda: &LambdaBlock, y: &[f64], out: &mut [f64]) {
    match (cone, lambda) {
        (Cone::NonNeg(_), LambdaBlock::Vector(l)) => {
            for i in 0..y.len() {
                out[i] = y[i] / l[i];
            }
        }
        (Cone::SecondOrder(_), LambdaBlock::Vector(u)) => {
            let u0 = u[0];
            let det = u0 * u0 - dot(&u[1..], &u[1..]);
            let x0 = (u0 * y[0] - dot(&u[1..], &y[1..])) / det;
            out[0] = x0;
            for i in 1..y.len() {
                out[i] = (y[i] - x0 * u[i]) / u0;
            }
        }
        (Cone::Psd(n), LambdaBlock::Diagonal(l)) => {
            let mut k = 0;
            for j in 0..n {
                for i in j..n {
                    out[k] = 2.0 * y[k] / (l[i] + l[j]);
                    k += 1;
                }
            }
        }
        _ => unreachable!("lambda block does not match cone"),
    }
}

/// Scaled point `lambda = W z = W^{-T} s` for one cone.
#[derive(Debug, Clone)]
pub enum LambdaBlock {
    Vector(Vec<f64>),
    Diagonal(Vec<f64>),
}

impl LambdaBlock {
    /// svec / vector form of lambda.
    pub fn to_vec(&self, cone: Cone) -> Vec<f64> {
        match (self, cone) {
            (LambdaBlock::Vector(v), _) => v.clone(),
            (LambdaBlock::Diagonal(d), Cone::Psd(n)) => {
                let mut out = vec![0.0; cone.dim()];
                for j in 0..n {
                    out[svec_index(n, j, j)] = d[j];
                }
                out
            }
            _ => unreachable!(),
        }
    }
}

/// Nesterov-Todd scaling `W` for a single cone.
#[derive(Debug, Clone)]
pub enum Scaling {
    NonNeg {
        d: Vec<f64>,
    },
    /// `W = beta (2 v v^T - J)`, `v^T J v = 1`.
    Soc {
        beta: f64,
        v: Vec<f64>,
    },
    /// `W(X) = R^T X R`.
    Psd {
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    W,
    Wt,
    Winv,
    Wtinv,
}

fn jdot(x: &[f64], y: &[f64]) -> f64 {
    x[0] * y[0] - dot(&x[1..], &y[1..])
}

impl Scaling {
    /// Computes the NT scaling of strictly interior `(s, z)`; returns `None`
    /// when either point is numerically on the boundary.
    pub fn compute(cone: Cone, s: &[f64], z: &[f64]) -> Option<(Scaling, LambdaBlock)> {
        match cone {
            Cone::NonNeg(_) => {
                if s.iter().chain(z).any(|&v| !(v > 0.0)) {
                    return None;
                }
                let d = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                let l = s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect();
                Some((Scaling::NonNeg { d }, LambdaBlock::Vector(l)))
            }
            Cone::SecondOrder(_) => {
                let sjs = jdot(s, s);
                let zjz = jdot(z, z);
                if !(sjs > 0.0 && zjz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                let sn = sjs.sqrt();
                let zn = zjz.sqrt();
                let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
                let mut wb: Vec<f64> = sb.clone();
                wb[0] += zb[0];
                for i in 1..wb.len() {
                    wb[i] -= zb[i];
                }
                wb.iter_mut().for_each(|v| *v /= 2.0 * gamma);
                let denom = (2.0 * (wb[0] + 1.0)).sqrt();
                let mut v = wb.clone();
                v[0] += 1.0;
                v.iter_mut().for_each(|x| *x /= denom);
                let beta = (sn / zn).sqrt();
                let sc = Scaling::Soc { beta, v };
                let mut lam = vec![0.0; z.len()];
                sc.apply(Op::W, z, &mut lam);
                Some((sc, LambdaBlock::Vector(lam)))
            }
            Cone::Psd(n) => {
                let ls = smat(n, s).cholesky()?.l();
                let lz = smat(n, z).cholesky()?.l();
                let svd = (lz.transpose() * &ls).svd(true, true);
                let vt = svd.v_t?;
                let sig = svd.singular_values;
                if sig.iter().any(|&x| !(x > 0.0)) {
                    return None;
                }
                // R = Ls V diag(sig)^{-1/2}, R^{-1} = diag(sig)^{1/2} V^T Ls^{-1}
                let mut r = &ls * vt.transpose();
                for (k, &sg) in sig.iter().enumerate() {
                    let f = 1.0 / sg.sqrt();
                    r.column_mut(k).iter_mut().for_each(|x| *x *= f);
                }
                let ls_inv = ls.solve_lower_triangular(&DMatrix::identity(n, n))?;
                let mut rinv = &vt * ls_inv;
                for (k, &sg) in sig.iter().enumerate() {
                    let f = sg.sqrt();
                    rinv.row_mut(k).iter_mut().for_each(|x| *x *= f);
                }
                Some((Scaling::Psd { r, rinv }, LambdaBlock::Diagonal(sig.iter().copied().collect())))
            }
        }
    }

    pub fn apply(&self, op: Op, x: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { d } => {
                for i in 0..x.len() {
                    out[i] = match op {
                        Op::W | Op::Wt => d[i] * x[i],
                        Op::Winv | Op::Wtinv => x[i] / d[i],
                    };
                }
            }
            Scaling::Soc { beta, v } => {
                // W = beta (2 v v^T - J), W^{-1} = (2 J v v^T J - J) / beta; both symmetric
                let jx0 = x[0];
                match op {
                    Op::W | Op::Wt => {
                        let vx = dot(v, x);
                        out[0] = beta * (2.0 * v[0] * vx - jx0);
                        for i in 1..x.len() {
                            out[i] = beta * (2.0 * v[i] * vx + x[i]);
                        }
                    }
                    Op::Winv | Op::Wtinv => {
                        let vjx = jdot(v, x);
                        out[0] = (2.0 * v[0] * vjx - jx0) / beta;
                        for i in 1..x.len() {
                            out[i] = (-2.0 * v[i] * vjx + x[i]) / beta;
                        }
                    }
                }
            }
            Scaling::Psd { r, rinv } => {
                let n = r.nrows();
                let xm = smat(n, x);
                let y = match op {
                    Op::W => r.transpose() * xm * r,
                    Op::Wt => r * xm * r.transpose(),
                    Op::Winv => rinv.transpose() * xm * rinv,
                    Op::Wtinv => rinv * xm * rinv.transpose(),
                };
                out.copy_from_slice(&svec(&y));
            }
        }
    }
}

/// Largest `alpha` with `x + alpha d` in the cone (`x` interior); `INFINITY`
/// if the whole ray stays inside.
pub fn max_step(cone: Cone, x: &[f64], d: &[f64]) -> f64 {
    match cone {
        Cone::NonNeg(_) => {
            x.iter().zip(d).filter(|(_, &di)| di < 0.0).map(|(xi, di)| -xi / di).fold(f64::INFINITY, f64::min)
        }
        Cone::SecondOrder(_) => {
            let xjx = jdot(x, x);
            if xjx <= 0.0 {
                return 0.0;
            }
            let sc = xjx.sqrt();
            let xh: Vec<f64> = x.iter().map(|v| v / sc).collect();
            // hyperbolic rotation mapping xh to e, applied to d
            let rho0 = jdot(&xh, d);
            let xbd = dot(&xh[1..], &d[1..]);
            let coef = (xbd / (1.0 + xh[0])) - d[0];
            let mut rb2 = 0.0;
            for i in 1..x.len() {
                let r = d[i] + coef * xh[i];
                rb2 += r * r;
            }
            let worst = rb2.sqrt() - rho0;
            if worst <= 0.0 {
                f64::INFINITY
            } else {
                sc / worst
            }
        }
        Cone::Psd(n) => {
            let Some(ch) = smat(n, x).cholesky() else {
                return 0.0;
            };
            let l = ch.l();
            let dm = smat(n, d);
            let Some(t) = l.solve_lower_triangular(&dm) else {
                return 0.0;
            };
            let Some(m) = l.solve_lower_triangular(&t.transpose()) else {
                return 0.0;
            };
            let m = (&m + m.transpose()) * 0.5;
            let lmin = SymmetricEigen::new(m).eigenvalues.min();
            if lmin >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lmin
            }
        }
    }
}

/// Max step when `x` is the (diagonal) scaled point lambda.
pub fn max_step_lambda(cone: Cone, lambda: &LambdaBlock, d: &[f64]) -> f64 {
    match (cone, lambda) {
        (Cone::Psd(n), LambdaBlock::Diagonal(l)) => {
            let mut m = smat(n, d);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] /= (l[i] * l[j]).sqrt();
                }
            }
            let lmin = SymmetricEigen::new(m).eigenvalues.min();
            if lmin >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lmin
            }
        }
        (_, LambdaBlock::Vector(v)) => max_step(cone, v, d),
        _ => unreachable!(),
    }
}
