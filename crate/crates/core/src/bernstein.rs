//! Bernstein-type tail bounds for Gaussian quadratic forms
//! `G = x^H A x + 2 Re{x^H a}`, `x ~ CN(0, I)`, and their deterministic
//! conic restrictions.
//!
//! For `sigma >= 0`,
//!
//! ```text
//!   Pr{ G >= Tr(A) + sqrt(2 sigma) sqrt(||A||_F^2 + 2||a||^2) + sigma s+(A) } <= exp(-sigma)
//!   Pr{ G <= Tr(A) - sqrt(2 sigma) sqrt(||A||_F^2 + 2||a||^2) - sigma s-(A) } <= exp(-sigma)
//! ```
//!
//! with `s+(A) = max(lambda_max(A), 0)` and `s-(A) = max(lambda_max(-A), 0)`.

use crate::channel::standard_cn;
use crate::conic::model::{CVecExpr, HermExpr, LinExpr, Model, VarId};
use crate::hermitian::{c, CVector, HMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::SQRT_2;

/// Largest `sigma` produced by [`sigma_from_outage`]; `exp(-745)` is the
/// smallest positive double.
pub const SIGMA_MAX: f64 = 745.0;

/// `-ln p` clamped to `[0, SIGMA_MAX]`.
pub fn sigma_from_outage(p: f64) -> f64 {
    if !(p > 0.0) {
        return SIGMA_MAX;
    }
    (-p.ln()).clamp(0.0, SIGMA_MAX)
}

pub fn s_plus(a: &HMatrix) -> f64 {
    a.lambda_max().max(0.0)
}

pub fn s_minus(a: &HMatrix) -> f64 {
    (-a.lambda_min()).max(0.0)
}

fn spread(a: &HMatrix, av: &CVector) -> f64 {
    (a.frobenius_sq() + 2.0 * av.norm_squared()).sqrt()
}

pub fn upper_tail_threshold(a: &HMatrix, av: &CVector, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return a.trace();
    }
    a.trace() + (2.0 * sigma).sqrt() * spread(a, av) + sigma * s_plus(a)
}

pub fn lower_tail_threshold(a: &HMatrix, av: &CVector, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return a.trace();
    }
    a.trace() - (2.0 * sigma).sqrt() * spread(a, av) - sigma * s_minus(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// A quadratic form together with its threshold parameter.
#[derive(Debug, Clone)]
pub struct QuadFormSpec {
    pub a: HMatrix,
    pub av: CVector,
    pub c: f64,
    pub sigma: f64,
}

impl QuadFormSpec {
    pub fn value(&self, x: &CVector) -> f64 {
        self.a.quad_form(x) + 2.0 * x.dotc(&self.av).re
    }

    pub fn threshold(&self, side: Side) -> f64 {
        match side {
            Side::Upper => upper_tail_threshold(&self.a, &self.av, self.sigma),
            Side::Lower => lower_tail_threshold(&self.a, &self.av, self.sigma),
        }
    }
}

/// Monte Carlo estimate of `Pr{G >= T_upper}` or `Pr{G <= T_lower}`.
///
/// For `A = 0, a = 0` the form is identically zero and equals both
/// thresholds, so the estimate is 1: the bound's boundary case.
pub fn empirical_tail(q: &QuadFormSpec, n_samples: usize, side: Side, rng: &mut ChaCha8Rng) -> f64 {
    let t = q.threshold(side);
    let n = q.av.len();
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let g = q.value(&standard_cn(n, rng));
        let hit = match side {
            Side::Upper => g >= t,
            Side::Lower => g <= t,
        };
        hits += usize::from(hit);
    }
    hits as f64 / n_samples.max(1) as f64
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FragmentError {
    #[error("map is not affine in W (deviation {0:.3e})")]
    NonAffine(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Value of `(A(W), a(W), c(W))`.
pub type QuadFormMap<'a> = dyn Fn(&HMatrix) -> (HMatrix, CVector, f64) + 'a;

/// Deterministic restriction of one chance constraint.
///
/// Upper: `Tr(A) + sqrt(2 sigma) mu + sigma v - c <= 0`,
/// `||[vec A; sqrt(2) a]|| <= mu`, `v I - A >= 0`, `v >= 0`.
///
/// Lower: `Tr(A) - sqrt(2 sigma) mu - sigma v - c >= 0`,
/// `||[vec A; sqrt(2) a]|| <= mu`, `v I + A >= 0`, `v >= 0`.
///
/// `A`, `a` and `c` are stored as affine functions of the `n^2` real
/// Hermitian parameters of `W`.
#[derive(Debug, Clone)]
pub struct RestrictionFragment {
    side: Side,
    sigma: f64,
    n_w: usize,
    a: HermExpr,
    av: CVecExpr,
    c: LinExpr,
}

/// Slack variables created by [`RestrictionFragment::add_to`].
#[derive(Debug, Clone, Copy)]
pub struct FragmentSlacks {
    pub mu: Option<VarId>,
    pub v: Option<VarId>,
}

/// Hermitian basis matching the parameter order of
/// [`Model::herm_var`](crate::conic::model::Model::herm_var).
fn herm_basis(n: usize) -> Vec<HMatrix> {
    let mut m = Model::new();
    let w = m.herm_var(n);
    w.terms.iter().map(|(_, b)| HMatrix::symmetrized(b.clone())).collect()
}

/// Parameters of `w` in the [`herm_basis`] order.
fn herm_params(w: &HMatrix) -> Vec<f64> {
    let n = w.n();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(w.get(i, i).re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(w.get(i, j).re);
            out.push(w.get(i, j).im);
        }
    }
    out
}

fn test_point(n: usize, seed: u64) -> HMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    HMatrix::symmetrized(m)
}

impl RestrictionFragment {
    pub fn upper(n_w: usize, map: &QuadFormMap<'_>, sigma: f64) -> Result<Self, FragmentError> {
        Self::build(Side::Upper, n_w, map, sigma)
    }

    pub fn lower(n_w: usize, map: &QuadFormMap<'_>, sigma: f64) -> Result<Self, FragmentError> {
        Self::build(Side::Lower, n_w, map, sigma)
    }

    fn build(side: Side, n_w: usize, map: &QuadFormMap<'_>, sigma: f64) -> Result<Self, FragmentError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(FragmentError::DimensionMismatch(format!("sigma must be finite and nonnegative, got {sigma}")));
        }
        let (a0, av0, c0) = map(&HMatrix::zeros(n_w));
        let (m, d) = (a0.n(), av0.len());
        if m != d {
            return Err(FragmentError::DimensionMismatch(format!("A is {m}x{m} but a has length {d}")));
        }
        let basis = herm_basis(n_w);
        let mut a = HermExpr::constant(&a0);
        let mut av = CVecExpr::constant(&av0);
        let mut cl = LinExpr::constant(c0);
        for (k, b) in basis.iter().enumerate() {
            let (ak, avk, ck) = map(b);
            if ak.n() != m || avk.len() != d {
                return Err(FragmentError::DimensionMismatch("map output size changes with W".into()));
            }
            a.terms.push((k, ak.as_matrix() - a0.as_matrix()));
            av.terms.push((k, avk - &av0));
            cl.terms.push((k, ck - c0));
        }
        a.prune(1e-13);
        let frag = Self { side, sigma, n_w, a, av, c: cl };
        // the extracted affine model must reproduce the map off the basis
        for seed in [1u64, 2] {
            let w = test_point(n_w, seed);
            let (at, avt, ct) = map(&w);
            let x = herm_params(&w);
            let scale = 1.0 + at.max_abs() + avt.camax() + ct.abs();
            let dev = (frag.a.eval(&x).as_matrix() - at.as_matrix())
                .camax()
                .max((frag.av.eval(&x) - &avt).camax())
                .max((frag.c.eval(&x) - ct).abs());
            if !(dev <= 1e-9 * scale) {
                return Err(FragmentError::NonAffine(dev));
            }
        }
        Ok(frag)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `(A(W), a(W), c(W))`.
    pub fn eval(&self, w: &HMatrix) -> (HMatrix, CVector, f64) {
        let x = herm_params(w);
        (self.a.eval(&x), self.av.eval(&x), self.c.eval(&x))
    }

    /// Whether `A` and `a` vanish identically, making the constraint a
    /// deterministic sign condition on `c`.
    pub fn is_degenerate(&self) -> bool {
        let zero = |m: &DMatrix<Complex64>| m.iter().all(|z| *z == Complex64::new(0.0, 0.0));
        let zv = |v: &CVector| v.iter().all(|z| *z == Complex64::new(0.0, 0.0));
        zero(&self.a.constant)
            && self.a.terms.iter().all(|(_, m)| zero(m))
            && zv(&self.av.constant)
            && self.av.terms.iter().all(|(_, v)| zv(v))
    }

    /// Slack of the scalar restriction at `W` with the slacks at their
    /// optimal values: `c - T_upper` (upper) or `T_lower - c` (lower).
    /// Nonnegative exactly when the fragment is feasible at `W`.
    pub fn margin_at(&self, w: &HMatrix) -> f64 {
        let (a, av, c) = self.eval(w);
        match self.side {
            Side::Upper => c - upper_tail_threshold(&a, &av, self.sigma),
            Side::Lower => lower_tail_threshold(&a, &av, self.sigma) - c,
        }
    }

    /// `(m0, m1)` with `margin_at(t W) = m0 + t m1` for every `t >= 0`; valid
    /// when `A` and `a` are linear in `W` (the thresholds are then
    /// positively homogeneous). `None` otherwise.
    pub fn margin_along_ray(&self, w: &HMatrix) -> Option<(f64, f64)> {
        let zero_const =
            self.a.constant.iter().all(|z| z.norm() == 0.0) && self.av.constant.iter().all(|z| z.norm() == 0.0);
        if !zero_const {
            return None;
        }
        let m0 = self.margin_at(&HMatrix::zeros(self.n_w));
        Some((m0, self.margin_at(w) - m0))
    }

    /// Adds the fragment for the Hermitian expression `w` (any affine
    /// expression in the model's variables, typically a matrix variable).
    pub fn add_to(&self, model: &mut Model, w: &HermExpr) -> FragmentSlacks {
        assert_eq!(w.n(), self.n_w, "W size does not match the fragment");
        let params = herm_param_exprs(w);
        let a = substitute_herm(&self.a, &params);
        let av = substitute_cvec(&self.av, &params);
        let cl = substitute_lin(&self.c, &params);
        let sign = match self.side {
            Side::Upper => -1.0,
            Side::Lower => 1.0,
        };
        // sign * (Tr A - c) - sqrt(2 sigma) mu - sigma v >= 0
        let mut lin = (a.trace() - cl) * sign;
        if self.sigma == 0.0 || self.is_degenerate() {
            model.nonneg(lin);
            return FragmentSlacks { mu: None, v: None };
        }
        let mu = model.add_var();
        lin = lin - LinExpr::term(mu, (2.0 * self.sigma).sqrt());
        let mut tail = a.herm_vec();
        tail.extend(av.real_coords().into_iter().map(|e| e * SQRT_2));
        model.soc(LinExpr::var(mu), tail);
        let a_zero = a.terms.iter().all(|(_, m)| m.iter().all(|z| z.norm() == 0.0))
            && a.constant.iter().all(|z| z.norm() == 0.0);
        let v = if a_zero {
            None
        } else {
            let v = model.add_var();
            lin = lin - LinExpr::term(v, self.sigma);
            // v I - sign' A >= 0 with sign' = +1 (upper) / -1 (lower)
            let n = a.n();
            let mut eye = DMatrix::zeros(n, n);
            for i in 0..n {
                eye[(i, i)] = c(1.0, 0.0);
            }
            let mut lmi = a.scale(sign);
            lmi.terms.push((v, eye));
            model.psd_herm(&lmi);
            model.nonneg(LinExpr::var(v));
            Some(v)
        };
        model.nonneg(lin);
        FragmentSlacks { mu: Some(mu), v }
    }
}

/// Parameter expressions of `w` in [`herm_basis`] order.
fn herm_param_exprs(w: &HermExpr) -> Vec<LinExpr> {
    let n = w.n();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(w.entry(i, i).0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (re, im) = w.entry(i, j);
            out.push(re);
            out.push(im);
        }
    }
    out
}

fn substitute_lin(e: &LinExpr, params: &[LinExpr]) -> LinExpr {
    let mut out = LinExpr::constant(e.constant);
    for &(k, a) in &e.terms {
        out = out + params[k].clone() * a;
    }
    out.compact()
}

fn substitute_herm(e: &HermExpr, params: &[LinExpr]) -> HermExpr {
    let mut constant = e.constant.clone();
    let mut terms: Vec<(VarId, DMatrix<Complex64>)> = Vec::new();
    for (k, m) in &e.terms {
        let p = &params[*k];
        if p.constant != 0.0 {
            constant += m * c(p.constant, 0.0);
        }
        for &(v, a) in &p.terms {
            match terms.iter_mut().find(|t| t.0 == v) {
                Some(t) => t.1 += m * c(a, 0.0),
                None => terms.push((v, m * c(a, 0.0))),
            }
        }
    }
    HermExpr { constant, terms }
}

fn substitute_cvec(e: &CVecExpr, params: &[LinExpr]) -> CVecExpr {
    let mut constant = e.constant.clone();
    let mut terms: Vec<(VarId, CVector)> = Vec::new();
    for (k, vk) in &e.terms {
        let p = &params[*k];
        if p.constant != 0.0 {
            constant += vk * c(p.constant, 0.0);
        }
        for &(v, a) in &p.terms {
            match terms.iter_mut().find(|t| t.0 == v) {
                Some(t) => t.1 += vk * c(a, 0.0),
                None => terms.push((v, vk * c(a, 0.0))),
            }
        }
    }
    CVecExpr { constant, terms }
}
