//! Affine expressions over real decision variables and a builder that turns
//! them into a [`ConicProblem`].
//!
//! Complex Hermitian matrix variables are parameterized by `n^2` reals
//! (diagonal, then real and imaginary parts of the strict upper triangle), so
//! Hermitian structure holds by construction. A Hermitian PSD constraint is
//! imposed on the real embedding `[[Re X, -Im X], [Im X, Re X]]`, split into
//! its decoupled diagonal blocks.

use super::{svec_index, Cone, ConicProblem, ConicSolution};
use crate::hermitian::{CVector, HMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::SQRT_2;
use std::ops::{Add, Mul, Neg, Sub};

pub type VarId = usize;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn var(v: VarId) -> Self {
        Self { constant: 0.0, terms: vec![(v, 1.0)] }
    }

    pub fn term(v: VarId, a: f64) -> Self {
        Self { constant: 0.0, terms: vec![(v, a)] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, a)| a * x[v]).sum::<f64>()
    }

    /// Merges repeated variables and drops zero coefficients.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for (v, a) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => out.push((v, a)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|t| t.1 == 0.0)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, f: f64) -> LinExpr {
        self.constant *= f;
        self.terms.iter_mut().for_each(|t| t.1 *= f);
        self
    }
}

/// Affine Hermitian-matrix-valued expression `C + sum_v x_v M_v`.
#[derive(Debug, Clone)]
pub struct HermExpr {
    pub constant: DMatrix<Complex64>,
    pub terms: Vec<(VarId, DMatrix<Complex64>)>,
}

impl HermExpr {
    pub fn constant(m: &HMatrix) -> Self {
        Self { constant: m.as_matrix().clone(), terms: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, x: &[f64]) -> HMatrix {
        let mut m = self.constant.clone();
        for (v, t) in &self.terms {
            m += t * Complex64::new(x[*v], 0.0);
        }
        HMatrix::symmetrized(m)
    }

    fn map(&self, f: impl Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>) -> Self {
        Self { constant: f(&self.constant), terms: self.terms.iter().map(|(v, m)| (*v, f(m))).collect() }
    }

    /// `S X S^H`.
    pub fn congruence(&self, s: &DMatrix<Complex64>) -> Self {
        self.map(|m| s * m * s.adjoint())
    }

    pub fn scale(&self, f: f64) -> Self {
        self.map(|m| m * Complex64::new(f, 0.0))
    }

    pub fn add(&self, other: &HermExpr) -> Self {
        let mut out = self.clone();
        out.constant += &other.constant;
        out.terms.extend(other.terms.iter().cloned());
        out
    }

    pub fn add_constant(&self, m: &HMatrix) -> Self {
        let mut out = self.clone();
        out.constant += m.as_matrix();
        out
    }

    pub fn block_diag(&self, other: &HermExpr) -> Self {
        let (n1, n2) = (self.n(), other.n());
        let embed = |m: &DMatrix<Complex64>, first: bool| {
            let mut out = DMatrix::zeros(n1 + n2, n1 + n2);
            if first {
                out.view_mut((0, 0), (n1, n1)).copy_from(m);
            } else {
                out.view_mut((n1, n1), (n2, n2)).copy_from(m);
            }
            out
        };
        let mut constant = embed(&self.constant, true);
        constant += embed(&other.constant, false);
        let mut terms: Vec<_> = self.terms.iter().map(|(v, m)| (*v, embed(m, true))).collect();
        terms.extend(other.terms.iter().map(|(v, m)| (*v, embed(m, false))));
        Self { constant, terms }
    }

    /// Real and imaginary parts of entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> (LinExpr, LinExpr) {
        let re = LinExpr {
            constant: self.constant[(i, j)].re,
            terms: self.terms.iter().map(|(v, m)| (*v, m[(i, j)].re)).collect(),
        };
        let im = LinExpr {
            constant: self.constant[(i, j)].im,
            terms: self.terms.iter().map(|(v, m)| (*v, m[(i, j)].im)).collect(),
        };
        (re.compact(), im.compact())
    }

    pub fn trace(&self) -> LinExpr {
        LinExpr {
            constant: self.constant.trace().re,
            terms: self.terms.iter().map(|(v, m)| (*v, m.trace().re)).collect(),
        }
        .compact()
    }

    /// `Tr(M X)` for Hermitian `M`.
    pub fn trace_with(&self, m: &HMatrix) -> LinExpr {
        let tr = |x: &DMatrix<Complex64>| (m.as_matrix() * x).trace().re;
        LinExpr { constant: tr(&self.constant), terms: self.terms.iter().map(|(v, x)| (*v, tr(x))).collect() }.compact()
    }

    /// `v^H X v`.
    pub fn quad_form(&self, v: &CVector) -> LinExpr {
        self.trace_with(&HMatrix::outer(v))
    }

    /// `X v`.
    pub fn mul_vec(&self, v: &CVector) -> CVecExpr {
        CVecExpr { constant: &self.constant * v, terms: self.terms.iter().map(|(k, m)| (*k, m * v)).collect() }
    }

    /// Coordinates whose Euclidean norm is the Frobenius norm, in the layout
    /// of [`crate::hermitian::herm_vec`].
    pub fn herm_vec(&self) -> Vec<LinExpr> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            out.push(self.entry(i, i).0);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (re, im) = self.entry(i, j);
                out.push(re * SQRT_2);
                out.push(im * SQRT_2);
            }
        }
        out
    }

    /// Zeroes coefficients below `rel_tol` times the largest magnitude.
    pub fn prune(&mut self, rel_tol: f64) {
        let big = self
            .terms
            .iter()
            .flat_map(|(_, m)| m.iter())
            .chain(self.constant.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let cut = rel_tol * big;
        let clean = |m: &mut DMatrix<Complex64>| {
            for z in m.iter_mut() {
                if z.re.abs() <= cut {
                    z.re = 0.0;
                }
                if z.im.abs() <= cut {
                    z.im = 0.0;
                }
            }
        };
        clean(&mut self.constant);
        self.terms.iter_mut().for_each(|(_, m)| clean(m));
    }

    /// Real symmetric embedding as a matrix of affine entries.
    fn embed_entries(&self) -> Vec<Vec<LinExpr>> {
        let n = self.n();
        let mut out = vec![vec![LinExpr::default(); 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                let (re, im) = self.entry(i, j);
                out[i][j] = re.clone();
                out[i + n][j + n] = re;
                out[i][j + n] = -im.clone();
                out[i + n][j] = im;
            }
        }
        out
    }
}

/// Affine complex-vector-valued expression.
#[derive(Debug, Clone)]
pub struct CVecExpr {
    pub constant: CVector,
    pub terms: Vec<(VarId, CVector)>,
}

impl CVecExpr {
    pub fn constant(v: &CVector) -> Self {
        Self { constant: v.clone(), terms: Vec::new() }
    }

    pub fn eval(&self, x: &[f64]) -> CVector {
        let mut out = self.constant.clone();
        for (v, t) in &self.terms {
            out += t * Complex64::new(x[*v], 0.0);
        }
        out
    }

    pub fn scale(&self, f: f64) -> Self {
        let k = Complex64::new(f, 0.0);
        Self { constant: &self.constant * k, terms: self.terms.iter().map(|(v, t)| (*v, t * k)).collect() }
    }

    /// `Re v_0, Im v_0, Re v_1, ...`
    pub fn real_coords(&self) -> Vec<LinExpr> {
        let mut out = Vec::with_capacity(2 * self.constant.len());
        for i in 0..self.constant.len() {
            let re = LinExpr {
                constant: self.constant[i].re,
                terms: self.terms.iter().map(|(v, t)| (*v, t[i].re)).collect(),
            };
            let im = LinExpr {
                constant: self.constant[i].im,
                terms: self.terms.iter().map(|(v, t)| (*v, t[i].im)).collect(),
            };
            out.push(re.compact());
            out.push(im.compact());
        }
        out
    }
}

/// Incremental builder for `min c^T x` subject to affine cone memberships
/// and equalities.
#[derive(Debug, Clone, Default)]
pub struct Model {
    n: usize,
    objective: LinExpr,
    eqs: Vec<LinExpr>,
    blocks: Vec<(Cone, Vec<LinExpr>)>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn add_var(&mut self) -> VarId {
        self.n += 1;
        self.n - 1
    }

    /// Hermitian `n x n` matrix variable (`n^2` reals).
    pub fn herm_var(&mut self, n: usize) -> HermExpr {
        let z = Complex64::new(0.0, 0.0);
        let mut terms = Vec::with_capacity(n * n);
        for i in 0..n {
            let mut m = DMatrix::from_element(n, n, z);
            m[(i, i)] = Complex64::new(1.0, 0.0);
            terms.push((self.add_var(), m));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let mut re = DMatrix::from_element(n, n, z);
                re[(i, j)] = Complex64::new(1.0, 0.0);
                re[(j, i)] = Complex64::new(1.0, 0.0);
                terms.push((self.add_var(), re));
                let mut im = DMatrix::from_element(n, n, z);
                im[(i, j)] = Complex64::new(0.0, 1.0);
                im[(j, i)] = Complex64::new(0.0, -1.0);
                terms.push((self.add_var(), im));
            }
        }
        HermExpr { constant: DMatrix::from_element(n, n, z), terms }
    }

    pub fn minimize(&mut self, e: LinExpr) {
        self.objective = e.compact();
    }

    /// `e == 0`.
    pub fn eq(&mut self, e: LinExpr) {
        self.eqs.push(e.compact());
    }

    /// `e >= 0`.
    pub fn nonneg(&mut self, e: LinExpr) {
        self.blocks.push((Cone::NonNeg(1), vec![e.compact()]));
    }

    /// `||u|| <= t`; identically zero entries of `u` are dropped.
    pub fn soc(&mut self, t: LinExpr, u: Vec<LinExpr>) {
        let mut rows = vec![t.compact()];
        rows.extend(u.into_iter().map(LinExpr::compact).filter(|e| !e.is_zero()));
        if rows.len() == 1 {
            self.blocks.push((Cone::NonNeg(1), rows));
        } else {
            self.blocks.push((Cone::SecondOrder(rows.len()), rows));
        }
    }

    /// Real symmetric matrix of affine entries is PSD (only the lower
    /// triangle is read). Decoupled diagonal blocks become separate cones and
    /// exact duplicates are emitted once.
    pub fn psd_sym(&mut self, entries: &[Vec<LinExpr>]) {
        let n = entries.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        for (i, row) in entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate().take(i) {
                if !e.is_zero() {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut root_of: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            match root_of[r] {
                Some(k) => comps[k].push(i),
                None => {
                    root_of[r] = Some(comps.len());
                    comps.push(vec![i]);
                }
            }
        }
        let mut seen: Vec<(Cone, Vec<LinExpr>)> = Vec::new();
        for comp in comps {
            let k = comp.len();
            let (cone, rows) = if k == 1 {
                (Cone::NonNeg(1), vec![entries[comp[0]][comp[0]].clone().compact()])
            } else {
                let mut rows = vec![LinExpr::default(); k * (k + 1) / 2];
                for (jj, &j) in comp.iter().enumerate() {
                    for (ii, &i) in comp.iter().enumerate().skip(jj) {
                        let e = entries[i][j].clone().compact();
                        rows[svec_index(k, ii, jj)] = if ii == jj { e } else { e * SQRT_2 };
                    }
                }
                (Cone::Psd(k), rows)
            };
            if rows.iter().all(LinExpr::is_zero) || seen.iter().any(|s| s.0 == cone && s.1 == rows) {
                continue;
            }
            seen.push((cone, rows));
        }
        self.blocks.extend(seen);
    }

    /// Hermitian PSD constraint `X >= 0` through the real embedding.
    pub fn psd_herm(&mut self, x: &HermExpr) {
        self.psd_sym(&x.embed_entries());
    }

    pub fn build(&self) -> ConicProblem {
        let n = self.n;
        let mut c = vec![0.0; n];
        for &(v, a) in &self.objective.terms {
            c[v] += a;
        }
        let p = self.eqs.len();
        let mut a = DMatrix::zeros(p, n);
        let mut b = vec![0.0; p];
        for (i, e) in self.eqs.iter().enumerate() {
            for &(v, k) in &e.terms {
                a[(i, v)] += k;
            }
            b[i] = -e.constant;
        }
        let m: usize = self.blocks.iter().map(|(k, _)| k.dim()).sum();
        let mut g = DMatrix::zeros(m, n);
        let mut h = vec![0.0; m];
        let mut row = 0;
        for (_, rows) in &self.blocks {
            for e in rows {
                for &(v, k) in &e.terms {
                    g[(row, v)] -= k;
                }
                h[row] = e.constant;
                row += 1;
            }
        }
        let cones = self.blocks.iter().map(|(k, _)| *k).collect();
        ConicProblem::new(c, g, h, a, b, cones).expect("model builds consistent dimensions")
    }

    /// Objective offset dropped from `c` by [`Model::build`].
    pub fn objective_constant(&self) -> f64 {
        self.objective.constant
    }

    pub fn objective_value(&self, sol: &ConicSolution) -> f64 {
        self.objective.eval(&sol.x)
    }
}
