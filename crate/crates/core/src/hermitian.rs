//! Dense complex linear algebra for small Hermitian problems.
//!
//! Everything here is a pure function of its inputs. Eigendecompositions are
//! backed by `nalgebra`'s Hermitian eigensolver; this module adds the
//! ordering, phase convention, PSD square root, projections and the real
//! embedding used by the cone solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// Complex column vector (channels, beamformers, CSI errors).
pub type CVector = DVector<Complex64>;

/// Entrywise tolerance on `max |M - M^H|` accepted on ingestion.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_CLIP_TOL, 0)` are treated as rounding and clipped.
pub const PSD_CLIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max |M - M^H| = {0:e})")]
    NonHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("vector has (numerically) zero norm")]
    ZeroVector,
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix or vector has non-finite entries")]
    NonFinite,
}

pub(crate) const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Hermitian matrix. Construction symmetrizes by averaging `(M + M^H)/2`
/// after checking the asymmetry is within [`HERMITIAN_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix(DMatrix<Complex64>);

impl HMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let asym = max_asymmetry(&m);
        if asym > HERMITIAN_TOL {
            return Err(LinalgError::NonHermitian(asym));
        }
        Ok(Self::symmetrized(m))
    }

    /// Averages `(M + M^H)/2` without checking the asymmetry. Used for
    /// matrices built internally where only rounding can break symmetry.
    pub fn symmetrized(m: DMatrix<Complex64>) -> Self {
        let mh = m.adjoint();
        Self((m + mh) * c(0.5, 0.0))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self(DMatrix::identity(n, n) * c(s, 0.0))
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        Self(m)
    }

    /// `v v^H`.
    pub fn outer(v: &CVector) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `v^H M v` (real for Hermitian `M`).
    pub fn quad_form(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.0 * v)).re
    }

    /// `Tr(self * other)` for two Hermitian matrices.
    pub fn trace_inner(&self, other: &HMatrix) -> f64 {
        self.0.iter().zip(other.0.transpose().iter()).map(|(a, b)| (a * b).re).sum()
    }

    /// `sum |M_ij|^2`, i.e. `||vec(M)||^2`.
    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `S M S^H`.
    pub fn congruence(&self, s: &DMatrix<Complex64>) -> HMatrix {
        Self::symmetrized(s * &self.0 * s.adjoint())
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        &self.0 * v
    }

    pub fn scale(&self, s: f64) -> HMatrix {
        Self(&self.0 * c(s, 0.0))
    }

    /// Block-diagonal `diag(self, other)`.
    pub fn block_diag(&self, other: &HMatrix) -> HMatrix {
        let (n1, n2) = (self.n(), other.n());
        let mut m = DMatrix::zeros(n1 + n2, n1 + n2);
        m.view_mut((0, 0), (n1, n1)).copy_from(&self.0);
        m.view_mut((n1, n1), (n2, n2)).copy_from(&other.0);
        Self(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest eigenvalue `rho(M)`.
    pub fn lambda_max(&self) -> f64 {
        eig_hermitian(self).values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *eig_hermitian(self).values.last().unwrap()
    }
}

impl Add for &HMatrix {
    type Output = HMatrix;
    fn add(self, rhs: &HMatrix) -> HMatrix {
        HMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HMatrix {
    type Output = HMatrix;
    fn sub(self, rhs: &HMatrix) -> HMatrix {
        HMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &HMatrix {
    type Output = HMatrix;
    fn mul(self, rhs: f64) -> HMatrix {
        self.scale(rhs)
    }
}

pub fn max_asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Full Hermitian eigendecomposition, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: DMatrix<Complex64>,
}

impl EigDecomp {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    /// `V diag(f(lambda)) V^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        HMatrix::symmetrized(scaled * self.vectors.adjoint())
    }
}

/// Eigendecomposition with a reproducible phase: in every eigenvector the
/// entry of largest magnitude is made real and positive.
pub fn eig_hermitian(m: &HMatrix) -> EigDecomp {
    let n = m.n();
    let eig = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &idx) in order.iter().enumerate() {
        values.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        let norm_max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        // first entry within rounding of the max, so near-ties stay stable
        let pivot = col.iter().position(|z| z.norm() >= norm_max * (1.0 - 1e-12)).unwrap_or(0);
        let p = col[pivot];
        let phase = if p.norm() > 0.0 { p.conj() / p.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            vectors[(i, k)] = col[i] * phase;
        }
    }
    EigDecomp { values, vectors }
}

/// Hermitian PSD square root. Eigenvalues in `[-1e-10, 0)` are clipped to 0.
pub fn psd_sqrt(m: &HMatrix) -> Result<HMatrix, LinalgError> {
    let eig = eig_hermitian(m);
    let min = *eig.values.last().unwrap();
    if min < -PSD_CLIP_TOL {
        return Err(LinalgError::NotPsd(min));
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Clips eigenvalues in `[-1e-10, 0)` to zero; errors on anything more negative.
pub fn clip_psd(m: &HMatrix) -> Result<HMatrix, LinalgError> {
    let eig = eig_hermitian(m);
    let min = *eig.values.last().unwrap();
    if min < -PSD_CLIP_TOL {
        return Err(LinalgError::NotPsd(min));
    }
    if min >= 0.0 {
        return Ok(m.clone());
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

/// Orthogonal projector `v v^H / ||v||^2`.
pub fn projection_onto(v: &CVector) -> Result<HMatrix, LinalgError> {
    let nrm2 = v.norm_squared();
    if nrm2.sqrt() <= 1e-12 {
        return Err(LinalgError::ZeroVector);
    }
    Ok(HMatrix::outer(v).scale(1.0 / nrm2))
}

/// Real symmetric embedding `[[Re M, -Im M], [Im M, Re M]]`.
pub fn embed_real(m: &HMatrix) -> DMatrix<f64> {
    let n = m.n();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m.0[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Number of eigenvalues above `ratio_tol * lambda_1`; zero when
/// `lambda_1 <= 1e-12`.
pub fn numerical_rank(m: &HMatrix, ratio_tol: f64) -> usize {
    let values = eig_hermitian(m).values;
    let top = values[0];
    if top <= 1e-12 {
        return 0;
    }
    values.iter().filter(|&&l| l > ratio_tol * top).count()
}

/// `lambda_2 / lambda_1` (0 for a 1x1 or zero matrix).
pub fn rank_ratio(m: &HMatrix) -> f64 {
    let values = eig_hermitian(m).values;
    if values.len() < 2 || values[0] <= 0.0 {
        return 0.0;
    }
    values[1].max(0.0) / values[0]
}

/// Real coordinates of a Hermitian matrix whose Euclidean norm equals the
/// Frobenius norm: diagonal, then `sqrt(2) Re`, `sqrt(2) Im` of the strict
/// upper triangle (row-major).
pub fn herm_vec(m: &HMatrix) -> Vec<f64> {
    let n = m.n();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m.0[(i, i)].re);
    }
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(r2 * m.0[(i, j)].re);
            out.push(r2 * m.0[(i, j)].im);
        }
    }
    out
}

pub fn is_finite_vec(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Builds a `CVector` from real parts only.
pub fn cvec_real(re: &[f64]) -> CVector {
    CVector::from_iterator(re.len(), re.iter().map(|&r| c(r, 0.0)))
}

/// Standard basis vector `e_k` of length `n`.
pub fn unit(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = c(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn herm_from_parts(n: usize, parts: &[f64]) -> HMatrix {
        let mut m = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            m[(i, i)] = c(parts[k], 0.0);
            k += 1;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                m[(i, j)] = c(parts[k], parts[k + 1]);
                m[(j, i)] = c(parts[k], -parts[k + 1]);
                k += 2;
            }
        }
        HMatrix::new(m).unwrap()
    }

    fn arb_herm(n: usize) -> impl Strategy<Value = HMatrix> {
        prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |p| herm_from_parts(n, &p))
    }

    fn arb_psd(n: usize) -> impl Strategy<Value = HMatrix> {
        prop::collection::vec(-1.0..1.0f64, 2 * n * n).prop_map(move |p| {
            let b = DMatrix::from_fn(n, n, |i, j| c(p[2 * (i * n + j)], p[2 * (i * n + j) + 1]));
            HMatrix::symmetrized(&b * b.adjoint())
        })
    }

    fn arb_unit(n: usize) -> impl Strategy<Value = CVector> {
        prop::collection::vec(-1.0..1.0f64, 2 * n).prop_filter_map("nonzero", move |p| {
            let v = CVector::from_fn(n, |i, _| c(p[2 * i], p[2 * i + 1]));
            let nv = v.norm();
            (nv > 1e-3).then(|| v / c(nv, 0.0))
        })
    }

    #[test]
    fn eig_diagonal() {
        let e = eig_hermitian(&HMatrix::from_real_diag(&[1.0, 2.0]));
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert!((e.vector(0) - unit(2, 1)).norm() < 1e-14);
        assert!((e.vector(1) - unit(2, 0)).norm() < 1e-14);
    }

    #[test]
    fn eig_two_by_two_complex() {
        // characteristic polynomial (1-l)^2 - |i|^2 = 0 -> l in {2, 0}
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let e = eig_hermitian(&HMatrix::new(m).unwrap());
        assert!((e.values[0] - 2.0).abs() < 1e-12);
        assert!(e.values[1].abs() < 1e-12);
        // phase convention: first largest-magnitude entry real positive
        for k in 0..2 {
            let v = e.vector(k);
            let top = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let p = v.iter().find(|z| z.norm() >= top * (1.0 - 1e-12)).unwrap();
            assert!(p.im.abs() < 1e-12 && p.re > 0.0);
        }
    }

    #[test]
    fn eig_identity() {
        let e = eig_hermitian(&HMatrix::identity(3));
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HMatrix::new(m), Err(LinalgError::NonHermitian(_))));
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 1e-12), c(1.0, 0.0)]);
        assert!(HMatrix::new(m).is_ok());
    }

    #[test]
    fn sqrt_examples() {
        let s = psd_sqrt(&HMatrix::identity(3)).unwrap();
        assert!((s.as_matrix() - DMatrix::identity(3, 3)).norm() < 1e-14);
        let s = psd_sqrt(&HMatrix::from_real_diag(&[4.0, 9.0])).unwrap();
        assert!((s.get(0, 0).re - 2.0).abs() < 1e-14 && (s.get(1, 1).re - 3.0).abs() < 1e-14);
        assert!(matches!(psd_sqrt(&HMatrix::from_real_diag(&[1.0, -0.1])), Err(LinalgError::NotPsd(_))));
        let s = psd_sqrt(&HMatrix::from_real_diag(&[1.0, -1e-11])).unwrap();
        assert_eq!(s.get(1, 1).re, 0.0);
    }

    #[test]
    fn projection_examples() {
        let p = projection_onto(&unit(2, 0)).unwrap();
        assert!((p.as_matrix() - HMatrix::outer(&unit(2, 0)).as_matrix()).norm() < 1e-15);
        let r = 1.0 / 2f64.sqrt();
        let p = projection_onto(&cvec_real(&[r, r])).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.get(i, j).re - 0.5).abs() < 1e-15);
            }
        }
        assert!(matches!(projection_onto(&CVector::zeros(3)), Err(LinalgError::ZeroVector)));
    }

    #[test]
    fn embed_examples() {
        let e = embed_real(&HMatrix::identity(1));
        assert_eq!(e, DMatrix::identity(2, 2));
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let e = embed_real(&HMatrix::new(m).unwrap());
        let mut ev: Vec<f64> = SymmetricEigen::new(e).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let want = [2.0, 2.0, 0.0, 0.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&HMatrix::outer(&unit(3, 0)), 1e-6), 1);
        assert_eq!(numerical_rank(&HMatrix::identity(3), 1e-6), 3);
        assert_eq!(numerical_rank(&HMatrix::from_real_diag(&[1.0, 1e-9]), 1e-6), 1);
        assert_eq!(numerical_rank(&HMatrix::zeros(2), 1e-6), 0);
    }

    #[test]
    fn herm_vec_is_frobenius() {
        let m = herm_from_parts(3, &[1.0, -2.0, 0.5, 0.3, -0.7, 1.1, 0.2, -0.4, 0.9]);
        let v = herm_vec(&m);
        let n2: f64 = v.iter().map(|x| x * x).sum();
        assert!((n2 - m.frobenius_sq()).abs() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eig_reconstructs(m in (1usize..7).prop_flat_map(arb_herm)) {
            let e = eig_hermitian(&m);
            let r = e.reconstruct_with(|l| l);
            let scale = m.as_matrix().norm().max(1e-300);
            prop_assert!((r.as_matrix() - m.as_matrix()).norm() <= 1e-8 * scale + 1e-14);
            let g = e.vectors.adjoint() * &e.vectors;
            prop_assert!((g - DMatrix::<Complex64>::identity(m.n(), m.n())).camax() < 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn rayleigh_never_exceeds_rho((m, v) in (1usize..7).prop_flat_map(|n| (arb_herm(n), arb_unit(n)))) {
            prop_assert!(m.quad_form(&v) <= m.lambda_max() + 1e-8);
        }

        #[test]
        fn sqrt_squares_back(m in (1usize..17).prop_flat_map(arb_psd)) {
            let s = psd_sqrt(&m).unwrap();
            let sq = s.as_matrix() * s.as_matrix();
            let scale = m.as_matrix().norm();
            prop_assert!((sq - m.as_matrix()).norm() <= 1e-8 * scale + 1e-12);
            prop_assert!(s.lambda_min() >= -1e-10);
        }

        #[test]
        fn projection_fixes_v(v in (1usize..7).prop_flat_map(arb_unit)) {
            let p = projection_onto(&v).unwrap();
            prop_assert!((p.mul_vec(&v) - &v).norm() < 1e-10);
            prop_assert!((p.trace() - 1.0).abs() < 1e-12);
            let p2 = p.as_matrix() * p.as_matrix();
            prop_assert!((p2 - p.as_matrix()).norm() < 1e-10);
        }

        #[test]
        fn embedding_preserves_psd(m in (1usize..6).prop_flat_map(arb_herm)) {
            let lam_min = m.lambda_min();
            let e = embed_real(&m);
            let emin = SymmetricEigen::new(e.clone()).eigenvalues.min();
            prop_assert!((lam_min - emin).abs() < 1e-9);
            prop_assert!((e.trace() - 2.0 * m.trace()).abs() < 1e-10);
        }
    }
}
