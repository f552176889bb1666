//! Shared machinery for the power-minimization solvers: the lifted SDP over
//! `W = w w^H`, rank-one recovery, and the result type.

use crate::bernstein::{FragmentError, RestrictionFragment};
use crate::channel::{standard_cn, substream, ChannelError};
use crate::conic::model::{HermExpr, LinExpr, Model};
use crate::conic::{solve, ConicSolution, ConicStatus, SolverOptions};
use crate::hermitian::{eig_hermitian, psd_sqrt, rank_ratio, CVector, HMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rank decision threshold on `lambda_2 / lambda_1`.
pub const RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("target rate must be positive, got {0}")]
    BadRate(f64),
    #[error("solver does not handle this CSI scenario")]
    WrongVariant,
    #[error(transparent)]
    Spec(#[from] ChannelError),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("relaxation returned rank ratio {0:.3e} and the rank-one projection is infeasible")]
    RankViolation(f64),
    #[error("no rank-one point satisfying the restriction was recovered")]
    RestrictionUnrecoverable,
    #[error("no randomization candidate satisfies the restriction")]
    RandomizationFailed,
    #[error("conic solver stopped with status {0:?}")]
    Numerical(ConicStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Certified optimal for the problem solved (closed form or a rank-one
    /// relaxation optimum).
    Optimal,
    /// Feasible rank-one point recovered from a higher-rank relaxation.
    Feasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recovery {
    ClosedForm,
    Eigenvector,
    Projection,
    Randomization,
}

/// Diagnostics of the underlying conic solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicStats {
    pub iterations: usize,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl ConicStats {
    fn of(sol: &ConicSolution) -> Self {
        Self {
            iterations: sol.iterations,
            relative_gap: sol.relative_gap,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BeamformerSolution {
    pub w: CVector,
    /// `||w||^2`
    pub power: f64,
    pub status: SolveStatus,
    pub recovery: Recovery,
    /// `lambda_2 / lambda_1` of the relaxation optimum.
    pub rank_ratio: Option<f64>,
    /// Optimal value of the relaxation (a lower bound on `power`).
    pub sdp_power: Option<f64>,
    /// Relaxation optimum `W`.
    pub sdp_w: Option<HMatrix>,
    /// Per-constraint slack at `w w^H` (nonnegative when satisfied).
    pub margins: Vec<f64>,
    pub conic: Option<ConicStats>,
}

impl BeamformerSolution {
    pub fn outer(&self) -> HMatrix {
        HMatrix::outer(&self.w)
    }
}

/// A constraint on the lifted variable `W` whose slack is affine along rays
/// through the origin.
pub trait LiftedConstraint: Sync {
    /// Slack at `W`; the constraint holds iff it is nonnegative.
    fn margin(&self, w: &HMatrix) -> f64;
    /// `(m0, m1)` with `margin(t W) = m0 + t m1` for `t >= 0`.
    fn ray(&self, w: &HMatrix) -> (f64, f64);
    fn add_to(&self, model: &mut Model, w: &HermExpr);
}

/// `Tr(M W) >= b`.
#[derive(Debug, Clone)]
pub struct QuadConstraint {
    pub m: HMatrix,
    pub b: f64,
}

impl LiftedConstraint for QuadConstraint {
    fn margin(&self, w: &HMatrix) -> f64 {
        self.m.trace_inner(w) - self.b
    }

    fn ray(&self, w: &HMatrix) -> (f64, f64) {
        (-self.b, self.m.trace_inner(w))
    }

    fn add_to(&self, model: &mut Model, w: &HermExpr) {
        model.nonneg(w.trace_with(&self.m) - LinExpr::constant(self.b));
    }
}

impl LiftedConstraint for RestrictionFragment {
    fn margin(&self, w: &HMatrix) -> f64 {
        self.margin_at(w)
    }

    fn ray(&self, w: &HMatrix) -> (f64, f64) {
        self.margin_along_ray(w).expect("restriction maps are linear in W")
    }

    fn add_to(&self, model: &mut Model, w: &HermExpr) {
        RestrictionFragment::add_to(self, model, w);
    }
}

/// Smallest `t >= 0` making every constraint hold at `t d d^H`, if any.
pub fn min_scale(constraints: &[&dyn LiftedConstraint], d: &CVector) -> Option<f64> {
    let dd = HMatrix::outer(d);
    let mut t: f64 = 0.0;
    for c in constraints {
        let (m0, m1) = c.ray(&dd);
        if m0 >= 0.0 {
            // holds at t = 0; stays feasible for larger t only if m1 >= 0
            if m1 < 0.0 {
                return None;
            }
            continue;
        }
        if !(m1 > 0.0) {
            return None;
        }
        t = t.max(-m0 / m1);
    }
    // re-check the combined scale, which can only fail by rounding
    let ok = constraints.iter().all(|c| c.margin(&dd.scale(t)) >= -1e-9 * (1.0 + t));
    ok.then_some(t)
}

/// Rescales `d` to the smallest feasible multiple; `(w, power)`.
pub fn scale_to_feasible(constraints: &[&dyn LiftedConstraint], d: &CVector) -> Option<(CVector, f64)> {
    let t = min_scale(constraints, d)?;
    let w = d * num_complex::Complex64::new(t.sqrt(), 0.0);
    let p = w.norm_squared();
    Some((w, p))
}

pub fn margins(constraints: &[&dyn LiftedConstraint], w: &CVector) -> Vec<f64> {
    let ww = HMatrix::outer(w);
    constraints.iter().map(|c| c.margin(&ww)).collect()
}

/// Solution of the lifted SDP `min Tr(W) s.t. constraints, W >= 0`.
pub struct LiftedOptimum {
    pub w: HMatrix,
    pub objective: f64,
    pub rank_ratio: f64,
    pub stats: ConicStats,
}

/// `cap` adds `Tr(W) <= cap`, which keeps the feasible set bounded when the
/// unconstrained optimum is huge or the problem is nearly infeasible.
pub fn solve_lifted(
    n: usize,
    constraints: &[&dyn LiftedConstraint],
    opts: &SolverOptions,
    cap: Option<f64>,
) -> Result<LiftedOptimum, SolveError> {
    let mut model = Model::new();
    let w = model.herm_var(n);
    model.minimize(w.trace());
    if let Some(cap) = cap {
        model.nonneg(LinExpr::constant(cap) - w.trace());
    }
    for c in constraints {
        c.add_to(&mut model, &w);
    }
    model.psd_herm(&w);
    let sol = solve(&model.build(), opts);
    match sol.status {
        ConicStatus::Optimal => {}
        ConicStatus::PrimalInfeasible => return Err(SolveError::Infeasible),
        other => return Err(SolveError::Numerical(other)),
    }
    let wv = w.eval(&sol.x);
    Ok(LiftedOptimum { objective: wv.trace(), rank_ratio: rank_ratio(&wv), w: wv, stats: ConicStats::of(&sol) })
}

/// Leading eigenvector of `W` scaled by `sqrt(lambda_1)`.
pub fn leading_vector(w: &HMatrix) -> CVector {
    let e = eig_hermitian(w);
    e.vector(0) * num_complex::Complex64::new(e.values[0].max(0.0).sqrt(), 0.0)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectionError {
    #[error("W^(1/2) h vanishes; projection direction undefined")]
    DegenerateDirection,
}

/// Projection approximation: `W_hat = W^{1/2} P W^{1/2}` with `P` the
/// projector onto `W^{1/2} h`; returns `W_hat` and `w` with
/// `w w^H = W_hat`.
///
/// `Tr(W_hat) <= Tr(W)`, `h^H W_hat h = h^H W h`, and
/// `g^H W_hat g <= g^H W g` for every `g`.
pub fn projection_rank1(w: &HMatrix, h: &CVector) -> Result<(HMatrix, CVector), ProjectionError> {
    let root = psd_sqrt(&crate::hermitian::clip_psd(w).map_err(|_| ProjectionError::DegenerateDirection)?)
        .map_err(|_| ProjectionError::DegenerateDirection)?;
    let u = root.mul_vec(h);
    let un = u.norm();
    if !(un > 1e-12) {
        return Err(ProjectionError::DegenerateDirection);
    }
    // W^{1/2} u u^H W^{1/2} / ||u||^2 = v v^H with v = W^{1/2} u / ||u||
    let v = root.mul_vec(&u) / num_complex::Complex64::new(un, 0.0);
    Ok((HMatrix::outer(&v), v))
}

/// Gaussian randomization: candidate 0 is the leading eigenvector of `W`,
/// candidates `1..=l` are draws from `CN(0, W)`; each is rescaled to the
/// smallest feasible multiple and the lowest-power one is returned with its
/// index.
pub fn gaussian_randomization(
    w: &HMatrix,
    constraints: &[&dyn LiftedConstraint],
    l: usize,
    seed: u64,
) -> Option<(CVector, f64, usize)> {
    let root = psd_sqrt(&crate::hermitian::clip_psd(w).ok()?).ok()?;
    let n = w.n();
    let lead = leading_vector(w);
    (0..=l)
        .into_par_iter()
        .filter_map(|i| {
            let d = if i == 0 {
                lead.clone()
            } else {
                let mut rng = substream(seed, &[0x5241_4e44], i as u64);
                root.mul_vec(&standard_cn(n, &mut rng))
            };
            scale_to_feasible(constraints, &d).map(|(v, p)| (v, p, i))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)))
}

/// Options shared by the power-minimization solvers.
#[derive(Debug, Clone)]
pub struct PowerMinOptions {
    pub conic: SolverOptions,
    /// Randomization candidates (besides the leading eigenvector).
    pub randomizations: usize,
    pub seed: u64,
    /// Rank-one recovery for imperfect-ECSI designs.
    pub s2_recovery: Recovery,
    /// Optional bound `Tr(W) <= power_cap` on the relaxation.
    pub power_cap: Option<f64>,
}

impl Default for PowerMinOptions {
    fn default() -> Self {
        Self {
            conic: SolverOptions::default(),
            randomizations: 200,
            seed: 0,
            s2_recovery: Recovery::Projection,
            power_cap: None,
        }
    }
}

/// Rank-one passthrough when the relaxation is numerically rank one:
/// leading eigenvector rescaled onto the feasible set.
pub(crate) fn eigen_passthrough(
    opt: &LiftedOptimum,
    constraints: &[&dyn LiftedConstraint],
) -> Option<BeamformerSolution> {
    if opt.rank_ratio > RANK_TOL {
        return None;
    }
    let (w, power) = scale_to_feasible(constraints, &leading_vector(&opt.w))?;
    Some(finish(w, power, SolveStatus::Optimal, Recovery::Eigenvector, opt, constraints))
}

/// `Optimal` when a recovered point attains the relaxation bound.
pub(crate) fn recovered_status(power: f64, opt: &LiftedOptimum) -> SolveStatus {
    if power <= opt.objective * (1.0 + 1e-6) + 1e-9 {
        SolveStatus::Optimal
    } else {
        SolveStatus::Feasible
    }
}

pub(crate) fn finish(
    w: CVector,
    power: f64,
    status: SolveStatus,
    recovery: Recovery,
    opt: &LiftedOptimum,
    constraints: &[&dyn LiftedConstraint],
) -> BeamformerSolution {
    BeamformerSolution {
        margins: margins(constraints, &w),
        w,
        power,
        status,
        recovery,
        rank_ratio: Some(opt.rank_ratio),
        sdp_power: Some(opt.objective),
        sdp_w: Some(opt.w.clone()),
        conic: Some(opt.stats),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{c, unit};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> HMatrix {
        let b = DMatrix::from_fn(n, rank, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HMatrix::symmetrized(&b * b.adjoint())
    }

    #[test]
    fn projection_of_identity() {
        let (wh, _) = projection_rank1(&HMatrix::identity(2), &unit(2, 0)).unwrap();
        assert!((wh.as_matrix() - HMatrix::outer(&unit(2, 0)).as_matrix()).norm() < 1e-12);
        assert!((wh.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_keeps_rank_one_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_psd(3, 1, &mut rng);
        let h = CVector::from_fn(3, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let (wh, _) = projection_rank1(&w, &h).unwrap();
        assert!((wh.as_matrix() - w.as_matrix()).norm() < 1e-9 * (1.0 + w.as_matrix().norm()));
    }

    #[test]
    fn projection_guarantees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.random_range(2..6);
            let w = random_psd(n, n, &mut rng);
            let h = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let (wh, v) = projection_rank1(&w, &h).unwrap();
            assert!(wh.trace() <= w.trace() + 1e-12);
            assert!((wh.quad_form(&h) - w.quad_form(&h)).abs() < 1e-9);
            assert!((HMatrix::outer(&v).as_matrix() - wh.as_matrix()).norm() < 1e-12);
            for _ in 0..10 {
                let g = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                assert!(wh.quad_form(&g) <= w.quad_form(&g) + 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_projection_direction() {
        let w = HMatrix::outer(&unit(2, 0));
        assert_eq!(projection_rank1(&w, &unit(2, 1)), Err(ProjectionError::DegenerateDirection));
    }

    #[test]
    fn min_scale_on_quadratic_constraint() {
        let q = QuadConstraint { m: HMatrix::from_real_diag(&[2.0, -1.0]), b: 1.0 };
        let t = min_scale(&[&q], &unit(2, 0)).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        assert!(min_scale(&[&q], &unit(2, 1)).is_none());
    }

    #[test]
    fn randomization_is_seed_deterministic() {
        let q = QuadConstraint { m: HMatrix::from_real_diag(&[2.0, 1.0]), b: 1.0 };
        let w = HMatrix::from_real_diag(&[0.3, 0.2]);
        let a = gaussian_randomization(&w, &[&q], 50, 9).unwrap();
        let b = gaussian_randomization(&w, &[&q], 50, 9).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.2, b.2);
    }
}
