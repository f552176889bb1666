//! Perfect legitimate CSI, statistical eavesdropper CSI.
//!
//! With `g_k ~ CN(0, G_k)`, `|g_k^H w|^2` is exponential with mean
//! `w^H G_k w`, so the per-Eve outage constraint is exactly
//! `Tr(M_k W) >= b_k` with
//! `M_k = G_k ln p_k + (d_k / (d_b 2^R)) h h^H` and `b_k = d_k (1 - 2^-R)`.

use crate::beamformer::{
    eigen_passthrough, finish, leading_vector, scale_to_feasible, solve_lifted, BeamformerSolution, LiftedConstraint,
    PowerMinOptions, QuadConstraint, Recovery, SolveError, SolveStatus, RANK_TOL,
};
use crate::channel::{validate, ScenarioSpec, SystemConfig};
use crate::hermitian::{eig_hermitian, CVector, HMatrix};

pub(crate) fn check_rate(r: f64) -> Result<(), SolveError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(SolveError::BadRate(r))
    }
}

/// Deterministic equivalent of the statistical-ECSI outage constraints.
#[derive(Debug, Clone)]
pub struct S1Deterministic {
    pub h: CVector,
    /// `G_k`
    pub eve_covs: Vec<HMatrix>,
    /// `ln p_k` (nonpositive)
    pub ln_p: Vec<f64>,
    /// `d_k / (d_b 2^R)`
    pub coef: Vec<f64>,
    pub m: Vec<HMatrix>,
    pub b: Vec<f64>,
    pub rate: f64,
}

impl S1Deterministic {
    pub fn constraints(&self) -> Vec<QuadConstraint> {
        self.m.iter().zip(&self.b).map(|(m, &b)| QuadConstraint { m: m.clone(), b }).collect()
    }
}

pub fn build_deterministic(cfg: &SystemConfig, spec: &ScenarioSpec, rate: f64) -> Result<S1Deterministic, SolveError> {
    check_rate(rate)?;
    let ScenarioSpec::StatisticalEcsi { h, eve_covs } = validate(cfg, spec)? else {
        return Err(SolveError::WrongVariant);
    };
    let inv = (-rate).exp2();
    let hh = HMatrix::outer(&h);
    let mut out = S1Deterministic { h, eve_covs, ln_p: vec![], coef: vec![], m: vec![], b: vec![], rate };
    for k in 0..cfg.n_eves {
        let lp = cfg.outage_probs[k].ln();
        let coef = cfg.noise_eves[k] / cfg.noise_bob * inv;
        let m = out.eve_covs[k].scale(lp).into_inner() + hh.scale(coef).into_inner();
        out.m.push(HMatrix::symmetrized(m));
        out.b.push(cfg.noise_eves[k] * (1.0 - inv));
        out.ln_p.push(lp);
        out.coef.push(coef);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    /// A scaled copy of `h` satisfies every constraint.
    SufficientHolds,
    /// Some `M_k` has no positive eigenvalue.
    NecessaryFails,
    Indeterminate,
}

/// Necessary: `lambda_max(M_k) > 0` for all `k`. Sufficient:
/// `coef_k ||h||^4 + lambda_max(G_k) ||h||^2 ln p_k > 0` for all `k`, which
/// forces `h^H M_k h > 0` so that `w = t h` is feasible for large `t`.
pub fn feasibility_check(det: &S1Deterministic) -> Feasibility {
    if det.m.iter().any(|m| m.lambda_max() <= 0.0) {
        return Feasibility::NecessaryFails;
    }
    let h2 = det.h.norm_squared();
    let sufficient =
        (0..det.m.len()).all(|k| det.coef[k] * h2 * h2 + det.eve_covs[k].lambda_max() * h2 * det.ln_p[k] > 0.0);
    if sufficient {
        Feasibility::SufficientHolds
    } else {
        Feasibility::Indeterminate
    }
}

/// Single-Eve closed form `w = sqrt(b / rho) v_max` with `(rho, v_max)` the
/// leading eigenpair of `M`.
pub fn closed_form_single_eve(det: &S1Deterministic) -> Result<BeamformerSolution, SolveError> {
    assert_eq!(det.m.len(), 1, "closed form requires a single eavesdropper");
    let e = eig_hermitian(&det.m[0]);
    let rho = e.values[0];
    if !(rho > 0.0) {
        return Err(SolveError::Infeasible);
    }
    let power = det.b[0] / rho;
    let w = e.vector(0) * num_complex::Complex64::new(power.sqrt(), 0.0);
    let margins = vec![det.m[0].quad_form(&w) - det.b[0]];
    Ok(BeamformerSolution {
        power: w.norm_squared(),
        w,
        status: SolveStatus::Optimal,
        recovery: Recovery::ClosedForm,
        rank_ratio: None,
        sdp_power: None,
        sdp_w: None,
        margins,
        conic: None,
    })
}

/// Semidefinite relaxation `min Tr(W) s.t. Tr(M_k W) >= b_k, W >= 0`.
/// Its optimum is rank one, so the leading eigenpair solves the original
/// problem; a small numerical rank excess is absorbed by rescaling.
pub fn solve_sdr(det: &S1Deterministic, opts: &PowerMinOptions) -> Result<BeamformerSolution, SolveError> {
    solve_quadratic(det.h.len(), &det.constraints(), opts)
}

/// Power minimization under `Tr(M_k W) >= b_k`; shared with the nominal
/// (non-robust) design, which may have indefinite-rank optima and then
/// falls back to randomization.
pub(crate) fn solve_quadratic(
    n: usize,
    qs: &[QuadConstraint],
    opts: &PowerMinOptions,
) -> Result<BeamformerSolution, SolveError> {
    let cs: Vec<&dyn LiftedConstraint> = qs.iter().map(|q| q as &dyn LiftedConstraint).collect();
    let opt = solve_lifted(n, &cs, &opts.conic, opts.power_cap)?;
    if let Some(sol) = eigen_passthrough(&opt, &cs) {
        return Ok(sol);
    }
    // rank excess: the rescaled leading eigenvector is still optimal when
    // it attains the relaxation bound
    if let Some((w, p)) = scale_to_feasible(&cs, &leading_vector(&opt.w)) {
        if p <= opt.objective * (1.0 + 1e-6) + 1e-9 {
            return Ok(finish(w, p, SolveStatus::Optimal, Recovery::Eigenvector, &opt, &cs));
        }
    }
    debug_assert!(opt.rank_ratio > RANK_TOL);
    match crate::beamformer::gaussian_randomization(&opt.w, &cs, opts.randomizations, opts.seed) {
        Some((w, p, _)) => Ok(finish(w, p, SolveStatus::Feasible, Recovery::Randomization, &opt, &cs)),
        None => Err(SolveError::RankViolation(opt.rank_ratio)),
    }
}

/// Power minimization for the statistical-ECSI scenario: closed form for a
/// single Eve, relaxation otherwise.
pub fn solve_powermin1(
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    rate: f64,
    opts: &PowerMinOptions,
) -> Result<BeamformerSolution, SolveError> {
    let det = build_deterministic(cfg, spec, rate)?;
    if feasibility_check(&det) == Feasibility::NecessaryFails {
        return Err(SolveError::Infeasible);
    }
    if det.m.len() == 1 {
        closed_form_single_eve(&det)
    } else {
        solve_sdr(&det, opts)
    }
}

/// Perfect-CSI constraints treating `h` and every `g_k` as exact:
/// `M_k = (d_k / (d_b 2^R)) h h^H - g_k g_k^H`, `b_k = d_k (1 - 2^-R)`.
pub fn nominal_constraints(cfg: &SystemConfig, h: &CVector, g: &[CVector], rate: f64) -> Vec<QuadConstraint> {
    let inv = (-rate).exp2();
    g.iter()
        .zip(&cfg.noise_eves)
        .map(|(gk, &de)| {
            let m = HMatrix::outer(h).scale(de / cfg.noise_bob * inv).into_inner() - HMatrix::outer(gk).into_inner();
            QuadConstraint { m: HMatrix::symmetrized(m), b: de * (1.0 - inv) }
        })
        .collect()
}

/// Exact per-Eve outage of `w`:
/// `min(1, exp((d_k / q_k)(1 - (d_b + |h^H w|^2) / (d_b 2^R))))`,
/// `q_k = w^H G_k w`.
pub fn analytic_outage(w: &CVector, cfg: &SystemConfig, spec: &ScenarioSpec, rate: f64) -> Vec<f64> {
    let ScenarioSpec::StatisticalEcsi { h, eve_covs } = spec else {
        panic!("analytic outage requires statistical eavesdropper CSI");
    };
    let hw = h.dotc(w).norm_sqr();
    let ratio = (cfg.noise_bob + hw) / (cfg.noise_bob * rate.exp2());
    eve_covs
        .iter()
        .zip(&cfg.noise_eves)
        .map(|(g, &de)| {
            let q = g.quad_form(w);
            let expo = 1.0 - ratio;
            if q <= 0.0 {
                // Eve receives nothing: outage iff Bob alone misses the rate
                return if expo > 0.0 { 1.0 } else { 0.0 };
            }
            (de / q * expo).exp().min(1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{c, unit};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(p: f64) -> (SystemConfig, ScenarioSpec) {
        let cfg = SystemConfig::uniform(2, 1, 1.0, 100.0, p);
        let spec = ScenarioSpec::StatisticalEcsi { h: unit(2, 0), eve_covs: vec![HMatrix::identity(2)] };
        (cfg, spec)
    }

    #[test]
    fn hand_built_deterministic_form() {
        let (cfg, spec) = toy(0.8);
        let det = build_deterministic(&cfg, &spec, 1.0).unwrap();
        let m = det.m[0].as_matrix();
        assert!((m[(0, 0)].re - 0.27686).abs() < 1e-5);
        assert!((m[(1, 1)].re + 0.22314).abs() < 1e-5);
        assert!(m[(0, 1)].norm() < 1e-15);
        assert!((det.b[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unit_outage_drops_log_term() {
        let (cfg, spec) = toy(1.0);
        let det = build_deterministic(&cfg, &spec, 1.0).unwrap();
        let expect = HMatrix::outer(&unit(2, 0)).scale(0.5);
        assert!((det.m[0].as_matrix() - expect.as_matrix()).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_rate_and_variant() {
        let (cfg, spec) = toy(0.8);
        assert_eq!(build_deterministic(&cfg, &spec, 0.0).unwrap_err(), SolveError::BadRate(0.0));
        let other = ScenarioSpec::ImperfectEcsi {
            h: unit(2, 0),
            g_hat: vec![unit(2, 1)],
            eve_err_covs: vec![HMatrix::identity(2)],
        };
        assert_eq!(build_deterministic(&cfg, &other, 1.0).unwrap_err(), SolveError::WrongVariant);
    }

    #[test]
    fn feasibility_examples() {
        let (cfg, spec) = toy(0.8);
        let det = build_deterministic(&cfg, &spec, 1.0).unwrap();
        assert_eq!(feasibility_check(&det), Feasibility::SufficientHolds);
        let (cfg, spec) = toy(0.05);
        let det = build_deterministic(&cfg, &spec, 1.0).unwrap();
        assert!((det.m[0].lambda_max() + 2.4957).abs() < 1e-4);
        assert_eq!(feasibility_check(&det), Feasibility::NecessaryFails);
        let zero_h = ScenarioSpec::StatisticalEcsi { h: CVector::zeros(2), eve_covs: vec![HMatrix::identity(2)] };
        for p in [0.05, 0.5, 0.99] {
            let cfg = SystemConfig::uniform(2, 1, 1.0, 100.0, p);
            let det = build_deterministic(&cfg, &zero_h, 1.0).unwrap();
            assert_eq!(feasibility_check(&det), Feasibility::NecessaryFails);
        }
    }

    #[test]
    fn closed_form_example() {
        let (cfg, spec) = toy(0.8);
        let det = build_deterministic(&cfg, &spec, 1.0).unwrap();
        let sol = closed_form_single_eve(&det).unwrap();
        assert!((sol.power - 1.8060).abs() < 1e-4);
        assert!((sol.w[0].norm() - 1.3439).abs() < 1e-4);
        assert!(sol.w[1].norm() < 1e-12);
        assert!(sol.margins[0].abs() < 1e-12);
        let (cfg, spec) = toy(0.05);
        let det = build_deterministic(&cfg, &spec, 1.0).unwrap();
        assert_eq!(closed_form_single_eve(&det).unwrap_err(), SolveError::Infeasible);
    }

    #[test]
    fn closed_form_power_vanishes_with_rate() {
        let (cfg, spec) = toy(0.8);
        let p1 = closed_form_single_eve(&build_deterministic(&cfg, &spec, 1e-3).unwrap()).unwrap().power;
        let p2 = closed_form_single_eve(&build_deterministic(&cfg, &spec, 1e-6).unwrap()).unwrap().power;
        assert!(p2 < p1 && p2 < 1e-5);
    }

    #[test]
    fn sdr_matches_closed_form_on_example() {
        let (cfg, spec) = toy(0.8);
        let det = build_deterministic(&cfg, &spec, 1.0).unwrap();
        let sol = solve_sdr(&det, &PowerMinOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.power - 1.8060).abs() / 1.8060 < 1e-4);
        assert!(sol.power >= sol.sdp_power.unwrap() - 1e-7);
        assert!(sol.margins.iter().all(|&m| m >= -1e-7));
    }

    fn random_spec(n: usize, k: usize, eps: f64, rng: &mut ChaCha8Rng) -> ScenarioSpec {
        let h = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let eve_covs = (0..k)
            .map(|_| {
                let b = DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                HMatrix::symmetrized(&b * b.adjoint()).scale(eps / n as f64)
            })
            .collect();
        ScenarioSpec::StatisticalEcsi { h, eve_covs }
    }

    #[test]
    fn sufficiency_implies_sdr_success_and_necessity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sufficient = 0;
        for _ in 0..40 {
            let n = rng.random_range(2..5);
            let k = rng.random_range(1..4);
            let p = rng.random_range(0.02..0.5);
            let cfg = SystemConfig::uniform(n, k, 1.0, 100.0, p);
            let spec = random_spec(n, k, rng.random_range(0.05..1.0), &mut rng);
            let det = build_deterministic(&cfg, &spec, rng.random_range(0.2..2.0)).unwrap();
            let fc = feasibility_check(&det);
            let res = solve_sdr(&det, &PowerMinOptions::default());
            if fc == Feasibility::SufficientHolds {
                sufficient += 1;
                assert!(res.is_ok(), "{res:?}");
            }
            if let Ok(sol) = res {
                assert!(det.m.iter().all(|m| m.lambda_max() > 0.0));
                assert!(sol.margins.iter().all(|&m| m >= -1e-7));
            }
        }
        assert!(sufficient > 5);
    }

    #[test]
    fn analytic_outage_is_tight_at_single_eve_optimum() {
        let (cfg, spec) = toy(0.8);
        let det = build_deterministic(&cfg, &spec, 1.0).unwrap();
        let sol = closed_form_single_eve(&det).unwrap();
        let out = analytic_outage(&sol.w, &cfg, &spec, 1.0);
        assert!((out[0] - 0.8).abs() < 1e-9);
    }

    #[test]
    fn analytic_outage_without_eve_leakage() {
        let cfg = SystemConfig::uniform(2, 1, 1.0, 100.0, 0.1);
        let spec = ScenarioSpec::StatisticalEcsi { h: unit(2, 0), eve_covs: vec![HMatrix::outer(&unit(2, 1))] };
        assert_eq!(analytic_outage(&unit(2, 0), &cfg, &spec, 1.0), vec![0.0]);
        assert_eq!(analytic_outage(&unit(2, 0), &cfg, &spec, 2.0), vec![1.0]);
    }
}
