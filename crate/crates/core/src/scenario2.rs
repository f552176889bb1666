//! Perfect legitimate CSI, imperfect eavesdropper CSI.
//!
//! With `g_k = g_hat_k + E_k^{1/2} x`, `x ~ CN(0, I)`, the secrecy condition
//! against Eve `k` reads `x^H A x + 2 Re(x^H a) <= c` with
//! `A = E^{1/2} W E^{1/2}`, `a = E^{1/2} W g_hat` and
//! `c = (2^-R d_k / d_b)(d_b + h^H W h) - g_hat^H W g_hat - d_k`.
//! The outage constraint is replaced by the upper Bernstein restriction.

use crate::beamformer::{
    eigen_passthrough, finish, gaussian_randomization, leading_vector, projection_rank1, recovered_status,
    scale_to_feasible, solve_lifted, BeamformerSolution, LiftedConstraint, PowerMinOptions, Recovery, SolveError,
};
use crate::bernstein::{sigma_from_outage, RestrictionFragment};
use crate::channel::{validate, ScenarioSpec, SystemConfig};
use crate::conic::model::Model;
use crate::conic::ConicProblem;
use crate::hermitian::{psd_sqrt, CVector, HMatrix};
use crate::scenario1::check_rate;

/// Per-Eve affine data of the imperfect-ECSI restriction.
#[derive(Debug, Clone)]
pub struct S2Forms {
    pub h: CVector,
    pub fragments: Vec<RestrictionFragment>,
}

pub fn s2_forms(cfg: &SystemConfig, spec: &ScenarioSpec, rate: f64) -> Result<S2Forms, SolveError> {
    check_rate(rate)?;
    let ScenarioSpec::ImperfectEcsi { h, g_hat, eve_err_covs } = validate(cfg, spec)? else {
        return Err(SolveError::WrongVariant);
    };
    let n = cfg.n_tx;
    let inv = (-rate).exp2();
    let db = cfg.noise_bob;
    let mut fragments = Vec::with_capacity(cfg.n_eves);
    for k in 0..cfg.n_eves {
        let root = psd_sqrt(&eve_err_covs[k]).map_err(crate::channel::ChannelError::from)?;
        let de = cfg.noise_eves[k];
        let (g, h) = (&g_hat[k], &h);
        let map = |w: &HMatrix| {
            let a = w.congruence(root.as_matrix());
            let av = root.mul_vec(&w.mul_vec(g));
            let c = inv * de / db * (db + w.quad_form(h)) - w.quad_form(g) - de;
            (a, av, c)
        };
        fragments.push(RestrictionFragment::upper(n, &map, sigma_from_outage(cfg.outage_probs[k]))?);
    }
    Ok(S2Forms { h, fragments })
}

/// `min Tr(W)` subject to every Eve's restriction and `W >= 0`.
pub fn build_restriction_sdp(cfg: &SystemConfig, spec: &ScenarioSpec, rate: f64) -> Result<ConicProblem, SolveError> {
    let forms = s2_forms(cfg, spec, rate)?;
    let mut model = Model::new();
    let w = model.herm_var(cfg.n_tx);
    model.minimize(w.trace());
    for f in &forms.fragments {
        f.add_to(&mut model, &w);
    }
    model.psd_herm(&w);
    Ok(model.build())
}

/// Solves the restricted SDP and recovers a rank-one beamformer.
///
/// Projection recovery checks the restriction at the projected point and
/// otherwise rescales the projected and leading-eigenvector directions,
/// rejecting anything above `10 Tr(W)`.
pub fn solve_powermin2(
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    rate: f64,
    opts: &PowerMinOptions,
) -> Result<BeamformerSolution, SolveError> {
    let forms = s2_forms(cfg, spec, rate)?;
    let cs: Vec<&dyn LiftedConstraint> = forms.fragments.iter().map(|f| f as &dyn LiftedConstraint).collect();
    let opt = solve_lifted(cfg.n_tx, &cs, &opts.conic, opts.power_cap)?;
    if let Some(sol) = eigen_passthrough(&opt, &cs) {
        return Ok(sol);
    }
    if opts.s2_recovery == Recovery::Randomization {
        let (w, p, _) = gaussian_randomization(&opt.w, &cs, opts.randomizations, opts.seed)
            .ok_or(SolveError::RandomizationFailed)?;
        return Ok(finish(w, p, recovered_status(p, &opt), Recovery::Randomization, &opt, &cs));
    }
    let cap = 10.0 * opt.w.trace();
    let mut best: Option<(CVector, f64, Recovery)> = None;
    let mut consider = |d: &CVector, how: Recovery| {
        if let Some((w, p)) = scale_to_feasible(&cs, d) {
            if p <= cap && best.as_ref().is_none_or(|b| p < b.1) {
                best = Some((w, p, how));
            }
        }
    };
    if let Ok((_, v)) = projection_rank1(&opt.w, &forms.h) {
        consider(&v, Recovery::Projection);
    }
    consider(&leading_vector(&opt.w), Recovery::Eigenvector);
    let (w, p, how) = best.ok_or(SolveError::RestrictionUnrecoverable)?;
    Ok(finish(w, p, recovered_status(p, &opt), how, &opt, &cs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::{QuadConstraint, SolveStatus};
    use crate::channel::{RandomScenario, ScenarioKind};
    use crate::conic::{solve, Cone, ConicStatus, SolverOptions};
    use crate::hermitian::unit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(n: usize, k: usize, eps: f64, seed: u64) -> ScenarioSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RandomScenario { kind: ScenarioKind::ImperfectEcsi, eps_b: 0.0, eps_e: eps }.draw(n, k, &mut rng)
    }

    /// Nominal QCQP data with `g_k` taken as exact.
    fn nominal(cfg: &SystemConfig, spec: &ScenarioSpec, rate: f64) -> Vec<QuadConstraint> {
        let ScenarioSpec::ImperfectEcsi { h, g_hat, .. } = spec else { unreachable!() };
        let inv = (-rate).exp2();
        (0..cfg.n_eves)
            .map(|k| {
                let de = cfg.noise_eves[k];
                let m = HMatrix::outer(h).scale(de / cfg.noise_bob * inv).into_inner()
                    - HMatrix::outer(&g_hat[k]).into_inner();
                QuadConstraint { m: HMatrix::symmetrized(m), b: de * (1.0 - inv) }
            })
            .collect()
    }

    #[test]
    fn dimension_audit_at_six_antennas() {
        let cfg = SystemConfig::uniform(6, 3, 1.0, 100.0, 0.05);
        let p = build_restriction_sdp(&cfg, &instance(6, 3, 0.2, 1), 3.0).unwrap();
        let psd = p.cones.iter().filter(|c| matches!(c, Cone::Psd(_))).count();
        let soc = p.cones.iter().filter(|c| matches!(c, Cone::SecondOrder(_))).count();
        assert_eq!((psd, soc), (4, 3));
    }

    #[test]
    fn zero_error_collapses_to_nominal_constraint() {
        let cfg = SystemConfig::uniform(3, 1, 1.0, 100.0, 0.1);
        let spec = instance(3, 1, 0.0, 2);
        let forms = s2_forms(&cfg, &spec, 1.0).unwrap();
        assert!(forms.fragments[0].is_degenerate());
        let q = &nominal(&cfg, &spec, 1.0)[0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let v = crate::channel::standard_cn(3, &mut rng);
            let w = HMatrix::outer(&v);
            assert!((forms.fragments[0].margin_at(&w) - q.margin(&w)).abs() < 1e-10);
        }
    }

    #[test]
    fn unit_outage_is_mean_constraint() {
        let cfg = SystemConfig::uniform(3, 1, 1.0, 100.0, 1.0);
        let spec = instance(3, 1, 0.2, 4);
        let forms = s2_forms(&cfg, &spec, 1.0).unwrap();
        assert_eq!(forms.fragments[0].sigma(), 0.0);
        let w = HMatrix::outer(&unit(3, 0));
        let (a, _, c) = forms.fragments[0].eval(&w);
        assert!((forms.fragments[0].margin_at(&w) - (c - a.trace())).abs() < 1e-12);
    }

    #[test]
    fn small_error_limit_matches_nominal_power() {
        let cfg = SystemConfig::uniform(4, 2, 1.0, 100.0, 0.05);
        let spec = instance(4, 2, 1e-6, 5);
        let rate = 1.0;
        let robust = solve_powermin2(&cfg, &spec, rate, &PowerMinOptions::default()).unwrap();
        let nom = nominal(&cfg, &spec, rate);
        let cs: Vec<&dyn LiftedConstraint> = nom.iter().map(|q| q as &dyn LiftedConstraint).collect();
        let lifted = solve_lifted(4, &cs, &SolverOptions::default(), None).unwrap();
        assert!(
            (robust.power - lifted.objective).abs() / lifted.objective < 0.02,
            "{} vs {}",
            robust.power,
            lifted.objective
        );
    }

    #[test]
    fn solved_points_respect_restriction_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut solved = 0;
        for i in 0..12 {
            let n = rng.random_range(3..7);
            let k = rng.random_range(1..3);
            let cfg = SystemConfig::uniform(n, k, 1.0, 100.0, 0.05);
            let spec = instance(n, k, 0.1, 100 + i);
            match solve_powermin2(&cfg, &spec, 0.5, &PowerMinOptions::default()) {
                Ok(sol) => {
                    solved += 1;
                    assert!(sol.margins.iter().all(|&m| m >= -1e-8), "{:?}", sol.margins);
                    assert!(sol.power >= sol.sdp_power.unwrap() - 1e-7);
                    assert!((sol.power - sol.w.norm_squared()).abs() < 1e-10);
                }
                Err(SolveError::Infeasible) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!(solved > 3);
    }

    #[test]
    fn projection_guarantee_on_solved_relaxation() {
        let cfg = SystemConfig::uniform(4, 2, 1.0, 100.0, 0.05);
        let spec = instance(4, 2, 0.05, 7);
        let forms = s2_forms(&cfg, &spec, 0.5).unwrap();
        let cs: Vec<&dyn LiftedConstraint> = forms.fragments.iter().map(|f| f as &dyn LiftedConstraint).collect();
        let opt = solve_lifted(4, &cs, &SolverOptions::default(), None).unwrap();
        let (wh, _) = projection_rank1(&opt.w, &forms.h).unwrap();
        assert!(wh.trace() <= opt.w.trace() + 1e-9, "{} {} {}", wh.trace(), opt.w.trace(), opt.rank_ratio);
        assert!((wh.quad_form(&forms.h) - opt.w.quad_form(&forms.h)).abs() < 1e-9);
    }

    #[test]
    fn objective_monotone_in_rate() {
        let cfg = SystemConfig::uniform(3, 1, 1.0, 100.0, 0.1);
        let spec = instance(3, 1, 0.1, 8);
        let mut last = 0.0;
        for r in [0.5, 1.0, 1.5, 2.0, 2.5] {
            let p = build_restriction_sdp(&cfg, &spec, r).unwrap();
            let sol = solve(&p, &SolverOptions::default());
            if sol.status != ConicStatus::Optimal {
                assert_eq!(sol.status, ConicStatus::PrimalInfeasible);
                break;
            }
            assert!(sol.primal_objective >= last - 1e-7);
            last = sol.primal_objective;
        }
    }

    #[test]
    fn randomization_recovery_is_available() {
        let cfg = SystemConfig::uniform(4, 2, 1.0, 100.0, 0.05);
        let spec = instance(4, 2, 0.05, 9);
        let opts = PowerMinOptions { s2_recovery: Recovery::Randomization, ..Default::default() };
        let sol = solve_powermin2(&cfg, &spec, 0.5, &opts).unwrap();
        assert!(sol.margins.iter().all(|&m| m >= -1e-8));
        if sol.recovery == Recovery::Eigenvector {
            assert_eq!(sol.status, SolveStatus::Optimal);
        }
    }
}
