//! Imperfect legitimate and eavesdropper CSI.
//!
//! Stacking `x = [x_b; x_k]` with `h = h_hat + E_b^{1/2} x_b` and
//! `g_k = g_hat_k + E_k^{1/2} x_k`, the secrecy condition
//! `h^H W h / d_b - 2^R g_k^H W g_k / d_k >= 2^R - 1` becomes
//! `x^H A x + 2 Re(x^H a) >= c` with block-diagonal `A` of side `2 n`.
//! The outage constraint is replaced by the lower Bernstein restriction.

use crate::beamformer::{
    eigen_passthrough, finish, gaussian_randomization, recovered_status, solve_lifted, BeamformerSolution,
    LiftedConstraint, PowerMinOptions, Recovery, SolveError,
};
use crate::bernstein::{sigma_from_outage, RestrictionFragment};
use crate::channel::{validate, ChannelError, ScenarioSpec, SystemConfig};
use crate::conic::model::Model;
use crate::conic::ConicProblem;
use crate::hermitian::{psd_sqrt, CVector, HMatrix};
use crate::scenario1::check_rate;

#[derive(Debug, Clone)]
pub struct S3Forms {
    pub fragments: Vec<RestrictionFragment>,
}

/// `(A, a, c)` of the stacked quadratic form at `W`.
#[allow(clippy::too_many_arguments)]
pub fn s3_map(
    w: &HMatrix,
    h_hat: &CVector,
    eb_root: &HMatrix,
    db: f64,
    g_hat: &CVector,
    ee_root: &HMatrix,
    de: f64,
    rate: f64,
) -> (HMatrix, CVector, f64) {
    let two_r = rate.exp2();
    let fb = 1.0 / db;
    let fe = -two_r / de;
    let a = w.congruence(eb_root.as_matrix()).scale(fb).block_diag(&w.congruence(ee_root.as_matrix()).scale(fe));
    let ab = eb_root.mul_vec(&w.mul_vec(h_hat)) * num_complex::Complex64::new(fb, 0.0);
    let ae = ee_root.mul_vec(&w.mul_vec(g_hat)) * num_complex::Complex64::new(fe, 0.0);
    let av = CVector::from_iterator(ab.len() + ae.len(), ab.iter().chain(ae.iter()).copied());
    let c = two_r - 1.0 - fb * w.quad_form(h_hat) - fe * w.quad_form(g_hat);
    (a, av, c)
}

pub fn s3_forms(cfg: &SystemConfig, spec: &ScenarioSpec, rate: f64) -> Result<S3Forms, SolveError> {
    check_rate(rate)?;
    let ScenarioSpec::ImperfectBoth { h_hat, bob_err_cov, g_hat, eve_err_covs } = validate(cfg, spec)? else {
        return Err(SolveError::WrongVariant);
    };
    let eb_root = psd_sqrt(&bob_err_cov).map_err(ChannelError::from)?;
    let mut fragments = Vec::with_capacity(cfg.n_eves);
    for k in 0..cfg.n_eves {
        let ee_root = psd_sqrt(&eve_err_covs[k]).map_err(ChannelError::from)?;
        let de = cfg.noise_eves[k];
        let map = |w: &HMatrix| s3_map(w, &h_hat, &eb_root, cfg.noise_bob, &g_hat[k], &ee_root, de, rate);
        fragments.push(RestrictionFragment::lower(cfg.n_tx, &map, sigma_from_outage(cfg.outage_probs[k]))?);
    }
    Ok(S3Forms { fragments })
}

pub fn build_restriction_sdp3(cfg: &SystemConfig, spec: &ScenarioSpec, rate: f64) -> Result<ConicProblem, SolveError> {
    let forms = s3_forms(cfg, spec, rate)?;
    let mut model = Model::new();
    let w = model.herm_var(cfg.n_tx);
    model.minimize(w.trace());
    for f in &forms.fragments {
        f.add_to(&mut model, &w);
    }
    model.psd_herm(&w);
    Ok(model.build())
}

/// Solves the restricted SDP; rank-one optima pass through, otherwise
/// Gaussian randomization picks the cheapest feasible candidate.
pub fn solve_powermin3(
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    rate: f64,
    opts: &PowerMinOptions,
) -> Result<BeamformerSolution, SolveError> {
    let forms = s3_forms(cfg, spec, rate)?;
    let cs: Vec<&dyn LiftedConstraint> = forms.fragments.iter().map(|f| f as &dyn LiftedConstraint).collect();
    let opt = solve_lifted(cfg.n_tx, &cs, &opts.conic, opts.power_cap)?;
    if let Some(sol) = eigen_passthrough(&opt, &cs) {
        return Ok(sol);
    }
    let (w, p, _) =
        gaussian_randomization(&opt.w, &cs, opts.randomizations, opts.seed).ok_or(SolveError::RandomizationFailed)?;
    Ok(finish(w, p, recovered_status(p, &opt), Recovery::Randomization, &opt, &cs))
}
