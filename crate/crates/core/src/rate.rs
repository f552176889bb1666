//! Secrecy-rate maximization by bisection over the target rate.

use crate::beamformer::{BeamformerSolution, PowerMinOptions, Recovery, SolveError, SolveStatus};
use crate::channel::{validate, ScenarioSpec, SystemConfig};
use crate::hermitian::CVector;
use crate::{scenario1, scenario2, scenario3};
use serde::Serialize;

pub const DEFAULT_RATE_TOL: f64 = 1e-3;
pub const MAX_BISECTION_STEPS: usize = 30;

/// Minimum-power beamformer achieving secrecy rate `rate` for the scenario
/// of `spec`.
pub fn solve_powermin(
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    rate: f64,
    opts: &PowerMinOptions,
) -> Result<BeamformerSolution, SolveError> {
    match spec {
        ScenarioSpec::StatisticalEcsi { .. } => scenario1::solve_powermin1(cfg, spec, rate, opts),
        ScenarioSpec::ImperfectEcsi { .. } => scenario2::solve_powermin2(cfg, spec, rate, opts),
        ScenarioSpec::ImperfectBoth { .. } => scenario3::solve_powermin3(cfg, spec, rate, opts),
    }
}

/// `log2(1 + P ||h||^2 / d_b)`; for an estimated `h` the norm is inflated
/// by `3 sqrt(Tr E_b)`.
pub fn rate_upper_bound(cfg: &SystemConfig, spec: &ScenarioSpec) -> f64 {
    let gain = match spec {
        ScenarioSpec::StatisticalEcsi { h, .. } | ScenarioSpec::ImperfectEcsi { h, .. } => h.norm_squared(),
        ScenarioSpec::ImperfectBoth { h_hat, bob_err_cov, .. } => {
            (h_hat.norm() + 3.0 * bob_err_cov.trace().max(0.0).sqrt()).powi(2)
        }
    };
    (1.0 + cfg.power_budget * gain / cfg.noise_bob).log2()
}

#[derive(Debug, Clone)]
pub struct BisectionResult {
    pub rate_opt: f64,
    pub solution: BeamformerSolution,
    pub iterations: usize,
    pub bracket_width: f64,
    /// `(rate, attainable)` for every probe, in order.
    pub probes: Vec<(f64, bool)>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateOptions {
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_RATE_TOL, max_steps: MAX_BISECTION_STEPS }
    }
}

fn zero_solution(n: usize) -> BeamformerSolution {
    BeamformerSolution {
        w: CVector::zeros(n),
        power: 0.0,
        status: SolveStatus::Optimal,
        recovery: Recovery::ClosedForm,
        rank_ratio: None,
        sdp_power: None,
        sdp_w: None,
        margins: vec![],
        conic: None,
    }
}

/// Outcome of one probe: `Some(solution)` when the rate is attainable
/// within the power budget.
fn probe(
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    rate: f64,
    opts: &PowerMinOptions,
) -> Result<Option<BeamformerSolution>, SolveError> {
    match solve_powermin(cfg, spec, rate, opts) {
        Ok(sol) if sol.power <= cfg.power_budget + 1e-6 => Ok(Some(sol)),
        Ok(_)
        | Err(SolveError::Infeasible)
        | Err(SolveError::RankViolation(_))
        | Err(SolveError::RestrictionUnrecoverable)
        | Err(SolveError::RandomizationFailed) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Largest rate (within `ropts.tol`) whose power-minimizing beamformer fits
/// the budget. Infeasible and over-budget probes both shrink the bracket
/// from above. Returns rate 0 with a zero beamformer when even `tol` is
/// unattainable.
pub fn max_secrecy_rate(
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    ropts: &RateOptions,
    opts: &PowerMinOptions,
) -> Result<BisectionResult, SolveError> {
    if !(ropts.tol.is_finite() && ropts.tol > 0.0) {
        return Err(SolveError::BadRate(ropts.tol));
    }
    let spec = validate(cfg, spec)?;
    let opts = &PowerMinOptions { power_cap: Some(2.0 * cfg.power_budget), ..opts.clone() };
    let mut hi = rate_upper_bound(cfg, &spec);
    let mut probes = Vec::new();
    let first = if hi > ropts.tol { probe(cfg, &spec, ropts.tol, opts)? } else { None };
    probes.push((ropts.tol, first.is_some()));
    let Some(mut best) = first else {
        return Ok(BisectionResult {
            rate_opt: 0.0,
            solution: zero_solution(cfg.n_tx),
            iterations: 1,
            bracket_width: ropts.tol,
            probes,
        });
    };
    let mut lo = ropts.tol;
    let mut iterations = 1;
    while hi - lo > ropts.tol && iterations < ropts.max_steps {
        let mid = 0.5 * (lo + hi);
        let res = probe(cfg, &spec, mid, opts)?;
        probes.push((mid, res.is_some()));
        iterations += 1;
        match res {
            Some(sol) => {
                lo = mid;
                best = sol;
            }
            None => hi = mid,
        }
    }
    Ok(BisectionResult { rate_opt: lo, solution: best, iterations, bracket_width: hi - lo, probes })
}
