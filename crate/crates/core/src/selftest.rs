//! Acceptance checks, shared by the `selftest` subcommand (fast subset) and
//! the integration suite (full size).
//!
//! Every check draws its instances from fixed seeds, so a given scale always
//! produces the same verdicts.

use crate::beamformer::{projection_rank1, solve_lifted, LiftedConstraint, PowerMinOptions, SolveError};
use crate::bernstein::{empirical_tail, QuadFormSpec, Side};
use crate::channel::{standard_cn, substream, RandomScenario, ScenarioKind, ScenarioSpec, SystemConfig};
use crate::conic::{health, random_sdp_pair, solve, ConicStatus, SolverOptions};
use crate::hermitian::{psd_sqrt, CVector, HMatrix};
use crate::montecarlo::{
    binomial_ci, empirical_outage, fraction_below, run_sweep, CdfExperiment, Design, SweepAxis, SweepConfig, SweepRow,
};
use crate::rate::{max_secrecy_rate, RateOptions};
use crate::scenario1::{
    analytic_outage, build_deterministic, closed_form_single_eve, feasibility_check, solve_powermin1, solve_sdr,
    Feasibility,
};
use crate::scenario2::{s2_forms, solve_powermin2};
use crate::scenario3::solve_powermin3;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, RngCore};
use serde::Serialize;
use std::fmt;
use std::time::Instant;

const SEED: u64 = 0x5345_4c46;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Reduced instance and sample counts.
    Fast,
    Full,
}

impl Scale {
    fn pick(self, fast: usize, full: usize) -> usize {
        match self {
            Scale::Fast => fast,
            Scale::Full => full,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {} ({:.1}s)", self.id, self.name, self.detail, self.seconds)
    }
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "single-eve closed form vs relaxation"),
    (2, "rank-one tightness of the relaxation"),
    (3, "statistical-ECSI outage exactness"),
    (4, "Bernstein tail bounds"),
    (5, "projection recovery guarantees"),
    (6, "conservativeness of robust designs"),
    (7, "statistical-ECSI rate CDF"),
    (8, "robust vs non-robust rate CDF"),
    (9, "monotone rate sweeps"),
    (10, "brute-force rank-one oracle"),
    (11, "conic solver health"),
];

/// Runs one criterion. Criterion 11 inspects every optimal conic solve
/// recorded since the last call to [`crate::conic::health::take`].
pub fn run_criterion(id: u8, scale: Scale) -> CriterionResult {
    let t = Instant::now();
    let (passed, detail) = match id {
        1 => closed_form_vs_relaxation(scale),
        2 => rank_one_tightness(scale),
        3 => outage_exactness(scale),
        4 => bernstein_bounds(scale),
        5 => projection_guarantees(scale),
        6 => conservativeness(scale),
        7 => statistical_cdf(scale),
        8 => robust_vs_nonrobust(scale),
        9 => monotone_sweeps(scale),
        10 => brute_force_oracle(scale),
        11 => solver_health(),
        _ => (false, format!("unknown criterion {id}")),
    };
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    CriterionResult { id, name, passed, detail, seconds: t.elapsed().as_secs_f64() }
}

/// All criteria in order; the solver-health record is reset first so that
/// criterion 11 covers exactly the solves of this run.
pub fn run_all(scale: Scale, mut on_result: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    health::take();
    CRITERIA
        .iter()
        .map(|&(id, _)| {
            let r = run_criterion(id, scale);
            on_result(&r);
            r
        })
        .collect()
}

fn rng(keys: &[u64], i: u64) -> rand_chacha::ChaCha8Rng {
    substream(SEED, keys, i)
}

fn statistical(n: usize, k: usize, eps: f64, r: &mut impl Rng) -> ScenarioSpec {
    RandomScenario { kind: ScenarioKind::StatisticalEcsi, eps_b: 0.0, eps_e: eps }.draw(n, k, r)
}

fn closed_form_vs_relaxation(scale: Scale) -> (bool, String) {
    let want = scale.pick(20, 100);
    let (mut done, mut worst, mut i) = (0, 0.0f64, 0u64);
    while done < want && i < 10 * want as u64 {
        let n = [2, 4, 6, 8][i as usize % 4];
        let spec = statistical(n, 1, 0.2, &mut rng(&[1], i));
        i += 1;
        let cfg = SystemConfig::uniform(n, 1, 1.0, 100.0, 0.1);
        let det = build_deterministic(&cfg, &spec, 1.0).expect("valid instance");
        if feasibility_check(&det) == Feasibility::NecessaryFails {
            continue;
        }
        let (Ok(cf), Ok(sdr)) = (closed_form_single_eve(&det), solve_sdr(&det, &PowerMinOptions::default())) else {
            return (false, format!("solve failed on instance {}", i - 1));
        };
        worst = worst.max((cf.power - sdr.power).abs() / cf.power);
        done += 1;
    }
    (done == want && worst <= 1e-5, format!("{done} instances, max relative power gap {worst:.2e} (limit 1e-5)"))
}

fn rank_one_tightness(scale: Scale) -> (bool, String) {
    let want = scale.pick(25, 100);
    let (mut done, mut worst, mut i) = (0, 0.0f64, 0u64);
    while done < want && i < 10 * want as u64 {
        let mut r = rng(&[2], i);
        i += 1;
        let n = r.random_range(2..=8);
        let k = r.random_range(1..=4);
        let rate = r.random_range(0.5..2.0);
        let spec = statistical(n, k, 0.2, &mut r);
        let cfg = SystemConfig::uniform(n, k, 1.0, 100.0, 0.1);
        let det = build_deterministic(&cfg, &spec, rate).expect("valid instance");
        if feasibility_check(&det) == Feasibility::NecessaryFails {
            continue;
        }
        let qs = det.constraints();
        let cs: Vec<&dyn LiftedConstraint> = qs.iter().map(|q| q as &dyn LiftedConstraint).collect();
        match solve_lifted(n, &cs, &SolverOptions::default(), None) {
            Ok(opt) => {
                worst = worst.max(opt.rank_ratio);
                done += 1;
            }
            Err(SolveError::Infeasible) => {}
            Err(e) => return (false, format!("instance {}: {e}", i - 1)),
        }
    }
    (done == want && worst <= 1e-6, format!("{done} instances, max lambda2/lambda1 {worst:.2e} (limit 1e-6)"))
}

fn outage_exactness(scale: Scale) -> (bool, String) {
    let tuples = scale.pick(5, 20) as u64;
    let draws = scale.pick(20_000, 100_000);
    let mut worst_z = 0.0f64;
    let mut misses = 0;
    for i in 0..tuples {
        let mut r = rng(&[3], i);
        let n = r.random_range(2..=6);
        let k = r.random_range(1..=3);
        let eps = r.random_range(0.1..0.5);
        let rate = r.random_range(0.5..2.0);
        let spec = statistical(n, k, eps, &mut r);
        let w = standard_cn(n, &mut r) * Complex64::new(r.random_range(0.5..3.0), 0.0);
        let cfg = SystemConfig::uniform(n, k, 1.0, 100.0, 0.1);
        let exact = analytic_outage(&w, &cfg, &spec, rate);
        let rep = empirical_outage(&w, &cfg, &spec, rate, draws, r.next_u64()).expect("valid tuple");
        for (e, p) in rep.per_eve_outage.iter().zip(&exact) {
            let ci = binomial_ci(*p, draws);
            let dev = (e - p).abs();
            if ci > 0.0 {
                worst_z = worst_z.max(3.0 * dev / ci);
            }
            if dev > ci {
                misses += 1;
            }
        }
    }
    // designs at their design rate keep every per-Eve outage within budget
    let designs = scale.pick(2, 5) as u64;
    let mut design_excess = 0;
    let mut worst_design = 0.0f64;
    for i in 0..designs {
        let mut r = rng(&[3, 1], i);
        let spec = statistical(4, 2, 0.2, &mut r);
        let cfg = SystemConfig::uniform(4, 2, 1.0, 100.0, 0.1);
        let Ok(sol) = solve_powermin1(&cfg, &spec, 1.0, &PowerMinOptions::default()) else {
            continue;
        };
        let rep = empirical_outage(&sol.w, &cfg, &spec, 1.0, draws, r.next_u64()).expect("valid design");
        for (p, ci) in rep.per_eve_outage.iter().zip(&rep.ci_halfwidth) {
            worst_design = worst_design.max(*p);
            if *p > 0.1 + ci {
                design_excess += 1;
            }
        }
    }
    (
        misses == 0 && design_excess == 0,
        format!(
            "{tuples} tuples at {draws} draws: max |emp-exact| = {worst_z:.2} sigma, {misses} outside 3 sigma; \
             designs: max per-Eve outage {worst_design:.4} vs 0.1, {design_excess} above budget+CI"
        ),
    )
}

fn random_hermitian(n: usize, r: &mut impl Rng) -> HMatrix {
    let cols: Vec<CVector> = (0..n).map(|_| standard_cn(n, r)).collect();
    let m = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    HMatrix::symmetrized(m)
}

fn bernstein_bounds(scale: Scale) -> (bool, String) {
    let samples = scale.pick(10_000, 100_000);
    let pairs = scale.pick(5, 20) as u64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut fails = 0;
    for (li, side) in [Side::Upper, Side::Lower].into_iter().enumerate() {
        for i in 0..pairs {
            let mut r = rng(&[4, li as u64], i);
            let n = r.random_range(2..=6);
            let a = random_hermitian(n, &mut r).scale(r.random_range(0.2..2.0));
            let av = standard_cn(n, &mut r) * Complex64::new(r.random_range(0.0..1.5), 0.0);
            for sigma in [0.5, 1.0, 3.0] {
                let q = QuadFormSpec { a: a.clone(), av: av.clone(), c: 0.0, sigma };
                let tail = empirical_tail(&q, samples, side, &mut r);
                let bound = (-sigma).exp();
                let excess = tail - bound - binomial_ci(bound, samples);
                worst_excess = worst_excess.max(tail - bound);
                if excess > 0.0 {
                    fails += 1;
                }
            }
        }
    }
    (
        fails == 0,
        format!(
            "{} (A, a, sigma) cases per tail at {samples} samples, max tail - bound {worst_excess:+.4}, {fails} above bound+CI",
            3 * pairs
        ),
    )
}

fn projection_guarantees(scale: Scale) -> (bool, String) {
    let want = scale.pick(10, 50);
    let (mut done, mut i, mut violations) = (0, 0u64, 0);
    let mut worst_h = 0.0f64;
    while done < want && i < 20 * want as u64 {
        let mut r = rng(&[5], i);
        i += 1;
        let n = r.random_range(3..=6);
        let k = r.random_range(1..=3);
        let cfg = SystemConfig::uniform(n, k, 1.0, 100.0, 0.05);
        let spec = RandomScenario { kind: ScenarioKind::ImperfectEcsi, eps_b: 0.0, eps_e: 0.1 }.draw(n, k, &mut r);
        let forms = s2_forms(&cfg, &spec, 0.5).expect("valid instance");
        let cs: Vec<&dyn LiftedConstraint> = forms.fragments.iter().map(|f| f as &dyn LiftedConstraint).collect();
        let opt = match solve_lifted(n, &cs, &SolverOptions::default(), None) {
            Ok(o) => o,
            Err(SolveError::Infeasible) => continue,
            Err(e) => return (false, format!("instance {}: {e}", i - 1)),
        };
        let Ok((wh, _)) = projection_rank1(&opt.w, &forms.h) else {
            return (false, format!("instance {}: degenerate projection", i - 1));
        };
        done += 1;
        let tol = |v: f64| 1e-9 * v.abs().max(1.0);
        let (th, tw) = (wh.trace(), opt.w.trace());
        if th > tw + tol(tw) {
            violations += 1;
        }
        let (hh, hw) = (wh.quad_form(&forms.h), opt.w.quad_form(&forms.h));
        worst_h = worst_h.max((hh - hw).abs() / hw.abs().max(1.0));
        if (hh - hw).abs() > tol(hw) {
            violations += 1;
        }
        for _ in 0..100 {
            let g = standard_cn(n, &mut r);
            let (gh, gw) = (wh.quad_form(&g), opt.w.quad_form(&g));
            if gh > gw + tol(gw) {
                violations += 1;
            }
        }
    }
    (
        done == want && violations == 0,
        format!("{done} solved instances, {violations} violations, max relative |h^H(W^-W)h| {worst_h:.1e}"),
    )
}

fn conservativeness(scale: Scale) -> (bool, String) {
    let want = scale.pick(4, 20);
    let draws = scale.pick(20_000, 100_000);
    let mut parts = Vec::new();
    let mut ok = true;
    for (si, (kind, eps_b, eps_e)) in
        [(ScenarioKind::ImperfectEcsi, 0.0, 0.1), (ScenarioKind::ImperfectBoth, 0.01, 0.05)].into_iter().enumerate()
    {
        let cfg = SystemConfig::uniform(4, 2, 1.0, 100.0, 0.05);
        let (mut done, mut i, mut worst, mut over) = (0, 0u64, 0.0f64, 0);
        while done < want && i < 5 * want as u64 {
            let mut r = rng(&[6, si as u64], i);
            i += 1;
            let spec = RandomScenario { kind, eps_b, eps_e }.draw(4, 2, &mut r);
            let res = match max_secrecy_rate(&cfg, &spec, &RateOptions::default(), &PowerMinOptions::default()) {
                Ok(res) if res.rate_opt > 0.0 => res,
                Ok(_) => continue,
                Err(e) => return (false, format!("{kind:?} instance {}: {e}", i - 1)),
            };
            let rep = empirical_outage(&res.solution.w, &cfg, &spec, res.rate_opt, draws, r.next_u64())
                .expect("valid design");
            worst = worst.max(rep.outage);
            if rep.outage > 0.05 + binomial_ci(0.05, draws) {
                over += 1;
            }
            done += 1;
        }
        ok &= done == want && over == 0;
        parts.push(format!("{kind:?}: {done} designs, max secrecy outage {worst:.4}, {over} above 0.05+CI"));
    }
    (ok, parts.join("; "))
}

fn statistical_cdf(scale: Scale) -> (bool, String) {
    let realizations = scale.pick(20, 200) as u64;
    let draws = scale.pick(2000, 10_000);
    let mut ok = true;
    let mut parts = Vec::new();
    for (pi, p) in [0.05, 0.10, 0.15].into_iter().enumerate() {
        let cfg = SystemConfig::uniform(6, 1, 1.0, 100.0, p);
        let (mut done, mut over, mut worst) = (0, 0, 0.0f64);
        let mut pooled = Vec::new();
        for i in 0..realizations {
            let mut r = rng(&[7, pi as u64], i);
            let spec = statistical(6, 1, 0.2, &mut r);
            let Ok(sol) = solve_powermin1(&cfg, &spec, 1.0, &PowerMinOptions::default()) else {
                continue;
            };
            let rep = empirical_outage(&sol.w, &cfg, &spec, 1.0, draws, r.next_u64()).expect("valid design");
            worst = worst.max(rep.per_eve_outage[0]);
            if rep.per_eve_outage[0] > p + rep.ci_halfwidth[0] {
                over += 1;
            }
            pooled.extend(rep.rate_samples);
            done += 1;
        }
        let mass = fraction_below(&pooled, 1.0);
        let mass_ok = mass <= p + binomial_ci(p, pooled.len());
        ok &= over == 0 && mass_ok && done > 0;
        parts.push(format!("p={p}: {done} designs, max outage {worst:.4}, {over} above p+CI, CDF mass {mass:.4}"));
    }
    // worst-Eve rates with three Eves, reported for reference only: the
    // per-Eve budget does not bound the union of the three outage events
    let cfg = SystemConfig::uniform(6, 3, 1.0, 100.0, 0.05);
    let mut pooled = Vec::new();
    for i in 0..realizations.min(50) {
        let mut r = rng(&[7, 9], i);
        let spec = statistical(6, 3, 0.2, &mut r);
        if let Ok(sol) = solve_powermin1(&cfg, &spec, 1.0, &PowerMinOptions::default()) {
            pooled.extend(empirical_outage(&sol.w, &cfg, &spec, 1.0, 1000, r.next_u64()).expect("valid").rate_samples);
        }
    }
    parts.push(format!("(three Eves, p=0.05: worst-Eve CDF mass {:.4})", fraction_below(&pooled, 1.0)));
    (ok, parts.join("; "))
}

fn robust_vs_nonrobust(scale: Scale) -> (bool, String) {
    let kept = scale.pick(10, 100);
    let draws = scale.pick(1000, 10_000);
    let mut ok = true;
    let mut parts = Vec::new();
    for (si, (kind, eps_b)) in
        [(ScenarioKind::ImperfectEcsi, 0.0), (ScenarioKind::ImperfectBoth, 0.005)].into_iter().enumerate()
    {
        let exp = CdfExperiment {
            cfg: SystemConfig::uniform(6, 1, 1.0, 100.0, 0.05),
            scenario: RandomScenario { kind, eps_b, eps_e: 0.2 },
            rate: 3.0,
            instances: 200 * kept,
            max_kept: Some(kept),
            draws,
            designs: vec![Design::Robust, Design::NonRobust],
            solver: PowerMinOptions::default(),
            seed: SEED ^ (8 + si as u64),
        };
        let rep = match exp.run() {
            Ok(rep) => rep,
            Err(e) => return (false, format!("{kind:?}: {e}")),
        };
        let robust = rep.pooled(0);
        let base = rep.pooled(1);
        let (fr, fb) = (fraction_below(&robust, 3.0), fraction_below(&base, 3.0));
        let pass = rep.instances.len() == kept && fb > 0.3 && fr <= 0.05 + binomial_ci(0.05, robust.len().max(1));
        ok &= pass;
        parts.push(format!(
            "{kind:?}: {} realizations kept of {} drawn ({} solver failures), robust below R {fr:.4}, non-robust below R {fb:.4}",
            rep.instances.len(),
            rep.attempted,
            rep.failed
        ));
    }
    (ok, parts.join("; "))
}

/// Inversions against the expected direction; an inversion larger than the
/// three-sigma spread of the two means fails outright.
fn curve_inversions(rows: &[SweepRow], increasing: bool, tol: f64) -> (usize, bool) {
    let mut count = 0;
    let mut beyond_ci = false;
    for p in rows.windows(2) {
        let drop = if increasing { p[0].mean_rate - p[1].mean_rate } else { p[1].mean_rate - p[0].mean_rate };
        if drop > tol {
            count += 1;
            let se = (p[0].rate_sd.powi(2) / p[0].n_ok.max(1) as f64 + p[1].rate_sd.powi(2) / p[1].n_ok.max(1) as f64)
                .sqrt();
            beyond_ci |= drop > 3.0 * se;
        }
    }
    (count, beyond_ci)
}

/// Label, scenario, base `eps_b`, base `eps_e`, swept axis and grid.
type Curve = (&'static str, ScenarioKind, f64, f64, SweepAxis, Vec<f64>);

fn monotone_sweeps(scale: Scale) -> (bool, String) {
    let instances = scale.pick(10, 50);
    let power_db = [0.0, 5.0, 10.0, 15.0, 20.0];
    let powers: Vec<f64> = power_db.iter().map(|d: &f64| 10f64.powf(d / 10.0)).collect();
    use ScenarioKind::*;
    let curves: [Curve; 7] = [
        ("statistical / power", StatisticalEcsi, 0.0, 0.2, SweepAxis::Power, powers.clone()),
        ("statistical / eps_e", StatisticalEcsi, 0.0, 0.2, SweepAxis::EpsE, vec![0.05, 0.1, 0.2, 0.3, 0.4]),
        ("imperfect ECSI / power", ImperfectEcsi, 0.0, 0.1, SweepAxis::Power, powers.clone()),
        ("imperfect ECSI / eps_e", ImperfectEcsi, 0.0, 0.1, SweepAxis::EpsE, vec![0.02, 0.05, 0.1, 0.15, 0.2]),
        ("imperfect both / power", ImperfectBoth, 0.01, 0.05, SweepAxis::Power, powers),
        ("imperfect both / eps_b", ImperfectBoth, 0.01, 0.05, SweepAxis::EpsB, vec![0.005, 0.01, 0.02, 0.03, 0.05]),
        ("imperfect both / eps_e", ImperfectBoth, 0.01, 0.05, SweepAxis::EpsE, vec![0.02, 0.05, 0.1, 0.15, 0.2]),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (ci, (label, kind, eps_b, eps_e, axis, grid)) in curves.into_iter().enumerate() {
        let exp = SweepConfig {
            kind,
            n_tx: 4,
            n_eves: 2,
            noise: 1.0,
            power: 100.0,
            outage: 0.05,
            eps_b,
            eps_e,
            axis,
            grid,
            instances,
            outage_samples: 1000,
            rate: RateOptions::default(),
            solver: PowerMinOptions::default(),
            seed: SEED ^ (90 + ci as u64),
        };
        let table = match run_sweep(&exp) {
            Ok(t) => t,
            Err(e) => return (false, format!("{label}: {e}")),
        };
        let (inv, beyond) = curve_inversions(&table.rows, axis == SweepAxis::Power, RateOptions::default().tol);
        let fails: usize = table.rows.iter().map(|r| r.n_fail).sum();
        ok &= inv <= 1 && !beyond;
        let means: Vec<String> = table.rows.iter().map(|r| format!("{:.3}", r.mean_rate)).collect();
        parts.push(format!("{label} [{}] inversions {inv}, failures {fails}", means.join(" ")));
    }
    (ok, parts.join("; "))
}

/// Rank-one form of one scenario's constraint for a single Eve, with the
/// covariance square roots computed once.
enum Oracle {
    Statistical { h: CVector, g: HMatrix },
    Upper { h: CVector, g: CVector, root: HMatrix },
    Lower { h: CVector, root_b: HMatrix, g: CVector, root_e: HMatrix },
}

impl Oracle {
    fn new(spec: &ScenarioSpec) -> Self {
        let root = |m: &HMatrix| psd_sqrt(m).expect("covariances are PSD");
        match spec {
            ScenarioSpec::StatisticalEcsi { h, eve_covs } => {
                Oracle::Statistical { h: h.clone(), g: eve_covs[0].clone() }
            }
            ScenarioSpec::ImperfectEcsi { h, g_hat, eve_err_covs } => {
                Oracle::Upper { h: h.clone(), g: g_hat[0].clone(), root: root(&eve_err_covs[0]) }
            }
            ScenarioSpec::ImperfectBoth { h_hat, bob_err_cov, g_hat, eve_err_covs } => Oracle::Lower {
                h: h_hat.clone(),
                root_b: root(bob_err_cov),
                g: g_hat[0].clone(),
                root_e: root(&eve_err_covs[0]),
            },
        }
    }

    /// Least `s = ||w||^2` with `w = sqrt(s) d` feasible, for unit `d`.
    /// Along the ray the constraint reads `s k >= k0` with `k0 > 0`.
    fn ray_power(&self, cfg: &SystemConfig, rate: f64, d: &CVector) -> Option<f64> {
        let (db, de, p) = (cfg.noise_bob, cfg.noise_eves[0], cfg.outage_probs[0]);
        let (sigma, two_r) = (-p.ln(), rate.exp2());
        let (k, k0) = match self {
            // (de / (s q)) (1 - (db + s x) / (db 2^R)) <= ln p
            Oracle::Statistical { h, g } => {
                let (q, x) = (g.quad_form(d), h.dotc(d).norm_sqr());
                (q * p.ln() + de * x / (db * two_r), de * (1.0 - 1.0 / two_r))
            }
            // c(s) >= s (|u|^2 + sqrt(2 sigma) sqrt(|u|^4 + 2 |u|^2 |d^H g|^2) + sigma |u|^2)
            Oracle::Upper { h, g, root } => {
                let u2 = root.mul_vec(d).norm_squared();
                let gw = g.dotc(d).norm_sqr();
                let t = u2 + (2.0 * sigma).sqrt() * (u2 * u2 + 2.0 * u2 * gw).sqrt() + sigma * u2;
                let c1 = de / two_r * h.dotc(d).norm_sqr() / db - gw;
                (c1 - t, de * (1.0 - 1.0 / two_r))
            }
            // s (ub - ue - sqrt(2 sigma) sqrt(ub^2 + ue^2 + 2|a|^2) - sigma ue) >= c(s)
            Oracle::Lower { h, root_b, g, root_e } => {
                let ub = root_b.mul_vec(d).norm_squared() / db;
                let ue = two_r * root_e.mul_vec(d).norm_squared() / de;
                let (hw, gw) = (h.dotc(d).norm_sqr(), g.dotc(d).norm_sqr());
                let a2 = ub * hw / db + ue * two_r * gw / de;
                let t = ub - ue - (2.0 * sigma).sqrt() * (ub * ub + ue * ue + 2.0 * a2).sqrt() - sigma * ue;
                (t + hw / db - two_r * gw / de, two_r - 1.0)
            }
        };
        (k > 0.0).then(|| k0 / k)
    }

    /// Grid over `(cos t, e^{i f} sin t)` followed by zoom passes around the
    /// incumbent.
    fn min_power(&self, cfg: &SystemConfig, rate: f64) -> Option<f64> {
        use std::f64::consts::{FRAC_PI_2, PI};
        let dir = |t: f64, f: f64| {
            let t = t.clamp(0.0, FRAC_PI_2);
            CVector::from_vec(vec![Complex64::new(t.cos(), 0.0), Complex64::from_polar(t.sin(), f)])
        };
        let (mut t0, mut t1, mut f0, mut f1) = (0.0, FRAC_PI_2, 0.0, 2.0 * PI);
        let mut best: Option<(f64, f64, f64)> = None;
        for pass in 0..8 {
            let (nt, nf) = if pass == 0 { (64, 128) } else { (24, 24) };
            for i in 0..=nt {
                let t = t0 + (t1 - t0) * i as f64 / nt as f64;
                for j in 0..=nf {
                    let f = f0 + (f1 - f0) * j as f64 / nf as f64;
                    if let Some(p) = self.ray_power(cfg, rate, &dir(t, f)) {
                        if best.is_none_or(|b| p < b.0) {
                            best = Some((p, t, f));
                        }
                    }
                }
            }
            let (_, bt, bf) = best?;
            let (st, sf) = (2.0 * (t1 - t0) / nt as f64, 2.0 * (f1 - f0) / nf as f64);
            (t0, t1, f0, f1) = (bt - st, bt + st, bf - sf, bf + sf);
        }
        best.map(|b| b.0)
    }
}

fn brute_force_oracle(scale: Scale) -> (bool, String) {
    let want = scale.pick(3, 10);
    let mut ok = true;
    let mut parts = Vec::new();
    let setups = [
        (ScenarioKind::StatisticalEcsi, 0.0, 0.2, 1.0, 0.1),
        (ScenarioKind::ImperfectEcsi, 0.0, 0.05, 0.5, 0.1),
        (ScenarioKind::ImperfectBoth, 0.01, 0.05, 0.5, 0.1),
    ];
    for (si, (kind, eps_b, eps_e, rate, p)) in setups.into_iter().enumerate() {
        let cfg = SystemConfig::uniform(2, 1, 1.0, 100.0, p);
        let (mut done, mut i, mut worst, mut bad) = (0, 0u64, 0.0f64, 0);
        while done < want && i < 30 * want as u64 {
            let spec = RandomScenario { kind, eps_b, eps_e }.draw(2, 1, &mut rng(&[10, si as u64], i));
            i += 1;
            let solved = match kind {
                ScenarioKind::StatisticalEcsi => solve_powermin1(&cfg, &spec, rate, &PowerMinOptions::default()),
                ScenarioKind::ImperfectEcsi => solve_powermin2(&cfg, &spec, rate, &PowerMinOptions::default()),
                ScenarioKind::ImperfectBoth => solve_powermin3(&cfg, &spec, rate, &PowerMinOptions::default()),
            };
            let oracle = Oracle::new(&spec).min_power(&cfg, rate);
            match (solved, oracle) {
                (Err(SolveError::Infeasible), None) => continue,
                (Ok(sol), Some(po)) => {
                    let rel = (sol.power - po).abs() / po;
                    worst = worst.max(rel);
                    if rel > 0.01 {
                        bad += 1;
                    }
                }
                _ => bad += 1,
            }
            done += 1;
        }
        ok &= done == want && bad == 0;
        parts.push(format!("{kind:?}: {done} instances, max relative power gap {worst:.2e}, {bad} mismatches"));
    }
    (ok, parts.join("; "))
}

fn solver_health() -> (bool, String) {
    let mut dual_gap = 0.0f64;
    let mut dual_ok = true;
    for i in 0..20u64 {
        let mut r = rng(&[11], i);
        let (pp, dp) = random_sdp_pair(&mut r, 2 + i as usize % 4, 1 + i as usize % 3);
        let (ps, ds) = (solve(&pp, &SolverOptions::default()), solve(&dp, &SolverOptions::default()));
        if ps.status != ConicStatus::Optimal || ds.status != ConicStatus::Optimal {
            dual_ok = false;
            continue;
        }
        let gap = (ps.primal_objective + ds.primal_objective).abs() / (1.0 + ps.primal_objective.abs());
        dual_gap = dual_gap.max(gap);
    }
    let h = health::take();
    let ok = dual_ok
        && dual_gap <= 1e-6
        && h.max_relative_gap <= 1e-7
        && h.max_primal_residual <= 1e-8
        && h.max_dual_residual <= 1e-8
        && h.max_cone_distance <= 1e-8;
    (
        ok,
        format!(
            "{} optimal solves: max relative gap {:.1e}, max primal residual {:.1e}, max dual residual {:.1e}, \
             max cone distance {:.1e}; primal/dual pairs differ by at most {dual_gap:.1e}",
            h.optimal_solves, h.max_relative_gap, h.max_primal_residual, h.max_dual_residual, h.max_cone_distance
        ),
    )
}
