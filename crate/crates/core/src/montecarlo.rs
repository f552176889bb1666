//! Monte Carlo verification: instantaneous secrecy rates, empirical outage,
//! the non-robust baseline, parameter sweeps and rate-CDF experiments.
//!
//! Every random quantity is drawn from a [`substream`] addressed by the
//! experiment seed and the draw index, so results do not depend on thread
//! count or scheduling.

use crate::beamformer::{BeamformerSolution, PowerMinOptions, SolveError};
use crate::channel::{
    substream, validate, ChannelError, ChannelRealization, ChannelSampler, RandomScenario, ScenarioKind, ScenarioSpec,
    SystemConfig,
};
use crate::hermitian::CVector;
use crate::rate::{max_secrecy_rate, solve_powermin, RateOptions};
use crate::scenario1::{nominal_constraints, solve_quadratic};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest sample count accepted by [`empirical_outage`].
pub const MIN_OUTAGE_SAMPLES: usize = 1000;
/// Default draw count for stand-alone verification.
pub const VERIFY_SAMPLES: usize = 100_000;
/// Default draw count for the outage check inside sweeps.
pub const SWEEP_OUTAGE_SAMPLES: usize = 1000;
/// Default channel instances per sweep point.
pub const SWEEP_INSTANCES: usize = 100;

const OUTAGE_KEY: u64 = 0x4f55_5441;
const SWEEP_KEY: u64 = 0x5357_4550;
const CDF_KEY: u64 = 0x4344_4653;
const CDF_CHUNK: u64 = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonteCarloError {
    #[error("need at least {MIN_OUTAGE_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("beamformer has length {got} but n_tx={want}")]
    BeamformerLength { got: usize, want: usize },
    #[error("sweep grid must be finite and strictly increasing")]
    BadGrid,
    #[error("invalid sweep value {0} for this axis")]
    BadAxisValue(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn capacity(gain: f64, noise: f64) -> f64 {
    (1.0 + gain / noise).log2()
}

/// Bob's rate and every Eve's rate for one realization.
pub fn link_rates(w: &CVector, real: &ChannelRealization, cfg: &SystemConfig) -> (f64, Vec<f64>) {
    let bob = capacity(real.h.dotc(w).norm_sqr(), cfg.noise_bob);
    let eves = real.g.iter().zip(&cfg.noise_eves).map(|(g, &d)| capacity(g.dotc(w).norm_sqr(), d)).collect();
    (bob, eves)
}

/// `[log2(1 + |h^H w|^2 / d_b) - max_k log2(1 + |g_k^H w|^2 / d_k)]^+`.
pub fn secrecy_rate(w: &CVector, real: &ChannelRealization, cfg: &SystemConfig) -> f64 {
    let (bob, eves) = link_rates(w, real, cfg);
    (bob - eves.into_iter().fold(0.0, f64::max)).max(0.0)
}

/// Three-sigma half width of a binomial proportion estimate.
pub fn binomial_ci(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageReport {
    /// Fraction of draws whose pairwise secrecy rate against Eve `k` is
    /// below the target.
    pub per_eve_outage: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    /// Fraction of draws whose secrecy rate (worst Eve) is below the target.
    pub outage: f64,
    pub outage_ci: f64,
    pub n_samples: usize,
    pub rate_samples: Vec<f64>,
}

impl OutageReport {
    pub fn max_per_eve(&self) -> f64 {
        self.per_eve_outage.iter().copied().fold(0.0, f64::max)
    }
}

/// Draws `n` channel realizations from `spec` and counts secrecy-rate
/// shortfalls of `w` below `r_target`.
pub fn empirical_outage(
    w: &CVector,
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    r_target: f64,
    n: usize,
    seed: u64,
) -> Result<OutageReport, MonteCarloError> {
    if n < MIN_OUTAGE_SAMPLES {
        return Err(MonteCarloError::TooFewSamples(n));
    }
    if w.len() != cfg.n_tx {
        return Err(MonteCarloError::BeamformerLength { got: w.len(), want: cfg.n_tx });
    }
    let spec = validate(cfg, spec)?;
    let sampler = ChannelSampler::new(&spec)?;
    let draws: Vec<(f64, Vec<bool>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let real = sampler.draw(&mut substream(seed, &[OUTAGE_KEY], i));
            let (bob, eves) = link_rates(w, &real, cfg);
            let short = eves.iter().map(|&e| (bob - e).max(0.0) < r_target).collect();
            let worst = eves.into_iter().fold(0.0, f64::max);
            ((bob - worst).max(0.0), short)
        })
        .collect();
    let mut counts = vec![0usize; cfg.n_eves];
    let mut below = 0usize;
    let mut rate_samples = Vec::with_capacity(n);
    for (rate, short) in draws {
        for (c, s) in counts.iter_mut().zip(short) {
            *c += s as usize;
        }
        below += (rate < r_target) as usize;
        rate_samples.push(rate);
    }
    let per_eve_outage: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let outage = below as f64 / n as f64;
    Ok(OutageReport {
        ci_halfwidth: per_eve_outage.iter().map(|&p| binomial_ci(p, n)).collect(),
        per_eve_outage,
        outage,
        outage_ci: binomial_ci(outage, n),
        n_samples: n,
        rate_samples,
    })
}

/// Power-minimizing beamformer that treats the channel estimates as exact.
pub fn nonrobust_baseline(
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    rate: f64,
    opts: &PowerMinOptions,
) -> Result<BeamformerSolution, SolveError> {
    crate::scenario1::check_rate(rate)?;
    let spec = validate(cfg, spec)?;
    if spec.kind() == ScenarioKind::StatisticalEcsi {
        return Err(SolveError::WrongVariant);
    }
    let qs = nominal_constraints(cfg, spec.h_nominal(), &spec.g_nominal(), rate);
    solve_quadratic(cfg.n_tx, &qs, opts)
}

/// Fraction of `samples` strictly below `r`.
pub fn fraction_below(samples: &[f64], r: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&s| s < r).count() as f64 / samples.len() as f64
}

/// Sorted `(rate, F(rate))` pairs of the empirical CDF.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.into_iter().enumerate().map(|(i, v)| (v, (i + 1) as f64 / n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Linear transmit power.
    Power,
    EpsB,
    EpsE,
    Outage,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Power => "power",
            SweepAxis::EpsB => "eps_b",
            SweepAxis::EpsE => "eps_e",
            SweepAxis::Outage => "p_out",
        }
    }
}

/// Base point of an experiment plus the swept axis.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kind: ScenarioKind,
    pub n_tx: usize,
    pub n_eves: usize,
    pub noise: f64,
    pub power: f64,
    pub outage: f64,
    pub eps_b: f64,
    pub eps_e: f64,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub instances: usize,
    /// Draws per outage check of each designed beamformer; 0 skips it.
    pub outage_samples: usize,
    pub rate: RateOptions,
    pub solver: PowerMinOptions,
    pub seed: u64,
}

impl SweepConfig {
    /// System and instance parameters at grid value `v`.
    pub fn point(&self, v: f64) -> Result<(SystemConfig, RandomScenario), MonteCarloError> {
        let mut cfg = SystemConfig::uniform(self.n_tx, self.n_eves, self.noise, self.power, self.outage);
        let mut rs = RandomScenario { kind: self.kind, eps_b: self.eps_b, eps_e: self.eps_e };
        match self.axis {
            SweepAxis::Power => cfg.power_budget = v,
            SweepAxis::EpsB => rs.eps_b = v,
            SweepAxis::EpsE => rs.eps_e = v,
            SweepAxis::Outage => cfg.outage_probs = vec![v; self.n_eves],
        }
        cfg.validate().map_err(|_| MonteCarloError::BadAxisValue(v))?;
        if !(rs.eps_b >= 0.0 && rs.eps_e >= 0.0) {
            return Err(MonteCarloError::BadAxisValue(v));
        }
        Ok((cfg, rs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// Mean optimized rate over instances that did not fail.
    pub mean_rate: f64,
    /// Sample standard deviation of those rates.
    pub rate_sd: f64,
    /// Mean worst-Eve empirical outage over verified designs.
    pub mean_outage: Option<f64>,
    pub n_ok: usize,
    /// Instances where no positive rate was attainable.
    pub n_zero: usize,
    pub n_fail: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

enum InstanceOutcome {
    Rate(f64, Option<f64>),
    Failed,
}

/// Runs [`max_secrecy_rate`] on `instances` random channels per grid value.
///
/// Instance `i` uses the same channel draw at every grid value, so curves
/// compare designs on common channels. Solver failures are counted, not
/// propagated.
pub fn run_sweep(exp: &SweepConfig) -> Result<SweepTable, MonteCarloError> {
    let increasing = exp.grid.windows(2).all(|p| p[0] < p[1]);
    if !(increasing && exp.grid.iter().all(|v| v.is_finite())) {
        return Err(MonteCarloError::BadGrid);
    }
    if exp.outage_samples != 0 && exp.outage_samples < MIN_OUTAGE_SAMPLES {
        return Err(MonteCarloError::TooFewSamples(exp.outage_samples));
    }
    let mut rows = Vec::with_capacity(exp.grid.len());
    for (pi, &v) in exp.grid.iter().enumerate() {
        let (cfg, rs) = exp.point(v)?;
        let outcomes: Vec<InstanceOutcome> = (0..exp.instances as u64)
            .into_par_iter()
            .map(|i| {
                let spec = rs.draw(exp.n_tx, exp.n_eves, &mut substream(exp.seed, &[SWEEP_KEY], i));
                let Ok(res) = max_secrecy_rate(&cfg, &spec, &exp.rate, &exp.solver) else {
                    return InstanceOutcome::Failed;
                };
                let outage = (res.rate_opt > 0.0 && exp.outage_samples > 0)
                    .then(|| {
                        let seed = substream(exp.seed, &[SWEEP_KEY, 1 + pi as u64], i).next_u64();
                        empirical_outage(&res.solution.w, &cfg, &spec, res.rate_opt, exp.outage_samples, seed)
                    })
                    .transpose();
                match outage {
                    Ok(o) => InstanceOutcome::Rate(res.rate_opt, o.map(|r| r.outage)),
                    Err(_) => InstanceOutcome::Failed,
                }
            })
            .collect();
        let mut row =
            SweepRow { value: v, mean_rate: 0.0, rate_sd: 0.0, mean_outage: None, n_ok: 0, n_zero: 0, n_fail: 0 };
        let (mut rate_sum, mut rate_sq, mut out_sum, mut n_out) = (0.0, 0.0, 0.0, 0usize);
        for o in outcomes {
            match o {
                InstanceOutcome::Failed => row.n_fail += 1,
                InstanceOutcome::Rate(r, out) => {
                    row.n_ok += 1;
                    row.n_zero += (r == 0.0) as usize;
                    rate_sum += r;
                    rate_sq += r * r;
                    if let Some(p) = out {
                        out_sum += p;
                        n_out += 1;
                    }
                }
            }
        }
        if row.n_ok > 0 {
            let k = row.n_ok as f64;
            row.mean_rate = rate_sum / k;
            if row.n_ok > 1 {
                row.rate_sd = ((rate_sq - k * row.mean_rate * row.mean_rate) / (k - 1.0)).max(0.0).sqrt();
            }
        }
        if n_out > 0 {
            row.mean_outage = Some(out_sum / n_out as f64);
        }
        rows.push(row);
    }
    Ok(SweepTable { axis: exp.axis, rows })
}

/// Which beamformer a CDF experiment evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Robust,
    NonRobust,
}

pub fn design(
    which: Design,
    cfg: &SystemConfig,
    spec: &ScenarioSpec,
    rate: f64,
    opts: &PowerMinOptions,
) -> Result<BeamformerSolution, SolveError> {
    match which {
        Design::Robust => solve_powermin(cfg, spec, rate, opts),
        Design::NonRobust => nonrobust_baseline(cfg, spec, rate, opts),
    }
}

/// Fixed-rate designs on random channel instances, each checked against
/// fresh CSI-error draws.
#[derive(Debug, Clone)]
pub struct CdfExperiment {
    pub cfg: SystemConfig,
    pub scenario: RandomScenario,
    pub rate: f64,
    /// Instances to attempt.
    pub instances: usize,
    /// Stop once this many instances are kept (lowest indices first).
    pub max_kept: Option<usize>,
    pub draws: usize,
    pub designs: Vec<Design>,
    pub solver: PowerMinOptions,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdfInstance {
    pub index: u64,
    /// One report per entry of `designs`.
    pub reports: Vec<OutageReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdfReport {
    /// Instances examined, up to and including the last kept one.
    pub attempted: usize,
    /// Instances dropped after a numerical solver failure.
    pub failed: usize,
    /// Instances where every requested design exists.
    pub instances: Vec<CdfInstance>,
}

impl CdfReport {
    /// Rate samples of design `d` pooled over all kept instances.
    pub fn pooled(&self, d: usize) -> Vec<f64> {
        self.instances.iter().flat_map(|i| i.reports[d].rate_samples.iter().copied()).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempted == 0 {
            return 0.0;
        }
        self.instances.len() as f64 / self.attempted as f64
    }
}

enum Attempt {
    Kept(CdfInstance),
    Skipped,
    Failed,
}

impl CdfExperiment {
    /// Keeps the instances where all designs are found; infeasible instances
    /// are skipped and counted in `attempted`, solver breakdowns in `failed`.
    pub fn run(&self) -> Result<CdfReport, MonteCarloError> {
        if self.draws < MIN_OUTAGE_SAMPLES {
            return Err(MonteCarloError::TooFewSamples(self.draws));
        }
        let want = self.max_kept.unwrap_or(usize::MAX);
        let mut report = CdfReport { attempted: 0, failed: 0, instances: Vec::new() };
        let mut next = 0u64;
        while next < self.instances as u64 && report.instances.len() < want {
            let end = (next + CDF_CHUNK).min(self.instances as u64);
            let chunk: Vec<Attempt> = (next..end).into_par_iter().map(|i| self.attempt(i)).collect::<Result<_, _>>()?;
            for (i, a) in (next..end).zip(chunk) {
                if report.instances.len() == want {
                    break;
                }
                report.attempted = i as usize + 1;
                match a {
                    Attempt::Kept(c) => report.instances.push(c),
                    Attempt::Skipped => {}
                    Attempt::Failed => report.failed += 1,
                }
            }
            next = end;
        }
        Ok(report)
    }

    fn attempt(&self, i: u64) -> Result<Attempt, MonteCarloError> {
        let (n, k) = (self.cfg.n_tx, self.cfg.n_eves);
        let spec = self.scenario.draw(n, k, &mut substream(self.seed, &[CDF_KEY], i));
        let mut sols = Vec::with_capacity(self.designs.len());
        for &d in &self.designs {
            match design(d, &self.cfg, &spec, self.rate, &self.solver) {
                Ok(s) => sols.push(s),
                Err(
                    SolveError::Infeasible
                    | SolveError::RestrictionUnrecoverable
                    | SolveError::RandomizationFailed
                    | SolveError::RankViolation(_),
                ) => return Ok(Attempt::Skipped),
                Err(SolveError::Numerical(_)) => return Ok(Attempt::Failed),
                Err(e) => return Err(e.into()),
            }
        }
        // every design faces the same error draws
        let seed = substream(self.seed, &[CDF_KEY, 1], i).next_u64();
        let reports = sols
            .iter()
            .map(|sol| empirical_outage(&sol.w, &self.cfg, &spec, self.rate, self.draws, seed))
            .collect::<Result<_, _>>()?;
        Ok(Attempt::Kept(CdfInstance { index: i, reports }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{c, unit, HMatrix};
    use crate::scenario1::analytic_outage;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(h: CVector, g: Vec<CVector>) -> ChannelRealization {
        ChannelRealization { h, g }
    }

    #[test]
    fn secrecy_rate_examples() {
        let cfg = SystemConfig::uniform(2, 1, 1.0, 1.0, 0.1);
        let w = unit(2, 0);
        assert_eq!(secrecy_rate(&w, &real(unit(2, 0), vec![unit(2, 1)]), &cfg), 1.0);
        assert_eq!(secrecy_rate(&w, &real(unit(2, 0), vec![unit(2, 0)]), &cfg), 0.0);
        let w = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 2.0)]);
        let h = CVector::from_vec(vec![c(1.0, 1.0), c(0.5, 0.0)]);
        let g = CVector::from_vec(vec![c(2.0, 0.0), c(0.0, -1.0)]);
        let hw = h.dotc(&w).norm_sqr();
        assert_eq!(secrecy_rate(&w, &real(h, vec![g]), &cfg), (1.0 + hw).log2());
    }

    #[test]
    fn deterministic_spec_has_zero_or_one_outage() {
        let cfg = SystemConfig::uniform(2, 1, 1.0, 1.0, 0.1);
        let spec = ScenarioSpec::ImperfectEcsi {
            h: unit(2, 0),
            g_hat: vec![unit(2, 1)],
            eve_err_covs: vec![HMatrix::zeros(2)],
        };
        let w = unit(2, 0);
        let lo = empirical_outage(&w, &cfg, &spec, 0.5, 1000, 1).unwrap();
        let hi = empirical_outage(&w, &cfg, &spec, 1.5, 1000, 1).unwrap();
        assert_eq!((lo.outage, hi.outage), (0.0, 1.0));
        assert_eq!((lo.per_eve_outage[0], hi.per_eve_outage[0]), (0.0, 1.0));
        assert_eq!(lo.ci_halfwidth[0], 0.0);
    }

    #[test]
    fn report_is_seed_deterministic() {
        let cfg = SystemConfig::uniform(3, 2, 1.0, 10.0, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = RandomScenario { kind: ScenarioKind::ImperfectBoth, eps_b: 0.05, eps_e: 0.2 }.draw(3, 2, &mut rng);
        let w = crate::channel::standard_cn(3, &mut rng);
        let a = empirical_outage(&w, &cfg, &spec, 1.0, 2000, 9).unwrap();
        let b = empirical_outage(&w, &cfg, &spec, 1.0, 2000, 9).unwrap();
        assert_eq!(a, b);
        let c = empirical_outage(&w, &cfg, &spec, 1.0, 2000, 10).unwrap();
        assert_ne!(a.rate_samples, c.rate_samples);
    }

    #[test]
    fn rejects_small_sample_counts() {
        let cfg = SystemConfig::uniform(2, 1, 1.0, 1.0, 0.1);
        let spec = ScenarioSpec::StatisticalEcsi { h: unit(2, 0), eve_covs: vec![HMatrix::identity(2)] };
        assert_eq!(empirical_outage(&unit(2, 0), &cfg, &spec, 1.0, 999, 0), Err(MonteCarloError::TooFewSamples(999)));
    }

    #[test]
    fn analytic_outage_matches_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..4 {
            let cfg = SystemConfig::uniform(3, 2, 1.0, 10.0, 0.1);
            let spec =
                RandomScenario { kind: ScenarioKind::StatisticalEcsi, eps_b: 0.0, eps_e: 0.3 }.draw(3, 2, &mut rng);
            let w = crate::channel::standard_cn(3, &mut rng);
            let exact = analytic_outage(&w, &cfg, &spec, 1.0);
            let rep = empirical_outage(&w, &cfg, &spec, 1.0, 20_000, i).unwrap();
            for (emp, ex) in rep.per_eve_outage.iter().zip(&exact) {
                let ci = binomial_ci(*ex, 20_000).max(1e-3);
                assert!((emp - ex).abs() <= ci, "{emp} vs {ex}");
            }
        }
    }

    #[test]
    fn baseline_rejects_statistical_scenario() {
        let cfg = SystemConfig::uniform(2, 1, 1.0, 1.0, 0.1);
        let spec = ScenarioSpec::StatisticalEcsi { h: unit(2, 0), eve_covs: vec![HMatrix::identity(2)] };
        assert!(matches!(nonrobust_baseline(&cfg, &spec, 1.0, &Default::default()), Err(SolveError::WrongVariant)));
    }

    #[test]
    fn baseline_meets_nominal_rate_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = SystemConfig::uniform(4, 2, 1.0, 100.0, 0.05);
        let spec = RandomScenario { kind: ScenarioKind::ImperfectEcsi, eps_b: 0.0, eps_e: 0.2 }.draw(4, 2, &mut rng);
        let sol = nonrobust_baseline(&cfg, &spec, 2.0, &Default::default()).unwrap();
        let nominal = real(spec.h_nominal().clone(), spec.g_nominal());
        assert!(secrecy_rate(&sol.w, &nominal, &cfg) >= 2.0 - 1e-6);
    }

    #[test]
    fn cdf_helpers() {
        assert_eq!(fraction_below(&[0.5, 1.0, 2.0, 3.0], 1.0), 0.25);
        assert_eq!(fraction_below(&[], 1.0), 0.0);
        let cdf = empirical_cdf(&[3.0, 1.0, 2.0]);
        assert_eq!(cdf, vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
    }

    #[test]
    fn cdf_experiment_keeps_lowest_feasible_indices() {
        let mut exp = CdfExperiment {
            cfg: SystemConfig::uniform(4, 1, 1.0, 100.0, 0.05),
            scenario: RandomScenario { kind: ScenarioKind::ImperfectEcsi, eps_b: 0.0, eps_e: 0.1 },
            rate: 1.0,
            instances: 40,
            max_kept: None,
            draws: 1000,
            designs: vec![Design::Robust, Design::NonRobust],
            solver: PowerMinOptions::default(),
            seed: 3,
        };
        let all = exp.run().unwrap();
        assert_eq!(all.attempted, 40);
        assert!(all.instances.len() >= 3);
        exp.max_kept = Some(2);
        let two = exp.run().unwrap();
        assert_eq!(two.instances.len(), 2);
        assert_eq!(two.attempted as u64, all.instances[1].index + 1);
        assert_eq!(two.instances[1].reports, all.instances[1].reports);
        for inst in &all.instances {
            assert!(inst.reports[0].max_per_eve() <= 0.05 + inst.reports[0].ci_halfwidth[0] + 0.01);
        }
    }

    fn small_sweep(axis: SweepAxis, grid: Vec<f64>) -> SweepConfig {
        SweepConfig {
            kind: ScenarioKind::StatisticalEcsi,
            n_tx: 3,
            n_eves: 1,
            noise: 1.0,
            power: 10.0,
            outage: 0.1,
            eps_b: 0.0,
            eps_e: 0.2,
            axis,
            grid,
            instances: 6,
            outage_samples: 1000,
            rate: RateOptions::default(),
            solver: PowerMinOptions::default(),
            seed: 11,
        }
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        assert_eq!(run_sweep(&small_sweep(SweepAxis::Power, vec![1.0, 1.0])), Err(MonteCarloError::BadGrid));
        assert_eq!(run_sweep(&small_sweep(SweepAxis::Power, vec![2.0, 1.0])), Err(MonteCarloError::BadGrid));
    }

    #[test]
    fn sweep_power_axis_is_monotone_on_common_channels() {
        let t = run_sweep(&small_sweep(SweepAxis::Power, vec![1.0, 10.0, 100.0])).unwrap();
        assert_eq!(t.rows.len(), 3);
        for p in t.rows.windows(2) {
            assert!(p[1].mean_rate >= p[0].mean_rate - 1e-3);
        }
        assert!(t.rows.iter().all(|r| r.n_ok + r.n_fail == 6));
    }

    #[test]
    fn single_point_sweep_is_a_batch_run() {
        let exp = small_sweep(SweepAxis::EpsE, vec![0.2]);
        let t = run_sweep(&exp).unwrap();
        let (cfg, rs) = exp.point(0.2).unwrap();
        let mut sum = 0.0;
        for i in 0..6 {
            let spec = rs.draw(3, 1, &mut substream(11, &[SWEEP_KEY], i));
            sum +=
                max_secrecy_rate(&cfg, &spec, &RateOptions::default(), &PowerMinOptions::default()).unwrap().rate_opt;
        }
        assert!((t.rows[0].mean_rate - sum / 6.0).abs() < 1e-12);
    }
}
