//! Command-line front end: JSON run configuration, task dispatch and CSV/JSON
//! output.
//!
//! Powers are given in dB in the configuration and converted here; every
//! library routine works in linear units.

use crate::beamformer::{BeamformerSolution, PowerMinOptions, SolveError};
use crate::channel::{substream, RandomScenario, ScenarioKind, ScenarioSpec, SystemConfig};
use crate::conic::SolverOptions;
use crate::hermitian::{CVector, HMatrix};
use crate::montecarlo::{empirical_outage, run_sweep, OutageReport, SweepAxis, SweepConfig, SweepTable};
use crate::rate::{max_secrecy_rate, solve_powermin, RateOptions};
use crate::selftest::{run_all, Scale};
use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

const DEFAULT_VERIFY_SAMPLES: usize = crate::montecarlo::VERIFY_SAMPLES;
const RANDOM_SCENARIO_KEY: u64 = 0xC0F1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    MonteCarlo(#[from] crate::montecarlo::MonteCarloError),
}

#[derive(Debug, Parser)]
#[command(name = "secbeam", version, about = "Outage-constrained secure beamforming designer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root of every random stream of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo draws per outage estimate.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Bisection tolerance on the secrecy rate (bits/s/Hz).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for Monte Carlo and sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Minimum-power beamformer for the configured target rate.
    Powermin,
    /// Largest secrecy rate attainable within the power budget.
    Maxrate,
    /// Monte Carlo outage of a given or freshly designed beamformer.
    Verify,
    /// Mean secrecy rate along one parameter axis.
    Sweep,
    /// Reduced acceptance suite.
    Selftest,
}

/// One number or one per Eve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEve {
    Common(f64),
    Each(Vec<f64>),
}

impl PerEve {
    fn expand(&self, k: usize, what: &str) -> Result<Vec<f64>, CliError> {
        match self {
            PerEve::Common(v) => Ok(vec![*v; k]),
            PerEve::Each(v) if v.len() == k => Ok(v.clone()),
            PerEve::Each(v) => Err(CliError::Config(format!("{what} has {} entries for {k} eavesdroppers", v.len()))),
        }
    }

    fn common(&self) -> Option<f64> {
        match self {
            PerEve::Common(v) => Some(*v),
            PerEve::Each(v) => v.first().copied().filter(|f| v.iter().all(|x| x == f)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub n_tx: usize,
    pub n_eves: usize,
    #[serde(default = "unit_noise")]
    pub noise_bob: f64,
    #[serde(default = "unit_noise_eves")]
    pub noise_eves: PerEve,
    #[serde(rename = "power_dB")]
    pub power_db: f64,
    pub outage: PerEve,
}

fn unit_noise() -> f64 {
    1.0
}

fn unit_noise_eves() -> PerEve {
    PerEve::Common(1.0)
}

/// Complex vector or matrix stored as interleaved real and imaginary parts;
/// matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interleaved {
    pub layout: String,
    pub data: Vec<f64>,
}

pub const LAYOUT: &str = "interleaved_re_im";

impl Interleaved {
    pub fn from_vector(v: &CVector) -> Self {
        Self { layout: LAYOUT.into(), data: v.iter().flat_map(|z| [z.re, z.im]).collect() }
    }

    fn complex(&self, what: &str) -> Result<Vec<Complex64>, CliError> {
        if self.layout != LAYOUT {
            return Err(CliError::Config(format!("{what}: unsupported layout {:?}", self.layout)));
        }
        if !self.data.len().is_multiple_of(2) {
            return Err(CliError::Config(format!("{what}: odd number of interleaved entries")));
        }
        Ok(self.data.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    pub fn to_vector(&self, n: usize, what: &str) -> Result<CVector, CliError> {
        let z = self.complex(what)?;
        if z.len() != n {
            return Err(CliError::Config(format!("{what}: expected {n} entries, got {}", z.len())));
        }
        Ok(CVector::from_vec(z))
    }

    /// Hermitian matrix; the input is symmetrized, so it must already be
    /// Hermitian up to rounding.
    pub fn to_hermitian(&self, n: usize, what: &str) -> Result<HMatrix, CliError> {
        let z = self.complex(what)?;
        if z.len() != n * n {
            return Err(CliError::Config(format!("{what}: expected {n}x{n} entries, got {}", z.len())));
        }
        let m = DMatrix::from_row_slice(n, n, &z);
        HMatrix::new(m).map_err(|e| CliError::Config(format!("{what}: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBlock {
    #[serde(default)]
    pub eps_b: f64,
    pub eps_e: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub variant: ScenarioKind,
    /// Draw the channels from the built-in instance generator instead.
    #[serde(default)]
    pub random: Option<RandomBlock>,
    /// Bob's channel (exact or estimated).
    #[serde(default)]
    pub h: Option<Interleaved>,
    #[serde(default)]
    pub bob_err_cov: Option<Interleaved>,
    /// Eve channel estimates.
    #[serde(default)]
    pub g_hat: Vec<Interleaved>,
    /// Eve channel covariances or error covariances.
    #[serde(default)]
    pub eve_covs: Vec<Interleaved>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// `power_dB`, `eps_b`, `eps_e` or `p_out`.
    pub axis: String,
    pub grid: Vec<f64>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_sweep_samples")]
    pub outage_samples: usize,
}

fn default_instances() -> usize {
    crate::montecarlo::SWEEP_INSTANCES
}

fn default_sweep_samples() -> usize {
    crate::montecarlo::SWEEP_OUTAGE_SAMPLES
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskBlock {
    /// Target secrecy rate for `powermin` and `verify`.
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Beamformer to verify; designed on the fly when absent.
    #[serde(default)]
    pub beamformer: Option<Interleaved>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub feas_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub rate_tol: Option<f64>,
    pub randomizations: Option<usize>,
    #[serde(default)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub system: SystemBlock,
    pub scenario: ScenarioBlock,
    #[serde(default)]
    pub task: TaskBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(s)?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn system(&self) -> Result<SystemConfig, CliError> {
        let s = &self.system;
        let cfg = SystemConfig {
            n_tx: s.n_tx,
            noise_bob: s.noise_bob,
            noise_eves: s.noise_eves.expand(s.n_eves, "noise_eves")?,
            power_budget: db_to_linear(s.power_db),
            outage_probs: s.outage.expand(s.n_eves, "outage")?,
            n_eves: s.n_eves,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Explicit channels, or a random instance drawn from `seed`.
    pub fn scenario(&self, seed: u64) -> Result<ScenarioSpec, CliError> {
        let (n, k) = (self.system.n_tx, self.system.n_eves);
        let sc = &self.scenario;
        if let Some(r) = &sc.random {
            let rs = RandomScenario { kind: sc.variant, eps_b: r.eps_b, eps_e: r.eps_e };
            return Ok(rs.draw(n, k, &mut substream(seed, &[RANDOM_SCENARIO_KEY], 0)));
        }
        let h = sc.h.as_ref().ok_or_else(|| CliError::Config("scenario.h is required".into()))?.to_vector(n, "h")?;
        if sc.eve_covs.len() != k {
            return Err(CliError::Config(format!("eve_covs has {} entries for {k} eavesdroppers", sc.eve_covs.len())));
        }
        let covs = sc
            .eve_covs
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_hermitian(n, &format!("eve_covs[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let g_hat = || -> Result<Vec<CVector>, CliError> {
            if sc.g_hat.len() != k {
                return Err(CliError::Config(format!("g_hat has {} entries for {k} eavesdroppers", sc.g_hat.len())));
            }
            sc.g_hat.iter().enumerate().map(|(i, g)| g.to_vector(n, &format!("g_hat[{i}]"))).collect()
        };
        Ok(match sc.variant {
            ScenarioKind::StatisticalEcsi => ScenarioSpec::StatisticalEcsi { h, eve_covs: covs },
            ScenarioKind::ImperfectEcsi => ScenarioSpec::ImperfectEcsi { h, g_hat: g_hat()?, eve_err_covs: covs },
            ScenarioKind::ImperfectBoth => {
                let eb = sc
                    .bob_err_cov
                    .as_ref()
                    .ok_or_else(|| CliError::Config("scenario.bob_err_cov is required".into()))?
                    .to_hermitian(n, "bob_err_cov")?;
                ScenarioSpec::ImperfectBoth { h_hat: h, bob_err_cov: eb, g_hat: g_hat()?, eve_err_covs: covs }
            }
        })
    }

    pub fn powermin_options(&self, seed: u64) -> PowerMinOptions {
        let mut conic = SolverOptions::default();
        if let Some(v) = self.solver.feas_tol {
            conic.feas_tol = v;
        }
        if let Some(v) = self.solver.gap_tol {
            conic.gap_tol = v;
        }
        if let Some(v) = self.solver.max_iter {
            conic.max_iter = v;
        }
        conic.verbose = self.solver.verbose;
        let mut opts = PowerMinOptions { conic, seed, ..PowerMinOptions::default() };
        if let Some(r) = self.solver.randomizations {
            opts.randomizations = r;
        }
        opts
    }

    pub fn rate_options(&self, tol: Option<f64>) -> RateOptions {
        let mut r = RateOptions::default();
        if let Some(t) = tol.or(self.solver.rate_tol) {
            r.tol = t;
        }
        r
    }

    /// Sweep over the random instance family of the scenario block.
    pub fn sweep(&self, seed: u64, samples: Option<usize>, tol: Option<f64>) -> Result<SweepConfig, CliError> {
        let sw = self.task.sweep.as_ref().ok_or_else(|| CliError::Config("task.sweep is required".into()))?;
        let r = self
            .scenario
            .random
            .as_ref()
            .ok_or_else(|| CliError::Config("sweeps need a random scenario block".into()))?;
        let uniform = |p: &PerEve, what: &str| {
            p.common().ok_or_else(|| CliError::Config(format!("sweeps need a common {what} for all eavesdroppers")))
        };
        let noise = uniform(&self.system.noise_eves, "noise")?;
        if noise != self.system.noise_bob {
            return Err(CliError::Config("sweeps need equal noise at Bob and the eavesdroppers".into()));
        }
        let (axis, grid) = match sw.axis.as_str() {
            "power_dB" => (SweepAxis::Power, sw.grid.iter().map(|&d| db_to_linear(d)).collect()),
            "eps_b" => (SweepAxis::EpsB, sw.grid.clone()),
            "eps_e" => (SweepAxis::EpsE, sw.grid.clone()),
            "p_out" => (SweepAxis::Outage, sw.grid.clone()),
            other => return Err(CliError::Config(format!("unknown sweep axis {other:?}"))),
        };
        Ok(SweepConfig {
            kind: self.scenario.variant,
            n_tx: self.system.n_tx,
            n_eves: self.system.n_eves,
            noise,
            power: db_to_linear(self.system.power_db),
            outage: uniform(&self.system.outage, "outage")?,
            eps_b: r.eps_b,
            eps_e: r.eps_e,
            axis,
            grid,
            instances: sw.instances,
            outage_samples: samples.unwrap_or(sw.outage_samples),
            rate: self.rate_options(tol),
            solver: self.powermin_options(seed),
            seed,
        })
    }
}

/// Shortest decimal that round-trips the value rounded to 12 significant
/// digits.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Header plus one row per grid point; the first column holds the axis value
/// (in dB for power).
pub fn write_sweep_csv<W: Write>(table: &SweepTable, out: W) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    let axis = match table.axis {
        SweepAxis::Power => "power_dB",
        other => other.name(),
    };
    w.write_record([axis, "mean_rate", "mean_outage", "n_fail", "rate_sd", "n_zero", "n_ok"])?;
    for r in &table.rows {
        let v = if table.axis == SweepAxis::Power { linear_to_db(r.value) } else { r.value };
        w.write_record([
            fmt12(v),
            fmt12(r.mean_rate),
            fmt_opt(r.mean_outage),
            r.n_fail.to_string(),
            fmt12(r.rate_sd),
            r.n_zero.to_string(),
            r.n_ok.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per Eve plus an `all` row for the worst-Eve secrecy outage.
pub fn write_outage_csv<W: Write>(rep: &OutageReport, rate: f64, out: W) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(["eve", "rate", "outage", "ci_halfwidth", "n_samples"])?;
    let n = rep.n_samples.to_string();
    for (k, (p, ci)) in rep.per_eve_outage.iter().zip(&rep.ci_halfwidth).enumerate() {
        w.write_record([k.to_string(), fmt12(rate), fmt12(*p), fmt12(*ci), n.clone()])?;
    }
    w.write_record(["all".to_string(), fmt12(rate), fmt12(rep.outage), fmt12(rep.outage_ci), n])?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct DesignOutput {
    power: f64,
    #[serde(rename = "power_dB")]
    power_db: f64,
    w: Interleaved,
    status: crate::beamformer::SolveStatus,
    recovery: crate::beamformer::Recovery,
    rank_ratio: Option<f64>,
    sdp_power: Option<f64>,
    margins: Vec<f64>,
}

impl From<&BeamformerSolution> for DesignOutput {
    fn from(s: &BeamformerSolution) -> Self {
        Self {
            power: s.power,
            power_db: linear_to_db(s.power),
            w: Interleaved::from_vector(&s.w),
            status: s.status,
            recovery: s.recovery,
            rank_ratio: s.rank_ratio,
            sdp_power: s.sdp_power,
            margins: s.margins.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct PowerminOutput {
    rate: f64,
    feasible: bool,
    #[serde(flatten)]
    design: Option<DesignOutput>,
}

#[derive(Debug, Serialize)]
struct MaxrateOutput {
    rate_opt: f64,
    iterations: usize,
    bracket_width: f64,
    #[serde(flatten)]
    design: DesignOutput,
}

struct Sink(Option<PathBuf>);

impl Sink {
    fn write(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.0 {
            Some(p) => std::fs::write(p, bytes)?,
            None => std::io::stdout().write_all(bytes)?,
        }
        Ok(())
    }

    fn json<T: Serialize>(&self, v: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.write(s.as_bytes())
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    if cli.command == Command::Selftest {
        let results = run_all(Scale::Fast, |r| println!("{r}"));
        let failed = results.iter().filter(|r| !r.passed).count();
        println!("{} of {} criteria passed", results.len() - failed, results.len());
        return Ok(if failed == 0 { EXIT_OK } else { EXIT_ERROR });
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let rc = RunConfig::load(path)?;
    let seed = cli.seed.or(rc.seed).unwrap_or(0);
    let sink = Sink(cli.out.clone().or_else(|| rc.output.path.clone()));
    let opts = rc.powermin_options(seed);
    match cli.command {
        Command::Powermin => {
            let (cfg, spec) = (rc.system()?, rc.scenario(seed)?);
            let rate = rc.task.rate.ok_or_else(|| CliError::Config("task.rate is required".into()))?;
            match solve_powermin(&cfg, &spec, rate, &opts) {
                Ok(sol) => {
                    sink.json(&PowerminOutput { rate, feasible: true, design: Some((&sol).into()) })?;
                    Ok(EXIT_OK)
                }
                Err(SolveError::Infeasible) => {
                    sink.json(&PowerminOutput { rate, feasible: false, design: None })?;
                    Ok(EXIT_INFEASIBLE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Maxrate => {
            let (cfg, spec) = (rc.system()?, rc.scenario(seed)?);
            let res = max_secrecy_rate(&cfg, &spec, &rc.rate_options(cli.tol), &opts)?;
            sink.json(&MaxrateOutput {
                rate_opt: res.rate_opt,
                iterations: res.iterations,
                bracket_width: res.bracket_width,
                design: (&res.solution).into(),
            })?;
            Ok(if res.rate_opt > 0.0 { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Verify => {
            let (cfg, spec) = (rc.system()?, rc.scenario(seed)?);
            let samples = cli.samples.or(rc.task.samples).unwrap_or(DEFAULT_VERIFY_SAMPLES);
            let (w, rate) = match (&rc.task.beamformer, rc.task.rate) {
                (Some(b), Some(rate)) => (b.to_vector(cfg.n_tx, "task.beamformer")?, rate),
                (Some(_), None) => return Err(CliError::Config("task.rate is required with a beamformer".into())),
                (None, Some(rate)) => match solve_powermin(&cfg, &spec, rate, &opts) {
                    Ok(sol) => (sol.w, rate),
                    Err(SolveError::Infeasible) => {
                        eprintln!("no beamformer attains rate {rate}");
                        return Ok(EXIT_INFEASIBLE);
                    }
                    Err(e) => return Err(e.into()),
                },
                (None, None) => {
                    let res = max_secrecy_rate(&cfg, &spec, &rc.rate_options(cli.tol), &opts)?;
                    if res.rate_opt <= 0.0 {
                        eprintln!("no positive secrecy rate is attainable");
                        return Ok(EXIT_INFEASIBLE);
                    }
                    (res.solution.w, res.rate_opt)
                }
            };
            let rep = empirical_outage(&w, &cfg, &spec, rate, samples, seed)?;
            let mut buf = Vec::new();
            write_outage_csv(&rep, rate, &mut buf)?;
            sink.write(&buf)?;
            Ok(EXIT_OK)
        }
        Command::Sweep => {
            let table = run_sweep(&rc.sweep(seed, cli.samples, cli.tol)?)?;
            let mut buf = Vec::new();
            write_sweep_csv(&table, &mut buf)?;
            sink.write(&buf)?;
            Ok(EXIT_OK)
        }
        Command::Selftest => unreachable!("handled above"),
    }
}

/// Parses `argv` (program name first), runs the task and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return EXIT_ERROR;
        }
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::SweepRow;

    #[test]
    fn fmt12_keeps_twelve_significant_digits() {
        assert_eq!(fmt12(0.1), "0.1");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(123456.78901234567), "123456.789012");
        assert_eq!(fmt12(-2.5e-9), "-0.0000000025");
        let x = std::f64::consts::PI * 1e7;
        let back: f64 = fmt12(x).parse().unwrap();
        assert!((back - x).abs() <= 5e-12 * x.abs());
    }

    #[test]
    fn db_conversion_round_trips() {
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(-3.7)) + 3.7).abs() < 1e-12);
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut buf = Vec::new();
        write_sweep_csv(&SweepTable { axis: SweepAxis::Power, rows: vec![] }, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "power_dB,mean_rate,mean_outage,n_fail,rate_sd,n_zero,n_ok\n");
    }

    #[test]
    fn missing_outage_is_an_empty_field() {
        let row =
            SweepRow { value: 0.1, mean_rate: 1.5, rate_sd: 0.25, mean_outage: None, n_ok: 3, n_zero: 1, n_fail: 0 };
        let mut buf = Vec::new();
        write_sweep_csv(&SweepTable { axis: SweepAxis::EpsE, rows: vec![row] }, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("\n0.1,1.5,,0,0.25,1,3\n"));
    }

    #[test]
    fn interleaved_rejects_bad_shapes() {
        let v = Interleaved { layout: LAYOUT.into(), data: vec![1.0, 0.0, 0.0] };
        assert!(v.to_vector(2, "v").is_err());
        let v = Interleaved { layout: "row_major".into(), data: vec![1.0, 0.0] };
        assert!(v.to_vector(1, "v").is_err());
        let m = Interleaved { layout: LAYOUT.into(), data: vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0] };
        assert!(m.to_hermitian(2, "m").is_err(), "non-Hermitian input must be rejected");
    }

    #[test]
    fn schema_version_is_enforced() {
        let doc = r#"{"schema": 2, "system": {"n_tx": 2, "n_eves": 1, "power_dB": 20, "outage": 0.1},
                      "scenario": {"variant": "statistical_ecsi", "random": {"eps_e": 0.2}}}"#;
        assert!(matches!(RunConfig::from_json(doc), Err(CliError::Config(_))));
    }

    #[test]
    fn per_eve_lists_must_match_eve_count() {
        let doc = r#"{"schema": 1, "system": {"n_tx": 2, "n_eves": 2, "power_dB": 20, "outage": [0.1]},
                      "scenario": {"variant": "statistical_ecsi", "random": {"eps_e": 0.2}}}"#;
        let rc = RunConfig::from_json(doc).unwrap();
        assert!(rc.system().is_err());
    }
}
