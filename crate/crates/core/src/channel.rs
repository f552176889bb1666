//! System configuration, CSI-uncertainty scenarios and channel sampling.

use crate::hermitian::{clip_psd, psd_sqrt, CVector, HMatrix, LinalgError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("covariance is not PSD (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("outage probability {0} outside (0, 1]")]
    BadProbability(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

impl From<LinalgError> for ChannelError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NotPsd(l) => ChannelError::NotPsd(l),
            other => ChannelError::BadParameter(other.to_string()),
        }
    }
}

/// Linear-scale system parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_tx: usize,
    /// Noise variance at Bob.
    pub noise_bob: f64,
    /// Noise variance at each Eve.
    pub noise_eves: Vec<f64>,
    /// Transmit power budget (linear).
    pub power_budget: f64,
    /// Per-Eve allowed outage probability.
    pub outage_probs: Vec<f64>,
    pub n_eves: usize,
}

impl SystemConfig {
    /// Common noise `noise` everywhere and a common outage budget.
    pub fn uniform(n_tx: usize, n_eves: usize, noise: f64, power_budget: f64, outage: f64) -> Self {
        Self {
            n_tx,
            noise_bob: noise,
            noise_eves: vec![noise; n_eves],
            power_budget,
            outage_probs: vec![outage; n_eves],
            n_eves,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_tx == 0 || self.n_eves == 0 {
            return Err(ChannelError::BadParameter("n_tx and n_eves must be at least 1".into()));
        }
        if self.noise_eves.len() != self.n_eves || self.outage_probs.len() != self.n_eves {
            return Err(ChannelError::DimensionMismatch(format!(
                "n_eves={} but {} noise entries and {} outage entries",
                self.n_eves,
                self.noise_eves.len(),
                self.outage_probs.len()
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.noise_bob) || !self.noise_eves.iter().all(|&v| positive(v)) {
            return Err(ChannelError::BadParameter("noise variances must be positive".into()));
        }
        if !positive(self.power_budget) {
            return Err(ChannelError::BadParameter("power budget must be positive".into()));
        }
        if let Some(&p) = self.outage_probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(ChannelError::BadProbability(p));
        }
        Ok(())
    }
}

/// The three CSI-uncertainty models.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    /// Exact `h`; each `g_k ~ CN(0, G_k)`.
    StatisticalEcsi { h: CVector, eve_covs: Vec<HMatrix> },
    /// Exact `h`; `g_k = g_hat_k + e_k`, `e_k ~ CN(0, E_k)`.
    ImperfectEcsi { h: CVector, g_hat: Vec<CVector>, eve_err_covs: Vec<HMatrix> },
    /// `h = h_hat + e_b`, `e_b ~ CN(0, E_b)`; Eves as in `ImperfectEcsi`.
    ImperfectBoth { h_hat: CVector, bob_err_cov: HMatrix, g_hat: Vec<CVector>, eve_err_covs: Vec<HMatrix> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    StatisticalEcsi,
    ImperfectEcsi,
    ImperfectBoth,
}

impl ScenarioSpec {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioSpec::StatisticalEcsi { .. } => ScenarioKind::StatisticalEcsi,
            ScenarioSpec::ImperfectEcsi { .. } => ScenarioKind::ImperfectEcsi,
            ScenarioSpec::ImperfectBoth { .. } => ScenarioKind::ImperfectBoth,
        }
    }

    /// Bob's channel as known to the transmitter (exact or estimated).
    pub fn h_nominal(&self) -> &CVector {
        match self {
            ScenarioSpec::StatisticalEcsi { h, .. } | ScenarioSpec::ImperfectEcsi { h, .. } => h,
            ScenarioSpec::ImperfectBoth { h_hat, .. } => h_hat,
        }
    }

    pub fn n_eves(&self) -> usize {
        match self {
            ScenarioSpec::StatisticalEcsi { eve_covs, .. } => eve_covs.len(),
            ScenarioSpec::ImperfectEcsi { eve_err_covs, .. } | ScenarioSpec::ImperfectBoth { eve_err_covs, .. } => {
                eve_err_covs.len()
            }
        }
    }

    /// Per-Eve covariance: `G_k` for statistical ECSI, `E_k` otherwise.
    pub fn eve_covs(&self) -> &[HMatrix] {
        match self {
            ScenarioSpec::StatisticalEcsi { eve_covs, .. } => eve_covs,
            ScenarioSpec::ImperfectEcsi { eve_err_covs, .. } | ScenarioSpec::ImperfectBoth { eve_err_covs, .. } => {
                eve_err_covs
            }
        }
    }

    /// Eve channel estimates (zero means for statistical ECSI).
    pub fn g_nominal(&self) -> Vec<CVector> {
        match self {
            ScenarioSpec::StatisticalEcsi { h, eve_covs } => {
                vec![CVector::zeros(h.len()); eve_covs.len()]
            }
            ScenarioSpec::ImperfectEcsi { g_hat, .. } | ScenarioSpec::ImperfectBoth { g_hat, .. } => g_hat.clone(),
        }
    }
}

/// Checks `spec` against `cfg` and returns a copy with every covariance
/// symmetrized and clipped to the PSD cone (eigenvalues in `[-1e-10, 0)`).
pub fn validate(cfg: &SystemConfig, spec: &ScenarioSpec) -> Result<ScenarioSpec, ChannelError> {
    cfg.validate()?;
    let n = cfg.n_tx;
    let vec_ok = |v: &CVector, what: &str| -> Result<(), ChannelError> {
        if v.len() != n {
            return Err(ChannelError::DimensionMismatch(format!("{what} has length {} but n_tx={n}", v.len())));
        }
        if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(ChannelError::BadParameter(format!("{what} is not finite")));
        }
        Ok(())
    };
    let cov_ok = |m: &HMatrix, what: &str| -> Result<HMatrix, ChannelError> {
        if m.n() != n {
            return Err(ChannelError::DimensionMismatch(format!("{what} is {}x{} but n_tx={n}", m.n(), m.n())));
        }
        Ok(clip_psd(m)?)
    };
    let covs_ok = |ms: &[HMatrix], what: &str| -> Result<Vec<HMatrix>, ChannelError> {
        if ms.len() != cfg.n_eves {
            return Err(ChannelError::DimensionMismatch(format!(
                "{} {what} entries for n_eves={}",
                ms.len(),
                cfg.n_eves
            )));
        }
        ms.iter().map(|m| cov_ok(m, what)).collect()
    };
    let ghat_ok = |gs: &[CVector]| -> Result<(), ChannelError> {
        if gs.len() != cfg.n_eves {
            return Err(ChannelError::DimensionMismatch(format!(
                "{} Eve estimates for n_eves={}",
                gs.len(),
                cfg.n_eves
            )));
        }
        gs.iter().try_for_each(|g| vec_ok(g, "Eve estimate"))
    };
    Ok(match spec {
        ScenarioSpec::StatisticalEcsi { h, eve_covs } => {
            vec_ok(h, "h")?;
            ScenarioSpec::StatisticalEcsi { h: h.clone(), eve_covs: covs_ok(eve_covs, "Eve covariance")? }
        }
        ScenarioSpec::ImperfectEcsi { h, g_hat, eve_err_covs } => {
            vec_ok(h, "h")?;
            ghat_ok(g_hat)?;
            ScenarioSpec::ImperfectEcsi {
                h: h.clone(),
                g_hat: g_hat.clone(),
                eve_err_covs: covs_ok(eve_err_covs, "Eve error covariance")?,
            }
        }
        ScenarioSpec::ImperfectBoth { h_hat, bob_err_cov, g_hat, eve_err_covs } => {
            vec_ok(h_hat, "h_hat")?;
            ghat_ok(g_hat)?;
            ScenarioSpec::ImperfectBoth {
                h_hat: h_hat.clone(),
                bob_err_cov: cov_ok(bob_err_cov, "Bob error covariance")?,
                g_hat: g_hat.clone(),
                eve_err_covs: covs_ok(eve_err_covs, "Eve error covariance")?,
            }
        }
    })
}

/// True channels for one Monte Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CVector,
    pub g: Vec<CVector>,
}

/// Vector of i.i.d. `CN(0, 1)` entries (real and imaginary parts `N(0, 1/2)`).
pub fn standard_cn<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

/// Draw from `CN(mean, cov)` as `mean + cov^{1/2} z`.
pub fn sample_cn<R: Rng + ?Sized>(mean: &CVector, cov: &HMatrix, rng: &mut R) -> Result<CVector, ChannelError> {
    Ok(CnSampler::new(mean.clone(), cov)?.draw(rng))
}

/// `CN(mean, cov)` with the square root factored once.
#[derive(Debug, Clone)]
pub struct CnSampler {
    mean: CVector,
    root: Option<HMatrix>,
}

impl CnSampler {
    pub fn new(mean: CVector, cov: &HMatrix) -> Result<Self, ChannelError> {
        if cov.n() != mean.len() {
            return Err(ChannelError::DimensionMismatch("mean and covariance sizes differ".into()));
        }
        let root = if cov.max_abs() == 0.0 { None } else { Some(psd_sqrt(cov)?) };
        Ok(Self { mean, root })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        match &self.root {
            None => self.mean.clone(),
            Some(r) => &self.mean + r.mul_vec(&standard_cn(self.mean.len(), rng)),
        }
    }
}

/// Precomputed samplers for repeated [`realize`] calls.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    bob: CnSampler,
    eves: Vec<CnSampler>,
}

impl ChannelSampler {
    pub fn new(spec: &ScenarioSpec) -> Result<Self, ChannelError> {
        let n = spec.h_nominal().len();
        let bob = match spec {
            ScenarioSpec::ImperfectBoth { h_hat, bob_err_cov, .. } => CnSampler::new(h_hat.clone(), bob_err_cov)?,
            _ => CnSampler::new(spec.h_nominal().clone(), &HMatrix::zeros(n))?,
        };
        let eves = spec
            .g_nominal()
            .into_iter()
            .zip(spec.eve_covs())
            .map(|(g, cov)| CnSampler::new(g, cov))
            .collect::<Result<_, _>>()?;
        Ok(Self { bob, eves })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let h = self.bob.draw(rng);
        let g = self.eves.iter().map(|s| s.draw(rng)).collect();
        ChannelRealization { h, g }
    }
}

/// One channel draw for a validated spec.
pub fn realize<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> ChannelRealization {
    ChannelSampler::new(spec).expect("realize requires a validated spec").draw(rng)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Counter-based RNG stream for draw `index` of the experiment identified by
/// `(seed, keys)`. Streams depend only on their coordinates, so parallel
/// evaluation order does not change any draw.
pub fn substream(seed: u64, keys: &[u64], index: u64) -> ChaCha8Rng {
    let mut k = splitmix(seed);
    for &key in keys {
        k = splitmix(k ^ splitmix(key.wrapping_add(0x2545_F491_4F6C_DD1D)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(k);
    rng.set_stream(index);
    rng
}

/// Anisotropic shape of Eve `k`'s channel covariance in the statistical-ECSI
/// experiments: `I`, `diag(2,1,...)`, `diag(1,1,1,1,0.5,1,...)`, repeating
/// for `k >= 3`, truncated or padded with ones to `n_tx`.
pub fn eve_shape(k: usize, n_tx: usize) -> HMatrix {
    let base: &[f64] = match k % 3 {
        0 => &[],
        1 => &[2.0],
        _ => &[1.0, 1.0, 1.0, 1.0, 0.5],
    };
    let d: Vec<f64> = (0..n_tx).map(|i| base.get(i).copied().unwrap_or(1.0)).collect();
    HMatrix::from_real_diag(&d)
}

/// Variance parameters of a randomly drawn experiment instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomScenario {
    pub kind: ScenarioKind,
    /// Bob error variance (imperfect-both only).
    pub eps_b: f64,
    /// Eve channel variance (statistical) or Eve error variance.
    pub eps_e: f64,
}

impl RandomScenario {
    /// Rayleigh instance: `h` (or `h_hat`) and every `g_hat_k` drawn from
    /// `CN(0, I)`, covariances `eps_e * shape_k` or `eps_e * I`, `eps_b * I`.
    pub fn draw<R: Rng + ?Sized>(&self, n_tx: usize, n_eves: usize, rng: &mut R) -> ScenarioSpec {
        let h = standard_cn(n_tx, rng);
        match self.kind {
            ScenarioKind::StatisticalEcsi => ScenarioSpec::StatisticalEcsi {
                h,
                eve_covs: (0..n_eves).map(|k| eve_shape(k, n_tx).scale(self.eps_e)).collect(),
            },
            ScenarioKind::ImperfectEcsi => ScenarioSpec::ImperfectEcsi {
                h,
                g_hat: (0..n_eves).map(|_| standard_cn(n_tx, rng)).collect(),
                eve_err_covs: vec![HMatrix::scaled_identity(n_tx, self.eps_e); n_eves],
            },
            ScenarioKind::ImperfectBoth => ScenarioSpec::ImperfectBoth {
                h_hat: h,
                bob_err_cov: HMatrix::scaled_identity(n_tx, self.eps_b),
                g_hat: (0..n_eves).map(|_| standard_cn(n_tx, rng)).collect(),
                eve_err_covs: vec![HMatrix::scaled_identity(n_tx, self.eps_e); n_eves],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::c;
    use nalgebra::DMatrix;

    fn cfg(n: usize, k: usize) -> SystemConfig {
        SystemConfig::uniform(n, k, 1.0, 100.0, 0.05)
    }

    #[test]
    fn accepts_well_formed_statistical_spec() {
        let spec = ScenarioSpec::StatisticalEcsi { h: CVector::zeros(6), eve_covs: vec![HMatrix::identity(6)] };
        assert!(validate(&cfg(6, 1), &spec).is_ok());
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let bad = HMatrix::from_real_diag(&[1.0, -0.1]);
        let spec = ScenarioSpec::StatisticalEcsi { h: CVector::zeros(2), eve_covs: vec![bad] };
        assert!(matches!(validate(&cfg(2, 1), &spec), Err(ChannelError::NotPsd(_))));
    }

    #[test]
    fn three_eves_common_budget() {
        let mut rng = substream(1, &[], 0);
        let spec = RandomScenario { kind: ScenarioKind::ImperfectEcsi, eps_b: 0.0, eps_e: 0.2 }.draw(6, 3, &mut rng);
        let c = SystemConfig::uniform(6, 3, 1.0, 100.0, 0.05);
        assert_eq!(c.outage_probs, vec![0.05; 3]);
        assert!(validate(&c, &spec).is_ok());
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg(2, 1);
        c.outage_probs = vec![0.0];
        assert!(matches!(c.validate(), Err(ChannelError::BadProbability(_))));
        let mut c = cfg(2, 2);
        c.noise_eves.pop();
        assert!(matches!(c.validate(), Err(ChannelError::DimensionMismatch(_))));
        let spec = ScenarioSpec::StatisticalEcsi { h: CVector::zeros(3), eve_covs: vec![HMatrix::identity(2)] };
        assert!(matches!(validate(&cfg(2, 1), &spec), Err(ChannelError::DimensionMismatch(_))));
    }

    #[test]
    fn zero_covariance_returns_mean() {
        let mean = CVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5)]);
        let mut rng = substream(3, &[], 0);
        assert_eq!(sample_cn(&mean, &HMatrix::zeros(2), &mut rng).unwrap(), mean);
    }

    fn empirical_cov(draws: &[CVector]) -> DMatrix<Complex64> {
        let n = draws[0].len();
        let mut acc = DMatrix::zeros(n, n);
        for d in draws {
            acc += d * d.adjoint();
        }
        acc / Complex64::new(draws.len() as f64, 0.0)
    }

    #[test]
    fn identity_covariance_moments() {
        let s = CnSampler::new(CVector::zeros(4), &HMatrix::identity(4)).unwrap();
        let mut rng = substream(5, &[1], 0);
        let draws: Vec<CVector> = (0..100_000).map(|_| s.draw(&mut rng)).collect();
        let err = (empirical_cov(&draws) - DMatrix::<Complex64>::identity(4, 4)).norm();
        assert!(err < 0.03 * 2.0, "frobenius error {err}");
    }

    #[test]
    fn diagonal_covariance_variances() {
        let cov = HMatrix::from_real_diag(&[2.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let s = CnSampler::new(CVector::zeros(6), &cov).unwrap();
        let mut rng = substream(6, &[], 0);
        let draws: Vec<CVector> = (0..100_000).map(|_| s.draw(&mut rng)).collect();
        let e = empirical_cov(&draws);
        for i in 0..6 {
            let want = if i == 0 { 2.0 } else { 1.0 };
            assert!((e[(i, i)].re / want - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn realize_respects_variants() {
        let g_hat = vec![CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)])];
        let spec = ScenarioSpec::ImperfectEcsi {
            h: CVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0)]),
            g_hat: g_hat.clone(),
            eve_err_covs: vec![HMatrix::zeros(2)],
        };
        let r = realize(&spec, &mut substream(0, &[], 0));
        assert_eq!(r.g, g_hat);

        let n = 6;
        let eps_b = 0.01;
        let mut rng = substream(8, &[], 0);
        let spec = RandomScenario { kind: ScenarioKind::ImperfectBoth, eps_b, eps_e: 0.1 }.draw(n, 1, &mut rng);
        let sampler = ChannelSampler::new(&spec).unwrap();
        let h_hat = spec.h_nominal().clone();
        let mean: f64 = (0..10_000).map(|_| (sampler.draw(&mut rng).h - &h_hat).norm_squared()).sum::<f64>() / 1e4;
        assert!((mean / (eps_b * n as f64) - 1.0).abs() < 0.05);

        let spec = ScenarioSpec::StatisticalEcsi { h: CVector::zeros(n), eve_covs: vec![HMatrix::identity(n)] };
        let sampler = ChannelSampler::new(&spec).unwrap();
        let mean: f64 = (0..10_000).map(|_| sampler.draw(&mut rng).g[0].norm_squared()).sum::<f64>() / 1e4;
        assert!((mean / n as f64 - 1.0).abs() < 0.05);
    }

    #[test]
    fn substreams_are_reproducible_and_uncorrelated() {
        let a: Vec<f64> = (0..50).map(|i| substream(42, &[7], i).random::<f64>()).collect();
        let b: Vec<f64> = (0..50).map(|i| substream(42, &[7], i).random::<f64>()).collect();
        assert_eq!(a, b);
        let x: Vec<f64> = (0..10_000).map(|i| standard_cn(1, &mut substream(42, &[7], i))[0].re).collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let cov: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((cov / var).abs() < 0.02);
        assert_ne!(substream(42, &[7], 0).random::<u64>(), substream(42, &[8], 0).random::<u64>());
    }

    #[test]
    fn eve_shapes_pad_and_truncate() {
        assert_eq!(eve_shape(1, 6).get(0, 0), c(2.0, 0.0));
        assert_eq!(eve_shape(2, 6).get(4, 4), c(0.5, 0.0));
        assert_eq!(eve_shape(2, 6).get(5, 5), c(1.0, 0.0));
        assert_eq!(eve_shape(2, 4).n(), 4);
    }
}
