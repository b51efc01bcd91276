//! Monte Carlo MSE-vs-SIR sweeps over the model-based estimators.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curves::{CurveCell, CurveMetadata, CurveTable, EstimatorKind};
use crate::error::{Error, Result};
use crate::estimators::{per_sample_error, BankOptions, FilterBank, LmmseFilter, OracleFilter};
use crate::linalg::Cholesky;
use crate::mixture::{equidistant_sir, sir_to_kappa, substream, synthesize_at_kappa, KappaLevel, MixtureConfig};
use crate::models::{BlockCovModel, OfdmModel, RrcModel, SourceModel};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Experiment description as stored in config files. `sigma` may be left out
/// and supplied on the command line instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: SourceModel,
    pub interference: SourceModel,
    pub n: usize,
    pub sir_db: Vec<f64>,
    /// Prior over the SIR levels; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_prior: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        let cfg = ExperimentConfig {
            source: cfg.source.validate()?,
            interference: cfg.interference.validate()?,
            ..cfg
        };
        cfg.kappa_levels()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn kappa_levels(&self) -> Result<Vec<KappaLevel>> {
        if self.sir_db.is_empty() {
            return Err(Error::InvalidParameter("at least one SIR level is required".into()));
        }
        let priors = match &self.kappa_prior {
            Some(p) if p.len() != self.sir_db.len() => {
                return Err(Error::InvalidParameter(format!(
                    "{} priors for {} SIR levels",
                    p.len(),
                    self.sir_db.len()
                )))
            }
            Some(p) => p.clone(),
            None => vec![1.0 / self.sir_db.len() as f64; self.sir_db.len()],
        };
        Ok(self
            .sir_db
            .iter()
            .zip(priors)
            .map(|(&sir, prior)| KappaLevel {
                kappa: sir_to_kappa(sir),
                prior,
            })
            .collect())
    }

    /// Mixture config at noise level `sigma`, falling back to the file's value.
    pub fn mixture(&self, sigma: Option<f64>) -> Result<MixtureConfig> {
        let sigma = sigma
            .or(self.sigma)
            .ok_or_else(|| Error::InvalidParameter("sigma is required (no default noise level)".into()))?;
        let cfg = MixtureConfig {
            source: self.source.clone(),
            interference: self.interference.clone(),
            n: self.n,
            sigma,
            kappa_levels: self.kappa_levels()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Built-in experiment setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Random block covariances: N=256, periods 11 and 5, SIR −6…6 dB in 5 levels.
    S51,
    /// RRC (16 sps, span 8, rolloff 0.5) against OFDM (64 subcarriers, CP 16):
    /// N=1280, SIR −30…3 dB in 1.5 dB steps.
    S52,
    /// `S52` with N=320 for quick runs.
    S52Reduced,
}

pub const S51_SOURCE_SEED: u64 = 5101;
pub const S51_INTERFERENCE_SEED: u64 = 5102;

impl Profile {
    pub fn config(self) -> ExperimentConfig {
        let norm = |m: SourceModel| m.normalize_power().expect("profile models have power");
        match self {
            Profile::S51 => ExperimentConfig {
                source: norm(SourceModel::Block(
                    BlockCovModel::random(11, 550, S51_SOURCE_SEED).expect("valid"),
                )),
                interference: norm(SourceModel::Block(
                    BlockCovModel::random(5, 550, S51_INTERFERENCE_SEED).expect("valid"),
                )),
                n: 256,
                sir_db: equidistant_sir(-6.0, 6.0, 5),
                kappa_prior: None,
                sigma: None,
            },
            Profile::S52 | Profile::S52Reduced => ExperimentConfig {
                source: norm(SourceModel::Rrc(RrcModel::new(0.5, 16, 8).expect("valid"))),
                interference: norm(SourceModel::Ofdm(OfdmModel::new(64, 16, None).expect("valid"))),
                n: if self == Profile::S52 { 1280 } else { 320 },
                sir_db: equidistant_sir(-30.0, 3.0, 23),
                kappa_prior: None,
                sigma: None,
            },
        }
    }

    pub fn default_trials(self) -> usize {
        1000
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s51" => Ok(Profile::S51),
            "s52" => Ok(Profile::S52),
            "s52-reduced" => Ok(Profile::S52Reduced),
            _ => Err(Error::InvalidParameter(format!("unknown profile '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub mixture: MixtureConfig,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub seed: u64,
    pub bank: BankOptions,
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        self.mixture.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("no estimators selected".into()));
        }
        Ok(())
    }
}

/// Sum with a fixed pairwise-tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// `(mean, standard error of the mean)`; the standard error is zero for one sample.
pub fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// SIR of `κ` snapped to 1e-9 dB, so grid levels print as configured.
pub fn report_sir(kappa: f64) -> f64 {
    (crate::mixture::kappa_to_sir(kappa) * 1e9).round() / 1e9 + 0.0
}

/// Mean and standard error converted to dB by the delta method.
pub fn to_db(mean: f64, stderr: f64) -> (f64, f64) {
    (10.0 * mean.log10(), 10.0 / std::f64::consts::LN_10 * stderr / mean)
}

struct Prepared {
    estimators: Vec<EstimatorKind>,
    lmmse: Option<LmmseFilter>,
    bank: Option<FilterBank>,
    notices: Vec<String>,
}

fn prepare(cfg: &BenchmarkConfig) -> Result<Prepared> {
    let m = &cfg.mixture;
    let mut seen = HashSet::new();
    let mut estimators: Vec<EstimatorKind> = cfg.estimators.iter().copied().filter(|e| seen.insert(*e)).collect();
    let mut notices = Vec::new();
    let bank = if estimators.contains(&EstimatorKind::Mmse) {
        match FilterBank::build(&m.source, &m.interference, &m.kappa_levels, m.sigma, m.n, cfg.bank) {
            Ok(bank) => Some(bank),
            Err(e @ Error::Infeasible { .. }) => {
                log::warn!("{e}; mmse omitted");
                notices.push(format!("mmse omitted: {e}"));
                estimators.retain(|e| *e != EstimatorKind::Mmse);
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let lmmse = if estimators.contains(&EstimatorKind::Lmmse) {
        Some(LmmseFilter::build(&m.source, &m.interference, &m.kappa_levels, m.sigma, m.n)?)
    } else {
        None
    };
    Ok(Prepared {
        estimators,
        lmmse,
        bank,
        notices,
    })
}

/// Runs every selected estimator at every SIR level with `κ` held at that
/// level. Trial `t` of level `i` draws from `substream(seed, i·2³² + t)`.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<CurveTable> {
    cfg.validate()?;
    let m = &cfg.mixture;
    let prep = prepare(cfg)?;
    let table_s = m.source.autocovariance_table(m.n);
    let table_b = m.interference.autocovariance_table(m.n);

    let mut per_estimator: Vec<Vec<CurveCell>> = vec![Vec::new(); prep.estimators.len()];
    for (li, level) in m.kappa_levels.iter().enumerate() {
        let kappa = level.kappa;
        let sir_db = report_sir(kappa);
        let known = if prep.estimators.contains(&EstimatorKind::LmmseKnownKappa) {
            Some(LmmseFilter::build_with_mean_kappa_sqr(
                &m.source,
                &m.interference,
                kappa * kappa,
                m.sigma,
                m.n,
            )?)
        } else {
            None
        };

        let trial = |t: usize| -> Result<Vec<f64>> {
            let mut rng = substream(cfg.seed, ((li as u64) << 32) | t as u64);
            let rec = synthesize_at_kappa(m, kappa, &mut rng)?;
            let lat = rec.latents;
            prep.estimators
                .iter()
                .map(|est| {
                    let estimate = match est {
                        EstimatorKind::Lmmse => prep.lmmse.as_ref().expect("built").estimate(&rec.y)?,
                        EstimatorKind::LmmseKnownKappa => known.as_ref().expect("built").estimate(&rec.y)?,
                        EstimatorKind::Mmse => prep.bank.as_ref().expect("built").mmse_estimate(&rec.y)?,
                        EstimatorKind::Oracle => match &prep.bank {
                            Some(bank) => bank.oracle_estimate(&rec.y, lat.tau_s, lat.tau_b, kappa)?,
                            None => OracleFilter::from_covariances(
                                table_s.window(lat.tau_s),
                                &table_b.window(lat.tau_b),
                                kappa,
                                m.sigma,
                            )?
                            .estimate(&rec.y)?,
                        },
                    };
                    Ok(per_sample_error(&estimate, &rec.s))
                })
                .collect()
        };

        #[cfg(feature = "parallel")]
        let errors: Vec<Vec<f64>> = {
            use rayon::prelude::*;
            (0..cfg.trials).into_par_iter().map(trial).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let errors: Vec<Vec<f64>> = (0..cfg.trials).map(trial).collect::<Result<_>>()?;

        for (ei, est) in prep.estimators.iter().enumerate() {
            let column: Vec<f64> = errors.iter().map(|row| row[ei]).collect();
            let (mean, se) = mean_and_stderr(&column);
            let (mse_db, stderr_db) = to_db(mean, se);
            per_estimator[ei].push(CurveCell {
                estimator: *est,
                sir_db,
                mse_db,
                stderr_db,
                trials: cfg.trials,
            });
        }
        log::info!("level {sir_db:.2} dB done ({} trials)", cfg.trials);
    }

    Ok(CurveTable {
        metadata: CurveMetadata {
            sigma: m.sigma,
            n: m.n,
            source_model: m.source.label(),
            interference_model: m.interference.label(),
            seed: cfg.seed,
            tool_version: TOOL_VERSION.to_string(),
            notices: prep.notices,
        },
        cells: per_estimator.into_iter().flatten().collect(),
    })
}

/// Analytic per-sample oracle MSE for one triple, without building a bank.
pub fn oracle_mse_for(cfg: &MixtureConfig, tau_s: usize, tau_b: usize, kappa: f64) -> Result<f64> {
    Ok(OracleFilter::new(&cfg.source, &cfg.interference, tau_s, tau_b, kappa, cfg.sigma, cfg.n)?.mse_analytic())
}

/// Analytic per-sample LMMSE error `(1/N)·trace(Č_s − Č_s·C_y⁻¹·Č_s)` at a given `E[κ²]`.
/// Valid when `κ` is drawn from the prior that defines `E[κ²]`.
pub fn lmmse_mse_analytic(cfg: &MixtureConfig) -> Result<f64> {
    let cs = cfg.source.marginal_covariance(cfg.n)?.matrix;
    let mut cy = cs.clone();
    cy.add_scaled(cfg.mean_kappa_sqr(), &cfg.interference.marginal_covariance(cfg.n)?.matrix);
    cy.add_diagonal(cfg.sigma * cfg.sigma);
    let chol = Cholesky::new(&cy)?;
    Ok((cs.trace().re - chol.whitened_frobenius_sqr(&cs)) / cfg.n as f64)
}
