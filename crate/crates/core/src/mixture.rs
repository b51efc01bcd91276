//! Observations `y = s + κ·b + σ·z` with uniformly random offsets and a
//! discrete SIR parameter.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{complex_normal, SourceModel};

/// `κ = 10^(−SIR/20)` for unit-power sources.
pub fn sir_to_kappa(sir_db: f64) -> f64 {
    10f64.powf(-sir_db / 20.0)
}

pub fn kappa_to_sir(kappa: f64) -> f64 {
    -20.0 * kappa.log10()
}

/// Independent random stream for item `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaLevel {
    pub kappa: f64,
    pub prior: f64,
}

/// Equiprobable levels for the given SIR values in dB.
pub fn uniform_levels_from_sir(sir_db: &[f64]) -> Vec<KappaLevel> {
    let prior = 1.0 / sir_db.len() as f64;
    sir_db
        .iter()
        .map(|&s| KappaLevel {
            kappa: sir_to_kappa(s),
            prior,
        })
        .collect()
}

/// `count` SIR values evenly spaced over `[lo, hi]`.
pub fn equidistant_sir(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub source: SourceModel,
    pub interference: SourceModel,
    pub n: usize,
    pub sigma: f64,
    pub kappa_levels: Vec<KappaLevel>,
}

impl MixtureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("window length must be at least 1".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.kappa_levels.is_empty() {
            return Err(Error::InvalidParameter("at least one kappa level is required".into()));
        }
        let mut total = 0.0;
        for (i, level) in self.kappa_levels.iter().enumerate() {
            if !(level.kappa.is_finite() && level.kappa > 0.0) {
                return Err(Error::InvalidParameter(format!("kappa must be positive, got {}", level.kappa)));
            }
            if !(level.prior.is_finite() && level.prior >= 0.0) {
                return Err(Error::InvalidParameter(format!("prior must be nonnegative, got {}", level.prior)));
            }
            if self.kappa_levels[..i].iter().any(|o| o.kappa == level.kappa) {
                return Err(Error::InvalidParameter(format!("duplicate kappa level {}", level.kappa)));
            }
            total += level.prior;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("kappa priors sum to {total}, not 1")));
        }
        Ok(())
    }

    /// `E[κ²]` under the configured prior.
    pub fn mean_kappa_sqr(&self) -> f64 {
        self.kappa_levels.iter().map(|l| l.prior * l.kappa * l.kappa).sum()
    }

    pub fn sir_levels_db(&self) -> Vec<f64> {
        self.kappa_levels.iter().map(|l| kappa_to_sir(l.kappa)).collect()
    }

    fn draw_kappa<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for level in &self.kappa_levels {
            cum += level.prior;
            if u < cum {
                return level.kappa;
            }
        }
        self.kappa_levels.last().expect("validated non-empty").kappa
    }
}

/// Hidden side information of one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latents {
    pub tau_s: usize,
    pub tau_b: usize,
    pub kappa: f64,
}

/// One observation with its ground-truth reference.
///
/// `latents` exist for oracle scoring and diagnostics only; training exports
/// drop them.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureRecord {
    pub y: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub latents: Latents,
}

/// Draws one record; the SIR parameter comes from the configured prior.
pub fn synthesize<R: Rng + ?Sized>(config: &MixtureConfig, rng: &mut R) -> Result<MixtureRecord> {
    synthesize_inner(config, None, rng)
}

/// Draws one record with `κ` held fixed.
pub fn synthesize_at_kappa<R: Rng + ?Sized>(config: &MixtureConfig, kappa: f64, rng: &mut R) -> Result<MixtureRecord> {
    synthesize_inner(config, Some(kappa), rng)
}

fn synthesize_inner<R: Rng + ?Sized>(config: &MixtureConfig, kappa: Option<f64>, rng: &mut R) -> Result<MixtureRecord> {
    let tau_s = rng.random_range(0..config.source.period());
    let tau_b = rng.random_range(0..config.interference.period());
    let kappa = match kappa {
        Some(k) => k,
        None => config.draw_kappa(rng),
    };
    let n = config.n;
    let s = config.source.sample(tau_s, n, rng)?;
    let b = config.interference.sample(tau_b, n, rng)?;
    let sigma = config.sigma;
    let y: Vec<Complex64> = s
        .iter()
        .zip(&b)
        .map(|(si, bi)| {
            let z = complex_normal(rng);
            si + bi * kappa + z * sigma
        })
        .collect();
    Ok(MixtureRecord {
        y,
        s,
        latents: Latents { tau_s, tau_b, kappa },
    })
}

/// `count` iid records; record `i` draws from `substream(seed, i)`, so the
/// result does not depend on how generation is scheduled.
pub fn make_dataset(config: &MixtureConfig, count: usize, seed: u64) -> Result<Vec<MixtureRecord>> {
    config.validate()?;
    let one = |i: usize| synthesize(config, &mut substream(seed, i as u64));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(one).collect()
    }
}

/// Like [`make_dataset`] with every record at one fixed `κ`.
pub fn make_dataset_at_kappa(config: &MixtureConfig, kappa: f64, count: usize, seed: u64) -> Result<Vec<MixtureRecord>> {
    config.validate()?;
    let one = |i: usize| synthesize_at_kappa(config, kappa, &mut substream(seed, i as u64));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(one).collect()
    }
}
