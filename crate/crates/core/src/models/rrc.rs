use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::complex_normal;
use crate::error::{Error, Result};

/// Root-raised-cosine pulse sampled at `t = k / sps` symbol periods for
/// `k ∈ [−span·sps/2, span·sps/2]`, scaled to unit energy.
///
/// The removable singularities at `t = 0` and `|t| = 1/(4·rolloff)` take their
/// closed-form limits.
pub fn rrc_taps(rolloff: f64, sps: usize, span_symbols: usize) -> Result<Vec<f64>> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::InvalidParameter(format!("rolloff must be in (0, 1], got {rolloff}")));
    }
    if sps == 0 {
        return Err(Error::InvalidParameter("samples per symbol must be positive".into()));
    }
    if span_symbols == 0 || !span_symbols.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "span must be a positive even number of symbols, got {span_symbols}"
        )));
    }
    let half = (span_symbols * sps / 2) as i64;
    let beta = rolloff;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|k| {
            let t = k as f64 / sps as f64;
            if k == 0 {
                1.0 - beta + 4.0 * beta / PI
            } else if (4.0 * beta * t.abs() - 1.0).abs() < 1e-9 {
                let a = PI / (4.0 * beta);
                beta / std::f64::consts::SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos())
            } else {
                let x = 4.0 * beta * t;
                ((PI * t * (1.0 - beta)).sin() + x * (PI * t * (1.0 + beta)).cos()) / (PI * t * (1.0 - x * x))
            }
        })
        .collect();
    if let Some(index) = taps.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteTap { index });
    }
    let energy: f64 = taps.iter().map(|g| g * g).sum();
    let norm = energy.sqrt();
    for g in &mut taps {
        *g /= norm;
    }
    Ok(taps)
}

/// Single-carrier process `x[n] = Σ_p a_p·g[n − p·sps]` with an RRC pulse and
/// iid CN(0, 1) symbols. Cyclostationary with period `sps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RrcModelRaw")]
pub struct RrcModel {
    sps: usize,
    span_symbols: usize,
    rolloff: f64,
    #[serde(skip)]
    taps: Vec<f64>,
    pub(super) power_scale: f64,
}

#[derive(Deserialize)]
struct RrcModelRaw {
    sps: usize,
    span_symbols: usize,
    rolloff: f64,
    #[serde(default = "one")]
    power_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RrcModelRaw> for RrcModel {
    type Error = Error;

    fn try_from(raw: RrcModelRaw) -> Result<Self> {
        let mut m = RrcModel::new(raw.rolloff, raw.sps, raw.span_symbols)?;
        m.power_scale = raw.power_scale;
        Ok(m)
    }
}

impl RrcModel {
    pub fn new(rolloff: f64, sps: usize, span_symbols: usize) -> Result<Self> {
        Ok(Self {
            sps,
            span_symbols,
            rolloff,
            taps: rrc_taps(rolloff, sps, span_symbols)?,
            power_scale: 1.0,
        })
    }

    pub fn sps(&self) -> usize {
        self.sps
    }

    pub fn span_symbols(&self) -> usize {
        self.span_symbols
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    fn half(&self) -> i64 {
        (self.taps.len() / 2) as i64
    }

    /// `g[k]` for a centered index, zero outside the support.
    #[inline]
    fn tap(&self, k: i64) -> f64 {
        let h = self.half();
        if k < -h || k > h {
            0.0
        } else {
            self.taps[(k + h) as usize]
        }
    }

    /// `Σ_p g[r − p·sps]·g[r − l − p·sps]`
    pub(super) fn raw_autocov(&self, r: usize, lag: usize) -> Complex64 {
        let h = self.half();
        let sps = self.sps as i64;
        let lag = lag as i64;
        let mut k = r as i64;
        while k - sps >= -h {
            k -= sps;
        }
        while k < -h {
            k += sps;
        }
        let mut acc = 0.0;
        while k <= h {
            acc += self.tap(k) * self.tap(k - lag);
            k += sps;
        }
        Complex64::new(acc, 0.0)
    }

    pub(super) fn sample_raw<R: Rng + ?Sized>(&self, tau: usize, n: usize, rng: &mut R) -> Vec<Complex64> {
        let sps = self.sps as i64;
        let span = self.span_symbols as i64;
        let h = self.half();
        let first = (tau as i64).div_euclid(sps) - span;
        let last = ((tau + n - 1) as i64).div_euclid(sps) + span;
        let symbols: Vec<Complex64> = (first..=last).map(|_| complex_normal(rng)).collect();
        (tau..tau + n)
            .map(|t| {
                let t = t as i64;
                let p_lo = (t - h + sps - 1).div_euclid(sps).max(first);
                let p_hi = (t + h).div_euclid(sps).min(last);
                (p_lo..=p_hi)
                    .map(|p| symbols[(p - first) as usize] * self.tap(t - p * sps))
                    .sum()
            })
            .collect()
    }
}
