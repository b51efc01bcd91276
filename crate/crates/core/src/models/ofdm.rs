use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::complex_normal;
use crate::error::{Error, Result};

/// OFDM process with a cyclic prefix:
/// `x[n] = N_sc^{-1/2} Σ_p Σ_{ℓ∈L} a_{p,ℓ}·q[n − p·N_b, ℓ]`,
/// `q[n, ℓ] = 1{0 ≤ n < N_b}·exp(j2πℓ(n − N_cp)/N_sc)`, `N_b = N_sc + N_cp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OfdmModelRaw")]
pub struct OfdmModel {
    n_subcarriers: usize,
    cp_length: usize,
    active_set: Vec<usize>,
    pub(super) power_scale: f64,
}

#[derive(Deserialize)]
struct OfdmModelRaw {
    n_subcarriers: usize,
    cp_length: usize,
    #[serde(default)]
    active_set: Option<Vec<usize>>,
    #[serde(default = "one")]
    power_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<OfdmModelRaw> for OfdmModel {
    type Error = Error;

    fn try_from(raw: OfdmModelRaw) -> Result<Self> {
        let mut m = OfdmModel::new(raw.n_subcarriers, raw.cp_length, raw.active_set)?;
        m.power_scale = raw.power_scale;
        Ok(m)
    }
}

impl OfdmModel {
    /// `active_set = None` activates every subcarrier except DC (index 0).
    pub fn new(n_subcarriers: usize, cp_length: usize, active_set: Option<Vec<usize>>) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(Error::InvalidParameter("number of subcarriers must be positive".into()));
        }
        let mut active = active_set.unwrap_or_else(|| (1..n_subcarriers).collect());
        active.sort_unstable();
        let before = active.len();
        active.dedup();
        if active.len() != before {
            return Err(Error::InvalidParameter("active subcarrier set has duplicates".into()));
        }
        if active.is_empty() {
            return Err(Error::InvalidParameter("active subcarrier set is empty".into()));
        }
        if let Some(&bad) = active.iter().find(|&&l| l >= n_subcarriers) {
            return Err(Error::InvalidParameter(format!(
                "subcarrier {bad} out of range for {n_subcarriers} subcarriers"
            )));
        }
        Ok(Self {
            n_subcarriers,
            cp_length,
            active_set: active,
            power_scale: 1.0,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn cp_length(&self) -> usize {
        self.cp_length
    }

    pub fn period(&self) -> usize {
        self.n_subcarriers + self.cp_length
    }

    pub fn active_set(&self) -> &[usize] {
        &self.active_set
    }

    /// `exp(j2πk/N_sc)` for `k ∈ [0, N_sc)`.
    fn twiddles(&self) -> Vec<Complex64> {
        let nsc = self.n_subcarriers as f64;
        (0..self.n_subcarriers)
            .map(|k| {
                let (s, c) = (2.0 * PI * k as f64 / nsc).sin_cos();
                Complex64::new(c, s)
            })
            .collect()
    }

    /// Samples `r` and `r − l` share a symbol only when `l ≤ r`; then the
    /// covariance is `N_sc^{-1} Σ_{ℓ∈L} exp(j2πℓl/N_sc)` independent of `r`.
    pub(super) fn raw_autocov(&self, r: usize, lag: usize) -> Complex64 {
        if lag > r {
            return Complex64::new(0.0, 0.0);
        }
        let nsc = self.n_subcarriers;
        let mut acc = Complex64::new(0.0, 0.0);
        for &l in &self.active_set {
            let (s, c) = (2.0 * PI * ((l * lag) % nsc) as f64 / nsc as f64).sin_cos();
            acc += Complex64::new(c, s);
        }
        acc / nsc as f64
    }

    pub(super) fn sample_raw<R: Rng + ?Sized>(&self, tau: usize, n: usize, rng: &mut R) -> Vec<Complex64> {
        let nb = self.period();
        let nsc = self.n_subcarriers as i64;
        let tw = self.twiddles();
        let norm = 1.0 / (self.n_subcarriers as f64).sqrt();
        let last_symbol = (tau + n - 1) / nb;
        let mut out = Vec::with_capacity(n);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.active_set.len()];
        for p in 0..=last_symbol {
            for c in coeffs.iter_mut() {
                *c = complex_normal(rng);
            }
            for r in 0..nb {
                let t = p * nb + r;
                if t < tau || t >= tau + n {
                    continue;
                }
                let shift = r as i64 - self.cp_length as i64;
                let v: Complex64 = self
                    .active_set
                    .iter()
                    .zip(&coeffs)
                    .map(|(&l, a)| a * tw[(l as i64 * shift).rem_euclid(nsc) as usize])
                    .sum();
                out.push(v * norm);
            }
        }
        out
    }
}
