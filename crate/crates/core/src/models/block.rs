use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::complex_normal;
use crate::error::{Error, Result};
use crate::linalg::{dot_conj, CMatrix};

/// Process `x = G·a` where `G` is block-diagonal with one repeating `P×P` block
/// and `a` is a vector of iid CN(0, 1) drivers over a buffer of `Ñ` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockCovModelRaw")]
pub struct BlockCovModel {
    period: usize,
    buffer_length: usize,
    /// Seed the generator block was drawn from, if it was drawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Row-major `P×P` generator block.
    block: Vec<Complex64>,
    pub(super) power_scale: f64,
}

#[derive(Deserialize)]
struct BlockCovModelRaw {
    period: usize,
    buffer_length: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    block: Vec<Complex64>,
    #[serde(default = "one")]
    power_scale: f64,
}

impl TryFrom<BlockCovModelRaw> for BlockCovModel {
    type Error = Error;

    fn try_from(raw: BlockCovModelRaw) -> Result<Self> {
        let mut m = Self {
            period: raw.period,
            buffer_length: raw.buffer_length,
            seed: raw.seed,
            block: raw.block,
            power_scale: raw.power_scale,
        };
        m.validate()?;
        Ok(m)
    }
}

fn one() -> f64 {
    1.0
}

impl BlockCovModel {
    pub fn new(period: usize, block: CMatrix, buffer_length: usize) -> Result<Self> {
        if block.rows() != period || block.cols() != period {
            return Err(Error::InvalidParameter(format!(
                "block must be {period}x{period}, got {}x{}",
                block.rows(),
                block.cols()
            )));
        }
        let mut m = Self {
            period,
            buffer_length,
            seed: None,
            block: block.as_slice().to_vec(),
            power_scale: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    /// Draws every block entry iid CN(0, 1) from a stream seeded with `seed`.
    pub fn random(period: usize, buffer_length: usize, seed: u64) -> Result<Self> {
        let mut m = Self {
            period,
            buffer_length,
            seed: Some(seed),
            block: Vec::new(),
            power_scale: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    fn draw_block(period: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..period * period).map(|_| complex_normal(&mut rng)).collect()
    }

    fn validate(&mut self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::InvalidParameter("block period must be positive".into()));
        }
        if self.buffer_length == 0 || !self.buffer_length.is_multiple_of(self.period) {
            return Err(Error::InvalidParameter(format!(
                "buffer length {} is not a positive multiple of period {}",
                self.buffer_length, self.period
            )));
        }
        if self.block.is_empty() {
            match self.seed {
                Some(seed) => self.block = Self::draw_block(self.period, seed),
                None => {
                    return Err(Error::InvalidParameter(
                        "block model needs either explicit block entries or a seed".into(),
                    ))
                }
            }
        }
        if self.block.len() != self.period * self.period {
            return Err(Error::InvalidParameter(format!(
                "block has {} entries, expected {}",
                self.block.len(),
                self.period * self.period
            )));
        }
        if self.block.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("block entries must be finite".into()));
        }
        Ok(())
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn buffer_length(&self) -> usize {
        self.buffer_length
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn block(&self) -> CMatrix {
        CMatrix::from_vec(self.period, self.period, self.block.clone()).expect("validated size")
    }

    fn block_row(&self, r: usize) -> &[Complex64] {
        &self.block[r * self.period..(r + 1) * self.period]
    }

    /// `(B·Bᴴ)[r, r − l]` when both phases fall in one block, zero otherwise.
    pub(super) fn raw_autocov(&self, r: usize, lag: usize) -> Complex64 {
        if lag > r {
            return Complex64::new(0.0, 0.0);
        }
        dot_conj(self.block_row(r), self.block_row(r - lag))
    }

    pub(super) fn sample_raw<R: Rng + ?Sized>(&self, tau: usize, n: usize, rng: &mut R) -> Result<Vec<Complex64>> {
        if tau + n > self.buffer_length {
            return Err(Error::WindowTooLong {
                tau,
                requested: n,
                buffer: self.buffer_length,
            });
        }
        let drivers: Vec<Complex64> = (0..self.buffer_length).map(|_| complex_normal(rng)).collect();
        let p = self.period;
        Ok((tau..tau + n)
            .map(|t| {
                let base = (t / p) * p;
                crate::linalg::dot(self.block_row(t % p), &drivers[base..base + p])
            })
            .collect())
    }
}
