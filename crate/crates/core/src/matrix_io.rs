//! Binary containers for covariance matrices (`CSCV`) and filter banks (`CSFB`).
//!
//! Both start with a 16-byte header: 4-byte magic, then little-endian `u32`
//! version, `u32` N and a reserved `u32` (zero). Complex values are stored as
//! interleaved little-endian `f64` (real, imag) in row-major order.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimators::{BankOptions, FilterBank};
use crate::linalg::CMatrix;

pub const COVARIANCE_MAGIC: [u8; 4] = *b"CSCV";
pub const FILTER_BANK_MAGIC: [u8; 4] = *b"CSFB";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                expected: end as u64,
                actual: self.bytes.len() as u64,
                missing: (end - self.bytes.len()) as u64,
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn complex(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }

    fn matrix(&mut self, n: usize) -> Result<CMatrix> {
        let data = (0..n * n).map(|_| self.complex()).collect::<Result<Vec<_>>>()?;
        CMatrix::from_vec(n, n, data)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn put_matrix(out: &mut Vec<u8>, m: &CMatrix) {
    for z in m.as_slice() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
}

fn put_header(out: &mut Vec<u8>, magic: [u8; 4], n: usize) -> Result<()> {
    let n = u32::try_from(n).map_err(|_| Error::InvalidParameter(format!("dimension {n} exceeds u32")))?;
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    Ok(())
}

fn read_header(r: &mut Reader<'_>, magic: [u8; 4], kind: &'static str) -> Result<usize> {
    if r.bytes.len() < 4 || r.bytes[..4] != magic {
        let mut found = [0u8; 4];
        let k = r.bytes.len().min(4);
        found[..k].copy_from_slice(&r.bytes[..k]);
        return Err(Error::BadMagic { expected: kind, found });
    }
    r.take(4)?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            kind,
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let n = r.u32()? as usize;
    let _reserved = r.u32()?;
    Ok(n)
}

pub fn encode_covariance(m: &CMatrix) -> Result<Vec<u8>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            actual: m.cols(),
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * 16);
    put_header(&mut out, COVARIANCE_MAGIC, m.rows())?;
    put_matrix(&mut out, m);
    Ok(out)
}

pub fn decode_covariance(bytes: &[u8]) -> Result<CMatrix> {
    let mut r = Reader::new(bytes);
    let n = read_header(&mut r, COVARIANCE_MAGIC, "covariance")?;
    let expected = (HEADER_LEN + n * n * 16) as u64;
    if (bytes.len() as u64) < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len() as u64,
            missing: expected - bytes.len() as u64,
        });
    }
    let m = r.matrix(n)?;
    r.finish()?;
    Ok(m)
}

pub fn write_covariance(m: &CMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_covariance(m)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_covariance(path: impl AsRef<Path>) -> Result<CMatrix> {
    let path = path.as_ref();
    decode_covariance(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Layout after the header: `u32 P_s, u32 P_b, u32 |K|, u32 reserved, f64 σ`,
/// `|K|` κ values, one log prior per triple, `P_s` source covariances, then one
/// full `N×N` Cholesky factor per triple in grid order.
pub fn encode_filter_bank(bank: &FilterBank) -> Result<Vec<u8>> {
    let (sigma, period_s, period_b, kappas, source_cov, entries) = bank.parts();
    let n = bank.n();
    let mut out = Vec::new();
    put_header(&mut out, FILTER_BANK_MAGIC, n)?;
    for v in [period_s, period_b, kappas.len(), 0] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&sigma.to_le_bytes());
    for k in kappas {
        out.extend_from_slice(&k.to_le_bytes());
    }
    for (_, log_prior) in &entries {
        out.extend_from_slice(&log_prior.to_le_bytes());
    }
    for c in source_cov {
        put_matrix(&mut out, c);
    }
    for (factor, _) in &entries {
        put_matrix(&mut out, factor);
    }
    Ok(out)
}

pub fn decode_filter_bank(bytes: &[u8], options: BankOptions) -> Result<FilterBank> {
    let mut r = Reader::new(bytes);
    let n = read_header(&mut r, FILTER_BANK_MAGIC, "filter bank")?;
    let period_s = r.u32()? as usize;
    let period_b = r.u32()? as usize;
    let n_kappa = r.u32()? as usize;
    let _reserved = r.u32()?;
    let sigma = r.f64()?;
    let kappas = (0..n_kappa).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let triples = period_s * period_b * n_kappa;
    let log_priors = (0..triples).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let source_cov = (0..period_s).map(|_| r.matrix(n)).collect::<Result<Vec<_>>>()?;
    let factors = log_priors
        .into_iter()
        .map(|lp| Ok((r.matrix(n)?, lp)))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    FilterBank::from_parts(sigma, period_s, period_b, kappas, source_cov, factors, options)
}

pub fn write_filter_bank(bank: &FilterBank, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_filter_bank(bank)?).map_err(|e| Error::io(path, e))
}

pub fn read_filter_bank(path: impl AsRef<Path>, options: BankOptions) -> Result<FilterBank> {
    let path = path.as_ref();
    decode_filter_bank(&fs::read(path).map_err(|e| Error::io(path, e))?, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::uniform_levels_from_sir;
    use crate::models::{BlockCovModel, OfdmModel, SourceModel};

    #[test]
    fn covariance_header_layout() {
        let m = SourceModel::Ofdm(OfdmModel::new(8, 2, None).unwrap())
            .marginal_covariance(5)
            .unwrap()
            .matrix;
        let bytes = encode_covariance(&m).unwrap();
        assert_eq!(&bytes[..4], b"CSCV");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 0);
        assert_eq!(bytes.len(), 16 + 25 * 16);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), m[(0, 0)].re);
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), m[(0, 1)].im);
        assert_eq!(decode_covariance(&bytes).unwrap(), m);
    }

    #[test]
    fn covariance_decode_guards() {
        let m = CMatrix::identity(3);
        let bytes = encode_covariance(&m).unwrap();
        assert!(matches!(decode_covariance(b"XXXX1234"), Err(Error::BadMagic { .. })));
        assert!(matches!(
            decode_covariance(&bytes[..bytes.len() - 8]),
            Err(Error::Truncated { missing: 8, .. })
        ));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(decode_covariance(&v2), Err(Error::UnsupportedVersion { found: 2, .. })));
    }

    #[test]
    fn filter_bank_round_trip() {
        let s = SourceModel::Block(BlockCovModel::random(2, 8, 1).unwrap()).normalize_power().unwrap();
        let b = SourceModel::Block(BlockCovModel::random(3, 9, 2).unwrap()).normalize_power().unwrap();
        let levels = uniform_levels_from_sir(&[-3.0, 3.0]);
        let bank = FilterBank::build(&s, &b, &levels, 0.2, 5, BankOptions::default()).unwrap();
        let bytes = encode_filter_bank(&bank).unwrap();
        assert_eq!(&bytes[..4], b"CSFB");
        let back = decode_filter_bank(&bytes, BankOptions::default()).unwrap();
        assert_eq!(encode_filter_bank(&back).unwrap(), bytes);
        let y: Vec<Complex64> = (0..5).map(|k| Complex64::new(k as f64, 1.0)).collect();
        assert_eq!(back.mmse_estimate(&y).unwrap(), bank.mmse_estimate(&y).unwrap());
    }
}
