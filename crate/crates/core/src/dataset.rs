//! `CSDS` dataset files: labeled `(y, s)` pairs for training and evaluation.
//!
//! Header (24 bytes, little-endian): magic `CSDS`, `u32` version, `u32` N,
//! `u64` record count, `u32` flags (bit 0: latents present). Each record holds
//! `y` then `s`, each as N interleaved `f32` (real, imag) pairs, followed by
//! `u32 τ_s, u32 τ_b, f64 κ` when latents are present. Metadata lives in a JSON
//! sidecar at `<path>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_io::Reader;
use crate::mixture::{KappaLevel, Latents, MixtureRecord};
use crate::models::SourceModel;

pub const DATASET_MAGIC: [u8; 4] = *b"CSDS";
pub const DATASET_VERSION: u32 = 1;
pub const DATASET_HEADER_LEN: u64 = 24;
pub const LATENT_BLOCK_LEN: u64 = 16;
const FLAG_LATENTS: u32 = 1;

/// One stored record. Values round-trip through `f32` on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub y: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub latents: Option<Latents>,
}

impl DatasetRecord {
    pub fn from_mixture(record: &MixtureRecord, include_latents: bool) -> Self {
        Self {
            y: record.y.clone(),
            s: record.s.clone(),
            latents: include_latents.then_some(record.latents),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub source: SourceModel,
    pub interference: SourceModel,
    pub sigma: f64,
    pub kappa_levels: Vec<KappaLevel>,
    pub seed: u64,
    pub split: String,
    pub n: usize,
    pub count: usize,
    pub latents: bool,
}

pub fn record_bytes(n: usize, with_latents: bool) -> u64 {
    2 * n as u64 * 2 * 4 + if with_latents { LATENT_BLOCK_LEN } else { 0 }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn put_f32_pairs(out: &mut Vec<u8>, v: &[Complex64]) {
    for z in v {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
}

pub fn encode_dataset(records: &[DatasetRecord]) -> Result<Vec<u8>> {
    let n = records.first().map(|r| r.y.len()).unwrap_or(0);
    let with_latents = records.first().is_some_and(|r| r.latents.is_some());
    for (i, r) in records.iter().enumerate() {
        if r.y.len() != n || r.s.len() != n {
            return Err(Error::InvalidParameter(format!(
                "record {i} has lengths ({}, {}), expected {n}",
                r.y.len(),
                r.s.len()
            )));
        }
        if r.latents.is_some() != with_latents {
            return Err(Error::InvalidParameter(format!("record {i} disagrees on latent presence")));
        }
    }
    let n32 = u32::try_from(n).map_err(|_| Error::InvalidParameter(format!("N={n} exceeds u32")))?;
    let total = DATASET_HEADER_LEN + records.len() as u64 * record_bytes(n, with_latents);
    let mut out = Vec::with_capacity(total as usize);
    out.extend_from_slice(&DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&n32.to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    out.extend_from_slice(&(if with_latents { FLAG_LATENTS } else { 0 }).to_le_bytes());
    for r in records {
        put_f32_pairs(&mut out, &r.y);
        put_f32_pairs(&mut out, &r.s);
        if let Some(l) = r.latents {
            out.extend_from_slice(&(l.tau_s as u32).to_le_bytes());
            out.extend_from_slice(&(l.tau_b as u32).to_le_bytes());
            out.extend_from_slice(&l.kappa.to_le_bytes());
        }
    }
    debug_assert_eq!(out.len() as u64, total);
    Ok(out)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Vec<DatasetRecord>> {
    if bytes.len() < 4 || bytes[..4] != DATASET_MAGIC {
        let mut found = [0u8; 4];
        let k = bytes.len().min(4);
        found[..k].copy_from_slice(&bytes[..k]);
        return Err(Error::BadMagic {
            expected: "dataset",
            found,
        });
    }
    let mut r = Reader::new(bytes);
    r.take(4)?;
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::UnsupportedVersion {
            kind: "dataset",
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let n = r.u32()? as usize;
    let count = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let flags = r.u32()?;
    if flags & !FLAG_LATENTS != 0 {
        return Err(Error::Corrupt(format!("unknown dataset flags {flags:#x}")));
    }
    let with_latents = flags & FLAG_LATENTS != 0;
    let expected = DATASET_HEADER_LEN + count * record_bytes(n, with_latents);
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Truncated {
            expected,
            actual,
            missing: expected - actual,
        });
    }
    if actual > expected {
        return Err(Error::Corrupt(format!("{} trailing bytes after payload", actual - expected)));
    }
    let pairs = |r: &mut Reader<'_>| -> Result<Vec<Complex64>> {
        let raw = r.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| {
                Complex64::new(
                    f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
                )
            })
            .collect())
    };
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let y = pairs(&mut r)?;
        let s = pairs(&mut r)?;
        let latents = if with_latents {
            Some(Latents {
                tau_s: r.u32()? as usize,
                tau_b: r.u32()? as usize,
                kappa: r.f64()?,
            })
        } else {
            None
        };
        out.push(DatasetRecord { y, s, latents });
    }
    Ok(out)
}

/// Writes `records` to `path` and the metadata sidecar next to it.
/// Training and validation splits pass `include_latents = false`.
pub fn export_dataset(
    records: &[MixtureRecord],
    path: impl AsRef<Path>,
    include_latents: bool,
    metadata: Option<&DatasetMetadata>,
) -> Result<()> {
    let stored: Vec<DatasetRecord> = records
        .iter()
        .map(|r| DatasetRecord::from_mixture(r, include_latents))
        .collect();
    write_dataset(&stored, path, metadata)
}

pub fn write_dataset(records: &[DatasetRecord], path: impl AsRef<Path>, metadata: Option<&DatasetMetadata>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_dataset(records)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    if let Some(meta) = metadata {
        let side = sidecar_path(path);
        let mut text = serde_json::to_string_pretty(meta)?;
        text.push('\n');
        fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
    }
    Ok(())
}

/// Reads a dataset and, when present, its sidecar metadata.
pub fn import_dataset(path: impl AsRef<Path>) -> Result<(Vec<DatasetRecord>, Option<DatasetMetadata>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let records = decode_dataset(&bytes)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        Some(serde_json::from_str(&text)?)
    } else {
        None
    };
    Ok((records, meta))
}
