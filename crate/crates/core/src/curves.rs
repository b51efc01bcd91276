//! MSE-vs-SIR curve tables and their CSV / JSON files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Linear MMSE with `E[κ²]` under the κ prior.
    Lmmse,
    /// Linear MMSE rebuilt with the level's true `κ²`.
    LmmseKnownKappa,
    /// Conditional mean given the true `(τ_s, τ_b, κ)`.
    Oracle,
    /// Posterior-weighted MMSE over the latent grid.
    Mmse,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Lmmse,
        EstimatorKind::LmmseKnownKappa,
        EstimatorKind::Oracle,
        EstimatorKind::Mmse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Lmmse => "lmmse",
            EstimatorKind::LmmseKnownKappa => "lmmse_known_kappa",
            EstimatorKind::Oracle => "oracle",
            EstimatorKind::Mmse => "mmse",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveCell {
    pub estimator: EstimatorKind,
    pub sir_db: f64,
    pub mse_db: f64,
    pub stderr_db: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub sigma: f64,
    pub n: usize,
    pub source_model: String,
    pub interference_model: String,
    pub seed: u64,
    pub tool_version: String,
    /// Estimators that were requested but not computed, with the reason.
    #[serde(default)]
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub metadata: CurveMetadata,
    pub cells: Vec<CurveCell>,
}

impl CurveTable {
    pub fn cell(&self, estimator: EstimatorKind, sir_db: f64) -> Option<&CurveCell> {
        self.cells
            .iter()
            .find(|c| c.estimator == estimator && (c.sir_db - sir_db).abs() < 1e-9)
    }

    pub fn curve(&self, estimator: EstimatorKind) -> Vec<&CurveCell> {
        self.cells.iter().filter(|c| c.estimator == estimator).collect()
    }

    pub fn estimators(&self) -> Vec<EstimatorKind> {
        let mut out = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.estimator) {
                out.push(c.estimator);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFormat {
    Csv,
    Json,
}

impl FromStr for CurveFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(CurveFormat::Csv),
            "json" => Ok(CurveFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown curve format '{s}'"))),
        }
    }
}

pub const CSV_HEADER: &str = "estimator,sir_db,mse_db,stderr_db,trials";

/// 17 significant digits.
fn full(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv(table: &CurveTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &table.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.estimator,
            full(c.sir_db),
            full(c.mse_db),
            full(c.stderr_db),
            c.trials
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CurveCell>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(Error::Corrupt(format!("unexpected curve header {other:?}"))),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Corrupt(format!("row {} has {} fields", i + 1, f.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Corrupt(format!("row {}: {e}", i + 1)))
            };
            Ok(CurveCell {
                estimator: f[0].parse()?,
                sir_db: num(f[1])?,
                mse_db: num(f[2])?,
                stderr_db: num(f[3])?,
                trials: f[4]
                    .parse()
                    .map_err(|e| Error::Corrupt(format!("row {}: {e}", i + 1)))?,
            })
        })
        .collect()
}

pub fn to_json(table: &CurveTable) -> Result<String> {
    let mut text = serde_json::to_string_pretty(table)?;
    text.push('\n');
    Ok(text)
}

pub fn parse_json(text: &str) -> Result<CurveTable> {
    Ok(serde_json::from_str(text)?)
}

/// Writes the table; an empty table is rejected before the file is created.
pub fn emit_curves(table: &CurveTable, path: impl AsRef<Path>, format: CurveFormat) -> Result<()> {
    let path = path.as_ref();
    if table.cells.is_empty() {
        return Err(Error::InvalidParameter("curve table has no estimators to emit".into()));
    }
    let text = match format {
        CurveFormat::Csv => to_csv(table),
        CurveFormat::Json => to_json(table)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> CurveTable {
        let mut cells = Vec::new();
        for est in [EstimatorKind::Lmmse, EstimatorKind::Oracle] {
            for (i, sir) in [-6.0, 0.0, 6.0].into_iter().enumerate() {
                cells.push(CurveCell {
                    estimator: est,
                    sir_db: sir,
                    mse_db: -1.0 / 3.0 - i as f64 * std::f64::consts::PI,
                    stderr_db: 0.01 + 1e-17,
                    trials: 100,
                });
            }
        }
        CurveTable {
            metadata: CurveMetadata {
                sigma: 0.1,
                n: 32,
                source_model: "block".into(),
                interference_model: "block".into(),
                seed: 7,
                tool_version: "0.1.0".into(),
                notices: vec!["mmse omitted".into()],
            },
            cells,
        }
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let text = to_csv(&table());
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 6 + 1);
        assert_eq!(lines[7], "");
        assert!(!text.contains('\r'));
        assert_eq!(parse_csv(&text).unwrap(), table().cells);
    }

    #[test]
    fn json_round_trip() {
        let t = table();
        assert_eq!(parse_json(&to_json(&t).unwrap()).unwrap(), t);
    }

    #[test]
    fn empty_table_is_not_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        let mut t = table();
        t.cells.clear();
        assert!(emit_curves(&t, &path, CurveFormat::Csv).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn estimator_names_parse() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.as_str().parse::<EstimatorKind>().unwrap(), k);
        }
        assert!("wiener".parse::<EstimatorKind>().is_err());
    }
}
