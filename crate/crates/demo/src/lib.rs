//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function wraps a plain Rust function returning
//! `Result<_, String>` so the logic is testable natively.

use cyclosep::benchmark::{run_benchmark, BenchmarkConfig, Profile};
use cyclosep::curves::{to_json, EstimatorKind};
use cyclosep::estimators::BankOptions;
use cyclosep::models::{rrc_taps, SourceModel};
use wasm_bindgen::prelude::*;

pub const MAX_HEATMAP_N: usize = 512;
pub const MAX_SWEEP_N: usize = 256;
pub const MAX_SWEEP_TRIALS: usize = 500;

fn demo_model(name: &str) -> Result<SourceModel, String> {
    match name {
        "block" => Ok(Profile::S51.config().source),
        "rrc" => Ok(Profile::S52.config().source),
        "ofdm" => Ok(Profile::S52.config().interference),
        other => Err(format!("unknown model '{other}' (expected block, rrc or ofdm)")),
    }
}

pub fn pulse(rolloff: f64, sps: usize, span: usize) -> Result<Vec<f64>, String> {
    rrc_taps(rolloff, sps, span).map_err(|e| e.to_string())
}

pub fn period(model: &str) -> Result<usize, String> {
    demo_model(model).map(|m| m.period())
}

/// `|C|` row-major, for the offset-conditional covariance or, when `marginal`
/// is set, the offset-averaged one.
pub fn covariance_magnitudes(model: &str, tau: usize, n: usize, marginal: bool) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_HEATMAP_N {
        return Err(format!("window length must be in 1..={MAX_HEATMAP_N}"));
    }
    let model = demo_model(model)?;
    let c = if marginal {
        model.marginal_covariance(n).map(|m| m.matrix)
    } else {
        model.conditional_covariance(tau, n).map(|c| c.matrix)
    }
    .map_err(|e| e.to_string())?;
    Ok(c.as_slice().iter().map(|z| z.norm()).collect())
}

/// Curve table (JSON) for RRC against OFDM at window length `n`, with the
/// prior-averaged LMMSE, the known-κ LMMSE and the oracle.
pub fn sweep(sigma: f64, n: usize, trials: usize, seed: u64) -> Result<String, String> {
    if n == 0 || n > MAX_SWEEP_N {
        return Err(format!("window length must be in 1..={MAX_SWEEP_N}"));
    }
    if trials == 0 || trials > MAX_SWEEP_TRIALS {
        return Err(format!("trials must be in 1..={MAX_SWEEP_TRIALS}"));
    }
    let mut exp = Profile::S52.config();
    exp.n = n;
    let cfg = BenchmarkConfig {
        mixture: exp.mixture(Some(sigma)).map_err(|e| e.to_string())?,
        trials,
        estimators: vec![EstimatorKind::Lmmse, EstimatorKind::LmmseKnownKappa, EstimatorKind::Oracle],
        seed,
        bank: BankOptions::default(),
    };
    let table = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    to_json(&table).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = rrcPulse)]
pub fn rrc_pulse_js(rolloff: f64, sps: usize, span: usize) -> Result<Vec<f64>, JsError> {
    pulse(rolloff, sps, span).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = modelPeriod)]
pub fn model_period_js(model: &str) -> Result<usize, JsError> {
    period(model).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = covarianceMagnitudes)]
pub fn covariance_magnitudes_js(model: &str, tau: usize, n: usize, marginal: bool) -> Result<Vec<f64>, JsError> {
    covariance_magnitudes(model, tau, n, marginal).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = mseSweep)]
pub fn mse_sweep_js(sigma: f64, n: usize, trials: usize, seed: u32) -> Result<String, JsError> {
    sweep(sigma, n, trials, seed as u64).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_shape() {
        let g = pulse(0.5, 16, 8).unwrap();
        assert_eq!(g.len(), 129);
        assert!((g.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pulse(0.0, 16, 8).is_err());
    }

    #[test]
    fn periods() {
        assert_eq!(period("block").unwrap(), 11);
        assert_eq!(period("rrc").unwrap(), 16);
        assert_eq!(period("ofdm").unwrap(), 80);
        assert!(period("fsk").is_err());
    }

    #[test]
    fn heatmap_is_symmetric_and_marginal_is_toeplitz() {
        let n = 40;
        let c = covariance_magnitudes("ofdm", 7, n, false).unwrap();
        assert_eq!(c.len(), n * n);
        for i in 0..n {
            for j in 0..n {
                assert!((c[i * n + j] - c[j * n + i]).abs() < 1e-12);
            }
        }
        let m = covariance_magnitudes("rrc", 0, n, true).unwrap();
        for i in 1..n {
            for j in 1..n {
                assert!((m[i * n + j] - m[(i - 1) * n + j - 1]).abs() < 1e-9);
            }
            assert!((m[i * n + i] - 1.0).abs() < 1e-9);
        }
        assert!(covariance_magnitudes("block", 11, n, false).is_err());
        assert!(covariance_magnitudes("block", 0, MAX_HEATMAP_N + 1, false).is_err());
    }

    #[test]
    fn sweep_produces_three_curves() {
        let text = sweep(0.1, 32, 4, 1).unwrap();
        let table = cyclosep::curves::parse_json(&text).unwrap();
        assert_eq!(table.cells.len(), 3 * 23);
        assert_eq!(table.metadata.n, 32);
        assert!(sweep(0.1, 32, 0, 1).is_err());
        assert!(sweep(0.1, 1000, 4, 1).is_err());
    }
}
