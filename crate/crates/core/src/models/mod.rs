//! Cyclostationary complex Gaussian source models.
//!
//! Every model is described by its periodic autocovariance
//! `R(t, l) = E[x[t]·x*[t−l]]`, with `R(t + P, l) = R(t, l)`. Window covariances
//! are read straight from that function: for a window starting at offset `τ`,
//! `C(τ)[i, j] = R(i + τ, i − j)`.

mod block;
mod ofdm;
mod rrc;

pub use block::BlockCovModel;
pub use ofdm::OfdmModel;
pub use rrc::{rrc_taps, RrcModel};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Draws one proper complex Gaussian sample with unit total variance.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One of the three supported source processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceModel {
    Block(BlockCovModel),
    Rrc(RrcModel),
    Ofdm(OfdmModel),
}

/// Covariance of a length-N window at a known offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalCovariance {
    pub tau: usize,
    pub matrix: CMatrix,
}

/// Offset-averaged (Toeplitz) covariance of a length-N window.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCovariance {
    pub matrix: CMatrix,
}

/// Tolerance for the Toeplitz self-check of marginal covariances.
const TOEPLITZ_TOL: f64 = 1e-12;

impl SourceModel {
    pub fn name(&self) -> &'static str {
        match self {
            SourceModel::Block(_) => "block",
            SourceModel::Rrc(_) => "rrc",
            SourceModel::Ofdm(_) => "ofdm",
        }
    }

    /// Short identifier including the shape parameters.
    pub fn label(&self) -> String {
        match self {
            SourceModel::Block(m) => format!("block(P={},Nbuf={})", m.period(), m.buffer_length()),
            SourceModel::Rrc(m) => format!(
                "rrc(sps={},span={},rolloff={})",
                m.sps(),
                m.span_symbols(),
                m.rolloff()
            ),
            SourceModel::Ofdm(m) => format!(
                "ofdm(Nsc={},Ncp={},active={})",
                m.n_subcarriers(),
                m.cp_length(),
                m.active_set().len()
            ),
        }
    }

    pub fn period(&self) -> usize {
        match self {
            SourceModel::Block(m) => m.period(),
            SourceModel::Rrc(m) => m.sps(),
            SourceModel::Ofdm(m) => m.period(),
        }
    }

    pub fn power_scale(&self) -> f64 {
        match self {
            SourceModel::Block(m) => m.power_scale,
            SourceModel::Rrc(m) => m.power_scale,
            SourceModel::Ofdm(m) => m.power_scale,
        }
    }

    fn set_power_scale(&mut self, scale: f64) {
        match self {
            SourceModel::Block(m) => m.power_scale = scale,
            SourceModel::Rrc(m) => m.power_scale = scale,
            SourceModel::Ofdm(m) => m.power_scale = scale,
        }
    }

    /// Unscaled autocovariance at phase `r ∈ [0, P)` and lag `l`.
    fn raw_autocov(&self, r: usize, lag: usize) -> Complex64 {
        match self {
            SourceModel::Block(m) => m.raw_autocov(r, lag),
            SourceModel::Rrc(m) => m.raw_autocov(r, lag),
            SourceModel::Ofdm(m) => m.raw_autocov(r, lag),
        }
    }

    /// `R(t, l) = E[x[t]·x*[t−l]]` including the power scale, for any `t ≥ 0`.
    pub fn autocovariance(&self, t: usize, lag: usize) -> Complex64 {
        let s = self.power_scale();
        self.raw_autocov(t % self.period(), lag) * (s * s)
    }

    /// Mean of `R(t, 0)` over one period, ignoring the power scale.
    fn raw_power(&self) -> f64 {
        let p = self.period();
        (0..p).map(|r| self.raw_autocov(r, 0).re).sum::<f64>() / p as f64
    }

    /// Average power per sample, i.e. the diagonal of the marginal covariance.
    pub fn average_power(&self) -> f64 {
        let s = self.power_scale();
        self.raw_power() * s * s
    }

    /// Returns a copy whose power scale gives unit average power.
    pub fn normalize_power(&self) -> Result<SourceModel> {
        let p = self.raw_power();
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::ZeroPower(p));
        }
        let mut out = self.clone();
        out.set_power_scale(1.0 / p.sqrt());
        Ok(out)
    }

    fn check_tau(&self, tau: usize) -> Result<()> {
        let period = self.period();
        if tau >= period {
            return Err(Error::OffsetOutOfRange { tau, period });
        }
        Ok(())
    }

    /// Table of scaled `R(r, l)` for `r ∈ [0, P)`, `l ∈ [0, n)`.
    fn autocov_table(&self, n: usize) -> Vec<Complex64> {
        let s = self.power_scale();
        let s2 = s * s;
        let p = self.period();
        let mut table = Vec::with_capacity(p * n);
        for r in 0..p {
            for lag in 0..n {
                table.push(self.raw_autocov(r, lag) * s2);
            }
        }
        table
    }

    /// Covariance of the window `x[start], …, x[start + n − 1]` for any start.
    ///
    /// Only the phase `start mod P` enters, so windows one period apart are
    /// bit-identical.
    pub fn window_covariance(&self, start: usize, n: usize) -> CMatrix {
        let table = self.autocov_table(n);
        window_from_table(&table, self.period(), n, start)
    }

    /// Precomputed `R(r, l)` for all phases and lags below `n`, from which any
    /// window covariance of length `n` is assembled without re-evaluating the model.
    pub fn autocovariance_table(&self, n: usize) -> AutocovTable {
        AutocovTable {
            period: self.period(),
            n,
            data: self.autocov_table(n),
        }
    }

    pub fn conditional_covariance(&self, tau: usize, n: usize) -> Result<ConditionalCovariance> {
        self.check_tau(tau)?;
        check_len(n)?;
        Ok(ConditionalCovariance {
            tau,
            matrix: self.window_covariance(tau, n),
        })
    }

    /// All conditional covariances for `τ = 0, …, P − 1`.
    pub fn conditional_covariances(&self, n: usize) -> Result<Vec<ConditionalCovariance>> {
        check_len(n)?;
        let table = self.autocov_table(n);
        Ok((0..self.period())
            .map(|tau| ConditionalCovariance {
                tau,
                matrix: window_from_table(&table, self.period(), n, tau),
            })
            .collect())
    }

    pub fn marginal_covariance(&self, n: usize) -> Result<MarginalCovariance> {
        check_len(n)?;
        let p = self.period();
        let table = self.autocov_table(n);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            let row = m.row_mut(i);
            for tau in 0..p {
                let phase = (i + tau) % p;
                let r = &table[phase * n..phase * n + n];
                for (j, c) in row[..=i].iter_mut().enumerate() {
                    *c += r[i - j];
                }
            }
        }
        let inv_p = 1.0 / p as f64;
        for i in 0..n {
            for j in 0..=i {
                let v = m[(i, j)] * inv_p;
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        let defect = m.toeplitz_defect();
        if defect > TOEPLITZ_TOL {
            return Err(Error::Consistency(format!(
                "marginal covariance deviates from Toeplitz by {defect:e}"
            )));
        }
        Ok(MarginalCovariance { matrix: m })
    }

    /// Draws one length-`n` window starting at offset `tau` of a fresh realization.
    pub fn sample<R: Rng + ?Sized>(&self, tau: usize, n: usize, rng: &mut R) -> Result<Vec<Complex64>> {
        self.check_tau(tau)?;
        check_len(n)?;
        let mut x = match self {
            SourceModel::Block(m) => m.sample_raw(tau, n, rng)?,
            SourceModel::Rrc(m) => m.sample_raw(tau, n, rng),
            SourceModel::Ofdm(m) => m.sample_raw(tau, n, rng),
        };
        let s = self.power_scale();
        if s != 1.0 {
            for v in &mut x {
                *v *= s;
            }
        }
        Ok(x)
    }

    /// Checks the power scale; shape invariants are enforced on construction.
    pub fn validate(self) -> Result<SourceModel> {
        let s = self.power_scale();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!("power_scale must be positive, got {s}")));
        }
        Ok(self)
    }

    /// Parses a model config. A block model given only a seed has its
    /// generator drawn from that seed.
    pub fn from_json(text: &str) -> Result<SourceModel> {
        serde_json::from_str::<SourceModel>(text)?.validate()
    }
}

/// Scaled autocovariance samples for one model and window length.
#[derive(Debug, Clone)]
pub struct AutocovTable {
    period: usize,
    n: usize,
    data: Vec<Complex64>,
}

impl AutocovTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self, start: usize) -> CMatrix {
        window_from_table(&self.data, self.period, self.n, start)
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("window length must be at least 1".into()));
    }
    Ok(())
}

fn window_from_table(table: &[Complex64], period: usize, n: usize, start: usize) -> CMatrix {
    let mut c = CMatrix::zeros(n, n);
    for i in 0..n {
        let phase = (start + i) % period;
        let r = &table[phase * n..phase * n + n];
        for j in 0..=i {
            let v = r[i - j];
            c[(i, j)] = v;
            c[(j, i)] = v.conj();
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<SourceModel> {
        vec![
            SourceModel::Block(BlockCovModel::random(5, 40, 11).unwrap()),
            SourceModel::Rrc(RrcModel::new(0.5, 4, 4).unwrap()),
            SourceModel::Ofdm(OfdmModel::new(8, 2, None).unwrap()),
        ]
    }

    /// Smallest eigenvalue bound via Cholesky of a shifted matrix.
    fn is_psd(m: &CMatrix) -> bool {
        let max = (0..m.rows()).map(|i| m[(i, i)].re).fold(0.0, f64::max);
        let mut shifted = m.clone();
        shifted.add_diagonal(1e-9 * max.max(1e-300));
        crate::linalg::Cholesky::new(&shifted).is_ok()
    }

    #[test]
    fn conditional_covariances_are_hermitian_psd_and_periodic() {
        for model in models() {
            let model = model.normalize_power().unwrap();
            let p = model.period();
            for tau in 0..p {
                let c = model.conditional_covariance(tau, 24).unwrap().matrix;
                assert!(c.hermitian_defect() <= 1e-12, "{}", model.name());
                assert!(is_psd(&c), "{} tau={tau}", model.name());
                assert_eq!(model.window_covariance(tau + p, 24), c);
                assert_eq!(model.window_covariance(tau + 3 * p, 24), c);
            }
        }
    }

    #[test]
    fn marginal_is_average_of_conditionals_with_unit_diagonal() {
        for model in models() {
            let model = model.normalize_power().unwrap();
            let n = 17;
            let m = model.marginal_covariance(n).unwrap().matrix;
            let mut avg = CMatrix::zeros(n, n);
            let conds = model.conditional_covariances(n).unwrap();
            for c in &conds {
                avg.add_scaled(1.0 / conds.len() as f64, &c.matrix);
            }
            assert!(m.max_abs_diff(&avg) <= 1e-12);
            assert!(m.toeplitz_defect() <= 1e-12);
            for i in 0..n {
                assert!((m[(i, i)].re - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn period_one_marginal_equals_conditional() {
        let model = SourceModel::Block(BlockCovModel::random(1, 10, 4).unwrap());
        let c = model.conditional_covariance(0, 6).unwrap().matrix;
        let m = model.marginal_covariance(6).unwrap().matrix;
        assert_eq!(c, m);
    }

    #[test]
    fn offsets_out_of_range_are_rejected() {
        for model in models() {
            let p = model.period();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            assert!(matches!(
                model.conditional_covariance(p, 4),
                Err(Error::OffsetOutOfRange { .. })
            ));
            assert!(matches!(model.sample(p, 4, &mut rng), Err(Error::OffsetOutOfRange { .. })));
        }
    }

    #[test]
    fn normalization_is_idempotent_and_scales_inversely() {
        for model in models() {
            let once = model.normalize_power().unwrap();
            let twice = once.normalize_power().unwrap();
            assert!((twice.power_scale() / once.power_scale() - 1.0).abs() <= 1e-12);
            assert!((once.average_power() - 1.0).abs() <= 1e-12);
        }
        let base = BlockCovModel::random(3, 12, 9).unwrap();
        let doubled = BlockCovModel::new(3, base.block().scale(2.0), 12).unwrap();
        let a = SourceModel::Block(base).normalize_power().unwrap();
        let b = SourceModel::Block(doubled).normalize_power().unwrap();
        assert!((b.power_scale() / a.power_scale() - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn zero_power_model_fails_normalization() {
        let zero = BlockCovModel::new(3, CMatrix::zeros(3, 3), 12).unwrap();
        assert!(matches!(
            SourceModel::Block(zero).normalize_power(),
            Err(Error::ZeroPower(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        for model in models() {
            let a = model.sample(1, 30, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
            let b = model.sample(1, 30, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn json_round_trip_preserves_model() {
        for model in models() {
            let model = model.normalize_power().unwrap();
            let text = serde_json::to_string(&model).unwrap();
            assert_eq!(SourceModel::from_json(&text).unwrap(), model);
        }
    }

    #[test]
    fn block_config_with_seed_only_regenerates_generator() {
        let text = r#"{"kind":"block","period":4,"buffer_length":16,"seed":7}"#;
        let model = SourceModel::from_json(text).unwrap();
        assert_eq!(model, SourceModel::Block(BlockCovModel::random(4, 16, 7).unwrap()));
    }
}
