use num_complex::Complex64;

use super::check_len;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Cholesky};
use crate::mixture::KappaLevel;
use crate::models::SourceModel;

/// Linear MMSE filter `W = Č_s·[Č_s + E[κ²]·Č_b + σ²·I]⁻¹` built from the
/// offset-averaged covariances.
#[derive(Debug, Clone)]
pub struct LmmseFilter {
    w: CMatrix,
}

impl LmmseFilter {
    /// `E[κ²]` is taken under the prior of `kappa_levels`.
    pub fn build(
        source: &SourceModel,
        interference: &SourceModel,
        kappa_levels: &[KappaLevel],
        sigma: f64,
        n: usize,
    ) -> Result<Self> {
        let mean_k2 = kappa_levels.iter().map(|l| l.prior * l.kappa * l.kappa).sum();
        Self::build_with_mean_kappa_sqr(source, interference, mean_k2, sigma, n)
    }

    pub fn build_with_mean_kappa_sqr(
        source: &SourceModel,
        interference: &SourceModel,
        mean_kappa_sqr: f64,
        sigma: f64,
        n: usize,
    ) -> Result<Self> {
        let cs = source.marginal_covariance(n)?.matrix;
        let cb = interference.marginal_covariance(n)?.matrix;
        Self::from_covariances(&cs, &cb, mean_kappa_sqr, sigma)
    }

    pub fn from_covariances(cs: &CMatrix, cb: &CMatrix, mean_kappa_sqr: f64, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if !(mean_kappa_sqr.is_finite() && mean_kappa_sqr >= 0.0) {
            return Err(Error::InvalidParameter(format!("E[kappa^2] must be >= 0, got {mean_kappa_sqr}")));
        }
        if cs.rows() != cb.rows() || !cs.is_square() || !cb.is_square() {
            return Err(Error::DimensionMismatch {
                expected: cs.rows(),
                actual: cb.rows(),
            });
        }
        let mut cy = cs.clone();
        cy.add_scaled(mean_kappa_sqr, cb);
        cy.add_diagonal(sigma * sigma);
        let chol = Cholesky::new(&cy)?;
        // Č_s and C_y are Hermitian, so W = Č_s·C_y⁻¹ = (C_y⁻¹·Č_s)ᴴ.
        let w = chol.solve_matrix(cs).adjoint();
        Ok(Self { w })
    }

    pub fn n(&self) -> usize {
        self.w.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.w
    }

    pub fn estimate(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n(), y)?;
        Ok(self.w.mul_vec(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BlockCovModel, RrcModel};

    fn rrc() -> SourceModel {
        SourceModel::Rrc(RrcModel::new(0.5, 4, 4).unwrap())
            .normalize_power()
            .unwrap()
    }

    fn block(p: usize, seed: u64) -> SourceModel {
        SourceModel::Block(BlockCovModel::random(p, 60, seed).unwrap())
            .normalize_power()
            .unwrap()
    }

    #[test]
    fn no_interference_no_noise_passes_through() {
        let s = block(3, 1);
        let f = LmmseFilter::build_with_mean_kappa_sqr(&s, &rrc(), 0.0, 0.0, 10).unwrap();
        assert!(f.matrix().max_abs_diff(&CMatrix::identity(10)) < 1e-9);
    }

    #[test]
    fn identical_sources_split_evenly() {
        let s = block(4, 2);
        let f = LmmseFilter::build_with_mean_kappa_sqr(&s, &s, 1.0, 0.0, 12).unwrap();
        assert!(f.matrix().max_abs_diff(&CMatrix::identity(12).scale(0.5)) < 1e-9);
    }

    #[test]
    fn singular_noiseless_system_is_reported() {
        let zero = SourceModel::Block(BlockCovModel::new(2, CMatrix::zeros(2, 2), 20).unwrap());
        let err = LmmseFilter::build_with_mean_kappa_sqr(&zero, &zero, 1.0, 0.0, 6).unwrap_err();
        assert!(matches!(err, Error::SingularCovariance { index: 0, .. }), "{err}");
        assert!(err.to_string().contains("pivot"));
    }

    #[test]
    fn estimate_is_linear() {
        let f = LmmseFilter::build_with_mean_kappa_sqr(&block(3, 5), &rrc(), 1.0, 0.1, 9).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 9];
        assert_eq!(f.estimate(&zero).unwrap(), zero);
        let y: Vec<Complex64> = (0..9).map(|k| Complex64::new(k as f64, -0.5)).collect();
        let alpha = Complex64::new(0.3, -1.7);
        let ay: Vec<Complex64> = y.iter().map(|v| v * alpha).collect();
        let lhs = f.estimate(&ay).unwrap();
        let rhs: Vec<Complex64> = f.estimate(&y).unwrap().iter().map(|v| v * alpha).collect();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(matches!(f.estimate(&y[..4]), Err(Error::DimensionMismatch { .. })));
    }
}
