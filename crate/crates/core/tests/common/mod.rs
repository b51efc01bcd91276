#![allow(dead_code)]

use cyclosep::linalg::CMatrix;
use cyclosep::mixture::{uniform_levels_from_sir, MixtureConfig};
use cyclosep::models::{complex_normal, BlockCovModel, SourceModel};
use num_complex::Complex64;
use rand::Rng;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Inverse and `ln|det|` by Gauss-Jordan elimination with partial pivoting.
pub fn dense_inverse(a: &CMatrix) -> (CMatrix, f64) {
    let n = a.rows();
    let mut m: Vec<Vec<Complex64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { ZERO }).collect())
        .collect();
    let mut log_abs_det = 0.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm())).unwrap();
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        log_abs_det += p.norm().ln();
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                for j in 0..n {
                    let (mc, ic) = (m[col][j], inv[col][j]);
                    m[r][j] -= f * mc;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    (CMatrix::from_fn(n, n, |i, j| inv[i][j]), log_abs_det)
}

pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn noise<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n).map(|_| complex_normal(rng)).collect()
}

/// Covariance of `s + κ·b + σ·z` at a fixed triple.
pub fn observation_cov(cfg: &MixtureConfig, tau_s: usize, tau_b: usize, kappa: f64) -> (CMatrix, CMatrix) {
    let cs = cfg.source.conditional_covariance(tau_s, cfg.n).unwrap().matrix;
    let cb = cfg.interference.conditional_covariance(tau_b, cfg.n).unwrap().matrix;
    let cy = CMatrix::from_fn(cfg.n, cfg.n, |i, j| {
        let d = if i == j { cfg.sigma * cfg.sigma } else { 0.0 };
        cs[(i, j)] + cb[(i, j)] * (kappa * kappa) + d
    });
    (cs, cy)
}

/// Dense `C_s·C_y⁻¹·y`.
pub fn dense_oracle(cfg: &MixtureConfig, y: &[Complex64], tau_s: usize, tau_b: usize, kappa: f64) -> Vec<Complex64> {
    let (cs, cy) = observation_cov(cfg, tau_s, tau_b, kappa);
    let (inv, _) = dense_inverse(&cy);
    cs.mul_vec(&inv.mul_vec(y))
}

/// Conditional mean by enumerating every triple with dense inverses and
/// explicit Bayes weights `prior·det(C_y)⁻¹·exp(−yᴴC_y⁻¹y)`.
pub fn brute_force_mmse(cfg: &MixtureConfig, y: &[Complex64]) -> Vec<Complex64> {
    let mut terms = Vec::new();
    for ts in 0..cfg.source.period() {
        for tb in 0..cfg.interference.period() {
            for level in &cfg.kappa_levels {
                let (cs, cy) = observation_cov(cfg, ts, tb, level.kappa);
                let (inv, log_det) = dense_inverse(&cy);
                let x = inv.mul_vec(y);
                let quad = cdot(y, &x).re;
                let grid = (cfg.source.period() * cfg.interference.period()) as f64;
                let log_w = (level.prior / grid).ln() - quad - log_det;
                terms.push((log_w, cs.mul_vec(&x)));
            }
        }
    }
    let max = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = terms.iter().map(|t| (t.0 - max).exp()).sum();
    let mut out = vec![ZERO; y.len()];
    for (lw, est) in &terms {
        let w = (lw - max).exp() / total;
        for (o, e) in out.iter_mut().zip(est) {
            *o += e * w;
        }
    }
    out
}

/// N=6 toy problem with two-sample periods and two SIR levels.
pub fn toy_config(sigma: f64) -> MixtureConfig {
    let src = SourceModel::Block(BlockCovModel::random(2, 8, 61).unwrap()).normalize_power().unwrap();
    let int = SourceModel::Block(BlockCovModel::random(2, 8, 62).unwrap()).normalize_power().unwrap();
    MixtureConfig {
        source: src,
        interference: int,
        n: 6,
        sigma,
        kappa_levels: uniform_levels_from_sir(&[0.0, 3.0]),
    }
}

/// Accumulates `x_i·x_j*` over draws and reports, against an analytic
/// covariance, the largest deviation in units of the per-entry standard error.
/// Real and imaginary parts are tested separately; entries whose samples have
/// zero spread must match to 1e-12.
pub struct CovarianceAccumulator {
    n: usize,
    count: usize,
    sum: Vec<Complex64>,
    sum_sq_re: Vec<f64>,
    sum_sq_im: Vec<f64>,
}

impl CovarianceAccumulator {
    pub fn new(n: usize) -> Self {
        let len = n * (n + 1) / 2;
        Self {
            n,
            count: 0,
            sum: vec![ZERO; len],
            sum_sq_re: vec![0.0; len],
            sum_sq_im: vec![0.0; len],
        }
    }

    pub fn push(&mut self, x: &[Complex64]) {
        assert_eq!(x.len(), self.n);
        let mut k = 0;
        for i in 0..self.n {
            for j in 0..=i {
                let p = x[i] * x[j].conj();
                self.sum[k] += p;
                self.sum_sq_re[k] += p.re * p.re;
                self.sum_sq_im[k] += p.im * p.im;
                k += 1;
            }
        }
        self.count += 1;
    }

    pub fn max_z(&self, analytic: &CMatrix) -> f64 {
        let m = self.count as f64;
        let z = |sum: f64, sq: f64, target: f64| {
            let mean = sum / m;
            let var = (sq / m - mean * mean).max(0.0) * m / (m - 1.0);
            let se = (var / m).sqrt();
            let dev = (mean - target).abs();
            if se == 0.0 {
                if dev <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                dev / se
            }
        };
        let mut worst: f64 = 0.0;
        let mut k = 0;
        for i in 0..self.n {
            for j in 0..=i {
                let a = analytic[(i, j)];
                worst = worst
                    .max(z(self.sum[k].re, self.sum_sq_re[k], a.re))
                    .max(z(self.sum[k].im, self.sum_sq_im[k], a.im));
                k += 1;
            }
        }
        worst
    }
}

/// Sample mean and its standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
