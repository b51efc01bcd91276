use num_complex::Complex64;

use super::check_len;
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CMatrix, Cholesky};
use crate::mixture::KappaLevel;
use crate::models::SourceModel;

/// Bytes of one complex matrix entry as counted against the memory budget.
const ENTRY_BYTES: u128 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankOptions {
    /// Upper bound on cached factor storage, `P_s·P_b·|K|·N²` complex entries.
    pub memory_budget_bytes: u128,
    /// Posterior weights below this are left out of the MMSE sum.
    pub posterior_floor: f64,
}

impl Default for BankOptions {
    fn default() -> Self {
        Self {
            memory_budget_bytes: 8 << 30,
            posterior_floor: 1e-12,
        }
    }
}

/// A point `(τ_s, τ_b, κ)` of the latent grid; `kappa_index` refers to the
/// bank's κ list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub tau_s: usize,
    pub tau_b: usize,
    pub kappa_index: usize,
}

/// Observation covariance `C_y = C_s(τ_s) + κ²·C_b(τ_b) + σ²·I`.
fn observation_covariance(cs: &CMatrix, cb: &CMatrix, kappa: f64, sigma: f64) -> CMatrix {
    let mut cy = cs.clone();
    cy.add_scaled(kappa * kappa, cb);
    cy.add_diagonal(sigma * sigma);
    cy
}

/// Conditional-mean filter `H = C_s(τ_s)·C_y⁻¹` for one known triple, kept
/// in factored form.
#[derive(Debug, Clone)]
pub struct OracleFilter {
    cs: CMatrix,
    chol: Cholesky,
}

impl OracleFilter {
    pub fn new(
        source: &SourceModel,
        interference: &SourceModel,
        tau_s: usize,
        tau_b: usize,
        kappa: f64,
        sigma: f64,
        n: usize,
    ) -> Result<Self> {
        let cs = source.conditional_covariance(tau_s, n)?.matrix;
        let cb = interference.conditional_covariance(tau_b, n)?.matrix;
        Self::from_covariances(cs, &cb, kappa, sigma)
    }

    pub fn from_covariances(cs: CMatrix, cb: &CMatrix, kappa: f64, sigma: f64) -> Result<Self> {
        let chol = Cholesky::new(&observation_covariance(&cs, cb, kappa, sigma))?;
        Ok(Self { cs, chol })
    }

    pub fn estimate(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.cs.rows(), y)?;
        Ok(self.cs.mul_vec(&self.chol.solve(y)))
    }

    /// `(1/N)·trace(C_s − C_s·C_y⁻¹·C_s)`
    pub fn mse_analytic(&self) -> f64 {
        analytic_mse(&self.cs, &self.chol)
    }
}

fn analytic_mse(cs: &CMatrix, chol: &Cholesky) -> f64 {
    let n = cs.rows() as f64;
    (cs.trace().re - chol.whitened_frobenius_sqr(cs)) / n
}

#[derive(Debug, Clone)]
struct BankEntry {
    chol: Cholesky,
    log_det: f64,
    log_prior: f64,
}

/// Precomputed factorizations of `C_y` over the whole latent grid.
#[derive(Debug, Clone)]
pub struct FilterBank {
    n: usize,
    sigma: f64,
    period_s: usize,
    period_b: usize,
    kappas: Vec<f64>,
    source_cov: Vec<CMatrix>,
    entries: Vec<BankEntry>,
    posterior_floor: f64,
}

/// Normalized log posterior over the grid, in bank order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    pub log_posterior: Vec<f64>,
    period_b: usize,
    n_kappa: usize,
}

impl PosteriorTable {
    pub fn probability(&self, triple: Triple) -> f64 {
        let idx = (triple.tau_s * self.period_b + triple.tau_b) * self.n_kappa + triple.kappa_index;
        self.log_posterior[idx].exp()
    }

    pub fn total_mass(&self) -> f64 {
        self.log_posterior.iter().map(|l| l.exp()).sum()
    }

    pub fn argmax(&self) -> Triple {
        let idx = self
            .log_posterior
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty grid");
        let kappa_index = idx % self.n_kappa;
        let rest = idx / self.n_kappa;
        Triple {
            tau_s: rest / self.period_b,
            tau_b: rest % self.period_b,
            kappa_index,
        }
    }
}

/// Bookkeeping from one posterior-weighted estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseStats {
    pub used_triples: usize,
    pub skipped_mass: f64,
}

/// Required cache size in bytes for a grid at window length `n`.
pub fn required_bytes(period_s: usize, period_b: usize, n_kappa: usize, n: usize) -> u128 {
    period_s as u128 * period_b as u128 * n_kappa as u128 * (n as u128) * (n as u128) * ENTRY_BYTES
}

impl FilterBank {
    pub fn build(
        source: &SourceModel,
        interference: &SourceModel,
        kappa_levels: &[KappaLevel],
        sigma: f64,
        n: usize,
        options: BankOptions,
    ) -> Result<Self> {
        if kappa_levels.is_empty() {
            return Err(Error::InvalidParameter("filter bank needs at least one kappa level".into()));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        let (period_s, period_b) = (source.period(), interference.period());
        let n_kappa = kappa_levels.len();
        let required = required_bytes(period_s, period_b, n_kappa, n);
        if required > options.memory_budget_bytes {
            return Err(Error::Infeasible {
                triples: period_s * period_b * n_kappa,
                n,
                required_bytes: required,
                budget_bytes: options.memory_budget_bytes,
            });
        }
        let source_cov: Vec<CMatrix> = source
            .conditional_covariances(n)?
            .into_iter()
            .map(|c| c.matrix)
            .collect();
        let interference_cov: Vec<CMatrix> = interference
            .conditional_covariances(n)?
            .into_iter()
            .map(|c| c.matrix)
            .collect();
        let log_offsets = -((period_s * period_b) as f64).ln();
        let kappas: Vec<f64> = kappa_levels.iter().map(|l| l.kappa).collect();

        let build_one = |idx: usize| -> Result<BankEntry> {
            let kappa_index = idx % n_kappa;
            let tau_b = (idx / n_kappa) % period_b;
            let tau_s = idx / (n_kappa * period_b);
            let kappa = kappas[kappa_index];
            let cy = observation_covariance(&source_cov[tau_s], &interference_cov[tau_b], kappa, sigma);
            let chol = Cholesky::new(&cy).map_err(|e| Error::TripleFactorization {
                tau_s,
                tau_b,
                kappa,
                source: Box::new(e),
            })?;
            let log_det = chol.log_det();
            if !log_det.is_finite() {
                return Err(Error::Consistency(format!(
                    "log-determinant not finite for (tau_s={tau_s}, tau_b={tau_b}, kappa={kappa})"
                )));
            }
            Ok(BankEntry {
                chol,
                log_det,
                log_prior: log_offsets + kappa_levels[kappa_index].prior.ln(),
            })
        };
        let grid = period_s * period_b * n_kappa;
        #[cfg(feature = "parallel")]
        let entries: Result<Vec<BankEntry>> = {
            use rayon::prelude::*;
            (0..grid).into_par_iter().map(build_one).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let entries: Result<Vec<BankEntry>> = (0..grid).map(build_one).collect();

        Ok(Self {
            n,
            sigma,
            period_s,
            period_b,
            kappas,
            source_cov,
            entries: entries?,
            posterior_floor: options.posterior_floor,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn periods(&self) -> (usize, usize) {
        (self.period_s, self.period_b)
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    pub fn grid_size(&self) -> usize {
        self.entries.len()
    }

    pub fn source_covariance(&self, tau_s: usize) -> &CMatrix {
        &self.source_cov[tau_s]
    }

    pub fn factor(&self, triple: Triple) -> &Cholesky {
        &self.entries[self.index(triple)].chol
    }

    pub fn log_prior(&self, triple: Triple) -> f64 {
        self.entries[self.index(triple)].log_prior
    }

    pub fn posterior_floor(&self) -> f64 {
        self.posterior_floor
    }

    pub fn set_posterior_floor(&mut self, floor: f64) {
        self.posterior_floor = floor;
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        (0..self.entries.len()).map(move |idx| self.triple_at(idx))
    }

    fn triple_at(&self, idx: usize) -> Triple {
        let n_kappa = self.kappas.len();
        Triple {
            tau_s: idx / (n_kappa * self.period_b),
            tau_b: (idx / n_kappa) % self.period_b,
            kappa_index: idx % n_kappa,
        }
    }

    fn index(&self, t: Triple) -> usize {
        (t.tau_s * self.period_b + t.tau_b) * self.kappas.len() + t.kappa_index
    }

    /// Resolves `(τ_s, τ_b, κ)` to a grid point; `κ` must match a level to 1e−12 relative.
    pub fn locate(&self, tau_s: usize, tau_b: usize, kappa: f64) -> Result<Triple> {
        let kappa_index = self
            .kappas
            .iter()
            .position(|&k| (k - kappa).abs() <= 1e-12 * k.abs())
            .filter(|_| tau_s < self.period_s && tau_b < self.period_b)
            .ok_or(Error::NotInGrid { tau_s, tau_b, kappa })?;
        Ok(Triple {
            tau_s,
            tau_b,
            kappa_index,
        })
    }

    /// Two-stage solve `C_s(τ_s)·L⁻ᴴ·L⁻¹·y`.
    pub fn oracle_estimate(&self, y: &[Complex64], tau_s: usize, tau_b: usize, kappa: f64) -> Result<Vec<Complex64>> {
        check_len(self.n, y)?;
        let t = self.locate(tau_s, tau_b, kappa)?;
        let x = self.factor(t).solve(y);
        Ok(self.source_cov[t.tau_s].mul_vec(&x))
    }

    pub fn oracle_mse_analytic(&self, tau_s: usize, tau_b: usize, kappa: f64) -> Result<f64> {
        let t = self.locate(tau_s, tau_b, kappa)?;
        Ok(analytic_mse(&self.source_cov[t.tau_s], self.factor(t)))
    }

    /// Whitened observation `L⁻¹·y` and unnormalized log posterior per triple.
    fn whitened(&self, y: &[Complex64]) -> Vec<(Vec<Complex64>, f64)> {
        let one = |e: &BankEntry| {
            let w = e.chol.forward(y);
            let log_p = e.log_prior - norm_sqr(&w) - e.log_det;
            (w, log_p)
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.entries.par_iter().map(one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.entries.iter().map(one).collect()
        }
    }

    fn normalize(log_p: &mut [f64]) {
        let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = log_p.iter().map(|l| (l - max).exp()).sum();
        let log_z = max + sum.ln();
        for l in log_p.iter_mut() {
            *l -= log_z;
        }
    }

    /// `log p(τ_s, τ_b, κ | y)` under the proper complex Gaussian likelihood.
    pub fn log_posterior(&self, y: &[Complex64]) -> Result<PosteriorTable> {
        check_len(self.n, y)?;
        let mut log_p: Vec<f64> = self.whitened(y).into_iter().map(|(_, l)| l).collect();
        Self::normalize(&mut log_p);
        Ok(PosteriorTable {
            log_posterior: log_p,
            period_b: self.period_b,
            n_kappa: self.kappas.len(),
        })
    }

    pub fn mmse_estimate(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.mmse_estimate_with_stats(y).map(|(s, _)| s)
    }

    /// Posterior-weighted sum of oracle estimates. Terms sharing `τ_s` are
    /// accumulated before the multiplication by `C_s(τ_s)`.
    pub fn mmse_estimate_with_stats(&self, y: &[Complex64]) -> Result<(Vec<Complex64>, MmseStats)> {
        check_len(self.n, y)?;
        let mut whitened = self.whitened(y);
        let mut log_p: Vec<f64> = whitened.iter().map(|(_, l)| *l).collect();
        Self::normalize(&mut log_p);

        let zero = Complex64::new(0.0, 0.0);
        let mut per_offset: Vec<Option<Vec<Complex64>>> = vec![None; self.period_s];
        let mut stats = MmseStats {
            used_triples: 0,
            skipped_mass: 0.0,
        };
        for (idx, ((w, _), lp)) in whitened.iter_mut().zip(&log_p).enumerate() {
            let p = lp.exp();
            if p < self.posterior_floor {
                stats.skipped_mass += p;
                continue;
            }
            stats.used_triples += 1;
            let t = self.triple_at(idx);
            self.entries[idx].chol.backward_in_place(w);
            let acc = per_offset[t.tau_s].get_or_insert_with(|| vec![zero; self.n]);
            for (a, x) in acc.iter_mut().zip(w.iter()) {
                *a += x * p;
            }
        }
        let mut estimate = vec![zero; self.n];
        for (tau_s, acc) in per_offset.iter().enumerate() {
            if let Some(acc) = acc {
                for (e, v) in estimate.iter_mut().zip(self.source_cov[tau_s].mul_vec(acc)) {
                    *e += v;
                }
            }
        }
        if stats.skipped_mass > 0.0 {
            log::trace!(
                "mmse: skipped {} triples holding posterior mass {:e}",
                self.entries.len() - stats.used_triples,
                stats.skipped_mass
            );
        }
        Ok((estimate, stats))
    }

    /// Parts needed to persist the bank: `(σ, periods, κ levels, C_s(τ_s) list,
    /// per-triple (factor, log prior))`.
    #[allow(clippy::type_complexity)]
    pub(crate) fn parts(&self) -> (f64, usize, usize, &[f64], &[CMatrix], Vec<(&CMatrix, f64)>) {
        (
            self.sigma,
            self.period_s,
            self.period_b,
            &self.kappas,
            &self.source_cov,
            self.entries.iter().map(|e| (e.chol.factor(), e.log_prior)).collect(),
        )
    }

    pub(crate) fn from_parts(
        sigma: f64,
        period_s: usize,
        period_b: usize,
        kappas: Vec<f64>,
        source_cov: Vec<CMatrix>,
        factors: Vec<(CMatrix, f64)>,
        options: BankOptions,
    ) -> Result<Self> {
        let n = source_cov.first().map(|c| c.rows()).unwrap_or(0);
        if source_cov.len() != period_s || factors.len() != period_s * period_b * kappas.len() {
            return Err(Error::Corrupt("filter bank grid does not match its periods".into()));
        }
        let entries = factors
            .into_iter()
            .map(|(f, log_prior)| {
                let chol = Cholesky::from_factor(f)?;
                Ok(BankEntry {
                    log_det: chol.log_det(),
                    chol,
                    log_prior,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            sigma,
            period_s,
            period_b,
            kappas,
            source_cov,
            entries,
            posterior_floor: options.posterior_floor,
        })
    }
}
