//! The stationary state: extraction, purity, the effective Hamiltonian
//! `-log rho` and its adjacent spacing ratios.

use ndarray::{Array1, Array2};
use ndarray_linalg::{FactorizeInto, ReciprocalConditionNum, Solve, EigValsh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::{devectorize, vectorize, HermitianBasis, Superoperator};
use crate::spectra::Spectrum;
use crate::stats::{self, Histogram};

/// Positivity tolerance on the eigenvalues of the stationary state.
pub const POSITIVITY_TOL: f64 = -1e-8;
/// Default cutoff below which `-log p` is not taken.
pub const DEFAULT_P_MIN: f64 = 1e-12;
/// Spacings below this are merged.
pub const MERGE_SPACING: f64 = 1e-14;

// reciprocal condition number below which the bordered system is treated
// as singular, i.e. the zero mode as degenerate
const RCOND_SINGULAR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub rho: Array2<C64>,
    pub trace: f64,
    pub min_eigenvalue: f64,
    /// Eigenvalues `p_i` of `rho`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `||L vec(rho)||`.
    pub residual: f64,
}

impl SteadyState {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Hermitize, fix sign and trace, check positivity.
    pub fn from_matrix(rho: Array2<C64>) -> Result<Self> {
        let n = rho.nrows();
        if n == 0 || rho.ncols() != n {
            return Err(Error::Dimension { expected: "non-empty square matrix".into(), found: format!("{:?}", rho.dim()) });
        }
        let mut h = (&rho + &rho.t().mapv(|z| z.conj())) * C64::new(0.5, 0.0);
        let tr: C64 = h.diag().sum();
        if tr.re.abs() < f64::MIN_POSITIVE {
            return Err(Error::LinearSolver("stationary vector has zero trace".into()));
        }
        h.mapv_inplace(|z| z / tr.re);
        let p = h.eigvalsh(UPLO::Lower)?.to_vec();
        let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < POSITIVITY_TOL {
            return Err(Error::Positivity { min });
        }
        let trace = h.diag().sum().re;
        Ok(SteadyState { rho: h, trace, min_eigenvalue: min, eigenvalues: p, residual: 0.0 })
    }
}

/// Stationary state of a generator whose spectrum has been computed; fails
/// if the spectrum reports a degenerate zero mode.
pub fn extract_steady_state(superop: &Superoperator, spectrum: &Spectrum) -> Result<SteadyState> {
    if !spectrum.zero_mode_unique {
        let separation = spectrum
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != spectrum.zero_mode_index)
            .map(|(_, z)| (z - spectrum.zero_mode()).norm())
            .fold(f64::INFINITY, f64::min);
        return Err(Error::DegenerateZeroMode { separation, tol: spectrum.tol_zero() });
    }
    solve_steady_state(superop)
}

/// Stationary state from the kernel of `L`, found by a bordered linear
/// solve in the Hermitian basis: the first row of the real representation
/// is the (vanishing) trace functional and is replaced by the trace
/// constraint.
pub fn solve_steady_state(superop: &Superoperator) -> Result<SteadyState> {
    let n = superop.n;
    let norm = superop.frobenius_norm();
    if n == 1 {
        let rho = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        return SteadyState::from_matrix(rho);
    }
    let mut a = superop.real_representation();
    let dim = n * n;
    a.row_mut(0).fill(0.0);
    a[[0, 0]] = 1.0;
    let mut b = Array1::<f64>::zeros(dim);
    b[0] = 1.0 / (n as f64).sqrt();
    // an exactly singular factorization means the same as a tiny rcond
    let singular = || Error::DegenerateZeroMode { separation: 0.0, tol: RCOND_SINGULAR };
    let lu = a.factorize_into().map_err(|_| singular())?;
    let rcond = lu.rcond().map_err(|_| singular())?;
    if !(rcond > RCOND_SINGULAR) {
        return Err(Error::DegenerateZeroMode { separation: rcond, tol: RCOND_SINGULAR });
    }
    let x = lu.solve_into(b)?;
    let v = HermitianBasis::new(n).expand(x.as_slice().expect("contiguous"));
    let mut ss = SteadyState::from_matrix(devectorize(&v, n))?;
    let lv = superop.matrix.dot(&vectorize(&ss.rho));
    let residual = lv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rho_norm = ss.rho.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let bound = 1e-8 * norm * rho_norm;
    if residual > bound {
        return Err(Error::Residual { residual, bound });
    }
    ss.residual = residual;
    Ok(ss)
}

/// Purity `Tr rho^2` and the variance of the eigenvalues of `rho`
/// (population variance), which satisfy `P0 - 1/N = N sigma2`.
pub fn purity_and_variance(ss: &SteadyState) -> (f64, f64) {
    let n = ss.eigenvalues.len() as f64;
    let purity: f64 = ss.rho.iter().map(|z| z.norm_sqr()).sum();
    let mean = 1.0 / n;
    let sigma2 = ss.eigenvalues.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
    let defect = (purity - 1.0 / n - n * sigma2).abs();
    if defect > 1e-12 {
        log::warn!("purity identity off by {defect:e}");
    }
    (purity, sigma2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHamiltonian {
    /// `-log p_i`, ascending.
    pub epsilons: Vec<f64>,
    /// Eigenvalues at or below the cutoff.
    pub discarded_count: usize,
}

/// `epsilon_i = -log p_i` for every `p_i > p_min`.
pub fn effective_hamiltonian(ss: &SteadyState, p_min: f64) -> Result<EffectiveHamiltonian> {
    if !(p_min > 0.0) {
        return Err(Error::InvalidParams(format!("p_min must be positive, got {p_min}")));
    }
    let mut epsilons: Vec<f64> = ss.eigenvalues.iter().filter(|&&p| p > p_min).map(|p| -p.ln()).collect();
    let discarded_count = ss.eigenvalues.len() - epsilons.len();
    if epsilons.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: epsilons.len() });
    }
    epsilons.sort_by(f64::total_cmp);
    Ok(EffectiveHamiltonian { epsilons, discarded_count })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStatistics {
    /// `r_i = s_i / s_{i-1}` with `s_i = epsilon_{i+1} - epsilon_i`.
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// `<r> / sigma_r`.
    pub statistic: f64,
    /// Display histogram on `[0, r_max]`, normalized to all ratios.
    pub histogram: Histogram,
    /// Levels merged into a neighbor because their spacing was below
    /// [`MERGE_SPACING`].
    pub merged: usize,
}

pub fn spacing_ratios(eff: &EffectiveHamiltonian) -> Result<RatioStatistics> {
    spacing_ratios_with(&eff.epsilons, 10.0, 50)
}

/// Ratios of adjacent spacings of sorted `levels`. Moments use every ratio;
/// only the histogram is cut at `r_max`.
pub fn spacing_ratios_with(levels: &[f64], r_max: f64, bins: usize) -> Result<RatioStatistics> {
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut kept: Vec<f64> = Vec::with_capacity(sorted.len());
    let mut merged = 0;
    for e in sorted {
        match kept.last() {
            Some(&last) if e - last < MERGE_SPACING => merged += 1,
            _ => kept.push(e),
        }
    }
    if kept.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: kept.len() });
    }
    let spacings: Vec<f64> = kept.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = spacings.windows(2).map(|s| s[1] / s[0]).collect();
    Ok(ratio_statistics(ratios, r_max, bins, merged))
}

fn ratio_statistics(ratios: Vec<f64>, r_max: f64, bins: usize, merged: usize) -> RatioStatistics {
    let (mean, std) = population_mean_std(&ratios);
    let histogram = Histogram::uniform(&ratios, 0.0, r_max, bins, 1.0 / ratios.len() as f64);
    RatioStatistics { mean, std, statistic: mean / std, histogram, ratios, merged }
}

fn population_mean_std(xs: &[f64]) -> (f64, f64) {
    let m = stats::mean(xs);
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    (m, v.sqrt())
}

/// Ratios of several realizations pooled into one set of statistics.
pub fn pool_ratios(sets: &[RatioStatistics]) -> Result<RatioStatistics> {
    let ratios: Vec<f64> = sets.iter().flat_map(|s| s.ratios.iter().cloned()).collect();
    if ratios.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let (r_max, bins) = sets
        .first()
        .map(|s| (*s.histogram.edges.last().unwrap_or(&10.0), s.histogram.counts.len().max(1)))
        .unwrap_or((10.0, 50));
    let merged = sets.iter().map(|s| s.merged).sum();
    Ok(ratio_statistics(ratios, r_max, bins, merged))
}

/// `<r> / sigma_r` over the pooled ratios; needs at least 1000 of them.
pub fn ratio_moment_statistic(sets: &[RatioStatistics]) -> Result<f64> {
    let total: usize = sets.iter().map(|s| s.ratios.len()).sum();
    if total < 1000 {
        return Err(Error::TooFewSamples { needed: 1000, got: total });
    }
    Ok(pool_ratios(sets)?.statistic)
}
