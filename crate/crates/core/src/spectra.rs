//! Exact diagonalization of the superoperator and the global spectral
//! observables: center of mass, spreads, gap, density cuts and marginals.

use ndarray::Array1;
use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::ensembles::ModelParams;
use crate::error::{Error, Result};
use crate::linalg::Hessenberg;
use crate::liouvillian::{HermitianBasis, Superoperator};
use crate::stats::{self, Histogram};

/// Dense eigensolver route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Real Hessenberg QR on the Hermitian-basis representation of `L`.
    #[default]
    RealRepresentation,
    /// Complex `zgeev` on the row-stacked matrix itself (with eigenvectors).
    Complex,
}

#[derive(Debug, Clone, Copy)]
pub struct DiagonalizeOptions {
    pub method: EigenMethod,
    /// Number of eigenpairs whose residual `||L v - lambda v|| / ||v||` is
    /// checked.
    pub residual_samples: usize,
    /// Report a degenerate zero mode instead of failing.
    pub allow_degenerate_zero: bool,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        DiagonalizeOptions { method: EigenMethod::default(), residual_samples: 10, allow_degenerate_zero: false }
    }
}

/// All `N^2` eigenvalues: the zero mode first, the rest by decreasing real
/// part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub max_residual: f64,
    pub zero_mode_index: usize,
    pub zero_mode_unique: bool,
    /// `||L||_F` of the diagonalized matrix.
    pub norm: f64,
    /// `Tr L`, kept to cross-check `sum(lambda)`.
    pub trace: C64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn tol_zero(&self) -> f64 {
        1e-10 * self.norm
    }

    pub fn zero_mode(&self) -> C64 {
        self.eigenvalues[self.zero_mode_index]
    }

    /// `|sum(lambda) - Tr L|`.
    pub fn trace_defect(&self) -> f64 {
        (self.eigenvalues.iter().sum::<C64>() - self.trace).norm()
    }

    /// Largest distance between an eigenvalue and the nearest conjugate of
    /// another eigenvalue, after greedy pairing.
    pub fn conjugation_defect(&self) -> f64 {
        conjugation_defect(&self.eigenvalues)
    }

    /// Builds a spectrum from raw eigenvalues (sorting, zero-mode checks).
    pub fn from_eigenvalues(mut eigenvalues: Vec<C64>, norm: f64, trace: C64, allow_degenerate_zero: bool) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Eigensolver("empty spectrum".into()));
        }
        let tol = 1e-10 * norm;
        // zero mode first (smallest modulus), the rest by decreasing real part
        let k = (0..eigenvalues.len()).min_by(|&a, &b| eigenvalues[a].norm().total_cmp(&eigenvalues[b].norm())).unwrap();
        eigenvalues.swap(0, k);
        sort_by_real_desc(&mut eigenvalues[1..]);
        let zero = eigenvalues[0];
        if zero.norm() > tol {
            return Err(Error::ZeroMode { value: format!("{zero}"), tol });
        }
        let separation = eigenvalues[1..].iter().map(|z| (z - zero).norm()).fold(f64::INFINITY, f64::min);
        let unique = separation > tol;
        if !unique && !allow_degenerate_zero {
            return Err(Error::DegenerateZeroMode { separation, tol });
        }
        Ok(Spectrum { eigenvalues, max_residual: 0.0, zero_mode_index: 0, zero_mode_unique: unique, norm, trace })
    }
}

fn sort_by_real_desc(v: &mut [C64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

pub(crate) fn conjugation_defect(values: &[C64]) -> f64 {
    let mut pool: Vec<C64> = values.iter().map(|z| z.conj()).collect();
    let mut worst: f64 = 0.0;
    for z in values {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (w - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty pool");
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}

fn sample_indices(len: usize, count: usize) -> Vec<usize> {
    let count = count.min(len);
    let mut idx: Vec<usize> = (0..count).map(|k| k * len / count.max(1)).collect();
    if len > 1 && count > 1 && !idx.contains(&1) {
        idx[1] = 1;
    }
    idx.sort_unstable();
    idx.dedup();
    idx
}

fn residual(superop: &Superoperator, v: &Array1<C64>, lambda: C64) -> f64 {
    let lv = superop.matrix.dot(v);
    let num = lv.iter().zip(v.iter()).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt();
    let den = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

/// Diagonalize with default options.
pub fn diagonalize(superop: &Superoperator) -> Result<Spectrum> {
    diagonalize_with(superop, &DiagonalizeOptions::default())
}

/// All eigenvalues of `L` by a dense non-Hermitian eigendecomposition, with
/// a residual check on a sample of eigenpairs and the zero-mode checks.
pub fn diagonalize_with(superop: &Superoperator, opts: &DiagonalizeOptions) -> Result<Spectrum> {
    let norm = superop.frobenius_norm();
    let trace = superop.trace();
    let tol = 1e-10 * norm;
    let (mut spectrum, max_residual) = match opts.method {
        EigenMethod::RealRepresentation => {
            let hess = Hessenberg::reduce(superop.real_representation())?;
            let values = hess.eigenvalues()?;
            let spectrum = Spectrum::from_eigenvalues(values, norm, trace, opts.allow_degenerate_zero)?;
            let basis = HermitianBasis::new(superop.n);
            let mut worst: f64 = 0.0;
            for k in sample_indices(spectrum.len(), opts.residual_samples) {
                let lambda = spectrum.eigenvalues[k];
                let xh = hess.inverse_iteration(lambda, 2);
                let x = hess.apply_q(&xh)?;
                let v = basis.expand(&x);
                worst = worst.max(residual(superop, &v, lambda));
            }
            (spectrum, worst)
        }
        EigenMethod::Complex => {
            let (values, vectors) = superop.matrix.eig()?;
            let raw: Vec<C64> = values.to_vec();
            let spectrum = Spectrum::from_eigenvalues(raw.clone(), norm, trace, opts.allow_degenerate_zero)?;
            let mut worst: f64 = 0.0;
            for k in sample_indices(spectrum.len(), opts.residual_samples) {
                let j = raw.iter().position(|z| *z == spectrum.eigenvalues[k]).expect("eigenvalue from the same solve");
                let v = vectors.column(j).to_owned();
                worst = worst.max(residual(superop, &v, raw[j]));
            }
            (spectrum, worst)
        }
    };
    spectrum.max_residual = max_residual;
    if let Some(bad) = spectrum.eigenvalues.iter().find(|z| z.re > tol) {
        return Err(Error::NotDissipative { re: bad.re, tol });
    }
    if max_residual > 1e-8 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Eigensolver(format!("eigenpair residual {max_residual:e} too large")));
    }
    Ok(spectrum)
}

/// Center of mass, spreads and gap of one spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Real part of the center of mass.
    pub r: f64,
    /// Imaginary part of the center of mass (diagnostic, ~0).
    pub r_im: f64,
    pub x: f64,
    pub y: f64,
    pub gap: f64,
    pub g_eff: f64,
}

/// `R = sum(lambda)/N^2`, `X^2 = sum Re(lambda - R)^2 / N^2`,
/// `Y^2 = sum Im(lambda)^2 / N^2` over all eigenvalues (zero mode
/// included); the gap is `-Re` of the runner-up after the zero mode.
pub fn summarize(spectrum: &Spectrum, g_eff: f64) -> SpectralSummary {
    let ev = &spectrum.eigenvalues;
    let m = ev.len() as f64;
    let center: C64 = ev.iter().sum::<C64>() / m;
    let x2 = ev.iter().map(|z| (z.re - center.re).powi(2)).sum::<f64>() / m;
    let y2 = ev.iter().map(|z| z.im.powi(2)).sum::<f64>() / m;
    let gap = ev
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != spectrum.zero_mode_index)
        .map(|(_, z)| z.re)
        .max_by(f64::total_cmp)
        .map(|re| -re)
        .unwrap_or(0.0);
    SpectralSummary { r: center.re, r_im: center.im, x: x2.sqrt(), y: y2.sqrt(), gap, g_eff }
}

pub fn summarize_params(spectrum: &Spectrum, params: &ModelParams) -> SpectralSummary {
    summarize(spectrum, params.geff())
}

/// Which line or projection a density refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityAxis {
    /// Strip around `Re(lambda) = c`; histogram of imaginary parts.
    ReEquals,
    /// Strip around `Im(lambda) = c`; histogram of real parts.
    ImEquals,
    /// All imaginary parts.
    ImagMarginal,
    /// All real parts.
    RealMarginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bins {
    Count(usize),
    /// Freedman-Diaconis rule on the selected sample.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCut {
    pub axis: DensityAxis,
    pub c: f64,
    pub strip_width: f64,
    pub histogram: Histogram,
    pub points: usize,
    pub empty: bool,
}

fn histogram_of(values: &[f64], bins: Bins, weight: f64) -> Histogram {
    let nb = match bins {
        Bins::Count(k) => k.max(1),
        Bins::Auto => stats::freedman_diaconis_bins(values, 10, 400),
    };
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        let pad = (lo.abs() * 1e-9).max(1e-300);
        (lo - pad, hi + pad)
    };
    Histogram::uniform(values, lo, hi, nb, weight)
}

/// Density of eigenvalues in the strip `|coordinate - c| <= strip_width/2`,
/// resolved along the orthogonal coordinate. Integrates to
/// `points / N^2`.
pub fn density_cut(spectrum: &Spectrum, axis: DensityAxis, c: f64, strip_width: f64, bins: Bins) -> Result<DensityCut> {
    if !(strip_width > 0.0) {
        return Err(Error::InvalidParams("strip width must be positive".into()));
    }
    let (select, project): (fn(&C64) -> f64, fn(&C64) -> f64) = match axis {
        DensityAxis::ReEquals => (|z| z.re, |z| z.im),
        DensityAxis::ImEquals => (|z| z.im, |z| z.re),
        _ => return Err(Error::InvalidParams("density_cut needs ReEquals or ImEquals".into())),
    };
    let values: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .filter(|z| (select(z) - c).abs() <= 0.5 * strip_width)
        .map(project)
        .collect();
    if values.is_empty() {
        return Ok(DensityCut {
            axis,
            c,
            strip_width,
            histogram: Histogram { edges: Vec::new(), counts: Vec::new(), density: Vec::new() },
            points: 0,
            empty: true,
        });
    }
    let histogram = histogram_of(&values, bins, 1.0 / spectrum.len() as f64);
    Ok(DensityCut { axis, c, strip_width, histogram, points: values.len(), empty: false })
}

/// The four standard cuts: `Re = R`, `Re = R + X`, `Im = 0`, `Im = Y`,
/// with strip width `max(X, Y) / 25`.
pub fn preset_cuts(spectrum: &Spectrum, summary: &SpectralSummary, bins: Bins) -> Result<Vec<DensityCut>> {
    let width = summary.x.max(summary.y) / 25.0;
    [
        (DensityAxis::ReEquals, summary.r),
        (DensityAxis::ReEquals, summary.r + summary.x),
        (DensityAxis::ImEquals, 0.0),
        (DensityAxis::ImEquals, summary.y),
    ]
    .into_iter()
    .map(|(axis, c)| density_cut(spectrum, axis, c, width, bins))
    .collect()
}

/// Imaginary or real parts of the eigenvalues, optionally without the zero
/// mode.
pub fn components(spectrum: &Spectrum, axis: DensityAxis, omit_zero: bool) -> Result<Vec<f64>> {
    let project: fn(&C64) -> f64 = match axis {
        DensityAxis::ImagMarginal => |z| z.im,
        DensityAxis::RealMarginal => |z| z.re,
        _ => return Err(Error::InvalidParams("components needs a marginal axis".into())),
    };
    Ok(spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(k, _)| !(omit_zero && *k == spectrum.zero_mode_index))
        .map(|(_, z)| project(z))
        .collect())
}

/// Normalized marginal density of imaginary or real parts.
pub fn marginal_density(spectrum: &Spectrum, axis: DensityAxis, bins: usize, omit_zero: bool) -> Result<DensityCut> {
    if bins < 10 {
        return Err(Error::InvalidParams(format!("need at least 10 bins, got {bins}")));
    }
    let values = components(spectrum, axis, omit_zero)?;
    let histogram = histogram_of(&values, Bins::Count(bins), 1.0 / values.len() as f64);
    Ok(DensityCut {
        axis,
        c: 0.0,
        strip_width: f64::INFINITY,
        points: values.len(),
        empty: values.is_empty(),
        histogram,
    })
}

/// Ensemble distribution of the gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDistribution {
    pub raw: Histogram,
    /// Histogram of `gap / <gap>`.
    pub scaled: Histogram,
    pub mean: f64,
    pub std: f64,
    /// `std / mean`.
    pub relative_width: f64,
}

pub fn gap_distribution(gaps: &[f64], bins: usize) -> Result<GapDistribution> {
    if gaps.len() < 20 {
        return Err(Error::TooFewSamples { needed: 20, got: gaps.len() });
    }
    let (mean, std) = stats::mean_std(gaps);
    let weight = 1.0 / gaps.len() as f64;
    let raw = histogram_of(gaps, Bins::Count(bins), weight);
    let scaled_values: Vec<f64> = gaps.iter().map(|g| g / mean).collect();
    let scaled = histogram_of(&scaled_values, Bins::Count(bins), weight);
    Ok(GapDistribution { raw, scaled, mean, std, relative_width: std / mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{Beta, HamiltonianMatrix, JumpOperatorSet, ModelParams, Realization};
    use crate::liouvillian::build_liouvillian;
    use approx::assert_abs_diff_eq;

    fn hand_spectrum() -> Spectrum {
        let ev = vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(-1.0, 1.0), C64::new(-1.0, -1.0)];
        Spectrum::from_eigenvalues(ev, 1.0, C64::new(-3.0, 0.0), false).unwrap()
    }

    #[test]
    fn hand_summary() {
        let s = summarize(&hand_spectrum(), 0.0);
        assert_abs_diff_eq!(s.r, -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(s.x * s.x, 3.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.y * s.y, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.gap, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn n1_spectrum_is_zero() {
        let p = ModelParams::new(1, Beta::Complex, 1, 1.0).unwrap();
        let real = Realization::sample(&p).unwrap();
        let l = build_liouvillian(&real.hamiltonian, &real.jumps).unwrap();
        let s = diagonalize(&l).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.eigenvalues[0].norm() < 1e-14);
    }

    #[test]
    fn unitary_case_has_degenerate_zero_and_differences() {
        let levels = [-1.2, 0.3, 0.5, 2.0];
        let h = HamiltonianMatrix::diagonal(&levels);
        let l = build_liouvillian(&h, &JumpOperatorSet::empty(Beta::Real)).unwrap();
        assert!(matches!(diagonalize(&l), Err(Error::DegenerateZeroMode { .. })));
        let opts = DiagonalizeOptions { allow_degenerate_zero: true, ..Default::default() };
        for method in [EigenMethod::RealRepresentation, EigenMethod::Complex] {
            let s = diagonalize_with(&l, &DiagonalizeOptions { method, ..opts }).unwrap();
            assert!(!s.zero_mode_unique);
            let mut expect: Vec<C64> = Vec::new();
            for &a in &levels {
                for &b in &levels {
                    expect.push(C64::new(0.0, -(a - b)));
                }
            }
            let mut got = s.eigenvalues.clone();
            sort_by_real_desc(&mut expect);
            got.sort_by(|a, b| a.im.total_cmp(&b.im));
            expect.sort_by(|a, b| a.im.total_cmp(&b.im));
            for (g, e) in got.iter().zip(&expect) {
                assert!((g - e).norm() < 1e-12);
            }
            let zeros = s.eigenvalues.iter().filter(|z| z.norm() < 1e-12).count();
            assert_eq!(zeros, 4);
            let sum = summarize(&s, 0.0);
            assert!(sum.x < 1e-12);
            assert!(sum.gap.abs() < 1e-12);
            let y2: f64 = expect.iter().map(|z| z.im * z.im).sum::<f64>() / 16.0;
            assert_abs_diff_eq!(sum.y * sum.y, y2, epsilon = 1e-12);
        }
    }

    #[test]
    fn both_methods_agree() {
        let p = ModelParams::new(4, Beta::Complex, 2, 0.5).unwrap().with_seed(3, 1);
        let real = Realization::sample(&p).unwrap();
        let l = build_liouvillian(&real.hamiltonian, &real.jumps).unwrap();
        let a = diagonalize(&l).unwrap();
        let b = diagonalize_with(&l, &DiagonalizeOptions { method: EigenMethod::Complex, ..Default::default() }).unwrap();
        assert!(a.max_residual < 1e-10 && b.max_residual < 1e-10);
        let mut pool = b.eigenvalues.clone();
        for z in &a.eigenvalues {
            let (k, d) = pool.iter().enumerate().map(|(k, w)| (k, (w - z).norm())).min_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
            assert!(d < 1e-9, "{z} unmatched ({d})");
            pool.swap_remove(k);
        }
        assert!(a.trace_defect() < 1e-8 * a.norm);
        assert!(a.conjugation_defect() < 1e-8 * a.norm);
    }

    #[test]
    fn cuts_and_marginals() {
        let s = hand_spectrum();
        let cut = density_cut(&s, DensityAxis::ReEquals, 5.0, 0.1, Bins::Count(10)).unwrap();
        assert!(cut.empty);
        let cut = density_cut(&s, DensityAxis::ReEquals, -1.0, 0.1, Bins::Count(10)).unwrap();
        assert_eq!(cut.points, 3);
        assert_abs_diff_eq!(cut.histogram.integral(), 0.75, epsilon = 1e-12);
        assert!(cut.histogram.edges.windows(2).all(|w| w[1] > w[0]));

        let m = marginal_density(&s, DensityAxis::ImagMarginal, 10, true).unwrap();
        assert_eq!(m.points, 3);
        let mass: Vec<f64> = m.histogram.counts.iter().map(|&c| c as f64 / 3.0).collect();
        assert_abs_diff_eq!(mass[0], 1.0 / 3.0);
        assert_abs_diff_eq!(mass[9], 1.0 / 3.0);
        assert_abs_diff_eq!(mass[5], 1.0 / 3.0);
        assert_abs_diff_eq!(m.histogram.integral(), 1.0, epsilon = 1e-12);
        assert!(marginal_density(&s, DensityAxis::ImagMarginal, 5, true).is_err());
    }

    #[test]
    fn gap_distribution_of_identical_gaps() {
        let gaps = vec![0.7; 25];
        let d = gap_distribution(&gaps, 10).unwrap();
        assert!(d.std < 1e-12);
        assert!(d.relative_width < 1e-12);
        assert!(gap_distribution(&gaps[..5], 10).is_err());
    }
}
