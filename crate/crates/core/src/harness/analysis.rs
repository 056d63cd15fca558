//! Finite-size extrapolation, power-law fits and scaling collapse.

use serde::{Deserialize, Serialize};

use crate::ensembles::Beta;
use crate::error::{Error, Result};
use crate::stats::{linear_fit, LinearFit};

/// Least-squares line of `y` against `1 / (beta N)`; the intercept is the
/// infinite-size estimate.
pub fn extrapolate_large_n(values: &[(usize, f64)], beta: Beta) -> Result<LinearFit> {
    let mut sizes: Vec<usize> = values.iter().map(|v| v.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: sizes.len() });
    }
    let xs: Vec<f64> = values.iter().map(|(n, _)| 1.0 / (beta.value() * *n as f64)).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.1).collect();
    linear_fit(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub exponent_stderr: f64,
    pub points: usize,
    pub window: (f64, f64),
}

/// `Q = amplitude * x^exponent` by least squares on logarithms, using the
/// pairs with `x` inside the closed `window`.
pub fn fit_power_law(pairs: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    let inside: Vec<(f64, f64)> = pairs.iter().cloned().filter(|(x, _)| *x >= window.0 && *x <= window.1).collect();
    if inside.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: inside.len() });
    }
    if let Some(&(x, q)) = inside.iter().find(|(x, q)| !(*x > 0.0 && *q > 0.0)) {
        return Err(Error::NonPositive(if x > 0.0 { q } else { x }));
    }
    let lx: Vec<f64> = inside.iter().map(|p| p.0.ln()).collect();
    let lq: Vec<f64> = inside.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&lx, &lq)?;
    Ok(PowerLawFit {
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        exponent_stderr: fit.slope_stderr,
        points: inside.len(),
        window,
    })
}

/// One observable against `g_eff` at fixed `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub n: usize,
    /// `(g_eff, Q)`, increasing in `g_eff`.
    pub points: Vec<(f64, f64)>,
}

const COLLAPSE_GRID: usize = 48;

fn rescaled(curve: &Curve, beta: Beta, nu: f64, kappa: f64) -> Result<Vec<(f64, f64)>> {
    let bn = beta.value() * curve.n as f64;
    let mut out: Vec<(f64, f64)> = curve
        .points
        .iter()
        .map(|&(g, q)| {
            if !(g > 0.0 && q > 0.0) {
                return Err(Error::NonPositive(if g > 0.0 { q } else { g }));
            }
            // log of g bn^-kappa and of Q / (g^2 bn^nu)
            Ok((g.ln() - kappa * bn.ln(), q.ln() - 2.0 * g.ln() - nu * bn.ln()))
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> f64 {
    let k = curve.partition_point(|p| p.0 < x);
    if k == 0 {
        return curve[0].1;
    }
    if k >= curve.len() {
        return curve[curve.len() - 1].1;
    }
    let (x0, y0) = curve[k - 1];
    let (x1, y1) = curve[k];
    if x1 == x0 {
        y0
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Mean squared log-deviation of the rescaled curves
/// `Q / (g_eff^2 (beta N)^nu)` versus `g_eff (beta N)^-kappa` from their
/// pointwise median on the common domain; zero for a perfect collapse.
pub fn collapse_quality(curves: &[Curve], beta: Beta, nu: f64, kappa: f64) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: curves.len() });
    }
    let scaled: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| {
            if c.points.len() < 2 {
                return Err(Error::TooFewSamples { needed: 2, got: c.points.len() });
            }
            rescaled(c, beta, nu, kappa)
        })
        .collect::<Result<_>>()?;
    let lo = scaled.iter().map(|c| c[0].0).fold(f64::NEG_INFINITY, f64::max);
    let hi = scaled.iter().map(|c| c[c.len() - 1].0).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::NoOverlap);
    }
    let mut total = 0.0;
    for i in 0..COLLAPSE_GRID {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / COLLAPSE_GRID as f64;
        let mut ys: Vec<f64> = scaled.iter().map(|c| interpolate(c, x)).collect();
        let med = median(&mut ys.clone());
        total += ys.iter_mut().map(|y| (*y - med).powi(2)).sum::<f64>() / ys.len() as f64;
    }
    Ok(total / COLLAPSE_GRID as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub nu: f64,
    pub kappa: f64,
    pub quality: f64,
    pub converged: bool,
    /// The quality hardly depends on `kappa` at the optimum.
    pub degenerate: bool,
    pub iterations: usize,
}

const SIMPLEX_TOL: f64 = 1e-4;
const MAX_ITER: usize = 400;

/// Nelder-Mead minimization of [`collapse_quality`] over `(nu, kappa)`.
/// Returns the best point found; `converged` is false when the budget ran
/// out first. Starting points where the curves do not overlap are an
/// error; trial points without overlap are treated as infinitely bad.
pub fn optimize_exponents(curves: &[Curve], beta: Beta, start: (f64, f64)) -> Result<CollapseFit> {
    let f = |p: [f64; 2]| -> f64 {
        match collapse_quality(curves, beta, p[0], p[1]) {
            Ok(q) => q,
            Err(_) => f64::INFINITY,
        }
    };
    collapse_quality(curves, beta, start.0, start.1)?;
    let mut simplex = [[start.0, start.1], [start.0 + 0.1, start.1], [start.0, start.1 + 0.1]];
    let mut vals = simplex.map(f);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        let size = (1..3)
            .map(|i| ((simplex[i][0] - simplex[0][0]).powi(2) + (simplex[i][1] - simplex[0][1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        if size < SIMPLEX_TOL {
            converged = true;
            break;
        }
        let c = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |t: f64| [c[0] + t * (simplex[2][0] - c[0]), c[1] + t * (simplex[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let x = along(-0.5);
                (x, f(x))
            } else {
                let x = along(0.5);
                (x, f(x))
            };
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [(simplex[i][0] + simplex[0][0]) / 2.0, (simplex[i][1] + simplex[0][1]) / 2.0];
                    vals[i] = f(simplex[i]);
                }
            }
        }
    }
    let k = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("three vertices");
    let best = simplex[k];
    let q = vals[k];
    let h = 0.05;
    let dq = (f([best[0], best[1] + h]) - q).abs().max((f([best[0], best[1] - h]) - q).abs());
    let degenerate = dq <= 1e-10 * (1.0 + q);
    Ok(CollapseFit { nu: best[0], kappa: best[1], quality: q, converged, degenerate, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObservableTag {
    /// Real-part spread `X`.
    X,
    /// Spectral gap.
    Gap,
    /// Eigenvalue variance of the steady state.
    SteadyVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelClass {
    Single,
    Multiple,
}

/// Scaling exponents of one observable: `nu` in the weak, crossover and
/// strong regimes, the crossover power `lambda` and the regime boundaries
/// `kappa_lt`, `kappa_gt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentRecord {
    pub observable: ObservableTag,
    pub channels: ChannelClass,
    pub nu_p: Option<f64>,
    pub nu_c: Option<f64>,
    pub nu_d: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa_lt: Option<f64>,
    pub kappa_gt: Option<f64>,
}

pub const CONSTRAINT_TOL: f64 = 1e-12;

/// `lambda (kappa_gt - kappa_lt) - (nu_d - nu_p)`, and whether it vanishes
/// to [`CONSTRAINT_TOL`].
pub fn check_exponent_constraint(rec: &ExponentRecord) -> Result<(bool, f64)> {
    let get = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Missing(format!("exponent {name}")));
    let nu_p = get(rec.nu_p, "nu_p")?;
    get(rec.nu_c, "nu_c")?;
    let nu_d = get(rec.nu_d, "nu_d")?;
    let lambda = get(rec.lambda, "lambda")?;
    let klt = get(rec.kappa_lt, "kappa_lt")?;
    let kgt = get(rec.kappa_gt, "kappa_gt")?;
    let residual = lambda * (kgt - klt) - (nu_d - nu_p);
    Ok((residual.abs() <= CONSTRAINT_TOL, residual))
}

/// The tabulated exponents of `X`, the gap and the steady-state variance
/// for one and for several decay channels. The crossover power of the gap
/// does not exist for several channels and is left unset.
pub fn builtin_exponent_table() -> Vec<ExponentRecord> {
    use ChannelClass::*;
    use ObservableTag::*;
    let row = |observable, channels, nu: [f64; 3], lambda: Option<f64>, kappa: [f64; 2]| ExponentRecord {
        observable,
        channels,
        nu_p: Some(nu[0]),
        nu_c: Some(nu[1]),
        nu_d: Some(nu[2]),
        lambda,
        kappa_lt: Some(kappa[0]),
        kappa_gt: Some(kappa[1]),
    };
    vec![
        row(X, Single, [0.0, 0.5, 0.5], Some(2.0), [-0.25, 0.0]),
        row(Gap, Single, [0.5, 0.5, -1.5], Some(-8.0 / 3.0), [0.0, 0.75]),
        row(SteadyVariance, Single, [-3.0, -2.0, -1.0], Some(8.0 / 5.0), [-0.5, 0.75]),
        row(X, Multiple, [0.0, 0.5, 0.5], Some(2.0), [-0.25, 0.0]),
        row(Gap, Multiple, [0.5, 0.5, 0.5], None, [0.0, 0.0]),
        row(SteadyVariance, Multiple, [-3.0, -2.0, -2.0], Some(2.0), [-0.5, 0.0]),
    ]
}
