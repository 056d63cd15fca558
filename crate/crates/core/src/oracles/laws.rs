//! Semicircle and Marchenko-Pastur densities and their convolutions.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::ensembles::Beta;
use crate::error::{Error, Result};

use super::quadrature::{integrate, integrate_pieces};

/// Absolute tolerance of the inner convolution integrals.
pub const INNER_TOL: f64 = 1e-11;

/// A one-dimensional density with compact support.
pub trait Density {
    fn support(&self) -> (f64, f64);
    fn density(&self, x: f64) -> Result<f64>;
}

/// `(x, density(x))` on a caller grid, for plot overlays.
pub fn tabulate<D: Density + ?Sized>(law: &D, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter().map(|&x| Ok((x, law.density(x)?))).collect()
}

/// Writes a tabulation as two-column CSV.
pub fn write_table<W: std::io::Write>(table: &[(f64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "x,density")?;
    for (x, y) in table {
        writeln!(out, "{x:.17e},{y:.17e}")?;
    }
    Ok(())
}

/// Unit-mass semicircle on `[-E*, E*]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemicircleLaw {
    pub e_star: f64,
}

impl SemicircleLaw {
    pub fn new(e_star: f64) -> Result<Self> {
        if !(e_star > 0.0 && e_star.is_finite()) {
            return Err(Error::InvalidParams(format!("semicircle endpoint must be positive, got {e_star}")));
        }
        Ok(SemicircleLaw { e_star })
    }

    /// Endpoint `sqrt(2 beta N)` of the Hamiltonian ensemble.
    pub fn for_hamiltonian(n: usize, beta: Beta) -> Self {
        SemicircleLaw { e_star: (2.0 * beta.value() * n as f64).sqrt() }
    }

    pub fn pdf(&self, e: f64) -> f64 {
        let r2 = self.e_star * self.e_star;
        if e.abs() >= self.e_star {
            0.0
        } else {
            2.0 / (PI * r2) * (r2 - e * e).sqrt()
        }
    }

    pub fn cdf(&self, e: f64) -> f64 {
        if e <= -self.e_star {
            return 0.0;
        }
        if e >= self.e_star {
            return 1.0;
        }
        let r2 = self.e_star * self.e_star;
        0.5 + (e * (r2 - e * e).sqrt() + r2 * (e / self.e_star).asin()) / (PI * r2)
    }

    pub fn variance(&self) -> f64 {
        self.e_star * self.e_star / 4.0
    }
}

impl Density for SemicircleLaw {
    fn support(&self) -> (f64, f64) {
        (-self.e_star, self.e_star)
    }
    fn density(&self, x: f64) -> Result<f64> {
        Ok(self.pdf(x))
    }
}

/// `int f(E) dE` over `[lo, hi]` with `E = mid + half sin(phi)`, which
/// tames square-root endpoint behavior.
fn arcsine_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    integrate(|phi| f(mid + half * phi.sin()) * half * phi.cos(), -FRAC_PI_2, FRAC_PI_2, tol)
}

/// Law of `E1 - E2` for independent semicircle variables: the density of
/// imaginary parts of the spectrum in the unitary limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemicircleConvolution {
    pub base: SemicircleLaw,
}

pub fn semicircle_self_convolution(e_star: f64) -> Result<SemicircleConvolution> {
    Ok(SemicircleConvolution { base: SemicircleLaw::new(e_star)? })
}

impl SemicircleConvolution {
    /// `int rho(E2) F(E2 + x) dE2`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let w = &self.base;
        let e = w.e_star;
        if x <= -2.0 * e {
            return Ok(0.0);
        }
        if x >= 2.0 * e {
            return Ok(1.0);
        }
        // F(E2 + x) = 1 once E2 >= E* - x
        let cut = (e - x).min(e);
        let lo = (-e - x).max(-e);
        let head = arcsine_integral(|t| w.pdf(t) * w.cdf(t + x), lo, cut, INNER_TOL)?;
        let tail = if cut < e { 1.0 - w.cdf(cut) } else { 0.0 };
        Ok((head + tail).clamp(0.0, 1.0))
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.base.variance()
    }
}

impl Density for SemicircleConvolution {
    fn support(&self) -> (f64, f64) {
        (-2.0 * self.base.e_star, 2.0 * self.base.e_star)
    }
    fn density(&self, x: f64) -> Result<f64> {
        let w = &self.base;
        let e = w.e_star;
        let x = x.abs();
        if x >= 2.0 * e {
            return Ok(0.0);
        }
        arcsine_integral(|t| w.pdf(t) * w.pdf(t + x), -e, e - x, INNER_TOL)
    }
}

/// Marchenko-Pastur law with endpoints `(1 +- sqrt r)^2` and mean `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchenkoPasturLaw {
    pub r: f64,
}

impl MarchenkoPasturLaw {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::InvalidParams(format!("Marchenko-Pastur needs r >= 1, got {r}")));
        }
        Ok(MarchenkoPasturLaw { r })
    }

    pub fn endpoints(&self) -> (f64, f64) {
        let s = self.r.sqrt();
        ((1.0 - s).powi(2), (1.0 + s).powi(2))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.endpoints();
        if x <= lo || x >= hi || x <= 0.0 {
            return 0.0;
        }
        ((hi - x) * (x - lo)).sqrt() / (2.0 * PI * x)
    }

    /// `int f(x) rho(x) dx` through `x = xi_- + (xi_+ - xi_-) sin^2 theta`,
    /// under which the measure is `Delta^2 sin^2 cos^2 / (pi x) dtheta`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        self.expectation_until(f, self.endpoints().1, tol)
    }

    fn expectation_until<F: Fn(f64) -> f64>(&self, f: F, upper: f64, tol: f64) -> Result<f64> {
        let (lo, hi) = self.endpoints();
        let d = hi - lo;
        let upper = upper.clamp(lo, hi);
        let theta_max = ((upper - lo) / d).sqrt().asin();
        integrate(
            |th| {
                let (s, c) = th.sin_cos();
                let x = lo + d * s * s;
                if self.r == 1.0 {
                    // x = 4 s^2 cancels exactly
                    f(x) * 4.0 * c * c / PI
                } else {
                    f(x) * d * d * s * s * c * c / (PI * x)
                }
            },
            0.0,
            theta_max,
            tol,
        )
    }

    pub fn moment(&self, n: i32) -> Result<f64> {
        self.expectation(|x| x.powi(n), 1e-12)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.expectation_until(|_| 1.0, x, 1e-12)
    }
}

impl Density for MarchenkoPasturLaw {
    fn support(&self) -> (f64, f64) {
        self.endpoints()
    }
    fn density(&self, x: f64) -> Result<f64> {
        Ok(self.pdf(x))
    }
}

/// Law of `-(nu1 + nu2) / 2` for independent Marchenko-Pastur variables:
/// the density of the real parts at strong dissipation, in units of
/// `beta N g^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpConvolution {
    pub base: MarchenkoPasturLaw,
}

/// The single-channel case.
pub fn mp_convolution_density() -> MpConvolution {
    MpConvolution { base: MarchenkoPasturLaw { r: 1.0 } }
}

impl MpConvolution {
    pub fn new(r: f64) -> Result<Self> {
        Ok(MpConvolution { base: MarchenkoPasturLaw::new(r)? })
    }

    /// `int f(x) rho(x) dx` over the support, split where the inner
    /// integration window changes shape.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        let (xm, xp) = self.base.endpoints();
        let kink = -0.5 * (xm + xp);
        let mut pts = vec![lo, kink, hi];
        pts.dedup();
        let mut err = None;
        let v = integrate_pieces(
            |x| match self.density(x) {
                Ok(d) => f(x) * d,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            &pts,
            tol,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    pub fn moment(&self, n: i32) -> Result<f64> {
        self.expectation(|x| x.powi(n), 1e-9)
    }
}

impl Density for MpConvolution {
    fn support(&self) -> (f64, f64) {
        let (xm, xp) = self.base.endpoints();
        (-xp, -xm)
    }

    /// `2 int rho(nu) rho(-nu - 2x) dnu` with `nu = lo + (hi - lo) sin^2`.
    fn density(&self, x: f64) -> Result<f64> {
        let (xm, xp) = self.base.endpoints();
        let s = -2.0 * x;
        let lo = xm.max(s - xp);
        let hi = xp.min(s - xm);
        if hi <= lo {
            return Ok(0.0);
        }
        let d = hi - lo;
        let mp = &self.base;
        let v = integrate(
            |th| {
                let (sn, cs) = th.sin_cos();
                let nu = lo + d * sn * sn;
                mp.pdf(nu) * mp.pdf(s - nu) * 2.0 * d * sn * cs
            },
            0.0,
            FRAC_PI_2,
            INNER_TOL,
        )?;
        Ok(2.0 * v)
    }
}

pub fn catalan(n: u64) -> f64 {
    let mut c = 1.0;
    for k in 0..n {
        c = c * 2.0 * (2 * k + 1) as f64 / (k + 2) as f64;
    }
    c
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn semicircle_normalization_and_variance() {
        let w = SemicircleLaw::new(2.5).unwrap();
        let mass = integrate(|x| w.pdf(x), -2.5, 2.5, 1e-12).unwrap();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
        let var = integrate(|x| x * x * w.pdf(x), -2.5, 2.5, 1e-12).unwrap();
        assert_abs_diff_eq!(var, w.variance(), epsilon = 1e-9);
        assert_abs_diff_eq!(w.cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w.cdf(1.0), integrate(|x| w.pdf(x), -2.5, 1.0, 1e-13).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn catalan_numbers() {
        let c: Vec<f64> = (0..6).map(catalan).collect();
        assert_eq!(c, vec![1.0, 1.0, 2.0, 5.0, 14.0, 42.0]);
        assert_eq!(binomial(5, 2), 10.0);
    }

    #[test]
    fn mp_r1_moments_are_catalan() {
        let mp = MarchenkoPasturLaw::new(1.0).unwrap();
        for n in 0..6 {
            assert_abs_diff_eq!(mp.moment(n).unwrap(), catalan(n as u64), epsilon = 1e-9);
        }
    }

    #[test]
    fn mp_general_r_mass_and_mean() {
        for r in [2.0, 3.0, 10.0] {
            let mp = MarchenkoPasturLaw::new(r).unwrap();
            assert_abs_diff_eq!(mp.moment(0).unwrap(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(mp.moment(1).unwrap(), r, epsilon = 1e-9);
            assert_abs_diff_eq!(mp.cdf(mp.endpoints().1).unwrap(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn convolution_support_matches_endpoints() {
        let c = mp_convolution_density();
        assert_eq!(c.support(), (-4.0, 0.0));
        assert_eq!(c.density(0.5).unwrap(), 0.0);
        assert_eq!(c.density(-4.5).unwrap(), 0.0);
    }
}
