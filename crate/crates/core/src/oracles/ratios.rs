//! Reference laws for adjacent spacing ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::quadrature::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioKind {
    Poisson,
    GueSurmise,
    GoeSurmise,
}

impl std::str::FromStr for RatioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(RatioKind::Poisson),
            "gue" | "gue-surmise" => Ok(RatioKind::GueSurmise),
            "goe" | "goe-surmise" => Ok(RatioKind::GoeSurmise),
            other => Err(Error::InvalidParams(format!("unknown ratio law `{other}`"))),
        }
    }
}

/// Density of `r` for uncorrelated levels or for the three-level surmise.
/// Every kind satisfies `P(r) = P(1/r) / r^2`, which is used to fold
/// `[1, inf)` onto `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioReference {
    pub kind: RatioKind,
    norm: f64,
}

fn raw(kind: RatioKind, r: f64) -> f64 {
    match kind {
        RatioKind::Poisson => 1.0 / (1.0 + r).powi(2),
        RatioKind::GueSurmise => (r + r * r).powi(2) / (1.0 + r + r * r).powi(4),
        RatioKind::GoeSurmise => (r + r * r) / (1.0 + r + r * r).powf(2.5),
    }
}

const TOL: f64 = 1e-13;

pub fn ratio_reference(kind: RatioKind) -> Result<RatioReference> {
    let half = integrate(|r| raw(kind, r), 0.0, 1.0, TOL)?;
    Ok(RatioReference { kind, norm: 1.0 / (2.0 * half) })
}

impl RatioReference {
    pub fn pdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            0.0
        } else {
            self.norm * raw(self.kind, r)
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if self.kind == RatioKind::Poisson {
            return Ok(x / (1.0 + x));
        }
        if x <= 1.0 {
            integrate(|r| self.pdf(r), 0.0, x, TOL)
        } else {
            Ok(1.0 - self.cdf(1.0 / x)?)
        }
    }

    /// `<r^n>`, infinite where the tail makes it diverge.
    pub fn moment(&self, n: u32) -> Result<f64> {
        // tail ~ r^(n - decay) with decay 2, 3, 4
        let decay = match self.kind {
            RatioKind::Poisson => 2,
            RatioKind::GoeSurmise => 3,
            RatioKind::GueSurmise => 4,
        };
        if n as i32 >= decay - 1 {
            return Ok(f64::INFINITY);
        }
        let k = n as i32;
        integrate(|r| (r.powi(k) + r.powi(-k)) * self.pdf(r), 0.0, 1.0, TOL)
    }

    /// `int_0^cutoff r^n P(r) dr`.
    pub fn truncated_moment(&self, n: u32, cutoff: f64) -> Result<f64> {
        let k = n as i32;
        if cutoff <= 1.0 {
            return integrate(|r| r.powi(k) * self.pdf(r), 0.0, cutoff.max(0.0), TOL);
        }
        // substitute r = 1/u on [1, cutoff]
        let head = integrate(|r| r.powi(k) * self.pdf(r), 0.0, 1.0, TOL)?;
        let tail = integrate(|u| u.powi(-k) * self.pdf(u), 1.0 / cutoff, 1.0, TOL * cutoff.powi(k))?;
        Ok(head + tail)
    }

    /// `sigma_r^2 / <r>^2`.
    pub fn relative_variance(&self) -> Result<f64> {
        let m1 = self.moment(1)?;
        let m2 = self.moment(2)?;
        Ok(m2 / (m1 * m1) - 1.0)
    }

    /// Inverse CDF by bisection, for sampling.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("quantile needs p in [0, 1), got {p}")));
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        if self.kind == RatioKind::Poisson {
            return Ok(p / (1.0 - p));
        }
        if p > 0.5 {
            // F(x) = 1 - F(1/x)
            return Ok(1.0 / self.quantile(1.0 - p)?);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `256 pi^2 / (27 sqrt 3 - 4 pi)^2 - 1`, the relative ratio variance of
/// the unitary surmise.
pub fn gue_relative_variance_closed_form() -> f64 {
    let pi = std::f64::consts::PI;
    256.0 * pi * pi / (27.0 * 3f64.sqrt() - 4.0 * pi).powi(2) - 1.0
}
