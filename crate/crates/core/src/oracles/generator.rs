//! Gap and spread formulas, the first-order classical rate matrix and the
//! law of its entries.

use ndarray::Array2;
use ndarray_linalg::{Eig, Eigh, UPLO};
use num_complex::Complex64 as C64;
use statrs::distribution::{Continuous, ContinuousCDF, Gamma};

use crate::ensembles::{HamiltonianMatrix, JumpOperatorSet, ModelParams};
use crate::error::{Error, Result};

fn check_r(params: &ModelParams) -> Result<()> {
    if params.r < 1 {
        return Err(Error::InvalidParams("gap formulas need r >= 1".into()));
    }
    Ok(())
}

/// `beta N g^2 (1 - sqrt r)^2`, the gap at strong dissipation.
pub fn gap_strong(params: &ModelParams) -> Result<f64> {
    check_r(params)?;
    Ok(params.beta_n() * params.g * params.g * (1.0 - (params.r as f64).sqrt()).powi(2))
}

/// `beta N r g^2`, the gap at weak dissipation; accurate as `r` grows.
pub fn gap_weak(params: &ModelParams) -> Result<f64> {
    check_r(params)?;
    Ok(params.beta_n() * params.r as f64 * params.g * params.g)
}

/// `4 beta N sqrt(r) g^2`: the real-part spread at strong dissipation up to
/// a constant of order one.
pub fn x_spread_strong(params: &ModelParams) -> Result<f64> {
    check_r(params)?;
    Ok(4.0 * params.beta_n() * (params.r as f64).sqrt() * params.g * params.g)
}

/// Rate matrix of a classical master equation `dp/dt = A p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalGenerator {
    pub a: Array2<f64>,
}

impl ClassicalGenerator {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.a.columns().into_iter().map(|c| c.sum()).collect()
    }

    /// Off-diagonal entries, column by column.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1));
        for m in 0..n {
            for k in 0..n {
                if k != m {
                    out.push(self.a[[k, m]]);
                }
            }
        }
        out
    }

    /// Eigenvalues, zero mode first then by decreasing real part.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let (mut ev, _) = self.a.eig()?;
        let mut v: Vec<C64> = ev.iter_mut().map(|z| *z).collect();
        v.sort_by(|a, b| b.re.total_cmp(&a.re));
        Ok(v)
    }

    /// `-Re` of the eigenvalue closest to zero after the stationary one.
    pub fn smallest_decay_rate(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev.get(1).map(|z| -z.re).unwrap_or(0.0))
    }
}

/// `A_nm = sum_l |W_nm|^2` off the diagonal, `A_mm = -sum_{k != m} A_km`,
/// in whatever basis the jump operators are written.
pub fn classical_generator(jumps: &JumpOperatorSet) -> Result<ClassicalGenerator> {
    let n = match jumps.operators.first() {
        Some(w) => w.nrows(),
        None => return Err(Error::Missing("at least one jump operator (or use zero_generator)".into())),
    };
    Ok(classical_generator_from(n, &jumps.operators))
}

fn classical_generator_from(n: usize, ops: &[Array2<C64>]) -> ClassicalGenerator {
    let mut a = Array2::<f64>::zeros((n, n));
    for w in ops {
        for ((i, j), z) in w.indexed_iter() {
            if i != j {
                a[[i, j]] += z.norm_sqr();
            }
        }
    }
    for m in 0..n {
        let s: f64 = (0..n).filter(|&k| k != m).map(|k| a[[k, m]]).sum();
        a[[m, m]] = -s;
    }
    ClassicalGenerator { a }
}

/// The generator with the jump operators rotated to the eigenbasis of `H`,
/// where it describes the perturbative dynamics of populations.
pub fn classical_generator_in_eigenbasis(h: &HamiltonianMatrix, jumps: &JumpOperatorSet) -> Result<ClassicalGenerator> {
    let n = h.dim();
    if jumps.is_empty() {
        return Ok(ClassicalGenerator { a: Array2::zeros((n, n)) });
    }
    let (_, u) = h.matrix.eigh(UPLO::Lower)?;
    let uh = u.t().mapv(|z| z.conj());
    let rotated: Vec<Array2<C64>> = jumps.operators.iter().map(|w| uh.dot(w).dot(&u)).collect();
    Ok(classical_generator_from(n, &rotated))
}

/// Chi-square law of the off-diagonal rates: `k = r beta` degrees of
/// freedom with scale `2 g^2`.
#[derive(Debug, Clone, Copy)]
pub struct Chi2EntryLaw {
    pub k: f64,
    pub g: f64,
    gamma: Gamma,
}

pub fn chi2_entry_law(k: f64, g: f64) -> Result<Chi2EntryLaw> {
    if !(k >= 1.0 && g > 0.0) {
        return Err(Error::InvalidParams(format!("chi-square law needs k >= 1 and g > 0, got k={k}, g={g}")));
    }
    let gamma = Gamma::new(k / 2.0, 1.0 / (2.0 * g * g)).map_err(|e| Error::InvalidParams(e.to_string()))?;
    Ok(Chi2EntryLaw { k, g, gamma })
}

impl Chi2EntryLaw {
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.gamma.pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.gamma.cdf(x)
    }

    /// `k g^2`.
    pub fn mean(&self) -> f64 {
        self.k * self.g * self.g
    }

    /// `2 k g^4`.
    pub fn variance(&self) -> f64 {
        2.0 * self.k * self.g.powi(4)
    }
}
