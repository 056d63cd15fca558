//! Thin wrappers over the LAPACK Hessenberg routines used by the dense
//! eigensolver, plus inverse iteration on a Hessenberg matrix.

use std::os::raw::{c_char, c_int};

use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Orthogonal Hessenberg factorization `A = Q H Q^T` as returned by `dgehrd`:
/// `H` in the upper Hessenberg part of `factor`, the reflectors below it.
pub struct Hessenberg {
    n: usize,
    factor: Vec<f64>,
    tau: Vec<f64>,
}

fn lapack_int(n: usize) -> Result<c_int> {
    c_int::try_from(n).map_err(|_| Error::Eigensolver(format!("dimension {n} exceeds LAPACK int")))
}

impl Hessenberg {
    /// Reduce a square matrix; it must be stored column-major.
    pub fn reduce(a: Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension { expected: "square matrix".into(), found: format!("{:?}", a.dim()) });
        }
        let a = if a.t().is_standard_layout() { a } else { to_fortran(&a) };
        let factor = a.into_raw_vec_and_offset().0;
        let mut hess = Hessenberg { n, factor, tau: vec![0.0; n.saturating_sub(1).max(1)] };
        if n <= 1 {
            return Ok(hess);
        }
        let ni = lapack_int(n)?;
        let (ilo, ihi) = (1, ni);
        let mut info = 0;
        let mut query = 0.0;
        unsafe {
            lapack_sys::dgehrd_(&ni, &ilo, &ihi, hess.factor.as_mut_ptr(), &ni, hess.tau.as_mut_ptr(), &mut query, &-1, &mut info);
        }
        let lwork = (query as usize).max(n);
        let mut work = vec![0.0; lwork];
        let lw = lapack_int(lwork)?;
        unsafe {
            lapack_sys::dgehrd_(&ni, &ilo, &ihi, hess.factor.as_mut_ptr(), &ni, hess.tau.as_mut_ptr(), work.as_mut_ptr(), &lw, &mut info);
        }
        if info != 0 {
            return Err(Error::Eigensolver(format!("dgehrd info={info}")));
        }
        Ok(hess)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)` of the Hessenberg matrix `H`.
    #[inline]
    pub fn h(&self, i: usize, j: usize) -> f64 {
        if i > j + 1 {
            0.0
        } else {
            self.factor[j * self.n + i]
        }
    }

    /// All eigenvalues through the Hessenberg QR algorithm (`dhseqr`).
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let n = self.n;
        if n == 0 {
            return Ok(Vec::new());
        }
        if n == 1 {
            return Ok(vec![C64::new(self.factor[0], 0.0)]);
        }
        let mut hm: Vec<f64> = vec![0.0; n * n];
        for j in 0..n {
            let top = (j + 2).min(n);
            hm[j * n..j * n + top].copy_from_slice(&self.factor[j * n..j * n + top]);
        }
        let ni = lapack_int(n)?;
        let (ilo, ihi) = (1, ni);
        let mut wr = vec![0.0; n];
        let mut wi = vec![0.0; n];
        let mut z = [0.0f64; 1];
        let ldz: c_int = 1;
        let job = b'E' as c_char;
        let compz = b'N' as c_char;
        let mut info = 0;
        let mut query = 0.0;
        unsafe {
            lapack_sys::dhseqr_(
                &job, &compz, &ni, &ilo, &ihi, hm.as_mut_ptr(), &ni, wr.as_mut_ptr(), wi.as_mut_ptr(),
                z.as_mut_ptr(), &ldz, &mut query, &-1, &mut info,
            );
        }
        let lwork = (query as usize).max(n);
        let mut work = vec![0.0; lwork];
        let lw = lapack_int(lwork)?;
        unsafe {
            lapack_sys::dhseqr_(
                &job, &compz, &ni, &ilo, &ihi, hm.as_mut_ptr(), &ni, wr.as_mut_ptr(), wi.as_mut_ptr(),
                z.as_mut_ptr(), &ldz, work.as_mut_ptr(), &lw, &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Eigensolver(format!("dhseqr failed to converge (info={info})")));
        }
        Ok(wr.into_iter().zip(wi).map(|(re, im)| C64::new(re, im)).collect())
    }

    /// `Q x` for a complex vector `x`.
    pub fn apply_q(&self, x: &[C64]) -> Result<Vec<C64>> {
        let n = self.n;
        if n <= 1 {
            return Ok(x.to_vec());
        }
        // two real columns: re and im
        let mut c: Vec<f64> = x.iter().map(|z| z.re).chain(x.iter().map(|z| z.im)).collect();
        let ni = lapack_int(n)?;
        let two: c_int = 2;
        let (ilo, ihi) = (1, ni);
        let side = b'L' as c_char;
        let trans = b'N' as c_char;
        let mut info = 0;
        let mut query = 0.0;
        unsafe {
            lapack_sys::dormhr_(
                &side, &trans, &ni, &two, &ilo, &ihi, self.factor.as_ptr(), &ni, self.tau.as_ptr(), c.as_mut_ptr(),
                &ni, &mut query, &-1, &mut info,
            );
        }
        let lwork = (query as usize).max(2);
        let mut work = vec![0.0; lwork];
        let lw = lapack_int(lwork)?;
        unsafe {
            lapack_sys::dormhr_(
                &side, &trans, &ni, &two, &ilo, &ihi, self.factor.as_ptr(), &ni, self.tau.as_ptr(), c.as_mut_ptr(),
                &ni, work.as_mut_ptr(), &lw, &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Eigensolver(format!("dormhr info={info}")));
        }
        Ok((0..n).map(|i| C64::new(c[i], c[n + i])).collect())
    }

    /// Eigenvector of `H` for the (approximate) eigenvalue `lambda` by inverse
    /// iteration. `O(n^2)` per step thanks to the Hessenberg structure.
    pub fn inverse_iteration(&self, lambda: C64, steps: usize) -> Vec<C64> {
        let n = self.n;
        let scale = (0..n).map(|j| (0..(j + 2).min(n)).map(|i| self.h(i, j).abs()).sum::<f64>()).fold(0.0, f64::max);
        let floor = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        let lu = HessenbergLu::new(self, lambda, floor);
        let mut x = vec![C64::new(1.0, 0.0); n];
        for (i, xi) in x.iter_mut().enumerate() {
            // deterministic, generic start vector
            *xi = C64::new(1.0 + ((i * 7919) % 97) as f64 / 97.0, 0.0);
        }
        for _ in 0..steps.max(1) {
            x = lu.solve(&x);
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                break;
            }
            for z in x.iter_mut() {
                *z /= norm;
            }
        }
        x
    }
}

/// LU with adjacent-row partial pivoting of `H - lambda I`, `H` upper
/// Hessenberg. Row-major dense storage of the upper triangle.
struct HessenbergLu {
    n: usize,
    u: Vec<C64>,
    // multiplier and whether rows k, k+1 were swapped at step k
    steps: Vec<(C64, bool)>,
}

impl HessenbergLu {
    fn new(h: &Hessenberg, lambda: C64, floor: f64) -> Self {
        let n = h.n;
        let mut u = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                u[i * n + j] = C64::new(h.h(i, j), 0.0);
            }
            u[i * n + i] -= lambda;
        }
        let mut steps = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n.saturating_sub(1) {
            let swap = u[(k + 1) * n + k].norm() > u[k * n + k].norm();
            if swap {
                for j in k..n {
                    u.swap(k * n + j, (k + 1) * n + j);
                }
            }
            if u[k * n + k].norm() < floor {
                u[k * n + k] = C64::new(floor, 0.0);
            }
            let m = u[(k + 1) * n + k] / u[k * n + k];
            u[(k + 1) * n + k] = C64::new(0.0, 0.0);
            for j in (k + 1)..n {
                let t = u[k * n + j];
                u[(k + 1) * n + j] -= m * t;
            }
            steps.push((m, swap));
        }
        if n > 0 && u[(n - 1) * n + n - 1].norm() < floor {
            u[(n - 1) * n + n - 1] = C64::new(floor, 0.0);
        }
        HessenbergLu { n, u, steps }
    }

    fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut y = b.to_vec();
        for (k, &(m, swap)) in self.steps.iter().enumerate() {
            if swap {
                y.swap(k, k + 1);
            }
            let t = y[k];
            y[k + 1] -= m * t;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.u[i * n + j] * y[j];
            }
            y[i] = s / self.u[i * n + i];
        }
        y
    }
}

pub(crate) fn to_fortran(a: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros(a.dim().f());
    out.assign(a);
    out
}
