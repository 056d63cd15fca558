//! Vectorized Lindblad superoperator.
//!
//! Density matrices are vectorized by row stacking, `vec(rho)[a N + b] =
//! rho[a, b]`, so that `vec(A rho B) = (A ⊗ B^T) vec(rho)`. Under this
//! convention
//!
//! ```text
//! L = -i (H ⊗ 1 - 1 ⊗ H^T)
//!     + sum_l [ W_l ⊗ conj(W_l) - 1/2 (W_l^† W_l) ⊗ 1 - 1/2 1 ⊗ (W_l^† W_l)^T ]
//! ```

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ShapeBuilder};
use num_complex::Complex64 as C64;

use crate::ensembles::{BasisSet, Beta, DissipationMatrix, HamiltonianMatrix, JumpOperatorSet, ModelParams};
use crate::error::{Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Vectorization convention tag carried with every superoperator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vectorization {
    /// `vec(rho)[a N + b] = rho[a, b]`.
    RowStacking,
}

impl Vectorization {
    pub fn tag(self) -> [u8; 8] {
        match self {
            Vectorization::RowStacking => *b"ROWSTACK",
        }
    }
}

/// Dense `N^2 x N^2` Liouvillian.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub n: usize,
    pub matrix: Array2<C64>,
    pub convention: Vectorization,
    pub params: Option<ModelParams>,
}

impl Superoperator {
    pub fn with_params(mut self, params: ModelParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    /// Zero-eigenvalue tolerance, `1e-10 ||L||_F`.
    pub fn tol_zero(&self) -> f64 {
        1e-10 * self.frobenius_norm()
    }

    /// `L(rho)` through the matrix-vector product.
    pub fn apply(&self, rho: &Array2<C64>) -> Result<Array2<C64>> {
        check_square(rho, self.n, "rho")?;
        let v = vectorize(rho);
        let out = self.matrix.dot(&v);
        Ok(devectorize(&out, self.n))
    }

    /// `|| vec(1)^† L ||`, which vanishes for trace-preserving generators.
    pub fn trace_defect(&self) -> f64 {
        let n = self.n;
        let mut acc = vec![C64::new(0.0, 0.0); n * n];
        for a in 0..n {
            let row = self.matrix.row(a * n + a);
            for (x, y) in acc.iter_mut().zip(row.iter()) {
                *x += y;
            }
        }
        acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real matrix `Tr[F_j L(F_k)]` in the orthonormal Hermitian basis of
    /// [`HermitianBasis`]. It is unitarily similar to `L` and real because
    /// `L` preserves Hermiticity. Stored column-major.
    pub fn real_representation(&self) -> Array2<f64> {
        let basis = HermitianBasis::new(self.n);
        let dim = self.n * self.n;
        // members[p] = list of (j, coefficient of F_j at vec index p)
        let mut members: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (j, el) in basis.elements.iter().enumerate() {
            for &(p, u) in el {
                members[p].push((j, u));
            }
        }
        let mut out = Array2::<f64>::zeros((dim, dim).f());
        let mut y = vec![C64::new(0.0, 0.0); dim];
        for p in 0..dim {
            if members[p].is_empty() {
                continue;
            }
            let row = self.matrix.row(p);
            for (k, el) in basis.elements.iter().enumerate() {
                y[k] = el.iter().map(|&(q, u)| row[q] * u).sum();
            }
            for &(j, u) in &members[p] {
                let cu = u.conj();
                let mut dst = out.row_mut(j);
                for (d, yk) in dst.iter_mut().zip(y.iter()) {
                    *d += (cu * yk).re;
                }
            }
        }
        out
    }
}

/// Orthonormal Hermitian operator basis stored as sparse row-stacked vectors:
/// `F_0 = 1/sqrt(N)`, the normalized diagonal traceless matrices, then
/// `(E_ab + E_ba)/sqrt 2` and `i(E_ba - E_ab)/sqrt 2` for `a < b`.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    pub n: usize,
    pub elements: Vec<Vec<(usize, C64)>>,
}

impl HermitianBasis {
    pub fn new(n: usize) -> Self {
        let mut elements = Vec::with_capacity(n * n);
        let s = 1.0 / (n as f64).sqrt();
        elements.push((0..n).map(|a| (a * n + a, C64::new(s, 0.0))).collect());
        for m in 1..n {
            let norm = ((m * (m + 1)) as f64).sqrt();
            let mut el: Vec<_> = (0..m).map(|j| (j * n + j, C64::new(1.0 / norm, 0.0))).collect();
            el.push((m * n + m, C64::new(-(m as f64) / norm, 0.0)));
            elements.push(el);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for a in 0..n {
            for b in (a + 1)..n {
                elements.push(vec![(a * n + b, C64::new(h, 0.0)), (b * n + a, C64::new(h, 0.0))]);
                elements.push(vec![(a * n + b, C64::new(0.0, -h)), (b * n + a, C64::new(0.0, h))]);
            }
        }
        HermitianBasis { n, elements }
    }

    /// `sum_k x_k vec(F_k)` for real or complex coefficients.
    pub fn expand<T: Copy + Into<C64>>(&self, coeffs: &[T]) -> Array1<C64> {
        let mut v = Array1::zeros(self.n * self.n);
        for (el, &x) in self.elements.iter().zip(coeffs) {
            let x: C64 = x.into();
            for &(p, u) in el {
                v[p] += x * u;
            }
        }
        v
    }
}

pub fn vectorize(rho: &Array2<C64>) -> Array1<C64> {
    rho.iter().cloned().collect()
}

pub fn devectorize(v: &Array1<C64>, n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |(a, b)| v[a * n + b])
}

fn check_square(m: &Array2<C64>, n: usize, what: &str) -> Result<()> {
    if m.dim() != (n, n) {
        return Err(Error::Dimension {
            expected: format!("{what} of shape {n}x{n}"),
            found: format!("{:?}", m.dim()),
        });
    }
    Ok(())
}

fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub(crate) fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

fn check_inputs(h: &HamiltonianMatrix, jumps: &JumpOperatorSet) -> Result<usize> {
    let n = h.dim();
    check_square(&h.matrix, n, "H")?;
    let scale = h.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let dev = hermiticity_defect(&h.matrix);
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    for w in &jumps.operators {
        check_square(w, n, "W")?;
    }
    Ok(n)
}

/// Add the Hamiltonian part `-i(H ⊗ 1 - 1 ⊗ H^T)` and the anticommutator
/// part of `K = sum_l W_l^† W_l` into `l`.
fn add_coherent_and_decay(l: &mut Array2<C64>, h: &Array2<C64>, k: &Array2<C64>, n: usize) {
    // effective non-Hermitian generator: rho -> -i H_eff rho + i rho H_eff^†,
    // H_eff = H - i K / 2
    let heff = h - &k.mapv(|z| z * 0.5 * I);
    for a in 0..n {
        for b in 0..n {
            let p = a * n + b;
            for c in 0..n {
                // (H_eff ⊗ 1): rows (a,b), cols (c,b)
                l[[p, c * n + b]] += -I * heff[[a, c]];
                // (1 ⊗ conj(H_eff)): rows (a,b), cols (a,c); rho H_eff^† has
                // (rho H_eff^†)_ab = sum_c rho_ac conj(H_eff[b, c])
                l[[p, a * n + c]] += I * heff[[b, c]].conj();
            }
        }
    }
}

/// Assemble `L` from the Hamiltonian and the jump operators (with `g`
/// already absorbed into the operators).
pub fn build_liouvillian(h: &HamiltonianMatrix, jumps: &JumpOperatorSet) -> Result<Superoperator> {
    let n = check_inputs(h, jumps)?;
    let dim = n * n;
    let mut l = Array2::<C64>::zeros((dim, dim));
    let mut k = Array2::<C64>::zeros((n, n));
    for w in &jumps.operators {
        k += &dagger(w).dot(w);
        let wc = w.mapv(|z| z.conj());
        for a in 0..n {
            for c in 0..n {
                let wac = w[[a, c]];
                if wac == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..n {
                    let mut row = l.row_mut(a * n + b);
                    let wb = wc.row(b);
                    for d in 0..n {
                        row[c * n + d] += wac * wb[d];
                    }
                }
            }
        }
    }
    add_coherent_and_decay(&mut l, &h.matrix, &k, n);
    Ok(Superoperator { n, matrix: l, convention: Vectorization::RowStacking, params: None })
}

/// `-i[H, rho] + sum_l (W_l rho W_l^† - 1/2 {W_l^† W_l, rho})`, evaluated
/// without vectorization.
pub fn apply_direct(h: &HamiltonianMatrix, jumps: &JumpOperatorSet, rho: &Array2<C64>) -> Result<Array2<C64>> {
    let n = check_inputs(h, jumps)?;
    check_square(rho, n, "rho")?;
    let hm = &h.matrix;
    let mut out = (hm.dot(rho) - rho.dot(hm)).mapv(|z| -I * z);
    for w in &jumps.operators {
        let wd = dagger(w);
        let k = wd.dot(w);
        out = out + w.dot(rho).dot(&wd) - (k.dot(rho) + rho.dot(&k)).mapv(|z| 0.5 * z);
    }
    Ok(out)
}

/// Assemble `L` in the double-sum form
/// `-i[H, .] + g^2 sum_jk d_jk [G_j rho G_k^† - 1/2 {G_k^† G_j, rho}]`
/// over the traceless basis elements.
pub fn build_from_dissipation_matrix(
    h: &HamiltonianMatrix,
    basis: &BasisSet,
    d: &DissipationMatrix,
    g: f64,
) -> Result<Superoperator> {
    let n = h.dim();
    check_inputs(h, &JumpOperatorSet::empty(h.beta))?;
    if basis.n != n {
        return Err(Error::Dimension { expected: format!("basis for N={n}"), found: format!("N={}", basis.n) });
    }
    let m = n * n - 1;
    if d.entries.dim() != (m, m) {
        return Err(Error::Dimension {
            expected: format!("dissipation matrix {m}x{m}"),
            found: format!("{:?}", d.entries.dim()),
        });
    }
    let g2 = g * g;
    let dim = n * n;
    // sparse entries of each traceless element
    let sparse: Vec<Vec<(usize, usize, C64)>> = basis
        .traceless()
        .iter()
        .map(|gm| {
            gm.indexed_iter()
                .filter(|(_, z)| z.norm() > 0.0)
                .map(|((a, c), &z)| (a, c, z))
                .collect()
        })
        .collect();
    let mut l = Array2::<C64>::zeros((dim, dim));
    let mut k = Array2::<C64>::zeros((n, n));
    for j in 0..m {
        for kk in 0..m {
            let djk = d.entries[[j, kk]] * g2;
            if djk.norm() == 0.0 {
                continue;
            }
            // G_j ⊗ conj(G_k)
            for &(a, c, gj) in &sparse[j] {
                for &(b, dd, gk) in &sparse[kk] {
                    l[[a * n + b, c * n + dd]] += djk * gj * gk.conj();
                }
            }
            // K += d_jk G_k^† G_j
            for &(x, y, gk) in &sparse[kk] {
                // (G_k^†)_{y x} = conj(gk)
                for &(a, c, gj) in &sparse[j] {
                    if a == x {
                        k[[y, c]] += djk * gk.conj() * gj;
                    }
                }
            }
        }
    }
    add_coherent_and_decay(&mut l, &h.matrix, &k, n);
    Ok(Superoperator { n, matrix: l, convention: Vectorization::RowStacking, params: None })
}

const DUMP_MAGIC: &[u8; 8] = b"RLNDBLAD";

/// Header of the binary superoperator dump.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpHeader {
    pub n: u64,
    pub beta: u64,
    pub r: u64,
    pub g: f64,
    pub seed: u64,
    pub realization: u64,
    pub convention: [u8; 8],
}

/// Write `L` as: magic `RLNDBLAD`, then `N, beta, r` (u64), `g` (f64),
/// `seed, realization` (u64), the 8-byte convention tag, then `N^4`
/// row-major `(re, im)` pairs. Everything little-endian.
pub fn write_dump<W: Write>(superop: &Superoperator, mut out: W) -> Result<()> {
    let (beta, r, g, seed, realization) = match &superop.params {
        Some(p) => (p.beta.index() as u64, p.r as u64, p.g, p.seed, p.realization),
        None => (0, 0, 0.0, 0, 0),
    };
    out.write_all(DUMP_MAGIC)?;
    for v in [superop.n as u64, beta, r] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&g.to_le_bytes())?;
    out.write_all(&seed.to_le_bytes())?;
    out.write_all(&realization.to_le_bytes())?;
    out.write_all(&superop.convention.tag())?;
    let mut buf = Vec::with_capacity(superop.matrix.len() * 16);
    for z in superop.matrix.iter() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_dump<R: Read>(mut input: R) -> Result<(DumpHeader, Array2<C64>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Serde("not a superoperator dump".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut input)?);
    let beta = u64::from_le_bytes(next(&mut input)?);
    let r = u64::from_le_bytes(next(&mut input)?);
    let g = f64::from_le_bytes(next(&mut input)?);
    let seed = u64::from_le_bytes(next(&mut input)?);
    let realization = u64::from_le_bytes(next(&mut input)?);
    let convention = next(&mut input)?;
    let dim = (n * n) as usize;
    let mut raw = vec![0u8; dim * dim * 16];
    input.read_exact(&mut raw)?;
    let data: Vec<C64> = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect();
    let matrix = Array2::from_shape_vec((dim, dim), data).map_err(|e| Error::Serde(e.to_string()))?;
    Ok((DumpHeader { n, beta, r, g, seed, realization, convention }, matrix))
}

impl DumpHeader {
    pub fn beta(&self) -> Option<Beta> {
        Beta::try_from(self.beta as u8).ok()
    }
}
