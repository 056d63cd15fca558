//! Random-matrix inputs of the Liouvillian: the Hamiltonian, the jump
//! operators, the traceless operator basis and the dissipation matrix.

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Dyson index of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Beta {
    /// Real symmetric `H`, real `w` (beta = 1).
    Real,
    /// Complex Hermitian `H`, complex `w` (beta = 2).
    Complex,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::Real => 1.0,
            Beta::Complex => 2.0,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Beta::Real => 1,
            Beta::Complex => 2,
        }
    }
}

impl TryFrom<u8> for Beta {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Beta::Real),
            2 => Ok(Beta::Complex),
            other => Err(Error::InvalidParams(format!("beta must be 1 or 2, got {other}"))),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        b.index()
    }
}

impl std::fmt::Display for Beta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Ensemble coordinates of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Hilbert-space dimension.
    pub n: usize,
    pub beta: Beta,
    /// Number of jump operators.
    pub r: usize,
    /// Dissipation strength.
    pub g: f64,
    pub seed: u64,
    pub realization: u64,
}

impl ModelParams {
    pub fn new(n: usize, beta: Beta, r: usize, g: f64) -> Result<Self> {
        let p = ModelParams { n, beta, r, g, seed: 0, realization: 0 };
        p.validate()?;
        Ok(p)
    }

    /// Parameters at a given effective coupling `g_eff = (2 r beta N)^(1/4) g`.
    pub fn from_geff(n: usize, beta: Beta, r: usize, geff: f64) -> Result<Self> {
        Self::new(n, beta, r, g_from_geff(geff, n, beta, r))
    }

    pub fn with_seed(mut self, seed: u64, realization: u64) -> Self {
        self.seed = seed;
        self.realization = realization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        if self.r < 1 {
            return Err(Error::InvalidParams("r must be at least 1".into()));
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidParams(format!("g must be positive and finite, got {}", self.g)));
        }
        Ok(())
    }

    pub fn geff(&self) -> f64 {
        geff_from_g(self.g, self.n, self.beta, self.r)
    }

    /// `beta * N`, the combination all finite-size scalings are written in.
    pub fn beta_n(&self) -> f64 {
        self.beta.value() * self.n as f64
    }
}

pub fn geff_from_g(g: f64, n: usize, beta: Beta, r: usize) -> f64 {
    (2.0 * r as f64 * beta.value() * n as f64).powf(0.25) * g
}

pub fn g_from_geff(geff: f64, n: usize, beta: Beta, r: usize) -> f64 {
    geff / (2.0 * r as f64 * beta.value() * n as f64).powf(0.25)
}

/// Hermitian Hamiltonian; real symmetric entries when beta = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub matrix: Array2<C64>,
    pub beta: Beta,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Diagonal Hamiltonian with the given levels.
    pub fn diagonal(levels: &[f64]) -> Self {
        let n = levels.len();
        let mut matrix = Array2::zeros((n, n));
        for (i, &e) in levels.iter().enumerate() {
            matrix[[i, i]] = C64::new(e, 0.0);
        }
        HamiltonianMatrix { matrix, beta: Beta::Real }
    }
}

/// The `r` jump operators with the strength `g` already absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperatorSet {
    pub operators: Vec<Array2<C64>>,
    pub g: f64,
    pub beta: Beta,
}

impl JumpOperatorSet {
    pub fn empty(beta: Beta) -> Self {
        JumpOperatorSet { operators: Vec::new(), g: 0.0, beta }
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// Orthonormal operator basis: `elements[0] = 1/sqrt(N)`, the rest traceless.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub n: usize,
    pub elements: Vec<Array2<C64>>,
}

impl BasisSet {
    /// The traceless elements `G_1 .. G_{N^2-1}`.
    pub fn traceless(&self) -> &[Array2<C64>] {
        &self.elements[1..]
    }

    /// Gram matrix `Tr[G_i^dagger G_j]` over all elements.
    pub fn gram(&self) -> Array2<C64> {
        let m = self.elements.len();
        Array2::from_shape_fn((m, m), |(i, j)| {
            self.elements[i]
                .iter()
                .zip(self.elements[j].iter())
                .map(|(a, b)| a.conj() * b)
                .sum()
        })
    }
}

/// `d = w w^dagger`, of shape `(N^2-1) x (N^2-1)`.
#[derive(Debug, Clone)]
pub struct DissipationMatrix {
    pub entries: Array2<C64>,
}

/// Matrix-unit basis: off-diagonal units `E_ab`, `N-1` normalized diagonal
/// traceless matrices, and `G_0 = 1/sqrt(N)` in front.
pub fn make_basis(n: usize) -> BasisSet {
    let mut elements = Vec::with_capacity(n * n);
    let mut g0 = Array2::zeros((n, n));
    for i in 0..n {
        g0[[i, i]] = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    }
    elements.push(g0);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let mut e = Array2::zeros((n, n));
                e[[a, b]] = C64::new(1.0, 0.0);
                elements.push(e);
            }
        }
    }
    for m in 1..n {
        elements.push(diagonal_traceless(n, m).mapv(|x| C64::new(x, 0.0)));
    }
    BasisSet { n, elements }
}

/// `diag(1, .., 1, -m, 0, ..) / sqrt(m (m+1))` with `m` leading ones.
pub(crate) fn diagonal_traceless(n: usize, m: usize) -> Array2<f64> {
    let norm = ((m * (m + 1)) as f64).sqrt();
    let mut d = Array2::zeros((n, n));
    for j in 0..m {
        d[[j, j]] = 1.0 / norm;
    }
    d[[m, m]] = -(m as f64) / norm;
    d
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draw `H` from `P(H) ~ exp(-Tr H^2 / 2)`.
///
/// Diagonal entries have variance 1. Off-diagonal entries have
/// `E|H_ij|^2 = 1` for beta = 2 and `E H_ij^2 = 1/2` for beta = 1.
pub fn sample_hamiltonian<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> HamiltonianMatrix {
    let n = params.n;
    let mut h = Array2::<C64>::zeros((n, n));
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        h[[i, i]] = C64::new(gaussian(rng), 0.0);
        for j in (i + 1)..n {
            let z = match params.beta {
                Beta::Real => C64::new(half * gaussian(rng), 0.0),
                Beta::Complex => {
                    let re = gaussian(rng);
                    let im = gaussian(rng);
                    C64::new(half * re, half * im)
                }
            };
            h[[i, j]] = z;
            h[[j, i]] = z.conj();
        }
    }
    HamiltonianMatrix { matrix: h, beta: params.beta }
}

/// Draw the `r` traceless jump operators.
///
/// Each entry carries `beta` real Gaussian degrees of freedom of variance
/// `g^2`; the trace is projected out afterwards. This has the same law as
/// `W_l = g sum_j G_j w_jl` with Ginibre `w`.
pub fn sample_jump_operators<R: Rng>(params: &ModelParams, rngs: &mut [R]) -> JumpOperatorSet {
    assert_eq!(rngs.len(), params.r, "one stream per jump operator");
    let n = params.n;
    let g = params.g;
    let operators = rngs
        .iter_mut()
        .map(|rng| {
            let mut w = Array2::<C64>::zeros((n, n));
            for x in w.iter_mut() {
                *x = match params.beta {
                    Beta::Real => C64::new(g * gaussian(rng), 0.0),
                    Beta::Complex => {
                        let re = gaussian(rng);
                        let im = gaussian(rng);
                        C64::new(g * re, g * im)
                    }
                };
            }
            project_traceless(&mut w);
            w
        })
        .collect();
    JumpOperatorSet { operators, g, beta: params.beta }
}

pub(crate) fn project_traceless(w: &mut Array2<C64>) {
    let n = w.nrows();
    let shift = w.diag().sum() / n as f64;
    for i in 0..n {
        w[[i, i]] -= shift;
    }
}

/// Ginibre coefficients `w`, shape `(N^2-1) x r`, with
/// `P(w) ~ exp(-Tr w^dagger w / 2)`.
pub fn sample_coefficients<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Array2<C64> {
    let rows = params.n * params.n - 1;
    let mut w = Array2::<C64>::zeros((rows, params.r));
    for x in w.iter_mut() {
        *x = match params.beta {
            Beta::Real => C64::new(gaussian(rng), 0.0),
            Beta::Complex => {
                let re = gaussian(rng);
                let im = gaussian(rng);
                C64::new(re, im)
            }
        };
    }
    w
}

/// `W_l = g sum_j G_j w_jl` over the traceless basis elements.
pub fn jumps_from_coefficients(basis: &BasisSet, w: &Array2<C64>, g: f64, beta: Beta) -> Result<JumpOperatorSet> {
    let n = basis.n;
    if w.nrows() != n * n - 1 {
        return Err(Error::Dimension {
            expected: format!("{} coefficient rows", n * n - 1),
            found: format!("{}", w.nrows()),
        });
    }
    let operators = w
        .axis_iter(Axis(1))
        .map(|col| {
            let mut op = Array2::<C64>::zeros((n, n));
            for (gj, &c) in basis.traceless().iter().zip(col.iter()) {
                op.scaled_add(c * g, gj);
            }
            op
        })
        .collect();
    Ok(JumpOperatorSet { operators, g, beta })
}

/// `d = w w^dagger`.
pub fn dissipation_matrix(w: &Array2<C64>) -> Result<DissipationMatrix> {
    let rows = w.nrows();
    let n = ((rows + 1) as f64).sqrt().round() as usize;
    if n * n != rows + 1 {
        return Err(Error::Dimension {
            expected: "N^2 - 1 rows".into(),
            found: format!("{rows}"),
        });
    }
    let wh = w.t().mapv(|z| z.conj());
    Ok(DissipationMatrix { entries: w.dot(&wh) })
}

/// One full draw `(H, {W_l})` from the named streams of `params`.
#[derive(Debug, Clone)]
pub struct Realization {
    pub params: ModelParams,
    pub hamiltonian: HamiltonianMatrix,
    pub jumps: JumpOperatorSet,
}

impl Realization {
    pub fn sample(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let mut hrng = stream_rng(params.seed, params.realization, Stream::Hamiltonian);
        let hamiltonian = sample_hamiltonian(params, &mut hrng);
        let mut wrngs: Vec<_> = (1..=params.r)
            .map(|l| stream_rng(params.seed, params.realization, Stream::Jump(l)))
            .collect();
        let jumps = sample_jump_operators(params, &mut wrngs);
        Ok(Realization { params: *params, hamiltonian, jumps })
    }
}
