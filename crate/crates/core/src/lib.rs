//! Random Lindblad generators: ensembles, dense spectra, steady states and
//! the reference laws they are compared against.

pub mod ensembles;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracles;
pub mod liouvillian;
pub mod rng;
pub mod spectra;
pub mod steadystate;
pub mod stats;

pub use ensembles::{Beta, ModelParams, Realization};
pub use error::{Error, ErrorClass, Result};
pub use liouvillian::{build_liouvillian, Superoperator};
pub use spectra::{diagonalize, summarize, Spectrum, SpectralSummary};
