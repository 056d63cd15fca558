//! Closed-form and quadrature reference laws that the simulated ensembles
//! are checked against.

pub mod generator;
pub mod laws;
pub mod quadrature;
pub mod ratios;

pub use generator::{
    chi2_entry_law, classical_generator, classical_generator_in_eigenbasis, gap_strong, gap_weak, x_spread_strong,
    Chi2EntryLaw, ClassicalGenerator,
};
pub use laws::{
    binomial, catalan, mp_convolution_density, semicircle_self_convolution, tabulate, write_table, Density,
    MarchenkoPasturLaw, MpConvolution, SemicircleConvolution, SemicircleLaw,
};
pub use quadrature::integrate;
pub use ratios::{gue_relative_variance_closed_form, ratio_reference, RatioKind, RatioReference};
