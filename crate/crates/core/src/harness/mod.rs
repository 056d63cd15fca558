//! Sweeps over ensembles, their persistence, and the finite-size analysis
//! built on top of them.

pub mod analysis;
pub mod config;
pub mod report;
pub mod sweep;

pub use analysis::{
    builtin_exponent_table, check_exponent_constraint, collapse_quality, extrapolate_large_n, fit_power_law,
    optimize_exponents, ChannelClass, CollapseFit, Curve, ExponentRecord, ObservableTag, PowerLawFit,
};
pub use config::{GridParameter, GridSpec, Observable, Spacing, SweepConfig};
pub use report::{curves_from, report, Preset};
pub use sweep::{
    aggregate, family_seed, load_records, load_result, run_realization, run_sweep, steady_record, Estimate,
    FailureRecord, RealizationOptions, RealizationRecord, SteadyRecord, SummaryRow, SweepOutcome, SweepResult,
};
