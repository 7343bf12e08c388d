//! Command-line front end for `qubo-forge`: benchmark generators and the
//! solve/compare pipeline behind the `qubo-forge` binary.

pub mod datasets;
pub mod run;

pub use datasets::{build_regression, load_knapsack, DatasetError, KnapsackInstance, RegressionDataset, WeightGrid};
pub use run::{compare, execute, RunFlags, RunOutcome, RunSettings, RunSummary};

/// Exit status for a run whose best sample is feasible.
pub const EXIT_FEASIBLE: u8 = 0;
/// Exit status for any error, usage errors included.
pub const EXIT_ERROR: u8 = 1;
/// Exit status when the best sample still violates a hard constraint.
pub const EXIT_INFEASIBLE: u8 = 2;
