//! Monte Carlo ensembles of exit statistics.

pub mod runner;
pub mod sampler;
pub mod stats;

pub use runner::{
    compare_collapse_modes, compare_from, convergence_from, convergence_study, run_ensemble, run_experiment,
    EnsembleResult, ExperimentSettings, ModeComparison, ModeDifference, ProcessSpec, RunKey, RunPlan,
};
pub use sampler::{sample_initial, SamplerConfig};
pub use stats::{
    binomial_se, kendall_tau, ks_critical, ks_statistic, wilson_interval, AbortCounts, ConvergenceRow, ConvergenceTable,
    EnsembleStats, FrequencyRow, GridCdf,
};
