//! Data-generating processes, Monte Carlo error evaluation and slope fits.

mod config;
mod experiment;
mod laws;
mod slope;
mod truth;

pub use experiment::{
    l2_error, l2_error_on, log_grid, read_csv, rep_stream, run_experiment, run_experiment_with,
    write_csv, CpuClock, ErrorCurve, ErrorRow, EstimatorKind, ExperimentSpec, RepData, RunOptions,
    CSV_HEADER, DEFAULT_MC_POINTS, DEFAULT_PER_DECADE, THREADS_ENV,
};
pub use laws::{
    sample_covariate, sample_noise, tilted_inverse_cdf, CovariateLaw, NoiseLaw, NoiseSampler,
};
pub use slope::{curve_slope, fit_loglog_slope, mean_curve, mean_time_curve, SlopeFit};
pub use truth::{doppler_component, regression_truth, ExampleId};
