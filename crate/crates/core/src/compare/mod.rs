//! Calibration of timer, sizer and adder models on data and their quantitative comparison.

mod calibrate;
mod correlation;
mod distance;
mod rank;

pub use calibrate::{calibrate, simulate_to_steady, Calibration};
pub use correlation::{correlation_table, homeostasis_slope, CorrelationRow, CORRELATION_COLUMNS};
pub use distance::{distance, sample_distance, wasserstein1_samples, Metric};
pub use rank::{model_name, rank_models, resimulate, CompareOptions, ComparisonReport, ModelFit, HOMEOSTASIS_LIMIT, TIE_FACTOR};
