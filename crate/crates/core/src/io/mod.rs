//! Files in and out: run configuration, lineage tables and plot-ready outputs.

mod config;
mod lineage;
mod output;

pub use config::{CompareBlock, Command, EigenBlock, EstimateBlock, ModelBlock, RunConfig, SchemeBlock};
pub use lineage::{
    ingest_lineage_csv, ingest_lineage_csv_with, read_lineage, write_lineage, write_lineage_csv, IngestOptions,
    LINEAGE_COLUMNS, SNAPSHOT_COLUMNS,
};
pub use output::{
    write_eigen, write_estimation, write_grid_density2_csv, write_grid_density_csv, write_json,
    write_trajectory2_csv, write_trajectory_csv,
};

/// Seventeen significant digits, enough to round-trip any `f64`; empty for NaN.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.16e}")
    }
}
