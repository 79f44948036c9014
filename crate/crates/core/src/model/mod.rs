//! Shared domain types.

mod grid;
mod growth;
mod kernel;
mod kernel_spec;
mod rate;
mod results;
mod sample;
mod spec;

pub use grid::{geometric_grid, uniform_grid, GridDensity, GridDensity2, Spacing};
pub use growth::{GrowthLaw, GrowthVariability};
pub use kernel::FragmentationKernel;
pub use kernel_spec::KernelSpec;
pub use rate::{ClosedForm, RateFunction, Tail};
pub use results::{EigenTriplet, EigenTriplet2, EstimationResult};
pub use sample::{CellId, CellRecord, Provenance, SampleSet, Scheme, SnapshotRecord};
pub use spec::{ModelSpec, Trigger};
