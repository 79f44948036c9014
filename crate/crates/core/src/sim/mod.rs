//! Exact simulation of the division tree and its observation schemes.

mod empirical;
mod rng;
mod sampling;
mod tree;

pub use empirical::{draw_from_density, empirical_density, empirical_joint_density, histogram, JointObservable, Observable};
pub use rng::RngStream;
pub use sampling::{
    division_size_from_uniform, increment_from_uniform, increment_lifetime, lifetime_from_uniform,
    sample_division_size, sample_increment, sample_lifetime_age,
};
pub use tree::{
    simulate_lineage, simulate_population, simulate_replicates, simulate_tree, PopulationSplit, RootSpec,
    DEFAULT_CELL_CAP,
};
