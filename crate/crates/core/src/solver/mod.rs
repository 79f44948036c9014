//! Deterministic solvers for the structured population equations.

mod entropy;
mod grid;
mod growth_frag;
mod lattice;
mod oscillation;
mod power;
mod renewal;
mod trajectory;

pub use entropy::{entropy_trace, gre_entropy, EntropyProfile, EntropyTrace, EntropyValue};
pub use grid::{gregory_weights, trapezoid_weights, GridKind, SolverGrid};
pub use growth_frag::{
    gf_eigen, gf_eigen_with, moment_residuals, solve_growth_frag, solve_growth_frag_with, GrowthFragProblem,
    GrowthFragStepper, MomentResiduals, StepperOptions,
};
pub use lattice::{
    adder_steady, lattice_steady, solve_adder_2d, solve_lattice, LatticeProblem, LatticeSteady, LatticeStepper,
};
pub use oscillation::oscillation_projection;
pub use power::{power_iterate, LinearStep, PowerOptions, PowerResult};
pub use renewal::{
    age_grid, malthus_renewal, renewal_eigen, renewal_eigen_discrete, renewal_eigen_on, renewal_lambda,
    solve_renewal, solve_renewal_with, RenewalProblem, RenewalStepper, DEFAULT_AGE_POINTS,
};
pub use trajectory::{Trajectory, Trajectory2};
