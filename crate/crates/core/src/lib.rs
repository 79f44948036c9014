//! Simulation, forward solvers and nonparametric division-rate estimation for
//! growing and dividing cell populations.

pub mod cli;
pub mod compare;
pub mod deconv;
pub mod error;
pub mod estim;
pub mod io;
pub mod model;
pub mod numerics;
pub mod sim;
pub mod smoothing;
pub mod solver;

pub use error::{Error, Result};
