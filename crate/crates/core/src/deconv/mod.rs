//! Inversion of the fragmentation operator and Fourier deconvolution.

mod dilation;
mod fourier;
mod mellin;

pub use dilation::{dilation_apply, dilation_solve, gluing_point, DilationBranch, DilationProblem, UpperTail};
pub use fourier::{fourier_deconvolve, FourierDeconvolution};
pub use mellin::{mellin_dilation_solve, mellin_dilation_solve_with, mellin_on_line, LogGrid, MellinSolution};
