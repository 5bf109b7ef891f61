//! Truncated number-basis operators for the dragged oscillator.

mod fock;
mod hamiltonian;
mod propagator;
mod protocol;

pub use fock::{
    herm_exp, herm_exp_with, hermiticity_defect, max_abs, CMatrix, DensityMatrix, FockOperator,
    Spectrum,
};
pub use hamiltonian::{
    auto_dimension, build_hamiltonian, build_ladder, displaced_thermal, displacement,
    estimate_dimension, max_excursion, momentum, partition_function, position, thermal_state,
    Tridiagonal, TAIL_LEVELS, TAIL_TOL,
};
pub use propagator::{
    propagator, propagator_convergence, reversed_propagator, slice_exponential,
    ConvergenceReport, UNITARITY_TOL,
};
pub use protocol::DriveProtocol;
