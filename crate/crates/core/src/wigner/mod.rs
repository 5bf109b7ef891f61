//! Phase-space (Wigner) representation of truncated-basis states, and the
//! effect of a projective energy measurement on it.

mod field;
mod kernels;
mod measure;

pub use field::{
    state_mean, thermal_widths, wigner_transform, PhaseGrid, WignerEvaluator, WignerField,
    COVERAGE_SIGMAS, IMAG_RESIDUAL_TOL, MIN_GRID_POINTS, NORMALIZATION_TOL,
};
pub use kernels::{
    alpha, fock_wigner, fock_wigner_checked, laguerre, laguerre_identity_diagnostic,
    laguerre_kernel, LaguerreDiagnostic, UNDERFLOW_Y,
};
pub use measure::{
    angular_average, angular_average_with, angular_variance, dephase, ANGULAR_ORDER,
    DEGENERACY_TOL, ROTATION_LEAK_TOL,
};
