//! Quantum work statistics: characteristic functions for the TPM, FCS and
//! MH definitions, quasi-distributions, moments and Jarzynski equalities.

mod jarzynski;
mod problem;
mod types;

pub use jarzynski::{
    free_energy_difference, jarzynski_check, reverse_final_state, JARZYNSKI_MERGE_FACTOR,
    MIN_POPULATION,
};
pub use problem::{
    cf_fcs, cf_mh, cf_tpm, quasi_distribution, WorkMoments, WorkProblem, DEFAULT_MERGE_FACTOR,
    IMAG_RESIDUAL_TOL,
};
pub use types::{
    default_eta_grid, eta_grid, CharacteristicSamples, JarzynskiReport, WorkDefinition,
    WorkQuasiDistribution, CF_INVARIANT_TOL,
};
