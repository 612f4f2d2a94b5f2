//! Classical side of the trajectory Bell inequality.
//!
//! * [`ensemble`]: local-realistic ensembles of trajectory quadruples and the
//!   classical Bell parameter for subadditive functionals.
//! * [`birkhoff`] and [`lattice`]: a deterministic hidden-variable completion
//!   of lattice quantum dynamics, where each step's transition matrix `|K|²` is
//!   split into permutations and the permutation sequence is the hidden
//!   variable.

pub mod birkhoff;
pub mod ensemble;
pub mod lattice;
pub mod matching;

pub use birkhoff::{birkhoff_decompose, doubly_stochastic_from_unitary, BirkhoffDecomposition, SinkhornRepair};
pub use ensemble::{
    classical_bell_s, classical_bell_s_generalized, random_ensemble, Aggregation, ClassicalBell, Pointwise,
    SubadditiveFunctional, TrajectoryEnsemble, TrajectorySample,
};
pub use lattice::{hv_distribution_check, sample_hv_trajectory, CheckMode, HvCheckOptions, HvReport, LatticeModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HvError {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("functional failed its self-test: {0}")]
    FunctionalSelfTest(String),
    #[error("matrix is not unitary: max |U†U − I| = {0:e}")]
    NonUnitary(f64),
    #[error("matrix is not doubly stochastic: {0}")]
    NotDoublyStochastic(String),
    #[error("no perfect matching on the support of a residual with mass {0:e}")]
    NoPerfectMatching(f64),
    #[error("decomposition reconstructs the input only to {0:e}")]
    Reconstruction(f64),
    #[error("invalid lattice model: {0}")]
    InvalidModel(String),
    #[error("sampling requires an explicit seed")]
    MissingSeed,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
