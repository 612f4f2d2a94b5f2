//! Quantum Bell operator for trajectories of two trapped particles.
//!
//! For inputs `(a, b)` the parties switch their traps to frequencies
//! `ω_a`, `ω_b`, and the observable is the Heisenberg-picture distance
//! `d̂_ab(t) = |x̂(t) − ŷ(t)|`. The Bell operator is
//! `Ŝ(t) = Σ_ab (−1)^{ab} d̂_ab(t)`; a state with `⟨Ŝ(t)⟩ < 0` over some time
//! interval has no local-realistic trajectory model there.

mod exact;
mod search;
mod separable;
mod state;
mod sweep;
mod working;

pub use exact::{bell_operator, evolved_abs_difference, BellKernel};
pub use search::{find_violating_state, EigenSearchResult, SearchOptions, CONVERGENCE_TOL};
pub use separable::{
    evaluate_separable_states, require_separable, separable_positivity_check, Counterexample,
    SeparableReport, SEPARABLE_TOL,
};
pub use state::TwoModeState;
pub use sweep::{
    bell_parameter_at, integrated_s, schrodinger_bell_parameter, schrodinger_expectation, sweep,
    BellSweep, SweepOptions, DEFAULT_REFINE_TOL, IMAGINARY_TOL,
};
pub use working::WorkingSpace;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::fock::FockError;

/// Input pairs `(a, b)` in storage order.
pub const INPUT_PAIRS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// `(−1)^{ab}`.
pub fn input_sign(a: usize, b: usize) -> f64 {
    if a * b == 1 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Error)]
pub enum BellError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical accuracy: {0}")]
    Accuracy(String),
    #[error(
        "minimum eigenvalue not converged in the working truncation: \
         {small} at n_big = {n_big}, {large} at n_big = {}",
        2 * n_big
    )]
    Truncation { n_big: usize, small: f64, large: f64 },
    #[error("[{lo}, {hi}] is outside the sweep grid [{start}, {end}]")]
    Range { lo: f64, hi: f64, start: f64, end: f64 },
    #[error("state has Schmidt rank {0}; only product states are accepted")]
    EntangledInput(usize),
    #[error("separable state reached S = {} at t = {}", .0.value, .0.time)]
    Counterexample(Box<Counterexample>),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Fock(#[from] FockError),
}
