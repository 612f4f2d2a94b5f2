//! Bell inequality for trajectories: harmonic-trap measurements of the
//! position difference, the quantum violation, and classical hidden-variable
//! models that respect the bound.

pub mod beamsplitter;
pub mod bell;
pub mod dynamics;
pub mod fock;
pub mod hv;
pub mod linalg;
pub mod quadrature;
pub mod units;
