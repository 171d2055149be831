//! Numerical laboratory for nonlinear extensions of quantum mechanics.
//!
//! The crate simulates two-level and oscillator systems whose time evolution
//! is generated by Hamiltonian *functions* — expectation-value functionals
//! that need not be bilinear — composed across subsystems so that
//! non-interacting parts never entangle. On top of the integrators sit the
//! experiments: entanglement-dynamics sweeps for a weakly coupled qubit pair,
//! calibration of the nonlinear strength that mimics a stronger linear
//! coupling, frequency-shift measurements for a single nonlinear oscillator,
//! the matching coherent-state phase-space reduction, and SI-unit evaluation
//! of gravitational versus Casimir phase rates.

pub mod algebra;
pub mod calibration;
pub mod dynamics;
pub mod error;
pub mod gcs;
pub mod oscillator;
pub mod physical;
pub mod qubit;

mod report;

pub use algebra::{
    build_fock_ops, cat_subspace_ops, coherent_state, displacement, entropy_of_density,
    partial_trace_and_entropy, trace_norm, CMatrix, CVector, CatSubspaceOps, FockConfig, FockOps,
    ReducedState, StateVector, Subsystem,
};
pub use error::{Error, Result};

pub use report::fmt_g17;
