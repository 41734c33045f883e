//! Infidelity budgets for laser-free trapped-ion / trapped-electron gates.
//!
//! The crate computes gate infidelities caused by motional error mechanisms
//! two independent ways and checks that they agree in the high-fidelity
//! limit:
//!
//! * closed-form expressions for each error channel ([`analytic`]), and
//! * direct numerical propagation of the corresponding error Hamiltonians
//!   and master equations ([`hamiltonians`], [`propagation`]).
//!
//! [`harness`] pairs the two routes across parameter sweeps, and
//! [`validation`] runs the full convergence suite with pinned tolerances.
//!
//! Units: `ħ = 1` throughout; every energy is an angular frequency and all
//! channel strengths are expressed relative to the gate Rabi frequency.

#![forbid(unsafe_code)]

pub mod analytic;
pub mod ensemble;
pub mod error;
pub mod hamiltonians;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod propagation;
pub mod space;
pub mod states;
pub mod validation;

pub use error::{Error, Result};
pub use space::{HilbertSpace, Subsystem};

/// Complex scalar used everywhere in the crate.
pub type C64 = num_complex::Complex64;
