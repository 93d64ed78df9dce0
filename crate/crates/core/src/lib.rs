//! Tight-binding and truncated Dirac Hamiltonians for a graphene tube threaded
//! by an adiabatically switched Aharonov–Bohm flux, together with an engine for
//! the partial spectral flow of Hermitian matrix families along a subspace.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: honeycomb tube with zigzag ends and the mirror identification
//!   of the fictitious boundary sites.
//! * [`basis`]: the orthonormal plane-wave basis `φ_mn`, its index set and the
//!   valley subspaces around the Dirac points.
//! * [`flux`]: flux schedules, gauge functions and Peierls bond phases.
//! * [`hamiltonian`]: assembly of `H_t` and `H_0t`, and the closed-form
//!   coefficients `μ(m, n, t)`.
//! * [`dirac`]: truncated Dirac operators for both valleys and the map `W`
//!   comparing them with the lattice operator on a valley.
//! * [`specflow`]: partition planning, tameness certification and the flow sum.
//! * [`cli`]: config-driven experiments and their CSV/JSON artefacts.

pub mod basis;
pub mod cli;
pub mod dirac;
pub mod error;
pub mod flux;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod specflow;

pub use error::{Error, Result};
pub use faer::c64;
