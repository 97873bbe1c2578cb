//! Fixed-point-iterated symplectic integrators for nonseparable
//! Hamiltonians and the block structure of their symplectic defect.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command line
//! and parallel sweeps live in the companion `symperr-cli` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod autodiff;
pub mod defect;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod integrators;
pub mod linalg;
pub mod oracle;
pub mod quadrature;
pub mod state;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use state::PhaseState;
