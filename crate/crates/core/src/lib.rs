//! Classical simulator for fast-forwarded quantum solvers of linear ODEs
//! `du/dt = A u + b(t)`.
//!
//! Block-encodings are held as explicit unitaries; polynomial transforms and
//! amplifications are applied by exact spectral calculus while every
//! construction charges its query cost to a [`ledger::QueryLedger`].
//! Solvers return post-selected states together with exact success
//! probabilities and are checked against the Duhamel reference in
//! [`ode_reference`].

pub mod bench;
pub mod block_encoding;
pub mod error;
pub mod ff_eigen;
pub mod ff_qsvt;
pub mod ledger;
pub mod lower_bounds;
pub mod matrix;
pub mod ode_reference;
pub mod pde;
pub mod poly_approx;
pub mod random;
pub mod report;
pub mod tol;

pub use error::{FfodeError, Result};
pub use matrix::{ComplexMatrix, ComplexVector, EigenSystem};
pub use num_complex::Complex64;
