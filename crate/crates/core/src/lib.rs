//! Numerical engine for irreversible quantum lattice dynamics driven by
//! time-dependent Lindblad generators.
//!
//! The crate builds finite-volume propagators in two independent ways
//! (adaptive Runge-Kutta integration and the Euler product), evaluates
//! Lieb-Robinson bound constants as explicit certificates, and measures the
//! quantities those certificates are supposed to dominate.
//!
//! Conventions used throughout:
//!
//! * Sites of a [`algebra::Volume`] are ordered as in its graph and all
//!   Kronecker products are site-0-major.
//! * Operators are vectorised by column stacking, so `X·A·Y` corresponds to
//!   `(Yᵀ ⊗ X)·vec(A)`.
//! * Superoperator norms are spectral norms of the vectorised matrix.
//! * Dynamics act on observables (Heisenberg picture), `dA/dt = 𝓛(t)A`.

pub mod algebra;
pub mod error;
pub mod generator;
pub mod lattice;
pub mod lrbound;
pub mod models;
pub mod propagator;
pub mod thermolimit;

pub use error::{Error, Result};

/// Complex scalar used for every operator entry.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type Mat = ndarray::Array2<C64>;
