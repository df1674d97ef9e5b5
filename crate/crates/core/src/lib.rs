//! Almost periodic solutions of 1-periodic linear functional differential
//! equations
//!
//! ```text
//! dx/dt = A(t) x + F(t) x_t + f(t),    x_t(theta) = x(t + theta), theta in [-r, 0]
//! ```
//!
//! with trigonometric-polynomial forcing `f`. The library discretizes the
//! phase space on Chebyshev nodes, assembles the monodromy operator
//! `U(t0, t0 - 1)`, extracts its spectrum on the unit circle, and compares it
//! with the circular image of the forcing frequencies. When the two are
//! disjoint, the unique almost periodic solution whose spectrum lies in the
//! forcing spectrum is constructed one frequency at a time from the
//! difference equation `w(t) = M(t) w(t - 1) + g(t)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apfun;
pub mod cli;
pub mod error;
pub mod fleet;
pub mod io;
pub mod linalg;
pub mod monodromy;
pub mod phasespace;
pub mod propagator;
pub mod solver;

pub use error::{Error, Result};
