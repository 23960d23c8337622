//! Gaussian coherent states with complex phase-space centres.
//!
//! A Gaussian state is parametrised by a complex centre `z = (p, q)`, a
//! complex symmetric shape matrix `B` with positive definite imaginary part,
//! and a scalar phase/normalisation `alpha`. The crate provides
//!
//! * [`phasespace`]: points, the symplectic form, quadratic Hamiltonians;
//! * [`geometry`]: the dictionary between shapes `B`, phase-space metrics
//!   `G`, compatible complex structures `J`, and positive Lagrangian frames,
//!   plus the projection of complex centres to equivalent real ones;
//! * [`dynamics`]: linear flows, Mobius/Riccati transport of shapes, the
//!   complex-centre route `(z, B, alpha)` and the real Ehrenfest route
//!   `(Z, G, beta)`, with positivity-breakdown detection;
//! * [`states`]: grid wavefunctions and Gaussian Wigner data;
//! * [`oracles`]: grid-level Weyl operators, Schrodinger residuals, a
//!   numerical Wigner transform, and closed-form reference systems;
//! * [`cli`]: scenario configs, tabular output, and the `nhc` subcommands.
//!
//! Start with the runnable examples (`cargo run --release --example ...`);
//! each one exercises a single capability end to end.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
mod ode;
pub mod oracles;
pub mod phasespace;
pub mod sampling;
pub mod states;

pub use error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
