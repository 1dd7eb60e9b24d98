//! Which-way knowledge in a two-path interferometer with a two-qubit
//! which-way detector (WWD).
//!
//! The crate is layered bottom-up:
//!
//! - [`linalg`]: small dense complex vectors and matrices (dim ≤ 8), Hermitian
//!   eigendecomposition and Haar-random orthonormal bases.
//! - [`model`]: detector coupling, WWD marker states, the joint entangled
//!   state, reduced density matrices and the screen pattern `P(δ)`.
//! - [`knowledge`]: guess qualities, readout probabilities, average and
//!   phase-conditioned which-way knowledge, closed forms and phase averages.
//! - [`feedforward`]: the natural/canonical switch protocol, stochastic
//!   per-phase basis optimization and visibility sweeps of the duality excess.
//! - [`circuit`]: a three-qubit statevector simulator of the gate-level
//!   realization used to Monte Carlo check everything above.
//!
//! Conventions: phases are in radians, the WWD subspace is ordered
//! `(|00⟩, |10⟩, |01⟩)` and all stored states are unit norm.

pub mod circuit;
pub mod error;
pub mod feedforward;
pub mod knowledge;
pub mod linalg;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;
