//! Analysis toolkit for interactions between a classical system and a
//! quantum system.
//!
//! The crate decides whether a given interaction can be reversible, signal
//! from the quantum side to the classical side, and act on an irreducible
//! quantum system all at once, and ships the machinery behind that
//! classification: CPTP channels, superselection-sector decomposition, the
//! composite non-disturbing measurement built from an inverse, and an
//! adversarial search over classical-quantum channels. A split-step
//! integrator for the Schrödinger-Newton equation demonstrates how a
//! nonlinear self-interaction makes non-orthogonal states distinguishable.
//!
//! Conventions: operators are `nalgebra` complex matrices, composite systems
//! are ordered tensor products with the classical factor first, and
//! vectorization is row-major.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod nogo;
pub mod schnewton;
pub mod sectors;
pub mod seed;

pub use error::{Error, Result};
