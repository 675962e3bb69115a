//! Numerics for genus g hyperelliptic curves and isomonodromic deformations
//! of rank 2 Fuchsian systems with 2g + 2 regular singular points.
//!
//! The layers, bottom up:
//!
//! * [`num`]: complex quadrature, finite differences, small dense matrices,
//!   Newton iteration, truncated jets.
//! * [`curve`]: branch configurations, the two-sheeted square root, period
//!   matrices, Abel maps and Riemann constants.
//! * [`theta`]: multidimensional theta functions with characteristics,
//!   gradients and Hessians, plus the Jacobi specialization at g = 1.
//! * [`schlesinger`]: explicit residue matrices A_j with eigenvalues +-1/4
//!   built from theta frames, Hamiltonians, the tau function and monodromy
//!   data attached to a characteristic.
//! * [`monodromy`]: numerical transport of the Fuchsian system around each
//!   singular point and comparison against the predicted monodromy group.
//! * [`pvi`]: the genus 1 specialization, producing solution families of the
//!   sixth Painleve equation (theta-ratio form, tau-logarithm form, Picard
//!   and the algebraic transforms) with residual checks.
//!
//! All numerics run on f64 with explicit error estimates and tolerance-carrying
//! error values; nothing panics on bad numerical input.

pub mod curve;
pub mod error;
pub mod monodromy;
pub mod num;
pub mod pvi;
pub mod schlesinger;
pub mod theta;

pub use error::{Error, Result};
