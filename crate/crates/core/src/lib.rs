//! Spectral simulation toolkit for the regularized dynamical Φ⁴₃ equation on the 3-torus.
//!
//! Fields are truncated Fourier series ([`fourier::FourierField`]); on top of them
//! sit Littlewood–Paley blocks and Besov norms ([`lp`]), paraproducts
//! ([`paracalc`]), semigroups and Duhamel integrals ([`semigroup`]), the
//! ε-corrected differential operators ([`diff_ops`]), renormalization
//! constants ([`renorm`]), the stochastic driving vector ([`noise`]) and the
//! transformed fixed-point solver with a direct reference solver ([`solver`]).

pub mod diff_ops;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod lp;
pub mod noise;
pub mod paracalc;
pub mod random;
pub mod renorm;
pub mod semigroup;
pub mod solver;

pub use error::{Error, Result};
pub use fourier::{FourierField, Mode, ModeLattice, RealGrid};
pub use lp::{DyadicPartition, TrajectoryField};
pub use paracalc::Paracalc;
