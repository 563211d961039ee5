//! Order-theoretic probability for finite classical and quantum systems.
//!
//! The crate treats cumulative distribution functions and quantile functions
//! as a pair of adjoint monotone maps and carries that picture from ordinary
//! probability on a finite sample space all the way to projection-valued
//! spectral calculus and presheaves over contexts of a matrix algebra.
//!
//! Everything is desk scale: lattices are finite and scanned exhaustively,
//! operators are dense complex matrices of dimension a few dozen at most, and
//! all checks are exact scans or tolerance-controlled numerical comparisons.

pub mod classical;
pub mod contexts;
pub mod linop;
pub mod order;
pub mod presheaf;
pub mod quantum;
pub mod sampling;
pub mod spectral;

pub use linop::{CMatrix, HermitianOperator, Projection, C64};
pub use order::ExtendedReal;
