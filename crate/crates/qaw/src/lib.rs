//! Numerical realization of q-Gaussian and q-Araki-Woods algebras on
//! finite, level-truncated q-Fock spaces.
//!
//! The crate provides:
//!
//! - exact pair-partition combinatorics ([`partitions`]),
//! - finite-dimensional one-particle spaces with a positive generator and
//!   deformed inner product ([`space`]),
//! - truncated Fock spaces with q-Gram matrices and
//!   creation/annihilation/field operators ([`fock`]),
//! - Wick words, quasi-free moments, Wick decompositions and radial
//!   multipliers ([`wick`]),
//! - the rearrangement maps behind the non-commutative Khintchine
//!   inequality and Haagerup-tensor norms at matrix scale ([`khintchine`]),
//! - first/second quantization and the approximation-property bounds
//!   ([`quantization`]),
//! - finite-size tensor models of the ultraproduct embedding with exact
//!   closed-form mixed moments ([`embedding`]).
//!
//! Everything is double precision. Operator identities are validated to
//! `1e-10`, norm comparisons to `1e-8`; truncated operator norms are lower
//! bounds of their untruncated counterparts.

mod legop;
pub mod embedding;
pub mod error;
pub mod fock;
pub mod khintchine;
pub mod partitions;
pub mod quantization;
pub mod space;
pub mod wick;

pub use error::{QawError, Result};
