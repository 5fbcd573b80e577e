//! Computational certificates for the triviality of generalized tangent
//! bundles `TM ⊕ T*M`.
//!
//! Two complementary toolsets live here. The exact side ([`z2`]) computes
//! total Stiefel-Whitney classes of real projective spaces in
//! `Z_2[a]/(a^{n+1})` and the resulting triviality obstructions, plus the
//! stable-range bound that settles every sphere. The numerical side
//! ([`manifold`], [`frame`], [`structure`], [`verify`]) builds the explicit
//! trivializing frames of the Möbius strip, Klein bottle, circle and
//! three-sphere, the generalized almost complex/paracomplex structures they
//! and a metric induce, and certifies pointwise linear independence,
//! overlap consistency and the operator identities on deterministic sample
//! grids.
//!
//! Everything is immutable after construction and evaluation is pure, so
//! values can be shared freely across threads.

pub mod config;
pub mod error;
pub mod expr;
pub mod frame;
pub mod manifold;
pub mod metric;
pub mod section;
pub mod structure;
pub mod verify;
pub mod z2;

pub use error::{Error, Result};
