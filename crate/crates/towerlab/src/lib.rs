//! towerlab: exact combinatorial machinery for group actions on
//! zero-dimensional compact spaces.
//!
//! The crate works with concrete Cantor systems (odometers over quotient
//! ladders, primitive substitution subshifts, finite products) and finitely
//! generated amenable groups (Z, Z^d, discrete Heisenberg, lamplighter).
//! Everything is computed in exact integer/rational arithmetic at a finite
//! cell resolution: Følner defects, quasitilings, Rokhlin-type castles,
//! subequivalence witnesses, type-semigroup equidecompositions,
//! almost-finiteness certificates and approximately equivariant simplex maps.
//!
//! All types are immutable after construction and all operations are pure,
//! so values can be shared freely across threads. With the `parallel`
//! feature (on by default) the heavy inner loops run on rayon; results are
//! identical to the sequential fallback.

pub mod afcheck;
pub mod amdim;
pub mod cantor;
pub mod comparison;
pub mod error;
pub mod flow;
pub mod group;
pub mod par;
pub mod quasitiling;
pub mod rat;
pub mod report;
pub mod towers;
pub mod typesemigroup;

pub use error::{Error, Result};
pub use rat::Rat;
