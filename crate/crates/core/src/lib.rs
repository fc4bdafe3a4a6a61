//! Finite-dimensional quantum instruments and their calculus.
//!
//! An *operation* is a completely positive trace-non-increasing map in Kraus
//! form, possibly between different Hilbert spaces; an *instrument* is an
//! outcome-labeled family of operations whose sum is a channel. This crate
//! implements the instrument combinators (sequential products, conditioning,
//! marginals, reductions, convex combinations, post-processing, tensor
//! products), the named families (Holevo, Kraus, Lüders, trivial),
//! coexistence certificates with the standard joint constructions, and
//! measurement models built from an interaction instrument and a probe
//! observable.
//!
//! All spaces are finite dimensional (dims ≤ 16 in practice) and everything
//! is dense, immutable and pure: values can be shared freely across threads.

pub mod coexistence;
pub mod error;
pub mod families;
pub mod instrument;
pub mod linalg;
pub mod models;
pub mod objects;
pub mod operation;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Tolerances};
pub use num_complex::Complex64;
