//! Simulation toolkit for agents that weigh computable environments by a prior
//! over program indices.
//!
//! The pieces, bottom up: a stack machine with a total index codec
//! ([`minilang`]), Cantor pairing and budgeted dovetailing ([`dovetail`]), the
//! agent/environment loop ([`interaction`]), prior and posterior bookkeeping
//! over enumerated programs ([`hypothesis`]), utilities with computable lower
//! and upper bounds ([`utility`]), busy-beaver style witnesses
//! ([`witness`]) and the expected-utility engine ([`engine`]).
//!
//! All probabilities and utilities are exact rationals. Work over program
//! indices runs on rayon when the `parallel` feature is on (the default) and
//! every reduction is committed in index order, so results do not depend on the
//! thread count.

pub mod dovetail;
pub mod engine;
pub mod error;
pub mod hypothesis;
pub mod interaction;
pub mod minilang;
pub mod num;
pub mod par;
pub mod utility;
pub mod witness;

pub use error::{Error, Result};
pub use num::{ExtRational, Rational};

/// Unbounded natural number.
pub type Natural = num_bigint::BigUint;
