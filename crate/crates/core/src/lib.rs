//! Exact computation with symbolic subsets of the naturals `{1, 2, 3, ...}`.
//!
//! Sets are finite expression trees ([`SetExpr`]) built from finite sets,
//! arithmetic progressions, unions of scheme intervals and boolean
//! operations. On top of that the crate decides membership in a handful of
//! concrete ideals with re-checkable certificates, evaluates several upper
//! densities exactly where the structure allows it, and builds translation
//! almost disjoint families from eventually periodic binary branches.

#![no_std]

extern crate alloc;

use core::fmt;

mod branch;
mod count;
pub mod densities;
mod expr;
pub mod families;
mod form;
pub mod ideals;
mod periodic;
mod runs;
mod scheme;
mod shape;
mod span;
pub mod verify;

pub use branch::Branch;
pub use count::{prefix_count, prefix_count_closed, prefix_count_enumerated, prefix_count_with};
pub use expr::{Node, SetExpr};
pub use periodic::EpSet;
pub use runs::{enumerate, for_each_run, Budget};
pub use scheme::IntervalScheme;
pub use span::{classify_span, Span};

pub type Rational = num_rational::BigRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// An argument outside its documented range.
    Range(&'static str),
    /// Finite element lists must be strictly increasing.
    Unsorted,
    InvalidBranch(&'static str),
    /// An enumeration would exceed the configured element cap.
    Budget { limit: u64 },
    /// The expression lies outside the fragment a procedure can decide.
    Unsupported(&'static str),
    Overflow,
    /// The scheme's interval lengths do not tend to infinity.
    GapsBounded,
    DuplicateBranch,
    SameBranch,
    InvalidValue(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Range(what) => write!(f, "out of range: {what}"),
            Error::Unsorted => f.write_str("finite elements must be strictly increasing naturals"),
            Error::InvalidBranch(what) => write!(f, "invalid branch: {what}"),
            Error::Budget { limit } => write!(f, "budget exceeded: more than {limit} steps"),
            Error::Unsupported(what) => write!(f, "unsupported shape: {what}"),
            Error::Overflow => f.write_str("arithmetic overflow"),
            Error::GapsBounded => f.write_str("scheme gaps do not diverge"),
            Error::DuplicateBranch => f.write_str("duplicate branch"),
            Error::SameBranch => f.write_str("branches must be distinct"),
            Error::InvalidValue(what) => write!(f, "invalid value: {what}"),
        }
    }
}
