//! Exact computation of resolution invariants of D-saturated idealistic
//! filtrations over polynomial rings, at truncated jet precision.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`] and [`jetring`]: coefficient fields, polynomials, jets and
//!   Hasse differential operators;
//! * [`linalg`]: exact row reduction over a field;
//! * [`filtration`]: generated filtrations, D-saturation, level slices and
//!   membership;
//! * [`leading`]: leading-algebra dimensions, the invariant sigma, leading
//!   generator systems and pointwise purification;
//! * [`expansion`]: the constrained power-series expansion and the
//!   coefficient-lemma harnesses;
//! * [`invariants`]: mu-tilde, LGS independence, stratification and the
//!   nonsingularity check;
//! * [`instance`], [`random`] and [`verify`]: instance files, seeded random
//!   instances and the property suites shared by the CLI and the tests.

pub mod error;
pub mod expansion;
pub mod field;
pub mod filtration;
pub mod instance;
pub mod invariants;
pub mod jetring;
pub mod leading;
pub mod linalg;
pub mod random;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Field, GaloisField, Rationals};
pub use jetring::{Exponents, Jet, OrdValue, Point, Poly, RingContext};

/// Exact rational level of a filtration element.
pub type Level = num_rational::Ratio<i64>;
