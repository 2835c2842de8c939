//! Polynomials over the coefficient field, jets at a point and Hasse
//! differential operators.

mod jet;
mod poly;
mod ring;

pub use jet::{ord_at_origin, Jet, JetBasis, OrdValue};
pub use poly::{monomials_of_degree, Exponents, Poly};
pub use ring::{Matrix, Point, RingContext};
