use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use super::poly::{monomials_of_degree, Exponents, Poly};
use crate::error::{Error, Result};
use crate::field::Field;

/// Order of an element at the origin, with truncation censoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrdValue {
    Exact(u32),
    /// The jet vanished at truncation `n - 1`, so the true order is `>= n`.
    AtLeast(u32),
    Infinity,
}

impl OrdValue {
    pub fn exact(self) -> Option<u32> {
        match self {
            OrdValue::Exact(n) => Some(n),
            _ => None,
        }
    }

    /// Lower bound on the true value, `None` meaning infinity.
    pub fn lower_bound(self) -> Option<u32> {
        match self {
            OrdValue::Exact(n) | OrdValue::AtLeast(n) => Some(n),
            OrdValue::Infinity => None,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, OrdValue::AtLeast(_))
    }
}

impl fmt::Display for OrdValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdValue::Exact(n) => write!(f, "{n}"),
            OrdValue::AtLeast(n) => write!(f, ">={n}"),
            OrdValue::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for OrdValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A polynomial known modulo `m^(T+1)` at the origin.
///
/// `exact` records that no information was lost when the jet was formed, so
/// a zero exact jet stands for the zero element.
pub struct Jet<K: Field> {
    poly: Poly<K>,
    truncation: usize,
    exact: bool,
}

impl<K: Field> Clone for Jet<K> {
    fn clone(&self) -> Self {
        Jet {
            poly: self.poly.clone(),
            truncation: self.truncation,
            exact: self.exact,
        }
    }
}

impl<K: Field> fmt::Debug for Jet<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("poly", &self.poly)
            .field("truncation", &self.truncation)
            .field("exact", &self.exact)
            .finish()
    }
}

impl<K: Field> PartialEq for Jet<K> {
    fn eq(&self, other: &Self) -> bool {
        self.truncation == other.truncation && self.poly == other.poly
    }
}

impl<K: Field> Jet<K> {
    /// Drops every monomial of degree above `truncation`.
    pub fn truncate(f: &Poly<K>, truncation: usize) -> Self {
        let poly = f.truncated(truncation);
        let exact = poly.num_terms() == f.num_terms();
        Jet {
            poly,
            truncation,
            exact,
        }
    }

    /// Wraps a polynomial already known only modulo `m^(T+1)`.
    pub fn from_truncated(poly: Poly<K>, truncation: usize) -> Self {
        let poly = poly.truncated(truncation);
        Jet {
            poly,
            truncation,
            exact: false,
        }
    }

    pub fn poly(&self) -> &Poly<K> {
        &self.poly
    }

    pub fn into_poly(self) -> Poly<K> {
        self.poly
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn ord(&self) -> OrdValue {
        match self.poly.ord() {
            Some(n) => OrdValue::Exact(n),
            None if self.exact => OrdValue::Infinity,
            None => OrdValue::AtLeast(self.truncation as u32 + 1),
        }
    }

    pub fn check_truncation(&self, other: &Jet<K>) -> Result<()> {
        if self.truncation != other.truncation {
            return Err(Error::TruncationMismatch(self.truncation, other.truncation));
        }
        Ok(())
    }
}

/// Order at the origin of a jet.
pub fn ord_at_origin<K: Field>(j: &Jet<K>) -> OrdValue {
    j.ord()
}

/// Dense coordinates on the jet space `R / m^(T+1)`: all monomials of degree
/// at most `T`, in ascending graded order.
#[derive(Debug)]
pub struct JetBasis {
    nvars: usize,
    truncation: usize,
    monomials: Vec<Exponents>,
    index: HashMap<Exponents, usize>,
    degree_start: Vec<usize>,
}

impl JetBasis {
    pub fn new(nvars: usize, truncation: usize) -> Arc<Self> {
        let mut monomials = Vec::new();
        let mut degree_start = Vec::with_capacity(truncation + 2);
        for n in 0..=truncation {
            degree_start.push(monomials.len());
            monomials.extend(monomials_of_degree(nvars, n as u32));
        }
        degree_start.push(monomials.len());
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Arc::new(JetBasis {
            nvars,
            truncation,
            monomials,
            index,
            degree_start,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn monomial(&self, i: usize) -> &Exponents {
        &self.monomials[i]
    }

    pub fn position(&self, e: &Exponents) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// Column range of the monomials of degree exactly `n`.
    pub fn degree_range(&self, n: usize) -> std::ops::Range<usize> {
        if n > self.truncation {
            return self.monomials.len()..self.monomials.len();
        }
        self.degree_start[n]..self.degree_start[n + 1]
    }

    pub fn to_dense<K: Field>(&self, field: &K, f: &Poly<K>) -> Vec<K::Elem> {
        let mut v = vec![field.zero(); self.dim()];
        for (e, c) in f.terms() {
            if let Some(i) = self.position(e) {
                v[i] = c.clone();
            }
        }
        v
    }

    pub fn from_dense<K: Field>(&self, field: &K, v: &[K::Elem]) -> Poly<K> {
        let terms = v
            .iter()
            .enumerate()
            .filter(|(_, c)| !field.is_zero(c))
            .map(|(i, c)| (self.monomials[i].clone(), c.clone()))
            .collect();
        Poly::from_map(self.nvars, terms)
    }

    /// Degree of the monomial at column `i`.
    pub fn degree_of(&self, i: usize) -> u32 {
        self.monomials[i].degree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaloisField;
    use crate::jetring::RingContext;

    #[test]
    fn ord_of_jets() {
        let r = RingContext::new(GaloisField::prime(2).unwrap(), &["x", "y"]).unwrap();
        let f = r.parse_poly("x^2*y+y^5").unwrap();
        assert_eq!(Jet::truncate(&f, 8).ord(), OrdValue::Exact(3));
        assert_eq!(Jet::truncate(&r.zero(), 5).ord(), OrdValue::Infinity);
        let high = r.parse_poly("x^9").unwrap();
        assert_eq!(Jet::truncate(&high, 8).ord(), OrdValue::AtLeast(9));
    }

    #[test]
    fn truncation_examples() {
        let r = RingContext::new(GaloisField::prime(3).unwrap(), &["x", "y"]).unwrap();
        let f = r.parse_poly("x^3+x").unwrap();
        assert_eq!(Jet::truncate(&f, 2).poly(), &r.parse_poly("x").unwrap());
        let g = r.parse_poly("x^2*y+y^2").unwrap();
        assert_eq!(Jet::truncate(&g, 3).poly(), &g);
    }

    #[test]
    fn dense_round_trip() {
        let r = RingContext::new(GaloisField::prime(5).unwrap(), &["x", "y", "z"]).unwrap();
        let basis = JetBasis::new(3, 4);
        assert_eq!(basis.dim(), 35);
        let f = r.parse_poly("3*x*y+2*z^4+1").unwrap();
        let v = basis.to_dense(r.field(), &f);
        assert_eq!(basis.from_dense(r.field(), &v), f);
        assert_eq!(basis.degree_range(2), 4..10);
    }
}
