use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::field::Field;

/// Exponent vector of a monomial.
///
/// Ordered graded-lexicographically: by total degree, then so that
/// `x1^2 < x1*x2 < x2^2` within a degree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exponents {
    degree: u32,
    exps: Vec<u32>,
}

impl Exponents {
    pub fn new(exps: Vec<u32>) -> Self {
        let degree = exps.iter().sum();
        Exponents { degree, exps }
    }

    pub fn zero(nvars: usize) -> Self {
        Exponents {
            degree: 0,
            exps: vec![0; nvars],
        }
    }

    pub fn unit(nvars: usize, var: usize, power: u32) -> Self {
        let mut exps = vec![0; nvars];
        exps[var] = power;
        Exponents {
            degree: power,
            exps,
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.exps
    }

    pub fn get(&self, i: usize) -> u32 {
        self.exps[i]
    }

    pub fn add(&self, other: &Exponents) -> Exponents {
        Exponents {
            degree: self.degree + other.degree,
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `self - other`, when every component stays nonnegative.
    pub fn checked_sub(&self, other: &Exponents) -> Option<Exponents> {
        let mut exps = Vec::with_capacity(self.exps.len());
        for (a, b) in self.exps.iter().zip(&other.exps) {
            exps.push(a.checked_sub(*b)?);
        }
        Some(Exponents {
            degree: self.degree - other.degree,
            exps,
        })
    }

    /// Componentwise `self <= other`.
    pub fn divides(&self, other: &Exponents) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Exponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps)
    }
}

impl From<Vec<u32>> for Exponents {
    fn from(v: Vec<u32>) -> Self {
        Exponents::new(v)
    }
}

/// All exponent vectors of total degree `n` in `nvars` variables, in
/// graded-lexicographic order.
pub fn monomials_of_degree(nvars: usize, n: u32) -> Vec<Exponents> {
    fn rec(rest: usize, n: u32, prefix: &mut Vec<u32>, out: &mut Vec<Exponents>) {
        if rest == 1 {
            prefix.push(n);
            out.push(Exponents::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=n).rev() {
            prefix.push(first);
            rec(rest - 1, n - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if n == 0 {
            out.push(Exponents::new(Vec::new()));
        }
        return out;
    }
    rec(nvars, n, &mut Vec::with_capacity(nvars), &mut out);
    out
}

/// Sparse multivariate polynomial. Zero coefficients are never stored.
pub struct Poly<K: Field> {
    nvars: usize,
    terms: BTreeMap<Exponents, K::Elem>,
}

impl<K: Field> Clone for Poly<K> {
    fn clone(&self) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self.terms.clone(),
        }
    }
}

impl<K: Field> PartialEq for Poly<K> {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.terms == other.terms
    }
}

impl<K: Field> Eq for Poly<K> {}

impl<K: Field> std::hash::Hash for Poly<K> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.nvars.hash(state);
        for (e, c) in &self.terms {
            e.hash(state);
            c.hash(state);
        }
    }
}

impl<K: Field> fmt::Debug for Poly<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

impl<K: Field> Poly<K> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    /// Builds a polynomial from terms, dropping the ones the caller marks as
    /// zero. Repeated exponents must already be merged.
    pub(crate) fn from_map(nvars: usize, terms: BTreeMap<Exponents, K::Elem>) -> Self {
        Poly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &K::Elem)> + '_ {
        self.terms.iter()
    }

    pub fn coefficient(&self, e: &Exponents) -> Option<&K::Elem> {
        self.terms.get(e)
    }

    /// Largest total degree, `None` for zero.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Exponents::degree)
    }

    /// Smallest total degree of a term, i.e. the order at the origin.
    pub fn ord(&self) -> Option<u32> {
        self.terms.keys().next().map(Exponents::degree)
    }

    /// Lowest term in the monomial order.
    pub fn lowest_term(&self) -> Option<(&Exponents, &K::Elem)> {
        self.terms.iter().next()
    }

    pub fn truncated(&self, max_degree: usize) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.degree() as usize <= max_degree)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn homogeneous_part(&self, n: u32) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.degree() == n)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub(crate) fn terms_mut(&mut self) -> &mut BTreeMap<Exponents, K::Elem> {
        &mut self.terms
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaloisField;

    #[test]
    fn graded_order_within_degree() {
        let got = monomials_of_degree(2, 2);
        let want: Vec<Exponents> = vec![vec![2, 0].into(), vec![1, 1].into(), vec![0, 2].into()];
        assert_eq!(got, want);
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(sorted, want);
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials_of_degree(1, 0), vec![Exponents::new(vec![0])]);
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        // C(n + d - 1, d - 1)
        assert_eq!(monomials_of_degree(4, 5).len(), 56);
    }

    #[test]
    fn degree_dominates_order() {
        let a: Exponents = vec![0, 1].into();
        let b: Exponents = vec![2, 0].into();
        assert!(a < b);
    }

    #[test]
    fn zero_poly_has_no_order() {
        let z: Poly<GaloisField> = Poly::zero(2);
        assert!(z.is_zero());
        assert_eq!(z.ord(), None);
        assert_eq!(z.degree(), None);
    }
}
