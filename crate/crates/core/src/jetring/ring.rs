use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::poly::{Exponents, Poly};
use crate::error::{Error, Result};
use crate::field::{split_signed_terms, Field};

/// Coordinates of a rational closed point.
pub type Point<K> = Vec<<K as Field>::Elem>;

/// Square matrix over the field, stored row by row.
pub type Matrix<K> = Vec<Vec<<K as Field>::Elem>>;

/// The ambient polynomial ring `k[x_1, ..., x_d]`.
#[derive(Clone)]
pub struct RingContext<K: Field> {
    field: K,
    vars: Vec<String>,
}

impl<K: Field> fmt::Debug for RingContext<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}]", self.field, self.vars.join(","))
    }
}

impl<K: Field> RingContext<K> {
    pub fn new<S: AsRef<str>>(field: K, vars: &[S]) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::Parse("at least one variable is required".into()));
        }
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().trim().to_string()).collect();
        for (i, v) in vars.iter().enumerate() {
            let valid = v
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::Parse(format!("invalid variable name `{v}`")));
            }
            if vars[..i].contains(v) {
                return Err(Error::Parse(format!("duplicate variable `{v}`")));
            }
        }
        Ok(RingContext { field, vars })
    }

    /// Ring with variables `x1, ..., xd`.
    pub fn with_dimension(field: K, d: usize) -> Result<Self> {
        let names: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        Self::new(field, &names)
    }

    pub fn field(&self) -> &K {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    /// The characteristic, `None` in characteristic zero.
    pub fn characteristic(&self) -> Option<u64> {
        self.field.characteristic()
    }

    /// `p^e`, or `None` on overflow. In characteristic zero only `e = 0` is
    /// meaningful and gives 1.
    pub fn prime_power(&self, e: u32) -> Option<u64> {
        match self.characteristic() {
            Some(p) => p.checked_pow(e),
            None if e == 0 => Some(1),
            None => None,
        }
    }

    /// The same ring with one more variable appended.
    pub fn extended(&self, name: &str) -> Result<Self> {
        let mut vars = self.vars.clone();
        vars.push(name.to_string());
        Self::new(self.field.clone(), &vars)
    }

    pub fn zero(&self) -> Poly<K> {
        Poly::zero(self.dim())
    }

    pub fn one(&self) -> Poly<K> {
        self.constant(self.field.one())
    }

    pub fn constant(&self, c: K::Elem) -> Poly<K> {
        self.monomial(Exponents::zero(self.dim()), c)
    }

    pub fn var(&self, i: usize) -> Poly<K> {
        self.monomial(Exponents::unit(self.dim(), i, 1), self.field.one())
    }

    pub fn monomial(&self, e: Exponents, c: K::Elem) -> Poly<K> {
        let mut terms = BTreeMap::new();
        if !self.field.is_zero(&c) {
            terms.insert(e, c);
        }
        Poly::from_map(self.dim(), terms)
    }

    pub fn check(&self, f: &Poly<K>) -> Result<()> {
        if f.nvars() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.nvars(),
            });
        }
        Ok(())
    }

    pub fn check_point(&self, p: &[K::Elem]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn origin(&self) -> Point<K> {
        vec![self.field.zero(); self.dim()]
    }

    fn add_term(&self, terms: &mut BTreeMap<Exponents, K::Elem>, e: Exponents, c: K::Elem) {
        if self.field.is_zero(&c) {
            return;
        }
        match terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = self.field.add(o.get(), &c);
                if self.field.is_zero(&s) {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, f: &Poly<K>, g: &Poly<K>) -> Poly<K> {
        let mut out = f.clone();
        self.add_assign(&mut out, g);
        out
    }

    pub fn add_assign(&self, f: &mut Poly<K>, g: &Poly<K>) {
        let terms = f.terms_mut();
        for (e, c) in g.terms() {
            self.add_term(terms, e.clone(), c.clone());
        }
    }

    /// `f += c * g`.
    pub fn add_scaled_assign(&self, f: &mut Poly<K>, c: &K::Elem, g: &Poly<K>) {
        if self.field.is_zero(c) {
            return;
        }
        let terms = f.terms_mut();
        for (e, gc) in g.terms() {
            self.add_term(terms, e.clone(), self.field.mul(c, gc));
        }
    }

    pub fn sub(&self, f: &Poly<K>, g: &Poly<K>) -> Poly<K> {
        let mut out = f.clone();
        self.add_scaled_assign(&mut out, &self.field.neg(&self.field.one()), g);
        out
    }

    pub fn neg(&self, f: &Poly<K>) -> Poly<K> {
        self.scale(f, &self.field.neg(&self.field.one()))
    }

    pub fn scale(&self, f: &Poly<K>, c: &K::Elem) -> Poly<K> {
        if self.field.is_zero(c) {
            return self.zero();
        }
        let terms = f
            .terms()
            .map(|(e, x)| (e.clone(), self.field.mul(x, c)))
            .filter(|(_, x)| !self.field.is_zero(x))
            .collect();
        Poly::from_map(self.dim(), terms)
    }

    pub fn mul(&self, f: &Poly<K>, g: &Poly<K>) -> Poly<K> {
        self.mul_bounded(f, g, None)
    }

    /// Product modulo `m^(T+1)`.
    pub fn mul_truncated(&self, f: &Poly<K>, g: &Poly<K>, truncation: usize) -> Poly<K> {
        self.mul_bounded(f, g, Some(truncation))
    }

    fn mul_bounded(&self, f: &Poly<K>, g: &Poly<K>, bound: Option<usize>) -> Poly<K> {
        let mut terms = BTreeMap::new();
        for (ef, cf) in f.terms() {
            if let Some(t) = bound {
                if ef.degree() as usize > t {
                    break;
                }
            }
            for (eg, cg) in g.terms() {
                if let Some(t) = bound {
                    if (ef.degree() + eg.degree()) as usize > t {
                        break;
                    }
                }
                self.add_term(&mut terms, ef.add(eg), self.field.mul(cf, cg));
            }
        }
        Poly::from_map(self.dim(), terms)
    }

    pub fn pow(&self, f: &Poly<K>, n: u64) -> Poly<K> {
        self.pow_bounded(f, n, None)
    }

    pub fn pow_truncated(&self, f: &Poly<K>, n: u64, truncation: usize) -> Poly<K> {
        self.pow_bounded(f, n, Some(truncation))
    }

    fn pow_bounded(&self, f: &Poly<K>, mut n: u64, bound: Option<usize>) -> Poly<K> {
        let mut acc = self.one();
        let mut base = f.clone();
        if let Some(t) = bound {
            acc = acc.truncated(t);
            base = base.truncated(t);
        }
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul_bounded(&acc, &base, bound);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul_bounded(&base, &base, bound);
            }
        }
        acc
    }

    /// Multiplies by the monomial `x^e`.
    pub fn shift(&self, f: &Poly<K>, e: &Exponents) -> Poly<K> {
        let terms = f.terms().map(|(m, c)| (m.add(e), c.clone())).collect();
        Poly::from_map(self.dim(), terms)
    }

    /// Hasse derivative: `D_I(x^J) = prod_l C(j_l, i_l) x^(J - I)`.
    pub fn hasse(&self, f: &Poly<K>, index: &Exponents) -> Result<Poly<K>> {
        self.check(f)?;
        if index.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: index.len(),
            });
        }
        let mut terms = BTreeMap::new();
        for (e, c) in f.terms() {
            let Some(rest) = e.checked_sub(index) else {
                continue;
            };
            let mut coef = c.clone();
            for l in 0..self.dim() {
                let b = self.field.binomial(e.get(l) as u64, index.get(l) as u64);
                coef = self.field.mul(&coef, &b);
                if self.field.is_zero(&coef) {
                    break;
                }
            }
            self.add_term(&mut terms, rest, coef);
        }
        Ok(Poly::from_map(self.dim(), terms))
    }

    pub fn eval(&self, f: &Poly<K>, p: &[K::Elem]) -> Result<K::Elem> {
        self.check(f)?;
        self.check_point(p)?;
        let mut acc = self.field.zero();
        for (e, c) in f.terms() {
            let mut t = c.clone();
            for (l, &k) in e.as_slice().iter().enumerate() {
                if k > 0 {
                    t = self.field.mul(&t, &self.field.pow(&p[l], k as u64));
                }
            }
            acc = self.field.add(&acc, &t);
        }
        Ok(acc)
    }

    /// `f(x + P)`, which moves the point `P` to the origin.
    pub fn translate(&self, f: &Poly<K>, p: &[K::Elem]) -> Result<Poly<K>> {
        self.check(f)?;
        self.check_point(p)?;
        if p.iter().all(|c| self.field.is_zero(c)) {
            return Ok(f.clone());
        }
        let d = self.dim();
        let max_exp = f
            .terms()
            .flat_map(|(e, _)| e.as_slice().iter().copied())
            .max()
            .unwrap_or(0) as usize;
        let powers: Vec<Vec<K::Elem>> = p
            .iter()
            .map(|c| {
                let mut v = Vec::with_capacity(max_exp + 1);
                let mut acc = self.field.one();
                for _ in 0..=max_exp {
                    v.push(acc.clone());
                    acc = self.field.mul(&acc, c);
                }
                v
            })
            .collect();
        let mut terms = BTreeMap::new();
        for (e, c) in f.terms() {
            let mut partial: Vec<(Vec<u32>, K::Elem)> = vec![(vec![0; d], c.clone())];
            for l in 0..d {
                let j = e.get(l);
                if j == 0 {
                    continue;
                }
                let mut next = Vec::with_capacity(partial.len() * (j as usize + 1));
                for (exps, coef) in &partial {
                    for k in 0..=j {
                        let b = self.field.binomial(j as u64, k as u64);
                        let w = self.field.mul(&b, &powers[l][(j - k) as usize]);
                        if self.field.is_zero(&w) {
                            continue;
                        }
                        let mut ex = exps.clone();
                        ex[l] = k;
                        next.push((ex, self.field.mul(coef, &w)));
                    }
                }
                partial = next;
            }
            for (ex, coef) in partial {
                self.add_term(&mut terms, Exponents::new(ex), coef);
            }
        }
        Ok(Poly::from_map(d, terms))
    }

    pub fn negate_point(&self, p: &[K::Elem]) -> Point<K> {
        p.iter().map(|c| self.field.neg(c)).collect()
    }

    /// Substitutes `x_i = sum_j m[i][j] y_j`, keeping degrees `<= bound`
    /// when a bound is given.
    pub fn linear_substitute(
        &self,
        f: &Poly<K>,
        m: &Matrix<K>,
        bound: Option<usize>,
    ) -> Result<Poly<K>> {
        self.check(f)?;
        let d = self.dim();
        if m.len() != d || m.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.len(),
            });
        }
        let forms: Vec<Poly<K>> = (0..d)
            .map(|i| {
                let mut terms = BTreeMap::new();
                for (j, c) in m[i].iter().enumerate() {
                    self.add_term(&mut terms, Exponents::unit(d, j, 1), c.clone());
                }
                Poly::from_map(d, terms)
            })
            .collect();
        let mut cache: HashMap<(usize, u32), Poly<K>> = HashMap::new();
        let mut out = self.zero();
        for (e, c) in f.terms() {
            if let Some(b) = bound {
                if e.degree() as usize > b {
                    break;
                }
            }
            let mut term = self.constant(c.clone());
            for (i, &k) in e.as_slice().iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let power = cache
                    .entry((i, k))
                    .or_insert_with(|| self.pow(&forms[i], k as u64))
                    .clone();
                term = self.mul_bounded(&term, &power, bound);
            }
            self.add_assign(&mut out, &term);
        }
        Ok(out)
    }

    /// Scales `f` so that its lowest term has coefficient one.
    pub fn monic(&self, f: &Poly<K>) -> Poly<K> {
        match f.lowest_term() {
            Some((_, c)) => {
                let inv = self.field.inv(c).expect("nonzero coefficient");
                self.scale(f, &inv)
            }
            None => f.clone(),
        }
    }

    pub fn parse_poly(&self, s: &str) -> Result<Poly<K>> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let mut out = self.zero();
        for (sign, term) in split_signed_terms(s)? {
            let mut coef = self.field.from_i64(sign);
            let mut exps = vec![0u32; self.dim()];
            for factor in term.split('*') {
                let factor = factor.trim();
                if factor.is_empty() {
                    return Err(Error::Parse(format!("empty factor in `{term}`")));
                }
                let (base, power) = match factor.rsplit_once('^') {
                    Some((b, e)) if !b.starts_with('(') || b.ends_with(')') => {
                        let e: u32 = e
                            .trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad exponent in `{factor}`")))?;
                        (b.trim(), Some(e))
                    }
                    _ => (factor, None),
                };
                if let Some(i) = self.vars.iter().position(|v| v == base) {
                    exps[i] += power.unwrap_or(1);
                    continue;
                }
                let scalar = self.parse_scalar_factor(base)?;
                let scalar = match power {
                    Some(_) if self.is_generator_name(base) => {
                        // `a^k` is a single field element in extension fields
                        self.field.parse(factor)?
                    }
                    Some(e) => self.field.pow(&scalar, e as u64),
                    None => scalar,
                };
                coef = self.field.mul(&coef, &scalar);
            }
            let e = Exponents::new(exps);
            let mono = self.monomial(e, coef);
            self.add_assign(&mut out, &mono);
        }
        Ok(out)
    }

    fn is_generator_name(&self, base: &str) -> bool {
        base == "a" && self.field.extension_degree() > 1
    }

    fn parse_scalar_factor(&self, s: &str) -> Result<K::Elem> {
        let inner = s
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(s);
        if self.field.characteristic().is_some() {
            if let Some((n, d)) = inner.split_once('/') {
                let n = self.field.parse(n)?;
                let d = self.field.parse(d)?;
                return self
                    .field
                    .div(&n, &d)
                    .ok_or_else(|| Error::Parse(format!("division by zero in `{s}`")));
            }
        }
        self.field
            .parse(inner)
            .map_err(|_| Error::Parse(format!("unknown variable or scalar `{s}`")))
    }

    pub fn format_poly(&self, f: &Poly<K>) -> String {
        if f.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (e, c) in f.terms() {
            let mono: Vec<String> = e
                .as_slice()
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| {
                    if k == 1 {
                        self.vars[i].clone()
                    } else {
                        format!("{}^{}", self.vars[i], k)
                    }
                })
                .collect();
            let mut cs = self.field.format(c);
            let negative = cs.starts_with('-');
            if negative {
                cs.remove(0);
            }
            let compound = cs.contains('+') || cs.contains('-');
            let term = if mono.is_empty() {
                if compound {
                    format!("({cs})")
                } else {
                    cs
                }
            } else if cs == "1" {
                mono.join("*")
            } else if compound {
                format!("({cs})*{}", mono.join("*"))
            } else {
                format!("{cs}*{}", mono.join("*"))
            };
            if out.is_empty() {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { "-" } else { "+" });
            }
            out.push_str(&term);
        }
        out
    }

    /// Parses `c1,c2,...`.
    pub fn parse_point(&self, s: &str) -> Result<Point<K>> {
        let p: Vec<K::Elem> = s
            .split(',')
            .map(|c| self.parse_scalar_factor(c.trim()))
            .collect::<Result<_>>()?;
        self.check_point(&p)?;
        Ok(p)
    }

    pub fn format_point(&self, p: &[K::Elem]) -> String {
        p.iter()
            .map(|c| self.field.format(c))
            .collect::<Vec<_>>()
            .join(",")
    }
}
