//! Coefficient fields: finite fields `F_{p^m}` and the rationals.
//!
//! Arithmetic is done through a field object, so that runtime parameters
//! (the characteristic, the defining modulus) live in one place and elements
//! stay small.

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Largest field order for which extension fields are supported.
pub const MAX_EXTENSION_ORDER: u64 = 1 << 20;

pub trait Field: Clone + fmt::Debug + Send + Sync + 'static {
    type Elem: Clone + PartialEq + Eq + Hash + fmt::Debug + Send + Sync + 'static;

    /// `None` stands for characteristic zero.
    fn characteristic(&self) -> Option<u64>;
    fn extension_degree(&self) -> u32;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn from_i64(&self, n: i64) -> Self::Elem;

    /// `C(n, k)` as a field element.
    fn binomial(&self, n: u64, k: u64) -> Self::Elem;

    /// Inverse of the `e`-fold Frobenius map. Identity in characteristic zero.
    fn frobenius_root(&self, a: &Self::Elem, e: u32) -> Self::Elem;

    fn random(&self, rng: &mut dyn rand::RngCore) -> Self::Elem;

    /// All elements, in a fixed order, when the field is finite.
    fn elements(&self) -> Option<Vec<Self::Elem>>;

    fn parse(&self, s: &str) -> Result<Self::Elem>;
    fn format(&self, a: &Self::Elem) -> String;

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    fn pow(&self, a: &Self::Elem, mut n: u64) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            n >>= 1;
        }
        acc
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|bi| self.mul(a, &bi))
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2u64;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

/// `C(n, k) mod p` through base-`p` digits (Lucas).
pub fn binomial_mod_p(mut n: u64, mut k: u64, p: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut acc = 1u64;
    while n > 0 || k > 0 {
        let (nd, kd) = (n % p, k % p);
        if kd > nd {
            return 0;
        }
        acc = acc * small_binomial_mod_p(nd, kd, p) % p;
        n /= p;
        k /= p;
    }
    acc
}

// n < p, so every denominator is a unit mod p.
fn small_binomial_mod_p(n: u64, k: u64, p: u64) -> u64 {
    let k = k.min(n - k);
    let mut num = 1u64;
    let mut den = 1u64;
    for j in 0..k {
        num = num * ((n - j) % p) % p;
        den = den * ((j + 1) % p) % p;
    }
    num * pow_mod(den, p - 2, p) % p
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// The finite field `F_{p^m}`.
///
/// Elements are encoded as integers `sum c_i p^i` standing for
/// `sum c_i a^i`, where `a` is a root of a primitive modulus. Extension
/// fields multiply through discrete-log tables.
#[derive(Clone)]
pub struct GaloisField {
    p: u64,
    m: u32,
    q: u64,
    modulus: Vec<u64>,
    exp: Arc<Vec<u32>>,
    log: Arc<Vec<u32>>,
}

impl fmt::Debug for GaloisField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{})", self.p, self.m)
    }
}

impl GaloisField {
    pub fn prime(p: u64) -> Result<Self> {
        Self::new(p, 1, None)
    }

    /// Builds `F_{p^m}`. For `m > 1` the modulus (low-to-high coefficients,
    /// monic, length `m + 1`) must be primitive; when omitted the
    /// lexicographically smallest primitive polynomial is used.
    pub fn new(p: u64, m: u32, modulus: Option<Vec<u64>>) -> Result<Self> {
        if !is_prime(p) || p >= (1 << 31) {
            return Err(Error::InvalidField(format!("{p} is not a supported prime")));
        }
        if m == 0 {
            return Err(Error::InvalidField("extension degree must be >= 1".into()));
        }
        if m == 1 {
            return Ok(GaloisField {
                p,
                m,
                q: p,
                modulus: vec![0, 1],
                exp: Arc::new(Vec::new()),
                log: Arc::new(Vec::new()),
            });
        }
        let q = p
            .checked_pow(m)
            .filter(|&q| q <= MAX_EXTENSION_ORDER)
            .ok_or_else(|| Error::InvalidField(format!("{p}^{m} exceeds supported order")))?;
        let modulus = match modulus {
            Some(md) => {
                if md.len() != m as usize + 1 || md[m as usize] != 1 || md.iter().any(|&c| c >= p) {
                    return Err(Error::InvalidField(
                        "modulus must be monic of degree m with coefficients < p".into(),
                    ));
                }
                if power_table(p, m, &md).is_none() {
                    return Err(Error::InvalidField("modulus is not primitive".into()));
                }
                md
            }
            None => smallest_primitive(p, m),
        };
        let exp = power_table(p, m, &modulus).expect("primitive modulus");
        let mut log = vec![0u32; q as usize];
        for (i, &v) in exp.iter().enumerate() {
            log[v as usize] = i as u32;
        }
        Ok(GaloisField {
            p,
            m,
            q,
            modulus,
            exp: Arc::new(exp),
            log: Arc::new(log),
        })
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    fn digits(&self, a: u32) -> Vec<u64> {
        let mut a = a as u64;
        let mut out = Vec::with_capacity(self.m as usize);
        for _ in 0..self.m {
            out.push(a % self.p);
            a /= self.p;
        }
        out
    }
}

/// Powers of `a` modulo `modulus`, or `None` if `a` does not have order `p^m - 1`.
fn power_table(p: u64, m: u32, modulus: &[u64]) -> Option<Vec<u32>> {
    let q = p.pow(m);
    let m = m as usize;
    let encode = |ds: &[u64]| ds.iter().rev().fold(0u64, |acc, &d| acc * p + d) as u32;
    let mut cur = vec![0u64; m];
    cur[0] = 1;
    let mut seen = vec![false; q as usize];
    let mut table = Vec::with_capacity(q as usize - 1);
    for _ in 0..q - 1 {
        let code = encode(&cur);
        if seen[code as usize] {
            return None;
        }
        seen[code as usize] = true;
        table.push(code);
        // multiply by a and reduce by the monic modulus
        let top = cur[m - 1];
        for i in (1..m).rev() {
            cur[i] = cur[i - 1];
        }
        cur[0] = 0;
        for i in 0..m {
            cur[i] = (cur[i] + (p - top) * modulus[i]) % p;
        }
    }
    if encode(&cur) != 1 {
        return None;
    }
    Some(table)
}

fn smallest_primitive(p: u64, m: u32) -> Vec<u64> {
    let count = p.pow(m);
    for code in 0..count {
        let mut md = Vec::with_capacity(m as usize + 1);
        let mut c = code;
        for _ in 0..m {
            md.push(c % p);
            c /= p;
        }
        md.push(1);
        if md[0] == 0 {
            continue;
        }
        if power_table(p, m, &md).is_some() {
            return md;
        }
    }
    unreachable!("a primitive polynomial always exists")
}

impl Field for GaloisField {
    type Elem = u32;

    fn characteristic(&self) -> Option<u64> {
        Some(self.p)
    }

    fn extension_degree(&self) -> u32 {
        self.m
    }

    fn zero(&self) -> u32 {
        0
    }

    fn one(&self) -> u32 {
        1
    }

    fn is_zero(&self, a: &u32) -> bool {
        *a == 0
    }

    fn add(&self, a: &u32, b: &u32) -> u32 {
        if self.m == 1 {
            return ((*a as u64 + *b as u64) % self.p) as u32;
        }
        let (mut x, mut y) = (*a as u64, *b as u64);
        let (mut acc, mut place) = (0u64, 1u64);
        while x > 0 || y > 0 {
            acc += ((x % self.p + y % self.p) % self.p) * place;
            x /= self.p;
            y /= self.p;
            place *= self.p;
        }
        acc as u32
    }

    fn sub(&self, a: &u32, b: &u32) -> u32 {
        self.add(a, &self.neg(b))
    }

    fn neg(&self, a: &u32) -> u32 {
        if self.m == 1 {
            return ((self.p - *a as u64) % self.p) as u32;
        }
        let mut x = *a as u64;
        let (mut acc, mut place) = (0u64, 1u64);
        while x > 0 {
            acc += ((self.p - x % self.p) % self.p) * place;
            x /= self.p;
            place *= self.p;
        }
        acc as u32
    }

    fn mul(&self, a: &u32, b: &u32) -> u32 {
        if self.m == 1 {
            return ((*a as u64 * *b as u64) % self.p) as u32;
        }
        if *a == 0 || *b == 0 {
            return 0;
        }
        let l = (self.log[*a as usize] as u64 + self.log[*b as usize] as u64) % (self.q - 1);
        self.exp[l as usize]
    }

    fn inv(&self, a: &u32) -> Option<u32> {
        if *a == 0 {
            return None;
        }
        if self.m == 1 {
            return Some(pow_mod(*a as u64, self.p - 2, self.p) as u32);
        }
        let l = (self.q - 1 - self.log[*a as usize] as u64) % (self.q - 1);
        Some(self.exp[l as usize])
    }

    fn from_i64(&self, n: i64) -> u32 {
        n.rem_euclid(self.p as i64) as u32
    }

    fn binomial(&self, n: u64, k: u64) -> u32 {
        binomial_mod_p(n, k, self.p) as u32
    }

    fn frobenius_root(&self, a: &u32, e: u32) -> u32 {
        // F^m is the identity, so F^{-e} = F^{m - (e mod m)}.
        let r = (self.m - e % self.m) % self.m;
        self.pow(a, self.p.pow(r))
    }

    fn random(&self, rng: &mut dyn rand::RngCore) -> u32 {
        rng.gen_range(0..self.q) as u32
    }

    fn elements(&self) -> Option<Vec<u32>> {
        Some((0..self.q as u32).collect())
    }

    fn parse(&self, s: &str) -> Result<u32> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty scalar".into()));
        }
        if let Ok(n) = s.parse::<i64>() {
            return Ok(self.from_i64(n));
        }
        if let Ok(n) = s.parse::<BigInt>() {
            let r = (n % BigInt::from(self.p) + BigInt::from(self.p)) % BigInt::from(self.p);
            return Ok(r.to_u64().unwrap() as u32);
        }
        if self.m == 1 {
            return Err(Error::Parse(format!("invalid scalar `{s}`")));
        }
        // polynomial in the generator `a`
        let mut acc = 0u32;
        for (sign, term) in split_signed_terms(s)? {
            let (coef, power) = match term.split_once('*') {
                Some((c, g)) => (c.trim().parse::<i64>().map_err(|_| bad(s))?, gen_power(g)?),
                None if term.trim().starts_with('a') => (1, gen_power(&term)?),
                None => (term.trim().parse::<i64>().map_err(|_| bad(s))?, 0),
            };
            let gen = if power == 0 {
                1
            } else {
                self.exp[(power as u64 % (self.q - 1)) as usize]
            };
            let t = self.mul(&self.from_i64(sign * coef), &gen);
            acc = self.add(&acc, &t);
        }
        Ok(acc)
    }

    fn format(&self, a: &u32) -> String {
        if self.m == 1 {
            return a.to_string();
        }
        let ds = self.digits(*a);
        let mut parts = Vec::new();
        for (i, &c) in ds.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let g = match i {
                0 => String::new(),
                1 => "a".to_string(),
                _ => format!("a^{i}"),
            };
            parts.push(match (c, i) {
                (_, 0) => c.to_string(),
                (1, _) => g,
                _ => format!("{c}*{g}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

fn bad(s: &str) -> Error {
    Error::Parse(format!("invalid scalar `{s}`"))
}

fn gen_power(g: &str) -> Result<u32> {
    let g = g.trim();
    match g.strip_prefix('a') {
        Some("") => Ok(1),
        Some(rest) => rest
            .strip_prefix('^')
            .and_then(|e| e.trim().parse().ok())
            .ok_or_else(|| bad(g)),
        None => Err(bad(g)),
    }
}

/// Splits `t1 + t2 - t3` into signed terms. A leading sign is allowed.
pub(crate) fn split_signed_terms(s: &str) -> Result<Vec<(i64, String)>> {
    let dangling = || Error::Parse(format!("dangling operator in `{s}`"));
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut sign = 1i64;
    let mut depth = 0i32;
    for ch in s.chars().filter(|c| !c.is_whitespace()) {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            '+' | '-' if depth == 0 && !cur.ends_with('^') && !cur.ends_with('/') => {
                if cur.is_empty() {
                    if !out.is_empty() {
                        return Err(dangling());
                    }
                } else {
                    out.push((sign, std::mem::take(&mut cur)));
                }
                sign = if ch == '-' { -1 } else { 1 };
            }
            _ => cur.push(ch),
        }
    }
    if cur.is_empty() {
        return Err(dangling());
    }
    out.push((sign, cur));
    Ok(out)
}

/// The rationals, for the characteristic-zero mode.
#[derive(Clone, Debug, Default)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn characteristic(&self) -> Option<u64> {
        None
    }

    fn extension_degree(&self) -> u32 {
        1
    }

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }

    fn one(&self) -> BigRational {
        BigRational::one()
    }

    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }

    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }

    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }

    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }

    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }

    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }

    fn from_i64(&self, n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn binomial(&self, n: u64, k: u64) -> BigRational {
        if k > n {
            return BigRational::zero();
        }
        let k = k.min(n - k);
        let mut acc = BigInt::one();
        for j in 0..k {
            acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
        }
        BigRational::from_integer(acc)
    }

    fn frobenius_root(&self, a: &BigRational, _e: u32) -> BigRational {
        a.clone()
    }

    fn random(&self, rng: &mut dyn rand::RngCore) -> BigRational {
        let num: i64 = rng.gen_range(-4..=4);
        let den: i64 = rng.gen_range(1..=3);
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn elements(&self) -> Option<Vec<BigRational>> {
        None
    }

    fn parse(&self, s: &str) -> Result<BigRational> {
        let s = s.trim();
        let parse_int = |t: &str| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("invalid rational `{s}`")))
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse_int(d)?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in `{s}`")));
                }
                Ok(BigRational::new(parse_int(n)?, d))
            }
            None => Ok(BigRational::from_integer(parse_int(s)?)),
        }
    }

    fn format(&self, a: &BigRational) -> String {
        if a.is_integer() {
            a.numer().to_string()
        } else if a.is_negative() {
            format!("-{}/{}", a.numer().abs(), a.denom())
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }
}
