//! Finitely generated idealistic filtrations: D-saturation, localization,
//! level slices and truncated membership.
//!
//! The level-`t` slice of `G(T)` is the ideal generated by the products of
//! generators whose levels add up to at least `t`. Slices are realised in the
//! jet space `R_P / m_P^(T+1)` through the recursion
//! `I_t = sum_i g_i * I_(t - a_i)` (with `I_s = R` for `s <= 0`), keeping for
//! each slice only the products needed to generate it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::jetring::{monomials_of_degree, Exponents, Jet, JetBasis, Point, Poly, RingContext};
use crate::linalg::Echelon;
use crate::Level;

/// Parses a level: an integer, `num/den`, or a finite decimal.
pub fn parse_level(s: &str) -> Result<Level> {
    let s = s.trim();
    let err = || Error::Parse(format!("invalid level `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| err())?;
        let d: i64 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Level::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 15 {
            return Err(err());
        }
        let negative = whole.starts_with('-');
        let w: i64 = if whole.is_empty() || whole == "-" {
            0
        } else {
            whole.parse().map_err(|_| err())?
        };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| err())?;
        let num = w.abs() * den + f;
        return Ok(Level::new(if negative { -num } else { num }, den));
    }
    s.parse::<i64>().map(Level::from_integer).map_err(|_| err())
}

pub fn format_level(a: &Level) -> String {
    if a.is_integer() {
        a.numer().to_string()
    } else {
        format!("{}/{}", a.numer(), a.denom())
    }
}

/// `ceil(a)` for a level.
pub fn level_ceil(a: &Level) -> i64 {
    a.numer().div_ceil(a.denom())
}

pub struct Generator<K: Field> {
    pub poly: Poly<K>,
    pub level: Level,
}

impl<K: Field> Clone for Generator<K> {
    fn clone(&self) -> Self {
        Generator {
            poly: self.poly.clone(),
            level: self.level,
        }
    }
}

impl<K: Field> std::fmt::Debug for Generator<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:?}, {})", self.poly, format_level(&self.level))
    }
}

impl<K: Field> Generator<K> {
    pub fn new(poly: Poly<K>, level: Level) -> Self {
        Generator { poly, level }
    }
}

/// The filtration `G_R(T)` generated by a finite list of pairs.
#[derive(Clone, Debug)]
pub struct IdealisticFiltration<K: Field> {
    ring: RingContext<K>,
    generators: Vec<Generator<K>>,
    d_saturated: bool,
}

impl<K: Field> IdealisticFiltration<K> {
    pub fn generate(gens: Vec<Generator<K>>, ring: RingContext<K>) -> Result<Self> {
        for g in &gens {
            ring.check(&g.poly)?;
            if g.level.is_negative() {
                return Err(Error::Precondition(format!(
                    "negative level {}",
                    format_level(&g.level)
                )));
            }
        }
        Ok(IdealisticFiltration {
            ring,
            generators: gens,
            d_saturated: false,
        })
    }

    /// The filtration whose positive-level slices are all zero.
    pub fn trivial(ring: RingContext<K>) -> Self {
        IdealisticFiltration {
            ring,
            generators: Vec::new(),
            d_saturated: true,
        }
    }

    pub fn ring(&self) -> &RingContext<K> {
        &self.ring
    }

    pub fn generators(&self) -> &[Generator<K>] {
        &self.generators
    }

    pub fn is_d_saturated(&self) -> bool {
        self.d_saturated
    }

    /// Marks a generator list as already closed under differentiation, for
    /// instance files produced by [`d_saturate`](Self::d_saturate).
    pub fn assume_d_saturated(mut self) -> Self {
        self.d_saturated = true;
        self
    }

    /// Generators with positive level and nonzero polynomial.
    pub fn effective_generators(&self) -> impl Iterator<Item = &Generator<K>> + '_ {
        self.generators
            .iter()
            .filter(|g| g.level.is_positive() && !g.poly.is_zero())
    }

    pub fn max_level(&self) -> Level {
        self.effective_generators()
            .map(|g| g.level)
            .max()
            .unwrap_or_else(Level::zero)
    }

    /// Least common multiple of the level numerators; every exact value of
    /// mu-tilde is a multiple of its reciprocal.
    pub fn denominator_bound(&self) -> i64 {
        self.effective_generators()
            .map(|g| *g.level.numer())
            .fold(1i64, |acc, n| acc.lcm(&n))
    }

    /// Closes the generator list under `(f, a) -> (D_I f, a - |I|)` for
    /// `0 < |I| < a`, dropping pairs with zero polynomial or level `<= 0` and
    /// pairs dominated by the same polynomial at a higher level.
    pub fn d_saturate(&self) -> Self {
        let ring = &self.ring;
        let mut best: HashMap<Poly<K>, (Level, usize)> = HashMap::new();
        let mut out: Vec<Generator<K>> = Vec::new();
        let mut queue: Vec<usize> = Vec::new();
        let mut push = |g: Generator<K>, out: &mut Vec<Generator<K>>, queue: &mut Vec<usize>| {
            if g.poly.is_zero() || !g.level.is_positive() {
                return;
            }
            let key = ring.monic(&g.poly);
            match best.get(&key) {
                Some((lvl, _)) if *lvl >= g.level => {}
                Some(&(_, idx)) => {
                    out[idx].level = g.level;
                    best.insert(key, (g.level, idx));
                    queue.push(idx);
                }
                None => {
                    best.insert(key, (g.level, out.len()));
                    queue.push(out.len());
                    out.push(g);
                }
            }
        };
        for g in &self.generators {
            push(g.clone(), &mut out, &mut queue);
        }
        let d = ring.dim();
        while let Some(idx) = queue.pop() {
            let g = out[idx].clone();
            let top = level_ceil(&g.level) - 1;
            for n in 1..=top.max(0) as u32 {
                let lvl = g.level - Level::from_integer(n as i64);
                for index in monomials_of_degree(d, n) {
                    let deriv = ring.hasse(&g.poly, &index).expect("same ring");
                    push(Generator::new(deriv, lvl), &mut out, &mut queue);
                }
            }
        }
        IdealisticFiltration {
            ring: self.ring.clone(),
            generators: out,
            d_saturated: true,
        }
    }

    /// Whether every generator vanishes to order at least its level at `p`.
    /// D-saturation does not change the answer.
    pub fn in_support(&self, p: &[K::Elem]) -> Result<bool> {
        for g in self.effective_generators() {
            let local = self.ring.translate(&g.poly, p)?;
            let ord = local.ord().map_or(i64::MAX, i64::from);
            if Level::from_integer(ord) < g.level {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The same filtration with every generator written around `p`.
    pub fn translated(&self, p: &[K::Elem]) -> Result<Self> {
        let generators = self
            .generators
            .iter()
            .map(|g| Ok(Generator::new(self.ring.translate(&g.poly, p)?, g.level)))
            .collect::<Result<_>>()?;
        Ok(IdealisticFiltration {
            ring: self.ring.clone(),
            generators,
            d_saturated: self.d_saturated,
        })
    }

    pub fn localize(&self, p: &[K::Elem]) -> Result<LocalFiltration<K>> {
        self.ring.check_point(p)?;
        Ok(LocalFiltration {
            local: self.translated(p)?,
            point: p.to_vec(),
            slices: Mutex::new(HashMap::new()),
            bases: Mutex::new(HashMap::new()),
        })
    }

    /// Truncated membership of `(f, t)` at `p`. One-sided: `false` is a
    /// genuine non-membership, `true` holds modulo `m_P^(T+1)`.
    pub fn membership(
        &self,
        f: &Poly<K>,
        t: Level,
        p: &[K::Elem],
        truncation: usize,
    ) -> Result<bool> {
        let local = self.localize(p)?;
        let g = self.ring.translate(f, p)?;
        local.membership(&g, t, truncation)
    }

    pub fn level_slice_basis(
        &self,
        t: Level,
        p: &[K::Elem],
        truncation: usize,
    ) -> Result<Vec<Jet<K>>> {
        self.localize(p)?.level_slice_basis(t, truncation)
    }
}

/// A product of generators, recorded by generator indices, with its jet.
#[derive(Clone, Debug)]
pub struct Seed<K: Field> {
    pub factors: Vec<usize>,
    pub jet: Poly<K>,
}

/// A level slice realised in the jet space.
#[derive(Debug)]
pub struct Slice<K: Field> {
    pub level: Level,
    pub truncation: usize,
    pub basis: Arc<JetBasis>,
    pub echelon: Echelon<K>,
    /// Products generating the slice as an ideal modulo `m^(T+1)`.
    pub seeds: Vec<Seed<K>>,
    /// Set when some generator level exceeds `T`, so products relevant to
    /// higher levels may be invisible at this precision.
    pub caveat: Option<String>,
}

impl<K: Field> Slice<K> {
    pub fn dim(&self) -> usize {
        self.echelon.rank()
    }

    pub fn contains(&self, field: &K, f: &Poly<K>) -> bool {
        self.echelon.contains(&self.basis.to_dense(field, f))
    }
}

type SliceCache<K> = Mutex<HashMap<(Level, usize), Arc<Slice<K>>>>;

/// A filtration written around a closed point, which becomes the origin.
/// Slices are cached per `(level, truncation)`.
pub struct LocalFiltration<K: Field> {
    local: IdealisticFiltration<K>,
    point: Point<K>,
    slices: SliceCache<K>,
    bases: Mutex<HashMap<usize, Arc<JetBasis>>>,
}

impl<K: Field> std::fmt::Debug for LocalFiltration<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalFiltration")
            .field("point", &self.point)
            .field("generators", &self.local.generators)
            .finish()
    }
}

impl<K: Field> LocalFiltration<K> {
    pub fn ring(&self) -> &RingContext<K> {
        &self.local.ring
    }

    pub fn field(&self) -> &K {
        self.local.ring.field()
    }

    pub fn point(&self) -> &Point<K> {
        &self.point
    }

    /// The translated filtration; its generators live at the origin.
    pub fn filtration(&self) -> &IdealisticFiltration<K> {
        &self.local
    }

    pub fn generators(&self) -> &[Generator<K>] {
        &self.local.generators
    }

    pub fn in_support(&self) -> bool {
        let origin = self.ring().origin();
        self.local
            .in_support(&origin)
            .expect("consistent dimensions")
    }

    pub fn jet_basis(&self, truncation: usize) -> Arc<JetBasis> {
        let mut bases = self.bases.lock().expect("basis cache");
        bases
            .entry(truncation)
            .or_insert_with(|| JetBasis::new(self.ring().dim(), truncation))
            .clone()
    }

    /// Global polynomial to local coordinates around the point.
    pub fn to_local(&self, f: &Poly<K>) -> Result<Poly<K>> {
        self.ring().translate(f, &self.point)
    }

    /// Local polynomial back to global coordinates.
    pub fn to_global(&self, f: &Poly<K>) -> Result<Poly<K>> {
        let back = self.ring().negate_point(&self.point);
        self.ring().translate(f, &back)
    }

    /// Exact product of the generators listed in a seed, in local coordinates.
    pub fn seed_poly(&self, seed: &Seed<K>) -> Poly<K> {
        let ring = self.ring();
        seed.factors.iter().fold(ring.one(), |acc, &i| {
            ring.mul(&acc, &self.local.generators[i].poly)
        })
    }

    pub fn slice(&self, t: Level, truncation: usize) -> Arc<Slice<K>> {
        if let Some(s) = self
            .slices
            .lock()
            .expect("slice cache")
            .get(&(t, truncation))
        {
            return s.clone();
        }
        let s = Arc::new(self.build_slice(t, truncation));
        self.slices
            .lock()
            .expect("slice cache")
            .entry((t, truncation))
            .or_insert(s)
            .clone()
    }

    fn build_slice(&self, t: Level, truncation: usize) -> Slice<K> {
        let ring = self.ring();
        let field = ring.field();
        let basis = self.jet_basis(truncation);
        let caveat = self
            .local
            .effective_generators()
            .find(|g| g.level > Level::from_integer(truncation as i64))
            .map(|g| {
                format!(
                    "generator level {} exceeds truncation {truncation}",
                    format_level(&g.level)
                )
            });
        if !t.is_positive() {
            let mut echelon = Echelon::new(field.clone(), basis.dim());
            for i in 0..basis.dim() {
                let mut v = vec![field.zero(); basis.dim()];
                v[i] = field.one();
                echelon.insert_reduced(v);
            }
            return Slice {
                level: t,
                truncation,
                basis,
                echelon,
                seeds: vec![Seed {
                    factors: Vec::new(),
                    jet: ring.one(),
                }],
                caveat,
            };
        }
        let mut candidates: BTreeMap<Vec<usize>, Poly<K>> = BTreeMap::new();
        for (i, g) in self.local.generators.iter().enumerate() {
            if !g.level.is_positive() || g.poly.is_zero() {
                continue;
            }
            let g_ord = g.poly.ord().unwrap() as usize;
            if g_ord > truncation {
                continue;
            }
            let g_jet = g.poly.truncated(truncation);
            let sub = self.slice(t - g.level, truncation);
            for s in &sub.seeds {
                let s_ord = s.jet.ord().map_or(usize::MAX, |o| o as usize);
                if g_ord.saturating_add(s_ord) > truncation {
                    continue;
                }
                let mut factors = s.factors.clone();
                factors.push(i);
                factors.sort_unstable();
                if candidates.contains_key(&factors) {
                    continue;
                }
                let jet = ring.mul_truncated(&g_jet, &s.jet, truncation);
                candidates.insert(factors, jet);
            }
        }
        let (echelon, seeds) = ideal_closure(ring, &basis, candidates.into_iter().collect());
        Slice {
            level: t,
            truncation,
            basis,
            echelon,
            seeds,
            caveat,
        }
    }

    pub fn membership(&self, f: &Poly<K>, t: Level, truncation: usize) -> Result<bool> {
        self.ring().check(f)?;
        if !t.is_positive() {
            return Ok(true);
        }
        Ok(self.slice(t, truncation).contains(self.field(), f))
    }

    /// Row-reduced basis of the slice modulo `m^(T+1)`.
    pub fn level_slice_basis(&self, t: Level, truncation: usize) -> Result<Vec<Jet<K>>> {
        let slice = self.slice(t, truncation);
        Ok((0..slice.echelon.rank())
            .map(|i| {
                let row = slice.echelon.row(i);
                Jet::from_truncated(slice.basis.from_dense(self.field(), &row), truncation)
            })
            .collect())
    }
}

/// Span closure under multiplication by the variables. Candidates are
/// processed in order of increasing order at the origin; returns the echelon
/// and the candidates that contributed.
fn ideal_closure<K: Field>(
    ring: &RingContext<K>,
    basis: &JetBasis,
    candidates: Vec<(Vec<usize>, Poly<K>)>,
) -> (Echelon<K>, Vec<Seed<K>>) {
    let field = ring.field();
    let d = ring.dim();
    let truncation = basis.truncation();
    let mut echelon = Echelon::new(field.clone(), basis.dim());
    let mut queue: BTreeMap<(u32, usize), (Poly<K>, Option<usize>)> = BTreeMap::new();
    let mut seq = 0usize;
    for (i, (_, jet)) in candidates.iter().enumerate() {
        if let Some(o) = jet.ord() {
            queue.insert((o, seq), (jet.clone(), Some(i)));
            seq += 1;
        }
    }
    let mut kept: HashSet<usize> = HashSet::new();
    while let Some((_, (poly, origin))) = queue.pop_first() {
        if echelon.is_full() {
            break;
        }
        let mut v = basis.to_dense(field, &poly);
        echelon.reduce(&mut v);
        let Some(pivot) = v.iter().position(|x| !field.is_zero(x)) else {
            continue;
        };
        let rem = basis.from_dense(field, &v);
        echelon.insert_reduced(v);
        if let Some(i) = origin {
            kept.insert(i);
        }
        let deg = basis.degree_of(pivot);
        if deg as usize + 1 > truncation {
            continue;
        }
        for j in 0..d {
            let shifted = ring
                .shift(&rem, &Exponents::unit(d, j, 1))
                .truncated(truncation);
            if shifted.is_zero() {
                continue;
            }
            queue.insert((deg + 1, seq), (shifted, None));
            seq += 1;
        }
    }
    let seeds = candidates
        .into_iter()
        .enumerate()
        .filter(|(i, _)| kept.contains(i))
        .map(|(_, (factors, jet))| Seed { factors, jet })
        .collect();
    (echelon, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaloisField;

    fn lvl(n: i64) -> Level {
        Level::from_integer(n)
    }

    fn worked() -> IdealisticFiltration<GaloisField> {
        let ring = RingContext::new(GaloisField::prime(2).unwrap(), &["x", "y"]).unwrap();
        let f = ring.parse_poly("x^2+y^3").unwrap();
        IdealisticFiltration::generate(vec![Generator::new(f, lvl(2))], ring).unwrap()
    }

    #[test]
    fn levels_parse() {
        assert_eq!(parse_level("2").unwrap(), lvl(2));
        assert_eq!(parse_level("3/2").unwrap(), Level::new(3, 2));
        assert_eq!(parse_level("1.25").unwrap(), Level::new(5, 4));
        assert_eq!(parse_level("-0.5").unwrap(), Level::new(-1, 2));
        assert!(parse_level("1/0").is_err());
        assert!(parse_level("pi").is_err());
        assert_eq!(level_ceil(&Level::new(3, 2)), 2);
        assert_eq!(level_ceil(&lvl(2)), 2);
    }

    #[test]
    fn saturation_of_worked_example() {
        let sat = worked().d_saturate();
        let ring = sat.ring();
        let got: Vec<(String, Level)> = sat
            .generators()
            .iter()
            .map(|g| (ring.format_poly(&g.poly), g.level))
            .collect();
        assert_eq!(
            got,
            vec![("x^2+y^3".to_string(), lvl(2)), ("y^2".to_string(), lvl(1))]
        );
        assert!(sat.in_support(&[0, 0]).unwrap());
    }

    #[test]
    fn interior_binomials_leave_pth_powers_alone() {
        for p in [2u64, 3, 5] {
            let ring = RingContext::new(GaloisField::prime(p).unwrap(), &["x", "y"]).unwrap();
            let f = ring.parse_poly(&format!("x^{p}")).unwrap();
            let sat = IdealisticFiltration::generate(
                vec![Generator::new(f.clone(), lvl(p as i64))],
                ring,
            )
            .unwrap()
            .d_saturate();
            assert_eq!(sat.generators().len(), 1);
            assert_eq!(sat.generators()[0].poly, f);
        }
    }

    #[test]
    fn slice_of_a_line() {
        let ring = RingContext::new(GaloisField::prime(3).unwrap(), &["x"]).unwrap();
        let x = ring.parse_poly("x").unwrap();
        let filt =
            IdealisticFiltration::generate(vec![Generator::new(x, lvl(1))], ring.clone()).unwrap();
        let basis = filt.level_slice_basis(lvl(2), &[0], 3).unwrap();
        let polys: Vec<String> = basis.iter().map(|j| ring.format_poly(j.poly())).collect();
        assert_eq!(polys, vec!["x^2", "x^3"]);
        let half = filt.level_slice_basis(Level::new(1, 2), &[0], 3).unwrap();
        assert_eq!(half.len(), 3);
        let trivial = IdealisticFiltration::trivial(ring);
        assert!(trivial
            .level_slice_basis(lvl(1), &[0], 3)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn membership_examples() {
        let ring = RingContext::new(GaloisField::prime(2).unwrap(), &["x", "y"]).unwrap();
        let x = ring.parse_poly("x").unwrap();
        let filt =
            IdealisticFiltration::generate(vec![Generator::new(x.clone(), lvl(1))], ring.clone())
                .unwrap();
        let x2 = ring.parse_poly("x^2").unwrap();
        let y = ring.parse_poly("y").unwrap();
        assert!(filt.membership(&x2, lvl(2), &[0, 0], 4).unwrap());
        assert!(!filt.membership(&y, lvl(1), &[0, 0], 4).unwrap());
        assert!(filt.membership(&y, lvl(0), &[0, 0], 4).unwrap());
        let sat = worked().d_saturate();
        let y2 = ring.parse_poly("y^2").unwrap();
        assert!(sat.membership(&y2, lvl(1), &[0, 0], 12).unwrap());
        assert!(!sat.membership(&y2, lvl(2), &[0, 0], 12).unwrap());
    }

    #[test]
    fn support_examples() {
        let ring = RingContext::new(GaloisField::prime(3).unwrap(), &["x", "y"]).unwrap();
        let x = ring.parse_poly("x").unwrap();
        let filt =
            IdealisticFiltration::generate(vec![Generator::new(x, lvl(1))], ring.clone()).unwrap();
        assert!(filt.in_support(&[0, 2]).unwrap());
        assert!(!filt.in_support(&[1, 0]).unwrap());
        assert!(IdealisticFiltration::trivial(ring)
            .in_support(&[1, 1])
            .unwrap());
    }

    #[test]
    fn localization_translates_generators() {
        let ring = RingContext::new(GaloisField::prime(2).unwrap(), &["x", "y"]).unwrap();
        let y2 = ring.parse_poly("y^2").unwrap();
        let filt =
            IdealisticFiltration::generate(vec![Generator::new(y2, lvl(1))], ring.clone()).unwrap();
        let local = filt.localize(&[0, 1]).unwrap();
        assert_eq!(
            local.generators()[0].poly,
            ring.parse_poly("y^2+1").unwrap()
        );
        assert!(!local.in_support());
    }

    #[test]
    fn outside_support_slices_fill_the_jet_space() {
        let sat = worked().d_saturate();
        let local = sat.localize(&[1, 0]).unwrap();
        for t in 1..=6 {
            let s = local.slice(lvl(t), 6);
            assert_eq!(s.dim(), s.basis.dim());
        }
    }
}
