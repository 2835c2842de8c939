//! Leading-algebra dimensions, the invariant sigma, leading generator systems
//! and their pointwise purification.
//!
//! At a support point every element of the level-`n` slice vanishes to order
//! at least `n`, so the degree-`n` leading space of the slice is spanned by
//! the degree-`n` parts of any ideal generators of the slice. Its pure part
//! is the intersection with `span{x_j^n}`, which for `n = p^e` is the set of
//! `p^e`-th powers of linear forms and does not depend on coordinates.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::filtration::{IdealisticFiltration, LocalFiltration};
use crate::jetring::{monomials_of_degree, Exponents, Matrix, Point, Poly, RingContext};
use crate::linalg::{self, Echelon, Solution};
use crate::Level;

/// `floor(log_p T)`, or 0 in characteristic zero.
pub fn default_horizon(characteristic: Option<u64>, truncation: usize) -> u32 {
    let Some(p) = characteristic else {
        return 0;
    };
    let mut e = 0;
    let mut q = p as usize;
    while q <= truncation {
        e += 1;
        q = q.saturating_mul(p as usize);
    }
    e
}

/// `p^e` as a degree, rejecting powers beyond the truncation.
pub fn level_power<K: Field>(ring: &RingContext<K>, e: u32, truncation: usize) -> Result<usize> {
    let power = ring.prime_power(e).ok_or_else(|| {
        Error::Precondition(format!("p^{e} is not defined in characteristic zero"))
    })?;
    if power > truncation as u64 {
        return Err(Error::Censored {
            e,
            power,
            truncation,
        });
    }
    Ok(power as usize)
}

fn pure_index(e: &Exponents, n: u32) -> Option<usize> {
    let mut hit = None;
    for (j, &k) in e.as_slice().iter().enumerate() {
        if k == n {
            hit = Some(j);
        } else if k != 0 {
            return None;
        }
    }
    hit
}

/// Degree-`n` monomials split into the non-pure ones (graded order) and the
/// pure powers `x_1^n, ..., x_d^n`.
fn split_monomials(d: usize, n: u32) -> Vec<Exponents> {
    let mut mixed: Vec<Exponents> = monomials_of_degree(d, n)
        .into_iter()
        .filter(|e| pure_index(e, n).is_none())
        .collect();
    mixed.extend((0..d).map(|j| Exponents::unit(d, j, n)));
    mixed
}

/// Dimension of the degree-`p^e` leading space of the level-`p^e` slice.
pub fn leading_dim<K: Field>(
    local: &LocalFiltration<K>,
    e: u32,
    truncation: usize,
) -> Result<usize> {
    let n = level_power(local.ring(), e, truncation)?;
    let slice = local.slice(Level::from_integer(n as i64), truncation);
    let range = slice.basis.degree_range(n);
    let mut ech = Echelon::new(local.field().clone(), range.len());
    for i in 0..slice.echelon.rank() {
        ech.insert(slice.echelon.row_segment(i, range.clone()));
        if ech.is_full() {
            break;
        }
    }
    Ok(ech.rank())
}

/// Dimension of the pure part of the degree-`p^e` leading space, computed
/// directly by intersecting with `span{x_j^(p^e)}`.
pub fn pure_dim_direct<K: Field>(
    local: &LocalFiltration<K>,
    e: u32,
    truncation: usize,
) -> Result<usize> {
    let n = level_power(local.ring(), e, truncation)?;
    let field = local.field();
    let d = local.ring().dim();
    let slice = local.slice(Level::from_integer(n as i64), truncation);
    let order = split_monomials(d, n as u32);
    let cols: Vec<usize> = order
        .iter()
        .map(|m| slice.basis.position(m).expect("degree within truncation"))
        .collect();
    let first_pure = order.len() - d;
    let mut ech = Echelon::new(field.clone(), order.len());
    for i in 0..slice.echelon.rank() {
        let row = slice.echelon.row_segment(i, slice.basis.degree_range(n));
        let start = slice.basis.degree_range(n).start;
        ech.insert(cols.iter().map(|&c| row[c - start].clone()).collect());
    }
    Ok(ech.pivots().filter(|&c| c >= first_pure).count())
}

/// Number of mixed monomials of degree `p^e` in variables of weight
/// `p^(e_i)`, one variable per unit of pure increment at each jump `e_i < e`.
/// A monomial is mixed unless it is a single variable raised to the power
/// reaching `p^e`.
pub fn mixed_count(p: u64, jumps: &[(u32, usize)], e: u32) -> usize {
    let target = p.pow(e) as usize;
    let mut ways = vec![0usize; target + 1];
    ways[0] = 1;
    let mut nvars = 0;
    for &(ei, count) in jumps.iter().filter(|(ei, _)| *ei < e) {
        let w = p.pow(ei) as usize;
        for _ in 0..count {
            nvars += 1;
            for s in w..=target {
                ways[s] += ways[s - w];
            }
        }
    }
    ways[target] - nvars
}

/// Leading, mixed and pure dimensions for `e = 0..=E`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeadingDims {
    pub leading: Vec<usize>,
    pub mixed: Vec<usize>,
    pub pure: Vec<usize>,
    /// `(e, increment)` for every `e` where the pure dimension grows.
    pub jumps: Vec<(u32, usize)>,
}

pub fn pure_dims<K: Field>(
    local: &LocalFiltration<K>,
    horizon: u32,
    truncation: usize,
) -> Result<LeadingDims> {
    // Weights never matter in characteristic zero: only e = 0 exists there.
    let p = local.ring().characteristic().unwrap_or(1);
    let mut dims = LeadingDims {
        leading: Vec::new(),
        mixed: Vec::new(),
        pure: Vec::new(),
        jumps: Vec::new(),
    };
    for e in 0..=horizon {
        let l = leading_dim(local, e, truncation)?;
        let m = mixed_count(p, &dims.jumps, e);
        if m > l {
            return Err(Error::Inconsistent(format!(
                "{m} mixed monomials exceed leading dimension {l} at e = {e}"
            )));
        }
        let pure = l - m;
        let prev = dims.pure.last().copied().unwrap_or(0);
        if pure < prev {
            return Err(Error::Inconsistent(format!(
                "pure dimension drops from {prev} to {pure} at e = {e}"
            )));
        }
        if pure > prev {
            dims.jumps.push((e, pure - prev));
        }
        dims.leading.push(l);
        dims.mixed.push(m);
        dims.pure.push(pure);
    }
    Ok(dims)
}

/// The finite part `(sigma(0), ..., sigma(E))` of the invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaValue {
    #[serde(rename = "sigma")]
    pub values: Vec<usize>,
    #[serde(rename = "E")]
    pub horizon: u32,
    /// Some generator level exceeds the truncation.
    pub censored: bool,
}

impl SigmaValue {
    pub fn zero(horizon: u32) -> Self {
        SigmaValue {
            values: vec![0; horizon as usize + 1],
            horizon,
            censored: false,
        }
    }
}

impl std::fmt::Display for SigmaValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn sigma_local<K: Field>(
    local: &LocalFiltration<K>,
    horizon: u32,
    truncation: usize,
) -> Result<SigmaValue> {
    level_power(local.ring(), horizon, truncation)?;
    if !local.in_support() {
        return Ok(SigmaValue::zero(horizon));
    }
    let d = local.ring().dim();
    let dims = pure_dims(local, horizon, truncation)?;
    let censored = local.filtration().max_level() > Level::from_integer(truncation as i64);
    Ok(SigmaValue {
        values: dims.pure.iter().map(|&l| d - l).collect(),
        horizon,
        censored,
    })
}

pub fn sigma<K: Field>(
    filtration: &IdealisticFiltration<K>,
    point: &[K::Elem],
    horizon: u32,
    truncation: usize,
) -> Result<SigmaValue> {
    require_saturated(filtration)?;
    sigma_local(&filtration.localize(point)?, horizon, truncation)
}

pub(crate) fn require_saturated<K: Field>(f: &IdealisticFiltration<K>) -> Result<()> {
    if f.is_d_saturated() {
        Ok(())
    } else {
        Err(Error::Precondition("filtration is not D-saturated".into()))
    }
}

/// Lexicographic comparison of values computed to the same horizon.
pub fn compare_sigma(a: &SigmaValue, b: &SigmaValue) -> Result<Ordering> {
    if a.horizon != b.horizon {
        return Err(Error::Precondition(format!(
            "horizons differ: {} vs {}",
            a.horizon, b.horizon
        )));
    }
    Ok(a.values.cmp(&b.values))
}

#[derive(Clone, Debug)]
pub struct LgsEntry<K: Field> {
    /// In global coordinates.
    pub poly: Poly<K>,
    pub e: u32,
}

impl<K: Field> PartialEq for LgsEntry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.e == other.e && self.poly == other.poly
    }
}

impl<K: Field> Eq for LgsEntry<K> {}

/// A leading generator system at a point, with a linear change of local
/// coordinates `y = C x` in which each leading form is `y_l^(p^(e_l))`.
#[derive(Clone, Debug)]
pub struct Lgs<K: Field> {
    ring: RingContext<K>,
    point: Point<K>,
    entries: Vec<LgsEntry<K>>,
    coords: Matrix<K>,
    inverse: Matrix<K>,
    horizon: u32,
}

/// Coefficients of `x_j^n` in the degree-`n` part of a local polynomial,
/// when that part is a nonzero pure form and nothing lies below it.
pub fn pure_vector<K: Field>(
    ring: &RingContext<K>,
    local: &Poly<K>,
    n: usize,
) -> std::result::Result<Vec<K::Elem>, String> {
    let field = ring.field();
    match local.ord() {
        None => return Err("zero element".into()),
        Some(o) if (o as usize) < n => return Err(format!("order {o} below {n}")),
        _ => {}
    }
    let mut w = vec![field.zero(); ring.dim()];
    for (e, c) in local.terms() {
        if e.degree() as usize != n {
            break;
        }
        match pure_index(e, n as u32) {
            Some(j) => w[j] = c.clone(),
            None => return Err(format!("leading form has mixed monomial {e:?}")),
        }
    }
    if w.iter().all(|c| field.is_zero(c)) {
        return Err(format!("order exceeds {n}"));
    }
    Ok(w)
}

fn frobenius_power<K: Field>(field: &K, w: &[K::Elem], q: u64) -> Vec<K::Elem> {
    w.iter().map(|c| field.pow(c, q)).collect()
}

impl<K: Field> Lgs<K> {
    /// Builds a system with explicit coordinates; `coords` must be invertible.
    pub fn new(
        ring: RingContext<K>,
        point: Point<K>,
        entries: Vec<LgsEntry<K>>,
        coords: Matrix<K>,
        horizon: u32,
    ) -> Result<Self> {
        ring.check_point(&point)?;
        for en in &entries {
            ring.check(&en.poly)?;
        }
        if entries.windows(2).any(|w| w[0].e > w[1].e) {
            return Err(Error::NotLgs("entries not sorted by e".into()));
        }
        if entries.len() > ring.dim() {
            return Err(Error::NotLgs("more entries than variables".into()));
        }
        let inverse = linalg::invert(ring.field(), &coords)
            .ok_or_else(|| Error::NotLgs("coordinate change is singular".into()))?;
        Ok(Lgs {
            ring,
            point,
            entries,
            coords,
            inverse,
            horizon,
        })
    }

    /// Builds the system at `point`, reading the coordinates off the leading
    /// forms: row `l` of `C` is the `p^(e_l)`-th root of the pure leading
    /// form of `h_l`, completed by unit vectors.
    pub fn from_leading_forms(
        ring: RingContext<K>,
        point: Point<K>,
        entries: Vec<LgsEntry<K>>,
        horizon: u32,
    ) -> Result<Self> {
        let field = ring.field().clone();
        let d = ring.dim();
        let mut rows: Matrix<K> = Vec::new();
        let mut ech = Echelon::new(field.clone(), d);
        for (l, en) in entries.iter().enumerate() {
            let n = ring
                .prime_power(en.e)
                .ok_or_else(|| Error::NotLgs(format!("entry {l}: bad exponent")))?;
            let local = ring.translate(&en.poly, &point)?;
            let w = pure_vector(&ring, &local, n as usize)
                .map_err(|m| Error::NotLgs(format!("entry {l}: {m}")))?;
            let v: Vec<K::Elem> = w.iter().map(|c| field.frobenius_root(c, en.e)).collect();
            if ech.insert(v.clone()).is_none() {
                return Err(Error::NotLgs(format!(
                    "entry {l}: leading form dependent on earlier ones"
                )));
            }
            rows.push(v);
        }
        for j in 0..d {
            if ech.is_full() {
                break;
            }
            let mut u = vec![field.zero(); d];
            u[j] = field.one();
            if ech.insert(u.clone()).is_some() {
                rows.push(u);
            }
        }
        Self::new(ring, point, entries, rows, horizon)
    }

    pub fn ring(&self) -> &RingContext<K> {
        &self.ring
    }

    pub fn point(&self) -> &Point<K> {
        &self.point
    }

    pub fn entries(&self) -> &[LgsEntry<K>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// The matrix `C` of `y = C x`.
    pub fn coords(&self) -> &Matrix<K> {
        &self.coords
    }

    pub fn inverse(&self) -> &Matrix<K> {
        &self.inverse
    }

    /// `p^(e_l)` for each entry.
    pub fn powers(&self) -> Vec<usize> {
        self.entries
            .iter()
            .map(|en| self.ring.prime_power(en.e).expect("validated exponent") as usize)
            .collect()
    }

    /// The same polynomials with other coordinates.
    pub fn with_coordinates(&self, coords: Matrix<K>) -> Result<Self> {
        Self::new(
            self.ring.clone(),
            self.point.clone(),
            self.entries.clone(),
            coords,
            self.horizon,
        )
    }

    /// The same polynomials read at another point.
    pub fn at_point(&self, q: &[K::Elem]) -> Result<Self> {
        Self::from_leading_forms(
            self.ring.clone(),
            q.to_vec(),
            self.entries.clone(),
            self.horizon,
        )
    }

    /// Entries translated to the point.
    pub fn local_polys(&self) -> Vec<Poly<K>> {
        self.entries
            .iter()
            .map(|en| self.ring.translate(&en.poly, &self.point).expect("checked"))
            .collect()
    }

    /// A local polynomial rewritten in the `y` coordinates.
    pub fn to_coords(&self, f_local: &Poly<K>, bound: Option<usize>) -> Poly<K> {
        self.ring
            .linear_substitute(f_local, &self.inverse, bound)
            .expect("checked dimensions")
    }

    /// A polynomial in `y` back to local `x` coordinates.
    pub fn from_coords(&self, f_y: &Poly<K>, bound: Option<usize>) -> Poly<K> {
        self.ring
            .linear_substitute(f_y, &self.coords, bound)
            .expect("checked dimensions")
    }

    /// A global polynomial in local `y` coordinates.
    pub fn global_to_coords(&self, f: &Poly<K>, bound: Option<usize>) -> Result<Poly<K>> {
        let local = self.ring.translate(f, &self.point)?;
        Ok(self.to_coords(&local, bound))
    }

    /// Pure leading vectors at the point, `None` where the leading form is
    /// not pure of the expected degree.
    pub fn leading_vectors(&self) -> Vec<std::result::Result<Vec<K::Elem>, String>> {
        let powers = self.powers();
        self.local_polys()
            .iter()
            .zip(powers)
            .map(|(h, n)| pure_vector(&self.ring, h, n))
            .collect()
    }

    pub fn format(&self) -> Vec<(String, u32)> {
        self.entries
            .iter()
            .map(|en| (self.ring.format_poly(&en.poly), en.e))
            .collect()
    }
}

/// Picks slice elements whose leading forms extend the Frobenius powers of
/// earlier choices to a basis of each pure part.
pub fn extract_lgs<K: Field>(
    local: &LocalFiltration<K>,
    horizon: u32,
    truncation: usize,
) -> Result<Lgs<K>> {
    if !local.filtration().is_d_saturated() {
        return Err(Error::Precondition("filtration is not D-saturated".into()));
    }
    if !local.in_support() {
        return Err(Error::Precondition("point is outside the support".into()));
    }
    let ring = local.ring();
    let field = ring.field();
    let d = ring.dim();
    let dims = pure_dims(local, horizon, truncation)?;
    let mut chosen: Vec<(Poly<K>, u32, Vec<K::Elem>)> = Vec::new();
    for e in 0..=horizon {
        let target = dims.pure[e as usize];
        let mut pure_ech = Echelon::new(field.clone(), d);
        for (_, el, w) in &chosen {
            let q = ring.prime_power(e - el).expect("small exponent");
            pure_ech.insert(frobenius_power(field, w, q));
        }
        if pure_ech.rank() >= target {
            continue;
        }
        let n = level_power(ring, e, truncation)?;
        let slice = local.slice(Level::from_integer(n as i64), truncation);
        let order = split_monomials(d, n as u32);
        let first_pure = order.len() - d;
        let width = order.len() + slice.seeds.len();
        let mut ech = Echelon::new(field.clone(), width);
        for (k, seed) in slice.seeds.iter().enumerate() {
            let mut row = vec![field.zero(); width];
            for (i, m) in order.iter().enumerate() {
                if let Some(c) = seed.jet.coefficient(m) {
                    row[i] = c.clone();
                }
            }
            row[order.len() + k] = field.one();
            ech.insert(row);
        }
        let mut rows: Vec<(usize, usize)> = ech.pivots().enumerate().map(|(i, c)| (c, i)).collect();
        rows.sort_unstable();
        for (pivot, i) in rows {
            if pure_ech.rank() >= target {
                break;
            }
            if !(first_pure..order.len()).contains(&pivot) {
                continue;
            }
            let row = ech.row(i);
            let w = row[first_pure..order.len()].to_vec();
            if pure_ech.insert(w.clone()).is_none() {
                continue;
            }
            let mut h = ring.zero();
            for (k, seed) in slice.seeds.iter().enumerate() {
                let c = &row[order.len() + k];
                if !field.is_zero(c) {
                    ring.add_scaled_assign(&mut h, c, &local.seed_poly(seed));
                }
            }
            chosen.push((h, e, w));
        }
        if pure_ech.rank() < target {
            return Err(Error::Inconsistent(format!(
                "pure dimension {target} at e = {e} not realised by slice elements (found {})",
                pure_ech.rank()
            )));
        }
    }
    let entries = chosen
        .into_iter()
        .map(|(h, e, _)| {
            Ok(LgsEntry {
                poly: local.to_global(&h)?,
                e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Lgs::from_leading_forms(ring.clone(), local.point().clone(), entries, horizon)
}

/// Checks that `lgs` is a leading generator system of `local` up to its
/// horizon: membership, pure leading forms, and Frobenius independence with
/// the right count at every `e`.
pub fn validate_lgs<K: Field>(
    local: &LocalFiltration<K>,
    lgs: &Lgs<K>,
    truncation: usize,
) -> Result<()> {
    let ring = local.ring();
    let field = ring.field();
    if lgs.point() != local.point() {
        return Err(Error::Precondition(
            "system and filtration at different points".into(),
        ));
    }
    let locals = lgs.local_polys();
    let powers = lgs.powers();
    for (l, (h, &n)) in locals.iter().zip(&powers).enumerate() {
        if !local.membership(h, Level::from_integer(n as i64), truncation)? {
            return Err(Error::NotLgs(format!(
                "entry {l} is not in the level-{n} slice"
            )));
        }
    }
    let vectors = lgs
        .leading_vectors()
        .into_iter()
        .enumerate()
        .map(|(l, r)| r.map_err(|m| Error::NotLgs(format!("entry {l}: {m}"))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(en) = lgs.entries().iter().find(|en| en.e > lgs.horizon()) {
        return Err(Error::NotLgs(format!(
            "entry at e = {} beyond horizon",
            en.e
        )));
    }
    let dims = pure_dims(local, lgs.horizon(), truncation)?;
    for e in 0..=lgs.horizon() {
        let mut ech = Echelon::new(field.clone(), ring.dim());
        let mut count = 0;
        for (en, w) in lgs.entries().iter().zip(&vectors) {
            if en.e > e {
                continue;
            }
            count += 1;
            let q = ring.prime_power(e - en.e).expect("small exponent");
            if ech.insert(frobenius_power(field, w, q)).is_none() {
                return Err(Error::NotLgs(format!(
                    "Frobenius powers dependent at e = {e}"
                )));
            }
        }
        if count != dims.pure[e as usize] {
            return Err(Error::NotLgs(format!(
                "{count} entries up to e = {e}, pure dimension {}",
                dims.pure[e as usize]
            )));
        }
    }
    Ok(())
}

/// Exponent tuples `B` of products of entries below `level_e` with total
/// weight `p^level_e` and no single factor reaching it alone.
fn mixed_products(p: u64, es: &[u32], level_e: u32) -> Vec<Vec<u32>> {
    let target = p.pow(level_e);
    let lower: Vec<usize> = (0..es.len()).filter(|&a| es[a] < level_e).collect();
    let mut out = Vec::new();
    let mut b = vec![0u32; es.len()];
    fn rec(
        p: u64,
        es: &[u32],
        lower: &[usize],
        k: usize,
        left: u64,
        b: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if k == lower.len() {
            if left == 0 {
                out.push(b.clone());
            }
            return;
        }
        let a = lower[k];
        let w = p.pow(es[a]);
        for n in 0..=left / w {
            b[a] = n as u32;
            rec(p, es, lower, k + 1, left - n * w, b, out);
        }
        b[a] = 0;
    }
    rec(p, es, &lower, 0, target, &mut b, &mut out);
    out.retain(|b| {
        !b.iter()
            .zip(es)
            .any(|(&n, &e)| n as u64 * p.pow(e) == target)
    });
    out.sort();
    out
}

/// Modifies each entry by products of lower entries so that its leading form
/// at `q` becomes pure, then rebuilds the coordinates at `q`.
pub fn purify_at<K: Field>(
    filtration: &IdealisticFiltration<K>,
    lgs: &Lgs<K>,
    q: &[K::Elem],
    truncation: usize,
) -> Result<Lgs<K>> {
    require_saturated(filtration)?;
    let ring = lgs.ring();
    let field = ring.field();
    let d = ring.dim();
    if !filtration.in_support(q)? {
        return Err(Error::Precondition(
            "purification point outside the support".into(),
        ));
    }
    let s_p = sigma(filtration, lgs.point(), lgs.horizon(), truncation)?;
    let s_q = sigma(filtration, q, lgs.horizon(), truncation)?;
    if s_p != s_q {
        return Err(Error::Precondition(format!(
            "sigma differs: {s_p} at the system's point, {s_q} at the target"
        )));
    }
    let Some(p) = ring.characteristic() else {
        return lgs.at_point(q);
    };
    let es: Vec<u32> = lgs.entries().iter().map(|en| en.e).collect();
    let at_q: Vec<Poly<K>> = lgs
        .entries()
        .iter()
        .map(|en| ring.translate(&en.poly, q))
        .collect::<Result<_>>()?;
    let mut entries = lgs.entries().to_vec();
    for (i, en) in lgs.entries().iter().enumerate() {
        let n = p.pow(en.e) as usize;
        let products = mixed_products(p, &es, en.e);
        if products.is_empty() {
            continue;
        }
        let rows: Vec<Exponents> = monomials_of_degree(d, n as u32)
            .into_iter()
            .filter(|m| pure_index(m, n as u32).is_none())
            .collect();
        let columns: Vec<Poly<K>> = products
            .iter()
            .map(|b| {
                let mut acc = ring.one();
                for (a, &k) in b.iter().enumerate() {
                    if k > 0 {
                        let pw = ring.pow_truncated(&at_q[a], k as u64, n);
                        acc = ring.mul_truncated(&acc, &pw, n);
                    }
                }
                acc
            })
            .collect();
        let a: Vec<Vec<K::Elem>> = rows
            .iter()
            .map(|m| {
                columns
                    .iter()
                    .map(|c| c.coefficient(m).cloned().unwrap_or_else(|| field.zero()))
                    .collect()
            })
            .collect();
        let rhs: Vec<K::Elem> = rows
            .iter()
            .map(|m| {
                at_q[i]
                    .coefficient(m)
                    .cloned()
                    .unwrap_or_else(|| field.zero())
            })
            .collect();
        let c = match linalg::solve(field, &a, &rhs) {
            Solution::Unique(c) => c,
            Solution::RankDeficient { rank, .. } => {
                return Err(Error::PurificationSingular {
                    entry: i,
                    rank,
                    unknowns: products.len(),
                })
            }
            Solution::Inconsistent => {
                return Err(Error::InvariantViolation(format!(
                    "entry {i}: mixed part not reachable by lower products"
                )))
            }
        };
        let mut h = en.poly.clone();
        for (b, coef) in products.iter().zip(&c) {
            if field.is_zero(coef) {
                continue;
            }
            let mut prod = ring.one();
            for (a, &k) in b.iter().enumerate() {
                if k > 0 {
                    prod = ring.mul(&prod, &ring.pow(&lgs.entries()[a].poly, k as u64));
                }
            }
            ring.add_scaled_assign(&mut h, &field.neg(coef), &prod);
        }
        entries[i].poly = h;
    }
    Lgs::from_leading_forms(ring.clone(), q.to_vec(), entries, lgs.horizon())
}

#[derive(Clone, Debug, Serialize)]
pub struct PurityRow {
    pub point: String,
    pub pass: bool,
    /// Name of the first failing condition.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PurityReport {
    pub pass: bool,
    pub rows: Vec<PurityRow>,
}

/// Checks on sample points that the system stays inside the filtration, that
/// sigma does not exceed its value at the system's point, and that at points
/// of equal sigma in the support it is still a leading generator system.
pub fn check_uniform_purity<K: Field>(
    filtration: &IdealisticFiltration<K>,
    lgs: &Lgs<K>,
    points: &[Point<K>],
    truncation: usize,
) -> Result<PurityReport> {
    let ring = lgs.ring();
    let s_p = sigma(filtration, lgs.point(), lgs.horizon(), truncation)?;
    let mut rows = Vec::new();
    for q in points {
        let failure = purity_failure(filtration, lgs, q, &s_p, truncation)?;
        rows.push(PurityRow {
            point: ring.format_point(q),
            pass: failure.is_none(),
            failure,
        });
    }
    Ok(PurityReport {
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

fn purity_failure<K: Field>(
    filtration: &IdealisticFiltration<K>,
    lgs: &Lgs<K>,
    q: &[K::Elem],
    s_p: &SigmaValue,
    truncation: usize,
) -> Result<Option<String>> {
    let local = filtration.localize(q)?;
    let powers = lgs.powers();
    for (l, (en, n)) in lgs.entries().iter().zip(powers).enumerate() {
        let h = local.to_local(&en.poly)?;
        if !local.membership(&h, Level::from_integer(n as i64), truncation)? {
            return Ok(Some(format!("membership: entry {l}")));
        }
    }
    let s_q = sigma_local(&local, lgs.horizon(), truncation)?;
    if compare_sigma(&s_q, s_p)? == Ordering::Greater {
        return Ok(Some(format!("sigma-bound: {s_q} > {s_p}")));
    }
    if s_q != *s_p || !local.in_support() {
        return Ok(None);
    }
    let at_q = match lgs.at_point(q) {
        Ok(h) => h,
        Err(Error::NotLgs(m)) => return Ok(Some(format!("purity: {m}"))),
        Err(e) => return Err(e),
    };
    match validate_lgs(&local, &at_q, truncation) {
        Ok(()) => Ok(None),
        Err(Error::NotLgs(m)) => Ok(Some(format!("independence: {m}"))),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaloisField;
    use crate::filtration::Generator;

    fn lvl(n: i64) -> Level {
        Level::from_integer(n)
    }

    fn filtration(
        p: u64,
        vars: &[&str],
        gens: &[(&str, i64)],
    ) -> IdealisticFiltration<GaloisField> {
        let ring = RingContext::new(GaloisField::prime(p).unwrap(), vars).unwrap();
        let gens = gens
            .iter()
            .map(|(s, a)| Generator::new(ring.parse_poly(s).unwrap(), lvl(*a)))
            .collect();
        IdealisticFiltration::generate(gens, ring)
            .unwrap()
            .d_saturate()
    }

    fn worked() -> IdealisticFiltration<GaloisField> {
        filtration(2, &["x", "y"], &[("x^2+y^3", 2)])
    }

    fn purification_example() -> IdealisticFiltration<GaloisField> {
        filtration(
            2,
            &["x1", "x2", "y", "z"],
            &[("x1", 1), ("x2", 1), ("y^2+z*x1*x2", 2)],
        )
    }

    // Count by listing every exponent vector up to the target.
    fn mixed_count_brute(p: u64, jumps: &[(u32, usize)], e: u32) -> usize {
        let target = p.pow(e);
        let weights: Vec<u64> = jumps
            .iter()
            .filter(|(ei, _)| *ei < e)
            .flat_map(|&(ei, n)| std::iter::repeat_n(p.pow(ei), n))
            .collect();
        let mut count = 0;
        let mut b = vec![0u64; weights.len()];
        loop {
            let total: u64 = b.iter().zip(&weights).map(|(x, w)| x * w).sum();
            if total == target && b.iter().zip(&weights).all(|(x, w)| x * w != target) {
                count += 1;
            }
            let mut k = 0;
            loop {
                if k == b.len() {
                    return count;
                }
                b[k] += 1;
                if b[k] * weights[k] <= target {
                    break;
                }
                b[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn horizon_defaults() {
        assert_eq!(default_horizon(Some(2), 12), 3);
        assert_eq!(default_horizon(Some(3), 8), 1);
        assert_eq!(default_horizon(None, 12), 0);
    }

    #[test]
    fn leading_dims_of_examples() {
        let line = filtration(2, &["x", "y"], &[("x", 1)]);
        let local = line.localize(&[0, 0]).unwrap();
        assert_eq!(leading_dim(&local, 0, 4).unwrap(), 1);
        let local = worked().localize(&[0, 0]).unwrap();
        assert_eq!(leading_dim(&local, 1, 12).unwrap(), 1);
        assert_eq!(leading_dim(&local, 0, 12).unwrap(), 0);
        assert!(matches!(
            leading_dim(&local, 4, 12),
            Err(Error::Censored { .. })
        ));
        let unit = filtration(3, &["x", "y"], &[("1", 1)]);
        let local = unit.localize(&[0, 0]).unwrap();
        assert_eq!(leading_dim(&local, 1, 4).unwrap(), 4);
    }

    #[test]
    fn mixed_count_examples() {
        assert_eq!(mixed_count(2, &[], 1), 0);
        assert_eq!(mixed_count(2, &[(0, 1)], 1), 0);
        assert_eq!(mixed_count(2, &[(0, 2)], 1), 1);
    }

    #[test]
    fn mixed_count_matches_enumeration() {
        for p in [2u64, 3, 5] {
            for jumps in [
                vec![(0, 1)],
                vec![(0, 2)],
                vec![(0, 1), (1, 1)],
                vec![(0, 2), (1, 1)],
                vec![(1, 2)],
                vec![(0, 1), (2, 1)],
            ] {
                for e in 0..=2 {
                    if p.pow(e) > 25 {
                        continue;
                    }
                    assert_eq!(
                        mixed_count(p, &jumps, e),
                        mixed_count_brute(p, &jumps, e),
                        "p={p} jumps={jumps:?} e={e}"
                    );
                }
            }
        }
    }

    #[test]
    fn pure_dims_examples() {
        let local = worked().localize(&[0, 0]).unwrap();
        let dims = pure_dims(&local, 2, 12).unwrap();
        assert_eq!(dims.pure, vec![0, 1, 1]);
        for e in 0..=2 {
            assert_eq!(
                pure_dim_direct(&local, e, 12).unwrap(),
                dims.pure[e as usize]
            );
        }
        let line = filtration(2, &["x", "y"], &[("x", 1)]);
        let local = line.localize(&[0, 0]).unwrap();
        assert_eq!(pure_dims(&local, 2, 6).unwrap().pure, vec![1, 1, 1]);
        let unit = filtration(2, &["x", "y"], &[("1", 1)]);
        let local = unit.localize(&[0, 0]).unwrap();
        assert_eq!(pure_dims(&local, 2, 4).unwrap().pure, vec![2, 2, 2]);
    }

    #[test]
    fn sigma_examples() {
        let w = worked();
        assert_eq!(sigma(&w, &[0, 0], 2, 12).unwrap().values, vec![2, 1, 1]);
        assert_eq!(sigma(&w, &[1, 0], 2, 12).unwrap().values, vec![0, 0, 0]);
        let line = filtration(2, &["x", "y"], &[("x", 1)]);
        assert_eq!(sigma(&line, &[0, 1], 2, 6).unwrap().values, vec![1, 1, 1]);
        let json = serde_json::to_string(&sigma(&w, &[0, 0], 2, 12).unwrap()).unwrap();
        assert_eq!(json, r#"{"sigma":[2,1,1],"E":2,"censored":false}"#);
    }

    #[test]
    fn sigma_comparison() {
        let a = SigmaValue {
            values: vec![2, 1, 1],
            horizon: 2,
            censored: false,
        };
        let b = SigmaValue {
            values: vec![1, 1, 1],
            ..a.clone()
        };
        assert_eq!(compare_sigma(&a, &a).unwrap(), Ordering::Equal);
        assert_eq!(compare_sigma(&a, &b).unwrap(), Ordering::Greater);
        assert_eq!(
            compare_sigma(&SigmaValue::zero(2), &b).unwrap(),
            Ordering::Less
        );
        assert!(compare_sigma(&a, &SigmaValue::zero(1)).is_err());
    }

    #[test]
    fn extraction_examples() {
        let line = filtration(3, &["x"], &[("x", 1)]);
        let lgs = extract_lgs(&line.localize(&[0]).unwrap(), 1, 4).unwrap();
        assert_eq!(lgs.format(), vec![("x".to_string(), 0)]);
        assert_eq!(lgs.coords(), &vec![vec![1]]);

        let w = worked();
        let local = w.localize(&[0, 0]).unwrap();
        let lgs = extract_lgs(&local, 2, 12).unwrap();
        assert_eq!(lgs.format(), vec![("x^2+y^3".to_string(), 1)]);
        assert_eq!(lgs.coords(), &linalg::identity(w.ring().field(), 2));
        validate_lgs(&local, &lgs, 12).unwrap();

        for p in [2u64, 3] {
            let f = filtration(p, &["x", "y"], &[(&format!("x^{p}"), p as i64)]);
            let lgs = extract_lgs(&f.localize(&[0, 0]).unwrap(), 1, 2 * p as usize).unwrap();
            assert_eq!(lgs.format(), vec![(format!("x^{p}"), 1)]);
        }
    }

    #[test]
    fn extraction_at_a_translated_point() {
        let f = filtration(3, &["x", "y"], &[("x+y^2", 1)]);
        let local = f.localize(&[2, 1]).unwrap();
        assert!(local.in_support());
        let lgs = extract_lgs(&local, 1, 6).unwrap();
        assert_eq!(lgs.len(), 1);
        validate_lgs(&local, &lgs, 6).unwrap();
    }

    #[test]
    fn purification_of_mixed_entry() {
        let f = purification_example();
        let ring = f.ring().clone();
        let origin = vec![0, 0, 0, 0];
        let q = vec![0, 0, 0, 1];
        assert_eq!(sigma(&f, &origin, 2, 6).unwrap().values, vec![2, 1, 1]);
        assert_eq!(sigma(&f, &q, 2, 6).unwrap().values, vec![2, 1, 1]);
        let h = Lgs::from_leading_forms(
            ring.clone(),
            origin.clone(),
            vec![
                LgsEntry {
                    poly: ring.parse_poly("x1").unwrap(),
                    e: 0,
                },
                LgsEntry {
                    poly: ring.parse_poly("x2").unwrap(),
                    e: 0,
                },
                LgsEntry {
                    poly: ring.parse_poly("y^2+z*x1*x2").unwrap(),
                    e: 1,
                },
            ],
            2,
        )
        .unwrap();
        validate_lgs(&f.localize(&origin).unwrap(), &h, 6).unwrap();

        let before = check_uniform_purity(&f, &h, std::slice::from_ref(&q), 6).unwrap();
        assert!(!before.pass);
        assert!(before.rows[0]
            .failure
            .as_deref()
            .unwrap()
            .starts_with("purity"));

        let purified = purify_at(&f, &h, &q, 6).unwrap();
        assert_eq!(
            ring.format_poly(&purified.entries()[2].poly),
            ring.format_poly(&ring.parse_poly("y^2+x1*x2+z*x1*x2").unwrap())
        );
        let after = check_uniform_purity(&f, &purified, std::slice::from_ref(&q), 6).unwrap();
        assert!(after.pass, "{after:?}");
    }

    #[test]
    fn purification_leaves_pure_systems_alone() {
        let f = purification_example();
        let h = extract_lgs(&f.localize(&[0, 0, 0, 0]).unwrap(), 2, 6).unwrap();
        let same = purify_at(&f, &h, &[0, 0, 0, 0], 6).unwrap();
        assert_eq!(same.entries(), h.entries());

        let w = worked();
        let h = extract_lgs(&w.localize(&[0, 0]).unwrap(), 2, 12).unwrap();
        assert_eq!(
            purify_at(&w, &h, &[0, 0], 12).unwrap().entries(),
            h.entries()
        );
    }

    #[test]
    fn uniform_purity_on_a_line() {
        let f = filtration(3, &["x", "y"], &[("x", 1)]);
        let h = extract_lgs(&f.localize(&[0, 0]).unwrap(), 1, 4).unwrap();
        let pts: Vec<Point<GaloisField>> = (0..3).map(|c| vec![0, c]).collect();
        assert!(check_uniform_purity(&f, &h, &pts, 4).unwrap().pass);
        assert!(check_uniform_purity(&f, &h, &[], 4).unwrap().pass);
    }

    #[test]
    fn sigma_is_invariant_under_embedding() {
        let w = worked();
        let ring = w.ring().extended("w").unwrap();
        let gens = vec![
            Generator::new(ring.parse_poly("x^2+y^3").unwrap(), lvl(2)),
            Generator::new(ring.parse_poly("w").unwrap(), lvl(1)),
        ];
        let big = IdealisticFiltration::generate(gens, ring)
            .unwrap()
            .d_saturate();
        let local = big.localize(&[0, 0, 0]).unwrap();
        assert_eq!(pure_dims(&local, 2, 8).unwrap().pure, vec![1, 2, 2]);
        assert_eq!(sigma(&big, &[0, 0, 0], 2, 8).unwrap().values, vec![2, 1, 1]);
    }
}
