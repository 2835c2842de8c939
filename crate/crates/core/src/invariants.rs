//! mu-tilde, its independence of the chosen system, stratification of
//! `(sigma, mu-tilde)` over sample points and the nonsingularity check.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expansion::{weight, Expander};
use crate::field::Field;
use crate::filtration::{format_level, IdealisticFiltration};
use crate::jetring::{Exponents, OrdValue, Point, Poly};
use crate::leading::{
    compare_sigma, extract_lgs, purify_at, require_saturated, sigma_local, validate_lgs, Lgs,
    LgsEntry, SigmaValue,
};
use crate::linalg;
use crate::Level;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MuValue {
    Exact(Level),
    /// A censored lower bound.
    AtLeastRational(Level),
    /// Every ratio was censored or infinite at this truncation.
    InfinityUpToT,
}

impl fmt::Display for MuValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuValue::Exact(q) => write!(f, "{}", format_level(q)),
            MuValue::AtLeastRational(q) => write!(f, ">={}", format_level(q)),
            MuValue::InfinityUpToT => write!(f, "inf"),
        }
    }
}

impl Serialize for MuValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl MuValue {
    /// Comparison that is only answered when censoring allows it. Two
    /// infinite values compare equal.
    pub fn partial_cmp_censored(&self, other: &MuValue) -> Option<Ordering> {
        use MuValue::*;
        match (self, other) {
            (Exact(a), Exact(b)) => Some(a.cmp(b)),
            (InfinityUpToT, InfinityUpToT) => Some(Ordering::Equal),
            (Exact(_), InfinityUpToT) => Some(Ordering::Less),
            (InfinityUpToT, Exact(_)) => Some(Ordering::Greater),
            (Exact(a), AtLeastRational(b)) if a < b => Some(Ordering::Less),
            (AtLeastRational(a), Exact(b)) if b < a => Some(Ordering::Greater),
            _ => None,
        }
    }

    /// `q * delta` is an integer for exact values.
    pub fn denominator_divides(&self, delta: i64) -> bool {
        match self {
            MuValue::Exact(q) => (*q * Level::from_integer(delta)).is_integer(),
            _ => true,
        }
    }
}

/// Minimum of `ord_H(f) / a` over the effective generators of a saturated
/// filtration; zero off the support.
pub fn mu_tilde<K: Field>(
    filtration: &IdealisticFiltration<K>,
    p: &[K::Elem],
    lgs: &Lgs<K>,
    truncation: usize,
) -> Result<MuValue> {
    require_saturated(filtration)?;
    if !filtration.in_support(p)? {
        return Ok(MuValue::Exact(Level::from_integer(0)));
    }
    if lgs.point().as_slice() != p {
        return Err(Error::Precondition(
            "system is not at the requested point".into(),
        ));
    }
    let local = filtration.localize(p)?;
    validate_lgs(&local, lgs, truncation)?;
    let expander = Expander::new(lgs, truncation)?;
    let mut exact: Option<Level> = None;
    let mut censored: Option<Level> = None;
    for g in filtration.effective_generators() {
        let ratio = |n: u32| Level::from_integer(n as i64) / g.level;
        match expander.ord_h(&g.poly)? {
            OrdValue::Exact(n) => {
                let r = ratio(n);
                exact = Some(exact.map_or(r, |q| q.min(r)));
            }
            OrdValue::AtLeast(n) => {
                let r = ratio(n);
                censored = Some(censored.map_or(r, |q| q.min(r)));
            }
            OrdValue::Infinity => {}
        }
    }
    Ok(match (exact, censored) {
        (Some(q), Some(c)) if c < q => MuValue::AtLeastRational(c),
        (Some(q), _) => MuValue::Exact(q),
        (None, _) => MuValue::InfinityUpToT,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    pub candidates: Vec<Vec<(String, u32)>>,
    pub mu: Vec<MuValue>,
    pub pass: bool,
}

/// mu-tilde for each candidate system; passes when all agree.
pub fn check_lgs_independence<K: Field>(
    filtration: &IdealisticFiltration<K>,
    p: &[K::Elem],
    candidates: &[Lgs<K>],
    truncation: usize,
) -> Result<IndependenceReport> {
    let mu = candidates
        .iter()
        .map(|h| mu_tilde(filtration, p, h, truncation))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndependenceReport {
        candidates: candidates.iter().map(Lgs::format).collect(),
        pass: mu.windows(2).all(|w| w[0] == w[1]),
        mu,
    })
}

fn random_invertible<K: Field, R: Rng>(field: &K, n: usize, rng: &mut R) -> Vec<Vec<K::Elem>> {
    loop {
        let m: Vec<Vec<K::Elem>> = (0..n)
            .map(|_| (0..n).map(|_| field.random(rng)).collect())
            .collect();
        if !field.is_zero(&linalg::determinant(field, &m)) {
            return m;
        }
    }
}

/// Mixes entries of equal `e` by an invertible matrix and adds multiples of
/// Frobenius powers of lower entries.
fn linear_move<K: Field, R: Rng>(lgs: &Lgs<K>, rng: &mut R) -> Result<Lgs<K>> {
    let ring = lgs.ring();
    let field = ring.field();
    let old = lgs.entries();
    let mut entries = old.to_vec();
    let mut start = 0;
    while start < old.len() {
        let e = old[start].e;
        let end = start + old[start..].iter().take_while(|en| en.e == e).count();
        let m = random_invertible(field, end - start, rng);
        for (i, row) in m.iter().enumerate() {
            let mut h = ring.zero();
            for (k, c) in row.iter().enumerate() {
                ring.add_scaled_assign(&mut h, c, &old[start + k].poly);
            }
            entries[start + i].poly = h;
        }
        start = end;
    }
    for l in 0..entries.len() {
        for k in 0..l {
            if old[k].e < old[l].e {
                let q = ring
                    .prime_power(old[l].e - old[k].e)
                    .expect("positive characteristic");
                let c = field.random(rng);
                let pw = ring.pow(&old[k].poly, q);
                ring.add_scaled_assign(&mut entries[l].poly, &c, &pw);
            }
        }
    }
    Lgs::from_leading_forms(ring.clone(), lgs.point().clone(), entries, lgs.horizon())
}

/// Adds `c * x_j * s` to one entry, with `s` a product of generators lying in
/// the entry's slice, so the leading form is unchanged.
fn perturbation<K: Field, R: Rng>(
    filtration: &IdealisticFiltration<K>,
    lgs: &Lgs<K>,
    truncation: usize,
    rng: &mut R,
) -> Result<Lgs<K>> {
    let ring = lgs.ring();
    let field = ring.field();
    let local = filtration.localize(lgs.point())?;
    let mut entries: Vec<LgsEntry<K>> = lgs.entries().to_vec();
    if entries.is_empty() {
        return Ok(lgs.clone());
    }
    let l = rng.gen_range(0..entries.len());
    let n = lgs.powers()[l];
    let slice = local.slice(Level::from_integer(n as i64), truncation);
    if slice.seeds.is_empty() {
        return Ok(lgs.clone());
    }
    let seed = &slice.seeds[rng.gen_range(0..slice.seeds.len())];
    let j = rng.gen_range(0..ring.dim());
    let c = loop {
        let c = field.random(rng);
        if !field.is_zero(&c) {
            break c;
        }
    };
    let s = ring.mul(&ring.var(j), &local.seed_poly(seed));
    let s = local.to_global(&s)?;
    ring.add_scaled_assign(&mut entries[l].poly, &c, &s);
    Lgs::from_leading_forms(ring.clone(), lgs.point().clone(), entries, lgs.horizon())
}

/// The base system followed by up to `count - 1` validated variants obtained
/// by linear moves, perturbations or both.
pub fn lgs_candidates<K: Field, R: Rng>(
    filtration: &IdealisticFiltration<K>,
    base: &Lgs<K>,
    count: usize,
    truncation: usize,
    rng: &mut R,
) -> Result<Vec<Lgs<K>>> {
    let local = filtration.localize(base.point())?;
    let mut out = vec![base.clone()];
    let mut attempts = 0;
    while out.len() < count && attempts < 8 * count {
        let kind = attempts % 3;
        attempts += 1;
        let cand = match kind {
            0 => linear_move(base, rng),
            1 => perturbation(filtration, base, truncation, rng),
            _ => perturbation(filtration, base, truncation, rng).and_then(|h| linear_move(&h, rng)),
        };
        let cand = match cand {
            Ok(c) => c,
            Err(Error::NotLgs(_)) => continue,
            Err(e) => return Err(e),
        };
        match validate_lgs(&local, &cand, truncation) {
            Ok(()) => out.push(cand),
            Err(Error::NotLgs(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Points with a designated limit, used as witnesses of an open neighborhood.
#[derive(Clone, Debug)]
pub struct NeighborhoodGroup<K: Field> {
    pub limit: Point<K>,
    pub members: Vec<Point<K>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StratumRow {
    pub point: String,
    pub in_support: bool,
    pub sigma: SigmaValue,
    pub mu: Option<MuValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemicontinuityWitness {
    pub group: usize,
    pub limit: String,
    pub member: String,
    pub limit_value: String,
    pub member_value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemicontinuityReport {
    pub pass: bool,
    pub witnesses: Vec<SemicontinuityWitness>,
    /// Comparisons left open by censoring.
    pub inconclusive: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PurificationRow {
    pub point: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StratifyReport {
    pub rows: Vec<StratumRow>,
    pub semicontinuity: SemicontinuityReport,
    pub purification: Vec<PurificationRow>,
}

fn row_value(row: &StratumRow) -> String {
    match &row.mu {
        Some(m) => format!("({}, {m})", row.sigma),
        None => format!("({}, ?)", row.sigma),
    }
}

/// Lexicographic comparison of `(sigma, mu)`, `None` when censoring hides
/// the answer.
pub fn compare_pair(a: &StratumRow, b: &StratumRow) -> Option<Ordering> {
    match compare_sigma(&a.sigma, &b.sigma).ok()? {
        Ordering::Equal => a.mu.as_ref()?.partial_cmp_censored(b.mu.as_ref()?),
        o => Some(o),
    }
}

/// Rows for every point (the listed points, then group points not already
/// listed). The first point of maximal sigma in the support supplies a
/// system which is purified at the other such points.
pub fn stratify<K: Field>(
    filtration: &IdealisticFiltration<K>,
    points: &[Point<K>],
    groups: &[NeighborhoodGroup<K>],
    horizon: u32,
    truncation: usize,
) -> Result<StratifyReport> {
    require_saturated(filtration)?;
    let ring = filtration.ring();
    let mut all: Vec<Point<K>> = Vec::new();
    let mut index: HashMap<Point<K>, usize> = HashMap::new();
    let listed = points.iter().chain(
        groups
            .iter()
            .flat_map(|g| std::iter::once(&g.limit).chain(&g.members)),
    );
    for p in listed {
        ring.check_point(p)?;
        if !index.contains_key(p) {
            index.insert(p.clone(), all.len());
            all.push(p.clone());
        }
    }

    let mut rows = Vec::with_capacity(all.len());
    let mut locals = Vec::with_capacity(all.len());
    for p in &all {
        let local = filtration.localize(p)?;
        let in_support = local.in_support();
        let sigma = if in_support {
            sigma_local(&local, horizon, truncation)?
        } else {
            SigmaValue::zero(horizon)
        };
        rows.push(StratumRow {
            point: ring.format_point(p),
            in_support,
            sigma,
            mu: (!in_support).then(|| MuValue::Exact(Level::from_integer(0))),
            note: None,
        });
        locals.push(local);
    }

    let max_sigma = rows
        .iter()
        .filter(|r| r.in_support)
        .map(|r| r.sigma.clone())
        .max_by(|a, b| compare_sigma(a, b).unwrap_or(Ordering::Equal));
    let mut purification = Vec::new();
    let mut base: Option<Lgs<K>> = None;
    for (i, p) in all.iter().enumerate() {
        if !rows[i].in_support {
            continue;
        }
        let at_max = Some(&rows[i].sigma) == max_sigma.as_ref();
        let lgs = if let (true, Some(b)) = (at_max, base.as_ref()) {
            let res = purify_at(filtration, b, p, truncation);
            purification.push(PurificationRow {
                point: rows[i].point.clone(),
                pass: res.is_ok(),
                error: res.as_ref().err().map(|e| e.to_string()),
            });
            res
        } else {
            let res = extract_lgs(&locals[i], horizon, truncation);
            if at_max {
                base = res.as_ref().ok().cloned();
            }
            res
        };
        match lgs.and_then(|h| mu_tilde(filtration, p, &h, truncation)) {
            Ok(m) => rows[i].mu = Some(m),
            Err(e) => rows[i].note = Some(e.to_string()),
        }
    }

    let mut witnesses = Vec::new();
    let mut inconclusive = 0;
    for (g, group) in groups.iter().enumerate() {
        let lim = &rows[index[&group.limit]];
        for m in &group.members {
            let row = &rows[index[m]];
            match compare_pair(row, lim) {
                Some(Ordering::Greater) => witnesses.push(SemicontinuityWitness {
                    group: g,
                    limit: lim.point.clone(),
                    member: row.point.clone(),
                    limit_value: row_value(lim),
                    member_value: row_value(row),
                }),
                Some(_) => {}
                None => inconclusive += 1,
            }
        }
    }
    Ok(StratifyReport {
        rows,
        semicontinuity: SemicontinuityReport {
            pass: witnesses.is_empty(),
            witnesses,
            inconclusive,
        },
        purification,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Applicable,
    NotApplicable,
    Refuted,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorEvidence {
    pub generator: String,
    pub level: String,
    /// `B` with `|[B]| < a` and nonzero coefficient.
    pub nonzero_low: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleEvidence {
    pub point: String,
    pub in_support: bool,
    pub sigma: SigmaValue,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NspReport {
    pub verdict: Verdict,
    pub mu: Option<MuValue>,
    pub lgs: Vec<(String, u32)>,
    /// Rows of the coordinate change `y = C (x - P)`.
    pub coordinates: Vec<String>,
    /// Defining equations of the claimed center.
    pub center: Vec<String>,
    /// Whether the center equations are exact roots of the entries, rather
    /// than linear approximations.
    pub center_exact: bool,
    pub generators: Vec<GeneratorEvidence>,
    pub samples: Vec<SampleEvidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

/// `g` with `g^(p^e) = f`, when every exponent of `f` is divisible by `p^e`.
fn frobenius_root_poly<K: Field>(
    ring: &crate::RingContext<K>,
    f: &Poly<K>,
    e: u32,
) -> Option<Poly<K>> {
    let q = ring.prime_power(e)? as u32;
    let field = ring.field();
    let mut g = ring.zero();
    for (m, c) in f.terms() {
        if m.as_slice().iter().any(|k| k % q != 0) {
            return None;
        }
        let root = Exponents::new(m.as_slice().iter().map(|k| k / q).collect());
        ring.add_assign(&mut g, &ring.monomial(root, field.frobenius_root(c, e)));
    }
    Some(g)
}

/// Affine points of `V(g_1, .., g_N)` for linear `g`, drawn from the kernel
/// with a seeded generator.
fn sample_linear_variety<K: Field, R: Rng>(
    ring: &crate::RingContext<K>,
    eqs: &[Poly<K>],
    count: usize,
    rng: &mut R,
) -> Vec<Point<K>> {
    let field = ring.field();
    let d = ring.dim();
    let mut a: Vec<Vec<K::Elem>> = Vec::new();
    let mut rhs = Vec::new();
    for g in eqs {
        let mut row = vec![field.zero(); d];
        let mut c0 = field.zero();
        for (m, c) in g.terms() {
            match m.degree() {
                0 => c0 = c.clone(),
                1 => {
                    let j = m.as_slice().iter().position(|&k| k == 1).expect("linear");
                    row[j] = c.clone();
                }
                _ => return Vec::new(),
            }
        }
        a.push(row);
        rhs.push(field.neg(&c0));
    }
    let mut out: Vec<Point<K>> = Vec::new();
    for _ in 0..count * 20 {
        if out.len() >= count {
            break;
        }
        // Fix the free coordinates at random and solve for the rest.
        let mut ech_cols: Vec<usize> = Vec::new();
        let mut ech = linalg::Echelon::new(field.clone(), d);
        for row in &a {
            if let Some(c) = ech.insert(row.clone()) {
                ech_cols.push(c);
            }
        }
        let free: Vec<usize> = (0..d).filter(|j| !ech_cols.contains(j)).collect();
        let mut pt = vec![field.zero(); d];
        for &j in &free {
            pt[j] = field.random(rng);
        }
        let sub: Vec<Vec<K::Elem>> = a
            .iter()
            .map(|r| ech_cols.iter().map(|&j| r[j].clone()).collect())
            .collect();
        let b: Vec<K::Elem> = a
            .iter()
            .zip(&rhs)
            .map(|(r, v)| {
                free.iter().fold(v.clone(), |acc, &j| {
                    field.sub(&acc, &field.mul(&r[j], &pt[j]))
                })
            })
            .collect();
        let sol = match linalg::solve(field, &sub, &b) {
            linalg::Solution::Unique(x) => x,
            linalg::Solution::RankDeficient { particular, .. } => particular,
            linalg::Solution::Inconsistent => return Vec::new(),
        };
        for (k, &j) in ech_cols.iter().enumerate() {
            pt[j] = sol[k].clone();
        }
        if !out.contains(&pt) {
            out.push(pt);
        }
    }
    out
}

/// When mu-tilde is infinite up to the truncation, checks that every
/// generator has vanishing expansion coefficients below its level, derives
/// the center and compares sigma along it.
pub fn check_nsp<K: Field, R: Rng>(
    filtration: &IdealisticFiltration<K>,
    p: &[K::Elem],
    horizon: u32,
    truncation: usize,
    samples: &[Point<K>],
    sample_count: usize,
    rng: &mut R,
) -> Result<NspReport> {
    require_saturated(filtration)?;
    let ring = filtration.ring();
    let field = ring.field();
    let mut report = NspReport {
        verdict: Verdict::NotApplicable,
        mu: None,
        lgs: Vec::new(),
        coordinates: Vec::new(),
        center: Vec::new(),
        center_exact: false,
        generators: Vec::new(),
        samples: Vec::new(),
        witness: None,
    };
    let local = filtration.localize(p)?;
    if !local.in_support() {
        report.mu = Some(MuValue::Exact(Level::from_integer(0)));
        return Ok(report);
    }
    let lgs = extract_lgs(&local, horizon, truncation)?;
    let mu = mu_tilde(filtration, p, &lgs, truncation)?;
    report.mu = Some(mu.clone());
    report.lgs = lgs.format();
    if mu != MuValue::InfinityUpToT {
        return Ok(report);
    }
    let linear_forms: Vec<Poly<K>> = lgs
        .coords()
        .iter()
        .take(lgs.len())
        .map(|row| {
            let mut g = ring.zero();
            for (j, c) in row.iter().enumerate() {
                ring.add_scaled_assign(&mut g, c, &ring.var(j));
            }
            local.to_global(&g).expect("same ring")
        })
        .collect();
    report.coordinates = linear_forms.iter().map(|g| ring.format_poly(g)).collect();

    let expander = Expander::new(&lgs, truncation)?;
    let powers = expander.powers().to_vec();
    for g in filtration.effective_generators() {
        let exp = expander.expand(&g.poly)?;
        let low: Vec<Vec<u32>> = exp
            .coefficients()
            .keys()
            .filter(|b| Level::from_integer(weight(&powers, b) as i64) < g.level)
            .cloned()
            .collect();
        if let (Some(b), None) = (low.first(), &report.witness) {
            report.witness = Some(format!(
                "({}, {}) has a_{b:?} = {}",
                ring.format_poly(&g.poly),
                format_level(&g.level),
                ring.format_poly(exp.coefficient(b).expect("listed"))
            ));
        }
        report.generators.push(GeneratorEvidence {
            generator: ring.format_poly(&g.poly),
            level: format_level(&g.level),
            nonzero_low: low,
        });
    }
    if report.witness.is_some() {
        report.verdict = Verdict::Refuted;
        return Ok(report);
    }

    let roots: Option<Vec<Poly<K>>> = lgs
        .entries()
        .iter()
        .map(|en| frobenius_root_poly(ring, &en.poly, en.e))
        .collect();
    let center = match roots {
        Some(r) => {
            report.center_exact = true;
            r
        }
        None => linear_forms,
    };
    report.center = center.iter().map(|g| ring.format_poly(g)).collect();

    let sigma_p = sigma_local(&local, horizon, truncation)?;
    let mut pts: Vec<Point<K>> = samples
        .iter()
        .filter(|q| {
            center
                .iter()
                .all(|g| ring.eval(g, q).map(|v| field.is_zero(&v)).unwrap_or(false))
        })
        .cloned()
        .collect();
    if pts.len() < sample_count {
        for q in sample_linear_variety(ring, &center, sample_count, rng) {
            if pts.len() >= sample_count {
                break;
            }
            if !pts.contains(&q) {
                pts.push(q);
            }
        }
    }
    for q in &pts {
        let lq = filtration.localize(q)?;
        let in_support = lq.in_support();
        let sigma = if in_support {
            sigma_local(&lq, horizon, truncation)?
        } else {
            SigmaValue::zero(horizon)
        };
        let pass = in_support && sigma == sigma_p;
        if !pass && report.witness.is_none() {
            report.witness = Some(format!(
                "center point {} has support {in_support}, sigma {sigma}",
                ring.format_point(q)
            ));
        }
        report.samples.push(SampleEvidence {
            point: ring.format_point(q),
            in_support,
            sigma,
            pass,
        });
    }
    report.verdict = if report.witness.is_some() {
        Verdict::Refuted
    } else {
        Verdict::Applicable
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaloisField;
    use crate::filtration::Generator;
    use crate::RingContext;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lvl(n: i64) -> Level {
        Level::from_integer(n)
    }

    fn build(
        field: GaloisField,
        vars: &[&str],
        gens: &[(&str, &str)],
    ) -> IdealisticFiltration<GaloisField> {
        let ring = RingContext::new(field, vars).unwrap();
        let gens = gens
            .iter()
            .map(|(s, a)| {
                Generator::new(
                    ring.parse_poly(s).unwrap(),
                    crate::filtration::parse_level(a).unwrap(),
                )
            })
            .collect();
        IdealisticFiltration::generate(gens, ring)
            .unwrap()
            .d_saturate()
    }

    fn worked() -> IdealisticFiltration<GaloisField> {
        build(
            GaloisField::prime(2).unwrap(),
            &["x", "y"],
            &[("x^2+y^3", "2")],
        )
    }

    #[test]
    fn mu_examples() {
        let f = worked();
        let local = f.localize(&[0, 0]).unwrap();
        let h = extract_lgs(&local, 2, 12).unwrap();
        let mu = mu_tilde(&f, &[0, 0], &h, 12).unwrap();
        assert_eq!(mu, MuValue::Exact(lvl(2)));
        assert_eq!(serde_json::to_string(&mu).unwrap(), "\"2\"");
        assert!(mu.denominator_divides(f.denominator_bound()));
        assert_eq!(
            mu_tilde(&f, &[1, 0], &h, 12).unwrap(),
            MuValue::Exact(lvl(0))
        );

        let line = build(GaloisField::prime(2).unwrap(), &["x", "y"], &[("x", "1")]);
        let h = extract_lgs(&line.localize(&[0, 0]).unwrap(), 2, 6).unwrap();
        assert_eq!(
            mu_tilde(&line, &[0, 0], &h, 6).unwrap(),
            MuValue::InfinityUpToT
        );
    }

    #[test]
    fn fractional_levels_give_fractional_mu() {
        let f = build(
            GaloisField::prime(3).unwrap(),
            &["x", "y"],
            &[("x", "1"), ("y^2", "3/2")],
        );
        let h = extract_lgs(&f.localize(&[0, 0]).unwrap(), 1, 8).unwrap();
        let mu = mu_tilde(&f, &[0, 0], &h, 8).unwrap();
        assert_eq!(mu, MuValue::Exact(Level::new(4, 3)));
        assert!(mu.denominator_divides(f.denominator_bound()));
    }

    #[test]
    fn independence_over_candidates() {
        let f = worked();
        let local = f.localize(&[0, 0]).unwrap();
        let base = extract_lgs(&local, 2, 12).unwrap();
        let ring = f.ring();
        let bumped = Lgs::from_leading_forms(
            ring.clone(),
            vec![0, 0],
            vec![LgsEntry {
                poly: ring.parse_poly("x^2+y^3+x*y^4").unwrap(),
                e: 1,
            }],
            2,
        )
        .unwrap();
        validate_lgs(&local, &bumped, 12).unwrap();
        let r = check_lgs_independence(&f, &[0, 0], &[base.clone(), bumped], 12).unwrap();
        assert!(r.pass);
        assert_eq!(r.mu[1], MuValue::Exact(lvl(2)));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cands = lgs_candidates(&f, &base, 4, 12, &mut rng).unwrap();
        assert!(cands.len() >= 3);
        assert!(
            check_lgs_independence(&f, &[0, 0], &cands, 12)
                .unwrap()
                .pass
        );
        assert!(
            check_lgs_independence(&f, &[0, 0], &[base], 12)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn stratify_line_and_worked() {
        let line = build(GaloisField::prime(2).unwrap(), &["x", "y"], &[("x", "1")]);
        let pts = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let groups = vec![NeighborhoodGroup {
            limit: vec![0, 0],
            members: pts[1..].to_vec(),
        }];
        let r = stratify(&line, &pts, &groups, 2, 6).unwrap();
        assert!(r.semicontinuity.pass);
        assert_eq!(r.rows[1].mu, Some(MuValue::InfinityUpToT));
        assert_eq!(r.rows[2].mu, Some(MuValue::Exact(lvl(0))));
        assert_eq!(r.rows[2].sigma.values, vec![0, 0, 0]);
        assert!(r.purification.iter().all(|p| p.pass));
        assert_eq!(r.purification.len(), 1);

        let w = worked();
        let pts = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]];
        let groups = vec![NeighborhoodGroup {
            limit: vec![0, 0],
            members: pts[1..].to_vec(),
        }];
        let r = stratify(&w, &pts, &groups, 2, 12).unwrap();
        assert_eq!(r.rows[0].sigma.values, vec![2, 1, 1]);
        assert_eq!(r.rows[0].mu, Some(MuValue::Exact(lvl(2))));
        assert!(r.semicontinuity.pass);

        let empty = stratify(&w, &[], &[], 2, 12).unwrap();
        assert!(empty.rows.is_empty() && empty.semicontinuity.pass);
    }

    #[test]
    fn semicontinuity_reports_reversed_groups() {
        let line = build(GaloisField::prime(2).unwrap(), &["x", "y"], &[("x", "1")]);
        let groups = vec![NeighborhoodGroup {
            limit: vec![1, 0],
            members: vec![vec![0, 0]],
        }];
        let r = stratify(&line, &[], &groups, 2, 6).unwrap();
        assert!(!r.semicontinuity.pass);
        assert_eq!(r.semicontinuity.witnesses.len(), 1);
    }

    #[test]
    fn nonsingularity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gf8 = GaloisField::new(2, 3, None).unwrap();
        let line = build(gf8.clone(), &["x", "y"], &[("x", "1")]);
        let r = check_nsp(&line, &[0, 0], 2, 6, &[], 5, &mut rng).unwrap();
        assert_eq!(r.verdict, Verdict::Applicable);
        assert_eq!(r.center, vec!["x".to_string()]);
        assert!(r.center_exact);
        assert!(r.samples.len() >= 5 && r.samples.iter().all(|s| s.pass));

        for (p, m, s) in [(2u64, 3, "x^2"), (3, 2, "x^3")] {
            let field = GaloisField::new(p, m, None).unwrap();
            let f = build(field, &["x", "y"], &[(s, &p.to_string())]);
            let r = check_nsp(&f, &[0, 0], 1, 8, &[], 5, &mut rng).unwrap();
            assert_eq!(r.verdict, Verdict::Applicable, "{r:?}");
            assert_eq!(r.lgs[0].1, 1);
            assert_eq!(r.center, vec!["x".to_string()]);
            assert!(r.samples.len() >= 5);
        }

        let r = check_nsp(&worked(), &[0, 0], 2, 12, &[], 5, &mut rng).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert_eq!(r.mu, Some(MuValue::Exact(lvl(2))));
    }

    #[test]
    fn frobenius_roots_of_polynomials() {
        let ring = RingContext::new(GaloisField::prime(3).unwrap(), &["x", "y"]).unwrap();
        let f = ring.parse_poly("x^3+2*y^6").unwrap();
        assert_eq!(
            frobenius_root_poly(&ring, &f, 1).unwrap(),
            ring.parse_poly("x+2*y^2").unwrap()
        );
        assert!(frobenius_root_poly(&ring, &ring.parse_poly("x^3+y").unwrap(), 1).is_none());
    }
}
