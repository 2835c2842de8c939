//! The constrained expansion `f = sum_B a_B H^B`, where every `a_B` uses the
//! coordinate `y_l` only to exponents below `p^(e_l)`, together with the
//! order modulo the system and truncated checks of the coefficient lemmas.
//!
//! All expansion work happens in the system's coordinates `y = C x` around
//! its point. A coefficient `a_B` is determined modulo `m^(T + 1 - |[B]|)`,
//! so membership checks on it run at that precision.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::filtration::{format_level, level_ceil, IdealisticFiltration, LocalFiltration};
use crate::invariants::{mu_tilde, MuValue};
use crate::jetring::{monomials_of_degree, Exponents, JetBasis, Matrix, OrdValue, Poly};
use crate::leading::Lgs;
use crate::linalg::{self, Echelon};
use crate::Level;

/// Weight `|[B]| = sum p^(e_l) b_l`.
pub fn weight(powers: &[usize], b: &[u32]) -> usize {
    powers.iter().zip(b).map(|(p, &n)| p * n as usize).sum()
}

/// `y_l^(p^(e_l))` for every entry, with no lower terms.
pub fn check_associated<K: Field>(lgs: &Lgs<K>) -> bool {
    let ring = lgs.ring();
    let d = ring.dim();
    lgs.local_polys()
        .iter()
        .zip(lgs.powers())
        .enumerate()
        .all(|(l, (h, n))| {
            let y = lgs.to_coords(h, Some(n));
            y == ring.monomial(Exponents::unit(d, l, n as u32), ring.field().one())
        })
}

/// Invertibility of the matrices of `p^(e - e_l)`-th powers of the
/// coefficients of `y_i^(p^(e_l))` in `h_l`, for each level `e` in use.
pub fn check_weakly_associated<K: Field>(lgs: &Lgs<K>) -> bool {
    let ring = lgs.ring();
    let field = ring.field();
    let d = ring.dim();
    let powers = lgs.powers();
    let hs: Vec<Poly<K>> = lgs
        .local_polys()
        .iter()
        .zip(&powers)
        .map(|(h, &n)| lgs.to_coords(h, Some(n)))
        .collect();
    let es: Vec<u32> = lgs.entries().iter().map(|en| en.e).collect();
    let mut levels = es.clone();
    levels.dedup();
    levels.into_iter().all(|e| {
        let count = es.iter().filter(|&&el| el <= e).count();
        let m: Matrix<K> = (0..count)
            .map(|l| {
                let q = ring.prime_power(e - es[l]).expect("small exponent");
                (0..count)
                    .map(|i| {
                        let mono = Exponents::unit(d, i, powers[l] as u32);
                        let c = hs[l]
                            .coefficient(&mono)
                            .cloned()
                            .unwrap_or_else(|| field.zero());
                        field.pow(&c, q)
                    })
                    .collect()
            })
            .collect();
        !field.is_zero(&linalg::determinant(field, &m))
    })
}

/// Expansion coefficients keyed by `B`, in the system's coordinates.
#[derive(Clone, Debug)]
pub struct ExpansionResult<K: Field> {
    coefficients: BTreeMap<Vec<u32>, Poly<K>>,
    powers: Vec<usize>,
    truncation: usize,
    nvars: usize,
    input_zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientDump {
    #[serde(rename = "B")]
    pub b: Vec<u32>,
    #[serde(rename = "levelBB")]
    pub weight: String,
    #[serde(rename = "a_B")]
    pub coefficient: String,
}

impl<K: Field> ExpansionResult<K> {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn powers(&self) -> &[usize] {
        &self.powers
    }

    /// Nonzero coefficients in increasing lexicographic order of `B`.
    pub fn coefficients(&self) -> &BTreeMap<Vec<u32>, Poly<K>> {
        &self.coefficients
    }

    pub fn coefficient(&self, b: &[u32]) -> Option<&Poly<K>> {
        self.coefficients.get(b)
    }

    pub fn constant_term(&self) -> Poly<K> {
        let zero = vec![0; self.powers.len()];
        self.coefficients
            .get(&zero)
            .cloned()
            .unwrap_or_else(|| Poly::zero(self.nvars))
    }

    pub fn weight(&self, b: &[u32]) -> usize {
        weight(&self.powers, b)
    }

    /// Whether every coefficient respects `k_l < p^(e_l)`.
    pub fn window_ok(&self) -> bool {
        self.coefficients.values().all(|a| {
            a.terms().all(|(e, _)| {
                self.powers
                    .iter()
                    .enumerate()
                    .all(|(l, &n)| (e.get(l) as usize) < n)
            })
        })
    }

    /// Order of the constant coefficient, which is the order modulo the system.
    pub fn ord_h(&self) -> OrdValue {
        if self.input_zero {
            return OrdValue::Infinity;
        }
        match self.constant_term().ord() {
            Some(n) => OrdValue::Exact(n),
            None => OrdValue::AtLeast(self.truncation as u32 + 1),
        }
    }

    pub fn dump(&self, ring: &crate::RingContext<K>) -> Vec<CoefficientDump> {
        self.coefficients
            .iter()
            .map(|(b, a)| CoefficientDump {
                b: b.clone(),
                weight: self.weight(b).to_string(),
                coefficient: ring.format_poly(a),
            })
            .collect()
    }
}

struct DegreeSolver<K: Field> {
    monomials: Vec<Exponents>,
    unknowns: Vec<(Exponents, Vec<u32>)>,
    inverse: Matrix<K>,
}

/// Expansions against one system at one truncation.
pub struct Expander<K: Field> {
    lgs: Lgs<K>,
    truncation: usize,
    powers: Vec<usize>,
    hs: Vec<Poly<K>>,
    leads: Vec<Poly<K>>,
    associated: bool,
    solvers: Mutex<HashMap<usize, Arc<DegreeSolver<K>>>>,
    products: Mutex<HashMap<Vec<u32>, Arc<Poly<K>>>>,
}

impl<K: Field> Expander<K> {
    pub fn new(lgs: &Lgs<K>, truncation: usize) -> Result<Self> {
        let ring = lgs.ring();
        let d = ring.dim();
        let powers = lgs.powers();
        let mut hs = Vec::new();
        let mut leads = Vec::new();
        for (l, (h, &n)) in lgs.local_polys().iter().zip(&powers).enumerate() {
            let y = lgs.to_coords(h, Some(truncation));
            match y.ord() {
                Some(o) if o as usize >= n => {}
                _ => {
                    return Err(Error::NotLgs(format!(
                        "entry {l} has order below {n} at the point"
                    )))
                }
            }
            leads.push(y.homogeneous_part(n as u32));
            hs.push(y);
        }
        if !check_weakly_associated(lgs) {
            return Err(Error::NotWeaklyAssociated);
        }
        let associated = leads
            .iter()
            .zip(&powers)
            .enumerate()
            .all(|(l, (lead, &n))| {
                *lead == ring.monomial(Exponents::unit(d, l, n as u32), ring.field().one())
            });
        Ok(Expander {
            lgs: lgs.clone(),
            truncation,
            powers,
            hs,
            leads,
            associated,
            solvers: Mutex::new(HashMap::new()),
            products: Mutex::new(HashMap::new()),
        })
    }

    pub fn lgs(&self) -> &Lgs<K> {
        &self.lgs
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn powers(&self) -> &[usize] {
        &self.powers
    }

    /// Entries in `y` coordinates, truncated.
    pub fn entries_in_coords(&self) -> &[Poly<K>] {
        &self.hs
    }

    /// `(K, B)` with `i_l = p^(e_l) b_l + k_l`.
    fn split(&self, i: &Exponents) -> (Exponents, Vec<u32>) {
        let mut k = i.as_slice().to_vec();
        let mut b = vec![0u32; self.powers.len()];
        for (l, &n) in self.powers.iter().enumerate() {
            b[l] = k[l] / n as u32;
            k[l] %= n as u32;
        }
        (Exponents::new(k), b)
    }

    /// `H^B` in `y` coordinates, truncated.
    pub fn product(&self, b: &[u32]) -> Arc<Poly<K>> {
        if let Some(p) = self.products.lock().expect("product cache").get(b) {
            return p.clone();
        }
        let ring = self.lgs.ring();
        let mut acc = ring.one();
        for (l, &n) in b.iter().enumerate() {
            if n > 0 {
                let pw = ring.pow_truncated(&self.hs[l], n as u64, self.truncation);
                acc = ring.mul_truncated(&acc, &pw, self.truncation);
            }
        }
        let acc = Arc::new(acc);
        self.products
            .lock()
            .expect("product cache")
            .insert(b.to_vec(), acc.clone());
        acc
    }

    fn solver(&self, n: usize) -> Result<Arc<DegreeSolver<K>>> {
        if let Some(s) = self.solvers.lock().expect("solver cache").get(&n) {
            return Ok(s.clone());
        }
        let ring = self.lgs.ring();
        let field = ring.field();
        let monomials = monomials_of_degree(ring.dim(), n as u32);
        let index: HashMap<&Exponents, usize> =
            monomials.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let unknowns: Vec<(Exponents, Vec<u32>)> =
            monomials.iter().map(|m| self.split(m)).collect();
        // Column j: degree-n part of y^K times the product of leading forms.
        let mut cols: Vec<Vec<K::Elem>> = Vec::with_capacity(unknowns.len());
        for (k, b) in &unknowns {
            let mut lead = ring.monomial(k.clone(), field.one());
            for (l, &m) in b.iter().enumerate() {
                if m > 0 {
                    lead = ring.mul(&lead, &ring.pow(&self.leads[l], m as u64));
                }
            }
            let mut col = vec![field.zero(); monomials.len()];
            for (e, c) in lead.terms() {
                col[index[e]] = c.clone();
            }
            cols.push(col);
        }
        let m: Matrix<K> = (0..monomials.len())
            .map(|i| cols.iter().map(|c| c[i].clone()).collect())
            .collect();
        let inverse = linalg::invert(field, &m).ok_or(Error::NotWeaklyAssociated)?;
        let s = Arc::new(DegreeSolver {
            monomials,
            unknowns,
            inverse,
        });
        self.solvers
            .lock()
            .expect("solver cache")
            .insert(n, s.clone());
        Ok(s)
    }

    /// Expands a polynomial given in `y` coordinates.
    pub fn expand_coords(&self, f_y: &Poly<K>) -> Result<ExpansionResult<K>> {
        let ring = self.lgs.ring();
        let field = ring.field();
        let t = self.truncation;
        let mut rest = f_y.truncated(t);
        let mut coefficients: BTreeMap<Vec<u32>, Poly<K>> = BTreeMap::new();
        for n in 0..=t {
            let part = rest.homogeneous_part(n as u32);
            if part.is_zero() {
                continue;
            }
            let mut groups: BTreeMap<Vec<u32>, Poly<K>> = BTreeMap::new();
            if self.associated {
                for (i, c) in part.terms() {
                    let (k, b) = self.split(i);
                    let q = groups.entry(b).or_insert_with(|| ring.zero());
                    ring.add_assign(q, &ring.monomial(k, c.clone()));
                }
            } else {
                let solver = self.solver(n)?;
                let v: Vec<K::Elem> = solver
                    .monomials
                    .iter()
                    .map(|m| part.coefficient(m).cloned().unwrap_or_else(|| field.zero()))
                    .collect();
                let sol = linalg::mat_vec(field, &solver.inverse, &v);
                for ((k, b), c) in solver.unknowns.iter().zip(sol) {
                    if field.is_zero(&c) {
                        continue;
                    }
                    let q = groups.entry(b.clone()).or_insert_with(|| ring.zero());
                    ring.add_assign(q, &ring.monomial(k.clone(), c));
                }
            }
            for (b, q) in groups {
                let prod = self.product(&b);
                let term = ring.mul_truncated(&q, &prod, t);
                rest = ring.sub(&rest, &term);
                let slot = coefficients.entry(b).or_insert_with(|| ring.zero());
                ring.add_assign(slot, &q);
            }
            debug_assert!(rest.homogeneous_part(n as u32).is_zero());
        }
        coefficients.retain(|_, a| !a.is_zero());
        Ok(ExpansionResult {
            coefficients,
            powers: self.powers.clone(),
            truncation: t,
            nvars: ring.dim(),
            input_zero: f_y.is_zero(),
        })
    }

    /// Expands a global polynomial around the system's point.
    pub fn expand(&self, f: &Poly<K>) -> Result<ExpansionResult<K>> {
        let y = self.lgs.global_to_coords(f, Some(self.truncation))?;
        let mut r = self.expand_coords(&y)?;
        r.input_zero = f.is_zero();
        Ok(r)
    }

    /// `sum_B a_B H^B`, truncated, in `y` coordinates.
    pub fn reassemble(&self, result: &ExpansionResult<K>) -> Poly<K> {
        let ring = self.lgs.ring();
        let mut acc = ring.zero();
        for (b, a) in &result.coefficients {
            let prod = self.product(b);
            ring.add_assign(&mut acc, &ring.mul_truncated(a, &prod, self.truncation));
        }
        acc
    }

    pub fn ord_h(&self, f: &Poly<K>) -> Result<OrdValue> {
        Ok(self.expand(f)?.ord_h())
    }
}

pub fn expand<K: Field>(
    f: &Poly<K>,
    lgs: &Lgs<K>,
    truncation: usize,
) -> Result<ExpansionResult<K>> {
    Expander::new(lgs, truncation)?.expand(f)
}

pub fn reassemble<K: Field>(result: &ExpansionResult<K>, lgs: &Lgs<K>) -> Result<Poly<K>> {
    Ok(Expander::new(lgs, result.truncation)?.reassemble(result))
}

/// `ord` of the constant expansion coefficient of a global polynomial.
pub fn ord_h_expansion<K: Field>(f: &Poly<K>, lgs: &Lgs<K>, truncation: usize) -> Result<OrdValue> {
    Expander::new(lgs, truncation)?.ord_h(f)
}

/// The order modulo the ideal of the system, from the echelon form of the
/// ideal in the jet space: the first surviving degree after reduction.
pub struct IdealOrder<K: Field> {
    lgs: Lgs<K>,
    basis: Arc<JetBasis>,
    echelon: Echelon<K>,
}

impl<K: Field> IdealOrder<K> {
    pub fn new(lgs: &Lgs<K>, truncation: usize) -> Self {
        let ring = lgs.ring();
        let field = ring.field();
        let d = ring.dim();
        let basis = JetBasis::new(d, truncation);
        let mut echelon = Echelon::new(field.clone(), basis.dim());
        for h in lgs.local_polys() {
            let h = h.truncated(truncation);
            let Some(o) = h.ord() else { continue };
            for n in 0..=truncation.saturating_sub(o as usize) {
                for m in monomials_of_degree(d, n as u32) {
                    if echelon.is_full() {
                        break;
                    }
                    let row = ring.shift(&h, &m).truncated(truncation);
                    echelon.insert(basis.to_dense(field, &row));
                }
            }
        }
        IdealOrder {
            lgs: lgs.clone(),
            basis,
            echelon,
        }
    }

    pub fn ord_local(&self, f_local: &Poly<K>) -> OrdValue {
        if f_local.is_zero() {
            return OrdValue::Infinity;
        }
        let v = self.basis.to_dense(self.lgs.ring().field(), f_local);
        match self.echelon.reduced_leading(&v) {
            Some(c) => OrdValue::Exact(self.basis.degree_of(c)),
            None => OrdValue::AtLeast(self.basis.truncation() as u32 + 1),
        }
    }

    pub fn ord(&self, f: &Poly<K>) -> Result<OrdValue> {
        let local = self.lgs.ring().translate(f, self.lgs.point())?;
        Ok(self.ord_local(&local))
    }
}

pub fn ord_h_membership<K: Field>(
    f: &Poly<K>,
    lgs: &Lgs<K>,
    truncation: usize,
) -> Result<OrdValue> {
    IdealOrder::new(lgs, truncation).ord(f)
}

/// A coefficient that failed its membership test.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientFailure {
    #[serde(rename = "B")]
    pub b: Vec<u32>,
    pub level: String,
    pub coefficient: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FclReport {
    pub truncation: usize,
    pub level: String,
    pub coefficients_checked: usize,
    pub failures: Vec<CoefficientFailure>,
    pub pass: bool,
}

fn check_inputs<K: Field>(
    filtration: &IdealisticFiltration<K>,
    local: &LocalFiltration<K>,
    f: &Poly<K>,
    a: Level,
    truncation: usize,
) -> Result<()> {
    if !filtration.is_d_saturated() {
        return Err(Error::Precondition("filtration is not D-saturated".into()));
    }
    let f_local = local.to_local(f)?;
    if !local.membership(&f_local, a, truncation)? {
        return Err(Error::Precondition(format!(
            "element is not in the level-{} slice",
            format_level(&a)
        )));
    }
    Ok(())
}

/// Truncation at which a coefficient with weight `w` is determined.
fn coefficient_precision(truncation: usize, w: usize) -> usize {
    truncation - w.min(truncation)
}

/// Every expansion coefficient `a_B` of a member `(f, a)` should lie in the
/// slice of level `a - |[B]|`.
pub fn check_fcl<K: Field>(
    filtration: &IdealisticFiltration<K>,
    f: &Poly<K>,
    a: Level,
    lgs: &Lgs<K>,
    truncation: usize,
) -> Result<FclReport> {
    let local = filtration.localize(lgs.point())?;
    check_inputs(filtration, &local, f, a, truncation)?;
    let expander = Expander::new(lgs, truncation)?;
    let ring = lgs.ring();
    let result = expander.expand(f)?;
    let mut failures = Vec::new();
    for (b, coef) in result.coefficients() {
        let w = result.weight(b);
        let level = a - Level::from_integer(w as i64);
        let x = lgs.from_coords(coef, None);
        let precision = coefficient_precision(truncation, w);
        if !local.membership(&x, level, precision)? {
            failures.push(CoefficientFailure {
                b: b.clone(),
                level: format_level(&level),
                coefficient: ring.format_poly(coef),
                reason: format!("not a member modulo m^{}", precision + 1),
            });
        }
    }
    Ok(FclReport {
        truncation,
        level: format_level(&a),
        coefficients_checked: result.coefficients().len(),
        pass: failures.is_empty(),
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EtaValue {
    pub ord: u32,
    #[serde(rename = "B")]
    pub b: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationReport {
    pub truncation: usize,
    pub steps: usize,
    pub etas: Vec<EtaValue>,
    /// The iterate vanished modulo `m^(T+1)`.
    pub exhausted: bool,
    pub violations: Vec<String>,
    /// Membership of the constant coefficient at the full level.
    pub constant_member: bool,
    pub pass: bool,
}

/// Runs `g_n = g_(n-1) - H^(B_o) D_[B_o] g_(n-1)` starting from
/// `g_0 = f - a_0`, checking at each step that `g_n` has no constant
/// coefficient, that `a_0 + g_n` stays in the level-`a` slice, and that
/// `eta = (ord g, B_o)` strictly increases.
pub fn fcl_iterate<K: Field>(
    filtration: &IdealisticFiltration<K>,
    f: &Poly<K>,
    a: Level,
    lgs: &Lgs<K>,
    truncation: usize,
    max_steps: usize,
) -> Result<IterationReport> {
    let local = filtration.localize(lgs.point())?;
    check_inputs(filtration, &local, f, a, truncation)?;
    let ring = lgs.ring();
    let expander = Expander::new(lgs, truncation)?;
    let powers = expander.powers().to_vec();
    let f_y = lgs.global_to_coords(f, Some(truncation))?;
    let a0 = expander.expand_coords(&f_y)?.constant_term();
    let mut g = ring.sub(&f_y, &a0);
    let mut etas: Vec<EtaValue> = Vec::new();
    let mut violations = Vec::new();
    let mut steps = 0;
    let exhausted = loop {
        if g.is_zero() {
            break true;
        }
        if steps == max_steps {
            break false;
        }
        let exp = expander.expand_coords(&g)?;
        if !exp.constant_term().is_zero() {
            violations.push(format!("step {steps}: iterate has a constant coefficient"));
        }
        let sum = lgs.from_coords(&ring.add(&a0, &g), None);
        if !local.membership(&sum, a, truncation)? {
            violations.push(format!(
                "step {steps}: a_0 + g left the level-{} slice",
                format_level(&a)
            ));
        }
        let nu = g.ord().expect("nonzero");
        let b_o = exp
            .coefficients()
            .iter()
            .find(|(b, c)| c.ord().map(|o| o as usize + weight(&powers, b)) == Some(nu as usize))
            .map(|(b, _)| b.clone());
        let Some(b_o) = b_o else {
            violations.push(format!("step {steps}: no coefficient attains the order"));
            break false;
        };
        let eta = EtaValue {
            ord: nu,
            b: b_o.clone(),
        };
        if let Some(prev) = etas.last() {
            if (prev.ord, &prev.b) >= (eta.ord, &eta.b) {
                violations.push(format!("step {steps}: eta did not increase"));
            }
        }
        etas.push(eta);
        let index = Exponents::new(
            (0..ring.dim())
                .map(|l| {
                    if l < powers.len() {
                        b_o[l] * powers[l] as u32
                    } else {
                        0
                    }
                })
                .collect(),
        );
        let deriv = ring.hasse(&g, &index)?;
        let prod = expander.product(&b_o);
        g = ring.sub(&g, &ring.mul_truncated(&prod, &deriv, truncation));
        steps += 1;
    };
    let constant_member = local.membership(&lgs.from_coords(&a0, None), a, truncation)?;
    Ok(IterationReport {
        truncation,
        steps,
        etas,
        exhausted,
        pass: violations.is_empty() && constant_member,
        violations,
        constant_member,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientLemmaReport {
    pub level: String,
    pub nu: String,
    pub mu: MuValue,
    pub truncation: usize,
    pub elements_checked: usize,
    pub products_checked: usize,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// `ceil(nu * t)` for rational `nu` and level `t`.
fn ceil_product(nu: Level, t: Level) -> i64 {
    level_ceil(&(nu * t))
}

/// Truncated check of `I_a = sum_B I'_(a - |[B]|) H^B` with
/// `I'_t = I_t ∩ m^ceil(nu t)`, summing over `|[B]| < a + p^(e_N)`.
pub fn check_coefficient_lemma<K: Field>(
    filtration: &IdealisticFiltration<K>,
    a: Level,
    nu: Level,
    lgs: &Lgs<K>,
    truncation: usize,
) -> Result<CoefficientLemmaReport> {
    if !filtration.is_d_saturated() {
        return Err(Error::Precondition("filtration is not D-saturated".into()));
    }
    if nu.is_negative() {
        return Err(Error::Precondition("nu must be nonnegative".into()));
    }
    let mu = mu_tilde(filtration, lgs.point(), lgs, truncation)?;
    let below = match &mu {
        MuValue::Exact(q) => nu < *q,
        MuValue::AtLeastRational(q) => nu < *q,
        MuValue::InfinityUpToT => true,
    };
    if !below {
        return Err(Error::Precondition(format!(
            "nu = {} is not below mu-tilde = {mu}",
            format_level(&nu)
        )));
    }
    let ring = lgs.ring();
    let field = ring.field();
    let local = filtration.localize(lgs.point())?;
    let expander = Expander::new(lgs, truncation)?;
    let powers = expander.powers().to_vec();
    let bound = Level::from_integer(powers.last().copied().unwrap_or(0) as i64) + a;
    let within = |w: usize| Level::from_integer(w as i64) < bound;
    let mut failures = Vec::new();

    // Every slice element decomposes with coefficients in the primed slices.
    let elements = local.level_slice_basis(a, truncation)?;
    for (idx, el) in elements.iter().enumerate() {
        let y = lgs.to_coords(el.poly(), Some(truncation));
        let exp = expander.expand_coords(&y)?;
        let mut regrouped: BTreeMap<Vec<u32>, Poly<K>> = BTreeMap::new();
        for (b, coef) in exp.coefficients() {
            let w = weight(&powers, b);
            let t = a - Level::from_integer(w as i64);
            if within(w) {
                if t.is_positive() {
                    let precision = coefficient_precision(truncation, w);
                    let x = lgs.from_coords(coef, None);
                    if !local.membership(&x, t, precision)? {
                        failures.push(format!(
                            "element {idx}: coefficient at B = {b:?} not in level {}",
                            format_level(&t)
                        ));
                    }
                    let need = ceil_product(nu, t).min(precision as i64 + 1);
                    let ord = coef.ord().map_or(i64::MAX, i64::from);
                    if ord < need {
                        failures.push(format!(
                            "element {idx}: coefficient at B = {b:?} has order {ord} < {need}"
                        ));
                    }
                }
                let slot = regrouped.entry(b.clone()).or_insert_with(|| ring.zero());
                ring.add_assign(slot, coef);
            } else {
                // Peel factors off the top until the weight drops below the bound.
                let mut c = b.clone();
                let mut w = w;
                while !within(w) {
                    let l = c.iter().rposition(|&n| n > 0).expect("positive weight");
                    c[l] -= 1;
                    w -= powers[l];
                }
                let mut rest = b.clone();
                for (r, k) in rest.iter_mut().zip(&c) {
                    *r -= k;
                }
                let moved = ring.mul_truncated(coef, &expander.product(&rest), truncation);
                let slot = regrouped.entry(c).or_insert_with(|| ring.zero());
                ring.add_assign(slot, &moved);
            }
        }
        let mut total = ring.zero();
        for (b, coef) in &regrouped {
            ring.add_assign(
                &mut total,
                &ring.mul_truncated(coef, &expander.product(b), truncation),
            );
        }
        if total != y {
            failures.push(format!(
                "element {idx}: regrouped decomposition does not reassemble"
            ));
        }
    }

    // Every product of a primed-slice element with H^B lies in I_a.
    let mut products_checked = 0;
    let hs: Vec<Poly<K>> = lgs
        .local_polys()
        .iter()
        .map(|h| h.truncated(truncation))
        .collect();
    for b in weights_below(&powers, bound) {
        let w = weight(&powers, &b);
        let t = a - Level::from_integer(w as i64);
        let mut hb = ring.one();
        for (l, &n) in b.iter().enumerate() {
            if n > 0 {
                hb = ring.mul_truncated(
                    &hb,
                    &ring.pow_truncated(&hs[l], n as u64, truncation),
                    truncation,
                );
            }
        }
        let generators: Vec<Poly<K>> = if t.is_positive() {
            let k = ceil_product(nu, t).max(0) as usize;
            let slice = local.slice(t, truncation);
            (0..slice.echelon.rank())
                .map(|i| slice.echelon.row(i))
                .filter(|row| {
                    row.iter()
                        .position(|c| !field.is_zero(c))
                        .is_some_and(|c| slice.basis.degree_of(c) as usize >= k)
                })
                .map(|row| slice.basis.from_dense(field, &row))
                .collect()
        } else {
            vec![ring.one()]
        };
        for g in generators {
            products_checked += 1;
            let prod = ring.mul_truncated(&g, &hb, truncation);
            if !local.membership(&prod, a, truncation)? {
                failures.push(format!(
                    "product with B = {b:?} not in level {}",
                    format_level(&a)
                ));
                break;
            }
        }
    }

    Ok(CoefficientLemmaReport {
        level: format_level(&a),
        nu: format_level(&nu),
        mu,
        truncation,
        elements_checked: elements.len(),
        products_checked,
        pass: failures.is_empty(),
        failures,
    })
}

/// All `B` with weight strictly below `bound`.
fn weights_below(powers: &[usize], bound: Level) -> Vec<Vec<u32>> {
    fn rec(
        powers: &[usize],
        k: usize,
        used: usize,
        bound: Level,
        b: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if k == powers.len() {
            out.push(b.clone());
            return;
        }
        let mut n = 0;
        while Level::from_integer((used + n * powers[k]) as i64) < bound {
            b[k] = n as u32;
            rec(powers, k + 1, used + n * powers[k], bound, b, out);
            n += 1;
        }
        b[k] = 0;
    }
    let mut out = Vec::new();
    if Level::from_integer(0) < bound {
        rec(powers, 0, 0, bound, &mut vec![0; powers.len()], &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaloisField;
    use crate::filtration::Generator;
    use crate::leading::{extract_lgs, LgsEntry};
    use crate::RingContext;

    fn lvl(n: i64) -> Level {
        Level::from_integer(n)
    }

    fn worked() -> (IdealisticFiltration<GaloisField>, Lgs<GaloisField>) {
        let ring = RingContext::new(GaloisField::prime(2).unwrap(), &["x", "y"]).unwrap();
        let f = ring.parse_poly("x^2+y^3").unwrap();
        let filt = IdealisticFiltration::generate(vec![Generator::new(f, lvl(2))], ring)
            .unwrap()
            .d_saturate();
        let lgs = extract_lgs(&filt.localize(&[0, 0]).unwrap(), 2, 12).unwrap();
        (filt, lgs)
    }

    #[test]
    fn association_checks() {
        let (filt, lgs) = worked();
        assert!(check_associated(&lgs));
        assert!(check_weakly_associated(&lgs));
        let swapped = lgs.with_coordinates(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(!check_associated(&swapped));
        assert!(!check_weakly_associated(&swapped));
        assert!(matches!(
            Expander::new(&swapped, 12),
            Err(Error::NotWeaklyAssociated)
        ));
        let ring = filt.ring().clone();
        let xy = Lgs::new(
            ring.clone(),
            vec![0, 0],
            vec![LgsEntry {
                poly: ring.parse_poly("x*y").unwrap(),
                e: 1,
            }],
            linalg::identity(ring.field(), 2),
            2,
        )
        .unwrap();
        assert!(!check_associated(&xy));
    }

    #[test]
    fn expansion_of_x4() {
        let (filt, lgs) = worked();
        let ring = filt.ring();
        let x4 = ring.parse_poly("x^4").unwrap();
        let exp = expand(&x4, &lgs, 12).unwrap();
        let got: Vec<(Vec<u32>, String)> = exp
            .coefficients()
            .iter()
            .map(|(b, a)| (b.clone(), ring.format_poly(a)))
            .collect();
        assert_eq!(
            got,
            vec![(vec![0], "y^6".to_string()), (vec![2], "1".to_string())]
        );
        assert_eq!(reassemble(&exp, &lgs).unwrap(), x4);
        assert_eq!(ord_h_expansion(&x4, &lgs, 12).unwrap(), OrdValue::Exact(6));
        assert_eq!(ord_h_membership(&x4, &lgs, 12).unwrap(), OrdValue::Exact(6));
        let dump = serde_json::to_string(&exp.dump(ring)).unwrap();
        assert_eq!(
            dump,
            r#"[{"B":[0],"levelBB":"0","a_B":"y^6"},{"B":[2],"levelBB":"4","a_B":"1"}]"#
        );
    }

    #[test]
    fn small_expansions() {
        let (filt, lgs) = worked();
        let ring = filt.ring();
        let h = ring.parse_poly("x^2+y^3").unwrap();
        let exp = expand(&h, &lgs, 12).unwrap();
        assert_eq!(exp.coefficients().len(), 1);
        assert_eq!(exp.coefficient(&[1]), Some(&ring.one()));
        let y2 = ring.parse_poly("y^2").unwrap();
        let exp = expand(&y2, &lgs, 12).unwrap();
        assert_eq!(exp.constant_term(), y2);
        let zero = expand(&ring.zero(), &lgs, 12).unwrap();
        assert!(zero.coefficients().is_empty());
        assert_eq!(zero.ord_h(), OrdValue::Infinity);
    }

    #[test]
    fn order_modulo_the_system() {
        let (filt, lgs) = worked();
        let ring = filt.ring();
        let cases = [
            ("y^2", OrdValue::Exact(2)),
            ("x^2+y^3", OrdValue::AtLeast(13)),
            ("1+x", OrdValue::Exact(0)),
        ];
        for (s, want) in cases {
            let f = ring.parse_poly(s).unwrap();
            assert_eq!(ord_h_expansion(&f, &lgs, 12).unwrap(), want, "{s}");
            assert_eq!(ord_h_membership(&f, &lgs, 12).unwrap(), want, "{s}");
        }
        assert_eq!(
            ord_h_membership(&ring.zero(), &lgs, 12).unwrap(),
            OrdValue::Infinity
        );
    }

    #[test]
    fn weakly_associated_coordinates_expand_too() {
        let ring = RingContext::new(GaloisField::prime(3).unwrap(), &["x", "y"]).unwrap();
        let h = ring.parse_poly("x+y+y^2").unwrap();
        // y1 = x + 2y keeps the coefficient of y1 in h nonzero without being associated.
        let lgs = Lgs::new(
            ring.clone(),
            vec![0, 0],
            vec![LgsEntry { poly: h, e: 0 }],
            vec![vec![1, 2], vec![0, 1]],
            0,
        )
        .unwrap();
        assert!(!check_associated(&lgs));
        assert!(check_weakly_associated(&lgs));
        let ex = Expander::new(&lgs, 6).unwrap();
        let f = ring.parse_poly("x^3*y+2*x*y^2+y^5+1").unwrap();
        let r = ex.expand(&f).unwrap();
        assert!(r.window_ok());
        assert_eq!(
            ex.reassemble(&r),
            lgs.global_to_coords(&f, Some(6)).unwrap()
        );
        assert_eq!(r.ord_h(), IdealOrder::new(&lgs, 6).ord(&f).unwrap());
    }

    #[test]
    fn formal_coefficient_lemma_examples() {
        let (filt, lgs) = worked();
        let ring = filt.ring();
        let h = ring.parse_poly("x^2+y^3").unwrap();
        let r = check_fcl(&filt, &h, lvl(2), &lgs, 12).unwrap();
        assert!(r.pass);
        let f = ring.parse_poly("x^2*y^2+y^5").unwrap();
        let r = check_fcl(&filt, &f, lvl(3), &lgs, 12).unwrap();
        assert!(r.pass, "{r:?}");
        let y = ring.parse_poly("y").unwrap();
        assert!(matches!(
            check_fcl(&filt, &y, lvl(1), &lgs, 12),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn iteration_examples() {
        let (filt, lgs) = worked();
        let ring = filt.ring();
        let y2 = ring.parse_poly("y^2").unwrap();
        let r = fcl_iterate(&filt, &y2, lvl(1), &lgs, 12, 50).unwrap();
        assert_eq!(r.steps, 0);
        assert!(r.pass);
        let h = ring.parse_poly("x^2+y^3").unwrap();
        let r = fcl_iterate(&filt, &h, lvl(2), &lgs, 12, 50).unwrap();
        assert_eq!(r.steps, 1);
        assert_eq!(r.etas[0].b, vec![1]);
        assert!(r.exhausted && r.pass);
        let f = ring.parse_poly("x^4*y^2+x^2*y^5+y^7").unwrap();
        let r = fcl_iterate(&filt, &f, lvl(3), &lgs, 12, 200).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn coefficient_lemma_examples() {
        let (filt, lgs) = worked();
        assert!(
            check_coefficient_lemma(&filt, lvl(2), lvl(0), &lgs, 10)
                .unwrap()
                .pass
        );
        let r = check_coefficient_lemma(&filt, lvl(2), Level::new(3, 2), &lgs, 10).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(matches!(
            check_coefficient_lemma(&filt, lvl(2), lvl(2), &lgs, 10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn strict_weak_multiplicativity_witness() {
        let (filt, lgs) = worked();
        let ring = filt.ring();
        let x = ring.parse_poly("x").unwrap();
        let o = ord_h_expansion(&x, &lgs, 12).unwrap();
        let o2 = ord_h_expansion(&ring.mul(&x, &x), &lgs, 12).unwrap();
        assert_eq!(o, OrdValue::Exact(1));
        assert_eq!(o2, OrdValue::Exact(3));
    }
}
