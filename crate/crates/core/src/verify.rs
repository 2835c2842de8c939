//! Seeded property suites over an instance, shared by the command line and
//! the integration tests. Each suite counts passing, failing and skipped
//! trials and keeps the first few counterexamples.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{check_coefficient_lemma, check_fcl, fcl_iterate, Expander, IdealOrder};
use crate::field::Field;
use crate::filtration::format_level;
use crate::instance::Instance;
use crate::invariants::{
    check_lgs_independence, check_nsp, lgs_candidates, mu_tilde, stratify, MuValue, Verdict,
};
use crate::jetring::{monomials_of_degree, Exponents, Poly, RingContext};
use crate::leading::{extract_lgs, Lgs};
use crate::random::{random_member, random_poly};
use crate::Level;

const MAX_RECORDED: usize = 20;

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub truncation: usize,
    #[serde(rename = "E")]
    pub horizon: u32,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    fn new<K: Field>(suite: &str, inst: &Instance<K>) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            truncation: inst.truncation,
            horizon: inst.horizon,
            pass: true,
            ..Default::default()
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.trials += 1;
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            self.pass = false;
            if self.failures.len() < MAX_RECORDED {
                self.failures.push(what());
            }
        }
    }

    fn skip(&mut self, why: impl Into<String>) {
        self.trials += 1;
        self.skipped += 1;
        let why = why.into();
        if !self.notes.contains(&why) && self.notes.len() < MAX_RECORDED {
            self.notes.push(why);
        }
    }
}

/// The system extracted at the instance's base point, or the reason there
/// is none.
pub fn base_lgs<K: Field>(inst: &Instance<K>) -> std::result::Result<Lgs<K>, String> {
    let p = inst.base_point();
    let local = inst.filtration.localize(&p).map_err(|e| e.to_string())?;
    if !local.in_support() {
        return Err(format!(
            "base point {} is outside the support",
            inst.ring.format_point(&p)
        ));
    }
    extract_lgs(&local, inst.horizon, inst.truncation).map_err(|e| e.to_string())
}

/// A random polynomial mixing a free part with multiples of the entries, so
/// that expansions reach nonzero `B` and orders modulo the system get
/// censored.
pub fn random_test_poly<K: Field, R: Rng>(
    ring: &RingContext<K>,
    lgs: &Lgs<K>,
    rng: &mut R,
    truncation: usize,
) -> Poly<K> {
    let t = truncation as u32;
    let point = lgs.point();
    let back = ring.negate_point(point);
    let mut local = ring.zero();
    if rng.gen_bool(0.7) {
        let lo = rng.gen_range(0..=t);
        let terms = rng.gen_range(1..=4);
        local = random_poly(ring, rng, lo, t, terms);
    }
    for h in lgs.local_polys() {
        if rng.gen_bool(0.6) {
            let terms = rng.gen_range(1..=3);
            let r = random_poly(ring, rng, 0, t / 2, terms);
            ring.add_assign(&mut local, &ring.mul_truncated(&r, &h, truncation));
        }
    }
    ring.translate(&local, &back).expect("same ring")
}

fn with_lgs<K: Field>(inst: &Instance<K>, report: &mut SuiteReport) -> Option<Lgs<K>> {
    match base_lgs(inst) {
        Ok(h) => Some(h),
        Err(why) => {
            report.notes.push(format!("vacuous: {why}"));
            None
        }
    }
}

/// Expansion round trip, exponent window and the order estimate.
pub fn suite_uniq<K: Field, R: Rng>(
    inst: &Instance<K>,
    rng: &mut R,
    trials: usize,
) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("uniq", inst);
    let Some(lgs) = with_lgs(inst, &mut rep) else {
        return Ok(rep);
    };
    let t = inst.truncation;
    let expander = Expander::new(&lgs, t)?;
    for i in 0..trials {
        let f = random_test_poly(&inst.ring, &lgs, rng, t);
        let r = expander.expand(&f)?;
        let f_y = lgs.global_to_coords(&f, Some(t))?;
        let round = expander.reassemble(&r) == f_y;
        let window = r.window_ok();
        let ord_f = f_y.ord().unwrap_or(u32::MAX) as usize;
        let estimate = r
            .coefficients()
            .iter()
            .all(|(b, a)| a.ord().expect("nonzero") as usize + r.weight(b) >= ord_f.min(t + 1));
        rep.record(round && window && estimate, || {
            format!(
                "trial {i}: f = {} round trip {round}, window {window}, order estimate {estimate}",
                inst.ring.format_poly(&f)
            )
        });
    }
    Ok(rep)
}

/// The order modulo the system from the expansion against the membership
/// oracle.
pub fn suite_ordh<K: Field, R: Rng>(
    inst: &Instance<K>,
    rng: &mut R,
    trials: usize,
) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("ordh", inst);
    let Some(lgs) = with_lgs(inst, &mut rep) else {
        return Ok(rep);
    };
    let t = inst.truncation;
    let expander = Expander::new(&lgs, t)?;
    let oracle = IdealOrder::new(&lgs, t);
    for i in 0..trials {
        let f = random_test_poly(&inst.ring, &lgs, rng, t);
        let a = expander.ord_h(&f)?;
        let b = oracle.ord(&f)?;
        rep.record(a == b, || {
            format!(
                "trial {i}: f = {}: expansion {a}, membership {b}",
                inst.ring.format_poly(&f)
            )
        });
    }
    Ok(rep)
}

/// Coefficient membership and the operator iteration on random members.
pub fn suite_fcl<K: Field, R: Rng>(
    inst: &Instance<K>,
    rng: &mut R,
    trials: usize,
) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("fcl", inst);
    let Some(lgs) = with_lgs(inst, &mut rep) else {
        return Ok(rep);
    };
    let t = inst.truncation;
    for i in 0..trials {
        let Some((f, a)) = random_member(&inst.filtration, rng, 2, 1) else {
            rep.skip("no effective generators");
            continue;
        };
        let fcl = check_fcl(&inst.filtration, &f, a, &lgs, t)?;
        let it = fcl_iterate(&inst.filtration, &f, a, &lgs, t, 500)?;
        rep.record(fcl.pass && it.pass, || {
            format!(
                "trial {i}: ({}, {}) coefficient failures {:?}, iteration violations {:?}, constant member {}",
                inst.ring.format_poly(&f),
                format_level(&a),
                fcl.failures,
                it.violations,
                it.constant_member
            )
        });
    }
    Ok(rep)
}

/// A `nu` strictly between `1` and `mu` when there is room, else between
/// `0` and `mu`.
pub fn intermediate_nu(mu: &MuValue) -> Option<Level> {
    let one = Level::from_integer(1);
    match mu {
        MuValue::InfinityUpToT => Some(Level::new(3, 2)),
        MuValue::Exact(q) | MuValue::AtLeastRational(q) => {
            if *q > one {
                Some((one + q) / Level::from_integer(2))
            } else if *q > Level::from_integer(0) {
                Some(*q / Level::from_integer(2))
            } else {
                None
            }
        }
    }
}

/// The decomposition check at every generator level for `nu = 0` and an
/// intermediate `nu`, and rejection of `nu = mu`.
pub fn suite_coeff<K: Field>(inst: &Instance<K>) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("coeff", inst);
    let Some(lgs) = with_lgs(inst, &mut rep) else {
        return Ok(rep);
    };
    let t = inst.truncation;
    let f = &inst.filtration;
    let mu = mu_tilde(f, lgs.point(), &lgs, t)?;
    let mut levels: Vec<Level> = f
        .effective_generators()
        .map(|g| g.level)
        .filter(|a| *a <= Level::from_integer(t as i64))
        .collect();
    levels.sort();
    levels.dedup();
    let mut nus = vec![Level::from_integer(0)];
    nus.extend(intermediate_nu(&mu));
    for a in &levels {
        for nu in &nus {
            let r = check_coefficient_lemma(f, *a, *nu, &lgs, t)?;
            rep.record(r.pass, || {
                format!(
                    "a = {}, nu = {}: {:?}",
                    format_level(a),
                    format_level(nu),
                    r.failures
                )
            });
        }
    }
    if let (MuValue::Exact(q), Some(a)) = (&mu, levels.first()) {
        let rejected = matches!(
            check_coefficient_lemma(f, *a, *q, &lgs, t),
            Err(Error::Precondition(_))
        );
        rep.record(rejected, || {
            format!("nu = mu = {} was not rejected", format_level(q))
        });
    }
    Ok(rep)
}

/// mu-tilde over several validated systems at the base point.
pub fn suite_independence<K: Field, R: Rng>(
    inst: &Instance<K>,
    rng: &mut R,
    candidates: usize,
) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("independence", inst);
    let Some(lgs) = with_lgs(inst, &mut rep) else {
        return Ok(rep);
    };
    let t = inst.truncation;
    let cands = lgs_candidates(&inst.filtration, &lgs, candidates.max(1), t, rng)?;
    if cands.len() < candidates {
        rep.notes.push(format!(
            "only {} of {candidates} candidates validated",
            cands.len()
        ));
    }
    let r = check_lgs_independence(&inst.filtration, lgs.point(), &cands, t)?;
    let values: Vec<String> = r.mu.iter().map(|m| m.to_string()).collect();
    rep.record(r.pass, || format!("mu over candidates: {values:?}"));
    Ok(rep)
}

/// Semicontinuity over declared groups and purification at max-sigma points.
pub fn suite_semicont<K: Field>(inst: &Instance<K>) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("semicont", inst);
    let r = stratify(
        &inst.filtration,
        &inst.points,
        &inst.groups,
        inst.horizon,
        inst.truncation,
    )?;
    rep.record(r.semicontinuity.pass, || {
        format!("semicontinuity witnesses: {:?}", r.semicontinuity.witnesses)
    });
    for row in &r.purification {
        rep.record(row.pass, || {
            format!(
                "purification at {}: {}",
                row.point,
                row.error.clone().unwrap_or_default()
            )
        });
    }
    if r.semicontinuity.inconclusive > 0 {
        rep.notes.push(format!(
            "{} comparisons left open by censoring",
            r.semicontinuity.inconclusive
        ));
    }
    Ok(rep)
}

pub fn suite_nsp<K: Field, R: Rng>(inst: &Instance<K>, rng: &mut R) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("nsp", inst);
    let r = check_nsp(
        &inst.filtration,
        &inst.base_point(),
        inst.horizon,
        inst.truncation,
        &inst.points,
        5,
        rng,
    )?;
    rep.notes.push(format!("verdict {:?}", r.verdict));
    rep.record(r.verdict != Verdict::Refuted, || {
        r.witness.clone().unwrap_or_default()
    });
    Ok(rep)
}

fn random_index<R: Rng>(d: usize, max: u32, rng: &mut R) -> Exponents {
    let n = rng.gen_range(0..=max);
    let monos = monomials_of_degree(d, n);
    monos[rng.gen_range(0..monos.len())].clone()
}

/// `D_I D_J = C(I + J, I) D_(I+J)` and the generalized product rule.
pub fn suite_hasse<K: Field, R: Rng>(
    ring: &RingContext<K>,
    rng: &mut R,
    trials: usize,
) -> Result<SuiteReport> {
    let field = ring.field();
    let d = ring.dim();
    let mut rep = SuiteReport {
        suite: "hasse".into(),
        pass: true,
        ..Default::default()
    };
    for i in 0..trials {
        let t1 = rng.gen_range(1..=5);
        let f = random_poly(ring, rng, 0, 6, t1);
        let t2 = rng.gen_range(1..=5);
        let g = random_poly(ring, rng, 0, 6, t2);
        let a = random_index(d, 4, rng);
        let b = random_index(d, 4, rng);

        let lhs = ring.hasse(&ring.hasse(&f, &b)?, &a)?;
        let coef = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .fold(field.one(), |acc, (&x, &y)| {
                field.mul(&acc, &field.binomial((x + y) as u64, x as u64))
            });
        let rhs = ring.scale(&ring.hasse(&f, &a.add(&b))?, &coef);
        rep.record(lhs == rhs, || {
            format!("trial {i}: composition fails for I = {a:?}, J = {b:?}")
        });

        let lhs = ring.hasse(&ring.mul(&f, &g), &a)?;
        let mut rhs = ring.zero();
        for n in 0..=a.degree() {
            for j in monomials_of_degree(d, n) {
                if let Some(rest) = a.checked_sub(&j) {
                    let term = ring.mul(&ring.hasse(&f, &j)?, &ring.hasse(&g, &rest)?);
                    ring.add_assign(&mut rhs, &term);
                }
            }
        }
        rep.record(lhs == rhs, || {
            format!("trial {i}: product rule fails for I = {a:?}")
        });
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Fcl,
    Coeff,
    Uniq,
    Independence,
    Semicont,
    Nsp,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fcl" => Suite::Fcl,
            "coeff" => Suite::Coeff,
            "uniq" => Suite::Uniq,
            "independence" => Suite::Independence,
            "semicont" => Suite::Semicont,
            "nsp" => Suite::Nsp,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite `{other}`"))),
        })
    }
}

/// Runs one suite, or all of them (including the order oracle and the Hasse
/// laws) for [`Suite::All`].
pub fn run_suite<K: Field, R: Rng>(
    inst: &Instance<K>,
    suite: Suite,
    rng: &mut R,
    trials: usize,
) -> Result<Vec<SuiteReport>> {
    Ok(match suite {
        Suite::Fcl => vec![suite_fcl(inst, rng, trials)?],
        Suite::Coeff => vec![suite_coeff(inst)?],
        Suite::Uniq => vec![suite_uniq(inst, rng, trials)?],
        Suite::Independence => vec![suite_independence(inst, rng, 3)?],
        Suite::Semicont => vec![suite_semicont(inst)?],
        Suite::Nsp => vec![suite_nsp(inst, rng)?],
        Suite::All => vec![
            suite_uniq(inst, rng, trials)?,
            suite_ordh(inst, rng, trials)?,
            suite_fcl(inst, rng, trials)?,
            suite_coeff(inst)?,
            suite_independence(inst, rng, 3)?,
            suite_semicont(inst)?,
            suite_nsp(inst, rng)?,
            suite_hasse(&inst.ring, rng, trials)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{load_str, AnyInstance};
    use crate::random::rng_from_seed;

    fn worked() -> Instance<crate::GaloisField> {
        let text = r#"{"char": 2, "vars": ["x","y"],
            "generators": [{"poly": "x^2+y^3", "level": "2"}], "truncation": 10,
            "points": ["0,0", "1,0", "0,1"],
            "groups": [{"limit": "0,0", "members": ["1,0", "0,1"]}]}"#;
        match load_str(text).unwrap() {
            AnyInstance::Finite(i) => i,
            AnyInstance::Rational(_) => unreachable!(),
        }
    }

    #[test]
    fn all_suites_pass_on_the_worked_instance() {
        let inst = worked();
        let mut rng = rng_from_seed(3);
        for rep in run_suite(&inst, Suite::All, &mut rng, 10).unwrap() {
            assert!(rep.pass, "{rep:?}");
            assert!(rep.passed > 0, "{rep:?}");
        }
    }

    #[test]
    fn trivial_filtration_is_vacuous() {
        let text = r#"{"char": 3, "vars": ["x","y"], "generators": [], "truncation": 6}"#;
        let AnyInstance::Finite(inst) = load_str(text).unwrap() else {
            unreachable!()
        };
        let mut rng = rng_from_seed(1);
        for rep in run_suite(&inst, Suite::All, &mut rng, 5).unwrap() {
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn intermediate_nu_is_strictly_inside() {
        let nu = intermediate_nu(&MuValue::Exact(Level::from_integer(2))).unwrap();
        assert_eq!(nu, Level::new(3, 2));
        assert_eq!(
            intermediate_nu(&MuValue::Exact(Level::from_integer(0))),
            None
        );
        assert_eq!(
            intermediate_nu(&MuValue::Exact(Level::new(1, 2))),
            Some(Level::new(1, 4))
        );
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("uniq".parse::<Suite>().unwrap(), Suite::Uniq);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
