//! Seeded random polynomials, filtration members and instance files.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{Field, GaloisField};
use crate::filtration::{format_level, level_ceil, Generator, IdealisticFiltration};
use crate::instance::{GeneratorSpec, GroupSpec, InstanceFile};
use crate::jetring::{monomials_of_degree, Point, Poly, RingContext};
use crate::Level;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn default_var_names(d: usize) -> Vec<String> {
    if d <= 3 {
        ["x", "y", "z"][..d].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=d).map(|i| format!("x{i}")).collect()
    }
}

fn nonzero<K: Field, R: Rng>(field: &K, rng: &mut R) -> K::Elem {
    loop {
        let c = field.random(rng);
        if !field.is_zero(&c) {
            return c;
        }
    }
}

/// Up to `terms` monomials of degrees in `min_deg..=max_deg` with nonzero
/// random coefficients; may cancel to zero only if `terms` is zero.
pub fn random_poly<K: Field, R: Rng>(
    ring: &RingContext<K>,
    rng: &mut R,
    min_deg: u32,
    max_deg: u32,
    terms: usize,
) -> Poly<K> {
    let field = ring.field();
    let max_deg = max_deg.max(min_deg);
    let mut f = ring.zero();
    for _ in 0..terms {
        let n = rng.gen_range(min_deg..=max_deg);
        let monos = monomials_of_degree(ring.dim(), n);
        let m = monos.choose(rng).expect("nonempty").clone();
        let c = nonzero(field, rng);
        ring.add_assign(&mut f, &ring.monomial(m, c));
    }
    f
}

pub fn random_point<K: Field, R: Rng>(ring: &RingContext<K>, rng: &mut R) -> Point<K> {
    (0..ring.dim()).map(|_| ring.field().random(rng)).collect()
}

/// A member `(f, a)` built from one or two bounded products of effective
/// generators with small random multipliers; `a` is the least total level.
pub fn random_member<K: Field, R: Rng>(
    filtration: &IdealisticFiltration<K>,
    rng: &mut R,
    max_factors: usize,
    max_multiplier_deg: u32,
) -> Option<(Poly<K>, Level)> {
    let ring = filtration.ring();
    let gens: Vec<&Generator<K>> = filtration.effective_generators().collect();
    if gens.is_empty() {
        return None;
    }
    let mut f = ring.zero();
    let mut level: Option<Level> = None;
    for _ in 0..rng.gen_range(1..=2) {
        let k = rng.gen_range(1..=max_factors.max(1));
        let mut term = ring.one();
        let mut a = Level::from_integer(0);
        for _ in 0..k {
            let g = gens.choose(rng).expect("nonempty");
            term = ring.mul(&term, &g.poly);
            a += g.level;
        }
        let terms = rng.gen_range(1..=2);
        let mut mult = random_poly(ring, rng, 0, max_multiplier_deg, terms);
        if mult.is_zero() {
            mult = ring.one();
        }
        ring.add_assign(&mut f, &ring.mul(&term, &mult));
        level = Some(level.map_or(a, |b| b.min(a)));
    }
    if f.is_zero() {
        return None;
    }
    Some((f, level.expect("at least one term")))
}

#[derive(Clone, Debug)]
pub struct RandomParams {
    pub p: u64,
    pub ext_degree: u32,
    pub d: usize,
    pub n_gens: usize,
    pub max_deg: u32,
    pub max_level: u32,
    pub truncation: usize,
    pub seed: u64,
    /// Homogeneous generators, so the origin dominates every other point.
    pub homogeneous: bool,
    /// Allow levels with denominator 2.
    pub fractional: bool,
    /// Extra random points, each also placed in a group around the origin.
    pub points: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            p: 2,
            ext_degree: 1,
            d: 2,
            n_gens: 1,
            max_deg: 3,
            max_level: 2,
            truncation: 8,
            seed: 0,
            homogeneous: false,
            fractional: false,
            points: 0,
        }
    }
}

/// A reproducible instance whose generators vanish at the origin to order at
/// least their level; always emitted D-saturated.
pub fn random_instance(params: &RandomParams) -> Result<InstanceFile> {
    let field = GaloisField::new(params.p, params.ext_degree, None)?;
    let vars = default_var_names(params.d);
    let ring = RingContext::new(field, &vars)?;
    let mut rng = rng_from_seed(params.seed);
    let mut gens = Vec::new();
    if params.max_level > 0 {
        for _ in 0..params.n_gens {
            let level = if params.fractional && rng.gen_bool(0.5) {
                Level::new(rng.gen_range(1..=2 * params.max_level as i64), 2)
            } else {
                Level::from_integer(rng.gen_range(1..=params.max_level as i64))
            };
            let low = level_ceil(&level) as u32;
            let high = params.max_deg.max(low);
            let (lo, hi) = if params.homogeneous {
                let n = rng.gen_range(low..=high);
                (n, n)
            } else {
                (low, high)
            };
            let mut f = ring.zero();
            while f.is_zero() {
                let terms = rng.gen_range(1..=3);
                f = random_poly(&ring, &mut rng, lo, hi, terms);
            }
            gens.push(Generator::new(f, level));
        }
    }
    let sat = IdealisticFiltration::generate(gens, ring.clone())?.d_saturate();
    let origin = ring.format_point(&ring.origin());
    let extra: Vec<String> = (0..params.points)
        .map(|_| ring.format_point(&random_point(&ring, &mut rng)))
        .collect();
    let mut points = vec![origin.clone()];
    points.extend(extra.iter().cloned());
    let groups = if extra.is_empty() {
        Vec::new()
    } else {
        vec![GroupSpec {
            limit: origin,
            members: extra,
        }]
    };
    Ok(InstanceFile {
        characteristic: params.p,
        ext_degree: params.ext_degree,
        vars,
        generators: sat
            .generators()
            .iter()
            .map(|g| GeneratorSpec {
                poly: ring.format_poly(&g.poly),
                level: format_level(&g.level),
            })
            .collect(),
        truncation: params.truncation,
        horizon: None,
        points,
        groups,
        seed: Some(params.seed),
        modulus: None,
        d_saturated: true,
        max_denominator: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::AnyInstance;

    #[test]
    fn instances_are_reproducible() {
        let params = RandomParams {
            seed: 42,
            points: 3,
            ..Default::default()
        };
        let a = random_instance(&params).unwrap().to_json();
        let b = random_instance(&params).unwrap().to_json();
        assert_eq!(a, b);
        let other = random_instance(&RandomParams { seed: 43, ..params })
            .unwrap()
            .to_json();
        assert_ne!(a, other);
    }

    #[test]
    fn zero_max_level_gives_the_trivial_filtration() {
        let file = random_instance(&RandomParams {
            max_level: 0,
            ..Default::default()
        })
        .unwrap();
        assert!(file.generators.is_empty());
    }

    #[test]
    fn emitted_lists_are_closed_under_saturation() {
        for seed in 0..10 {
            let file = random_instance(&RandomParams {
                seed,
                d: 3,
                n_gens: 2,
                max_level: 3,
                fractional: true,
                ..Default::default()
            })
            .unwrap();
            let AnyInstance::Finite(inst) = file.clone().load().unwrap() else {
                panic!("finite field expected");
            };
            let again = inst.filtration.d_saturate();
            assert_eq!(again.generators().len(), inst.filtration.generators().len());
            assert!(inst.filtration.in_support(&inst.ring.origin()).unwrap());
        }
    }

    #[test]
    fn members_are_members() {
        let file = random_instance(&RandomParams {
            seed: 5,
            n_gens: 2,
            ..Default::default()
        })
        .unwrap();
        let AnyInstance::Finite(inst) = file.load().unwrap() else {
            panic!("finite field expected");
        };
        let mut rng = rng_from_seed(9);
        for _ in 0..10 {
            let (f, a) = random_member(&inst.filtration, &mut rng, 2, 1).unwrap();
            assert!(inst
                .filtration
                .membership(&f, a, &inst.ring.origin(), 8)
                .unwrap());
        }
    }
}
