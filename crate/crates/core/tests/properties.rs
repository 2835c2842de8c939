use proptest::prelude::*;

use idealistic_core::expansion::{Expander, IdealOrder};
use idealistic_core::instance::{load_str, AnyInstance};
use idealistic_core::leading::extract_lgs;
use idealistic_core::random::{
    random_instance, random_point, random_poly, rng_from_seed, RandomParams,
};
use idealistic_core::verify::random_test_poly;
use idealistic_core::{Exponents, Field, GaloisField, Poly, RingContext};

fn ring(p: u64, m: u32, d: usize) -> RingContext<GaloisField> {
    RingContext::with_dimension(GaloisField::new(p, m, None).unwrap(), d).unwrap()
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5, 7])
}

fn index(d: usize) -> impl Strategy<Value = Exponents> {
    prop::collection::vec(0u32..4, d).prop_map(Exponents::new)
}

fn sub_indices(i: &Exponents) -> Vec<Exponents> {
    let mut out = vec![Vec::new()];
    for &k in i.as_slice() {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u32>| {
                (0..=k).map(move |j| {
                    let mut v = prefix.clone();
                    v.push(j);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(Exponents::new).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hasse_composition(p in prime(), seed in any::<u64>(), i in index(2), j in index(2)) {
        let r = ring(p, 1, 2);
        let f = random_poly(&r, &mut rng_from_seed(seed), 0, 8, 5);
        let lhs = r.hasse(&r.hasse(&f, &j).unwrap(), &i).unwrap();
        let sum = i.add(&j);
        let field = r.field();
        let mut c = field.one();
        for l in 0..2 {
            c = field.mul(&c, &field.binomial(sum.get(l) as u64, i.get(l) as u64));
        }
        let rhs = r.scale(&r.hasse(&f, &sum).unwrap(), &c);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn hasse_product_rule(p in prime(), seed in any::<u64>(), i in index(2)) {
        let r = ring(p, 1, 2);
        let mut rng = rng_from_seed(seed);
        let f = random_poly(&r, &mut rng, 0, 5, 4);
        let g = random_poly(&r, &mut rng, 0, 5, 4);
        let lhs = r.hasse(&r.mul(&f, &g), &i).unwrap();
        let mut rhs: Poly<GaloisField> = r.zero();
        for j in sub_indices(&i) {
            let k = i.checked_sub(&j).unwrap();
            r.add_assign(&mut rhs, &r.mul(&r.hasse(&f, &j).unwrap(), &r.hasse(&g, &k).unwrap()));
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn translation_round_trip(p in prime(), m in 1u32..3, seed in any::<u64>()) {
        let r = ring(p, m, 3);
        let mut rng = rng_from_seed(seed);
        let f = random_poly(&r, &mut rng, 0, 6, 6);
        let pt = random_point(&r, &mut rng);
        let moved = r.translate(&f, &pt).unwrap();
        prop_assert_eq!(r.translate(&moved, &r.negate_point(&pt)).unwrap(), f);
    }

    #[test]
    fn expansion_round_trip_and_order_agreement(inst_seed in 0u64..40, poly_seed in any::<u64>(), p in prime()) {
        let file = random_instance(&RandomParams {
            p,
            d: 2,
            n_gens: 2,
            max_deg: 4,
            max_level: 3,
            truncation: 10,
            seed: inst_seed,
            ..Default::default()
        }).unwrap();
        let AnyInstance::Finite(inst) = file.load().unwrap() else { unreachable!() };
        let lgs = extract_lgs(&inst.filtration.localize(&inst.base_point()).unwrap(), inst.horizon, 10).unwrap();
        let expander = Expander::new(&lgs, 10).unwrap();
        let f = random_test_poly(&inst.ring, &lgs, &mut rng_from_seed(poly_seed), 10);
        let r = expander.expand(&f).unwrap();
        prop_assert!(r.window_ok());
        prop_assert_eq!(expander.reassemble(&r), lgs.global_to_coords(&f, Some(10)).unwrap());
        prop_assert_eq!(expander.ord_h(&f).unwrap(), IdealOrder::new(&lgs, 10).ord(&f).unwrap());
    }

    #[test]
    fn worked_instance_orders_agree(seed in any::<u64>()) {
        let text = r#"{"char": 2, "vars": ["x","y"],
            "generators": [{"poly": "x^2+y^3", "level": "2"}], "truncation": 12, "horizon": 2}"#;
        let AnyInstance::Finite(inst) = load_str(text).unwrap() else { unreachable!() };
        let lgs = extract_lgs(&inst.filtration.localize(&[0, 0]).unwrap(), 2, 12).unwrap();
        let f = random_poly(&inst.ring, &mut rng_from_seed(seed), 0, 12, 4);
        let a = Expander::new(&lgs, 12).unwrap().ord_h(&f).unwrap();
        prop_assert_eq!(a, IdealOrder::new(&lgs, 12).ord(&f).unwrap());
    }
}
